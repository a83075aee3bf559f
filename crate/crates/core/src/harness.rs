//! Experiment harness: configuration, convergence detection, the
//! reproduction suite, and plot-ready reporting.

use crate::error::{Error, Result};
use crate::network::{ExecConfig, Executor, Netlist, SignalModel};
use crate::optics::{NoiseSpec, QuantizationSpec};
use crate::rng;
use crate::subnet::TrainConfig;
use crate::zoo::{
    self, build_boolean, build_plantran, build_sigma_and, build_umult, BooleanFunction,
    PlanTranTask,
};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

/// When has learning occurred: the first step where the squared error stays
/// below `threshold` for `window` consecutive presentations. Any reasonable
/// rule gives similar answers; this one is fixed and echoed in every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRule {
    pub threshold: f64,
    pub window: usize,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        ConvergenceRule {
            threshold: 0.02,
            window: 3,
        }
    }
}

/// First index i such that series[i .. i+window] all sit below the
/// threshold; None when no such window exists.
pub fn detect_convergence(series: &[f64], rule: &ConvergenceRule) -> Option<usize> {
    if rule.window == 0 || series.len() < rule.window {
        return None;
    }
    let mut run = 0usize;
    for (i, &v) in series.iter().enumerate() {
        if v < rule.threshold {
            run += 1;
            if run == rule.window {
                return Some(i + 1 - rule.window);
            }
        } else {
            run = 0;
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkKind {
    Umult,
    Plantran,
    Boolean,
    SigmaAnd,
}

impl NetworkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            NetworkKind::Umult => "umult",
            NetworkKind::Plantran => "plantran",
            NetworkKind::Boolean => "boolean",
            NetworkKind::SigmaAnd => "sigma-and",
        }
    }
}

/// Which task a learning run trains on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskSelector {
    /// Draw the task from the run seed.
    #[default]
    Random,
    /// A named Boolean function: "always-true", "and", "or", or a raw truth
    /// table like "tt0111".
    Function(String),
}

fn parse_function(name: &str) -> Result<BooleanFunction> {
    let table = match name {
        "always-true" => [true; 4],
        "always-false" => [false; 4],
        "and" => [false, false, false, true],
        "or" => [false, true, true, true],
        "nand" => [true, true, true, false],
        "nor" => [true, false, false, false],
        "xor" => [false, true, true, false],
        other => {
            let bits = other
                .strip_prefix("tt")
                .filter(|b| b.len() == 4 && b.chars().all(|c| c == '0' || c == '1'))
                .ok_or_else(|| Error::invalid(format!("unknown function '{other}'")))?;
            let mut t = [false; 4];
            for (i, c) in bits.chars().enumerate() {
                t[i] = c == '1';
            }
            t
        }
    };
    Ok(BooleanFunction::from_table(table))
}

/// One experiment, fully specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub network: NetworkKind,
    /// Pulse-train length; 1 means intensity-like precision for SP paths.
    pub np: usize,
    pub task: TaskSelector,
    pub seed: u64,
    pub quantization_bits: u8,
    /// Also write the quantization grid into the attenuation masks.
    pub quantize_mask: bool,
    pub noise_sigma: f64,
    pub rule: ConvergenceRule,
    pub max_steps: usize,
    pub eta: f64,
    /// Seed of the fragment-training stage; fixed by default so every run
    /// reuses the same built network.
    pub train_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            network: NetworkKind::Plantran,
            np: 256,
            task: TaskSelector::Random,
            seed: 1,
            quantization_bits: 0,
            quantize_mask: false,
            noise_sigma: 0.0,
            rule: ConvergenceRule::default(),
            max_steps: 150,
            eta: zoo::PLANTRAN_ETA,
            train_seed: TrainConfig::default().seed,
        }
    }
}

impl ExperimentConfig {
    /// Default experiment for one network: per-network learning rate,
    /// convergence window, and run length. The Boolean learner detects
    /// convergence over a longer window because its per-presentation error
    /// alternates across corners.
    pub fn for_network(network: NetworkKind) -> Self {
        let base = ExperimentConfig::default();
        match network {
            NetworkKind::Plantran => ExperimentConfig {
                network,
                np: 256,
                max_steps: 150,
                eta: zoo::PLANTRAN_ETA,
                ..base
            },
            NetworkKind::Boolean => ExperimentConfig {
                network,
                np: 256,
                max_steps: 400,
                eta: zoo::BOOLEAN_ETA,
                rule: ConvergenceRule {
                    threshold: 0.02,
                    window: 8,
                },
                ..base
            },
            NetworkKind::Umult => ExperimentConfig {
                network,
                np: 128,
                max_steps: 1000,
                ..base
            },
            NetworkKind::SigmaAnd => ExperimentConfig {
                network,
                np: 256,
                max_steps: 1000,
                ..base
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.np == 0 {
            return Err(Error::invalid("np must be at least 1"));
        }
        if !(self.rule.threshold > 0.0) || self.rule.window == 0 {
            return Err(Error::invalid("convergence rule must be positive"));
        }
        if self.max_steps == 0 || !(self.eta > 0.0) {
            return Err(Error::invalid("max_steps and eta must be positive"));
        }
        QuantizationSpec::new(self.quantization_bits)?;
        NoiseSpec::new(self.noise_sigma, 0)?;
        Ok(())
    }

    fn exec_config(&self) -> Result<ExecConfig> {
        Ok(ExecConfig {
            np: self.np,
            seed: self.seed ^ 0x0bad_c0de,
            quantization: QuantizationSpec::new(self.quantization_bits)?,
            noise: NoiseSpec::new(self.noise_sigma, self.seed ^ 0x07e1_e5c0)?,
            model: SignalModel::Hardware,
            quantize_mask: self.quantize_mask,
        })
    }
}

/// Outcome of one run: the per-step error trace and what the rule made of
/// it. Wall time is informational and never serialized, so reports stay
/// byte-identical across repeat runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// Human-readable task identity ("w=+2.41" or "tt0111").
    pub task_name: String,
    pub mse_series: Vec<f64>,
    pub nc: Option<usize>,
    pub post_mse: Option<f64>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Build (or fetch from the in-process cache) the network a config asks for.
/// Trained builds are deterministic in (train_seed, eta), so the cache is
/// pure memoization.
pub fn build_network(cfg: &ExperimentConfig) -> Result<Netlist> {
    type BuildCache = Mutex<HashMap<(NetworkKind, u64, u64), Netlist>>;
    static CACHE: OnceLock<BuildCache> = OnceLock::new();
    let key = (cfg.network, cfg.train_seed, cfg.eta.to_bits());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(net) = cache.lock().unwrap().get(&key) {
        return Ok(net.clone());
    }
    let train = TrainConfig {
        seed: cfg.train_seed,
        ..TrainConfig::default()
    };
    let net = match cfg.network {
        NetworkKind::SigmaAnd => build_sigma_and(),
        NetworkKind::Umult => build_umult(&train)?,
        NetworkKind::Plantran => build_plantran(&train, cfg.eta)?,
        NetworkKind::Boolean => build_boolean(cfg.eta)?,
    };
    cache.lock().unwrap().insert(key, net.clone());
    Ok(net)
}

const LANE_UV: u64 = 0x75765f73;

/// Run one experiment: build or fetch the network, stream task data, record
/// per-step MSE against the current step's target, and apply the
/// convergence rule.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.check()?;
    let start = Instant::now();
    let net = build_network(cfg)?;
    let mut exec = Executor::new(&net, cfg.exec_config()?)?;

    let mut series = Vec::with_capacity(cfg.max_steps);
    let task_name;
    match cfg.network {
        NetworkKind::Umult | NetworkKind::SigmaAnd => {
            // Feed-forward mapping accuracy: stream random pairs, score the
            // product.
            task_name = "product".to_string();
            for t in 0..cfg.max_steps as u64 {
                let u = rng::uniform(cfg.seed, LANE_UV, 2 * t);
                let v = rng::uniform(cfg.seed, LANE_UV, 2 * t + 1);
                let out = exec.step(&[u, v])?[0];
                let err = out - u * v;
                series.push(err * err);
            }
        }
        NetworkKind::Plantran => {
            let task = match &cfg.task {
                TaskSelector::Random => PlanTranTask::random(cfg.seed),
                TaskSelector::Function(name) => {
                    return Err(Error::invalid(format!(
                        "plantran takes random tasks, not function '{name}'"
                    )))
                }
            };
            task_name = format!("w={:+.3}", task.w);
            for t in 0..cfg.max_steps as u64 {
                let pair = task.pair(t);
                let out = exec.step(&[pair.x[0], pair.y])?[0];
                let err = out - pair.y;
                series.push(err * err);
            }
        }
        NetworkKind::Boolean => {
            let f = match &cfg.task {
                TaskSelector::Random => {
                    let fns = zoo::enumerate_separable();
                    fns[(rng::key3(cfg.seed, 0xb001, 0) % fns.len() as u64) as usize]
                }
                TaskSelector::Function(name) => {
                    let f = parse_function(name)?;
                    if !f.separable {
                        return Err(Error::invalid(format!(
                            "function '{name}' is not linearly separable"
                        )));
                    }
                    f
                }
            };
            task_name = f.name();
            for t in 0..cfg.max_steps as u64 {
                let pair = f.pair(cfg.seed, t);
                let out = exec.step(&[pair.x[0], pair.x[1], pair.y])?[0];
                let err = out - pair.y;
                series.push(err * err);
            }
        }
    }

    let learning = matches!(cfg.network, NetworkKind::Plantran | NetworkKind::Boolean);
    let nc = if learning {
        detect_convergence(&series, &cfg.rule)
    } else {
        None
    };
    let post_mse = if learning {
        nc.map(|i| mean(&series[i..]))
    } else {
        Some(mean(&series))
    };

    Ok(RunRecord {
        config: cfg.clone(),
        task_name,
        mse_series: series,
        nc,
        post_mse,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Run `trials` independent tasks of the same configuration, with per-trial
/// seeds derived from the base seed.
pub fn run_trials(cfg: &ExperimentConfig, trials: usize) -> Result<Vec<RunRecord>> {
    (0..trials)
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = rng::key3(cfg.seed, 0x7269616c, i as u64);
            run_experiment(&c)
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median of a sample; the midpoint convention for even sizes.
pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.is_empty() {
        return f64::NAN;
    }
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

// ---------------------------------------------------------------------------
// The reproduction suite
// ---------------------------------------------------------------------------

/// One summary row of the performance table: a network at one pulse length,
/// aggregated over its trials.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteRow {
    pub label: String,
    pub network: &'static str,
    pub np: usize,
    pub trials: usize,
    pub nc_median: Option<f64>,
    pub post_mse_median: Option<f64>,
    pub converged: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteReport {
    pub rows: Vec<SuiteRow>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
}

fn aggregate(label: &str, records: &[RunRecord]) -> SuiteRow {
    let ncs: Vec<f64> = records
        .iter()
        .filter_map(|r| r.nc.map(|n| n as f64))
        .collect();
    let posts: Vec<f64> = records.iter().filter_map(|r| r.post_mse).collect();
    SuiteRow {
        label: label.to_string(),
        network: records[0].config.network.as_str(),
        np: records[0].config.np,
        trials: records.len(),
        nc_median: (!ncs.is_empty()).then(|| median(&ncs)),
        post_mse_median: (!posts.is_empty()).then(|| median(&posts)),
        converged: records.iter().filter(|r| r.nc.is_some()).count(),
    }
}

/// Reproduce the performance table: the multiplier at np=128, the plant
/// learner at np=256 over 20 random tasks, and the Boolean learner at
/// np=256 (the always-true showcase plus all 14 separable functions) and at
/// np=1024.
pub fn run_suite(seed: u64) -> Result<SuiteReport> {
    struct RowSpec {
        label: &'static str,
        cfg: ExperimentConfig,
        trials: usize,
        per_function: bool,
    }
    let rows = vec![
        RowSpec {
            label: "umult np=128",
            cfg: ExperimentConfig {
                seed,
                ..ExperimentConfig::for_network(NetworkKind::Umult)
            },
            trials: 1,
            per_function: false,
        },
        RowSpec {
            label: "plantran np=256",
            cfg: ExperimentConfig {
                seed,
                ..ExperimentConfig::for_network(NetworkKind::Plantran)
            },
            trials: 20,
            per_function: false,
        },
        RowSpec {
            label: "boolean np=256 always-true",
            cfg: ExperimentConfig {
                seed,
                task: TaskSelector::Function("always-true".into()),
                ..ExperimentConfig::for_network(NetworkKind::Boolean)
            },
            trials: 1,
            per_function: false,
        },
        RowSpec {
            label: "boolean np=256 all-separable",
            cfg: ExperimentConfig {
                seed,
                ..ExperimentConfig::for_network(NetworkKind::Boolean)
            },
            trials: 0,
            per_function: true,
        },
        RowSpec {
            label: "boolean np=1024 all-separable",
            cfg: ExperimentConfig {
                seed,
                np: 1024,
                ..ExperimentConfig::for_network(NetworkKind::Boolean)
            },
            trials: 0,
            per_function: true,
        },
    ];

    // Trained builds are shared through the cache; warm it before fanning
    // out so threads do not race to train the same fragments.
    for row in &rows {
        build_network(&row.cfg)?;
    }

    let results: Vec<Result<Vec<RunRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = rows
            .iter()
            .map(|row| {
                scope.spawn(move || -> Result<Vec<RunRecord>> {
                    if row.per_function {
                        zoo::enumerate_separable()
                            .iter()
                            .map(|f| {
                                let mut c = row.cfg.clone();
                                c.task = TaskSelector::Function(f.name());
                                run_experiment(&c)
                            })
                            .collect()
                    } else {
                        run_trials(&row.cfg, row.trials.max(1))
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut report = SuiteReport::default();
    for (row, result) in rows.iter().zip(results) {
        let records = result?;
        report.rows.push(aggregate(row.label, &records));
        report.records.extend(records);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map_or("n/a".to_string(), |x| x.to_string())
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |x| format!("{x:.6}"))
}

/// Write a summary table plus one MSE-vs-step series file per record.
/// Identical records produce byte-identical files.
pub fn emit_report(
    records: &[RunRecord],
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::invalid("no records to report"));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    match format {
        ReportFormat::Csv => {
            let path = out_dir.join("summary.csv");
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "network,np,nc,post_mse,seed,eta,threshold,window,task")?;
            for r in records {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{},{}",
                    r.config.network.as_str(),
                    r.config.np,
                    fmt_opt_usize(r.nc),
                    fmt_opt_f64(r.post_mse),
                    r.config.seed,
                    r.config.eta,
                    r.config.rule.threshold,
                    r.config.rule.window,
                    r.task_name,
                )?;
            }
            written.push(path);
        }
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                network: &'a str,
                np: usize,
                task: &'a str,
                nc: Option<usize>,
                post_mse: Option<f64>,
                seed: u64,
                eta: f64,
                threshold: f64,
                window: usize,
            }
            let rows: Vec<Row> = records
                .iter()
                .map(|r| Row {
                    network: r.config.network.as_str(),
                    np: r.config.np,
                    task: &r.task_name,
                    nc: r.nc,
                    post_mse: r.post_mse,
                    seed: r.config.seed,
                    eta: r.config.eta,
                    threshold: r.config.rule.threshold,
                    window: r.config.rule.window,
                })
                .collect();
            let path = out_dir.join("summary.json");
            std::fs::write(&path, serde_json::to_string_pretty(&rows)?)?;
            written.push(path);
        }
    }

    for (i, r) in records.iter().enumerate() {
        let path = out_dir.join(format!("series-{i:03}.csv"));
        let mut f = std::fs::File::create(&path)?;
        writeln!(f, "step,mse")?;
        for (step, mse) in r.mse_series.iter().enumerate() {
            writeln!(f, "{step},{mse}")?;
        }
        written.push(path);
    }
    Ok(written)
}

/// Write the aggregate suite table (the shape of the performance table).
pub fn emit_suite_table(report: &SuiteReport, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("performance.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "label,network,np,trials,converged,nc_median,post_mse_median")?;
    for row in &report.rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            row.label,
            row.network,
            row.np,
            row.trials,
            row.converged,
            fmt_opt_f64(row.nc_median),
            fmt_opt_f64(row.post_mse_median),
        )?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_rule_examples() {
        let rule = ConvergenceRule::default();
        assert_eq!(detect_convergence(&[0.0; 10], &rule), Some(0));
        // Crosses below 0.02 at index 21 and stays.
        let mut series = vec![0.5; 21];
        series.extend(vec![0.01; 10]);
        assert_eq!(detect_convergence(&series, &rule), Some(21));
        assert_eq!(detect_convergence(&[0.5; 40], &rule), None);
        // Dip shorter than the window does not count.
        let blip = [0.5, 0.01, 0.01, 0.5, 0.5, 0.01, 0.01, 0.01, 0.5];
        assert_eq!(detect_convergence(&blip, &rule), Some(5));
    }

    #[test]
    fn rule_monotonicity_in_threshold() {
        let series: Vec<f64> = (0..60).map(|i| 0.5 / (1.0 + i as f64 * 0.2)).collect();
        let mut prev: Option<usize> = None;
        for k in 1..=10 {
            let rule = ConvergenceRule {
                threshold: 0.01 * k as f64,
                window: 3,
            };
            let nc = detect_convergence(&series, &rule);
            if let (Some(p), Some(n)) = (prev, nc) {
                assert!(n <= p, "loosening threshold raised nc: {p} -> {n}");
            }
            if nc.is_some() {
                prev = nc;
            }
        }
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn sigma_and_experiment_runs() {
        let cfg = ExperimentConfig {
            network: NetworkKind::SigmaAnd,
            np: 256,
            max_steps: 50,
            ..ExperimentConfig::default()
        };
        let rec = run_experiment(&cfg).unwrap();
        assert_eq!(rec.mse_series.len(), 50);
        assert_eq!(rec.nc, None);
        assert!(rec.post_mse.unwrap() < 0.01);
    }

    #[test]
    fn reports_are_byte_identical(){
        let cfg = ExperimentConfig {
            network: NetworkKind::SigmaAnd,
            np: 128,
            max_steps: 10,
            ..ExperimentConfig::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.mse_series, b.mse_series);

        let dir_a = std::env::temp_dir().join("ofwl-report-a");
        let dir_b = std::env::temp_dir().join("ofwl-report-b");
        emit_report(&[a], ReportFormat::Csv, &dir_a).unwrap();
        emit_report(&[b], ReportFormat::Csv, &dir_b).unwrap();
        let ba = std::fs::read(dir_a.join("summary.csv")).unwrap();
        let bb = std::fs::read(dir_b.join("summary.csv")).unwrap();
        assert_eq!(ba, bb);
        let sa = std::fs::read(dir_a.join("series-000.csv")).unwrap();
        let sb = std::fs::read(dir_b.join("series-000.csv")).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn csv_and_json_carry_identical_numbers() {
        let cfg = ExperimentConfig {
            network: NetworkKind::SigmaAnd,
            np: 128,
            max_steps: 5,
            ..ExperimentConfig::default()
        };
        let rec = run_experiment(&cfg).unwrap();
        let dir = std::env::temp_dir().join("ofwl-report-parity");
        emit_report(std::slice::from_ref(&rec), ReportFormat::Csv, &dir).unwrap();
        emit_report(std::slice::from_ref(&rec), ReportFormat::Json, &dir).unwrap();
        let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap())
                .unwrap();
        let row = &json[0];
        let line = csv.lines().nth(1).unwrap();
        assert!(line.contains(&format!("{:.6}", row["post_mse"].as_f64().unwrap())));
        assert!(line.starts_with("sigma-and,128"));
    }

    #[test]
    fn series_sanity_converging_run_decays() {
        // The learning curve of a converging run trends down: the mean MSE
        // over the last quartile of steps sits below the first quartile.
        let cfg = ExperimentConfig {
            seed: 0xdeca,
            ..ExperimentConfig::for_network(NetworkKind::Plantran)
        };
        let rec = run_experiment(&cfg).unwrap();
        assert!(rec.nc.is_some());
        let n = rec.mse_series.len();
        let q = n / 4;
        let first: f64 = rec.mse_series[..q].iter().sum::<f64>() / q as f64;
        let last: f64 = rec.mse_series[n - q..].iter().sum::<f64>() / q as f64;
        assert!(
            last < first,
            "no decay: first quartile {first}, last quartile {last}"
        );
    }

    #[test]
    fn boolean_np1024_lands_in_the_reported_band() {
        let cfg = ExperimentConfig {
            np: 1024,
            seed: 3,
            ..ExperimentConfig::for_network(NetworkKind::Boolean)
        };
        let rec = run_experiment(&cfg).unwrap();
        let nc = rec.nc.expect("converges");
        assert!((25..=225).contains(&nc), "nc {nc}");
        assert!(rec.post_mse.unwrap() <= 0.04, "post {:?}", rec.post_mse);
    }

    #[test]
    fn suite_has_the_five_reported_rows() {
        let report = run_suite(2).unwrap();
        assert_eq!(report.rows.len(), 5);
        let labels: Vec<&str> = report.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "umult np=128",
                "plantran np=256",
                "boolean np=256 always-true",
                "boolean np=256 all-separable",
                "boolean np=1024 all-separable",
            ]
        );
        // Learning rows all converge; the feed-forward row reports accuracy.
        for row in &report.rows[1..] {
            assert_eq!(row.converged, row.trials, "{}", row.label);
        }
        assert!(report.rows[0].post_mse_median.unwrap() < 0.005);

        let dir = std::env::temp_dir().join("ofwl-suite-shape");
        let _ = std::fs::remove_dir_all(&dir);
        let table = emit_suite_table(&report, &dir).unwrap();
        let text = std::fs::read_to_string(table).unwrap();
        assert_eq!(text.lines().count(), 6); // header + 5 rows
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let cfg = ExperimentConfig {
            np: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.check().is_err());
        let cfg = ExperimentConfig {
            quantization_bits: 5,
            ..ExperimentConfig::default()
        };
        assert!(cfg.check().is_err());
        let cfg = ExperimentConfig {
            task: TaskSelector::Function("xor".into()),
            network: NetworkKind::Boolean,
            ..ExperimentConfig::default()
        };
        assert!(run_experiment(&cfg).is_err());
    }
}
