//! Golden-netlist regression: the builders must keep producing the committed
//! networks bit for bit. Regenerate the fixtures with
//! `ofwl build --network <name> --out crates/core/fixtures/<name>.json`
//! after an intentional builder change.

use ofwl_core::harness::{build_network, run_experiment, ExperimentConfig, NetworkKind};
use ofwl_core::network::Netlist;

fn fixture(name: &str) -> Netlist {
    let path = format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    Netlist::from_json(&text).unwrap()
}

#[test]
fn builders_match_golden_netlists() {
    for (name, kind) in [
        ("sigma-and", NetworkKind::SigmaAnd),
        ("umult", NetworkKind::Umult),
        ("plantran", NetworkKind::Plantran),
        ("boolean", NetworkKind::Boolean),
    ] {
        let built = build_network(&ExperimentConfig::for_network(kind)).unwrap();
        let golden = fixture(name);
        assert_eq!(built, golden, "{name} drifted from its golden netlist");
        for (a, b) in built.synapses.iter().zip(&golden.synapses) {
            assert_eq!(a.weight.to_bits(), b.weight.to_bits(), "{name} weight bits");
        }
    }
}

#[test]
fn golden_plantran_still_learns() {
    // A loaded golden netlist is runnable as-is.
    let net = fixture("plantran");
    assert!(net.validate().is_empty());
    let cfg = ExperimentConfig {
        seed: 77,
        max_steps: 120,
        ..ExperimentConfig::for_network(NetworkKind::Plantran)
    };
    // run_experiment rebuilds from the cache; equality above already ties the
    // cache to the fixture, so exercise the fixture directly too.
    let rec = run_experiment(&cfg).unwrap();
    assert!(rec.nc.is_some());

    let task = ofwl_core::zoo::PlanTranTask::random(77);
    let inputs: Vec<Vec<f64>> = (0..120u64)
        .map(|t| {
            let p = task.pair(t);
            vec![p.x[0], p.y]
        })
        .collect();
    let trace = ofwl_core::network::run(
        &net,
        &inputs,
        &ofwl_core::network::ExecConfig::hardware(256, 77),
    )
    .unwrap();
    let series: Vec<f64> = trace
        .steps
        .iter()
        .zip(&inputs)
        .map(|(s, i)| {
            let d = s.outputs[0] - i[1];
            d * d
        })
        .collect();
    let nc = ofwl_core::harness::detect_convergence(
        &series,
        &ofwl_core::harness::ConvergenceRule::default(),
    );
    assert!(nc.is_some(), "golden plantran failed to learn");
}
