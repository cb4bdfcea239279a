//! End-to-end run of the shipped configuration at a short horizon.

use olc_core::exec::Execution;
use olc_core::harness::{run_all, ExperimentConfig};

#[test]
fn shipped_config_runs_short_horizon() {
    let mut cfg = ExperimentConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.json")).unwrap();
    cfg.horizon = 60;
    cfg.n_runs = 4;
    let setup = cfg.validate().unwrap();
    let outcome = run_all(&cfg, &setup, Execution::default());
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    for (rec, rep) in &outcome.runs {
        assert_eq!(rec.olc.costs.len(), 60);
        assert!(rec.bench_u.converged && rec.bench_m.converged);
        let t = 59;
        assert!((rep.bench_u_prefix[t] - rec.bench_u.value).abs() <= 1e-9 * rec.bench_u.value.abs().max(1.0));
        assert!(rep.olc.cum_cost.iter().all(|c| c.is_finite()));
    }
}
