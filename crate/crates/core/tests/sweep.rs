use rpfield::constraints::{penalty_sweep, ConstraintSet, DiffOperator, SolverConfig, SweepConfig};
use rpfield::interaction::{CutoffSchedule, GrowthLaw};
use rpfield::spectral::{LatticeSpec, TestFunction};
use rpfield::QuadratureConfig;

#[test]
fn divergence_sweep_gap_decreases() {
    let spec = LatticeSpec::new(2, 32, 8.0, 2).unwrap();
    let f = TestFunction::gaussian(vec![0.0, 0.0], 0.5, 1.0, vec![1.0, 0.0]);
    let cs = ConstraintSet::new(vec![DiffOperator::divergence(2)]).unwrap();
    let schedule = CutoffSchedule {
        dim: 2,
        radius: GrowthLaw::power(1.0, 1.0),
        lambda: GrowthLaw::power(8.0, 1.0),
        sup_bound: GrowthLaw::constant(1.0),
        penalty: Some(GrowthLaw::geometric(1.0, 10.0)),
    };
    let cfg = SweepConfig {
        spec,
        quadrature: QuadratureConfig::radial(),
        solver: SolverConfig::default(),
        first: 1,
        last: 6,
        tolerance: 1e-3,
    };
    let t = penalty_sweep(&f, &f, &cs, &schedule, &cfg).unwrap();
    assert!(t.monotone);
    // The penalty part shrinks like 1/a; the finite-ball part stalls once
    // the radius is capped by the torus.
    for w in t.rows.windows(2) {
        let ratio = w[0].gap_penalty / w[1].gap_penalty;
        assert!((5.0..=20.0).contains(&ratio), "penalty gap ratio {ratio}");
    }
    let last = t.rows.last().unwrap();
    assert!(last.radius_capped);
    assert!(last.gap_volume > 100.0 * last.gap_penalty);
    assert!(t.rows.iter().all(|r| r.solver_residual < 1e-6));
}
