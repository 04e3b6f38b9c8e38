use std::sync::Arc;

use mcflab::expander::{solve_expander_graph1d, Bump, ShootingConfig};
use mcflab::flow::{run_mcf, FlowConfig, FlowTrace, Observers, SnapshotSchedule};
use mcflab::geometry::{
    closest_point_deviation, AsCurve, FarField, Geometry, GraphHypersurface, Grid1D, ProfileFn, RegularCone,
};
use mcflab::harness::{compare_blowdown, ExpanderBase, SmoothedCone};

const WINDOW: f64 = 2.0;

fn bump_flow(times: Vec<f64>) -> (FlowTrace, ExpanderBase) {
    let cone = RegularCone::symmetric(0.3).unwrap();
    let gamma = Arc::new(
        solve_expander_graph1d(cone, &ShootingConfig { refinement_check: false, ..Default::default() }).unwrap(),
    );
    let smooth = SmoothedCone { cone };
    let bump = Bump { center: 0.5, width: 1.0, amplitude: 0.5 };
    let grid = Grid1D::symmetric(40.0, 0.1).unwrap();
    let g = GraphHypersurface::from_fn(
        grid,
        |x| smooth.value(x) + bump.value(x),
        cone,
        FarField::Expander(gamma.clone()),
        1e-6,
    )
    .unwrap();
    let t_end = *times.last().unwrap();
    let cfg = FlowConfig::new(1.0, t_end).with_snapshots(SnapshotSchedule::Times(times));
    let trace = run_mcf(&Geometry::Graph(g), &cfg, &Observers::none()).unwrap();
    assert!(trace.completed(), "{:?}", trace.failure);
    (trace, ExpanderBase::new(&gamma, WINDOW).unwrap())
}

/// Sup distance over `|x| <= WINDOW` between two blow-downs.
fn mutual(trace: &FlowTrace, r1: f64, r2: f64) -> f64 {
    let a = trace.at(r1 * r1).unwrap().geometry.scaled(1.0 / r1).unwrap();
    let b = trace.at(r2 * r2).unwrap().geometry.scaled(1.0 / r2).unwrap();
    let fields = a.fields().unwrap();
    let dev = closest_point_deviation(&fields, &b.curve_samples(), None).unwrap();
    dev.sup_v_on(|i| fields.points[i].x.abs() <= WINDOW)
}

#[test]
fn different_radius_sequences_share_the_limit() {
    let (trace, base) = bump_flow(vec![4.0, 9.0, 16.0, 36.0, 64.0, 81.0]);
    let even = compare_blowdown(&trace, &[2.0, 4.0, 8.0], &base).unwrap();
    let odd = compare_blowdown(&trace, &[3.0, 6.0, 9.0], &base).unwrap();
    for rep in [&even, &odd] {
        assert!(rep.decreasing && !rep.flagged, "{rep:?}");
    }
    // both sequences end near the same expander, and consecutive blow-downs draw together
    let (e, o) = (even.rows.last().unwrap().v_max, odd.rows.last().unwrap().v_max);
    assert!(e < 2e-3 && o < 2e-3, "{e} {o}");
    let early = mutual(&trace, 2.0, 3.0);
    let late = mutual(&trace, 8.0, 9.0);
    assert!(late < early / 4.0, "{early} -> {late}");
    assert!(late <= e + o, "{late} vs {e} + {o}");
}
