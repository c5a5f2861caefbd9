//! End-to-end checks through the public API: states to weak value, weak
//! value to evolution, probe to shifts.

use std::f64::consts::FRAC_PI_4;

use wva_core::probe::recommended_support_points;
use wva_core::{
    compute_weak_value, gaussian_exact_shifts, gaussian_grid, gaussian_probe, mach_zehnder_setup,
    mach_zehnder_weak_value, max_shift, optimal_probe, shift_report, Amplitude, Observable,
    PostSelectedEvolution, SystemState, WvaError,
};

#[test]
fn states_to_gaussian_shift() {
    let theta = 3.0 * FRAC_PI_4 + 0.3;
    let pre = SystemState::from_real(&[1.0, 1.0]).unwrap();
    let post = SystemState::from_real(&[theta.cos(), theta.sin()]).unwrap();
    let obs = Observable::diagonal(&[1.0, -1.0]).unwrap();
    let weak = compute_weak_value(&pre, &post, &obs).unwrap();
    assert!((weak.value().re - 0.3f64.tan().recip()).abs() < 1e-12);

    let (g, w) = (0.2, 1.5);
    let evo = PostSelectedEvolution::new(g, weak).unwrap();
    let probe = gaussian_probe(w, &gaussian_grid(w, g).unwrap()).unwrap();
    let report = shift_report(&evo, &probe).unwrap();
    let oracle = gaussian_exact_shifts(g, w, weak.value()).unwrap();
    assert!((report.delta_q - oracle.delta_q).abs() < 1e-10);
    assert!((report.delta_p - oracle.delta_p).abs() < 1e-10);
    let expected_weight = weak.success_probability() * oracle.denominator;
    assert!((report.weight - expected_weight).abs() < 1e-10);
}

#[test]
fn mach_zehnder_feeds_the_evolution() {
    let (chi, phi) = (0.4, 0.9);
    let setup = mach_zehnder_setup(chi, phi).unwrap();
    let from_states = compute_weak_value(&setup.pre, &setup.post, &setup.observable).unwrap();
    let closed = mach_zehnder_weak_value(chi, phi).unwrap().affine(2.0, -1.0);
    assert!((from_states.value() - closed.value()).norm() < 1e-12);

    let g = 0.05;
    let aw = from_states.value();
    let evo = PostSelectedEvolution::new(g, from_states).unwrap();
    let probe = optimal_probe(g, aw, recommended_support_points(aw, 1)).unwrap();
    let dq = shift_report(&evo, &probe).unwrap().delta_q;
    let target = max_shift(g, aw).unwrap();
    assert!(((dq - target) / target).abs() < 1e-6);
}

#[test]
fn orthogonal_states_are_rejected() {
    let pre = SystemState::from_real(&[1.0, 0.0]).unwrap();
    let post = SystemState::from_real(&[0.0, 1.0]).unwrap();
    let obs = Observable::diagonal(&[1.0, -1.0]).unwrap();
    assert!(matches!(
        compute_weak_value(&pre, &post, &obs),
        Err(WvaError::OrthogonalSelection { .. })
    ));
}

#[test]
fn optimal_probe_beats_gaussian_probes() {
    let (g, aw) = (0.1, Amplitude::new(3f64.sqrt(), 2.0 * 3f64.sqrt()));
    let evo = PostSelectedEvolution::from_weak_value(g, aw).unwrap();
    let best = max_shift(g, aw).unwrap();
    for w in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let probe = gaussian_probe(w, &gaussian_grid(w, g).unwrap()).unwrap();
        assert!(shift_report(&evo, &probe).unwrap().delta_q < best);
    }
}
