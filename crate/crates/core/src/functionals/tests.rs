use super::*;
use crate::paths::{refine_path, simulate_path, TimeGrid};
use crate::stats::{refinement_order, rms};

fn path(d: usize, steps: usize, seed: u64) -> SamplePath {
    simulate_path(TimeGrid::new(1.0, steps).unwrap(), d, seed).unwrap()
}

fn all_functionals() -> Vec<Box<dyn PathFunctional>> {
    FUNCTIONAL_NAMES.iter().map(|n| functional_by_name(n).unwrap()).collect()
}

#[test]
fn catalog_names_round_trip() {
    for name in FUNCTIONAL_NAMES {
        assert_eq!(functional_by_name(name).unwrap().name(), *name);
    }
    for name in FIELD_NAMES {
        assert_eq!(field_by_name(name).unwrap().name(), *name);
    }
    assert!(matches!(functional_by_name("nope"), Err(Error::Config(_))));
    assert!(matches!(field_by_name("transport:tan"), Err(Error::Config(_))));
    assert!(functional_by_name("markovian:sin;rate=x").is_err());
}

#[test]
fn derivatives_are_adapted() {
    // D^θ u(t_k) must not change when the path after t_k is altered.
    let d_max = 2;
    for u in all_functionals() {
        let p = path(u.dim(), 256, 7);
        let k = 100;
        let stopped = p.frozen_after(k, &vec![0.3; u.dim()]).unwrap();
        let (a, b) = (u.bind(&p).unwrap(), u.bind(&stopped).unwrap());
        for m in 0..=3usize {
            for theta in crate::indices::enumerate_temporal(m, u.dim().min(d_max)) {
                let e = theta.entries();
                assert_eq!(a.derivative(e, k), b.derivative(e, k), "{} {theta}", u.name());
            }
        }
    }
}

#[test]
fn area_and_drift_tables() {
    let p = path(2, 64, 3);
    let area = AreaFunctional::new();
    let a = area.bind(&p).unwrap();
    for k in [0, 10, 64] {
        assert_eq!(a.derivative(&[2, 1], k), 1.0);
        assert_eq!(a.derivative(&[1, 2], k), 0.0);
        assert_eq!(a.derivative(&[1], k), p.value(1, k));
        assert_eq!(a.derivative(&[2], k), 0.0);
        assert_eq!(a.derivative(&[0], k), 0.0);
    }
    let p1 = path(1, 64, 3);
    let drift = DriftOfPath.bind(&p1).unwrap();
    assert_eq!(drift.derivative(&[1, 0], 5), 1.0);
    assert_eq!(drift.derivative(&[0, 1], 5), 0.0);
    assert_eq!(drift.derivative(&[0], 5), p1.value(0, 5));
    assert_eq!(drift.value(0), 0.0);
}

#[test]
fn area_outer_function_uses_chain_rule() {
    let p = path(2, 64, 4);
    let u = AreaFunctional::with_outer(Smooth1d::Sin);
    let b = u.bind(&p).unwrap();
    let plain = AreaFunctional::new();
    let a = plain.bind(&p).unwrap().value(30);
    let b2 = p.value(1, 30);
    assert!((b.derivative(&[1], 30) - a.cos() * b2).abs() < 1e-15);
    assert!((b.derivative(&[1, 1], 30) + a.sin() * b2 * b2).abs() < 1e-15);
    // ∂_{ω²}(cos(A) B²) = cos(A), since ∂_{ω²}A = 0.
    assert!((b.derivative(&[2, 1], 30) - a.cos()).abs() < 1e-15);
    assert_eq!(b.derivative(&[1, 2], 30), 0.0);
}

/// Compares analytic first and second derivatives with finite-difference
/// probes at node `k`.
fn probe_check(u: &dyn PathFunctional, p: &SamplePath, k: usize, tol: f64) {
    let bound = u.bind(p).unwrap();
    for outer in std::iter::once(None).chain((0..=u.dim() as u8).map(Some)) {
        let prefix: Vec<u8> = outer.into_iter().collect();
        let (t, w) = probe_derivatives(
            |q, n| {
                let b = u.bind(q)?;
                Ok(b.derivative(&prefix, n))
            },
            p,
            k,
        )
        .unwrap();
        let mut want_t = prefix.clone();
        want_t.insert(0, 0);
        let exact_t = bound.derivative(&want_t, k);
        assert!((t - exact_t).abs() < tol * (1.0 + exact_t.abs()), "{} ∂_t after {prefix:?}: {t} vs {exact_t}", u.name());
        for (i, wi) in w.iter().enumerate() {
            let mut want = prefix.clone();
            want.insert(0, i as u8 + 1);
            let exact = bound.derivative(&want, k);
            assert!((wi - exact).abs() < tol * (1.0 + exact.abs()), "{} ∂_{} after {prefix:?}: {wi} vs {exact}", u.name(), i + 1);
        }
    }
}

#[test]
fn derivatives_match_finite_difference_probes() {
    for u in all_functionals() {
        let p = path(u.dim(), 4096, 11);
        for t in [0.25, 0.75] {
            let k = p.grid().node(t).unwrap();
            probe_check(u.as_ref(), &p, k, 0.05);
        }
    }
}

/// Itô residual over `[0, 1]`, or over the pieces `[0, ¼]` and `[¾, 1]`
/// for functionals whose derivatives jump inside `(¼, ¾)`.
fn ito_residual(u: &dyn PathFunctional, p: &SamplePath) -> f64 {
    if u.kinks().is_empty() {
        functional_ito_residual(u, p, 1.0).unwrap()
    } else {
        functional_ito_residual_between(u, p, 0.0, 0.25).unwrap() + functional_ito_residual_between(u, p, 0.75, 1.0).unwrap()
    }
}

#[test]
fn ito_residual_converges_under_refinement() {
    for u in all_functionals() {
        let (mut coarse, mut fine) = (Vec::new(), Vec::new());
        for s in 0..24 {
            let p = path(u.dim(), 512, 100 + s);
            let q = refine_path(&p, 4).unwrap();
            coarse.push(ito_residual(u.as_ref(), &p));
            fine.push(ito_residual(u.as_ref(), &q));
        }
        let o = refinement_order(rms(&coarse), rms(&fine), 4.0);
        assert!(o.passes(0.9), "{}: {o:?}", u.name());
    }
}

#[test]
fn ito_residual_straddling_a_kink_is_not_first_order() {
    let u = Cylindrical::default_entry();
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    for s in 0..24 {
        let p = path(2, 512, 100 + s);
        let q = refine_path(&p, 4).unwrap();
        coarse.push(functional_ito_residual(&u, &p, 1.0).unwrap());
        fine.push(functional_ito_residual(&u, &q, 1.0).unwrap());
    }
    let o = refinement_order(rms(&coarse), rms(&fine), 4.0);
    assert!(o.order.unwrap() < 0.75, "{o:?}");
}

#[test]
fn chain_rule_for_composites() {
    let u = field_by_name("transport:sin").unwrap();
    let xs: [&dyn PathFunctional; 1] = [&DriftOfPath];
    let mut prev = f64::INFINITY;
    for steps in [1024, 4096, 16384] {
        let p = path(1, steps, 5);
        let r = chain_rule_residual(u.as_ref(), &xs, &p, 0.5).unwrap();
        assert!(r.max_abs() < prev);
        prev = r.max_abs();
    }
    assert!(prev < 1e-2, "{prev}");

    let m = Markovian::new(vec![Smooth1d::Sin], 0.0);
    let xs: [&dyn PathFunctional; 1] = [&m];
    let heat = field_by_name("heat").unwrap();
    let p = path(1, 16384, 6);
    assert!(chain_rule_residual(heat.as_ref(), &xs, &p, 0.5).unwrap().max_abs() < 1e-2);
    assert!(chain_rule_residual(heat.as_ref(), &[], &p, 0.5).is_err());
}

#[test]
fn capability_and_dimension_errors() {
    let p = path(1, 64, 1);
    assert!(matches!(AreaFunctional::new().bind(&p), Err(Error::Query(_))));
    let u = Markovian::new(vec![Smooth1d::Sin], 0.0);
    let b = u.bind(&p).unwrap();
    assert!(matches!(check_capability(b.as_ref(), &[2]), Err(Error::Query(_))));
    assert!(matches!(check_capability(b.as_ref(), &[0; 5]), Err(Error::Capability(_))));
    let th = crate::indices::TemporalIndex::new(vec![1, 1], 1).unwrap();
    assert!((u.derivative(&th, 0.5, &p).unwrap() + p.value(0, 32).sin()).abs() < 1e-15);
}

#[test]
fn field_derivatives_match_spatial_finite_differences() {
    let h = 1e-5;
    for name in FIELD_NAMES {
        let f = field_by_name(name).unwrap();
        let p = path(f.dim(), 64, 2);
        let b = f.bind(&p).unwrap();
        for theta in crate::indices::enumerate_temporal(2, f.dim()) {
            for l in 0..3u32 {
                let x = 0.3;
                let fd = (b.derivative(theta.entries(), &[l], 20, &[x + h]) - b.derivative(theta.entries(), &[l], 20, &[x - h])) / (2.0 * h);
                let exact = b.derivative(theta.entries(), &[l + 1], 20, &[x]);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{name} {theta} ℓ={l}");
            }
        }
    }
}

#[test]
fn cylindrical_freezes_after_observation() {
    let u = Cylindrical::default_entry();
    assert_eq!(u.kinks(), vec![0.5]);
    let p = path(2, 64, 9);
    let b = u.bind(&p).unwrap();
    let (x1, x2) = (p.value(0, 10), p.value(1, 10));
    let before = b.derivative(&[1], 10);
    // Before t = 1/2 both ω¹ factors are active.
    let want = (-x1.sin() * x1.sin() + x1.cos() * x1.cos()) * x2.cos();
    assert!((before - want).abs() < 1e-14);
    let (y1, y2) = (p.value(0, 40), p.value(1, 40));
    let frozen = p.value(0, 32).cos();
    assert!((b.derivative(&[1], 40) - frozen * y1.cos() * y2.cos()).abs() < 1e-14);
    assert!((b.derivative(&[1, 2], 40) - b.derivative(&[2, 1], 40)).abs() < 1e-14);
}
