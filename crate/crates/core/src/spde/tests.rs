use super::*;
use crate::functionals::{field_by_name, Smooth1d, TransportField};
use crate::paths::{simulate_path, TimeGrid};
use crate::taylor::expand_field;

fn path(d: usize, seed: u64) -> SamplePath {
    simulate_path(TimeGrid::new(1.0, 256).unwrap(), d, seed).unwrap()
}

const TIMES: [f64; 3] = [0.25, 0.5, 1.0];
const POINTS: [f64; 3] = [-1.0, 0.3, 1.7];

#[test]
fn coefficient_routes_agree_on_every_case() {
    for name in SPDE_CASE_NAMES {
        let case = spde_case_by_name(name).unwrap();
        let u = case.solution.as_ref();
        for seed in 0..20 {
            let p = path(u.dim(), seed);
            for t in TIMES {
                for x in POINTS {
                    let from_spde = derive_coefficients(&case.coefficients, u, t, &[x], &p).unwrap();
                    let from_field = field_coefficients(u, t, &[x], &p).unwrap();
                    let diff = from_spde.max_difference(&from_field);
                    assert!(diff <= ROUTE_TOLERANCE, "{name} t={t} x={x}: {diff:e}\n{from_spde:?}\n{from_field:?}");
                    let r = ppde_residual(&case.coefficients, u, t, &[x], &p).unwrap();
                    assert!(r.max_abs() < 1e-12, "{name}: {r:?}");
                }
            }
        }
    }
}

#[test]
fn transport_coefficients_by_hand() {
    let case = spde_case_by_name("transport:sin").unwrap();
    let p = path(1, 3);
    let (t, x) = (0.5, 0.3);
    let c = derive_coefficients(&case.coefficients, case.solution.as_ref(), t, &[x], &p).unwrap();
    let s = x + p.value(0, 128);
    assert!((c.omega_u[0] - s.cos()).abs() < 1e-15);
    assert!((c.x_omega_u[0][0] + s.sin()).abs() < 1e-15);
    assert!((c.omega_omega_u[0][0] + s.sin()).abs() < 1e-15);
    assert_eq!(c.t_u, 0.0);
    assert!((c.ito_drift + 0.5 * s.sin()).abs() < 1e-15);
}

#[test]
fn constant_noise_has_no_second_order_terms() {
    let c = CatalogSpde::ConstantNoise { c: vec![0.7, -1.2] };
    let p = path(2, 1);
    let probe = Probe { t: 0.5, x: vec![0.1], y: 2.0, z: DVector::from_element(1, 0.4), gamma: DMatrix::from_element(1, 1, -3.0) };
    let d = derive_at_probe(&c, &probe, &p, 128).unwrap();
    assert_eq!(d.omega_u, vec![0.7, -1.2]);
    assert!(d.x_omega_u.iter().flatten().all(|v| *v == 0.0));
    assert!(d.omega_omega_u.iter().flatten().all(|v| *v == 0.0));
    assert_eq!(d.ito_drift, 0.0);
}

#[test]
fn multiplicative_second_derivative_reproduces_u() {
    let case = spde_case_by_name("multiplicative").unwrap();
    let p = path(1, 5);
    let b = case.solution.bind(&p).unwrap();
    for x in POINTS {
        let c = derive_coefficients(&case.coefficients, case.solution.as_ref(), 0.75, &[x], &p).unwrap();
        let u = b.value(192, &[x]);
        assert!((c.omega_omega_u[0][0] - u).abs() < 1e-15);
        assert!((c.ito_drift - 0.5 * u).abs() < 1e-15);
    }
}

#[test]
fn ito_drift_correction_is_half_the_trace() {
    for name in SPDE_CASE_NAMES {
        let case = spde_case_by_name(name).unwrap();
        let u = case.solution.as_ref();
        let p = path(u.dim(), 9);
        for x in POINTS {
            let k = p.grid().node(0.5).unwrap();
            let bound = u.bind(&p).unwrap();
            let probe = Probe::from_field(bound.as_ref(), k, 0.5, &[x]);
            let big_f = ito_drift(&case.coefficients, &probe).unwrap();
            let direct = field_coefficients(u, 0.5, &[x], &p).unwrap();
            let trace: f64 = (0..u.dim()).map(|a| direct.omega_omega_u[a][a]).sum();
            assert!(scaled_difference(big_f - case.coefficients.f(&probe), 0.5 * trace) < 1e-12, "{name}");
        }
    }
}

fn probe() -> Probe {
    Probe { t: 0.2, x: vec![0.4], y: 0.9, z: DVector::from_element(1, -0.3), gamma: DMatrix::from_element(1, 1, 1.1) }
}

#[test]
fn parabolicity_examples() {
    let heat = parabolicity(&CatalogSpde::Heat { diffusion: 0.5 }, &probe()).unwrap();
    assert_eq!(heat.df_dgamma, vec![vec![0.5]]);
    assert!(heat.parabolic);
    let transport = parabolicity(&CatalogSpde::Transport { a: vec![1.0] }, &probe()).unwrap();
    assert_eq!(transport.df_dgamma, vec![vec![0.0]]);
    assert_eq!(transport.dito_dgamma, vec![vec![0.5]]);
    assert!(transport.parabolic);
    let backward = parabolicity(&CatalogSpde::Heat { diffusion: -1.0 }, &probe()).unwrap();
    assert!(!backward.parabolic);
    assert_eq!(backward.min_eigenvalue, -1.0);
}

/// Nonlinear coefficients without `∂_γ f`, used for the closure checks.
struct Nonlinear;

impl SpdeCoefficients for Nonlinear {
    fn name(&self) -> String {
        "nonlinear".into()
    }
    fn dim(&self) -> usize {
        2
    }
    fn spatial_dim(&self) -> usize {
        1
    }
    fn f(&self, p: &Probe) -> f64 {
        p.gamma[(0, 0)].powi(2) + p.y
    }
    fn g(&self, p: &Probe) -> DVector<f64> {
        let (x, y, z) = (p.x[0], p.y, p.z[0]);
        DVector::from_vec(vec![x.sin() * y + z * z, (x * z).cos()])
    }
    fn dg_dx(&self, p: &Probe) -> Option<DMatrix<f64>> {
        let (x, y, z) = (p.x[0], p.y, p.z[0]);
        Some(DMatrix::from_row_slice(1, 2, &[x.cos() * y, -z * (x * z).sin()]))
    }
    fn dg_dy(&self, p: &Probe) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![p.x[0].sin(), 0.0]))
    }
    fn dg_dz(&self, p: &Probe) -> Option<DMatrix<f64>> {
        let (x, z) = (p.x[0], p.z[0]);
        Some(DMatrix::from_row_slice(1, 2, &[2.0 * z, -x * (x * z).sin()]))
    }
}

#[test]
fn derivative_closures_match_finite_differences() {
    assert!(derivative_closure_error(&Nonlinear, &probe(), 1e-5).unwrap() < 1e-8);
    for name in SPDE_CASE_NAMES {
        let case = spde_case_by_name(name).unwrap();
        assert!(derivative_closure_error(&case.coefficients, &probe(), 1e-5).unwrap() < 1e-8, "{name}");
    }
}

#[test]
fn missing_closures_are_capability_errors() {
    assert!(matches!(parabolicity(&Nonlinear, &probe()), Err(Error::Capability(_))));
    struct Bare;
    impl SpdeCoefficients for Bare {
        fn name(&self) -> String {
            "bare".into()
        }
        fn dim(&self) -> usize {
            1
        }
        fn spatial_dim(&self) -> usize {
            1
        }
        fn f(&self, _: &Probe) -> f64 {
            0.0
        }
        fn g(&self, p: &Probe) -> DVector<f64> {
            DVector::from_element(1, p.z[0])
        }
    }
    let u = field_by_name("transport:sin").unwrap();
    let p = path(1, 1);
    assert!(matches!(derive_coefficients(&Bare, u.as_ref(), 0.5, &[0.0], &p), Err(Error::Capability(_))));
    assert!(matches!(ito_drift(&Bare, &probe()), Err(Error::Capability(_))));
}

#[test]
fn six_tuple_forms_agree() {
    for name in SPDE_CASE_NAMES.iter().filter(|n| !n.starts_with("transport2")) {
        let case = spde_case_by_name(name).unwrap();
        for seed in 0..10 {
            let p = path(1, 100 + seed);
            for t in TIMES {
                for x in POINTS {
                    let forms = six_tuple_forms(&case.coefficients, case.solution.as_ref(), t, &[x], &p).unwrap();
                    assert!(forms.max_difference <= ROUTE_TOLERANCE, "{name}: {forms:?}");
                }
            }
        }
    }
}

#[test]
fn six_tuple_values() {
    let p = path(1, 4);
    let case = spde_case_by_name("transport:sin").unwrap();
    let s6 = six_tuple(&case.coefficients, case.solution.as_ref(), 0.5, &[0.3], &p).unwrap();
    let s = 0.3 + p.value(0, 128);
    assert_eq!(s6.a, 0.0);
    for (got, want) in [(s6.b, s.cos()), (s6.c, -s.sin()), (s6.p, s.cos()), (s6.q, -s.sin()), (s6.x, -s.sin())] {
        assert!((got - want).abs() < 1e-15);
    }

    // Without noise the tuple is the classical (∂_t u, 0, 0, ∂_x u, 0, ∂²_xx u).
    let heat = spde_case_by_name("heat-deterministic").unwrap();
    let s6 = six_tuple(&heat.coefficients, heat.solution.as_ref(), 0.5, &[0.3], &p).unwrap();
    let e = (-0.25f64).exp();
    assert_eq!((s6.b, s6.c, s6.q), (0.0, 0.0, 0.0));
    assert!((s6.a + 0.5 * e * 0.3f64.sin()).abs() < 1e-15);
    assert!((s6.p - e * 0.3f64.cos()).abs() < 1e-15);
    assert!((s6.x + e * 0.3f64.sin()).abs() < 1e-15);
}

#[test]
fn six_tuple_rejects_mismatched_inputs() {
    let p = path(1, 4);
    let wrong = TransportField::new(Smooth1d::Sin, vec![1.0]);
    assert!(matches!(six_tuple(&CatalogSpde::Multiplicative, &wrong, 0.5, &[0.3], &p), Err(Error::Consistency(_))));
    let case = spde_case_by_name("transport2:sin").unwrap();
    let p2 = path(2, 4);
    assert!(matches!(six_tuple(&case.coefficients, case.solution.as_ref(), 0.5, &[0.3], &p2), Err(Error::Capability(_))));
}

#[test]
fn spde_expansion_matches_the_field_expansion_term_by_term() {
    for name in SPDE_CASE_NAMES {
        let case = spde_case_by_name(name).unwrap();
        let u = case.solution.as_ref();
        for seed in 0..5 {
            let p = path(u.dim(), 40 + seed);
            for (delta, h) in [(0.125, 0.2), (-0.125, -0.1), (0.0625, 0.0)] {
                let q = ExpansionQuery::field(0.5, vec![0.3], delta, vec![h], 2);
                let a = spde_expand(&case.coefficients, u, &p, &q).unwrap();
                let b = expand_field(u, &p, &q).unwrap();
                assert_eq!(a.terms.len(), b.terms.len());
                for (x, y) in a.terms.iter().zip(&b.terms) {
                    assert_eq!(x.index, y.index);
                    assert!(scaled_difference(x.contribution(), y.contribution()) <= ROUTE_TOLERANCE, "{name} {}", x.index);
                }
                assert!(scaled_difference(a.remainder, b.remainder) <= ROUTE_TOLERANCE);
            }
        }
    }
}

#[test]
fn affine_transport_is_expanded_exactly() {
    let u = TransportField::new(Smooth1d::Identity, vec![1.0]);
    let c = CatalogSpde::Transport { a: vec![1.0] };
    let p = path(1, 12);
    for delta in [0.25, -0.25] {
        let q = ExpansionQuery::field(0.5, vec![0.3], delta, vec![0.0], 2);
        let r = spde_expand(&c, &u, &p, &q).unwrap();
        assert!(r.remainder.abs() < 1e-14, "{}", r.remainder);
    }
}

#[test]
fn spde_expansion_is_second_order_only() {
    let case = spde_case_by_name("transport:sin").unwrap();
    let p = path(1, 1);
    let q = ExpansionQuery::field(0.5, vec![0.3], 0.125, vec![0.1], 3);
    assert!(matches!(spde_expand(&case.coefficients, case.solution.as_ref(), &p, &q), Err(Error::Capability(_))));
    assert!(spde_case_by_name("burgers").is_err());
}
