use super::*;
use crate::functionals::{field_by_name, functional_by_name, AreaFunctional, FrozenFieldFunctional, Markovian, Smooth1d, FIELD_NAMES, FUNCTIONAL_NAMES};
use crate::paths::{refine_path, simulate_path, TimeGrid};
use crate::stats::{refinement_order, rms};

fn path(d: usize, steps: usize, seed: u64) -> SamplePath {
    simulate_path(TimeGrid::new(1.0, steps).unwrap(), d, seed).unwrap()
}

#[test]
fn order_zero_is_the_increment() {
    let u = functional_by_name("markovian:sin").unwrap();
    let p = path(1, 256, 1);
    for delta in [0.25, -0.25] {
        let r = expand(u.as_ref(), &p, &ExpansionQuery::new(0.5, delta, 0)).unwrap();
        assert_eq!(r.terms.len(), 1);
        assert_eq!(r.remainder, u.evaluate(0.5 + delta, &p).unwrap() - u.evaluate(0.5, &p).unwrap());
        assert_eq!(r.remainder, r.actual - r.predicted);
    }
}

#[test]
fn polynomial_functionals_are_reproduced_exactly() {
    let id = Markovian::new(vec![Smooth1d::Identity], 0.0);
    let sq = functional_by_name("markovian:x2").unwrap();
    for seed in 0..20 {
        let p = path(1, 512, seed);
        for delta in [0.125, -0.125, 0.5, -0.25] {
            let r1 = expand(&id, &p, &ExpansionQuery::new(0.375, delta, 1)).unwrap();
            assert!(r1.remainder.abs() < 1e-14, "{}", r1.remainder);
            let r2 = expand(sq.as_ref(), &p, &ExpansionQuery::new(0.375, delta, 2)).unwrap();
            assert!(r2.remainder.abs() < 1e-13 * (1.0 + r2.actual.abs()), "{}", r2.remainder);
        }
    }
}

#[test]
fn lower_orders_come_from_one_expansion() {
    let u = functional_by_name("markovian:sin,cos").unwrap();
    let p = path(2, 512, 5);
    let full = expand(u.as_ref(), &p, &ExpansionQuery::new(0.25, 0.25, 3)).unwrap();
    for m in 0..=3 {
        let r = expand(u.as_ref(), &p, &ExpansionQuery::new(0.25, 0.25, m)).unwrap();
        assert!((full.remainder_at_order(m) - r.remainder).abs() < 1e-14);
    }
    let bound = u.bind(&p).unwrap();
    let mut ex = PathExpander::new(bound.as_ref(), &p, 3, Variant::Full).unwrap();
    let mut out = Vec::new();
    ex.remainders(128, 256, &mut out);
    for (m, r) in out.iter().enumerate() {
        assert!((r - full.remainder_at_order(m)).abs() < 1e-14);
    }
}

#[test]
fn term_set_matches_enumeration() {
    let u = functional_by_name("area").unwrap();
    let p = path(2, 256, 3);
    let r = expand(u.as_ref(), &p, &ExpansionQuery::new(0.5, 0.25, 2)).unwrap();
    let names: Vec<String> = r.terms.iter().map(|t| t.index.theta.to_string()).collect();
    assert_eq!(names, ["()", "(1)", "(2)", "(0)", "(1,1)", "(1,2)", "(2,1)", "(2,2)"]);
}

#[test]
fn matrix_form_matches_index_sum() {
    for name in FUNCTIONAL_NAMES {
        let u = functional_by_name(name).unwrap();
        let p = path(u.dim(), 512, 17);
        for delta in [0.25, -0.25] {
            for variant in [Variant::Full, Variant::Symmetrized] {
                let opts = ExpansionOptions { variant, ..Default::default() };
                let r = expand_with(u.as_ref(), &p, &ExpansionQuery::new(0.5, delta, 2), &opts).unwrap();
                let closed = second_order_closed_form(u.as_ref(), &p, 0.5, delta, variant).unwrap();
                assert!(relative_difference(r.predicted, closed) < 1e-12, "{name} {delta} {variant:?}");
            }
        }
    }
}

#[test]
fn backward_forms_agree_term_by_term() {
    for name in ["area", "area:sin", "markovian:sin,cos", "cylindrical", "transport2:sin"] {
        let u = functional_by_name(name).unwrap();
        for seed in 0..5 {
            let p = path(u.dim(), 512, seed);
            let c = backward_consistency(u.as_ref(), &p, 0.75, 0.25, 2).unwrap();
            assert!(c.max_term_difference <= 1e-12, "{name}: {c:?}");
            assert!(c.closed_form_difference <= 1e-12, "{name}: {c:?}");
            assert_eq!(c.terms, 8);
        }
    }
    let u = functional_by_name("area").unwrap();
    assert!(backward_consistency(u.as_ref(), &path(2, 64, 1), 0.5, -0.25, 2).is_err());
}

#[test]
fn symmetric_hessians_make_the_variants_coincide() {
    for name in ["markovian:sin,cos", "cylindrical", "markovian:sin"] {
        let u = functional_by_name(name).unwrap();
        let p = path(u.dim(), 512, 2);
        for delta in [0.25, -0.25] {
            let q = ExpansionQuery::new(0.25, delta, 2);
            let full = expand(u.as_ref(), &p, &q).unwrap();
            let sym = expand_with(u.as_ref(), &p, &q, &ExpansionOptions { variant: Variant::Symmetrized, ..Default::default() }).unwrap();
            assert!((full.predicted - sym.predicted).abs() <= 1e-12 * (1.0 + full.predicted.abs()), "{name}");
        }
    }
}

#[test]
fn area_is_exact_at_second_order_and_needs_the_levy_area() {
    let u = AreaFunctional::new();
    let opts = ExpansionOptions { variant: Variant::Symmetrized, ..Default::default() };
    for seed in 0..5 {
        let p = path(2, 512, seed);
        for delta in [0.25, -0.25] {
            let q = ExpansionQuery::new(0.5, delta, 2);
            let full = expand(&u, &p, &q).unwrap();
            assert!(full.remainder.abs() < 1e-14, "{}", full.remainder);
            let sym = expand_with(&u, &p, &q, &opts).unwrap();
            assert!(sym.remainder.abs() > 1e-6);
        }
    }
}

#[test]
fn queries_are_validated() {
    let u = functional_by_name("markovian:sin").unwrap();
    let p = path(1, 100, 1);
    let bad = [
        ExpansionQuery::new(0.5, 0.0, 2),
        ExpansionQuery::new(0.5, 0.05, 2),
        ExpansionQuery::new(0.505, 0.2, 2),
        ExpansionQuery::new(0.9, 0.2, 2),
        ExpansionQuery::new(0.1, -0.2, 2),
        ExpansionQuery::new(-0.1, 0.2, 2),
    ];
    for q in bad {
        assert!(matches!(expand(u.as_ref(), &p, &q), Err(Error::Query(_))), "{q:?}");
    }
    assert!(expand(u.as_ref(), &p, &ExpansionQuery::new(0.5, 0.1, 2)).is_ok());
    assert!(matches!(expand(u.as_ref(), &p, &ExpansionQuery::new(0.5, 0.2, 5)), Err(Error::Capability(_))));
    let opts = ExpansionOptions { max_order: 8, ..Default::default() };
    assert!(expand_with(u.as_ref(), &p, &ExpansionQuery::new(0.5, 0.2, 5), &opts).is_ok());
    assert!(matches!(expand_with(u.as_ref(), &p, &ExpansionQuery::new(0.5, 0.2, 9), &ExpansionOptions { max_order: 9, ..Default::default() }), Err(Error::Capability(_))));
}

/// Mean-square gap between the definitional and represented remainders at
/// two resolutions.
fn oracle_gap(u: &dyn PathFunctional, m: usize, delta: f64, rep: Representation) -> crate::stats::RefinementOutcome {
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    for seed in 0..256 {
        let p = path(u.dim(), 512, 40 + seed);
        let q = refine_path(&p, 4).unwrap();
        let query = ExpansionQuery::new(0.25, delta, m);
        for (pp, out) in [(&p, &mut coarse), (&q, &mut fine)] {
            let def = expand(u, pp, &query).unwrap().remainder;
            let rep = remainder_via_representation(u, pp, &query, rep).unwrap();
            out.push(def - rep);
        }
    }
    refinement_order(rms(&coarse), rms(&fine), 4.0)
}

#[test]
fn representations_converge_to_the_definitional_remainder() {
    for name in FUNCTIONAL_NAMES {
        let u = functional_by_name(name).unwrap();
        for m in 0..=2 {
            for delta in [0.125, -0.125] {
                for rep in [Representation::Full, Representation::Hoelder] {
                    let o = oracle_gap(u.as_ref(), m, delta, rep);
                    assert!(o.passes(0.9), "{name} m={m} δ={delta} {rep:?}: {o:?}");
                }
            }
        }
    }
}

#[test]
fn representation_capability_is_checked() {
    let u = Markovian::new(vec![Smooth1d::Sin], 0.0);
    let p = path(1, 256, 1);
    let b = u.bind(&p).unwrap();
    let limited = crate::functionals::Derived::new(b.as_ref(), &[1, 1, 1, 1, 1]).unwrap();
    assert_eq!(limited.max_order(), 3);
    assert!(representation_remainder_nodes(&limited, &p, 64, 128, 2, Representation::Full).is_err());
    assert!(representation_remainder_nodes(&limited, &p, 64, 128, 2, Representation::Hoelder).is_ok());
}

#[test]
fn field_with_zero_offset_reduces_to_the_frozen_functional() {
    for name in FIELD_NAMES {
        let f = field_by_name(name).unwrap();
        let p = path(f.dim(), 512, 8);
        let frozen = FrozenFieldFunctional::new(field_by_name(name).unwrap(), vec![0.3]);
        for delta in [0.25, -0.25] {
            let a = expand_field(f.as_ref(), &p, &ExpansionQuery::field(0.5, vec![0.3], delta, vec![0.0], 2)).unwrap();
            let b = expand(&frozen, &p, &ExpansionQuery::new(0.5, delta, 2)).unwrap();
            assert_eq!(a.actual, b.actual);
            assert!((a.predicted - b.predicted).abs() < 1e-14, "{name}");
        }
    }
}

#[test]
fn quadratic_field_is_exact_in_space() {
    let f = field_by_name("x2").unwrap();
    let p = path(1, 512, 1);
    for (x, h) in [(0.3, 0.7), (-1.0, 2.5), (0.0, -0.4)] {
        for delta in [0.125, -0.125] {
            let r = expand_field(f.as_ref(), &p, &ExpansionQuery::field(0.5, vec![x], delta, vec![h], 2)).unwrap();
            assert!(r.remainder.abs() < 1e-13, "{}", r.remainder);
        }
    }
}

#[test]
fn seven_term_form_matches_generic_sum() {
    for name in FIELD_NAMES {
        let f = field_by_name(name).unwrap();
        for seed in 0..4 {
            let p = path(f.dim(), 512, seed);
            for delta in [0.125, -0.25] {
                for variant in [Variant::Full, Variant::Symmetrized] {
                    let q = ExpansionQuery::field(0.5, vec![0.2], delta, vec![-0.3], 2);
                    let opts = ExpansionOptions { variant, ..Default::default() };
                    let generic = expand_field_with(f.as_ref(), &p, &q, &opts).unwrap();
                    let fast = expand_field_m2_fast(f.as_ref(), &p, &q, variant).unwrap();
                    assert!(relative_difference(generic.predicted, fast) < 1e-12, "{name} {variant:?}");
                }
            }
        }
    }
}

#[test]
fn field_recursion_is_exact_for_polynomials() {
    for name in ["x2", "poly2"] {
        let f = field_by_name(name).unwrap();
        let p = path(1, 512, 4);
        for m in 1..=2 {
            for h in [0.0, 0.4, -1.3] {
                let q = ExpansionQuery::field(0.5, vec![0.6], 0.125, vec![h], m);
                let r = field_remainder_recursion_residual(f.as_ref(), &p, &q, 2).unwrap();
                assert!(r.abs() <= 1e-10, "{name} m={m} h={h}: {r}");
            }
        }
    }
    let f = field_by_name("x2").unwrap();
    let q = ExpansionQuery::field(0.5, vec![0.6], 0.125, vec![0.3], 0);
    assert!(field_remainder_recursion_residual(f.as_ref(), &path(1, 512, 4), &q, 8).is_err());
}

#[test]
fn field_recursion_converges_with_quadrature_order() {
    let f = field_by_name("transport:sin").unwrap();
    let p = path(1, 512, 4);
    let q = ExpansionQuery::field(0.5, vec![0.6], -0.125, vec![1.5], 2);
    let errs: Vec<f64> = [1, 2, 3, 4].iter().map(|&n| field_remainder_recursion_residual(f.as_ref(), &p, &q, n).unwrap().abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    let r8 = field_remainder_recursion_residual(f.as_ref(), &p, &q, 8).unwrap();
    assert!(r8.abs() < 1e-10, "{r8}");
}
