mod common;

use a2lab_core::operators::{
    band_member, check_sparse, hl_maximal_at, l2w_norm_sq, maximal_over_containing, sparse_apply,
    strong_sparse_apply, weak_l2w_norm, FamilySpec, LaminarFamily, Sparseness, SupSearchConfig,
};
use a2lab_core::weights::{lacunary_pair, power_pair, tail_integrals};
use a2lab_core::{Coord, Error, Interval, LogPos, Orientation, PiecewisePowerFn, PowerTerm, StepFn};
use common::{iv, rel_err, ulps};
use proptest::prelude::*;

fn lp(x: f64) -> LogPos {
    LogPos::from_f64(x).unwrap()
}

fn nested(kmax: u64) -> LaminarFamily {
    LaminarFamily::new(FamilySpec::Nested { kmax }.intervals().unwrap()).unwrap()
}

fn unit_indicator() -> PiecewisePowerFn {
    PiecewisePowerFn::constant(iv(0.0, 1.0), LogPos::ONE).unwrap()
}

#[test]
fn check_sparse_examples() {
    let Sparseness::Sparse(s) = check_sparse(FamilySpec::Nested { kmax: 40 }.intervals().unwrap(), 0.5).unwrap() else {
        panic!("nested family should be sparse");
    };
    for (i, iv) in s.intervals().iter().enumerate() {
        let k = -iv.hi.exponent();
        let want = if k == 40 { *iv } else { Interval { lo: Coord::pow2(-k - 1), hi: Coord::pow2(-k) } };
        assert_eq!(s.certificate[i], vec![want]);
    }

    let bands = FamilySpec::Bands { a: 6, jmax: 40, kmax: 5 }.intervals().unwrap();
    let alpha = 1.0 / 64.0;
    let verdict = check_sparse(bands.clone(), 0.5).unwrap();
    assert!(verdict.is_sparse());
    // Each band stays inside the top alpha fraction of its dyadic level.
    for b in &bands {
        let k = -b.hi.exponent();
        assert!(b.lo >= Coord::new(1.0 - alpha).mul_pow2(-k));
    }

    let dup = check_sparse(vec![iv(0.0, 1.0), iv(0.0, 1.0)], 1e-9).unwrap();
    assert!(matches!(dup, Sparseness::NotSparse { residual_fraction, .. } if residual_fraction == 0.0));

    let overlap = check_sparse(vec![iv(0.0, 0.5), iv(0.25, 1.0)], 0.5);
    assert!(matches!(overlap, Err(Error::UnsupportedFamily(_))));
}

#[test]
fn maximal_of_an_indicator() {
    let r = maximal_over_containing(&unit_indicator(), iv(0.0, 1.0), &SupSearchConfig::default()).unwrap();
    assert_eq!(r.value, LogPos::ONE);
    assert_eq!(r.attaining, iv(0.0, 1.0));
}

#[test]
fn maximal_on_lacunary_bands() {
    let a = 4;
    let pair = lacunary_pair(a, 1e-10).unwrap();
    let cfg = SupSearchConfig::default();
    for k in 1..=6i64 {
        let (_, tail) = tail_integrals(&pair, k as u64).unwrap();
        let scale = tail * LogPos::pow2(k as f64);
        for extra in [0, 5, 20] {
            let b = band_member(k, k + a as i64 + extra);
            let r = maximal_over_containing(&pair.sigma, b, &cfg).unwrap();
            let ratio = (r.value / scale).log2();
            assert!(ratio.abs() <= 2.0, "k = {k}, j offset {extra}: log2 ratio {ratio}");
            assert!(r.attaining.contains(&b));
            // [0, 2^-k) contains the band, so its average is a floor, up to
            // the truncated tail mass of the explicit pieces.
            assert!(r.value.log2() >= scale.log2() - 1e-9);
        }
    }
}

#[test]
fn maximal_of_a_decreasing_power_extends_to_zero() {
    let alpha = 0.25;
    let w = power_pair(alpha).unwrap().w;
    for t in [0.125, 1.0 / 64.0, 2f64.powi(-20)] {
        let b = iv(t, 2.0 * t);
        let r = maximal_over_containing(&w, b, &SupSearchConfig::default()).unwrap();
        let want = lp((2.0 * t).powf(alpha - 1.0) / alpha);
        assert!(rel_err(r.value, want) < 1e-12, "t = {t}: {} vs {want}", r.value);
        assert_eq!(r.attaining, iv(0.0, 2.0 * t));
    }
}

#[test]
fn hl_maximal_examples() {
    let f = unit_indicator();
    let cfg = SupSearchConfig::default();
    let r = hl_maximal_at(&f, Coord::new(0.5), None, &cfg).unwrap();
    assert_eq!(r.value, LogPos::ONE);
    // Any interval reaching x = 2 from inside [0, 1) has average at most 1/2.
    let r = hl_maximal_at(&f, Coord::new(2.0), None, &cfg).unwrap();
    assert!((r.value.to_f64() - 0.5).abs() < 1e-9, "{}", r.value);
    assert!(r.value.to_f64() <= 0.5 + 1e-15);
}

#[test]
fn seeded_point_maximal_dominates_interval_maximal() {
    let pair = lacunary_pair(3, 1e-10).unwrap();
    let cfg = SupSearchConfig::default();
    for k in 1..=4 {
        let b = band_member(k, k + 5);
        let m = maximal_over_containing(&pair.sigma, b, &cfg).unwrap();
        for t in [0.0, 0.3, 0.9] {
            let x = Coord::lerp(b.lo, b.hi, t);
            let r = hl_maximal_at(&pair.sigma, x, Some(m.attaining), &cfg).unwrap();
            assert!(r.value >= m.value);
        }
    }
}

#[test]
fn sparse_apply_examples() {
    let n = 10;
    let h = sparse_apply(&nested(n), &unit_indicator()).unwrap();
    for k in 1..n as i64 {
        let x = Coord::new(0.75).mul_pow2(-k);
        assert!(rel_err(h.eval(x), lp(k as f64)) < 1e-15);
    }
    assert_eq!(h.eval(Coord::new(0.75)), LogPos::ZERO);
    assert!(rel_err(h.eval(Coord::pow2(-30)), lp(n as f64)) < 1e-15);

    let empty = LaminarFamily::new(Vec::new()).unwrap();
    assert!(sparse_apply(&empty, &unit_indicator()).unwrap().is_zero());

    let w = power_pair(0.5).unwrap().w;
    let a = iv(0.25, 1.0);
    let single = sparse_apply(&LaminarFamily::new(vec![a]).unwrap(), &w).unwrap();
    assert_eq!(single, StepFn::constant(a, w.average(a).unwrap()));
}

#[test]
fn strong_sparse_apply_examples() {
    let single = LaminarFamily::new(vec![iv(0.0, 1.0)]).unwrap();
    let s = strong_sparse_apply(&single, &unit_indicator(), &SupSearchConfig::default()).unwrap();
    assert_eq!(s.step, StepFn::indicator(iv(0.0, 1.0)));

    let a = 4u32;
    let pair = lacunary_pair(a, 1e-10).unwrap();
    let alpha = pair.alpha;
    let spec = FamilySpec::Bands { a, jmax: 12, kmax: 4 };
    let family = LaminarFamily::new(spec.intervals().unwrap()).unwrap();
    let strong = strong_sparse_apply(&family, &pair.sigma, &SupSearchConfig::default()).unwrap();
    let plain = sparse_apply(&family, &pair.sigma).unwrap();
    let (_, s0) = tail_integrals(&pair, 0).unwrap();
    for (i, b) in family.intervals().iter().enumerate() {
        let k = -b.hi.exponent();
        // M_k against 2^(k(1-alpha)) times the level 0 scale.
        let model = LogPos::pow2(k as f64 * (1.0 - alpha)) * s0;
        let ratio = (strong.maxima[i].value / model).log2();
        assert!(ratio.abs() <= 2.0, "member {b}: log2 ratio {ratio}");
    }
    assert_eq!(strong.step.breakpoints(), plain.breakpoints());
    for (s, p) in strong.step.values().iter().zip(plain.values()) {
        assert!(*s >= *p);
    }
}

#[test]
fn l2w_examples() {
    let alpha = 0.25;
    let w = power_pair(alpha).unwrap().w;
    let one = StepFn::indicator(iv(0.0, 1.0));
    assert!(rel_err(l2w_norm_sq(&one, &w).unwrap(), lp(1.0 / alpha)) < 1e-15);
    assert_eq!(l2w_norm_sq(&StepFn::zero(), &w).unwrap(), LogPos::ZERO);

    // The counting function of the nested family: frozen references.
    for (n, want) in [(10, 126.623_383_242_844_47), (40, 242.718_203_709_597_13)] {
        let h = sparse_apply(&nested(n), &unit_indicator()).unwrap();
        let got = l2w_norm_sq(&h, &w).unwrap();
        assert!(rel_err(got, lp(want)) < 1e-13, "N = {n}: {got}");
    }

    // With enough levels the sum is the closed form of sum n^2 r^n.
    let r = (-alpha).exp2();
    let limit = (1.0 - r) * r * (1.0 + r) / (alpha * (1.0 - r).powi(3));
    let h = sparse_apply(&nested(300), &unit_indicator()).unwrap();
    assert!(rel_err(l2w_norm_sq(&h, &w).unwrap(), lp(limit)) < 1e-12);
}

#[test]
fn weak_examples() {
    let alpha = 0.25;
    let w = power_pair(alpha).unwrap().w;
    for c in [0.5, 3.0, 1e6] {
        let h = StepFn::constant(iv(0.0, 1.0), lp(c));
        let want = lp(c) * lp(1.0 / alpha).sqrt();
        assert!(rel_err(weak_l2w_norm(&h, &w).unwrap(), want) < 1e-15);
    }
    // max_n n^2 w([0, 2^-n)) = n^2 2^(-n alpha) / alpha, at n = 10 and at n = 12.
    for (n, want) in [(10, 70.710_678_118_654_752), (40, 72.0)] {
        let h = sparse_apply(&nested(n), &unit_indicator()).unwrap();
        let got = weak_l2w_norm(&h, &w).unwrap();
        assert!(rel_err(got * got, lp(want)) < 1e-13, "N = {n}: {got}");
    }
}

/// Dyadic subintervals of `[0, 1)`, which are laminar by construction.
fn dyadic_family() -> impl Strategy<Value = Vec<Interval>> {
    prop::collection::vec((0i64..6, 0u64..64), 1..12).prop_map(|v| {
        let mut out: Vec<Interval> = v
            .into_iter()
            .map(|(level, m)| {
                let m = (m % (1u64 << level)) as f64;
                Interval { lo: Coord::new(m).mul_pow2(-level), hi: Coord::new(m + 1.0).mul_pow2(-level) }
            })
            .collect();
        out.sort_by(|a, b| a.lo.cmp(&b.lo).then(a.hi.cmp(&b.hi)));
        out.dedup();
        out
    })
}

/// `x^p` on `[0, 2)` times a positive step with four cells.
fn weighted_power() -> impl Strategy<Value = PiecewisePowerFn> {
    (-0.9f64..1.5, prop::collection::vec(-6.0f64..6.0, 4)).prop_map(|(p, logs)| {
        let f = PiecewisePowerFn::single(iv(0.0, 2.0), PowerTerm::new(LogPos::ONE, Coord::ZERO, p, Orientation::Ascending))
            .unwrap();
        let bps = vec![Coord::ZERO, Coord::new(0.3), Coord::new(0.7), Coord::new(1.1), Coord::new(2.0)];
        let step = StepFn::new(bps, logs.into_iter().map(LogPos::from_log2).collect()).unwrap();
        f.multiply_step(&step)
    })
}

fn quick() -> SupSearchConfig {
    SupSearchConfig { refinement_depth: 24, ..SupSearchConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_dominates_plain_cellwise(ivs in dyadic_family(), f in weighted_power()) {
        let family = LaminarFamily::new(ivs).unwrap();
        let plain = sparse_apply(&family, &f).unwrap();
        let strong = strong_sparse_apply(&family, &f, &quick()).unwrap();
        prop_assert_eq!(plain.breakpoints(), strong.step.breakpoints());
        for (s, p) in strong.step.values().iter().zip(plain.values()) {
            prop_assert!(*s >= *p, "{} < {}", s, p);
        }
    }

    #[test]
    fn weak_norm_is_below_strong_norm(
        logs in prop::collection::vec(-20.0f64..20.0, 1..10),
        alpha in 0.01f64..1.0,
    ) {
        let bps: Vec<Coord> = (0..=logs.len()).map(|i| Coord::new(i as f64 / logs.len() as f64 * 1.5)).collect();
        let h = StepFn::new(bps, logs.into_iter().map(LogPos::from_log2).collect()).unwrap();
        let w = power_pair(alpha).unwrap().w;
        let weak = weak_l2w_norm(&h, &w).unwrap();
        let strong = l2w_norm_sq(&h, &w).unwrap();
        prop_assert!((weak * weak).log2() <= strong.log2() + 1e-12);
    }

    #[test]
    fn operators_commute_with_scaling(ivs in dyadic_family(), f in weighted_power(), lc in -30.0f64..30.0) {
        let c = LogPos::from_log2(lc);
        let family = LaminarFamily::new(ivs).unwrap();
        let g = f.scale(c);
        // Each member's value is exactly c times the unscaled one; the
        // overlay then sums members, which rounds once per addition.
        let close = |x: &StepFn, y: &StepFn| {
            x.breakpoints() == y.breakpoints()
                && x.values().iter().zip(y.values()).all(|(a, b)| a == b || ulps(a.log2(), b.log2()) <= 8.0)
        };
        let plain = sparse_apply(&family, &f).unwrap().map_values(|v| v * c);
        prop_assert!(close(&sparse_apply(&family, &g).unwrap(), &plain));
        let s0 = strong_sparse_apply(&family, &f, &quick()).unwrap();
        let s1 = strong_sparse_apply(&family, &g, &quick()).unwrap();
        for (m0, m1) in s0.maxima.iter().zip(&s1.maxima) {
            prop_assert_eq!(m0.value * c, m1.value);
            prop_assert_eq!(m0.attaining, m1.attaining);
        }
        for &a in family.intervals() {
            prop_assert_eq!(f.average(a).unwrap() * c, g.average(a).unwrap());
        }
        prop_assert!(close(&s1.step, &s0.step.map_values(|v| v * c)));
    }

    #[test]
    fn larger_budgets_never_lower_the_maximal(f in weighted_power(), lo in 0.0f64..1.5, len in 1e-6f64..0.4) {
        let b = iv(lo, lo + len);
        let small = SupSearchConfig { refinement_depth: 4, max_rounds: 1, ..SupSearchConfig::default() };
        let large = SupSearchConfig { refinement_depth: 64, max_rounds: 8, ..SupSearchConfig::default() };
        let s = maximal_over_containing(&f, b, &small).unwrap();
        let l = maximal_over_containing(&f, b, &large).unwrap();
        prop_assert!(l.value >= s.value, "{} < {}", l.value, s.value);
    }

    #[test]
    fn point_maximal_dominates_every_member(ivs in dyadic_family(), f in weighted_power(), t in 0.0f64..1.0) {
        let family = LaminarFamily::new(ivs).unwrap();
        let strong = strong_sparse_apply(&family, &f, &quick()).unwrap();
        for (a, m) in family.intervals().iter().zip(&strong.maxima) {
            let x = Coord::lerp(a.lo, a.hi, t);
            let r = hl_maximal_at(&f, x, Some(m.attaining), &quick()).unwrap();
            prop_assert!(r.value >= m.value);
        }
    }
}
