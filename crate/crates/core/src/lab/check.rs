//! The invariant suite behind `a2lab check`: quadrature agreement,
//! self-similarity, sparseness certificates, operator orderings, and the
//! reverse Holder and subset-mass inequalities on seeded random intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chain::{chain_measure, ChainConfig, ChainInput, MEAN_PRESERVATION_TOLERANCE};
use super::quadrature::integrate_term_numeric;
use super::report::ExperimentReport;
use crate::characteristics::{a_infty_estimate, reverse_holder_check, subset_mass_check, LEMMA_C_SWEEP};
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::logpos::LogPos;
use crate::operators::{
    check_sparse, l2w_norm_sq, sparse_apply, strong_sparse_apply, weak_l2w_norm, FamilySpec, LaminarFamily,
    SupSearchConfig,
};
use crate::piecewise::{integrate_term, Orientation, PiecewisePowerFn, PowerTerm, StepFn};
use crate::weights::{eval_sigma, lacunary_pair, power_pair, WeightPair};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub seed: u64,
    /// Random power terms compared against quadrature.
    pub terms: usize,
    /// Random intervals (and interval pairs) for the inequality checks.
    pub intervals: usize,
    /// Nodes of the A-infinity quadrature.
    pub ainf_grid: usize,
    /// Lacunary parameter of the weight family under test.
    pub lacunary_a: u32,
    /// Exponent parameter of the power pair under test.
    pub power_alpha: f64,
}

impl Default for CheckConfig {
    fn default() -> CheckConfig {
        CheckConfig { seed: 7, terms: 1000, intervals: 100, ainf_grid: 512, lacunary_a: 4, power_alpha: 0.25 }
    }
}

pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// A random power term and an interval inside its validity region, with
/// exponents in `(-0.99, 2]`.
pub fn random_term(rng: &mut impl Rng) -> (PowerTerm, Interval) {
    let p = if rng.gen_bool(0.1) { 0.0 } else { 2.0 - rng.gen::<f64>() * 2.99 };
    let offset = Coord::new(rng.gen_range(-4.0..4.0));
    let coeff = LogPos::from_log2(rng.gen_range(-20.0..20.0));
    let orientation = if rng.gen_bool(0.5) { Orientation::Ascending } else { Orientation::Descending };
    let u_lo = if rng.gen_bool(0.25) { Coord::ZERO } else { Coord::new(rng.gen_range(-30.0f64..2.0).exp2()) };
    let width = Coord::new(rng.gen_range(-40.0f64..2.0).exp2());
    let u_hi = u_lo + width;
    let iv = match orientation {
        Orientation::Ascending => Interval { lo: offset + u_lo, hi: offset + u_hi },
        Orientation::Descending => Interval { lo: offset - u_hi, hi: offset - u_lo },
    };
    (PowerTerm::new(coeff, offset, p, orientation), iv)
}

/// Largest relative disagreement between closed form and quadrature.
pub fn quadrature_agreement(n: usize, rng: &mut impl Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let (term, iv) = random_term(rng);
        if iv.is_empty() {
            continue;
        }
        let exact = integrate_term(&term, iv)?;
        let numeric = integrate_term_numeric(&term, iv)?;
        let rel = ((numeric / exact).log2() * std::f64::consts::LN_2).abs();
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Largest deviation, in units of the last place, from
/// `sigma(x/2) = 2^(1-alpha) sigma(x)` over random `x` in `(1/2, 1)`.
pub fn self_similarity_ulps(pair: &WeightPair, n: usize, rng: &mut impl Rng) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let x = Coord::new(rng.gen_range(0.5..1.0));
        let depth = rng.gen_range(0..2000);
        let x = x.mul_pow2(-depth);
        let lhs = eval_sigma(pair, x.mul_pow2(-1))?.log2();
        let rhs = eval_sigma(pair, x)?.log2() + (1.0 - pair.alpha);
        let ulp = f64::EPSILON * lhs.abs().max(rhs.abs()).max(1.0);
        worst = worst.max((lhs - rhs).abs() / ulp);
    }
    Ok(worst)
}

/// Every breakpoint of either step function, where both are compared.
fn leq_everywhere(lo: &StepFn, hi: &StepFn) -> bool {
    let mut pts: Vec<Coord> = lo.breakpoints().to_vec();
    pts.extend_from_slice(hi.breakpoints());
    pts.iter().all(|&x| lo.eval(x).log2() <= hi.eval(x).log2() + 1e-12)
}

/// A random interval inside `[0, 1)` at a random dyadic scale.
pub fn random_interval(rng: &mut impl Rng, max_scale: i64) -> Interval {
    loop {
        let k = rng.gen_range(0..=max_scale);
        let top = Coord::pow2(-k);
        let lo = top.scale(rng.gen::<f64>());
        let len = top.scale(rng.gen_range(1e-3..1.0));
        let hi = (lo + len).min(Coord::ONE);
        if lo < hi {
            return Interval { lo, hi };
        }
    }
}

/// A union of up to four random subintervals of `q`.
pub fn random_subset(rng: &mut impl Rng, q: Interval) -> Vec<Interval> {
    let n = rng.gen_range(1..=4);
    (0..n)
        .filter_map(|_| {
            let a = Coord::lerp(q.lo, q.hi, rng.gen());
            let b = Coord::lerp(q.lo, q.hi, rng.gen());
            let iv = Interval { lo: a.min(b), hi: a.max(b) };
            (!iv.is_empty()).then_some(iv)
        })
        .collect()
}

/// A-infinity candidates: the unit interval, the first dyadic levels and,
/// for the lacunary weight, the spikes around `2^-(k+1)`.
fn ainf_candidates(pair: &WeightPair) -> Vec<Interval> {
    let mut c = vec![Interval::new(0.0, 1.0)];
    for k in 0..3i64 {
        let lo = Coord::pow2(-k - 1);
        c.push(Interval { lo, hi: Coord::pow2(-k) });
        if pair.self_similar.is_some() {
            c.push(Interval { lo, hi: lo + lo.scale(pair.alpha) });
        }
    }
    c
}

struct InequalityTally {
    ainf: f64,
    holder_passed: usize,
    holder_worst: f64,
    holder_errors: Vec<String>,
    lemma_passed: Vec<usize>,
}

fn inequality_sweep(pair: &WeightPair, cfg: &CheckConfig, rng: &mut impl Rng) -> Result<InequalityTally> {
    let ainf = a_infty_estimate(&pair.w, &ainf_candidates(pair), cfg.ainf_grid)?.value;
    let mut t = InequalityTally {
        ainf,
        holder_passed: 0,
        holder_worst: 0.0,
        holder_errors: Vec::new(),
        lemma_passed: vec![0; LEMMA_C_SWEEP.len()],
    };
    for _ in 0..cfg.intervals {
        let iv = random_interval(rng, 12);
        match reverse_holder_check(&pair.w, iv, ainf) {
            Ok(r) => {
                t.holder_passed += r.passed as usize;
                t.holder_worst = t.holder_worst.max(r.ratio);
            }
            Err(e) => t.holder_errors.push(format!("{iv}: {e}")),
        }
        let q = random_interval(rng, 12);
        let e = random_subset(rng, q);
        for (i, c) in LEMMA_C_SWEEP.iter().enumerate() {
            t.lemma_passed[i] += subset_mass_check(&pair.w, q, &e, *c, ainf)?.passed as usize;
        }
    }
    Ok(t)
}

/// The largest `c` of the sweep passing every pair, if any.
pub fn largest_passing_c(passed: &[usize], total: usize) -> Option<f64> {
    LEMMA_C_SWEEP.iter().zip(passed).filter(|(_, n)| **n == total).map(|(c, _)| *c).reduce(f64::max)
}

pub fn run_checks(cfg: &CheckConfig) -> Result<ExperimentReport> {
    if cfg.terms == 0 || cfg.intervals == 0 {
        return Err(Error::InvalidArgument("check sample sizes must be positive".into()));
    }
    let mut report = ExperimentReport::new("check", "invariant suite", serde_json::json!({ "check": cfg }));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let worst = quadrature_agreement(cfg.terms, &mut rng)?;
    report.assert_within("closed form vs quadrature", worst, 0.0, QUADRATURE_TOLERANCE);

    let lac = lacunary_pair(cfg.lacunary_a, 1e-10)?;
    let pow = power_pair(cfg.power_alpha)?;
    let ulps = self_similarity_ulps(&lac, cfg.terms, &mut rng)?;
    report.assert_within("self-similarity (ulp)", ulps, 0.0, 4.0);

    let nested = FamilySpec::Nested { kmax: 64 };
    let bands = FamilySpec::Bands { a: 6, jmax: 40, kmax: 4 };
    for spec in [nested, bands] {
        let ok = check_sparse(spec.intervals()?, 0.5)?.is_sparse();
        report.assert(&format!("sparse at 1/2: {spec}"), ok, String::new());
    }

    let search = SupSearchConfig::default();
    for spec in [FamilySpec::Nested { kmax: 20 }, FamilySpec::Bands { a: cfg.lacunary_a, jmax: 20, kmax: 3 }] {
        let family = LaminarFamily::new(spec.intervals()?)?;
        let sparse = sparse_apply(&family, &lac.sigma)?;
        let strong = strong_sparse_apply(&family, &lac.sigma, &search)?.step;
        report.assert(&format!("A_S <= A*_S: {spec}"), leq_everywhere(&sparse, &strong), String::new());
        let weak = weak_l2w_norm(&strong, &lac.w)?;
        let l2 = l2w_norm_sq(&strong, &lac.w)?;
        let ok = (weak * weak).log2() <= l2.log2() + 1e-12;
        report.assert(&format!("weak <= strong: {spec}"), ok, format!("{} vs {}", (weak * weak).log2(), l2.log2()));
    }

    for (name, pair) in [("power", &pow), ("lacunary", &lac)] {
        let t = inequality_sweep(pair, cfg, &mut rng)?;
        report.assert(
            &format!("reverse Holder: {name}"),
            t.holder_passed == cfg.intervals && t.holder_errors.is_empty(),
            format!(
                "ainf {:.4}, {}/{} passed, worst ratio {:.4}{}",
                t.ainf,
                t.holder_passed,
                cfg.intervals,
                t.holder_worst,
                if t.holder_errors.is_empty() { String::new() } else { format!(", errors {:?}", t.holder_errors) }
            ),
        );
        let c = largest_passing_c(&t.lemma_passed, cfg.intervals);
        report.assert(
            &format!("subset mass: {name}"),
            c.is_some(),
            format!("passes per c {:?} of {}, largest c passing all {c:?}", t.lemma_passed, cfg.intervals),
        );
    }

    let chain_cfg = ChainConfig { kmax: Some(24), grid: 2000, ..ChainConfig::default() };
    for input in [ChainInput::Sigma, ChainInput::One] {
        let g: PiecewisePowerFn = input.build(&pow)?;
        let m = chain_measure(&pow, &g, 24, &chain_cfg)?;
        report.assert_within(
            &format!("mean preservation: {}", input.name()),
            m.mean_preservation,
            0.0,
            MEAN_PRESERVATION_TOLERANCE,
        );
        report.assert(
            &format!("domination: {}", input.name()),
            m.domination_chain.is_finite(),
            format!("C = {}", m.domination_chain),
        );
    }
    report.finish();
    Ok(report)
}
