//! Weight families and Muckenhoupt-class machinery: A_p / A_1 / A_inf
//! characteristics, doubling and comparability, the multiple A_P condition,
//! reverse Holder probing, and the refinement-based stability proxy that
//! stands in for "the characteristic is finite".

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_average, integrate, BallFamily, Grid, Region, SampledFunction};

/// Closed-form BMO symbols usable inside `exp_bmo` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BmoSymbol {
    /// `b(x) = scale * log|x|`.
    LogAbs { scale: f64 },
}

impl BmoSymbol {
    pub fn eval(&self, x: [f64; 2], n: usize) -> f64 {
        match self {
            BmoSymbol::LogAbs { scale } => scale * norm(x, n).ln(),
        }
    }
}

/// Anchor/exponent pair of a power factor `|x - a|^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub anchor: [f64; 2],
    pub alpha: f64,
}

/// Positive weight with a closed-form evaluator.
///
/// The `exp_bmo` family takes `eta` as a free parameter; the smallness bound
/// on `eta * ||b||_*` that makes `e^{eta b}` an A_p weight analytically is
/// recorded here as documentation and deliberately not enforced, so that the
/// harness can observe what happens outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant { c: f64 },
    Power { c: f64, terms: Vec<PowerTerm> },
    ExpBmo { eta: f64, b: BmoSymbol },
    /// Pointwise product `prod w_i^{e_i}`; the form of `nu_w`.
    Product { factors: Vec<(Weight, f64)> },
}

fn norm(x: [f64; 2], n: usize) -> f64 {
    if n == 1 {
        x[0].abs()
    } else {
        x[0].hypot(x[1])
    }
}

impl Weight {
    pub fn one() -> Weight {
        Weight::Constant { c: 1.0 }
    }

    /// `|x|^alpha` centered at the origin.
    pub fn origin_power(alpha: f64) -> Weight {
        Weight::Power { c: 1.0, terms: vec![PowerTerm { anchor: [0.0, 0.0], alpha }] }
    }

    pub fn eval(&self, x: [f64; 2], n: usize) -> f64 {
        match self {
            Weight::Constant { c } => *c,
            Weight::Power { c, terms } => {
                let mut v = *c;
                for t in terms {
                    let d = norm([x[0] - t.anchor[0], x[1] - t.anchor[1]], n);
                    v *= d.powf(t.alpha);
                }
                v
            }
            Weight::ExpBmo { eta, b } => (eta * b.eval(x, n)).exp(),
            Weight::Product { factors } => {
                factors.iter().map(|(w, e)| w.eval(x, n).powf(*e)).product()
            }
        }
    }

    /// Evaluates on every grid sample, rejecting non-finite or non-positive
    /// values ("weight singular on sample").
    pub fn sample(&self, grid: &Arc<Grid>) -> Result<SampledFunction> {
        let n = grid.dimension();
        let mut values = Vec::with_capacity(grid.sample_count());
        for i in 0..grid.sample_count() {
            let x = grid.point(i);
            let v = self.eval(x, n);
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::WeightSingular { at: x });
            }
            values.push(v);
        }
        SampledFunction::new(grid.clone(), values)
    }

    /// `w^e` as a new weight.
    pub fn pow(&self, e: f64) -> Weight {
        Weight::Product { factors: vec![(self.clone(), e)] }
    }

    /// Total origin exponent when the weight is a pure origin-centered power
    /// (possibly a product of such); the analytic classifier keys off this.
    pub fn origin_power_exponent(&self) -> Option<f64> {
        match self {
            Weight::Constant { .. } => Some(0.0),
            Weight::Power { terms, .. } => {
                let mut total = 0.0;
                for t in terms {
                    if t.anchor != [0.0, 0.0] {
                        return None;
                    }
                    total += t.alpha;
                }
                Some(total)
            }
            Weight::ExpBmo { eta, b } => match b {
                BmoSymbol::LogAbs { scale } => Some(eta * scale),
            },
            Weight::Product { factors } => {
                let mut total = 0.0;
                for (w, e) in factors {
                    total += e * w.origin_power_exponent()?;
                }
                Some(total)
            }
        }
    }
}

/// Analytic A_p membership of `|x|^alpha` on R^n: for p > 1 the range is
/// `-n < alpha < n(p-1)`; for p = 1 it is `-n < alpha <= 0`.
pub fn power_in_ap(alpha: f64, n: usize, p: f64) -> bool {
    let n = n as f64;
    if p > 1.0 {
        -n < alpha && alpha < n * (p - 1.0)
    } else {
        -n < alpha && alpha <= 0.0
    }
}

/// Weight vector with exponent vector `P = (p_1, ..., p_m)`.
#[derive(Debug, Clone)]
pub struct MultiWeight {
    weights: Vec<Weight>,
    exponents: Vec<f64>,
}

impl MultiWeight {
    pub fn new(weights: Vec<Weight>, exponents: Vec<f64>) -> Result<MultiWeight> {
        if weights.is_empty() || weights.len() != exponents.len() {
            return Err(Error::InvalidArgument(
                "need m >= 1 weights with matching exponents".into(),
            ));
        }
        if exponents.iter().any(|&p| p < 1.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument("each p_k must lie in [1, inf)".into()));
        }
        Ok(MultiWeight { weights, exponents })
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `1/p = sum 1/p_k`.
    pub fn p(&self) -> f64 {
        1.0 / self.exponents.iter().map(|p| 1.0 / p).sum::<f64>()
    }

    /// `nu_w = prod w_k^{p/p_k}`.
    pub fn nu_weight(&self) -> Weight {
        let p = self.p();
        Weight::Product {
            factors: self
                .weights
                .iter()
                .zip(&self.exponents)
                .map(|(w, pk)| (w.clone(), p / pk))
                .collect(),
        }
    }
}

/// `w(B) = int_B w`, strictly positive for admissible weights.
pub fn weighted_measure(w: &SampledFunction, ball: &crate::lattice::Ball) -> Result<f64> {
    integrate(w, Region::Ball(ball))
}

fn ball_min(f: &SampledFunction, ball: &crate::lattice::Ball) -> Result<f64> {
    let grid = f.grid();
    let mut m = f64::INFINITY;
    grid.visit_ball(ball, |i, _| m = m.min(f.value(i)));
    if m.is_infinite() {
        return Err(Error::EmptyRegion);
    }
    Ok(m)
}

/// A characteristic value together with the per-family suprema of its
/// constituent ball averages (taken before any root is applied). The
/// constituents are what actually diverge for out-of-class weights; the
/// rooted characteristic can grow arbitrarily slowly.
#[derive(Debug, Clone)]
pub struct CharParts {
    pub value: f64,
    pub parts: Vec<f64>,
}

fn ap_char_parts(w: &Weight, p: f64, grid: &Arc<Grid>, family: &BallFamily) -> Result<CharParts> {
    if p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let ws = w.sample(grid)?;
    let mut sup = 0.0f64;
    let mut max_fwd = 0.0f64;
    let mut max_dual = 0.0f64;
    if (p - 1.0).abs() < 1e-12 {
        // A_1: average against the in-ball minimum.
        for b in family.balls() {
            let avg = ball_average(&ws, b)?;
            let dual = 1.0 / ball_min(&ws, b)?;
            sup = sup.max(avg * dual);
            max_fwd = max_fwd.max(avg);
            max_dual = max_dual.max(dual);
        }
    } else {
        let pc = p / (p - 1.0);
        let dual_sampled = ws.map(|v| v.powf(-pc / p))?;
        for b in family.balls() {
            let avg = ball_average(&ws, b)?;
            let davg = ball_average(&dual_sampled, b)?;
            sup = sup.max(avg.powf(1.0 / p) * davg.powf(1.0 / pc));
            max_fwd = max_fwd.max(avg);
            max_dual = max_dual.max(davg);
        }
    }
    Ok(CharParts { value: sup, parts: vec![max_fwd, max_dual] })
}

/// `sup_F (avg_B w)^{1/p} (avg_B w^{-p'/p})^{1/p'}`; the A_1 form for p = 1.
pub fn ap_characteristic(w: &Weight, p: f64, grid: &Arc<Grid>, family: &BallFamily) -> Result<f64> {
    Ok(ap_char_parts(w, p, grid, family)?.value)
}

fn ainf_char_parts(w: &Weight, grid: &Arc<Grid>, family: &BallFamily) -> Result<CharParts> {
    let ws = w.sample(grid)?;
    let logs = ws.map(f64::ln)?;
    let mut sup = 0.0f64;
    let mut max_avg = 0.0f64;
    let mut max_inv_geo = 0.0f64;
    for b in family.balls() {
        let avg = ball_average(&ws, b)?;
        let geo = ball_average(&logs, b)?.exp();
        sup = sup.max(avg / geo);
        max_avg = max_avg.max(avg);
        max_inv_geo = max_inv_geo.max(1.0 / geo);
    }
    Ok(CharParts { value: sup, parts: vec![max_avg, max_inv_geo] })
}

/// Reverse-Jensen ratio `sup_F (avg_B w) / exp(avg_B log w)`; at least 1 up
/// to quadrature error.
pub fn ainf_characteristic(w: &Weight, grid: &Arc<Grid>, family: &BallFamily) -> Result<f64> {
    Ok(ainf_char_parts(w, grid, family)?.value)
}

/// Doubling constant `sup_F w(2B)/w(B)` and comparability exponent estimate:
/// min over same-center pairs of `log(w(E)/w(B)) / log(|E|/|B|)`, clamped to
/// `[0, inf)`.
pub fn doubling_and_comparability(
    w: &Weight,
    grid: &Arc<Grid>,
    family: &BallFamily,
) -> Result<(f64, f64)> {
    let ws = w.sample(grid)?;
    let mut doubling = 0.0f64;
    let mut delta = f64::INFINITY;
    let balls = family.balls();
    for b in balls {
        let wb = weighted_measure(&ws, b)?;
        let w2b = weighted_measure(&ws, &b.scaled(2.0))?;
        doubling = doubling.max(w2b / wb);
    }
    for outer in balls {
        let w_outer = weighted_measure(&ws, outer)?;
        let m_outer = grid.ball_measure(outer);
        for inner in balls {
            if inner.center != outer.center || inner.radius >= outer.radius {
                continue;
            }
            let w_inner = weighted_measure(&ws, inner)?;
            let m_inner = grid.ball_measure(inner);
            if m_inner >= m_outer {
                continue;
            }
            let ratio = (w_inner / w_outer).ln() / (m_inner / m_outer).ln();
            delta = delta.min(ratio);
        }
    }
    if !delta.is_finite() {
        delta = 0.0;
    }
    Ok((doubling, delta.max(0.0)))
}

fn multi_ap_char_parts(
    mw: &MultiWeight,
    grid: &Arc<Grid>,
    family: &BallFamily,
) -> Result<CharParts> {
    let p = mw.p();
    let nu = mw.nu_weight().sample(grid)?;
    let m = mw.arity();
    let mut sampled = Vec::with_capacity(m);
    for (w, &pk) in mw.weights().iter().zip(mw.exponents()) {
        if (pk - 1.0).abs() < 1e-12 {
            sampled.push((w.sample(grid)?, None));
        } else {
            let pkc = pk / (pk - 1.0);
            sampled.push((w.sample(grid)?.map(|v| v.powf(-pkc / pk))?, Some(pkc)));
        }
    }
    let mut sup = 0.0f64;
    let mut parts = vec![0.0f64; m + 1];
    for b in family.balls() {
        let nu_avg = ball_average(&nu, b)?;
        let mut product = nu_avg.powf(1.0 / p);
        parts[0] = parts[0].max(nu_avg);
        for (k, (ws, pkc)) in sampled.iter().enumerate() {
            let factor = match pkc {
                // p_k = 1: the dual average degenerates to (inf_B w_k)^{-1},
                // realized as the minimum over samples.
                None => 1.0 / ball_min(ws, b)?,
                Some(pkc) => ball_average(ws, b)?.powf(1.0 / pkc),
            };
            let raw = match pkc {
                None => factor,
                Some(_) => ball_average(ws, b)?,
            };
            parts[k + 1] = parts[k + 1].max(raw);
            product *= factor;
        }
        sup = sup.max(product);
    }
    Ok(CharParts { value: sup, parts })
}

/// The multiple A_P characteristic of Eq.-style
/// `sup_F (avg_B nu_w)^{1/p} prod_k (avg_B w_k^{-p'_k/p_k})^{1/p'_k}`.
pub fn multi_ap_characteristic(
    mw: &MultiWeight,
    grid: &Arc<Grid>,
    family: &BallFamily,
) -> Result<f64> {
    Ok(multi_ap_char_parts(mw, grid, family)?.value)
}

/// Default growth cap on the rooted characteristic across the probe.
pub const STABILITY_CHAR_FACTOR: f64 = 2.0;
/// Default growth cap on the worst constituent ball average across the probe.
pub const STABILITY_DIVERGENCE_FACTOR: f64 = 10.0;
/// Joint refinements performed by the probe (each halves h and extends the
/// dyadic radius ladder one step toward the singularity).
pub const STABILITY_STEPS: usize = 3;

/// Refinement record for one characteristic.
///
/// A characteristic is reported stable when, across `STABILITY_STEPS` joint
/// refinements, the rooted value grows by less than `char_factor` and the
/// worst constituent average grows by less than `divergence_factor`. Both
/// clauses are needed: for mildly out-of-class weights the rooted value can
/// grow like a fractional power of the lattice ratio while the constituent
/// average that the closed-form oracle says diverges grows at full rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub values: Vec<f64>,
    pub char_growth: f64,
    pub divergence_growth: f64,
    pub stable: bool,
}

impl StabilityReport {
    pub fn base_value(&self) -> f64 {
        self.values[0]
    }
}

/// Runs `eval` on the base grid and `steps` refinements; `eval` returns the
/// characteristic and its constituent suprema and is expected to rebuild its
/// ball family per grid (refining extends the dyadic ladder downward).
pub fn stability_probe(
    grid: &Arc<Grid>,
    steps: usize,
    char_factor: f64,
    divergence_factor: f64,
    eval: impl Fn(&Arc<Grid>) -> Result<CharParts>,
) -> Result<StabilityReport> {
    let mut g = grid.clone();
    let base = eval(&g)?;
    let mut values = vec![base.value];
    let mut last = base;
    for _ in 0..steps {
        g = Arc::new(g.refine());
        last = eval(&g)?;
        values.push(last.value);
    }
    let base_parts = eval(grid)?;
    let char_growth = values[values.len() - 1] / values[0];
    let divergence_growth = base_parts
        .parts
        .iter()
        .zip(&last.parts)
        .map(|(b, l)| l / b)
        .fold(0.0f64, f64::max);
    Ok(StabilityReport {
        values,
        char_growth,
        divergence_growth,
        stable: char_growth < char_factor && divergence_growth < divergence_factor,
    })
}

/// Stability of the A_p characteristic of `w` on the origin-centered dyadic
/// ladder (where power-weight degeneracy lives).
pub fn ap_stability(w: &Weight, p: f64, grid: &Arc<Grid>) -> Result<StabilityReport> {
    stability_probe(
        grid,
        STABILITY_STEPS,
        STABILITY_CHAR_FACTOR,
        STABILITY_DIVERGENCE_FACTOR,
        |g| ap_char_parts(w, p, g, &BallFamily::origin_dyadic(g)),
    )
}

/// Stability of the reverse-Jensen A_inf ratio on the origin ladder.
pub fn ainf_stability(w: &Weight, grid: &Arc<Grid>) -> Result<StabilityReport> {
    stability_probe(
        grid,
        STABILITY_STEPS,
        STABILITY_CHAR_FACTOR,
        STABILITY_DIVERGENCE_FACTOR,
        |g| ainf_char_parts(w, g, &BallFamily::origin_dyadic(g)),
    )
}

/// Stability of the multiple A_P characteristic on the origin ladder.
pub fn multi_ap_stability(mw: &MultiWeight, grid: &Arc<Grid>) -> Result<StabilityReport> {
    stability_probe(
        grid,
        STABILITY_STEPS,
        STABILITY_CHAR_FACTOR,
        STABILITY_DIVERGENCE_FACTOR,
        |g| multi_ap_char_parts(mw, g, &BallFamily::origin_dyadic(g)),
    )
}

/// Lemma-style equivalence check: the multiple A_P verdict against the
/// conjunction of `nu_w in A_{mp}` and `w_k^{1-p'_k} in A_{mp'_k}` (the case
/// p_k = 1 read as `w_k^{1/m} in A_1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaMultiReport {
    pub multi: StabilityReport,
    pub nu: StabilityReport,
    pub duals: Vec<StabilityReport>,
    pub agreement: bool,
}

pub fn check_lemma_multi(
    mw: &MultiWeight,
    grid: &Arc<Grid>,
    divergence_factor: f64,
) -> Result<LemmaMultiReport> {
    let m = mw.arity() as f64;
    let p = mw.p();
    let probe = |w: &Weight, q: f64| -> Result<StabilityReport> {
        stability_probe(grid, STABILITY_STEPS, STABILITY_CHAR_FACTOR, divergence_factor, |g| {
            ap_char_parts(w, q, g, &BallFamily::origin_dyadic(g))
        })
    };
    let multi = stability_probe(grid, STABILITY_STEPS, STABILITY_CHAR_FACTOR, divergence_factor, |g| {
        multi_ap_char_parts(mw, g, &BallFamily::origin_dyadic(g))
    })?;
    let nu = probe(&mw.nu_weight(), m * p)?;
    let mut duals = Vec::new();
    for (w, &pk) in mw.weights().iter().zip(mw.exponents()) {
        let report = if (pk - 1.0).abs() < 1e-12 {
            probe(&w.pow(1.0 / m), 1.0)?
        } else {
            let pkc = pk / (pk - 1.0);
            probe(&w.pow(1.0 - pkc), m * pkc)?
        };
        duals.push(report);
    }
    let rhs = nu.stable && duals.iter().all(|d| d.stable);
    Ok(LemmaMultiReport { agreement: multi.stable == rhs, multi, nu, duals })
}

/// Largest `s` in `s_grid` whose reverse-Holder ratio
/// `sup_F (avg w^s)^{1/s} / (avg w)` stays below `threshold` and survives the
/// refinement probe; `None` when no grid member qualifies.
pub fn reverse_holder_exponent(
    w: &Weight,
    grid: &Arc<Grid>,
    s_grid: &[f64],
    threshold: f64,
) -> Result<Option<f64>> {
    let mut best = None;
    for &s in s_grid {
        if s <= 1.0 {
            return Err(Error::InvalidArgument(format!("reverse Holder exponent s = {s} <= 1")));
        }
        let report = stability_probe(
            grid,
            STABILITY_STEPS,
            STABILITY_CHAR_FACTOR,
            STABILITY_DIVERGENCE_FACTOR,
            |g| {
                let ws = w.sample(g)?;
                let pow = ws.map(|v| v.powf(s))?;
                let family = BallFamily::origin_dyadic(g);
                let mut sup = 0.0f64;
                let mut max_pow_avg = 0.0f64;
                for b in family.balls() {
                    let num = ball_average(&pow, b)?;
                    let den = ball_average(&ws, b)?;
                    sup = sup.max(num.powf(1.0 / s) / den);
                    max_pow_avg = max_pow_avg.max(num);
                }
                Ok(CharParts { value: sup, parts: vec![max_pow_avg] })
            },
        )?;
        if report.stable && report.base_value() < threshold {
            best = Some(s);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h_exp: i32) -> Arc<Grid> {
        Arc::new(Grid::new(1, 1.0, 2f64.powi(h_exp)).unwrap())
    }

    #[test]
    fn constant_weight_characteristics_are_one() {
        let g = grid(-7);
        let fam = BallFamily::dyadic(&g, 16);
        let w = Weight::one();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let c = ap_characteristic(&w, p, &g, &fam).unwrap();
            assert!((c - 1.0).abs() < 1e-9, "p={p}: {c}");
        }
        let c = ainf_characteristic(&w, &g, &fam).unwrap();
        assert!((c - 1.0).abs() < 1e-9);
        let mw = MultiWeight::new(vec![Weight::one(), Weight::one()], vec![1.0, 1.0]).unwrap();
        let c = multi_ap_characteristic(&mw, &g, &fam).unwrap();
        assert!((c - 1.0).abs() < 1e-9, "A_(1,1) of ones: {c}");
    }

    #[test]
    fn sqrt_power_a2_matches_closed_form() {
        // (avg |x|^{1/2})^{1/2} (avg |x|^{-1/2})^{1/2} on B(0,r) is
        // ((2/3) r^{1/2})^{1/2} (2 r^{-1/2})^{1/2} = 2/sqrt(3).
        let g = grid(-9);
        let fam = BallFamily::origin_dyadic(&g);
        let c = ap_characteristic(&Weight::origin_power(0.5), 2.0, &g, &fam).unwrap();
        let expect = 2.0 / 3f64.sqrt();
        assert!((c - expect).abs() / expect < 0.01, "got {c}, want {expect}");
    }

    #[test]
    fn invalid_exponent_rejected() {
        let g = grid(-5);
        let fam = BallFamily::origin_dyadic(&g);
        assert!(matches!(
            ap_characteristic(&Weight::one(), 0.5, &g, &fam),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn ainf_of_sqrt_power_matches_closed_form() {
        // avg log|x|^{1/2} over B(0,r) is (log r - 1)/2, so the ratio is
        // (2/3) e^{1/2}, radius independent.
        let g = grid(-9);
        let fam = BallFamily::origin_dyadic(&g);
        let c = ainf_characteristic(&Weight::origin_power(0.5), &g, &fam).unwrap();
        let expect = (2.0 / 3.0) * 0.5f64.exp();
        assert!((c - expect).abs() / expect < 0.01, "got {c}, want {expect}");
    }

    #[test]
    fn single_ball_ratio_obeys_jensen() {
        let g = grid(-6);
        let b = crate::lattice::Ball::new(&g, [0.25, 0.0], 0.25).unwrap();
        let ws = Weight::origin_power(0.5).sample(&g).unwrap();
        let logs = ws.map(f64::ln).unwrap();
        let avg = integrate(&ws, Region::Ball(&b)).unwrap() / g.ball_measure(&b);
        let geo = (integrate(&logs, Region::Ball(&b)).unwrap() / g.ball_measure(&b)).exp();
        assert!(avg / geo >= 1.0 - 1e-12);
    }

    #[test]
    fn doubling_of_lebesgue_and_sqrt_power() {
        let g = grid(-8);
        let fam = BallFamily::origin_dyadic(&g);
        let (d, delta) = doubling_and_comparability(&Weight::one(), &g, &fam).unwrap();
        assert!((d - 2.0).abs() < 0.05, "Lebesgue doubling in 1D: {d}");
        assert!((delta - 1.0).abs() < 0.02, "Lebesgue delta: {delta}");
        let (d, _) = doubling_and_comparability(&Weight::origin_power(0.5), &g, &fam).unwrap();
        let expect = 2f64.powf(1.5);
        assert!((d - expect).abs() / expect < 0.02, "got {d}, want {expect}");
    }

    #[test]
    fn nu_weight_composes_exponents() {
        let mw = MultiWeight::new(
            vec![Weight::origin_power(0.5), Weight::origin_power(1.0)],
            vec![2.0, 2.0],
        )
        .unwrap();
        assert!((mw.p() - 1.0).abs() < 1e-12);
        let nu = mw.nu_weight();
        assert!((nu.origin_power_exponent().unwrap() - 0.75).abs() < 1e-12);
        // P = (1,...,1) gives the geometric mean.
        let mw1 = MultiWeight::new(
            vec![Weight::origin_power(1.0), Weight::origin_power(1.0)],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!((mw1.p() - 0.5).abs() < 1e-12);
        assert!((mw1.nu_weight().origin_power_exponent().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stability_flags_match_power_oracle() {
        let g = grid(-8);
        let inside = ap_stability(&Weight::origin_power(0.5), 2.0, &g).unwrap();
        assert!(inside.stable, "alpha=1/2 in A_2: {inside:?}");
        let outside = ap_stability(&Weight::origin_power(1.5), 2.0, &g).unwrap();
        assert!(!outside.stable, "alpha=3/2 not in A_2: {outside:?}");
        assert!(
            outside.divergence_growth >= 10.0,
            "dual average should grow at full rate: {outside:?}"
        );
        assert!(power_in_ap(0.5, 1, 2.0));
        assert!(!power_in_ap(1.5, 1, 2.0));
    }

    #[test]
    fn multi_ap_below_product_of_factors() {
        let g = grid(-7);
        let fam = BallFamily::origin_dyadic(&g);
        let w = Weight::origin_power(0.5);
        let mw = MultiWeight::new(vec![w.clone(), w.clone()], vec![2.0, 2.0]).unwrap();
        let multi = multi_ap_characteristic(&mw, &g, &fam).unwrap();
        let single = ap_characteristic(&w, 2.0, &g, &fam).unwrap();
        assert!(multi.is_finite() && multi > 0.0);
        assert!(multi <= single * single * (1.0 + 1e-9), "{multi} vs {}", single * single);
    }

    #[test]
    fn lemma_multi_agreement_on_and_off_class() {
        let g = grid(-7);
        let ok = MultiWeight::new(
            vec![Weight::origin_power(0.5), Weight::origin_power(0.5)],
            vec![2.0, 2.0],
        )
        .unwrap();
        let rep = check_lemma_multi(&ok, &g, STABILITY_DIVERGENCE_FACTOR).unwrap();
        assert!(rep.agreement && rep.multi.stable, "{rep:?}");

        let bad = MultiWeight::new(
            vec![Weight::origin_power(5.0), Weight::origin_power(-5.0)],
            vec![2.0, 2.0],
        )
        .unwrap();
        let rep = check_lemma_multi(&bad, &g, STABILITY_DIVERGENCE_FACTOR).unwrap();
        assert!(rep.agreement, "both sides must flag growth: {rep:?}");
        assert!(!rep.multi.stable);
    }

    #[test]
    fn reverse_holder_of_sqrt_power() {
        // Ratio at s = 2: (r/2)^{1/2} / ((2/3) r^{1/2}) = 1.0607...
        let g = grid(-8);
        let got = reverse_holder_exponent(&Weight::origin_power(0.5), &g, &[1.5, 2.0], 2.0).unwrap();
        assert_eq!(got, Some(2.0));
        let none = reverse_holder_exponent(&Weight::origin_power(-0.75), &g, &[2.0, 3.0], 2.0).unwrap();
        assert_eq!(none, None, "w^s = |x|^{{-3/2}} diverges near 0");
    }

    #[test]
    fn characteristic_monotone_in_p() {
        let g = grid(-8);
        let fam = BallFamily::origin_dyadic(&g);
        let w = Weight::origin_power(0.5);
        let c2 = ap_characteristic(&w, 2.0, &g, &fam).unwrap();
        let c3 = ap_characteristic(&w, 3.0, &g, &fam).unwrap();
        assert!(c3 <= c2 + 1e-9, "A_p characteristics decrease in p: {c3} vs {c2}");
    }
}
