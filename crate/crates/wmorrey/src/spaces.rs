//! Function-space norms: weighted L^p and weak L^p, Morrey and weak Morrey,
//! the (L log L)-Morrey scale, BMO mean oscillation, and the quasi-norm
//! triangle constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_average, integrate, pairwise_sum, Ball, BallFamily, Region, SampledFunction};
use crate::orlicz::{luxemburg_norm, YoungFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Lp,
    WeakLp,
    Morrey,
    WeakMorrey,
    LloglMorrey,
    Bmo,
}

/// Norm request: space kind, exponent, Morrey parameter.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: SpaceKind,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub kappa: f64,
}

fn default_p() -> f64 {
    1.0
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind != SpaceKind::Bmo {
            if !(self.p > 0.0 && self.p.is_finite()) {
                return Err(Error::InvalidArgument(format!("norm exponent p = {}", self.p)));
            }
            if !(0.0..1.0).contains(&self.kappa) {
                return Err(Error::InvalidArgument(format!("kappa = {} outside [0, 1)", self.kappa)));
            }
        }
        Ok(())
    }
}

fn weighted_values(
    f: &SampledFunction,
    w: Option<&SampledFunction>,
    region: Region,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = f.grid();
    if let Some(w) = w {
        if w.grid() != grid {
            return Err(Error::GridMismatch("weight sampled on a different grid".into()));
        }
    }
    let h = grid.cell_volume();
    let mut vals = Vec::new();
    let mut masses = Vec::new();
    let mut push = |i: usize| {
        vals.push(f.value(i).abs());
        masses.push(w.map_or(h, |w| w.value(i) * h));
    };
    match region {
        Region::Domain => (0..grid.sample_count()).for_each(&mut push),
        Region::Ball(b) => grid.visit_ball(b, |i, _| push(i)),
    }
    Ok((vals, masses))
}

/// `(int |f|^p w)^{1/p}` over the whole domain.
pub fn lp_norm(f: &SampledFunction, w: Option<&SampledFunction>, p: f64) -> Result<f64> {
    let (vals, masses) = weighted_values(f, w, Region::Domain)?;
    let terms: Vec<f64> = vals.iter().zip(&masses).map(|(&v, &m)| v.powf(p) * m).collect();
    Ok(pairwise_sum(&terms).powf(1.0 / p))
}

/// Max over attained levels of `v * w({|f| >= v})^{1/p}`; exact for
/// step-valued sampled functions (the sup over lambda of the piecewise
/// expression is attained as lambda approaches a sample value from below).
fn weak_part(vals: &[f64], masses: &[f64], p: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = vals.iter().cloned().zip(masses.iter().cloned()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0f64;
    let mut cum = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let v = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == v {
            cum += pairs[i].1;
            i += 1;
        }
        if v > 0.0 {
            best = best.max(v * cum.powf(1.0 / p));
        }
    }
    best
}

/// `sup_lambda lambda * w({|f| > lambda})^{1/p}` over the whole domain.
pub fn weak_lp_norm(f: &SampledFunction, w: Option<&SampledFunction>, p: f64) -> Result<f64> {
    let (vals, masses) = weighted_values(f, w, Region::Domain)?;
    Ok(weak_part(&vals, &masses, p))
}

fn ball_weight_mass(w: Option<&SampledFunction>, grid: &crate::lattice::Grid, b: &Ball) -> Result<f64> {
    match w {
        Some(w) => integrate(w, Region::Ball(b)),
        None => Ok(grid.ball_measure(b)),
    }
}

/// `max_F (w(B)^{-kappa} int_B |f|^p w)^{1/p}`.
pub fn morrey_norm(
    f: &SampledFunction,
    w: Option<&SampledFunction>,
    p: f64,
    kappa: f64,
    family: &BallFamily,
) -> Result<f64> {
    let grid = f.grid().clone();
    let mut best = 0.0f64;
    for b in family.balls() {
        let (vals, masses) = weighted_values(f, w, Region::Ball(b))?;
        let terms: Vec<f64> = vals.iter().zip(&masses).map(|(&v, &m)| v.powf(p) * m).collect();
        let mass = ball_weight_mass(w, &grid, b)?;
        best = best.max((mass.powf(-kappa) * pairwise_sum(&terms)).powf(1.0 / p));
    }
    Ok(best)
}

/// `max_F w(B)^{-kappa/p} sup_lambda lambda * w({x in B : |f| > lambda})^{1/p}`.
///
/// The definition's `m(B)^{kappa/p}` normalizer is read as `w(B)^{kappa/p}`,
/// matching the strong-Morrey normalizer and every estimate that consumes it.
pub fn weak_morrey_norm(
    f: &SampledFunction,
    w: Option<&SampledFunction>,
    p: f64,
    kappa: f64,
    family: &BallFamily,
) -> Result<f64> {
    let grid = f.grid().clone();
    let mut best = 0.0f64;
    for b in family.balls() {
        let (vals, masses) = weighted_values(f, w, Region::Ball(b))?;
        let mass = ball_weight_mass(w, &grid, b)?;
        best = best.max(mass.powf(-kappa / p) * weak_part(&vals, &masses, p));
    }
    Ok(best)
}

/// `max_F w(B)^{1-kappa} ||f||_{LlogL(w),B}`.
pub fn llogl_morrey_norm(
    f: &SampledFunction,
    w: &SampledFunction,
    kappa: f64,
    family: &BallFamily,
) -> Result<f64> {
    let mut best = 0.0f64;
    for b in family.balls() {
        let mass = integrate(w, Region::Ball(b))?;
        let lux = luxemburg_norm(f, &YoungFunction::Phi, b, Some(w))?;
        best = best.max(mass.powf(1.0 - kappa) * lux);
    }
    Ok(best)
}

/// Mean-oscillation data over a family: per-ball averages `b_B` (reused by
/// the commutator lemmas), per-ball oscillations, and their max.
#[derive(Debug, Clone)]
pub struct BmoData {
    pub averages: Vec<f64>,
    pub oscillations: Vec<f64>,
    pub norm: f64,
}

pub fn bmo_norm(b: &SampledFunction, family: &BallFamily) -> Result<BmoData> {
    let mut averages = Vec::with_capacity(family.len());
    let mut oscillations = Vec::with_capacity(family.len());
    let mut norm = 0.0f64;
    for ball in family.balls() {
        let avg = ball_average(b, ball)?;
        let osc = ball_average(&b.map(|v| (v - avg).abs())?, ball)?;
        averages.push(avg);
        oscillations.push(osc);
        norm = norm.max(osc);
    }
    Ok(BmoData { averages, oscillations, norm })
}

/// `C(p, N) = max(1, N^{(1-p)/p})` of the strong quasi-triangle inequality.
pub fn quasi_triangle_strong_bound(p: f64, n: usize) -> f64 {
    (n as f64).powf((1.0 - p) / p).max(1.0)
}

/// `C'(p, N) = max(N, N^{1/p})` of the weak quasi-triangle inequality.
pub fn quasi_triangle_weak_bound(p: f64, n: usize) -> f64 {
    let n = n as f64;
    n.max(n.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy)]
pub struct QuasiTriangleOutcome {
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Max over tuples of `||sum f_k|| / sum ||f_k||` against the stated bound;
/// `weak` selects the weak-norm variant. Zero-denominator tuples are skipped.
pub fn quasi_triangle_constants(
    p: f64,
    tuples: &[Vec<SampledFunction>],
    w: Option<&SampledFunction>,
    weak: bool,
) -> Result<QuasiTriangleOutcome> {
    let mut observed = 0.0f64;
    let mut n_max = 1usize;
    for tuple in tuples {
        if tuple.is_empty() {
            continue;
        }
        n_max = n_max.max(tuple.len());
        let mut sum = tuple[0].clone();
        for f in &tuple[1..] {
            sum = sum.zip(f, |a, b| a + b)?;
        }
        let norm_of = |f: &SampledFunction| -> Result<f64> {
            if weak {
                weak_lp_norm(f, w, p)
            } else {
                lp_norm(f, w, p)
            }
        };
        let num = norm_of(&sum)?;
        let mut den = 0.0;
        for f in tuple {
            den += norm_of(f)?;
        }
        if den > 0.0 {
            observed = observed.max(num / den);
        }
    }
    let bound = if weak {
        quasi_triangle_weak_bound(p, n_max)
    } else {
        quasi_triangle_strong_bound(p, n_max)
    };
    Ok(QuasiTriangleOutcome { observed, bound, pass: observed <= bound + 1e-9 })
}
