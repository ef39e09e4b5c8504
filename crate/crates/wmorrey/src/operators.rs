//! Multilinear kernels with size/regularity estimation, the truncated
//! operator quadrature, tail majorants over dyadic annuli, commutators (with
//! algebraic cross-checks), and the circle-quadrature difference identity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ball_average, dyadic_annuli, pairwise_sum, Ball, Grid, SampledFunction};
use crate::orlicz::ThetaModulus;

/// Hard cap on kernel evaluations per operator application.
pub const COST_GUARD_LIMIT: u128 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `A / (sum |x - y_i|)^{mn}`: the size-condition majorant itself.
    Majorant,
    /// `A Omega(u/|u|) / |u|^{mn}` with `u = (x - y_1, ..., x - y_m)` and
    /// `Omega = cos(harmonic * phi)` on the circle; mean-zero for odd and
    /// nonzero harmonics. Supported for mn <= 2.
    Homogeneous { harmonic: u32 },
}

/// m-linear kernel evaluator with size constant `A` and associated modulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultilinearKernel {
    pub arity: usize,
    pub dimension: usize,
    pub kind: KernelKind,
    pub size_constant: f64,
    pub theta: ThetaModulus,
}

impl MultilinearKernel {
    pub fn new(
        arity: usize,
        dimension: usize,
        kind: KernelKind,
        size_constant: f64,
        theta: ThetaModulus,
    ) -> Result<MultilinearKernel> {
        if arity == 0 || !(1..=2).contains(&dimension) {
            return Err(Error::InvalidArgument(format!(
                "kernel arity {arity} / dimension {dimension} unsupported"
            )));
        }
        if !(size_constant > 0.0) {
            return Err(Error::InvalidArgument("kernel size constant must be positive".into()));
        }
        if matches!(kind, KernelKind::Homogeneous { .. }) && arity * dimension > 2 {
            return Err(Error::InvalidArgument(
                "homogeneous kernels are provided for mn <= 2".into(),
            ));
        }
        theta.validate()?;
        Ok(MultilinearKernel { arity, dimension, kind, size_constant, theta })
    }

    /// Sum of slot distances `sum_i |x - y_i|`.
    fn distance_sum(&self, x: [f64; 2], ys: &[[f64; 2]]) -> f64 {
        let n = self.dimension;
        ys.iter()
            .map(|y| {
                let dx = x[0] - y[0];
                if n == 1 {
                    dx.abs()
                } else {
                    dx.hypot(x[1] - y[1])
                }
            })
            .sum()
    }

    pub fn eval(&self, x: [f64; 2], ys: &[[f64; 2]]) -> f64 {
        debug_assert_eq!(ys.len(), self.arity);
        let mn = (self.arity * self.dimension) as i32;
        match self.kind {
            KernelKind::Majorant => {
                let d = self.distance_sum(x, ys);
                self.size_constant / d.powi(mn)
            }
            KernelKind::Homogeneous { harmonic } => {
                // Flatten (x - y_1, ..., x - y_m) into the plane.
                let (u0, u1) = match (self.arity, self.dimension) {
                    (1, 1) => (x[0] - ys[0][0], 0.0),
                    (1, 2) => (x[0] - ys[0][0], x[1] - ys[0][1]),
                    _ => (x[0] - ys[0][0], x[0] - ys[1][0]),
                };
                let r = (u0 * u0 + u1 * u1).sqrt();
                self.size_constant * cos_k_phi(harmonic, u0 / r) / r.powi(mn)
            }
        }
    }

    /// Constant `A_size` with `|K| <= A_size / (sum |x - y_i|)^{mn}`:
    /// `A` for the majorant, `A m^{mn/2}` for homogeneous kinds (from the
    /// l1-l2 comparison on the flattened displacement).
    pub fn size_bound_constant(&self) -> f64 {
        match self.kind {
            KernelKind::Majorant => self.size_constant,
            KernelKind::Homogeneous { .. } => {
                let mn = (self.arity * self.dimension) as f64;
                self.size_constant * (self.arity as f64).powf(mn / 2.0)
            }
        }
    }
}

/// `cos(k phi)` as the Chebyshev value `T_k(cos phi)`.
fn cos_k_phi(k: u32, c: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => c,
        _ => {
            let mut prev = 1.0;
            let mut cur = c;
            for _ in 2..=k {
                (prev, cur) = (cur, 2.0 * c * cur - prev);
            }
            cur
        }
    }
}

/// Near-diagonal exclusion: a quadrature tuple is skipped when any
/// `|x - y_i| < eps`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub eps: f64,
}

impl TruncationPolicy {
    /// Default truncation at one grid spacing.
    pub fn for_grid(grid: &Grid) -> TruncationPolicy {
        TruncationPolicy { eps: grid.spacing() }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.eps < grid.spacing() / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "truncation radius {} below h/2 = {}",
                self.eps,
                grid.spacing() / 2.0
            )));
        }
        Ok(())
    }
}

/// Size-condition audit collected while applying an operator.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct AuditStats {
    pub tuples: u64,
    pub violations: u64,
    pub max_ratio: f64,
}

impl AuditStats {
    fn merge(mut self, other: AuditStats) -> AuditStats {
        self.tuples += other.tuples;
        self.violations += other.violations;
        self.max_ratio = self.max_ratio.max(other.max_ratio);
        self
    }
}

pub struct ApplyOutput {
    pub values: SampledFunction,
    pub audit: Option<AuditStats>,
}

fn check_inputs(kernel: &MultilinearKernel, fs: &[&SampledFunction]) -> Result<()> {
    if fs.len() != kernel.arity {
        return Err(Error::InvalidArgument(format!(
            "kernel arity {} but {} inputs",
            kernel.arity,
            fs.len()
        )));
    }
    let grid = fs[0].grid();
    if grid.dimension() != kernel.dimension {
        return Err(Error::GridMismatch("kernel dimension differs from grid".into()));
    }
    for f in fs {
        if f.grid() != grid {
            return Err(Error::GridMismatch("operator inputs on different grids".into()));
        }
    }
    Ok(())
}

fn cost_estimate(kernel: &MultilinearKernel, grid: &Grid) -> u128 {
    let n = grid.sample_count() as u128;
    n.pow(kernel.arity as u32) * n
}

/// Shared quadrature core: for each output sample `x`,
/// `h^{mn} sum_tuples factor(x, ys) K(x, ys) prod f_i(y_i)` over admissible
/// tuples, pairwise-summed in canonical tuple order. Output samples are
/// independent, so the parallel map cannot affect the result.
fn apply_core<F>(
    kernel: &MultilinearKernel,
    fs: &[&SampledFunction],
    trunc: &TruncationPolicy,
    audit: bool,
    factor: F,
) -> Result<ApplyOutput>
where
    F: Fn(usize, &[usize]) -> f64 + Sync,
{
    check_inputs(kernel, fs)?;
    let grid = fs[0].grid().clone();
    trunc.validate(&grid)?;
    let estimated = cost_estimate(kernel, &grid);
    if kernel.arity * grid.dimension() > 4 || estimated > COST_GUARD_LIMIT {
        return Err(Error::CostGuard { estimated, limit: COST_GUARD_LIMIT });
    }
    let n_samples = grid.sample_count();
    let points: Vec<[f64; 2]> = (0..n_samples).map(|i| grid.point(i)).collect();
    let dims = grid.dimension();
    let eps = trunc.eps;
    let size_bound = kernel.size_bound_constant();
    let mn = (kernel.arity * dims) as i32;
    let scale = grid.cell_volume().powi(kernel.arity as i32);

    // Buffers reused per output sample: quadrature terms and the distance
    // table `|x - y|` over all y.
    let per_sample = |xi: usize, state: &mut (Vec<f64>, Vec<f64>)| -> (f64, AuditStats) {
        let (terms, dists) = state;
        let x = points[xi];
        terms.clear();
        dists.clear();
        dists.extend(points.iter().map(|y| {
            let dx = x[0] - y[0];
            if dims == 1 {
                dx.abs()
            } else {
                dx.hypot(x[1] - y[1])
            }
        }));
        let mut stats = AuditStats::default();
        let mut ys_buf = [[0.0f64; 2]; 4];
        let mut visit = |ys_idx: &[usize], product: f64, terms: &mut Vec<f64>| {
            let mut dsum = 0.0;
            for (slot, &yi) in ys_idx.iter().enumerate() {
                let d = dists[yi];
                if d < eps {
                    return;
                }
                dsum += d;
                ys_buf[slot] = points[yi];
            }
            let k = kernel.eval(x, &ys_buf[..ys_idx.len()]);
            if audit {
                stats.tuples += 1;
                let bound = size_bound / dsum.powi(mn);
                let ratio = k.abs() / bound;
                stats.max_ratio = stats.max_ratio.max(ratio);
                if ratio > 1.0 + 1e-12 {
                    stats.violations += 1;
                }
            }
            terms.push(factor(xi, ys_idx) * k * product);
        };
        match kernel.arity {
            1 => {
                for y in 0..n_samples {
                    let v = fs[0].value(y);
                    if v != 0.0 {
                        visit(&[y], v, terms);
                    }
                }
            }
            2 => {
                for y1 in 0..n_samples {
                    let v1 = fs[0].value(y1);
                    if v1 == 0.0 {
                        continue;
                    }
                    for y2 in 0..n_samples {
                        let v2 = fs[1].value(y2);
                        if v2 != 0.0 {
                            visit(&[y1, y2], v1 * v2, terms);
                        }
                    }
                }
            }
            m => {
                let mut idx = vec![0usize; m];
                loop {
                    let mut product = 1.0;
                    for (slot, &yi) in idx.iter().enumerate() {
                        product *= fs[slot].value(yi);
                    }
                    if product != 0.0 {
                        visit(&idx, product, terms);
                    }
                    let mut slot = m;
                    loop {
                        if slot == 0 {
                            break;
                        }
                        slot -= 1;
                        idx[slot] += 1;
                        if idx[slot] < n_samples {
                            break;
                        }
                        idx[slot] = 0;
                    }
                    if idx.iter().all(|&i| i == 0) {
                        break;
                    }
                }
            }
        }
        (scale * pairwise_sum(terms), stats)
    };

    let results: Vec<(f64, AuditStats)> = (0..n_samples)
        .into_par_iter()
        .map_init(|| (Vec::new(), Vec::new()), |state, xi| per_sample(xi, state))
        .collect();
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let stats = results
        .into_iter()
        .map(|r| r.1)
        .fold(AuditStats::default(), AuditStats::merge);
    Ok(ApplyOutput {
        values: SampledFunction::new(grid, values)?,
        audit: audit.then_some(stats),
    })
}

/// Truncated operator `T(f_1, ..., f_m)` on the lattice.
pub fn apply_operator(
    kernel: &MultilinearKernel,
    fs: &[&SampledFunction],
    trunc: &TruncationPolicy,
) -> Result<SampledFunction> {
    Ok(apply_core(kernel, fs, trunc, false, |_, _| 1.0)?.values)
}

/// Truncated operator with the size condition asserted on every visited
/// tuple.
pub fn apply_operator_audited(
    kernel: &MultilinearKernel,
    fs: &[&SampledFunction],
    trunc: &TruncationPolicy,
) -> Result<ApplyOutput> {
    apply_core(kernel, fs, trunc, true, |_, _| 1.0)
}

/// Geometric constant of the annulus tail bound: per slot the clipped
/// `|2^{j+1}B|` over `(2^{j-1} r)^n`, i.e. `8^{mn}` in one dimension and
/// `(16 pi)^m` in two.
pub fn tail_geometric_constant(arity: usize, dimension: usize) -> f64 {
    match dimension {
        1 => 8f64.powi(arity as i32),
        _ => (16.0 * std::f64::consts::PI).powi(arity as i32),
    }
}

/// Size-condition tail majorant
/// `A C_geo sum_{j=1..j_max} prod_i avg_{2^{j+1}B} |f_i chi_{(2B)^c}|` with
/// dilated balls clipped to the cube. The averages see only the part of each
/// input outside `2B` (the tail part of the operator input), so the value
/// dominates `sup_B |T(f)|` for inputs supported outside `2B` and vanishes
/// for inputs supported inside it.
pub fn tail_majorant(
    kernel: &MultilinearKernel,
    ball: &Ball,
    fs: &[&SampledFunction],
    j_max: usize,
) -> Result<f64> {
    check_inputs(kernel, fs)?;
    let n = kernel.dimension;
    let two_b = ball.scaled(2.0);
    let c_geo = tail_geometric_constant(kernel.arity, n);
    let grid = fs[0].grid().clone();
    let masked: Vec<SampledFunction> = fs
        .iter()
        .map(|f| {
            let values = (0..grid.sample_count())
                .map(|i| {
                    if two_b.contains(grid.point(i), n) {
                        0.0
                    } else {
                        f.value(i).abs()
                    }
                })
                .collect();
            SampledFunction::new(grid.clone(), values)
        })
        .collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(j_max);
    for (outer, _) in dyadic_annuli(ball, j_max) {
        let mut product = 1.0;
        for f in &masked {
            product *= ball_average(f, &outer)?;
        }
        terms.push(product);
    }
    Ok(kernel.size_constant * c_geo * pairwise_sum(&terms))
}

/// Slot selection for the multilinear commutator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutatorMode {
    /// `[b_k, T]_k`, a single slot.
    Single(usize),
    /// `[Sigma b, T] = sum_k [b_k, T]_k`.
    Sum,
}

/// Both evaluations of the multilinear commutator: the kernel form
/// `int sum_k (b_k(x) - b_k(y_k)) K prod f_i` and the algebraic combination
/// `sum_k (b_k T(f) - T(..., b_k f_k, ...))`. They are rearrangements of the
/// same finite quadrature sum.
pub struct CommutatorOutput {
    pub kernel_form: SampledFunction,
    pub algebraic_form: SampledFunction,
}

pub fn multilinear_commutator(
    kernel: &MultilinearKernel,
    symbols: &[&SampledFunction],
    fs: &[&SampledFunction],
    mode: CommutatorMode,
    trunc: &TruncationPolicy,
) -> Result<CommutatorOutput> {
    check_inputs(kernel, fs)?;
    if symbols.len() != kernel.arity {
        return Err(Error::InvalidArgument("one symbol per kernel slot".into()));
    }
    let slots: Vec<usize> = match mode {
        CommutatorMode::Single(k) if k < kernel.arity => vec![k],
        CommutatorMode::Single(k) => {
            return Err(Error::InvalidArgument(format!("commutator slot {k} out of range")))
        }
        CommutatorMode::Sum => (0..kernel.arity).collect(),
    };

    let kernel_form = apply_core(kernel, fs, trunc, false, |xi, ys| {
        slots
            .iter()
            .map(|&k| symbols[k].value(xi) - symbols[k].value(ys[k]))
            .sum()
    })?
    .values;

    let mut algebraic = SampledFunction::zeros(fs[0].grid().clone());
    let base = apply_operator(kernel, fs, trunc)?;
    for &k in &slots {
        let bk_fk = fs[k].zip(symbols[k], |f, b| f * b)?;
        let mut shifted: Vec<&SampledFunction> = fs.to_vec();
        shifted[k] = &bk_fk;
        let t_shifted = apply_operator(kernel, &shifted, trunc)?;
        let term = base
            .zip(symbols[k], |t, b| b * t)?
            .zip(&t_shifted, |a, b| a - b)?;
        algebraic = algebraic.zip(&term, |a, b| a + b)?;
    }
    Ok(CommutatorOutput { kernel_form, algebraic_form: algebraic })
}

/// Iterated commutator: kernel form
/// `int prod_k (b_k(x) - b_k(y_k)) K prod f_i`; for m = 2 the four-term
/// expansion is returned alongside as a cross-check.
pub struct IteratedOutput {
    pub kernel_form: SampledFunction,
    pub expansion: Option<SampledFunction>,
}

pub fn iterated_commutator(
    kernel: &MultilinearKernel,
    symbols: &[&SampledFunction],
    fs: &[&SampledFunction],
    trunc: &TruncationPolicy,
) -> Result<IteratedOutput> {
    check_inputs(kernel, fs)?;
    if symbols.len() != kernel.arity {
        return Err(Error::InvalidArgument("one symbol per kernel slot".into()));
    }
    let kernel_form = apply_core(kernel, fs, trunc, false, |xi, ys| {
        symbols
            .iter()
            .enumerate()
            .map(|(k, b)| b.value(xi) - b.value(ys[k]))
            .product()
    })?
    .values;

    let expansion = if kernel.arity == 2 {
        let (b1, b2) = (symbols[0], symbols[1]);
        let b1f1 = fs[0].zip(b1, |f, b| f * b)?;
        let b2f2 = fs[1].zip(b2, |f, b| f * b)?;
        let t00 = apply_operator(kernel, &[fs[0], fs[1]], trunc)?;
        let t01 = apply_operator(kernel, &[fs[0], &b2f2], trunc)?;
        let t10 = apply_operator(kernel, &[&b1f1, fs[1]], trunc)?;
        let t11 = apply_operator(kernel, &[&b1f1, &b2f2], trunc)?;
        let mut out = Vec::with_capacity(t00.values().len());
        for i in 0..t00.values().len() {
            let (v1, v2) = (b1.value(i), b2.value(i));
            out.push(v1 * v2 * t00.value(i) - v1 * t01.value(i) - v2 * t10.value(i) + t11.value(i));
        }
        Some(SampledFunction::new(fs[0].grid().clone(), out)?)
    } else {
        None
    };
    Ok(IteratedOutput { kernel_form, expansion })
}

/// Empirical smallest constants making the size and the two regularity
/// conditions hold over a seeded pseudo-random sample of admissible tuples;
/// displacements respect the half-max constraint.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KernelConstants {
    pub a_size: f64,
    pub a_reg_x: f64,
    pub a_reg_y: f64,
}

pub fn kernel_condition_check(
    kernel: &MultilinearKernel,
    grid: &Grid,
    sample_budget: usize,
    seed: u64,
) -> Result<KernelConstants> {
    if sample_budget < 1000 {
        return Err(Error::InvalidArgument(format!(
            "sample budget {sample_budget} below 1000"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_extent();
    let n = grid.dimension();
    let m = kernel.arity;
    let mn = (m * n) as i32;
    let draw_point = |rng: &mut ChaCha8Rng| -> [f64; 2] {
        [rng.gen_range(-l..l), if n == 2 { rng.gen_range(-l..l) } else { 0.0 }]
    };
    let mut a_size = 0.0f64;
    let mut a_reg_x = 0.0f64;
    let mut a_reg_y = 0.0f64;
    let accept = |estimate: &mut f64, cand: f64| -> Result<()> {
        if !cand.is_finite() || cand > 1e12 {
            return Err(Error::KernelInadmissible(format!(
                "unbounded condition ratio {cand}"
            )));
        }
        *estimate = estimate.max(cand);
        Ok(())
    };
    for _ in 0..sample_budget {
        let x = draw_point(&mut rng);
        let ys: Vec<[f64; 2]> = (0..m).map(|_| draw_point(&mut rng)).collect();
        let dsum = kernel.distance_sum(x, &ys);
        let dmax = ys
            .iter()
            .map(|y| kernel.distance_sum(x, std::slice::from_ref(y)))
            .fold(0.0f64, f64::max);
        if dsum < 1e-6 {
            continue;
        }
        let k0 = kernel.eval(x, &ys);
        accept(&mut a_size, k0.abs() * dsum.powi(mn))?;

        // Displacement within half the max slot distance, bounded away from
        // zero so theta stays positive.
        let u = rng.gen_range(0.05..=1.0);
        let step = 0.5 * dmax * u;
        let dir = unit_direction(&mut rng, n);
        let x2 = [x[0] + step * dir[0], x[1] + step * dir[1]];
        let diff = (kernel.eval(x2, &ys) - k0).abs();
        let theta_arg = step / dsum;
        accept(&mut a_reg_x, diff * dsum.powi(mn) / kernel.theta.eval(theta_arg))?;

        let slot = rng.gen_range(0..m);
        let u = rng.gen_range(0.05..=1.0);
        let step = 0.5 * dmax * u;
        let dir = unit_direction(&mut rng, n);
        let mut ys2 = ys.clone();
        ys2[slot] = [ys[slot][0] + step * dir[0], ys[slot][1] + step * dir[1]];
        let diff = (kernel.eval(x, &ys2) - k0).abs();
        accept(&mut a_reg_y, diff * dsum.powi(mn) / kernel.theta.eval(step / dsum))?;
    }
    Ok(KernelConstants { a_size, a_reg_x, a_reg_y })
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> [f64; 2] {
    if n == 1 {
        [if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0]
    } else {
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        [phi.cos(), phi.sin()]
    }
}

/// Error of the uniform circle quadrature for the difference identity at a
/// given difference `d`:
/// `|d - (1/2pi) sum_q exp(e^{i phi_q} d) e^{-i phi_q} dphi|`.
pub fn cauchy_identity_error(d: f64, nodes: usize) -> f64 {
    let q = nodes as f64;
    let mut terms = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let phi = std::f64::consts::TAU * i as f64 / q;
        // Re[ exp(d e^{i phi}) e^{-i phi} ]
        terms.push((d * phi.cos()).exp() * (d * phi.sin() - phi).cos() / q);
    }
    (d - pairwise_sum(&terms)).abs()
}

/// Max circle-quadrature error over seeded random sample pairs of `b`.
pub fn cauchy_representation_check(
    b: &SampledFunction,
    node_count: usize,
    pair_count: usize,
    seed: u64,
) -> Result<f64> {
    if node_count < 16 || !node_count.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "node count {node_count} must be a power of two >= 16"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = b.grid().sample_count();
    let mut max_err = 0.0f64;
    for _ in 0..pair_count {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let d = b.value(i) - b.value(j);
        max_err = max_err.max(cauchy_identity_error(d, node_count));
    }
    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Region;
    use std::sync::Arc;

    fn grid(h_exp: i32) -> Arc<Grid> {
        Arc::new(Grid::new(1, 1.0, 2f64.powi(h_exp)).unwrap())
    }

    fn majorant(m: usize) -> MultilinearKernel {
        MultilinearKernel::new(m, 1, KernelKind::Majorant, 1.0, ThetaModulus::Power { eps: 1.0 })
            .unwrap()
    }

    fn cos2(m: usize) -> MultilinearKernel {
        MultilinearKernel::new(
            m,
            1,
            KernelKind::Homogeneous { harmonic: 2 },
            1.0,
            ThetaModulus::Power { eps: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let g = grid(-5);
        let k = majorant(2);
        let f = SampledFunction::from_fn(g.clone(), |x| x[0]).unwrap();
        let z = SampledFunction::zeros(g.clone());
        let out = apply_operator(&k, &[&f, &z], &TruncationPolicy::for_grid(&g)).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn majorant_on_shifted_squares_matches_double_integral() {
        // x = 0, f1 = f2 = indicator of [1, 2]:
        // int int (y1 + y2)^{-2} over the square = log(9/8).
        let g = Arc::new(Grid::new(1, 2.0, 2f64.powi(-7)).unwrap());
        let k = majorant(2);
        let f = SampledFunction::from_fn(g.clone(), |x| f64::from(x[0] > 1.0 && x[0] < 2.0)).unwrap();
        let out = apply_operator(&k, &[&f, &f], &TruncationPolicy::for_grid(&g)).unwrap();
        // Sample nearest to the origin.
        let x0 = g
            .point((0..g.sample_count()).min_by(|&a, &b| {
                g.point(a)[0].abs().total_cmp(&g.point(b)[0].abs())
            }).unwrap())[0];
        assert!(x0.abs() < g.spacing());
        let idx = (0..g.sample_count()).find(|&i| g.point(i)[0] == x0).unwrap();
        let got = out.value(idx);
        let expect = (9f64 / 8.0).ln();
        assert!((got - expect).abs() / expect < 0.02, "got {got}, want {expect}");
    }

    #[test]
    fn multilinearity_in_each_slot() {
        let g = grid(-5);
        let k = cos2(2);
        let t = TruncationPolicy::for_grid(&g);
        let f1 = SampledFunction::from_fn(g.clone(), |x| (2.0 * x[0]).cos()).unwrap();
        let f2 = SampledFunction::from_fn(g.clone(), |x| x[0] + 0.3).unwrap();
        let base = apply_operator(&k, &[&f1, &f2], &t).unwrap();
        let scaled = apply_operator(&k, &[&f1.scale(-2.5).unwrap(), &f2], &t).unwrap();
        for i in 0..g.sample_count() {
            let want = -2.5 * base.value(i);
            assert!(
                (scaled.value(i) - want).abs() <= 1e-12 * want.abs().max(1e-300),
                "slot homogeneity at {i}"
            );
        }
        let g2 = SampledFunction::from_fn(g.clone(), |x| x[0].sin()).unwrap();
        let sum_input = apply_operator(&k, &[&f1, &f2.zip(&g2, |a, b| a + b).unwrap()], &t).unwrap();
        let split = apply_operator(&k, &[&f1, &g2], &t).unwrap();
        for i in 0..g.sample_count() {
            let want = base.value(i) + split.value(i);
            assert!((sum_input.value(i) - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn audit_mode_sees_no_size_violations() {
        let g = grid(-5);
        let t = TruncationPolicy::for_grid(&g);
        let f = SampledFunction::from_fn(g.clone(), |x| 1.0 + x[0]).unwrap();
        for k in [majorant(2), cos2(2)] {
            let out = apply_operator_audited(&k, &[&f, &f], &t).unwrap();
            let audit = out.audit.unwrap();
            assert!(audit.tuples > 0);
            assert_eq!(audit.violations, 0, "{k:?}: max ratio {}", audit.max_ratio);
            assert!(audit.max_ratio <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn truncation_monotone_for_majorant() {
        let g = grid(-5);
        let f = SampledFunction::from_fn(g.clone(), |x| 1.0 + x[0].abs()).unwrap();
        let k = majorant(2);
        let wide = apply_operator(&k, &[&f, &f], &TruncationPolicy { eps: 4.0 * g.spacing() }).unwrap();
        let tight = apply_operator(&k, &[&f, &f], &TruncationPolicy { eps: g.spacing() }).unwrap();
        for i in 0..g.sample_count() {
            assert!(tight.value(i) >= wide.value(i) - 1e-12);
        }
    }

    #[test]
    fn cost_guard_trips() {
        let g = Arc::new(Grid::new(1, 1.0, 2f64.powi(-9)).unwrap());
        let f = SampledFunction::from_fn(g.clone(), |_| 1.0).unwrap();
        let k = majorant(3);
        let err = apply_operator(&k, &[&f, &f, &f], &TruncationPolicy::for_grid(&g));
        assert!(matches!(err, Err(Error::CostGuard { .. })));
    }

    #[test]
    fn kernel_constants_for_majorant_and_homogeneous() {
        let g = grid(-6);
        let k = majorant(2);
        let c = kernel_condition_check(&k, &g, 2000, 11).unwrap();
        assert!((c.a_size - 1.0).abs() < 1e-9, "size constant is 1 by construction: {}", c.a_size);

        let k = cos2(2);
        let c = kernel_condition_check(&k, &g, 2000, 11).unwrap();
        assert!(c.a_size <= 2.0 + 1e-9, "|u| >= (|u1|+|u2|)/sqrt(2): {}", c.a_size);
        let c10 = kernel_condition_check(&k, &g, 20000, 11).unwrap();
        assert!(c10.a_reg_x < 2.0 * c.a_reg_x.max(1.0), "budget escalation stays bounded");
        assert!(c10.a_reg_y < 2.0 * c.a_reg_y.max(1.0));
    }

    #[test]
    fn tail_majorant_trivia() {
        let g = grid(-6);
        let k = majorant(2);
        let h = g.spacing();
        let b = Ball::new(&g, [0.0, 0.0], 4.0 * h).unwrap();
        let ones = SampledFunction::from_fn(g.clone(), |_| 1.0).unwrap();
        let j_max = 3;
        let v = tail_majorant(&k, &b, &[&ones, &ones], j_max).unwrap();
        let c_geo = tail_geometric_constant(2, 1);
        // Averages of the masked constant are 1 - |2B|/|2^{j+1}B|.
        let expect: f64 = (1..=j_max)
            .map(|j| {
                let a = 1.0 - 2f64.powi(-(j as i32));
                a * a
            })
            .sum();
        assert!((v / c_geo - expect).abs() < 1e-9, "got {}, want {expect}", v / c_geo);
        assert!(v / c_geo <= j_max as f64);

        let in_2b = SampledFunction::from_fn(g.clone(), |x| f64::from(x[0].abs() < 8.0 * h)).unwrap();
        let z = tail_majorant(&k, &b, &[&in_2b, &in_2b], 1).unwrap();
        assert_eq!(z, 0.0, "support inside 2B leaves the tail empty");
    }

    #[test]
    fn tail_majorant_dominates_outside_support() {
        let g = grid(-6);
        let k = majorant(2);
        let h = g.spacing();
        let balls = [
            Ball::new(&g, [0.0, 0.0], 8.0 * h).unwrap(),
            Ball::new(&g, [0.25, 0.0], 16.0 * h).unwrap(),
            Ball::new(&g, [-0.125, 0.0], 8.0 * h).unwrap(),
        ];
        let t = TruncationPolicy::for_grid(&g);
        for (bi, b) in balls.iter().enumerate() {
            let two_b = b.scaled(2.0);
            let f = SampledFunction::from_fn(g.clone(), |x| {
                if two_b.contains(x, 1) {
                    0.0
                } else {
                    (5.0 * x[0]).sin() + 1.2
                }
            })
            .unwrap();
            let out = apply_operator(&k, &[&f, &f], &t).unwrap();
            let max_in_b = out.max_abs_in(Region::Ball(b));
            let j_max = 12;
            let tail = tail_majorant(&k, b, &[&f, &f], j_max).unwrap();
            assert!(max_in_b <= tail, "ball {bi}: {max_in_b} vs tail {tail}");
        }
    }

    #[test]
    fn commutator_forms_agree() {
        let g = grid(-5);
        let k = cos2(2);
        let t = TruncationPolicy::for_grid(&g);
        let f1 = SampledFunction::from_fn(g.clone(), |x| (3.0 * x[0]).sin() + 0.4).unwrap();
        let f2 = SampledFunction::from_fn(g.clone(), |x| x[0] * x[0] - 0.2).unwrap();
        let b1 = SampledFunction::from_fn(g.clone(), |x| x[0].abs().ln()).unwrap();
        let b2 = SampledFunction::from_fn(g.clone(), |x| x[0]).unwrap();
        let out =
            multilinear_commutator(&k, &[&b1, &b2], &[&f1, &f2], CommutatorMode::Sum, &t).unwrap();
        let scale = out.kernel_form.max_abs_in(Region::Domain);
        for i in 0..g.sample_count() {
            let d = (out.kernel_form.value(i) - out.algebraic_form.value(i)).abs();
            assert!(d <= 1e-10 * scale.max(1.0), "index {i}: {d}");
        }

        // Constant symbols annihilate the commutator.
        let c1 = SampledFunction::from_fn(g.clone(), |_| 2.0).unwrap();
        let c2 = SampledFunction::from_fn(g.clone(), |_| -1.0).unwrap();
        let out =
            multilinear_commutator(&k, &[&c1, &c2], &[&f1, &f2], CommutatorMode::Sum, &t).unwrap();
        assert!(out.kernel_form.max_abs_in(Region::Domain) < 1e-14);

        // Shifting a symbol by a constant changes nothing.
        let b1_shift = b1.map(|v| v + 5.0).unwrap();
        let one = multilinear_commutator(&k, &[&b1, &b2], &[&f1, &f2], CommutatorMode::Single(0), &t)
            .unwrap();
        let two =
            multilinear_commutator(&k, &[&b1_shift, &b2], &[&f1, &f2], CommutatorMode::Single(0), &t)
                .unwrap();
        for i in 0..g.sample_count() {
            assert!((one.kernel_form.value(i) - two.kernel_form.value(i)).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn iterated_commutator_expansion_and_symmetry() {
        let g = grid(-5);
        let k = majorant(2);
        let t = TruncationPolicy::for_grid(&g);
        let f1 = SampledFunction::from_fn(g.clone(), |x| (2.0 * x[0]).cos() + 0.1).unwrap();
        let f2 = SampledFunction::from_fn(g.clone(), |x| 0.5 - x[0]).unwrap();
        let b1 = SampledFunction::from_fn(g.clone(), |x| x[0].abs().ln()).unwrap();
        let b2 = SampledFunction::from_fn(g.clone(), |x| x[0].signum()).unwrap();
        let out = iterated_commutator(&k, &[&b1, &b2], &[&f1, &f2], &t).unwrap();
        let expansion = out.expansion.unwrap();
        let scale = out.kernel_form.max_abs_in(Region::Domain);
        for i in 0..g.sample_count() {
            let d = (out.kernel_form.value(i) - expansion.value(i)).abs();
            assert!(d <= 1e-10 * scale.max(1.0), "index {i}: {d}");
        }

        // Sign symmetry: (-b1, -b2) leaves the product weight unchanged.
        let n1 = b1.scale(-1.0).unwrap();
        let n2 = b2.scale(-1.0).unwrap();
        let neg = iterated_commutator(&k, &[&n1, &n2], &[&f1, &f2], &t).unwrap();
        for i in 0..g.sample_count() {
            assert!((neg.kernel_form.value(i) - out.kernel_form.value(i)).abs() <= 1e-12 * scale.max(1.0));
        }

        // A constant symbol kills the product.
        let c = SampledFunction::from_fn(g.clone(), |_| 3.0).unwrap();
        let zero = iterated_commutator(&k, &[&c, &b2], &[&f1, &f2], &t).unwrap();
        assert!(zero.kernel_form.max_abs_in(Region::Domain) < 1e-14);
    }

    #[test]
    fn cauchy_identity_at_small_and_visible_scales() {
        // Constant symbol: the integrand is e^{-i phi}, quadrature is exact.
        assert!(cauchy_identity_error(0.0, 16) <= 1e-14);

        // b = log|x|: difference magnitudes stay below ~log(2L/h); at 256
        // nodes the identity holds to the rounding floor.
        let g = grid(-8);
        let b = SampledFunction::from_fn(g.clone(), |x| x[0].abs().ln()).unwrap();
        let err = cauchy_representation_check(&b, 256, 100, 5).unwrap();
        assert!(err <= 1e-8, "max error {err}");

        // Spectral doubling where truncation is visible above the floor:
        // |d| <= 4 at 8 -> 16 nodes drops the error by far more than 100x.
        let e8 = cauchy_identity_error(4.0, 16);
        let e16 = cauchy_identity_error(4.0, 32);
        assert!(e8 / e16 >= 100.0, "{e8} / {e16}");

        assert!(cauchy_representation_check(&b, 100, 10, 0).is_err(), "nodes must be a power of two");
    }
}
