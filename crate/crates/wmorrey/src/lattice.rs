//! Discretization substrate: offset lattices over a cube, balls, dyadic ball
//! families, and midpoint-rule quadrature with a fixed reduction order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset lattice over the cube `[-L, L]^n`.
///
/// Samples sit at `-L + (i + 1/2) h` per axis, so no sample lies closer to a
/// coordinate hyperplane than `h/2` and power weights stay finite everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_extent: f64,
    spacing: f64,
    per_axis: usize,
}

impl Grid {
    /// `n` must be 1 or 2, `half_extent/spacing` a power of two.
    pub fn new(n: usize, half_extent: f64, spacing: f64) -> Result<Grid> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidArgument(format!("dimension n = {n}; need 1 or 2")));
        }
        if !(spacing > 0.0) || !half_extent.is_finite() || half_extent <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "need L > 0 and h > 0, got L = {half_extent}, h = {spacing}"
            )));
        }
        let ratio = half_extent / spacing;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > 1e-9 * ratio || rounded < 1.0 || !is_power_of_two(rounded as u64)
        {
            return Err(Error::InvalidArgument(format!(
                "L/h = {ratio} is not a power of two"
            )));
        }
        Ok(Grid { n, half_extent, spacing, per_axis: 2 * rounded as usize })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Samples per axis, `2L/h`.
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn sample_count(&self) -> usize {
        self.per_axis.pow(self.n as u32)
    }

    /// Cell volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.n as i32)
    }

    /// Same cube, spacing halved.
    pub fn refine(&self) -> Grid {
        Grid::new(self.n, self.half_extent, self.spacing / 2.0).expect("refinement keeps invariants")
    }

    fn axis_coord(&self, i: usize) -> f64 {
        -self.half_extent + (i as f64 + 0.5) * self.spacing
    }

    /// Coordinates of the sample with linear (row-major) index `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.n {
            1 => [self.axis_coord(idx), 0.0],
            _ => [self.axis_coord(idx / self.per_axis), self.axis_coord(idx % self.per_axis)],
        }
    }

    /// Visits samples inside `ball` (strict membership `|x - c| < r`) in
    /// ascending linear-index order.
    pub fn visit_ball(&self, ball: &Ball, mut visit: impl FnMut(usize, [f64; 2])) {
        let (c, r) = (ball.center, ball.radius);
        match self.n {
            1 => {
                for i in self.axis_range(c[0], r) {
                    let x = self.axis_coord(i);
                    if (x - c[0]).abs() < r {
                        visit(i, [x, 0.0]);
                    }
                }
            }
            _ => {
                let r2 = r * r;
                for i in self.axis_range(c[0], r) {
                    let x0 = self.axis_coord(i);
                    let dx2 = (x0 - c[0]) * (x0 - c[0]);
                    if dx2 >= r2 {
                        continue;
                    }
                    let rem = (r2 - dx2).sqrt();
                    for j in self.axis_range(c[1], rem) {
                        let x1 = self.axis_coord(j);
                        let dy = x1 - c[1];
                        if dx2 + dy * dy < r2 {
                            visit(i * self.per_axis + j, [x0, x1]);
                        }
                    }
                }
            }
        }
    }

    fn axis_range(&self, center: f64, radius: f64) -> std::ops::Range<usize> {
        let lo = ((center - radius + self.half_extent) / self.spacing - 0.5).floor();
        let hi = ((center + radius + self.half_extent) / self.spacing - 0.5).ceil();
        let lo = lo.max(0.0) as usize;
        let hi = (hi.max(0.0) as usize + 1).min(self.per_axis);
        lo..hi.max(lo)
    }

    /// Discrete measure of `ball` on this grid: sample count times `h^n`.
    pub fn ball_measure(&self, ball: &Ball) -> f64 {
        let mut count = 0usize;
        self.visit_ball(ball, |_, _| count += 1);
        count as f64 * self.cell_volume()
    }
}

fn is_power_of_two(v: u64) -> bool {
    v != 0 && v & (v - 1) == 0
}

/// Open Euclidean ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    /// Validates `r >= h` and a nonempty intersection with the grid.
    pub fn new(grid: &Grid, center: [f64; 2], radius: f64) -> Result<Ball> {
        if radius < grid.spacing() {
            return Err(Error::InvalidArgument(format!(
                "ball radius {radius} below grid spacing {}",
                grid.spacing()
            )));
        }
        let ball = Ball { center, radius };
        let mut nonempty = false;
        grid.visit_ball(&ball, |_, _| nonempty = true);
        if !nonempty {
            return Err(Error::EmptyRegion);
        }
        Ok(ball)
    }

    /// `t B`: same center, radius scaled by `t`.
    pub fn scaled(&self, t: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * t }
    }

    pub fn contains(&self, x: [f64; 2], n: usize) -> bool {
        let dx = x[0] - self.center[0];
        if n == 1 {
            dx.abs() < self.radius
        } else {
            let dy = x[1] - self.center[1];
            dx * dx + dy * dy < self.radius * self.radius
        }
    }
}

/// Integration region: a ball or the whole cube.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Domain,
    Ball(&'a Ball),
}

/// Real-valued function given by one value per lattice sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<SampledFunction> {
        if values.len() != grid.sample_count() {
            return Err(Error::GridMismatch(format!(
                "value count {} does not match sample count {}",
                values.len(),
                grid.sample_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at sample {i}: {}",
                values[i]
            )));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<SampledFunction> {
        let values = (0..grid.sample_count()).map(|i| f(grid.point(i))).collect();
        SampledFunction::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> SampledFunction {
        let n = grid.sample_count();
        SampledFunction { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SampledFunction> {
        SampledFunction::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip(&self, other: &SampledFunction, f: impl Fn(f64, f64) -> f64) -> Result<SampledFunction> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("zip over different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        SampledFunction::new(self.grid.clone(), values)
    }

    pub fn abs(&self) -> SampledFunction {
        self.map(f64::abs).expect("abs keeps finiteness")
    }

    pub fn scale(&self, c: f64) -> Result<SampledFunction> {
        self.map(|v| c * v)
    }

    /// Largest `|f|` over samples in `region`.
    pub fn max_abs_in(&self, region: Region) -> f64 {
        let mut m = 0.0f64;
        match region {
            Region::Domain => {
                for &v in &self.values {
                    m = m.max(v.abs());
                }
            }
            Region::Ball(b) => {
                self.grid.visit_ball(b, |i, _| m = m.max(self.values[i].abs()));
            }
        }
        m
    }
}

/// Deterministic pairwise-tree sum; the reduction order depends only on the
/// slice layout, never on a parallel schedule.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Midpoint-rule integral `h^n * sum f(x_i)` over samples in `region`, summed
/// as a pairwise tree in canonical index order.
pub fn integrate(f: &SampledFunction, region: Region) -> Result<f64> {
    let grid = f.grid();
    let terms: Vec<f64> = match region {
        Region::Domain => f.values().to_vec(),
        Region::Ball(ball) => {
            let mut terms = Vec::new();
            grid.visit_ball(ball, |i, _| terms.push(f.value(i)));
            if terms.is_empty() {
                return Err(Error::EmptyRegion);
            }
            terms
        }
    };
    Ok(grid.cell_volume() * pairwise_sum(&terms))
}

/// Average of `f` over the samples of `ball`.
pub fn ball_average(f: &SampledFunction, ball: &Ball) -> Result<f64> {
    let mass = integrate(f, Region::Ball(ball))?;
    Ok(mass / f.grid().ball_measure(ball))
}

/// Pairs `(2^{j+1} B, 2^j B)` for `j = 1..=j_max`. Radii are kept unclipped;
/// integration over grid samples performs the clipping to the cube.
pub fn dyadic_annuli(ball: &Ball, j_max: usize) -> Vec<(Ball, Ball)> {
    (1..=j_max)
        .map(|j| (ball.scaled((1u64 << (j + 1)) as f64), ball.scaled((1u64 << j) as f64)))
        .collect()
}

/// Finite stand-in for "the supremum over all balls": a list of balls from a
/// dyadic radius ladder over a center sublattice.
#[derive(Debug, Clone)]
pub struct BallFamily {
    balls: Vec<Ball>,
    center_stride: usize,
}

impl BallFamily {
    /// Radius ladder `h, 2h, ..., 2L` at the origin and at every
    /// `center_stride`-th sample per axis.
    pub fn dyadic(grid: &Grid, center_stride: usize) -> BallFamily {
        let mut centers: Vec<[f64; 2]> = vec![[0.0, 0.0]];
        let stride = center_stride.max(1);
        match grid.dimension() {
            1 => {
                for i in (0..grid.per_axis()).step_by(stride) {
                    centers.push(grid.point(i));
                }
            }
            _ => {
                for i in (0..grid.per_axis()).step_by(stride) {
                    for j in (0..grid.per_axis()).step_by(stride) {
                        centers.push(grid.point(i * grid.per_axis() + j));
                    }
                }
            }
        }
        let mut balls = Vec::new();
        for &c in &centers {
            for r in radius_ladder(grid) {
                if let Ok(b) = Ball::new(grid, c, r) {
                    balls.push(b);
                }
            }
        }
        BallFamily { balls, center_stride: stride }
    }

    /// Family over an explicit ball list.
    pub fn from_balls(balls: Vec<Ball>) -> Result<BallFamily> {
        if balls.is_empty() {
            return Err(Error::InvalidArgument("ball family must be nonempty".into()));
        }
        Ok(BallFamily { balls, center_stride: 0 })
    }

    /// Origin-centered ladder only; the sub-family where power-weight
    /// degeneracy lives.
    pub fn origin_dyadic(grid: &Grid) -> BallFamily {
        let balls = radius_ladder(grid)
            .into_iter()
            .filter_map(|r| Ball::new(grid, [0.0, 0.0], r).ok())
            .collect();
        BallFamily { balls, center_stride: 0 }
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn center_stride(&self) -> usize {
        self.center_stride
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// The family member covering the whole cube, if present.
    pub fn covering_ball(&self, grid: &Grid) -> Option<&Ball> {
        let need = grid.half_extent() * (grid.dimension() as f64).sqrt();
        self.balls
            .iter()
            .find(|b| b.center == [0.0, 0.0] && b.radius > need)
    }
}

fn radius_ladder(grid: &Grid) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = grid.spacing();
    let top = 2.0 * grid.half_extent();
    while r <= top * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2.0;
    }
    radii
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(l: f64, h: f64) -> Arc<Grid> {
        Arc::new(Grid::new(1, l, h).unwrap())
    }

    #[test]
    fn grid_invariants() {
        let g = grid_1d(1.0, 2f64.powi(-8));
        assert_eq!(g.sample_count(), 512);
        let min_abs = (0..g.sample_count())
            .map(|i| g.point(i)[0].abs())
            .fold(f64::INFINITY, f64::min);
        assert!(min_abs >= g.spacing() / 2.0 - 1e-15);
        assert!(Grid::new(1, 1.0, 0.3).is_err());
        assert!(Grid::new(3, 1.0, 0.25).is_err());
    }

    #[test]
    fn integrate_constant_over_ball() {
        let g = grid_1d(1.0, 2f64.powi(-8));
        let f = SampledFunction::from_fn(g.clone(), |_| 1.0).unwrap();
        let b = Ball::new(&g, [0.0, 0.0], 1.0).unwrap();
        let v = integrate(&f, Region::Ball(&b)).unwrap();
        assert!((v - 2.0).abs() <= g.spacing(), "got {v}");
    }

    #[test]
    fn integrate_odd_function_cancels() {
        let g = grid_1d(1.0, 2f64.powi(-8));
        let f = SampledFunction::from_fn(g.clone(), |x| x[0]).unwrap();
        let b = Ball::new(&g, [0.0, 0.0], 0.5).unwrap();
        let v = integrate(&f, Region::Ball(&b)).unwrap();
        assert!(v.abs() <= 1e-12, "got {v}");
    }

    #[test]
    fn integrate_inverse_sqrt_singularity() {
        // Oracle: h and h/2 runs Richardson-extrapolate toward the
        // antiderivative value 2*2*sqrt(1) = 4.
        let g = grid_1d(1.0, 2f64.powi(-10));
        let f = SampledFunction::from_fn(g.clone(), |x| x[0].abs().powf(-0.5)).unwrap();
        let v = integrate(&f, Region::Domain).unwrap();
        assert!((v - 4.0).abs() / 4.0 < 0.02, "got {v}");

        let g2 = Arc::new(g.refine());
        let f2 = SampledFunction::from_fn(g2, |x| x[0].abs().powf(-0.5)).unwrap();
        let v2 = integrate(&f2, Region::Domain).unwrap();
        assert!((v2 - 4.0).abs() < (v - 4.0).abs(), "refinement should tighten: {v} -> {v2}");
    }

    #[test]
    fn integrate_empty_region_errors() {
        let g = grid_1d(1.0, 0.25);
        let f = SampledFunction::from_fn(g.clone(), |_| 1.0).unwrap();
        // Center far outside the cube: constructor refuses it, and a raw ball
        // fed to integrate reports the empty region.
        assert!(matches!(Ball::new(&g, [10.0, 0.0], 0.5), Err(Error::EmptyRegion)));
        let raw = Ball { center: [10.0, 0.0], radius: 0.5 };
        assert!(matches!(integrate(&f, Region::Ball(&raw)), Err(Error::EmptyRegion)));
    }

    #[test]
    fn annuli_double_dyadically() {
        let g = grid_1d(1.0, 2f64.powi(-6));
        let h = g.spacing();
        let b = Ball::new(&g, [0.0, 0.0], 4.0 * h).unwrap();
        let pairs = dyadic_annuli(&b, 2);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0.radius, 16.0 * h);
        assert_eq!(pairs[0].1.radius, 8.0 * h);
        assert_eq!(pairs[1].0.radius, 32.0 * h);
        assert_eq!(pairs[1].1.radius, 16.0 * h);
        for (j, (outer, _)) in pairs.iter().enumerate() {
            assert_eq!(outer.radius, 2f64.powi(j as i32 + 2) * b.radius);
        }
    }

    #[test]
    fn family_contains_covering_ball() {
        let g = grid_1d(1.0, 2f64.powi(-6));
        let fam = BallFamily::dyadic(&g, 16);
        assert!(!fam.is_empty());
        assert!(fam.covering_ball(&g).is_some());
        let g2 = Arc::new(Grid::new(2, 1.0, 2f64.powi(-4)).unwrap());
        let fam2 = BallFamily::dyadic(&g2, 8);
        assert!(fam2.covering_ball(&g2).is_some());
    }

    #[test]
    fn two_dim_ball_measure_approximates_area() {
        let g = Arc::new(Grid::new(2, 1.0, 2f64.powi(-6)).unwrap());
        let b = Ball::new(&g, [0.0, 0.0], 0.5).unwrap();
        let area = g.ball_measure(&b);
        let exact = std::f64::consts::PI * 0.25;
        assert!((area - exact).abs() / exact < 0.01, "got {area}, want {exact}");
    }
}
