//! Transfer matrices `Π_{n,E} = [[E − v_n, −1], [1, 0]]`, their renormalized
//! products, energy derivatives and Lyapunov-exponent estimates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::linalg::{CMat2, Mat2};
use crate::model::{sample_realization_stream, PotentialModel, PotentialStream, Realization};

/// One-step transfer matrix.
#[inline]
pub fn step_matrix(v: f64, e: f64) -> Mat2 {
    Mat2::new(e - v, -1.0, 1.0, 0.0)
}

/// Inverse of [`step_matrix`].
#[inline]
pub fn step_inverse(v: f64, e: f64) -> Mat2 {
    Mat2::new(0.0, 1.0, -1.0, e - v)
}

/// Energy derivative of a single step, `dΠ/dE`.
pub const STEP_DERIVATIVE: Mat2 = Mat2::new(1.0, 0.0, 0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `Π_N ⋯ Π_1`.
    Forward,
    /// `(Π_N ⋯ Π_1)^{-1} = Π_1^{-1} ⋯ Π_N^{-1}`.
    Backward,
}

/// Factors outside `[SCALE_LO, SCALE_HI]` are flushed into the log.
const SCALE_HI: f64 = 1e150;
const SCALE_LO: f64 = 1e-150;

/// Product `exp(log_norm) · unit` with `‖unit‖_F = 1` after every step
/// (the empty product is stored as `Id`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenormalizedProduct {
    direction: Direction,
    unit: Mat2,
    log_norm: f64,
    /// Renormalization factors not yet folded into `log_norm`.
    pending: f64,
    steps: usize,
}

impl RenormalizedProduct {
    /// Empty product: `unit = Id`, `log_norm = 0`.
    pub fn identity(direction: Direction) -> Self {
        RenormalizedProduct {
            direction,
            unit: Mat2::IDENTITY,
            log_norm: 0.0,
            pending: 1.0,
            steps: 0,
        }
    }

    /// Appends site potential `v`: left-multiplies `Π` (forward) or
    /// right-multiplies `Π^{-1}` (backward).
    #[inline]
    pub fn push(&mut self, v: f64, e: f64) {
        let m = match self.direction {
            Direction::Forward => step_matrix(v, e) * self.unit,
            Direction::Backward => self.unit * step_inverse(v, e),
        };
        self.absorb(m);
    }

    #[inline]
    fn absorb(&mut self, m: Mat2) -> f64 {
        let f = m.frobenius();
        let inv = 1.0 / f;
        self.unit = m.scale(inv);
        self.pending *= f;
        if !(SCALE_LO..=SCALE_HI).contains(&self.pending) {
            self.flush();
        }
        self.steps += 1;
        inv
    }

    fn flush(&mut self) {
        self.log_norm += self.pending.ln();
        self.pending = 1.0;
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Frobenius-normalized matrix.
    pub fn unit(&self) -> Mat2 {
        self.unit
    }

    /// Log of the Frobenius norm of the product.
    pub fn log_norm(&self) -> f64 {
        self.log_norm + self.pending.ln()
    }

    /// Log of the operator norm of the product; `≥ 0` up to rounding since
    /// the product has determinant one.
    pub fn log_operator_norm(&self) -> f64 {
        self.log_norm() + self.unit.operator_norm().ln()
    }

    /// Explicit product; overflows for long hyperbolic words.
    pub fn matrix(&self) -> Mat2 {
        self.unit.scale(self.log_norm().exp())
    }

    /// `det(unit) · exp(2 log_norm)`, the determinant of the represented product.
    pub fn determinant(&self) -> f64 {
        self.unit.det() * (2.0 * self.log_norm()).exp()
    }

    /// `self · earlier`: the product of a later segment after an earlier one.
    pub fn compose(&self, earlier: &RenormalizedProduct) -> RenormalizedProduct {
        let (a, b) = match self.direction {
            Direction::Forward => (self.unit, earlier.unit),
            Direction::Backward => (earlier.unit, self.unit),
        };
        let m = a * b;
        let f = m.frobenius();
        RenormalizedProduct {
            direction: self.direction,
            unit: m.scale(1.0 / f),
            log_norm: self.log_norm() + earlier.log_norm() + f.ln(),
            pending: 1.0,
            steps: self.steps + earlier.steps,
        }
    }
}

/// Renormalized `Π_N ⋯ Π_1` (forward) or its inverse (backward) for the
/// potential slice `v = (v_1, …, v_N)`.
pub fn product(v: &[f64], e: f64, direction: Direction) -> RenormalizedProduct {
    let mut p = RenormalizedProduct::identity(direction);
    for &x in v {
        p.push(x, e);
    }
    p
}

/// `T_{N,E}` for any integer `N`, from a realization covering the sites
/// `1..=N` (`N > 0`) or `N+1..=0` (`N < 0`).
pub fn transfer_matrix(r: &Realization, e: f64, n: i64) -> Result<RenormalizedProduct> {
    let (lo, hi, direction) = if n >= 0 { (1, n, Direction::Forward) } else { (n + 1, 0, Direction::Backward) };
    let v = r
        .v_range(lo, hi)
        .ok_or_else(|| precondition(format!("realization does not cover sites [{lo}, {hi}]")))?;
    // For N < 0, T_N = Π_{N+1}^{-1} ⋯ Π_0^{-1} = (Π_0 ⋯ Π_{N+1})^{-1}.
    Ok(product(v, e, direction))
}

/// `dT/dE`, scaled by the same factor as its product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeCompanion {
    unit: Mat2,
    log_scale: f64,
}

impl DerivativeCompanion {
    /// Scaled derivative; multiply by `exp(log_scale)` for `dT/dE`.
    pub fn unit(&self) -> Mat2 {
        self.unit
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn matrix(&self) -> Mat2 {
        self.unit.scale(self.log_scale.exp())
    }
}

/// Forward product together with its energy derivative, from
/// `dT_n = dΠ · T_{n−1} + Π_n · dT_{n−1}`.
pub fn product_with_derivative(v: &[f64], e: f64) -> (RenormalizedProduct, DerivativeCompanion) {
    let mut p = RenormalizedProduct::identity(Direction::Forward);
    let mut d = Mat2::new(0.0, 0.0, 0.0, 0.0);
    for &x in v {
        let pi = step_matrix(x, e);
        let next_d = (STEP_DERIVATIVE * p.unit).add(&(pi * d));
        let inv = p.absorb(pi * p.unit);
        d = next_d.scale(inv);
    }
    let log_scale = p.log_norm();
    (p, DerivativeCompanion { unit: d, log_scale })
}

/// Monte-Carlo estimate of `L_n(E)/n = 𝔼 log‖T_{n,E}‖ / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub realizations: usize,
    pub seed: u64,
}

/// Lyapunov estimates at every energy for a single length `n`.
pub fn lyapunov_sweep(
    model: &PotentialModel,
    energies: &[f64],
    n: usize,
    realizations: usize,
    seed: u64,
) -> Result<Vec<LyapunovEstimate>> {
    lyapunov_sweep_checkpoints(model, energies, &[n], realizations, seed)
}

/// Lyapunov estimates at every energy and every checkpoint length, from one
/// pass per realization. Realization `r` uses stream `r` of `seed` on sites
/// `1, 2, …`; rows are ordered energy-major. Results do not depend on the
/// number of rayon workers.
pub fn lyapunov_sweep_checkpoints(
    model: &PotentialModel,
    energies: &[f64],
    checkpoints: &[usize],
    realizations: usize,
    seed: u64,
) -> Result<Vec<LyapunovEstimate>> {
    if realizations == 0 {
        return Err(precondition("realizations must be >= 1"));
    }
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(precondition("checkpoints must be positive and strictly increasing"));
    }
    if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
        return Err(precondition(format!("energy {e} is not finite")));
    }
    let n_max = *checkpoints.last().unwrap();
    let cells: Vec<Vec<f64>> = (0..realizations as u64)
        .into_par_iter()
        .map(|stream| {
            let mut products: Vec<RenormalizedProduct> =
                energies.iter().map(|_| RenormalizedProduct::identity(Direction::Forward)).collect();
            let mut out = vec![0.0; energies.len() * checkpoints.len()];
            let mut next_cp = 0;
            for (i, v) in PotentialStream::new(model, seed, stream, 1).take(n_max).enumerate() {
                for (p, &e) in products.iter_mut().zip(energies) {
                    p.push(v, e);
                }
                if i + 1 == checkpoints[next_cp] {
                    for (ei, p) in products.iter().enumerate() {
                        out[ei * checkpoints.len() + next_cp] = p.log_operator_norm() / (i + 1) as f64;
                    }
                    next_cp += 1;
                }
            }
            out
        })
        .collect();
    let mut rows = Vec::with_capacity(energies.len() * checkpoints.len());
    for (ei, &energy) in energies.iter().enumerate() {
        for (ci, &n) in checkpoints.iter().enumerate() {
            let slot = ei * checkpoints.len() + ci;
            let (mean, stderr) = mean_stderr(cells.iter().map(|c| c[slot]));
            rows.push(LyapunovEstimate { energy, n, mean, stderr, realizations, seed });
        }
    }
    Ok(rows)
}

/// Sample mean and `std / √count` (zero for a single sample).
pub(crate) fn mean_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (count, sum) = xs.clone().fold((0usize, 0.0), |(c, s), x| (c + 1, s + x));
    let mean = sum / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    let std = (ss / (count - 1) as f64).sqrt();
    (mean, std / (count as f64).sqrt())
}

/// Empirical extrema for the regularity conditions on block cocycles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct B2B3Report {
    /// Max of `‖A(E)‖` and `‖dA/dE‖` over sampled blocks and the energy grid.
    pub m_hat: f64,
    /// Min of the projective angle derivative over blocks, energies, directions.
    pub delta_hat: f64,
    pub blocks: usize,
    pub block_len: usize,
    pub energies: usize,
    pub directions: usize,
}

impl B2B3Report {
    pub fn monotone(&self) -> bool {
        self.delta_hat > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct B2B3Options {
    /// Block length; `None` means `10k`.
    pub block_len: Option<usize>,
    pub energy_points: usize,
    pub directions: usize,
}

impl Default for B2B3Options {
    fn default() -> Self {
        B2B3Options { block_len: None, energy_points: 33, directions: 64 }
    }
}

/// Rate of change in `E` of the direction of `A(E)u`, measured clockwise:
/// `⟨(Au)^⊥, (dA/dE)u⟩ / |Au|²` with `(w₁, w₂)^⊥ = (w₂, −w₁)`.
pub fn angle_derivative(a: &Mat2, da: &Mat2, u: [f64; 2]) -> f64 {
    let w = a.apply(u);
    let dw = da.apply(u);
    (w[1] * dw[0] - w[0] * dw[1]) / (w[0] * w[0] + w[1] * w[1])
}

/// `(max(‖A‖, ‖A′‖), min angle derivative)` for one block at one energy.
pub fn block_b2_b3(v_block: &[f64], e: f64, directions: usize) -> Result<(f64, f64)> {
    if v_block.is_empty() {
        return Err(precondition("empty block"));
    }
    if directions == 0 {
        return Err(precondition("direction grid is empty"));
    }
    let (p, d) = product_with_derivative(v_block, e);
    // Rescale both by the same positive factor: the angle derivative is
    // invariant, norms are restored below.
    let (a, da) = (p.unit(), d.unit());
    let scale = p.log_norm().exp();
    let m = (a.operator_norm() * scale).max(da.operator_norm() * scale);
    let mut delta = f64::INFINITY;
    let grid = (0..directions).map(|j| {
        let t = std::f64::consts::PI * j as f64 / directions as f64;
        [t.cos(), t.sin()]
    });
    for u in grid.chain(a.right_singular_vectors()) {
        delta = delta.min(angle_derivative(&a, &da, u));
    }
    Ok((m, delta))
}

/// Samples `blocks` independent blocks of the model and evaluates
/// [`block_b2_b3`] on an energy grid over `j`.
pub fn check_b2_b3(
    model: &PotentialModel,
    j: (f64, f64),
    blocks: usize,
    seed: u64,
    opts: &B2B3Options,
) -> Result<B2B3Report> {
    if blocks == 0 {
        return Err(precondition("samples must be >= 1"));
    }
    if !(j.0.is_finite() && j.1.is_finite() && j.0 <= j.1) {
        return Err(precondition(format!("J = [{}, {}] is not a compact interval", j.0, j.1)));
    }
    let block_len = opts.block_len.unwrap_or(10 * model.k());
    if block_len == 0 {
        return Err(precondition("empty block"));
    }
    let points = opts.energy_points.max(1);
    let energies: Vec<f64> = if points == 1 {
        vec![0.5 * (j.0 + j.1)]
    } else {
        (0..points).map(|i| j.0 + (j.1 - j.0) * i as f64 / (points - 1) as f64).collect()
    };
    let per_block: Vec<Result<(f64, f64)>> = (0..blocks as u64)
        .into_par_iter()
        .map(|stream| {
            let r = sample_realization_stream(model, seed, stream, 1, block_len as i64)?;
            let mut acc = (0.0f64, f64::INFINITY);
            for &e in &energies {
                let (m, d) = block_b2_b3(r.v(), e, opts.directions)?;
                acc = (acc.0.max(m), acc.1.min(d));
            }
            Ok(acc)
        })
        .collect();
    let mut m_hat = 0.0f64;
    let mut delta_hat = f64::INFINITY;
    for res in per_block {
        let (m, d) = res?;
        m_hat = m_hat.max(m);
        delta_hat = delta_hat.min(d);
    }
    Ok(B2B3Report {
        m_hat,
        delta_hat,
        blocks,
        block_len,
        energies: energies.len(),
        directions: opts.directions,
    })
}

/// Both sides of `‖T_{n,E+δ}‖ ≤ K(N) exp(K(N)|n||δ|)` for the worst `|n| ≤ N`,
/// in logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// `log K(N)`, `K(N) = sup_{|m|,|n| ≤ N} ‖T_{[m,n],E}‖`.
    pub log_k: f64,
    /// The `n` with the smallest margin `log rhs − log lhs`.
    pub worst_n: i64,
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub holds: bool,
}

impl PerturbationReport {
    pub fn k_n(&self) -> f64 {
        self.log_k.exp()
    }
}

/// Complex-energy renormalized product.
#[derive(Clone, Copy, Debug)]
struct ComplexProduct {
    unit: CMat2,
    log_norm: f64,
}

impl ComplexProduct {
    fn identity() -> Self {
        ComplexProduct { unit: CMat2::identity(), log_norm: 0.0 }
    }

    fn absorb(&mut self, m: CMat2) {
        let f = m.frobenius();
        self.unit = m.scale(1.0 / f);
        self.log_norm += f.ln();
    }

    fn log_operator_norm(&self) -> f64 {
        self.log_norm + self.unit.operator_norm().ln()
    }
}

/// `log ‖T_{[m,n],E}‖` for all `|m|, |n| ≤ N`, maximized.
pub fn log_k_of_n(r: &Realization, e: f64, n_max: i64) -> Result<f64> {
    if n_max < 1 {
        return Err(precondition("N must be >= 1"));
    }
    let v = r
        .v_range(-n_max, n_max)
        .ok_or_else(|| precondition(format!("realization does not cover [-{n_max}, {n_max}]")))?;
    let at = |site: i64| v[(site + n_max) as usize];
    let mut best = 0.0f64;
    for m in -n_max..=n_max {
        // Upward: T_{[m,n]} = Π_n ⋯ Π_m for n ≥ m.
        let mut up = RenormalizedProduct::identity(Direction::Forward);
        for n in m..=n_max {
            up.push(at(n), e);
            best = best.max(up.log_operator_norm());
        }
        // Downward, n < m − 1: T_{[m,n]} = Π_{n+1}^{-1} ⋯ Π_{m−1}^{-1}. The loop builds the
        // reversed product; since Πᵀ = DΠD with D = diag(1, −1), both have the same norm.
        let mut down = RenormalizedProduct::identity(Direction::Backward);
        for n in (-n_max..m - 1).rev() {
            down.push(at(n + 1), e);
            best = best.max(down.log_operator_norm());
        }
    }
    Ok(best)
}

/// Evaluates the perturbation inequality at every `|n| ≤ N`. The realization
/// must cover `[−N, N]`.
pub fn perturbation_bound_check(
    r: &Realization,
    e: f64,
    n_max: i64,
    delta: Complex64,
) -> Result<PerturbationReport> {
    let log_k = log_k_of_n(r, e, n_max)?;
    let v = r.v_range(-n_max, n_max).unwrap();
    let at = |site: i64| v[(site + n_max) as usize];
    let z = Complex64::new(e, 0.0) + delta;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let k = log_k.exp();
    let abs_delta = delta.norm();
    let mut worst: Option<(i64, f64, f64)> = None;
    let mut consider = |n: i64, log_lhs: f64| {
        let log_rhs = log_k + k * n.unsigned_abs() as f64 * abs_delta;
        let margin = log_rhs - log_lhs;
        if worst.is_none_or(|(_, l, r)| margin < r - l) {
            worst = Some((n, log_lhs, log_rhs));
        }
    };
    consider(0, 0.0);
    let mut fwd = ComplexProduct::identity();
    for n in 1..=n_max {
        fwd.absorb(CMat2::new(z - at(n), -one, one, zero) * fwd.unit);
        consider(n, fwd.log_operator_norm());
    }
    let mut bwd = ComplexProduct::identity();
    for n in (-n_max..0).rev() {
        // T_n = Π_{n+1}^{-1} T_{n+1}.
        let inv = CMat2::new(zero, one, -one, z - at(n + 1));
        bwd.absorb(inv * bwd.unit);
        consider(n, bwd.log_operator_norm());
    }
    let (worst_n, log_lhs, log_rhs) = worst.unwrap();
    let holds = log_lhs <= log_rhs + 1e-10 * (1.0 + log_rhs.abs());
    Ok(PerturbationReport { log_k, worst_n, log_lhs, log_rhs, holds })
}

/// Checks that a renormalized product never lost finiteness.
pub fn ensure_finite(p: &RenormalizedProduct) -> Result<()> {
    if p.unit().is_finite() && p.log_norm().is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition("non-finite transfer-matrix product".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_matrix_entries() {
        assert_eq!(step_matrix(0.0, 0.0), Mat2::new(0.0, -1.0, 1.0, 0.0));
        assert_eq!(step_matrix(1.0, 3.0), Mat2::new(2.0, -1.0, 1.0, 0.0));
        assert_eq!(step_matrix(0.3, -1.7).det(), 1.0);
        assert!((step_matrix(0.3, 2.0) * step_inverse(0.3, 2.0)).max_abs_diff(&Mat2::IDENTITY) == 0.0);
    }

    #[test]
    fn empty_product_is_identity() {
        let p = product(&[], 1.0, Direction::Forward);
        assert!(p.matrix().max_abs_diff(&Mat2::IDENTITY) < 1e-15);
        assert!(p.log_operator_norm().abs() < 1e-15);
        assert_eq!(p.steps(), 0);
    }

    #[test]
    fn fourth_power_of_rotation() {
        let p = product(&[0.0; 4], 0.0, Direction::Forward);
        assert!(p.matrix().max_abs_diff(&Mat2::IDENTITY) < 1e-15);
    }

    #[test]
    fn two_step_derivative_oracle() {
        // T_2(E) = [[E²−1, −E], [E, −1]], so dT_2/dE at E = 0 is [[0, −1], [1, 0]].
        let (_, d) = product_with_derivative(&[0.0, 0.0], 0.0);
        assert!(d.matrix().max_abs_diff(&Mat2::new(0.0, -1.0, 1.0, 0.0)) < 1e-15);
        let (_, d) = product_with_derivative(&[0.4], 1.3);
        assert!(d.matrix().max_abs_diff(&STEP_DERIVATIVE) < 1e-15);
    }

    #[test]
    fn single_step_angle_derivative() {
        for &e in &[-3.0, -0.5, 0.0, 1.0, 2.5] {
            let a = step_matrix(0.0, e);
            assert_eq!(angle_derivative(&a, &STEP_DERIVATIVE, [0.0, 1.0]), 0.0);
            assert!(angle_derivative(&a, &STEP_DERIVATIVE, [1.0, 0.0]) > 0.0);
        }
        assert!(block_b2_b3(&[], 0.0, 64).is_err());
    }

    #[test]
    fn mean_stderr_small_samples() {
        assert_eq!(mean_stderr([2.0].into_iter()), (2.0, 0.0));
        let (m, s) = mean_stderr([1.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
