//! Dirichlet restrictions of `H = Δ + v` to a box, their eigen-decomposition,
//! exponential-decay fits of eigenfunctions and the SULE statistic.

use serde::{Deserialize, Serialize};

use crate::cocycle::lyapunov_sweep;
use crate::error::{precondition, Error, Result};
use crate::model::{PotentialModel, Realization};

/// Default amplitude floor for decay fits.
pub const DEFAULT_FLOOR: f64 = 1e-14;
/// Default cap on implicit QL sweeps per eigenvalue.
pub const DEFAULT_MAX_ITER: usize = 60;

/// Symmetric tridiagonal operator with unit off-diagonal on sites
/// `first_site ..= first_site + dim − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteVolumeOperator {
    first_site: i64,
    diag: Vec<f64>,
}

impl FiniteVolumeOperator {
    pub fn new(first_site: i64, diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(precondition("operator dimension must be >= 1"));
        }
        if diag.iter().any(|x| !x.is_finite()) {
            return Err(precondition("non-finite potential"));
        }
        Ok(FiniteVolumeOperator { first_site, diag })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn first_site(&self) -> i64 {
        self.first_site
    }

    pub fn last_site(&self) -> i64 {
        self.first_site + self.diag.len() as i64 - 1
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `‖H‖_∞` bound `max|v| + 2`.
    pub fn norm_bound(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |m, x| m.max(x.abs())) + if self.dim() > 1 { 2.0 } else { 0.0 }
    }

    /// `y = Hx`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += x[i - 1];
                }
                if i + 1 < n {
                    y += x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Dense row-major matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = 1.0;
                m[i + 1][i] = 1.0;
            }
        }
        m
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_bound().max(1.0);
        let mut count = 0;
        let mut q = 1.0f64;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - 1.0 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }
}

/// Operator of `realization` restricted to the sites `lo ..= hi`.
pub fn build_operator(r: &Realization, lo: i64, hi: i64) -> Result<FiniteVolumeOperator> {
    if hi < lo {
        return Err(Error::EmptyRange { lo, hi });
    }
    let v = r.v_range(lo, hi).ok_or_else(|| {
        precondition(format!(
            "box [{lo}, {hi}] exceeds realization range [{}, {}]",
            r.n_lo(),
            r.n_hi()
        ))
    })?;
    FiniteVolumeOperator::new(lo, v.to_vec())
}

/// Eigenpairs sorted by eigenvalue; eigenvector `i` is row `i` of a
/// row-major `count × dim` array.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    first_site: i64,
    dim: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl EigenSystem {
    pub fn first_site(&self) -> i64 {
        self.first_site
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major `len × dim` eigenvector array.
    pub fn vectors_row_major(&self) -> &[f64] {
        &self.vectors
    }

    /// Array index of lattice site `n`, if inside the box.
    pub fn index_of(&self, n: i64) -> Option<usize> {
        let i = usize::try_from(n - self.first_site).ok()?;
        (i < self.dim).then_some(i)
    }

    /// `max_i ‖Hψ_i − E_iψ_i‖₂`.
    pub fn max_residual(&self, op: &FiniteVolumeOperator) -> f64 {
        (0..self.len())
            .map(|i| {
                let psi = self.vector(i);
                let h = op.apply(psi);
                h.iter()
                    .zip(psi)
                    .map(|(a, b)| (a - self.values[i] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max |⟨ψ_i, ψ_j⟩ − δ_ij|`.
    pub fn max_orthogonality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in i..self.len() {
                let dot: f64 = self.vector(i).iter().zip(self.vector(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Indices of eigenvalues in `[j.0, j.1]`.
    pub fn indices_in(&self, j: (f64, f64)) -> std::ops::Range<usize> {
        let a = self.values.partition_point(|&e| e < j.0);
        let b = self.values.partition_point(|&e| e <= j.1);
        a..b.max(a)
    }
}

/// Full decomposition with the default iteration cap.
pub fn diagonalize(op: &FiniteVolumeOperator) -> Result<EigenSystem> {
    diagonalize_with(op, DEFAULT_MAX_ITER)
}

/// Implicit-shift QL on the tridiagonal matrix, accumulating rotations into
/// the eigenvectors. Fails with [`Error::NoConvergence`] when an eigenvalue
/// needs more than `max_iter` sweeps.
pub fn diagonalize_with(op: &FiniteVolumeOperator, max_iter: usize) -> Result<EigenSystem> {
    let n = op.dim();
    let mut d = op.diag.clone();
    let mut e = vec![1.0f64; n];
    e[n - 1] = 0.0;
    // z row i holds the i-th eigenvector component list.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == max_iter {
                return Err(Error::NoConvergence(format!(
                    "eigenvalue {l} of {n} not converged after {max_iter} QL sweeps"
                )));
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zi1 = &mut hi[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        let mut row = z[i * n..(i + 1) * n].to_vec();
        fix_sign(&mut row);
        vectors.extend(row);
    }
    Ok(EigenSystem { first_site: op.first_site, dim: n, values, vectors })
}

/// Makes the largest-magnitude component positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenpairs with eigenvalues in `[lo, hi]`: Sturm bisection for the
/// values, inverse iteration with cluster reorthogonalization for the
/// vectors.
pub fn diagonalize_window(op: &FiniteVolumeOperator, lo: f64, hi: f64) -> Result<EigenSystem> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(precondition(format!("[{lo}, {hi}] is not an interval")));
    }
    let n = op.dim();
    let norm = op.norm_bound().max(1.0);
    // count_below is strict; nudge hi so eigenvalues equal to hi are kept.
    let k_lo = op.count_below(lo);
    let k_hi = op.count_below(next_up(hi));
    let mut values = Vec::with_capacity(k_hi - k_lo);
    for k in k_lo..k_hi {
        values.push(bisect_eigenvalue(op, k, -norm - 1.0, norm + 1.0));
    }
    let ortho_gap = 1e-3 * norm;
    let mut vectors: Vec<f64> = Vec::with_capacity(values.len() * n);
    let mut cluster_start = 0;
    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && lambda - values[j - 1] > ortho_gap {
            cluster_start = j;
        }
        let lu = TridiagLu::factor(op, lambda, norm);
        let mut x: Vec<f64> = (0..n).map(|i| start_vector(i, j)).collect();
        normalize(&mut x);
        for _ in 0..4 {
            lu.solve(&mut x);
            for c in cluster_start..j {
                let prev = &vectors[c * n..(c + 1) * n];
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(prev).for_each(|(xi, p)| *xi -= dot * p);
            }
            if !normalize(&mut x) {
                return Err(Error::NoConvergence(format!("inverse iteration collapsed at E = {lambda}")));
            }
        }
        fix_sign(&mut x);
        vectors.extend(x);
    }
    Ok(EigenSystem { first_site: op.first_site, dim: n, values, vectors })
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::MIN_POSITIVE;
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

/// `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
fn bisect_eigenvalue(op: &FiniteVolumeOperator, k: usize, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if op.count_below(mid) > k {
            b = mid;
        } else {
            a = mid;
        }
        if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Deterministic, non-degenerate starting vector.
fn start_vector(i: usize, j: usize) -> f64 {
    let h = (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (j as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    let h = (h ^ (h >> 31)).wrapping_mul(0x94d0_49bb_1331_11eb);
    1.0 + ((h >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.5
}

fn normalize(x: &mut [f64]) -> bool {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= norm);
    true
}

/// LU factorization with partial pivoting of `H − λ` (tridiagonal, with one
/// extra superdiagonal of fill-in).
struct TridiagLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagLu {
    fn factor(op: &FiniteVolumeOperator, lambda: f64, norm: f64) -> Self {
        let n = op.dim();
        let mut d: Vec<f64> = op.diag.iter().map(|x| x - lambda).collect();
        let mut dl = vec![1.0f64; n.saturating_sub(1)];
        let mut du = vec![1.0; n.saturating_sub(1)];
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * norm;
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swap[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        TridiagLu { dl, d, du, du2, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Least-squares fit `ln|ψ(m)| ≈ c − β|m − m̂|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Lattice site of `argmax |ψ|` (smallest on ties).
    pub m_hat: i64,
    pub beta: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to `[0, 1]`.
    pub r2: f64,
    /// Points above the floor used in the fit.
    pub points: usize,
}

/// Fits the decay of `psi` (entry `i` at site `first_site + i`) on the
/// entries with `|ψ| > floor`. Needs at least three such entries.
pub fn fit_decay(psi: &[f64], first_site: i64, floor: f64) -> Result<DecayFit> {
    let mut hat = 0;
    for (i, x) in psi.iter().enumerate() {
        if x.abs() > psi[hat].abs() {
            hat = i;
        }
    }
    let pts: Vec<(f64, f64)> = psi
        .iter()
        .enumerate()
        .filter(|(_, x)| x.abs() > floor)
        .map(|(i, x)| ((i as f64 - hat as f64).abs(), x.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return Err(precondition(format!("only {} amplitudes above the floor {floor}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 0.0 };
    Ok(DecayFit { m_hat: first_site + hat as i64, beta: -slope, intercept, r2, points: pts.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuleEntry {
    pub index: usize,
    pub energy: f64,
    /// `None` when fewer than three amplitudes clear the floor.
    pub fit: Option<DecayFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuleReport {
    pub entries: Vec<SuleEntry>,
    pub beta_floor: f64,
    /// Share of entries with `β̂ ≥ beta_floor`.
    pub fraction_above_floor: f64,
    /// `(ε, C_ε)`: the smallest constant with
    /// `|φ(m)| ≤ C_ε e^{ε|m̂| − β|m − m̂|}` over all entries, `β = beta_floor`.
    pub c_eps: Vec<(f64, f64)>,
}

pub const DEFAULT_EPS_GRID: [f64; 4] = [0.01, 0.05, 0.1, 0.2];

/// Decay fits for the eigenpairs with energy in `j`, and the empirical SULE
/// constants.
pub fn sule_report(es: &EigenSystem, j: (f64, f64), beta_floor: f64, eps_grid: &[f64], floor: f64) -> SuleReport {
    let mut entries = Vec::new();
    let mut c = vec![0.0f64; eps_grid.len()];
    for i in es.indices_in(j) {
        let psi = es.vector(i);
        let fit = fit_decay(psi, es.first_site, floor).ok();
        if let Some(f) = &fit {
            for (slot, &eps) in c.iter_mut().zip(eps_grid) {
                for (idx, x) in psi.iter().enumerate() {
                    let m = es.first_site + idx as i64;
                    let w = beta_floor * (m - f.m_hat).abs() as f64 - eps * f.m_hat.abs() as f64;
                    *slot = slot.max(x.abs() * w.exp());
                }
            }
        }
        entries.push(SuleEntry { index: i, energy: es.values[i], fit });
    }
    let above = entries.iter().filter(|e| e.fit.as_ref().is_some_and(|f| f.beta >= beta_floor)).count();
    let fraction_above_floor = if entries.is_empty() { 0.0 } else { above as f64 / entries.len() as f64 };
    SuleReport { entries, beta_floor, fraction_above_floor, c_eps: eps_grid.iter().copied().zip(c).collect() }
}

/// `ĥ/2` with `ĥ` the smallest Lyapunov estimate over a 5-point grid on `j`.
pub fn default_beta_floor(model: &PotentialModel, j: (f64, f64), seed: u64) -> Result<f64> {
    let grid: Vec<f64> = (0..5).map(|i| j.0 + (j.1 - j.0) * i as f64 / 4.0).collect();
    let est = lyapunov_sweep(model, &grid, 10_000, 16, seed)?;
    let h = est.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min);
    Ok(0.5 * h.max(0.0))
}
