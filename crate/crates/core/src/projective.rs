//! Möbius actions on ℂP¹, common image points and invariant pairs of
//! families of transfer matrices, the large-energy certificate and the
//! exceptional-energy scan.

use std::fmt;

use num_complex::Complex64;
use num_bigint::BigInt;
use num_traits::{Float, One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::{product, Direction};
use crate::error::{precondition, Error, Result};
use crate::linalg::Mat2;
use crate::model::{admissible_family, conditional_support, PotentialModel};

/// Projective equality tolerance.
pub const PROJ_TOL: f64 = 1e-9;

/// Relative size below which `N` is treated as a multiple of the identity.
const SCALAR_TOL: f64 = 1e-13;

/// Point `[z₁ : z₂]` of ℂP¹, scaled so that `max(|z₁|, |z₂|) = 1`.
#[derive(Clone, Copy, PartialEq)]
pub struct ProjectivePoint {
    z1: Complex64,
    z2: Complex64,
}

impl fmt::Debug for ProjectivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} : {}]", self.z1, self.z2)
    }
}

impl ProjectivePoint {
    pub fn new(z1: Complex64, z2: Complex64) -> Result<Self> {
        let s = z1.norm().max(z2.norm());
        if !(s.is_finite() && s > 0.0) {
            return Err(precondition("projective point needs finite, not both zero coordinates"));
        }
        Ok(ProjectivePoint { z1: z1 / s, z2: z2 / s })
    }

    pub fn real(x: f64, y: f64) -> Result<Self> {
        Self::new(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
    }

    /// `[1 : z]`, the point with chart coordinate `z = ψ₂/ψ₁`.
    pub fn from_chart(z: Complex64) -> Self {
        if z.norm() <= 1.0 {
            ProjectivePoint { z1: Complex64::new(1.0, 0.0), z2: z }
        } else {
            ProjectivePoint { z1: 1.0 / z, z2: Complex64::new(1.0, 0.0) }
        }
    }

    /// `[0 : 1]`.
    pub fn infinity() -> Self {
        ProjectivePoint { z1: Complex64::new(0.0, 0.0), z2: Complex64::new(1.0, 0.0) }
    }

    pub fn coords(&self) -> (Complex64, Complex64) {
        (self.z1, self.z2)
    }

    /// Chart coordinate `z₂/z₁`, `None` at infinity.
    pub fn chart(&self) -> Option<Complex64> {
        (self.z1 != Complex64::new(0.0, 0.0)).then(|| self.z2 / self.z1)
    }

    /// `|z₁w₂ − z₂w₁| / (|z||w|)`: sine of the Fubini–Study angle, in `[0, 1]`.
    pub fn distance(&self, o: &ProjectivePoint) -> f64 {
        let cross = (self.z1 * o.z2 - self.z2 * o.z1).norm();
        let n = (self.z1.norm_sqr() + self.z2.norm_sqr()).sqrt() * (o.z1.norm_sqr() + o.z2.norm_sqr()).sqrt();
        (cross / n).min(1.0)
    }

    pub fn approx_eq(&self, o: &ProjectivePoint, tol: f64) -> bool {
        self.distance(o) <= tol
    }

    /// Complex conjugate point.
    pub fn conj(&self) -> Self {
        ProjectivePoint { z1: self.z1.conj(), z2: self.z2.conj() }
    }
}

/// Homogeneous action of a real matrix on ℂP¹.
pub fn mobius_apply(a: &Mat2, p: &ProjectivePoint) -> ProjectivePoint {
    let w1 = p.z1 * a.a + p.z2 * a.b;
    let w2 = p.z1 * a.c + p.z2 * a.d;
    let s = w1.norm().max(w2.norm());
    ProjectivePoint { z1: w1 / s, z2: w2 / s }
}

/// Binary quadratic form `q₀x² + q₁xy + q₂y²` up to scale, standing for its
/// unordered root pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticForm {
    q: [Complex64; 3],
}

impl QuadraticForm {
    pub fn new(q0: Complex64, q1: Complex64, q2: Complex64) -> Result<Self> {
        let s = q0.norm().max(q1.norm()).max(q2.norm());
        if !(s.is_finite() && s > 0.0) {
            return Err(precondition("quadratic form must be finite and nonzero"));
        }
        Ok(QuadraticForm { q: [q0 / s, q1 / s, q2 / s] })
    }

    pub fn real(q0: f64, q1: f64, q2: f64) -> Result<Self> {
        Self::new(Complex64::new(q0, 0.0), Complex64::new(q1, 0.0), Complex64::new(q2, 0.0))
    }

    /// Form vanishing exactly at `p` and `q`: `(p₂x − p₁y)(q₂x − q₁y)`.
    pub fn from_pair(p: &ProjectivePoint, q: &ProjectivePoint) -> Self {
        let q0 = p.z2 * q.z2;
        let q1 = -(p.z2 * q.z1 + p.z1 * q.z2);
        let q2 = p.z1 * q.z1;
        // Both factors are nonzero, so the product is nonzero.
        QuadraticForm::new(q0, q1, q2).expect("product of nonzero linear forms")
    }

    pub fn coefficients(&self) -> [Complex64; 3] {
        self.q
    }

    pub fn roots(&self) -> [ProjectivePoint; 2] {
        quadratic_roots(self.q[0], self.q[1], self.q[2]).expect("nonzero form")
    }

    /// Image pair under `A`, via the symmetric-square action `q ↦ q ∘ A^{-1}`.
    pub fn transform(&self, a: &Mat2) -> QuadraticForm {
        let s = sym2(a);
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (i, row) in s.iter().enumerate() {
            out[i] = row[0] * self.q[0] + row[1] * self.q[1] + row[2] * self.q[2];
        }
        QuadraticForm::new(out[0], out[1], out[2]).unwrap_or(*self)
    }

    /// Scale-invariant distance `‖F ∧ G‖ / (‖F‖‖G‖)`.
    pub fn distance(&self, o: &QuadraticForm) -> f64 {
        let (f, g) = (&self.q, &o.q);
        let mut wedge = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                wedge += (f[i] * g[j] - f[j] * g[i]).norm_sqr();
            }
        }
        let nf: f64 = f.iter().map(|c| c.norm_sqr()).sum();
        let ng: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        (wedge / (nf * ng)).sqrt().min(1.0)
    }
}

/// Matrix of `q ↦ q ∘ A^{-1}` on `(q₀, q₁, q₂)` for `det A = 1`, written with
/// the adjugate so that `S(A)S(B) = S(AB)` holds for any `A, B`.
pub fn sym2(a: &Mat2) -> [[f64; 3]; 3] {
    let (a, b, c, d) = (a.a, a.b, a.c, a.d);
    [
        [d * d, -c * d, c * c],
        [-2.0 * b * d, a * d + b * c, -2.0 * a * c],
        [b * b, -a * b, a * a],
    ]
}

/// Roots of `q₀x² + q₁xy + q₂y²` in ℂP¹ (with multiplicity); `None` for the
/// zero form.
pub fn quadratic_roots(q0: Complex64, q1: Complex64, q2: Complex64) -> Option<[ProjectivePoint; 2]> {
    let s = q0.norm().max(q1.norm()).max(q2.norm());
    if !(s > 0.0) || !s.is_finite() {
        return None;
    }
    let (q0, q1, q2) = (q0 / s, q1 / s, q2 / s);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if q0 == zero && q2 == zero {
        return Some([ProjectivePoint::real(1.0, 0.0).unwrap(), ProjectivePoint::infinity()]);
    }
    // Solve a t² + b t + c = 0 with |a| ≥ |c|, a ≠ 0.
    let swap = q0.norm() < q2.norm();
    let (a, b, c) = if swap { (q2, q1, q0) } else { (q0, q1, q2) };
    let sq = (b * b - 4.0 * a * c).sqrt();
    let plus = b + sq;
    let minus = b - sq;
    let q = if plus.norm() >= minus.norm() { -0.5 * plus } else { -0.5 * minus };
    let (t1, t2) = if q == zero { (zero, zero) } else { (q / a, c / q) };
    let make = |t: Complex64| {
        if swap {
            // t = y/x
            ProjectivePoint::new(one, t).unwrap()
        } else {
            // t = x/y
            ProjectivePoint::new(t, one).unwrap()
        }
    };
    Some([make(t1), make(t2)])
}

/// Fixed points of `N` on ℂP¹; `None` when `N` is a multiple of the identity.
pub fn fixed_points(n: &Mat2) -> Option<[ProjectivePoint; 2]> {
    let scale = n.a.abs().max(n.b.abs()).max(n.c.abs()).max(n.d.abs());
    let (q0, q1, q2) = (-n.c, n.a - n.d, n.b);
    if q0.abs().max(q1.abs()).max(q2.abs()) <= SCALAR_TOL * scale {
        return None;
    }
    let c = |x: f64| Complex64::new(x, 0.0);
    quadratic_roots(c(q0), c(q1), c(q2))
}

/// Point `[1 : z]` of the chart `z = ψ₂/ψ₁`, or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChartValue {
    Finite(Complex64),
    Infinity,
}

impl ChartValue {
    pub fn to_point(self) -> ProjectivePoint {
        match self {
            ChartValue::Finite(z) => ProjectivePoint::from_chart(z),
            ChartValue::Infinity => ProjectivePoint::infinity(),
        }
    }

    pub fn from_point(p: &ProjectivePoint) -> Self {
        p.chart().map_or(ChartValue::Infinity, ChartValue::Finite)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitState {
    pub j: usize,
    pub z: ChartValue,
}

/// Chart map `R_{a,E}(z) = 1/((E − a) − z)`, with `R(∞) = 0` and a pole at
/// `z = E − a`.
pub fn chart_step(a: f64, e: f64, z: ChartValue) -> ChartValue {
    match z {
        ChartValue::Infinity => ChartValue::Finite(Complex64::new(0.0, 0.0)),
        ChartValue::Finite(z) => {
            let den = Complex64::new(e - a, 0.0) - z;
            if den == Complex64::new(0.0, 0.0) {
                ChartValue::Infinity
            } else {
                ChartValue::Finite(1.0 / den)
            }
        }
    }
}

/// `z₀, z₁ = R_{v₁,E}(z₀), …, z_d`.
pub fn orbit_iterate(v: &[f64], e: f64, z0: ChartValue) -> Vec<OrbitState> {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(OrbitState { j: 0, z: z0 });
    let mut z = z0;
    for (i, &a) in v.iter().enumerate() {
        z = chart_step(a, e, z);
        out.push(OrbitState { j: i + 1, z });
    }
    out
}

/// Solutions of `A_i p = p′` for every `i`.
#[derive(Clone, Debug, PartialEq)]
pub enum CommonPoints {
    /// All matrices are projectively equal: every `p` works with `p′ = A₁p`.
    AllPoints,
    Points(Vec<(ProjectivePoint, ProjectivePoint)>),
}

impl CommonPoints {
    pub fn is_empty(&self) -> bool {
        matches!(self, CommonPoints::Points(v) if v.is_empty())
    }
}

/// Solutions of `A_i F = F′` for every `i`, `F` an unordered pair.
#[derive(Clone, Debug, PartialEq)]
pub enum CommonPairs {
    AllPairs,
    Pairs(Vec<(QuadraticForm, QuadraticForm)>),
}

impl CommonPairs {
    pub fn is_empty(&self) -> bool {
        matches!(self, CommonPairs::Pairs(v) if v.is_empty())
    }
}

/// `A₁^{-1}Aᵢ` up to scale (adjugate instead of inverse).
fn relative_maps(ms: &[Mat2]) -> Vec<Mat2> {
    let a1 = ms[0];
    let adj = Mat2::new(a1.d, -a1.b, -a1.c, a1.a);
    ms[1..].iter().map(|&a| adj * a).collect()
}

/// Normalizes each matrix by its largest entry; projective maps are unchanged.
fn normalized(ms: &[Mat2]) -> Vec<Mat2> {
    ms.iter()
        .map(|m| {
            let s = m.a.abs().max(m.b.abs()).max(m.c.abs()).max(m.d.abs());
            if s > 0.0 {
                m.scale(1.0 / s)
            } else {
                *m
            }
        })
        .collect()
}

fn point_candidates(rel: &[Mat2]) -> Option<Vec<ProjectivePoint>> {
    let mut out = Vec::new();
    let mut any = false;
    for n in rel {
        if let Some(fp) = fixed_points(n) {
            any = true;
            out.extend(fp);
        }
    }
    any.then_some(out)
}

fn point_violation(ms: &[Mat2], p: &ProjectivePoint) -> f64 {
    let target = mobius_apply(&ms[0], p);
    ms[1..]
        .iter()
        .map(|a| mobius_apply(a, p).distance(&target))
        .fold(0.0, f64::max)
}

/// `min_p max_i dist(A_i p, A₁ p)` over the complete candidate set; zero when
/// all maps coincide.
pub fn point_residual(ms: &[Mat2]) -> f64 {
    if ms.len() < 2 {
        return 0.0;
    }
    let ms = normalized(ms);
    match point_candidates(&relative_maps(&ms)) {
        None => 0.0,
        Some(cands) => cands.iter().map(|p| point_violation(&ms, p)).fold(1.0, f64::min),
    }
}

/// All `(p, p′)` with `A_i p = p′` for every matrix, within [`PROJ_TOL`].
pub fn common_image_points(ms: &[Mat2]) -> Result<CommonPoints> {
    common_image_points_tol(ms, PROJ_TOL)
}

pub fn common_image_points_tol(ms: &[Mat2], tol: f64) -> Result<CommonPoints> {
    if ms.len() < 2 {
        return Err(precondition("need at least two matrices"));
    }
    let ms = normalized(ms);
    let Some(cands) = point_candidates(&relative_maps(&ms)) else {
        return Ok(CommonPoints::AllPoints);
    };
    let mut out: Vec<(ProjectivePoint, ProjectivePoint)> = Vec::new();
    for p in cands {
        if point_violation(&ms, &p) <= tol && !out.iter().any(|(q, _)| q.approx_eq(&p, tol)) {
            out.push((p, mobius_apply(&ms[0], &p)));
        }
    }
    Ok(CommonPoints::Points(out))
}

fn pair_distance(a: &[ProjectivePoint; 2], b: &[ProjectivePoint; 2]) -> f64 {
    let straight = a[0].distance(&b[0]).max(a[1].distance(&b[1]));
    let crossed = a[0].distance(&b[1]).max(a[1].distance(&b[0]));
    straight.min(crossed)
}

/// Candidate invariant pairs of the relative maps: the fixed-point pairs
/// (and doubled fixed points) of every non-scalar `N_b`, and pairs
/// `{p, N_a p}` with `p` fixed by `N_b` or by `N_a^{-1}N_b`. Any pair
/// preserved by all `N_i` is among them: a non-scalar map fixing both
/// points determines the pair, and maps swapping them are involutions that
/// agree on `p`.
fn pair_candidates(rel: &[Mat2]) -> Option<Vec<[ProjectivePoint; 2]>> {
    let active: Vec<(Mat2, [ProjectivePoint; 2])> =
        rel.iter().filter_map(|n| fixed_points(n).map(|fp| (*n, fp))).collect();
    if active.is_empty() {
        return None;
    }
    let mut out = Vec::new();
    for (_, [e1, e2]) in &active {
        out.push([*e1, *e2]);
        out.push([*e1, *e1]);
        out.push([*e2, *e2]);
    }
    for (na, _) in &active {
        let adj = Mat2::new(na.d, -na.b, -na.c, na.a);
        for (nb, fb) in &active {
            let mut ps: Vec<ProjectivePoint> = fb.to_vec();
            if let Some(fr) = fixed_points(&(adj * *nb)) {
                ps.extend(fr);
            }
            for p in ps {
                out.push([p, mobius_apply(na, &p)]);
            }
        }
    }
    Some(out)
}

fn pair_violation(ms: &[Mat2], f: &[ProjectivePoint; 2]) -> f64 {
    let target = [mobius_apply(&ms[0], &f[0]), mobius_apply(&ms[0], &f[1])];
    ms[1..]
        .iter()
        .map(|a| pair_distance(&[mobius_apply(a, &f[0]), mobius_apply(a, &f[1])], &target))
        .fold(0.0, f64::max)
}

/// `min_F max_i dist(A_i F, A₁ F)` over unordered pairs `F`; zero when all
/// maps coincide.
pub fn pair_residual(ms: &[Mat2]) -> f64 {
    if ms.len() < 2 {
        return 0.0;
    }
    let ms = normalized(ms);
    match pair_candidates(&relative_maps(&ms)) {
        None => 0.0,
        Some(cands) => cands.iter().map(|f| pair_violation(&ms, f)).fold(1.0, f64::min),
    }
}

/// All `(F, F′)` with `A_i F = F′` for every matrix, within [`PROJ_TOL`].
/// The image is reported through the symmetric-square action.
pub fn common_invariant_pair(ms: &[Mat2]) -> Result<CommonPairs> {
    common_invariant_pair_tol(ms, PROJ_TOL)
}

pub fn common_invariant_pair_tol(ms: &[Mat2], tol: f64) -> Result<CommonPairs> {
    if ms.len() < 2 {
        return Err(precondition("need at least two matrices"));
    }
    let ms = normalized(ms);
    let Some(cands) = pair_candidates(&relative_maps(&ms)) else {
        return Ok(CommonPairs::AllPairs);
    };
    let mut kept: Vec<[ProjectivePoint; 2]> = Vec::new();
    for f in cands {
        if pair_violation(&ms, &f) <= tol && !kept.iter().any(|g| pair_distance(g, &f) <= tol) {
            kept.push(f);
        }
    }
    let out = kept
        .iter()
        .map(|f| {
            let form = QuadraticForm::from_pair(&f[0], &f[1]);
            (form, form.transform(&ms[0]))
        })
        .collect();
    Ok(CommonPairs::Pairs(out))
}

/// `ε(v, v′)` and the first/last differing positions (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub a: usize,
    pub b: usize,
    pub i_minus: usize,
    pub i_plus: usize,
    pub eps: f64,
}

/// Large-energy certificate for a vector family `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub vectors: Vec<Vec<f64>>,
    pub i0: usize,
    /// `(1/3) · min ε(v, v′)`.
    pub epsilon_raw: f64,
    /// `min(epsilon_raw, 1)`, the value entering `r₀`.
    pub epsilon: f64,
    pub r0: Vec<f64>,
    /// `max r₀`; no `|E| > radius` admits a common image point.
    pub radius: f64,
    pub gaps: Vec<PairGap>,
}

/// Builds the certificate of a family of at least three pairwise admissible
/// vectors: `r₀(v) = 1 + max|v_i| + 2/ε`, `R = max r₀`.
pub fn certificate_radius(vectors: &[Vec<f64>], i0: usize) -> Result<Certificate> {
    if vectors.len() < 3 {
        return Err(precondition("certificate needs at least three vectors"));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(precondition("vectors of different lengths"));
    }
    if i0 < 2 || d < i0 + 2 {
        return Err(precondition(format!("need 2 <= i0 and d >= i0 + 2 (d = {d}, i0 = {i0})")));
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(precondition("non-finite vector entry"));
    }
    let mut gaps = Vec::new();
    for a in 0..vectors.len() {
        for b in a + 1..vectors.len() {
            let (v, w) = (&vectors[a], &vectors[b]);
            let diff: Vec<usize> = (0..d).filter(|&i| v[i] != w[i]).collect();
            let (Some(&lo), Some(&hi)) = (diff.first(), diff.last()) else {
                return Err(precondition(format!("vectors {a} and {b} are identical")));
            };
            let (i_minus, i_plus) = (lo + 1, hi + 1);
            if i_minus >= i0 || i_plus <= i0 + 1 {
                return Err(precondition(format!(
                    "vectors {a} and {b} violate the support condition at i0 = {i0}"
                )));
            }
            let eps = (v[lo] - w[lo]).abs().min((v[hi] - w[hi]).abs());
            gaps.push(PairGap { a, b, i_minus, i_plus, eps });
        }
    }
    let epsilon_raw = gaps.iter().map(|g| g.eps).fold(f64::INFINITY, f64::min) / 3.0;
    let epsilon = epsilon_raw.min(1.0);
    let r0: Vec<f64> = vectors
        .iter()
        .map(|v| 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + 2.0 / epsilon)
        .collect();
    let radius = r0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Certificate { vectors: vectors.to_vec(), i0, epsilon_raw, epsilon, r0, radius, gaps })
}

/// Transfer matrix `T_{v,E} = Π_d ⋯ Π_1`, scaled to unit Frobenius norm.
pub fn block_matrix(v: &[f64], e: f64) -> Mat2 {
    product(v, e, Direction::Forward).unit()
}

/// Outcome of [`verify_no_common_point`].
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// No common image point and no common image pair. `exact` marks a
    /// exact integer-arithmetic proof (five or more vectors).
    NoCommonStructure { exact: bool },
    /// At most one vector: every structure is trivially shared.
    Trivial,
    Structures { points: CommonPoints, pairs: CommonPairs },
}

impl Verdict {
    pub fn no_common_structure(&self) -> bool {
        matches!(self, Verdict::NoCommonStructure { .. })
    }
}

type Int2 = [BigInt; 4];

fn int_mul(x: &Int2, y: &Int2) -> Int2 {
    [
        &x[0] * &y[0] + &x[1] * &y[2],
        &x[0] * &y[1] + &x[1] * &y[3],
        &x[2] * &y[0] + &x[3] * &y[2],
        &x[2] * &y[1] + &x[3] * &y[3],
    ]
}

/// `x = sign · mantissa · 2^exp`, exactly.
fn dyadic(x: f64) -> (BigInt, i16) {
    let (m, e, sign) = x.integer_decode();
    (BigInt::from(sign) * BigInt::from(m), e)
}

/// Exact `2^{s·len(v)} T_{v,E}` as an integer matrix, `2^s` clearing every denominator.
fn exact_block(v: &[f64], e: f64, s: i32) -> Int2 {
    let scaled = |x: f64| {
        let (m, k) = dyadic(x);
        if m.is_zero() {
            m
        } else {
            m << (k as i32 + s) as usize
        }
    };
    let unit = BigInt::one() << s as usize;
    let ei = scaled(e);
    let mut t: Int2 = [BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one()];
    for &x in v {
        let step: Int2 = [&ei - scaled(x), -unit.clone(), unit.clone(), BigInt::zero()];
        t = int_mul(&step, &t);
    }
    t
}

/// Fixed-point form `(−c, a − d, b)` of `adj(A) B`.
fn exact_fixed_form(a: &Int2, b: &Int2) -> [BigInt; 3] {
    let adj: Int2 = [a[3].clone(), -a[1].clone(), -a[2].clone(), a[0].clone()];
    let n = int_mul(&adj, b);
    [-n[2].clone(), &n[0] - &n[3], n[1].clone()]
}

/// Whether three exact matrices share an image point `A₁p = A₂p = A₃p`.
fn exact_three_share_point(a1: &Int2, a2: &Int2, a3: &Int2) -> bool {
    let f = exact_fixed_form(a1, a2);
    let g = exact_fixed_form(a1, a3);
    if f.iter().all(Zero::is_zero) || g.iter().all(Zero::is_zero) {
        return true;
    }
    // Resultant of two binary quadratics.
    let t02 = &f[0] * &g[2] - &f[2] * &g[0];
    let t01 = &f[0] * &g[1] - &f[1] * &g[0];
    let t12 = &f[1] * &g[2] - &f[2] * &g[1];
    (&t02 * &t02 - t01 * t12).is_zero()
}

/// Exact test on every 3-subset; `true` when none of them shares an image
/// point. With five or more vectors this also excludes common pairs.
pub fn exact_no_three_share_point(vectors: &[Vec<f64>], e: f64) -> bool {
    let min_exp = std::iter::once(e)
        .chain(vectors.iter().flatten().copied())
        .filter(|x| *x != 0.0)
        .map(|x| dyadic(x).1 as i32)
        .min()
        .unwrap_or(0);
    let s = (-min_exp).max(0);
    let mats: Vec<Int2> = vectors.iter().map(|v| exact_block(v, e, s)).collect();
    let m = mats.len();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                if exact_three_share_point(&mats[i], &mats[j], &mats[k]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Decides whether the maps `T_{v,E}`, `v ∈ V`, share an image point or an
/// image pair. Five or more vectors are handled exactly: a shared pair forces
/// three maps to share a point, so checking every 3-subset suffices.
pub fn verify_no_common_point(vectors: &[Vec<f64>], e: f64) -> Result<Verdict> {
    if !e.is_finite() || vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(precondition("non-finite energy or potential"));
    }
    if vectors.len() <= 1 {
        return Ok(Verdict::Trivial);
    }
    if vectors.len() >= 5 && exact_no_three_share_point(vectors, e) {
        return Ok(Verdict::NoCommonStructure { exact: true });
    }
    let mats: Vec<Mat2> = vectors.iter().map(|v| block_matrix(v, e)).collect();
    let points = common_image_points(&mats)?;
    let pairs = common_invariant_pair(&mats)?;
    if points.is_empty() && pairs.is_empty() {
        return Ok(Verdict::NoCommonStructure { exact: false });
    }
    Ok(Verdict::Structures { points, pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Potential-vector length; `None` means `8k`.
    pub d: Option<usize>,
    /// Support-condition index; `None` means `5k`.
    pub i0: Option<usize>,
    /// Grid local minima below this residual are refined.
    pub refine_tol: f64,
    /// Refined residuals below this are reported as candidates.
    pub candidate_tol: f64,
    /// Witness vectors per frozen configuration.
    pub max_witnesses: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { d: None, i0: None, refine_tol: 1.0, candidate_tol: 1e-7, max_witnesses: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub energy: f64,
    /// `None` when `|E|` exceeds the certificate radius.
    pub residual: Option<f64>,
    pub candidate: bool,
    pub refined_energy: Option<f64>,
    pub refined_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    /// Refined candidate energies, sorted and deduplicated.
    pub candidates: Vec<f64>,
    /// Some frozen configuration lacks five admissible witnesses.
    pub degenerate: bool,
    /// Certificate radius: the scan skips `|E| >` this value.
    pub radius: f64,
    pub configurations: usize,
    pub d: usize,
    pub i0: usize,
}

/// Witness families, one per frozen configuration of the first `k` and
/// last `k − 1` ξ's of the window `ξ₁ … ξ_{d+k−1}`.
pub struct FrozenFamilies {
    pub families: Vec<Vec<Vec<f64>>>,
    pub d: usize,
    pub i0: usize,
}

impl FrozenFamilies {
    pub fn build(model: &PotentialModel, d: usize, i0: usize, max_witnesses: usize) -> Result<Self> {
        let atoms = model.nu().support()?.to_vec();
        let k = model.k();
        if d + 1 < 2 * k {
            return Err(precondition("d too small for the frozen layout"));
        }
        let fixed = 2 * k - 1;
        let count = (atoms.len() as u128).checked_pow(fixed as u32).unwrap_or(u128::MAX);
        if count > 1 << 16 {
            return Err(Error::SupportTooLarge(count));
        }
        let mut families = Vec::with_capacity(count as usize);
        let mut tuple = vec![0.0; fixed];
        for c in 0..count as usize {
            let mut rest = c;
            for slot in tuple.iter_mut().rev() {
                *slot = atoms[rest % atoms.len()];
                rest /= atoms.len();
            }
            let support = conditional_support(model, d, &tuple[..k], &tuple[k..])?;
            let family = admissible_family(&support, i0, max_witnesses).map_err(precondition)?;
            families.push(family);
        }
        Ok(FrozenFamilies { families, d, i0 })
    }

    pub fn degenerate(&self) -> bool {
        self.families.iter().any(|f| f.len() < 5)
    }

    /// Largest certificate radius over the families.
    pub fn radius(&self) -> Result<f64> {
        self.families
            .iter()
            .map(|f| certificate_radius(f, self.i0).map(|c| c.radius))
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
    }

    /// `max` over configurations of the pair residual of the family.
    pub fn residual(&self, e: f64) -> f64 {
        self.families
            .iter()
            .map(|f| {
                let mats: Vec<Mat2> = f.iter().map(|v| block_matrix(v, e)).collect();
                pair_residual(&mats)
            })
            .fold(0.0, f64::max)
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Scans `energies` for exceptional energies of the model: at each `E` the
/// residual is the worst, over frozen configurations, of the best common
/// pair violation of the witness transfer matrices. Grid local minima below
/// `refine_tol` are refined by golden-section search to width `1e-10`.
pub fn exceptional_energy_scan(model: &PotentialModel, energies: &[f64], opts: &ScanOptions) -> Result<ScanReport> {
    let k = model.k();
    let d = opts.d.unwrap_or(8 * k);
    let i0 = opts.i0.unwrap_or(5 * k);
    if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
        return Err(precondition(format!("energy {e} is not finite")));
    }
    let fam = FrozenFamilies::build(model, d, i0, opts.max_witnesses.max(5))?;
    let configurations = fam.families.len();
    if fam.degenerate() {
        let points = energies
            .iter()
            .map(|&energy| ScanPoint {
                energy,
                residual: Some(0.0),
                candidate: true,
                refined_energy: None,
                refined_residual: None,
            })
            .collect();
        return Ok(ScanReport {
            points,
            candidates: Vec::new(),
            degenerate: true,
            radius: f64::INFINITY,
            configurations,
            d,
            i0,
        });
    }
    let radius = fam.radius()?;
    let residuals: Vec<Option<f64>> = energies
        .par_iter()
        .map(|&e| (e.abs() <= radius).then(|| fam.residual(e)))
        .collect();
    let mut points: Vec<ScanPoint> = energies
        .iter()
        .zip(&residuals)
        .map(|(&energy, &residual)| ScanPoint {
            energy,
            residual,
            candidate: false,
            refined_energy: None,
            refined_residual: None,
        })
        .collect();
    let minima: Vec<usize> = (0..points.len())
        .filter(|&i| {
            let Some(s) = residuals[i] else { return false };
            let left = i.checked_sub(1).and_then(|j| residuals[j]).unwrap_or(f64::INFINITY);
            let right = residuals.get(i + 1).copied().flatten().unwrap_or(f64::INFINITY);
            s < opts.refine_tol && s <= left && s <= right
        })
        .collect();
    let refined: Vec<(f64, f64)> = minima
        .par_iter()
        .map(|&i| {
            let lo = if i > 0 { energies[i - 1] } else { energies[i] };
            let hi = energies.get(i + 1).copied().unwrap_or(energies[i]);
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            golden_section(|e| fam.residual(e), lo, hi, 1e-10)
        })
        .collect();
    let mut candidates = Vec::new();
    for (&i, &(e, s)) in minima.iter().zip(&refined) {
        let p = &mut points[i];
        p.refined_energy = Some(e);
        p.refined_residual = Some(s);
        p.candidate = s < opts.candidate_tol;
        if p.candidate {
            candidates.push(e);
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-8);
    Ok(ScanReport { points, candidates, degenerate: false, radius, configurations, d, i0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rotation_fixes_i() {
        let r = Mat2::new(0.0, -1.0, 1.0, 0.0);
        let p = ProjectivePoint::new(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        assert!(mobius_apply(&r, &p).approx_eq(&p, 1e-15));
        assert!(mobius_apply(&Mat2::IDENTITY, &p).approx_eq(&p, 0.0));
    }

    #[test]
    fn orbit_pole_handling() {
        let orbit = orbit_iterate(&[0.0], 10.0, ChartValue::Finite(c(0.0, 0.0)));
        assert_eq!(orbit[1].z, ChartValue::Finite(c(0.1, 0.0)));
        let orbit = orbit_iterate(&[1.0, 1.0], 1.0, ChartValue::Finite(c(0.0, 0.0)));
        assert_eq!(orbit[1].z, ChartValue::Infinity);
        assert_eq!(orbit[2].z, ChartValue::Finite(c(0.0, 0.0)));
    }

    #[test]
    fn shears_share_infinity_direction() {
        let a = Mat2::new(1.0, 1.0, 0.0, 1.0);
        let b = Mat2::new(1.0, 2.0, 0.0, 1.0);
        let CommonPoints::Points(sol) = common_image_points(&[a, b]).unwrap() else { panic!() };
        assert_eq!(sol.len(), 1);
        let e1 = ProjectivePoint::real(1.0, 0.0).unwrap();
        assert!(sol[0].0.approx_eq(&e1, 1e-12) && sol[0].1.approx_eq(&e1, 1e-12));
        assert_eq!(common_image_points(&[a, a]).unwrap(), CommonPoints::AllPoints);
        assert!(common_image_points(&[a]).is_err());
    }

    #[test]
    fn sym2_hand_values() {
        let s = sym2(&Mat2::new(2.0, 0.0, 0.0, 0.5));
        assert_eq!(s, [[0.25, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 4.0]]);
        let s = sym2(&Mat2::new(0.0, -1.0, 1.0, 0.0));
        assert_eq!(s, [[0.0, -0.0, 1.0], [-0.0, -1.0, -0.0], [1.0, -0.0, 0.0]]);
    }

    #[test]
    fn quadratic_roots_cover_degenerate_forms() {
        let xy = QuadraticForm::real(0.0, 1.0, 0.0).unwrap();
        let r = xy.roots();
        assert!(r[0].approx_eq(&ProjectivePoint::real(1.0, 0.0).unwrap(), 0.0));
        assert!(r[1].approx_eq(&ProjectivePoint::infinity(), 0.0));
        let x2 = QuadraticForm::real(1.0, 0.0, 0.0).unwrap();
        for p in x2.roots() {
            assert!(p.approx_eq(&ProjectivePoint::infinity(), 0.0));
        }
        let circle = QuadraticForm::real(1.0, 0.0, 1.0).unwrap();
        let back = QuadraticForm::from_pair(&circle.roots()[0], &circle.roots()[1]);
        assert!(back.distance(&circle) < 1e-15);
    }

    #[test]
    fn certificate_examples() {
        let v = vec![vec![0.0, 1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![-1.0, -1.0, 0.0, 1.0, -1.0]];
        let cert = certificate_radius(&v, 3).unwrap();
        assert!((cert.epsilon - 1.0 / 3.0).abs() < 1e-15);
        assert!(cert.r0.iter().all(|r| (r - 8.0).abs() < 1e-12));
        let wide: Vec<Vec<f64>> = v.iter().map(|x| x.iter().map(|y| 3.0 * y).collect()).collect();
        let cert = certificate_radius(&wide, 3).unwrap();
        assert_eq!(cert.epsilon, 1.0);
        assert_eq!(cert.radius, 1.0 + 3.0 + 2.0);
        let dup = vec![v[0].clone(), v[0].clone(), v[1].clone()];
        assert!(certificate_radius(&dup, 3).is_err());
    }

    #[test]
    fn golden_section_finds_kink() {
        let (x, fx) = golden_section(|x: f64| (x - 0.123).abs(), -1.0, 1.0, 1e-10);
        assert!((x - 0.123).abs() < 1e-9 && fx < 1e-9);
    }
}
