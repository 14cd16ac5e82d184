//! Exact integer reproduction of the difference model `v_n = ξ_n − ξ_{n+1}`,
//! ξ uniform on {0, 1}, at its exceptional energy `E = 0`.
//!
//! With `R = [[0,−1],[1,0]]`, `P_a = [[1,a],[0,1]]` and `R_a = P_a R P_a⁻¹`,
//! the transfer matrix factors as
//! `T_n = P_{−η_{n+1}} · R_{η_n} ⋯ R_{η_1} · P_{η_1}` with `η = 1 − ξ`.
//! Since `R_a² = −Id`, repeated letters cancel and the length of the reduced
//! word performs a ±1 random walk `S_n`, giving
//! `log‖T_n‖ ≤ 2C_P + C_R |S_n|`.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::linalg::Mat2;
use crate::model::PotentialModel;
use crate::rng::UniformField;

/// 2×2 matrix over ℤ.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegerMatrix2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl IntegerMatrix2 {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>, c: impl Into<BigInt>, d: impl Into<BigInt>) -> Self {
        IntegerMatrix2 { a: a.into(), b: b.into(), c: c.into(), d: d.into() }
    }

    pub fn identity() -> Self {
        Self::new(1, 0, 0, 1)
    }

    /// `R = [[0, −1], [1, 0]]`.
    pub fn r() -> Self {
        Self::new(0, -1, 1, 0)
    }

    /// `P_a = [[1, a], [0, 1]]`.
    pub fn p(a: i64) -> Self {
        Self::new(1, a, 0, 1)
    }

    /// `R_a = P_a R P_a⁻¹ = [[a, −a²−1], [1, −a]]`.
    pub fn r_a(a: i64) -> Self {
        let a = BigInt::from(a);
        let b = -(&a * &a) - 1;
        let d = -a.clone();
        IntegerMatrix2 { a, b, c: BigInt::one(), d }
    }

    /// One-step transfer matrix `[[−v, −1], [1, 0]]` at `E = 0`.
    pub fn step(v: i64) -> Self {
        Self::new(-v, -1, 1, 0)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn neg(&self) -> Self {
        IntegerMatrix2 { a: -&self.a, b: -&self.b, c: -&self.c, d: -&self.d }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Largest entry bit length.
    pub fn bits(&self) -> u64 {
        [&self.a, &self.b, &self.c, &self.d].iter().map(|x| x.bits()).max().unwrap_or(0)
    }

    /// `log ‖·‖` (operator norm), scaling down wide entries before rounding.
    pub fn log_operator_norm(&self) -> f64 {
        let shift = self.bits().saturating_sub(480);
        let f = |x: &BigInt| (x >> shift).to_f64().unwrap_or(0.0);
        let m = Mat2::new(f(&self.a), f(&self.b), f(&self.c), f(&self.d));
        m.operator_norm().ln() + shift as f64 * std::f64::consts::LN_2
    }

    /// Exact conversion when all entries fit in `f64` mantissas.
    pub fn to_mat2(&self) -> Option<Mat2> {
        let f = |x: &BigInt| (x.bits() <= 53).then(|| x.to_f64()).flatten();
        Some(Mat2::new(f(&self.a)?, f(&self.b)?, f(&self.c)?, f(&self.d)?))
    }
}

impl Mul for &IntegerMatrix2 {
    type Output = IntegerMatrix2;

    fn mul(self, o: &IntegerMatrix2) -> IntegerMatrix2 {
        IntegerMatrix2 {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }
}

impl fmt::Display for IntegerMatrix2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// `C_P = max_a log‖P_a‖` and `C_R = max_a log‖R_a‖` over `a ∈ {0, 1}`.
pub fn norm_constants() -> (f64, f64) {
    let cp = [0, 1].iter().map(|&a| IntegerMatrix2::p(a).log_operator_norm()).fold(f64::MIN, f64::max);
    let cr = [0, 1].iter().map(|&a| IntegerMatrix2::r_a(a).log_operator_norm()).fold(f64::MIN, f64::max);
    (cp, cr)
}

fn check_binary(xi: &[u8]) -> Result<()> {
    match xi.iter().position(|&x| x > 1) {
        Some(i) => Err(precondition(format!("entry {i} is {}, expected 0 or 1", xi[i]))),
        None => Ok(()),
    }
}

/// `T_n = Π_n ⋯ Π_1` at `E = 0` with `v_j = ξ_j − ξ_{j+1}`, from `ξ_1..ξ_{n+1}`.
pub fn exact_transfer_matrix(xi: &[u8]) -> Result<IntegerMatrix2> {
    check_binary(xi)?;
    let mut t = IntegerMatrix2::identity();
    for w in xi.windows(2) {
        t = &IntegerMatrix2::step(w[0] as i64 - w[1] as i64) * &t;
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RxiCheck {
    pub lhs: IntegerMatrix2,
    pub rhs: IntegerMatrix2,
    pub equal: bool,
}

/// Checks the factorization for `xi = (ξ_0, ξ_1, …, ξ_{n+1})`; `ξ_0` does not
/// enter either side.
pub fn rxi_identity_check(xi: &[u8]) -> Result<RxiCheck> {
    check_binary(xi)?;
    if xi.len() < 2 {
        return Err(precondition("need ξ_0 .. ξ_{n+1} with n >= 0"));
    }
    let path = &xi[1..];
    let lhs = exact_transfer_matrix(path)?;
    let eta: Vec<i64> = path.iter().map(|&x| 1 - x as i64).collect();
    let n = eta.len() - 1;
    let mut rhs = IntegerMatrix2::p(eta[0]);
    for &a in &eta[..n] {
        rhs = &IntegerMatrix2::r_a(a) * &rhs;
    }
    rhs = &IntegerMatrix2::p(-eta[n]) * &rhs;
    let equal = lhs == rhs;
    Ok(RxiCheck { lhs, rhs, equal })
}

/// Word in `R_0, R_1` after cancelling adjacent repeats.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedWord {
    /// Letters in application order (first applied first).
    pub letters: Vec<u8>,
    pub sign: i8,
}

impl ReducedWord {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `sign · R_{l_S} ⋯ R_{l_1}`.
    pub fn matrix(&self) -> IntegerMatrix2 {
        let mut m = word_product(&self.letters);
        if self.sign < 0 {
            m = m.neg();
        }
        m
    }
}

fn word_product(letters: &[u8]) -> IntegerMatrix2 {
    let (r0, r1) = (IntegerMatrix2::r_a(0), IntegerMatrix2::r_a(1));
    letters.iter().fold(IntegerMatrix2::identity(), |m, &l| (if l == 0 { &r0 } else { &r1 }) * &m)
}

/// Stack reduction of `R_{x_n} ⋯ R_{x_1}` using `R_a² = −Id`.
pub fn reduce_word(letters: &[u8]) -> Result<ReducedWord> {
    check_binary(letters)?;
    let mut stack: Vec<u8> = Vec::new();
    let mut sign = 1i8;
    for &x in letters {
        if stack.last() == Some(&x) {
            stack.pop();
            sign = -sign;
        } else {
            stack.push(x);
        }
    }
    Ok(ReducedWord { letters: stack, sign })
}

/// Streaming form of [`reduce_word`]: a reduced word alternates, so its
/// length and last letter determine it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct WalkState {
    pub s: usize,
    pub top: u8,
    pub negative: bool,
}

impl WalkState {
    pub fn push(&mut self, x: u8) {
        if self.s > 0 && x == self.top {
            self.s -= 1;
            self.top = 1 - self.top;
            self.negative = !self.negative;
        } else {
            self.s += 1;
            self.top = x;
        }
    }

    pub fn word(&self) -> ReducedWord {
        let letters = (0..self.s).map(|i| if (self.s - 1 - i).is_multiple_of(2) { self.top } else { 1 - self.top }).collect();
        ReducedWord { letters, sign: if self.negative { -1 } else { 1 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBound {
    pub n: usize,
    pub s: usize,
    pub log_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

fn bound_from(word: &ReducedWord, first: u8, last: u8, n: usize) -> NormBound {
    let (cp, cr) = norm_constants();
    let (eta1, eta_last) = (1 - first as i64, 1 - last as i64);
    let t = &(&IntegerMatrix2::p(-eta_last) * &word.matrix()) * &IntegerMatrix2::p(eta1);
    let log_norm = t.log_operator_norm();
    let bound = 2.0 * cp + cr * word.len() as f64;
    NormBound { n, s: word.len(), log_norm, bound, holds: log_norm <= bound }
}

/// `log‖T_n‖` (exact product, rounded at the end) against `2C_P + C_R·S_n`
/// for `xi = (ξ_1, …, ξ_{n+1})`.
pub fn norm_bound_check(xi: &[u8]) -> Result<NormBound> {
    check_binary(xi)?;
    if xi.is_empty() {
        return Err(precondition("need ξ_1 .. ξ_{n+1}"));
    }
    let n = xi.len() - 1;
    let eta: Vec<u8> = xi[..n].iter().map(|&x| 1 - x).collect();
    let word = reduce_word(&eta)?;
    Ok(bound_from(&word, xi[0], xi[n], n))
}

/// `ξ_1, ξ_2, …` of realization `(seed, stream)` of the difference model, as bits.
pub fn xi_bits(seed: u64, stream: u64, len: usize) -> Vec<u8> {
    let model = PotentialModel::difference_example();
    let mut field = UniformField::new(seed, stream, 1);
    (0..len).map(|_| model.nu().index_from_uniform(field.next_uniform()) as u8).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilRow {
    pub seed: u64,
    pub n: usize,
    pub s_n: usize,
    pub log_norm: f64,
    pub bound: f64,
    pub envelope_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub c: f64,
    pub checkpoints: Vec<usize>,
    /// Seed-major rows, one per checkpoint.
    pub rows: Vec<LilRow>,
    /// Per seed: share of checkpoints in the longest final run where the envelope holds.
    pub suffix_fraction: Vec<(u64, f64)>,
    /// Per checkpoint: share of seeds exceeding the envelope.
    pub exceedance: Vec<(usize, f64)>,
}

/// `c √(n log log n)`.
pub fn lil_envelope(n: usize, c: f64) -> f64 {
    let n = n as f64;
    c * (n * n.ln().ln()).sqrt()
}

/// Checkpoints `10³, 10⁴, …` up to `n_max`, plus `n_max` itself.
pub fn lil_checkpoints(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 1000;
    while n <= n_max {
        out.push(n);
        n = n.saturating_mul(10);
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Tracks `S_n` along each seed's path (stream 0) and tests
/// `|S_n| < c √(n log log n)` at the checkpoints.
pub fn lil_envelope_check(seeds: &[u64], n_max: usize, c: f64) -> Result<LilReport> {
    if n_max < 1000 {
        return Err(precondition(format!("n_max = {n_max} < 1000")));
    }
    let checkpoints = lil_checkpoints(n_max);
    let model = PotentialModel::difference_example();
    let per_seed: Vec<Vec<LilRow>> = seeds
        .par_iter()
        .map(|&seed| {
            let mut field = UniformField::new(seed, 0, 1);
            let mut draw = || model.nu().index_from_uniform(field.next_uniform()) as u8;
            let first = draw();
            let mut prev = first;
            let mut walk = WalkState::default();
            let mut rows = Vec::with_capacity(checkpoints.len());
            let mut next_cp = 0;
            for n in 1..=n_max {
                walk.push(1 - prev);
                prev = draw();
                if n == checkpoints[next_cp] {
                    let nb = bound_from(&walk.word(), first, prev, n);
                    rows.push(LilRow {
                        seed,
                        n,
                        s_n: walk.s,
                        log_norm: nb.log_norm,
                        bound: nb.bound,
                        envelope_ok: (walk.s as f64) < lil_envelope(n, c),
                    });
                    next_cp += 1;
                }
            }
            rows
        })
        .collect();
    let suffix_fraction = per_seed
        .iter()
        .zip(seeds)
        .map(|(rows, &seed)| {
            let run = rows.iter().rev().take_while(|r| r.envelope_ok).count();
            (seed, run as f64 / rows.len() as f64)
        })
        .collect();
    let exceedance = checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let bad = per_seed.iter().filter(|rows| !rows[i].envelope_ok).count();
            (n, if seeds.is_empty() { 0.0 } else { bad as f64 / seeds.len() as f64 })
        })
        .collect();
    Ok(LilReport { c, checkpoints, rows: per_seed.into_iter().flatten().collect(), suffix_fraction, exceedance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_matrices() {
        assert_eq!(IntegerMatrix2::r_a(0), IntegerMatrix2::r());
        assert_eq!(IntegerMatrix2::r_a(1), IntegerMatrix2::new(1, -2, 1, -1));
        for a in [0, 1] {
            let r = IntegerMatrix2::r_a(a);
            assert_eq!(&r * &r, IntegerMatrix2::identity().neg());
            assert!(r.det().is_one());
        }
    }

    #[test]
    fn constants() {
        let (cp, cr) = norm_constants();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((cp - phi.ln()).abs() < 1e-14);
        assert!((cr - 2.0 * phi.ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_path_identity() {
        let c = rxi_identity_check(&[0, 0, 0]).unwrap();
        assert!(c.equal);
        assert_eq!(c.lhs, IntegerMatrix2::r());
        assert!(rxi_identity_check(&[0, 2, 1]).is_err());
    }

    #[test]
    fn constant_word_cancels() {
        let w = reduce_word(&[0; 6]).unwrap();
        assert!(w.is_empty());
        assert_eq!(w.sign, -1);
        let w = reduce_word(&[0, 1, 0, 1, 0]).unwrap();
        assert_eq!(w.len(), 5);
    }

    #[test]
    fn walk_matches_stack() {
        let bits = xi_bits(3, 0, 500);
        let mut walk = WalkState::default();
        for i in 0..bits.len() {
            walk.push(bits[i]);
            assert_eq!(walk.word(), reduce_word(&bits[..=i]).unwrap());
        }
    }

    #[test]
    fn lil_precondition() {
        assert!(lil_envelope_check(&[1], 999, 2.0).is_err());
        assert_eq!(lil_checkpoints(1_000_000), vec![1000, 10_000, 100_000, 1_000_000]);
    }
}
