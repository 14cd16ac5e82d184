//! Block-code random potentials `v_n = g(ξ_n, …, ξ_{n+k-1})` over an i.i.d.
//! sequence `ξ`, their seeded realizations, the freezing decomposition and
//! the support certificate used by the exceptional-energy machinery.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{precondition, Error, Result};
use crate::expr::Expr;
use crate::rng::UniformField;

/// Relative slack when validating `|g| ≤ C_V`.
const C_V_SLACK: f64 = 1e-12;
/// Largest atom-index table precomputed for a finite-support model.
const MAX_TABLE: usize = 1 << 22;
/// Largest number of ξ-words enumerated by the support operations.
const MAX_WORDS: u128 = 1 << 24;

/// Law `ν` of a single `ξ_n`: finitely many weighted atoms, or an empirical
/// sample resampled uniformly with replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleSiteDistribution {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    empirical: bool,
}

impl SingleSiteDistribution {
    /// Finite atoms `(value, weight)`. Values must be distinct and finite,
    /// weights strictly positive and summing to one within `1e-12`.
    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("at least one atom is required".into()));
        }
        let mut total = 0.0;
        let mut cumulative = Vec::with_capacity(atoms.len());
        for (i, &(value, weight)) in atoms.iter().enumerate() {
            if !value.is_finite() || !weight.is_finite() {
                return Err(Error::InvalidDistribution(format!("atom {i} is not finite")));
            }
            if weight <= 0.0 {
                return Err(Error::InvalidDistribution(format!("atom {i} has weight {weight} <= 0")));
            }
            if atoms[..i].iter().any(|&(v, _)| v == value) {
                return Err(Error::InvalidDistribution(format!("duplicate atom value {value}")));
            }
            total += weight;
            cumulative.push(total);
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(SingleSiteDistribution {
            values: atoms.iter().map(|&(v, _)| canonical_zero(v)).collect(),
            cumulative,
            empirical: false,
        })
    }

    /// Equal-weight atoms.
    pub fn uniform_atoms(values: &[f64]) -> Result<Self> {
        let w = 1.0 / values.len().max(1) as f64;
        let atoms: Vec<(f64, f64)> = values.iter().map(|&v| (v, w)).collect();
        Self::atoms(&atoms)
    }

    /// Empirical distribution of `samples` (uniform weights, repeats allowed).
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidDistribution("empirical distribution needs samples".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!("sample {i} is not finite")));
        }
        let n = samples.len() as f64;
        let cumulative = (1..=samples.len()).map(|i| i as f64 / n).collect();
        Ok(SingleSiteDistribution {
            values: samples.iter().map(|&v| canonical_zero(v)).collect(),
            cumulative,
            empirical: true,
        })
    }

    pub fn is_finite_support(&self) -> bool {
        !self.empirical
    }

    /// Atom values, or the sample list for an empirical law.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let w = c - prev;
                prev = c;
                w
            })
            .collect()
    }

    /// Atom values of a finite-support law.
    pub fn support(&self) -> Result<&[f64]> {
        if self.empirical {
            return Err(Error::NotFiniteSupport);
        }
        Ok(&self.values)
    }

    /// Inverse CDF on value indices.
    #[inline]
    pub fn index_from_uniform(&self, u: f64) -> usize {
        if self.empirical {
            return ((u * self.values.len() as f64) as usize).min(self.values.len() - 1);
        }
        match self.cumulative.len() {
            1 => 0,
            2 => usize::from(u >= self.cumulative[0]),
            _ => self
                .cumulative
                .partition_point(|&c| c <= u)
                .min(self.values.len() - 1),
        }
    }

    fn index_of(&self, value: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }
}

fn canonical_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Shape of the block code `g`.
#[derive(Clone)]
pub enum CodeKind {
    /// Values over atom-index tuples, lexicographic with the first
    /// coordinate most significant.
    Table(Vec<f64>),
    /// `g(x₁, x₂) = x₁ − x₂`.
    Difference,
    /// `g(x) = offset + Σ cᵢ xᵢ`.
    Linear { coefficients: Vec<f64>, offset: f64 },
    Expression(Expr),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl fmt::Debug for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeKind::Table(t) => f.debug_tuple("Table").field(t).finish(),
            CodeKind::Difference => f.write_str("Difference"),
            CodeKind::Linear { coefficients, offset } => f
                .debug_struct("Linear")
                .field("coefficients", coefficients)
                .field("offset", offset)
                .finish(),
            CodeKind::Expression(e) => f.debug_tuple("Expression").field(e).finish(),
            CodeKind::Custom(_) => f.write_str("Custom(<closure>)"),
        }
    }
}

/// Window map `g : ℝ^k → ℝ` with a user-certified bound `C_V ≥ sup |g|`.
#[derive(Clone, Debug)]
pub struct BlockCode {
    k: usize,
    kind: CodeKind,
    c_v: f64,
}

impl BlockCode {
    pub fn new(k: usize, kind: CodeKind, c_v: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidCode("window length k must be positive".into()));
        }
        if !(c_v.is_finite() && c_v >= 0.0) {
            return Err(Error::InvalidCode(format!("C_V = {c_v} must be finite and >= 0")));
        }
        match &kind {
            CodeKind::Difference if k != 2 => {
                return Err(Error::InvalidCode("difference code needs k = 2".into()))
            }
            CodeKind::Linear { coefficients, offset } => {
                if coefficients.len() != k {
                    return Err(Error::InvalidCode(format!(
                        "linear code has {} coefficients for k = {k}",
                        coefficients.len()
                    )));
                }
                if !offset.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidCode("linear coefficients must be finite".into()));
                }
            }
            CodeKind::Expression(e) if e.arity() != k => {
                return Err(Error::InvalidCode(format!(
                    "expression arity {} does not match k = {k}",
                    e.arity()
                )))
            }
            _ => {}
        }
        Ok(BlockCode { k, kind, c_v })
    }

    pub fn difference(c_v: f64) -> Result<Self> {
        Self::new(2, CodeKind::Difference, c_v)
    }

    pub fn linear(coefficients: Vec<f64>, offset: f64, c_v: f64) -> Result<Self> {
        Self::new(coefficients.len(), CodeKind::Linear { coefficients, offset }, c_v)
    }

    pub fn constant(k: usize, value: f64) -> Result<Self> {
        Self::new(k, CodeKind::Linear { coefficients: vec![0.0; k], offset: value }, value.abs())
    }

    pub fn expression(src: &str, k: usize, c_v: f64) -> Result<Self> {
        Self::new(k, CodeKind::Expression(Expr::parse(src, k)?), c_v)
    }

    pub fn table(k: usize, values: Vec<f64>, c_v: f64) -> Result<Self> {
        Self::new(k, CodeKind::Table(values), c_v)
    }

    pub fn custom(k: usize, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, c_v: f64) -> Result<Self> {
        Self::new(k, CodeKind::Custom(Arc::new(g)), c_v)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c_v(&self) -> f64 {
        self.c_v
    }

    pub fn kind(&self) -> &CodeKind {
        &self.kind
    }

    /// Evaluates `g` on a value window. `None` for table codes, which are
    /// defined on atom indices.
    fn eval_values(&self, x: &[f64]) -> Option<f64> {
        Some(match &self.kind {
            CodeKind::Table(_) => return None,
            CodeKind::Difference => x[0] - x[1],
            CodeKind::Linear { coefficients, offset } => {
                offset + coefficients.iter().zip(x).map(|(c, x)| c * x).sum::<f64>()
            }
            CodeKind::Expression(e) => e.eval(x),
            CodeKind::Custom(g) => g(x),
        })
    }
}

/// Distribution plus block code; immutable once built.
#[derive(Clone, Debug)]
pub struct PotentialModel {
    nu: SingleSiteDistribution,
    code: BlockCode,
    /// `g` over all atom-index tuples (finite support only).
    table: Option<Arc<Vec<f64>>>,
}

impl PotentialModel {
    /// Validates the code against the law and checks `|g| ≤ C_V` exhaustively
    /// on finite supports, by sampling otherwise.
    pub fn new(nu: SingleSiteDistribution, code: BlockCode) -> Result<Self> {
        let k = code.k;
        let mut table = None;
        if let CodeKind::Table(values) = &code.kind {
            if !nu.is_finite_support() {
                return Err(Error::InvalidCode("table codes need a finite-support distribution".into()));
            }
            let expected = nu.values.len().checked_pow(k as u32);
            if expected != Some(values.len()) {
                return Err(Error::InvalidCode(format!(
                    "table has {} entries, expected {} atoms^{k}",
                    values.len(),
                    nu.values.len()
                )));
            }
            table = Some(Arc::new(values.clone()));
        } else if nu.is_finite_support() {
            if let Some(size) = nu.values.len().checked_pow(k as u32).filter(|&s| s <= MAX_TABLE) {
                let mut entries = Vec::with_capacity(size);
                let mut window = vec![0.0; k];
                for code_index in 0..size {
                    let mut rest = code_index;
                    for slot in window.iter_mut().rev() {
                        *slot = nu.values[rest % nu.values.len()];
                        rest /= nu.values.len();
                    }
                    entries.push(code.eval_values(&window).unwrap());
                }
                table = Some(Arc::new(entries));
            }
        }
        let model = PotentialModel { nu, code, table };
        model.validate_bound()?;
        Ok(model)
    }

    /// Example of a model with an exceptional energy: ν uniform on {0, 1},
    /// `g(x₁, x₂) = x₁ − x₂`.
    pub fn difference_example() -> Self {
        let nu = SingleSiteDistribution::uniform_atoms(&[0.0, 1.0]).unwrap();
        PotentialModel::new(nu, BlockCode::difference(1.0).unwrap()).unwrap()
    }

    /// Bernoulli Anderson model `v_n = coupling · ξ_n`, ξ uniform on {0, 1}.
    pub fn bernoulli_anderson(coupling: f64) -> Self {
        let nu = SingleSiteDistribution::uniform_atoms(&[0.0, 1.0]).unwrap();
        let code = BlockCode::linear(vec![coupling], 0.0, coupling.abs()).unwrap();
        PotentialModel::new(nu, code).unwrap()
    }

    pub fn nu(&self) -> &SingleSiteDistribution {
        &self.nu
    }

    pub fn code(&self) -> &BlockCode {
        &self.code
    }

    pub fn k(&self) -> usize {
        self.code.k
    }

    pub fn c_v(&self) -> f64 {
        self.code.c_v
    }

    fn validate_bound(&self) -> Result<()> {
        let limit = self.code.c_v * (1.0 + C_V_SLACK) + f64::MIN_POSITIVE;
        let check = |g: f64| -> Result<()> {
            if !g.is_finite() {
                return Err(Error::InvalidCode("g is not finite on the support".into()));
            }
            if g.abs() > limit {
                return Err(Error::InvalidCode(format!(
                    "|g| = {} exceeds C_V = {}",
                    g.abs(),
                    self.code.c_v
                )));
            }
            Ok(())
        };
        if let Some(table) = &self.table {
            return table.iter().try_for_each(|&g| check(g));
        }
        // Spot check on sampled windows.
        let mut field = UniformField::new(0x5eed_c0de, 0, 0);
        let mut window = vec![0.0; self.k()];
        for _ in 0..4096 {
            for slot in window.iter_mut() {
                *slot = self.nu.values[self.nu.index_from_uniform(field.next_uniform())];
            }
            check(self.code.eval_values(&window).unwrap())?;
        }
        Ok(())
    }

    #[inline]
    fn eval_indices(&self, idx: &[usize], scratch: &mut [f64]) -> f64 {
        if let Some(table) = &self.table {
            let m = self.nu.values.len();
            let code = idx.iter().fold(0usize, |acc, &i| acc * m + i);
            return table[code];
        }
        for (slot, &i) in scratch.iter_mut().zip(idx) {
            *slot = self.nu.values[i];
        }
        self.code.eval_values(scratch).unwrap()
    }

    /// `g` evaluated on a window of ξ values.
    pub fn eval_window(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.k() {
            return Err(precondition(format!("window of length {} for k = {}", window.len(), self.k())));
        }
        if let CodeKind::Table(_) = self.code.kind {
            let idx: Vec<usize> = window
                .iter()
                .map(|&x| self.nu.index_of(x).ok_or_else(|| precondition(format!("{x} is not an atom"))))
                .collect::<Result<_>>()?;
            let mut scratch = vec![0.0; self.k()];
            return Ok(self.eval_indices(&idx, &mut scratch));
        }
        Ok(self.code.eval_values(window).unwrap())
    }

    /// Recomputes `v` from the stored ξ of a realization.
    pub fn recompute_potential(&self, r: &Realization) -> Result<Vec<f64>> {
        (0..r.len())
            .map(|i| self.eval_window(&r.xi[i..i + self.k()]))
            .collect()
    }
}

/// Seeded sample of ξ and v on `[n_lo, n_lo + len)`; ξ extends `k − 1`
/// sites further so every stored `v_n` has its full window.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub seed: u64,
    pub stream: u64,
    n_lo: i64,
    k: usize,
    xi: Vec<f64>,
    v: Vec<f64>,
}

impl Realization {
    pub fn n_lo(&self) -> i64 {
        self.n_lo
    }

    /// Last potential index (`n_lo − 1` when empty).
    pub fn n_hi(&self) -> i64 {
        self.n_lo + self.v.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `ξ_n` for `n` in `[n_lo, n_hi + k − 1]`.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `v_n` for `n` in `[n_lo, n_hi]`.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn v_at(&self, n: i64) -> Option<f64> {
        let i = usize::try_from(n - self.n_lo).ok()?;
        self.v.get(i).copied()
    }

    pub fn xi_at(&self, n: i64) -> Option<f64> {
        let i = usize::try_from(n - self.n_lo).ok()?;
        self.xi.get(i).copied()
    }

    /// Potential on `[lo, hi]`, if covered.
    pub fn v_range(&self, lo: i64, hi: i64) -> Option<&[f64]> {
        if lo > hi {
            return Some(&[]);
        }
        let a = usize::try_from(lo - self.n_lo).ok()?;
        let b = usize::try_from(hi - self.n_lo).ok()?;
        self.v.get(a..=b)
    }
}

/// Samples ξ and v on `[lo, hi]` from stream 0.
pub fn sample_realization(model: &PotentialModel, seed: u64, lo: i64, hi: i64) -> Result<Realization> {
    sample_realization_stream(model, seed, 0, lo, hi)
}

/// Samples ξ and v on `[lo, hi]`; `stream` selects an independent realization.
pub fn sample_realization_stream(
    model: &PotentialModel,
    seed: u64,
    stream: u64,
    lo: i64,
    hi: i64,
) -> Result<Realization> {
    if hi < lo {
        return Err(Error::EmptyRange { lo, hi });
    }
    let len = usize::try_from(hi - lo + 1).map_err(|_| Error::EmptyRange { lo, hi })?;
    build_realization(model, seed, stream, lo, len, |_| None)
}

fn build_realization(
    model: &PotentialModel,
    seed: u64,
    stream: u64,
    lo: i64,
    len: usize,
    frozen: impl Fn(i64) -> Option<usize>,
) -> Result<Realization> {
    let k = model.k();
    if len == 0 {
        return Ok(Realization { seed, stream, n_lo: lo, k, xi: Vec::new(), v: Vec::new() });
    }
    let total = len + k - 1;
    let mut field = UniformField::new(seed, stream, lo);
    let mut idx = Vec::with_capacity(total);
    for i in 0..total {
        let u = field.next_uniform();
        let site = lo + i as i64;
        idx.push(frozen(site).unwrap_or_else(|| model.nu.index_from_uniform(u)));
    }
    let xi: Vec<f64> = idx.iter().map(|&i| model.nu.values[i]).collect();
    let mut scratch = vec![0.0; k];
    let mut v = Vec::with_capacity(len);
    for i in 0..len {
        let g = model.eval_indices(&idx[i..i + k], &mut scratch);
        if !g.is_finite() {
            return Err(Error::NonFiniteCode(lo + i as i64));
        }
        v.push(g);
    }
    Ok(Realization { seed, stream, n_lo: lo, k, xi, v })
}

/// Streaming potential `v_first, v_first+1, …` of realization `(seed, stream)`;
/// bit-identical to [`sample_realization_stream`] on any common range.
pub struct PotentialStream<'a> {
    model: &'a PotentialModel,
    field: UniformField,
    window: Vec<usize>,
    scratch: Vec<f64>,
}

impl<'a> PotentialStream<'a> {
    pub fn new(model: &'a PotentialModel, seed: u64, stream: u64, first: i64) -> Self {
        let mut field = UniformField::new(seed, stream, first);
        let k = model.k();
        let mut window = Vec::with_capacity(k);
        for _ in 0..k - 1 {
            window.push(model.nu.index_from_uniform(field.next_uniform()));
        }
        PotentialStream { model, field, window, scratch: vec![0.0; k] }
    }
}

impl Iterator for PotentialStream<'_> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let k = self.model.k();
        let next = self.model.nu.index_from_uniform(self.field.next_uniform());
        if self.window.len() == k {
            self.window.copy_within(1.., 0);
            self.window[k - 1] = next;
        } else {
            self.window.push(next);
        }
        Some(self.model.eval_indices(&self.window, &mut self.scratch))
    }
}

/// Frozen ξ layout: in block `j` (sites `period·j + 1 ..= period·(j+1)`),
/// the first `k` ξ's are fixed to `frozen[j mod frozen.len()]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FreezeScheme {
    pub k: usize,
    pub period: usize,
    pub frozen: Vec<Vec<f64>>,
}

impl FreezeScheme {
    /// Standard layout with period `10k`.
    pub fn new(k: usize, frozen: Vec<Vec<f64>>) -> Self {
        FreezeScheme { k, period: 10 * k, frozen }
    }

    /// Single frozen vector repeated in every block.
    pub fn constant(k: usize, value: Vec<f64>) -> Self {
        Self::new(k, vec![value])
    }

    /// Frozen ξ indices of block `j` (1-based sites).
    pub fn frozen_sites(&self, j: usize) -> std::ops::RangeInclusive<i64> {
        let start = (self.period * j) as i64 + 1;
        start..=start + self.k as i64 - 1
    }

    fn frozen_value(&self, site: i64) -> Option<(usize, usize)> {
        if site < 1 {
            return None;
        }
        let s = (site - 1) as usize;
        let (block, offset) = (s / self.period, s % self.period);
        (offset < self.k).then_some((block % self.frozen.len(), offset))
    }
}

/// Realization on sites `1 ..= period·n_blocks` with the frozen ξ's fixed and
/// the remaining ξ's drawn exactly as [`sample_realization`] would.
pub fn freeze_sample(
    model: &PotentialModel,
    scheme: &FreezeScheme,
    seed: u64,
    n_blocks: usize,
) -> Result<Realization> {
    freeze_sample_stream(model, scheme, seed, 0, n_blocks)
}

pub fn freeze_sample_stream(
    model: &PotentialModel,
    scheme: &FreezeScheme,
    seed: u64,
    stream: u64,
    n_blocks: usize,
) -> Result<Realization> {
    if scheme.k != model.k() {
        return Err(Error::Scheme(format!("scheme k = {} but model k = {}", scheme.k, model.k())));
    }
    if scheme.period <= scheme.k {
        return Err(Error::Scheme(format!(
            "period {} leaves no random ξ after {} frozen ones",
            scheme.period, scheme.k
        )));
    }
    if scheme.frozen.is_empty() {
        return Err(Error::Scheme("no frozen vectors".into()));
    }
    let mut frozen_idx = Vec::with_capacity(scheme.frozen.len());
    for (j, a) in scheme.frozen.iter().enumerate() {
        if a.len() != scheme.k {
            return Err(Error::Scheme(format!("frozen vector {j} has length {}", a.len())));
        }
        let idx: Vec<usize> = a
            .iter()
            .map(|&x| {
                model
                    .nu
                    .index_of(x)
                    .ok_or_else(|| Error::Scheme(format!("frozen value {x} is outside supp ν")))
            })
            .collect::<Result<_>>()?;
        frozen_idx.push(idx);
    }
    build_realization(model, seed, stream, 1, scheme.period * n_blocks, |site| {
        scheme.frozen_value(site).map(|(b, o)| frozen_idx[b][o])
    })
}

/// Exact support of the law of `(v₁, …, v_d)`, sorted and deduplicated.
pub fn support_of_potential_vector(model: &PotentialModel, d: usize) -> Result<Vec<Vec<f64>>> {
    conditional_support(model, d, &[], &[])
}

/// Support of `(v₁, …, v_d)` conditioned on the first `prefix.len()` and the
/// last `suffix.len()` ξ's of the window `ξ₁ … ξ_{d+k−1}`.
pub fn conditional_support(
    model: &PotentialModel,
    d: usize,
    prefix: &[f64],
    suffix: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let atoms = model.nu.support()?;
    if d == 0 {
        return Err(precondition("vector length d must be positive"));
    }
    let k = model.k();
    let word_len = d + k - 1;
    if prefix.len() + suffix.len() > word_len {
        return Err(precondition("conditioning fixes more ξ's than the window holds"));
    }
    let lookup = |x: f64| {
        model
            .nu
            .index_of(x)
            .ok_or_else(|| precondition(format!("conditioning value {x} is not an atom")))
    };
    let pre: Vec<usize> = prefix.iter().map(|&x| lookup(x)).collect::<Result<_>>()?;
    let suf: Vec<usize> = suffix.iter().map(|&x| lookup(x)).collect::<Result<_>>()?;
    let free = word_len - pre.len() - suf.len();
    let m = atoms.len();
    let count = (m as u128).checked_pow(free as u32).unwrap_or(u128::MAX);
    if count > MAX_WORDS {
        return Err(Error::SupportTooLarge(count));
    }
    let mut word = vec![0usize; word_len];
    word[..pre.len()].copy_from_slice(&pre);
    word[word_len - suf.len()..].copy_from_slice(&suf);
    let mut scratch = vec![0.0; k];
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count as usize);
    for w in 0..count as usize {
        let mut rest = w;
        for slot in word[pre.len()..pre.len() + free].iter_mut().rev() {
            *slot = rest % m;
            rest /= m;
        }
        let v: Vec<f64> = (0..d)
            .map(|i| canonical_zero(model.eval_indices(&word[i..i + k], &mut scratch)))
            .collect();
        out.push(v);
    }
    sort_dedup(&mut out);
    Ok(out)
}

pub(crate) fn sort_dedup(vs: &mut Vec<Vec<f64>>) {
    vs.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| a.len().cmp(&b.len()))
    });
    vs.dedup();
}

/// Outcome of the five-point support certificate.
#[derive(Clone, Debug, PartialEq)]
pub enum SupportVerdict {
    /// Five vectors, each pair differing at some `i < i0` and some `i > i0 + 1`.
    Holds { witnesses: Vec<Vec<f64>> },
    Fails { reason: String },
}

impl SupportVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, SupportVerdict::Holds { .. })
    }

    pub fn witnesses(&self) -> &[Vec<f64>] {
        match self {
            SupportVerdict::Holds { witnesses } => witnesses,
            SupportVerdict::Fails { .. } => &[],
        }
    }
}

/// Looks for five support vectors that pairwise differ at a position
/// `i < i0` and at a position `i > i0 + 1` (positions 1-based).
pub fn check_support_condition(support: &[Vec<f64>], i0: usize) -> SupportVerdict {
    match admissible_family(support, i0, 5) {
        Ok(family) if family.len() >= 5 => SupportVerdict::Holds { witnesses: family },
        Ok(family) => SupportVerdict::Fails {
            reason: format!("largest admissible family has {} vectors", family.len()),
        },
        Err(reason) => SupportVerdict::Fails { reason },
    }
}

/// Largest pairwise-admissible subfamily, capped at `limit`.
///
/// Two vectors are admissible iff their prefixes (positions `< i0`) differ
/// and their suffixes (positions `> i0 + 1`) differ, so an admissible family
/// is a matching between distinct prefixes and distinct suffixes; augmenting
/// paths make the search complete.
pub fn admissible_family(
    support: &[Vec<f64>],
    i0: usize,
    limit: usize,
) -> std::result::Result<Vec<Vec<f64>>, String> {
    let Some(first) = support.first() else {
        return Err("empty support".into());
    };
    let d = first.len();
    if support.iter().any(|v| v.len() != d) {
        return Err("vectors of different lengths".into());
    }
    if i0 < 2 || d < i0 + 2 {
        return Err(format!("need 2 <= i0 and d >= i0 + 2 (d = {d}, i0 = {i0})"));
    }
    let key = |xs: &[f64]| xs.iter().map(|x| canonical_zero(*x).to_bits()).collect::<Vec<u64>>();
    let mut prefix_ids: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut suffix_ids: HashMap<Vec<u64>, usize> = HashMap::new();
    // adjacency: prefix -> [(suffix, vector index)]
    let mut adj: Vec<Vec<(usize, usize)>> = Vec::new();
    for (vi, v) in support.iter().enumerate() {
        let np = prefix_ids.len();
        let p = *prefix_ids.entry(key(&v[..i0 - 1])).or_insert(np);
        let ns = suffix_ids.len();
        let s = *suffix_ids.entry(key(&v[i0 + 1..])).or_insert(ns);
        if p == adj.len() {
            adj.push(Vec::new());
        }
        adj[p].push((s, vi));
    }
    let mut suffix_match: Vec<Option<(usize, usize)>> = vec![None; suffix_ids.len()];
    let mut size = 0;
    for p in 0..adj.len() {
        if size >= limit {
            break;
        }
        let mut seen = vec![false; suffix_ids.len()];
        if augment(p, &adj, &mut suffix_match, &mut seen) {
            size += 1;
        }
    }
    let mut chosen: Vec<usize> = suffix_match.iter().flatten().map(|&(_, vi)| vi).collect();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|vi| support[vi].clone()).collect())
}

fn augment(
    p: usize,
    adj: &[Vec<(usize, usize)>],
    suffix_match: &mut [Option<(usize, usize)>],
    seen: &mut [bool],
) -> bool {
    for &(s, vi) in &adj[p] {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let free = match suffix_match[s] {
            None => true,
            Some((q, _)) => augment(q, adj, suffix_match, seen),
        };
        if free {
            suffix_match[s] = Some((p, vi));
            return true;
        }
    }
    false
}
