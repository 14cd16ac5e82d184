//! Run configuration: one TOML file holding the model and per-command blocks.
//! Unknown keys are rejected; [`RunConfig::resolve`] fills every derived
//! default so the echoed copy describes the run completely.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockCode, PotentialModel, SingleSiteDistribution};
use crate::projective::ScanOptions;
use crate::spectrum::{DEFAULT_EPS_GRID, DEFAULT_FLOOR, DEFAULT_MAX_ITER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub nu: NuConfig,
    pub code: CodeConfig,
    pub sample: SampleConfig,
    pub lyapunov: LyapunovConfig,
    pub certify: CertifyConfig,
    pub scan: ScanConfig,
    pub eigen: EigenConfig,
    pub transport: TransportConfig,
    pub example6: Example6Config,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: None,
            workers: None,
            nu: NuConfig::default(),
            code: CodeConfig::default(),
            sample: SampleConfig::default(),
            lyapunov: LyapunovConfig::default(),
            certify: CertifyConfig::default(),
            scan: ScanConfig::default(),
            eigen: EigenConfig::default(),
            transport: TransportConfig::default(),
            example6: Example6Config::default(),
        }
    }
}

/// Single-site law: `atoms` as `[value, weight]` pairs, or `samples` for an
/// empirical law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NuConfig {
    pub atoms: Option<Vec<[f64; 2]>>,
    pub samples: Option<Vec<f64>>,
}

impl Default for NuConfig {
    fn default() -> Self {
        NuConfig { atoms: Some(vec![[0.0, 0.5], [1.0, 0.5]]), samples: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeKindName {
    Table,
    Difference,
    Linear,
    #[serde(alias = "expression")]
    CustomExpression,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodeConfig {
    pub kind: CodeKindName,
    pub k: usize,
    pub c_v: f64,
    /// Values over atom-index words, first coordinate most significant.
    pub table: Option<Vec<f64>>,
    pub coefficients: Option<Vec<f64>>,
    pub offset: f64,
    /// Expression in `x1 … xk`.
    pub expression: Option<String>,
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig {
            kind: CodeKindName::Difference,
            k: 2,
            c_v: 1.0,
            table: None,
            coefficients: None,
            offset: 0.0,
            expression: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub lo: i64,
    pub hi: i64,
    pub realizations: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { lo: 1, hi: 100, realizations: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovConfig {
    pub e_min: f64,
    pub e_max: f64,
    pub e_points: usize,
    /// Explicit energies; replaces the uniform grid when set.
    pub energies: Option<Vec<f64>>,
    pub n: usize,
    /// Lengths at which estimates are reported; defaults to `[n]`.
    pub checkpoints: Option<Vec<usize>>,
    pub realizations: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            e_min: -3.0,
            e_max: 3.0,
            e_points: 61,
            energies: None,
            n: 10_000,
            checkpoints: None,
            realizations: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub d: Option<usize>,
    pub i0: Option<usize>,
    pub max_vectors: usize,
    /// Energies to verify; defaults to four points in `(R, 2R]`.
    pub energies: Option<Vec<f64>>,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig { d: None, i0: None, max_vectors: 8, energies: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub e_min: f64,
    pub e_max: f64,
    pub step: f64,
    pub d: Option<usize>,
    pub i0: Option<usize>,
    pub refine_tol: f64,
    pub candidate_tol: f64,
    pub max_witnesses: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let o = ScanOptions::default();
        ScanConfig {
            e_min: -3.0,
            e_max: 3.0,
            step: 1e-2,
            d: None,
            i0: None,
            refine_tol: o.refine_tol,
            candidate_tol: o.candidate_tol,
            max_witnesses: o.max_witnesses,
        }
    }
}

impl ScanConfig {
    pub fn energies(&self) -> Vec<f64> {
        let n = ((self.e_max - self.e_min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.e_min + i as f64 * self.step).collect()
    }

    pub fn options(&self) -> ScanOptions {
        ScanOptions {
            d: self.d,
            i0: self.i0,
            refine_tol: self.refine_tol,
            candidate_tol: self.candidate_tol,
            max_witnesses: self.max_witnesses,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Full implicit-QL decomposition.
    Full,
    /// Bisection and inverse iteration restricted to `j`.
    Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    pub lo: i64,
    pub hi: i64,
    pub j: [f64; 2],
    pub realizations: usize,
    pub solver: Solver,
    pub max_iter: usize,
    pub floor: f64,
    /// Defaults to half the smallest Lyapunov estimate on `j`.
    pub beta_floor: Option<f64>,
    pub eps_grid: Vec<f64>,
    /// Eigenvectors whose decay profiles are written to `decay_<r>.csv`.
    pub decay_profiles: usize,
    pub dump_vectors: bool,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            lo: 1,
            hi: 500,
            j: [-1.0, 1.0],
            realizations: 1,
            solver: Solver::Full,
            max_iter: DEFAULT_MAX_ITER,
            floor: DEFAULT_FLOOR,
            beta_floor: None,
            eps_grid: DEFAULT_EPS_GRID.to_vec(),
            decay_profiles: 3,
            dump_vectors: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub t_list: Vec<f64>,
    pub beta: f64,
    pub exponent: f64,
    /// Defaults to `4·N(T_max)`.
    pub box_radius: Option<usize>,
    pub realizations: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { t_list: vec![1e2, 1e3, 1e4], beta: 0.1, exponent: 1.9, box_radius: None, realizations: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Example6Config {
    pub identity_sequences: usize,
    pub identity_n: usize,
    pub bound_paths: usize,
    pub bound_n: usize,
    pub lil_seeds: usize,
    pub lil_n_max: usize,
    pub c: f64,
}

impl Default for Example6Config {
    fn default() -> Self {
        Example6Config {
            identity_sequences: 200,
            identity_n: 200,
            bound_paths: 1000,
            bound_n: 1000,
            lil_seeds: 20,
            lil_n_max: 100_000,
            c: 2.0,
        }
    }
}

impl RunConfig {
    /// Parses TOML; syntax and schema errors carry the offending line.
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<PotentialModel> {
        let nu = match (&self.nu.atoms, &self.nu.samples) {
            (Some(a), None) => SingleSiteDistribution::atoms(&a.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())?,
            (None, Some(s)) => SingleSiteDistribution::empirical(s)?,
            _ => return Err(Error::Config("nu: set exactly one of `atoms` and `samples`".into())),
        };
        let c = &self.code;
        let missing = |field: &str| Error::Config(format!("code.kind = {:?} needs `code.{field}`", c.kind));
        let code = match c.kind {
            CodeKindName::Difference => {
                if c.k != 2 {
                    return Err(Error::Config("difference code needs k = 2".into()));
                }
                BlockCode::difference(c.c_v)?
            }
            CodeKindName::Linear => {
                let coeffs = c.coefficients.clone().ok_or_else(|| missing("coefficients"))?;
                if coeffs.len() != c.k {
                    return Err(Error::Config(format!("{} coefficients for k = {}", coeffs.len(), c.k)));
                }
                BlockCode::linear(coeffs, c.offset, c.c_v)?
            }
            CodeKindName::Table => BlockCode::table(c.k, c.table.clone().ok_or_else(|| missing("table"))?, c.c_v)?,
            CodeKindName::CustomExpression => {
                BlockCode::expression(c.expression.as_deref().ok_or_else(|| missing("expression"))?, c.k, c.c_v)?
            }
        };
        PotentialModel::new(nu, code)
    }

    /// Fills defaults that depend on other fields.
    pub fn resolve(&mut self) -> Result<()> {
        let k = self.code.k.max(1);
        if self.workers.is_none() {
            self.workers = Some(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        }
        if self.out.is_none() {
            self.out = Some(PathBuf::from("out"));
        }
        let l = &mut self.lyapunov;
        if l.energies.is_none() {
            let m = l.e_points.max(1);
            let step = if m > 1 { (l.e_max - l.e_min) / (m - 1) as f64 } else { 0.0 };
            l.energies = Some((0..m).map(|i| l.e_min + step * i as f64).collect());
        }
        if l.checkpoints.is_none() {
            l.checkpoints = Some(vec![l.n]);
        }
        self.certify.d.get_or_insert(8 * k);
        self.certify.i0.get_or_insert(5 * k);
        self.scan.d.get_or_insert(8 * k);
        self.scan.i0.get_or_insert(5 * k);
        if self.transport.box_radius.is_none() {
            let t_max = self.transport.t_list.iter().copied().fold(1.0, f64::max);
            let n = crate::dynamics::n_of_t(t_max, self.transport.exponent).0;
            self.transport.box_radius = Some(4 * n);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = RunConfig::from_toml("seed = 3\n[scan]\nstep = 0.1\nbogus = 1\n").unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn resolved_round_trip() {
        let mut c = RunConfig::default();
        c.resolve().unwrap();
        let text = c.to_toml().unwrap();
        assert!(text.contains("box_radius = 272"));
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn expression_model() {
        let c = RunConfig::from_toml(
            "[code]\nkind = \"custom-expression\"\nk = 2\nc_v = 2.0\nexpression = \"x1 + x2\"\n",
        )
        .unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.eval_window(&[1.0, 1.0]).unwrap(), 2.0);
    }
}
