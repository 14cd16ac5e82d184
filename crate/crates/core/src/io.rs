//! Flat CSV tables with fixed 17-significant-digit reals, the binary
//! eigenvector container and the certificate report.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::cocycle::LyapunovEstimate;
use crate::dynamics::TransportRow;
use crate::error::{precondition, Result};
use crate::example6::LilRow;
use crate::model::Realization;
use crate::projective::{Certificate, ScanReport, Verdict};
use crate::spectrum::{EigenSystem, SuleReport};

/// Magic bytes opening an eigenvector file.
pub const EIGVEC_MAGIC: &[u8; 8] = b"EIGVEC01";

/// `{:.16e}`, i.e. 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Header plus string rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write_to(&self, w: impl Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }
}

/// Columns `n, xi, v`; ξ is the first coordinate of the window at `n`.
pub fn sample_table(r: &Realization) -> Table {
    let mut t = Table::new(&["n", "xi", "v"]);
    for (i, v) in r.v().iter().enumerate() {
        t.push(vec![(r.n_lo() + i as i64).to_string(), real(r.xi()[i]), real(*v)]);
    }
    t
}

pub fn lyapunov_table(rows: &[LyapunovEstimate]) -> Table {
    let mut t = Table::new(&["E", "n", "mean", "stderr", "realizations", "seed"]);
    for e in rows {
        t.push(vec![
            real(e.energy),
            e.n.to_string(),
            real(e.mean),
            real(e.stderr),
            e.realizations.to_string(),
            e.seed.to_string(),
        ]);
    }
    t
}

pub fn scan_table(report: &ScanReport) -> Table {
    let mut t = Table::new(&["E", "residual", "candidate_flag", "refined_E"]);
    for p in &report.points {
        t.push(vec![
            real(p.energy),
            opt_real(p.residual),
            u8::from(p.candidate).to_string(),
            opt_real(p.refined_energy),
        ]);
    }
    t
}

/// Columns `index, eigenvalue, m_hat, beta_hat, r2`; fit columns stay empty
/// when too few amplitudes clear the floor.
pub fn eigen_table(report: &SuleReport) -> Table {
    let mut t = Table::new(&["index", "eigenvalue", "m_hat", "beta_hat", "r2"]);
    for e in &report.entries {
        let (m, b, r2) = match &e.fit {
            Some(f) => (f.m_hat.to_string(), real(f.beta), real(f.r2)),
            None => Default::default(),
        };
        t.push(vec![e.index.to_string(), real(e.energy), m, b, r2]);
    }
    t
}

/// Columns `index, m, distance, abs_psi` for the listed eigenvectors.
pub fn decay_table(es: &EigenSystem, indices: &[usize]) -> Table {
    let mut t = Table::new(&["index", "m", "distance", "abs_psi"]);
    for &i in indices {
        let psi = es.vector(i);
        let hat = (0..psi.len()).fold(0, |b, j| if psi[j].abs() > psi[b].abs() { j } else { b });
        for (j, x) in psi.iter().enumerate() {
            let m = es.first_site() + j as i64;
            t.push(vec![i.to_string(), m.to_string(), (j as i64 - hat as i64).abs().to_string(), real(x.abs())]);
        }
    }
    t
}

pub fn transport_table(rows: &[TransportRow]) -> Table {
    let mut t = Table::new(&["T", "N_of_T", "mass", "exp_bound", "ratio", "seed", "box"]);
    for r in rows {
        t.push(vec![
            real(r.t_scale),
            r.n_of_t.to_string(),
            real(r.mass),
            real(r.exp_bound),
            real(r.ratio),
            r.seed.to_string(),
            r.box_radius.to_string(),
        ]);
    }
    t
}

pub fn lil_table(rows: &[LilRow]) -> Table {
    let mut t = Table::new(&["seed", "n", "S_n", "log_norm", "bound", "envelope_ok"]);
    for r in rows {
        t.push(vec![
            r.seed.to_string(),
            r.n.to_string(),
            r.s_n.to_string(),
            real(r.log_norm),
            real(r.bound),
            r.envelope_ok.to_string(),
        ]);
    }
    t
}

/// 16-byte header (magic, `u64` LE dimension) then the eigenvectors as
/// row-major little-endian `f64`.
pub fn write_eigenvectors(path: impl AsRef<Path>, es: &EigenSystem) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(EIGVEC_MAGIC)?;
    w.write_all(&(es.dim() as u64).to_le_bytes())?;
    for x in es.vectors_row_major() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Returns `(dimension, row-major data)`.
pub fn read_eigenvectors(path: impl AsRef<Path>) -> Result<(usize, Vec<f64>)> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..8] != EIGVEC_MAGIC {
        return Err(precondition("not an eigenvector file"));
    }
    let dim = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() % 8 != 0 || (dim > 0 && (body.len() / 8) % dim != 0) {
        return Err(precondition("truncated eigenvector file"));
    }
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((dim, data))
}

#[derive(Serialize)]
struct EpsRow {
    a: usize,
    b: usize,
    i_minus: usize,
    i_plus: usize,
    eps: f64,
}

#[derive(Serialize)]
struct VerdictRow {
    energy: f64,
    verdict: String,
    exact: bool,
}

#[derive(Serialize)]
struct CertificateDoc {
    i0: usize,
    epsilon_raw: f64,
    epsilon: f64,
    radius: f64,
    r0: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    eps_table: Vec<EpsRow>,
    verdicts: Vec<VerdictRow>,
}

/// Certificate and verdicts as TOML text, with one `[[eps_table]]` entry per vector pair.
pub fn certificate_report(cert: &Certificate, verdicts: &[(f64, Verdict)]) -> Result<String> {
    let doc = CertificateDoc {
        i0: cert.i0,
        epsilon_raw: cert.epsilon_raw,
        epsilon: cert.epsilon,
        radius: cert.radius,
        r0: cert.r0.clone(),
        vectors: cert.vectors.clone(),
        eps_table: cert
            .gaps
            .iter()
            .map(|g| EpsRow { a: g.a, b: g.b, i_minus: g.i_minus, i_plus: g.i_plus, eps: g.eps })
            .collect(),
        verdicts: verdicts
            .iter()
            .map(|(e, v)| {
                let (verdict, exact) = match v {
                    Verdict::NoCommonStructure { exact } => ("no_common_structure", *exact),
                    Verdict::Trivial => ("trivial", false),
                    Verdict::Structures { .. } => ("common_structure", false),
                };
                VerdictRow { energy: *e, verdict: verdict.into(), exact }
            })
            .collect(),
    };
    toml::to_string(&doc).map_err(|e| crate::Error::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_format() {
        assert_eq!(real(0.1), "1.0000000000000001e-1");
        assert_eq!(real(-2.0), "-2.0000000000000000e0");
        assert_eq!(real(f64::NAN), "NaN");
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), real(0.5)]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1,5.0000000000000000e-1\n");
    }
}
