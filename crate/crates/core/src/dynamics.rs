//! Time evolution through the spectral decomposition: evolution amplitudes,
//! the SUDL statistic and the time-averaged transported mass.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::model::{sample_realization_stream, PotentialModel};
use crate::spectrum::{build_operator, diagonalize, EigenSystem};

/// Default scale exponent in `N(T) = ⌈(log T)^a⌉`.
pub const DEFAULT_EXPONENT: f64 = 1.9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionAmplitude {
    pub n: i64,
    pub m: i64,
    pub t: f64,
    pub value: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportedMass {
    pub t_scale: f64,
    pub n: usize,
    pub value: f64,
}

fn site_index(es: &EigenSystem, n: i64) -> Result<usize> {
    es.index_of(n).ok_or_else(|| {
        precondition(format!(
            "site {n} outside box [{}, {}]",
            es.first_site(),
            es.first_site() + es.dim() as i64 - 1
        ))
    })
}

/// `⟨δ_n, e^{−itH} χ_J(H) δ_m⟩ = Σ_{E_k ∈ J} e^{−itE_k} ψ_k(n) ψ_k(m)`.
pub fn amplitude(es: &EigenSystem, j: (f64, f64), n: i64, m: i64, t: f64) -> Result<EvolutionAmplitude> {
    let (a, b) = (site_index(es, n)?, site_index(es, m)?);
    let value = es
        .indices_in(j)
        .map(|k| {
            let psi = es.vector(k);
            Complex64::from_polar(psi[a] * psi[b], -t * es.values()[k])
        })
        .sum();
    Ok(EvolutionAmplitude { n, m, t, value })
}

/// Amplitudes `⟨δ_n, e^{−itH} χ_J(H) δ_m⟩` for every site `n` of the box.
pub fn amplitude_profile(es: &EigenSystem, j: (f64, f64), m: i64, t: f64) -> Result<Vec<Complex64>> {
    let b = site_index(es, m)?;
    let mut out = vec![Complex64::new(0.0, 0.0); es.dim()];
    for k in es.indices_in(j) {
        let psi = es.vector(k);
        let phase = Complex64::from_polar(psi[b], -t * es.values()[k]);
        out.iter_mut().zip(psi).for_each(|(o, p)| *o += phase * p);
    }
    Ok(out)
}

/// `t = 0` followed by 511 log-spaced times in `[10^{-4}·10T, 10T]`.
pub fn default_t_grid(t_scale: f64) -> Vec<f64> {
    let top = 10.0 * t_scale;
    let (lo, hi) = ((top * 1e-4).ln(), top.ln());
    std::iter::once(0.0).chain((0..511).map(|i| (lo + (hi - lo) * i as f64 / 510.0).exp())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SudlViolation {
    pub n: i64,
    pub t: f64,
    pub eps: f64,
    /// Constant this site alone would need.
    pub required: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SudlReport {
    pub m: i64,
    pub beta: f64,
    /// `(n, max_t |amplitude(n, m, t)|, argmax t)`; a lower bound on the sup over all t.
    pub sup_amplitude: Vec<(i64, f64, f64)>,
    /// `(ε, Ĉ_ε)`: smallest constant with `max_t|a(n,m,t)| ≤ Ĉ_ε e^{ε|m| − β|n−m|}` for all `n`.
    pub c_hat: Vec<(f64, f64)>,
    pub violations: Vec<SudlViolation>,
}

/// Grid surrogate of the SUDL bound. Sites needing a constant above `cap`
/// are listed as violations.
pub fn sudl_statistic(
    es: &EigenSystem,
    j: (f64, f64),
    m: i64,
    t_grid: &[f64],
    beta: f64,
    eps_grid: &[f64],
    cap: f64,
) -> Result<SudlReport> {
    if t_grid.is_empty() {
        return Err(precondition("t_grid is empty"));
    }
    let profiles: Vec<Vec<Complex64>> =
        t_grid.par_iter().map(|&t| amplitude_profile(es, j, m, t)).collect::<Result<_>>()?;
    let mut sup_amplitude = Vec::with_capacity(es.dim());
    for i in 0..es.dim() {
        let (mut best, mut arg) = (0.0f64, t_grid[0]);
        for (p, &t) in profiles.iter().zip(t_grid) {
            let a = p[i].norm();
            if a > best {
                best = a;
                arg = t;
            }
        }
        sup_amplitude.push((es.first_site() + i as i64, best, arg));
    }
    let mut c_hat = Vec::with_capacity(eps_grid.len());
    let mut violations = Vec::new();
    for &eps in eps_grid {
        let mut c = 0.0f64;
        for &(n, a, t) in &sup_amplitude {
            let required = a * (beta * (n - m).abs() as f64 - eps * m.abs() as f64).exp();
            if required > cap {
                violations.push(SudlViolation { n, t, eps, required });
            }
            c = c.max(required);
        }
        c_hat.push((eps, c));
    }
    Ok(SudlReport { m, beta, sup_amplitude, c_hat, violations })
}

/// `(1/T)∫₀^∞ e^{−2t/T} cos(Δt) dt = 2 / (4 + T²Δ²)`.
pub fn time_average_weight(t_scale: f64, delta: f64) -> f64 {
    2.0 / (4.0 + (t_scale * delta).powi(2))
}

/// Per-site contributions `(n, (1/T)∫₀^∞ e^{−2t/T}|⟨δ_n, e^{−itH}δ_1⟩|² dt)` over the
/// box, using every eigenpair of `es`.
pub fn transported_profile(es: &EigenSystem, t_scale: f64) -> Result<Vec<(i64, f64)>> {
    if !(t_scale > 0.0 && t_scale.is_finite()) {
        return Err(precondition(format!("time scale must be positive, got {t_scale}")));
    }
    let one = site_index(es, 1)?;
    let k = es.len();
    let w: Vec<f64> = (0..k * k)
        .map(|idx| time_average_weight(t_scale, es.values()[idx / k] - es.values()[idx % k]))
        .collect();
    let at_one: Vec<f64> = (0..k).map(|j| es.vector(j)[one]).collect();
    Ok((0..es.dim())
        .into_par_iter()
        .map(|i| {
            let a: Vec<f64> = (0..k).map(|j| es.vector(j)[i] * at_one[j]).collect();
            let mut s = 0.0;
            for (j, aj) in a.iter().enumerate() {
                if *aj == 0.0 {
                    continue;
                }
                let row = &w[j * k..(j + 1) * k];
                let inner: f64 = row.iter().zip(&a).map(|(x, y)| x * y).sum();
                s += aj * inner;
            }
            (es.first_site() + i as i64, s.max(0.0))
        })
        .collect())
}

/// Mass at sites `|n| ≥ N` from a profile.
pub fn mass_beyond(profile: &[(i64, f64)], n: usize) -> f64 {
    profile.iter().filter(|(site, _)| site.unsigned_abs() as usize >= n).map(|(_, x)| x).sum()
}

/// Time-averaged mass transported from site 1 to `|n| ≥ N`, in closed form.
pub fn transported_mass(es: &EigenSystem, t_scale: f64, n: usize) -> Result<TransportedMass> {
    let profile = transported_profile(es, t_scale)?;
    Ok(TransportedMass { t_scale, n, value: mass_beyond(&profile, n) })
}

/// `⌈(log T)^a⌉`, clamped to 1 when `(log T)^a < 1`; the flag reports clamping.
pub fn n_of_t(t_scale: f64, exponent: f64) -> (usize, bool) {
    let raw = if t_scale > 1.0 { t_scale.ln().powf(exponent) } else { 0.0 };
    if raw < 1.0 {
        (1, true)
    } else {
        (raw.ceil() as usize, false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportOptions {
    pub beta: f64,
    pub exponent: f64,
    /// Box radius `L` (sites `−L..=L`); defaults to `4·N(T_max)`.
    pub box_radius: Option<usize>,
    /// Independent realizations averaged per row.
    pub realizations: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { beta: 0.1, exponent: DEFAULT_EXPONENT, box_radius: None, realizations: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportRow {
    pub t_scale: f64,
    pub n_of_t: usize,
    pub clamped: bool,
    pub mass: f64,
    pub exp_bound: f64,
    pub ratio: f64,
    pub seed: u64,
    pub box_radius: usize,
}

/// Transported mass at `N(T)` against `e^{−2β(log T)^a}` for each `T`.
pub fn transport_probe(
    model: &PotentialModel,
    t_list: &[f64],
    seed: u64,
    opts: &TransportOptions,
) -> Result<Vec<TransportRow>> {
    if t_list.is_empty() {
        return Err(precondition("T list is empty"));
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) || t_list[0] <= 0.0 {
        return Err(precondition("T list must be positive and increasing"));
    }
    if !(opts.exponent > 1.0 && opts.exponent < 2.0) {
        return Err(precondition(format!("exponent {} outside (1, 2)", opts.exponent)));
    }
    if opts.realizations == 0 {
        return Err(precondition("realizations must be >= 1"));
    }
    let n_max = n_of_t(*t_list.last().unwrap(), opts.exponent).0;
    let radius = opts.box_radius.unwrap_or(4 * n_max);
    if radius < 4 * n_max {
        return Err(precondition(format!("box radius {radius} below 4·N(T_max) = {}", 4 * n_max)));
    }
    let l = radius as i64;
    let systems: Vec<EigenSystem> = (0..opts.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let real = sample_realization_stream(model, seed, r, -l, l)?;
            diagonalize(&build_operator(&real, -l, l)?)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let (n, clamped) = n_of_t(t, opts.exponent);
        let mut mass = 0.0;
        for es in &systems {
            mass += transported_mass(es, t, n)?.value;
        }
        mass /= opts.realizations as f64;
        let exp_bound = (-2.0 * opts.beta * t.ln().max(0.0).powf(opts.exponent)).exp();
        rows.push(TransportRow {
            t_scale: t,
            n_of_t: n,
            clamped,
            mass,
            exp_bound,
            ratio: mass / exp_bound,
            seed,
            box_radius: radius,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::FiniteVolumeOperator;

    fn system(diag: Vec<f64>, first: i64) -> EigenSystem {
        diagonalize(&FiniteVolumeOperator::new(first, diag).unwrap()).unwrap()
    }

    #[test]
    fn single_site_phase() {
        let es = system(vec![0.4], 1);
        for t in [0.0, 1.3, 50.0] {
            let a = amplitude(&es, (-10.0, 10.0), 1, 1, t).unwrap();
            assert!((a.value.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn completeness_at_zero() {
        let es = system(vec![0.3, -0.2, 0.9, 0.0, 0.5], -1);
        for n in -1..=3 {
            let a = amplitude(&es, (-10.0, 10.0), n, 1, 0.0).unwrap().value;
            let want = if n == 1 { 1.0 } else { 0.0 };
            assert!((a - Complex64::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn weight_values() {
        assert_eq!(time_average_weight(3.0, 0.0), 0.5);
        assert!(time_average_weight(3.0, 0.2) < 0.5);
    }

    #[test]
    fn total_mass_is_half() {
        let es = system(vec![0.3, -0.2, 0.9, 0.0, 0.5, 1.1], -2);
        let m = transported_mass(&es, 7.0, 0).unwrap();
        assert!((m.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scale_clamping() {
        assert_eq!(n_of_t(2.0, 1.9), (1, true));
        assert_eq!(n_of_t(1e4, 1.9), (68, false));
        assert_eq!(n_of_t(100.0, 1.9), (19, false));
    }
}
