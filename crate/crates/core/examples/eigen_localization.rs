//! Finite-volume eigenfunctions, their exponential-decay fits and the SULE
//! summary on an energy window.

use cocycle_lab::model::{sample_realization, PotentialModel};
use cocycle_lab::spectrum::{
    build_operator, default_beta_floor, diagonalize_window, sule_report, DEFAULT_EPS_GRID, DEFAULT_FLOOR,
};

fn main() -> cocycle_lab::Result<()> {
    let model = PotentialModel::bernoulli_anderson(3.0);
    let j = (0.5, 1.5);
    let r = sample_realization(&model, 3, 1, 1000)?;
    let op = build_operator(&r, 1, 1000)?;
    let es = diagonalize_window(&op, j.0, j.1)?;
    println!(
        "{} eigenpairs in J, max residual {:.1e}, orthogonality {:.1e}",
        es.len(),
        es.max_residual(&op),
        es.max_orthogonality_error()
    );
    let floor = default_beta_floor(&model, j, 3)?;
    let rep = sule_report(&es, j, floor, &DEFAULT_EPS_GRID, DEFAULT_FLOOR);
    for e in rep.entries.iter().take(8) {
        if let Some(f) = &e.fit {
            println!("E = {:+.5}  center {:>4}  beta {:.3}  R2 {:.3}", e.energy, f.m_hat, f.beta, f.r2);
        }
    }
    println!("beta floor {:.3}: fraction above {:.3}", rep.beta_floor, rep.fraction_above_floor);
    for (eps, c) in &rep.c_eps {
        println!("  eps {eps:.2}: C = {c:.3e}");
    }
    Ok(())
}
