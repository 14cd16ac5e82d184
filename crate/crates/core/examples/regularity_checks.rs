//! Empirical regularity constants of block cocycles and the perturbation
//! inequality for complex energies.

use cocycle_lab::cocycle::{check_b2_b3, perturbation_bound_check, B2B3Options};
use cocycle_lab::model::{sample_realization, PotentialModel};
use num_complex::Complex64;

fn main() -> cocycle_lab::Result<()> {
    let model = PotentialModel::difference_example();
    let rep = check_b2_b3(&model, (-2.0, 2.0), 64, 7, &B2B3Options::default())?;
    println!(
        "blocks {} of length {}: max norm {:.3}, min angle derivative {:.3e}, monotone {}",
        rep.blocks,
        rep.block_len,
        rep.m_hat,
        rep.delta_hat,
        rep.monotone()
    );
    let r = sample_realization(&model, 7, -50, 50)?;
    for delta in [Complex64::new(0.01, 0.0), Complex64::new(0.0, 0.05), Complex64::new(-0.07, 0.07)] {
        let p = perturbation_bound_check(&r, 0.8, 50, delta)?;
        println!(
            "delta {delta}: log K(N) = {:.3}, worst n = {}, {:.3} <= {:.3}: {}",
            p.log_k, p.worst_n, p.log_lhs, p.log_rhs, p.holds
        );
    }
    Ok(())
}
