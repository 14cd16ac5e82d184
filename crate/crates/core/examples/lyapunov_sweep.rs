//! Lyapunov exponent of the difference model across energies; it dips at
//! E = 0 and at E = ±√5.

use cocycle_lab::cocycle::lyapunov_sweep;
use cocycle_lab::model::PotentialModel;

fn main() -> cocycle_lab::Result<()> {
    let model = PotentialModel::difference_example();
    let r5 = 5f64.sqrt();
    let mut energies: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    energies.extend([-r5, r5]);
    energies.sort_by(f64::total_cmp);
    let est = lyapunov_sweep(&model, &energies, 50_000, 16, 1)?;
    println!("{:>8} {:>10} {:>10}", "E", "L_n/n", "stderr");
    for e in &est {
        println!("{:>8.4} {:>10.5} {:>10.1e}", e.energy, e.mean, e.stderr);
    }
    Ok(())
}
