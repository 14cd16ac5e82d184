//! Scans for energies where the measure condition fails.

use cocycle_lab::model::{BlockCode, PotentialModel, SingleSiteDistribution};
use cocycle_lab::projective::{exceptional_energy_scan, ScanOptions};

fn main() -> cocycle_lab::Result<()> {
    let energies: Vec<f64> = (0..=600).map(|i| -3.0 + 0.01 * i as f64).collect();
    let nu = SingleSiteDistribution::uniform_atoms(&[0.0, 1.0])?;
    let models = [
        ("difference", PotentialModel::difference_example()),
        ("linear 2x1 + x2", PotentialModel::new(nu, BlockCode::linear(vec![2.0, 1.0], 0.0, 3.0)?)?),
    ];
    for (name, model) in &models {
        let rep = exceptional_energy_scan(model, &energies, &ScanOptions::default())?;
        println!(
            "{name}: d = {}, i0 = {}, {} frozen configurations, radius {:.2}, candidates {:?}",
            rep.d, rep.i0, rep.configurations, rep.radius, rep.candidates
        );
    }
    Ok(())
}
