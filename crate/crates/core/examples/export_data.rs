//! Writes CSV tables and the binary eigenvector container, then reads the
//! container back.

use cocycle_lab::io::{decay_table, eigen_table, read_eigenvectors, sample_table, write_eigenvectors};
use cocycle_lab::model::{sample_realization, PotentialModel};
use cocycle_lab::spectrum::{build_operator, diagonalize, sule_report, DEFAULT_EPS_GRID, DEFAULT_FLOOR};

fn main() -> cocycle_lab::Result<()> {
    let dir = std::env::temp_dir().join("cocycle-lab-export-example");
    std::fs::create_dir_all(&dir)?;
    let model = PotentialModel::bernoulli_anderson(2.0);
    let r = sample_realization(&model, 1, 1, 200)?;
    sample_table(&r).write_csv(dir.join("sample.csv"))?;
    let es = diagonalize(&build_operator(&r, 1, 200)?)?;
    let rep = sule_report(&es, (-1.0, 1.0), 0.1, &DEFAULT_EPS_GRID, DEFAULT_FLOOR);
    eigen_table(&rep).write_csv(dir.join("eigen.csv"))?;
    decay_table(&es, &[0, 1]).write_csv(dir.join("decay.csv"))?;
    write_eigenvectors(dir.join("eigenvectors.bin"), &es)?;
    let (dim, data) = read_eigenvectors(dir.join("eigenvectors.bin"))?;
    println!("wrote {}; container holds {} vectors of dimension {dim}", dir.display(), data.len() / dim);
    Ok(())
}
