//! Evolution kernel bounds and time-averaged transport for a localized
//! model and for the difference model.

use cocycle_lab::dynamics::{default_t_grid, sudl_statistic, transport_probe, TransportOptions};
use cocycle_lab::model::{sample_realization, PotentialModel};
use cocycle_lab::spectrum::{build_operator, diagonalize, DEFAULT_EPS_GRID};

fn main() -> cocycle_lab::Result<()> {
    let model = PotentialModel::bernoulli_anderson(3.0);
    let r = sample_realization(&model, 5, -80, 80)?;
    let es = diagonalize(&build_operator(&r, -80, 80)?)?;
    let sudl = sudl_statistic(&es, (-10.0, 10.0), 0, &default_t_grid(1e3), 0.2, &DEFAULT_EPS_GRID, 1e8)?;
    for (eps, c) in &sudl.c_hat {
        println!("eps {eps:.2}: C = {c:.3}");
    }
    println!("{} violations", sudl.violations.len());

    let t_list = [1e2, 1e3, 1e4];
    let opts = TransportOptions::default();
    for (name, m) in [("difference", PotentialModel::difference_example()), ("bernoulli(3)", model)] {
        println!("{name}:");
        for row in transport_probe(&m, &t_list, 1, &opts)? {
            println!(
                "  T = {:>7.0}  N(T) = {:>3}  mass {:.3e}  bound {:.3e}  ratio {:.3e}",
                row.t_scale, row.n_of_t, row.mass, row.exp_bound, row.ratio
            );
        }
    }
    Ok(())
}
