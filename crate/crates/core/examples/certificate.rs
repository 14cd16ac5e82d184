//! Certificate radius for an admissible family and the no-common-point
//! verdicts inside and beyond it.

use cocycle_lab::model::{admissible_family, support_of_potential_vector, PotentialModel};
use cocycle_lab::projective::{certificate_radius, verify_no_common_point, Verdict};

fn main() -> cocycle_lab::Result<()> {
    let model = PotentialModel::bernoulli_anderson(1.0);
    let (d, i0) = (10, 5);
    let support = support_of_potential_vector(&model, d)?;
    let family = admissible_family(&support, i0, 6).map_err(cocycle_lab::Error::Precondition)?;
    let cert = certificate_radius(&family, i0)?;
    println!("{} vectors, epsilon = {:.3}, radius R = {:.3}", family.len(), cert.epsilon, cert.radius);
    for e in [0.0, 1.3, cert.radius * 1.1, -cert.radius * 1.9] {
        let verdict = match verify_no_common_point(&family, e)? {
            Verdict::NoCommonStructure { exact } => format!("no common structure (exact: {exact})"),
            Verdict::Trivial => "trivial".into(),
            Verdict::Structures { points, pairs } => format!("structures: {points:?} / {pairs:?}"),
        };
        println!("E = {e:>8.3}: {verdict}");
    }
    Ok(())
}
