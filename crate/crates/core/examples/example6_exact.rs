//! Exact integer checks for the difference model at E = 0: the factorization
//! identity, the norm bound along a path and the LIL envelope.

use cocycle_lab::example6::{lil_envelope_check, norm_bound_check, rxi_identity_check, xi_bits};

fn main() -> cocycle_lab::Result<()> {
    let xi = xi_bits(1, 0, 502);
    let check = rxi_identity_check(&xi)?;
    println!("identity at n = 500: {} (entries up to {} bits)", check.equal, check.lhs.bits());

    for n in [10, 100, 1000, 10_000] {
        let b = norm_bound_check(&xi_bits(2, 0, n + 1))?;
        println!("n = {n:>6}: S_n = {:>4}, log||T|| = {:>9.3} <= {:>9.3}: {}", b.s, b.log_norm, b.bound, b.holds);
    }

    let rep = lil_envelope_check(&[1, 2, 3, 4], 100_000, 2.0)?;
    for row in rep.rows.iter().filter(|r| r.seed == 1) {
        println!("seed 1, n = {:>6}: S_n = {:>4}, within envelope {}", row.n, row.s_n, row.envelope_ok);
    }
    for (n, frac) in &rep.exceedance {
        println!("n = {n:>6}: {:.0}% of seeds exceed the envelope", 100.0 * frac);
    }
    Ok(())
}
