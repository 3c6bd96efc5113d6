use std::collections::BTreeMap;

use super::plan::{combinations, Cap, NMer};
use crate::error::{Error, Result};

/// Subsystem energies keyed by sorted fragment index sets.
pub type SubsystemEnergies = BTreeMap<Vec<usize>, f64>;

fn binomial(n: i64, k: i64) -> i64 {
    if k == 0 {
        return 1;
    }
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Coefficient of an `m`-body energy in the order-`k` expansion over `n` fragments.
pub fn assembly_coefficient(n: usize, order: usize, m: usize) -> i64 {
    if m == 0 || m > order {
        return 0;
    }
    let sign = if (order - m).is_multiple_of(2) { 1 } else { -1 };
    sign * binomial(n as i64 - m as i64 - 1, (order - m) as i64)
}

fn check_order(n: usize, order: usize) -> Result<()> {
    if order == 0 || order > n {
        return Err(Error::config(
            "order",
            format!("order {order} outside 1..={n}"),
        ));
    }
    Ok(())
}

fn lookup(energies: &SubsystemEnergies, set: &[usize]) -> Result<f64> {
    energies
        .get(set)
        .copied()
        .ok_or_else(|| Error::MissingSubproblem(set.to_vec()))
}

fn sum_order(energies: &SubsystemEnergies, n: usize, m: usize) -> Result<f64> {
    combinations(n, m).iter().map(|s| lookup(energies, s)).sum()
}

/// Truncated many-body expansion of the total energy.
pub fn assemble_mbe_energy(energies: &SubsystemEnergies, n: usize, order: usize) -> Result<f64> {
    check_order(n, order)?;
    let nf = n as f64;
    match order {
        1 => sum_order(energies, n, 1),
        2 => Ok(sum_order(energies, n, 2)? - (nf - 2.0) * sum_order(energies, n, 1)?),
        3 => {
            let e3 = sum_order(energies, n, 3)?;
            let e2 = sum_order(energies, n, 2)?;
            let e1 = sum_order(energies, n, 1)?;
            Ok(e3 - (nf - 3.0) * e2 + 0.5 * (nf - 2.0) * (nf - 3.0) * e1)
        }
        _ => {
            let mut total = 0.0;
            for m in 1..=order {
                let c = assembly_coefficient(n, order, m);
                if c != 0 {
                    total += c as f64 * sum_order(energies, n, m)?;
                }
            }
            Ok(total)
        }
    }
}

/// Signed count of every cap over the expansion. Empty when caps cancel.
pub fn cap_imbalance(nmers: &[NMer], n: usize, order: usize) -> BTreeMap<Cap, i64> {
    let mut net: BTreeMap<Cap, i64> = BTreeMap::new();
    for nm in nmers {
        let w = assembly_coefficient(n, order, nm.order());
        for &cap in &nm.caps {
            *net.entry(cap).or_default() += w;
        }
    }
    net.retain(|_, v| *v != 0);
    net
}
