use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::geometry::distance;
use crate::integrals::{Atom, Geometry};

pub const DEFAULT_CAP_BOND_LENGTH: f64 = 1.061;

fn default_cap_bond_length() -> f64 {
    DEFAULT_CAP_BOND_LENGTH
}

/// Disjoint atom groups plus the covalent bonds cut between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentationPlan {
    pub fragments: Vec<Vec<usize>>,
    #[serde(default)]
    pub severed_bonds: Vec<(usize, usize)>,
    /// Link-hydrogen distance from the retained atom, Å.
    #[serde(default = "default_cap_bond_length")]
    pub cap_bond_length: f64,
}

impl FragmentationPlan {
    pub fn new(fragments: Vec<Vec<usize>>) -> Self {
        FragmentationPlan {
            fragments,
            severed_bonds: Vec::new(),
            cap_bond_length: DEFAULT_CAP_BOND_LENGTH,
        }
    }

    /// Consecutive blocks of `size` atoms.
    pub fn blocks(n_atoms: usize, size: usize) -> Result<Self> {
        if size == 0 || !n_atoms.is_multiple_of(size) {
            return Err(Error::config(
                "fragments",
                format!("{n_atoms} atoms do not split into blocks of {size}"),
            ));
        }
        Ok(Self::new(
            (0..n_atoms / size)
                .map(|f| (f * size..(f + 1) * size).collect())
                .collect(),
        ))
    }

    pub fn n_fragments(&self) -> usize {
        self.fragments.len()
    }

    /// Fragment containing `atom`, if any.
    pub fn fragment_of(&self, atom: usize) -> Option<usize> {
        self.fragments.iter().position(|f| f.contains(&atom))
    }

    pub fn validate(&self, n_atoms: usize) -> Result<()> {
        if self.fragments.is_empty() {
            return Err(Error::config("fragments", "plan lists no fragments"));
        }
        let mut seen = BTreeSet::new();
        for (i, frag) in self.fragments.iter().enumerate() {
            if frag.is_empty() {
                return Err(Error::config("fragments", format!("fragment {i} is empty")));
            }
            for &a in frag {
                if a >= n_atoms {
                    return Err(Error::config(
                        "fragments",
                        format!("atom {a} in fragment {i} is out of range ({n_atoms} atoms)"),
                    ));
                }
                if !seen.insert(a) {
                    return Err(Error::config(
                        "fragments",
                        format!("atom {a} appears in two fragments"),
                    ));
                }
            }
        }
        if let Some(missing) = (0..n_atoms).find(|a| !seen.contains(a)) {
            return Err(Error::config(
                "fragments",
                format!("atom {missing} belongs to no fragment"),
            ));
        }
        for &(a, b) in &self.severed_bonds {
            match (self.fragment_of(a), self.fragment_of(b)) {
                (Some(fa), Some(fb)) if fa != fb => {}
                (Some(_), Some(_)) => {
                    return Err(Error::config(
                        "severed_bonds",
                        format!("bond ({a}, {b}) lies inside one fragment"),
                    ))
                }
                _ => {
                    return Err(Error::config(
                        "severed_bonds",
                        format!("bond ({a}, {b}) names an unknown atom"),
                    ))
                }
            }
        }
        if !(self.cap_bond_length.is_finite() && self.cap_bond_length > 0.0) {
            return Err(Error::config(
                "cap_bond_length",
                "must be a positive length",
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("plan", e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// A cap: the retained atom and the removed partner it points towards.
pub type Cap = (usize, usize);

/// Geometry of `members` (atom indices) with one hydrogen per outward bond,
/// placed at `r_cap` Å from the retained atom along the bond. Member atoms keep
/// their order and come first.
pub fn cap_severed_bonds(
    geometry: &Geometry,
    members: &[usize],
    severed_bonds: &[(usize, usize)],
    r_cap: f64,
) -> Result<(Geometry, Vec<Cap>)> {
    let inside: BTreeSet<usize> = members.iter().copied().collect();
    let mut caps = Vec::new();
    for &(a, b) in severed_bonds {
        match (inside.contains(&a), inside.contains(&b)) {
            (true, false) => caps.push((a, b)),
            (false, true) => caps.push((b, a)),
            _ => {}
        }
    }
    caps.sort_unstable();
    let mut atoms: Vec<Atom> = members.iter().map(|&i| geometry.atoms[i].clone()).collect();
    for &(keep, gone) in &caps {
        let r1 = geometry.atoms[keep].position;
        let r2 = geometry.atoms[gone].position;
        let len = distance(r1, r2);
        if len < 1e-6 {
            return Err(Error::DegenerateBond(keep, gone));
        }
        let pos = [0, 1, 2].map(|k| r1[k] + (r2[k] - r1[k]) / len * r_cap);
        atoms.push(Atom::hydrogen(pos));
    }
    Ok((Geometry::subsystem(atoms)?, caps))
}

/// A k-body subsystem: fragment indices, its capped geometry and caps.
#[derive(Debug, Clone, PartialEq)]
pub struct NMer {
    pub members: Vec<usize>,
    pub geometry: Geometry,
    pub caps: Vec<Cap>,
}

impl NMer {
    pub fn order(&self) -> usize {
        self.members.len()
    }
}

/// All `k`-combinations of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Every `k`-mer of the plan, capped.
pub fn enumerate_nmers(
    plan: &FragmentationPlan,
    geometry: &Geometry,
    k: usize,
) -> Result<Vec<NMer>> {
    combinations(plan.n_fragments(), k)
        .into_iter()
        .map(|members| {
            let atoms: Vec<usize> = members
                .iter()
                .flat_map(|&f| plan.fragments[f].iter().copied())
                .collect();
            let (geometry, caps) =
                cap_severed_bonds(geometry, &atoms, &plan.severed_bonds, plan.cap_bond_length)?;
            Ok(NMer {
                members,
                geometry,
                caps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::hydrogen_chain;

    #[test]
    fn cap_on_the_bond_axis() {
        let g = Geometry::new(vec![
            Atom::hydrogen([0.0; 3]),
            Atom::hydrogen([0.0, 0.0, 1.5]),
        ])
        .unwrap();
        let (capped, caps) = cap_severed_bonds(&g, &[0], &[(0, 1)], 1.061).unwrap();
        assert_eq!(caps, vec![(0, 1)]);
        assert_eq!(capped.atoms[1].position, [0.0, 0.0, 1.061]);
    }

    #[test]
    fn combination_counts_and_order() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(5, 3).len(), 10);
        assert_eq!(combinations(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn plan_validation() {
        let plan = FragmentationPlan::new(vec![vec![0, 1], vec![3]]);
        assert!(matches!(plan.validate(4), Err(Error::Config { .. })));
        let mut ok = FragmentationPlan::blocks(4, 2).unwrap();
        ok.validate(4).unwrap();
        ok.severed_bonds.push((0, 1));
        assert!(ok.validate(4).is_err());
    }

    #[test]
    fn h10_dimers_are_uncapped_four_atom_systems() {
        let g = hydrogen_chain(10, 1.0).unwrap();
        let plan = FragmentationPlan::blocks(10, 2).unwrap();
        let dimers = enumerate_nmers(&plan, &g, 2).unwrap();
        assert_eq!(dimers.len(), 10);
        assert!(dimers
            .iter()
            .all(|d| d.geometry.len() == 4 && d.caps.is_empty()));
    }
}
