use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ångström to bohr.
pub const ANGSTROM_TO_BOHR: f64 = 1.8897259886;

const ELEMENTS: [&str; 18] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar",
];

/// Nuclear charge for an element symbol (case-insensitive).
pub fn atomic_number(symbol: &str) -> Option<u32> {
    ELEMENTS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(symbol))
        .map(|i| i as u32 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub symbol: String,
    pub charge: u32,
    /// Cartesian position in Å.
    pub position: [f64; 3],
}

impl Atom {
    pub fn new(symbol: &str, position: [f64; 3]) -> Result<Self> {
        let charge = atomic_number(symbol)
            .ok_or_else(|| Error::InvalidGeometry(format!("unknown element `{symbol}`")))?;
        let mut canonical = symbol.to_ascii_lowercase();
        canonical[..1].make_ascii_uppercase();
        Ok(Atom {
            symbol: canonical,
            charge,
            position,
        })
    }

    pub fn hydrogen(position: [f64; 3]) -> Self {
        Atom {
            symbol: "H".into(),
            charge: 1,
            position,
        }
    }

    pub fn position_bohr(&self) -> [f64; 3] {
        self.position.map(|x| x * ANGSTROM_TO_BOHR)
    }
}

/// A molecular geometry in Å with total charge and spin multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub atoms: Vec<Atom>,
    pub total_charge: i32,
    pub spin_multiplicity: u32,
}

impl Geometry {
    /// Neutral singlet geometry; validates the closed-shell invariants.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        Self::with_charge(atoms, 0, 1)
    }

    pub fn with_charge(
        atoms: Vec<Atom>,
        total_charge: i32,
        spin_multiplicity: u32,
    ) -> Result<Self> {
        let g = Geometry {
            atoms,
            total_charge,
            spin_multiplicity,
        };
        g.validate()?;
        Ok(g)
    }

    /// Neutral subsystem whose electron count may be odd; only positions are
    /// checked, and closed-shell solvers reject it later if needed.
    pub fn subsystem(atoms: Vec<Atom>) -> Result<Self> {
        let g = Geometry {
            atoms,
            total_charge: 0,
            spin_multiplicity: 1,
        };
        g.validate_positions()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_positions()?;
        if self.spin_multiplicity != 1 {
            return Err(Error::InvalidGeometry(format!(
                "spin multiplicity {} unsupported (restricted closed-shell only)",
                self.spin_multiplicity
            )));
        }
        let n = self.n_electrons_signed();
        if n < 0 || n % 2 != 0 {
            return Err(Error::InvalidGeometry(format!(
                "electron count {n} is not a non-negative even number"
            )));
        }
        Ok(())
    }

    fn validate_positions(&self) -> Result<()> {
        for (i, a) in self.atoms.iter().enumerate() {
            if a.charge == 0 {
                return Err(Error::InvalidGeometry(format!(
                    "atom {i} has zero nuclear charge"
                )));
            }
            if a.position.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidGeometry(format!(
                    "atom {i} has a non-finite coordinate"
                )));
            }
            for (j, b) in self.atoms.iter().enumerate().take(i) {
                if distance(a.position, b.position) < 1e-8 {
                    return Err(Error::InvalidGeometry(format!(
                        "atoms {j} and {i} share the same position"
                    )));
                }
            }
        }
        Ok(())
    }

    fn n_electrons_signed(&self) -> i64 {
        self.atoms.iter().map(|a| a.charge as i64).sum::<i64>() - self.total_charge as i64
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons_signed().max(0) as usize
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Nuclear repulsion energy in hartree.
    pub fn nuclear_repulsion(&self) -> f64 {
        let mut e = 0.0;
        for (i, a) in self.atoms.iter().enumerate() {
            for b in &self.atoms[..i] {
                let r = distance(a.position_bohr(), b.position_bohr());
                e += (a.charge * b.charge) as f64 / r;
            }
        }
        e
    }

    pub fn translated(&self, shift: [f64; 3]) -> Geometry {
        let mut g = self.clone();
        for a in &mut g.atoms {
            for (x, d) in a.position.iter_mut().zip(shift) {
                *x += d;
            }
        }
        g
    }

    /// Parse the XYZ format: count line, comment line, then `El x y z` in Å.
    pub fn from_xyz_str(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let (_, count_line) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty XYZ file".into()))?;
        let count: usize = count_line.trim().parse().map_err(|_| {
            parse_err(
                1,
                format!("expected atom count, found `{}`", count_line.trim()),
            )
        })?;
        lines.next();
        let mut atoms = Vec::with_capacity(count);
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if atoms.len() == count {
                return Err(parse_err(
                    idx + 1,
                    "more atoms than the count line declares".into(),
                ));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(parse_err(
                    idx + 1,
                    format!("expected `El x y z`, found `{line}`"),
                ));
            }
            let mut pos = [0.0; 3];
            for k in 0..3 {
                pos[k] = fields[k + 1].parse().map_err(|_| {
                    parse_err(idx + 1, format!("bad coordinate `{}`", fields[k + 1]))
                })?;
            }
            let atom = Atom::new(fields[0], pos).map_err(|e| parse_err(idx + 1, e.to_string()))?;
            atoms.push(atom);
        }
        if atoms.len() != count {
            return Err(parse_err(
                count + 2,
                format!("count line declares {count} atoms, found {}", atoms.len()),
            ));
        }
        Geometry::new(atoms)
    }

    pub fn read_xyz(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_xyz_str(&text, &path.display().to_string())
    }

    pub fn to_xyz_string(&self, comment: &str) -> String {
        let mut s = format!("{}\n{}\n", self.atoms.len(), comment);
        for a in &self.atoms {
            let _ = writeln!(
                s,
                "{:<2} {:>16.10} {:>16.10} {:>16.10}",
                a.symbol, a.position[0], a.position[1], a.position[2]
            );
        }
        s
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Equispaced linear hydrogen chain along z with spacing `r` Å.
pub fn hydrogen_chain(n: usize, r: f64) -> Result<Geometry> {
    Geometry::new(
        (0..n)
            .map(|i| Atom::hydrogen([0.0, 0.0, i as f64 * r]))
            .collect(),
    )
}

/// Planar ring of `n` atoms on a circle of the given diameter (Å) with bond-length
/// alternation `bla` (Å): consecutive bonds alternate between `d + bla/2` and
/// `d - bla/2`, where `d` is chosen so the ring closes on the circle.
pub fn ring(symbol: &str, n: usize, diameter: f64, bla: f64) -> Result<Geometry> {
    if n < 3 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGeometry(
            "alternating ring needs an even atom count >= 4".into(),
        ));
    }
    let radius = diameter / 2.0;
    // Alternating chords subtend angles a and b with a + b = 4π/n and
    // 2R sin(a/2) - 2R sin(b/2) = bla; solve for a by bisection.
    let pair = 4.0 * std::f64::consts::PI / n as f64;
    let diff = |a: f64| 2.0 * radius * ((a / 2.0).sin() - ((pair - a) / 2.0).sin()) - bla;
    let (mut lo, mut hi) = (pair / 2.0, pair);
    if bla < 0.0 {
        return Err(Error::InvalidGeometry(
            "bond-length alternation must be >= 0".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let long_angle = 0.5 * (lo + hi);
    let short_angle = pair - long_angle;
    let mut theta = 0.0_f64;
    let mut atoms = Vec::with_capacity(n);
    for i in 0..n {
        atoms.push(Atom::new(
            symbol,
            [radius * theta.cos(), radius * theta.sin(), 0.0],
        )?);
        theta += if i % 2 == 0 { long_angle } else { short_angle };
    }
    Geometry::new(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_round_trip() {
        let g = hydrogen_chain(4, 0.75).unwrap();
        let text = g.to_xyz_string("H4");
        let back = Geometry::from_xyz_str(&text, "mem").unwrap();
        assert_eq!(back.len(), 4);
        for (a, b) in g.atoms.iter().zip(&back.atoms) {
            assert_eq!(a.symbol, b.symbol);
            for k in 0..3 {
                assert!((a.position[k] - b.position[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn xyz_count_mismatch_reports_line() {
        let err = Geometry::from_xyz_str("3\n\nH 0 0 0\nH 0 0 1\n", "x.xyz").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn rejects_coincident_atoms_and_odd_electrons() {
        let h = Atom::hydrogen([0.0; 3]);
        assert!(Geometry::new(vec![h.clone(), h.clone()]).is_err());
        assert!(Geometry::new(vec![h]).is_err());
    }

    #[test]
    fn ring_has_requested_diameter_and_alternation() {
        let g = ring("C", 18, 7.31, 0.14).unwrap();
        let bonds: Vec<f64> = (0..18)
            .map(|i| distance(g.atoms[i].position, g.atoms[(i + 1) % 18].position))
            .collect();
        assert!((bonds[0] - bonds[1] - 0.14).abs() < 1e-9);
        assert!((bonds[2] - bonds[3] - 0.14).abs() < 1e-9);
        for a in &g.atoms {
            let r = (a.position[0].powi(2) + a.position[1].powi(2)).sqrt();
            assert!((r - 7.31 / 2.0).abs() < 1e-12);
        }
    }
}
