//! Operator pools: anti-Hermitian generators over `2·n_orb` qubits.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{jordan_wigner, qubit_map, FermionOperator, PauliString, PauliSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    /// Spin-orbital singles and doubles that conserve `S_z`.
    FermionicGeneral,
    /// Spin-orbital excitations summed with their α↔β mirror image.
    SpinComplete,
    /// Singlet generators built from spin-free excitation operators.
    #[default]
    SpinAdapted,
    /// Single X/Y Pauli strings taken from the fermionic generators.
    MultiQubit,
    /// Qubit excitations: fermionic generators without parity strings.
    Qeb,
}

impl PoolKind {
    pub const ALL: [PoolKind; 5] = [
        PoolKind::FermionicGeneral,
        PoolKind::SpinComplete,
        PoolKind::SpinAdapted,
        PoolKind::MultiQubit,
        PoolKind::Qeb,
    ];

    pub fn is_fermionic(self) -> bool {
        matches!(
            self,
            PoolKind::FermionicGeneral | PoolKind::SpinComplete | PoolKind::SpinAdapted
        )
    }
}

impl std::fmt::Display for PoolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PoolKind::FermionicGeneral => "fermionic_general",
            PoolKind::SpinComplete => "spin_complete",
            PoolKind::SpinAdapted => "spin_adapted",
            PoolKind::MultiQubit => "multi_qubit",
            PoolKind::Qeb => "qeb",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for PoolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PoolKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::config("pool", format!("unknown pool kind '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct PoolOperator {
    /// Human-readable provenance, e.g. `d+(0,1;2,3)` or `X0Y1`.
    pub label: String,
    pub generator: PauliSum,
}

#[derive(Debug, Clone)]
pub struct OperatorPool {
    pub kind: PoolKind,
    pub n_qubits: usize,
    pub n_elec: usize,
    pub operators: Vec<PoolOperator>,
}

impl OperatorPool {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

type So = (usize, bool);

fn mode((p, beta): So) -> usize {
    2 * p + beta as usize
}

fn so_label((p, beta): So) -> String {
    format!("{p}{}", if beta { 'b' } else { 'a' })
}

/// `a†_p a_q − h.c.` over spin orbitals.
fn single(n_modes: usize, p: usize, q: usize) -> FermionOperator {
    let mut f = FermionOperator::new(n_modes);
    f.add_real(1.0, vec![(p, true), (q, false)]);
    f.anti_hermitian_part()
}

/// `a†_p a†_q a_r a_s − h.c.` over spin orbitals.
fn double(n_modes: usize, p: usize, q: usize, r: usize, s: usize) -> FermionOperator {
    let mut f = FermionOperator::new(n_modes);
    f.add_real(1.0, vec![(p, true), (q, true), (r, false), (s, false)]);
    f.anti_hermitian_part()
}

/// Spin-orbital singles and doubles conserving `S_z`, keyed by their spin orbitals.
fn spin_orbital_excitations(n_orb: usize) -> Vec<(Vec<So>, FermionOperator)> {
    let n_modes = 2 * n_orb;
    let sos: Vec<So> = (0..n_orb).flat_map(|p| [(p, false), (p, true)]).collect();
    let mut out = Vec::new();
    for (a, &p) in sos.iter().enumerate() {
        for &q in &sos[..a] {
            if p.1 == q.1 {
                out.push((vec![p, q], single(n_modes, mode(p), mode(q))));
            }
        }
    }
    let pairs: Vec<(So, So)> = sos
        .iter()
        .enumerate()
        .flat_map(|(a, &p)| sos[..a].iter().map(move |&q| (p, q)))
        .collect();
    for (a, &(p, q)) in pairs.iter().enumerate() {
        for &(r, s) in &pairs[..a] {
            let up = p.1 as i32 + q.1 as i32;
            let down = r.1 as i32 + s.1 as i32;
            if up == down {
                out.push((
                    vec![p, q, r, s],
                    double(n_modes, mode(p), mode(q), mode(r), mode(s)),
                ));
            }
        }
    }
    out
}

fn excitation_label(sos: &[So]) -> String {
    let names: Vec<String> = sos.iter().map(|&s| so_label(s)).collect();
    let half = names.len() / 2;
    format!("({};{})", names[..half].join(","), names[half..].join(","))
}

fn is_zero(p: &PauliSum) -> bool {
    p.is_empty()
}

/// `Σ_σ a†_pσ a_qσ`.
fn spin_free_single(n_orb: usize, p: usize, q: usize) -> FermionOperator {
    let mut f = FermionOperator::new(2 * n_orb);
    for sigma in 0..2 {
        f.add_real(1.0, vec![(2 * p + sigma, true), (2 * q + sigma, false)]);
    }
    f
}

/// `e_{pq,rs} = Σ_στ a†_pσ a†_qτ a_sτ a_rσ` (moves r→p and s→q).
fn spin_free_double(n_orb: usize, p: usize, q: usize, r: usize, s: usize) -> FermionOperator {
    let mut f = FermionOperator::new(2 * n_orb);
    for sigma in 0..2 {
        for tau in 0..2 {
            f.add_real(
                1.0,
                vec![
                    (2 * p + sigma, true),
                    (2 * q + tau, true),
                    (2 * s + tau, false),
                    (2 * r + sigma, false),
                ],
            );
        }
    }
    f
}

/// Singlet generators.
///
/// Singles: `(E_pq − E_qp)/√2` for `p > q`.
/// Doubles over `p ≤ q`, `r ≤ s` with `(p,q) > (r,s)`:
/// `τ± = (e_{pq,rs} ± e_{qp,rs}) − h.c.`; the `−` combination only when
/// `p < q` and `r < s` (it vanishes otherwise).
fn spin_adapted(n_orb: usize) -> Vec<PoolOperator> {
    let mut out = Vec::new();
    for p in 0..n_orb {
        for q in 0..p {
            let f = spin_free_single(n_orb, p, q).anti_hermitian_part();
            let g = jordan_wigner(&f).scaled(Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
            out.push(PoolOperator {
                label: format!("s({p};{q})"),
                generator: g,
            });
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n_orb)
        .flat_map(|q| (0..=q).map(move |p| (p, q)))
        .collect();
    for (a, &(p, q)) in pairs.iter().enumerate() {
        for &(r, s) in &pairs[..a] {
            for plus in [true, false] {
                if !plus && (p == q || r == s) {
                    continue;
                }
                let sign = if plus { 1.0 } else { -1.0 };
                let f = spin_free_double(n_orb, p, q, r, s)
                    .plus(&spin_free_double(n_orb, q, p, r, s).scaled(Complex64::new(sign, 0.0)))
                    .anti_hermitian_part();
                let g = jordan_wigner(&f);
                if is_zero(&g) {
                    continue;
                }
                out.push(PoolOperator {
                    label: format!("d{}({p},{q};{r},{s})", if plus { '+' } else { '-' }),
                    generator: g,
                });
            }
        }
    }
    out
}

fn flip(sos: &[So]) -> Vec<So> {
    sos.iter().map(|&(p, b)| (p, !b)).collect()
}

fn excitation(n_modes: usize, sos: &[So]) -> FermionOperator {
    let m: Vec<usize> = sos.iter().map(|&s| mode(s)).collect();
    match m.len() {
        2 => single(n_modes, m[0], m[1]),
        _ => double(n_modes, m[0], m[1], m[2], m[3]),
    }
}

/// Mode indices identifying an excitation up to sign and direction.
fn canonical(sos: &[So]) -> Vec<usize> {
    let mut halves: Vec<Vec<usize>> = sos
        .chunks(sos.len() / 2)
        .map(|h| {
            let mut v: Vec<usize> = h.iter().map(|&s| mode(s)).collect();
            v.sort_unstable();
            v
        })
        .collect();
    halves.sort();
    halves.concat()
}

pub fn build_pool(n_orb: usize, n_elec: usize, kind: PoolKind) -> Result<OperatorPool> {
    if n_orb == 0 {
        return Err(Error::AdaptPoolEmpty);
    }
    let n_qubits = 2 * n_orb;
    let operators = match kind {
        PoolKind::SpinAdapted => spin_adapted(n_orb),
        PoolKind::FermionicGeneral => spin_orbital_excitations(n_orb)
            .into_iter()
            .map(|(sos, f)| PoolOperator {
                label: excitation_label(&sos),
                generator: jordan_wigner(&f),
            })
            .filter(|op| !is_zero(&op.generator))
            .collect(),
        PoolKind::Qeb => spin_orbital_excitations(n_orb)
            .into_iter()
            .map(|(sos, f)| PoolOperator {
                label: format!("q{}", excitation_label(&sos)),
                generator: qubit_map(&f, false),
            })
            .filter(|op| !is_zero(&op.generator))
            .collect(),
        PoolKind::SpinComplete => {
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            let mut ops = Vec::new();
            for (sos, f) in spin_orbital_excitations(n_orb) {
                let mirror = flip(&sos);
                let (key, mirror_key) = (canonical(&sos), canonical(&mirror));
                if !seen.insert(key.clone()) {
                    continue;
                }
                let mut g = jordan_wigner(&f);
                if mirror_key != key {
                    seen.insert(mirror_key);
                    g = g.plus(&jordan_wigner(&excitation(n_qubits, &mirror)));
                }
                if !is_zero(&g) {
                    ops.push(PoolOperator {
                        label: format!("c{}", excitation_label(&sos)),
                        generator: g,
                    });
                }
            }
            ops
        }
        PoolKind::MultiQubit => {
            let mut strings: BTreeSet<PauliString> = BTreeSet::new();
            for (_, f) in spin_orbital_excitations(n_orb) {
                for (s, _) in jordan_wigner(&f).iter() {
                    let stripped = s.without_z();
                    if stripped.weight() <= 4 && stripped.n_y() % 2 == 1 {
                        strings.insert(stripped);
                    }
                }
            }
            strings
                .into_iter()
                .map(|s| {
                    let mut g = PauliSum::new(n_qubits);
                    g.add(s, Complex64::new(0.0, 1.0));
                    PoolOperator {
                        label: pauli_label(&s),
                        generator: g,
                    }
                })
                .collect()
        }
    };
    if operators.is_empty() {
        return Err(Error::AdaptPoolEmpty);
    }
    Ok(OperatorPool {
        kind,
        n_qubits,
        n_elec,
        operators,
    })
}

fn pauli_label(s: &PauliString) -> String {
    s.letters()
        .iter()
        .map(|(q, l)| format!("{l:?}{q}"))
        .collect::<Vec<_>>()
        .join("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_orbital_pool_is_empty() {
        for kind in PoolKind::ALL {
            assert!(matches!(build_pool(1, 2, kind), Err(Error::AdaptPoolEmpty)));
        }
    }

    #[test]
    fn kind_round_trips_through_text() {
        for kind in PoolKind::ALL {
            assert_eq!(kind.to_string().parse::<PoolKind>().unwrap(), kind);
        }
    }

    #[test]
    fn two_orbital_pool_sizes() {
        // singles: (1a,0a), (1b,0b); doubles conserving S_z among 6 pairs.
        let g = build_pool(2, 2, PoolKind::FermionicGeneral).unwrap();
        assert_eq!(
            g.operators
                .iter()
                .filter(|o| o.label.matches(',').count() == 0)
                .count(),
            2
        );
        let sa = build_pool(2, 2, PoolKind::SpinAdapted).unwrap();
        // one single; doubles over pairs {00, 01, 11}: (01;00)+, (11;00)+, (11;01)+
        assert_eq!(sa.len(), 4);
        let mq = build_pool(2, 2, PoolKind::MultiQubit).unwrap();
        assert!(mq.operators.iter().all(|o| o.generator.len() == 1));
    }
}
