//! FCIDUMP reader and writer.
//!
//! Header keys: `NORB`, `NELEC`, `MS2`, `ORBSYM`, `ISYM`. Records are
//! `value i j k l` with 1-based indices; `i j 0 0` is a one-electron term and
//! `0 0 0 0` the core energy. Orbital-energy records (`i 0 0 0`) are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::MOIntegrals;
use crate::error::{Error, Result};
use crate::linalg::Eri;

const DUP_TOL: f64 = 1e-9;
const WRITE_CUTOFF: f64 = 1e-15;

pub fn read_fcidump(path: &Path) -> Result<MOIntegrals> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fcidump(&text, &path.display().to_string())
}

pub fn write_fcidump(mo: &MOIntegrals, path: &Path) -> Result<()> {
    std::fs::write(path, format_fcidump(mo)).map_err(|e| Error::io(path, e))
}

fn header_value(header: &str, key: &str) -> Option<String> {
    let upper = header.to_ascii_uppercase();
    let mut search = 0;
    while let Some(pos) = upper[search..].find(key) {
        let start = search + pos;
        let before_ok = start == 0 || !upper.as_bytes()[start - 1].is_ascii_alphanumeric();
        let rest = upper[start + key.len()..].trim_start();
        if before_ok && rest.starts_with('=') {
            let value: String = rest[1..]
                .trim_start()
                .chars()
                .take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
                .collect();
            return Some(value);
        }
        search = start + key.len();
    }
    None
}

pub fn parse_fcidump(text: &str, origin: &str) -> Result<MOIntegrals> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut header = String::new();
    let mut body_start = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        header.push_str(t);
        header.push(' ');
        let u = t.to_ascii_uppercase();
        if u.starts_with("&END") || u == "/" || u.ends_with("&END") || u.ends_with('/') {
            body_start = Some(i + 1);
            break;
        }
    }
    let body_start =
        body_start.ok_or_else(|| err(1, "missing `&END` terminating the header".into()))?;
    if !header.to_ascii_uppercase().contains("&FCI") {
        return Err(err(1, "header must start with `&FCI`".into()));
    }
    let norb: usize = header_value(&header, "NORB")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, "header lacks NORB".into()))?;
    let nelec: usize = header_value(&header, "NELEC")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, "header lacks NELEC".into()))?;
    if let Some(ms2) = header_value(&header, "MS2") {
        if ms2
            .parse::<i64>()
            .map_err(|_| err(1, format!("bad MS2 `{ms2}`")))?
            != 0
        {
            return Err(err(1, "only MS2=0 (closed shell) is supported".into()));
        }
    }

    let mut h = DMatrix::zeros(norb, norb);
    let mut v = Eri::zeros(norb);
    let mut e_core = 0.0;
    let mut seen_one: HashMap<(usize, usize), f64> = HashMap::new();
    let mut seen_two: HashMap<(usize, usize, usize, usize), f64> = HashMap::new();
    let mut seen_core: Option<f64> = None;

    for (lineno, line) in text.lines().enumerate().skip(body_start) {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(err(
                lineno + 1,
                format!("expected `value i j k l`, found `{t}`"),
            ));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| err(lineno + 1, format!("bad value `{}`", fields[0])))?;
        let mut idx = [0usize; 4];
        for k in 0..4 {
            idx[k] = fields[k + 1]
                .parse()
                .map_err(|_| err(lineno + 1, format!("bad index `{}`", fields[k + 1])))?;
            if idx[k] > norb {
                return Err(err(
                    lineno + 1,
                    format!("index {} exceeds NORB={norb}", idx[k]),
                ));
            }
        }
        let [i, j, k, l] = idx;
        match (i, j, k, l) {
            (0, 0, 0, 0) => {
                if let Some(prev) = seen_core {
                    if (prev - value).abs() > DUP_TOL {
                        return Err(Error::SymmetryViolation {
                            p: 0,
                            q: 0,
                            r: 0,
                            s: 0,
                            a: prev,
                            b: value,
                        });
                    }
                }
                seen_core = Some(value);
                e_core = value;
            }
            (_, 0, 0, 0) => {}
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let key = (i.max(j), i.min(j));
                if let Some(&prev) = seen_one.get(&key) {
                    if (prev - value).abs() > DUP_TOL {
                        return Err(Error::SymmetryViolation {
                            p: i,
                            q: j,
                            r: 0,
                            s: 0,
                            a: prev,
                            b: value,
                        });
                    }
                }
                seen_one.insert(key, value);
                h[(i - 1, j - 1)] = value;
                h[(j - 1, i - 1)] = value;
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                let key = canonical_quad(i, j, k, l);
                if let Some(&prev) = seen_two.get(&key) {
                    if (prev - value).abs() > DUP_TOL {
                        return Err(Error::SymmetryViolation {
                            p: i,
                            q: j,
                            r: k,
                            s: l,
                            a: prev,
                            b: value,
                        });
                    }
                }
                seen_two.insert(key, value);
                v.set_sym(i - 1, j - 1, k - 1, l - 1, value);
            }
            _ => {
                return Err(err(
                    lineno + 1,
                    format!("unrecognized index pattern {i} {j} {k} {l}"),
                ));
            }
        }
    }
    let mo = MOIntegrals {
        n_orb: norb,
        n_elec: nelec,
        h,
        v,
        e_core,
    };
    mo.validate()?;
    Ok(mo)
}

fn canonical_quad(i: usize, j: usize, k: usize, l: usize) -> (usize, usize, usize, usize) {
    let (a, b) = (i.max(j), i.min(j));
    let (c, d) = (k.max(l), k.min(l));
    if (a, b) >= (c, d) {
        (a, b, c, d)
    } else {
        (c, d, a, b)
    }
}

pub fn format_fcidump(mo: &MOIntegrals) -> String {
    let n = mo.n_orb;
    let mut s = String::new();
    let _ = writeln!(s, " &FCI NORB={n},NELEC={},MS2=0,", mo.n_elec);
    let orbsym: Vec<String> = (0..n).map(|_| "1".to_string()).collect();
    let _ = writeln!(s, "  ORBSYM={},", orbsym.join(","));
    let _ = writeln!(s, "  ISYM=1,");
    let _ = writeln!(s, " &END");
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for t in 0..=r {
                    if (r, t) > (p, q) {
                        continue;
                    }
                    let val = mo.v.get(p, q, r, t);
                    if val.abs() > WRITE_CUTOFF {
                        let _ = writeln!(
                            s,
                            "{val:>24.16E} {:>4} {:>4} {:>4} {:>4}",
                            p + 1,
                            q + 1,
                            r + 1,
                            t + 1
                        );
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let val = mo.h[(p, q)];
            if val.abs() > WRITE_CUTOFF {
                let _ = writeln!(
                    s,
                    "{val:>24.16E} {:>4} {:>4} {:>4} {:>4}",
                    p + 1,
                    q + 1,
                    0,
                    0
                );
            }
        }
    }
    let _ = writeln!(
        s,
        "{:>24.16E} {:>4} {:>4} {:>4} {:>4}",
        mo.e_core, 0, 0, 0, 0
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_only_file() {
        let text = " &FCI NORB=1,NELEC=0,MS2=0,\n ORBSYM=1,\n ISYM=1,\n &END\n  -3.25 0 0 0 0\n";
        let mo = parse_fcidump(text, "mem").unwrap();
        assert_eq!(mo.e_core, -3.25);
        assert_eq!(mo.h[(0, 0)], 0.0);
    }

    #[test]
    fn disagreeing_duplicates_are_rejected() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.5 1 2 1 2\n 0.6 2 1 2 1\n";
        assert!(matches!(
            parse_fcidump(text, "mem"),
            Err(Error::SymmetryViolation { .. })
        ));
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.5 1 2 1 2\n 0.5 2 1 2 1\n";
        assert!(parse_fcidump(text, "mem").is_ok());
    }

    #[test]
    fn parse_error_names_line() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.5 1 2 1\n";
        match parse_fcidump(text, "f.dump") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_keys_are_word_bounded() {
        let h = "&FCI NORB=4,NELEC=2,MS2=0, ORBSYM=1,1,1,1, ISYM=1";
        assert_eq!(header_value(h, "NORB").as_deref(), Some("4"));
        assert_eq!(header_value(h, "NELEC").as_deref(), Some("2"));
        assert_eq!(header_value(h, "ISYM").as_deref(), Some("1"));
    }
}
