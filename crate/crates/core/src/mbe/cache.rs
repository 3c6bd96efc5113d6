//! On-disk subproblem energies, one line per fragment set:
//! `<sorted indices>\t<solver tag>\t<energy>`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const FILE_NAME: &str = "subproblems.tsv";

#[derive(Debug)]
pub struct EnergyCache {
    path: PathBuf,
    entries: Mutex<BTreeMap<(Vec<usize>, String), f64>>,
}

impl EnergyCache {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(FILE_NAME);
        let mut entries = BTreeMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            for (k, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let (set, tag, energy) = parse_line(line).ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line: k + 1,
                    message: format!("malformed cache record '{line}'"),
                })?;
                entries.insert((set, tag), energy);
            }
        }
        Ok(EnergyCache {
            path,
            entries: Mutex::new(entries),
        })
    }

    pub fn get(&self, set: &[usize], tag: &str) -> Option<f64> {
        self.entries
            .lock()
            .unwrap()
            .get(&(set.to_vec(), tag.to_string()))
            .copied()
    }

    /// Record an energy and append it to the cache file.
    pub fn put(&self, set: &[usize], tag: &str, energy: f64) -> Result<()> {
        let mut entries = self.entries.lock().unwrap();
        if entries
            .insert((set.to_vec(), tag.to_string()), energy)
            .is_none()
        {
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(|e| Error::io(&self.path, e))?;
            writeln!(f, "{}", format_line(set, tag, energy))
                .map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn format_line(set: &[usize], tag: &str, energy: f64) -> String {
    let idx: Vec<String> = set.iter().map(|i| i.to_string()).collect();
    format!("{}\t{}\t{:.12}", idx.join(","), tag, energy)
}

fn parse_line(line: &str) -> Option<(Vec<usize>, String, f64)> {
    let mut parts = line.split('\t');
    let set = parts
        .next()?
        .split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<Vec<usize>>>()?;
    let tag = parts.next()?.to_string();
    let energy = parts.next()?.trim().parse().ok()?;
    parts.next().is_none().then_some((set, tag, energy))
}

/// `<solver>:<first 16 hex digits of SHA-256 over the given parts>`.
pub fn solver_tag(solver: &str, parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("{solver}:{hex}")
}
