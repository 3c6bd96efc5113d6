//! Run configuration: one TOML file describing a task and every solver knob.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dcvqe_core::dmet::{CostKind, DmetOptions};
use dcvqe_core::integrals::{hydrogen_chain, ring, Geometry};
use dcvqe_core::mbe::ActiveRule;
use dcvqe_core::solver::SolverConfig;
use dcvqe_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Adapt,
    Mbe,
    Dmet,
    Scan,
    Fci,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Task::Adapt => "adapt",
            Task::Mbe => "mbe",
            Task::Dmet => "dmet",
            Task::Scan => "scan",
            Task::Fci => "fci",
        };
        f.write_str(name)
    }
}

/// A method evaluated at every scan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Many-body expansion truncated at the given order.
    Mbe(usize),
    Dmet,
    /// ADAPT-VQE on the whole system.
    Adapt,
    Rhf,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mbe(k) => write!(f, "mbe{k}"),
            Method::Dmet => f.write_str("dmet"),
            Method::Adapt => f.write_str("adapt"),
            Method::Rhf => f.write_str("rhf"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::config(
                "methods",
                format!("unknown method `{s}` (expected mbeN, dmet, adapt or rhf)"),
            )
        };
        match s {
            "dmet" => Ok(Method::Dmet),
            "adapt" => Ok(Method::Adapt),
            "rhf" => Ok(Method::Rhf),
            _ => {
                let order: usize = s
                    .strip_prefix("mbe")
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?;
                if order == 0 {
                    return Err(bad());
                }
                Ok(Method::Mbe(order))
            }
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MbeSettings {
    pub order: usize,
    pub rhf_correction: bool,
    pub active: ActiveRule,
    /// Keep subproblem energies under `<output_dir>/cache`.
    pub cache: bool,
}

impl Default for MbeSettings {
    fn default() -> Self {
        MbeSettings {
            order: 2,
            rhf_correction: false,
            active: ActiveRule::Full,
            cache: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmetSettings {
    /// Embedding solver; the run's `solver` when absent.
    pub solver: Option<SolverConfig>,
    pub cost: CostKind,
    pub electron_tol: f64,
    pub max_iterations: usize,
    pub mu_bracket: f64,
    pub u_tol: f64,
    pub max_u_cycles: usize,
    /// Write the per-sweep trace next to the results.
    pub trace: bool,
}

impl Default for DmetSettings {
    fn default() -> Self {
        let d = DmetOptions::default();
        DmetSettings {
            solver: None,
            cost: d.cost,
            electron_tol: d.electron_tol,
            max_iterations: d.max_iterations,
            mu_bracket: d.mu_bracket,
            u_tol: d.u_tol,
            max_u_cycles: d.max_u_cycles,
            trace: true,
        }
    }
}

impl DmetSettings {
    pub fn options(&self, fallback: &SolverConfig) -> DmetOptions {
        DmetOptions {
            solver: self.solver.clone().unwrap_or_else(|| fallback.clone()),
            cost: self.cost,
            electron_tol: self.electron_tol,
            max_iterations: self.max_iterations,
            mu_bracket: self.mu_bracket,
            u_tol: self.u_tol,
            max_u_cycles: self.max_u_cycles,
            threads: 0,
            trace_path: None,
        }
    }
}

/// Geometry family swept by a scan; the scan parameter is the spacing
/// (chain) or the bond-length alternation (ring), in Å.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Chain {
        atoms: usize,
    },
    Ring {
        atoms: usize,
        diameter: f64,
        #[serde(default = "hydrogen")]
        symbol: String,
    },
}

fn hydrogen() -> String {
    "H".into()
}

impl Generator {
    pub fn atoms(&self) -> usize {
        match self {
            Generator::Chain { atoms } | Generator::Ring { atoms, .. } => *atoms,
        }
    }

    pub fn geometry(&self, parameter: f64) -> Result<Geometry> {
        match self {
            Generator::Chain { atoms } => hydrogen_chain(*atoms, parameter),
            Generator::Ring {
                atoms,
                diameter,
                symbol,
            } => ring(symbol, *atoms, *diameter, parameter),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub generator: Generator,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Explicit grid; overrides start/stop/step when non-empty.
    pub values: Vec<f64>,
    /// Consecutive atoms per fragment.
    pub fragment_size: usize,
    pub methods: Vec<Method>,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            generator: Generator::Chain { atoms: 10 },
            start: 0.5,
            stop: 3.0,
            step: 0.25,
            values: Vec::new(),
            fragment_size: 2,
            methods: vec![Method::Mbe(2), Method::Mbe(3), Method::Dmet],
        }
    }
}

impl ScanSettings {
    /// Grid points, inclusive of both ends.
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !self.values.is_empty() {
            return Ok(self.values.clone());
        }
        if !(self.step > 0.0 && self.stop >= self.start) {
            return Err(Error::config(
                "scan.step",
                "need step > 0 and stop >= start",
            ));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // Round so that 0.1-style steps print cleanly.
        Ok((0..n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default)]
    pub geometry: Option<PathBuf>,
    #[serde(default)]
    pub fcidump: Option<PathBuf>,
    /// Fragment plan. Fragments list atoms for geometries and orbitals for FCIDUMP input.
    #[serde(default)]
    pub plan: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub mbe: MbeSettings,
    #[serde(default)]
    pub dmet: DmetSettings,
    #[serde(default)]
    pub scan: ScanSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    #[serde(default)]
    pub threads: usize,
    /// Compare against exact diagonalization of the full system.
    #[serde(default = "default_oracle")]
    pub oracle: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("dcvqe-out")
}

fn default_oracle() -> bool {
    true
}

impl RunConfig {
    /// A config for `task` with every other field at its default.
    pub fn new(task: Task) -> Self {
        RunConfig {
            task,
            geometry: None,
            fcidump: None,
            plan: None,
            solver: SolverConfig::default(),
            mbe: MbeSettings::default(),
            dmet: DmetSettings::default(),
            scan: ScanSettings::default(),
            output_dir: default_output_dir(),
            threads: 0,
            oracle: true,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read a config file. Relative input paths resolve against its directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.geometry, &mut config.fcidump, &mut config.plan]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let needs_input = self.task != Task::Scan;
        match (&self.geometry, &self.fcidump) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "geometry",
                    "give either geometry or fcidump, not both",
                ))
            }
            (None, None) if needs_input => {
                return Err(Error::config(
                    "geometry",
                    "one of geometry or fcidump is required",
                ))
            }
            (Some(_), None) | (None, Some(_)) if !needs_input => {
                return Err(Error::config(
                    "geometry",
                    "scan builds its own geometries; remove the input file",
                ))
            }
            _ => {}
        }
        let needs_plan = matches!(self.task, Task::Mbe | Task::Dmet);
        match (&self.plan, needs_plan) {
            (None, true) => {
                return Err(Error::config(
                    "plan",
                    format!("task {} needs a fragment plan", self.task),
                ))
            }
            (Some(_), false) => {
                return Err(Error::config(
                    "plan",
                    format!("task {} does not take a fragment plan", self.task),
                ))
            }
            _ => {}
        }
        if self.task == Task::Mbe {
            if self.fcidump.is_some() {
                return Err(Error::config(
                    "fcidump",
                    "mbe fragments atoms and needs a geometry",
                ));
            }
            if self.mbe.order == 0 {
                return Err(Error::config("mbe.order", "order must be at least 1"));
            }
        }
        if self.task == Task::Adapt && !matches!(self.solver, SolverConfig::Adapt { .. }) {
            return Err(Error::config(
                "solver.kind",
                "task adapt needs kind = \"adapt\"",
            ));
        }
        if self.task == Task::Scan {
            if self.scan.methods.is_empty() && !self.oracle {
                return Err(Error::config("scan.methods", "nothing to compute"));
            }
            if self.scan.fragment_size == 0
                || !self
                    .scan
                    .generator
                    .atoms()
                    .is_multiple_of(self.scan.fragment_size)
            {
                return Err(Error::config(
                    "scan.fragment_size",
                    format!(
                        "{} atoms do not split into fragments of {}",
                        self.scan.generator.atoms(),
                        self.scan.fragment_size
                    ),
                ));
            }
            self.scan.grid()?;
        }
        let d = &self.dmet;
        if !(d.electron_tol > 0.0 && d.mu_bracket > 0.0 && d.u_tol > 0.0) || d.max_iterations == 0 {
            return Err(Error::config(
                "dmet",
                "tolerances, bracket and budget must be positive",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [
            Method::Mbe(2),
            Method::Mbe(3),
            Method::Dmet,
            Method::Adapt,
            Method::Rhf,
        ] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("mbe0".parse::<Method>().is_err());
        assert!("ccsd".parse::<Method>().is_err());
    }

    #[test]
    fn default_grid_has_eleven_points() {
        let g = ScanSettings::default().grid().unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[10], 3.0);
    }

    #[test]
    fn exactly_one_input() {
        let mut c = RunConfig::new(Task::Fci);
        assert!(c.validate().is_err());
        c.geometry = Some("a.xyz".into());
        c.validate().unwrap();
        c.fcidump = Some("b.fcidump".into());
        assert!(c.validate().is_err());
    }

    #[test]
    fn plan_only_where_used() {
        let mut c = RunConfig::new(Task::Mbe);
        c.geometry = Some("a.xyz".into());
        assert!(matches!(c.validate(), Err(Error::Config { ref field, .. }) if field == "plan"));
        c.plan = Some("p.toml".into());
        c.validate().unwrap();
        c.task = Task::Fci;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
task = "scan"
threads = 2

[scan]
start = 1.0
stop = 2.0
step = 0.5
methods = ["mbe2", "dmet"]

[scan.generator]
kind = "chain"
atoms = 4
"#;
        let c = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(c.scan.grid().unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(c.scan.methods, vec![Method::Mbe(2), Method::Dmet]);
        let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(
            RunConfig::from_toml_str("task = \"fci\"\ngeometry = \"a.xyz\"\nbogus = 1").is_err()
        );
    }
}
