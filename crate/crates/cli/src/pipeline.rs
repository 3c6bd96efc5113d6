//! Task execution: load inputs, run methods, collect records.

use std::path::PathBuf;
use std::time::Instant;

use dcvqe_core::dmet::{dmet_scf, DmetOptions, DmetSystem};
use dcvqe_core::integrals::{
    molecular_integrals, read_fcidump, ActiveSpace, Geometry, MOIntegrals,
};
use dcvqe_core::mbe::{run_mbe, FragmentationPlan, MbeOptions};
use dcvqe_core::simulator::fci_ground_state;
use dcvqe_core::solver::{mean_field, solve, SolverConfig};
use dcvqe_core::{Error, Result};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{Method, RunConfig, Task};
use crate::report::{emit_report, Format, Record, RunReport};

/// Where the integrals come from.
enum Input {
    Molecule(Geometry),
    Integrals(MOIntegrals),
}

impl Input {
    fn load(config: &RunConfig) -> Result<Input> {
        match (&config.geometry, &config.fcidump) {
            (Some(g), None) => Ok(Input::Molecule(Geometry::read_xyz(g)?)),
            (None, Some(f)) => Ok(Input::Integrals(read_fcidump(f)?)),
            _ => Err(Error::config(
                "geometry",
                "one of geometry or fcidump is required",
            )),
        }
    }

    fn integrals(&self) -> Result<MOIntegrals> {
        match self {
            Input::Molecule(g) => molecular_integrals(g, &ActiveSpace::Full),
            Input::Integrals(mo) => Ok(mo.clone()),
        }
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Exact ground-state energy of the full problem.
fn exact_energy(mo: &MOIntegrals) -> Result<f64> {
    Ok(fci_ground_state(mo)?.energy)
}

fn fci_record(mo: &MOIntegrals, parameter: Option<f64>) -> Record {
    let start = Instant::now();
    match exact_energy(mo) {
        Ok(e) => Record {
            e_total: Some(e),
            n_subproblems: 1,
            max_qubits: mo.n_qubits(),
            wall_ms: elapsed_ms(start),
            ..Record::new("fci", parameter)
        },
        Err(e) => Record::failed("fci", parameter, &e),
    }
}

fn solver_record(
    method: &str,
    mo: &MOIntegrals,
    solver: &SolverConfig,
    parameter: Option<f64>,
) -> Record {
    let start = Instant::now();
    match solve(mo, solver, false) {
        Ok(sol) => Record {
            e_total: Some(sol.energy),
            n_subproblems: 1,
            max_qubits: sol.n_qubits,
            wall_ms: elapsed_ms(start),
            ..Record::new(method, parameter)
        },
        Err(e) => Record::failed(method, parameter, &e),
    }
}

fn rhf_record(mo: &MOIntegrals, parameter: Option<f64>) -> Record {
    let start = Instant::now();
    match mean_field(mo) {
        Ok(mf) => Record {
            e_total: Some(mf.e_hf),
            n_subproblems: 1,
            max_qubits: 0,
            wall_ms: elapsed_ms(start),
            ..Record::new("rhf", parameter)
        },
        Err(e) => Record::failed("rhf", parameter, &e),
    }
}

fn mbe_method_name(config: &RunConfig, order: usize) -> String {
    if config.mbe.rhf_correction {
        format!("mbe{order}-corr")
    } else {
        format!("mbe{order}")
    }
}

fn mbe_record(
    geometry: &Geometry,
    plan: &FragmentationPlan,
    order: usize,
    config: &RunConfig,
    parameter: Option<f64>,
) -> Record {
    let method = mbe_method_name(config, order);
    let opts = MbeOptions {
        order,
        solver: config.solver.clone(),
        active: config.mbe.active.clone(),
        rhf_correction: config.mbe.rhf_correction,
        cache_dir: config.mbe.cache.then(|| config.output_dir.join("cache")),
        threads: 0,
    };
    let start = Instant::now();
    let res = match run_mbe(geometry, plan, &opts) {
        Ok(r) => r,
        Err(e) => return Record::failed(method, parameter, &e),
    };
    let error = res.is_partial().then(|| {
        let sets: Vec<String> = res
            .failures
            .iter()
            .map(|f| format!("{:?}: {}", f.fragments, f.message))
            .collect();
        format!(
            "{} subproblem(s) failed: {}",
            res.failures.len(),
            sets.join("; ")
        )
    });
    Record {
        e_total: res.e_total.is_finite().then_some(res.e_total),
        n_subproblems: res.subproblems.len() + res.failures.len(),
        max_qubits: res.max_qubits,
        wall_ms: elapsed_ms(start),
        error,
        ..Record::new(method, parameter)
    }
}

fn dmet_record(
    system: Result<DmetSystem>,
    mut opts: DmetOptions,
    trace: Option<PathBuf>,
    parameter: Option<f64>,
) -> Record {
    let start = Instant::now();
    opts.trace_path = trace;
    let state = match system.and_then(|s| dmet_scf(&s, &opts)) {
        Ok(s) => s,
        Err(e) => return Record::failed("dmet", parameter, &e),
    };
    let error = (!state.converged).then(|| {
        Error::DmetNotConverged {
            iterations: state.iteration,
            cost: state.cost,
        }
        .to_string()
    });
    Record {
        e_total: Some(state.e_total),
        n_subproblems: state.fragments.len(),
        max_qubits: state.max_qubits(),
        wall_ms: elapsed_ms(start),
        error,
        ..Record::new("dmet", parameter)
    }
}

fn read_plan(config: &RunConfig) -> Result<FragmentationPlan> {
    let path = config
        .plan
        .as_deref()
        .ok_or_else(|| Error::config("plan", "missing"))?;
    FragmentationPlan::read(path)
}

fn dmet_trace_path(config: &RunConfig, parameter: Option<f64>) -> Option<PathBuf> {
    config.dmet.trace.then(|| match parameter {
        Some(p) => config.output_dir.join(format!("dmet_trace_{p}.tsv")),
        None => config.output_dir.join("dmet_trace.tsv"),
    })
}

/// Attach the oracle energy, or log why it is missing.
fn with_reference(mut record: Record, reference: &Option<Result<f64>>) -> Record {
    match reference {
        Some(Ok(e)) => record.set_reference(Some(*e)),
        Some(Err(e)) => warn!("no reference for {}: {e}", record.method),
        None => {}
    }
    record
}

fn single_geometry(config: &RunConfig) -> Result<Vec<Record>> {
    let input = Input::load(config)?;
    // Plans are checked against the input before any computation starts.
    let plan = match config.task {
        Task::Mbe | Task::Dmet => Some(read_plan(config)?),
        _ => None,
    };
    if let (Some(plan), Input::Molecule(g)) = (&plan, &input) {
        plan.validate(g.len())?;
    }
    let mo = || input.integrals();
    let record = match (config.task, &input) {
        (Task::Fci, _) => match mo() {
            Ok(m) => fci_record(&m, None),
            Err(e) => Record::failed("fci", None, &e),
        },
        (Task::Adapt, _) => match mo() {
            Ok(m) => solver_record("adapt", &m, &config.solver, None),
            Err(e) => Record::failed("adapt", None, &e),
        },
        (Task::Mbe, Input::Molecule(g)) => mbe_record(
            g,
            plan.as_ref().expect("plan loaded"),
            config.mbe.order,
            config,
            None,
        ),
        (Task::Mbe, Input::Integrals(_)) => {
            return Err(Error::config(
                "fcidump",
                "mbe fragments atoms and needs a geometry",
            ))
        }
        (Task::Dmet, _) => {
            let plan = plan.expect("plan loaded");
            let system = match &input {
                Input::Molecule(g) => DmetSystem::from_geometry(g, &plan),
                Input::Integrals(m) => {
                    DmetSystem::from_integrals(m.clone(), plan.fragments.clone())
                }
            };
            let system = match system {
                Err(e @ Error::Config { .. }) => return Err(e),
                s => s,
            };
            dmet_record(
                system,
                config.dmet.options(&config.solver),
                dmet_trace_path(config, None),
                None,
            )
        }
        (Task::Scan, _) => unreachable!("scan handled separately"),
    };
    let reference = (config.oracle && record.e_total.is_some()).then(|| {
        if config.task == Task::Fci {
            Ok(record.e_total.expect("checked"))
        } else {
            mo().and_then(|m| exact_energy(&m))
        }
    });
    Ok(vec![with_reference(record, &reference)])
}

/// Every requested method, plus the oracle, at one grid point.
fn scan_point(config: &RunConfig, parameter: f64) -> Vec<Record> {
    let scan = &config.scan;
    let p = Some(parameter);
    let method_names: Vec<String> = scan
        .methods
        .iter()
        .map(|m| match m {
            Method::Mbe(k) => mbe_method_name(config, *k),
            other => other.to_string(),
        })
        .collect();
    let setup = scan.generator.geometry(parameter).and_then(|g| {
        let plan = FragmentationPlan::blocks(g.len(), scan.fragment_size)?;
        Ok((g, plan))
    });
    let (geometry, plan) = match setup {
        Ok(s) => s,
        Err(e) => {
            let mut names = method_names;
            if config.oracle {
                names.push("fci".into());
            }
            return names
                .into_iter()
                .map(|m| Record::failed(m, p, &e))
                .collect();
        }
    };
    let mo = molecular_integrals(&geometry, &ActiveSpace::Full);
    let mut records = Vec::new();
    let mut reference = None;
    if config.oracle {
        let r = match &mo {
            Ok(m) => fci_record(m, p),
            Err(e) => Record::failed("fci", p, e),
        };
        reference = Some(
            r.e_total
                .ok_or_else(|| Error::Numerical(r.error.clone().unwrap_or_default())),
        );
        records.push(r);
    }
    for method in &scan.methods {
        let record = match (method, &mo) {
            (Method::Mbe(k), _) => mbe_record(&geometry, &plan, *k, config, p),
            (Method::Dmet, _) => dmet_record(
                DmetSystem::from_geometry(&geometry, &plan),
                config.dmet.options(&config.solver),
                dmet_trace_path(config, p),
                p,
            ),
            (Method::Adapt, Ok(m)) => solver_record("adapt", m, &config.solver, p),
            (Method::Rhf, Ok(m)) => rhf_record(m, p),
            (m, Err(e)) => Record::failed(m.to_string(), p, e),
        };
        records.push(with_reference(record, &reference));
    }
    for r in &mut records {
        if r.method == "fci" && r.e_total.is_some() {
            r.set_reference(r.e_total);
        }
    }
    info!("R = {parameter}: {} method(s) done", records.len());
    records
}

fn scan(config: &RunConfig) -> Result<Vec<Record>> {
    let grid = config.scan.grid()?;
    let per_point: Vec<Vec<Record>> = grid.par_iter().map(|&r| scan_point(config, r)).collect();
    Ok(per_point.into_iter().flatten().collect())
}

/// Execute the configured task. Method failures become records carrying an
/// error; configuration and input errors abort before any computation.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let job = || match config.task {
        Task::Scan => scan(config),
        _ => single_geometry(config),
    };
    let records = if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(job)?
    } else {
        job()?
    };
    Ok(RunReport::new(config.task, records))
}

/// Run and write CSV plus structured output into the configured directory.
pub fn execute(config: &RunConfig) -> Result<(RunReport, Vec<PathBuf>)> {
    let report = run(config)?;
    let mut files = emit_report(&report, &config.output_dir, Format::Csv)?;
    files.extend(emit_report(
        &report,
        &config.output_dir,
        Format::Structured,
    )?);
    Ok((report, files))
}

/// Process exit status for a finished run: 0 when every record succeeded, 2 otherwise.
pub fn exit_code(report: &RunReport) -> i32 {
    if report.is_partial() {
        2
    } else {
        0
    }
}

/// Human-readable summary lines.
pub fn summary(report: &RunReport) -> Vec<String> {
    let mut out = Vec::new();
    for (method, rows) in report.by_method() {
        for r in rows {
            let param = r.parameter.map(|p| format!(" R={p}")).unwrap_or_default();
            let energy = r
                .e_total
                .map(|e| format!("{e:.10}"))
                .unwrap_or_else(|| "-".into());
            let dev = r
                .deviation_mhartree()
                .map(|d| format!("  dev {d:+.3} mEh"))
                .unwrap_or_default();
            let err = r
                .error
                .as_deref()
                .map(|e| format!("  [{e}]"))
                .unwrap_or_default();
            out.push(format!(
                "{method}{param}: {energy}{dev}  q={}{err}",
                r.max_qubits
            ));
        }
    }
    out
}
