//! Executes a validated plan into an in-memory set of artifacts, then writes
//! them atomically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use rothe_core::heat::{run_exhaustion, run_rothe_with, HeatProblem, StepSettings, TimePartition};
use rothe_core::io;
use rothe_core::spectral::{dirichlet_eigenbasis, ode_oracle_detailed, ExactP1};
use rothe_core::vi::{run_vi_exhaustion, run_vi_with, vi_monotonicity_monitor, ObstacleSettings, VIProblem};
use rothe_core::{compare_with, monitor_estimates, observed_orders, RotheTrajectory, VertexField};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{hex, Job, Plan};
use crate::CliError;

fn solve_err(what: &str) -> impl Fn(rothe_core::Error) -> CliError + '_ {
    move |e| CliError::Solve(format!("{what}: {e}"))
}

/// Files keyed by their path relative to the output directory.
#[derive(Default)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
    pub runs: Vec<Value>,
}

impl Artifacts {
    fn put(&mut self, name: impl Into<String>, text: String) {
        self.files.insert(name.into(), text.into_bytes());
    }
}

pub fn execute(plan: &Plan) -> Result<Artifacts, CliError> {
    match &plan.job {
        Job::Heat {
            p,
            horizon,
            steps,
            initial,
        } => heat(plan, *p, *horizon, steps, initial),
        Job::Vi { problem, steps } => vi(plan, problem, steps),
        Job::Spectral { evolution } => spectral(plan, evolution.as_ref()),
    }
}

fn step_settings(plan: &Plan) -> StepSettings {
    StepSettings {
        tolerance: plan.config.tolerances.step_tolerance,
        max_iterations: plan.config.tolerances.step_max_iterations,
    }
}

fn partition(horizon: f64, n: usize) -> Result<TimePartition, CliError> {
    TimePartition::new(horizon, n).map_err(|e| CliError::Config(e.to_string()))
}

fn heat(plan: &Plan, p: f64, horizon: f64, steps: &[usize], initial: &VertexField) -> Result<Artifacts, CliError> {
    let mut art = Artifacts::default();
    let settings = step_settings(plan);
    if let Some((exh, levels)) = &plan.exhaustion {
        let part = partition(horizon, steps[0])?;
        let res = run_exhaustion(p, initial, exh, &part, levels, settings).map_err(solve_err("exhaustion"))?;
        let mut csv = String::from("m,interior_vertices,delta\n");
        for lv in &res {
            csv.push_str(&format!("{},{},{}\n", lv.m, lv.trajectory.domain().num_interior(), io::fmt_f64(lv.delta)));
            art.runs.push(json!({
                "study": "exhaustion",
                "m": lv.m,
                "interior_vertices": lv.trajectory.domain().num_interior(),
                "delta": lv.delta,
                "max_newton_iterations": lv.trajectory.iterations().iter().max(),
            }));
        }
        art.put("exhaustion.csv", csv);
        return Ok(art);
    }

    let prob = HeatProblem::new(Arc::clone(&plan.domain), p, initial, horizon).map_err(solve_err("heat problem"))?;
    let runs: Vec<(usize, RotheTrajectory)> = steps
        .par_iter()
        .map(|&n| {
            let part = partition(horizon, n)?;
            let traj = run_rothe_with(&prob, &part, settings).map_err(solve_err("heat run"))?;
            Ok((n, traj))
        })
        .collect::<Result<_, CliError>>()?;

    for (n, traj) in &runs {
        let report = monitor_estimates(traj, p).map_err(solve_err("estimates"))?;
        let dir = format!("n{n}");
        art.put(format!("{dir}/trajectory.csv"), io::trajectory_csv(traj));
        art.put(format!("{dir}/estimates.csv"), io::estimates_csv(&report));
        art.put(format!("{dir}/norms.csv"), io::norms_csv(traj, p).map_err(solve_err("norms"))?);
        art.runs.push(json!({
            "study": "heat",
            "n": n,
            "step": traj.partition().step_size(),
            "max_newton_iterations": traj.iterations().iter().max(),
            "max_l2_increase": report.max_l2_increase(),
            "max_energy_residual_ratio": report.max_energy_residual_ratio(),
            "max_energy_defect_ratio": report.max_energy_defect_ratio(),
        }));
    }

    if plan.config.compare_oracle {
        oracle_study(plan, &prob, &runs, &mut art)?;
    }
    Ok(art)
}

fn oracle_study(
    plan: &Plan,
    prob: &HeatProblem,
    runs: &[(usize, RotheTrajectory)],
    art: &mut Artifacts,
) -> Result<(), CliError> {
    // Oracle values at every grid time of every run, keyed by bit pattern.
    let mut times: Vec<f64> = runs.iter().flat_map(|(_, t)| t.partition().grid()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| a.to_bits() == b.to_bits());
    let (values, kind, diag) = if prob.p() == 1.0 {
        let basis = dirichlet_eigenbasis(prob.domain()).map_err(solve_err("eigenbasis"))?;
        let exact = ExactP1::new(basis, prob.initial()).map_err(solve_err("exact solution"))?;
        let v: Vec<VertexField> = times.iter().map(|&t| exact.at(t)).collect();
        (v, "spectral", json!({}))
    } else {
        let sol = ode_oracle_detailed(prob, &times, plan.config.tolerances.oracle_tolerance)
            .map_err(solve_err("ode oracle"))?;
        let diag = json!({"rk4_step": sol.step, "rk4_defect": sol.defect});
        (sol.fields, "rk4", diag)
    };
    let lookup: BTreeMap<u64, &VertexField> = times.iter().map(|t| t.to_bits()).zip(values.iter()).collect();

    let mut errors = Vec::new();
    for (n, traj) in runs {
        let grid = traj.partition().grid();
        let table = compare_with(traj, &grid, |t| Ok(lookup[&t.to_bits()].clone())).map_err(solve_err("compare"))?;
        art.put(format!("n{n}/oracle_errors.csv"), io::error_table_csv(&table));
        errors.push((*n, table.max_l2()));
    }
    errors.sort_by_key(|e| e.0);
    let points = observed_orders(prob.horizon(), &errors);
    art.put("refinement.csv", io::refinement_csv(&points));

    let (finest_n, finest) = runs.iter().max_by_key(|r| r.0).expect("at least one run");
    let levels = finest
        .partition()
        .grid()
        .iter()
        .map(|t| lookup[&t.to_bits()].clone())
        .collect();
    let oracle_traj =
        RotheTrajectory::new(Arc::clone(finest.domain()), *finest.partition(), levels).map_err(solve_err("oracle"))?;
    art.put("oracle_trajectory.csv", io::trajectory_csv(&oracle_traj));
    art.runs.push(json!({
        "study": "oracle",
        "oracle": kind,
        "grid_n": finest_n,
        "diagnostics": diag,
        "refinement": points.iter().map(|p| json!({"n": p.steps, "error": p.error, "order": p.order})).collect::<Vec<_>>(),
    }));
    Ok(())
}

fn vi(plan: &Plan, problem: &VIProblem, steps: &[usize]) -> Result<Artifacts, CliError> {
    let mut art = Artifacts::default();
    let tol = &plan.config.tolerances;
    let settings = ObstacleSettings {
        relaxation: 1.0,
        tolerance: tol.obstacle_tolerance,
        max_sweeps: tol.obstacle_max_sweeps,
    };
    if let Some((exh, levels)) = &plan.exhaustion {
        let part = partition(problem.horizon(), steps[0])?;
        let res = run_vi_exhaustion(problem, exh, &part, levels).map_err(solve_err("exhaustion"))?;
        let mut csv = String::from("m,interior_vertices,delta\n");
        for lv in &res {
            let dom = lv.run.trajectory.domain();
            csv.push_str(&format!("{},{},{}\n", lv.m, dom.num_interior(), io::fmt_f64(lv.delta)));
            art.runs.push(json!({"study": "exhaustion", "m": lv.m, "delta": lv.delta}));
        }
        art.put("exhaustion.csv", csv);
        return Ok(art);
    }
    let runs = steps
        .par_iter()
        .map(|&n| {
            let part = partition(problem.horizon(), n)?;
            let run = run_vi_with(problem, &part, settings).map_err(solve_err("vi run"))?;
            Ok((n, run))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    for (n, run) in &runs {
        let mono = vi_monotonicity_monitor(run, problem.lipschitz_bound()).map_err(solve_err("monitor"))?;
        let dir = format!("n{n}");
        art.put(format!("{dir}/vi.csv"), io::vi_csv(run));
        let mut q = String::from("j,quotient_l2,recurrence_rhs\n");
        for c in &mono.checks {
            q.push_str(&format!("{},{},{}\n", c.j, io::fmt_f64(c.lhs), io::fmt_f64(c.rhs)));
        }
        art.put(format!("{dir}/quotients.csv"), q);
        let kkt_max = |f: fn(&rothe_core::vi::KktResiduals) -> f64| {
            run.reports.iter().filter_map(|r| r.kkt.as_ref().map(f)).fold(None, |m: Option<f64>, x| {
                Some(m.map_or(x, |m| m.max(x)))
            })
        };
        art.runs.push(json!({
            "study": "vi",
            "n": n,
            "lipschitz_estimate": run.lipschitz.estimate,
            "lipschitz_declared": run.lipschitz.declared,
            "lipschitz_violated": run.lipschitz.violated,
            "recurrence_max_violation": mono.max_violation,
            "quotient_bound": mono.quotient_bound,
            "quotient_bound_holds": mono.bound_holds,
            "max_variational_residual": run.reports.iter().map(|r| r.variational_residual).fold(0.0, f64::max),
            "kkt_primal": kkt_max(|k| k.primal),
            "kkt_dual": kkt_max(|k| k.dual),
            "kkt_complementarity": kkt_max(|k| k.complementarity),
        }));
    }
    Ok(art)
}

fn spectral(plan: &Plan, evolution: Option<&(VertexField, f64, usize)>) -> Result<Artifacts, CliError> {
    let mut art = Artifacts::default();
    let basis = dirichlet_eigenbasis(&plan.domain).map_err(solve_err("eigenbasis"))?;
    art.put("basis.csv", io::basis_csv(&basis));
    art.put("residuals.csv", io::basis_residuals_csv(&basis).map_err(solve_err("residuals"))?);
    let width = basis.len().to_string().len();
    for (j, phi) in basis.eigenfields().iter().enumerate() {
        art.put(format!("eigenfields/phi_{:0width$}.txt", j + 1), io::write_field(phi, &plan.graph));
    }
    let residual = basis.residuals().map_err(solve_err("residuals"))?.into_iter().fold(0.0, f64::max);
    art.runs.push(json!({
        "study": "spectral",
        "modes": basis.len(),
        "max_residual": residual,
        "orthonormality_defect": basis.orthonormality_defect(),
    }));
    if let Some((h, horizon, n)) = evolution {
        let exact = ExactP1::new(basis, h).map_err(solve_err("exact solution"))?;
        let part = partition(*horizon, *n)?;
        let levels = part.grid().iter().map(|&t| exact.at(t)).collect();
        let traj = RotheTrajectory::new(Arc::clone(&plan.domain), part, levels).map_err(solve_err("exact"))?;
        art.put("exact_trajectory.csv", io::trajectory_csv(&traj));
    }
    Ok(art)
}

pub fn manifest(plan: &Plan, art: &Artifacts) -> Value {
    let outputs: BTreeMap<&String, String> = art
        .files
        .iter()
        .map(|(k, v)| (k, hex(&Sha256::digest(v))))
        .collect();
    json!({
        "config_hash": plan.config.hash(),
        "kind": plan.config.problem.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "tolerances": plan.config.tolerances,
        "graph": {
            "vertices": plan.graph.num_vertices(),
            "edges": plan.graph.num_edges(),
            "domain_vertices": plan.domain.omega().len(),
            "interior_vertices": plan.domain.num_interior(),
        },
        "inputs": plan.inputs,
        "outputs": outputs,
        "runs": art.runs,
    })
}

/// Write into a sibling temporary directory and rename it into place. An
/// existing target is replaced only if it holds a previous run's manifest.
pub fn write_atomically(out: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<(), CliError> {
    let ioe = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    if out.exists() {
        let is_previous = out.join("manifest.json").is_file();
        let is_empty = out.read_dir().map(|mut d| d.next().is_none()).unwrap_or(false);
        if !is_previous && !is_empty {
            return Err(CliError::Io(format!(
                "{} exists and is not a previous output directory",
                out.display()
            )));
        }
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(|e| ioe(&parent, e))?;
    let name = out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(|e| ioe(&tmp, e))?;
        }
        for (rel, bytes) in files {
            let path = tmp.join(rel);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| ioe(dir, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| ioe(&path, e))?;
        }
        if out.exists() {
            std::fs::remove_dir_all(out).map_err(|e| ioe(out, e))?;
        }
        std::fs::rename(&tmp, out).map_err(|e| ioe(out, e))
    })();
    if result.is_err() && tmp.exists() {
        let _ = std::fs::remove_dir_all(&tmp);
    }
    result
}
