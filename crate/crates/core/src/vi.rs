//! Rothe stepping for the parabolic variational inequality
//!
//! ```text
//! ∫_{Ω°} ∂ₜu·(v − u) dμ ≥ ∫_{Ω°} (Δu + f)·(v − u) dμ   for all admissible v
//! ```
//!
//! Each step solves the elliptic inequality a(u, v − u) ≥ ⟨F, v − u⟩ with
//! a(u, v) = (1/ℓ)∫uv + ∫Γ(u, v) and F = f(·, t_i) + u_{i−1}/ℓ. Over the
//! Dirichlet subspace this is the SPD system (M/ℓ + K)u = M(f_i + u_{i−1}/ℓ).
//! Lower obstacles u ≥ ψ are an extension handled by projected Gauss–Seidel.

use std::sync::Arc;

use crate::calculus::{self, check_admissible, VertexField};
use crate::error::{Error, Result};
use crate::graph::{Domain, ExhaustionSequence};
use crate::heat::{RotheTrajectory, TimePartition};
use crate::linalg::{dirichlet_stiffness, interior_mass, CsrMatrix, SpdSolver};

/// Time-dependent forcing f(·, t). Only values on Ω° are ever read.
pub trait Forcing: Send + Sync {
    fn sample(&self, t: f64) -> VertexField;
}

impl<F> Forcing for F
where
    F: Fn(f64) -> VertexField + Send + Sync,
{
    fn sample(&self, t: f64) -> VertexField {
        self(t)
    }
}

/// f(x, t) = f(x).
#[derive(Clone, Debug)]
pub struct ConstantForcing(pub VertexField);

impl Forcing for ConstantForcing {
    fn sample(&self, _t: f64) -> VertexField {
        self.0.clone()
    }
}

/// f(x, t) = χ(x)·τ(t).
pub struct SeparableForcing {
    pub field: VertexField,
    pub time: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Forcing for SeparableForcing {
    fn sample(&self, t: f64) -> VertexField {
        self.field.scale((self.time)(t))
    }
}

/// Tabulated fields, linearly interpolated between table times and held
/// constant outside the table.
#[derive(Clone, Debug)]
pub struct TableForcing {
    times: Vec<f64>,
    fields: Vec<VertexField>,
}

impl TableForcing {
    pub fn new(mut rows: Vec<(f64, VertexField)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("forcing table is empty".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter("forcing table has repeated times".into()));
        }
        let (times, fields) = rows.into_iter().unzip();
        Ok(TableForcing { times, fields })
    }
}

impl Forcing for TableForcing {
    fn sample(&self, t: f64) -> VertexField {
        let k = self.times.partition_point(|&s| s < t);
        if k < self.times.len() && self.times[k] == t {
            return self.fields[k].clone();
        }
        if k == 0 {
            return self.fields[0].clone();
        }
        if k == self.times.len() {
            return self.fields[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.fields[k - 1].scale(1.0 - w).add_scaled(w, &self.fields[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    /// Values free on Ω°, zero outside.
    Subspace,
    /// Additionally u ≥ ψ on Ω° (extension).
    Obstacle(VertexField),
}

#[derive(Clone)]
pub struct VIProblem {
    domain: Arc<Domain>,
    forcing: Arc<dyn Forcing>,
    initial: VertexField,
    data: VertexField,
    horizon: f64,
    lipschitz_bound: Option<f64>,
    constraint: Constraint,
}

impl VIProblem {
    /// The initial field is restricted to Ω°.
    pub fn new(
        domain: Arc<Domain>,
        forcing: Arc<dyn Forcing>,
        initial: &VertexField,
        horizon: f64,
        constraint: Constraint,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        domain.require_interior()?;
        let n = domain.graph().num_vertices();
        if initial.len() != n {
            return Err(Error::DomainMismatch("initial field has the wrong length".into()));
        }
        if let Constraint::Obstacle(psi) = &constraint {
            if psi.len() != n {
                return Err(Error::DomainMismatch("obstacle has the wrong length".into()));
            }
        }
        let data = VertexField::from_values(initial.values().to_vec())?;
        let initial = data.restricted_to_interior(&domain);
        Ok(VIProblem {
            domain,
            forcing,
            initial,
            data,
            horizon,
            lipschitz_bound: None,
            constraint,
        })
    }

    /// Declare the constant c with ‖f(·,t) − f(·,s)‖_{L²(Ω°)} ≤ c|t − s|.
    pub fn with_lipschitz_bound(mut self, c: f64) -> Self {
        self.lipschitz_bound = Some(c);
        self
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn forcing(&self) -> &Arc<dyn Forcing> {
        &self.forcing
    }

    pub fn initial(&self) -> &VertexField {
        &self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    /// Same data on another (exhaustion) domain of the same graph.
    pub fn on_domain(&self, domain: Arc<Domain>) -> Result<Self> {
        let mut p = VIProblem::new(
            domain,
            Arc::clone(&self.forcing),
            &self.data,
            self.horizon,
            self.constraint.clone(),
        )?;
        p.lipschitz_bound = self.lipschitz_bound;
        Ok(p)
    }
}

fn l2_interior(dom: &Domain, v: &VertexField) -> f64 {
    let g = dom.graph();
    calculus::integrate_with(g, dom.interior(), |x| v[x] * v[x])
        .expect("interior vertices are valid")
        .sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzEstimate {
    /// max over sampled pairs of ‖f(·,t) − f(·,s)‖_{L²(Ω°)}/|t − s|
    pub estimate: f64,
    pub worst_pair: (f64, f64),
    pub declared: Option<f64>,
    /// Declared bound exceeded by more than 1 %.
    pub violated: bool,
}

pub fn lipschitz_validate(
    dom: &Domain,
    f: &dyn Forcing,
    time_samples: &[f64],
    declared: Option<f64>,
) -> Result<LipschitzEstimate> {
    let mut times: Vec<f64> = time_samples.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() < 2 {
        return Err(Error::InsufficientSamples);
    }
    let samples: Vec<VertexField> = times.iter().map(|&t| f.sample(t)).collect();
    let mut estimate = 0.0;
    let mut worst_pair = (times[0], times[1]);
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            let q = l2_interior(dom, &samples[j].sub(&samples[i])) / (times[j] - times[i]);
            if q > estimate {
                estimate = q;
                worst_pair = (times[i], times[j]);
            }
        }
    }
    let violated = declared.is_some_and(|c| estimate > 1.01 * c);
    Ok(LipschitzEstimate {
        estimate,
        worst_pair,
        declared,
        violated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResiduals {
    /// max(ψ − u, 0)
    pub primal: f64,
    /// max(−r, 0) with r = (M/ℓ + K)u − M(f + u_prev/ℓ)
    pub dual: f64,
    /// max |r·(u − ψ)|
    pub complementarity: f64,
}

#[derive(Clone, Debug)]
pub struct VIStepReport {
    pub step: usize,
    pub solution: VertexField,
    pub quotient: VertexField,
    /// Subspace case: ‖(M/ℓ + K)u − b‖_∞. Obstacle case: the same quantity
    /// restricted to the inactive set.
    pub variational_residual: f64,
    /// 1 + ‖b‖_∞, the size against which residuals are judged.
    pub scale: f64,
    pub kkt: Option<KktResiduals>,
    /// β = min{1/ℓ, 1} with a(v, v) ≥ β‖v‖²_{W^{1,2}}.
    pub coercivity: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstacleSettings {
    pub relaxation: f64,
    /// Stop when every KKT residual is below `tolerance · (1 + ‖b‖_∞)`.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for ObstacleSettings {
    fn default() -> Self {
        ObstacleSettings {
            relaxation: 1.0,
            tolerance: 1e-13,
            max_sweeps: 200_000,
        }
    }
}

/// Step solver with the bilinear form assembled (and, for the subspace case,
/// factorized) once for a fixed step size.
pub struct VIStepper {
    domain: Arc<Domain>,
    step: f64,
    matrix: CsrMatrix,
    mass: Vec<f64>,
    solver: SpdSolver,
    settings: ObstacleSettings,
}

impl VIStepper {
    pub fn new(domain: Arc<Domain>, step: f64) -> Result<Self> {
        Self::with_settings(domain, step, ObstacleSettings::default())
    }

    pub fn with_settings(domain: Arc<Domain>, step: f64, settings: ObstacleSettings) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {step}")));
        }
        if !(settings.relaxation > 0.0 && settings.relaxation < 2.0) {
            return Err(Error::InvalidParameter("relaxation must lie in (0, 2)".into()));
        }
        domain.require_interior()?;
        let mass = interior_mass(&domain);
        let diag: Vec<f64> = mass.iter().map(|m| m / step).collect();
        let matrix = dirichlet_stiffness(&domain).with_added_diagonal(&diag);
        let solver = SpdSolver::new(&matrix)?;
        Ok(VIStepper {
            domain,
            step,
            matrix,
            mass,
            solver,
            settings,
        })
    }

    /// The assembled step matrix M/ℓ + K on interior unknowns.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn coercivity(&self) -> f64 {
        (1.0 / self.step).min(1.0)
    }

    /// a(v, v) = (1/ℓ)∫|v|² + ∫|∇v|² for an admissible field.
    pub fn bilinear_form(&self, v: &VertexField) -> f64 {
        self.matrix.quadratic_form(&v.interior_values(&self.domain))
    }

    fn rhs(&self, u_prev: &[f64], f: &[f64]) -> Vec<f64> {
        (0..u_prev.len())
            .map(|k| self.mass[k] * (f[k] + u_prev[k] / self.step))
            .collect()
    }

    pub fn step(&self, index: usize, u_prev: &VertexField, f_i: &VertexField, constraint: &Constraint) -> Result<VIStepReport> {
        let dom = &self.domain;
        check_admissible(dom, u_prev)?;
        if f_i.len() != u_prev.len() {
            return Err(Error::DomainMismatch("forcing field has the wrong length".into()));
        }
        let prev = u_prev.interior_values(dom);
        let b = self.rhs(&prev, &f_i.interior_values(dom));
        let scale = 1.0 + b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let (u, kkt, variational_residual, iterations) = match constraint {
            Constraint::Subspace => {
                let u = self.solver.solve(&b)?;
                let r = self.residual(&u, &b);
                let res = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                (u, None, res, 1)
            }
            Constraint::Obstacle(psi) => {
                let psi = psi.interior_values(dom);
                let (u, sweeps) = self.projected_gauss_seidel(&b, &psi, &prev, scale)?;
                let r = self.residual(&u, &b);
                let kkt = kkt_residuals(&u, &psi, &r);
                let inactive = r
                    .iter()
                    .zip(u.iter().zip(&psi))
                    .filter(|(_, (x, p))| x > p)
                    .fold(0.0_f64, |m, (ri, _)| m.max(ri.abs()));
                (u, Some(kkt), inactive, sweeps)
            }
        };
        let solution = VertexField::from_interior(dom, &u);
        let quotient = solution.sub(u_prev).scale(1.0 / self.step);
        Ok(VIStepReport {
            step: index,
            solution,
            quotient,
            variational_residual,
            scale,
            kkt,
            coercivity: self.coercivity(),
            iterations,
        })
    }

    fn residual(&self, u: &[f64], b: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(u).iter().zip(b).map(|(a, c)| a - c).collect()
    }

    fn projected_gauss_seidel(
        &self,
        b: &[f64],
        psi: &[f64],
        start: &[f64],
        scale: f64,
    ) -> Result<(Vec<f64>, usize)> {
        let a = &self.matrix;
        let diag = a.diagonal();
        let omega = self.settings.relaxation;
        let tol = self.settings.tolerance * scale;
        let mut u: Vec<f64> = start.iter().zip(psi).map(|(x, p)| x.max(*p)).collect();
        for sweep in 1..=self.settings.max_sweeps {
            for k in 0..u.len() {
                let ak: f64 = a.row(k).map(|(j, v)| v * u[j]).sum();
                let trial = u[k] + omega * (b[k] - ak) / diag[k];
                u[k] = trial.max(psi[k]);
            }
            if sweep % 4 == 0 || u.len() <= 64 {
                let r = self.residual(&u, b);
                let natural = r
                    .iter()
                    .zip(u.iter().zip(psi))
                    .fold(0.0_f64, |m, (ri, (x, p))| m.max(ri.min(x - p).abs()));
                if natural <= tol {
                    return Ok((u, sweep));
                }
            }
        }
        let r = self.residual(&u, b);
        let natural = r
            .iter()
            .zip(u.iter().zip(psi))
            .fold(0.0_f64, |m, (ri, (x, p))| m.max(ri.min(x - p).abs()));
        Err(Error::NonConvergence {
            iterations: self.settings.max_sweeps,
            residual: natural,
        })
    }
}

fn kkt_residuals(u: &[f64], psi: &[f64], r: &[f64]) -> KktResiduals {
    let mut k = KktResiduals {
        primal: 0.0,
        dual: 0.0,
        complementarity: 0.0,
    };
    for ((x, p), ri) in u.iter().zip(psi).zip(r) {
        k.primal = k.primal.max(p - x);
        k.dual = k.dual.max(-ri);
        k.complementarity = k.complementarity.max((ri * (x - p)).abs());
    }
    k
}

/// One step of the inequality from `u_prev` with forcing sample `f_i`.
pub fn vi_step(
    dom: &Arc<Domain>,
    u_prev: &VertexField,
    f_i: &VertexField,
    step: f64,
    constraint: &Constraint,
) -> Result<VIStepReport> {
    VIStepper::new(Arc::clone(dom), step)?.step(1, u_prev, f_i, constraint)
}

#[derive(Clone, Debug)]
pub struct VIRun {
    pub trajectory: RotheTrajectory,
    pub reports: Vec<VIStepReport>,
    /// f_{n,i} = f(·, t_i) for i = 0..=n.
    pub forcing: Vec<VertexField>,
    /// Lipschitz quotient over consecutive grid samples.
    pub lipschitz: LipschitzEstimate,
}

impl VIRun {
    /// Step function f̄^{(n)}(t) = f_{n,i} for t ∈ (t_{i−1}, t_i].
    pub fn forcing_step(&self, t: f64) -> Result<VertexField> {
        let part = self.trajectory.partition();
        if !(t >= -part.step_size() && t <= part.horizon()) {
            return Err(Error::TimeOutOfRange {
                t,
                lo: -part.step_size(),
                hi: part.horizon(),
            });
        }
        if t <= 0.0 {
            return Ok(self.forcing[0].clone());
        }
        let i = (1..=part.steps())
            .find(|&i| t <= part.time(i))
            .unwrap_or(part.steps());
        Ok(self.forcing[i].clone())
    }
}

pub fn run_vi(prob: &VIProblem, part: &TimePartition) -> Result<VIRun> {
    run_vi_with(prob, part, ObstacleSettings::default())
}

pub fn run_vi_with(prob: &VIProblem, part: &TimePartition, settings: ObstacleSettings) -> Result<VIRun> {
    let dom = prob.domain();
    let stepper = VIStepper::with_settings(Arc::clone(dom), part.step_size(), settings)?;
    let forcing: Vec<VertexField> = part.grid().iter().map(|&t| prob.forcing.sample(t)).collect();
    let grid = part.grid();
    let lipschitz = grid_lipschitz(dom, &forcing, &grid, prob.lipschitz_bound);
    if prob.lipschitz_bound.is_none() {
        log::warn!(
            "no Lipschitz bound declared for the forcing; grid estimate is {:e}",
            lipschitz.estimate
        );
    } else if lipschitz.violated {
        log::warn!(
            "forcing violates the declared Lipschitz bound: estimate {:e} > {:e}",
            lipschitz.estimate,
            prob.lipschitz_bound.unwrap_or(0.0)
        );
    }
    let mut levels = Vec::with_capacity(part.steps() + 1);
    let mut reports = Vec::with_capacity(part.steps());
    levels.push(prob.initial.clone());
    for i in 1..=part.steps() {
        let rep = stepper.step(i, &levels[i - 1], &forcing[i], &prob.constraint)?;
        levels.push(rep.solution.clone());
        reports.push(rep);
    }
    Ok(VIRun {
        trajectory: RotheTrajectory::new(Arc::clone(dom), *part, levels)?,
        reports,
        forcing,
        lipschitz,
    })
}

fn grid_lipschitz(dom: &Domain, samples: &[VertexField], times: &[f64], declared: Option<f64>) -> LipschitzEstimate {
    let mut estimate = 0.0;
    let mut worst_pair = (times[0], times[times.len().min(2) - 1]);
    for k in 1..samples.len() {
        let q = l2_interior(dom, &samples[k].sub(&samples[k - 1])) / (times[k] - times[k - 1]);
        if q > estimate {
            estimate = q;
            worst_pair = (times[k - 1], times[k]);
        }
    }
    LipschitzEstimate {
        estimate,
        worst_pair,
        declared,
        violated: declared.is_some_and(|c| estimate > 1.01 * c),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientCheck {
    pub j: usize,
    /// ‖δu_j‖_{L²(Ω°)}
    pub lhs: f64,
    /// ‖δu_{j−1}‖ + ‖f_j − f_{j−1}‖
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityDiagnostics {
    pub quotient_norms: Vec<f64>,
    pub checks: Vec<QuotientCheck>,
    /// max_j (lhs − rhs)/(1 + rhs); ≤ 0 when every recurrence holds.
    pub max_violation: f64,
    /// ‖Δg‖_{L²(Ω°)} + ‖f(·,0)‖_{L²(Ω°)} + c·T with c the grid Lipschitz
    /// estimate (or the declared bound when larger).
    pub quotient_bound: f64,
    pub bound_holds: bool,
}

impl MonotonicityDiagnostics {
    pub fn recurrence_holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

pub fn vi_monotonicity_monitor(run: &VIRun, declared: Option<f64>) -> Result<MonotonicityDiagnostics> {
    let traj = &run.trajectory;
    let dom = traj.domain();
    let g = dom.graph();
    let quotient_norms: Vec<f64> = run.reports.iter().map(|r| l2_interior(dom, &r.quotient)).collect();
    let mut checks = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for j in 2..=quotient_norms.len() {
        let lhs = quotient_norms[j - 1];
        let df = l2_interior(dom, &run.forcing[j].sub(&run.forcing[j - 1]));
        let rhs = quotient_norms[j - 2] + df;
        max_violation = max_violation.max((lhs - rhs) / (1.0 + rhs));
        checks.push(QuotientCheck { j, lhs, rhs });
    }
    if checks.is_empty() {
        max_violation = 0.0;
    }
    let initial = traj.level(0);
    let mut lap_sq = 0.0;
    for &x in dom.interior() {
        let l = calculus::laplacian(g, initial, x)?;
        lap_sq += g.measure(x) * l * l;
    }
    let c = declared.map_or(run.lipschitz.estimate, |d| d.max(run.lipschitz.estimate));
    let quotient_bound = lap_sq.sqrt() + l2_interior(dom, &run.forcing[0]) + c * traj.partition().horizon();
    let bound_holds = quotient_norms
        .iter()
        .all(|&q| q <= quotient_bound * (1.0 + 1e-10) + 1e-12);
    Ok(MonotonicityDiagnostics {
        quotient_norms,
        checks,
        max_violation,
        quotient_bound,
        bound_holds,
    })
}

#[derive(Clone, Debug)]
pub struct VIExhaustionLevel {
    pub m: usize,
    pub run: VIRun,
    /// ‖u_{m+1}(·,T) − u_m(·,T)‖_{L²(Ω_m)}
    pub delta: f64,
}

/// Solve the inequality on exhaustion levels `levels` (and successors) with
/// g_m = g|_{Ω_m°} and f_m = f|_{Ω_m°}.
pub fn run_vi_exhaustion(
    prob: &VIProblem,
    exh: &ExhaustionSequence,
    part: &TimePartition,
    levels: &[usize],
) -> Result<Vec<VIExhaustionLevel>> {
    let mut cache: std::collections::BTreeMap<usize, VIRun> = Default::default();
    let ensure = |m: usize, cache: &mut std::collections::BTreeMap<usize, VIRun>| -> Result<()> {
        if m == 0 || m > exh.max_level() {
            return Err(Error::InvalidParameter(format!(
                "exhaustion level {m} outside 1..={}",
                exh.max_level()
            )));
        }
        if !cache.contains_key(&m) {
            let level = prob.on_domain(Arc::new(exh.level(m).clone()))?;
            cache.insert(m, run_vi(&level, part)?);
        }
        Ok(())
    };
    let mut out = Vec::with_capacity(levels.len());
    for &m in levels {
        ensure(m, &mut cache)?;
        ensure(m + 1, &mut cache)?;
        let small = &cache[&m];
        let big = &cache[&(m + 1)];
        let dom = small.trajectory.domain();
        let (a, b) = (small.trajectory.final_state(), big.trajectory.final_state());
        let delta = calculus::integrate_with(dom.graph(), dom.omega(), |x| (b[x] - a[x]).powi(2))?.sqrt();
        out.push(VIExhaustionLevel {
            m,
            run: small.clone(),
            delta,
        });
    }
    Ok(out)
}
