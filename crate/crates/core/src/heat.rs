//! Rothe's method for the semilinear heat equation ∂ₜu + |u|^{p−1}u = Δu on
//! Ω° with u = 0 on V∖Ω°.
//!
//! Each time level is the minimizer of the strictly convex functional
//!
//! ```text
//! F_i(u) = (1/ℓ)∫|u|² − (2/ℓ)∫u_{i−1}·u + (2/(p+1))∫|u|^{p+1} + ∫|∇u|²
//! ```
//!
//! over Dirichlet-admissible fields, found by a damped Newton iteration on its
//! Euler–Lagrange system (u − u_{i−1})/ℓ + |u|^{p−1}u = Δu on Ω°.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::calculus::{self, check_admissible, VertexField};
use crate::error::{Error, Result};
use crate::graph::{Domain, ExhaustionSequence};
use crate::linalg::{dirichlet_stiffness, interior_mass, CsrMatrix, SpdSolver};

/// Regularization of |s|^{p−1} in the Newton derivative for p < 2.
const DERIVATIVE_FLOOR: f64 = 1e-12;

/// Equidistant partition t_i = iℓ of [0, T].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimePartition {
    horizon: f64,
    steps: usize,
    step: f64,
}

impl TimePartition {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("step count must be at least 1".into()));
        }
        Ok(TimePartition {
            horizon,
            steps,
            step: horizon / steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// ℓ = T/n
    pub fn step_size(&self) -> f64 {
        self.step
    }

    /// t_i, with t_n = T exactly.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.steps {
            self.horizon
        } else {
            i as f64 * self.step
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.time(i)).collect()
    }

    /// Grid index equal to `t`, if `t` is a grid point.
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let k = (t / self.step).round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        (self.time(k) == t).then_some(k)
    }

    /// The index i ∈ 1..=n with t ∈ (t_{i−1}, t_i], for t ∈ (0, T].
    fn cell(&self, t: f64) -> usize {
        let mut i = ((t / self.step).ceil() as usize).clamp(1, self.steps);
        while i > 1 && t <= self.time(i - 1) {
            i -= 1;
        }
        while i < self.steps && t > self.time(i) {
            i += 1;
        }
        i
    }
}

/// Initial–boundary value problem for the semilinear heat equation on a
/// finite domain.
#[derive(Clone, Debug)]
pub struct HeatProblem {
    domain: Arc<Domain>,
    p: f64,
    initial: VertexField,
    horizon: f64,
}

impl HeatProblem {
    /// The initial field is restricted to Ω° (values elsewhere are dropped).
    pub fn new(domain: Arc<Domain>, p: f64, initial: &VertexField, horizon: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponent p must satisfy p >= 1, got {p}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        domain.require_interior()?;
        if initial.len() != domain.graph().num_vertices() {
            return Err(Error::DomainMismatch(format!(
                "initial field has {} values, graph has {} vertices",
                initial.len(),
                domain.graph().num_vertices()
            )));
        }
        let initial = VertexField::from_values(initial.values().to_vec())?.restricted_to_interior(&domain);
        Ok(HeatProblem {
            domain,
            p,
            initial,
            horizon,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn initial(&self) -> &VertexField {
        &self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// ‖h‖_{L²(Ω°)} and ‖h‖_{L^{p+1}(Ω°)}.
    pub fn data_norms(&self) -> (f64, f64) {
        let g = self.domain.graph();
        let l2 = calculus::lq_norm(g, &self.initial, self.domain.interior(), 2.0).unwrap_or(f64::NAN);
        let lp1 = calculus::lq_norm(g, &self.initial, self.domain.interior(), self.p + 1.0)
            .unwrap_or(f64::NAN);
        (l2, lp1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSettings {
    /// Stop when the Euler–Lagrange sup-residual is below
    /// `tolerance · (1 + ‖u_prev‖_∞)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StepSettings {
    fn default() -> Self {
        StepSettings {
            tolerance: 1e-12,
            max_iterations: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub field: VertexField,
    pub iterations: usize,
    /// Sup over Ω° of the unscaled Euler–Lagrange residual.
    pub residual: f64,
}

#[inline]
fn power(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        s
    } else {
        s.abs().powf(p - 1.0) * s
    }
}

#[inline]
fn power_derivative(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else {
        p * s.abs().max(DERIVATIVE_FLOOR).powf(p - 1.0)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Per-step solver for fixed domain, exponent and step size. The linear
/// system for p = 1 is factorized once and reused.
pub struct HeatStepper {
    domain: Arc<Domain>,
    p: f64,
    step: f64,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    linear: Option<SpdSolver>,
    settings: StepSettings,
}

impl HeatStepper {
    pub fn new(domain: Arc<Domain>, p: f64, step: f64, settings: StepSettings) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {step}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponent p must satisfy p >= 1, got {p}")));
        }
        domain.require_interior()?;
        let stiffness = dirichlet_stiffness(&domain);
        let mass = interior_mass(&domain);
        let linear = if p == 1.0 {
            let d: Vec<f64> = mass.iter().map(|m| m * (1.0 / step + 1.0)).collect();
            Some(SpdSolver::new(&stiffness.with_added_diagonal(&d))?)
        } else {
            None
        };
        Ok(HeatStepper {
            domain,
            p,
            step,
            stiffness,
            mass,
            linear,
            settings,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// μ-scaled Euler–Lagrange map μ((u − u_prev)/ℓ + |u|^{p−1}u) + Ku on
    /// interior unknowns.
    fn scaled_residual(&self, u: &[f64], prev: &[f64]) -> Vec<f64> {
        let ku = self.stiffness.mul_vec(u);
        (0..u.len())
            .map(|k| self.mass[k] * ((u[k] - prev[k]) / self.step + power(u[k], self.p)) + ku[k])
            .collect()
    }

    fn unscaled_sup(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.mass).fold(0.0, |m, (r, mu)| m.max((r / mu).abs()))
    }

    fn functional(&self, u: &[f64], prev: &[f64]) -> f64 {
        let q = self.p + 1.0;
        let local: f64 = (0..u.len())
            .map(|k| {
                self.mass[k]
                    * ((u[k] * u[k] - 2.0 * prev[k] * u[k]) / self.step
                        + 2.0 / q * u[k].abs().powf(q))
            })
            .sum();
        local + self.stiffness.quadratic_form(u)
    }

    /// Minimizer of F_i starting from the iterate `u_prev`.
    pub fn solve(&self, u_prev: &VertexField) -> Result<StepOutcome> {
        self.solve_from(u_prev, u_prev)
    }

    /// Minimizer of F_i starting the iteration at `guess`.
    pub fn solve_from(&self, u_prev: &VertexField, guess: &VertexField) -> Result<StepOutcome> {
        let dom = &self.domain;
        check_admissible(dom, u_prev)?;
        if guess.len() != u_prev.len() {
            return Err(Error::DomainMismatch("initial iterate has the wrong length".into()));
        }
        let prev = u_prev.interior_values(dom);
        let tol = self.settings.tolerance * (1.0 + sup(&prev));

        if let Some(solver) = &self.linear {
            let rhs: Vec<f64> = prev.iter().zip(&self.mass).map(|(u, m)| m * u / self.step).collect();
            let mut u = solver.solve(&rhs)?;
            let mut g = self.scaled_residual(&u, &prev);
            let mut res = self.unscaled_sup(&g);
            let mut refinements = 0;
            while res > tol && refinements < 3 {
                let corr = solver.solve(&g)?;
                for (x, c) in u.iter_mut().zip(&corr) {
                    *x -= c;
                }
                g = self.scaled_residual(&u, &prev);
                res = self.unscaled_sup(&g);
                refinements += 1;
            }
            return Ok(StepOutcome {
                field: VertexField::from_interior(dom, &u),
                iterations: 1 + refinements,
                residual: res,
            });
        }

        let mut u = guess.interior_values(dom);
        let mut g = self.scaled_residual(&u, &prev);
        let mut res = self.unscaled_sup(&g);
        for it in 0..self.settings.max_iterations {
            if res <= tol {
                return Ok(StepOutcome {
                    field: VertexField::from_interior(dom, &u),
                    iterations: it,
                    residual: res,
                });
            }
            let jac_diag: Vec<f64> = (0..u.len())
                .map(|k| self.mass[k] * (1.0 / self.step + power_derivative(u[k], self.p)))
                .collect();
            let jac = self.stiffness.with_added_diagonal(&jac_diag);
            let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
            let dir = SpdSolver::new(&jac)?.solve(&neg_g)?;

            // ∇F = 2g, so the directional derivative along `dir` is 2 g·dir.
            let f0 = self.functional(&u, &prev);
            let slope: f64 = 2.0 * g.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
            let mut alpha = 1.0;
            let (trial, g_trial, res_trial) = loop {
                let trial: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
                let g_trial = self.scaled_residual(&trial, &prev);
                let res_trial = self.unscaled_sup(&g_trial);
                let armijo = self.functional(&trial, &prev) <= f0 + 1e-4 * alpha * slope;
                if armijo || res_trial < 0.5 * res || alpha < 1e-12 {
                    break (trial, g_trial, res_trial);
                }
                alpha *= 0.5;
            };
            let moved = alpha * sup(&dir);
            u = trial;
            g = g_trial;
            res = res_trial;
            if moved <= 8.0 * f64::EPSILON * (1.0 + sup(&u)) && res > tol {
                // Round-off floor: accept if within the guaranteed contract.
                if res <= 1e-10 * (1.0 + sup(&prev)) {
                    return Ok(StepOutcome {
                        field: VertexField::from_interior(dom, &u),
                        iterations: it + 1,
                        residual: res,
                    });
                }
                return Err(Error::NonConvergence {
                    iterations: it + 1,
                    residual: res,
                });
            }
        }
        if res <= tol {
            return Ok(StepOutcome {
                field: VertexField::from_interior(dom, &u),
                iterations: self.settings.max_iterations,
                residual: res,
            });
        }
        Err(Error::NonConvergence {
            iterations: self.settings.max_iterations,
            residual: res,
        })
    }
}

/// F_i(u) evaluated from the calculus definitions (integrals over Ω).
pub fn step_functional(
    dom: &Domain,
    p: f64,
    step: f64,
    u: &VertexField,
    u_prev: &VertexField,
) -> Result<f64> {
    check_admissible(dom, u).map_err(mismatch)?;
    check_admissible(dom, u_prev).map_err(mismatch)?;
    let g = dom.graph();
    let over = dom.omega();
    let q = p + 1.0;
    let mass = calculus::integrate_with(g, over, |x| u[x] * u[x])?;
    let cross = calculus::integrate_with(g, over, |x| u_prev[x] * u[x])?;
    let powr = calculus::integrate_with(g, over, |x| u[x].abs().powf(q))?;
    let grad = calculus::gradient_energy(dom, u)?;
    Ok(mass / step - 2.0 * cross / step + 2.0 / q * powr + grad)
}

fn mismatch(e: Error) -> Error {
    match e {
        Error::NotDirichletAdmissible(v) => {
            Error::DomainMismatch(format!("field is not admissible on this domain (vertex {v})"))
        }
        other => other,
    }
}

/// (u − u_prev)/ℓ + |u|^{p−1}u − Δu at each interior vertex, in unknown
/// order, computed with the pointwise Laplacian.
pub fn euler_lagrange_residual(
    dom: &Domain,
    p: f64,
    step: f64,
    u: &VertexField,
    u_prev: &VertexField,
) -> Result<Vec<f64>> {
    let g = dom.graph();
    dom.interior()
        .iter()
        .map(|&x| {
            Ok((u[x] - u_prev[x]) / step + power(u[x], p) - calculus::laplacian(g, u, x)?)
        })
        .collect()
}

/// One Rothe step of `prob` from `u_prev` with step size ℓ.
pub fn solve_step(prob: &HeatProblem, u_prev: &VertexField, step: f64) -> Result<VertexField> {
    let stepper = HeatStepper::new(Arc::clone(&prob.domain), prob.p, step, StepSettings::default())?;
    Ok(stepper.solve(u_prev)?.field)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolant {
    /// Piecewise-linear u^{(n)}.
    Linear,
    /// Piecewise-constant ū^{(n)}, left-open cells.
    Step,
}

/// The Rothe sequence u_0, …, u_n on a fixed partition.
#[derive(Clone, Debug)]
pub struct RotheTrajectory {
    domain: Arc<Domain>,
    partition: TimePartition,
    levels: Vec<VertexField>,
    iterations: Vec<usize>,
}

impl RotheTrajectory {
    pub fn new(domain: Arc<Domain>, partition: TimePartition, levels: Vec<VertexField>) -> Result<Self> {
        if levels.len() != partition.steps() + 1 {
            return Err(Error::InvalidParameter(format!(
                "{} levels for {} steps",
                levels.len(),
                partition.steps()
            )));
        }
        Ok(RotheTrajectory {
            domain,
            partition,
            iterations: vec![0; levels.len()],
            levels,
        })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn levels(&self) -> &[VertexField] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &VertexField {
        &self.levels[i]
    }

    pub fn final_state(&self) -> &VertexField {
        self.levels.last().expect("trajectory has at least one level")
    }

    /// Solver iterations per level (0 for the initial level).
    pub fn iterations(&self) -> &[usize] {
        &self.iterations
    }

    /// δu_i = (u_i − u_{i−1})/ℓ for i ≥ 1.
    pub fn quotient(&self, i: usize) -> VertexField {
        assert!(i >= 1 && i < self.levels.len(), "quotient index out of range");
        self.levels[i]
            .sub(&self.levels[i - 1])
            .scale(1.0 / self.partition.step_size())
    }

    pub fn evaluate(&self, t: f64, kind: Interpolant) -> Result<VertexField> {
        evaluate_interpolant(self, t, kind)
    }
}

/// Evaluate u^{(n)} or ū^{(n)} at time `t`.
pub fn evaluate_interpolant(traj: &RotheTrajectory, t: f64, kind: Interpolant) -> Result<VertexField> {
    let part = &traj.partition;
    let lo = match kind {
        Interpolant::Linear => 0.0,
        Interpolant::Step => -part.step_size(),
    };
    if !(t >= lo && t <= part.horizon()) {
        return Err(Error::TimeOutOfRange {
            t,
            lo,
            hi: part.horizon(),
        });
    }
    if t <= 0.0 {
        return Ok(traj.levels[0].clone());
    }
    if let Some(k) = part.grid_index(t) {
        return Ok(traj.levels[k].clone());
    }
    let i = part.cell(t);
    match kind {
        Interpolant::Step => Ok(traj.levels[i].clone()),
        Interpolant::Linear => {
            let dt = t - part.time(i - 1);
            Ok(traj.levels[i - 1].add_scaled(dt, &traj.quotient(i)))
        }
    }
}

pub fn run_rothe(prob: &HeatProblem, part: &TimePartition) -> Result<RotheTrajectory> {
    run_rothe_with(prob, part, StepSettings::default())
}

pub fn run_rothe_with(
    prob: &HeatProblem,
    part: &TimePartition,
    settings: StepSettings,
) -> Result<RotheTrajectory> {
    let stepper = HeatStepper::new(Arc::clone(&prob.domain), prob.p, part.step_size(), settings)?;
    let mut levels = Vec::with_capacity(part.steps() + 1);
    let mut iterations = Vec::with_capacity(part.steps() + 1);
    levels.push(prob.initial.clone());
    iterations.push(0);
    for i in 1..=part.steps() {
        let out = stepper.solve(&levels[i - 1])?;
        iterations.push(out.iterations);
        levels.push(out.field);
    }
    Ok(RotheTrajectory {
        domain: Arc::clone(&prob.domain),
        partition: *part,
        levels,
        iterations,
    })
}

/// Per-level quantities monitored along a heat trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub i: usize,
    pub t: f64,
    /// ‖u_i‖_{L²(Ω)}
    pub l2: f64,
    /// ‖∇u_i‖_{L²(Ω)}
    pub grad_l2: f64,
    /// ‖u_i‖_{L^{2p}(Ω)}
    pub l2p: f64,
    /// ‖δu_i‖_{L²(Ω)} (0 at i = 0)
    pub delta_l2: f64,
    /// ∫|u_i|² + ℓ(∫|u_i|^{p+1} + ∫|∇u_i|²) − ½(∫|u_i|² + ∫|u_{i−1}|²), expected ≤ 0.
    pub energy_residual: f64,
    /// (‖u_i‖² − ‖u_{i−1}‖²)/ℓ + 2‖u_i‖^{p+1}_{L^{p+1}} + 2‖∇u_i‖², expected ≤ 0.
    pub energy_defect: f64,
    /// 1 + ‖u_{i−1}‖² + ‖u_i‖², the natural size of `energy_residual`.
    pub residual_scale: f64,
}

impl EstimateRow {
    /// Natural size of `energy_defect`: `residual_scale / ℓ`.
    pub fn defect_scale(&self, step: f64) -> f64 {
        self.residual_scale / step
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub step: f64,
    pub rows: Vec<EstimateRow>,
    /// ‖h‖_{L²(Ω°)}
    pub initial_l2: f64,
    /// ‖h‖_{L^{p+1}(Ω°)}
    pub initial_lp1: f64,
}

impl EstimateReport {
    /// Largest increase ‖u_i‖ − ‖u_{i−1}‖ (non-positive for a monotone run).
    pub fn max_l2_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].l2 - w[0].l2)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_energy_residual_ratio(&self) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| r.energy_residual / r.residual_scale)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_energy_defect_ratio(&self) -> f64 {
        self.rows
            .iter()
            .skip(1)
            .map(|r| r.energy_defect / r.defect_scale(self.step))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_gradient_l2(&self) -> f64 {
        self.rows.iter().map(|r| r.grad_l2).fold(0.0, f64::max)
    }
}

pub fn monitor_estimates(traj: &RotheTrajectory, p: f64) -> Result<EstimateReport> {
    let dom = traj.domain();
    let g = dom.graph();
    let over = dom.omega();
    let step = traj.partition.step_size();
    let mut rows = Vec::with_capacity(traj.levels.len());
    let mut prev_mass = 0.0;
    for (i, u) in traj.levels.iter().enumerate() {
        let mass = calculus::integrate_with(g, over, |x| u[x] * u[x])?;
        let grad = calculus::gradient_energy(dom, u)?;
        let powr = calculus::integrate_with(g, over, |x| u[x].abs().powf(p + 1.0))?;
        let l2p = calculus::lq_norm(g, u, over, 2.0 * p)?;
        let (delta_l2, energy_residual, energy_defect, residual_scale) = if i == 0 {
            (0.0, 0.0, 0.0, 1.0 + 2.0 * mass)
        } else {
            let q = traj.quotient(i);
            let delta = calculus::lq_norm(g, &q, over, 2.0)?;
            let r = mass + step * (powr + grad) - 0.5 * (mass + prev_mass);
            let d = (mass - prev_mass) / step + 2.0 * powr + 2.0 * grad;
            (delta, r, d, 1.0 + mass + prev_mass)
        };
        rows.push(EstimateRow {
            i,
            t: traj.partition.time(i),
            l2: mass.sqrt(),
            grad_l2: grad.sqrt(),
            l2p,
            delta_l2,
            energy_residual,
            energy_defect,
            residual_scale,
        });
        prev_mass = mass;
    }
    let initial = &traj.levels[0];
    Ok(EstimateReport {
        step,
        rows,
        initial_l2: calculus::lq_norm(g, initial, dom.interior(), 2.0)?,
        initial_lp1: calculus::lq_norm(g, initial, dom.interior(), p + 1.0)?,
    })
}

/// Result for one exhaustion level m.
#[derive(Clone, Debug)]
pub struct ExhaustionLevel {
    pub m: usize,
    pub trajectory: RotheTrajectory,
    /// ‖u_{m+1}(·,T) − u_m(·,T)‖_{L²(Ω_m)}
    pub delta: f64,
}

/// Solve the heat problem on the exhaustion levels `levels` and on each
/// successor level, with h_m = h restricted to Ω_m°.
pub fn run_exhaustion(
    p: f64,
    initial: &VertexField,
    exh: &ExhaustionSequence,
    part: &TimePartition,
    levels: &[usize],
    settings: StepSettings,
) -> Result<Vec<ExhaustionLevel>> {
    let mut cache: BTreeMap<usize, RotheTrajectory> = BTreeMap::new();
    let solve = |m: usize, cache: &mut BTreeMap<usize, RotheTrajectory>| -> Result<()> {
        if m == 0 || m > exh.max_level() {
            return Err(Error::InvalidParameter(format!(
                "exhaustion level {m} outside 1..={}",
                exh.max_level()
            )));
        }
        if !cache.contains_key(&m) {
            let dom = Arc::new(exh.level(m).clone());
            let prob = HeatProblem::new(dom, p, initial, part.horizon())?;
            cache.insert(m, run_rothe_with(&prob, part, settings)?);
        }
        Ok(())
    };
    let mut out = Vec::with_capacity(levels.len());
    for &m in levels {
        solve(m, &mut cache)?;
        solve(m + 1, &mut cache)?;
        let small = &cache[&m];
        let big = &cache[&(m + 1)];
        let dom = small.domain();
        let (a, b) = (small.final_state(), big.final_state());
        let delta = calculus::integrate_with(dom.graph(), dom.omega(), |x| (b[x] - a[x]).powi(2))?.sqrt();
        out.push(ExhaustionLevel {
            m,
            trajectory: small.clone(),
            delta,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_domain, WeightedGraph};

    fn single_interior() -> Arc<Domain> {
        let edges: Vec<_> = (0..4).map(|k| (k, k + 1, 1.0)).collect();
        let g = Arc::new(WeightedGraph::from_edges(&edges, &[1.0; 5]).unwrap());
        Arc::new(make_domain(g, [1, 2, 3]).unwrap())
    }

    #[test]
    fn functional_single_vertex() {
        let dom = single_interior();
        let prev = VertexField::indicator(5, 2);
        for c in [0.0, 0.3, 10.0 / 13.0, -1.2] {
            let u = VertexField::indicator(5, 2).scale(c);
            let f = step_functional(&dom, 1.0, 0.1, &u, &prev).unwrap();
            let expect = 13.0 * c * c - 20.0 * c;
            assert!((f - expect).abs() < 1e-12 * (1.0 + expect.abs()), "{f} vs {expect}");
        }
        let zero = VertexField::zeros(5);
        assert_eq!(step_functional(&dom, 2.5, 0.1, &zero, &prev).unwrap(), 0.0);
        let bad = VertexField::indicator(5, 1);
        assert!(matches!(
            step_functional(&dom, 1.0, 0.1, &bad, &prev),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn single_vertex_steps() {
        let dom = single_interior();
        let h = VertexField::indicator(5, 2);
        let prob = HeatProblem::new(Arc::clone(&dom), 1.0, &h, 1.0).unwrap();
        let u = solve_step(&prob, &h, 0.1).unwrap();
        assert!((u[2] - 10.0 / 13.0).abs() < 1e-15);

        // Root of 10(u − 1) + u³ + 2u = 0, frozen from bisection to 1e-15.
        let prob3 = HeatProblem::new(Arc::clone(&dom), 3.0, &h, 1.0).unwrap();
        let u = solve_step(&prob3, &h, 0.1).unwrap();
        assert!((u[2] - 0.791_942_867_912_495_9).abs() < 1e-12, "{}", u[2]);

        let zero = VertexField::zeros(5);
        assert_eq!(solve_step(&prob3, &zero, 0.1).unwrap(), zero);
    }

    #[test]
    fn partition_grid() {
        let part = TimePartition::new(1.0, 3).unwrap();
        assert_eq!(part.time(0), 0.0);
        assert_eq!(part.time(3), 1.0);
        assert_eq!(part.grid_index(1.0), Some(3));
        assert_eq!(part.cell(0.5), 2);
        assert!(TimePartition::new(0.0, 3).is_err());
        assert!(TimePartition::new(1.0, 0).is_err());
    }

    #[test]
    fn interpolants() {
        let dom = single_interior();
        let h = VertexField::indicator(5, 2);
        let prob = HeatProblem::new(Arc::clone(&dom), 1.0, &h, 1.0).unwrap();
        let part = TimePartition::new(1.0, 4).unwrap();
        let traj = run_rothe(&prob, &part).unwrap();
        for i in 0..=4 {
            let t = part.time(i);
            assert_eq!(&traj.evaluate(t, Interpolant::Linear).unwrap(), traj.level(i));
            assert_eq!(&traj.evaluate(t, Interpolant::Step).unwrap(), traj.level(i));
        }
        let mid = traj.evaluate(0.125, Interpolant::Linear).unwrap();
        assert!((mid[2] - 0.5 * (traj.level(0)[2] + traj.level(1)[2])).abs() < 1e-15);
        assert_eq!(&traj.evaluate(0.3, Interpolant::Step).unwrap(), traj.level(2));
        assert_eq!(&traj.evaluate(-0.2, Interpolant::Step).unwrap(), traj.level(0));
        assert!(matches!(
            traj.evaluate(-0.2, Interpolant::Linear),
            Err(Error::TimeOutOfRange { .. })
        ));
        assert!(traj.evaluate(1.5, Interpolant::Step).is_err());
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let dom = single_interior();
        let prob = HeatProblem::new(dom, 2.0, &VertexField::zeros(5), 1.0).unwrap();
        let part = TimePartition::new(1.0, 10).unwrap();
        let traj = run_rothe(&prob, &part).unwrap();
        assert!(traj.levels().iter().all(|u| u.sup_norm() == 0.0));
        let rep = monitor_estimates(&traj, 2.0).unwrap();
        for r in &rep.rows {
            assert_eq!((r.l2, r.grad_l2, r.l2p, r.delta_l2), (0.0, 0.0, 0.0, 0.0));
            assert_eq!((r.energy_residual, r.energy_defect), (0.0, 0.0));
        }
    }

    #[test]
    fn problem_validation() {
        let dom = single_interior();
        let h = VertexField::indicator(5, 2);
        assert!(HeatProblem::new(Arc::clone(&dom), 0.5, &h, 1.0).is_err());
        assert!(HeatProblem::new(Arc::clone(&dom), 1.0, &h, -1.0).is_err());
        let outside = VertexField::indicator(5, 0);
        let prob = HeatProblem::new(dom, 1.0, &outside, 1.0).unwrap();
        assert_eq!(prob.initial().sup_norm(), 0.0);
    }
}
