//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rothe_core::calculus::green_identity_check;
use rothe_core::graph::random::{connected_graph, domain_with_interior, RandomGraphSpec};
use rothe_core::graph::{materialize_ball, ExhaustionSequence, Lattice, Target};
use rothe_core::heat::{euler_lagrange_residual, run_exhaustion, HeatStepper, StepSettings};
use rothe_core::linalg::{dirichlet_stiffness, interior_mass};
use rothe_core::vi::{
    lipschitz_validate, run_vi, vi_monotonicity_monitor, vi_step, Forcing, SeparableForcing, VIStepper,
};
use rothe_core::{
    compare_with, dirichlet_eigenbasis, make_domain, monitor_estimates, observed_orders, ode_oracle, run_rothe,
    step_functional, Constraint, Domain, ExactP1, HeatProblem, RotheTrajectory, TimePartition, VIProblem,
    VertexField, WeightedGraph,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn path_graph(n: usize) -> Arc<WeightedGraph> {
    let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1, 1.0)).collect();
    Arc::new(WeightedGraph::from_edges(&edges, &vec![1.0; n]).unwrap())
}

/// P5 with Ω = {1,2,3}, Ω° = {2}.
fn single_interior() -> Arc<Domain> {
    Arc::new(make_domain(path_graph(5), [1, 2, 3]).unwrap())
}

/// P6 with Ω = {1,2,3,4}, Ω° = {2,3}.
fn two_interior() -> Arc<Domain> {
    Arc::new(make_domain(path_graph(6), [1, 2, 3, 4]).unwrap())
}

fn random_domain(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Arc<Domain> {
    let n = rng.random_range(lo..=hi);
    let spec = RandomGraphSpec {
        vertices: n,
        extra_edges: rng.random_range(0..=n),
        measure: (0.5, 2.0),
        weight: (0.1, 3.0),
    };
    let g = Arc::new(connected_graph(rng, &spec));
    let frac = rng.random_range(0.4..0.9);
    Arc::new(domain_with_interior(rng, &g, frac))
}

fn admissible(rng: &mut ChaCha8Rng, d: &Domain, lo: f64, hi: f64) -> VertexField {
    let vals: Vec<f64> = (0..d.num_interior()).map(|_| rng.random_range(lo..hi)).collect();
    VertexField::from_interior(d, &vals)
}

fn l2_interior(d: &Domain, v: &VertexField) -> f64 {
    rothe_core::lq_norm(d.graph(), v, d.interior(), 2.0).unwrap()
}

/// Heat trajectories collected across criteria for the monotonicity and
/// energy checks.
#[derive(Default)]
struct Pool {
    runs: Vec<(String, f64, RotheTrajectory)>,
}

impl Pool {
    fn add(&mut self, name: impl Into<String>, p: f64, traj: RotheTrajectory) {
        self.runs.push((name.into(), p, traj));
    }
}

fn green_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let d = random_domain(&mut rng, 5, 50);
        let v1 = admissible(&mut rng, &d, -1.0, 1.0);
        let v2 = admissible(&mut rng, &d, -1.0, 1.0);
        let r = green_identity_check(&d, &v1, &v2).unwrap();
        worst = worst.max(r.residual / (1.0 + r.lhs.abs()));
    }
    outcome(worst <= 1e-10, format!("100 random graphs, max residual/(1+|LHS|) = {worst:.3e} (tol 1e-10)"))
}

struct RandomStep {
    domain: Arc<Domain>,
    p: f64,
    step: f64,
    prev: VertexField,
}

fn random_steps() -> Vec<RandomStep> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    (0..50)
        .map(|k| {
            let domain = random_domain(&mut rng, 5, 30);
            let prev = admissible(&mut rng, &domain, -2.0, 2.0);
            RandomStep {
                p: [1.0, 1.5, 2.0, 3.0][k % 4],
                step: rng.random_range(0.01..0.5),
                prev,
                domain,
            }
        })
        .collect()
}

fn per_step_optimality(steps: &[RandomStep]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_res = 0.0_f64;
    let mut worst_fd = 0.0_f64;
    for s in steps {
        let d = &s.domain;
        let stepper = HeatStepper::new(Arc::clone(d), s.p, s.step, StepSettings::default()).unwrap();
        let u = stepper.solve(&s.prev).unwrap().field;
        let res = euler_lagrange_residual(d, s.p, s.step, &u, &s.prev).unwrap();
        let scale = 1.0 + s.prev.sup_norm() / s.step;
        worst_res = worst_res.max(res.iter().fold(0.0_f64, |m, r| m.max(r.abs())) / scale);

        // ∂ℱ/∂u(x) = 2μ(x)·(Euler–Lagrange residual)(x) at an arbitrary admissible point.
        let w = admissible(&mut rng, d, -1.5, 1.5);
        let analytic: Vec<f64> = euler_lagrange_residual(d, s.p, s.step, &w, &s.prev)
            .unwrap()
            .iter()
            .zip(d.interior())
            .map(|(r, &x)| 2.0 * d.graph().measure(x) * r)
            .collect();
        let n = d.graph().num_vertices();
        let mut diff = 0.0_f64;
        for (r, &x) in d.interior().iter().enumerate() {
            let eps = 1e-6 * (1.0 + w[x].abs());
            let e = VertexField::indicator(n, x);
            let fp = step_functional(d, s.p, s.step, &w.add_scaled(eps, &e), &s.prev).unwrap();
            let fm = step_functional(d, s.p, s.step, &w.add_scaled(-eps, &e), &s.prev).unwrap();
            diff = diff.max(((fp - fm) / (2.0 * eps) - analytic[r]).abs());
        }
        let size = analytic.iter().fold(1.0_f64, |m, a| m.max(a.abs()));
        worst_fd = worst_fd.max(diff / size);
    }
    outcome(
        worst_res <= 1e-10 && worst_fd <= 1e-5,
        format!(
            "50 steps, max residual/scale = {worst_res:.3e} (tol 1e-10), max FD gradient mismatch = {worst_fd:.3e} (tol 1e-5)"
        ),
    )
}

fn uniqueness(steps: &[RandomStep]) -> Outcome {
    let mut worst = 0.0_f64;
    for s in steps {
        let stepper = HeatStepper::new(Arc::clone(&s.domain), s.p, s.step, StepSettings::default()).unwrap();
        let a = stepper.solve_from(&s.prev, &VertexField::zeros(s.prev.len())).unwrap().field;
        let b = stepper.solve_from(&s.prev, &s.prev).unwrap().field;
        worst = worst.max(a.sub(&b).sup_norm());
    }
    outcome(worst <= 1e-8, format!("50 steps, max sup difference = {worst:.3e} (tol 1e-8)"))
}

fn random_trajectories(pool: &mut Pool) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..20 {
        let d = random_domain(&mut rng, 5, 30);
        let p = [1.0, 1.5, 2.0, 3.0][k % 4];
        let h = admissible(&mut rng, &d, -3.0, 3.0);
        let horizon = rng.random_range(0.2..2.0);
        let n = rng.random_range(10..60);
        let prob = HeatProblem::new(d, p, &h, horizon).unwrap();
        let traj = run_rothe(&prob, &TimePartition::new(horizon, n).unwrap()).unwrap();
        pool.add(format!("random #{k}"), p, traj);
    }
}

fn l2_monotonicity(pool: &Pool) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for (_, p, traj) in &pool.runs {
        let rep = monitor_estimates(traj, *p).unwrap();
        for w in rep.rows.windows(2) {
            worst = worst.max((w[1].l2 - w[0].l2) / (1.0 + w[0].l2));
            steps += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!(
            "{} trajectories, {steps} steps, max (‖u_i‖ − ‖u_i−1‖)/(1+‖u_i−1‖) = {worst:.3e} (tol 1e-12)",
            pool.runs.len()
        ),
    )
}

fn spectral_agreement(pool: &mut Pool) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, d, h) in [
        ("P5 single interior", single_interior(), VertexField::indicator(5, 2)),
        (
            "P6 two interior",
            two_interior(),
            VertexField::from_values(vec![0.0, 0.0, 1.0, 0.5, 0.0, 0.0]).unwrap(),
        ),
    ] {
        let prob = HeatProblem::new(Arc::clone(&d), 1.0, &h, 1.0).unwrap();
        let part = TimePartition::new(1.0, 1000).unwrap();
        let traj = run_rothe(&prob, &part).unwrap();
        let exact = ExactP1::new(dirichlet_eigenbasis(&d).unwrap(), &h).unwrap();
        let table = compare_with(&traj, &part.grid(), |t| Ok(exact.at(t))).unwrap();
        let tol = 3e-4 * l2_interior(&d, &h);
        let ok = table.max_l2() <= tol;
        pass &= ok;
        lines.push(format!("{name}: max grid L² error {:.4e} vs {tol:.1e}", table.max_l2()));
        if name.starts_with("P5") {
            let end = traj.final_state()[2];
            let target = (-3.0f64).exp();
            let ok = (end - target).abs() <= 2e-4;
            pass &= ok;
            lines.push(format!("u(2,1) = {end:.6} vs e^-3 = {target:.6}, |diff| {:.4e} vs 2e-4", (end - target).abs()));
        }
        pool.add(name, 1.0, traj);
    }
    outcome(pass, lines.join("; "))
}

fn convergence_order(pool: &mut Pool) -> Outcome {
    // P12 with Ω = {1..10}: ten domain vertices, eight interior.
    let d = Arc::new(make_domain(path_graph(12), 1..11).unwrap());
    assert_eq!(d.num_interior(), 8);
    let h = VertexField::from_fn(12, |x| {
        if (2..10).contains(&x) {
            (std::f64::consts::PI * (x - 1) as f64 / 9.0).sin() + 0.25 * (x as f64 / 3.0).cos()
        } else {
            0.0
        }
    });
    let mut lines = Vec::new();
    let mut pass = true;
    for p in [1.0, 3.0] {
        let prob = HeatProblem::new(Arc::clone(&d), p, &h, 1.0).unwrap();
        let reference = if p == 1.0 {
            ExactP1::new(dirichlet_eigenbasis(&d).unwrap(), prob.initial()).unwrap().at(1.0)
        } else {
            ode_oracle(&prob, &[1.0], 1e-12).unwrap().remove(0)
        };
        let mut errors = Vec::new();
        for n in [125, 250, 500, 1000] {
            let traj = run_rothe(&prob, &TimePartition::new(1.0, n).unwrap()).unwrap();
            errors.push((n, compare_with(&traj, &[1.0], |_| Ok(reference.clone())).unwrap().max_l2()));
            if n == 1000 {
                pool.add(format!("P12 p={p}"), p, traj);
            }
        }
        let orders: Vec<f64> = observed_orders(1.0, &errors).iter().filter_map(|pt| pt.order).collect();
        let ok = orders.iter().all(|q| (0.8..=1.2).contains(q));
        pass &= ok;
        lines.push(format!(
            "p={p}: orders {}",
            orders.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(pass, format!("{} (range [0.8, 1.2])", lines.join("; ")))
}

fn energy_production(pool: &Pool) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for (_, p, traj) in &pool.runs {
        let rep = monitor_estimates(traj, *p).unwrap();
        worst = worst.max(rep.max_energy_defect_ratio());
    }
    outcome(
        worst <= 1e-10,
        format!("{} trajectories, max d_i/scale = {worst:.3e} (tol 1e-10)", pool.runs.len()),
    )
}

fn vi_subspace() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let d = random_domain(&mut rng, 5, 40);
        let step = rng.random_range(0.01..1.0);
        let prev = admissible(&mut rng, &d, -1.0, 1.0);
        let f = admissible(&mut rng, &d, -5.0, 5.0);
        let rep = vi_step(&d, &prev, &f, step, &Constraint::Subspace).unwrap();
        let k = dirichlet_stiffness(&d).to_dense();
        let m = interior_mass(&d);
        let n = m.len();
        let a = DMatrix::from_fn(n, n, |i, j| k[i][j] + if i == j { m[i] / step } else { 0.0 });
        let (pv, fv) = (prev.interior_values(&d), f.interior_values(&d));
        let b = DVector::from_fn(n, |i, _| m[i] * (fv[i] + pv[i] / step));
        let x = a.cholesky().expect("SPD").solve(&b);
        let u = rep.solution.interior_values(&d);
        let scale = 1.0 + b.amax();
        worst = worst.max((0..n).map(|i| (u[i] - x[i]).abs()).fold(0.0, f64::max) / scale);
    }
    let d = single_interior();
    let zero: Arc<dyn Forcing> = Arc::new(|_t: f64| VertexField::zeros(5));
    let prob = VIProblem::new(d, zero, &VertexField::indicator(5, 2), 1.0, Constraint::Subspace).unwrap();
    let run = run_vi(&prob, &TimePartition::new(1.0, 1000).unwrap()).unwrap();
    let end = run.trajectory.final_state()[2];
    let target = (-2.0f64).exp();
    let decay = (end - target).abs();
    outcome(
        worst <= 1e-10 && decay <= 2e-4,
        format!(
            "20 steps vs dense Cholesky, max diff/scale = {worst:.3e} (tol 1e-10); u(2,1) = {end:.6} vs e^-2 = {target:.6}, |diff| {decay:.4e} vs 2e-4"
        ),
    )
}

fn lipschitz_field(rng: &mut ChaCha8Rng, d: &Domain) -> Arc<dyn Forcing> {
    let chi = admissible(rng, d, -3.0, 3.0);
    let a = rng.random_range(0.5..4.0);
    match rng.random_range(0..3) {
        0 => Arc::new(SeparableForcing {
            field: chi,
            time: Box::new(move |t| (a * t).sin()),
        }),
        1 => Arc::new(SeparableForcing {
            field: chi,
            time: Box::new(move |t| a * t - 1.0),
        }),
        _ => {
            let chi2 = admissible(rng, d, -1.0, 1.0);
            Arc::new(move |t: f64| chi.scale((-a * t).exp()).add_scaled(t * t, &chi2))
        }
    }
}

fn vi_recurrence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = f64::NEG_INFINITY;
    let mut bounds = true;
    for k in 0..20 {
        let d = random_domain(&mut rng, 5, 30);
        let f = lipschitz_field(&mut rng, &d);
        let h = admissible(&mut rng, &d, 0.0, 1.0);
        let constraint = if k % 2 == 0 {
            Constraint::Subspace
        } else {
            Constraint::Obstacle(VertexField::zeros(d.graph().num_vertices()))
        };
        let n = rng.random_range(10..40);
        let prob = VIProblem::new(Arc::clone(&d), f, &h, 1.0, constraint).unwrap();
        let run = run_vi(&prob, &TimePartition::new(1.0, n).unwrap()).unwrap();
        let mono = vi_monotonicity_monitor(&run, None).unwrap();
        worst = worst.max(mono.max_violation);
        bounds &= mono.bound_holds;
    }
    outcome(
        worst <= 1e-10,
        format!("20 runs (10 obstacle), max (lhs − rhs)/(1+rhs) = {worst:.3e} (tol 1e-10); quotient bound held: {bounds}"),
    )
}

fn obstacle_kkt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = [0.0_f64; 3];
    for _ in 0..20 {
        let mut d = random_domain(&mut rng, 5, 40);
        while d.num_interior() > 30 {
            d = random_domain(&mut rng, 5, 40);
        }
        let psi = admissible(&mut rng, &d, -0.5, 0.2);
        let h = psi.add_scaled(1.0, &admissible(&mut rng, &d, 0.0, 1.0));
        let chi = admissible(&mut rng, &d, -20.0, 5.0);
        let f: Arc<dyn Forcing> = Arc::new(rothe_core::vi::ConstantForcing(chi));
        let prob = VIProblem::new(Arc::clone(&d), f, &h, 1.0, Constraint::Obstacle(psi)).unwrap();
        let run = run_vi(&prob, &TimePartition::new(1.0, 10).unwrap()).unwrap();
        for r in &run.reports {
            let k = r.kkt.expect("obstacle step reports KKT residuals");
            worst[0] = worst[0].max(k.primal);
            worst[1] = worst[1].max(k.dual);
            worst[2] = worst[2].max(k.complementarity);
        }
    }
    let random_ok = worst.iter().all(|&w| w <= 1e-8);

    let d = single_interior();
    let stepper = VIStepper::new(Arc::clone(&d), 0.1).unwrap();
    let rep = stepper
        .step(
            1,
            &VertexField::indicator(5, 2),
            &VertexField::indicator(5, 2).scale(-20.0),
            &Constraint::Obstacle(VertexField::zeros(5)),
        )
        .unwrap();
    let r = stepper.matrix().mul_vec(&[0.0])[0] - (-20.0 + 1.0 / 0.1);
    let k = rep.kkt.unwrap();
    let hand_ok = rep.solution[2] == 0.0 && r == 10.0 && k.primal == 0.0 && k.dual == 0.0 && k.complementarity == 0.0;
    outcome(
        random_ok && hand_ok,
        format!(
            "20 problems, max primal {:.2e} dual {:.2e} complementarity {:.2e} (tol 1e-8); hand case u(2) = {}, r = {r}",
            worst[0], worst[1], worst[2], rep.solution[2]
        ),
    )
}

fn exhaustion_decay(pool: &mut Pool) -> Outcome {
    let lat = Lattice::z(1.0, 1.0);
    let g = Arc::new(materialize_ball(&lat, &[lat.origin()], 30).unwrap());
    let origin = g.vertex("0").unwrap();
    let exh = ExhaustionSequence::balls(&g, Target::All, &[origin], 26).unwrap();
    let h = VertexField::indicator(g.num_vertices(), origin);
    let part = TimePartition::new(1.0, 200).unwrap();
    let levels = [5, 10, 15, 20, 25];
    let res = run_exhaustion(1.0, &h, &exh, &part, &levels, StepSettings::default()).unwrap();
    let deltas: Vec<f64> = res.iter().map(|l| l.delta).collect();
    let decreasing = deltas.windows(2).all(|w| w[1] < w[0]);
    let last = *deltas.last().unwrap();
    for lv in res {
        pool.add(format!("Z level {}", lv.m), 1.0, lv.trajectory);
    }
    outcome(
        decreasing && last <= 1e-8,
        format!(
            "δ_m for m = 5..25: {} (strictly decreasing: {decreasing}, δ_25 ≤ 1e-8: {})",
            deltas.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", "),
            last <= 1e-8
        ),
    )
}

fn lipschitz_validator() -> Outcome {
    let d = two_interior();
    let chi = VertexField::from_values(vec![0.0, 0.0, 1.5, -2.0, 0.0, 0.0]).unwrap();
    let exact = l2_interior(&d, &chi);
    let linear = SeparableForcing {
        field: chi.clone(),
        time: Box::new(|t| t),
    };
    let samples: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let est = lipschitz_validate(&d, &linear, &samples, Some(exact)).unwrap();
    let rel = (est.estimate - exact).abs() / exact;
    let root = SeparableForcing {
        field: chi,
        time: Box::new(f64::sqrt),
    };
    let coarse = lipschitz_validate(&d, &root, &samples, Some(10.0 * exact)).unwrap();
    let fine: Vec<f64> = (0..=12).map(|k| if k == 0 { 0.0 } else { 10f64.powi(-k) }).collect();
    let dense = lipschitz_validate(&d, &root, &fine, Some(10.0 * exact)).unwrap();
    outcome(
        rel <= 0.01 && !est.violated && dense.violated && dense.estimate > coarse.estimate,
        format!(
            "t·χ: estimate {:.6} vs ‖χ‖ = {exact:.6} (rel {rel:.2e}, tol 1%); √t·χ: estimate {:.3e} on fine samples, flagged: {}",
            est.estimate, dense.estimate, dense.violated
        ),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    std::fs::write(
        root.join("p5.graph"),
        "graph 5\nv 0 1\nv 1 1\nv 2 1\nv 3 1\nv 4 1\ne 0 1 1\ne 1 2 1\ne 2 3 1\ne 3 4 1\n",
    )
    .unwrap();
    std::fs::write(root.join("omega.domain"), "omega 1\nomega 2\nomega 3\n").unwrap();
    std::fs::write(root.join("h.field"), "2 1\n").unwrap();
    std::fs::write(
        root.join("run.json"),
        r#"{"graph": {"file": "p5.graph"}, "domain": {"file": "omega.domain"},
            "problem": {"kind": "heat", "p": 2, "horizon": 1, "steps": [40, 80], "initial": {"file": "h.field"}},
            "compare_oracle": true}"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_rothe");
    let run = |out: &str| {
        let status = Command::new(bin)
            .arg("run")
            .arg(root.join("run.json"))
            .arg("--output")
            .arg(root.join(out))
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    run("a");
    run("b");
    let files = |sub: &str| -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        collect(&root.join(sub), &root.join(sub), &mut out);
        out.sort();
        out
    };
    let (a, b) = (files("a"), files("b"));
    let csvs = a.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let manifest = |v: &[(String, Vec<u8>)]| -> serde_json::Value {
        let bytes = &v.iter().find(|(n, _)| n == "manifest.json").unwrap().1;
        serde_json::from_slice(bytes).unwrap()
    };
    let (ma, mb) = (manifest(&a), manifest(&b));
    let same_hash = ma["config_hash"] == mb["config_hash"] && ma["outputs"] == mb["outputs"];
    outcome(
        a == b && same_hash && csvs > 0,
        format!("{} files ({csvs} CSV) bit-identical across two runs: {}, manifest hashes equal: {same_hash}", a.len(), a == b),
    )
}

fn collect(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect(base, &path, out);
        } else {
            let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
            out.push((rel, std::fs::read(&path).unwrap()));
        }
    }
}

fn main() {
    let mut pool = Pool::default();
    let steps = random_steps();
    random_trajectories(&mut pool);

    // Criteria that add trajectories to the pool run before the pool checks.
    let c5 = spectral_agreement(&mut pool);
    let c6 = convergence_order(&mut pool);
    let c11 = exhaustion_decay(&mut pool);

    let results = [
        ("Green identity", green_identity()),
        ("per-step optimality", per_step_optimality(&steps)),
        ("step uniqueness", uniqueness(&steps)),
        ("L² monotonicity", l2_monotonicity(&pool)),
        ("spectral agreement p=1", c5),
        ("time-convergence order", c6),
        ("discrete energy production", energy_production(&pool)),
        ("VI subspace equivalence", vi_subspace()),
        ("VI quotient recurrence", vi_recurrence()),
        ("obstacle KKT", obstacle_kkt()),
        ("exhaustion decay", c11),
        ("Lipschitz validator", lipschitz_validator()),
        ("CLI determinism", cli_determinism()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("{} [{:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
