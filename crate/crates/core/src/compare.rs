//! Trajectory comparison and time-refinement studies

use crate::calculus::{self, VertexField};
use crate::error::{Error, Result};
use crate::heat::{Interpolant, RotheTrajectory};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    /// ‖a(t) − b(t)‖_{L²(Ω°)}
    pub l2: f64,
    /// max over Ω° of |a(t) − b(t)|
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub rows: Vec<CompareRow>,
}

impl ErrorTable {
    pub fn max_l2(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.l2))
    }

    pub fn max_sup(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.sup))
    }
}

fn row(traj: &RotheTrajectory, t: f64, a: &VertexField, b: &VertexField) -> Result<CompareRow> {
    let dom = traj.domain();
    let g = dom.graph();
    let l2 = calculus::integrate_with(g, dom.interior(), |x| (a[x] - b[x]).powi(2))?.sqrt();
    let sup = dom
        .interior()
        .iter()
        .fold(0.0_f64, |m, &x| m.max((a[x] - b[x]).abs()));
    Ok(CompareRow { t, l2, sup })
}

/// Differences of the piecewise-linear interpolants of two trajectories on
/// the same domain.
pub fn compare(a: &RotheTrajectory, b: &RotheTrajectory, times: &[f64]) -> Result<ErrorTable> {
    if !a.domain().same_graph(b.domain()) {
        return Err(Error::GraphMismatch);
    }
    if a.domain().interior() != b.domain().interior() {
        return Err(Error::DomainMismatch("trajectories live on different domains".into()));
    }
    let rows = times
        .iter()
        .map(|&t| {
            let ua = a.evaluate(t, Interpolant::Linear)?;
            let ub = b.evaluate(t, Interpolant::Linear)?;
            row(a, t, &ua, &ub)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorTable { rows })
}

/// Differences between a trajectory and a reference evaluated at `times`.
pub fn compare_with<F>(traj: &RotheTrajectory, times: &[f64], mut reference: F) -> Result<ErrorTable>
where
    F: FnMut(f64) -> Result<VertexField>,
{
    let rows = times
        .iter()
        .map(|&t| {
            let u = traj.evaluate(t, Interpolant::Linear)?;
            let r = reference(t)?;
            if r.len() != u.len() {
                return Err(Error::GraphMismatch);
            }
            row(traj, t, &u, &r)
        })
        .collect::<Result<_>>()?;
    Ok(ErrorTable { rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementPoint {
    pub steps: usize,
    pub step_size: f64,
    pub error: f64,
    /// log(e_{k−1}/e_k)/log(ℓ_{k−1}/ℓ_k), absent for the first point.
    pub order: Option<f64>,
}

/// Attach observed orders to `(steps, error)` pairs sorted by increasing `steps`.
pub fn observed_orders(horizon: f64, errors: &[(usize, f64)]) -> Vec<RefinementPoint> {
    let mut out: Vec<RefinementPoint> = Vec::with_capacity(errors.len());
    for (k, &(steps, error)) in errors.iter().enumerate() {
        let step_size = horizon / steps as f64;
        let order = (k > 0).then(|| {
            let prev = &out[k - 1];
            (prev.error / error).ln() / (prev.step_size / step_size).ln()
        });
        out.push(RefinementPoint {
            steps,
            step_size,
            error,
            order,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_domain, WeightedGraph};
    use crate::heat::{run_rothe, HeatProblem, TimePartition};
    use std::sync::Arc;

    fn problem() -> HeatProblem {
        let edges: Vec<_> = (0..4).map(|k| (k, k + 1, 1.0)).collect();
        let g = Arc::new(WeightedGraph::from_edges(&edges, &[1.0; 5]).unwrap());
        let dom = Arc::new(make_domain(g, [1, 2, 3]).unwrap());
        HeatProblem::new(dom, 1.0, &VertexField::indicator(5, 2), 1.0).unwrap()
    }

    #[test]
    fn self_comparison_is_zero() {
        let prob = problem();
        let traj = run_rothe(&prob, &TimePartition::new(1.0, 10).unwrap()).unwrap();
        let table = compare(&traj, &traj, &[0.0, 0.15, 0.5, 1.0]).unwrap();
        assert!(table.rows.iter().all(|r| r.l2 == 0.0 && r.sup == 0.0));
    }

    #[test]
    fn dyadic_refinement_halves_error() {
        let prob = problem();
        let reference = run_rothe(&prob, &TimePartition::new(1.0, 1600).unwrap()).unwrap();
        let mut errs = Vec::new();
        for n in [25, 50, 100] {
            let traj = run_rothe(&prob, &TimePartition::new(1.0, n).unwrap()).unwrap();
            errs.push((n, compare(&traj, &reference, &[1.0]).unwrap().max_l2()));
        }
        let pts = observed_orders(1.0, &errs);
        for p in &pts[1..] {
            let q = p.order.unwrap();
            assert!(q > 0.8 && q < 1.2, "order {q}");
        }
    }

    #[test]
    fn mismatched_graphs_rejected() {
        let a = run_rothe(&problem(), &TimePartition::new(1.0, 2).unwrap()).unwrap();
        let edges: Vec<_> = (0..5).map(|k| (k, k + 1, 1.0)).collect();
        let g = Arc::new(WeightedGraph::from_edges(&edges, &[1.0; 6]).unwrap());
        let dom = Arc::new(make_domain(g, [1, 2, 3]).unwrap());
        let other = HeatProblem::new(dom, 1.0, &VertexField::indicator(6, 2), 1.0).unwrap();
        let b = run_rothe(&other, &TimePartition::new(1.0, 2).unwrap()).unwrap();
        assert_eq!(compare(&a, &b, &[1.0]), Err(Error::GraphMismatch));
    }
}
