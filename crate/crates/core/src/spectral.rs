//! Reference solutions on finite domains.
//!
//! For p = 1 the solution is the eigenfunction expansion
//! u(·,t) = Σ_j h_j e^{−(λ_j+1)t} φ_j with h_j = (h, φ_j)_{W₀^{1,2}} and
//! {φ_j} a W₀^{1,2}-orthonormal Dirichlet eigenbasis of −Δ. For general p the
//! semi-discrete system u̇ = Δu − |u|^{p−1}u is integrated with classical RK4
//! and step halving.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::calculus::{self, check_admissible, InnerProduct, VertexField};
use crate::error::{Error, Result};
use crate::graph::Domain;
use crate::heat::HeatProblem;
use crate::linalg::{dirichlet_stiffness, interior_mass};

#[derive(Clone, Debug)]
pub struct SpectralBasis {
    domain: Arc<Domain>,
    eigenvalues: Vec<f64>,
    eigenfields: Vec<VertexField>,
}

impl SpectralBasis {
    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// λ_1 ≤ … ≤ λ_N
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfields(&self) -> &[VertexField] {
        &self.eigenfields
    }

    /// ‖−Δφ_j − λ_j φ_j‖_{L²(Ω°)} for every j.
    pub fn residuals(&self) -> Result<Vec<f64>> {
        let dom = &self.domain;
        let g = dom.graph();
        self.eigenvalues
            .iter()
            .zip(&self.eigenfields)
            .map(|(&lambda, phi)| {
                let mut s = 0.0;
                for &x in dom.interior() {
                    let r = -calculus::laplacian(g, phi, x)? - lambda * phi[x];
                    s += g.measure(x) * r * r;
                }
                Ok(s.sqrt())
            })
            .collect()
    }

    /// max_{i,j} |(φ_i, φ_j)_{W₀^{1,2}} − δ_ij|, via the assembled matrices.
    pub fn orthonormality_defect(&self) -> f64 {
        let dom = &self.domain;
        let k = dirichlet_stiffness(dom);
        let mass = interior_mass(dom);
        let cols: Vec<Vec<f64>> = self.eigenfields.iter().map(|f| f.interior_values(dom)).collect();
        let images: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| {
                k.mul_vec(c)
                    .iter()
                    .zip(c.iter().zip(&mass))
                    .map(|(kc, (x, m))| kc + m * x)
                    .collect()
            })
            .collect();
        let mut worst = 0.0_f64;
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in images.iter().enumerate() {
                let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }
}

/// Dirichlet eigenpairs of −Δ on Ω°, normalized in W₀^{1,2}(Ω).
///
/// Solves the symmetric problem for M^{−1/2} K M^{−1/2} densely, maps the
/// eigenvectors back by M^{−1/2} (giving unit L² norm) and divides by
/// √(1+λ_j). The first clearly nonzero component of each eigenfield is made
/// positive.
pub fn dirichlet_eigenbasis(dom: &Arc<Domain>) -> Result<SpectralBasis> {
    dom.require_interior()?;
    let n = dom.num_interior();
    let k = dirichlet_stiffness(dom).to_dense();
    let mass = interior_mass(dom);
    let s: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| s[i] * k[i][j] * s[j]);
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenfields = Vec::with_capacity(n);
    for j in order {
        let lambda = eig.eigenvalues[j];
        let scale = 1.0 / (1.0 + lambda).sqrt();
        let mut phi: Vec<f64> = (0..n).map(|r| s[r] * eig.eigenvectors[(r, j)] * scale).collect();
        let big = phi.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if let Some(&lead) = phi.iter().find(|x| x.abs() > 1e-8 * big) {
            if lead < 0.0 {
                phi.iter_mut().for_each(|x| *x = -*x);
            }
        }
        if lambda <= 0.0 {
            log::warn!("non-positive Dirichlet eigenvalue {lambda:e}");
        }
        eigenvalues.push(lambda);
        eigenfields.push(VertexField::from_interior(dom, &phi));
    }
    Ok(SpectralBasis {
        domain: Arc::clone(dom),
        eigenvalues,
        eigenfields,
    })
}

/// Exact p = 1 solution with precomputed expansion coefficients.
#[derive(Clone, Debug)]
pub struct ExactP1 {
    basis: SpectralBasis,
    coefficients: Vec<f64>,
}

impl ExactP1 {
    pub fn new(basis: SpectralBasis, h: &VertexField) -> Result<Self> {
        check_admissible(&basis.domain, h)?;
        let coefficients = basis
            .eigenfields
            .iter()
            .map(|phi| calculus::inner_product(h, phi, &basis.domain, InnerProduct::W12))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExactP1 {
            basis,
            coefficients,
        })
    }

    /// h_j(0) = (h, φ_j)_{W₀^{1,2}}
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    pub fn at(&self, t: f64) -> VertexField {
        let dom = &self.basis.domain;
        let mut out = vec![0.0; dom.num_interior()];
        for ((&c, &lambda), phi) in self
            .coefficients
            .iter()
            .zip(&self.basis.eigenvalues)
            .zip(&self.basis.eigenfields)
        {
            let a = c * (-(lambda + 1.0) * t).exp();
            for (o, &x) in out.iter_mut().zip(dom.interior()) {
                *o += a * phi[x];
            }
        }
        VertexField::from_interior(dom, &out)
    }
}

pub fn exact_p1_solution(basis: &SpectralBasis, h: &VertexField, t: f64) -> Result<VertexField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    Ok(ExactP1::new(basis.clone(), h)?.at(t))
}

/// Output of the RK4 oracle together with its step-halving diagnostics.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub fields: Vec<VertexField>,
    /// Step size of the returned (finer) integration.
    pub step: f64,
    /// Sup-norm change between the last two halvings.
    pub defect: f64,
}

/// Largest number of RK4 steps before reporting a stiffness failure.
const MAX_RK4_STEPS: usize = 1 << 24;

pub fn ode_oracle(prob: &HeatProblem, t_eval: &[f64], tol: f64) -> Result<Vec<VertexField>> {
    Ok(ode_oracle_detailed(prob, t_eval, tol)?.fields)
}

/// Integrate u̇ = Δu − |u|^{p−1}u on Ω° with RK4, halving the step until two
/// successive integrations differ by less than `tol` in sup norm at every
/// requested time.
pub fn ode_oracle_detailed(prob: &HeatProblem, t_eval: &[f64], tol: f64) -> Result<OdeSolution> {
    if !(tol >= 1e-13) {
        return Err(Error::InvalidParameter(format!("oracle tolerance must be >= 1e-13, got {tol}")));
    }
    if let Some(&t) = t_eval.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!("invalid evaluation time {t}")));
    }
    let dom = prob.domain();
    let g = dom.graph();
    let k = dirichlet_stiffness(dom);
    let mass = interior_mass(dom);
    let p = prob.p();
    let u0 = prob.initial().interior_values(dom);
    let n_eval = t_eval.len();
    if n_eval == 0 {
        return Ok(OdeSolution {
            fields: vec![],
            step: 0.0,
            defect: 0.0,
        });
    }
    let t_max = t_eval.iter().fold(0.0_f64, |m, &t| m.max(t));
    if t_max == 0.0 {
        return Ok(OdeSolution {
            fields: vec![prob.initial().clone(); n_eval],
            step: 0.0,
            defect: 0.0,
        });
    }

    let rhs = |u: &[f64]| -> Vec<f64> {
        let ku = k.mul_vec(u);
        (0..u.len())
            .map(|r| {
                let reaction = if p == 1.0 { u[r] } else { u[r].abs().powf(p - 1.0) * u[r] };
                -ku[r] / mass[r] - reaction
            })
            .collect()
    };

    let mut order: Vec<usize> = (0..n_eval).collect();
    order.sort_by(|&a, &b| t_eval[a].total_cmp(&t_eval[b]));

    let integrate = |h_target: f64| -> Result<Vec<Vec<f64>>> {
        let mut u = u0.clone();
        let mut t = 0.0;
        let mut out = vec![Vec::new(); n_eval];
        let mut total = 0usize;
        for &idx in &order {
            let span = t_eval[idx] - t;
            if span > 0.0 {
                let steps = (span / h_target).ceil().max(1.0) as usize;
                total += steps;
                if total > MAX_RK4_STEPS {
                    return Err(Error::StiffnessFailure(h_target));
                }
                let h = span / steps as f64;
                for _ in 0..steps {
                    let k1 = rhs(&u);
                    let y: Vec<f64> = u.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
                    let k2 = rhs(&y);
                    let y: Vec<f64> = u.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
                    let k3 = rhs(&y);
                    let y: Vec<f64> = u.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
                    let k4 = rhs(&y);
                    for r in 0..u.len() {
                        u[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
                    }
                }
                t = t_eval[idx];
            }
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::StiffnessFailure(h_target));
            }
            out[idx] = u.clone();
        }
        Ok(out)
    };

    // Explicit stability bound: spectrum of M⁻¹K lies in [0, 2 D_μ], and the
    // reaction derivative is at most p‖h‖_∞^{p−1} by the maximum principle.
    let d_mu = dom
        .interior()
        .iter()
        .map(|&x| g.weighted_degree(x) / g.measure(x))
        .fold(0.0_f64, f64::max);
    let sup0 = u0.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let stiff = 2.0 * d_mu + p * sup0.powf(p - 1.0);
    let mut h = (1.0 / stiff.max(1e-300)).min(t_max / 8.0);
    let mut coarse = integrate(h)?;
    loop {
        let h_fine = 0.5 * h;
        if h_fine < 1e-12 * t_max {
            return Err(Error::StiffnessFailure(h_fine));
        }
        let fine = integrate(h_fine)?;
        let defect = coarse
            .iter()
            .zip(&fine)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0_f64, f64::max);
        if defect < tol {
            return Ok(OdeSolution {
                fields: fine.iter().map(|v| VertexField::from_interior(dom, v)).collect(),
                step: h_fine,
                defect,
            });
        }
        coarse = fine;
        h = h_fine;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_domain, WeightedGraph};

    fn path_domain(n: usize, omega: std::ops::Range<usize>) -> Arc<Domain> {
        let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1, 1.0)).collect();
        let g = Arc::new(WeightedGraph::from_edges(&edges, &vec![1.0; n]).unwrap());
        Arc::new(make_domain(g, omega).unwrap())
    }

    #[test]
    fn single_interior_basis() {
        let dom = path_domain(5, 1..4);
        let b = dirichlet_eigenbasis(&dom).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.eigenvalues()[0] - 2.0).abs() < 1e-14);
        assert!((b.eigenfields()[0][2] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn two_interior_eigenvalues() {
        let dom = path_domain(6, 1..5);
        let b = dirichlet_eigenbasis(&dom).unwrap();
        assert!((b.eigenvalues()[0] - 1.0).abs() < 1e-13);
        assert!((b.eigenvalues()[1] - 3.0).abs() < 1e-13);
        assert!(b.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn degenerate_pair_satisfies_invariants() {
        // Interior vertices 1 and 3, each with two exterior neighbours.
        let g = Arc::new(
            WeightedGraph::from_edges(
                &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (0, 5, 1.0), (2, 6, 1.0), (4, 7, 1.0)],
                &[1.0; 8],
            )
            .unwrap(),
        );
        let dom = Arc::new(make_domain(g, [0, 1, 2, 3, 4]).unwrap());
        assert_eq!(dom.interior(), &[1, 3]);
        let b = dirichlet_eigenbasis(&dom).unwrap();
        assert!((b.eigenvalues()[0] - 2.0).abs() < 1e-14 && (b.eigenvalues()[1] - 2.0).abs() < 1e-14);
        assert!(b.orthonormality_defect() < 1e-12);
        assert!(b.residuals().unwrap().iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn exact_single_interior_decay() {
        let dom = path_domain(5, 1..4);
        let b = dirichlet_eigenbasis(&dom).unwrap();
        let h = VertexField::indicator(5, 2);
        let exact = ExactP1::new(b.clone(), &h).unwrap();
        assert!((exact.coefficients()[0] - 3f64.sqrt()).abs() < 1e-14);
        let u = exact.at(1.0);
        assert!((u[2] - (-3.0f64).exp()).abs() < 1e-15);
        assert!((u[2] - 0.049_787_1).abs() < 1e-7);
        let u0 = exact_p1_solution(&b, &h, 0.0).unwrap();
        assert!((u0[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn oracle_p3_single_vertex() {
        // u̇ = −2u − u³, u(0) = 1 has u(t) = (1.5 e^{4t} − 0.5)^{−1/2}.
        let dom = path_domain(5, 1..4);
        let h = VertexField::indicator(5, 2);
        let prob = HeatProblem::new(dom, 3.0, &h, 1.0).unwrap();
        let out = ode_oracle(&prob, &[0.1, 0.0], 1e-12).unwrap();
        let exact = (1.5 * (0.4f64).exp() - 0.5).powf(-0.5);
        assert!((out[0][2] - exact).abs() < 1e-11, "{} vs {exact}", out[0][2]);
        assert!((out[0][2] - 0.758_591_496_401_549).abs() < 1e-11);
        assert_eq!(out[1][2], 1.0);
    }

    #[test]
    fn oracle_rejects_tiny_tolerance() {
        let dom = path_domain(5, 1..4);
        let prob = HeatProblem::new(dom, 1.0, &VertexField::zeros(5), 1.0).unwrap();
        assert!(ode_oracle(&prob, &[1.0], 1e-14).is_err());
        let out = ode_oracle(&prob, &[0.5, 1.0], 1e-10).unwrap();
        assert!(out.iter().all(|u| u.sup_norm() == 0.0));
    }
}
