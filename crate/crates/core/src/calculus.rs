//! Discrete calculus on weighted graphs: μ-Laplacian, gradient form Γ,
//! integrals, norms and inner products.
//!
//! All reductions run in ascending vertex-id order so results are
//! bit-reproducible.

use std::ops::Index;

use crate::error::{Error, Result};
use crate::graph::{Domain, VertexId, WeightedGraph};

/// A real value per materialized vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexField {
    values: Vec<f64>,
}

impl VertexField {
    pub fn zeros(n: usize) -> Self {
        VertexField { values: vec![0.0; n] }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite field value at vertex {k}"
            )));
        }
        Ok(VertexField { values })
    }

    /// Indicator of a single vertex.
    pub fn indicator(n: usize, v: VertexId) -> Self {
        let mut values = vec![0.0; n];
        values[v] = 1.0;
        VertexField { values }
    }

    pub fn from_fn(n: usize, f: impl FnMut(VertexId) -> f64) -> Self {
        VertexField {
            values: (0..n).map(f).collect(),
        }
    }

    /// Field that equals `interior_values[k]` at the k-th interior vertex of
    /// `dom` and 0 everywhere else.
    pub fn from_interior(dom: &Domain, interior_values: &[f64]) -> Self {
        let mut values = vec![0.0; dom.graph().num_vertices()];
        for (&v, &x) in dom.interior().iter().zip(interior_values) {
            values[v] = x;
        }
        VertexField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values at the interior vertices of `dom`, in unknown order.
    pub fn interior_values(&self, dom: &Domain) -> Vec<f64> {
        dom.interior().iter().map(|&v| self.values[v]).collect()
    }

    /// Copy that keeps only the values on Ω°.
    pub fn restricted_to_interior(&self, dom: &Domain) -> Self {
        VertexField::from_interior(dom, &self.interior_values(dom))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VertexField {
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &VertexField) -> Self {
        VertexField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &VertexField) -> Self {
        VertexField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|x| alpha * x)
    }
}

impl Index<VertexId> for VertexField {
    type Output = f64;

    fn index(&self, v: VertexId) -> &f64 {
        &self.values[v]
    }
}

fn check_len(g: &WeightedGraph, v: &VertexField) -> Result<()> {
    if v.len() != g.num_vertices() {
        return Err(Error::DomainMismatch(format!(
            "field has {} values, graph has {} vertices",
            v.len(),
            g.num_vertices()
        )));
    }
    Ok(())
}

/// Zero on V∖Ω°, i.e. a member of the Dirichlet space of `dom`.
pub fn is_admissible(dom: &Domain, v: &VertexField) -> bool {
    check_admissible(dom, v).is_ok()
}

pub fn check_admissible(dom: &Domain, v: &VertexField) -> Result<()> {
    let g = dom.graph();
    check_len(g, v)?;
    match (0..v.len()).find(|&x| v[x] != 0.0 && !dom.is_interior(x)) {
        Some(x) => Err(Error::NotDirichletAdmissible(g.label(x).to_string())),
        None => Ok(()),
    }
}

/// Δv(x) = (1/μ(x)) Σ_{y∼x} ω_xy (v(y) − v(x)).
pub fn laplacian(g: &WeightedGraph, v: &VertexField, at: VertexId) -> Result<f64> {
    check_len(g, v)?;
    g.require_complete(at)?;
    let vx = v[at];
    let s: f64 = g.neighbors(at).map(|(y, w)| w * (v[y] - vx)).sum();
    Ok(s / g.measure(at))
}

/// Γ(w, v)(x) = (1/2μ(x)) Σ_{y∼x} ω_xy (w(y) − w(x))(v(y) − v(x)).
pub fn gamma(g: &WeightedGraph, w: &VertexField, v: &VertexField, at: VertexId) -> Result<f64> {
    check_len(g, w)?;
    check_len(g, v)?;
    g.require_complete(at)?;
    let (wx, vx) = (w[at], v[at]);
    let s: f64 = g
        .neighbors(at)
        .map(|(y, o)| o * ((w[y] - wx) * (v[y] - vx)))
        .sum();
    Ok(s / (2.0 * g.measure(at)))
}

/// |∇v|(x) = √Γ(v, v)(x).
pub fn gradient_length(g: &WeightedGraph, v: &VertexField, at: VertexId) -> Result<f64> {
    Ok(gamma(g, v, v, at)?.sqrt())
}

/// Σ_{x ∈ over} μ(x) v(x), summed in ascending vertex order.
pub fn integrate(g: &WeightedGraph, v: &VertexField, over: &[VertexId]) -> Result<f64> {
    check_len(g, v)?;
    integrate_with(g, over, |x| v[x])
}

/// Σ_{x ∈ over} μ(x) f(x) in ascending vertex order.
pub fn integrate_with(
    g: &WeightedGraph,
    over: &[VertexId],
    f: impl Fn(VertexId) -> f64,
) -> Result<f64> {
    if let Some(&x) = over.iter().find(|&&x| x >= g.num_vertices()) {
        return Err(Error::UnknownVertex(x.to_string()));
    }
    let sum = |it: &mut dyn Iterator<Item = VertexId>| it.map(|x| g.measure(x) * f(x)).sum();
    if over.windows(2).all(|w| w[0] < w[1]) {
        Ok(sum(&mut over.iter().copied()))
    } else {
        let mut sorted = over.to_vec();
        sorted.sort_unstable();
        Ok(sum(&mut sorted.into_iter()))
    }
}

/// ∫_Ω |∇v|² dμ = Σ_{x∈Ω} μ(x) Γ(v,v)(x).
pub fn gradient_energy(dom: &Domain, v: &VertexField) -> Result<f64> {
    let g = dom.graph();
    let mut s = 0.0;
    for &x in dom.omega() {
        s += g.measure(x) * gamma(g, v, v, x)?;
    }
    Ok(s)
}

/// ‖v‖_{L^q(S)} for q ∈ [1, ∞]; q = ∞ is the exact supremum over S.
pub fn lq_norm(g: &WeightedGraph, v: &VertexField, over: &[VertexId], q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidQ(q));
    }
    check_len(g, v)?;
    if q.is_infinite() {
        return Ok(over.iter().fold(0.0, |m, &x| m.max(v[x].abs())));
    }
    let s = integrate_with(g, over, |x| v[x].abs().powf(q))?;
    Ok(s.powf(1.0 / q))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    /// ‖v‖_{L²(Ω°)}
    pub l2_interior: f64,
    /// ‖v‖_{L²(Ω)}
    pub l2_domain: f64,
    /// ‖v‖_{L^q(Ω)} for the requested q
    pub lq: f64,
    /// ‖v‖_{W^{1,2}(Ω)}
    pub w12: f64,
    /// ‖∇v‖_{L²(Ω)}
    pub gradient_l2: f64,
}

pub fn norms(v: &VertexField, dom: &Domain, q: f64) -> Result<Norms> {
    let g = dom.graph();
    let lq = lq_norm(g, v, dom.omega(), q)?;
    let l2_interior = lq_norm(g, v, dom.interior(), 2.0)?;
    let mass = integrate_with(g, dom.omega(), |x| v[x] * v[x])?;
    let grad = gradient_energy(dom, v)?;
    Ok(Norms {
        l2_interior,
        l2_domain: mass.sqrt(),
        lq,
        w12: (grad + mass).sqrt(),
        gradient_l2: grad.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerProduct {
    /// ∫_{Ω°} w v dμ
    L2,
    /// ∫_Ω (Γ(w,v) + w v) dμ
    W12,
}

pub fn inner_product(
    w: &VertexField,
    v: &VertexField,
    dom: &Domain,
    kind: InnerProduct,
) -> Result<f64> {
    let g = dom.graph();
    check_len(g, w)?;
    check_len(g, v)?;
    match kind {
        InnerProduct::L2 => integrate_with(g, dom.interior(), |x| w[x] * v[x]),
        InnerProduct::W12 => {
            let mut s = 0.0;
            for &x in dom.omega() {
                s += g.measure(x) * (gamma(g, w, v, x)? + w[x] * v[x]);
            }
            Ok(s)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenResidual {
    /// −∫_{Ω°} Δv₁·v₂ dμ
    pub lhs: f64,
    /// ∫_Ω Γ(v₁, v₂) dμ
    pub rhs: f64,
    pub residual: f64,
}

/// Summation by parts for Dirichlet-admissible fields:
/// −∫_{Ω°} Δv₁·v₂ dμ = ∫_Ω Γ(v₁, v₂) dμ.
pub fn green_identity_check(dom: &Domain, v1: &VertexField, v2: &VertexField) -> Result<GreenResidual> {
    check_admissible(dom, v1)?;
    check_admissible(dom, v2)?;
    let g = dom.graph();
    let mut lhs = 0.0;
    for &x in dom.interior() {
        lhs -= g.measure(x) * laplacian(g, v1, x)? * v2[x];
    }
    let mut rhs = 0.0;
    for &x in dom.omega() {
        rhs += g.measure(x) * gamma(g, v1, v2, x)?;
    }
    Ok(GreenResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_domain, WeightedGraph};
    use std::sync::Arc;

    fn path(n: usize) -> Arc<WeightedGraph> {
        let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1, 1.0)).collect();
        Arc::new(WeightedGraph::from_edges(&edges, &vec![1.0; n]).unwrap())
    }

    #[test]
    fn laplacian_on_path() {
        let g = path(3);
        let v = VertexField::indicator(3, 1);
        assert_eq!(laplacian(&g, &v, 1).unwrap(), -2.0);
        assert_eq!(laplacian(&g, &v, 0).unwrap(), 1.0);
        let c = VertexField::from_fn(3, |_| 4.5);
        for x in 0..3 {
            assert_eq!(laplacian(&g, &c, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn gamma_on_path() {
        let g = path(3);
        let v = VertexField::indicator(3, 1);
        assert_eq!(gamma(&g, &v, &v, 1).unwrap(), 1.0);
        assert_eq!(gamma(&g, &v, &v, 0).unwrap(), 0.5);
        let c = VertexField::from_fn(3, |_| -1.0);
        assert_eq!(gamma(&g, &c, &c, 2).unwrap(), 0.0);
    }

    #[test]
    fn integrals() {
        let g = path(3);
        let one = VertexField::from_fn(3, |_| 1.0);
        assert_eq!(integrate(&g, &one, &[0, 1, 2]).unwrap(), 3.0);
        assert_eq!(integrate(&g, &one, &[]).unwrap(), 0.0);
        let g = WeightedGraph::from_edges(&[(0, 1, 1.0), (1, 2, 1.0)], &[2.0, 3.0, 4.0]).unwrap();
        assert_eq!(integrate(&g, &one, &[2, 0, 1]).unwrap(), 9.0);
    }

    #[test]
    fn norms_of_indicator() {
        let g = path(3);
        let dom = make_domain(g, [0, 1, 2]).unwrap();
        let v = VertexField::indicator(3, 1);
        let n = norms(&v, &dom, 2.0).unwrap();
        assert_eq!(n.l2_domain, 1.0);
        assert!((n.gradient_l2 * n.gradient_l2 - 2.0).abs() < 1e-15);
        assert!((n.w12 - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(norms(&v, &dom, f64::INFINITY).unwrap().lq, 1.0);
        let z = norms(&VertexField::zeros(3), &dom, 3.0).unwrap();
        assert_eq!(z, Norms { l2_interior: 0.0, l2_domain: 0.0, lq: 0.0, w12: 0.0, gradient_l2: 0.0 });
        assert_eq!(norms(&v, &dom, 0.5), Err(Error::InvalidQ(0.5)));
    }

    #[test]
    fn inner_products() {
        let g = path(3);
        let dom = make_domain(g, [0, 1, 2]).unwrap();
        let v = VertexField::indicator(3, 1);
        assert_eq!(inner_product(&v, &v, &dom, InnerProduct::W12).unwrap(), 3.0);
        let a = VertexField::indicator(3, 0);
        let b = VertexField::indicator(3, 2);
        assert_eq!(inner_product(&a, &b, &dom, InnerProduct::L2).unwrap(), 0.0);
        let l2 = norms(&v, &dom, 2.0).unwrap().l2_interior;
        assert_eq!(inner_product(&v, &v, &dom, InnerProduct::L2).unwrap(), l2 * l2);
    }

    #[test]
    fn green_single_interior_vertex() {
        let g = path(5);
        let dom = make_domain(g, [1, 2, 3]).unwrap();
        let v = VertexField::indicator(5, 2);
        let r = green_identity_check(&dom, &v, &v).unwrap();
        assert_eq!(r.lhs, 2.0);
        assert_eq!(r.rhs, 2.0);
        assert_eq!(r.residual, 0.0);
        let z = VertexField::zeros(5);
        assert_eq!(green_identity_check(&dom, &z, &v).unwrap().residual, 0.0);
        let bad = VertexField::indicator(5, 1);
        assert!(matches!(
            green_identity_check(&dom, &bad, &v),
            Err(Error::NotDirichletAdmissible(_))
        ));
    }

    #[test]
    fn unmaterialized_neighbour_refused() {
        use crate::graph::{materialize_ball, Lattice};
        let lat = Lattice::z(1.0, 1.0);
        let g = materialize_ball(&lat, &[lat.origin()], 1).unwrap();
        let v = VertexField::zeros(g.num_vertices());
        let edge = g.vertex("2").unwrap();
        assert!(matches!(laplacian(&g, &v, edge), Err(Error::UnmaterializedNeighbor(_))));
    }
}
