//! Locally finite weighted graphs, subdomains and exhaustion sequences.
//!
//! Finite graphs are built explicitly from an edge list. Infinite graphs
//! (the integer lattices) are described by a [`NeighborOracle`] and only ever
//! materialized as a finite ball; vertices on the outermost shell of a ball
//! are kept but flagged as incomplete, and any operation that needs the full
//! neighbourhood of such a vertex refuses with
//! [`Error::UnmaterializedNeighbor`].

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type VertexId = usize;

/// External name of a vertex, kept for I/O.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexLabel {
    Name(String),
    Lattice(Vec<i64>),
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Name(s) => f.write_str(s),
            VertexLabel::Lattice(c) => {
                for (k, x) in c.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    FiniteExplicit,
    /// Finite ball of a generative graph; vertices farther than `radius`
    /// from the seeds are incomplete.
    Generative { name: String, radius: usize },
}

/// The quadruple (V, E, μ, ω) restricted to its materialized vertices.
///
/// Adjacency is stored in CSR form with neighbours sorted by id; every edge
/// is stored in both directions with a bit-identical weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<VertexLabel>,
    index: HashMap<String, VertexId>,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    weights: Vec<f64>,
    measure: Vec<f64>,
    complete: Vec<bool>,
    provenance: Provenance,
}

impl WeightedGraph {
    /// Build a finite graph on vertices `0..measure.len()` from an edge list.
    ///
    /// Each undirected edge may be listed once, or in both directions with the
    /// same weight.
    pub fn from_edges(edges: &[(VertexId, VertexId, f64)], measure: &[f64]) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for (v, &mu) in measure.iter().enumerate() {
            b.add_vertex(VertexLabel::Name(v.to_string()), mu)?;
        }
        for &(x, y, w) in edges {
            if x >= measure.len() {
                return Err(Error::UnknownVertex(x.to_string()));
            }
            if y >= measure.len() {
                return Err(Error::UnknownVertex(y.to_string()));
            }
            b.add_edge(x, y, w)?;
        }
        b.build()
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn label(&self, v: VertexId) -> &VertexLabel {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    /// Look a vertex up by the display form of its label.
    pub fn find(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn vertex(&self, label: &str) -> Result<VertexId> {
        self.find(label)
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn measure(&self, v: VertexId) -> f64 {
        self.measure[v]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    /// Neighbours of `v` with their edge weights, sorted by neighbour id.
    pub fn neighbors(&self, v: VertexId) -> impl ExactSizeIterator<Item = (VertexId, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn weighted_degree(&self, v: VertexId) -> f64 {
        self.neighbors(v).map(|(_, w)| w).sum()
    }

    pub fn weight(&self, x: VertexId, y: VertexId) -> Option<f64> {
        let r = self.offsets[x]..self.offsets[x + 1];
        self.targets[r.clone()]
            .binary_search(&y)
            .ok()
            .map(|k| self.weights[r.start + k])
    }

    /// Whether every neighbour of `v` in the underlying graph is materialized.
    pub fn is_complete(&self, v: VertexId) -> bool {
        self.complete[v]
    }

    pub fn require_complete(&self, v: VertexId) -> Result<()> {
        if self.complete[v] {
            Ok(())
        } else {
            Err(Error::UnmaterializedNeighbor(self.labels[v].to_string()))
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn components(&self) -> usize {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                for (y, _) in self.neighbors(x) {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        count
    }
}

#[derive(Clone, Copy)]
struct PendingEdge {
    weight: f64,
    forward: bool,
    backward: bool,
}

/// Incremental builder for finite explicit graphs.
#[derive(Default)]
pub struct GraphBuilder {
    labels: Vec<VertexLabel>,
    index: HashMap<String, VertexId>,
    measure: Vec<Option<f64>>,
    edges: BTreeMap<(VertexId, VertexId), PendingEdge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a vertex without a measure yet, returning its id. Existing
    /// labels return their id unchanged.
    pub fn intern(&mut self, label: VertexLabel) -> VertexId {
        let key = label.to_string();
        if let Some(&v) = self.index.get(&key) {
            return v;
        }
        let v = self.labels.len();
        self.labels.push(label);
        self.index.insert(key, v);
        self.measure.push(None);
        v
    }

    pub fn add_vertex(&mut self, label: VertexLabel, mu: f64) -> Result<VertexId> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::NonPositiveMeasure {
                vertex: label.to_string(),
                measure: mu,
            });
        }
        let v = self.intern(label);
        if self.measure[v].is_some() {
            return Err(Error::InvalidParameter(format!(
                "measure of vertex {} given twice",
                self.labels[v]
            )));
        }
        self.measure[v] = Some(mu);
        Ok(v)
    }

    pub fn add_edge(&mut self, x: VertexId, y: VertexId, weight: f64) -> Result<()> {
        let (lx, ly) = (self.labels[x].to_string(), self.labels[y].to_string());
        if x == y {
            return Err(Error::SelfLoop(lx));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight {
                from: lx,
                to: ly,
                weight,
            });
        }
        let forward = x < y;
        let key = (x.min(y), x.max(y));
        match self.edges.get_mut(&key) {
            None => {
                self.edges.insert(
                    key,
                    PendingEdge {
                        weight,
                        forward,
                        backward: !forward,
                    },
                );
            }
            Some(e) => {
                let seen = if forward { e.forward } else { e.backward };
                if seen {
                    return Err(Error::DuplicateEdge(lx, ly));
                }
                if e.weight.to_bits() != weight.to_bits() {
                    return Err(Error::AsymmetricWeight(lx, ly));
                }
                if forward {
                    e.forward = true;
                } else {
                    e.backward = true;
                }
            }
        }
        Ok(())
    }

    pub fn build(self) -> Result<WeightedGraph> {
        let n = self.labels.len();
        let mut measure = Vec::with_capacity(n);
        for (v, mu) in self.measure.iter().enumerate() {
            match mu {
                Some(m) => measure.push(*m),
                None => return Err(Error::MissingMeasure(self.labels[v].to_string())),
            }
        }
        let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n];
        for (&(x, y), e) in &self.edges {
            adjacency[x].push((y, e.weight));
            adjacency[y].push((x, e.weight));
        }
        let g = assemble(
            self.labels,
            self.index,
            adjacency,
            measure,
            vec![true; n],
            Provenance::FiniteExplicit,
        );
        if let Some(v) = (0..n).find(|&v| g.degree(v) == 0) {
            return Err(Error::IsolatedVertex(g.labels[v].to_string()));
        }
        if n == 0 {
            return Err(Error::EmptyScope);
        }
        let components = g.components();
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(g)
    }
}

fn assemble(
    labels: Vec<VertexLabel>,
    index: HashMap<String, VertexId>,
    mut adjacency: Vec<Vec<(VertexId, f64)>>,
    measure: Vec<f64>,
    complete: Vec<bool>,
    provenance: Provenance,
) -> WeightedGraph {
    let mut offsets = Vec::with_capacity(labels.len() + 1);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for adj in &mut adjacency {
        adj.sort_by_key(|&(y, _)| y);
        for &(y, w) in adj.iter() {
            targets.push(y);
            weights.push(w);
        }
        offsets.push(targets.len());
    }
    WeightedGraph {
        labels,
        index,
        offsets,
        targets,
        weights,
        measure,
        complete,
        provenance,
    }
}

/// Neighbour oracle of an infinite, locally finite graph whose vertices are
/// integer coordinate tuples.
pub trait NeighborOracle {
    fn name(&self) -> String;
    fn neighbors(&self, at: &[i64]) -> Vec<(Vec<i64>, f64)>;
    fn measure(&self, at: &[i64]) -> f64;
}

/// The integer lattice ℤ^d with nearest-neighbour edges and constant data.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub dim: usize,
    pub weight: f64,
    pub measure: f64,
}

impl Lattice {
    /// `lattice_z`
    pub fn z(weight: f64, measure: f64) -> Self {
        Lattice {
            dim: 1,
            weight,
            measure,
        }
    }

    /// `lattice_z2`
    pub fn z2(weight: f64, measure: f64) -> Self {
        Lattice {
            dim: 2,
            weight,
            measure,
        }
    }

    pub fn origin(&self) -> Vec<i64> {
        vec![0; self.dim]
    }
}

impl NeighborOracle for Lattice {
    fn name(&self) -> String {
        match self.dim {
            1 => "lattice_z".into(),
            2 => "lattice_z2".into(),
            d => format!("lattice_z{d}"),
        }
    }

    fn neighbors(&self, at: &[i64]) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for k in 0..self.dim {
            for step in [-1, 1] {
                let mut y = at.to_vec();
                y[k] += step;
                out.push((y, self.weight));
            }
        }
        out
    }

    fn measure(&self, _at: &[i64]) -> f64 {
        self.measure
    }
}

/// Materialize the ball of graph radius `radius + 1` around `seeds`.
///
/// Vertices within distance `radius` are complete; the outer shell is kept
/// so that boundaries of subdomains inside the ball are computed against the
/// ambient graph. Vertex ids follow the lexicographic order of coordinates.
pub fn materialize_ball(
    oracle: &dyn NeighborOracle,
    seeds: &[Vec<i64>],
    radius: usize,
) -> Result<WeightedGraph> {
    if seeds.is_empty() {
        return Err(Error::EmptyScope);
    }
    let mut dist: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        if dist.insert(s.clone(), 0).is_none() {
            queue.push_back(s.clone());
        }
    }
    let mut adjacency_by_coord: BTreeMap<Vec<i64>, Vec<(Vec<i64>, f64)>> = BTreeMap::new();
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        if d > radius {
            continue;
        }
        let nbrs = oracle.neighbors(&x);
        for (y, _) in &nbrs {
            if !dist.contains_key(y) {
                dist.insert(y.clone(), d + 1);
                queue.push_back(y.clone());
            }
        }
        adjacency_by_coord.insert(x, nbrs);
    }

    let coords: Vec<Vec<i64>> = dist.keys().cloned().collect();
    let id: HashMap<&Vec<i64>, VertexId> = coords.iter().enumerate().map(|(k, c)| (c, k)).collect();
    let n = coords.len();
    let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n];
    let mut seen: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
    for (x, nbrs) in &adjacency_by_coord {
        let ix = id[x];
        for (y, w) in nbrs {
            let iy = id[y];
            let label_x = VertexLabel::Lattice(x.clone()).to_string();
            let label_y = VertexLabel::Lattice(y.clone()).to_string();
            if ix == iy {
                return Err(Error::SelfLoop(label_x));
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::NonPositiveWeight {
                    from: label_x,
                    to: label_y,
                    weight: *w,
                });
            }
            let key = (ix.min(iy), ix.max(iy));
            match seen.get(&key) {
                Some(prev) if prev.to_bits() != w.to_bits() => {
                    return Err(Error::AsymmetricWeight(label_x, label_y));
                }
                Some(_) => {}
                None => {
                    seen.insert(key, *w);
                }
            }
        }
    }
    for (&(a, b), &w) in &seen {
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }

    let mut measure = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut index = HashMap::with_capacity(n);
    let mut complete = Vec::with_capacity(n);
    for (k, c) in coords.iter().enumerate() {
        let mu = oracle.measure(c);
        let label = VertexLabel::Lattice(c.clone());
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::NonPositiveMeasure {
                vertex: label.to_string(),
                measure: mu,
            });
        }
        measure.push(mu);
        index.insert(label.to_string(), k);
        labels.push(label);
        complete.push(dist[c] <= radius);
    }
    Ok(assemble(
        labels,
        index,
        adjacency,
        measure,
        complete,
        Provenance::Generative {
            name: oracle.name(),
            radius,
        },
    ))
}

/// μ₀ (infimum of the measure), M_d (maximal degree) and D_μ over a scope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphMetrics {
    pub mu0: f64,
    pub max_degree: usize,
    pub d_mu: f64,
}

pub fn compute_metrics(g: &WeightedGraph, scope: &[VertexId]) -> Result<GraphMetrics> {
    if scope.is_empty() {
        return Err(Error::EmptyScope);
    }
    let mut mu0 = f64::INFINITY;
    let mut max_degree = 0;
    let mut d_mu = 0.0_f64;
    for &v in scope {
        if v >= g.num_vertices() {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        g.require_complete(v)?;
        mu0 = mu0.min(g.measure(v));
        max_degree = max_degree.max(g.degree(v));
        d_mu = d_mu.max(g.weighted_degree(v) / g.measure(v));
    }
    Ok(GraphMetrics {
        mu0,
        max_degree,
        d_mu,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Outside,
    Boundary,
    Interior,
}

/// A vertex subset Ω with its boundary ∂Ω and interior Ω°, both taken
/// relative to the ambient graph.
#[derive(Clone, Debug)]
pub struct Domain {
    graph: Arc<WeightedGraph>,
    omega: Vec<VertexId>,
    boundary: Vec<VertexId>,
    interior: Vec<VertexId>,
    membership: Vec<Membership>,
    unknown: Vec<Option<usize>>,
}

impl Domain {
    pub fn graph(&self) -> &Arc<WeightedGraph> {
        &self.graph
    }

    /// Vertices of Ω in ascending id order.
    pub fn omega(&self) -> &[VertexId] {
        &self.omega
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior
    }

    pub fn membership(&self, v: VertexId) -> Membership {
        self.membership[v]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.membership[v] != Membership::Outside
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        self.membership[v] == Membership::Interior
    }

    /// Position of an interior vertex in the unknown vector used by solvers.
    pub fn unknown_index(&self, v: VertexId) -> Option<usize> {
        self.unknown[v]
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn has_empty_interior(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn require_interior(&self) -> Result<()> {
        if self.interior.is_empty() {
            Err(Error::EmptyInterior)
        } else {
            Ok(())
        }
    }

    pub fn same_graph(&self, other: &Domain) -> bool {
        Arc::ptr_eq(&self.graph, &other.graph) || *self.graph == *other.graph
    }
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.same_graph(other) && self.omega == other.omega
    }
}

/// Build the domain Ω = `omega` and derive ∂Ω and Ω°.
///
/// Every vertex of Ω must have its full neighbourhood materialized. An empty
/// interior is allowed here (and logged); problem constructors reject it.
pub fn make_domain(
    graph: Arc<WeightedGraph>,
    omega: impl IntoIterator<Item = VertexId>,
) -> Result<Domain> {
    let n = graph.num_vertices();
    let set: BTreeSet<VertexId> = omega.into_iter().collect();
    if set.is_empty() {
        return Err(Error::EmptyOmega);
    }
    let mut membership = vec![Membership::Outside; n];
    for &v in &set {
        if v >= n {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        graph.require_complete(v)?;
        membership[v] = Membership::Interior;
    }
    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    for &v in &set {
        if graph.neighbors(v).any(|(y, _)| !set.contains(&y)) {
            boundary.push(v);
        } else {
            interior.push(v);
        }
    }
    for &v in &boundary {
        membership[v] = Membership::Boundary;
    }
    let mut unknown = vec![None; n];
    for (k, &v) in interior.iter().enumerate() {
        unknown[v] = Some(k);
    }
    if interior.is_empty() {
        log::warn!("domain with {} vertices has an empty interior", set.len());
    }
    Ok(Domain {
        graph,
        omega: set.into_iter().collect(),
        boundary,
        interior,
        membership,
        unknown,
    })
}

/// Domain Ω = V on a finite graph.
pub fn whole_graph(graph: Arc<WeightedGraph>) -> Result<Domain> {
    let n = graph.num_vertices();
    make_domain(graph, 0..n)
}

/// The set Ω an exhaustion should increase to.
#[derive(Clone, Debug)]
pub enum Target {
    /// All of V (for a generative graph: the whole lattice).
    All,
    Vertices(BTreeSet<VertexId>),
}

impl Target {
    fn contains(&self, v: VertexId) -> bool {
        match self {
            Target::All => true,
            Target::Vertices(s) => s.contains(&v),
        }
    }
}

/// Nested finite domains Ω_1 ⊆ Ω_2 ⊆ … built as graph-distance balls around
/// a seed set, intersected with the target Ω.
#[derive(Clone, Debug)]
pub struct ExhaustionSequence {
    seed: Vec<VertexId>,
    levels: Vec<Domain>,
}

impl ExhaustionSequence {
    pub fn balls(
        graph: &Arc<WeightedGraph>,
        target: Target,
        seed: &[VertexId],
        max_level: usize,
    ) -> Result<Self> {
        if max_level == 0 {
            return Err(Error::InvalidParameter("max_level must be at least 1".into()));
        }
        if seed.is_empty() {
            return Err(Error::EmptyScope);
        }
        let n = graph.num_vertices();
        for &s in seed {
            if s >= n {
                return Err(Error::UnknownVertex(s.to_string()));
            }
            if !target.contains(s) {
                return Err(Error::SeedOutsideDomain(graph.label(s).to_string()));
            }
        }
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &s in seed {
            if dist[s] == usize::MAX {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            if dist[x] >= max_level {
                continue;
            }
            graph.require_complete(x)?;
            for (y, _) in graph.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let mut levels = Vec::with_capacity(max_level);
        for m in 1..=max_level {
            let members = (0..n).filter(|&v| dist[v] <= m && target.contains(v));
            levels.push(make_domain(Arc::clone(graph), members)?);
        }
        let mut seed = seed.to_vec();
        seed.sort_unstable();
        seed.dedup();
        Ok(ExhaustionSequence { seed, levels })
    }

    pub fn seed(&self) -> &[VertexId] {
        &self.seed
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    /// Ω_m for `m` in `1..=max_level`.
    pub fn level(&self, m: usize) -> &Domain {
        &self.levels[m - 1]
    }

    pub fn levels(&self) -> impl Iterator<Item = (usize, &Domain)> {
        self.levels.iter().enumerate().map(|(k, d)| (k + 1, d))
    }

    /// First level whose interior is nonempty.
    pub fn first_usable(&self) -> Option<usize> {
        self.levels().find(|(_, d)| !d.has_empty_interior()).map(|(m, _)| m)
    }

    /// Smallest level containing `v`, if any.
    pub fn covering_level(&self, v: VertexId) -> Option<usize> {
        self.levels().find(|(_, d)| d.contains(v)).map(|(m, _)| m)
    }
}

/// Exhaustion of a finite domain by balls around `seed`.
pub fn exhaust(dom: &Domain, seed: &[VertexId], max_level: usize) -> Result<ExhaustionSequence> {
    ExhaustionSequence::balls(
        dom.graph(),
        Target::Vertices(dom.omega().iter().copied().collect()),
        seed,
        max_level,
    )
}

/// Random connected graphs for tests and benchmarks: a random spanning tree
/// plus extra random edges, with measures and weights drawn uniformly.
pub mod random {
    use super::*;
    use rand::Rng;

    pub struct RandomGraphSpec {
        pub vertices: usize,
        pub extra_edges: usize,
        pub measure: (f64, f64),
        pub weight: (f64, f64),
    }

    pub fn connected_graph<R: Rng>(rng: &mut R, spec: &RandomGraphSpec) -> WeightedGraph {
        let n = spec.vertices.max(2);
        let mut edges = BTreeMap::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.insert((u, v), rng.random_range(spec.weight.0..=spec.weight.1));
        }
        let mut attempts = 0;
        while edges.len() < n - 1 + spec.extra_edges && attempts < 20 * (spec.extra_edges + 1) {
            attempts += 1;
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            edges
                .entry((a.min(b), a.max(b)))
                .or_insert_with(|| rng.random_range(spec.weight.0..=spec.weight.1));
        }
        let list: Vec<_> = edges.into_iter().map(|((a, b), w)| (a, b, w)).collect();
        let measure: Vec<f64> = (0..n)
            .map(|_| rng.random_range(spec.measure.0..=spec.measure.1))
            .collect();
        WeightedGraph::from_edges(&list, &measure).expect("generated graph is valid")
    }

    /// Random Ω containing roughly `fraction` of the vertices, retried until
    /// its interior is nonempty.
    pub fn domain_with_interior<R: Rng>(
        rng: &mut R,
        graph: &Arc<WeightedGraph>,
        fraction: f64,
    ) -> Domain {
        let n = graph.num_vertices();
        for _ in 0..1000 {
            let omega: Vec<VertexId> = (0..n).filter(|_| rng.random_bool(fraction)).collect();
            if omega.is_empty() || omega.len() == n {
                continue;
            }
            if let Ok(d) = make_domain(Arc::clone(graph), omega) {
                if !d.has_empty_interior() {
                    return d;
                }
            }
        }
        // Fallback: a vertex and its neighbourhood, which has that vertex inside.
        let mut omega: Vec<VertexId> = graph.neighbors(0).map(|(y, _)| y).collect();
        omega.push(0);
        make_domain(Arc::clone(graph), omega).expect("closed neighbourhood is a valid domain")
    }
}
