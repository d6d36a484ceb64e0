//! Run configuration: JSON schema, flag overrides and the fail-fast
//! validation pass that loads every referenced input before solving.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rothe_core::graph::{materialize_ball, Domain, ExhaustionSequence, Lattice, Target, WeightedGraph};
use rothe_core::io;
use rothe_core::vi::{ConstantForcing, Constraint, Forcing, SeparableForcing, TableForcing, VIProblem};
use rothe_core::{make_domain, whole_graph, VertexField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::expr::Expr;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSource,
    #[serde(default)]
    pub domain: DomainSpec,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustion: Option<ExhaustionSpec>,
    #[serde(default)]
    pub compare_oracle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    File(PathBuf),
    LatticeZ(LatticeSpec),
    LatticeZ2(LatticeSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Vertices within this graph distance of the origin are materialized
    /// with complete neighbourhoods.
    pub radius: usize,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default = "one")]
    pub measure: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Every vertex (for lattices: every materialized complete vertex).
    #[default]
    All,
    File(PathBuf),
    Vertices(Vec<String>),
    Ball { center: String, radius: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Heat(HeatSpec),
    Vi(ViSpec),
    Spectral(SpectralSpec),
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Heat(_) => "heat",
            ProblemSpec::Vi(_) => "vi",
            ProblemSpec::Spectral(_) => "spectral",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSpec {
    pub p: f64,
    pub horizon: f64,
    pub steps: Steps,
    pub initial: FieldSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViSpec {
    pub horizon: f64,
    pub steps: Steps,
    #[serde(default)]
    pub initial: FieldSpec,
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub constraint: ConstraintSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Steps>,
}

/// A single step count or a refinement list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Steps {
    One(usize),
    Many(Vec<usize>),
}

impl Steps {
    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Steps::One(n) => vec![*n],
            Steps::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    #[default]
    Zero,
    File(PathBuf),
    Values(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Constant(FieldSpec),
    /// field(x)·time(t) with `time` a scalar expression in t.
    Separable { field: FieldSpec, time: String },
    Table(Vec<TableRow>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub t: f64,
    pub field: FieldSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    #[default]
    Subspace,
    Obstacle(FieldSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionSpec {
    pub seed: Vec<String>,
    pub levels: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub step_tolerance: f64,
    pub step_max_iterations: usize,
    pub oracle_tolerance: f64,
    pub obstacle_tolerance: f64,
    pub obstacle_max_sweeps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            step_tolerance: 1e-12,
            step_max_iterations: 100,
            oracle_tolerance: 1e-12,
            obstacle_tolerance: 1e-13,
            obstacle_max_sweeps: 200_000,
        }
    }
}

/// Scalar overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub p: Option<f64>,
    pub horizon: Option<f64>,
    pub steps: Option<Vec<usize>>,
    pub levels: Option<Vec<usize>>,
    pub initial: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub compare_oracle: bool,
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

/// Parse a configuration file. Relative paths inside it are resolved against
/// its directory.
pub fn load(path: &Path) -> Result<(RunConfig, PathBuf), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(p) = o.p {
            match &mut self.problem {
                ProblemSpec::Heat(h) => h.p = p,
                _ => return Err(config_err("--p applies only to heat problems")),
            }
        }
        if let Some(t) = o.horizon {
            match &mut self.problem {
                ProblemSpec::Heat(h) => h.horizon = t,
                ProblemSpec::Vi(v) => v.horizon = t,
                ProblemSpec::Spectral(s) => s.horizon = Some(t),
            }
        }
        if let Some(n) = &o.steps {
            let steps = if n.len() == 1 { Steps::One(n[0]) } else { Steps::Many(n.clone()) };
            match &mut self.problem {
                ProblemSpec::Heat(h) => h.steps = steps,
                ProblemSpec::Vi(v) => v.steps = steps,
                ProblemSpec::Spectral(s) => s.steps = Some(steps),
            }
        }
        if let Some(levels) = &o.levels {
            match &mut self.exhaustion {
                Some(e) => e.levels = levels.clone(),
                None => return Err(config_err("--levels needs an `exhaustion` section with a seed")),
            }
        }
        if let Some(path) = &o.initial {
            let spec = FieldSpec::File(path.clone());
            match &mut self.problem {
                ProblemSpec::Heat(h) => h.initial = spec,
                ProblemSpec::Vi(v) => v.initial = spec,
                ProblemSpec::Spectral(s) => s.initial = Some(spec),
            }
        }
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        self.compare_oracle |= o.compare_oracle;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output location.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let canon = serde_json::to_string(&c).expect("config serializes");
        hex(&Sha256::digest(canon.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub enum Job {
    Heat {
        p: f64,
        horizon: f64,
        steps: Vec<usize>,
        initial: VertexField,
    },
    Vi {
        problem: VIProblem,
        steps: Vec<usize>,
    },
    Spectral {
        evolution: Option<(VertexField, f64, usize)>,
    },
}

pub struct Plan {
    pub config: RunConfig,
    pub graph: Arc<WeightedGraph>,
    pub domain: Arc<Domain>,
    pub job: Job,
    pub exhaustion: Option<(ExhaustionSequence, Vec<usize>)>,
    /// SHA-256 of every input file, keyed by the path as written.
    pub inputs: BTreeMap<String, String>,
}

struct Loader<'a> {
    base: &'a Path,
    inputs: BTreeMap<String, String>,
}

impl Loader<'_> {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let full = if path.is_absolute() { path.to_path_buf() } else { self.base.join(path) };
        let text = std::fs::read_to_string(&full).map_err(|e| config_err(format!("{}: {e}", full.display())))?;
        self.inputs
            .insert(path.display().to_string(), hex(&Sha256::digest(text.as_bytes())));
        Ok(text)
    }

    fn field(&mut self, spec: &FieldSpec, g: &WeightedGraph, what: &str) -> Result<VertexField, CliError> {
        let ctx = |e: rothe_core::Error| config_err(format!("{what}: {e}"));
        match spec {
            FieldSpec::Zero => Ok(VertexField::zeros(g.num_vertices())),
            FieldSpec::File(p) => {
                let text = self.read(p)?;
                io::parse_field(&text, g).map_err(|e| config_err(format!("{what} ({}): {e}", p.display())))
            }
            FieldSpec::Values(map) => {
                let mut v = vec![0.0; g.num_vertices()];
                for (label, &val) in map {
                    v[g.vertex(label).map_err(ctx)?] = val;
                }
                VertexField::from_values(v).map_err(ctx)
            }
        }
    }
}

fn positive(x: f64, what: &str) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{what} must be positive, got {x}")))
    }
}

fn check_steps(steps: &[usize]) -> Result<(), CliError> {
    if steps.is_empty() {
        return Err(config_err("steps list is empty"));
    }
    if steps.contains(&0) {
        return Err(config_err("steps must be at least 1"));
    }
    let distinct: BTreeSet<_> = steps.iter().collect();
    if distinct.len() != steps.len() {
        return Err(config_err("steps list has repeated entries"));
    }
    Ok(())
}

/// Load and check every input. Nothing is solved here.
pub fn validate(config: RunConfig, base: &Path) -> Result<Plan, CliError> {
    let mut ld = Loader {
        base,
        inputs: BTreeMap::new(),
    };
    let tol = &config.tolerances;
    positive(tol.step_tolerance, "step_tolerance")?;
    positive(tol.oracle_tolerance, "oracle_tolerance")?;
    positive(tol.obstacle_tolerance, "obstacle_tolerance")?;
    if tol.oracle_tolerance < 1e-13 {
        return Err(config_err("oracle_tolerance below 1e-13 is not attainable in double precision"));
    }
    if tol.step_max_iterations == 0 || tol.obstacle_max_sweeps == 0 {
        return Err(config_err("iteration limits must be at least 1"));
    }

    let (graph, generative) = match &config.graph {
        GraphSource::File(p) => {
            let text = ld.read(p)?;
            let g = io::parse_graph(&text).map_err(|e| config_err(format!("graph ({}): {e}", p.display())))?;
            (g, false)
        }
        GraphSource::LatticeZ(s) | GraphSource::LatticeZ2(s) => {
            positive(s.weight, "lattice weight")?;
            positive(s.measure, "lattice measure")?;
            let lat = if matches!(config.graph, GraphSource::LatticeZ(_)) {
                Lattice::z(s.weight, s.measure)
            } else {
                Lattice::z2(s.weight, s.measure)
            };
            let g = materialize_ball(&lat, &[lat.origin()], s.radius).map_err(|e| config_err(format!("graph: {e}")))?;
            (g, true)
        }
    };
    let graph = Arc::new(graph);
    let gerr = |e: rothe_core::Error| config_err(format!("domain: {e}"));
    let domain = match &config.domain {
        DomainSpec::All if generative => {
            let complete = (0..graph.num_vertices()).filter(|&v| graph.is_complete(v));
            make_domain(Arc::clone(&graph), complete).map_err(gerr)?
        }
        DomainSpec::All => whole_graph(Arc::clone(&graph)).map_err(gerr)?,
        DomainSpec::File(p) => {
            let text = ld.read(p)?;
            io::parse_domain(&text, &graph).map_err(|e| config_err(format!("domain ({}): {e}", p.display())))?
        }
        DomainSpec::Vertices(ids) => {
            let ids = ids.iter().map(|s| graph.vertex(s)).collect::<Result<Vec<_>, _>>().map_err(gerr)?;
            make_domain(Arc::clone(&graph), ids).map_err(gerr)?
        }
        DomainSpec::Ball { center, radius } => {
            let c = graph.vertex(center).map_err(gerr)?;
            let exh = ExhaustionSequence::balls(&graph, Target::All, &[c], (*radius).max(1)).map_err(gerr)?;
            if *radius == 0 {
                make_domain(Arc::clone(&graph), [c]).map_err(gerr)?
            } else {
                exh.level(*radius).clone()
            }
        }
    };
    let domain = Arc::new(domain);

    let exhaustion = match &config.exhaustion {
        None => None,
        Some(spec) => {
            if spec.levels.is_empty() || spec.levels.contains(&0) {
                return Err(config_err("exhaustion levels must be a nonempty list of positive integers"));
            }
            if matches!(config.problem, ProblemSpec::Spectral(_)) {
                return Err(config_err("exhaustion studies apply to heat and vi problems"));
            }
            let seed = spec
                .seed
                .iter()
                .map(|s| graph.vertex(s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| config_err(format!("exhaustion seed: {e}")))?;
            let target = match (&config.domain, generative) {
                (DomainSpec::All, _) => Target::All,
                _ => Target::Vertices(domain.omega().iter().copied().collect()),
            };
            let top = spec.levels.iter().max().copied().unwrap_or(1) + 1;
            let exh = ExhaustionSequence::balls(&graph, target, &seed, top)
                .map_err(|e| config_err(format!("exhaustion up to level {top}: {e}")))?;
            for &m in &spec.levels {
                if exh.level(m).has_empty_interior() {
                    return Err(config_err(format!("exhaustion level {m} has an empty interior")));
                }
            }
            Some((exh, spec.levels.clone()))
        }
    };

    let needs_interior = |d: &Domain| {
        if d.has_empty_interior() {
            Err(config_err("domain has an empty interior"))
        } else {
            Ok(())
        }
    };
    let job = match &config.problem {
        ProblemSpec::Heat(h) => {
            if !(h.p >= 1.0 && h.p.is_finite()) {
                return Err(config_err(format!("p must be at least 1, got {}", h.p)));
            }
            positive(h.horizon, "horizon")?;
            let steps = h.steps.to_vec();
            check_steps(&steps)?;
            if exhaustion.is_some() && steps.len() != 1 {
                return Err(config_err("exhaustion studies use a single step count"));
            }
            if exhaustion.is_none() {
                needs_interior(&domain)?;
            }
            let initial = ld.field(&h.initial, &graph, "initial")?;
            Job::Heat {
                p: h.p,
                horizon: h.horizon,
                steps,
                initial,
            }
        }
        ProblemSpec::Vi(v) => {
            positive(v.horizon, "horizon")?;
            let steps = v.steps.to_vec();
            check_steps(&steps)?;
            if exhaustion.is_some() && steps.len() != 1 {
                return Err(config_err("exhaustion studies use a single step count"));
            }
            if let Some(c) = v.lipschitz_bound {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(config_err(format!("lipschitz_bound must be non-negative, got {c}")));
                }
            }
            let initial = ld.field(&v.initial, &graph, "initial")?;
            let forcing: Arc<dyn Forcing> = match &v.forcing {
                ForcingSpec::Constant(f) => Arc::new(ConstantForcing(ld.field(f, &graph, "forcing")?)),
                ForcingSpec::Separable { field, time } => {
                    let expr = Expr::parse(time).map_err(|e| config_err(format!("forcing time expression: {e}")))?;
                    let field = ld.field(field, &graph, "forcing")?;
                    for k in 0..=64 {
                        let t = v.horizon * k as f64 / 64.0;
                        if !expr.eval(t).is_finite() {
                            return Err(config_err(format!("forcing time expression is not finite at t = {t}")));
                        }
                    }
                    Arc::new(SeparableForcing {
                        field,
                        time: Box::new(move |t| expr.eval(t)),
                    })
                }
                ForcingSpec::Table(rows) => {
                    let rows = rows
                        .iter()
                        .map(|r| Ok((r.t, ld.field(&r.field, &graph, "forcing table")?)))
                        .collect::<Result<Vec<_>, CliError>>()?;
                    Arc::new(TableForcing::new(rows).map_err(|e| config_err(format!("forcing: {e}")))?)
                }
            };
            let constraint = match &v.constraint {
                ConstraintSpec::Subspace => Constraint::Subspace,
                ConstraintSpec::Obstacle(f) => {
                    let psi = ld.field(f, &graph, "obstacle")?;
                    let bad = domain.interior().iter().find(|&&x| initial[x] < psi[x]);
                    if let Some(&x) = bad {
                        return Err(config_err(format!(
                            "initial value at {} lies below the obstacle",
                            graph.label(x)
                        )));
                    }
                    Constraint::Obstacle(psi)
                }
            };
            let problem = if exhaustion.is_none() {
                needs_interior(&domain)?;
                VIProblem::new(Arc::clone(&domain), forcing, &initial, v.horizon, constraint)
            } else {
                let first = &exhaustion.as_ref().expect("checked").0;
                VIProblem::new(Arc::new(first.level(first.max_level()).clone()), forcing, &initial, v.horizon, constraint)
            }
            .map_err(|e| config_err(format!("vi problem: {e}")))?;
            let problem = match v.lipschitz_bound {
                Some(c) => problem.with_lipschitz_bound(c),
                None => problem,
            };
            Job::Vi { problem, steps }
        }
        ProblemSpec::Spectral(s) => {
            needs_interior(&domain)?;
            if domain.num_interior() > 4000 {
                return Err(config_err(format!(
                    "dense eigensolver limited to 4000 interior vertices, domain has {}",
                    domain.num_interior()
                )));
            }
            let evolution = match (&s.initial, s.horizon, &s.steps) {
                (None, None, None) => None,
                (Some(init), Some(t), Some(steps)) => {
                    positive(t, "horizon")?;
                    let steps = steps.to_vec();
                    if steps.len() != 1 {
                        return Err(config_err("spectral evolution takes a single step count"));
                    }
                    check_steps(&steps)?;
                    Some((ld.field(init, &graph, "initial")?, t, steps[0]))
                }
                _ => return Err(config_err("spectral evolution needs initial, horizon and steps together")),
            };
            Job::Spectral { evolution }
        }
    };

    Ok(Plan {
        config,
        graph,
        domain,
        job,
        exhaustion,
        inputs: ld.inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> RunConfig {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn schema_examples() {
        let c = parse(
            r#"{"graph": {"lattice_z": {"radius": 30}},
                "problem": {"kind": "heat", "p": 1, "horizon": 1, "steps": 200, "initial": {"values": {"0": 1}}},
                "exhaustion": {"seed": ["0"], "levels": [5, 10]}}"#,
        );
        assert_eq!(c.domain, DomainSpec::All);
        assert!(matches!(c.problem, ProblemSpec::Heat(HeatSpec { steps: Steps::One(200), .. })));
        let c = parse(
            r#"{"graph": {"file": "g.txt"}, "domain": {"vertices": ["1", "2"]},
                "problem": {"kind": "vi", "horizon": 1, "steps": [10, 20],
                            "forcing": {"separable": {"field": {"file": "chi.txt"}, "time": "t"}},
                            "constraint": {"obstacle": "zero"}}}"#,
        );
        assert!(matches!(c.problem, ProblemSpec::Vi(ViSpec { constraint: ConstraintSpec::Obstacle(FieldSpec::Zero), .. })));
        assert!(serde_json::from_str::<RunConfig>(r#"{"graph": {"file": "g"}, "problem": {"kind": "heat"}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(
            r#"{"graph": {"file": "g"}, "bogus": 1, "problem": {"kind": "spectral"}}"#
        )
        .is_err());
    }

    #[test]
    fn overrides_and_hash() {
        let mut c = parse(r#"{"graph": {"file": "g"}, "problem": {"kind": "heat", "p": 2, "horizon": 1, "steps": 4, "initial": "zero"}}"#);
        let h0 = c.hash();
        c.apply(&Overrides {
            output: Some("elsewhere".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.hash(), h0);
        c.apply(&Overrides {
            p: Some(0.5),
            steps: Some(vec![10, 20]),
            ..Default::default()
        })
        .unwrap();
        assert_ne!(c.hash(), h0);
        assert!(matches!(&c.problem, ProblemSpec::Heat(h) if h.p == 0.5 && h.steps == Steps::Many(vec![10, 20])));
        assert!(c
            .apply(&Overrides {
                levels: Some(vec![3]),
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn validation_rejects_small_p() {
        let c = parse(
            r#"{"graph": {"lattice_z": {"radius": 4}}, "domain": {"ball": {"center": "0", "radius": 2}},
                "problem": {"kind": "heat", "p": 0.5, "horizon": 1, "steps": 4, "initial": "zero"}}"#,
        );
        assert!(matches!(validate(c, Path::new(".")), Err(CliError::Config(_))));
    }
}
