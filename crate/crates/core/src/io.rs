//! Text formats for graphs, domains and fields, and CSV writers for results.
//!
//! Graph file:
//!
//! ```text
//! # comment
//! graph 3
//! v a 1.0
//! v b 2
//! v c 1
//! e a b 0.5
//! e b c 1
//! ```
//!
//! Domain files list `omega <id>` lines, field files `<id> <value>` lines
//! (unlisted vertices are zero). Numbers are written with Rust's shortest
//! round-trip formatting.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::calculus::{self, VertexField};
use crate::compare::{ErrorTable, RefinementPoint};
use crate::error::{Error, Result};
use crate::graph::{make_domain, Domain, GraphBuilder, VertexId, VertexLabel, WeightedGraph};
use crate::heat::{EstimateReport, RotheTrajectory, TimePartition};
use crate::spectral::SpectralBasis;
use crate::vi::VIRun;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (k + 1, line.split_whitespace().collect()))
    })
}

fn number(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut b = GraphBuilder::new();
    let mut header = false;
    let mut declared = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for (line, toks) in content_lines(text) {
        match toks.as_slice() {
            ["graph", hint] if !header => {
                hint.parse::<usize>()
                    .map_err(|_| parse_err(line, format!("bad vertex-count hint `{hint}`")))?;
                header = true;
            }
            ["graph", ..] if header => return Err(parse_err(line, "repeated `graph` header")),
            _ if !header => return Err(parse_err(line, "file must start with `graph <num_vertices>`")),
            ["v", id, mu] => {
                if !declared.insert(id.to_string()) {
                    return Err(parse_err(line, format!("vertex `{id}` declared twice")));
                }
                b.add_vertex(VertexLabel::Name(id.to_string()), number(line, mu)?)
                    .map_err(|e| parse_err(line, e.to_string()))?;
            }
            ["e", x, y, w] => edges.push((line, x.to_string(), y.to_string(), number(line, w)?)),
            _ => return Err(parse_err(line, format!("unrecognised line `{}`", toks.join(" ")))),
        }
    }
    if !header {
        return Err(parse_err(0, "missing `graph` header"));
    }
    for (line, x, y, w) in edges {
        let xi = declared
            .contains(&x)
            .then(|| b.intern(VertexLabel::Name(x.clone())))
            .ok_or_else(|| parse_err(line, format!("edge refers to undeclared vertex `{x}`")))?;
        let yi = declared
            .contains(&y)
            .then(|| b.intern(VertexLabel::Name(y.clone())))
            .ok_or_else(|| parse_err(line, format!("edge refers to undeclared vertex `{y}`")))?;
        b.add_edge(xi, yi, w).map_err(|e| parse_err(line, e.to_string()))?;
    }
    b.build()
}

pub fn write_graph(g: &WeightedGraph) -> String {
    let mut s = format!("graph {}\n", g.num_vertices());
    for v in 0..g.num_vertices() {
        let _ = writeln!(s, "v {} {}", g.label(v), fmt_f64(g.measure(v)));
    }
    for x in 0..g.num_vertices() {
        for (y, w) in g.neighbors(x) {
            if x < y {
                let _ = writeln!(s, "e {} {} {}", g.label(x), g.label(y), fmt_f64(w));
            }
        }
    }
    s
}

pub fn parse_domain(text: &str, graph: &Arc<WeightedGraph>) -> Result<Domain> {
    let mut omega = Vec::new();
    for (line, toks) in content_lines(text) {
        match toks.as_slice() {
            ["omega", id] => omega.push(graph.vertex(id).map_err(|e| parse_err(line, e.to_string()))?),
            _ => return Err(parse_err(line, format!("expected `omega <id>`, found `{}`", toks.join(" ")))),
        }
    }
    make_domain(Arc::clone(graph), omega)
}

pub fn parse_field(text: &str, graph: &WeightedGraph) -> Result<VertexField> {
    let mut values = vec![0.0; graph.num_vertices()];
    let mut seen = vec![false; graph.num_vertices()];
    for (line, toks) in content_lines(text) {
        match toks.as_slice() {
            [id, value] => {
                let v = graph.vertex(id).map_err(|e| parse_err(line, e.to_string()))?;
                if std::mem::replace(&mut seen[v], true) {
                    return Err(parse_err(line, format!("vertex `{id}` listed twice")));
                }
                values[v] = number(line, value)?;
            }
            _ => return Err(parse_err(line, format!("expected `<vertex> <value>`, found `{}`", toks.join(" ")))),
        }
    }
    VertexField::from_values(values)
}

/// Nonzero entries only.
pub fn write_field(v: &VertexField, graph: &WeightedGraph) -> String {
    let mut s = String::new();
    for (x, &val) in v.values().iter().enumerate() {
        if val != 0.0 {
            let _ = writeln!(s, "{} {}", graph.label(x), fmt_f64(val));
        }
    }
    s
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    parse_graph(&read(path)?)
}

pub fn read_domain(path: &Path, graph: &Arc<WeightedGraph>) -> Result<Domain> {
    parse_domain(&read(path)?, graph)
}

pub fn read_field(path: &Path, graph: &WeightedGraph) -> Result<VertexField> {
    parse_field(&read(path)?, graph)
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

/// Shortest round-trip decimal; exponent form outside [1e-5, 1e16).
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `i,t_i,vertex,value` for every level and every interior vertex.
pub fn trajectory_csv(traj: &RotheTrajectory) -> String {
    let dom = traj.domain();
    let g = dom.graph();
    let part = traj.partition();
    let rows = traj.levels().iter().enumerate().flat_map(|(i, u)| {
        dom.interior().iter().map(move |&x| {
            vec![i.to_string(), fmt_f64(part.time(i)), g.label(x).to_string(), fmt_f64(u[x])]
        })
    });
    table(&["i", "t_i", "vertex", "value"], rows)
}

/// Read a trajectory written by [`trajectory_csv`] back onto `dom`. Rows must
/// cover every interior vertex at every level of a uniform partition.
pub fn parse_trajectory_csv(text: &str, dom: &Arc<Domain>) -> Result<RotheTrajectory> {
    let g = dom.graph();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut rows: Vec<(usize, f64, VertexId, f64)> = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() < 4 {
            return Err(parse_err(line, "expected columns i,t_i,vertex,value"));
        }
        let i: usize = rec[0].parse().map_err(|_| parse_err(line, "bad step index"))?;
        let x = g.find(&rec[2]).ok_or(Error::GraphMismatch)?;
        if !dom.is_interior(x) {
            return Err(Error::DomainMismatch(format!("vertex {} is not interior", &rec[2])));
        }
        rows.push((i, number(line, &rec[1])?, x, number(line, &rec[3])?));
    }
    let steps = rows.iter().map(|r| r.0).max().ok_or_else(|| parse_err(1, "empty trajectory"))?;
    let mut times = vec![f64::NAN; steps + 1];
    let mut levels = vec![vec![None; g.num_vertices()]; steps + 1];
    for &(i, t, x, v) in &rows {
        if !times[i].is_nan() && times[i] != t {
            return Err(Error::InvalidParameter(format!("level {i} has inconsistent times")));
        }
        times[i] = t;
        levels[i][x] = Some(v);
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("trajectory has no steps".into()));
    }
    let part = TimePartition::new(times[steps], steps)?;
    for (i, &t) in times.iter().enumerate() {
        if !((t - part.time(i)).abs() <= 1e-12 * part.horizon()) {
            return Err(Error::InvalidParameter(format!("level {i} is not on a uniform grid")));
        }
    }
    let levels = levels
        .into_iter()
        .enumerate()
        .map(|(i, vals)| {
            let mut out = vec![0.0; g.num_vertices()];
            for &x in dom.interior() {
                out[x] = vals[x].ok_or_else(|| {
                    Error::InvalidParameter(format!("level {i} is missing vertex {}", g.label(x)))
                })?;
            }
            VertexField::from_values(out)
        })
        .collect::<Result<Vec<_>>>()?;
    RotheTrajectory::new(Arc::clone(dom), part, levels)
}

pub fn estimates_csv(report: &EstimateReport) -> String {
    let rows = report.rows.iter().map(|r| {
        let mut row = vec![r.i.to_string()];
        row.extend(
            [r.l2, r.grad_l2, r.l2p, r.delta_l2, r.energy_residual, r.energy_defect]
                .iter()
                .map(|v| fmt_f64(*v)),
        );
        row
    });
    table(&["i", "l2", "grad_l2", "l2p", "delta_l2", "r_i", "d_i"], rows)
}

/// `t,l2_interior,grad_l2,lq,energy` with q = p + 1 and
/// energy = ½∫|∇u|² + (1/(p+1))∫|u|^{p+1}.
pub fn norms_csv(traj: &RotheTrajectory, p: f64) -> Result<String> {
    let dom = traj.domain();
    let mut rows = Vec::with_capacity(traj.levels().len());
    for (i, u) in traj.levels().iter().enumerate() {
        let n = calculus::norms(u, dom, p + 1.0)?;
        let energy = 0.5 * n.gradient_l2 * n.gradient_l2 + n.lq.powf(p + 1.0) / (p + 1.0);
        rows.push(
            [traj.partition().time(i), n.l2_interior, n.gradient_l2, n.lq, energy]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect(),
        );
    }
    Ok(table(&["t", "l2_interior", "grad_l2", "lq", "energy"], rows))
}

pub fn basis_csv(basis: &SpectralBasis) -> String {
    let rows = basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(j, l)| vec![(j + 1).to_string(), fmt_f64(*l)]);
    table(&["j", "lambda"], rows)
}

/// `j,lambda,residual` with the sup-norm eigen-equation residual.
pub fn basis_residuals_csv(basis: &SpectralBasis) -> Result<String> {
    let rows = basis
        .eigenvalues()
        .iter()
        .zip(basis.residuals()?)
        .enumerate()
        .map(|(j, (l, r))| vec![(j + 1).to_string(), fmt_f64(*l), fmt_f64(r)]);
    Ok(table(&["j", "lambda", "residual"], rows))
}

/// Trajectory schema plus per-step residual columns; KKT columns are empty
/// in the subspace case and at i = 0.
pub fn vi_csv(run: &VIRun) -> String {
    let traj = &run.trajectory;
    let dom = traj.domain();
    let g = dom.graph();
    let part = traj.partition();
    let rows = traj.levels().iter().enumerate().flat_map(|(i, u)| {
        let rep = i.checked_sub(1).map(|k| &run.reports[k]);
        let tail = [
            rep.map(|r| r.variational_residual),
            rep.and_then(|r| r.kkt).map(|k| k.primal),
            rep.and_then(|r| r.kkt).map(|k| k.dual),
            rep.and_then(|r| r.kkt).map(|k| k.complementarity),
        ];
        dom.interior().iter().map(move |&x| {
            let mut row = vec![i.to_string(), fmt_f64(part.time(i)), g.label(x).to_string(), fmt_f64(u[x])];
            row.extend(tail.iter().map(|v| opt(*v)));
            row
        })
    });
    table(
        &[
            "i",
            "t_i",
            "vertex",
            "value",
            "variational_residual",
            "kkt_primal",
            "kkt_dual",
            "kkt_complementarity",
        ],
        rows,
    )
}

pub fn error_table_csv(errors: &ErrorTable) -> String {
    let rows = errors
        .rows
        .iter()
        .map(|r| vec![fmt_f64(r.t), fmt_f64(r.l2), fmt_f64(r.sup)]);
    table(&["t", "l2", "sup"], rows)
}

pub fn refinement_csv(points: &[RefinementPoint]) -> String {
    let rows = points.iter().map(|p| {
        vec![p.steps.to_string(), fmt_f64(p.step_size), fmt_f64(p.error), opt(p.order)]
    });
    table(&["n", "step", "error", "order"], rows)
}
