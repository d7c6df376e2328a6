//! Serialization of graphs, packings, sweeps and reports.
//!
//! Every artifact carries a [`RunManifest`]. Graphs have two encodings: a
//! JSON document and a line-oriented text format
//!
//! ```text
//! # manifest {...}
//! # meta {...}
//! # labels ["0","1","2"]
//! parts 3 sizes 2 2 2
//! v <part> <index> <coords...>
//! e <u> <v> [<kappa> <l>]
//! ```
//!
//! where `#` lines are optional and `v` lines list vertices in global order.
//! Floats are written so that parsing returns the identical bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{malformed, Result};
use crate::estimate::SweepRow;
use crate::geometry::{DirectionPacking, UnitVector};
use crate::graph::{Edge, EdgeColour, GraphMeta, Part, PartiteGeometricGraph, Vertex};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A scalar manifest parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    UInt(u64),
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl From<u64> for Scalar {
    fn from(v: u64) -> Self {
        Scalar::UInt(v)
    }
}

impl From<usize> for Scalar {
    fn from(v: usize) -> Self {
        Scalar::UInt(v as u64)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Text(v)
    }
}

/// Wall-clock bounds of a run, in seconds since the Unix epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started: u64,
    pub finished: u64,
}

/// Everything needed to replay the run that produced an artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, Scalar>,
    pub root_seed: u64,
    pub artifact_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, root_seed: u64) -> Self {
        Self {
            command: command.into(),
            parameters: BTreeMap::new(),
            root_seed,
            artifact_version: ARTIFACT_VERSION.to_string(),
            timestamps: None,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Scalar>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Scalar>) {
        self.parameters.insert(key.to_string(), value.into());
    }
}

/// An artifact body together with its manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct VertexRecord {
    id: usize,
    index: usize,
    coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PartRecord {
    label: String,
    vertices: Vec<VertexRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphRecord {
    manifest: RunManifest,
    meta: GraphMeta,
    parts: Vec<PartRecord>,
    edges: Vec<Edge>,
}

fn json_error(e: serde_json::Error) -> crate::Error {
    malformed(
        format!("line {}, column {}", e.line(), e.column()),
        e.to_string(),
    )
}

fn graph_error(e: crate::Error) -> crate::Error {
    match e {
        crate::Error::InvalidArgument(msg) => malformed("edges", msg),
        other => other,
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn document_to_json<T: Serialize>(manifest: &RunManifest, body: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        manifest: &'a RunManifest,
        #[serde(flatten)]
        body: &'a T,
    }
    to_json(&Borrowed { manifest, body })
}

pub fn graph_to_json(g: &PartiteGeometricGraph, manifest: &RunManifest) -> Result<String> {
    let mut id = 0;
    let parts = g
        .parts()
        .iter()
        .map(|p| PartRecord {
            label: p.label.clone(),
            vertices: p
                .vertices
                .iter()
                .map(|v| {
                    id += 1;
                    VertexRecord {
                        id: id - 1,
                        index: v.index,
                        coords: v.coords.clone(),
                    }
                })
                .collect(),
        })
        .collect();
    to_json(&GraphRecord {
        manifest: manifest.clone(),
        meta: g.meta.clone(),
        parts,
        edges: g.edges().to_vec(),
    })
}

pub fn graph_from_json(text: &str) -> Result<(RunManifest, PartiteGeometricGraph)> {
    let record: GraphRecord = from_json(text)?;
    let mut next = 0;
    let mut parts = Vec::with_capacity(record.parts.len());
    for (p, part) in record.parts.into_iter().enumerate() {
        let mut vertices = Vec::with_capacity(part.vertices.len());
        for (i, v) in part.vertices.into_iter().enumerate() {
            if v.id != next {
                return Err(malformed(
                    format!("parts[{p}].vertices[{i}].id"),
                    format!("expected id {next}, found {}", v.id),
                ));
            }
            next += 1;
            vertices.push(Vertex {
                index: v.index,
                coords: v.coords,
            });
        }
        parts.push(Part {
            label: part.label,
            vertices,
        });
    }
    let g = PartiteGeometricGraph::new(parts, record.edges, record.meta).map_err(graph_error)?;
    Ok((record.manifest, g))
}

/// Writes `x` with 17 significant digits, enough to recover its exact bits.
fn push_float(out: &mut String, x: f64) {
    let _ = write!(out, " {x:.16e}");
}

pub fn graph_to_flat(g: &PartiteGeometricGraph, manifest: &RunManifest) -> Result<String> {
    let mut out = String::new();
    let labels: Vec<&str> = g.parts().iter().map(|p| p.label.as_str()).collect();
    let _ = writeln!(out, "# manifest {}", serde_json::to_string(manifest)?);
    let _ = writeln!(out, "# meta {}", serde_json::to_string(&g.meta)?);
    let _ = writeln!(out, "# labels {}", serde_json::to_string(&labels)?);
    let _ = write!(out, "parts {} sizes", g.part_count());
    for size in g.part_sizes() {
        let _ = write!(out, " {size}");
    }
    out.push('\n');
    for v in 0..g.vertex_count() {
        let vertex = g.vertex(v);
        let _ = write!(out, "v {} {}", g.part_of(v), vertex.index);
        for &x in &vertex.coords {
            push_float(&mut out, x);
        }
        out.push('\n');
    }
    for e in g.edges() {
        let _ = write!(out, "e {} {}", e.u, e.v);
        if let Some(c) = e.colour {
            let _ = write!(out, " {} {}", c.kappa, c.l);
        }
        out.push('\n');
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, name: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| malformed(format!("line {line}"), format!("missing {name}")))?;
    tok.parse()
        .map_err(|_| malformed(format!("line {line}"), format!("bad {name} '{tok}'")))
}

/// Parses the text format. The manifest is absent when the file has no
/// `# manifest` line.
pub fn graph_from_flat(text: &str) -> Result<(Option<RunManifest>, PartiteGeometricGraph)> {
    let mut manifest = None;
    let mut meta = GraphMeta {
        kind: "imported".into(),
        ..GraphMeta::default()
    };
    let mut labels: Option<Vec<String>> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut parts: Vec<Part> = Vec::new();
    let mut part_of = Vec::new();
    let mut edges = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let at = || format!("line {line}");
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim_start();
            let parse_json = |body: &str| -> Result<serde_json::Value> {
                serde_json::from_str(body).map_err(|e| malformed(at(), e.to_string()))
            };
            if let Some(body) = comment.strip_prefix("manifest ") {
                manifest = Some(
                    serde_json::from_value(parse_json(body)?)
                        .map_err(|e| malformed(at(), e.to_string()))?,
                );
            } else if let Some(body) = comment.strip_prefix("meta ") {
                meta = serde_json::from_value(parse_json(body)?)
                    .map_err(|e| malformed(at(), e.to_string()))?;
            } else if let Some(body) = comment.strip_prefix("labels ") {
                labels = Some(
                    serde_json::from_value(parse_json(body)?)
                        .map_err(|e| malformed(at(), e.to_string()))?,
                );
            }
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        match tokens.next() {
            Some("parts") => {
                if sizes.is_some() {
                    return Err(malformed(at(), "second parts header"));
                }
                let s: usize = field(tokens.next(), line, "part count")?;
                let mut rest: Vec<&str> = tokens.collect();
                if rest.first() == Some(&"sizes") {
                    rest.remove(0);
                }
                if rest.len() != s {
                    return Err(malformed(
                        at(),
                        format!("{s} parts declared but {} sizes given", rest.len()),
                    ));
                }
                let list = rest
                    .into_iter()
                    .map(|t| field(Some(t), line, "part size"))
                    .collect::<Result<Vec<usize>>>()?;
                let names = match &labels {
                    Some(l) if l.len() == s => l.clone(),
                    Some(l) => {
                        return Err(malformed(at(), format!("{} labels for {s} parts", l.len())))
                    }
                    None => (0..s).map(|p| p.to_string()).collect(),
                };
                parts = names
                    .into_iter()
                    .zip(&list)
                    .map(|(label, &n)| Part {
                        label,
                        vertices: Vec::with_capacity(n),
                    })
                    .collect();
                sizes = Some(list);
            }
            Some("v") => {
                let sizes = sizes
                    .as_ref()
                    .ok_or_else(|| malformed(at(), "vertex before parts header"))?;
                if !edges.is_empty() {
                    return Err(malformed(at(), "vertex after the first edge"));
                }
                let p: usize = field(tokens.next(), line, "part")?;
                if p >= sizes.len() {
                    return Err(malformed(at(), format!("part {p} out of range")));
                }
                if part_of.last().is_some_and(|&q| q > p) {
                    return Err(malformed(at(), "vertices must be grouped by part"));
                }
                if parts[p].vertices.len() == sizes[p] {
                    return Err(malformed(
                        at(),
                        format!("part {p} has more than {} vertices", sizes[p]),
                    ));
                }
                let index: usize = field(tokens.next(), line, "index")?;
                let coords = tokens
                    .map(|t| field(Some(t), line, "coordinate"))
                    .collect::<Result<Vec<f64>>>()?;
                part_of.push(p);
                parts[p].vertices.push(Vertex { index, coords });
            }
            Some("e") => {
                let sizes = sizes
                    .as_ref()
                    .ok_or_else(|| malformed(at(), "edge before parts header"))?;
                if let Some(p) = (0..sizes.len()).find(|&p| parts[p].vertices.len() != sizes[p]) {
                    return Err(malformed(
                        at(),
                        format!(
                            "part {p} declares {} vertices but lists {}",
                            sizes[p],
                            parts[p].vertices.len()
                        ),
                    ));
                }
                let u = field(tokens.next(), line, "u")?;
                let v = field(tokens.next(), line, "v")?;
                let rest: Vec<&str> = tokens.collect();
                let colour = match rest.as_slice() {
                    [] => None,
                    [k, l] => Some(EdgeColour {
                        kappa: field(Some(k), line, "kappa")?,
                        l: field(Some(l), line, "l")?,
                    }),
                    _ => return Err(malformed(at(), "edge colour needs exactly two fields")),
                };
                edges.push(Edge { u, v, colour });
            }
            Some(other) => return Err(malformed(at(), format!("unknown record '{other}'"))),
            None => unreachable!("blank lines are skipped"),
        }
    }
    let sizes = sizes.ok_or_else(|| malformed("end of input", "missing parts header"))?;
    if let Some(p) = (0..sizes.len()).find(|&p| parts[p].vertices.len() != sizes[p]) {
        return Err(malformed(
            "end of input",
            format!(
                "part {p} declares {} vertices but lists {}",
                sizes[p],
                parts[p].vertices.len()
            ),
        ));
    }
    let g = PartiteGeometricGraph::new(parts, edges, meta).map_err(graph_error)?;
    Ok((manifest, g))
}

/// Reads either encoding, choosing JSON when the first non-blank character
/// is `{`.
pub fn read_graph(text: &str) -> Result<(Option<RunManifest>, PartiteGeometricGraph)> {
    if text.trim_start().starts_with('{') {
        graph_from_json(text).map(|(m, g)| (Some(m), g))
    } else {
        graph_from_flat(text)
    }
}

/// A packing as a one-part graph with no edges.
pub fn packing_to_graph(packing: &DirectionPacking) -> PartiteGeometricGraph {
    let part = Part {
        label: "packing".into(),
        vertices: packing
            .points
            .iter()
            .enumerate()
            .map(|(index, q)| Vertex {
                index,
                coords: q.coords().to_vec(),
            })
            .collect(),
    };
    let meta = GraphMeta {
        kind: "packing".into(),
        d: Some(packing.dimension),
        separation: Some(packing.separation),
        ..GraphMeta::default()
    };
    PartiteGeometricGraph::new(vec![part], Vec::new(), meta).expect("edgeless graph is valid")
}

pub fn packing_from_graph(g: &PartiteGeometricGraph) -> Result<DirectionPacking> {
    if g.part_count() != 1 || g.edge_count() != 0 {
        return Err(malformed(
            "parts",
            "a packing is a single part without edges",
        ));
    }
    let separation = g
        .meta
        .separation
        .ok_or_else(|| malformed("meta.separation", "missing"))?;
    let dimension = g.meta.d.ok_or_else(|| malformed("meta.d", "missing"))?;
    let points = g.parts()[0]
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.coords.len() != dimension + 1 {
                return Err(malformed(
                    format!("parts[0].vertices[{i}].coords"),
                    format!("expected {} coordinates", dimension + 1),
                ));
            }
            UnitVector::new(v.coords.clone())
                .map_err(|e| malformed(format!("parts[0].vertices[{i}].coords"), e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DirectionPacking {
        dimension,
        separation,
        points,
    })
}

/// Sweep rows as CSV, preceded by a `# manifest` comment line.
pub fn sweep_to_csv(rows: &[SweepRow], manifest: &RunManifest) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    if rows.is_empty() {
        writer.write_record(["N", "d", "c", "seed", "vertices", "cliques", "violations"])?;
    }
    let body = writer
        .into_inner()
        .map_err(|e| crate::Error::Io(e.into_error()))?;
    let mut out = format!("# manifest {}\n", serde_json::to_string(manifest)?);
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(out)
}

pub fn sweep_from_csv(text: &str) -> Result<(Option<RunManifest>, Vec<SweepRow>)> {
    let manifest = match text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# manifest "))
    {
        Some(body) => {
            Some(serde_json::from_str(body).map_err(|e| malformed("line 1", e.to_string()))?)
        }
        None => None,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| malformed(format!("record {}", i + 1), e.to_string())))
        .collect::<Result<Vec<SweepRow>>>()?;
    Ok((manifest, rows))
}
