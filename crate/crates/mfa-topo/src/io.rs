//! File formats: model and graph documents (JSON), gridded samples (CSV or
//! JSON), critical points, plot segments and metrics tables (CSV).
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use mfa_topo_core::critical::{CriticalKind, CriticalPoint};
use mfa_topo_core::features::ArcClass;
use mfa_topo_core::graph::{TopoGraph, Vertex, VertexKind};
use mfa_topo_core::model::ControlGrid;
use mfa_topo_core::{GridData, KnotVector, MfaModel, Rect, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub degree: usize,
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub ctrl_rows: usize,
    pub ctrl_cols: usize,
    /// Row-major, rows along x1.
    pub ctrl: Vec<f64>,
    /// `[x1_min, x1_max, x2_min, x2_max]`
    pub domain: [f64; 4],
}

impl ModelFile {
    pub fn from_model(m: &MfaModel) -> Self {
        let d = m.domain();
        ModelFile {
            degree: m.degree(),
            knots_u: m.knots_u().knots().to_vec(),
            knots_v: m.knots_v().knots().to_vec(),
            ctrl_rows: m.ctrl().rows,
            ctrl_cols: m.ctrl().cols,
            ctrl: m.ctrl().values.clone(),
            domain: [d.min.x, d.max.x, d.min.y, d.max.y],
        }
    }

    pub fn into_model(self) -> std::result::Result<MfaModel, String> {
        if self.ctrl.len() != self.ctrl_rows * self.ctrl_cols {
            return Err(format!(
                "field `ctrl`: expected {} x {} = {} values, found {}",
                self.ctrl_rows,
                self.ctrl_cols,
                self.ctrl_rows * self.ctrl_cols,
                self.ctrl.len()
            ));
        }
        let ku = KnotVector::new(self.degree, self.knots_u).map_err(|e| format!("field `knots_u`: {e}"))?;
        let kv = KnotVector::new(self.degree, self.knots_v).map_err(|e| format!("field `knots_v`: {e}"))?;
        let [a, b, c, d] = self.domain;
        let ctrl = ControlGrid { rows: self.ctrl_rows, cols: self.ctrl_cols, values: self.ctrl };
        MfaModel::new(ku, kv, ctrl, Rect::from_bounds(a, b, c, d)).map_err(|e| e.to_string())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

fn json_error(path: &Path, e: serde_json::Error) -> CliError {
    CliError::parse(path, format!("line {} column {}: {e}", e.line(), e.column()))
}

pub fn save_model(path: &Path, m: &MfaModel) -> Result<()> {
    write(path, &to_json(&ModelFile::from_model(m)))
}

pub fn load_model(path: &Path) -> Result<MfaModel> {
    let file: ModelFile = serde_json::from_str(&read(path)?).map_err(|e| json_error(path, e))?;
    file.into_model().map_err(|m| CliError::parse(path, m))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    nx: usize,
    ny: usize,
    domain: [f64; 4],
    values: Vec<f64>,
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Writes samples as CSV (first record `nx,ny,x1_min,x1_max,x2_min,x2_max`,
/// then one record of `ny` values per x1 index) or as JSON when the path
/// ends in `.json`.
pub fn save_grid(path: &Path, g: &GridData) -> Result<()> {
    let d = g.domain();
    if is_json(path) {
        let file = GridFile { nx: g.nx(), ny: g.ny(), domain: [d.min.x, d.max.x, d.min.y, d.max.y], values: g.values().to_vec() };
        return write(path, &to_json(&file));
    }
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let head = [g.nx().to_string(), g.ny().to_string(), d.min.x.to_string(), d.max.x.to_string(), d.min.y.to_string(), d.max.y.to_string()];
    w.write_record(&head).map_err(|e| CliError::parse(path, e.to_string()))?;
    for row in g.values().chunks(g.ny()) {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| CliError::parse(path, e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::parse(path, e.to_string()))?;
    write(path, &String::from_utf8(bytes).expect("ascii"))
}

/// Reads a grid written by [`save_grid`]. In CSV form the domain may be
/// omitted from the first record, in which case it is the unit square, and
/// values may be laid out in any number of records as long as they are in
/// row-major order.
pub fn load_grid(path: &Path) -> Result<GridData> {
    let text = read(path)?;
    if is_json(path) {
        let f: GridFile = serde_json::from_str(&text).map_err(|e| json_error(path, e))?;
        let [a, b, c, d] = f.domain;
        return GridData::new(f.nx, f.ny, f.values, Rect::from_bounds(a, b, c, d)).map_err(|e| CliError::parse(path, e.to_string()));
    }
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut records = r.records();
    let head = match records.next() {
        Some(rec) => rec.map_err(|e| CliError::parse(path, e.to_string()))?,
        None => return Err(CliError::parse(path, "empty grid file")),
    };
    let dims: Vec<&str> = head.iter().collect();
    let parse_usize = |s: &str, what: &str| s.parse::<usize>().map_err(|_| CliError::parse(path, format!("line 1: `{s}` is not a valid {what}")));
    if dims.len() != 2 && dims.len() != 6 {
        return Err(CliError::parse(path, "line 1: expected `nx,ny` or `nx,ny,x1_min,x1_max,x2_min,x2_max`"));
    }
    let nx = parse_usize(dims[0], "nx")?;
    let ny = parse_usize(dims[1], "ny")?;
    let domain = if dims.len() == 6 {
        let b: Vec<f64> = dims[2..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| CliError::parse(path, format!("line 1: `{s}` is not a number"))))
            .collect::<Result<_>>()?;
        Rect::from_bounds(b[0], b[1], b[2], b[3])
    } else {
        Rect::from_bounds(0.0, 1.0, 0.0, 1.0)
    };
    let mut values = Vec::with_capacity(nx * ny);
    for rec in records {
        let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        for field in rec.iter().filter(|f| !f.is_empty()) {
            values.push(field.parse::<f64>().map_err(|_| CliError::parse(path, format!("line {line}: `{field}` is not a number")))?);
        }
    }
    GridData::new(nx, ny, values, domain).map_err(|e| CliError::parse(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    /// `regular` or a critical-point kind.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

fn kind_name(k: VertexKind) -> &'static str {
    match k {
        VertexKind::Regular => "regular",
        VertexKind::Critical(c) => c.as_str(),
    }
}

impl GraphFile {
    pub fn from_graph(g: &TopoGraph) -> Self {
        GraphFile {
            vertices: g
                .vertices()
                .iter()
                .map(|v| VertexRecord { x: v.position.x, y: v.position.y, value: v.value, kind: kind_name(v.kind).to_string() })
                .collect(),
            edges: g.edges().to_vec(),
            labels: g.labels().map(|l| l.iter().map(|c| c.as_str().to_string()).collect()),
        }
    }

    pub fn into_graph(self) -> std::result::Result<TopoGraph, String> {
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let kind = match v.kind.as_str() {
                    "regular" => VertexKind::Regular,
                    other => VertexKind::Critical(CriticalKind::parse(other).ok_or_else(|| format!("vertex {k}: unknown kind `{other}`"))?),
                };
                Ok(Vertex { position: Vec2::new(v.x, v.y), value: v.value, kind })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let labels = match self.labels {
            Some(l) => Some(
                l.iter()
                    .enumerate()
                    .map(|(k, s)| ArcClass::parse(s).ok_or_else(|| format!("label {k}: unknown class `{s}`")))
                    .collect::<std::result::Result<Vec<_>, String>>()?,
            ),
            None => None,
        };
        TopoGraph::from_parts(vertices, self.edges, labels).map_err(|e| e.to_string())
    }
}

pub fn graph_json(g: &TopoGraph) -> String {
    to_json(&GraphFile::from_graph(g))
}

pub fn save_graph(path: &Path, g: &TopoGraph) -> Result<()> {
    write(path, &graph_json(g))
}

pub fn load_graph(path: &Path) -> Result<TopoGraph> {
    let file: GraphFile = serde_json::from_str(&read(path)?).map_err(|e| json_error(path, e))?;
    file.into_graph().map_err(|m| CliError::parse(path, m))
}

fn csv_text<T: Serialize>(rows: impl IntoIterator<Item = T>) -> std::result::Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let text = csv_text(rows).map_err(|e| CliError::parse(path, e.to_string()))?;
    write(path, &text)
}

#[derive(Debug, Serialize)]
struct SegmentRow {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    label: Option<&'static str>,
}

/// One CSV row per edge, ready for plotting.
pub fn save_segments(path: &Path, g: &TopoGraph) -> Result<()> {
    let labels = g.labels();
    let rows = g.edges().iter().map(|&[a, b]| {
        let (p, q) = (g.vertices()[a].position, g.vertices()[b].position);
        // an edge inherits the class of its endpoints when they agree
        let label = labels.and_then(|l| (l[a] == l[b]).then(|| l[a].as_str()));
        SegmentRow { x0: p.x, y0: p.y, x1: q.x, y1: q.y, label }
    });
    write_csv(path, rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct CriticalRow {
    x: f64,
    y: f64,
    value: f64,
    kind: String,
}

pub fn save_criticals(path: &Path, points: &[CriticalPoint]) -> Result<()> {
    write_csv(path, points.iter().map(|c| CriticalRow { x: c.position.x, y: c.position.y, value: c.value, kind: c.kind.as_str().into() }))
}

pub fn load_criticals(path: &Path) -> Result<Vec<CriticalPoint>> {
    let text = read(path)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize::<CriticalRow>()
        .map(|row| {
            let row = row.map_err(|e| CliError::parse(path, e.to_string()))?;
            let kind = CriticalKind::parse(&row.kind).ok_or_else(|| CliError::parse(path, format!("unknown kind `{}`", row.kind)))?;
            Ok(CriticalPoint { position: Vec2::new(row.x, row.y), value: row.value, kind })
        })
        .collect()
}

/// One line of a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub kind: String,
    /// `continuous` or `baseline`.
    pub method: String,
    pub level: f64,
    pub step_divisor: Option<f64>,
    pub ratio: Option<usize>,
    pub epsilon: Option<f64>,
    pub gamma_factor: Option<f64>,
    pub loops: usize,
    pub components: usize,
    pub e_max: f64,
    pub e_avg: f64,
    pub vertices: usize,
    pub edges: usize,
    pub criticals: usize,
    /// Seconds spent in extraction.
    pub wall_time: f64,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    csv_text(rows).expect("metrics rows serialize")
}

/// Writes JSON when the path ends in `.json`, CSV otherwise.
pub fn save_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    if is_json(path) {
        let text = if rows.len() == 1 { to_json(&rows[0]) } else { to_json(&rows) };
        return write(path, &text);
    }
    write(path, &metrics_csv(rows))
}
