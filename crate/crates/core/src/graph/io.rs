//! Graph serialization.
//!
//! * Edge list CSV: header `source,target`, one row per edge, `source < target`.
//! * Positions CSV: header `node,x,y`.
//! * Graph JSON: `{"n": .., "edges": [[u, v], ..], "positions": [[x, y], ..]}`
//!   with `positions` omitted when absent.
//!
//! Floats are written in shortest round-trip form, so positions survive a
//! save/load cycle bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

pub fn edge_list_csv(g: &Graph) -> String {
    let mut out = String::from("source,target\n");
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u},{v}");
    }
    out
}

pub fn positions_csv(positions: &[[f64; 2]]) -> String {
    let mut out = String::from("node,x,y\n");
    for (i, p) in positions.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", p[0], p[1]);
    }
    out
}

fn data_rows<'a>(
    path: &'a Path,
    text: &'a str,
    header: &'a str,
) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)> + 'a> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{header}`"),
            })
        }
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid {what} `{s}`"),
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses an edge list. With `n = None` the node count is `max id + 1`.
pub fn parse_edge_list(path: &Path, text: &str, n: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (line, fields) in data_rows(path, text, "source,target")? {
        if fields.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 fields, got {}", fields.len())));
        }
        let u: usize = parse_field(path, line, fields[0], "node id")?;
        let v: usize = parse_field(path, line, fields[1], "node id")?;
        if u == v {
            return Err(parse_error(path, line, format!("self-loop on node {u}")));
        }
        if let Some(n) = n {
            if u >= n || v >= n {
                return Err(parse_error(path, line, format!("endpoint >= node count {n}")));
            }
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(parse_error(path, line, format!("duplicate edge ({u}, {v})")));
        }
        edges.push((u, v));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    Graph::from_edges(n, edges)
}

pub fn parse_positions(path: &Path, text: &str) -> Result<Vec<[f64; 2]>> {
    let mut positions: Vec<Option<[f64; 2]>> = Vec::new();
    for (line, fields) in data_rows(path, text, "node,x,y")? {
        if fields.len() != 3 {
            return Err(parse_error(path, line, format!("expected 3 fields, got {}", fields.len())));
        }
        let i: usize = parse_field(path, line, fields[0], "node id")?;
        let x: f64 = parse_field(path, line, fields[1], "coordinate")?;
        let y: f64 = parse_field(path, line, fields[2], "coordinate")?;
        if i >= positions.len() {
            positions.resize(i + 1, None);
        }
        if positions[i].replace([x, y]).is_some() {
            return Err(parse_error(path, line, format!("duplicate position for node {i}")));
        }
    }
    positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| parse_error(path, 0, format!("missing position for node {i}"))))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<[f64; 2]>>,
}

pub fn to_json(g: &Graph) -> String {
    let doc = GraphJson {
        n: g.n(),
        edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
        positions: g.positions().map(<[_]>::to_vec),
    };
    serde_json::to_string(&doc).expect("graph JSON serialization")
}

pub fn from_json(text: &str) -> Result<Graph> {
    let doc: GraphJson = serde_json::from_str(text)?;
    let g = Graph::from_edges(doc.n, doc.edges.into_iter().map(|[u, v]| (u, v)))?;
    match doc.positions {
        Some(p) => g.with_positions(p),
        None => Ok(g),
    }
}

/// Sibling file holding positions for an edge-list CSV: `graph.csv` pairs
/// with `graph_positions.csv`.
pub fn positions_path_for(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("graph");
    path.with_file_name(format!("{stem}_positions.csv"))
}

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("json")
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Saves as graph JSON when `path` ends in `.json`; otherwise as an edge
/// list CSV, plus a positions CSV next to it when the graph has positions.
pub fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    if is_json(path) {
        return write(path, &to_json(g));
    }
    write(path, &edge_list_csv(g))?;
    if let Some(p) = g.positions() {
        write(&positions_path_for(path), &positions_csv(p))?;
    }
    Ok(())
}

/// Inverse of [`save_graph`]. For CSV input without a positions file the
/// node count is inferred as `max id + 1`.
pub fn load_graph(path: &Path) -> Result<Graph> {
    if is_json(path) {
        return from_json(&read(path)?);
    }
    let text = read(path)?;
    let pos_path = positions_path_for(path);
    if pos_path.exists() {
        let positions = parse_positions(&pos_path, &read(&pos_path)?)?;
        parse_edge_list(path, &text, Some(positions.len()))?.with_positions(positions)
    } else {
        parse_edge_list(path, &text, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_rgg;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k4.csv");
        let g = Graph::complete(4);
        save_graph(&g, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 7);
        assert_eq!(load_graph(&path).unwrap(), g);
    }

    #[test]
    fn rgg_positions_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = generate_rgg(50, 0.3, 5).unwrap();
        for name in ["rgg.csv", "rgg.json"] {
            let path = dir.path().join(name);
            save_graph(&g, &path).unwrap();
            let h = load_graph(&path).unwrap();
            assert_eq!(h.edges(), g.edges());
            for (a, b) in h.positions().unwrap().iter().zip(g.positions().unwrap()) {
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_keeps_isolated_nodes() {
        let g = Graph::from_edges(6, [(0, 1)]).unwrap();
        assert_eq!(from_json(&to_json(&g)).unwrap(), g);
        assert!(!to_json(&g).contains("positions"));
    }

    #[test]
    fn rejects_bad_rows() {
        let p = Path::new("x.csv");
        let err = parse_edge_list(p, "source,target\n5,5\n", None).unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
        assert!(parse_edge_list(p, "source,target\n0,1\n1,0\n", None)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        assert!(parse_edge_list(p, "source,target\n0,7\n", Some(4)).is_err());
        assert!(parse_edge_list(p, "source,target\n0,x\n", None).is_err());
        assert!(parse_edge_list(p, "source,target\n0,1,2\n", None).is_err());
        assert!(parse_edge_list(p, "u,v\n0,1\n", None).is_err());
        assert!(parse_positions(p, "node,x,y\n1,0.5,0.5\n").is_err());
    }
}
