//! Directed web graphs: a preferential-attachment generator and an
//! edge-list file format.
//!
//! Nodes are numbered `0..node_count`. Out-edges are stored in CSR form in
//! insertion order; in-degrees are cached.
//!
//! The file format is one `source target` pair per line, with an optional
//! `#nodes N` header. Other lines starting with `#` and blank lines are
//! ignored. Without a header the node count is `max id + 1`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rejection retries before a duplicate edge is accepted.
pub const MAX_DUPLICATE_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WebGraph {
    node_count: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_degree: Vec<u32>,
    forced_duplicates: usize,
}

impl WebGraph {
    /// Builds a graph from `(source, target)` pairs. Edges are grouped by
    /// source, keeping their relative order.
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count > u32::MAX as usize {
            return Err(Error::invalid("node count exceeds u32 range"));
        }
        let mut out_offsets = vec![0usize; node_count + 1];
        for (i, &(s, t)) in edges.iter().enumerate() {
            for id in [s, t] {
                if id >= node_count {
                    return Err(Error::NodeOutOfRange {
                        line: i + 1,
                        id,
                        node_count,
                    });
                }
            }
            out_offsets[s + 1] += 1;
        }
        for i in 0..node_count {
            out_offsets[i + 1] += out_offsets[i];
        }
        let mut cursor = out_offsets.clone();
        let mut out_targets = vec![0u32; edges.len()];
        let mut in_degree = vec![0u32; node_count];
        for &(s, t) in edges {
            out_targets[cursor[s]] = t as u32;
            cursor[s] += 1;
            in_degree[t] += 1;
        }
        Ok(Self {
            node_count,
            out_offsets,
            out_targets,
            in_degree,
            forced_duplicates: 0,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn out_neighbors(&self, node: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[node]..self.out_offsets[node + 1]]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_offsets[node + 1] - self.out_offsets[node]
    }

    pub fn in_degree(&self, node: usize) -> u32 {
        self.in_degree[node]
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.in_degree
    }

    /// Edges the generator had to accept as duplicates after exhausting its
    /// rejection retries. Always zero for loaded graphs.
    pub fn forced_duplicates(&self) -> usize {
        self.forced_duplicates
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count).flat_map(move |s| {
            self.out_neighbors(s).iter().map(move |&t| (s, t as usize))
        })
    }

    /// In-neighbour lists in CSR form: `(offsets, sources)`.
    pub fn transpose(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.node_count;
        let mut offsets = vec![0usize; n + 1];
        for (i, &k) in self.in_degree.iter().enumerate() {
            offsets[i + 1] = offsets[i] + k as usize;
        }
        let mut cursor = offsets.clone();
        let mut sources = vec![0u32; self.out_targets.len()];
        for s in 0..n {
            for &t in self.out_neighbors(s) {
                sources[cursor[t as usize]] = s as u32;
                cursor[t as usize] += 1;
            }
        }
        (offsets, sources)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub nodes: usize,
    /// Out-links attached by every node after the seed core.
    pub out_links: usize,
    /// Initial attractiveness added to every in-degree.
    pub attractiveness: f64,
    pub seed: u64,
    pub allow_duplicates: bool,
}

impl GeneratorConfig {
    pub fn new(nodes: usize, out_links: usize, attractiveness: f64, seed: u64) -> Self {
        Self {
            nodes,
            out_links,
            attractiveness,
            seed,
            allow_duplicates: false,
        }
    }

    /// Asymptotic in-degree exponent of the attractiveness model, `2 + a/m`.
    pub fn expected_exponent(&self) -> f64 {
        2.0 + self.attractiveness / self.out_links as f64
    }
}

/// Grows a directed graph by linear preferential attachment with initial
/// attractiveness.
///
/// Nodes `1..=m` form the seed core, each linking once to every earlier
/// node. Every later node `i` attaches `m` out-links to nodes in `0..i`,
/// picked with probability proportional to `in_degree + a` as it was before
/// node `i` arrived.
pub fn generate_scale_free_digraph(config: &GeneratorConfig) -> Result<WebGraph> {
    let n = config.nodes;
    let m = config.out_links;
    let a = config.attractiveness;
    if m == 0 {
        return Err(Error::invalid("out_links must be at least 1"));
    }
    if n <= m {
        return Err(Error::invalid(format!(
            "nodes ({n}) must exceed out_links ({m})"
        )));
    }
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!(
            "attractiveness must be finite and nonnegative, got {a}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("node count exceeds u32 range"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out_offsets = Vec::with_capacity(n + 1);
    out_offsets.push(0usize);
    // Every stored edge target, in insertion order. Sampling a uniform
    // entry picks a node with probability proportional to its in-degree.
    let mut targets: Vec<u32> = Vec::with_capacity(n.saturating_mul(m));
    let mut forced_duplicates = 0usize;

    out_offsets.push(0);
    for i in 1..=m {
        targets.extend(0..i as u32);
        out_offsets.push(targets.len());
    }

    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for i in (m + 1)..n {
        let existing_edges = targets.len();
        let total_weight = existing_edges as f64 + a * i as f64;
        chosen.clear();
        for _ in 0..m {
            let mut retries = 0;
            let target = loop {
                let candidate =
                    if rng.random::<f64>() * total_weight < existing_edges as f64 {
                        targets[rng.random_range(0..existing_edges)]
                    } else {
                        rng.random_range(0..i as u32)
                    };
                if config.allow_duplicates || !chosen.contains(&candidate) {
                    break candidate;
                }
                retries += 1;
                if retries >= MAX_DUPLICATE_RETRIES {
                    forced_duplicates += 1;
                    break candidate;
                }
            };
            chosen.push(target);
        }
        targets.extend_from_slice(&chosen);
        out_offsets.push(targets.len());
    }

    let mut in_degree = vec![0u32; n];
    for &t in &targets {
        in_degree[t as usize] += 1;
    }
    Ok(WebGraph {
        node_count: n,
        out_offsets,
        out_targets: targets,
        in_degree,
        forced_duplicates,
    })
}

/// Parses the edge-list format.
pub fn parse_graph(text: &str) -> Result<WebGraph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#nodes") {
            if declared.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "duplicate #nodes header".into(),
                });
            }
            let n = rest.trim().parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid node count in header: {line:?}"),
            })?;
            declared = Some(n);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next_id = || -> Result<usize> {
            fields
                .next()
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("expected \"source target\", got {line:?}"),
                })?
                .parse::<usize>()
                .map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid node id in {line:?}"),
                })
        };
        let s = next_id()?;
        let t = next_id()?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("trailing fields in {line:?}"),
            });
        }
        edges.push((s, t));
        lines.push(line_no);
    }
    let node_count = match declared {
        Some(n) => n,
        None => edges.iter().map(|&(s, t)| s.max(t) + 1).max().unwrap_or(0),
    };
    WebGraph::from_edges(node_count, &edges).map_err(|e| match e {
        Error::NodeOutOfRange {
            line,
            id,
            node_count,
        } => Error::NodeOutOfRange {
            line: lines[line - 1],
            id,
            node_count,
        },
        other => other,
    })
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<WebGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text)
}

/// Writes the graph with a `#nodes` header, edges grouped by source.
pub fn write_graph<W: Write>(graph: &WebGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "#nodes {}", graph.node_count())?;
    if graph.forced_duplicates() > 0 {
        writeln!(out, "# forced_duplicates {}", graph.forced_duplicates())?;
    }
    for (s, t) in graph.edges() {
        writeln!(out, "{s} {t}")?;
    }
    Ok(())
}

pub fn save_graph(graph: &WebGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_graph(graph, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}
