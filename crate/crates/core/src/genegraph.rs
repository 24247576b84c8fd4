//! Gene interaction graphs and the self-looped adjacency mask derived from them.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Undirected, unweighted interaction graph over gene symbols.
///
/// `genes` keeps first-appearance order. Edges are stored once per unordered
/// pair as `(lo, hi)` gene indices with `lo < hi`; self-pairs are never stored.
#[derive(Debug, Clone, Default)]
pub struct GeneGraph {
    genes: Vec<String>,
    index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl GeneGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `symbol` if new and returns its index.
    pub fn add_gene(&mut self, symbol: &str) -> usize {
        if let Some(&i) = self.index.get(symbol) {
            return i;
        }
        let i = self.genes.len();
        self.genes.push(symbol.to_string());
        self.index.insert(symbol.to_string(), i);
        i
    }

    /// Adds an undirected edge; a self-pair only registers the gene.
    pub fn add_edge(&mut self, a: &str, b: &str) {
        let i = self.add_gene(a);
        let j = self.add_gene(b);
        if i != j {
            self.edges.insert((i.min(j), i.max(j)));
        }
    }

    pub fn genes(&self) -> &[String] {
        &self.genes
    }

    pub fn gene_count(&self) -> usize {
        self.genes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.index.contains_key(symbol)
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) if i != j => self.edges.contains(&(i.min(j), i.max(j))),
            _ => false,
        }
    }

    /// Edges as symbol pairs.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges.iter().map(|&(i, j)| (self.genes[i].as_str(), self.genes[j].as_str()))
    }

    /// Order-independent view: sorted symbols and sorted `(min, max)` symbol pairs.
    pub fn canonical(&self) -> (Vec<String>, Vec<(String, String)>) {
        let mut genes = self.genes.clone();
        genes.sort();
        let mut edges: Vec<(String, String)> = self
            .edges()
            .map(|(a, b)| if a <= b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) })
            .collect();
        edges.sort();
        (genes, edges)
    }

    /// Tab-separated edge list, one pair per line in sorted symbol order.
    /// Genes without edges are written as self-pairs so they survive a reparse.
    pub fn to_edge_list(&self) -> String {
        let (genes, edges) = self.canonical();
        let mut connected = HashSet::new();
        let mut out = String::new();
        for (a, b) in &edges {
            connected.insert(a.as_str());
            connected.insert(b.as_str());
            let _ = writeln!(out, "{a}\t{b}");
        }
        for g in &genes {
            if !connected.contains(g.as_str()) {
                let _ = writeln!(out, "{g}\t{g}");
            }
        }
        out
    }
}

/// How the first data line of an edge list is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Every line is an interaction.
    None,
    /// The first non-comment line is a header and is skipped.
    Present,
    /// Skip the first line when it looks like column names.
    #[default]
    Auto,
}

const HEADER_WORDS: &[&str] = &[
    "gene",
    "gene1",
    "gene2",
    "gene_a",
    "gene_b",
    "genea",
    "geneb",
    "symbol",
    "symbol_a",
    "symbol_b",
    "source",
    "target",
    "protein_a",
    "protein_b",
    "interactor_a",
    "interactor_b",
    "node1",
    "node2",
];

fn looks_like_header(tokens: &[&str]) -> bool {
    tokens.iter().any(|t| HEADER_WORDS.contains(&t.to_ascii_lowercase().as_str()))
}

/// Parses a whitespace-separated edge list: two symbols per line, `#` comments
/// and blank lines ignored, duplicate and reversed pairs merged.
pub fn parse_edge_list<R: BufRead>(reader: R, header: HeaderMode) -> Result<GeneGraph> {
    let mut graph = GeneGraph::new();
    let mut seen_data = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: lineno + 1, detail: e.to_string() })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if !seen_data {
            seen_data = true;
            let skip = match header {
                HeaderMode::None => false,
                HeaderMode::Present => true,
                HeaderMode::Auto => looks_like_header(&tokens),
            };
            if skip {
                continue;
            }
        }
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                detail: format!("expected 2 symbols, found {}", tokens.len()),
            });
        }
        graph.add_edge(tokens[0], tokens[1]);
    }
    if graph.gene_count() == 0 {
        warn!("edge list contained no interactions");
    }
    Ok(graph)
}

pub fn read_edge_list(path: &Path, header: HeaderMode) -> Result<GeneGraph> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(std::io::BufReader::new(file), header)
}

/// Genes present in both the graph and the expression feature list, in
/// expression order. Matching is exact and case-sensitive.
pub fn intersect_features(graph: &GeneGraph, expression_genes: &[String]) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    let kept: Vec<String> =
        expression_genes.iter().filter(|g| graph.contains(g) && seen.insert(g.as_str())).cloned().collect();
    if kept.is_empty() {
        return Err(Error::Config(
            "no gene symbols shared between the interaction graph and the expression features".into(),
        ));
    }
    Ok(kept)
}

/// Binary symmetric adjacency pattern with a full diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMask {
    dim: usize,
    coords: Vec<(usize, usize)>,
}

impl AdjacencyMask {
    /// Self-loops only.
    pub fn identity(dim: usize) -> Self {
        AdjacencyMask { dim, coords: (0..dim).map(|i| (i, i)).collect() }
    }

    /// Builds a mask from arbitrary coordinates: mirrors every pair, adds the
    /// diagonal, sorts and removes duplicates.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set: BTreeSet<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
        for (r, c) in pairs {
            if r >= dim || c >= dim {
                return Err(Error::Range(format!("mask coordinate ({r}, {c}) outside dim {dim}")));
            }
            set.insert((r, c));
            set.insert((c, r));
        }
        Ok(AdjacencyMask { dim, coords: set.into_iter().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sorted `(row, col)` nonzero positions.
    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    pub fn nnz(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.coords.binary_search(&(r, c)).is_ok()
    }

    /// Number of nonzero inputs feeding each output column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dim];
        for &(_, c) in &self.coords {
            counts[c] += 1;
        }
        counts
    }

    pub fn is_symmetric(&self) -> bool {
        self.coords.iter().all(|&(r, c)| self.contains(c, r))
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for &(r, c) in &self.coords {
            m.set(r, c, 1.0);
        }
        m
    }

    /// `dim<TAB>p` header followed by one `row<TAB>col` line per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim\t{}\n", self.dim);
        for (r, c) in &self.coords {
            let _ = writeln!(out, "{r}\t{c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, detail: "missing dim header".into() })?;
        let dim = match header.split('\t').collect::<Vec<_>>().as_slice() {
            ["dim", d] => d.trim().parse::<usize>().map_err(|e| Error::Parse { line: 1, detail: e.to_string() })?,
            _ => return Err(Error::Parse { line: 1, detail: format!("bad header {header:?}") }),
        };
        let mut coords = Vec::new();
        for (i, line) in lines {
            let parsed: Vec<usize> = line
                .split('\t')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 1, detail: e.to_string() })?;
            if parsed.len() != 2 {
                return Err(Error::Parse { line: i + 1, detail: "expected row<TAB>col".into() });
            }
            coords.push((parsed[0], parsed[1]));
        }
        let mask = Self::from_pairs(dim, coords.iter().copied())?;
        if mask.coords != coords {
            return Err(Error::Parse {
                line: 0,
                detail: "mask file is not a sorted symmetric pattern with full diagonal".into(),
            });
        }
        Ok(mask)
    }
}

/// Adjacency over `genes` (canonical order) using the graph's edges among them.
pub fn build_adjacency(genes: &[String], graph: &GeneGraph) -> AdjacencyMask {
    let position: HashMap<&str, usize> = genes.iter().enumerate().map(|(i, g)| (g.as_str(), i)).collect();
    let pairs = graph.edges().filter_map(|(a, b)| match (position.get(a), position.get(b)) {
        (Some(&i), Some(&j)) => Some((i, j)),
        _ => None,
    });
    AdjacencyMask::from_pairs(genes.len(), pairs).expect("positions are within dim by construction")
}
