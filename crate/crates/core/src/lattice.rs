//! Discrete Laplacian Hamiltonians on chains, square grids and general graphs.
//!
//! Free boundary conditions give `H = D - A` (degree minus adjacency), so the
//! constant vector is an exact zero mode on every graph. Fixed boundary
//! conditions use a uniform bulk degree instead, `H = d I - A`, which is only
//! defined when such a degree exists (chains use `d = 2`, grids `d = 4`).
//!
//! 2D grids use row-major site order: site `(x, y)` has index `y * nx + x`.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs, Spectrum};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Free,
    Fixed,
}

impl BoundaryCondition {
    /// Diagonal entry of a chain endpoint under this condition.
    pub fn chain_end_diagonal(self) -> f64 {
        match self {
            BoundaryCondition::Free => 1.0,
            BoundaryCondition::Fixed => 2.0,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Free => write!(f, "free"),
            BoundaryCondition::Fixed => write!(f, "fixed"),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(BoundaryCondition::Free),
            "fixed" => Ok(BoundaryCondition::Fixed),
            other => Err(Error::InvalidInput(format!(
                "unknown boundary condition {other:?} (expected free or fixed)"
            ))),
        }
    }
}

/// Undirected simple graph. Edges are stored as `(lo, hi)` pairs in insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if vertices < 2 {
            return Err(Error::InvalidInput(format!(
                "graph needs at least 2 vertices, got {vertices}"
            )));
        }
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= vertices || b >= vertices {
                return Err(Error::InvalidInput(format!(
                    "edge {a}-{b} references a vertex outside 0..{vertices}"
                )));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
            }
            let edge = (a.min(b), a.max(b));
            if !seen.insert(edge) {
                return Err(Error::InvalidInput(format!("duplicate edge {a}-{b}")));
            }
            list.push(edge);
        }
        Ok(Graph {
            vertices,
            edges: list,
        })
    }

    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.vertices];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut visited = vec![false; self.vertices];
        let mut stack = vec![0];
        visited[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !visited[w] {
                    visited[w] = true;
                    stack.push(w);
                }
            }
        }
        visited.into_iter().all(|v| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatticeKind {
    Chain { n: usize },
    Grid2D { nx: usize, ny: usize },
    Graph(Graph),
}

impl LatticeKind {
    pub fn sites(&self) -> usize {
        match self {
            LatticeKind::Chain { n } => *n,
            LatticeKind::Grid2D { nx, ny } => nx * ny,
            LatticeKind::Graph(g) => g.vertices(),
        }
    }
}

/// Geometry, boundary condition and optional on-site potential of a lattice problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub bc: BoundaryCondition,
    pub potential: Option<Vec<f64>>,
}

impl LatticeSpec {
    pub fn chain(n: usize, bc: BoundaryCondition) -> Self {
        LatticeSpec {
            kind: LatticeKind::Chain { n },
            bc,
            potential: None,
        }
    }

    pub fn grid(nx: usize, ny: usize, bc: BoundaryCondition) -> Self {
        LatticeSpec {
            kind: LatticeKind::Grid2D { nx, ny },
            bc,
            potential: None,
        }
    }

    pub fn graph(graph: Graph, bc: BoundaryCondition) -> Self {
        LatticeSpec {
            kind: LatticeKind::Graph(graph),
            bc,
            potential: None,
        }
    }

    pub fn with_potential(mut self, potential: Vec<f64>) -> Self {
        self.potential = Some(potential);
        self
    }

    pub fn sites(&self) -> usize {
        self.kind.sites()
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        let potential = self.potential.as_deref();
        match &self.kind {
            LatticeKind::Chain { n } => build_chain(*n, self.bc, potential),
            LatticeKind::Grid2D { nx, ny } => build_grid2d(*nx, *ny, self.bc, potential),
            LatticeKind::Graph(g) => build_graph(g, self.bc, potential),
        }
    }

    /// One-line description used in output headers.
    pub fn describe(&self) -> String {
        let geometry = match &self.kind {
            LatticeKind::Chain { n } => format!("kind=chain n={n}"),
            LatticeKind::Grid2D { nx, ny } => format!("kind=grid nx={nx} ny={ny}"),
            LatticeKind::Graph(g) => format!(
                "kind=graph vertices={} edges={}",
                g.vertices(),
                g.edges().len()
            ),
        };
        let potential = if self.potential.is_some() {
            "given"
        } else {
            "none"
        };
        format!("{geometry} bc={} potential={potential}", self.bc)
    }

    /// Parses the plain-text `key=value` lattice format.
    ///
    /// Recognised keys: `kind` (chain, grid, graph), `n`, `nx`, `ny`,
    /// `vertices`, `edges` (comma-separated `a-b` pairs), `bc` and `potential`
    /// (path of a file with one real per line, relative to `base_dir`).
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_config_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut kind = None;
        let mut n = None;
        let mut nx = None;
        let mut ny = None;
        let mut vertices = None;
        let mut edges: Option<Vec<(usize, usize)>> = None;
        let mut bc = BoundaryCondition::Free;
        let mut potential = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line, message };
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {trimmed:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let count = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| parse_err(format!("{key}: expected a count, got {v:?}")))
            };
            match key {
                "kind" => kind = Some(value.to_ascii_lowercase()),
                "n" => n = Some(count(value)?),
                "nx" => nx = Some(count(value)?),
                "ny" => ny = Some(count(value)?),
                "vertices" => vertices = Some(count(value)?),
                "edges" => {
                    let mut list = Vec::new();
                    for pair in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        let (a, b) = pair
                            .split_once('-')
                            .ok_or_else(|| parse_err(format!("bad edge {pair:?}")))?;
                        list.push((count(a.trim())?, count(b.trim())?));
                    }
                    edges = Some(list);
                }
                "bc" => bc = value.parse().map_err(|e: Error| parse_err(e.to_string()))?,
                "potential" => {
                    let path = base_dir.join(value);
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        parse_err(format!("cannot read potential {}: {e}", path.display()))
                    })?;
                    potential = Some(parse_potential(&text)?);
                }
                other => return Err(parse_err(format!("unknown key {other:?}"))),
            }
        }

        let missing = |what: &str| Error::InvalidInput(format!("lattice config is missing {what}"));
        let kind = match kind.as_deref() {
            Some("chain") => LatticeKind::Chain {
                n: n.ok_or_else(|| missing("n"))?,
            },
            Some("grid") | Some("grid2d") => LatticeKind::Grid2D {
                nx: nx.ok_or_else(|| missing("nx"))?,
                ny: ny.ok_or_else(|| missing("ny"))?,
            },
            Some("graph") => LatticeKind::Graph(Graph::new(
                vertices.ok_or_else(|| missing("vertices"))?,
                edges.unwrap_or_default(),
            )?),
            Some(other) => {
                return Err(Error::InvalidInput(format!("unknown lattice kind {other:?}")))
            }
            None => return Err(missing("kind")),
        };
        Ok(LatticeSpec {
            kind,
            bc,
            potential,
        })
    }
}

/// Parses a potential file: one real per line, blank and `#` lines skipped.
pub fn parse_potential(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("expected a real number, got {trimmed:?}"),
        })?;
        values.push(value);
    }
    Ok(values)
}

/// Dense symmetric Hamiltonian together with the lattice it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
    spec: LatticeSpec,
}

impl Hamiltonian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn lowest(&self, m: usize) -> Result<Spectrum> {
        lowest_eigenpairs(&self.matrix, m)
    }
}

fn check_potential(potential: Option<&[f64]>, sites: usize) -> Result<()> {
    if let Some(v) = potential {
        if v.len() != sites {
            return Err(Error::InvalidInput(format!(
                "potential has {} entries but the lattice has {sites} sites",
                v.len()
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("potential entry {i} is not finite")));
        }
    }
    Ok(())
}

fn add_potential(matrix: &mut DMatrix<f64>, potential: Option<&[f64]>) {
    if let Some(v) = potential {
        for (i, &vi) in v.iter().enumerate() {
            matrix[(i, i)] += vi;
        }
    }
}

/// Chain Laplacian whose two endpoints may carry different boundary conditions.
///
/// Used directly for chain segments whose ends are either true chain ends or
/// cuts between blocks.
pub fn chain_matrix(
    n: usize,
    left: BoundaryCondition,
    right: BoundaryCondition,
    potential: Option<&[f64]>,
) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "chain needs at least 2 sites, got {n}"
        )));
    }
    check_potential(potential, n)?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = 2.0;
        if i + 1 < n {
            h[(i, i + 1)] = -1.0;
            h[(i + 1, i)] = -1.0;
        }
    }
    h[(0, 0)] = left.chain_end_diagonal();
    h[(n - 1, n - 1)] = right.chain_end_diagonal();
    add_potential(&mut h, potential);
    Ok(h)
}

pub fn build_chain(
    n: usize,
    bc: BoundaryCondition,
    potential: Option<&[f64]>,
) -> Result<Hamiltonian> {
    let matrix = chain_matrix(n, bc, bc, potential)?;
    Ok(Hamiltonian {
        matrix,
        spec: LatticeSpec {
            kind: LatticeKind::Chain { n },
            bc,
            potential: potential.map(<[f64]>::to_vec),
        },
    })
}

fn laplacian_from_edges(
    sites: usize,
    edges: &[(usize, usize)],
    diagonal: impl Fn(usize) -> f64,
) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(sites, sites);
    for i in 0..sites {
        h[(i, i)] = diagonal(i);
    }
    for &(a, b) in edges {
        h[(a, b)] = -1.0;
        h[(b, a)] = -1.0;
    }
    h
}

pub fn build_graph(
    graph: &Graph,
    bc: BoundaryCondition,
    potential: Option<&[f64]>,
) -> Result<Hamiltonian> {
    let sites = graph.vertices();
    check_potential(potential, sites)?;
    if !graph.is_connected() {
        log::warn!("graph with {sites} vertices is not connected");
    }
    let degrees = graph.degrees();
    let mut matrix = match bc {
        BoundaryCondition::Free => {
            laplacian_from_edges(sites, graph.edges(), |i| degrees[i] as f64)
        }
        BoundaryCondition::Fixed => {
            let d = degrees[0];
            if let Some(i) = degrees.iter().position(|&di| di != d) {
                return Err(Error::Unsupported(format!(
                    "fixed boundary conditions need a uniform vertex degree \
                     (vertex 0 has degree {d}, vertex {i} has degree {})",
                    degrees[i]
                )));
            }
            laplacian_from_edges(sites, graph.edges(), |_| d as f64)
        }
    };
    add_potential(&mut matrix, potential);
    Ok(Hamiltonian {
        matrix,
        spec: LatticeSpec {
            kind: LatticeKind::Graph(graph.clone()),
            bc,
            potential: potential.map(<[f64]>::to_vec),
        },
    })
}

/// Nearest-neighbour edges of an `nx` by `ny` grid in row-major site order.
pub fn grid_edges(nx: usize, ny: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * nx * ny);
    for y in 0..ny {
        for x in 0..nx {
            let site = y * nx + x;
            if x + 1 < nx {
                edges.push((site, site + 1));
            }
            if y + 1 < ny {
                edges.push((site, site + nx));
            }
        }
    }
    edges
}

pub fn build_grid2d(
    nx: usize,
    ny: usize,
    bc: BoundaryCondition,
    potential: Option<&[f64]>,
) -> Result<Hamiltonian> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 sites per axis, got {nx}x{ny}"
        )));
    }
    let sites = nx * ny;
    check_potential(potential, sites)?;
    let edges = grid_edges(nx, ny);
    let mut matrix = match bc {
        BoundaryCondition::Free => {
            let mut degrees = vec![0usize; sites];
            for &(a, b) in &edges {
                degrees[a] += 1;
                degrees[b] += 1;
            }
            laplacian_from_edges(sites, &edges, |i| degrees[i] as f64)
        }
        BoundaryCondition::Fixed => laplacian_from_edges(sites, &edges, |_| 4.0),
    };
    add_potential(&mut matrix, potential);
    Ok(Hamiltonian {
        matrix,
        spec: LatticeSpec {
            kind: LatticeKind::Grid2D { nx, ny },
            bc,
            potential: potential.map(<[f64]>::to_vec),
        },
    })
}
