//! The replica transformation.
//!
//! Every function of an orthonormal set produces half-scale copies of itself,
//! one per region (left/right halves of an interval, or the four quadrants of
//! a square). Discretely a copy is built by local averaging of neighbouring
//! samples, then rescaled to unit norm. The set is replicated by projecting
//! each function onto the span of all children and closing the projected
//! family with Gram–Schmidt.
//!
//! Two per-function measures are reported:
//!
//! * `self_replicability[i] = ⟨(𝓡φ)_i, φ_i⟩`, the overlap between a function
//!   and its replica after Gram–Schmidt. For a single function this is the
//!   norm of the projection.
//! * `projection_norms[i] = ⟨φ_i|P|φ_i⟩^{1/2}`, with `P` the orthogonal
//!   projector onto the child space. Only `Σ projection_norms²` is invariant
//!   under a change of basis of the input subspace.

mod dump;
mod inner;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub use dump::{format_vectors, format_waveset, parse_vectors, parse_waveset};
pub use inner::{gram_schmidt, Geometry, GramSchmidt, InnerProduct, Metric, PIVOT_DROP};

/// Orthonormality tolerance accepted for a [`WaveSet`].
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;
/// Children with raw norm below this are treated as zero.
const ZERO_CHILD: f64 = 1e-12;

/// An ordered orthonormal family of sampled functions.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSet {
    geometry: Geometry,
    ip: InnerProduct,
    functions: Vec<DVector<f64>>,
}

impl WaveSet {
    /// Wraps functions that are already orthonormal under `ip`.
    pub fn new(geometry: Geometry, ip: InnerProduct, functions: Vec<DVector<f64>>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::InvalidInput("a wave set needs at least one function".into()));
        }
        let samples = geometry.samples();
        if let Some((i, f)) = functions.iter().enumerate().find(|(_, f)| f.len() != samples) {
            return Err(Error::InvalidInput(format!(
                "function {i} has {} samples, geometry {} needs {samples}",
                f.len(),
                geometry.name()
            )));
        }
        let set = WaveSet {
            geometry,
            ip,
            functions,
        };
        let (i, j, deviation) = set.worst_orthonormality();
        if deviation > ORTHONORMALITY_TOLERANCE {
            return Err(Error::NonOrthonormal { i, j, deviation });
        }
        Ok(set)
    }

    /// Gram–Schmidt orthonormalizes `raw` under `ip`; fails on rank loss.
    pub fn orthonormalize(
        geometry: Geometry,
        ip: InnerProduct,
        raw: &[DVector<f64>],
    ) -> Result<Self> {
        let metric = Metric::new(geometry, ip);
        if let Some((i, f)) = raw.iter().enumerate().find(|(_, f)| f.len() != geometry.samples()) {
            return Err(Error::InvalidInput(format!(
                "function {i} has {} samples, expected {}",
                f.len(),
                geometry.samples()
            )));
        }
        let gs = gram_schmidt(&metric, raw);
        if let Some(&(idx, norm)) = gs.dropped.first() {
            return Err(Error::InvalidInput(format!(
                "function {idx} is linearly dependent on its predecessors (pivot norm {norm:e})"
            )));
        }
        WaveSet::new(geometry, ip, gs.vectors)
    }

    /// Internal constructor for replicated sets, which may lose functions.
    fn from_parts(geometry: Geometry, ip: InnerProduct, functions: Vec<DVector<f64>>) -> Self {
        WaveSet {
            geometry,
            ip,
            functions,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn ip(&self) -> InnerProduct {
        self.ip
    }

    pub fn metric(&self) -> Metric {
        Metric::new(self.geometry, self.ip)
    }

    pub fn functions(&self) -> &[DVector<f64>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// The pair `(i, j)` whose inner product deviates most from δ_ij.
    pub fn worst_orthonormality(&self) -> (usize, usize, f64) {
        let metric = self.metric();
        let mut worst = (0, 0, 0.0);
        for i in 0..self.len() {
            for j in i..self.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                let deviation = (metric.dot(&self.functions[i], &self.functions[j]) - target).abs();
                if deviation > worst.2 {
                    worst = (i, j, deviation);
                }
            }
        }
        worst
    }

    /// Hilbert–Schmidt distance between the orthogonal projectors onto the
    /// spans of two sets sharing a metric.
    pub fn subspace_distance(&self, other: &WaveSet) -> f64 {
        let metric = self.metric();
        let mut cross = 0.0;
        for a in &self.functions {
            for b in &other.functions {
                cross += metric.dot(a, b).powi(2);
            }
        }
        ((self.len() + other.len()) as f64 - 2.0 * cross).max(0.0).sqrt()
    }
}

fn pair_averages(phi: &DVector<f64>) -> Result<Vec<f64>> {
    let n = phi.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "half copies need an even number of samples, got {n}"
        )));
    }
    Ok(phi
        .as_slice()
        .chunks_exact(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .collect())
}

fn unit_child(raw: DVector<f64>, metric: &Metric, what: &str) -> Result<DVector<f64>> {
    let norm = metric.norm(&raw);
    if norm < ZERO_CHILD {
        return Err(Error::Degenerate(format!("{what} is the zero vector")));
    }
    Ok(raw / norm)
}

fn half_copy(phi: &DVector<f64>, ip: InnerProduct, right: bool) -> Result<DVector<f64>> {
    let averages = pair_averages(phi)?;
    let n = phi.len();
    let offset = if right { n / 2 } else { 0 };
    let mut child = DVector::zeros(n);
    for (i, a) in averages.into_iter().enumerate() {
        child[offset + i] = a;
    }
    let metric = Metric::new(Geometry::Interval(n), ip);
    unit_child(child, &metric, if right { "right copy" } else { "left copy" })
}

/// Compressed copy of `phi` on the left half: entry `i < n/2` is the average
/// of samples `2i` and `2i+1`, the right half is zero. Rescaled to unit norm
/// under `ip`.
pub fn half_copy_left(phi: &DVector<f64>, ip: InnerProduct) -> Result<DVector<f64>> {
    half_copy(phi, ip, false)
}

/// Mirror of [`half_copy_left`] placed on the right half.
pub fn half_copy_right(phi: &DVector<f64>, ip: InnerProduct) -> Result<DVector<f64>> {
    half_copy(phi, ip, true)
}

/// Compressed copy of an `n x n` row-major function placed in one quadrant.
/// Quadrants are numbered `2 * row_half + column_half`: 0 top-left,
/// 1 top-right, 2 bottom-left, 3 bottom-right.
pub fn quadrant_copy(
    phi: &DVector<f64>,
    n: usize,
    quadrant: usize,
    ip: InnerProduct,
) -> Result<DVector<f64>> {
    if n == 0 || !n.is_multiple_of(2) || phi.len() != n * n {
        return Err(Error::InvalidInput(format!(
            "quadrant copies need an even side and n*n samples (side {n}, {} samples)",
            phi.len()
        )));
    }
    if quadrant > 3 {
        return Err(Error::InvalidInput(format!("quadrant {quadrant} out of range")));
    }
    let h = n / 2;
    let (row0, col0) = ((quadrant / 2) * h, (quadrant % 2) * h);
    let mut child = DVector::zeros(n * n);
    for r in 0..h {
        for c in 0..h {
            let at = |y: usize, x: usize| phi[y * n + x];
            let avg = 0.25
                * (at(2 * r, 2 * c) + at(2 * r, 2 * c + 1) + at(2 * r + 1, 2 * c)
                    + at(2 * r + 1, 2 * c + 1));
            child[(row0 + r) * n + col0 + c] = avg;
        }
    }
    let metric = Metric::new(Geometry::Square(n), ip);
    unit_child(child, &metric, &format!("quadrant {quadrant} copy"))
}

/// Replica of a single function.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleReplica {
    /// Normalized projection of φ onto its children; `None` when the
    /// projection vanishes.
    pub replicated: Option<DVector<f64>>,
    pub s: f64,
}

fn check_unit(metric: &Metric, phi: &DVector<f64>) -> Result<()> {
    let norm = metric.norm(phi);
    if (norm - 1.0).abs() > ORTHONORMALITY_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "function must have unit norm under {}, got {norm}",
            metric.ip
        )));
    }
    Ok(())
}

/// Best approximation of `phi` within the span of its two half copies.
pub fn replicate_single(phi: &DVector<f64>, ip: InnerProduct) -> Result<SingleReplica> {
    let metric = Metric::new(Geometry::Interval(phi.len()), ip);
    let left = half_copy_left(phi, ip)?;
    let right = half_copy_right(phi, ip)?;
    check_unit(&metric, phi)?;
    let children = gram_schmidt(&metric, &[left, right]).vectors;
    let mut projection = DVector::zeros(phi.len());
    for c in &children {
        projection.axpy(metric.dot(phi, c), c, 1.0);
    }
    let s = metric.norm(&projection);
    if s < PIVOT_DROP {
        return Ok(SingleReplica {
            replicated: None,
            s: 0.0,
        });
    }
    Ok(SingleReplica {
        replicated: Some(projection / s),
        s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The vector was zero.
    Zero,
    /// Gram–Schmidt pivot fell below [`PIVOT_DROP`].
    LinearlyDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DroppedChild {
    pub function: usize,
    pub region: usize,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DroppedFunction {
    pub function: usize,
    pub reason: DropReason,
    /// Norm of what remained of the projection at the pivot.
    pub pivot_norm: f64,
}

/// An orthonormalized child and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Child {
    pub function: usize,
    pub region: usize,
    pub vector: DVector<f64>,
}

/// Everything one replica step produces.
#[derive(Debug, Clone)]
pub struct ReplicaOutcome {
    pub replicated: WaveSet,
    /// Input index that each replicated function descends from.
    pub replicated_origin: Vec<usize>,
    /// `⟨(𝓡φ)_i, φ_i⟩`; zero for functions dropped from the replica.
    pub self_replicability: Vec<f64>,
    /// `⟨φ_i|P|φ_i⟩^{1/2}`.
    pub projection_norms: Vec<f64>,
    /// Projections `R₀φ_i` onto the child space (before Gram–Schmidt).
    pub projections: Vec<DVector<f64>>,
    /// Per region, the `m x k_r` matrix of `⟨φ_i, c⟩` against that region's
    /// orthonormalized children (α for the left half, β for the right).
    pub overlaps: Vec<DMatrix<f64>>,
    pub children: Vec<Child>,
    /// Gram matrix of the orthonormalized children.
    pub child_gram: DMatrix<f64>,
    /// `⟨R₀φ_i, R₀φ_j⟩ = ⟨φ_i|P|φ_j⟩`.
    pub replica_gram: DMatrix<f64>,
    pub dropped_children: Vec<DroppedChild>,
    pub dropped_functions: Vec<DroppedFunction>,
}

impl ReplicaOutcome {
    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.overlaps[0]
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.overlaps[1]
    }

    /// `max_i ‖R₀φ_i − φ_i‖` under the set's metric.
    pub fn max_projection_deviation(&self, input: &WaveSet) -> f64 {
        let metric = input.metric();
        self.projections
            .iter()
            .zip(input.functions())
            .map(|(p, f)| metric.norm(&(p - f)))
            .fold(0.0, f64::max)
    }
}

/// Replica of an orthonormal set on an interval (two children per function).
pub fn replicate_set(ws: &WaveSet) -> Result<ReplicaOutcome> {
    match ws.geometry() {
        Geometry::Interval(_) => replicate_with(ws, |phi, region| {
            if region == 0 {
                half_copy_left(phi, ws.ip())
            } else {
                half_copy_right(phi, ws.ip())
            }
        }),
        Geometry::Square(_) => Err(Error::InvalidInput(
            "replicate_set works on intervals; use replicate_set_2d for squares".into(),
        )),
    }
}

/// Replica of an orthonormal set on a square (four children per function).
pub fn replicate_set_2d(ws: &WaveSet) -> Result<ReplicaOutcome> {
    match ws.geometry() {
        Geometry::Square(n) => {
            replicate_with(ws, |phi, region| quadrant_copy(phi, n, region, ws.ip()))
        }
        Geometry::Interval(_) => Err(Error::InvalidInput(
            "replicate_set_2d works on squares; use replicate_set for intervals".into(),
        )),
    }
}

/// Dispatches on the set's geometry.
pub fn replicate(ws: &WaveSet) -> Result<ReplicaOutcome> {
    match ws.geometry() {
        Geometry::Interval(_) => replicate_set(ws),
        Geometry::Square(_) => replicate_set_2d(ws),
    }
}

fn replicate_with(
    ws: &WaveSet,
    child_of: impl Fn(&DVector<f64>, usize) -> Result<DVector<f64>>,
) -> Result<ReplicaOutcome> {
    let side = ws.geometry().side();
    if !side.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "replica needs an even number of samples per axis, got {side}"
        )));
    }
    let metric = ws.metric();
    let regions = ws.geometry().regions();
    let m = ws.len();

    // children in region-major order: all left copies, then all right copies
    let mut raw_children = Vec::with_capacity(regions * m);
    let mut raw_origin = Vec::with_capacity(regions * m);
    let mut dropped_children = Vec::new();
    for region in 0..regions {
        for (function, phi) in ws.functions().iter().enumerate() {
            match child_of(phi, region) {
                Ok(c) => {
                    raw_children.push(c);
                    raw_origin.push((function, region));
                }
                Err(Error::Degenerate(_)) => dropped_children.push(DroppedChild {
                    function,
                    region,
                    reason: DropReason::Zero,
                }),
                Err(e) => return Err(e),
            }
        }
    }

    let gs = gram_schmidt(&metric, &raw_children);
    for &(idx, _) in &gs.dropped {
        let (function, region) = raw_origin[idx];
        dropped_children.push(DroppedChild {
            function,
            region,
            reason: DropReason::LinearlyDependent,
        });
    }
    let children: Vec<Child> = gs
        .kept
        .iter()
        .zip(gs.vectors)
        .map(|(&idx, vector)| {
            let (function, region) = raw_origin[idx];
            Child {
                function,
                region,
                vector,
            }
        })
        .collect();

    let k = children.len();
    let mut coefficients = DMatrix::zeros(m, k);
    for (i, phi) in ws.functions().iter().enumerate() {
        for (c, child) in children.iter().enumerate() {
            coefficients[(i, c)] = metric.dot(phi, &child.vector);
        }
    }

    let overlaps = (0..regions)
        .map(|region| {
            let cols: Vec<usize> = (0..k).filter(|&c| children[c].region == region).collect();
            DMatrix::from_fn(m, cols.len(), |i, j| coefficients[(i, cols[j])])
        })
        .collect();

    let mut child_gram = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let g = metric.dot(&children[a].vector, &children[b].vector);
            child_gram[(a, b)] = g;
            child_gram[(b, a)] = g;
        }
    }

    let replica_gram = &coefficients * coefficients.transpose();
    let projection_norms: Vec<f64> = (0..m).map(|i| replica_gram[(i, i)].max(0.0).sqrt()).collect();
    let projections: Vec<DVector<f64>> = (0..m)
        .map(|i| {
            let mut p = DVector::zeros(ws.geometry().samples());
            for (c, child) in children.iter().enumerate() {
                p.axpy(coefficients[(i, c)], &child.vector, 1.0);
            }
            p
        })
        .collect();

    // Gram–Schmidt closure; zero projections are reported separately from
    // rank loss among non-zero ones.
    let mut dropped_functions = Vec::new();
    let mut candidates = Vec::with_capacity(m);
    let mut candidate_origin = Vec::with_capacity(m);
    for (i, p) in projections.iter().enumerate() {
        if projection_norms[i] < PIVOT_DROP {
            dropped_functions.push(DroppedFunction {
                function: i,
                reason: DropReason::Zero,
                pivot_norm: projection_norms[i],
            });
        } else {
            candidates.push(p.clone());
            candidate_origin.push(i);
        }
    }
    let closure = gram_schmidt(&metric, &candidates);
    for &(idx, pivot_norm) in &closure.dropped {
        dropped_functions.push(DroppedFunction {
            function: candidate_origin[idx],
            reason: DropReason::LinearlyDependent,
            pivot_norm,
        });
    }
    dropped_functions.sort_by_key(|d| d.function);

    let replicated_origin: Vec<usize> = closure.kept.iter().map(|&i| candidate_origin[i]).collect();
    let mut self_replicability = vec![0.0; m];
    for (g, &origin) in closure.vectors.iter().zip(&replicated_origin) {
        self_replicability[origin] = metric.dot(g, &ws.functions()[origin]);
    }

    Ok(ReplicaOutcome {
        replicated: WaveSet::from_parts(ws.geometry(), ws.ip(), closure.vectors),
        replicated_origin,
        self_replicability,
        projection_norms,
        projections,
        overlaps,
        children,
        child_gram,
        replica_gram,
        dropped_children,
        dropped_functions,
    })
}

/// One step of a fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based step count.
    pub iteration: usize,
    pub self_replicability: Vec<f64>,
    pub projection_norms: Vec<f64>,
    /// `⟨φ_i^{(k)}, φ_i^{(0)}⟩` for each surviving function, matched by origin.
    pub overlap_with_initial: Vec<f64>,
    /// Original index of each surviving function.
    pub origin: Vec<usize>,
    /// Projector distance between this iterate and the previous one.
    pub subspace_distance: f64,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct FixedPointRun {
    pub records: Vec<IterationRecord>,
    /// Initial set followed by every iterate.
    pub history: Vec<WaveSet>,
    pub converged: bool,
}

impl FixedPointRun {
    pub fn final_set(&self) -> &WaveSet {
        self.history.last().expect("history holds at least the initial set")
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("at least one iteration runs")
    }
}

/// Applies the replica transformation until consecutive subspaces are
/// within `tol` of each other or `max_iter` steps have run.
pub fn iterate_to_fixed_point(ws: &WaveSet, max_iter: usize, tol: f64) -> Result<FixedPointRun> {
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    let initial = ws.clone();
    let metric = ws.metric();
    let mut origin: Vec<usize> = (0..ws.len()).collect();
    let mut history = vec![initial.clone()];
    let mut records = Vec::new();
    let mut converged = false;

    for iteration in 1..=max_iter {
        let current = history.last().expect("non-empty history");
        if current.is_empty() {
            return Err(Error::Degenerate(format!(
                "every function was dropped before iteration {iteration}"
            )));
        }
        let outcome = replicate(current)?;
        let next_origin: Vec<usize> = outcome.replicated_origin.iter().map(|&i| origin[i]).collect();
        let overlap_with_initial = outcome
            .replicated
            .functions()
            .iter()
            .zip(&next_origin)
            .map(|(f, &o)| metric.dot(f, &initial.functions()[o]))
            .collect();
        let subspace_distance = outcome.replicated.subspace_distance(current);
        records.push(IterationRecord {
            iteration,
            self_replicability: outcome.self_replicability.clone(),
            projection_norms: outcome.projection_norms.clone(),
            overlap_with_initial,
            origin: next_origin.clone(),
            subspace_distance,
            dropped: outcome.dropped_functions.len(),
        });
        if !outcome.dropped_functions.is_empty() {
            log::info!(
                "iteration {iteration}: dropped {} function(s)",
                outcome.dropped_functions.len()
            );
        }
        origin = next_origin;
        history.push(outcome.replicated);
        if subspace_distance < tol {
            converged = true;
            break;
        }
    }
    Ok(FixedPointRun {
        records,
        history,
        converged,
    })
}
