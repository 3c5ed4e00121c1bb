//! Block renormalization on chains: the two-block variational Ansatz and the
//! hierarchical merge-and-truncate scheme with free-boundary blocks.
//!
//! Merging never builds separate boundary-restoring and hopping operators.
//! The exact Hamiltonian of the merged segment is projected onto the embedded
//! block states directly; the junction entries that differ from the isolated
//! blocks are recorded in [`Junction`] for inspection.

use std::fmt::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::eigen::{lowest_eigenpairs, rayleigh_ritz};
use crate::error::{Error, Result};
use crate::lattice::{chain_matrix, BoundaryCondition};

/// Relative errors are only reported when the exact value exceeds this.
const RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CbrgConfig {
    pub block_sites: usize,
    pub kept_states: usize,
    /// Number of pairwise merges; the chain holds `2^levels` blocks.
    pub levels: usize,
    pub bc: BoundaryCondition,
    pub block_bc: BoundaryCondition,
    pub potential: Option<Vec<f64>>,
    /// Keep every level's retained wavefunctions in the report.
    pub record_states: bool,
}

impl CbrgConfig {
    pub fn new(block_sites: usize, kept_states: usize, levels: usize, bc: BoundaryCondition) -> Self {
        CbrgConfig {
            block_sites,
            kept_states,
            levels,
            bc,
            block_bc: BoundaryCondition::Free,
            potential: None,
            record_states: false,
        }
    }

    pub fn total_sites(&self) -> usize {
        self.block_sites << self.levels
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_sites < 2 {
            return Err(Error::InvalidInput(format!(
                "blocks need at least 2 sites, got {}",
                self.block_sites
            )));
        }
        if self.kept_states == 0 || self.kept_states > self.block_sites {
            return Err(Error::InvalidInput(format!(
                "kept_states must be in 1..={}, got {}",
                self.block_sites, self.kept_states
            )));
        }
        if self.levels == 0 || self.levels > 20 {
            return Err(Error::InvalidInput(format!(
                "levels must be in 1..=20, got {}",
                self.levels
            )));
        }
        if let Some(v) = &self.potential {
            if v.len() != self.total_sites() {
                return Err(Error::InvalidInput(format!(
                    "potential has {} entries, the chain has {} sites",
                    v.len(),
                    self.total_sites()
                )));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "block_sites={} kept_states={} levels={} bc={} block_bc={} potential={}",
            self.block_sites,
            self.kept_states,
            self.levels,
            self.bc,
            self.block_bc,
            if self.potential.is_some() { "given" } else { "none" }
        )
    }
}

/// Approximate and exact low spectrum of one block at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockEstimate {
    pub lo: usize,
    pub hi: usize,
    pub approximate: Vec<f64>,
    /// Dense-exact eigenvalues of the same segment Hamiltonian.
    pub exact: Vec<f64>,
}

/// Matrix elements of a merged segment that the isolated blocks lack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Junction {
    pub left_site: usize,
    pub right_site: usize,
    pub hopping: f64,
    pub left_diagonal_correction: f64,
    pub right_diagonal_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    /// 1 for the isolated blocks, increasing by one per merge.
    pub level: usize,
    pub block_sites: usize,
    pub blocks: Vec<BlockEstimate>,
    pub junctions: Vec<Junction>,
    /// Retained states per block, embedded in the block's own segment.
    #[serde(skip)]
    pub states: Option<Vec<Vec<DVector<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RGReport {
    pub method: String,
    pub config: String,
    pub levels: Vec<LevelReport>,
    pub approximate: Vec<f64>,
    pub exact: Vec<f64>,
    pub absolute_error: Vec<f64>,
    pub relative_error: Vec<Option<f64>>,
    /// Approximate top-level states on the full chain.
    #[serde(skip)]
    pub states: Vec<DVector<f64>>,
}

impl RGReport {
    fn new(
        method: &str,
        config: String,
        levels: Vec<LevelReport>,
        approximate: Vec<f64>,
        exact: Vec<f64>,
        states: Vec<DVector<f64>>,
    ) -> Self {
        let absolute_error: Vec<f64> = approximate.iter().zip(&exact).map(|(a, e)| a - e).collect();
        let relative_error = absolute_error
            .iter()
            .zip(&exact)
            .map(|(d, e)| (e.abs() > RELATIVE_FLOOR).then(|| d / e.abs()))
            .collect();
        RGReport {
            method: method.into(),
            config,
            levels,
            approximate,
            exact,
            absolute_error,
            relative_error,
            states,
        }
    }

    /// Smallest `approximate - exact` over every block of every level.
    pub fn min_variational_margin(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| &l.blocks)
            .flat_map(|b| b.approximate.iter().zip(&b.exact).map(|(a, e)| a - e))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_variational(&self, tolerance: f64) -> bool {
        self.min_variational_margin() >= -tolerance
    }

    pub fn ground_relative_error(&self) -> Option<f64> {
        self.relative_error.first().copied().flatten()
    }

    /// Structured plain-text rendering: config echo, per-level tables,
    /// junction elements and the error summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# method={} {}", self.method, self.config);
        for level in &self.levels {
            let _ = writeln!(
                out,
                "\n[level {}] block_sites={} blocks={}",
                level.level,
                level.block_sites,
                level.blocks.len()
            );
            let _ = writeln!(out, "block,lo,hi,index,approximate,exact");
            for (b, block) in level.blocks.iter().enumerate() {
                for (i, (a, e)) in block.approximate.iter().zip(&block.exact).enumerate() {
                    let _ = writeln!(out, "{b},{},{},{i},{a:.16e},{e:.16e}", block.lo, block.hi);
                }
            }
            if !level.junctions.is_empty() {
                let _ = writeln!(out, "\n[junctions level {}]", level.level);
                let _ = writeln!(
                    out,
                    "left_site,right_site,hopping,left_diagonal_correction,right_diagonal_correction"
                );
                for j in &level.junctions {
                    let _ = writeln!(
                        out,
                        "{},{},{:.16e},{:.16e},{:.16e}",
                        j.left_site,
                        j.right_site,
                        j.hopping,
                        j.left_diagonal_correction,
                        j.right_diagonal_correction
                    );
                }
            }
        }
        let _ = writeln!(out, "\n[summary]");
        let _ = writeln!(out, "index,approximate,exact,absolute_error,relative_error");
        for i in 0..self.approximate.len() {
            let rel = match self.relative_error[i] {
                Some(r) => format!("{r:.16e}"),
                None => "NA".into(),
            };
            let _ = writeln!(
                out,
                "{i},{:.16e},{:.16e},{:.16e},{rel}",
                self.approximate[i], self.exact[i], self.absolute_error[i]
            );
        }
        let _ = writeln!(out, "min_variational_margin={:.16e}", self.min_variational_margin());
        out
    }
}

fn embed(v: &DVector<f64>, offset: usize, len: usize) -> DVector<f64> {
    let mut out = DVector::zeros(len);
    out.rows_mut(offset, v.len()).copy_from(v);
    out
}

/// Two fixed- or free-boundary blocks of `block_sites` each, joined into one
/// chain; the variational space is the two zero-extended block ground states.
pub fn naive_brg(block_sites: usize, bc: BoundaryCondition) -> Result<RGReport> {
    if block_sites < 2 {
        return Err(Error::InvalidInput(format!(
            "blocks need at least 2 sites, got {block_sites}"
        )));
    }
    let total = 2 * block_sites;
    let block_h = chain_matrix(block_sites, bc, bc, None)?;
    let block = lowest_eigenpairs(&block_h, 1)?;
    let ground = block.vector(0);

    let full = chain_matrix(total, bc, bc, None)?;
    let basis = [embed(&ground, 0, total), embed(&ground, block_sites, total)];
    let projected = rayleigh_ritz(&full, &basis)?;
    let exact = lowest_eigenpairs(&full, 1)?;

    let junction = Junction {
        left_site: block_sites - 1,
        right_site: block_sites,
        hopping: full[(block_sites - 1, block_sites)],
        left_diagonal_correction: full[(block_sites - 1, block_sites - 1)]
            - block_h[(block_sites - 1, block_sites - 1)],
        right_diagonal_correction: full[(block_sites, block_sites)] - block_h[(0, 0)],
    };
    let levels = vec![
        LevelReport {
            level: 1,
            block_sites,
            blocks: (0..2)
                .map(|p| BlockEstimate {
                    lo: p * block_sites,
                    hi: (p + 1) * block_sites,
                    approximate: block.eigenvalues.clone(),
                    exact: block.eigenvalues.clone(),
                })
                .collect(),
            junctions: Vec::new(),
            states: None,
        },
        LevelReport {
            level: 2,
            block_sites: total,
            blocks: vec![BlockEstimate {
                lo: 0,
                hi: total,
                approximate: vec![projected.eigenvalues[0]],
                exact: exact.eigenvalues.clone(),
            }],
            junctions: vec![junction],
            states: None,
        },
    ];
    Ok(RGReport::new(
        "naive_brg",
        format!("block_sites={block_sites} bc={bc}"),
        levels,
        vec![projected.eigenvalues[0]],
        exact.eigenvalues,
        vec![projected.vector(0)],
    ))
}

/// Hierarchical merge-and-truncate renormalization on a chain of
/// `block_sites * 2^levels` sites.
pub fn cbrg(config: &CbrgConfig) -> Result<RGReport> {
    config.validate()?;
    let total = config.total_sites();
    let kept = config.kept_states;
    let segment = |lo: usize, hi: usize| {
        let left = if lo == 0 { config.bc } else { config.block_bc };
        let right = if hi == total { config.bc } else { config.block_bc };
        let potential = config.potential.as_ref().map(|v| &v[lo..hi]);
        chain_matrix(hi - lo, left, right, potential)
    };

    struct Block {
        lo: usize,
        hi: usize,
        hamiltonian: DMatrix<f64>,
        states: Vec<DVector<f64>>,
    }

    let mut levels = Vec::with_capacity(config.levels + 1);
    let mut blocks = Vec::with_capacity(1 << config.levels);
    let mut estimates = Vec::new();
    for p in 0..(1usize << config.levels) {
        let (lo, hi) = (p * config.block_sites, (p + 1) * config.block_sites);
        let hamiltonian = segment(lo, hi)?;
        let spectrum = lowest_eigenpairs(&hamiltonian, kept)?;
        estimates.push(BlockEstimate {
            lo,
            hi,
            approximate: spectrum.eigenvalues.clone(),
            exact: spectrum.eigenvalues.clone(),
        });
        blocks.push(Block {
            lo,
            hi,
            hamiltonian,
            states: spectrum.vectors(),
        });
    }
    let record = |blocks: &[Block]| {
        config
            .record_states
            .then(|| blocks.iter().map(|b| b.states.clone()).collect())
    };
    levels.push(LevelReport {
        level: 1,
        block_sites: config.block_sites,
        blocks: estimates,
        junctions: Vec::new(),
        states: record(&blocks),
    });

    let mut top_values = Vec::new();
    for level in 2..=config.levels + 1 {
        let mut merged = Vec::with_capacity(blocks.len() / 2);
        let mut estimates = Vec::with_capacity(blocks.len() / 2);
        let mut junctions = Vec::with_capacity(blocks.len() / 2);
        for pair in blocks.chunks_exact(2) {
            let (left, right) = (&pair[0], &pair[1]);
            let (lo, mid, hi) = (left.lo, left.hi, right.hi);
            let len = hi - lo;
            let hamiltonian = segment(lo, hi)?;
            let basis: Vec<DVector<f64>> = left
                .states
                .iter()
                .map(|s| embed(s, 0, len))
                .chain(right.states.iter().map(|s| embed(s, mid - lo, len)))
                .collect();
            // embedded states are orthonormal by construction; rayleigh_ritz
            // rejects the basis otherwise
            let ritz = rayleigh_ritz(&hamiltonian, &basis)?;
            let exact = lowest_eigenpairs(&hamiltonian, kept)?;
            let (a, b) = (mid - lo - 1, mid - lo);
            let left_len = left.hamiltonian.nrows();
            junctions.push(Junction {
                left_site: mid - 1,
                right_site: mid,
                hopping: hamiltonian[(a, b)],
                left_diagonal_correction: hamiltonian[(a, a)]
                    - left.hamiltonian[(left_len - 1, left_len - 1)],
                right_diagonal_correction: hamiltonian[(b, b)] - right.hamiltonian[(0, 0)],
            });
            let approximate = ritz.eigenvalues[..kept].to_vec();
            estimates.push(BlockEstimate {
                lo,
                hi,
                approximate: approximate.clone(),
                exact: exact.eigenvalues,
            });
            top_values = approximate;
            merged.push(Block {
                lo,
                hi,
                hamiltonian,
                states: (0..kept).map(|i| ritz.vector(i)).collect(),
            });
        }
        blocks = merged;
        levels.push(LevelReport {
            level,
            block_sites: blocks[0].hi - blocks[0].lo,
            blocks: estimates,
            junctions,
            states: record(&blocks),
        });
    }

    let exact = levels
        .last()
        .map(|l| l.blocks[0].exact.clone())
        .unwrap_or_default();
    let states = blocks.pop().map(|b| b.states).unwrap_or_default();
    Ok(RGReport::new(
        "cbrg",
        config.describe(),
        levels,
        top_values,
        exact,
        states,
    ))
}
