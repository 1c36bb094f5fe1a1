//! Sketch distributions and reproducible sketch generation.
//!
//! An OSNAP sketch with `m` rows and sparsity `s` stacks `s` CountSketch
//! blocks of height `m / s`. Column `l` has exactly one `±1/√s` entry in each
//! block `γ`, at a uniformly random row of rows `[γ·m/s, (γ+1)·m/s)`.
//!
//! Row positions are 0-based. A position `r` stored here corresponds to row
//! `r + 1` in the usual 1-based matrix notation, and block `γ` here is block
//! `γ + 1` there.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{OseError, Result};
use crate::linalg::DenseMatrix;
use crate::rng::column_stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    Osnap,
    Countsketch,
    Gaussian,
}

/// Complete description of a sketch distribution plus the seed selecting one
/// draw from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub m: usize,
    pub n: usize,
    /// Nonzeros per column. Equal to `m` for the dense Gaussian sketch.
    pub s: usize,
    pub seed: u64,
}

impl SketchSpec {
    pub fn osnap(m: usize, n: usize, s: usize, seed: u64) -> Result<Self> {
        let spec = SketchSpec {
            kind: SketchKind::Osnap,
            m,
            n,
            s,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn countsketch(m: usize, n: usize, seed: u64) -> Result<Self> {
        let spec = SketchSpec {
            kind: SketchKind::Countsketch,
            m,
            n,
            s: 1,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        let spec = SketchSpec {
            kind: SketchKind::Gaussian,
            m,
            n,
            s: m,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(OseError::param(format!(
                "sketch dimensions must be positive, got m={}, n={}",
                self.m, self.n
            )));
        }
        if self.s == 0 || self.s > self.m {
            return Err(OseError::param(format!(
                "sparsity s={} must lie in [1, m={}]",
                self.s, self.m
            )));
        }
        match self.kind {
            SketchKind::Osnap if !self.m.is_multiple_of(self.s) => Err(OseError::param(format!(
                "sparsity s={} does not divide m={}",
                self.s, self.m
            ))),
            SketchKind::Countsketch if self.s != 1 => {
                Err(OseError::param(format!("CountSketch has s=1, got s={}", self.s)))
            }
            SketchKind::Gaussian if self.s != self.m => Err(OseError::param(format!(
                "the Gaussian sketch is dense: s must equal m={}, got {}",
                self.m, self.s
            ))),
            _ if self.m > u32::MAX as usize => {
                Err(OseError::param(format!("m={} exceeds the supported row count", self.m)))
            }
            _ => Ok(()),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SketchSpec { seed, ..*self }
    }

    /// Height `m / s` of each CountSketch block.
    pub fn block_size(&self) -> usize {
        self.m / self.s
    }

    /// Per-entry nonzero probability `p = s / m`.
    pub fn p(&self) -> f64 {
        self.s as f64 / self.m as f64
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.kind, SketchKind::Osnap | SketchKind::Countsketch)
    }
}

/// A materialized OSNAP (or CountSketch) matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsnapSketch {
    spec: SketchSpec,
    /// `n * s` row positions, column-major: entry `l * s + γ` lies in block `γ`.
    positions: Vec<u32>,
    signs: Vec<i8>,
    scale: f64,
}

impl OsnapSketch {
    /// Builds a sketch from explicit positions and signs, checking the block
    /// structure. Used by the exhaustive enumerators.
    pub fn from_parts(spec: SketchSpec, positions: Vec<u32>, signs: Vec<i8>) -> Result<Self> {
        spec.validate()?;
        if !spec.is_sparse() {
            return Err(OseError::param("a Gaussian spec cannot back an OSNAP sketch"));
        }
        let (n, s, b) = (spec.n, spec.s, spec.block_size());
        if positions.len() != n * s || signs.len() != n * s {
            return Err(OseError::shape(format!("expected {} positions and signs", n * s)));
        }
        for (idx, (&pos, &sign)) in positions.iter().zip(&signs).enumerate() {
            let gamma = idx % s;
            let pos = pos as usize;
            if pos < gamma * b || pos >= (gamma + 1) * b {
                return Err(OseError::param(format!(
                    "position {pos} of column {} is outside block {gamma}",
                    idx / s
                )));
            }
            if sign != 1 && sign != -1 {
                return Err(OseError::param(format!("sign {sign} is not ±1")));
            }
        }
        Ok(OsnapSketch {
            spec,
            positions,
            signs,
            scale: 1.0 / (s as f64).sqrt(),
        })
    }

    pub fn spec(&self) -> &SketchSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn s(&self) -> usize {
        self.spec.s
    }

    /// `1/√s`, the magnitude of every nonzero of the scaled sketch.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `(row, sign)` pairs of column `l`, one per block, in block order.
    pub fn column(&self, l: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.spec.s;
        self.positions[l * s..(l + 1) * s]
            .iter()
            .zip(&self.signs[l * s..(l + 1) * s])
            .map(|(&r, &sg)| (r as usize, sg as f64))
    }

    /// Nonzeros of the scaled matrix as `(row, col, value)`, sorted by
    /// `(col, row)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.positions.len());
        for l in 0..self.spec.n {
            // Blocks are increasing in row, so block order is row order.
            out.extend(self.column(l).map(|(r, sg)| (r, l, sg * self.scale)));
        }
        out
    }

    /// Dense `m x n` copy of the scaled sketch.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.spec.m, self.spec.n);
        for (r, c, v) in self.triplets() {
            out[(r, c)] = v;
        }
        out
    }
}

/// A dense sketch with i.i.d. `N(0, 1/m)` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSketch {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    /// Row-major `m x n` entries.
    pub entries: DenseMatrix,
}

/// Either kind of materialized sketch.
#[derive(Clone, Debug, PartialEq)]
pub enum Sketch {
    Osnap(OsnapSketch),
    Gaussian(GaussianSketch),
}

impl Sketch {
    pub fn generate(spec: &SketchSpec) -> Result<Sketch> {
        match spec.kind {
            SketchKind::Gaussian => Ok(Sketch::Gaussian(generate_gaussian(spec.m, spec.n, spec.seed)?)),
            _ => Ok(Sketch::Osnap(generate_osnap(spec)?)),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Sketch::Osnap(s) => s.m(),
            Sketch::Gaussian(g) => g.m,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Sketch::Osnap(s) => s.n(),
            Sketch::Gaussian(g) => g.n,
        }
    }
}

/// Draws an OSNAP sketch. Column `l` is generated from its own stream keyed
/// by `(seed, l)`; within the column, block `γ` consumes the `γ`-th
/// (position, sign) draw, so the output is a pure function of the spec.
pub fn generate_osnap(spec: &SketchSpec) -> Result<OsnapSketch> {
    spec.validate()?;
    if !spec.is_sparse() {
        return Err(OseError::param("generate_osnap needs an osnap or countsketch spec"));
    }
    let (n, s, b) = (spec.n, spec.s, spec.block_size());
    let mut positions = vec![0u32; n * s];
    let mut signs = vec![0i8; n * s];
    positions
        .par_chunks_mut(s)
        .zip(signs.par_chunks_mut(s))
        .enumerate()
        .with_min_len(256)
        .for_each(|(l, (pos, sg))| {
            let mut rng = column_stream(spec.seed, l as u64);
            for gamma in 0..s {
                let offset = rng.random_range(0..b);
                pos[gamma] = (gamma * b + offset) as u32;
                sg[gamma] = if rng.random::<bool>() { 1 } else { -1 };
            }
        });
    Ok(OsnapSketch {
        spec: *spec,
        positions,
        signs,
        scale: 1.0 / (s as f64).sqrt(),
    })
}

/// Draws an `m x n` matrix of i.i.d. `N(0, 1/m)` entries; column `l` comes
/// from the stream keyed by `(seed, l)`.
pub fn generate_gaussian(m: usize, n: usize, seed: u64) -> Result<GaussianSketch> {
    if m == 0 || n == 0 {
        return Err(OseError::param(format!(
            "sketch dimensions must be positive, got m={m}, n={n}"
        )));
    }
    let sd = 1.0 / (m as f64).sqrt();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut rng = column_stream(seed, l as u64);
            (0..m).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect();
    let entries = DenseMatrix::from_fn(m, n, |i, l| columns[l][i]);
    Ok(GaussianSketch { m, n, seed, entries })
}
