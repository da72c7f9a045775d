//! Discretised Brownian sample paths on uniform time grids.
//!
//! A [`SamplePath`] is the concrete ω on which every integral, derivative
//! and expansion in the crate is evaluated. Paths are immutable once built
//! and are fully determined by `(grid, dimension, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack, in units of Δt, allowed when snapping a time to a node.
const NODE_SNAP_TOLERANCE: f64 = 1e-7;

/// Uniform grid `t_k = k·Δt`, `k = 0..=N`, with `Δt = T/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    /// Builds a grid with horizon `T > 0` and `N ≥ 2` steps.
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("grid horizon must be positive, got {horizon}")));
        }
        if steps < 2 {
            return Err(Error::Config(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { horizon, steps })
    }

    /// Horizon `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Step size `Δt = T/N`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of node `k`. The last node is pinned to `T` exactly.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Node index of time `t`, or a query error if `t` is not a grid node.
    pub fn node(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = x.round();
        if !x.is_finite() || (x - k).abs() > NODE_SNAP_TOLERANCE || k < 0.0 || k > self.steps as f64 {
            return Err(Error::Query(format!(
                "time {t} is not a node of the grid (T = {}, N = {})",
                self.horizon, self.steps
            )));
        }
        Ok(k as usize)
    }

    /// The grid refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor < 2 {
            return Err(Error::Config(format!("refinement factor must be at least 2, got {factor}")));
        }
        Self::new(self.horizon, self.steps * factor)
    }
}

/// Derives an independent 64-bit seed for stream `index` of a master seed.
///
/// This is the SplitMix64 finaliser applied to `master + (index+1)·γ`, so
/// ensemble member `i` can be generated without touching members `0..i`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A `d`-dimensional Brownian trajectory sampled on a [`TimeGrid`].
///
/// Coordinates are stored one contiguous series per dimension. Driver index
/// `i ≥ 1` refers to coordinate `i − 1`; driver `0` is time itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    seed: u64,
    coords: Vec<Vec<f64>>,
}

impl SamplePath {
    /// Wraps explicit coordinate series, checking the path invariants.
    ///
    /// Used for hand-built paths and for perturbation probes.
    pub fn from_coords(grid: TimeGrid, coords: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Config("a path needs at least one coordinate".into()));
        }
        for (i, c) in coords.iter().enumerate() {
            if c.len() != grid.steps() + 1 {
                return Err(Error::Config(format!(
                    "coordinate {i} has {} values, grid has {} nodes",
                    c.len(),
                    grid.steps() + 1
                )));
            }
            if c[0] != 0.0 {
                return Err(Error::Config(format!("coordinate {i} does not start at the origin")));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("coordinate {i} has non-finite values")));
            }
        }
        Ok(Self { grid, seed, coords })
    }

    /// The grid the path lives on.
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Dimension `d`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Seed the path was generated from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of nodes `N + 1`.
    pub fn len(&self) -> usize {
        self.grid.steps() + 1
    }

    /// Always false; a path has at least three nodes.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Series of coordinate `i` (0-based).
    pub fn coord(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    /// Value of coordinate `i` (0-based) at node `k`.
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.coords[i][k]
    }

    /// `ω_{t_k}` as a vector.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[k]).collect()
    }

    /// Increment of driver `i` over step `k → k+1`: `Δt` for `i = 0`,
    /// `B^i_{k+1} − B^i_k` otherwise.
    #[inline]
    pub fn driver_step(&self, driver: usize, k: usize) -> f64 {
        if driver == 0 {
            self.grid.dt()
        } else {
            let c = &self.coords[driver - 1];
            c[k + 1] - c[k]
        }
    }

    /// `ω_b − ω_a` for node indices.
    pub fn increment_nodes(&self, a: usize, b: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[b] - c[a]).collect()
    }

    /// Copy of the path that agrees with `self` up to node `k` and is frozen
    /// at `ω_{t_k} + bump` from node `k + 1` on.
    ///
    /// With `bump = 0` this is the stopped path; a nonzero bump is a jump at
    /// the first step after `t_k`. Both are used by finite-difference probes
    /// of path derivatives.
    pub fn frozen_after(&self, k: usize, bump: &[f64]) -> Result<Self> {
        if bump.len() != self.dim() {
            return Err(Error::Query(format!(
                "bump has {} components, path has dimension {}",
                bump.len(),
                self.dim()
            )));
        }
        let coords = self
            .coords
            .iter()
            .zip(bump)
            .map(|(c, &b)| {
                let mut out = c.clone();
                let anchor = c[k];
                for v in out.iter_mut().skip(k + 1) {
                    *v = anchor + b;
                }
                out
            })
            .collect();
        Self::from_coords(self.grid, coords, self.seed)
    }
}

/// Samples a `d`-dimensional Brownian path on `grid` from `seed`.
///
/// Increments are i.i.d. `N(0, Δt)` per coordinate drawn from a ChaCha8
/// stream seeded by `seed`, so the same arguments always give the same path.
pub fn simulate_path(grid: TimeGrid, d: usize, seed: u64) -> Result<SamplePath> {
    if d == 0 {
        return Err(Error::Config("path dimension must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = grid.dt().sqrt();
    let coords = (0..d)
        .map(|_| {
            let mut c = Vec::with_capacity(grid.steps() + 1);
            let mut x = 0.0;
            c.push(x);
            for _ in 0..grid.steps() {
                let z: f64 = rng.sample(StandardNormal);
                x += sd * z;
                c.push(x);
            }
            c
        })
        .collect();
    Ok(SamplePath { grid, seed, coords })
}

/// Refines `path` by an integer factor with Brownian-bridge infill.
///
/// Values at the coarse nodes are copied exactly. Each coarse step is filled
/// by sequential conditional sampling of the bridge, driven by a stream
/// derived from `(seed, factor)`.
pub fn refine_path(path: &SamplePath, factor: usize) -> Result<SamplePath> {
    let grid = path.grid.refined(factor)?;
    let seed = derive_seed(path.seed, factor as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.dt();
    let coarse = path.grid.dt();
    let coords = path
        .coords
        .iter()
        .map(|c| {
            let mut out = Vec::with_capacity(grid.steps() + 1);
            for k in 0..path.grid.steps() {
                let (x0, x1) = (c[k], c[k + 1]);
                out.push(x0);
                let mut y = x0;
                for q in 1..factor {
                    // Remaining time to the right endpoint before this draw.
                    let rem = coarse - (q - 1) as f64 * h;
                    let mean = y + (x1 - y) * h / rem;
                    let var = h * (rem - h) / rem;
                    let z: f64 = rng.sample(StandardNormal);
                    y = mean + var.sqrt() * z;
                    out.push(y);
                }
            }
            out.push(c[path.grid.steps()]);
            out
        })
        .collect();
    Ok(SamplePath { grid, seed, coords })
}

/// `ω_t − ω_s` for grid times `s`, `t` in either order.
pub fn increment(path: &SamplePath, s: f64, t: f64) -> Result<Vec<f64>> {
    let a = path.grid.node(s)?;
    let b = path.grid.node(t)?;
    Ok(path.increment_nodes(a, b))
}
