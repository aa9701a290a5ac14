//! Metric multidimensional scaling by SMACOF stress majorization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::linalg::symmetric_eigen;

/// Hyperparameters for [`mds_embed`]. The defaults mirror common MDS
/// toolkit settings and are documented because the embedding depends on them.
#[derive(Debug, Clone)]
pub struct MdsConfig {
    /// Output dimensionality, 2 or 3.
    pub dims: usize,
    pub seed: u64,
    /// Independent seeded restarts; the lowest-stress run wins, ties broken
    /// by restart index so the result stays deterministic.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop a run when the relative stress improvement drops below this.
    pub rel_tol: f64,
}

impl MdsConfig {
    pub fn new(dims: usize, seed: u64) -> Result<Self> {
        if dims != 2 && dims != 3 {
            return Err(Error::InvalidArgument {
                reason: format!("embedding dims must be 2 or 3, got {dims}"),
            });
        }
        Ok(Self {
            dims,
            seed,
            restarts: 8,
            max_iter: 300,
            rel_tol: 1e-7,
        })
    }
}

/// An embedding of n points minimizing raw stress
/// sigma = sum_{i<j} (d_ij - |x_i - x_j|)^2.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub dims: usize,
    /// Row-major n x dims coordinates, centered at the origin and aligned to
    /// principal axes.
    pub coords: Vec<f64>,
    pub stress: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Embedding {
    pub fn n_points(&self) -> usize {
        self.coords.len() / self.dims
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Raw stress divided by the sum of squared target distances; a
    /// scale-free figure of embedding quality.
    pub fn normalized_stress(&self, d: &DistanceMatrix) -> f64 {
        let n = d.n();
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                total += d.get(i, j) * d.get(i, j);
            }
        }
        if total == 0.0 {
            0.0
        } else {
            self.stress / total
        }
    }
}

/// Embeds a symmetric zero-diagonal distance matrix into 2 or 3 dimensions.
///
/// Runs `restarts` seeded SMACOF majorizations (restart r draws its start
/// from a ChaCha8 stream seeded `seed ^ r`) and returns the lowest-stress
/// result. Unconverged matrix entries are refused rather than imputed.
pub fn mds_embed(d: &DistanceMatrix, config: &MdsConfig) -> Result<Embedding> {
    if !d.fully_converged() {
        return Err(Error::UnconvergedEntries);
    }
    let n = d.n();
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            max_asym = max_asym.max((d.get(i, j) - d.get(j, i)).abs());
        }
    }
    if max_asym > 1e-9 {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }

    let runs: Vec<(f64, usize, Vec<f64>, usize)> = (0..config.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let (coords, stress_trace) =
                smacof_trace(d, config.dims, config.seed ^ r, config.max_iter, config.rel_tol);
            let stress = *stress_trace.last().expect("at least one stress value");
            (stress, r as usize, coords, stress_trace.len())
        })
        .collect();

    let best = runs
        .into_iter()
        .min_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).expect("finite stress"))
        .expect("at least one restart");
    let (stress, _, mut coords, iterations) = best;
    canonicalize(&mut coords, n, config.dims);
    Ok(Embedding {
        dims: config.dims,
        coords,
        stress,
        iterations,
        seed: config.seed,
    })
}

/// One majorization run; returns the coordinates and the per-iteration
/// stress sequence (which SMACOF guarantees to be nonincreasing).
pub fn smacof_trace(
    d: &DistanceMatrix,
    dims: usize,
    seed: u64,
    max_iter: usize,
    rel_tol: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = d.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| d.get(i, j))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut x: Vec<f64> = (0..n * dims)
        .map(|_| rng.gen_range(-0.5..0.5) * scale)
        .collect();

    let mut trace = vec![stress(d, &x, dims)];
    let mut bx = vec![0.0; n * n];
    for _ in 0..max_iter {
        // Guttman transform: X <- (1/n) B(X) X.
        for row in bx.iter_mut() {
            *row = 0.0;
        }
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dist = euclid(&x, i, j, dims);
                let b = if dist > 1e-12 { -d.get(i, j) / dist } else { 0.0 };
                bx[i * n + j] = b;
                diag -= b;
            }
            bx[i * n + i] = diag;
        }
        let mut next = vec![0.0; n * dims];
        for i in 0..n {
            for j in 0..n {
                let b = bx[i * n + j];
                if b != 0.0 {
                    for k in 0..dims {
                        next[i * dims + k] += b * x[j * dims + k];
                    }
                }
            }
        }
        for v in &mut next {
            *v /= n as f64;
        }
        x = next;
        let s = stress(d, &x, dims);
        let prev = *trace.last().unwrap();
        trace.push(s);
        if prev == 0.0 || (prev - s) / prev < rel_tol {
            break;
        }
    }
    (x, trace)
}

fn euclid(x: &[f64], i: usize, j: usize, dims: usize) -> f64 {
    (0..dims)
        .map(|k| {
            let delta = x[i * dims + k] - x[j * dims + k];
            delta * delta
        })
        .sum::<f64>()
        .sqrt()
}

/// Raw stress sum_{i<j} (d_ij - |x_i - x_j|)^2.
pub(crate) fn stress(d: &DistanceMatrix, x: &[f64], dims: usize) -> f64 {
    let n = d.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = d.get(i, j) - euclid(x, i, j, dims);
            total += delta * delta;
        }
    }
    total
}

/// Centers the cloud, rotates it onto its principal axes and fixes each
/// axis sign by the lowest-index point with a nonzero component. MDS is only
/// defined up to rigid motions; this pins one representative.
fn canonicalize(x: &mut [f64], n: usize, dims: usize) {
    for k in 0..dims {
        let mean: f64 = (0..n).map(|i| x[i * dims + k]).sum::<f64>() / n as f64;
        for i in 0..n {
            x[i * dims + k] -= mean;
        }
    }
    let mut cov = vec![0.0; dims * dims];
    for i in 0..n {
        for a in 0..dims {
            for b in 0..dims {
                cov[a * dims + b] += x[i * dims + a] * x[i * dims + b];
            }
        }
    }
    let (_, axes) = symmetric_eigen(&cov, dims);
    let rotated: Vec<f64> = (0..n * dims)
        .map(|idx| {
            let (i, k) = (idx / dims, idx % dims);
            (0..dims).map(|a| x[i * dims + a] * axes[a * dims + k]).sum()
        })
        .collect();
    x.copy_from_slice(&rotated);
    for k in 0..dims {
        if let Some(i) = (0..n).find(|&i| x[i * dims + k].abs() > 1e-9) {
            if x[i * dims + k] < 0.0 {
                for p in 0..n {
                    x[p * dims + k] = -x[p * dims + k];
                }
            }
        }
    }
}
