use rand::Rng;
use rand_distr::StandardNormal;

use super::layout::SpaceTimeLayout;
use super::sample::{Margin, ProcessSample};
use super::variogram::VariogramSpec;
use crate::error::{Error, Result};
use crate::rng;

const JITTERS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Zero-mean Gaussian field with a given variogram, pinned to zero at one
/// origin point: `cov(a, b) = ½{γ(a,o) + γ(b,o) − γ(a,b)}`.
///
/// The covariance is factored once (packed lower-triangular Cholesky with
/// semidefinite pivots), so coincident points receive identical values.
#[derive(Debug, Clone)]
pub struct GaussianField {
    n: usize,
    origin: usize,
    chol: Vec<f64>,
    /// Columns with a nonzero pivot; the rest contribute nothing.
    active: Vec<usize>,
}

impl GaussianField {
    pub fn new(v: &VariogramSpec, points: &[[f64; 3]], origin: usize) -> Result<Self> {
        let n = points.len();
        if origin >= n {
            return Err(Error::Parameter(format!("origin {origin} out of range for {n} points")));
        }
        let g_origin: Vec<f64> = points.iter().map(|&p| v.gamma_points(p, points[origin])).collect();
        let mut cov = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            for j in 0..=i {
                let g = v.gamma_points(points[i], points[j]);
                cov[i * (i + 1) / 2 + j] = 0.5 * (g_origin[i] + g_origin[j] - g);
            }
        }
        let mut last = String::new();
        for &jitter in &JITTERS {
            match factor(&cov, n, origin, jitter) {
                Ok((chol, active)) => {
                    if jitter > 0.0 {
                        log::warn!("covariance needed diagonal jitter {jitter:e}");
                    }
                    return Ok(Self {
                        n,
                        origin,
                        chol,
                        active,
                    });
                }
                Err(e) => last = e,
            }
        }
        Err(Error::Numerical(format!(
            "covariance not positive semidefinite after jitter 1e-6: {last}"
        )))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// One draw of the field into `out` (length `len()`); `out[origin] == 0`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        for &k in &self.active {
            z[k] = rng.sample(StandardNormal);
        }
        for i in 0..self.n {
            let row = &self.chol[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            let mut acc = 0.0;
            for &k in &self.active {
                if k > i {
                    break;
                }
                acc += row[k] * z[k];
            }
            out[i] = acc;
        }
        out[self.origin] = 0.0;
    }
}

fn factor(cov: &[f64], n: usize, origin: usize, jitter: f64) -> std::result::Result<(Vec<f64>, Vec<usize>), String> {
    let max_diag = (0..n).map(|i| cov[i * (i + 1) / 2 + i]).fold(0.0, f64::max);
    let tol = 1e-12 * max_diag.max(1e-300);
    let mut l = vec![0.0; cov.len()];
    let mut active = Vec::new();
    for j in 0..n {
        let jj = j * (j + 1) / 2;
        let mut d = cov[jj + j] + if j == origin { 0.0 } else { jitter };
        for k in 0..j {
            d -= l[jj + k] * l[jj + k];
        }
        if d > tol {
            let pivot = d.sqrt();
            l[jj + j] = pivot;
            for i in j + 1..n {
                let ii = i * (i + 1) / 2;
                let mut s = cov[ii + j];
                for k in 0..j {
                    s -= l[ii + k] * l[jj + k];
                }
                l[ii + j] = s / pivot;
            }
            active.push(j);
        } else if d < -1e3 * tol.max(1e-14) {
            return Err(format!("negative pivot {d:e} at point {j}"));
        }
    }
    Ok((l, active))
}

/// `n` independent draws (one per replicate) of the field pinned at
/// `anchor`, over all points of `layout`.
pub fn sample_gaussian_field(
    v: &VariogramSpec,
    layout: &SpaceTimeLayout,
    anchor: usize,
    seed: u64,
) -> Result<ProcessSample> {
    let np = layout.n_points();
    if np > 10_000 {
        return Err(Error::Parameter(format!("{np} points exceed the dense limit of 10^4")));
    }
    let points: Vec<[f64; 3]> = (0..np).map(|p| layout.point(p)).collect();
    let field = GaussianField::new(v, &points, anchor)?;
    let mut values = vec![0.0; layout.n_cells()];
    let mut z = vec![0.0; np];
    for (r, chunk) in values.chunks_mut(np).enumerate() {
        let mut rng = rng::stream(seed, &[r as u64]);
        field.sample_into(&mut rng, &mut z, chunk);
    }
    Ok(ProcessSample {
        layout: layout.clone(),
        values,
        margin: Margin::Gaussian,
    })
}
