//! Penalised tensor-product cubic B-spline smoothing of binned surfaces.
//!
//! Knots sit at the bin edges (clamped at both ends). The roughness penalty
//! is the squared second divided difference of the coefficients along each
//! axis, taken at the Greville abscissae, so its null space is exactly the
//! bilinear functions: constants and linear trends are reproduced without
//! shrinkage, while the data alone could never pin down all coefficients.

use log::warn;
use nalgebra::{DMatrix, DVector};

use super::grid::PairBinGrid;
use crate::error::{Error, Result};

/// Default penalty weight, relative to weights normalised to mean one.
pub const DEFAULT_KAPPA: f64 = 0.05;

/// Clamped cubic knot vector on the given edges.
fn clamped_knots(edges: &[f64]) -> Vec<f64> {
    let (a, b) = (edges[0], edges[edges.len() - 1]);
    let mut t = vec![a; 3];
    t.extend_from_slice(edges);
    t.extend([b; 3]);
    t
}

/// Values of all cubic B-splines on `knots` at `x`.
fn basis(knots: &[f64], x: f64) -> Vec<f64> {
    const P: usize = 3;
    let n = knots.len() - P - 1;
    // span i with knots[i] <= x < knots[i+1], restricted to the valid range
    let mut i = knots.partition_point(|&k| k <= x).saturating_sub(1);
    i = i.clamp(P, n - 1);
    let mut nvals = [0.0; P + 1];
    nvals[0] = 1.0;
    let (mut left, mut right) = ([0.0; P + 1], [0.0; P + 1]);
    for j in 1..=P {
        left[j] = x - knots[i + 1 - j];
        right[j] = knots[i + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = nvals[r] / (right[r + 1] + left[j - r]);
            nvals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        nvals[j] = saved;
    }
    let mut out = vec![0.0; n];
    for (r, v) in nvals.iter().enumerate() {
        out[i - P + r] = *v;
    }
    out
}

fn greville(knots: &[f64]) -> Vec<f64> {
    let n = knots.len() - 4;
    (0..n)
        .map(|i| (knots[i + 1] + knots[i + 2] + knots[i + 3]) / 3.0)
        .collect()
}

/// `DᵀD` for second divided differences at the Greville abscissae, scaled
/// by the squared mean bin width.
fn penalty_1d(edges: &[f64]) -> DMatrix<f64> {
    let xi = greville(&clamped_knots(edges));
    let n = xi.len();
    let h = (edges[edges.len() - 1] - edges[0]) / (edges.len() - 1) as f64;
    let mut d = DMatrix::zeros(n.saturating_sub(2), n);
    for i in 0..n.saturating_sub(2) {
        let a = h * h / (xi[i + 1] - xi[i]);
        let b = h * h / (xi[i + 2] - xi[i + 1]);
        d[(i, i)] = a;
        d[(i, i + 1)] = -a - b;
        d[(i, i + 2)] = b;
    }
    d.transpose() * d
}

/// Smooth per-bin `values` (NaN = missing) with per-bin `weights`, and
/// evaluate the fit at every bin center, missing bins included.
pub fn smooth_values(grid: &PairBinGrid, values: &[f64], weights: &[f64], kappa: f64) -> Result<Vec<f64>> {
    let nb = grid.n_bins();
    if values.len() != nb || weights.len() != nb {
        return Err(Error::Diagnostics(format!(
            "surface has {} values and {} weights for {nb} bins",
            values.len(),
            weights.len()
        )));
    }
    let used: Vec<usize> = (0..nb).filter(|&b| values[b].is_finite() && weights[b] > 0.0).collect();
    if used.is_empty() {
        return Err(Error::Diagnostics("no populated bins to smooth".into()));
    }
    let mean_w = used.iter().map(|&b| weights[b]).sum::<f64>() / used.len() as f64;

    let (ks, kt) = (
        clamped_knots(grid.spatial_edges()),
        clamped_knots(grid.temporal_edges()),
    );
    let (ns, nt) = (ks.len() - 4, kt.len() - 4);
    let row = |b: usize| -> Vec<f64> {
        let (hs, ht) = grid.center(b);
        let (bs, bt) = (basis(&ks, hs), basis(&kt, ht));
        let mut r = Vec::with_capacity(ns * nt);
        for a in &bs {
            r.extend(bt.iter().map(|c| a * c));
        }
        r
    };
    let nc = ns * nt;
    let mut lhs = DMatrix::<f64>::zeros(nc, nc);
    let mut rhs = DVector::<f64>::zeros(nc);
    for &b in &used {
        let r = DVector::from_vec(row(b));
        let w = weights[b] / mean_w;
        lhs += w * &r * r.transpose();
        rhs += w * values[b] * &r;
    }
    let pen = penalty_1d(grid.spatial_edges()).kronecker(&DMatrix::identity(nt, nt))
        + DMatrix::identity(ns, ns).kronecker(&penalty_1d(grid.temporal_edges()));
    lhs += kappa * pen;

    let fitted = lhs
        .cholesky()
        .map(|c| c.solve(&rhs))
        .filter(|c| c.iter().all(|v| v.is_finite()))
        .map(|coef| {
            (0..nb)
                .map(|b| DVector::from_vec(row(b)).dot(&coef))
                .collect::<Vec<_>>()
        });
    Ok(match fitted {
        Some(f) => f,
        None => {
            warn!("penalised spline system is singular; falling back to a per-axis linear fit");
            linear_fallback(grid, values, weights, &used)
        }
    })
}

/// Weighted least squares `a + b·h_S + c·h_T`, dropping terms the
/// populated bins cannot identify.
fn linear_fallback(grid: &PairBinGrid, values: &[f64], weights: &[f64], used: &[usize]) -> Vec<f64> {
    let nb = grid.n_bins();
    let distinct = |f: &dyn Fn(usize) -> f64| used.iter().any(|&b| (f(b) - f(used[0])).abs() > 1e-12);
    let with_s = distinct(&|b| grid.center(b).0);
    let with_t = distinct(&|b| grid.center(b).1);
    let features = |b: usize| {
        let (hs, ht) = grid.center(b);
        let mut f = vec![1.0];
        if with_s {
            f.push(hs);
        }
        if with_t {
            f.push(ht);
        }
        f
    };
    let k = features(used[0]).len();
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    for &b in used {
        let f = DVector::from_vec(features(b));
        xtx += weights[b] * &f * f.transpose();
        xty += weights[b] * values[b] * &f;
    }
    match xtx.clone().lu().solve(&xty) {
        Some(beta) if beta.iter().all(|v| v.is_finite()) => {
            (0..nb).map(|b| DVector::from_vec(features(b)).dot(&beta)).collect()
        }
        _ => {
            let sw: f64 = used.iter().map(|&b| weights[b]).sum();
            let m = used.iter().map(|&b| weights[b] * values[b]).sum::<f64>() / sw;
            vec![m; nb]
        }
    }
}
