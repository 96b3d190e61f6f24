use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::campaign::{TrainingSet, MIN_CAMPAIGN_ROWS};
use super::features::FeatureVector;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::rng::{self, SimRng};

/// Regression-forest settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Every leaf holds at least this many (bootstrap) rows.
    pub min_leaf: usize,
    /// Features tried per split; `None` means a third of them.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            min_leaf: 5,
            mtry: None,
            seed: 0,
        }
    }
}

/// Training metadata stored with each model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestMeta {
    pub target: usize,
    pub schema: u64,
    pub n_trees: usize,
    pub min_leaf: usize,
    pub mtry: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_features: usize,
    pub target_min: f64,
    pub target_max: f64,
    /// Out-of-bag error; NaN when no row was ever out of bag.
    pub oob_mse: f64,
    pub oob_r2: f64,
}

pub(crate) const LEAF: u32 = u32::MAX;

/// Split nodes send `x[feature] <= threshold` left. Leaves have
/// `feature == LEAF` and keep their mean in `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub feature: u32,
    pub value: f64,
    pub left: u32,
    pub right: u32,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, n: u32) -> Self {
        Self {
            nodes: vec![Node {
                feature: LEAF,
                value,
                left: 0,
                right: 0,
                n,
            }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            let nd = &self.nodes[k];
            if nd.feature == LEAF {
                return nd.value;
            }
            k = if x[nd.feature as usize] <= nd.value {
                nd.left
            } else {
                nd.right
            } as usize;
        }
    }

    pub(crate) fn validate(&self, n_features: usize) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Model("empty tree".into()));
        }
        for (k, nd) in self.nodes.iter().enumerate() {
            if nd.feature == LEAF {
                if !nd.value.is_finite() {
                    return Err(Error::Model("non-finite leaf".into()));
                }
            } else if nd.feature as usize >= n_features
                || nd.left as usize <= k
                || nd.right as usize <= k
                || nd.left as usize >= n
                || nd.right as usize >= n
            {
                return Err(Error::Model(format!("malformed node {k}")));
            }
        }
        Ok(())
    }
}

/// Forest for one target coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub meta: ForestMeta,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn from_parts(meta: ForestMeta, trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Model("forest has no trees".into()));
        }
        for t in &trees {
            t.validate(meta.n_features)?;
        }
        Ok(Self { meta, trees })
    }

    /// Mean of the per-tree predictions.
    pub fn predict(&self, z: &FeatureVector) -> Result<f64> {
        if z.schema != self.meta.schema {
            return Err(Error::Model(format!(
                "feature schema {:016x} does not match the model's {:016x}",
                z.schema, self.meta.schema
            )));
        }
        if z.values.len() != self.meta.n_features {
            return Err(Error::Model(format!(
                "expected {} features, got {}",
                self.meta.n_features,
                z.values.len()
            )));
        }
        Ok(self.predict_raw(&z.values))
    }

    pub(crate) fn predict_raw(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

fn cmp_rows(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

struct Grower<'a> {
    /// Column-major features in canonical row order.
    x: &'a [Vec<f64>],
    y: &'a [f64],
    min_leaf: usize,
    mtry: usize,
    nodes: Vec<Node>,
    pool: Vec<usize>,
    buf: Vec<(f64, f64)>,
}

impl Grower<'_> {
    fn leaf(&mut self, rows: &[usize]) -> u32 {
        let mean = rows.iter().map(|&i| self.y[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node {
            feature: LEAF,
            value: mean,
            left: 0,
            right: 0,
            n: rows.len() as u32,
        });
        (self.nodes.len() - 1) as u32
    }

    /// Best SSE-reducing split over `mtry` random features, as
    /// (feature, threshold).
    fn best_split(&mut self, rows: &[usize], rng: &mut SimRng) -> Option<(usize, f64)> {
        let m = rows.len();
        let total: f64 = rows.iter().map(|&i| self.y[i]).sum();
        let sse = rows
            .iter()
            .map(|&i| (self.y[i] - total / m as f64).powi(2))
            .sum::<f64>();
        if sse <= 1e-14 * (1.0 + total.abs()) {
            return None;
        }
        let p = self.pool.len();
        for k in 0..self.mtry {
            let j = rng.random_range(k..p);
            self.pool.swap(k, j);
        }
        let base = total * total / m as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for k in 0..self.mtry {
            let f = self.pool[k];
            let col = &self.x[f];
            self.buf.clear();
            self.buf.extend(rows.iter().map(|&i| (col[i], self.y[i])));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = 0.0;
            for s in 1..m {
                left += self.buf[s - 1].1;
                if s < self.min_leaf || m - s < self.min_leaf || self.buf[s - 1].0 >= self.buf[s].0 {
                    continue;
                }
                let right = total - left;
                let gain = left * left / s as f64 + right * right / (m - s) as f64 - base;
                if best.is_none_or(|(g, _, _)| gain > g) {
                    let (a, b) = (self.buf[s - 1].0, self.buf[s].0);
                    let mid = a + 0.5 * (b - a);
                    best = Some((gain, f, if mid < b { mid } else { a }));
                }
            }
        }
        best.filter(|&(g, _, _)| g > 1e-12 * sse).map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, rows: &mut [usize], rng: &mut SimRng) -> u32 {
        if rows.len() < 2 * self.min_leaf {
            return self.leaf(rows);
        }
        let Some((f, thr)) = self.best_split(rows, rng) else {
            return self.leaf(rows);
        };
        let col = &self.x[f];
        let mut split = 0;
        for k in 0..rows.len() {
            if col[rows[k]] <= thr {
                rows.swap(k, split);
                split += 1;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            feature: f as u32,
            value: thr,
            left: 0,
            right: 0,
            n: rows.len() as u32,
        });
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l, rng);
        let right = self.grow(r, rng);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id as u32
    }
}

/// Grows one forest for target coordinate `target`.
///
/// Rows are put in a canonical content order before resampling and tree
/// `t` draws from the stream `(seed, target, t)`, so the model does not
/// depend on the order of the training rows or on the thread count.
pub fn train_forest(ts: &TrainingSet, target: usize, cfg: &ForestConfig, exec: Exec) -> Result<ForestModel> {
    let n = ts.len();
    let p = ts.n_features();
    if n < MIN_CAMPAIGN_ROWS {
        return Err(Error::Parameter(format!(
            "forest needs at least {MIN_CAMPAIGN_ROWS} rows, got {n}"
        )));
    }
    if target >= 5 {
        return Err(Error::Parameter(format!("target index {target} out of range")));
    }
    if cfg.n_trees == 0 || cfg.min_leaf == 0 || p == 0 {
        return Err(Error::Parameter(
            "forest needs trees, features and a positive leaf size".into(),
        ));
    }
    let mtry = cfg.mtry.unwrap_or(p / 3).clamp(1, p);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        cmp_rows(&ts.features[a], &ts.features[b]).then(ts.targets[a][target].total_cmp(&ts.targets[b][target]))
    });
    let x: Vec<Vec<f64>> = (0..p)
        .map(|f| order.iter().map(|&i| ts.features[i][f]).collect())
        .collect();
    let y: Vec<f64> = order.iter().map(|&i| ts.targets[i][target]).collect();
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo == hi {
        log::warn!("target {target} is constant; every tree is a single leaf");
    }

    let grown = exec.map(cfg.n_trees, |t| {
        let mut rng = rng::stream(cfg.seed, &[target as u64, t as u64]);
        let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut in_bag = vec![false; n];
        for &i in &rows {
            in_bag[i] = true;
        }
        let mut g = Grower {
            x: &x,
            y: &y,
            min_leaf: cfg.min_leaf,
            mtry,
            nodes: Vec::new(),
            pool: (0..p).collect(),
            buf: Vec::with_capacity(n),
        };
        g.grow(&mut rows, &mut rng);
        (Tree { nodes: g.nodes }, in_bag)
    });

    let mut oob_sum = vec![0.0; n];
    let mut oob_cnt = vec![0usize; n];
    let mut row = vec![0.0; p];
    for i in 0..n {
        for (f, r) in row.iter_mut().enumerate() {
            *r = x[f][i];
        }
        for (tree, in_bag) in &grown {
            if !in_bag[i] {
                oob_sum[i] += tree.predict(&row);
                oob_cnt[i] += 1;
            }
        }
    }
    let scored: Vec<usize> = (0..n).filter(|&i| oob_cnt[i] > 0).collect();
    let (oob_mse, oob_r2) = if scored.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let k = scored.len() as f64;
        let mse = scored
            .iter()
            .map(|&i| (oob_sum[i] / oob_cnt[i] as f64 - y[i]).powi(2))
            .sum::<f64>()
            / k;
        let mean = scored.iter().map(|&i| y[i]).sum::<f64>() / k;
        let var = scored.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>() / k;
        (mse, if var > 0.0 { 1.0 - mse / var } else { f64::NAN })
    };

    let meta = ForestMeta {
        target,
        schema: ts.schema,
        n_trees: cfg.n_trees,
        min_leaf: cfg.min_leaf,
        mtry,
        seed: cfg.seed,
        n_train: n,
        n_features: p,
        target_min: lo,
        target_max: hi,
        oob_mse,
        oob_r2,
    };
    Ok(ForestModel {
        meta,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
    })
}
