use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use super::campaign::TrainingSet;
use super::features::{FeatureConfig, FeatureVector};
use super::forest::{train_forest, ForestConfig, ForestMeta, ForestModel, Node, Tree};
use crate::error::{Error, Result};
use crate::exec::Exec;

const MAGIC: &[u8; 4] = b"EXMF";
const VERSION: u32 = 1;

/// The five per-coordinate forests plus the feature settings they expect.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSet {
    pub features: FeatureConfig,
    pub models: Vec<ForestModel>,
}

/// Human-readable summary written next to a saved forest set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSidecar {
    pub format_version: u32,
    pub features: FeatureConfig,
    pub schema: String,
    pub models: Vec<ForestMeta>,
}

/// Trains one forest per η coordinate; all share `cfg.seed`.
pub fn train_forest_set(
    ts: &TrainingSet,
    features: &FeatureConfig,
    cfg: &ForestConfig,
    exec: Exec,
) -> Result<ForestSet> {
    if ts.schema != features.schema_hash() {
        return Err(Error::Model(
            "training set was built with different feature settings".into(),
        ));
    }
    let models = (0..5)
        .map(|j| train_forest(ts, j, cfg, exec))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestSet {
        features: features.clone(),
        models,
    })
}

impl ForestSet {
    pub fn new(features: FeatureConfig, models: Vec<ForestModel>) -> Result<Self> {
        if models.len() != 5 {
            return Err(Error::Model(format!("expected 5 forests, got {}", models.len())));
        }
        let schema = features.schema_hash();
        for (j, m) in models.iter().enumerate() {
            if m.meta.target != j || m.meta.schema != schema || m.meta.n_features != features.len() {
                return Err(Error::Model(format!("forest {j} does not match the feature settings")));
            }
        }
        Ok(Self { features, models })
    }

    /// Predicted `η̂₁..η̂₅`.
    pub fn predict_eta(&self, z: &FeatureVector) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for (o, m) in out.iter_mut().zip(&self.models) {
            *o = m.predict(z)?;
        }
        Ok(out)
    }

    pub fn sidecar(&self) -> ForestSidecar {
        ForestSidecar {
            format_version: VERSION,
            features: self.features.clone(),
            schema: format!("{:016x}", self.features.schema_hash()),
            models: self.models.iter().map(|m| m.meta.clone()).collect(),
        }
    }

    /// Little-endian binary: magic, version, feature settings (JSON), then
    /// each model's metadata and nodes.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        let cfg = serde_json::to_vec(&self.features)?;
        w.write_u64::<LE>(cfg.len() as u64)?;
        w.write_all(&cfg)?;
        w.write_u32::<LE>(self.models.len() as u32)?;
        for m in &self.models {
            let t = &m.meta;
            for v in [t.target, t.n_trees, t.min_leaf, t.mtry, t.n_train, t.n_features] {
                w.write_u64::<LE>(v as u64)?;
            }
            w.write_u64::<LE>(t.schema)?;
            w.write_u64::<LE>(t.seed)?;
            for v in [t.target_min, t.target_max, t.oob_mse, t.oob_r2] {
                w.write_f64::<LE>(v)?;
            }
            w.write_u64::<LE>(m.trees.len() as u64)?;
            for tree in &m.trees {
                w.write_u32::<LE>(tree.nodes.len() as u32)?;
                for nd in &tree.nodes {
                    w.write_u32::<LE>(nd.feature)?;
                    w.write_f64::<LE>(nd.value)?;
                    w.write_u32::<LE>(nd.left)?;
                    w.write_u32::<LE>(nd.right)?;
                    w.write_u32::<LE>(nd.n)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let bad = |what: &str| Error::Model(format!("corrupt forest file: {what}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = r.read_u32::<LE>()?;
        if version != VERSION {
            return Err(Error::Model(format!("unsupported forest format version {version}")));
        }
        let len = r.read_u64::<LE>()?;
        if len > 1 << 20 {
            return Err(bad("feature settings too long"));
        }
        let mut cfg = vec![0u8; len as usize];
        r.read_exact(&mut cfg)?;
        let features: FeatureConfig = serde_json::from_slice(&cfg)?;
        let n_models = r.read_u32::<LE>()?;
        if n_models != 5 {
            return Err(bad("model count"));
        }
        let mut models = Vec::with_capacity(5);
        for _ in 0..n_models {
            let mut u = [0usize; 6];
            for v in &mut u {
                *v = r.read_u64::<LE>()? as usize;
            }
            let schema = r.read_u64::<LE>()?;
            let seed = r.read_u64::<LE>()?;
            let mut f = [0.0; 4];
            for v in &mut f {
                *v = r.read_f64::<LE>()?;
            }
            let meta = ForestMeta {
                target: u[0],
                n_trees: u[1],
                min_leaf: u[2],
                mtry: u[3],
                n_train: u[4],
                n_features: u[5],
                schema,
                seed,
                target_min: f[0],
                target_max: f[1],
                oob_mse: f[2],
                oob_r2: f[3],
            };
            let n_trees = r.read_u64::<LE>()?;
            if n_trees as usize != meta.n_trees {
                return Err(bad("tree count"));
            }
            let mut trees = Vec::with_capacity(meta.n_trees.min(1 << 16));
            for _ in 0..n_trees {
                let n_nodes = r.read_u32::<LE>()?;
                let mut nodes = Vec::with_capacity((n_nodes as usize).min(1 << 20));
                for _ in 0..n_nodes {
                    nodes.push(Node {
                        feature: r.read_u32::<LE>()?,
                        value: r.read_f64::<LE>()?,
                        left: r.read_u32::<LE>()?,
                        right: r.read_u32::<LE>()?,
                        n: r.read_u32::<LE>()?,
                    });
                }
                trees.push(Tree { nodes });
            }
            models.push(ForestModel::from_parts(meta, trees)?);
        }
        Self::new(features, models)
    }
}
