//! Dataset files.
//!
//! A dataset `name.csv` (`replicate,site_id,t_index,value`, empty value =
//! missing) travels with a site table `name.sites.csv` (`site_id,x,y`) and
//! a JSON sidecar `name.meta.json` holding the time axis and margin.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use exceedmix::mixture::Dataset;
use exceedmix::simulators::{Margin, SpaceTimeLayout};

use crate::error::{PipelineError, Result};
use crate::preprocess::Projection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub margin: Margin,
    pub times: Vec<f64>,
    pub replicates: usize,
    /// Calendar labels of the replicates (years), when known.
    #[serde(default)]
    pub replicate_labels: Option<Vec<i32>>,
    #[serde(default)]
    pub projection: Option<Projection>,
}

/// A dataset with its site identifiers.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub dataset: Dataset,
    pub site_ids: Vec<String>,
    pub meta: DatasetMeta,
}

impl DatasetFile {
    pub fn new(dataset: Dataset, site_ids: Option<Vec<String>>) -> Self {
        let site_ids = site_ids.unwrap_or_else(|| (0..dataset.layout.n_sites()).map(|s| format!("s{s}")).collect());
        let meta = DatasetMeta {
            margin: dataset.margin,
            times: dataset.layout.times.clone(),
            replicates: dataset.layout.replicates,
            replicate_labels: None,
            projection: None,
        };
        Self {
            dataset,
            site_ids,
            meta,
        }
    }
}

pub fn sites_path(data: &Path) -> PathBuf {
    data.with_extension("sites.csv")
}

pub fn meta_path(data: &Path) -> PathBuf {
    data.with_extension("meta.json")
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn write_dataset(path: &Path, f: &DatasetFile) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let d = &f.dataset;
    let l = &d.layout;
    if f.site_ids.len() != l.n_sites() {
        return Err(PipelineError::Config("one site id per site required".into()));
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["replicate", "site_id", "t_index", "value"])?;
    for r in 0..l.replicates {
        for (s, id) in f.site_ids.iter().enumerate() {
            for t in 0..l.n_times() {
                w.write_record([r.to_string(), id.clone(), t.to_string(), fmt(d.get(r, s, t))])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(sites_path(path))?));
    w.write_record(["site_id", "x", "y"])?;
    for (id, xy) in f.site_ids.iter().zip(&l.sites) {
        w.write_record([id.clone(), fmt(xy[0]), fmt(xy[1])])?;
    }
    w.flush()?;

    let mut meta = f.meta.clone();
    meta.margin = d.margin;
    meta.times = l.times.clone();
    meta.replicates = l.replicates;
    serde_json::to_writer_pretty(BufWriter::new(File::create(meta_path(path))?), &meta)?;
    Ok(())
}

#[derive(Deserialize)]
struct SiteRow {
    site_id: String,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
struct CellRow {
    replicate: usize,
    site_id: String,
    t_index: usize,
    value: Option<f64>,
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let open =
        |p: &Path| File::open(p).map_err(|e| PipelineError::Preprocess(format!("cannot open {}: {e}", p.display())));
    let meta: DatasetMeta = serde_json::from_reader(BufReader::new(open(&meta_path(path))?))?;
    let mut site_ids = Vec::new();
    let mut sites = Vec::new();
    for row in csv::Reader::from_reader(BufReader::new(open(&sites_path(path))?)).deserialize() {
        let row: SiteRow = row?;
        site_ids.push(row.site_id);
        sites.push([row.x, row.y]);
    }
    let layout = SpaceTimeLayout::new(sites, meta.times.clone(), meta.replicates)?;
    let index_of = |id: &str| site_ids.iter().position(|s| s == id);
    let mut values = vec![f64::NAN; layout.n_cells()];
    let mut seen = vec![false; layout.n_cells()];
    for (k, row) in csv::Reader::from_reader(BufReader::new(open(path)?))
        .deserialize()
        .enumerate()
    {
        let row: CellRow = row?;
        let bad = |m: String| PipelineError::Preprocess(format!("{} row {}: {m}", path.display(), k + 1));
        let s = index_of(&row.site_id).ok_or_else(|| bad(format!("unknown site {}", row.site_id)))?;
        if row.replicate >= layout.replicates || row.t_index >= layout.n_times() {
            return Err(bad("replicate or time index out of range".into()));
        }
        let i = layout.index(row.replicate, s, row.t_index);
        if std::mem::replace(&mut seen[i], true) {
            return Err(bad("duplicate cell".into()));
        }
        values[i] = row.value.unwrap_or(f64::NAN);
    }
    let dataset = Dataset::new(layout, values, meta.margin)?;
    Ok(DatasetFile {
        dataset,
        site_ids,
        meta,
    })
}
