//! The `(X, Y, Z)` triple plus generation metadata, and its CSV + JSON sidecar format.
//!
//! The CSV header is `x0,..,x{dx-1},y0,..,y{dy-1},z0,..,z{dz-1}` with one
//! sample per line; values are written in `{:.16e}` form (17 significant
//! digits), which reads back bit-exactly. The sidecar `<stem>.meta.json`
//! records setting, parameters, ground-truth label, seed and block widths.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SampleMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Lingauss,
    Chaos,
    Hybrid,
    Pnl,
    External,
}

impl Setting {
    pub const SYNTHETIC: [Setting; 4] = [Setting::Lingauss, Setting::Chaos, Setting::Hybrid, Setting::Pnl];

    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::Lingauss => "lingauss",
            Setting::Chaos => "chaos",
            Setting::Hybrid => "hybrid",
            Setting::Pnl => "pnl",
            Setting::External => "external",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lingauss" => Ok(Setting::Lingauss),
            "chaos" => Ok(Setting::Chaos),
            "hybrid" => Ok(Setting::Hybrid),
            "pnl" => Ok(Setting::Pnl),
            "external" => Ok(Setting::External),
            other => Err(Error::Config(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: SampleMatrix,
    pub y: SampleMatrix,
    pub z: SampleMatrix,
    pub setting: Setting,
    pub params: BTreeMap<String, f64>,
    pub dependent: bool,
    pub seed: u64,
}

/// Contents of the `.meta.json` sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub setting: Setting,
    pub params: BTreeMap<String, f64>,
    pub dependent: bool,
    pub seed: u64,
    pub n_samples: usize,
    pub dim_x: usize,
    pub dim_y: usize,
    pub dim_z: usize,
}

impl Dataset {
    pub fn new(
        x: SampleMatrix,
        y: SampleMatrix,
        z: SampleMatrix,
        setting: Setting,
        params: BTreeMap<String, f64>,
        dependent: bool,
        seed: u64,
    ) -> Result<Self> {
        if x.n_rows() != y.n_rows() || x.n_rows() != z.n_rows() {
            return Err(Error::Dimension(format!("x, y, z have {}, {}, {} rows", x.n_rows(), y.n_rows(), z.n_rows())));
        }
        Ok(Self { x, y, z, setting, params, dependent, seed })
    }

    pub fn n_samples(&self) -> usize {
        self.x.n_rows()
    }

    pub fn total_dim(&self) -> usize {
        self.x.n_cols() + self.y.n_cols() + self.z.n_cols()
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            setting: self.setting,
            params: self.params.clone(),
            dependent: self.dependent,
            seed: self.seed,
            n_samples: self.n_samples(),
            dim_x: self.x.n_cols(),
            dim_y: self.y.n_cols(),
            dim_z: self.z.n_cols(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = Vec::with_capacity(self.total_dim());
        for (prefix, m) in [("x", &self.x), ("y", &self.y), ("z", &self.z)] {
            h.extend((0..m.n_cols()).map(|i| format!("{prefix}{i}")));
        }
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let mut fields = Vec::with_capacity(self.total_dim());
        for i in 0..self.n_samples() {
            fields.clear();
            for m in [&self.x, &self.y, &self.z] {
                fields.extend(m.row(i).iter().map(|v| format!("{v:.16e}")));
            }
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `path` and its `.meta.json` sidecar; returns the sidecar path.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        self.write_csv(BufWriter::new(File::create(path)?))?;
        let meta_path = meta_path_for(path);
        let mut f = BufWriter::new(File::create(&meta_path)?);
        serde_json::to_writer_pretty(&mut f, &self.meta())?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(meta_path)
    }

    /// Loads a CSV written by [`Dataset::save`], using the sidecar for block widths.
    pub fn load(path: &Path) -> Result<Self> {
        let meta: DatasetMeta = serde_json::from_reader(File::open(meta_path_for(path))?)?;
        let table = read_table(File::open(path)?)?;
        let expected = meta.dim_x + meta.dim_y + meta.dim_z;
        if table.n_cols() != expected {
            return Err(Error::Parse(format!("CSV has {} columns, metadata declares {expected}", table.n_cols())));
        }
        let x = table.select_columns(&(0..meta.dim_x).collect::<Vec<_>>())?;
        let y = table.select_columns(&(meta.dim_x..meta.dim_x + meta.dim_y).collect::<Vec<_>>())?;
        let z = table.select_columns(&(meta.dim_x + meta.dim_y..expected).collect::<Vec<_>>())?;
        Dataset::new(x, y, z, meta.setting, meta.params, meta.dependent, meta.seed)
    }
}

/// `data.csv` → `data.meta.json`.
pub fn meta_path_for(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

/// A headed numeric CSV with its column names.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub values: SampleMatrix,
}

impl Table {
    pub fn n_cols(&self) -> usize {
        self.values.n_cols()
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<SampleMatrix> {
        self.values.select_columns(cols)
    }
}

/// Reads a headed CSV of finite numbers; lines starting with `#` are skipped.
pub fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let n_cols = header.len();
    let mut data = Vec::new();
    let mut n_rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != n_cols {
            return Err(Error::Parse(format!("line {} has {} fields, header has {n_cols}", i + 2, rec.len())));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("line {}, column {j}: `{field}` is not a number", i + 2)))?;
            data.push(v);
        }
        n_rows += 1;
    }
    Ok(Table { header, values: SampleMatrix::new(n_rows, n_cols, data)? })
}
