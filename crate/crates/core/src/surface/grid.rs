use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The periodic `N × N` testbed over the unit square with one cone point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub n: usize,
    /// Grid indices `(i, j)` of the cone point.
    pub p: (usize, usize),
    pub beta: f64,
    pub r0: f64,
}

impl SurfaceSpec {
    /// Cone point at the center node.
    pub fn centered(n: usize, beta: f64, r0: f64) -> Result<Self> {
        Self::new(n, (n / 2, n / 2), beta, r0)
    }

    pub fn new(n: usize, p: (usize, usize), beta: f64, r0: f64) -> Result<Self> {
        let spec = Self { n, p, beta, r0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 32 {
            return Err(Error::InvalidParameter(format!("N = {} is below 32", self.n)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {} not in (0, 1)", self.beta)));
        }
        if !(self.r0 > 0.0 && self.r0 < 0.25) {
            return Err(Error::InvalidParameter(format!("r0 = {} not in (0, 1/4)", self.r0)));
        }
        let (i, j) = self.p;
        if i == 0 || j == 0 || i >= self.n || j >= self.n {
            return Err(Error::InvalidParameter(format!("cone point {:?} is not inside the fundamental domain", self.p)));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn apex(&self) -> usize {
        self.index(self.p.0, self.p.1)
    }

    pub fn cell_area(&self) -> f64 {
        self.h() * self.h()
    }

    /// Minimum-image offset `(x − x_p, y − y_p)` of node `k`.
    pub fn offset(&self, k: usize) -> (f64, f64) {
        let n = self.n as i64;
        let wrap = |d: i64| {
            let d = d.rem_euclid(n);
            if d > n / 2 {
                d - n
            } else {
                d
            }
        };
        let i = (k % self.n) as i64;
        let j = (k / self.n) as i64;
        let h = self.h();
        (wrap(i - self.p.0 as i64) as f64 * h, wrap(j - self.p.1 as i64) as f64 * h)
    }

    /// Periodic distance of node `k` to the cone point.
    pub fn dist_to_apex(&self, k: usize) -> f64 {
        let (dx, dy) = self.offset(k);
        dx.hypot(dy)
    }

    /// `true` at nodes with `|z − p| > radius`.
    pub fn outside(&self, radius: f64) -> Vec<bool> {
        (0..self.len()).map(|k| self.dist_to_apex(k) > radius).collect()
    }

    /// The four neighbours of node `k` on the torus: `[i−1, i+1, j−1, j+1]`.
    pub fn neighbours(&self, k: usize) -> [usize; 4] {
        let n = self.n;
        let i = k % n;
        let j = k / n;
        [
            j * n + (i + n - 1) % n,
            j * n + (i + 1) % n,
            ((j + n - 1) % n) * n + i,
            ((j + 1) % n) * n + i,
        ]
    }
}

/// How a grid function behaves at the cone node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    #[default]
    Finite,
    /// The continuum function is singular there; the node holds a regularized value.
    LogSingular,
    /// Not computed at the node; the stored value is the four-neighbour average.
    Excluded,
}

/// A doubly periodic scalar field, row-major (`values[j * N + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub n: usize,
    pub values: Vec<f64>,
    pub node_class: NodeClass,
}

impl GridFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "grid size mismatch");
        Self { n, values, node_class: NodeClass::Finite }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, vec![0.0; n * n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(n, vec![c; n * n])
    }

    pub fn from_fn(spec: &SurfaceSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let h = spec.h();
        let n = spec.n;
        Self::new(n, (0..n * n).map(|k| f((k % n) as f64 * h, (k / n) as f64 * h)).collect())
    }

    pub fn with_class(mut self, class: NodeClass) -> Self {
        self.node_class = class;
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Overwrite the cone-node value by the average of its neighbours and mark it excluded.
    pub fn exclude_apex(&mut self, spec: &SurfaceSpec) {
        let a = spec.apex();
        self.values[a] = spec.neighbours(a).iter().map(|&k| self.values[k]).sum::<f64>() / 4.0;
        self.node_class = NodeClass::Excluded;
    }
}

/// JSON sidecar written next to a grid CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    #[serde(rename = "N")]
    pub n: usize,
    pub beta: f64,
    pub p: (usize, usize),
    pub r0: f64,
    #[serde(default)]
    pub node_class: NodeClass,
}

fn header_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write `u` as `N` comma-separated rows plus a JSON header next to it.
///
/// Values use the shortest representation that parses back to the same bits.
pub fn write_grid(path: &Path, spec: &SurfaceSpec, u: &GridFunction) -> Result<()> {
    if u.n != spec.n {
        return Err(Error::Format(format!("grid has N = {}, spec has N = {}", u.n, spec.n)));
    }
    if !u.is_finite() {
        return Err(Error::Format("grid contains non-finite values".into()));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    for row in u.values.chunks(u.n) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    let header = GridHeader { n: spec.n, beta: spec.beta, p: spec.p, r0: spec.r0, node_class: u.node_class };
    fs::write(header_path(path), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<(GridHeader, GridFunction)> {
    let header: GridHeader = serde_json::from_str(&fs::read_to_string(header_path(path))?)?;
    let r = BufReader::new(fs::File::open(path)?);
    let mut values = Vec::with_capacity(header.n * header.n);
    for (row, line) in r.lines().enumerate() {
        let line = line?;
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("row {row}: {e}")))?;
            values.push(v);
        }
        if values.len() - before != header.n {
            return Err(Error::Format(format!("row {row} has {} entries, expected {}", values.len() - before, header.n)));
        }
    }
    if values.len() != header.n * header.n {
        return Err(Error::Format(format!("expected {} rows", header.n)));
    }
    let gf = GridFunction { n: header.n, values, node_class: header.node_class };
    Ok((header, gf))
}
