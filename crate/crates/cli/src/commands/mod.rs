use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{Params, RunConfig};
use crate::plot::{line_plot, Series};
use crate::report::Report;

mod flatten;
mod geometry;
mod ke;
mod linear;
mod local;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] conekahler::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

pub struct RunContext {
    pub out: PathBuf,
    pub plots: bool,
    pub invocation: String,
}

impl RunContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Write a CSV artifact. Values use the shortest round-trip representation.
    pub fn csv(&self, report: &mut Report, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> io::Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        fs::write(self.path(name), s)?;
        report.artifacts.push(name.into());
        Ok(())
    }

    pub fn grid(&self, report: &mut Report, name: &str, spec: &conekahler::surface::SurfaceSpec, u: &conekahler::surface::GridFunction) -> Result<(), RunError> {
        conekahler::surface::write_grid(&self.path(name), spec, u)?;
        report.artifacts.push(name.into());
        report.artifacts.push(Path::new(name).with_extension("json").display().to_string());
        Ok(())
    }

    pub fn svg(&self, report: &mut Report, name: &str, title: &str, x_label: &str, series: &[Series], log_y: bool) -> io::Result<()> {
        if !self.plots {
            return Ok(());
        }
        fs::write(self.path(name), line_plot(title, x_label, series, log_y))?;
        report.artifacts.push(name.into());
        Ok(())
    }
}

pub fn run(cfg: &RunConfig, invocation: String) -> Result<Report, RunError> {
    fs::create_dir_all(&cfg.output_dir)?;
    let ctx = RunContext { out: cfg.output_dir.clone(), plots: cfg.plots, invocation };
    let config = serde_json::to_value(&cfg.params).map_err(io::Error::from)?;
    match &cfg.params {
        Params::Local(p) => local::run(&ctx, p, config),
        Params::Geometry(p) => geometry::run(&ctx, p, config),
        Params::Linear(p) => linear::run(&ctx, p, config),
        Params::Flatten(p) => flatten::run(&ctx, p, config),
        Params::Ke(p) => ke::run(&ctx, p, config),
    }
}
