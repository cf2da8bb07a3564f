use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "CONEKAHLER_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyLocal,
    VerifyGeometry,
    SolveLinear,
    FlattenRicci,
    SolveKe,
}

impl Command {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "verify-local" => Self::VerifyLocal,
            "verify-geometry" => Self::VerifyGeometry,
            "solve-linear" => Self::SolveLinear,
            "flatten-ricci" => Self::FlattenRicci,
            "solve-ke" => Self::SolveKe,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::VerifyLocal => "verify-local",
            Self::VerifyGeometry => "verify-geometry",
            Self::SolveLinear => "solve-linear",
            Self::FlattenRicci => "flatten-ricci",
            Self::SolveKe => "solve-ke",
        }
    }
}

/// A configuration problem, reported as one machine-parsable line.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.replace('\n', " "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalParams {
    pub betas: Vec<f64>,
    pub a_values: Vec<f64>,
    pub points: usize,
    pub sturm_points: usize,
    pub seed: u64,
    pub tol_ka: f64,
    pub tol_sturm: f64,
    pub tol_branch: f64,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            betas: vec![0.6, 0.75, 0.9],
            a_values: vec![-0.5, 0.5],
            points: 100,
            sturm_points: 1000,
            seed: 2013,
            tol_ka: 1e-4,
            tol_sturm: 1e-9,
            tol_branch: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryParams {
    pub betas: Vec<f64>,
    pub points: usize,
    pub seed: u64,
    pub exponent_tol: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self { betas: vec![0.6, 0.75, 0.9], points: 200, seed: 2013, exponent_tol: 0.05 }
    }
}

/// Testbed shared by the surface commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceParams {
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    pub beta: f64,
    pub r0: f64,
    pub delta: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self { n: 128, beta: 0.5, r0: 0.24, delta: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearParams {
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    pub beta: f64,
    pub r0: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol_rel: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        let SurfaceParams { n, beta, r0, delta } = SurfaceParams::default();
        Self { n, beta, r0, delta, samples: 20, seed: 2013, tol_rel: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlattenParams {
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    pub beta: f64,
    pub r0: f64,
    pub delta: f64,
    pub mollifier_scale: f64,
    pub mu: f64,
    pub eps: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Also run at `2N` and check the refinement expectations.
    pub refine: bool,
}

impl Default for FlattenParams {
    fn default() -> Self {
        let SurfaceParams { n, beta, r0, delta } = SurfaceParams::default();
        Self {
            n,
            beta,
            r0,
            delta,
            mollifier_scale: 1.0 / 32.0,
            mu: 1.5,
            eps: 25.0,
            newton_tol: 1e-10,
            max_iter: 30,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeParams {
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    pub beta: f64,
    pub r0: f64,
    pub delta: f64,
    /// Explicit schedule; overrides `steps`.
    pub schedule: Option<Vec<f64>>,
    pub steps: usize,
    pub lambda: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub mollifier_scale: f64,
    pub eps: f64,
    pub checkpoint: bool,
    /// Resume from the checkpoint in the output directory.
    pub resume: bool,
    pub refine: bool,
    /// Uniform step count of a second run used for the schedule comparison.
    pub alt_steps: Option<usize>,
}

impl Default for KeParams {
    fn default() -> Self {
        let SurfaceParams { beta, r0, delta, .. } = SurfaceParams::default();
        Self {
            n: 256,
            beta,
            r0,
            delta,
            schedule: None,
            steps: 11,
            lambda: -1.0,
            newton_tol: 1e-9,
            newton_max_iter: 25,
            mollifier_scale: 1.0 / 32.0,
            eps: 2.0,
            checkpoint: true,
            resume: false,
            refine: false,
            alt_steps: None,
        }
    }
}

macro_rules! surface_accessor {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn surface(&self) -> SurfaceParams {
                SurfaceParams { n: self.n, beta: self.beta, r0: self.r0, delta: self.delta }
            }
        }
    )*};
}

surface_accessor!(LinearParams, FlattenParams, KeParams);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Local(LocalParams),
    Geometry(GeometryParams),
    Linear(LinearParams),
    Flatten(FlattenParams),
    Ke(KeParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub output_dir: PathBuf,
    pub plots: bool,
    pub params: Params,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<P> {
    #[allow(dead_code)]
    command: String,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    plots: bool,
    #[serde(default)]
    params: P,
}

fn typed<P: DeserializeOwned + Default>(text: &str) -> Result<Envelope<P>, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg.into()))
    }
}

fn check_surface(s: &SurfaceParams) -> Result<(), ConfigError> {
    check(s.n >= 32, format!("N = {} must be at least 32", s.n))?;
    check(s.beta > 0.0 && s.beta < 1.0, format!("beta = {} not in (0, 1)", s.beta))?;
    check(s.r0 > 0.0 && s.r0 < 0.25, format!("r0 = {} not in (0, 1/4)", s.r0))?;
    check(s.r0 * s.n as f64 >= 8.0, format!("r0 = {} spans fewer than 8 cells at N = {}", s.r0, s.n))?;
    check(s.delta > 0.0, format!("delta = {} must be positive", s.delta))
}

fn check_betas(betas: &[f64]) -> Result<(), ConfigError> {
    check(!betas.is_empty(), "betas is empty")?;
    for b in betas {
        check(*b > 0.0 && *b < 1.0, format!("beta = {b} not in (0, 1)"))?;
    }
    Ok(())
}

impl RunConfig {
    /// Parse and validate a TOML configuration. `output_override` takes
    /// precedence over the environment, which takes precedence over the file.
    pub fn parse(text: &str, output_override: Option<&Path>) -> Result<Self, ConfigError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(e.message().to_string()))?;
        let name = match table.get("command") {
            None => return Err(ConfigError("missing command".into())),
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(ConfigError("command must be a string".into())),
        };
        let command = Command::parse(&name).ok_or_else(|| ConfigError(format!("unknown command {name}")))?;

        let (output_dir, plots, params) = match command {
            Command::VerifyLocal => {
                let e = typed::<LocalParams>(text)?;
                check_betas(&e.params.betas)?;
                for a in &e.params.a_values {
                    check(a.abs() < 1.0, format!("a = {a} must satisfy |a| < 1"))?;
                }
                check(e.params.points > 0 && e.params.sturm_points > 0, "point counts must be positive")?;
                (e.output_dir, e.plots, Params::Local(e.params))
            }
            Command::VerifyGeometry => {
                let e = typed::<GeometryParams>(text)?;
                check_betas(&e.params.betas)?;
                check(e.params.points >= 3, "points must be at least 3")?;
                (e.output_dir, e.plots, Params::Geometry(e.params))
            }
            Command::SolveLinear => {
                let e = typed::<LinearParams>(text)?;
                check_surface(&e.params.surface())?;
                check(e.params.tol_rel > 0.0, "tol_rel must be positive")?;
                (e.output_dir, e.plots, Params::Linear(e.params))
            }
            Command::FlattenRicci => {
                let e = typed::<FlattenParams>(text)?;
                let p = &e.params;
                check_surface(&p.surface())?;
                check(p.mollifier_scale > 0.0 && p.mu > 0.0 && p.eps > 0.0, "mollifier_scale, mu and eps must be positive")?;
                check(p.newton_tol > 0.0 && p.max_iter > 0, "newton_tol and max_iter must be positive")?;
                (e.output_dir, e.plots, Params::Flatten(e.params))
            }
            Command::SolveKe => {
                let e = typed::<KeParams>(text)?;
                let p = &e.params;
                check_surface(&p.surface())?;
                check(p.lambda == -1.0, format!("lambda = {} is not supported, only -1", p.lambda))?;
                check(p.steps >= 2, "steps must be at least 2")?;
                if let Some(s) = &p.schedule {
                    let ok = s.len() >= 2 && s[0] == 0.0 && *s.last().unwrap() == 1.0 && s.windows(2).all(|w| w[1] > w[0]);
                    check(ok, "schedule must increase strictly from 0 to 1")?;
                }
                if let Some(k) = p.alt_steps {
                    check(k >= 2, "alt_steps must be at least 2")?;
                }
                check(p.newton_tol > 0.0 && p.newton_max_iter > 0, "newton_tol and newton_max_iter must be positive")?;
                check(!(p.resume && !p.checkpoint), "resume needs checkpoint = true")?;
                (e.output_dir, e.plots, Params::Ke(e.params))
            }
        };

        let output_dir = output_override
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .or(output_dir)
            .ok_or_else(|| ConfigError("missing output_dir".into()))?;
        Ok(Self { command, output_dir, plots, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_missing_command() {
        assert_eq!(RunConfig::parse("", Some(Path::new("x"))).unwrap_err().0, "missing command");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "command = \"solve-linear\"\noutput_dir = \"o\"\n[params]\nN = 64\nbogus = 1\n";
        let err = RunConfig::parse(text, None).unwrap_err();
        assert!(err.0.contains("bogus"), "{err}");
        let text = "command = \"solve-linear\"\noutput_dir = \"o\"\ncolour = 1\n";
        assert!(RunConfig::parse(text, None).is_err());
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let text = "command = \"solve-ke\"\noutput_dir = \"o\"\n[params]\nN = 128\n";
        let cfg = RunConfig::parse(text, None).unwrap();
        let Params::Ke(p) = cfg.params else { panic!() };
        assert_eq!(p.n, 128);
        assert_eq!(p.steps, 11);
        assert_eq!(p.beta, 0.5);
    }

    #[test]
    fn lambda_zero_is_rejected() {
        let text = "command = \"solve-ke\"\noutput_dir = \"o\"\n[params]\nlambda = 0.0\n";
        assert!(RunConfig::parse(text, None).unwrap_err().0.contains("lambda"));
    }

    #[test]
    fn override_wins() {
        let text = "command = \"verify-local\"\noutput_dir = \"o\"\n";
        let cfg = RunConfig::parse(text, Some(Path::new("elsewhere"))).unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
    }
}
