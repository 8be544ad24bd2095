//! Run configuration: strict TOML parsing, validation and initial data.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::graph::{QuadratureSpec, Scheme};
use crate::grid::{PeriodicGrid, RealField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Graph,
    Curve,
    Norms,
    Verify,
    Convergence,
}

/// Initial interface.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    #[default]
    Zero,
    /// `amplitude * cos(2 pi wavenumber x / L)`
    Cosine { amplitude: f64, wavenumber: u32 },
    /// Gaussian bump of width `L/24` whose steepest slope is `slope`.
    SlopeProfile { slope: f64 },
    /// Curve `z = (a - steepness sin a, height sin 2a)` in units where the
    /// period is `2 pi`; see [`crate::curve::turning_profile`].
    TurningProfile {
        steepness: f64,
        #[serde(default = "default_turning_height")]
        height: f64,
    },
    /// CSV with columns `x,f` (graph) or `alpha,z1,z2` (curve).
    FromCsv { path: PathBuf },
}

fn default_length() -> f64 {
    2.0 * PI
}
fn default_rho_bar() -> f64 {
    PI
}
fn default_cfl() -> f64 {
    0.3
}
fn default_blowup() -> f64 {
    1e4
}
fn default_chord_arc_floor() -> f64 {
    1e-3
}
fn default_turning_height() -> f64 {
    2.0
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("muskat-run")
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub mode: Mode,
    pub n_points: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "default_rho_bar")]
    pub rho_bar: f64,
    pub t_final: f64,
    #[serde(default = "default_cfl")]
    pub cfl_factor: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub initial_data: InitialData,
    /// Defaults to `t_final / 100`.
    #[serde(default)]
    pub report_interval: Option<f64>,
    /// Defaults to the report interval.
    #[serde(default)]
    pub snapshot_interval: Option<f64>,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    /// Chord-arc floor below which curve runs halt.
    #[serde(default = "default_chord_arc_floor")]
    pub chord_arc_floor: f64,
    #[serde(default)]
    pub unstable: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Grid sizes for the convergence mode; defaults to `n_points / 4, n_points / 2, n_points`.
    #[serde(default)]
    pub resolutions: Option<Vec<usize>>,
}

impl SimConfig {
    /// Minimal graph configuration with every default applied.
    pub fn graph(n_points: usize, t_final: f64, initial_data: InitialData) -> Self {
        Self {
            mode: Mode::Graph,
            n_points,
            length: default_length(),
            rho_bar: default_rho_bar(),
            t_final,
            cfl_factor: default_cfl(),
            scheme: Scheme::default(),
            quad: QuadratureSpec::default(),
            initial_data,
            report_interval: None,
            snapshot_interval: None,
            blowup_threshold: default_blowup(),
            chord_arc_floor: default_chord_arc_floor(),
            unstable: false,
            output_dir: default_output_dir(),
            seed: 0,
            resolutions: None,
        }
    }

    pub fn report_interval(&self) -> f64 {
        self.report_interval.unwrap_or(self.t_final / 100.0)
    }

    pub fn snapshot_interval(&self) -> f64 {
        self.snapshot_interval
            .unwrap_or_else(|| self.report_interval())
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.n_points, self.length)
            .map_err(|e| MuskatError::config("n_points", e.to_string()))
    }

    pub fn resolutions(&self) -> Vec<usize> {
        self.resolutions
            .clone()
            .unwrap_or_else(|| vec![self.n_points / 4, self.n_points / 2, self.n_points])
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(MuskatError::config("length", "must be positive and finite"));
        }
        if !self.rho_bar.is_finite() {
            return Err(MuskatError::config("rho_bar", "must be finite"));
        }
        if self.rho_bar <= 0.0 && !self.unstable {
            return Err(MuskatError::config(
                "rho_bar",
                format!(
                    "rho_bar = {} is not Rayleigh-Taylor stable; set unstable = true to run it",
                    self.rho_bar
                ),
            ));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(MuskatError::config(
                "t_final",
                "must be positive and finite",
            ));
        }
        if !(self.cfl_factor > 0.0 && self.cfl_factor <= 1.0) {
            return Err(MuskatError::config("cfl_factor", "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("report_interval", self.report_interval),
            ("snapshot_interval", self.snapshot_interval),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(MuskatError::config(name, "must be positive and finite"));
                }
            }
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(MuskatError::config("blowup_threshold", "must be positive"));
        }
        if !(self.chord_arc_floor >= 0.0 && self.chord_arc_floor < 1.0) {
            return Err(MuskatError::config("chord_arc_floor", "must lie in [0, 1)"));
        }
        self.quad.validate(self.length)?;
        match &self.initial_data {
            InitialData::Cosine { amplitude, .. } if !amplitude.is_finite() => {
                return Err(MuskatError::config(
                    "initial_data.amplitude",
                    "must be finite",
                ))
            }
            InitialData::SlopeProfile { slope } if !(slope.is_finite() && *slope >= 0.0) => {
                return Err(MuskatError::config(
                    "initial_data.slope",
                    "must be finite and >= 0",
                ))
            }
            InitialData::TurningProfile { steepness, height }
                if !(steepness.is_finite() && height.is_finite()) =>
            {
                return Err(MuskatError::config(
                    "initial_data.steepness",
                    "steepness and height must be finite",
                ))
            }
            InitialData::TurningProfile { .. } if self.mode != Mode::Curve => {
                return Err(MuskatError::config(
                    "initial_data.kind",
                    "turning_profile describes a curve; use mode = \"curve\"",
                ))
            }
            _ => {}
        }
        if let Some(res) = &self.resolutions {
            if res.len() < 2 {
                return Err(MuskatError::config(
                    "resolutions",
                    "need at least two grids",
                ));
            }
            for &n in res {
                PeriodicGrid::new(n, self.length)
                    .map_err(|e| MuskatError::config("resolutions", e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Initial height for graph runs.
    pub fn initial_field(&self) -> Result<RealField> {
        let grid = self.grid()?;
        let length = self.length;
        let f = match &self.initial_data {
            InitialData::Zero => RealField::zeros(grid),
            InitialData::Cosine {
                amplitude,
                wavenumber,
            } => {
                let k = 2.0 * PI * *wavenumber as f64 / length;
                RealField::from_fn(grid, |x| amplitude * (k * x).cos())
            }
            InitialData::SlopeProfile { slope } => slope_profile(grid, *slope),
            InitialData::TurningProfile { .. } => {
                return Err(MuskatError::config(
                    "initial_data.kind",
                    "turning_profile is only available in curve mode",
                ))
            }
            InitialData::FromCsv { path } => read_graph_csv(path, grid)?,
        };
        Ok(f.remove_mean())
    }
}

/// Gaussian bump centred on the grid point `x = L/2`, width `w = L/24`,
/// amplitude `slope * w * e^{1/2}` so that its steepest slope is `slope`.
pub fn slope_profile(grid: PeriodicGrid, slope: f64) -> RealField {
    let length = grid.length();
    let w = length / 24.0;
    let amp = slope * w * 0.5_f64.exp();
    let centre = grid.x(grid.n_points() / 2);
    RealField::from_fn(grid, |x| {
        let u = (x - centre) / w;
        amp * (-0.5 * u * u).exp()
    })
    .remove_mean()
}

fn read_graph_csv(path: &Path, grid: PeriodicGrid) -> Result<RealField> {
    let (header, rows) = crate::runlog::read_csv(path)
        .map_err(|e| MuskatError::config("initial_data.path", e.to_string()))?;
    let col = header.iter().position(|h| h == "f").ok_or_else(|| {
        MuskatError::config(
            "initial_data.path",
            format!("{}: no `f` column", path.display()),
        )
    })?;
    let samples: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    if samples.len() != grid.n_points() {
        return Err(MuskatError::config(
            "initial_data.path",
            format!(
                "{} holds {} samples, n_points is {}",
                path.display(),
                samples.len(),
                grid.n_points()
            ),
        ));
    }
    RealField::new(grid, samples)
}

fn unknown_field(message: &str) -> Option<String> {
    let start = message.find("unknown field `")? + "unknown field `".len();
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Parse and validate TOML text. Unknown keys are rejected.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let config: SimConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let field = unknown_field(&message)
            .or_else(|| {
                message
                    .strip_prefix("missing field `")
                    .and_then(|rest| rest.split('`').next())
                    .map(str::to_string)
            })
            .or_else(|| {
                e.span().map(|span| {
                    let line = text[..span.start].rsplit('\n').next().unwrap_or("");
                    line.split('=').next().unwrap_or("").trim().to_string()
                })
            })
            .filter(|f| !f.is_empty())
            .unwrap_or_else(|| "<document>".to_string());
        MuskatError::config(field, message)
    })?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MuskatError::config("<file>", format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::sup_norm;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = parse_config_str("mode = \"graph\"\nn_points = 64\nt_final = 1.0\n").unwrap();
        assert_eq!(c.length, 2.0 * PI);
        assert_eq!(c.rho_bar, PI);
        assert_eq!(c.cfl_factor, 0.3);
        assert_eq!(c.scheme, Scheme::Rk4IntegratingFactor);
        assert_eq!(c.initial_data, InitialData::Zero);
        assert_eq!(c.report_interval(), 0.01);
        assert!(!c.unstable);
    }

    #[test]
    fn unstable_requires_flag() {
        let text = "mode = \"graph\"\nn_points = 64\nt_final = 1.0\nrho_bar = -1.0\n";
        match parse_config_str(text) {
            Err(MuskatError::Config { field, .. }) => assert_eq!(field, "rho_bar"),
            other => panic!("{other:?}"),
        }
        let ok = format!("{text}unstable = true\n");
        assert!(parse_config_str(&ok).is_ok());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "mode = \"graph\"\nn_points = 64\nt_final = 1.0\nvisocity = 2.0\n";
        match parse_config_str(text) {
            Err(MuskatError::Config { field, .. }) => assert_eq!(field, "visocity"),
            other => panic!("{other:?}"),
        }
        let nested = "mode = \"graph\"\nn_points = 64\nt_final = 1.0\n[quad]\ninner_kut = 0.5\n";
        match parse_config_str(nested) {
            Err(MuskatError::Config { field, .. }) => assert_eq!(field, "inner_kut"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tagged_initial_data() {
        let text = "mode = \"graph\"\nn_points = 64\nt_final = 1.0\n\
                    [initial_data]\nkind = \"cosine\"\namplitude = 0.3\nwavenumber = 1\n";
        let c = parse_config_str(text).unwrap();
        let f = c.initial_field().unwrap();
        assert!((f.samples()[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bad_values_rejected() {
        for extra in [
            "n_points = 60",
            "t_final = 0.0",
            "cfl_factor = 2.0",
            "report_interval = -1.0",
        ] {
            let mut text = String::from("mode = \"graph\"\n");
            if !extra.starts_with("n_points") {
                text.push_str("n_points = 64\n");
            }
            if !extra.starts_with("t_final") {
                text.push_str("t_final = 1.0\n");
            }
            text.push_str(extra);
            assert!(parse_config_str(&text).is_err(), "{extra}");
        }
    }

    #[test]
    fn slope_profile_has_requested_slope() {
        let grid = PeriodicGrid::new(256, 2.0 * PI).unwrap();
        let f = slope_profile(grid, 0.9);
        let fx = crate::grid::derivative(&f, 1).unwrap();
        assert!((sup_norm(&fx) - 0.9).abs() < 1e-10);
        assert!(f.mean().abs() < 1e-15);
    }
}
