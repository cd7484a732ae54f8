//! Command-line flags, the optional TOML config file, and their merge into a
//! validated [`PipelineConfig`]. Precedence: flags, then file, then defaults.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use graspgen_core::clustering::ClusteringConfig;
use graspgen_core::synthesis::{GripperModel, SideFilter, SynthesisConfig};
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_N_POINTS: usize = 2000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT: &str = "grasps.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Ply,
    Obj,
    Stl,
}

impl InputFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ply" => Some(Self::Ply),
            "obj" => Some(Self::Obj),
            "stl" => Some(Self::Stl),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ply => "ply",
            Self::Obj => "obj",
            Self::Stl => "stl",
        }
    }

    pub fn is_mesh(self) -> bool {
        !matches!(self, Self::Ply)
    }
}

/// Length unit of the input file and of every length given on the command
/// line or in the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Mm,
    M,
}

impl Unit {
    /// Meters per unit.
    pub fn scale(self) -> f64 {
        match self {
            Self::Mm => 0.001,
            Self::M => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mm => "mm",
            Self::M => "m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Outside,
    Inside,
    Both,
}

impl From<SideArg> for SideFilter {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Outside => SideFilter::OutsideOnly,
            SideArg::Inside => SideFilter::InsideOnly,
            SideArg::Both => SideFilter::Both,
        }
    }
}

/// Generate a diverse set of parallel-jaw grasps for a part.
///
/// Lengths are read in the unit given by `--unit` (default mm).
#[derive(Debug, Default, Parser)]
#[command(name = "graspgen", version)]
pub struct Cli {
    /// Part geometry: a PLY point cloud with normals, or an OBJ/STL mesh.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
    /// Number of surface samples drawn from a mesh input.
    #[arg(long, allow_negative_numbers = true)]
    pub n_points: Option<i64>,
    /// Seed for mesh sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Voxel edge for downsampling; off when omitted.
    #[arg(long, allow_negative_numbers = true)]
    pub voxel: Option<f64>,
    /// Maximum jaw opening.
    #[arg(long, allow_negative_numbers = true)]
    pub stroke: Option<f64>,
    /// Coulomb friction coefficient.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub safety_factor: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub finger_width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub finger_thickness: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub finger_length: Option<f64>,
    /// Number of discrete rotations about the closing axis.
    #[arg(long, allow_negative_numbers = true)]
    pub rotation_steps: Option<i64>,
    /// Extra gap between the inner jaw faces and the contacts, in total.
    #[arg(long, allow_negative_numbers = true)]
    pub clearance: Option<f64>,
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
    /// Translational clusters.
    #[arg(long, allow_negative_numbers = true)]
    pub kt: Option<i64>,
    /// Rotational clusters per translational cluster.
    #[arg(long, allow_negative_numbers = true)]
    pub kr: Option<i64>,
    /// SWAP iteration cap per clustering run.
    #[arg(long, allow_negative_numbers = true)]
    pub max_swaps: Option<i64>,
    /// Grasp set JSON output [default: grasps.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Colored PLY visualization output.
    #[arg(long)]
    pub viz: Option<PathBuf>,
    /// Stage report JSON output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Flat TOML file with the same keys as the long flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file. Keys mirror the long flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub format: Option<InputFormat>,
    pub unit: Option<Unit>,
    pub n_points: Option<i64>,
    pub seed: Option<u64>,
    pub voxel: Option<f64>,
    pub stroke: Option<f64>,
    pub mu: Option<f64>,
    pub safety_factor: Option<f64>,
    pub finger_width: Option<f64>,
    pub finger_thickness: Option<f64>,
    pub finger_length: Option<f64>,
    pub rotation_steps: Option<i64>,
    pub clearance: Option<f64>,
    pub side: Option<SideArg>,
    pub kt: Option<i64>,
    pub kr: Option<i64>,
    pub max_swaps: Option<i64>,
    pub out: Option<PathBuf>,
    pub viz: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut file: FileConfig = toml::from_str(&text).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // Paths in a config file are relative to the file itself.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut file.input, &mut file.out, &mut file.viz, &mut file.report]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("missing required option --{0}")]
    Missing(&'static str),
    #[error("invalid value for --{flag}: {message}")]
    Invalid { flag: &'static str, message: String },
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
}

fn invalid(flag: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        flag,
        message: message.into(),
    }
}

/// Fully resolved pipeline settings. All lengths are in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub unit: Unit,
    pub n_points: usize,
    pub seed: u64,
    pub voxel_size: Option<f64>,
    pub gripper: GripperModel,
    pub synthesis: SynthesisConfig,
    pub clustering: ClusteringConfig,
    pub out: PathBuf,
    pub viz: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl PipelineConfig {
    /// A config with library defaults for everything but the essentials.
    /// `stroke` is in meters.
    pub fn new(input: impl Into<PathBuf>, format: InputFormat, unit: Unit, stroke: f64, mu: f64) -> Self {
        Self {
            input: input.into(),
            format,
            unit,
            n_points: DEFAULT_N_POINTS,
            seed: DEFAULT_SEED,
            voxel_size: None,
            gripper: GripperModel::new(stroke, mu),
            synthesis: SynthesisConfig::default(),
            clustering: ClusteringConfig::default(),
            out: PathBuf::from(DEFAULT_OUT),
            viz: None,
            report: None,
        }
    }
}

fn positive_len(flag: &'static str, v: f64, scale: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v * scale)
    } else {
        Err(invalid(flag, format!("must be greater than 0, got {v}")))
    }
}

fn positive_count(flag: &'static str, v: i64) -> Result<usize, ConfigError> {
    if v > 0 {
        Ok(v as usize)
    } else {
        Err(invalid(flag, format!("must be at least 1, got {v}")))
    }
}

/// Parses `argv` (including the program name) and merges in the config file
/// if one is named.
pub fn parse_cli<I, T>(argv: I) -> Result<PipelineConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    resolve(cli, file)
}

/// Merges flags over file values over defaults and validates the result.
pub fn resolve(cli: Cli, file: FileConfig) -> Result<PipelineConfig, ConfigError> {
    macro_rules! pick {
        ($field:ident) => {
            cli.$field.or(file.$field)
        };
    }
    let input = pick!(input).ok_or(ConfigError::Missing("input"))?;
    let format = match pick!(format) {
        Some(f) => f,
        None => InputFormat::from_path(&input).ok_or_else(|| {
            invalid(
                "format",
                format!("cannot infer the format of {}; pass ply, obj or stl", input.display()),
            )
        })?,
    };
    let unit = pick!(unit).unwrap_or_default();
    let s = unit.scale();

    let stroke = positive_len("stroke", pick!(stroke).ok_or(ConfigError::Missing("stroke"))?, s)?;
    let mu = pick!(mu).ok_or(ConfigError::Missing("mu"))?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid("mu", format!("must be greater than 0, got {mu}")));
    }
    let mut gripper = GripperModel::new(stroke, mu);
    if let Some(v) = pick!(safety_factor) {
        if !(v >= 1.0 && v.is_finite()) {
            return Err(invalid("safety-factor", format!("must be at least 1, got {v}")));
        }
        gripper.safety_factor = v;
    }
    if let Some(v) = pick!(finger_width) {
        gripper.finger_width = positive_len("finger-width", v, s)?;
    }
    if let Some(v) = pick!(finger_thickness) {
        gripper.finger_thickness = positive_len("finger-thickness", v, s)?;
    }
    if let Some(v) = pick!(finger_length) {
        gripper.finger_length = positive_len("finger-length", v, s)?;
    }
    if let Some(v) = pick!(rotation_steps) {
        gripper.rotation_steps = positive_count("rotation-steps", v)?;
    }
    if let Some(v) = pick!(clearance) {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid("clearance", format!("must be non-negative, got {v}")));
        }
        gripper.clearance = v * s;
    }

    let mut clustering = ClusteringConfig::default();
    if let Some(v) = pick!(kt) {
        clustering.k_translational = positive_count("kt", v)?;
    }
    if let Some(v) = pick!(kr) {
        clustering.k_rotational = positive_count("kr", v)?;
    }
    if let Some(v) = pick!(max_swaps) {
        if v < 0 {
            return Err(invalid("max-swaps", format!("must be non-negative, got {v}")));
        }
        clustering.max_swap_iterations = v as usize;
    }

    let n_points = match pick!(n_points) {
        Some(v) => positive_count("n-points", v)?,
        None => DEFAULT_N_POINTS,
    };
    let voxel_size = pick!(voxel).map(|v| positive_len("voxel", v, s)).transpose()?;

    Ok(PipelineConfig {
        input,
        format,
        unit,
        n_points,
        seed: pick!(seed).unwrap_or(DEFAULT_SEED),
        voxel_size,
        gripper,
        synthesis: SynthesisConfig {
            side_filter: pick!(side).map(SideFilter::from).unwrap_or_default(),
            record_rejections: false,
        },
        clustering,
        out: pick!(out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        viz: pick!(viz),
        report: pick!(report),
    })
}
