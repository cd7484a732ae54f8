//! load → sample → downsample → synthesize → cluster → export.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use graspgen_core::cloud::{read_obj, read_ply, read_stl, sample_mesh, voxel_downsample, PointCloud};
use graspgen_core::clustering::cluster_grasps;
use graspgen_core::synthesis::{synthesize_with_stats, GraspCandidate, SideFilter};
use graspgen_core::{CloudError, ClusterError, SynthesisError};
use sha2::{Digest, Sha256};
use thiserror::Error;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::config::{InputFormat, PipelineConfig};
use crate::export::{
    export_grasp_json, export_visual_ply, to_json_bytes, ConfigEcho, GraspRecord, GraspSetFile, InputInfo,
    Metadata, StageCounts, SCHEMA_VERSION,
};
use crate::report::{Diversity, StageReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("loading {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: CloudError,
    },
    #[error("synthesis: {0}")]
    Synthesis(#[from] SynthesisError),
    #[error("clustering: {0}")]
    Clustering(#[from] ClusterError),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub struct PipelineOutput {
    /// The cloud grasp indices refer to, in meters.
    pub cloud: PointCloud,
    pub grasps: Vec<GraspCandidate>,
    pub grasp_set: GraspSetFile,
    pub report: StageReport,
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Current time, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|s| OffsetDateTime::from_unix_timestamp(s).ok())
        .unwrap_or_else(OffsetDateTime::now_utc);
    now.format(&Rfc3339).expect("RFC 3339 formatting of a valid date")
}

fn side_name(filter: SideFilter) -> &'static str {
    match filter {
        SideFilter::OutsideOnly => "outside",
        SideFilter::InsideOnly => "inside",
        SideFilter::Both => "both",
    }
}

/// Runs every stage in memory. Nothing is written.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    let mut report = StageReport {
        points_loaded: 0,
        points_used: 0,
        counts: StageCounts {
            pre_filter: 0,
            evaluated: 0,
            post_stroke: 0,
            post_friction: 0,
            post_collision: 0,
            post_clustering: 0,
        },
        timings: Vec::new(),
        diversity: Diversity::of(&[]),
    };

    let t = Instant::now();
    let bytes = fs::read(&cfg.input).map_err(|source| PipelineError::Read {
        path: cfg.input.clone(),
        source,
    })?;
    let checksum = hex::encode(Sha256::digest(&bytes));
    let scale = cfg.unit.scale();
    let load_err = |source| PipelineError::Load {
        path: cfg.input.clone(),
        source,
    };
    let source_name = cfg.input.display().to_string();
    let cloud = match cfg.format {
        InputFormat::Ply => read_ply(&bytes, scale, &source_name).map_err(load_err)?,
        InputFormat::Obj | InputFormat::Stl => {
            let mesh = if cfg.format == InputFormat::Obj {
                let text = String::from_utf8_lossy(&bytes);
                read_obj(&text, scale)
            } else {
                read_stl(&bytes, scale)
            }
            .map_err(load_err)?;
            sample_mesh(&mesh, cfg.n_points, cfg.seed).map_err(load_err)?
        }
    };
    report.points_loaded = cloud.len() as u64;
    report.record("load", millis(t));

    let t = Instant::now();
    let cloud = match cfg.voxel_size {
        Some(v) => voxel_downsample(&cloud, v),
        None => cloud,
    };
    report.points_used = cloud.len() as u64;
    report.record("downsample", millis(t));

    let t = Instant::now();
    let synthesis = synthesize_with_stats(&cloud, &cfg.gripper, &cfg.synthesis)?;
    report.record("synthesis", millis(t));

    let t = Instant::now();
    let grasps = if synthesis.candidates.is_empty() {
        Vec::new()
    } else {
        cluster_grasps(&synthesis.candidates, &cfg.clustering)?
    };
    report.record("clustering", millis(t));

    let s = &synthesis.stats;
    report.counts = StageCounts {
        pre_filter: s.pair_count,
        evaluated: s.evaluated,
        post_stroke: s.post_stroke,
        post_friction: s.post_friction,
        post_collision: s.post_collision,
        post_clustering: grasps.len() as u64,
    };
    report.diversity = Diversity::of(&grasps);

    let g = &cfg.gripper;
    let grasp_set = GraspSetFile {
        schema_version: SCHEMA_VERSION.to_string(),
        metadata: Metadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_at: timestamp(),
            unit: "m".to_string(),
            input: InputInfo {
                path: source_name,
                format: cfg.format.as_str().to_string(),
                native_unit: cfg.unit.as_str().to_string(),
                sha256: checksum,
                points: cloud.len() as u64,
            },
            config: ConfigEcho {
                stroke: g.stroke,
                finger_width: g.finger_width,
                finger_thickness: g.finger_thickness,
                finger_length: g.finger_length,
                mu: g.mu,
                safety_factor: g.safety_factor,
                rotation_steps: g.rotation_steps as u64,
                clearance: g.clearance,
                side: side_name(cfg.synthesis.side_filter).to_string(),
                k_translational: cfg.clustering.k_translational as u64,
                k_rotational: cfg.clustering.k_rotational as u64,
                max_swap_iterations: cfg.clustering.max_swap_iterations as u64,
                n_points: cfg.format.is_mesh().then_some(cfg.n_points as u64),
                seed: cfg.format.is_mesh().then_some(cfg.seed),
                voxel_size: cfg.voxel_size,
            },
            counts: report.counts,
        },
        grasps: grasps.iter().map(|c| GraspRecord::from_candidate(&cloud, c)).collect(),
    };

    Ok(PipelineOutput {
        cloud,
        grasps,
        grasp_set,
        report,
    })
}

/// Writes the grasp JSON, then the optional visualization and report.
pub fn write_outputs(cfg: &PipelineConfig, out: &mut PipelineOutput) -> Result<(), PipelineError> {
    let t = Instant::now();
    let write_err = |path: &PathBuf| {
        let path = path.clone();
        move |source| PipelineError::Write { path, source }
    };
    export_grasp_json(&out.grasp_set, &cfg.out).map_err(write_err(&cfg.out))?;
    if let Some(viz) = &cfg.viz {
        export_visual_ply(
            &out.cloud,
            &out.grasp_set,
            viz,
            cfg.unit.scale(),
            cfg.gripper.finger_length,
        )
        .map_err(write_err(viz))?;
    }
    out.report.record("export", millis(t));
    if let Some(path) = &cfg.report {
        fs::write(path, to_json_bytes(&out.report)).map_err(write_err(path))?;
    }
    Ok(())
}
