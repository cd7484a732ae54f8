//! The `graspgen` pipeline: part geometry in, a small diverse grasp set out.
//!
//! [`run`] is what the binary calls; the stages are also usable one by one.

pub mod config;
pub mod export;
pub mod pipeline;
pub mod report;

use std::ffi::OsString;

pub use config::{parse_cli, ConfigError, PipelineConfig};
pub use export::{export_grasp_json, export_visual_ply, load_grasp_json, GraspSetFile};
pub use pipeline::{run_pipeline, write_outputs, PipelineError, PipelineOutput};
pub use report::StageReport;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
/// The run completed but no grasp survived.
pub const EXIT_NO_GRASPS: u8 = 2;
/// Bad flags or config values (sysexits `EX_USAGE`).
pub const EXIT_USAGE: u8 = 64;

/// Parses `argv`, runs the pipeline, writes outputs and returns the exit code.
/// Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_cli(argv) {
        Ok(cfg) => cfg,
        Err(ConfigError::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut out = match run_pipeline(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    if let Err(e) = write_outputs(&cfg, &mut out) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    eprint!("{}", out.report.summary());
    if out.grasps.is_empty() {
        eprintln!("no grasp survived the filters; wrote an empty set to {}", cfg.out.display());
        EXIT_NO_GRASPS
    } else {
        eprintln!("wrote {} grasps to {}", out.grasps.len(), cfg.out.display());
        EXIT_OK
    }
}
