//! The flow/regularize loop and the standalone subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use pwillmore_core::flow::{flow_step, FlowState};
use pwillmore_core::geometry::{
    conformal_distortion, enclosed_volume, mean_curvature_vector, p_willmore_energy, p_willmore_energy_with,
    surface_area,
};
use pwillmore_core::mesh::{load_mesh, min_face_quality, require_valid_surface, save_mesh, validate_mesh};
use pwillmore_core::regularize::{reference_angles, reference_metrics, regularize_with_angles};
use pwillmore_core::{Mesh, ReferenceAngles, RegularizeConfig, RegularizeMode};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str =
    "step,t,tau,energy,area,volume,newton_residual,cd_before,cd_after,min_face_quality,wall_ms";

/// One row of the per-step log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub energy: f64,
    pub area: f64,
    pub volume: f64,
    pub newton_residual: f64,
    pub cd_before: f64,
    pub cd_after: f64,
    pub min_face_quality: f64,
    pub wall_ms: f64,
}

impl StepRecord {
    pub fn csv_row(&self) -> String {
        let cols = [
            self.t,
            self.tau,
            self.energy,
            self.area,
            self.volume,
            self.newton_residual,
            self.cd_before,
            self.cd_after,
            self.min_face_quality,
            self.wall_ms,
        ];
        let mut s = self.step.to_string();
        for c in cols {
            s.push(',');
            s.push_str(&format_g17(c));
        }
        s
    }
}

/// C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (16 - exp) as usize))
    }
}

fn load_valid(path: &Path) -> Result<Mesh> {
    let invalid = |source| CliError::InvalidMesh {
        path: path.to_path_buf(),
        source,
    };
    let m = load_mesh(path).map_err(|e| match e {
        pwillmore_core::Error::Io { .. } => CliError::Core(e),
        e => invalid(e),
    })?;
    require_valid_surface(&m).map_err(invalid)?;
    Ok(m)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn snapshot(dir: &Path, step: usize, m: &Mesh) -> Result<PathBuf> {
    let path = dir.join(format!("step_{step:06}.obj"));
    save_mesh(m, &path)?;
    Ok(path)
}

fn distortion(m: &Mesh, angles: &ReferenceAngles) -> Result<f64> {
    Ok(conformal_distortion(m, &reference_metrics(m, angles)?)?)
}

/// Runs the flow for `cfg.steps` steps, writing snapshots and the CSV log.
/// Rows and snapshots already written are kept when a step fails.
pub fn run_flow(cfg: &RunConfig) -> Result<Vec<StepRecord>> {
    let mesh = load_valid(&cfg.input)?;
    let flow_cfg = cfg.flow();
    let reg_cfg = cfg.regularize();
    fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    if let Some(parent) = cfg.log_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut log = BufWriter::new(File::create(&cfg.log_path).map_err(io_err(&cfg.log_path))?);
    writeln!(log, "{CSV_HEADER}").map_err(io_err(&cfg.log_path))?;

    let initial_angles = reference_angles(&mesh)?;
    let mut state = FlowState::new(mesh, &flow_cfg)?;
    info!(
        "{} vertices, {} faces, p = {}, {} steps",
        state.mesh.vertex_count(),
        state.mesh.face_count(),
        cfg.p,
        cfg.steps
    );
    let mut records = Vec::with_capacity(cfg.steps);
    let mut last_snapshot = None;
    for k in 1..=cfg.steps {
        let start = Instant::now();
        let tau = state.tau;
        state = match flow_step(&state, &flow_cfg) {
            Ok(s) => s,
            Err(e) => {
                log.flush().map_err(io_err(&cfg.log_path))?;
                if last_snapshot != Some(k - 1) {
                    snapshot(&cfg.output_dir, k - 1, &state.mesh)?;
                }
                return Err(e.into());
            }
        };
        let angles = if reg_cfg.recompute_angles {
            reference_angles(&state.mesh)?
        } else {
            initial_angles.clone()
        };
        let (cd_before, cd_after) = if reg_cfg.mode == RegularizeMode::Off {
            let cd = distortion(&state.mesh, &angles)?;
            (cd, cd)
        } else {
            let report = regularize_with_angles(&state.mesh, &angles, &reg_cfg)?;
            if report.accepted {
                state = state.with_mesh(report.mesh, &flow_cfg)?;
            } else {
                warn!("step {k}: regularization rejected, keeping the flowed mesh");
            }
            (report.cd_before, report.cd_after)
        };
        let rec = StepRecord {
            step: k,
            t: state.t,
            tau,
            energy: p_willmore_energy_with(&state.mesh, &state.y, cfg.p, cfg.quadrature_degree)?,
            area: surface_area(&state.mesh)?,
            volume: enclosed_volume(&state.mesh)?,
            newton_residual: state.newton_residual,
            cd_before,
            cd_after,
            min_face_quality: min_face_quality(&state.mesh),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        if let Some(prev) = records.last().map(|r: &StepRecord| r.energy) {
            let rise = (rec.energy - prev) / prev.abs().max(f64::MIN_POSITIVE);
            if reg_cfg.mode == RegularizeMode::Off && rise > 1e-10 {
                warn!("step {k}: energy increased by {rise:.3e} (relative)");
            } else if rise > 5e-3 {
                warn!("step {k}: energy increased by {:.3}% with regularization", 100.0 * rise);
            }
        }
        writeln!(log, "{}", rec.csv_row()).map_err(io_err(&cfg.log_path))?;
        log.flush().map_err(io_err(&cfg.log_path))?;
        info!("step {k}: t = {:.6e}, energy = {:.10}", rec.t, rec.energy);
        records.push(rec);
        if k == cfg.steps || (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0) {
            snapshot(&cfg.output_dir, k, &state.mesh)?;
            last_snapshot = Some(k);
        }
    }
    Ok(records)
}

/// Summary of a standalone regularization.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizeSummary {
    pub cd_before: f64,
    pub cd_after: f64,
    pub quality_before: f64,
    pub quality_after: f64,
    pub max_displacement: f64,
    pub accepted: bool,
}

pub fn regularize_file(input: &Path, output: &Path, cfg: &RegularizeConfig) -> Result<RegularizeSummary> {
    let mesh = load_valid(input)?;
    let angles = reference_angles(&mesh)?;
    let r = regularize_with_angles(&mesh, &angles, cfg)?;
    if !r.accepted {
        warn!("regularization would not reduce the distortion; writing the input mesh unchanged");
    }
    save_mesh(&r.mesh, output)?;
    Ok(RegularizeSummary {
        cd_before: r.cd_before,
        cd_after: r.cd_after,
        quality_before: r.quality_before,
        quality_after: r.quality_after,
        max_displacement: r.max_displacement,
        accepted: r.accepted,
    })
}

/// Human-readable diagnostics of a mesh file. Geometric quantities that need a
/// closed surface are reported only when the mesh is closed.
pub fn mesh_info(input: &Path) -> Result<String> {
    let m = load_mesh(input)?;
    let d = validate_mesh(&m);
    let mut lines = vec![
        format!("vertices: {}", m.vertex_count()),
        format!("faces: {}", m.face_count()),
        format!("closed: {}", d.is_closed),
        format!("oriented: {}", d.is_oriented),
        format!("boundary_edges: {}", d.boundary_edge_count),
        format!("genus: {}", d.genus),
        format!("min_face_quality: {}", format_g17(d.min_face_quality)),
    ];
    if d.is_valid_surface() {
        let y = mean_curvature_vector(&m)?;
        lines.push(format!("area: {}", format_g17(surface_area(&m)?)));
        lines.push(format!("volume: {}", format_g17(enclosed_volume(&m)?)));
        lines.push(format!("willmore_energy: {}", format_g17(p_willmore_energy(&m, &y, 2)?)));
        let angles = reference_angles(&m)?;
        lines.push(format!("conformal_distortion: {}", format_g17(distortion(&m, &angles)?)));
    }
    Ok(lines.join("\n"))
}
