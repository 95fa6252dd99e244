//! Output artifacts: legacy VTK, CSV time series, raw final state with a
//! JSON header, Matrix Market, run manifest and verdict files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::BlockOperator;
use crate::diagnostics::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::geometry::MicroMesh;
use crate::linalg::Csr;
use crate::stepper::{StepReport, SystemState};

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            create_dir(parent)?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Potentials at mesh vertices (each vertex carries the value of its medium).
pub fn vertex_potential(op: &BlockOperator, state: &SystemState) -> Vec<f64> {
    let u = state.potentials();
    op.layout.global_of_vertex.iter().map(|&g| u[g]).collect()
}

/// Legacy ASCII VTK unstructured grid with the subdomain tag as cell data
/// and any number of scalar point fields.
pub fn vtk_string(mesh: &MicroMesh, point_fields: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    let nv = mesh.vertices.len();
    let nt = mesh.triangles.len();
    s.push_str("# vtk DataFile Version 3.0\ntridomain mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {nt}\nSCALARS subdomain int 1\nLOOKUP_TABLE default");
    for d in &mesh.triangle_domain {
        let _ = writeln!(s, "{}", d.tag());
    }
    if !point_fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
        for (name, vals) in point_fields {
            assert_eq!(vals.len(), nv, "point field {name} has the wrong length");
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in vals.iter() {
                let _ = writeln!(s, "{v:.17e}");
            }
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &MicroMesh, point_fields: &[(&str, &[f64])]) -> Result<()> {
    write_text(path, &vtk_string(mesh, point_fields))
}

pub const TIMESERIES_HEADER: &str = "t,energy,membrane1,membrane2,gating1,gating2,gap,dissipation,state_norm,residual,flux_max,lambda";

/// One CSV row; the initial state has no step report.
pub fn timeseries_row(t: f64, e: &EnergyReport, state_norm: f64, report: Option<&StepReport>) -> String {
    let (res, flux, lambda) = report.map_or((0.0, 0.0, 0.0), |r| (r.residual, r.flux.max_abs(), r.lambda));
    format!(
        "{t:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{state_norm:.12e},{res:.6e},{flux:.6e},{lambda:.12e}",
        e.total, e.membrane[0], e.membrane[1], e.gating[0], e.gating[1], e.gap, e.dissipation
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub name: String,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateHeader {
    pub t: f64,
    pub dtype: String,
    pub blocks: Vec<BlockHeader>,
}

/// Writes `final_state.bin` (little-endian f64: u1, u2, ue, w1, w2) and
/// `final_state.json` describing the blocks.
pub fn write_final_state(dir: &Path, state: &SystemState) -> Result<()> {
    create_dir(dir)?;
    let blocks = [
        ("u1", &state.u1),
        ("u2", &state.u2),
        ("ue", &state.ue),
        ("w1", &state.w1),
        ("w2", &state.w2),
    ];
    let mut bytes = Vec::new();
    for (_, b) in &blocks {
        for x in b.iter() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    let bin = dir.join("final_state.bin");
    fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let header = StateHeader {
        t: state.t,
        dtype: "f64le".into(),
        blocks: blocks
            .iter()
            .map(|(n, b)| BlockHeader {
                name: (*n).into(),
                len: b.len(),
            })
            .collect(),
    };
    write_text(&dir.join("final_state.json"), &serde_json::to_string_pretty(&header).expect("header serializes"))
}

pub fn read_final_state(dir: &Path) -> Result<SystemState> {
    let hp = dir.join("final_state.json");
    let text = fs::read_to_string(&hp).map_err(|e| Error::io(&hp, e))?;
    let header: StateHeader = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", hp.display())))?;
    let bp = dir.join("final_state.bin");
    let bytes = fs::read(&bp).map_err(|e| Error::io(&bp, e))?;
    let total: usize = header.blocks.iter().map(|b| b.len).sum();
    if bytes.len() != 8 * total {
        return Err(Error::Config(format!("{}: expected {} bytes, found {}", bp.display(), 8 * total, bytes.len())));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mut state = SystemState {
        t: header.t,
        u1: Vec::new(),
        u2: Vec::new(),
        ue: Vec::new(),
        w1: Vec::new(),
        w2: Vec::new(),
    };
    let mut off = 0;
    for b in &header.blocks {
        let slot = match b.name.as_str() {
            "u1" => &mut state.u1,
            "u2" => &mut state.u2,
            "ue" => &mut state.ue,
            "w1" => &mut state.w1,
            "w2" => &mut state.w2,
            other => return Err(Error::Config(format!("unknown block {other} in {}", hp.display()))),
        };
        *slot = vals[off..off + b.len].to_vec();
        off += b.len;
    }
    Ok(state)
}

pub fn write_matrix_market(path: &Path, a: &Csr) -> Result<()> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    sprs::io::write_matrix_market(path, a).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub crate_version: String,
    pub wall_time_s: f64,
    pub files: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, config_bytes: &[u8], wall_time_s: f64, files: Vec<PathBuf>) -> Self {
        Self {
            command: command.into(),
            config_sha256: sha256_hex(config_bytes),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s,
            files,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("manifest.json"), &serde_json::to_string_pretty(self).expect("manifest serializes"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Machine-readable pass/fail of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            pass: true,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{}: {} ({})", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
        }
        let _ = writeln!(s, "{}: {}", self.experiment, if self.pass { "pass" } else { "FAIL" });
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("verdict.json"), &serde_json::to_string_pretty(self).expect("verdict serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn verdict_is_conjunction() {
        let mut v = Verdict::new("x");
        v.check("a", true, "");
        assert!(v.pass);
        v.check("b", false, "");
        assert!(!v.pass);
    }
}
