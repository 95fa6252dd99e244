//! TOML run configuration. Every section is optional and every table
//! rejects unknown keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::ConductivitySpec;
use crate::diagnostics::mms::MmsCase;
use crate::diagnostics::units::PhysicalUnits;
use crate::error::{Error, Result};
use crate::geometry::{TilingSpec, UnitCellSpec};
use crate::ionics::{default_beta1, GapModel, GatingScheme, IonicMode, IonicModel};
use crate::stepper::{AppliedCurrent, FieldSpec, InitialData, LinearSolverKind, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub cell_lengths: [f64; 2],
    pub inner_margin: f64,
    pub split_fraction: f64,
    pub mesh_density: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            cell_lengths: [1.0, 1.0],
            inner_margin: 0.25,
            split_fraction: 0.5,
            mesh_density: 8,
        }
    }
}

impl GeometrySection {
    pub fn spec(&self) -> UnitCellSpec {
        UnitCellSpec::new(
            (self.cell_lengths[0], self.cell_lengths[1]),
            self.inner_margin,
            self.split_fraction,
            self.mesh_density,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingSection {
    pub counts: [usize; 2],
    pub epsilon: f64,
}

impl Default for TilingSection {
    fn default() -> Self {
        Self {
            counts: [1, 1],
            epsilon: 1.0,
        }
    }
}

impl TilingSection {
    pub fn spec(&self) -> TilingSpec {
        TilingSpec {
            counts: (self.counts[0], self.counts[1]),
            epsilon: self.epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IonicSection {
    pub a1: f64,
    pub b1: f64,
    pub rho: f64,
    pub theta: f64,
    pub r: f64,
    /// Defaults to |ρ|(1+θ)²/3.
    pub beta1: Option<f64>,
    pub beta2: f64,
    pub mode: IonicMode,
}

impl Default for IonicSection {
    fn default() -> Self {
        let m = IonicModel::default();
        Self {
            a1: m.a1,
            b1: m.b1,
            rho: m.rho,
            theta: m.theta,
            r: m.r,
            beta1: None,
            beta2: m.beta2,
            mode: m.mode,
        }
    }
}

impl IonicSection {
    pub fn model(&self) -> IonicModel {
        IonicModel {
            a1: self.a1,
            b1: self.b1,
            rho: self.rho,
            theta: self.theta,
            r: self.r,
            beta1: self.beta1.unwrap_or_else(|| default_beta1(self.rho, self.theta)),
            beta2: self.beta2,
            mode: self.mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSection {
    pub g_gap: f64,
    pub c_ratio: f64,
}

impl Default for GapSection {
    fn default() -> Self {
        let g = GapModel::default();
        Self {
            g_gap: g.g_gap,
            c_ratio: g.c_ratio,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub lin_tol: f64,
    pub lin_maxit: usize,
    pub gating_scheme: GatingScheme,
    pub linear_solver: LinearSolverKind,
    pub iapp: AppliedCurrent,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            eps: s.eps,
            delta: s.delta,
            dt: s.dt,
            t_end: s.t_end,
            lin_tol: s.lin_tol,
            lin_maxit: s.lin_maxit,
            gating_scheme: s.gating_scheme,
            linear_solver: s.linear_solver,
            iapp: s.iapp,
        }
    }
}

impl SolverSection {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            eps: self.eps,
            delta: self.delta,
            dt: self.dt,
            t_end: self.t_end,
            lin_tol: self.lin_tol,
            lin_maxit: self.lin_maxit,
            gating_scheme: self.gating_scheme,
            linear_solver: self.linear_solver,
            iapp: self.iapp.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Vtk,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub stride: usize,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            stride: 1,
            formats: vec![OutputFormat::Csv, OutputFormat::Binary],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    pub etas: Vec<f64>,
    pub profile: FieldSpec,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            etas: vec![1e-2, 1e-3],
            profile: FieldSpec::Bump {
                amplitude: 1.0,
                center: [0.3, 0.5],
                radius: 0.3,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmsSection {
    pub densities: Vec<usize>,
    pub case: MmsCase,
}

impl Default for MmsSection {
    fn default() -> Self {
        Self {
            densities: vec![8, 16, 32],
            case: MmsCase::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeltaLimitSection {
    pub deltas: Vec<f64>,
}

impl Default for DeltaLimitSection {
    fn default() -> Self {
        Self {
            deltas: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpdSection {
    pub delta: f64,
    pub densities: Vec<usize>,
    pub eps: Vec<f64>,
}

impl Default for SpdSection {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            densities: vec![4, 8],
            eps: vec![1.0, 0.1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AprioriSection {
    /// Runs at `geometry.mesh_density` and this multiple of it.
    pub refinement: usize,
    pub tolerance: f64,
}

impl Default for AprioriSection {
    fn default() -> Self {
        Self {
            refinement: 2,
            tolerance: 0.10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySection {
    pub v_range: [f64; 2],
    pub w_range: [f64; 2],
    pub samples: usize,
}

impl Default for CertifySection {
    fn default() -> Self {
        Self {
            v_range: [-10.0, 10.0],
            w_range: [-10.0, 10.0],
            samples: 401,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentsSection {
    pub certify: CertifySection,
    pub spd: SpdSection,
    pub stability: StabilitySection,
    pub mms: MmsSection,
    pub delta_limit: DeltaLimitSection,
    pub apriori: AprioriSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub tiling: TilingSection,
    pub conductivity: ConductivitySpec,
    pub ionic: IonicSection,
    pub gap: GapSection,
    pub solver: SolverSection,
    pub initial: InitialData,
    pub output: OutputSection,
    pub units: PhysicalUnits,
    pub experiments: ExperimentsSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok((Self::from_toml(text)?, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.spec().validate()?;
        self.conductivity.validate()?;
        self.model().validate()?;
        self.gap_model().validate()?;
        self.solver_config().validate()?;
        if self.output.stride == 0 {
            return Err(Error::Config("output.stride must be at least 1".into()));
        }
        let t = &self.tiling;
        if t.counts[0] == 0 || t.counts[1] == 0 || !(t.epsilon > 0.0) {
            return Err(Error::Config("tiling needs positive counts and epsilon".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> IonicModel {
        self.ionic.model()
    }

    pub fn gap_model(&self) -> GapModel {
        GapModel {
            g_gap: self.gap.g_gap,
            c_ratio: self.gap.c_ratio,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.config()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.model(), IonicModel::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[solver]\ndtt = 0.1\n").unwrap_err().to_string();
        assert!(err.contains("dtt"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.solver.iapp = AppliedCurrent::Pulse {
            amplitude: 2.0,
            t_on: 0.0,
            t_off: 0.5,
            target: crate::stepper::Target::Both,
        };
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
