//! On-disk artifact formats: configuration, trajectory, and analysis
//! report files, all in canonical JSON, each embedding the tool version,
//! seed, and effective tolerances that produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisReport;
use crate::canonical;
use crate::choreography::ChoreographyConfig;
use crate::dynamics::{Problem, Scheme, SystemState, Trajectory};
use crate::error::{ChoreoError, Result};
use crate::model::{ForceLaw, MassVector, Space, Tolerances};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub tool_version: String,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
}

impl OutputMeta {
    pub fn new(seed: Option<u64>, tolerances: Tolerances) -> Self {
        OutputMeta { tool_version: TOOL_VERSION.to_string(), seed, tolerances }
    }
}

/// A choreography configuration plus its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub meta: OutputMeta,
    pub config: ChoreographyConfig,
}

impl ConfigFile {
    pub fn write(&self, path: &Path) -> Result<()> {
        canonical::write_canonical(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file: ConfigFile = canonical::read_json(path)?;
        file.config.validate()?;
        Ok(file)
    }
}

/// One sampled state of an integrated trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateEntry {
    pub t: f64,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

/// An integrated trajectory plus the problem that generated it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub meta: OutputMeta,
    pub n: usize,
    pub space: Space,
    pub force: ForceLaw,
    pub masses: MassVector,
    pub central_mass: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub states: Vec<StateEntry>,
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &Trajectory, scheme: Scheme, meta: OutputMeta) -> Self {
        TrajectoryFile {
            meta,
            n: traj.problem.masses.len(),
            space: traj.problem.space,
            force: traj.problem.force.clone(),
            masses: traj.problem.masses.clone(),
            central_mass: traj.problem.central_mass,
            dt: traj.step,
            scheme,
            states: traj
                .states
                .iter()
                .map(|s| StateEntry {
                    t: s.time,
                    positions: s.positions.clone(),
                    velocities: s.velocities.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds the in-memory trajectory, revalidating every state.
    pub fn to_trajectory(&self) -> Result<Trajectory> {
        if self.states.is_empty() {
            return Err(ChoreoError::Contract("trajectory file holds no states".into()));
        }
        let problem = Problem {
            space: self.space,
            force: self.force.clone(),
            masses: self.masses.clone(),
            central_mass: self.central_mass,
        };
        problem.validate()?;
        let states = self
            .states
            .iter()
            .map(|e| SystemState::new(e.t, e.positions.clone(), e.velocities.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { states, step: self.dt, problem })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        canonical::write_canonical(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        canonical::read_json(path)
    }
}

/// One row of the serialized mode table; `without_f` is absent for curved
/// configurations, where the identity has no force-free companion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeEntry {
    pub l: usize,
    pub with_f: f64,
    pub without_f: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullspaceEntry {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlagsEntry {
    pub simplex: bool,
    pub great_circle: bool,
}

/// The analysis report as written to disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub meta: OutputMeta,
    pub n: usize,
    pub space: Space,
    pub d: usize,
    pub rank_histogram: Vec<(usize, f64)>,
    pub modes: Vec<ModeEntry>,
    pub nullspace: NullspaceEntry,
    pub flags: FlagsEntry,
    pub verdict: String,
    pub prediction_consistent: bool,
}

impl ReportFile {
    pub fn from_report(report: &AnalysisReport, meta: OutputMeta) -> Self {
        ReportFile {
            meta,
            n: report.n,
            space: report.space,
            d: report.d,
            rank_histogram: report.rank_histogram.clone(),
            modes: report
                .modes
                .iter()
                .map(|m| ModeEntry { l: m.l, with_f: m.with_f, without_f: m.without_f })
                .collect(),
            nullspace: NullspaceEntry {
                dim: report.feasibility.nullspace_dim,
                basis: report.feasibility.basis.clone(),
            },
            flags: FlagsEntry {
                simplex: report.flags.simplex,
                great_circle: report.flags.great_circle,
            },
            verdict: report.verdict.text.clone(),
            prediction_consistent: report.verdict.consistent,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        canonical::write_canonical(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        canonical::read_json(path)
    }

    /// The mode table as CSV, one row per mode, floats at full precision.
    pub fn mode_csv(&self) -> String {
        let mut out = String::from("l,with_f,without_f\n");
        for m in &self.modes {
            let wo = m.without_f.map(|x| format!("{x:.16e}")).unwrap_or_default();
            out.push_str(&format!("{},{:.16e},{}\n", m.l, m.with_f, wo));
        }
        out
    }
}

/// Distinguishes trajectory files from config files by shape: trajectories
/// carry a `states` array.
pub fn holds_trajectory(path: &Path) -> Result<bool> {
    let value = canonical::read_value(path)?;
    Ok(value.get("states").is_some())
}
