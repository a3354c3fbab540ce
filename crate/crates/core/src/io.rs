//! Run configuration, snapshot files and the energy time series.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DissipationBreakdown, EnergyBreakdown, NormResidual};
use crate::error::{Error, Result};
use crate::initial::{self, RandomSmooth};
use crate::integrator::{Forcing, Physics, SimState, StepperConfig};
use crate::oseen_frank::{ElasticModel, FrankConstants, SplitMode};
use crate::regularized::{PenaltySchedule, RegularizationParams};
use crate::spectral::{SpectralDirector, SpectralVelocity, TorusGrid};
use crate::stresses::LeslieCoefficients;
use crate::tensor::Vec3;

pub const FORMAT_VERSION: u32 = 1;
pub const RNG_NAME: &str = "chacha20";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    OseenFrank,
    /// `K/2 |∇d|²` with `K = k1`.
    OneConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    #[serde(default)]
    pub model: ModelKind,
    pub k1: f64,
    #[serde(default = "one")]
    pub k2: f64,
    #[serde(default = "one")]
    pub k3: f64,
    #[serde(default)]
    pub split_mode: SplitMode,
    pub leslie: LeslieCoefficients,
    pub delta: f64,
    #[serde(default)]
    pub epsilon_schedule: PenaltySchedule,
    /// Galerkin truncation; defaults to the dealiasing cutoff.
    #[serde(default)]
    pub galerkin_n: Option<usize>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant {
        #[serde(default = "up")]
        direction: [f64; 3],
    },
    RandomSmooth(RandomSmooth),
    File {
        director: PathBuf,
        #[serde(default)]
        velocity: Option<PathBuf>,
    },
}

fn up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    #[default]
    Zero,
    File { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Director,
    Velocity,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Director => "director",
            FieldKind::Velocity => "velocity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraDiagnostic {
    YoungMeasure,
    DefectDensity,
    EricksenIdentity,
    Coercivity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub directory: PathBuf,
    /// Steps between energy.csv rows.
    #[serde(default = "one_usize")]
    pub cadence: usize,
    /// Steps between field snapshots; 0 writes only the first and last.
    #[serde(default)]
    pub snapshot_cadence: usize,
    #[serde(default = "default_fields")]
    pub fields: Vec<FieldKind>,
    #[serde(default)]
    pub diagnostics: Vec<ExtraDiagnostic>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_out(), cadence: 1, snapshot_cadence: 0, fields: default_fields(), diagnostics: Vec::new() }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn one_usize() -> usize {
    1
}

fn default_fields() -> Vec<FieldKind> {
    vec![FieldKind::Director, FieldKind::Velocity]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub time: StepperConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("malformed config: {e}")]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let InitialConfig::File { director, velocity } = &mut cfg.initial {
            fix(director);
            if let Some(v) = velocity {
                fix(v);
            }
        }
        if let ForcingConfig::File { path } = &mut cfg.forcing {
            fix(path);
        }
        Ok(cfg)
    }

    /// Collects every violated constraint.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let g = &self.grid;
        if g.n < 8 || !g.n.is_multiple_of(2) {
            errs.push(format!("grid.n must be even and >= 8, got {}", g.n));
        }
        if !(g.length > 0.0 && g.length.is_finite()) {
            errs.push(format!("grid.length must be positive, got {}", g.length));
        }
        let ph = &self.physics;
        for (name, v) in [("physics.k1", ph.k1), ("physics.k2", ph.k2), ("physics.k3", ph.k3)] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be positive, got {v}"));
            }
        }
        errs.extend(ph.leslie.validate().violations().into_iter().map(|v| format!("physics.leslie: {v}")));
        if !(ph.delta > 0.0 && ph.delta <= 1.0) {
            errs.push(format!("physics.delta must lie in (0, 1], got {}", ph.delta));
        }
        if let Some(n) = ph.galerkin_n {
            if n > g.n / 2 {
                errs.push(format!("physics.galerkin_n must not exceed N/2 = {}, got {n}", g.n / 2));
            }
            if n == 0 {
                errs.push("physics.galerkin_n must be positive".to_string());
            }
        }
        errs.extend(self.time.validate());
        match &self.initial {
            InitialConfig::Constant { direction } => {
                if !(Vec3(*direction).norm() > 0.0) {
                    errs.push("initial.direction must be non-zero".to_string());
                }
            }
            InitialConfig::RandomSmooth(r) => {
                if r.cutoff == 0 || r.cutoff > g.n / 2 {
                    errs.push(format!("initial.cutoff must lie in 1..={}, got {}", g.n / 2, r.cutoff));
                }
                if !(r.amplitude >= 0.0 && r.amplitude.is_finite()) {
                    errs.push(format!("initial.amplitude must be non-negative, got {}", r.amplitude));
                }
                if !(r.velocity_amplitude >= 0.0 && r.velocity_amplitude.is_finite()) {
                    errs.push(format!("initial.velocity_amplitude must be non-negative, got {}", r.velocity_amplitude));
                }
                if !(Vec3(r.background).norm() > 0.0) {
                    errs.push("initial.background must be non-zero".to_string());
                }
            }
            InitialConfig::File { .. } => {}
        }
        if self.output.cadence == 0 {
            errs.push("output.cadence must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.n, self.grid.length)
    }

    pub fn physics(&self) -> Result<Physics> {
        let ph = &self.physics;
        let model = match ph.model {
            ModelKind::OseenFrank => ElasticModel::OseenFrank(FrankConstants::new(ph.k1, ph.k2, ph.k3, ph.split_mode)?),
            ModelKind::OneConstant => ElasticModel::OneConstant { k: ph.k1 },
        };
        Ok(Physics { model, leslie: ph.leslie.validated()?, reg: RegularizationParams::new(ph.delta, ph.epsilon_schedule)? })
    }

    pub fn galerkin_n(&self, grid: &TorusGrid) -> usize {
        self.physics.galerkin_n.unwrap_or(grid.dealias_cutoff())
    }

    /// Builds the projected initial state.
    pub fn initial_state(&self) -> Result<SimState> {
        let grid = self.grid()?;
        let (v, d) = make_initial(&self.initial, &grid, self.galerkin_n(&grid))?;
        let forcing = match &self.forcing {
            ForcingConfig::Zero => Forcing::Zero,
            ForcingConfig::File { path } => Forcing::Grid(read_snapshot(path)?.expect_grid(&grid)?.1),
        };
        SimState::new(grid, self.physics.galerkin_n, self.physics()?, forcing, v, d)
    }
}

pub fn make_initial(kind: &InitialConfig, grid: &TorusGrid, galerkin_n: usize) -> Result<(SpectralVelocity, SpectralDirector)> {
    Ok(match kind {
        InitialConfig::Constant { direction } => initial::constant(grid, *direction),
        InitialConfig::RandomSmooth(r) => initial::random_smooth(grid, r, galerkin_n),
        InitialConfig::File { director, velocity } => {
            let (_, d) = read_snapshot(director)?.expect_grid(grid)?;
            let d = SpectralDirector(grid.vector_from_grid(&d));
            let v = match velocity {
                Some(p) => SpectralVelocity(grid.vector_from_grid(&read_snapshot(p)?.expect_grid(grid)?.1)),
                None => SpectralVelocity::zeros(grid),
            };
            (v, d)
        }
    })
}

// ---------------------------------------------------------------- snapshots

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub field: String,
    pub step: usize,
    pub time: f64,
    pub length: f64,
    /// `[N, N, N, 3]`, C order, the last index fastest.
    pub shape: [usize; 4],
    pub dtype: String,
    pub byte_order: String,
    /// Byte offset of the payload within the `.bin` file.
    pub payload_offset: u64,
    pub payload_bytes: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub values: Vec<Vec3>,
}

impl Snapshot {
    fn expect_grid(self, grid: &TorusGrid) -> Result<(SnapshotHeader, Vec<Vec3>)> {
        if self.header.shape[0] != grid.n() {
            return Err(Error::GridMismatch { expected: grid.n(), found: self.header.shape[0] });
        }
        Ok((self.header, self.values))
    }
}

pub fn snapshot_stem(field: &str, step: usize) -> String {
    format!("{field}_t{step:06}")
}

/// Writes `<stem>.bin` and `<stem>.json` into `dir`; returns the `.bin` path.
pub fn write_snapshot(dir: &Path, field: &str, step: usize, time: f64, grid: &TorusGrid, values: &[Vec3]) -> Result<PathBuf> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch { expected: grid.len(), found: values.len() });
    }
    let mut payload = Vec::with_capacity(values.len() * 24);
    for v in values {
        for x in v.0 {
            payload.extend_from_slice(&x.to_le_bytes());
        }
    }
    let n = grid.n();
    let header = SnapshotHeader {
        format_version: FORMAT_VERSION,
        field: field.to_string(),
        step,
        time,
        length: grid.length(),
        shape: [n, n, n, 3],
        dtype: "float64".into(),
        byte_order: "little".into(),
        payload_offset: 0,
        payload_bytes: payload.len() as u64,
    };
    let stem = snapshot_stem(field, step);
    let bin = dir.join(format!("{stem}.bin"));
    fs::write(&bin, &payload)?;
    fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(bin)
}

/// Reads a snapshot from its `.bin` or `.json` path.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bin = path.with_extension("bin");
    let header: SnapshotHeader = serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Snapshot(format!("unsupported format version {}", header.format_version)));
    }
    if header.dtype != "float64" || header.byte_order != "little" || header.shape[3] != 3 {
        return Err(Error::Snapshot(format!("unsupported layout {} {} {:?}", header.dtype, header.byte_order, header.shape)));
    }
    let bytes = fs::read(&bin)?;
    let count = header.shape[..3].iter().product::<usize>();
    let expected = (count * 24) as u64;
    if header.payload_bytes != expected || bytes.len() as u64 != header.payload_offset + header.payload_bytes {
        return Err(Error::Snapshot(format!(
            "{}: header promises {} payload bytes at offset {}, file has {}",
            bin.display(),
            header.payload_bytes,
            header.payload_offset,
            bytes.len()
        )));
    }
    let payload = &bytes[header.payload_offset as usize..];
    let values = payload
        .chunks_exact(24)
        .map(|c| Vec3(std::array::from_fn(|i| f64::from_le_bytes(c[8 * i..8 * i + 8].try_into().unwrap()))))
        .collect();
    Ok(Snapshot { header, values })
}

// ---------------------------------------------------------------- energy.csv

pub const CSV_COLUMNS: [&str; 20] = [
    "t",
    "kinetic",
    "frank_k1",
    "frank_k2",
    "frank_k3",
    "frank_k4",
    "frank_k5",
    "penalty",
    "reg_delta",
    "total",
    "mu1_term",
    "mu4_term",
    "aniso_term",
    "q_term",
    "cross_term",
    "power_in",
    "energy_eq_residual",
    "norm_L2",
    "norm_Linf",
    "defect_total",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub energy: EnergyBreakdown,
    pub dissipation: DissipationBreakdown,
    pub energy_eq_residual: f64,
    pub norm: NormResidual,
    pub defect_total: f64,
}

impl EnergyRow {
    pub fn values(&self) -> [f64; 20] {
        let e = &self.energy;
        let d = &self.dissipation;
        [
            self.t,
            e.kinetic,
            e.frank_k1,
            e.frank_k2,
            e.frank_k3,
            e.frank_k4,
            e.frank_k5,
            e.penalty,
            e.reg_delta,
            e.total,
            d.mu1_term,
            d.mu4_term,
            d.aniso_term,
            d.q_term,
            d.cross_term,
            d.power_in,
            self.energy_eq_residual,
            self.norm.l2,
            self.norm.linf,
            self.defect_total,
        ]
    }
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn csv_line(row: &EnergyRow) -> String {
    let mut s = String::new();
    for (i, v) in row.values().iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v:.17e}").unwrap();
    }
    s
}

/// Parses an energy.csv into column name → values.
pub fn read_energy_csv(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Snapshot("empty energy.csv".into()))?;
    let mut cols: Vec<(String, Vec<f64>)> = header.split(',').map(|h| (h.to_string(), Vec::new())).collect();
    for line in lines {
        for ((_, col), cell) in cols.iter_mut().zip(line.split(',')) {
            col.push(cell.parse().map_err(|e| Error::Snapshot(format!("bad csv cell `{cell}`: {e}")))?);
        }
    }
    Ok(cols)
}
