//! Buffer-size sweeps over the analytic variants and the simulator, with
//! CSV/plot output and model-versus-simulation comparison.

mod compare;
mod config;
mod csv_io;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, ModelError, ModelVariant, ScenarioParams};
use crate::metrics::Ratio;
use crate::sim::{self, SimConfig, SimError};

pub use compare::{compare, write_comparison_csv, Comparison, ComparisonRow, VariantSummary};
pub use config::{load_config, parse_config};
pub use csv_io::{read_csv, write_csv, write_csv_to, CSV_HEADER};
pub use plot::emit_plot_data;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: missing key `{key}`", path.display())]
    MissingKey { path: PathBuf, key: &'static str },
    #[error("{}: {message}", path.display())]
    InvalidConfig { path: PathBuf, message: String },
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error("{}:{line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("model and reference rows share no (scenario, B) point")]
    DisjointGrids,
    #[error("reference rows mix variants: {0}")]
    AmbiguousReference(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One evaluation route in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    NewCubic,
    OldQuartic,
    ExactTranscendental,
    Simulation,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::NewCubic,
        Variant::OldQuartic,
        Variant::ExactTranscendental,
        Variant::Simulation,
    ];

    pub fn model(self) -> Option<ModelVariant> {
        match self {
            Variant::NewCubic => Some(ModelVariant::NewCubic),
            Variant::OldQuartic => Some(ModelVariant::OldQuartic),
            Variant::ExactTranscendental => Some(ModelVariant::ExactTranscendental),
            Variant::Simulation => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self.model() {
            Some(m) => m.as_str(),
            None => "simulation",
        }
    }
}

impl From<ModelVariant> for Variant {
    fn from(m: ModelVariant) -> Self {
        match m {
            ModelVariant::NewCubic => Variant::NewCubic,
            ModelVariant::OldQuartic => Variant::OldQuartic,
            ModelVariant::ExactTranscendental => Variant::ExactTranscendental,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulation" | "sim" => Ok(Variant::Simulation),
            other => other.parse::<ModelVariant>().map(Variant::from),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    NoPhysicalRoot,
    NumericRange,
}

/// Optional simulator settings applied on top of [`SimConfig::new`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOverrides {
    pub duration: Option<f64>,
    pub warmup: Option<f64>,
    pub wireless_rate: Option<f64>,
    pub wired_delay: Option<f64>,
    pub data_frame: Option<u32>,
    pub ack_frame: Option<u32>,
}

impl SimOverrides {
    pub fn apply(&self, mut cfg: SimConfig) -> SimConfig {
        if let Some(v) = self.duration {
            cfg.duration = v;
        }
        if let Some(v) = self.warmup {
            cfg.warmup = v;
        }
        if let Some(v) = self.wireless_rate {
            cfg.wireless_rate = v;
        }
        if let Some(v) = self.wired_delay {
            cfg.wired_delay = v;
        }
        if let Some(v) = self.data_frame {
            cfg.data_frame = v;
        }
        if let Some(v) = self.ack_frame {
            cfg.ack_frame = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario_name: String,
    /// `buffer` is ignored; each sweep point sets its own.
    pub base: ScenarioParams,
    pub buffer_values: Vec<u32>,
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub sim: SimOverrides,
}

pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

impl SweepSpec {
    /// Four built-in scenarios: `s1` 1 up/1 down, `s2` 2/2, `s3` 1/2,
    /// `s4` 2/1, all with a 42-packet window.
    pub fn builtin(name: &str) -> Option<SweepSpec> {
        let (up, down) = match name {
            "s1" => (1, 1),
            "s2" => (2, 2),
            "s3" => (1, 2),
            "s4" => (2, 1),
            _ => return None,
        };
        Some(SweepSpec {
            scenario_name: name.to_string(),
            base: ScenarioParams::new(up, down, ScenarioParams::DEFAULT_WINDOW, 1),
            buffer_values: (1..=40).map(|k| 5 * k).collect(),
            variants: Variant::ALL.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            sim: SimOverrides::default(),
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidSpec(m));
        if self.buffer_values.is_empty() {
            return bad("buffer_values is empty".into());
        }
        if self.buffer_values[0] == 0 {
            return bad("buffer sizes must be at least 1".into());
        }
        if let Some(w) = self.buffer_values.windows(2).find(|w| w[0] >= w[1]) {
            return bad(format!(
                "buffer_values not strictly ascending at {} -> {}",
                w[0], w[1]
            ));
        }
        if self.variants.is_empty() {
            return bad("no variants selected".into());
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].contains(v) {
                return bad(format!("variant {v} listed twice"));
            }
        }
        let b = &self.base;
        if b.up + b.down == 0 {
            return bad("scenario needs at least one station".into());
        }
        if b.window == 0 {
            return bad("window must be at least 1".into());
        }
        if self.variants.iter().any(|v| v.model().is_some()) && (b.up == 0 || b.down == 0) {
            return bad("analytic variants need at least one up and one down station".into());
        }
        if self.variants.contains(&Variant::Simulation) {
            if self.seeds.is_empty() {
                return bad("simulation needs at least one seed".into());
            }
            let probe = self
                .sim
                .apply(SimConfig::new(b.with_buffer(self.buffer_values[0]), 0));
            probe.validate()?;
        }
        Ok(())
    }
}

/// One output record: an analytic solution or one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    #[serde(rename = "U")]
    pub up: u32,
    #[serde(rename = "D")]
    pub down: u32,
    pub w: u32,
    #[serde(rename = "B")]
    pub buffer: u32,
    pub variant: Variant,
    pub seed: Option<u64>,
    #[serde(rename = "R_model")]
    pub r_model: Option<f64>,
    pub ratio_up_down: Option<Ratio>,
    #[serde(rename = "Pr")]
    pub pr: Option<f64>,
    pub pr_raw_flag: Option<bool>,
    #[serde(rename = "E")]
    pub extra_service: Option<f64>,
    pub up_pps: Option<f64>,
    pub down_pps: Option<f64>,
    pub jain_index: Option<f64>,
    pub residual_eq13: Option<f64>,
    pub status: RowStatus,
}

impl SweepRow {
    fn blank(name: &str, p: &ScenarioParams, variant: Variant) -> Self {
        SweepRow {
            scenario: name.to_string(),
            up: p.up,
            down: p.down,
            w: p.window,
            buffer: p.buffer,
            variant,
            seed: None,
            r_model: None,
            ratio_up_down: None,
            pr: None,
            pr_raw_flag: None,
            extra_service: None,
            up_pps: None,
            down_pps: None,
            jain_index: None,
            residual_eq13: None,
            status: RowStatus::Ok,
        }
    }
}

pub fn model_row(name: &str, p: &ScenarioParams, variant: ModelVariant) -> SweepRow {
    let mut row = SweepRow::blank(name, p, variant.into());
    match analytic::solve_model(p, variant) {
        Ok(sol) => {
            row.r_model = Some(sol.ratio_down_up);
            row.ratio_up_down = Some(Ratio::Finite(sol.ratio_up_down));
            row.pr = Some(sol.loss_prob);
            row.pr_raw_flag = Some(sol.pr_clamped);
            row.extra_service = Some(sol.extra_service.value());
            row.residual_eq13 = Some(sol.residual_eq13);
        }
        Err(e) => {
            row.extra_service = analytic::extra_service(p).ok().map(|e| e.value());
            row.status = match e {
                ModelError::NoPhysicalRoot(_) | ModelError::NonPhysical(_) => {
                    RowStatus::NoPhysicalRoot
                }
                _ => RowStatus::NumericRange,
            };
        }
    }
    row
}

pub fn simulation_row(name: &str, cfg: &SimConfig) -> Result<SweepRow, SimError> {
    let result = sim::run_simulation(cfg)?;
    let mut row = SweepRow::blank(name, &cfg.scenario, Variant::Simulation);
    row.seed = Some(cfg.seed);
    row.ratio_up_down = Some(result.ratio_up_down);
    row.up_pps = Some(result.up_total);
    row.down_pps = Some(result.down_total);
    row.jain_index = result.jain_index;
    Ok(row)
}

enum Task {
    Model(ScenarioParams, ModelVariant),
    Sim(SimConfig),
}

/// Evaluates every (buffer, variant, seed) point. Rows come back buffer
/// major, then in the sweep's variant order, then by seed. Points run in
/// parallel.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    spec.validate()?;
    let mut tasks = Vec::new();
    for &b in &spec.buffer_values {
        let p = spec.base.with_buffer(b);
        for &v in &spec.variants {
            match v.model() {
                Some(m) => tasks.push(Task::Model(p, m)),
                None => tasks.extend(
                    spec.seeds
                        .iter()
                        .map(|&seed| Task::Sim(spec.sim.apply(SimConfig::new(p, seed)))),
                ),
            }
        }
    }
    let name = spec.scenario_name.as_str();
    tasks
        .par_iter()
        .map(|t| match t {
            Task::Model(p, m) => Ok(model_row(name, p, *m)),
            Task::Sim(cfg) => Ok(simulation_row(name, cfg)?),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(buffers: Vec<u32>, variants: Vec<Variant>) -> SweepSpec {
        SweepSpec {
            buffer_values: buffers,
            variants,
            ..SweepSpec::builtin("s1").unwrap()
        }
    }

    #[test]
    fn empty_buffers_rejected() {
        let s = spec(vec![], vec![Variant::NewCubic]);
        assert!(matches!(run_sweep(&s), Err(HarnessError::InvalidSpec(_))));
    }

    #[test]
    fn descending_buffers_rejected() {
        let s = spec(vec![20, 10], vec![Variant::NewCubic]);
        assert!(s.validate().is_err());
        let s = spec(vec![10, 10], vec![Variant::NewCubic]);
        assert!(s.validate().is_err());
    }

    #[test]
    fn analytic_needs_both_directions() {
        let mut s = spec(vec![10], vec![Variant::NewCubic]);
        s.base.down = 0;
        assert!(s.validate().is_err());
        s.variants = vec![Variant::Simulation];
        assert!(s.validate().is_ok());
    }

    #[test]
    fn scenario_one_rows() {
        let rows = run_sweep(&spec(vec![20, 84], vec![Variant::NewCubic])).unwrap();
        assert_eq!(rows.len(), 2);
        let r0 = rows[0].ratio_up_down.unwrap().finite().unwrap();
        let r1 = rows[1].ratio_up_down.unwrap().finite().unwrap();
        assert!((r0 - 15.4).abs() < 0.05);
        assert!((0.9..=1.6).contains(&r1));
        assert!(rows
            .iter()
            .all(|r| r.seed.is_none() && r.status == RowStatus::Ok));
    }

    #[test]
    fn two_variants_share_point() {
        let rows = run_sweep(&spec(
            vec![20],
            vec![Variant::NewCubic, Variant::OldQuartic],
        ))
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].variant, Variant::NewCubic);
        assert_eq!(rows[1].variant, Variant::OldQuartic);
        assert_eq!(
            (rows[0].up, rows[0].down, rows[0].w, rows[0].buffer),
            (rows[1].up, rows[1].down, rows[1].w, rows[1].buffer)
        );
    }

    #[test]
    fn row_order_is_buffer_variant_seed() {
        let mut s = spec(vec![5, 10], vec![Variant::Simulation, Variant::NewCubic]);
        s.seeds = vec![3, 1];
        s.sim.duration = Some(1.0);
        let rows = run_sweep(&s).unwrap();
        let keys: Vec<(u32, Variant, Option<u64>)> =
            rows.iter().map(|r| (r.buffer, r.variant, r.seed)).collect();
        assert_eq!(
            keys,
            vec![
                (5, Variant::Simulation, Some(3)),
                (5, Variant::Simulation, Some(1)),
                (5, Variant::NewCubic, None),
                (10, Variant::Simulation, Some(3)),
                (10, Variant::Simulation, Some(1)),
                (10, Variant::NewCubic, None),
            ]
        );
    }

    #[test]
    fn builtins_cover_four_scenarios() {
        let pops: Vec<(u32, u32)> = ["s1", "s2", "s3", "s4"]
            .iter()
            .map(|n| {
                let s = SweepSpec::builtin(n).unwrap();
                assert!(s.validate().is_ok());
                (s.base.up, s.base.down)
            })
            .collect();
        assert_eq!(pops, vec![(1, 1), (2, 2), (1, 2), (2, 1)]);
        assert!(SweepSpec::builtin("s5").is_none());
    }
}
