use std::path::Path;

use serde::Deserialize;

use super::{HarnessError, SimOverrides, SweepSpec, Variant, DEFAULT_SEEDS};
use crate::analytic::ScenarioParams;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<RawScenario>,
    sweep: Option<RawSweep>,
    #[serde(default)]
    sim: RawSim,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    up: Option<u32>,
    down: Option<u32>,
    window: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    buffers: Option<Vec<u32>>,
    variants: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSim {
    duration: Option<f64>,
    warmup: Option<f64>,
    wireless_rate: Option<f64>,
    wired_delay: Option<f64>,
    data_frame: Option<u32>,
    ack_frame: Option<u32>,
}

/// Reads a TOML sweep description:
///
/// ```toml
/// [scenario]
/// name = "s1"      # optional
/// up = 1
/// down = 1
/// window = 42      # optional
///
/// [sweep]
/// buffers = [10, 20, 40]
/// variants = ["new_cubic", "simulation"]   # optional, default all
/// seeds = [1, 2, 3]                        # optional, default 1..=5
///
/// [sim]            # optional
/// duration = 100.0
/// ```
pub fn load_config(path: &Path) -> Result<SweepSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

pub fn parse_config(text: &str, path: &Path) -> Result<SweepSpec, HarnessError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let missing = |key| HarnessError::MissingKey {
        path: path.to_path_buf(),
        key,
    };
    let invalid = |message: String| HarnessError::InvalidConfig {
        path: path.to_path_buf(),
        message,
    };

    let scenario = raw.scenario.ok_or_else(|| missing("scenario"))?;
    let up = scenario.up.ok_or_else(|| missing("scenario.up"))?;
    let down = scenario.down.ok_or_else(|| missing("scenario.down"))?;
    let window = scenario.window.unwrap_or(ScenarioParams::DEFAULT_WINDOW);
    let sweep = raw.sweep.ok_or_else(|| missing("sweep"))?;
    let buffers = sweep.buffers.ok_or_else(|| missing("sweep.buffers"))?;
    let variants = match sweep.variants {
        None => Variant::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Variant>())
            .collect::<Result<_, _>>()
            .map_err(invalid)?,
    };
    let sim = SimOverrides {
        duration: raw.sim.duration,
        warmup: raw.sim.warmup,
        wireless_rate: raw.sim.wireless_rate,
        wired_delay: raw.sim.wired_delay,
        data_frame: raw.sim.data_frame,
        ack_frame: raw.sim.ack_frame,
    };
    let spec = SweepSpec {
        scenario_name: scenario.name.unwrap_or_else(|| "custom".to_string()),
        base: ScenarioParams::new(up, down, window, 1),
        buffer_values: buffers,
        variants,
        seeds: sweep.seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
        sim,
    };
    spec.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(spec)
}

fn line_of(text: &str, offset: usize) -> usize {
    1 + text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SweepSpec, HarnessError> {
        parse_config(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_defaults() {
        let s = parse("[scenario]\nup = 1\ndown = 2\n[sweep]\nbuffers = [10, 20]\n").unwrap();
        assert_eq!(s.scenario_name, "custom");
        assert_eq!((s.base.up, s.base.down, s.base.window), (1, 2, 42));
        assert_eq!(s.variants, Variant::ALL.to_vec());
        assert_eq!(s.seeds, vec![1, 2, 3, 4, 5]);
        assert_eq!(s.sim, SimOverrides::default());
    }

    #[test]
    fn full_config() {
        let s = parse(
            "[scenario]\nname = \"x\"\nup = 2\ndown = 1\nwindow = 20\n\
             [sweep]\nbuffers = [5]\nvariants = [\"old_quartic\", \"simulation\"]\nseeds = [9]\n\
             [sim]\nduration = 5.0\ndata_frame = 500\n",
        )
        .unwrap();
        assert_eq!(s.variants, vec![Variant::OldQuartic, Variant::Simulation]);
        assert_eq!(s.seeds, vec![9]);
        assert_eq!(s.sim.duration, Some(5.0));
        assert_eq!(s.sim.data_frame, Some(500));
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse("[scenario]\nup = 1\ndown = = 2\n") {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_keys() {
        match parse("[scenario]\nup = 1\n[sweep]\nbuffers = [1]\n") {
            Err(HarnessError::MissingKey { key, .. }) => assert_eq!(key, "scenario.down"),
            other => panic!("unexpected {other:?}"),
        }
        match parse("[scenario]\nup = 1\ndown = 1\n") {
            Err(HarnessError::MissingKey { key, .. }) => assert_eq!(key, "sweep"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_values() {
        let bad_variant =
            "[scenario]\nup = 1\ndown = 1\n[sweep]\nbuffers = [1]\nvariants = [\"nope\"]\n";
        assert!(matches!(
            parse(bad_variant),
            Err(HarnessError::InvalidConfig { .. })
        ));
        let unsorted = "[scenario]\nup = 1\ndown = 1\n[sweep]\nbuffers = [3, 1]\n";
        assert!(matches!(
            parse(unsorted),
            Err(HarnessError::InvalidConfig { .. })
        ));
        let negative = "[scenario]\nup = -1\ndown = 1\n[sweep]\nbuffers = [3]\n";
        assert!(matches!(
            parse(negative),
            Err(HarnessError::Parse { line: 2, .. })
        ));
    }
}
