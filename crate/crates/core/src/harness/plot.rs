use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::compare::point_values;
use super::{HarnessError, RowStatus, SweepRow, Variant};

/// Writes one whitespace-separated `{scenario}_{variant}.dat` file per
/// series with columns `B ratio_up_down`, plus `{scenario}_simulation_jain.dat`
/// with the mean Jain index when simulation rows are present. Non-finite
/// ratios are written as `inf` or `nan`.
pub fn emit_plot_data(rows: &[SweepRow], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let io = |path: &Path, source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;

    let mut series: BTreeMap<(String, Variant), String> = BTreeMap::new();
    for ((scenario, b, variant), ratio) in point_values(rows) {
        let text = series
            .entry((scenario, variant))
            .or_insert_with(|| "# B ratio_up_down\n".to_string());
        let _ = writeln!(text, "{b} {ratio}");
    }

    let mut jain: BTreeMap<(String, u32), (f64, usize)> = BTreeMap::new();
    for r in rows {
        if let (Variant::Simulation, RowStatus::Ok, Some(j)) = (r.variant, r.status, r.jain_index) {
            let e = jain
                .entry((r.scenario.clone(), r.buffer))
                .or_insert((0.0, 0));
            e.0 += j;
            e.1 += 1;
        }
    }
    let mut jain_files: BTreeMap<String, String> = BTreeMap::new();
    for ((scenario, b), (sum, n)) in jain {
        let text = jain_files
            .entry(scenario)
            .or_insert_with(|| "# B jain_index\n".to_string());
        let _ = writeln!(text, "{b} {}", sum / n as f64);
    }

    let mut written = Vec::new();
    let outputs = series
        .into_iter()
        .map(|((s, v), t)| (format!("{s}_{v}.dat"), t))
        .chain(
            jain_files
                .into_iter()
                .map(|(s, t)| (format!("{s}_simulation_jain.dat"), t)),
        );
    for (name, text) in outputs {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
