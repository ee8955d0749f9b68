use std::io::Write;
use std::path::Path;

use super::{HarnessError, SweepRow};

pub const CSV_HEADER: &str = "scenario,U,D,w,B,variant,seed,R_model,ratio_up_down,Pr,pr_raw_flag,E,up_pps,down_pps,jain_index,residual_eq13,status";

fn io_err(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    let line = e.position().map_or(0, |p| p.line());
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        _ => HarnessError::Csv {
            path: path.to_path_buf(),
            line,
            message,
        },
    }
}

/// Writes rows under the fixed header. An empty slice still gets the header.
pub fn write_csv_to<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    wtr.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    write_csv_to(rows, std::io::BufWriter::new(file)).map_err(|e| csv_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = header.iter().collect();
    if got != CSV_HEADER.split(',').collect::<Vec<_>>() {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected header `{}`", got.join(",")),
        });
    }
    rdr.deserialize()
        .collect::<Result<Vec<SweepRow>, _>>()
        .map_err(|e| csv_err(path, e))
}
