//! CSV exchange for sampled paths.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::path_core::{SampledPath, TimeGrid};

/// Relative tolerance on node spacing when inferring a grid from a file.
const UNIFORMITY_TOLERANCE: f64 = 1e-9;

/// Reads a two-column `t,value` CSV with a header row. The grid is inferred
/// from the time column, which must start at 0 and be uniform.
pub fn read_path<R: Read>(reader: R) -> Result<SampledPath> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "row {}: expected columns t,value",
                row + 1
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("row {}: `{s}`: {e}", row + 1)))
        };
        times.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
    }
    let grid = infer_grid(&times)?;
    SampledPath::new(grid, values)
}

pub fn read_path_file(path: impl AsRef<Path>) -> Result<SampledPath> {
    read_path(std::fs::File::open(path)?)
}

pub(crate) fn infer_grid(times: &[f64]) -> Result<TimeGrid> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument(
            "a path needs at least two rows".into(),
        ));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time column must start at 0, found {}",
            times[0]
        )));
    }
    let steps = times.len() - 1;
    let grid = TimeGrid::new(times[steps], steps)?;
    let scale = grid.horizon().abs().max(1.0);
    for (i, &t) in times.iter().enumerate() {
        if (t - grid.node(i)).abs() > UNIFORMITY_TOLERANCE * scale {
            return Err(Error::InvalidArgument(format!(
                "time column is not uniform at row {}: {t} vs {}",
                i + 1,
                grid.node(i)
            )));
        }
    }
    Ok(grid)
}

/// Writes named columns that share `grid`, preceded by a `t` column.
/// Values use the shortest representation that round-trips exactly.
pub fn write_columns<W: Write>(writer: W, grid: &TimeGrid, columns: &[(&str, &[f64])]) -> Result<()> {
    for (name, col) in columns {
        if col.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "column `{name}` has {} values, grid has {}",
                col.len(),
                grid.len()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t"];
    header.extend(columns.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(columns.len() + 1);
    for i in 0..grid.len() {
        row.clear();
        row.push(format!("{}", grid.node(i)));
        row.extend(columns.iter().map(|(_, c)| format!("{}", c[i])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_path<W: Write>(writer: W, path: &SampledPath, name: &str) -> Result<()> {
    write_columns(writer, path.grid(), &[(name, path.values())])
}

pub fn write_columns_file(
    path: impl AsRef<Path>,
    grid: &TimeGrid,
    columns: &[(&str, &[f64])],
) -> Result<()> {
    write_columns(std::fs::File::create(path)?, grid, columns)
}
