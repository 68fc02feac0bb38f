use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scheme::Scheme;

use super::SweepRow;

pub const CSV_HEADER: [&str; 8] = [
    "scheme",
    "p1",
    "p2",
    "analytic_aoi",
    "solver_aoi",
    "sim_aoi",
    "sim_std_error",
    "cycles",
];

/// `x` with six significant digits: fixed notation for magnitudes in
/// `[1e-4, 1e6)`, scientific outside.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let mut magnitude = x.abs().log10().floor() as i32;
    // Rounding can carry into the next decade (9.999996 -> 10.0000).
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    if rounded.abs() >= 10f64.powi(magnitude + 1) {
        magnitude += 1;
    }
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.scheme
            .cmp(&b.scheme)
            .then(a.p1.total_cmp(&b.p1))
            .then(a.p2.total_cmp(&b.p2))
    });
}

/// CSV text for `rows`, sorted by scheme, `p1`, `p2`; LF line endings.
pub fn to_csv_string(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    for row in &sorted {
        writer.write_record([
            row.scheme.name().to_string(),
            format_sig6(row.p1),
            format_sig6(row.p2),
            format_sig6(row.analytic_aoi),
            format_sig6(row.solver_aoi),
            format_sig6(row.sim_aoi),
            format_sig6(row.sim_std_error),
            row.cycles.to_string(),
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are ASCII"))
}

pub fn emit_csv(rows: &[SweepRow], destination: &Path) -> Result<()> {
    let text = to_csv_string(rows)?;
    let mut file = File::create(destination)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let float = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| {
                Error::Config(format!(
                    "bad number {:?} in column {}",
                    &record[i], CSV_HEADER[i]
                ))
            })
        };
        rows.push(SweepRow {
            scheme: record[0].parse::<Scheme>().map_err(Error::Config)?,
            p1: float(1)?,
            p2: float(2)?,
            analytic_aoi: float(3)?,
            solver_aoi: float(4)?,
            sim_aoi: float(5)?,
            sim_std_error: float(6)?,
            cycles: record[7]
                .parse()
                .map_err(|_| Error::Config(format!("bad cycle count {:?}", &record[7])))?,
            error: None,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    parse_csv(File::open(path)?)
}
