use std::io::{BufRead, Write};

use crate::experiments::StudyReport;
use crate::forward::SeismogramData;
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// Columns `t,E`.
pub fn write_energy_csv(mut w: impl Write, times: &[f64], energy: &[f64]) -> Result<()> {
    if times.len() != energy.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), got: energy.len() });
    }
    writeln!(w, "t,E")?;
    for (t, e) in times.iter().zip(energy) {
        writeln!(w, "{t:.17e},{e:.17e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t,r0,r1,…`, one row per time step.
pub fn write_seismogram_csv(mut w: impl Write, data: &SeismogramData) -> Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string()).chain((0..data.n_channels()).map(|c| format!("r{c}"))).collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, row) in data.times().iter().zip(data.samples()) {
        write!(w, "{t:.17e}")?;
        for v in row {
            write!(w, ",{v:.17e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the layout of [`write_seismogram_csv`]; the time column must be uniform.
pub fn read_seismogram_csv(r: impl BufRead) -> Result<SeismogramData> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty seismogram file".into()))??;
    let n_cols = header.split(',').count();
    if n_cols < 2 || header.split(',').next().map(str::trim) != Some("t") {
        return Err(Error::Format("seismogram header must start with t and name at least one receiver".into()));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", i + 2))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != n_cols {
            return Err(Error::Format(format!("line {}: expected {n_cols} columns, found {}", i + 2, vals.len())));
        }
        times.push(vals[0]);
        samples.push(vals[1..].to_vec());
    }
    if times.len() < 2 {
        return Err(Error::Format("seismogram needs at least two time rows".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::Format("time column is not uniformly increasing".into()));
    }
    SeismogramData::new(dt, samples)
}

/// One `row col value` line per stored entry.
pub fn write_coo(mut w: impl Write, m: &CsrMatrix) -> Result<()> {
    writeln!(w, "% {} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (r, c, v) in m.triplets() {
        writeln!(w, "{r} {c} {v:.17e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_study_json(mut w: impl Write, report: &StudyReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Parameter column followed by the series in key order.
pub fn write_study_csv(mut w: impl Write, report: &StudyReport) -> Result<()> {
    let n = report.parameter.len();
    if let Some((k, v)) = report.series.iter().find(|(_, v)| v.len() != n) {
        return Err(Error::Format(format!("series {k} has {} values for {n} parameters", v.len())));
    }
    let mut header = vec![report.parameter_name.clone()];
    header.extend(report.series.keys().cloned());
    writeln!(w, "{}", header.join(","))?;
    for i in 0..n {
        write!(w, "{:.17e}", report.parameter[i])?;
        for v in report.series.values() {
            write!(w, ",{:.17e}", v[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
