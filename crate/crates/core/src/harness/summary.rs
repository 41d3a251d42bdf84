use super::run::Record;
use crate::error::{Error, Result};
use crate::transfer::binomial;
use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

/// Aggregate of one grid point. `mean` and `stderr` refer to the first value
/// column; `p_suc` is the success fraction with its binomial error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub params: Vec<f64>,
    pub n: usize,
    pub completed: usize,
    pub mean: f64,
    pub stderr: f64,
    pub p_suc: f64,
    pub p_suc_stderr: f64,
}

/// Mean and standard error of the mean, with the n − 1 sample variance.
/// A single sample has zero error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn aggregate(points: &[Vec<f64>], records: &[Record]) -> Vec<PointSummary> {
    points
        .iter()
        .enumerate()
        .map(|(point, params)| {
            let mine: Vec<&Record> = records.iter().filter(|r| r.point == point).collect();
            let ok: Vec<&&Record> = mine.iter().filter(|r| r.error.is_none()).collect();
            let values: Vec<f64> = ok.iter().filter_map(|r| r.values.first().copied().flatten()).collect();
            let (mean, stderr) = mean_stderr(&values);
            let flagged: Vec<bool> = ok.iter().filter_map(|r| r.success).collect();
            let (p_suc, p_suc_stderr) = binomial(flagged.iter().filter(|&&s| s).count(), flagged.len());
            PointSummary {
                point,
                params: params.clone(),
                n: mine.len(),
                completed: ok.len(),
                mean,
                stderr,
                p_suc,
                p_suc_stderr,
            }
        })
        .collect()
}

/// Aggregate table read back from a records file.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub param_names: Vec<String>,
    pub value_name: String,
    pub points: Vec<PointSummary>,
}

/// Parses a records CSV as written by the harness and aggregates it per
/// grid point. Malformed rows are reported with their line number.
pub fn summarize_reader<R: Read>(input: R, origin: &str) -> Result<SummaryTable> {
    let mut rd = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let bad = |line: u64, reason: String| Error::MalformedRow { path: origin.to_string(), line, reason };
    let (Some(0), Some(real), Some(seed), Some(succ), Some(err)) =
        (col("point"), col("realization"), col("seed"), col("success"), col("error"))
    else {
        return Err(bad(1, "header lacks point/realization/seed/success/error".into()));
    };
    if !(real < seed && seed < succ && succ < err) {
        return Err(bad(1, "unexpected column order".into()));
    }
    let param_names = header[1..real].to_vec();
    let value_name = header.get(seed + 1).filter(|_| seed + 1 < succ).cloned().unwrap_or_default();

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |k: usize| -> Result<f64> {
            row[k].parse::<f64>().map_err(|_| bad(line, format!("column `{}`: `{}` is not a number", header[k], &row[k])))
        };
        let point: usize = row[0].parse().map_err(|_| bad(line, format!("bad point index `{}`", &row[0])))?;
        let params = (1..real).map(num).collect::<Result<Vec<_>>>()?;
        match points.get(point) {
            Some(known) if *known != params => return Err(bad(line, format!("point {point} changes its parameters"))),
            Some(_) => {}
            None if point == points.len() => points.push(params),
            None => return Err(bad(line, format!("point {point} out of order"))),
        }
        let error = (!row[err].is_empty()).then(|| row[err].to_string());
        let value = if value_name.is_empty() || row[seed + 1].is_empty() { None } else { Some(num(seed + 1)?) };
        if error.is_none() && value.is_none() && !value_name.is_empty() {
            return Err(bad(line, "missing value in a successful record".into()));
        }
        let success = match &row[succ] {
            "" => None,
            "0" => Some(false),
            "1" => Some(true),
            s => return Err(bad(line, format!("success flag `{s}`"))),
        };
        records.push(Record {
            point,
            realization: row[real].parse().map_err(|_| bad(line, "bad realization".into()))?,
            seed: row[seed].parse().map_err(|_| bad(line, "bad seed".into()))?,
            values: vec![value],
            success,
            error,
        });
    }
    Ok(SummaryTable { param_names, value_name, points: aggregate(&points, &records) })
}

pub fn summarize(path: &Path) -> Result<SummaryTable> {
    let f = std::fs::File::open(path)?;
    summarize_reader(f, &path.display().to_string())
}

impl SummaryTable {
    /// point, parameters, n, completed, mean_<value>, stderr_<value>,
    /// p_suc, p_suc_stderr.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["point".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.extend(["n".into(), "completed".into()]);
        header.extend([format!("mean_{}", self.value_name), format!("stderr_{}", self.value_name)]);
        header.extend(["p_suc".into(), "p_suc_stderr".into()]);
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![p.point.to_string()];
            row.extend(p.params.iter().map(|v| format!("{v:e}")));
            row.extend([p.n.to_string(), p.completed.to_string()]);
            row.extend([p.mean, p.stderr, p.p_suc, p.p_suc_stderr].iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
