use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::sweep::{CellOutcome, Row, SweepResult};
use crate::error::{CbwkError, Result};

pub const CSV_HEADER: [&str; 8] = [
    "algorithm",
    "sweep_param",
    "sweep_value",
    "seed",
    "regret",
    "tau",
    "total_reward",
    "runtime_ms",
];

fn csv_err(path: &Path, e: csv::Error) -> CbwkError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CbwkError::io(path, io),
        other => CbwkError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// One line per row after the header. Failed cells leave the measurement
/// columns empty; `runtime_ms` is empty unless timings were recorded.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(CbwkError::config("refusing to write an empty result"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for r in &result.rows {
        let (regret, tau, total) = match &r.outcome {
            Ok(o) => (o.regret.to_string(), o.tau.to_string(), o.total_reward.to_string()),
            Err(_) => Default::default(),
        };
        let runtime = r.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default();
        w.write_record([
            r.algorithm.as_str(),
            &r.sweep_param,
            &r.sweep_value.to_string(),
            &r.seed.to_string(),
            &regret,
            &tau,
            &total,
            &runtime,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CbwkError::io(path, e))
}

/// Reads a file produced by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(CbwkError::config(format!(
            "{} does not have the expected columns {}",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    let bad = |line: u64, what: &str| {
        CbwkError::config(format!("{}: line {line}: bad {what}", path.display()))
    };
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i as u64 + 2;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let outcome = if field(4).is_empty() {
            Err("failed".to_string())
        } else {
            Ok(CellOutcome {
                regret: field(4).parse().map_err(|_| bad(line, "regret"))?,
                tau: field(5).parse().map_err(|_| bad(line, "tau"))?,
                total_reward: field(6).parse().map_err(|_| bad(line, "total_reward"))?,
            })
        };
        rows.push(Row {
            algorithm: field(0).to_string(),
            sweep_param: field(1).to_string(),
            sweep_value: field(2).parse().map_err(|_| bad(line, "sweep_value"))?,
            seed: field(3).parse().map_err(|_| bad(line, "seed"))?,
            outcome,
            runtime_ms: match field(7) {
                "" => None,
                t => Some(t.parse().map_err(|_| bad(line, "runtime_ms"))?),
            },
        });
    }
    if rows.is_empty() {
        return Err(CbwkError::config(format!("{} has no rows", path.display())));
    }
    Ok(SweepResult {
        sweep_param: rows[0].sweep_param.clone(),
        rows,
    })
}

/// Per-cell mean and standard deviation of the regret.
pub fn write_summary(result: &SweepResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["algorithm", "sweep_param", "sweep_value", "seeds", "mean_regret", "std_regret"])
        .map_err(|e| csv_err(path, e))?;
    for s in result.summaries() {
        w.write_record([
            s.algorithm.as_str(),
            &result.sweep_param,
            &s.sweep_value.to_string(),
            &s.count.to_string(),
            &s.mean.to_string(),
            &s.std.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CbwkError::io(path, e))
}

/// Plain-text notes that do not fit the CSV: generator, failures.
pub fn write_meta(result: &SweepResult, config_text: &str, path: &Path) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CbwkError::io(path, e))?;
    let mut body = format!("rng = {}\nrows = {}\n", super::sweep::RNG_NAME, result.rows.len());
    for r in result.failures() {
        if let Err(msg) = &r.outcome {
            body.push_str(&format!(
                "failed {} {}={} seed={}: {}\n",
                r.algorithm, r.sweep_param, r.sweep_value, r.seed, msg
            ));
        }
    }
    body.push_str("\n# config\n");
    body.push_str(config_text);
    f.write_all(body.as_bytes()).map_err(|e| CbwkError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alg: &str, v: usize, seed: u64, regret: f64) -> Row {
        Row {
            algorithm: alg.into(),
            sweep_param: "m".into(),
            sweep_value: v,
            seed,
            outcome: Ok(CellOutcome {
                regret,
                tau: 100,
                total_reward: 50.5,
            }),
            runtime_ms: None,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut rows = vec![row("linucb", 10, 0, 1.25), row("linucb", 10, 1, -0.1 + 0.2)];
        rows.push(Row {
            outcome: Err("boom".into()),
            ..row("linucb", 12, 0, 0.0)
        });
        let res = SweepResult {
            sweep_param: "m".into(),
            rows,
        };
        write_csv(&res, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert!(text.contains("linucb,m,12,0,,,,"));
        let back = read_csv(&p).unwrap();
        assert_eq!(back.rows[..2], res.rows[..2]);
        assert!(back.rows[2].outcome.is_err());
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let res = SweepResult {
            sweep_param: "m".into(),
            rows: vec![row("linucb", 10, 0, 1.0)],
        };
        let err = write_csv(&res, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"), "{err}");
    }
}
