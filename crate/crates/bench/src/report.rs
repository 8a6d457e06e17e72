//! On-disk results: one CSV trace per run, `manifest.json`, and the summary
//! table (`summary.csv` plus aligned text in `summary.txt`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use psga::metrics::{rel_subopt, TraceRecord};
use psga::StepBranch;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, Problem};
use crate::error::{io_err, BenchError, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "iter",
    "elapsed_s",
    "f_val",
    "rel_subopt",
    "grad_err",
    "stationarity",
    "eta",
    "branch",
];
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
const NA: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    MemoryRefused,
    NumericFailure,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::MemoryRefused => "memory_refused",
            Outcome::NumericFailure => "numeric_failure",
        }
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), fmt_real)
}

fn trace_row(r: &TraceRecord) -> [String; 8] {
    [
        r.iter.to_string(),
        fmt_real(r.elapsed_s),
        fmt_real(r.f_val),
        fmt_opt(r.rel_subopt),
        fmt_real(r.grad_err),
        fmt_real(r.stationarity),
        fmt_opt(r.eta),
        r.branch.map_or(NA, StepBranch::as_str).to_string(),
    ]
}

pub fn write_trace(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(&TRACE_HEADER.join(","));
    out.push('\n');
    for r in records {
        out.push_str(&trace_row(r).join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let bad = |message: String| BenchError::Trace {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(bad(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let real = |col: usize| -> Result<f64> {
            row[col].parse().map_err(|_| {
                bad(format!(
                    "line {line}: bad {} value {:?}",
                    TRACE_HEADER[col], &row[col]
                ))
            })
        };
        let opt = |col: usize| -> Result<Option<f64>> {
            if &row[col] == NA {
                Ok(None)
            } else {
                real(col).map(Some)
            }
        };
        records.push(TraceRecord {
            iter: row[0]
                .parse()
                .map_err(|_| bad(format!("line {line}: bad iter {:?}", &row[0])))?,
            elapsed_s: real(1)?,
            f_val: real(2)?,
            rel_subopt: opt(3)?,
            grad_err: real(4)?,
            stationarity: real(5)?,
            eta: opt(6)?,
            branch: match &row[7] {
                NA => None,
                s => Some(
                    s.parse()
                        .map_err(|_| bad(format!("line {line}: bad branch {s:?}")))?,
                ),
            },
        });
    }
    Ok(records)
}

/// What `run` recorded about one run; everything else is derived from traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub trace: String,
    pub dataset: String,
    pub dataset_path: PathBuf,
    pub problem: Problem,
    pub lambda: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub max_iters: u64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub best_tol: f64,
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Trace {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Writes the manifest, keeping entries of earlier suites whose names
    /// this one does not reuse.
    pub fn merge_into(mut self, dir: &Path) -> Result<()> {
        if dir.join(MANIFEST_FILE).exists() {
            let old = Manifest::read(dir)?;
            for entry in old.runs {
                if !self.runs.iter().any(|e| e.name == entry.name) {
                    self.runs.push(entry);
                }
            }
        }
        self.runs.sort_by(|a, b| a.name.cmp(&b.name));
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub problem: Problem,
    pub lambda: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub name: String,
    pub outcome: Outcome,
    /// Lowest logged objective value.
    pub f_best: Option<f64>,
    /// First logged iteration within the suite's tolerance of `f_best`.
    pub iters_to_best: Option<u64>,
    pub seconds_to_best: Option<f64>,
    /// Lowest `f_best` over runs on the same dataset, problem and `λ`.
    pub f_star: Option<f64>,
    pub last_iter: Option<u64>,
}

pub fn best_of(trace: &[TraceRecord], tol: f64) -> Option<(f64, u64, f64)> {
    let f_best = trace.iter().map(|r| r.f_val).reduce(f64::min)?;
    let hit = trace.iter().find(|r| r.f_val <= f_best + tol)?;
    Some((f_best, hit.iter, hit.elapsed_s))
}

type GroupKey = (PathBuf, Problem, u64);

fn group_key(e: &ManifestEntry) -> GroupKey {
    (e.dataset_path.clone(), e.problem, e.lambda.to_bits())
}

/// Resolves reference values, backfills `rel_subopt` into every trace and
/// rewrites the summary files. Running it again changes nothing.
pub fn summarize(dir: &Path) -> Result<Vec<SummaryRow>> {
    let manifest = Manifest::read(dir)?;
    let mut traces = Vec::with_capacity(manifest.runs.len());
    for entry in &manifest.runs {
        traces.push(read_trace(&dir.join(&entry.trace))?);
    }

    let mut f_star: BTreeMap<GroupKey, f64> = BTreeMap::new();
    for (entry, trace) in manifest.runs.iter().zip(&traces) {
        if let Some((best, _, _)) = best_of(trace, manifest.best_tol) {
            f_star
                .entry(group_key(entry))
                .and_modify(|f| *f = f.min(best))
                .or_insert(best);
        }
    }

    let mut rows = Vec::with_capacity(manifest.runs.len());
    for (entry, mut trace) in manifest.runs.iter().zip(traces) {
        let star = f_star.get(&group_key(entry)).copied();
        for r in &mut trace {
            r.rel_subopt = star.and_then(|s| rel_subopt(r.f_val, s).ok());
        }
        write_trace(&dir.join(&entry.trace), &trace)?;
        let best = best_of(&trace, manifest.best_tol);
        rows.push(SummaryRow {
            dataset: entry.dataset.clone(),
            problem: entry.problem,
            lambda: entry.lambda,
            algorithm: entry.algorithm,
            seed: entry.seed,
            name: entry.name.clone(),
            outcome: entry.outcome,
            f_best: best.map(|b| b.0),
            iters_to_best: best.map(|b| b.1),
            seconds_to_best: best.map(|b| b.2),
            f_star: star,
            last_iter: trace.last().map(|r| r.iter),
        });
    }
    rows.sort_by(|a, b| {
        a.dataset
            .cmp(&b.dataset)
            .then(a.algorithm.cmp(&b.algorithm))
            .then(a.problem.cmp(&b.problem))
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.seed.cmp(&b.seed))
            .then(a.name.cmp(&b.name))
    });

    write_summary_csv(&dir.join(SUMMARY_CSV), &rows)?;
    let path = dir.join(SUMMARY_TXT);
    fs::write(&path, render_table(&rows)).map_err(io_err(&path))?;
    Ok(rows)
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "dataset",
    "problem",
    "lambda",
    "algorithm",
    "seed",
    "name",
    "outcome",
    "f_best",
    "iters_to_best",
    "seconds_to_best",
    "f_star",
    "last_iter",
];

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = SUMMARY_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let fields = [
            r.dataset.clone(),
            r.problem.as_str().to_string(),
            fmt_real(r.lambda),
            r.algorithm.as_str().to_string(),
            r.seed.to_string(),
            r.name.clone(),
            r.outcome.as_str().to_string(),
            fmt_opt(r.f_best),
            r.iters_to_best
                .map_or_else(|| NA.to_string(), |k| k.to_string()),
            fmt_opt(r.seconds_to_best),
            fmt_opt(r.f_star),
            r.last_iter
                .map_or_else(|| NA.to_string(), |k| k.to_string()),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Aligned text table with one row per run; refused
/// runs show `--`.
pub fn render_table(rows: &[SummaryRow]) -> String {
    let head = [
        "dataset",
        "problem",
        "lambda",
        "algorithm",
        "seed",
        "f(best)",
        "iter",
        "time (s)",
        "outcome",
    ];
    let mut cells: Vec<[String; 9]> = Vec::with_capacity(rows.len());
    for r in rows {
        let refused = r.outcome == Outcome::MemoryRefused;
        let dash = || "--".to_string();
        cells.push([
            r.dataset.clone(),
            r.problem.as_str().to_string(),
            format!("{:e}", r.lambda),
            r.algorithm.display_name().to_string(),
            r.seed.to_string(),
            if refused {
                dash()
            } else {
                r.f_best.map_or_else(dash, |f| format!("{f:.4}"))
            },
            if refused {
                dash()
            } else {
                r.iters_to_best.map_or_else(dash, |k| k.to_string())
            },
            if refused {
                dash()
            } else {
                r.seconds_to_best.map_or_else(dash, |s| format!("{s:.2}"))
            },
            r.outcome.as_str().to_string(),
        ]);
    }
    let mut width = head.map(str::len);
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        for (i, c) in row.iter().enumerate() {
            // text columns left, numbers right
            if (4..8).contains(&i) {
                let _ = write!(out, "{c:>w$}", w = width[i]);
            } else {
                let _ = write!(out, "{c:<w$}", w = width[i]);
            }
            out.push_str(if i + 1 < row.len() { "  " } else { "\n" });
        }
    };
    line(&mut out, &head);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    line(
        &mut out,
        &rule.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    for row in &cells {
        line(
            &mut out,
            &row.iter().map(String::as_str).collect::<Vec<_>>(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: u64, f_val: f64) -> TraceRecord {
        TraceRecord {
            iter,
            elapsed_s: iter as f64 * 0.5,
            f_val,
            rel_subopt: None,
            grad_err: 0.25,
            stationarity: 1e-3,
            eta: Some(0.1),
            branch: None,
        }
    }

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(fmt_real(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_real(0.0), "0.0000000000000000e0");
        for v in [
            std::f64::consts::PI,
            1e-300,
            -2.5e17,
            0.372_312_345_678_901_2,
        ] {
            assert_eq!(fmt_real(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn trace_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut rows = vec![rec(1, 0.7), rec(2, 0.5)];
        rows[1].branch = Some(StepBranch::Shrink);
        rows[1].rel_subopt = Some(0.125);
        rows[0].eta = None;
        write_trace(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(
            text.starts_with("iter,elapsed_s,f_val,rel_subopt,grad_err,stationarity,eta,branch\n")
        );
        assert!(text.lines().nth(1).unwrap().ends_with(",-,-"));
        assert_eq!(read_trace(&path).unwrap(), rows);
    }

    #[test]
    fn rejects_foreign_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        fs::write(&path, "iter,f\n1,2\n").unwrap();
        assert!(matches!(read_trace(&path), Err(BenchError::Trace { .. })));
        fs::write(
            &path,
            format!("{}\n1,x,1,-,1,1,-,-\n", TRACE_HEADER.join(",")),
        )
        .unwrap();
        let err = read_trace(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn best_uses_tolerance() {
        let trace = [rec(1, 0.9), rec(2, 0.50003), rec(3, 0.5), rec(4, 0.6)];
        assert_eq!(best_of(&trace, 5e-5), Some((0.5, 2, 1.0)));
        assert_eq!(best_of(&trace, 0.0), Some((0.5, 3, 1.5)));
        assert_eq!(best_of(&[], 0.0), None);
    }

    #[test]
    fn table_marks_refused_runs() {
        let row = |algorithm, outcome, f| SummaryRow {
            dataset: "a9a".into(),
            problem: Problem::Logistic,
            lambda: 1e-5,
            algorithm,
            seed: 0,
            name: "n".into(),
            outcome,
            f_best: f,
            iters_to_best: f.map(|_| 6),
            seconds_to_best: f.map(|_| 1.27),
            f_star: Some(0.3723),
            last_iter: f.map(|_| 1000),
        };
        let text = render_table(&[
            row(Algorithm::Psga, Outcome::Completed, Some(0.37231)),
            row(Algorithm::Saga, Outcome::MemoryRefused, None),
        ]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(
            lines[2].contains("PSGA") && lines[2].contains("0.3723") && lines[2].contains("1.27")
        );
        assert!(lines[3].contains("--") && lines[3].contains("memory_refused"));
        let widths: Vec<usize> = lines.iter().map(|l| l.len()).collect();
        assert!(widths.iter().all(|w| *w == widths[0]));
    }
}
