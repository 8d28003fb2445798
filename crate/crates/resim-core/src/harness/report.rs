//! Report model: per-(test, measure) cells, rank aggregation across cell
//! groups, and byte-deterministic JSON/CSV/text writers.

use super::config::TestKind;
use crate::error::FailureKind;
use crate::eval::average_ranks;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One (test, measure) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub test: String,
    pub kind: TestKind,
    pub dataset: String,
    pub arch: String,
    pub measure: String,
    /// Primary score: rank correlation (prediction tests), AUPRC (group
    /// tests), or mean conformity (layer tests). Absent when failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Secondary score: conformity rate (group) or mean layer-decay rank
    /// correlation (layer).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<f64>,
    /// "ok" or "failed:<kind>".
    pub status: String,
    /// Work units that failed: model pairs (prediction/group) or whole models
    /// (layer).
    pub failed_units: usize,
    pub total_units: usize,
}

impl Cell {
    pub fn is_failed(&self) -> bool {
        self.status != "ok"
    }

    pub fn failed_status(kind: FailureKind) -> String {
        format!("failed:{kind}")
    }

    fn group_key(&self) -> (String, String, String) {
        (self.test.clone(), self.dataset.clone(), self.arch.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub measures: Vec<String>,
    /// Cell-group labels "test/dataset/arch", in rank-vector order.
    pub cell_groups: Vec<String>,
    /// Sorted by (test, dataset, arch, measure).
    pub cells: Vec<Cell>,
    /// Per measure: one rank per cell group (1 = best; failures rank worst).
    pub ranks: BTreeMap<String, Vec<f64>>,
    pub median_rank: BTreeMap<String, f64>,
    pub failed_cells: BTreeMap<String, usize>,
}

/// Rank measures within each (test, dataset, arch) cell group: higher primary
/// score is better, ties share an averaged rank, failed cells take the worst
/// rank (the measure count) and stay flagged via their status.
pub fn aggregate(seed: u64, mut cells: Vec<Cell>, measures: &[String]) -> BenchmarkReport {
    cells.sort_by(|a, b| {
        a.group_key().cmp(&b.group_key()).then_with(|| a.measure.cmp(&b.measure))
    });
    let mut by_group: BTreeMap<(String, String, String), Vec<&Cell>> = BTreeMap::new();
    for cell in &cells {
        by_group.entry(cell.group_key()).or_default().push(cell);
    }

    let worst = measures.len() as f64;
    let mut cell_groups = Vec::new();
    let mut ranks: BTreeMap<String, Vec<f64>> =
        measures.iter().map(|m| (m.clone(), Vec::new())).collect();
    for ((test, dataset, arch), group) in &by_group {
        cell_groups.push(format!("{test}/{dataset}/{arch}"));
        let ok: Vec<&&Cell> = group.iter().filter(|c| !c.is_failed()).collect();
        let negated: Vec<f64> = ok.iter().map(|c| -c.score.unwrap()).collect();
        let ok_ranks = average_ranks(&negated);
        let mut assigned: BTreeMap<&str, f64> =
            ok.iter().zip(&ok_ranks).map(|(c, &r)| (c.measure.as_str(), r)).collect();
        for c in group {
            if c.is_failed() {
                assigned.insert(c.measure.as_str(), worst);
            }
        }
        for m in measures {
            if let Some(&r) = assigned.get(m.as_str()) {
                ranks.get_mut(m).unwrap().push(r);
            }
        }
    }

    let median_rank = ranks
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(m, v)| (m.clone(), median(v)))
        .collect();
    let mut failed_cells: BTreeMap<String, usize> =
        measures.iter().map(|m| (m.clone(), 0)).collect();
    for cell in cells.iter().filter(|c| c.is_failed()) {
        *failed_cells.get_mut(&cell.measure).unwrap() += 1;
    }

    BenchmarkReport {
        seed,
        measures: measures.to_vec(),
        cell_groups,
        cells,
        ranks,
        median_rank,
        failed_cells,
    }
}

fn median(sorted_source: &[f64]) -> f64 {
    let mut v = sorted_source.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
}

pub fn render_json(report: &BenchmarkReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report is serializable");
    s.push('\n');
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_csv(report: &BenchmarkReport) -> String {
    let mut out =
        String::from("test,kind,dataset,arch,measure,score,secondary,status,failed_units,total_units\n");
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            c.test,
            c.kind,
            c.dataset,
            c.arch,
            c.measure,
            fmt_opt(c.score),
            fmt_opt(c.secondary),
            c.status,
            c.failed_units,
            c.total_units
        );
    }
    out
}

/// Rank table: one row per measure ordered by median rank, one column per
/// cell group, failed cells marked with '!'.
pub fn render_table(report: &BenchmarkReport) -> String {
    let mut order: Vec<&String> = report.measures.iter().collect();
    order.sort_by(|a, b| {
        let ma = report.median_rank.get(*a).copied().unwrap_or(f64::INFINITY);
        let mb = report.median_rank.get(*b).copied().unwrap_or(f64::INFINITY);
        ma.partial_cmp(&mb).unwrap().then_with(|| a.cmp(b))
    });
    let failed_here: BTreeMap<(String, String), bool> = report
        .cells
        .iter()
        .map(|c| {
            let label = format!("{}/{}/{}", c.test, c.dataset, c.arch);
            ((c.measure.clone(), label), c.is_failed())
        })
        .collect();

    let mut headers = vec!["measure".to_string()];
    headers.extend(report.cell_groups.iter().cloned());
    headers.push("median".to_string());

    let mut rows: Vec<Vec<String>> = Vec::new();
    for m in &order {
        let mut row = vec![(*m).clone()];
        let ranks = report.ranks.get(*m);
        for (gi, label) in report.cell_groups.iter().enumerate() {
            let r = ranks.and_then(|v| v.get(gi));
            let mark =
                failed_here.get(&((*m).clone(), label.clone())).copied().unwrap_or(false);
            row.push(match r {
                Some(r) => format!("{:.1}{}", r, if mark { "!" } else { "" }),
                None => "-".to_string(),
            });
        }
        row.push(
            report
                .median_rank
                .get(*m)
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "-".to_string()),
        );
        rows.push(row);
    }

    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let write_row = |out: &mut String, cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}", w = *w))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
    };
    write_row(&mut out, &headers);
    let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&sep.join("-+-"));
    out.push('\n');
    for row in &rows {
        write_row(&mut out, row);
    }
    out
}

/// Writes report.json, report.csv, and report.txt; identical inputs produce
/// identical bytes.
pub fn write_report(report: &BenchmarkReport, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let targets = [
        ("report.json", render_json(report)),
        ("report.csv", render_csv(report)),
        ("report.txt", render_table(report)),
    ];
    let mut written = Vec::new();
    for (name, contents) in targets {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}
