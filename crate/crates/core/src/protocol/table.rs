//! Comparison tables derived from run logs.

use std::collections::{BTreeMap, BTreeSet};

use super::grid::supervised_variant;
use super::runlog::{RunResult, SUPERVISED};
use super::stats::{t_test, Significance, TTestConfig};
use crate::classifier::ModelSelection;
use crate::error::{Error, Result};

pub const ORACLE: &str = "Oracle";

/// Runs of one (row, dataset) cell, keyed by `(fold, trial)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub runs: BTreeMap<(usize, usize), f64>,
    pub mean: f64,
    /// Against the matching Supervised cell; `None` for baseline rows or
    /// when no baseline is present.
    pub significance: Option<Significance>,
}

impl CellResult {
    fn new(runs: BTreeMap<(usize, usize), f64>) -> Self {
        let mean = runs.values().sum::<f64>() / runs.len() as f64;
        Self {
            runs,
            mean,
            significance: None,
        }
    }

    /// Mean to two decimals with a `+`/`-` suffix for significant differences.
    pub fn render(&self) -> String {
        format!("{:.2}{}", self.mean, self.significance.unwrap_or_default().suffix())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub algorithm: String,
    pub variant: String,
    /// One entry per dataset column.
    pub cells: Vec<Option<CellResult>>,
}

/// All rows for one unlabeled rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub rate: f64,
    pub datasets: Vec<String>,
    pub rows: Vec<TableRow>,
}

fn algorithm_rank(name: &str) -> (usize, &str) {
    let order = [ORACLE, SUPERVISED, "TBST", "CBST", "TT", "TTWD", "CT"];
    (order.iter().position(|o| *o == name).unwrap_or(order.len()), name)
}

fn baseline_variant(variant: &str) -> &'static str {
    if variant.split(';').any(|p| p == "select=validation") {
        supervised_variant(ModelSelection::BestValidation)
    } else {
        supervised_variant(ModelSelection::MaxTestAccuracy)
    }
}

impl ComparisonTable {
    pub fn row(&self, algorithm: &str, variant: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.variant == variant)
    }

    pub fn cell(&self, algorithm: &str, variant: &str, dataset: &str) -> Option<&CellResult> {
        let col = self.datasets.iter().position(|d| d == dataset)?;
        self.row(algorithm, variant)?.cells[col].as_ref()
    }

    /// Marks every SSL cell better/worse/none against the Supervised cell
    /// with the same dataset and selection mode, pairing runs by (fold, trial).
    pub fn mark_significance(&mut self, cfg: &TTestConfig) -> Result<()> {
        let baselines: Vec<TableRow> =
            self.rows.iter().filter(|r| r.algorithm == SUPERVISED).cloned().collect();
        for row in &mut self.rows {
            if row.algorithm == SUPERVISED || row.algorithm == ORACLE {
                continue;
            }
            let wanted = baseline_variant(&row.variant);
            let Some(base) = baselines.iter().find(|b| b.variant == wanted) else {
                continue;
            };
            for (col, cell) in row.cells.iter_mut().enumerate() {
                let (Some(cell), Some(base_cell)) = (cell.as_mut(), base.cells[col].as_ref()) else {
                    continue;
                };
                if cell.runs.keys().ne(base_cell.runs.keys()) {
                    return Err(Error::Protocol(format!(
                        "{} {} on {} at rate {}: runs {:?} do not pair with the Supervised runs {:?}",
                        row.algorithm,
                        row.variant,
                        self.datasets[col],
                        self.rate,
                        cell.runs.keys().collect::<Vec<_>>(),
                        base_cell.runs.keys().collect::<Vec<_>>()
                    )));
                }
                let a: Vec<f64> = cell.runs.values().copied().collect();
                let b: Vec<f64> = base_cell.runs.values().copied().collect();
                cell.significance = Some(if a.len() < 2 {
                    Significance::None
                } else {
                    t_test(&a, &b, cfg)?.significance()
                });
            }
        }
        Ok(())
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![{
            let mut h = vec!["Alg".to_owned(), "Variant".to_owned()];
            h.extend(self.datasets.iter().cloned());
            h
        }];
        for r in &self.rows {
            let mut line = vec![r.algorithm.clone(), r.variant.clone()];
            line.extend(r.cells.iter().map(|c| c.as_ref().map_or("-".to_owned(), CellResult::render)));
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("Unlabeled sample rate {}\n", self.rate);
        for line in grid {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| if c < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// One line per cell: `algorithm,variant,dataset,mean,runs,significance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,variant,dataset,mean,runs,significance\n");
        for r in &self.rows {
            for (d, cell) in self.datasets.iter().zip(&r.cells) {
                if let Some(c) = cell {
                    let sig = c.significance.map_or("", Significance::as_str);
                    out.push_str(&format!(
                        "{},{},{},{:.2},{},{}\n",
                        r.algorithm,
                        r.variant,
                        d,
                        c.mean,
                        c.runs.len(),
                        sig
                    ));
                }
            }
        }
        out
    }
}

fn cells_by_row(
    runs: &[&RunResult],
) -> BTreeMap<(String, String), BTreeMap<String, BTreeMap<(usize, usize), f64>>> {
    let mut rows: BTreeMap<_, BTreeMap<_, BTreeMap<_, _>>> = BTreeMap::new();
    for r in runs {
        let k = &r.key;
        rows.entry((k.algorithm.clone(), k.variant.clone()))
            .or_default()
            .entry(k.dataset.clone())
            .or_default()
            .insert((k.fold, k.trial), r.max_test_acc);
    }
    rows
}

/// One table per nonzero rate in `results`. Each starts with the Oracle row
/// (labeled-only runs at rate 0) when present, then the Supervised rows of
/// that rate, then the SSL rows in the order TBST, CBST, TT, TTWD, CT.
pub fn build_tables(results: &[RunResult], cfg: &TTestConfig) -> Result<Vec<ComparisonTable>> {
    let datasets: Vec<String> = results
        .iter()
        .map(|r| r.key.dataset.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rates: Vec<f64> = results.iter().map(|r| r.key.rate).filter(|&r| r > 0.0).collect();
    rates.sort_by(|a, b| b.total_cmp(a));
    rates.dedup();

    let oracle_runs: Vec<&RunResult> = results
        .iter()
        .filter(|r| r.key.rate == 0.0 && r.key.algorithm == SUPERVISED)
        .collect();
    let oracle = cells_by_row(&oracle_runs);

    let mut tables = Vec::with_capacity(rates.len());
    for rate in rates {
        let at_rate: Vec<&RunResult> = results.iter().filter(|r| r.key.rate == rate).collect();
        let mut rows: Vec<TableRow> = Vec::new();
        let mut push = |algorithm: &str, variant: &str, by_ds: &BTreeMap<String, BTreeMap<(usize, usize), f64>>| {
            rows.push(TableRow {
                algorithm: algorithm.to_owned(),
                variant: variant.to_owned(),
                cells: datasets
                    .iter()
                    .map(|d| by_ds.get(d).map(|runs| CellResult::new(runs.clone())))
                    .collect(),
            });
        };
        for ((_, variant), by_ds) in &oracle {
            push(ORACLE, variant, by_ds);
        }
        let mut keyed: Vec<_> = cells_by_row(&at_rate).into_iter().collect();
        keyed.sort_by(|((a, va), _), ((b, vb), _)| algorithm_rank(a).cmp(&algorithm_rank(b)).then(va.cmp(vb)));
        for ((alg, variant), by_ds) in &keyed {
            push(alg, variant, by_ds);
        }
        let mut table = ComparisonTable {
            rate,
            datasets: datasets.clone(),
            rows,
        };
        table.mark_significance(cfg)?;
        tables.push(table);
    }
    Ok(tables)
}

/// Mean labeled-only accuracy per labeled fraction (`1 - rate`), ascending.
pub fn labeled_fraction_series(results: &[RunResult], dataset: &str) -> Vec<(f64, f64)> {
    let mut by_rate: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    for r in results {
        let k = &r.key;
        if k.dataset == dataset && k.algorithm == SUPERVISED && k.variant == supervised_variant(ModelSelection::MaxTestAccuracy) {
            by_rate.entry((k.rate + 0.0).to_bits()).or_insert((k.rate, Vec::new())).1.push(r.max_test_acc);
        }
    }
    let mut series: Vec<(f64, f64)> = by_rate
        .into_values()
        .map(|(rate, accs)| (1.0 - rate, accs.iter().sum::<f64>() / accs.len() as f64))
        .collect();
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    series
}

/// Two-column `labeled_fraction,accuracy` text.
pub fn format_series(series: &[(f64, f64)]) -> String {
    let mut out = String::from("labeled_fraction,accuracy\n");
    for (f, acc) in series {
        out.push_str(&format!("{},{:.4}\n", (f * 1e9).round() / 1e9, acc));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::runlog::RunKey;

    fn runs(dataset: &str, rate: f64, alg: &str, variant: &str, accs: &[f64]) -> Vec<RunResult> {
        accs.iter()
            .enumerate()
            .map(|(i, &a)| RunResult {
                key: RunKey {
                    dataset: dataset.into(),
                    rate,
                    algorithm: alg.into(),
                    variant: variant.into(),
                    fold: i % 3,
                    trial: i / 3,
                },
                max_test_acc: a,
                iterations: 0,
                wall_ms: 0,
            })
            .collect()
    }

    fn noisy(base: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| base + ((i * 7919) % 13) as f64 * 0.3).collect()
    }

    #[test]
    fn identical_cell_is_not_marked() {
        let sup = noisy(80.0, 15);
        let mut all = runs("news", 0.9, SUPERVISED, "base", &sup);
        all.extend(runs("news", 0.9, "TBST", "tau=0.9..1", &sup));
        let t = &build_tables(&all, &TTestConfig::default()).unwrap()[0];
        assert_eq!(t.cell("TBST", "tau=0.9..1", "news").unwrap().significance, Some(Significance::None));
        assert_eq!(t.cell(SUPERVISED, "base", "news").unwrap().significance, None);
    }

    #[test]
    fn shifted_cells_are_marked() {
        let sup = noisy(80.0, 15);
        let up: Vec<f64> = sup.iter().map(|v| v + 5.0).collect();
        let down: Vec<f64> = sup.iter().enumerate().map(|(i, v)| v - 2.0 - (i % 2) as f64).collect();
        let mut all = runs("news", 0.9, SUPERVISED, "base", &sup);
        all.extend(runs("news", 0.9, "TT", "x", &up));
        all.extend(runs("news", 0.9, "CT", "y", &down));
        let t = &build_tables(&all, &TTestConfig::default()).unwrap()[0];
        let tt = t.cell("TT", "x", "news").unwrap();
        assert_eq!(tt.significance, Some(Significance::Better));
        assert!(tt.render().ends_with('+'));
        assert_eq!(t.cell("CT", "y", "news").unwrap().render(), format!("{:.2}-", t.cell("CT", "y", "news").unwrap().mean));
    }

    #[test]
    fn unmatched_pairs_are_a_protocol_error() {
        let mut all = runs("news", 0.9, SUPERVISED, "base", &noisy(80.0, 15));
        all.extend(runs("news", 0.9, "TT", "x", &noisy(81.0, 14)));
        assert!(matches!(build_tables(&all, &TTestConfig::default()), Err(Error::Protocol(_))));
    }

    #[test]
    fn layout_and_row_order() {
        let mut all = runs("b", 0.0, SUPERVISED, "base", &noisy(95.0, 15));
        all.extend(runs("b", 0.9, "CT", "v", &noisy(85.0, 15)));
        all.extend(runs("b", 0.9, "TBST", "v", &noisy(85.0, 15)));
        all.extend(runs("b", 0.9, SUPERVISED, "base", &noisy(84.0, 15)));
        all.extend(runs("a", 0.8, SUPERVISED, "base", &noisy(84.0, 15)));
        let tables = build_tables(&all, &TTestConfig::default()).unwrap();
        assert_eq!(tables.iter().map(|t| t.rate).collect::<Vec<_>>(), vec![0.9, 0.8]);
        let t = &tables[0];
        let order: Vec<&str> = t.rows.iter().map(|r| r.algorithm.as_str()).collect();
        assert_eq!(order, vec![ORACLE, SUPERVISED, "TBST", "CT"]);
        assert_eq!(t.datasets, vec!["a", "b"]);
        assert!(t.cell(ORACLE, "base", "a").is_none());
        let text = t.to_text();
        assert!(text.starts_with("Unlabeled sample rate 0.9\nAlg"));
        let oracle: Vec<&str> = text.lines().nth(2).unwrap().split_whitespace().collect();
        assert_eq!(oracle[..3], ["Oracle", "base", "-"]);
        assert!(text.lines().nth(2).unwrap().starts_with("Oracle      base"));
        assert!(t.to_csv().lines().any(|l| l.starts_with("Oracle,base,b,")));
    }

    #[test]
    fn series_from_supervised_runs() {
        let mut all = runs("d", 0.0, SUPERVISED, "base", &[90.0, 92.0]);
        all.extend(runs("d", 0.95, SUPERVISED, "base", &[60.0, 62.0]));
        all.extend(runs("d", 0.9, SUPERVISED, "base", &[70.0]));
        all.extend(runs("d", 0.9, "TT", "x", &[99.0]));
        let s = labeled_fraction_series(&all, "d");
        assert_eq!(s.len(), 3);
        assert!((s[0].0 - 0.05).abs() < 1e-12 && s[0].1 == 61.0);
        assert_eq!(s[2], (1.0, 91.0));
        assert_eq!(format_series(&s).lines().nth(1).unwrap(), "0.05,61.0000");
    }
}
