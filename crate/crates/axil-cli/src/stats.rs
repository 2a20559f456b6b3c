//! Aggregation of run records: quartile summaries per group and the
//! ratio-of-medians comparison grid.

use std::collections::BTreeMap;
use std::io::Write;

use anyhow::{bail, Result};

use crate::run::{is_success, RunRecord};

/// Linear-interpolation quantile (the common "type 7" rule) over a
/// non-empty sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

fn quartiles(mut values: Vec<f64>) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some((
        quantile(&values, 0.5),
        quantile(&values, 0.25),
        quantile(&values, 0.75),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupField {
    Algo,
    NApps,
    MaxModes,
    Density,
}

impl GroupField {
    pub fn parse_list(s: &str) -> Result<Vec<GroupField>> {
        let mut fields = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            fields.push(match part {
                "algo" => GroupField::Algo,
                "n_apps" => GroupField::NApps,
                "max_modes" => GroupField::MaxModes,
                "density" => GroupField::Density,
                other => bail!("unknown group-by field '{other}'"),
            });
        }
        if fields.is_empty() {
            bail!("group-by needs at least one field");
        }
        Ok(fields)
    }

    fn render(self, r: &RunRecord) -> String {
        match self {
            GroupField::Algo => r.algo.clone(),
            GroupField::NApps => r.n_apps.to_string(),
            GroupField::MaxModes => r.max_modes.to_string(),
            GroupField::Density => r.density.to_string(),
        }
    }
}

/// Per-group quartile summary. `rel` is absent when no record in the
/// group had a defined relative score (e.g. the exact solver always timed
/// out in that cell).
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub key: Vec<(GroupField, String)>,
    pub n: usize,
    pub success_rate: f64,
    pub score: (f64, f64, f64),
    pub rel: Option<(f64, f64, f64)>,
    pub elapsed_us: (f64, f64, f64),
}

/// Groups records by the given fields and reports median/Q1/Q3 of score,
/// relative score and solve time, plus the success rate.
pub fn summarize(records: &[RunRecord], group_by: &[GroupField]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<Vec<String>, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key: Vec<String> = group_by.iter().map(|f| f.render(r)).collect();
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rs)| {
            let n = rs.len();
            let successes = rs.iter().filter(|r| is_success(r)).count();
            let score = quartiles(rs.iter().map(|r| r.score).collect()).expect("non-empty group");
            let rel = quartiles(rs.iter().filter_map(|r| r.rel_score_pct).collect());
            let elapsed = quartiles(rs.iter().map(|r| r.elapsed.as_micros() as f64).collect())
                .expect("non-empty group");
            SummaryRow {
                key: group_by.iter().copied().zip(key).collect(),
                n,
                success_rate: successes as f64 / n as f64,
                score,
                rel,
                elapsed_us: elapsed,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(
    out: W,
    rows: &[SummaryRow],
    group_by: &[GroupField],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = group_by
        .iter()
        .map(|f| {
            match f {
                GroupField::Algo => "algo",
                GroupField::NApps => "n_apps",
                GroupField::MaxModes => "max_modes",
                GroupField::Density => "density",
            }
            .to_string()
        })
        .collect();
    header.extend(
        [
            "n",
            "success_rate",
            "score_med",
            "score_q1",
            "score_q3",
            "rel_med",
            "rel_q1",
            "rel_q3",
            "elapsed_us_med",
            "elapsed_us_q1",
            "elapsed_us_q3",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.key.iter().map(|(_, v)| v.clone()).collect();
        rec.push(row.n.to_string());
        rec.push(row.success_rate.to_string());
        for v in [row.score.0, row.score.1, row.score.2] {
            rec.push(v.to_string());
        }
        match row.rel {
            Some((m, q1, q3)) => {
                for v in [m, q1, q3] {
                    rec.push(v.to_string());
                }
            }
            None => rec.extend([String::new(), String::new(), String::new()]),
        }
        for v in [row.elapsed_us.0, row.elapsed_us.1, row.elapsed_us.2] {
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One cell of the comparison grid: the heuristic's medians over its
/// successful runs divided by the reference algorithm's. Ratios are absent
/// when the reference never succeeded in the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub n_apps: usize,
    pub max_modes: usize,
    pub density: f64,
    pub score_ratio: Option<f64>,
    pub time_ratio: Option<f64>,
    pub success_ratio: Option<f64>,
    pub h_success_rate: f64,
    pub ref_success_rate: f64,
}

pub fn heatmap_table(records: &[RunRecord], reference: &str) -> Vec<HeatmapCell> {
    let mut cells: BTreeMap<(usize, usize, String), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.n_apps, r.max_modes, r.density.to_string()))
            .or_default()
            .push(r);
    }
    cells
        .into_values()
        .filter_map(|rs| {
            let h: Vec<_> = rs.iter().filter(|r| r.algo == "H").collect();
            let refs: Vec<_> = rs.iter().filter(|r| r.algo == reference).collect();
            if h.is_empty() || refs.is_empty() {
                return None;
            }
            let density = h[0].density;
            let (n_apps, max_modes) = (h[0].n_apps, h[0].max_modes);
            let h_ok: Vec<_> = h.iter().filter(|r| is_success(r)).collect();
            let ref_ok: Vec<_> = refs.iter().filter(|r| is_success(r)).collect();
            let h_rate = h_ok.len() as f64 / h.len() as f64;
            let ref_rate = ref_ok.len() as f64 / refs.len() as f64;
            let ratio = |f: &dyn Fn(&RunRecord) -> f64| -> Option<f64> {
                if h_ok.is_empty() || ref_ok.is_empty() {
                    return None;
                }
                let m_h = quartiles(h_ok.iter().map(|r| f(r)).collect())?.0;
                let m_r = quartiles(ref_ok.iter().map(|r| f(r)).collect())?.0;
                (m_r != 0.0).then(|| m_h / m_r)
            };
            Some(HeatmapCell {
                n_apps,
                max_modes,
                density,
                score_ratio: ratio(&|r| r.score),
                time_ratio: ratio(&|r| r.elapsed.as_micros() as f64),
                success_ratio: (ref_rate > 0.0).then(|| h_rate / ref_rate),
                h_success_rate: h_rate,
                ref_success_rate: ref_rate,
            })
        })
        .collect()
}

pub fn write_heatmap_csv<W: Write>(out: W, cells: &[HeatmapCell], reference: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_apps",
        "max_modes",
        "density",
        "reference",
        "score_ratio",
        "time_ratio",
        "success_ratio",
        "h_success_rate",
        "ref_success_rate",
    ])?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in cells {
        w.write_record([
            c.n_apps.to_string(),
            c.max_modes.to_string(),
            c.density.to_string(),
            reference.to_string(),
            fmt(c.score_ratio),
            fmt(c.time_ratio),
            fmt(c.success_ratio),
            c.h_success_rate.to_string(),
            c.ref_success_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use axil_core::{Candidate, SolveStatus};
    use std::collections::BTreeMap;
    use std::time::Duration;

    fn record(algo: &str, score: f64, elapsed_us: u64, status: SolveStatus) -> RunRecord {
        RunRecord {
            seed: 1,
            n_apps: 20,
            max_modes: 5,
            density: 0.1,
            algo: algo.to_string(),
            score,
            rel_score_pct: None,
            feasible: status != SolveStatus::Failed,
            status,
            elapsed: Duration::from_micros(elapsed_us),
            counters: BTreeMap::new(),
            candidate: Candidate(Vec::new()),
        }
    }

    #[test]
    fn quantiles_follow_linear_interpolation() {
        assert_eq!(quantile(&[10.0, 20.0, 30.0], 0.5), 20.0);
        assert_eq!(quantile(&[10.0, 20.0, 30.0], 0.25), 15.0);
        assert_eq!(quantile(&[10.0, 20.0, 30.0], 0.75), 25.0);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn single_record_summary_collapses_quartiles() {
        let rows = summarize(
            &[record("H", 5.0, 100, SolveStatus::HeuristicComplete)],
            &[GroupField::Algo],
        );
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].score, (5.0, 5.0, 5.0));
        assert_eq!(rows[0].elapsed_us, (100.0, 100.0, 100.0));
        assert_eq!(rows[0].success_rate, 1.0);
        assert_eq!(rows[0].rel, None);
    }

    #[test]
    fn elapsed_median_matches_the_middle_record() {
        let rows = summarize(
            &[
                record("H", 1.0, 10, SolveStatus::HeuristicComplete),
                record("H", 2.0, 30, SolveStatus::HeuristicComplete),
                record("H", 3.0, 20, SolveStatus::HeuristicComplete),
            ],
            &[GroupField::Algo],
        );
        assert_eq!(rows[0].elapsed_us.0, 20.0);
        assert_eq!(rows[0].score, (2.0, 1.5, 2.5));
    }

    #[test]
    fn success_rate_counts_failures_and_timeouts_against_the_solver() {
        let rows = summarize(
            &[
                record("G_100", 3.0, 10, SolveStatus::HeuristicComplete),
                record("G_100", 0.0, 10, SolveStatus::Failed),
                record("S", 4.0, 10, SolveStatus::Optimal),
                record("S", 2.0, 10, SolveStatus::TimeoutPartial),
            ],
            &[GroupField::Algo],
        );
        let by_algo: BTreeMap<_, _> = rows
            .iter()
            .map(|r| (r.key[0].1.clone(), r.success_rate))
            .collect();
        assert_eq!(by_algo["G_100"], 0.5);
        assert_eq!(by_algo["S"], 0.5);
    }

    #[test]
    fn heatmap_against_itself_is_all_ones() {
        // "H vs H": every ratio is exactly 1.
        let records = vec![
            record("H", 5.0, 100, SolveStatus::HeuristicComplete),
            record("H", 7.0, 140, SolveStatus::HeuristicComplete),
        ];
        let cells = heatmap_table(&records, "H");
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].score_ratio, Some(1.0));
        assert_eq!(cells[0].time_ratio, Some(1.0));
        assert_eq!(cells[0].success_ratio, Some(1.0));
    }

    #[test]
    fn heatmap_cells_empty_out_when_the_reference_never_succeeds() {
        let records = vec![
            record("H", 5.0, 100, SolveStatus::HeuristicComplete),
            record("S", 9.0, 500, SolveStatus::TimeoutPartial),
        ];
        let cells = heatmap_table(&records, "S");
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].score_ratio, None);
        assert_eq!(cells[0].time_ratio, None);
        assert_eq!(cells[0].success_ratio, None);
        assert_eq!(cells[0].ref_success_rate, 0.0);
    }

    #[test]
    fn heatmap_score_ratio_respects_optimality() {
        let records = vec![
            record("H", 5.0, 100, SolveStatus::HeuristicComplete),
            record("S", 6.0, 5000, SolveStatus::Optimal),
        ];
        let cells = heatmap_table(&records, "S");
        let ratio = cells[0].score_ratio.unwrap();
        assert!(ratio <= 1.0);
        assert_eq!(cells[0].time_ratio, Some(0.02));
    }

    #[test]
    fn group_field_lists_parse() {
        let fields = GroupField::parse_list("algo, n_apps").unwrap();
        assert_eq!(fields, vec![GroupField::Algo, GroupField::NApps]);
        assert!(GroupField::parse_list("bogus").is_err());
        assert!(GroupField::parse_list("").is_err());
    }
}
