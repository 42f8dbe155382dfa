//! Aggregates per-seed result rows into mean/std series for plotting.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::runner::ResultRow;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fsc,
    Are,
    Re,
    F1,
    HeavyHitterAre,
    Cost,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fsc,
        Figure::Are,
        Figure::Re,
        Figure::F1,
        Figure::HeavyHitterAre,
        Figure::Cost,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fsc => "fsc",
            Figure::Are => "are",
            Figure::Re => "re",
            Figure::F1 => "f1",
            Figure::HeavyHitterAre => "hh-are",
            Figure::Cost => "cost",
        }
    }

    /// Row metrics that feed this figure.
    pub fn metrics(&self) -> &'static [&'static str] {
        match self {
            Figure::Fsc => &["fsc"],
            Figure::Are => &["are"],
            Figure::Re => &["re"],
            Figure::F1 => &["f1", "precision", "recall"],
            Figure::HeavyHitterAre => &["hh_are"],
            Figure::Cost => &["hash_ops_mean", "hash_ops_max", "mem_accesses_mean", "mem_accesses_max"],
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown figure `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub algorithm: String,
    pub trace: String,
    pub n_flows: usize,
    pub budget_bytes: u64,
    pub metric: String,
    pub threshold: Option<u64>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
    pub runs: usize,
}

type GroupKey = (String, String, usize, u64, String, Option<u64>);

pub fn aggregate(rows: &[ResultRow], figure: Figure) -> Vec<SeriesPoint> {
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| figure.metrics().contains(&r.metric.as_str())) {
        let Ok(v) = r.value.parse::<f64>() else { continue };
        groups
            .entry((
                r.algorithm.clone(),
                r.trace.clone(),
                r.n_flows,
                r.budget_bytes,
                r.metric.clone(),
                r.threshold,
            ))
            .or_default()
            .push(v);
    }
    groups
        .into_iter()
        .map(|((algorithm, trace, n_flows, budget_bytes, metric, threshold), values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SeriesPoint {
                algorithm,
                trace,
                n_flows,
                budget_bytes,
                metric,
                threshold,
                mean,
                std,
                runs: values.len(),
            }
        })
        .collect()
}

pub fn write_series<W: Write>(writer: W, points: &[SeriesPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(alg: &str, metric: &str, value: &str, seed: u64) -> ResultRow {
        ResultRow {
            algorithm: alg.into(),
            trace: "backbone".into(),
            n_flows: 100,
            budget_bytes: 1024,
            metric: metric.into(),
            threshold: None,
            value: value.into(),
            seed,
        }
    }

    #[test]
    fn mean_and_std() {
        let rows = vec![
            r("hashflow", "fsc", "0.5", 0),
            r("hashflow", "fsc", "0.7", 1),
            r("hashflow", "are", "9", 0),
            r("hashpipe", "fsc", "0.2", 0),
            r("hashpipe", "error", "boom", 1),
        ];
        let pts = aggregate(&rows, Figure::Fsc);
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].algorithm, "hashflow");
        assert!((pts[0].mean - 0.6).abs() < 1e-12);
        assert!((pts[0].std - 0.02f64.sqrt()).abs() < 1e-12);
        assert_eq!((pts[1].runs, pts[1].std), (1, 0.0));
    }

    #[test]
    fn figure_names() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        assert!("bogus".parse::<Figure>().is_err());
    }
}
