//! Per-episode metrics and their per-cell summary, both as CSV.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SummaryReturn;

pub const METRICS_HEADER: &str = "method,domain,n_sims,seed,episode,return_undiscounted,return_discounted,mean_action_seconds,fallback_count,reset_count";
pub const SUMMARY_HEADER: &str = "method,domain,n_sims,episodes,mean_return,stderr_return,mean_action_seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub domain: String,
    pub n_sims: usize,
    pub seed: u64,
    pub episode: usize,
    pub return_undiscounted: f64,
    pub return_discounted: f64,
    pub mean_action_seconds: f64,
    pub fallback_count: u64,
    pub reset_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub domain: String,
    pub n_sims: usize,
    pub episodes: usize,
    pub mean_return: f64,
    /// Sample standard deviation over sqrt(n); `None` for a single episode.
    pub stderr_return: Option<f64>,
    pub mean_action_seconds: f64,
}

pub fn write_metrics<W: Write>(w: W, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(METRICS_HEADER.split(','))?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.join(",") != METRICS_HEADER {
        return Err(Error::parse(1, format!("unexpected metrics header `{}`", header.join(","))));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER.split(','))?;
    for r in rows {
        out.write_record([
            r.method.clone(),
            r.domain.clone(),
            r.n_sims.to_string(),
            r.episodes.to_string(),
            format!("{:?}", r.mean_return),
            r.stderr_return.map_or_else(|| "NA".to_string(), |s| format!("{s:?}")),
            format!("{:?}", r.mean_action_seconds),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Mean and standard error; the error is `None` below two samples.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, Option<f64>)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Some((mean, None));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, Some((var / n).sqrt())))
}

/// Groups rows by (method, domain, n_sims) in order of first appearance.
pub fn summarize(rows: &[MetricsRow], which: SummaryReturn) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut keys: Vec<(&str, &str, usize)> = Vec::new();
    for r in rows {
        let k = (r.method.as_str(), r.domain.as_str(), r.n_sims);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, domain, n_sims)| {
            let group: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.method == method && r.domain == domain && r.n_sims == n_sims)
                .collect();
            let returns: Vec<f64> = group
                .iter()
                .map(|r| match which {
                    SummaryReturn::Undiscounted => r.return_undiscounted,
                    SummaryReturn::Discounted => r.return_discounted,
                })
                .collect();
            let (mean_return, stderr_return) = mean_stderr(&returns).ok_or(Error::EmptyGroup)?;
            Ok(SummaryRow {
                method: method.to_string(),
                domain: domain.to_string(),
                n_sims,
                episodes: group.len(),
                mean_return,
                stderr_return,
                mean_action_seconds: group.iter().map(|r| r.mean_action_seconds).sum::<f64>() / group.len() as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(method: &str, n_sims: usize, ret: f64) -> MetricsRow {
        MetricsRow {
            method: method.into(),
            domain: "tiger".into(),
            n_sims,
            seed: 1,
            episode: 0,
            return_undiscounted: ret,
            return_discounted: ret / 2.0,
            mean_action_seconds: 0.5,
            fallback_count: 0,
            reset_count: 0,
        }
    }

    #[test]
    fn mean_and_stderr_by_hand() {
        let s = summarize(&[row("random", 10, 1.0), row("random", 10, 3.0)], SummaryReturn::Undiscounted).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_return, 2.0);
        assert!((s[0].stderr_return.unwrap() - 1.0).abs() < 1e-12);
        let d = summarize(&[row("random", 10, 1.0), row("random", 10, 3.0)], SummaryReturn::Discounted).unwrap();
        assert_eq!(d[0].mean_return, 1.0);
    }

    #[test]
    fn single_row_has_no_stderr() {
        let s = summarize(&[row("random", 10, 1.0)], SummaryReturn::Undiscounted).unwrap();
        assert_eq!(s[0].stderr_return, None);
        let mut buf = Vec::new();
        write_summary(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{SUMMARY_HEADER}\nrandom,tiger,10,1,1.0,NA,0.5\n"));
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(matches!(summarize(&[], SummaryReturn::Undiscounted), Err(Error::EmptyGroup)));
    }

    #[test]
    fn metrics_round_trip() {
        let rows = vec![row("psr-mcts", 100, -3.25), row("random", 100, 0.1)];
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with(&format!("{METRICS_HEADER}\n")));
        assert_eq!(read_metrics(buf.as_slice()).unwrap(), rows);
        assert!(read_metrics("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn grouping_preserves_row_count(cells in proptest::collection::vec((0usize..3, 0usize..3, -50.0f64..50.0), 1..60)) {
            let methods = ["psr-mcts", "pomcp-true", "random"];
            let rows: Vec<MetricsRow> = cells.iter().map(|&(m, n, r)| row(methods[m], 10 * (n + 1), r)).collect();
            let s = summarize(&rows, SummaryReturn::Undiscounted).unwrap();
            prop_assert_eq!(s.iter().map(|c| c.episodes).sum::<usize>(), rows.len());
            for c in &s {
                let members: Vec<f64> = rows.iter().filter(|r| r.method == c.method && r.n_sims == c.n_sims).map(|r| r.return_undiscounted).collect();
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                prop_assert!((c.mean_return - mean).abs() < 1e-9);
            }
        }
    }
}
