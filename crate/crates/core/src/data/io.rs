//! Plain-text formats for corpora and Hankel estimates.
//!
//! A corpus has one trajectory per line, steps separated by `;`, each step
//! written `action:obs:reward` with integer indices. Hankel files start with
//! a `hankel v1` header followed by the index sets and the matrices, one
//! row per line.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::alphabet::{ActObs, Alphabet};
use crate::error::{Error, Result};

fn parse(line: usize, msg: impl Into<String>) -> Error {
    Error::parse(line, msg)
}

use super::{HankelEstimates, PairEstimate, SampleCounts, Sequence, TestHistorySets, Trajectory, TrajectoryStep};

pub fn write_corpus<W: Write>(mut w: W, trajectories: &[Trajectory]) -> Result<()> {
    for t in trajectories {
        let line: Vec<String> = t
            .steps
            .iter()
            .map(|s| format!("{}:{}:{:?}", s.action, s.obs, s.reward))
            .collect();
        writeln!(w, "{}", line.join(";"))?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(r: R) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let mut steps = Vec::new();
        for tok in line.split(';').filter(|s| !s.is_empty()) {
            let f: Vec<&str> = tok.split(':').collect();
            let [a, o, r] = f.as_slice() else {
                return Err(parse(i + 1, format!("bad step `{tok}`")));
            };
            let bad = |_| parse(i + 1, format!("bad step `{tok}`"));
            steps.push(TrajectoryStep {
                action: a.parse().map_err(bad)?,
                obs: o.parse().map_err(bad)?,
                reward: r.parse().map_err(|_| parse(i + 1, format!("bad reward in `{tok}`")))?,
            });
        }
        out.push(Trajectory { steps });
    }
    Ok(out)
}

/// Checks every step against the alphabet.
pub fn validate_corpus(trajectories: &[Trajectory], alphabet: &Alphabet) -> Result<()> {
    for t in trajectories {
        for s in &t.steps {
            if !alphabet.contains(s.pair()) {
                return Err(Error::UnknownPair {
                    action: s.action,
                    obs: s.obs,
                });
            }
        }
    }
    Ok(())
}

fn seq_str(seq: &[ActObs]) -> String {
    if seq.is_empty() {
        return "-".into();
    }
    seq.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
}

fn row_str<'a>(vals: impl Iterator<Item = &'a f64>) -> String {
    let mut s = String::new();
    for (i, v) in vals.enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

pub fn write_hankel<W: Write>(mut w: W, est: &HankelEstimates) -> Result<()> {
    let sets = &est.sets;
    writeln!(w, "hankel v1")?;
    writeln!(w, "actions {}", sets.alphabet.action_names.join(" "))?;
    writeln!(w, "observations {}", sets.alphabet.obs_names.join(" "))?;
    writeln!(w, "histories {}", sets.histories.len())?;
    for h in &sets.histories {
        writeln!(w, "{}", seq_str(h))?;
    }
    writeln!(w, "tests {}", sets.tests.len())?;
    for t in &sets.tests {
        writeln!(w, "{}", seq_str(t))?;
    }
    writeln!(w, "pairs {}", seq_str(&sets.pairs))?;
    let ints = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ");
    writeln!(w, "counts {}", ints(&sets.history_counts))?;
    writeln!(w, "samples {}", ints(&est.counts.history_samples))?;
    writeln!(w, "attempts {}", ints(&est.counts.history_attempts))?;
    writeln!(w, "p_h {}", row_str(est.p_h.iter()))?;
    writeln!(w, "p_th {} {}", est.p_th.nrows(), est.p_th.ncols())?;
    for r in est.p_th.row_iter() {
        writeln!(w, "{}", row_str(r.iter()))?;
    }
    for (i, pe) in est.p_t_ao_h.iter().enumerate() {
        let p = sets.alphabet.pair(i);
        match pe {
            PairEstimate::Absent => {}
            PairEstimate::Zero => writeln!(w, "pair {p} zero")?,
            PairEstimate::Dense(m) => {
                writeln!(w, "pair {p} dense")?;
                for r in m.row_iter() {
                    writeln!(w, "{}", row_str(r.iter()))?;
                }
            }
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(parse(self.line, "unexpected end of file")),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.next()?;
        match l.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok(rest.trim().to_string()),
            _ => Err(parse(self.line, format!("expected `{key}`"))),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        parse(self.line, msg)
    }
}

fn parse_pair(tok: &str, alphabet: &Alphabet) -> Option<ActObs> {
    let (a, o) = tok.split_once(':')?;
    let p = ActObs::new(a.parse().ok()?, o.parse().ok()?);
    alphabet.contains(p).then_some(p)
}

fn parse_seq<R: BufRead>(lines: &Lines<R>, s: &str, alphabet: &Alphabet) -> Result<Sequence> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split_whitespace()
        .map(|tok| parse_pair(tok, alphabet).ok_or_else(|| lines.err(format!("bad pair `{tok}`"))))
        .collect()
}

fn parse_row<R: BufRead, T: std::str::FromStr>(lines: &Lines<R>, s: &str, n: usize) -> Result<Vec<T>> {
    let v: Vec<T> = s
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| lines.err(format!("bad number `{t}`"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(lines.err(format!("expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

fn parse_count<R: BufRead>(lines: &Lines<R>, s: &str) -> Result<usize> {
    s.parse().map_err(|_| lines.err(format!("bad count `{s}`")))
}

pub fn read_hankel<R: BufRead>(r: R) -> Result<HankelEstimates> {
    let mut lines = Lines {
        inner: r.lines(),
        line: 0,
    };
    if lines.next()?.trim() != "hankel v1" {
        return Err(lines.err("missing `hankel v1` header"));
    }
    let names = |s: String| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let actions = names(lines.keyed("actions")?);
    let obs = names(lines.keyed("observations")?);
    let alphabet = Alphabet::new(actions, obs);

    let read_seqs = |lines: &mut Lines<R>, key: &str| -> Result<Vec<Sequence>> {
        let n = lines.keyed(key)?;
        let n = parse_count(lines, &n)?;
        (0..n)
            .map(|_| {
                let l = lines.next()?;
                parse_seq(lines, l.trim(), &alphabet)
            })
            .collect()
    };
    let histories = read_seqs(&mut lines, "histories")?;
    let tests = read_seqs(&mut lines, "tests")?;
    let pairs_line = lines.keyed("pairs")?;
    let pairs = if pairs_line.is_empty() {
        Vec::new()
    } else {
        parse_seq(&lines, &pairs_line, &alphabet)?
    };
    let (nt, nh) = (tests.len(), histories.len());
    let s = lines.keyed("counts")?;
    let history_counts = parse_row(&lines, &s, nh)?;
    let s = lines.keyed("samples")?;
    let history_samples = parse_row(&lines, &s, nh)?;
    let s = lines.keyed("attempts")?;
    let history_attempts = parse_row(&lines, &s, nh)?;
    let s = lines.keyed("p_h")?;
    let p_h = DVector::from_vec(parse_row(&lines, &s, nh)?);
    let dims = lines.keyed("p_th")?;
    if dims != format!("{nt} {nh}") {
        return Err(lines.err(format!("p_th dimensions `{dims}` do not match {nt} {nh}")));
    }
    let read_matrix = |lines: &mut Lines<R>| -> Result<DMatrix<f64>> {
        let mut data = Vec::with_capacity(nt * nh);
        for _ in 0..nt {
            let l = lines.next()?;
            data.extend(parse_row::<R, f64>(lines, &l, nh)?);
        }
        Ok(DMatrix::from_row_slice(nt, nh, &data))
    };
    let p_th = read_matrix(&mut lines)?;

    let mut p_t_ao_h = vec![PairEstimate::Absent; alphabet.n_pairs()];
    while let Some(l) = lines.inner.next() {
        lines.line += 1;
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        let ["pair", p, kind] = f.as_slice() else {
            return Err(lines.err("expected `pair`"));
        };
        let p = parse_pair(p, &alphabet).ok_or_else(|| lines.err(format!("bad pair `{p}`")))?;
        p_t_ao_h[alphabet.pair_index(p)] = match *kind {
            "zero" => PairEstimate::Zero,
            "dense" => PairEstimate::Dense(read_matrix(&mut lines)?),
            k => return Err(lines.err(format!("unknown pair kind `{k}`"))),
        };
    }
    for &p in &pairs {
        if !p_t_ao_h[alphabet.pair_index(p)].is_estimated() {
            return Err(lines.err(format!("missing matrix for pair {p}")));
        }
    }
    Ok(HankelEstimates {
        sets: TestHistorySets {
            alphabet,
            histories,
            history_counts,
            tests,
            pairs,
        },
        p_h,
        p_th,
        p_t_ao_h,
        counts: SampleCounts {
            history_samples,
            history_attempts,
        },
    })
}
