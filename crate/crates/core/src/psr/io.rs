//! Text serialization of learned models.
//!
//! ```text
//! psr v1
//! rank <k>
//! actions <names>
//! observations <names>
//! seen_pairs all|restricted
//! meta <key> <value>        (zero or more)
//! singular_values <values>
//! b_star <k values>
//! b_inf <k values>
//! op <a>:<o>                (one per modelled pair, followed by k rows)
//! ```
//!
//! Floats are written in shortest round-trip form, so a write/read cycle is
//! lossless.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::alphabet::{ActObs, Alphabet};
use crate::error::{Error, Result};

use super::PsrModel;

fn floats<'a>(v: impl Iterator<Item = &'a f64>) -> String {
    v.map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub fn write_model<W: Write>(mut w: W, m: &PsrModel) -> Result<()> {
    writeln!(w, "psr v1")?;
    writeln!(w, "rank {}", m.rank())?;
    writeln!(w, "actions {}", m.alphabet.action_names.join(" "))?;
    writeln!(w, "observations {}", m.alphabet.obs_names.join(" "))?;
    let restricted = m.pairs().len() < m.alphabet.n_pairs();
    writeln!(w, "seen_pairs {}", if restricted { "restricted" } else { "all" })?;
    for (k, v) in &m.meta {
        writeln!(w, "meta {k} {v}")?;
    }
    writeln!(w, "singular_values {}", floats(m.singular_values.iter()))?;
    writeln!(w, "b_star {}", floats(m.b_star.iter()))?;
    writeln!(w, "b_inf {}", floats(m.b_inf.iter()))?;
    for p in m.pairs() {
        writeln!(w, "op {p}")?;
        for r in m.op(p).expect("listed pair").row_iter() {
            writeln!(w, "{}", floats(r.iter()))?;
        }
    }
    Ok(())
}

pub fn read_model<R: BufRead>(r: R) -> Result<PsrModel> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut last = 0;
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => {
                last = i;
                Ok((i, l?))
            }
            None => Err(Error::parse(last + 1, format!("unexpected end of file, expected {what}"))),
        }
    };
    let keyed = |(i, l): (usize, String), key: &str| -> Result<(usize, String)> {
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok((i, rest.trim().to_string())),
            None if l.trim() == key => Ok((i, String::new())),
            _ => Err(Error::parse(i, format!("expected `{key}`"))),
        }
    };
    let parse_floats = |i: usize, s: &str, n: Option<usize>| -> Result<Vec<f64>> {
        let v = s
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(i, format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(n) = n {
            if v.len() != n {
                return Err(Error::parse(i, format!("expected {n} values, found {}", v.len())));
            }
        }
        Ok(v)
    };

    let (i, header) = next("header")?;
    if header.trim() != "psr v1" {
        return Err(Error::parse(i, "missing `psr v1` header"));
    }
    let (i, rank) = keyed(next("rank")?, "rank")?;
    let k: usize = rank.parse().map_err(|_| Error::parse(i, format!("bad rank `{rank}`")))?;
    let names = |s: String| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let (_, actions) = keyed(next("actions")?, "actions")?;
    let (_, obs) = keyed(next("observations")?, "observations")?;
    let alphabet = Alphabet::new(names(actions), names(obs));
    let (seen_line, seen) = keyed(next("seen_pairs")?, "seen_pairs")?;
    let restricted = match seen.as_str() {
        "all" => false,
        "restricted" => true,
        other => return Err(Error::parse(seen_line, format!("bad seen_pairs flag `{other}`"))),
    };

    let mut meta = BTreeMap::new();
    let mut line = next("singular_values")?;
    while line.1.starts_with("meta ") {
        let (i, rest) = keyed(line, "meta")?;
        let (key, value) = rest
            .split_once(' ')
            .ok_or_else(|| Error::parse(i, "meta lines need a key and a value"))?;
        meta.insert(key.to_string(), value.to_string());
        line = next("singular_values")?;
    }
    let (i, s) = keyed(line, "singular_values")?;
    let singular_values = parse_floats(i, &s, None)?;
    let (i, s) = keyed(next("b_star")?, "b_star")?;
    let b_star = DVector::from_vec(parse_floats(i, &s, Some(k))?);
    let (i, s) = keyed(next("b_inf")?, "b_inf")?;
    let b_inf = DVector::from_vec(parse_floats(i, &s, Some(k))?);

    let mut ops = vec![None; alphabet.n_pairs()];
    while let Ok((i, l)) = next("op") {
        if l.trim().is_empty() {
            continue;
        }
        let (i, p) = keyed((i, l), "op")?;
        let pair = p
            .split_once(':')
            .and_then(|(a, o)| Some(ActObs::new(a.parse().ok()?, o.parse().ok()?)))
            .filter(|&p| alphabet.contains(p))
            .ok_or_else(|| Error::parse(i, format!("bad pair `{p}`")))?;
        let mut data = Vec::with_capacity(k * k);
        for _ in 0..k {
            let (i, row) = next("operator row")?;
            data.extend(parse_floats(i, &row, Some(k))?);
        }
        ops[alphabet.pair_index(pair)] = Some(DMatrix::from_row_slice(k, k, &data));
    }
    if !restricted && ops.iter().any(Option::is_none) {
        return Err(Error::parse(seen_line, "model marked `all` is missing operators"));
    }
    let mut m = PsrModel::from_parts(alphabet, b_star, b_inf, ops, singular_values);
    m.meta = meta;
    Ok(m)
}
