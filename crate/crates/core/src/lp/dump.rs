//! Plain-text dump of an [`LpProblem`] for offline inspection. Layout (see `docs/lp-dump.md`):
//!
//! ```text
//! lp <rows> <cols>
//! c <c_0> ... <c_{cols-1}>
//! A
//! <a_00> ... <a_0,cols-1>
//! ...
//! b <b_0> ... <b_{rows-1}>
//! nonneg <j> <j> ...
//! ```

use std::fmt::Write as _;

use super::{LpError, LpProblem};
use crate::matrix::Matrix;

pub fn to_text(p: &LpProblem) -> String {
    fn join(values: &[f64]) -> String {
        values
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
    let mut out = String::new();
    let _ = writeln!(out, "lp {} {}", p.n_rows(), p.n_vars());
    let _ = writeln!(out, "c {}", join(p.cost()).trim_end());
    out.push_str("A\n");
    for row in p.constraints().iter_rows() {
        let _ = writeln!(out, "{}", join(row));
    }
    let _ = writeln!(out, "b {}", join(p.rhs()).trim_end());
    let idx: Vec<String> = p.nonneg_indices().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "nonneg {}", idx.join(" "));
    out
}

pub fn parse_text(text: &str) -> Result<LpProblem, LpError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line: usize, msg: &str| LpError::Text {
        line,
        msg: msg.to_string(),
    };
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, &format!("missing {what}")))
    };

    let (line, head) = next("header")?;
    let dims: Vec<&str> = head.split_whitespace().collect();
    let (rows, cols) = match dims.as_slice() {
        ["lp", r, c] => (
            r.parse::<usize>().map_err(|_| err(line, "bad row count"))?,
            c.parse::<usize>()
                .map_err(|_| err(line, "bad column count"))?,
        ),
        _ => return Err(err(line, "expected `lp <rows> <cols>`")),
    };

    let numbers = |line: usize, body: &str, tag: &str, len: usize| -> Result<Vec<f64>, LpError> {
        let body = body
            .strip_prefix(tag)
            .ok_or_else(|| err(line, &format!("expected `{tag}`")))?;
        let v: Vec<f64> = body
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| err(line, &format!("bad number {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        if v.len() != len {
            return Err(err(
                line,
                &format!("expected {len} values, found {}", v.len()),
            ));
        }
        Ok(v)
    };

    let (line, body) = next("c")?;
    let c = numbers(line, body, "c", cols)?;
    let (line, body) = next("A")?;
    if body != "A" {
        return Err(err(line, "expected `A`"));
    }
    let mut a = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line, body) = next("constraint row")?;
        a.extend(numbers(line, body, "", cols)?);
    }
    let (line, body) = next("b")?;
    let b = numbers(line, body, "b", rows)?;
    let (line, body) = next("nonneg")?;
    let nonneg: Vec<usize> = body
        .strip_prefix("nonneg")
        .ok_or_else(|| err(line, "expected `nonneg`"))?
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| err(line, &format!("bad index {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    LpProblem::new(c, Matrix::from_row_major(rows, cols, a), b, &nonneg)
}
