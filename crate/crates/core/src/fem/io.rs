//! Plain-text dumps of operators and discrete functions.
//!
//! ```text
//! csr NROWS NCOLS NNZ symmetric|general
//! i j value                (NNZ lines)
//!
//! volume N | trace N
//! value                    (N lines)
//! ```

use std::fmt::Write as _;

use super::{CsrMatrix, FemError, TraceFunction, TripletBuilder, VolumeFunction};

pub fn csr_to_string(m: &CsrMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "csr {} {} {} {}",
        m.nrows,
        m.ncols,
        m.nnz(),
        if m.symmetric { "symmetric" } else { "general" }
    );
    for i in 0..m.nrows {
        for (j, v) in m.row(i) {
            let _ = writeln!(s, "{i} {j} {v}");
        }
    }
    s
}

fn parse_err(msg: impl Into<String>) -> FemError {
    FemError::Parse(msg.into())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, FemError> {
    tok.ok_or_else(|| parse_err(format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(format!("bad {what}")))
}

pub fn csr_from_str(text: &str) -> Result<CsrMatrix, FemError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| parse_err("empty input"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("csr") {
        return Err(parse_err("expected 'csr' header"));
    }
    let nrows: usize = parse(tok.next(), "row count")?;
    let ncols: usize = parse(tok.next(), "column count")?;
    let nnz: usize = parse(tok.next(), "nonzero count")?;
    let symmetric = match tok.next() {
        Some("symmetric") => true,
        Some("general") => false,
        _ => return Err(parse_err("expected symmetry tag")),
    };
    let mut b = TripletBuilder::new(nrows, ncols);
    for _ in 0..nnz {
        let line = lines.next().ok_or_else(|| parse_err("truncated entries"))?;
        let mut t = line.split_whitespace();
        let i: usize = parse(t.next(), "row index")?;
        let j: usize = parse(t.next(), "column index")?;
        let v: f64 = parse(t.next(), "value")?;
        if i >= nrows || j >= ncols {
            return Err(parse_err(format!("entry ({i}, {j}) out of range")));
        }
        b.add(i, j, v);
    }
    Ok(b.build(symmetric))
}

fn values_to_string(kind: &str, values: &[f64]) -> String {
    let mut s = format!("{kind} {}\n", values.len());
    for v in values {
        let _ = writeln!(s, "{v}");
    }
    s
}

fn values_from_str(kind: &str, text: &str) -> Result<Vec<f64>, FemError> {
    let mut tok = text.split_whitespace();
    if tok.next() != Some(kind) {
        return Err(parse_err(format!("expected '{kind}' header")));
    }
    let n: usize = parse(tok.next(), "length")?;
    let values = (0..n)
        .map(|_| parse(tok.next(), "value"))
        .collect::<Result<Vec<f64>, _>>()?;
    if tok.next().is_some() {
        return Err(parse_err("trailing data"));
    }
    Ok(values)
}

pub fn volume_to_string(y: &VolumeFunction) -> String {
    values_to_string("volume", &y.values)
}

pub fn volume_from_str(text: &str) -> Result<VolumeFunction, FemError> {
    values_from_str("volume", text).map(VolumeFunction::new)
}

pub fn trace_to_string(u: &TraceFunction) -> String {
    values_to_string("trace", &u.values)
}

pub fn trace_from_str(text: &str) -> Result<TraceFunction, FemError> {
    values_from_str("trace", text).map(TraceFunction::new)
}
