//! Plain-text sparse matrix format for base matrices and lifted codes.
//!
//! ```text
//! scmap-sparse base
//! dims 7 10
//! mode terminated
//! t_len 5
//! lifting 1
//! block 1 2 2
//! 0: 0 1
//! 1: 0 1 2 3
//! ```
//!
//! `dims` gives rows and columns, `block` gives `J' K' m_s`, and each
//! following line lists the column indices of one row. In a base matrix a
//! column index is repeated once per unit of the entry value. Lines starting
//! with `#` are comments.

use super::{build_base_matrix, BaseMatrix, LiftedCode};
use crate::error::{Error, Result};
use crate::Mode;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseText {
    pub lifted: bool,
    pub rows: usize,
    pub cols: usize,
    pub mode: Mode,
    pub t_len: usize,
    pub lifting: usize,
    pub j_rows: usize,
    pub k_cols: usize,
    pub memory: usize,
    pub adjacency: Vec<Vec<u32>>,
}

fn header(out: &mut String, kind: &str, rows: usize, cols: usize, mode: Mode, t_len: usize, m: usize, b: (usize, usize, usize)) {
    let _ = writeln!(out, "scmap-sparse {kind}");
    let _ = writeln!(out, "dims {rows} {cols}");
    let _ = writeln!(out, "mode {mode}");
    let _ = writeln!(out, "t_len {t_len}");
    let _ = writeln!(out, "lifting {m}");
    let _ = writeln!(out, "block {} {} {}", b.0, b.1, b.2);
}

fn row_line(out: &mut String, r: usize, cols: impl Iterator<Item = usize>) {
    let _ = write!(out, "{r}:");
    for c in cols {
        let _ = write!(out, " {c}");
    }
    out.push('\n');
}

pub fn write_base(base: &BaseMatrix) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "base",
        base.rows(),
        base.cols(),
        base.mode(),
        base.t_len(),
        1,
        (base.j_rows(), base.k_cols(), base.memory()),
    );
    for r in 0..base.rows() {
        row_line(&mut out, r, (0..base.cols()).flat_map(|c| std::iter::repeat_n(c, base.get(r, c) as usize)));
    }
    out
}

pub fn write_lifted(code: &LiftedCode) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "lifted",
        code.r(),
        code.n(),
        code.mode(),
        code.t_len(),
        code.lifting_factor(),
        (code.j_rows(), code.k_cols(), code.memory()),
    );
    for c in 0..code.r() {
        row_line(&mut out, c, code.check_vars(c).iter().map(|&v| v as usize));
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn as_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn parse_nums(line: usize, words: &[&str], n: usize) -> Result<Vec<usize>> {
    if words.len() != n {
        return Err(parse_err(line, format!("expected {n} values")));
    }
    words.iter().map(|w| w.parse().map_err(|_| parse_err(line, format!("bad integer `{w}`")))).collect()
}

pub fn read_sparse(text: &str) -> Result<SparseText> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next_kv = |key: &str| -> Result<(usize, Vec<String>)> {
        let (no, l) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(parse_err(no, format!("expected `{key}`")));
        }
        Ok((no, it.map(str::to_owned).collect()))
    };
    let (no, kind) = next_kv("scmap-sparse")?;
    let lifted = match kind.first().map(String::as_str) {
        Some("base") => false,
        Some("lifted") => true,
        _ => return Err(parse_err(no, "kind must be `base` or `lifted`")),
    };
    let (no, v) = next_kv("dims")?;
    let dims = parse_nums(no, &as_refs(&v), 2)?;
    let (no, v) = next_kv("mode")?;
    let mode: Mode = v.first().ok_or_else(|| parse_err(no, "missing mode"))?.parse().map_err(|e: Error| parse_err(no, e.to_string()))?;
    let (no, v) = next_kv("t_len")?;
    let t_len = parse_nums(no, &as_refs(&v), 1)?[0];
    let (no, v) = next_kv("lifting")?;
    let lifting = parse_nums(no, &as_refs(&v), 1)?[0];
    let (no, v) = next_kv("block")?;
    let block = parse_nums(no, &as_refs(&v), 3)?;
    drop(next_kv);

    let mut adjacency = vec![Vec::new(); dims[0]];
    let mut seen = vec![false; dims[0]];
    for (no, l) in lines {
        let (head, rest) = l.split_once(':').ok_or_else(|| parse_err(no, "expected `row: cols`"))?;
        let r: usize = head.trim().parse().map_err(|_| parse_err(no, "bad row index"))?;
        if r >= dims[0] || seen[r] {
            return Err(parse_err(no, format!("row {r} out of range or repeated")));
        }
        seen[r] = true;
        for w in rest.split_whitespace() {
            let c: u32 = w.parse().map_err(|_| parse_err(no, format!("bad column `{w}`")))?;
            if c as usize >= dims[1] {
                return Err(parse_err(no, format!("column {c} out of range")));
            }
            adjacency[r].push(c);
        }
    }
    Ok(SparseText {
        lifted,
        rows: dims[0],
        cols: dims[1],
        mode,
        t_len,
        lifting,
        j_rows: block[0],
        k_cols: block[1],
        memory: block[2],
        adjacency,
    })
}

impl SparseText {
    /// Rebuilds a base matrix, checking that the rows match the band layout.
    pub fn to_base(&self) -> Result<BaseMatrix> {
        if self.lifted {
            return Err(Error::invalid("file holds a lifted code, not a base matrix"));
        }
        let (jr, kc) = (self.j_rows, self.k_cols);
        if (self.memory + 1) * jr > self.rows || kc > self.cols {
            return Err(Error::invalid("block dimensions exceed the matrix"));
        }
        let mut dense = vec![vec![0u32; self.cols]; self.rows];
        for (r, row) in self.adjacency.iter().enumerate() {
            for &c in row {
                dense[r][c as usize] += 1;
            }
        }
        let blocks: Vec<Vec<Vec<u32>>> =
            (0..=self.memory).map(|i| (0..jr).map(|r| dense[i * jr + r][..kc].to_vec()).collect()).collect();
        let base = build_base_matrix(&blocks, self.t_len, self.mode)?;
        if base.rows() != self.rows || base.cols() != self.cols {
            return Err(Error::invalid("dimensions disagree with the block layout"));
        }
        for (r, row) in dense.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if base.get(r, c) != v {
                    return Err(Error::invalid(format!("entry ({r}, {c}) breaks the band layout")));
                }
            }
        }
        Ok(base)
    }

    /// Rebuilds a lifted code on top of its base matrix.
    pub fn to_lifted(&self, base: &BaseMatrix) -> Result<LiftedCode> {
        if !self.lifted {
            return Err(Error::invalid("file holds a base matrix, not a lifted code"));
        }
        if self.rows != base.rows() * self.lifting || self.cols != base.cols() * self.lifting {
            return Err(Error::invalid("lifted dimensions do not match the base matrix"));
        }
        let m = self.lifting;
        let code = LiftedCode::from_adjacency(base, m, self.adjacency.clone());
        for r in 0..base.rows() {
            for c in 0..base.cols() {
                let w = code.block_row_weights(r, c);
                if w.iter().any(|&x| x as u32 != base.get(r, c)) {
                    return Err(Error::invalid(format!("block ({r}, {c}) has the wrong row weight")));
                }
            }
        }
        Ok(code)
    }
}
