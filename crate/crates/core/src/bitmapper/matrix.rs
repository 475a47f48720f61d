use crate::error::{Error, Result};
use std::fmt::Write;

/// Code family a mapper was designed for; fixes the meaning of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Columns are protograph columns (`T K'` of them).
    Scldpc,
    /// Columns are spatial positions (`T` of them).
    Scgldpc,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Scldpc => "scldpc",
            Family::Scgldpc => "scgldpc",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scldpc" => Ok(Family::Scldpc),
            "scgldpc" => Ok(Family::Scgldpc),
            other => Err(Error::invalid(format!("unknown code family `{other}`"))),
        }
    }
}

/// Tolerance on column sums.
pub const COLUMN_TOL: f64 = 1e-9;

/// Allocation matrix `A`: entry `(i, j)` is the fraction of the coded bits of
/// column `j` carried by modulation bit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BitMapperMatrix {
    m: usize,
    n_cols: usize,
    data: Vec<f64>,
    family: Family,
}

impl BitMapperMatrix {
    /// Builds a matrix from row-major data, checking the column-stochastic constraint.
    pub fn new(m: usize, n_cols: usize, data: Vec<f64>, family: Family) -> Result<Self> {
        if m == 0 || n_cols == 0 || data.len() != m * n_cols {
            return Err(Error::invalid(format!("expected {m}x{n_cols} entries, got {}", data.len())));
        }
        if let Some(x) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(format!("allocation entry {x} outside [0, 1]")));
        }
        let a = BitMapperMatrix { m, n_cols, data, family };
        for j in 0..n_cols {
            let s: f64 = (0..m).map(|i| a.get(i, j)).sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(Error::invalid(format!("column {j} sums to {s}")));
            }
        }
        Ok(a)
    }

    /// All entries `1/m`.
    pub fn uniform(m: usize, n_cols: usize, family: Family) -> Self {
        BitMapperMatrix { m, n_cols, data: vec![1.0 / m as f64; m * n_cols], family }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn family(&self) -> Family {
        self.family
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Columns rotated left by `shift`: column `j` of the result is column
    /// `j + shift` of `self`.
    pub fn rotate_columns(&self, shift: usize) -> Self {
        let n = self.n_cols;
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.m {
            for j in 0..n {
                data[i * n + j] = self.get(i, (j + shift) % n);
            }
        }
        BitMapperMatrix { data, ..self.clone() }
    }

    /// Swaps two modulation-bit rows.
    pub fn swap_rows(&self, a: usize, b: usize) -> Self {
        let mut out = self.clone();
        for j in 0..self.n_cols {
            out.data.swap(a * self.n_cols + j, b * self.n_cols + j);
        }
        out
    }

    /// Plain-text form with header `(m, n_cols, family, seed)`.
    pub fn to_text(&self, seed: Option<u64>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scmap-mapper");
        let _ = writeln!(out, "m {}", self.m);
        let _ = writeln!(out, "n_cols {}", self.n_cols);
        let _ = writeln!(out, "family {}", self.family);
        match seed {
            Some(s) => {
                let _ = writeln!(out, "seed {s}");
            }
            None => out.push_str("seed none\n"),
        }
        for i in 0..self.m {
            let row: Vec<String> = (0..self.n_cols).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output; returns the matrix and seed.
    pub fn from_text(text: &str) -> Result<(Self, Option<u64>)> {
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_owned() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (no, l) = lines.next().ok_or_else(|| perr(0, "truncated header"))?;
            match l.split_once(' ') {
                Some((k, v)) if k == key => Ok((no, v.trim().to_owned())),
                _ if l == key => Ok((no, String::new())),
                _ => Err(perr(no, &format!("expected `{key}`"))),
            }
        };
        field("scmap-mapper")?;
        let (no, v) = field("m")?;
        let m: usize = v.parse().map_err(|_| perr(no, "bad m"))?;
        let (no, v) = field("n_cols")?;
        let n: usize = v.parse().map_err(|_| perr(no, "bad n_cols"))?;
        let (no, v) = field("family")?;
        let family: Family = v.parse().map_err(|_| perr(no, "bad family"))?;
        let (no, v) = field("seed")?;
        let seed = if v == "none" { None } else { Some(v.parse().map_err(|_| perr(no, "bad seed"))?) };
        drop(field);
        let mut data = Vec::with_capacity(m * n);
        for (no, l) in lines {
            let before = data.len();
            for w in l.split_whitespace() {
                data.push(w.parse::<f64>().map_err(|_| perr(no, "bad number"))?);
            }
            if data.len() - before != n {
                return Err(perr(no, "row length differs from n_cols"));
            }
        }
        Ok((Self::new(m, n, data, family)?, seed))
    }
}
