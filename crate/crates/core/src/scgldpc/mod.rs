//! Spatially-coupled GLDPC ensembles with shortened BCH component codes.
//!
//! Every VN has degree two and every CN enforces the component code. Each
//! spatial position holds `C` CNs and `C n/2` VNs; the `C n` sockets of a
//! position are split by a uniform random permutation into `w` groups of
//! `C n / w`, and group `i` of VN position `j` is wired to group `w - 1 - i` of
//! CN position `j + i`. Terminated chains have CN positions `0..T+w-1`, whose
//! sockets facing positions outside `0..T` hold known (zero) VNs; tailbiting
//! chains wrap positions modulo `T`.

mod decode;

pub use decode::{CnRule, HddConfig, HddDecoder, HddOutput};

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bch::BchCode;
use crate::error::{Error, Result};
use crate::Mode;

/// Socket value of a known VN.
pub const KNOWN: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct GldpcGraph {
    code: BchCode,
    c: usize,
    t_len: usize,
    w: usize,
    mode: Mode,
    seed: Option<u64>,
    /// `(cn, slot)` of VN edge `e`; VN `v` owns edges `2v` and `2v + 1`.
    vn_edges: Vec<(u32, u32)>,
    /// Edge attached to each CN socket (`cn * n + slot`), or [`KNOWN`].
    cn_slots: Vec<u32>,
}

/// `R'(T) = R' - (1 - R') (w - 1) / T` for terminated chains, `R' = 2k/n - 1`
/// otherwise.
pub fn design_rate(code: &BchCode, t_len: usize, w: usize, mode: Mode) -> f64 {
    let r = 2.0 * code.k() as f64 / code.n() as f64 - 1.0;
    match mode {
        Mode::Tailbiting => r,
        Mode::Terminated => r - (1.0 - r) * (w as f64 - 1.0) / t_len as f64,
    }
}

fn check_params(n: usize, c: usize, t_len: usize, w: usize, mode: Mode) -> Result<()> {
    if c == 0 || t_len == 0 || w == 0 {
        return Err(Error::invalid("C, T and w must be positive"));
    }
    if (c * n) % 2 != 0 || (c * n) % w != 0 {
        return Err(Error::invalid(format!("C n = {} must be divisible by 2 and by w = {w}", c * n)));
    }
    if mode == Mode::Tailbiting && w > t_len {
        return Err(Error::invalid(format!("coupling width {w} exceeds T = {t_len}")));
    }
    Ok(())
}

/// Draws a graph from the ensemble.
pub fn sample_graph<R: Rng + ?Sized>(code: &BchCode, c: usize, t_len: usize, w: usize, mode: Mode, rng: &mut R) -> Result<GldpcGraph> {
    let n = code.n();
    check_params(n, c, t_len, w, mode)?;
    let n_cn_pos = match mode {
        Mode::Terminated => t_len + w - 1,
        Mode::Tailbiting => t_len,
    };
    let per_pos = c * n;
    let group = per_pos / w;
    let n_vn_pos = per_pos / 2;

    // sockets of each CN position, permuted then cut into groups
    let mut cn_groups: Vec<Vec<u32>> = Vec::with_capacity(n_cn_pos);
    for p in 0..n_cn_pos {
        let mut s: Vec<u32> = ((p * per_pos) as u32..((p + 1) * per_pos) as u32).collect();
        s.shuffle(rng);
        cn_groups.push(s);
    }
    let mut vn_edges = vec![(0u32, 0u32); 2 * t_len * n_vn_pos];
    let mut cn_slots = vec![KNOWN; n_cn_pos * per_pos];
    for j in 0..t_len {
        let mut s: Vec<u32> = ((2 * j * n_vn_pos) as u32..(2 * (j + 1) * n_vn_pos) as u32).collect();
        s.shuffle(rng);
        for i in 0..w {
            let cp = match mode {
                Mode::Terminated => j + i,
                Mode::Tailbiting => (j + i) % t_len,
            };
            let g = w - 1 - i;
            for k in 0..group {
                let e = s[i * group + k];
                let sock = cn_groups[cp][g * group + k] as usize;
                vn_edges[e as usize] = ((sock / n) as u32, (sock % n) as u32);
                cn_slots[sock] = e;
            }
        }
    }
    let g = GldpcGraph { code: code.clone(), c, t_len, w, mode, seed: None, vn_edges, cn_slots };
    g.audit()?;
    Ok(g)
}

/// Degree statistics returned by [`GldpcGraph::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Audit {
    pub vns: usize,
    pub cns: usize,
    pub known_sockets: usize,
}

impl GldpcGraph {
    pub fn code(&self) -> &BchCode {
        &self.code
    }
    pub fn cns_per_position(&self) -> usize {
        self.c
    }
    pub fn t_len(&self) -> usize {
        self.t_len
    }
    pub fn coupling_width(&self) -> usize {
        self.w
    }
    pub fn mode(&self) -> Mode {
        self.mode
    }
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
    pub fn set_seed(&mut self, seed: Option<u64>) {
        self.seed = seed;
    }

    pub fn vns_per_position(&self) -> usize {
        self.c * self.code.n() / 2
    }

    pub fn num_vns(&self) -> usize {
        self.t_len * self.vns_per_position()
    }

    pub fn num_cn_positions(&self) -> usize {
        self.cn_slots.len() / (self.c * self.code.n())
    }

    pub fn num_cns(&self) -> usize {
        self.num_cn_positions() * self.c
    }

    pub fn design_rate(&self) -> f64 {
        design_rate(&self.code, self.t_len, self.w, self.mode)
    }

    /// `(cn, slot)` of the two edges of VN `v`.
    pub fn vn_edges(&self, v: usize) -> [(usize, usize); 2] {
        let a = self.vn_edges[2 * v];
        let b = self.vn_edges[2 * v + 1];
        [(a.0 as usize, a.1 as usize), (b.0 as usize, b.1 as usize)]
    }

    /// Edge (or [`KNOWN`]) per socket of CN `cn`.
    pub fn cn_sockets(&self, cn: usize) -> &[u32] {
        let n = self.code.n();
        &self.cn_slots[cn * n..(cn + 1) * n]
    }

    pub fn vn_position(&self, v: usize) -> usize {
        v / self.vns_per_position()
    }

    pub fn vns_at(&self, pos: usize) -> std::ops::Range<usize> {
        let k = self.vns_per_position();
        pos * k..(pos + 1) * k
    }

    pub fn cns_at(&self, pos: usize) -> std::ops::Range<usize> {
        pos * self.c..(pos + 1) * self.c
    }

    /// Checks the degree and group-connection contracts.
    pub fn audit(&self) -> Result<Audit> {
        let n = self.code.n();
        for (e, &(cn, slot)) in self.vn_edges.iter().enumerate() {
            let sock = cn as usize * n + slot as usize;
            if self.cn_slots.get(sock) != Some(&(e as u32)) {
                return Err(Error::invalid(format!("edge {e} is not attached back to its CN socket")));
            }
            let vp = self.vn_position(e / 2);
            let cp = cn as usize / self.c;
            let off = match self.mode {
                Mode::Terminated => cp.wrapping_sub(vp),
                Mode::Tailbiting => (cp + self.t_len - vp) % self.t_len,
            };
            if off >= self.w {
                return Err(Error::invalid(format!("edge {e} couples positions {vp} and {cp}")));
            }
        }
        let mut known = 0;
        for (sock, &e) in self.cn_slots.iter().enumerate() {
            if e == KNOWN {
                if self.mode == Mode::Tailbiting {
                    return Err(Error::invalid("tailbiting graph has a known VN"));
                }
                known += 1;
            } else if e as usize >= self.vn_edges.len() {
                return Err(Error::invalid(format!("socket {sock} points at missing edge {e}")));
            }
        }
        if known + self.vn_edges.len() != self.cn_slots.len() {
            return Err(Error::invalid("socket count does not match edge count"));
        }
        Ok(Audit { vns: self.num_vns(), cns: self.num_cns(), known_sockets: known })
    }

    /// Hard-decision error fraction per VN position against `reference`.
    pub fn position_error_rates(&self, bits: &[u8], reference: &[u8]) -> Result<Vec<f64>> {
        if bits.len() != self.num_vns() || reference.len() != self.num_vns() {
            return Err(Error::invalid("word length does not match the graph"));
        }
        let k = self.vns_per_position();
        Ok((0..self.t_len)
            .map(|p| self.vns_at(p).filter(|&v| bits[v] != reference[v]).count() as f64 / k as f64)
            .collect())
    }

    /// Plain-text form: header lines, then one `cn slot cn slot` line per VN.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scmap-gldpc");
        let _ = writeln!(s, "nu {}", self.code.nu());
        let _ = writeln!(s, "t {}", self.code.t());
        let _ = writeln!(s, "s {}", self.code.s());
        let _ = writeln!(s, "c {}", self.c);
        let _ = writeln!(s, "t_len {}", self.t_len);
        let _ = writeln!(s, "w {}", self.w);
        let _ = writeln!(s, "mode {}", self.mode);
        match self.seed {
            Some(x) => writeln!(s, "seed {x}"),
            None => writeln!(s, "seed none"),
        }
        .ok();
        let _ = writeln!(s, "edges");
        for v in 0..self.num_vns() {
            let [a, b] = self.vn_edges(v);
            let _ = writeln!(s, "{} {} {} {}", a.0, a.1, b.0, b.1);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let (ln, magic) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        if magic != "scmap-gldpc" {
            return Err(perr(ln, "missing scmap-gldpc header"));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (ln, l) = lines.next().ok_or_else(|| perr(0, "truncated header"))?;
            let mut it = l.split_whitespace();
            if it.next() != Some(key) {
                return Err(perr(ln, &format!("expected `{key}`")));
            }
            Ok((ln, it.next().unwrap_or("").to_string()))
        };
        let num = |(ln, v): (usize, String)| -> Result<usize> { v.parse().map_err(|_| perr(ln, "expected an integer")) };
        let nu = num(field("nu")?)?;
        let t = num(field("t")?)?;
        let s = num(field("s")?)?;
        let c = num(field("c")?)?;
        let t_len = num(field("t_len")?)?;
        let w = num(field("w")?)?;
        let (mln, mode) = field("mode")?;
        let mode: Mode = mode.parse().map_err(|_| perr(mln, "bad mode"))?;
        let (sln, seed) = field("seed")?;
        let seed = match seed.as_str() {
            "none" => None,
            x => Some(x.parse().map_err(|_| perr(sln, "bad seed"))?),
        };
        let (eln, e) = lines.next().ok_or_else(|| perr(0, "missing edge list"))?;
        if e != "edges" {
            return Err(perr(eln, "expected `edges`"));
        }
        let code = BchCode::new(nu as u32, t, s)?;
        let n = code.n();
        check_params(n, c, t_len, w, mode)?;
        let n_cn_pos = match mode {
            Mode::Terminated => t_len + w - 1,
            Mode::Tailbiting => t_len,
        };
        let n_vn = t_len * c * n / 2;
        let mut vn_edges = Vec::with_capacity(2 * n_vn);
        let mut cn_slots = vec![KNOWN; n_cn_pos * c * n];
        for (ln, l) in lines {
            if l.is_empty() {
                continue;
            }
            let v: Vec<u32> = l
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| perr(ln, "expected integers")))
                .collect::<Result<_>>()?;
            if v.len() != 4 {
                return Err(perr(ln, "expected `cn slot cn slot`"));
            }
            for pair in v.chunks(2) {
                let sock = pair[0] as usize * n + pair[1] as usize;
                if pair[1] as usize >= n || sock >= cn_slots.len() || cn_slots[sock] != KNOWN {
                    return Err(perr(ln, "socket out of range or used twice"));
                }
                cn_slots[sock] = vn_edges.len() as u32;
                vn_edges.push((pair[0], pair[1]));
            }
        }
        if vn_edges.len() != 2 * n_vn {
            return Err(perr(0, &format!("expected {n_vn} VN lines, found {}", vn_edges.len() / 2)));
        }
        let g = GldpcGraph { code, c, t_len, w, mode, seed, vn_edges, cn_slots };
        g.audit()?;
        Ok(g)
    }
}
