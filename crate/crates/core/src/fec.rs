//! Quasi-cyclic LDPC codes of length 648 from IEEE 802.11.
//!
//! Base matrices live in `data/ieee80211_n648_r*.txt`. Each non-comment line
//! is one block row of space-separated circulant shifts, `-1` marking an
//! all-zero `Z × Z` block; lines starting with `#` are comments. Block
//! `(i, j)` with shift `p` has ones at `(i·Z + r, j·Z + (r + p) mod Z)`.
//! Each file is checked against a SHA-256 digest when loaded.
//!
//! LLRs are `log P(b = 0) / P(b = 1)`: positive values favour bit 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const LIFTING: usize = 27;
pub const CODE_LENGTH: usize = 648;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const LLR_CLIP: f64 = 30.0;

const R1_2: &str = include_str!("../data/ieee80211_n648_r1_2.txt");
const R2_3: &str = include_str!("../data/ieee80211_n648_r2_3.txt");
const R3_4: &str = include_str!("../data/ieee80211_n648_r3_4.txt");
const R5_6: &str = include_str!("../data/ieee80211_n648_r5_6.txt");

const R1_2_SHA256: &str = "bf90a1d3b49a8c7a33499ac783102704b022ea13f7b11f16757de8124c9ad17c";
const R2_3_SHA256: &str = "1f22aef916f4fbfaae312fd8ac0bdd0692b9c83f58432761e217f660248544ca";
const R3_4_SHA256: &str = "d803d047a76ba8e2db4cd80d93e244a422772978c324b69d75cd19315eb56049";
const R5_6_SHA256: &str = "82448a40fc287fef812d639908843d2ae2aa08a3fd63d0618ef6cef28af6c691";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    #[serde(rename = "1/2")]
    Half,
    #[serde(rename = "2/3")]
    TwoThirds,
    #[serde(rename = "3/4")]
    ThreeQuarters,
    #[serde(rename = "5/6")]
    FiveSixths,
}

impl CodeRate {
    pub const ALL: [CodeRate; 4] = [
        CodeRate::Half,
        CodeRate::TwoThirds,
        CodeRate::ThreeQuarters,
        CodeRate::FiveSixths,
    ];

    /// `(numerator, denominator)`.
    pub fn fraction(self) -> (u32, u32) {
        match self {
            CodeRate::Half => (1, 2),
            CodeRate::TwoThirds => (2, 3),
            CodeRate::ThreeQuarters => (3, 4),
            CodeRate::FiveSixths => (5, 6),
        }
    }

    pub fn value(self) -> f64 {
        let (a, b) = self.fraction();
        f64::from(a) / f64::from(b)
    }

    fn source(self) -> (&'static str, &'static str) {
        match self {
            CodeRate::Half => (R1_2, R1_2_SHA256),
            CodeRate::TwoThirds => (R2_3, R2_3_SHA256),
            CodeRate::ThreeQuarters => (R3_4, R3_4_SHA256),
            CodeRate::FiveSixths => (R5_6, R5_6_SHA256),
        }
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.fraction();
        write!(f, "{a}/{b}")
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodeRate::ALL
            .into_iter()
            .find(|r| r.to_string() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unsupported code rate {s:?}")))
    }
}

/// Block-row-major grid of circulant shifts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    shifts: Vec<i32>,
}

impl BaseMatrix {
    pub fn parse(text: &str) -> Result<Self> {
        let mut shifts = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<i32>()
                        .map_err(|_| Error::Format(format!("line {}: bad shift {t:?}", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            match cols {
                None => cols = Some(row.len()),
                Some(c) if c != row.len() => {
                    return Err(Error::Format(format!(
                        "line {}: {} entries, expected {c}",
                        lineno + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            shifts.extend(row);
            rows += 1;
        }
        let cols = cols.ok_or_else(|| Error::Format("empty base matrix".into()))?;
        Ok(BaseMatrix { rows, cols, shifts })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Shift of block `(i, j)`, `None` for a zero block.
    pub fn shift(&self, i: usize, j: usize) -> Option<usize> {
        let s = self.shifts[i * self.cols + j];
        (s >= 0).then_some(s as usize)
    }
}

/// A lifted QC-LDPC code with a dual-diagonal parity part.
#[derive(Debug, Clone)]
pub struct QcLdpcCode {
    rate: Option<CodeRate>,
    base: BaseMatrix,
    z: usize,
    /// CSR layout of the checks: edges of check `c` are `check_start[c]..check_start[c+1]`.
    check_start: Vec<usize>,
    edge_var: Vec<u32>,
    /// Edge indices grouped by variable node.
    var_start: Vec<usize>,
    var_edges: Vec<u32>,
}

/// Outcome of belief-propagation decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

impl QcLdpcCode {
    /// Builds a code from a base matrix. The parity part (last `rows` block
    /// columns) must have the dual-diagonal form used by the encoder.
    pub fn from_base(base: BaseMatrix, z: usize) -> Result<Self> {
        if z == 0 || base.shifts.iter().any(|&s| s < -1 || s >= z as i32) {
            return Err(Error::Format(format!("shifts must lie in -1..{z}")));
        }
        if base.cols <= base.rows {
            return Err(Error::Format("base matrix has no information columns".into()));
        }
        check_dual_diagonal(&base)?;
        let m = base.rows * z;
        let n = base.cols * z;
        let mut check_start = Vec::with_capacity(m + 1);
        let mut edge_var = Vec::new();
        check_start.push(0);
        for i in 0..base.rows {
            for r in 0..z {
                for j in 0..base.cols {
                    if let Some(p) = base.shift(i, j) {
                        edge_var.push((j * z + (r + p) % z) as u32);
                    }
                }
                check_start.push(edge_var.len());
            }
        }
        let mut degree = vec![0usize; n];
        for &v in &edge_var {
            degree[v as usize] += 1;
        }
        let mut var_start = vec![0usize; n + 1];
        for v in 0..n {
            var_start[v + 1] = var_start[v] + degree[v];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Ok(QcLdpcCode {
            rate: None,
            base,
            z,
            check_start,
            edge_var,
            var_start,
            var_edges,
        })
    }

    pub fn rate(&self) -> Option<CodeRate> {
        self.rate
    }

    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    pub fn lifting(&self) -> usize {
        self.z
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.base.cols * self.z
    }

    /// Information bits per codeword.
    pub fn k(&self) -> usize {
        (self.base.cols - self.base.rows) * self.z
    }

    pub fn num_checks(&self) -> usize {
        self.base.rows * self.z
    }

    /// Number of ones in the parity-check matrix.
    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Systematic encoding: `[info | parity]`.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let z = self.z;
        let k = self.k();
        if info.len() != k {
            return Err(Error::InvalidParameter(format!(
                "encoder takes {k} bits, got {}",
                info.len()
            )));
        }
        let rows = self.base.rows;
        let kb = self.base.cols - rows;
        // λ_i = Σ_j P^{h_ij} s_j over the information blocks
        let mut lambda = vec![0u8; rows * z];
        for i in 0..rows {
            let out = &mut lambda[i * z..(i + 1) * z];
            for j in 0..kb {
                if let Some(p) = self.base.shift(i, j) {
                    let block = &info[j * z..(j + 1) * z];
                    for (r, o) in out.iter_mut().enumerate() {
                        *o ^= block[(r + p) % z] & 1;
                    }
                }
            }
        }
        let mut parity = vec![0u8; rows * z];
        // first parity block: the circulants of its column sum to the identity
        for i in 0..rows {
            for r in 0..z {
                parity[r] ^= lambda[i * z + r];
            }
        }
        let shifted_p0 = |shift: usize, r: usize, parity: &[u8]| parity[(r + shift) % z];
        for i in 0..rows - 1 {
            for r in 0..z {
                let mut b = lambda[i * z + r];
                if let Some(p) = self.base.shift(i, kb) {
                    b ^= shifted_p0(p, r, &parity);
                }
                if i > 0 {
                    b ^= parity[i * z + r];
                }
                parity[(i + 1) * z + r] = b;
            }
        }
        let mut codeword = Vec::with_capacity(self.n());
        codeword.extend(info.iter().map(|b| b & 1));
        codeword.extend_from_slice(&parity);
        Ok(codeword)
    }

    /// `H·c` over GF(2).
    pub fn syndrome(&self, codeword: &[u8]) -> Vec<u8> {
        (0..self.num_checks())
            .map(|c| {
                self.edge_var[self.check_start[c]..self.check_start[c + 1]]
                    .iter()
                    .fold(0u8, |acc, &v| acc ^ (codeword[v as usize] & 1))
            })
            .collect()
    }

    pub fn is_codeword(&self, codeword: &[u8]) -> bool {
        codeword.len() == self.n() && self.syndrome_is_zero(codeword)
    }

    fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        (0..self.num_checks()).all(|c| {
            self.edge_var[self.check_start[c]..self.check_start[c + 1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }

    /// Sum-product decoding with the tanh rule. Stops as soon as the hard
    /// decisions satisfy every check.
    pub fn decode(&self, llrs: &[f64], max_iter: usize) -> Result<DecodeResult> {
        let n = self.n();
        if llrs.len() != n {
            return Err(Error::InvalidParameter(format!(
                "decoder takes {n} LLRs, got {}",
                llrs.len()
            )));
        }
        if llrs.iter().any(|l| l.is_nan()) {
            return Err(Error::Numerical("NaN channel LLR".into()));
        }
        let channel: Vec<f64> = llrs.iter().map(|l| l.clamp(-LLR_CLIP, LLR_CLIP)).collect();
        let mut bits: Vec<u8> = channel.iter().map(|&l| u8::from(l < 0.0)).collect();
        // a zero LLR is an erasure, never a decision
        let mut undecided = channel.iter().filter(|&&l| l == 0.0).count();
        if undecided == 0 && self.syndrome_is_zero(&bits) {
            return Ok(DecodeResult {
                bits,
                converged: true,
                iterations: 0,
            });
        }
        let edges = self.edge_var.len();
        let mut v2c: Vec<f64> = self.edge_var.iter().map(|&v| channel[v as usize]).collect();
        let mut c2v = vec![0.0f64; edges];
        let mut tanhs = Vec::new();
        let mut suffix = Vec::new();
        for iter in 1..=max_iter {
            for c in 0..self.num_checks() {
                let range = self.check_start[c]..self.check_start[c + 1];
                let deg = range.len();
                tanhs.clear();
                tanhs.extend(v2c[range.clone()].iter().map(|&m| (0.5 * m).tanh()));
                suffix.clear();
                suffix.resize(deg + 1, 1.0);
                for t in (0..deg).rev() {
                    suffix[t] = suffix[t + 1] * tanhs[t];
                }
                let mut prefix = 1.0;
                for (t, e) in range.enumerate() {
                    let prod = (prefix * suffix[t + 1]).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                    c2v[e] = (2.0 * prod.atanh()).clamp(-LLR_CLIP, LLR_CLIP);
                    prefix *= tanhs[t];
                }
            }
            undecided = 0;
            for v in 0..n {
                let es = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let total = channel[v] + es.iter().map(|&e| c2v[e as usize]).sum::<f64>();
                bits[v] = u8::from(total < 0.0);
                undecided += usize::from(total == 0.0);
                for &e in es {
                    v2c[e as usize] = (total - c2v[e as usize]).clamp(-LLR_CLIP, LLR_CLIP);
                }
            }
            if undecided == 0 && self.syndrome_is_zero(&bits) {
                return Ok(DecodeResult {
                    bits,
                    converged: true,
                    iterations: iter,
                });
            }
        }
        Ok(DecodeResult {
            bits,
            converged: false,
            iterations: max_iter,
        })
    }
}

fn check_dual_diagonal(base: &BaseMatrix) -> Result<()> {
    let rows = base.rows;
    let kb = base.cols - rows;
    let first: Vec<Option<usize>> = (0..rows).map(|i| base.shift(i, kb)).collect();
    let used: Vec<usize> = (0..rows).filter(|&i| first[i].is_some()).collect();
    let ok_first = rows >= 2
        && used.len() == 3
        && used[0] == 0
        && used[2] == rows - 1
        && first[0] == first[rows - 1]
        && first[used[1]] == Some(0);
    if !ok_first {
        return Err(Error::Format(
            "first parity column must hold shifts (h, 0, h) in its first, one middle and last row".into(),
        ));
    }
    for t in 1..rows {
        for i in 0..rows {
            let expect = (i == t - 1 || i == t).then_some(0);
            if base.shift(i, kb + t) != expect {
                return Err(Error::Format(format!(
                    "parity block column {t} is not part of the zero-shift staircase"
                )));
            }
        }
    }
    Ok(())
}

fn hex_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Loads one of the embedded 648-bit codes.
pub fn load_code(rate: CodeRate, n: usize) -> Result<QcLdpcCode> {
    if n != CODE_LENGTH {
        return Err(Error::InvalidParameter(format!(
            "only {CODE_LENGTH}-bit codes are available, got n = {n}"
        )));
    }
    let (text, digest) = rate.source();
    if hex_digest(text) != digest {
        return Err(Error::Format(format!("base matrix for rate {rate} fails its checksum")));
    }
    let base = BaseMatrix::parse(text)?;
    let mut code = QcLdpcCode::from_base(base, LIFTING)?;
    if code.n() != n || code.k() * rate.fraction().1 as usize != n * rate.fraction().0 as usize {
        return Err(Error::Format(format!("base matrix dimensions do not match rate {rate}")));
    }
    code.rate = Some(rate);
    Ok(code)
}
