//! Enumerative sphere shaping.
//!
//! The sphere `S = {a^N : Σ a_j² ≤ E_max}` is indexed lexicographically with
//! a path-count trellis. Node `(n, e)` holds `T_n^e`, the number of ways to
//! finish a sequence from accumulated energy `e` after `n` symbols:
//!
//! ```text
//! T_N^e = 1,    T_n^e = Σ_a T_{n+1}^{e + a²}
//! ```
//!
//! Energies in column `n` live on the grid `n·w_min + j·step`, where `step`
//! is the gcd of the symbol energy differences (8 for odd-amplitude ASK), so
//! every column has the same number `L` of levels and the table is a dense
//! `(N + 1) × L` array.
//!
//! Two count tables are provided: [`EssTrellis`] holds exact big integers and
//! [`BoundedTrellis`] holds `n_m`-bit mantissas with `n_p`-bit exponents,
//! rounded down after summing the already rounded children so that every
//! node count is at most the sum of its children.

use std::borrow::Cow;
use std::io::{Read, Write};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of the trellis: block length, symbol energies and energy grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrellisGrid {
    n: usize,
    energies: Vec<u64>,
    amplitudes: Option<Vec<u32>>,
    e_max: u64,
    step: u64,
    levels: usize,
    /// Level offset of each symbol, `(w_i − w_min) / step`.
    offsets: Vec<usize>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl TrellisGrid {
    fn new(n: usize, energies: Vec<u64>, amplitudes: Option<Vec<u32>>, e_max: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        if energies.is_empty() || energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "symbol energies must be nonempty and strictly increasing".into(),
            ));
        }
        let w0 = energies[0];
        let floor = w0
            .checked_mul(n as u64)
            .ok_or_else(|| Error::InvalidParameter("energy range overflows".into()))?;
        if e_max < floor {
            return Err(Error::Infeasible(format!(
                "E_max = {e_max} is below the minimum sequence energy {floor}"
            )));
        }
        let step = energies.iter().fold(0, |g, &w| gcd(g, w - w0));
        let (step, levels) = if step == 0 {
            (1, 1)
        } else {
            (step, ((e_max - floor) / step) as usize + 1)
        };
        let offsets = energies.iter().map(|&w| ((w - w0) / step) as usize).collect();
        Ok(TrellisGrid {
            n,
            energies,
            amplitudes,
            e_max,
            step,
            levels,
            offsets,
        })
    }

    fn from_amplitudes(n: usize, amplitudes: &[u32], e_max: u64) -> Result<Self> {
        if amplitudes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("amplitudes must be strictly increasing".into()));
        }
        let energies = amplitudes.iter().map(|&a| u64::from(a) * u64::from(a)).collect();
        Self::new(n, energies, Some(amplitudes.to_vec()), e_max)
    }

    /// Block length `N`.
    pub fn block_length(&self) -> usize {
        self.n
    }

    /// Symbol energies in increasing order.
    pub fn energies(&self) -> &[u64] {
        &self.energies
    }

    /// Amplitudes, when the trellis was built from an amplitude alphabet.
    pub fn amplitudes(&self) -> Option<&[u32]> {
        self.amplitudes.as_deref()
    }

    pub fn e_max(&self) -> u64 {
        self.e_max
    }

    /// Energy spacing between adjacent levels.
    pub fn step(&self) -> u64 {
        self.step
    }

    /// Number of energy levels per column, `L`.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Accumulated energy of level `j` in column `n`.
    pub fn energy_at(&self, n: usize, j: usize) -> u64 {
        n as u64 * self.energies[0] + j as u64 * self.step
    }

    /// Alphabet size.
    pub fn alphabet_size(&self) -> usize {
        self.energies.len()
    }

    #[inline]
    fn child(&self, j: usize, symbol: usize) -> Option<usize> {
        let c = j + self.offsets[symbol];
        (c < self.levels).then_some(c)
    }

    fn symbol_of_amplitude(&self, a: u32) -> Option<usize> {
        self.amplitudes.as_ref()?.iter().position(|&x| x == a)
    }

    fn amplitude_of_symbol(&self, s: usize) -> u32 {
        self.amplitudes.as_ref().expect("trellis has no amplitude alphabet")[s]
    }
}

/// Common interface of exact and bounded-precision count tables.
pub trait PathCounts {
    fn grid(&self) -> &TrellisGrid;

    /// Count stored at node `(n, j)`.
    fn count(&self, n: usize, j: usize) -> Cow<'_, BigUint>;

    /// Number of indexable sequences, `T_0^0`.
    fn num_sequences(&self) -> BigUint {
        self.count(0, 0).into_owned()
    }

    /// Shaper input length `k = ⌊log2 T_0^0⌋`.
    fn input_bits(&self) -> u64 {
        self.count(0, 0).bits().saturating_sub(1)
    }

    /// Sequence (as symbol positions) with lexicographic rank `index`.
    fn shape_symbols(&self, index: &BigUint) -> Result<Vec<usize>> {
        let grid = self.grid();
        let total = self.count(0, 0);
        if index >= total.as_ref() {
            return Err(Error::InvalidIndex(format!(
                "index needs {} bits but the trellis holds {} sequences",
                index.bits(),
                total
            )));
        }
        let mut rest = index.clone();
        let mut j = 0usize;
        let mut out = Vec::with_capacity(grid.n);
        for n in 0..grid.n {
            let mut chosen = None;
            for s in 0..grid.alphabet_size() {
                let Some(c) = grid.child(j, s) else { break };
                let count = self.count(n + 1, c);
                if rest < *count {
                    chosen = Some((s, c));
                    break;
                }
                rest -= count.as_ref();
            }
            let (s, c) = chosen.ok_or_else(|| {
                Error::Numerical(format!("index ran past the children at column {n}"))
            })?;
            out.push(s);
            j = c;
        }
        Ok(out)
    }

    /// Lexicographic rank of a sequence of symbol positions.
    fn deshape_symbols(&self, symbols: &[usize]) -> Result<BigUint> {
        let grid = self.grid();
        if symbols.len() != grid.n {
            return Err(Error::InvalidSequence(format!(
                "expected {} symbols, got {}",
                grid.n,
                symbols.len()
            )));
        }
        let mut path = Vec::with_capacity(grid.n + 1);
        let mut j = 0usize;
        path.push(j);
        for (n, &s) in symbols.iter().enumerate() {
            if s >= grid.alphabet_size() {
                return Err(Error::InvalidSequence(format!("symbol {s} at position {n}")));
            }
            j = grid.child(j, s).ok_or_else(|| {
                Error::InvalidSequence(format!("energy bound exceeded at position {n}"))
            })?;
            path.push(j);
        }
        // accumulate offsets from the back so that every node can be checked
        // against its own count (bounded tables index a strict subset)
        let mut rank = BigUint::zero();
        for n in (0..grid.n).rev() {
            let j = path[n];
            for s in 0..symbols[n] {
                if let Some(c) = grid.child(j, s) {
                    rank += self.count(n + 1, c).as_ref();
                }
            }
            if rank >= *self.count(n, j) {
                return Err(Error::InvalidSequence(format!(
                    "sequence is not indexed by this trellis (column {n})"
                )));
            }
        }
        Ok(rank)
    }

    /// Amplitude sequence with rank `index`.
    fn shape(&self, index: &BigUint) -> Result<Vec<u32>> {
        let grid = self.grid();
        if grid.amplitudes.is_none() {
            return Err(Error::InvalidParameter("trellis was built from energies only".into()));
        }
        Ok(self
            .shape_symbols(index)?
            .into_iter()
            .map(|s| grid.amplitude_of_symbol(s))
            .collect())
    }

    /// Rank of an amplitude sequence.
    fn deshape(&self, sequence: &[u32]) -> Result<BigUint> {
        let grid = self.grid();
        let symbols = sequence
            .iter()
            .map(|&a| {
                grid.symbol_of_amplitude(a)
                    .ok_or_else(|| Error::InvalidSequence(format!("amplitude {a} not in alphabet")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.deshape_symbols(&symbols)
    }
}

/// Trellis with exact path counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EssTrellis {
    grid: TrellisGrid,
    counts: Vec<BigUint>,
}

impl EssTrellis {
    /// Exact trellis over an amplitude alphabet.
    pub fn build(n: usize, amplitudes: &[u32], e_max: u64) -> Result<Self> {
        Ok(Self::from_grid(TrellisGrid::from_amplitudes(n, amplitudes, e_max)?))
    }

    /// Exact trellis over arbitrary integer symbol energies.
    pub fn from_energies(n: usize, energies: &[u64], e_max: u64) -> Result<Self> {
        Ok(Self::from_grid(TrellisGrid::new(n, energies.to_vec(), None, e_max)?))
    }

    fn from_grid(grid: TrellisGrid) -> Self {
        let l = grid.levels;
        let mut counts = vec![BigUint::zero(); (grid.n + 1) * l];
        for c in &mut counts[grid.n * l..] {
            *c = BigUint::one();
        }
        for n in (0..grid.n).rev() {
            let (head, tail) = counts.split_at_mut((n + 1) * l);
            let next = &tail[..l];
            let row = &mut head[n * l..];
            for (j, slot) in row.iter_mut().enumerate() {
                let mut sum = BigUint::zero();
                for s in 0..grid.alphabet_size() {
                    match grid.child(j, s) {
                        Some(c) => sum += &next[c],
                        None => break,
                    }
                }
                *slot = sum;
            }
        }
        EssTrellis { grid, counts }
    }

    /// Raw count array, row-major by column.
    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// Statistics over all sequences in the sphere.
    pub fn induced_stats(&self) -> InducedStats {
        self.prefix_stats(&self.num_sequences())
            .expect("the full sphere is always a valid prefix")
    }

    /// Statistics over the `2^k` sequences an operational shaper actually emits.
    pub fn operational_stats(&self) -> InducedStats {
        let limit = BigUint::one() << self.input_bits();
        self.prefix_stats(&limit).expect("2^k never exceeds the sphere size")
    }

    /// Statistics over the sequences with rank `< limit`.
    pub fn prefix_stats(&self, limit: &BigUint) -> Result<InducedStats> {
        let grid = &self.grid;
        let l = grid.levels;
        let q = grid.alphabet_size();
        let total = self.num_sequences();
        if limit > &total || limit.is_zero() {
            return Err(Error::InvalidIndex(format!(
                "prefix of {limit} sequences out of {total}"
            )));
        }
        // weights[n][j]: number of included subtrees rooted at (n, j)
        let mut weights = vec![BigUint::zero(); (grid.n + 1) * l];
        let mut occurrences = vec![BigUint::zero(); q];
        if limit == &total {
            weights[0] = BigUint::one();
        } else {
            // split ranks < limit into whole subtrees hanging off the path of `limit`
            let mut rest = limit.clone();
            let mut j = 0usize;
            let mut prefix: Vec<usize> = Vec::with_capacity(grid.n);
            for n in 0..grid.n {
                let mut next = None;
                for s in 0..q {
                    let Some(c) = grid.child(j, s) else { break };
                    let count = &self.counts[(n + 1) * l + c];
                    if rest >= *count {
                        if !count.is_zero() {
                            weights[(n + 1) * l + c] += 1u32;
                            for &p in &prefix {
                                occurrences[p] += count;
                            }
                            occurrences[s] += count;
                        }
                        rest -= count;
                    } else {
                        next = Some((s, c));
                        break;
                    }
                }
                match next {
                    Some((s, c)) => {
                        prefix.push(s);
                        j = c;
                    }
                    None => break,
                }
            }
        }
        for n in 0..grid.n {
            for j in 0..l {
                let w = std::mem::take(&mut weights[n * l + j]);
                if w.is_zero() {
                    continue;
                }
                for s in 0..q {
                    let Some(c) = grid.child(j, s) else { break };
                    let count = &self.counts[(n + 1) * l + c];
                    if count.is_zero() {
                        continue;
                    }
                    occurrences[s] += &w * count;
                    weights[(n + 1) * l + c] += &w;
                }
                weights[n * l + j] = w;
            }
        }
        let histogram: Vec<(u64, BigUint)> = (0..l)
            .map(|j| (grid.energy_at(grid.n, j), weights[grid.n * l + j].clone()))
            .collect();
        Ok(InducedStats::from_counts(grid, histogram, occurrences, limit.clone()))
    }

    /// Writes the trellis in the versioned binary format.
    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        write_trellis(out, &self.grid, Payload::Exact(&self.counts))
    }
}

impl PathCounts for EssTrellis {
    fn grid(&self) -> &TrellisGrid {
        &self.grid
    }

    #[inline]
    fn count(&self, n: usize, j: usize) -> Cow<'_, BigUint> {
        Cow::Borrowed(&self.counts[n * self.grid.levels + j])
    }
}

/// A count stored as `mantissa · 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Approx {
    pub mantissa: u64,
    pub exponent: u32,
}

impl Approx {
    pub fn value(&self) -> BigUint {
        BigUint::from(self.mantissa) << self.exponent
    }

    fn round_down(v: &BigUint, mantissa_bits: u32) -> Self {
        let bits = v.bits();
        if bits <= u64::from(mantissa_bits) {
            Approx {
                mantissa: v.to_u64().expect("fits in mantissa"),
                exponent: 0,
            }
        } else {
            let shift = bits - u64::from(mantissa_bits);
            Approx {
                mantissa: (v >> shift).to_u64().expect("fits in mantissa"),
                exponent: shift as u32,
            }
        }
    }
}

/// Trellis with counts rounded down to `n_m`-bit mantissas and `n_p`-bit exponents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedTrellis {
    grid: TrellisGrid,
    mantissa_bits: u32,
    exponent_bits: u32,
    counts: Vec<Approx>,
}

impl BoundedTrellis {
    pub fn build(n: usize, amplitudes: &[u32], e_max: u64, mantissa_bits: u32, exponent_bits: u32) -> Result<Self> {
        let grid = TrellisGrid::from_amplitudes(n, amplitudes, e_max)?;
        Self::from_grid(grid, mantissa_bits, exponent_bits)
    }

    pub fn from_energies(
        n: usize,
        energies: &[u64],
        e_max: u64,
        mantissa_bits: u32,
        exponent_bits: u32,
    ) -> Result<Self> {
        let grid = TrellisGrid::new(n, energies.to_vec(), None, e_max)?;
        Self::from_grid(grid, mantissa_bits, exponent_bits)
    }

    fn from_grid(grid: TrellisGrid, mantissa_bits: u32, exponent_bits: u32) -> Result<Self> {
        if !(2..=64).contains(&mantissa_bits) {
            return Err(Error::InvalidParameter(format!(
                "mantissa width {mantissa_bits} outside 2..=64"
            )));
        }
        if !(1..=32).contains(&exponent_bits) {
            return Err(Error::InvalidParameter(format!(
                "exponent width {exponent_bits} outside 1..=32"
            )));
        }
        let max_exponent = if exponent_bits == 32 { u64::from(u32::MAX) } else { (1u64 << exponent_bits) - 1 };
        let l = grid.levels;
        let mut counts = vec![Approx::default(); (grid.n + 1) * l];
        for c in &mut counts[grid.n * l..] {
            *c = Approx { mantissa: 1, exponent: 0 };
        }
        for n in (0..grid.n).rev() {
            for j in 0..l {
                let mut sum = BigUint::zero();
                for s in 0..grid.alphabet_size() {
                    match grid.child(j, s) {
                        Some(c) => sum += counts[(n + 1) * l + c].value(),
                        None => break,
                    }
                }
                let approx = Approx::round_down(&sum, mantissa_bits);
                if u64::from(approx.exponent) > max_exponent {
                    return Err(Error::PrecisionTooSmall(format!(
                        "exponent {} does not fit in {exponent_bits} bits",
                        approx.exponent
                    )));
                }
                counts[n * l + j] = approx;
            }
        }
        Ok(BoundedTrellis {
            grid,
            mantissa_bits,
            exponent_bits,
            counts,
        })
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn exponent_bits(&self) -> u32 {
        self.exponent_bits
    }

    pub fn approx(&self, n: usize, j: usize) -> Approx {
        self.counts[n * self.grid.levels + j]
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        write_trellis(
            out,
            &self.grid,
            Payload::Bounded(&self.counts, self.mantissa_bits, self.exponent_bits),
        )
    }
}

impl PathCounts for BoundedTrellis {
    fn grid(&self) -> &TrellisGrid {
        &self.grid
    }

    fn count(&self, n: usize, j: usize) -> Cow<'_, BigUint> {
        Cow::Owned(self.approx(n, j).value())
    }
}

/// Exact trellis over an ASK amplitude alphabet.
pub fn build_trellis(n: usize, amplitudes: &[u32], e_max: u64) -> Result<EssTrellis> {
    EssTrellis::build(n, amplitudes, e_max)
}

/// Bounded-precision trellis over an ASK amplitude alphabet.
pub fn build_bounded_trellis(
    n: usize,
    amplitudes: &[u32],
    e_max: u64,
    mantissa_bits: u32,
    exponent_bits: u32,
) -> Result<BoundedTrellis> {
    BoundedTrellis::build(n, amplitudes, e_max, mantissa_bits, exponent_bits)
}

/// Amplitude sequence with rank `index`.
pub fn shape<T: PathCounts + ?Sized>(index: &BigUint, trellis: &T) -> Result<Vec<u32>> {
    trellis.shape(index)
}

/// Rank of an amplitude sequence.
pub fn deshape<T: PathCounts + ?Sized>(sequence: &[u32], trellis: &T) -> Result<BigUint> {
    trellis.deshape(sequence)
}

/// Number of sequences ending at each final energy level, computed forward
/// with a single column in memory.
pub fn sphere_histogram(n: usize, energies: &[u64], e_max: u64) -> Result<Vec<(u64, BigUint)>> {
    let grid = TrellisGrid::new(n, energies.to_vec(), None, e_max)?;
    let l = grid.levels;
    let mut col = vec![BigUint::zero(); l];
    col[0] = BigUint::one();
    for _ in 0..n {
        let mut next = vec![BigUint::zero(); l];
        for (j, c) in col.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for s in 0..grid.alphabet_size() {
                match grid.child(j, s) {
                    Some(t) => next[t] += c,
                    None => break,
                }
            }
        }
        col = next;
    }
    Ok(col
        .into_iter()
        .enumerate()
        .map(|(j, c)| (grid.energy_at(n, j), c))
        .collect())
}

/// Sphere size `|S|` without storing the trellis.
pub fn sphere_size(n: usize, energies: &[u64], e_max: u64) -> Result<BigUint> {
    Ok(sphere_histogram(n, energies, e_max)?
        .into_iter()
        .map(|(_, c)| c)
        .sum())
}

/// Smallest `E_max` on the energy grid whose sphere holds at least `2^k` sequences.
pub fn find_emax(n: usize, amplitudes: &[u32], k: u64) -> Result<u64> {
    let energies: Vec<u64> = amplitudes.iter().map(|&a| u64::from(a) * u64::from(a)).collect();
    find_emax_energies(n, &energies, k)
}

pub fn find_emax_energies(n: usize, energies: &[u64], k: u64) -> Result<u64> {
    let probe = TrellisGrid::new(n, energies.to_vec(), None, energies[0] * n as u64)?;
    let floor = energies[0] * n as u64;
    let top = *energies.last().unwrap() * n as u64;
    let bits_at = |t: u64| -> Result<u64> {
        Ok(sphere_size(n, energies, floor + t * probe.step)?.bits().saturating_sub(1))
    };
    let t_top = (top - floor) / probe.step;
    if bits_at(t_top)? < k {
        return Err(Error::Infeasible(format!(
            "{k} bits exceed the capacity of {} symbols of {} amplitudes",
            n,
            energies.len()
        )));
    }
    let mut lo = 0u64;
    let mut hi = 1u64.min(t_top);
    while bits_at(hi)? < k {
        lo = hi + 1;
        hi = (hi * 2).min(t_top);
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if bits_at(mid)? >= k {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(floor + lo * probe.step)
}

/// Operational statistics of a set of shaped sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedStats {
    /// Number of sequences covered.
    #[serde(with = "biguint_string")]
    pub sequences: BigUint,
    /// `(sequence energy, number of sequences)` per final level.
    #[serde(with = "histogram_string")]
    pub histogram: Vec<(u64, BigUint)>,
    /// Mean energy per symbol.
    pub avg_energy: f64,
    /// Symbol marginal, averaged over positions and sequences.
    pub pmf: Vec<f64>,
}

impl InducedStats {
    fn from_counts(
        grid: &TrellisGrid,
        histogram: Vec<(u64, BigUint)>,
        occurrences: Vec<BigUint>,
        sequences: BigUint,
    ) -> Self {
        let slots = &sequences * BigUint::from(grid.n);
        let pmf: Vec<f64> = occurrences.iter().map(|o| ratio(o, &slots)).collect();
        let energy_sum: BigUint = occurrences
            .iter()
            .zip(&grid.energies)
            .map(|(o, &w)| o * BigUint::from(w))
            .sum();
        InducedStats {
            avg_energy: ratio(&energy_sum, &slots),
            pmf,
            histogram,
            sequences,
        }
    }
}

/// `a / b` as a float, for integers of any size.
pub fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = b.bits().max(a.bits()).saturating_sub(900);
    let a = (a >> shift).to_f64().unwrap_or(f64::INFINITY);
    let b = (b >> shift).to_f64().unwrap_or(f64::INFINITY);
    a / b
}

/// `log2` of a big integer.
pub fn log2_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 900 {
        return v.to_f64().unwrap_or(0.0).log2();
    }
    let shift = bits - 900;
    (v >> shift).to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
}

/// Statistics over all sequences of the sphere.
pub fn induced_stats(trellis: &EssTrellis) -> InducedStats {
    trellis.induced_stats()
}

/// Memory and indexing cost of full- and bounded-precision trellises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// `L·(N+1)·⌈N·R_s⌉` bits.
    pub exact_storage_bits: u64,
    /// `L·(N+1)·(n_m+n_p)` bits.
    pub bounded_storage_bits: u64,
    /// `(|A|−1)·⌈N·R_s⌉` bit operations per dimension.
    pub exact_ops_per_dim: u64,
    /// `(|A|−1)·(n_m+n_p)` bit operations per dimension.
    pub bounded_ops_per_dim: u64,
}

impl ComplexityReport {
    /// Storage in kilobytes (10³ bytes).
    pub fn exact_storage_kb(&self) -> f64 {
        self.exact_storage_bits as f64 / 8000.0
    }

    pub fn bounded_storage_kb(&self) -> f64 {
        self.bounded_storage_bits as f64 / 8000.0
    }
}

pub fn complexity_report(
    levels: u64,
    n: u64,
    mantissa_bits: u64,
    exponent_bits: u64,
    alphabet_size: u64,
    shaping_rate: f64,
) -> ComplexityReport {
    let index_bits = (n as f64 * shaping_rate).ceil() as u64;
    let word = mantissa_bits + exponent_bits;
    ComplexityReport {
        exact_storage_bits: levels * (n + 1) * index_bits,
        bounded_storage_bits: levels * (n + 1) * word,
        exact_ops_per_dim: (alphabet_size - 1) * index_bits,
        bounded_ops_per_dim: (alphabet_size - 1) * word,
    }
}

// ---------------------------------------------------------------------------
// Binary trellis files
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"ESST";
const FORMAT_VERSION: u16 = 1;

enum Payload<'a> {
    Exact(&'a [BigUint]),
    Bounded(&'a [Approx], u32, u32),
}

/// A trellis read back from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoredTrellis {
    Exact(EssTrellis),
    Bounded(BoundedTrellis),
}

impl StoredTrellis {
    pub fn as_counts(&self) -> &dyn PathCounts {
        match self {
            StoredTrellis::Exact(t) => t,
            StoredTrellis::Bounded(t) => t,
        }
    }
}

fn write_trellis<W: Write>(mut out: W, grid: &TrellisGrid, payload: Payload<'_>) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(grid.n as u32).to_le_bytes())?;
    out.write_all(&(grid.energies.len() as u32).to_le_bytes())?;
    for &w in &grid.energies {
        out.write_all(&w.to_le_bytes())?;
    }
    let has_amplitudes = grid.amplitudes.is_some();
    out.write_all(&[u8::from(has_amplitudes)])?;
    if let Some(amps) = &grid.amplitudes {
        for &a in amps {
            out.write_all(&a.to_le_bytes())?;
        }
    }
    out.write_all(&grid.e_max.to_le_bytes())?;
    match payload {
        Payload::Exact(counts) => {
            out.write_all(&[0u8, 0, 0])?;
            for c in counts {
                let bytes = c.to_bytes_le();
                out.write_all(&(bytes.len() as u32).to_le_bytes())?;
                out.write_all(&bytes)?;
            }
        }
        Payload::Bounded(counts, nm, np) => {
            out.write_all(&[1u8, nm as u8, np as u8])?;
            for c in counts {
                out.write_all(&c.mantissa.to_le_bytes())?;
                out.write_all(&c.exponent.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(input: &mut R) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

/// Reads a trellis written by [`EssTrellis::write_to`] or [`BoundedTrellis::write_to`].
pub fn read_trellis<R: Read>(mut input: R) -> Result<StoredTrellis> {
    let magic: [u8; 4] = read_array(&mut input)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a trellis file".into()));
    }
    let version = u16::from_le_bytes(read_array(&mut input)?);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported trellis format version {version}")));
    }
    let n = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let q = u32::from_le_bytes(read_array(&mut input)?) as usize;
    if q == 0 || q > 1 << 16 {
        return Err(Error::Format(format!("bad alphabet size {q}")));
    }
    let energies = (0..q)
        .map(|_| Ok(u64::from_le_bytes(read_array(&mut input)?)))
        .collect::<Result<Vec<_>>>()?;
    let [has_amplitudes] = read_array::<1, _>(&mut input)?;
    let amplitudes = match has_amplitudes {
        0 => None,
        1 => Some(
            (0..q)
                .map(|_| Ok(u32::from_le_bytes(read_array(&mut input)?)))
                .collect::<Result<Vec<_>>>()?,
        ),
        x => return Err(Error::Format(format!("bad amplitude flag {x}"))),
    };
    let e_max = u64::from_le_bytes(read_array(&mut input)?);
    let [mode, nm, np] = read_array::<3, _>(&mut input)?;
    let grid = TrellisGrid::new(n, energies, amplitudes, e_max)
        .map_err(|e| Error::Format(format!("inconsistent header: {e}")))?;
    let nodes = (grid.n + 1) * grid.levels;
    match mode {
        0 => {
            let mut counts = Vec::with_capacity(nodes);
            for _ in 0..nodes {
                let len = u32::from_le_bytes(read_array(&mut input)?) as usize;
                let mut bytes = vec![0u8; len];
                input.read_exact(&mut bytes)?;
                counts.push(BigUint::from_bytes_le(&bytes));
            }
            Ok(StoredTrellis::Exact(EssTrellis { grid, counts }))
        }
        1 => {
            let mut counts = Vec::with_capacity(nodes);
            for _ in 0..nodes {
                let mantissa = u64::from_le_bytes(read_array(&mut input)?);
                let exponent = u32::from_le_bytes(read_array(&mut input)?);
                counts.push(Approx { mantissa, exponent });
            }
            Ok(StoredTrellis::Bounded(BoundedTrellis {
                grid,
                mantissa_bits: u32::from(nm),
                exponent_bits: u32::from(np),
                counts,
            }))
        }
        x => Err(Error::Format(format!("unknown precision mode {x}"))),
    }
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| serde::de::Error::custom("bad integer"))
    }
}

mod histogram_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[(u64, BigUint)], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<(u64, String)> = v.iter().map(|(e, c)| (*e, c.to_str_radix(10))).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(u64, BigUint)>, D::Error> {
        let rows: Vec<(u64, String)> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|(e, c)| {
                BigUint::parse_bytes(c.as_bytes(), 10)
                    .map(|v| (e, v))
                    .ok_or_else(|| serde::de::Error::custom("bad integer"))
            })
            .collect()
    }
}
