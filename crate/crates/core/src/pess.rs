//! Partial enumerative sphere shaping.
//!
//! An enumerative shaper runs on the `2^s` amplitudes of `2^(s+1)`-ASK. Its
//! outputs are labeled with the `s`-bit Gray code and used as the top `s`
//! amplitude bit-levels of `2^m`-ASK. The remaining `u = m − 1 − s` levels
//! carry uniform data bits, appended as the lowest label bits, and the full
//! `(m − 1)`-bit label is mapped back to an amplitude through the `m − 1`-bit
//! Gray code. With `u = 0` this is plain ESS.

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::constellation::{AmplitudeLabeling, AskAlphabet};
use crate::distributions::AmplitudePmf;
use crate::ess::{self, BoundedTrellis, EssTrellis, PathCounts, StoredTrellis};
use crate::{Error, Result};

/// Count-table precision of the shaper trellis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Precision {
    #[default]
    Exact,
    Bounded { mantissa_bits: u32, exponent_bits: u32 },
}

/// Parameters of a partial shaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PessConfig {
    /// Bits per `2^m`-ASK symbol.
    pub m: u32,
    /// Shaped amplitude bit-levels.
    pub shaped_bits: u32,
    /// Block length in symbols.
    pub block_length: usize,
    /// Energy bound of the shaper trellis.
    pub e_max: u64,
    #[serde(default)]
    pub precision: Precision,
}

impl PessConfig {
    pub fn new(m: u32, shaped_bits: u32, block_length: usize, e_max: u64, precision: Precision) -> Result<Self> {
        let cfg = PessConfig {
            m,
            shaped_bits,
            block_length,
            e_max,
            precision,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration with the smallest energy bound giving at least `input_bits`.
    pub fn for_input_bits(
        m: u32,
        shaped_bits: u32,
        block_length: usize,
        input_bits: u64,
        precision: Precision,
    ) -> Result<Self> {
        let probe = PessConfig {
            m,
            shaped_bits,
            block_length,
            e_max: 0,
            precision,
        };
        probe.validate()?;
        let e_max = ess::find_emax(block_length, &probe.shaper_amplitudes(), input_bits)?;
        Self::new(m, shaped_bits, block_length, e_max, precision)
    }

    fn validate(&self) -> Result<()> {
        if self.m < 2 || self.m > 16 {
            return Err(Error::InvalidParameter(format!("m = {} outside 2..=16", self.m)));
        }
        if self.shaped_bits < 1 || self.shaped_bits > self.m - 1 {
            return Err(Error::InvalidParameter(format!(
                "shaped bit-levels s = {} must lie in 1..={}",
                self.shaped_bits,
                self.m - 1
            )));
        }
        if self.block_length == 0 {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        Ok(())
    }

    /// Uniform amplitude bit-levels `u = m − 1 − s`.
    pub fn uniform_bits(&self) -> u32 {
        self.m - 1 - self.shaped_bits
    }

    /// Amplitudes of the shaper alphabet, `{1, 3, …, 2^(s+1) − 1}`.
    pub fn shaper_amplitudes(&self) -> Vec<u32> {
        (0..1u32 << self.shaped_bits).map(|i| 2 * i + 1).collect()
    }
}

/// A built partial shaper: configuration, shaper trellis and labelings.
#[derive(Debug, Clone)]
pub struct PessShaper {
    config: PessConfig,
    trellis: StoredTrellis,
    input_bits: u64,
    shaped_labels: AmplitudeLabeling,
    full_labels: AmplitudeLabeling,
}

impl PessShaper {
    pub fn build(config: PessConfig) -> Result<Self> {
        config.validate()?;
        let amps = config.shaper_amplitudes();
        let trellis = match config.precision {
            Precision::Exact => StoredTrellis::Exact(EssTrellis::build(config.block_length, &amps, config.e_max)?),
            Precision::Bounded {
                mantissa_bits,
                exponent_bits,
            } => StoredTrellis::Bounded(BoundedTrellis::build(
                config.block_length,
                &amps,
                config.e_max,
                mantissa_bits,
                exponent_bits,
            )?),
        };
        let input_bits = trellis.as_counts().input_bits();
        Ok(PessShaper {
            config,
            trellis,
            input_bits,
            shaped_labels: AmplitudeLabeling::brgc(config.shaped_bits),
            full_labels: AmplitudeLabeling::brgc(config.m - 1),
        })
    }

    pub fn config(&self) -> &PessConfig {
        &self.config
    }

    pub fn trellis(&self) -> &dyn PathCounts {
        self.trellis.as_counts()
    }

    /// Shaper input length `k`.
    pub fn input_bits(&self) -> u64 {
        self.input_bits
    }

    pub fn block_length(&self) -> usize {
        self.config.block_length
    }

    pub fn uniform_bits(&self) -> u32 {
        self.config.uniform_bits()
    }

    /// Amplitude bits carried per symbol, `k/N + u`.
    pub fn amplitude_rate(&self) -> f64 {
        self.input_bits as f64 / self.config.block_length as f64 + f64::from(self.uniform_bits())
    }

    /// Full amplitude from a shaper symbol position and `u` uniform bits (first bit most significant).
    #[inline]
    fn splice(&self, shaper_symbol: usize, uniform: u32) -> u32 {
        let label = (self.shaped_labels.label_of_index(shaper_symbol) << self.uniform_bits()) | uniform;
        2 * self.full_labels.index_of_label(label) as u32 + 1
    }

    /// Inverse of `splice`.
    #[inline]
    fn split(&self, amplitude: u32) -> Option<(usize, u32)> {
        let label = self.full_labels.label(amplitude)?;
        let u = self.uniform_bits();
        let shaped = self.shaped_labels.index_of_label(label >> u);
        Some((shaped, label & ((1 << u) - 1)))
    }

    /// Maps a `k`-bit message index and `u` uniform level sequences to `2^m`-ASK amplitudes.
    pub fn shape(&self, message: &BigUint, uniform_levels: &[Vec<u8>]) -> Result<Vec<u32>> {
        let n = self.config.block_length;
        let u = self.uniform_bits() as usize;
        if uniform_levels.len() != u || uniform_levels.iter().any(|l| l.len() != n) {
            return Err(Error::InvalidParameter(format!(
                "expected {u} uniform level sequences of {n} bits"
            )));
        }
        if message.bits() > self.input_bits {
            return Err(Error::InvalidIndex(format!(
                "message needs {} bits, shaper takes {}",
                message.bits(),
                self.input_bits
            )));
        }
        let symbols = self.trellis().shape_symbols(message)?;
        Ok(symbols
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                let uniform = uniform_levels
                    .iter()
                    .fold(0u32, |acc, level| (acc << 1) | u32::from(level[j] & 1));
                self.splice(s, uniform)
            })
            .collect())
    }

    /// Recovers the message index and uniform level sequences from an amplitude sequence.
    pub fn deshape(&self, sequence: &[u32]) -> Result<(BigUint, Vec<Vec<u8>>)> {
        let n = self.config.block_length;
        if sequence.len() != n {
            return Err(Error::InvalidSequence(format!(
                "expected {n} amplitudes, got {}",
                sequence.len()
            )));
        }
        let u = self.uniform_bits() as usize;
        let mut uniform_levels = vec![vec![0u8; n]; u];
        let mut symbols = Vec::with_capacity(n);
        for (j, &a) in sequence.iter().enumerate() {
            let (s, bits) = self
                .split(a)
                .ok_or_else(|| Error::InvalidSequence(format!("amplitude {a} not in the alphabet")))?;
            symbols.push(s);
            for (level, row) in uniform_levels.iter_mut().enumerate() {
                row[j] = ((bits >> (u - 1 - level)) & 1) as u8;
            }
        }
        let message = self.trellis().deshape_symbols(&symbols)?;
        if message.bits() > self.input_bits {
            return Err(Error::InvalidSequence(
                "shaped part lies outside the first 2^k sequences".into(),
            ));
        }
        Ok((message, uniform_levels))
    }

    /// Operational shaper marginal over the `2^k` emitted sequences.
    ///
    /// Bounded-precision shapers use the exact trellis with the same energy bound.
    pub fn shaper_pmf(&self) -> Result<AmplitudePmf> {
        let stats = match &self.trellis {
            StoredTrellis::Exact(t) => t.operational_stats(),
            StoredTrellis::Bounded(_) => {
                let exact = EssTrellis::build(
                    self.config.block_length,
                    &self.config.shaper_amplitudes(),
                    self.config.e_max,
                )?;
                exact.prefix_stats(&(BigUint::from(1u8) << self.input_bits))?
            }
        };
        AmplitudePmf::new(self.config.shaper_amplitudes(), normalized(stats.pmf))
    }

    /// Operational distribution of the full `2^m`-ASK amplitudes.
    pub fn induced_pmf(&self) -> Result<AmplitudePmf> {
        let shaper = self.shaper_pmf()?;
        let full = AskAlphabet::new(self.config.m)?;
        let spread = f64::from(1u32 << self.uniform_bits());
        let probs = full
            .amplitudes()
            .iter()
            .map(|&a| {
                let (s, _) = self.split(a).expect("alphabet amplitude");
                shaper.probs()[s] / spread
            })
            .collect();
        AmplitudePmf::new(full.amplitudes().to_vec(), normalized(probs))
    }
}

fn normalized(mut probs: Vec<f64>) -> Vec<f64> {
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    probs
}

pub fn pess_shape(message: &BigUint, uniform_levels: &[Vec<u8>], shaper: &PessShaper) -> Result<Vec<u32>> {
    shaper.shape(message, uniform_levels)
}

pub fn pess_deshape(sequence: &[u32], shaper: &PessShaper) -> Result<(BigUint, Vec<Vec<u8>>)> {
    shaper.deshape(sequence)
}

pub fn pess_induced_pmf(shaper: &PessShaper) -> Result<AmplitudePmf> {
    shaper.induced_pmf()
}

/// Big-endian bit vector to integer.
pub fn bits_to_index(bits: &[u8]) -> BigUint {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    let pad = bytes.len() * 8 - bits.len();
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            let pos = pad + i;
            bytes[pos / 8] |= 0x80 >> (pos % 8);
        }
    }
    if bytes.is_empty() {
        BigUint::zero()
    } else {
        BigUint::from_bytes_be(&bytes)
    }
}

/// Integer to a big-endian bit vector of fixed width.
pub fn index_to_bits(index: &BigUint, width: usize) -> Result<Vec<u8>> {
    if index.bits() > width as u64 {
        return Err(Error::InvalidIndex(format!(
            "index needs {} bits, width is {width}",
            index.bits()
        )));
    }
    Ok((0..width)
        .map(|i| u8::from(index.bit((width - 1 - i) as u64)))
        .collect())
}
