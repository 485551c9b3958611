//! Maxwell-Boltzmann (MB) amplitude distributions and shaping analytics.
//!
//! An MB distribution puts mass `∝ exp(−λ a²)` on each amplitude. The partial
//! variant groups `g` consecutive amplitudes, keeps them equiprobable, and
//! applies the MB weight to the mean energy of each group. With a Gray
//! labeling this leaves the lowest `log2 g` amplitude bit-levels uniform.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Normalised probability vector over an amplitude alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudePmf {
    amplitudes: Vec<u32>,
    probs: Vec<f64>,
    /// λ of the MB family member this PMF came from, if any.
    lambda: Option<f64>,
}

impl AmplitudePmf {
    /// Validates and wraps a probability vector.
    pub fn new(amplitudes: Vec<u32>, probs: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() || amplitudes.len() != probs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes but {} probabilities",
                amplitudes.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(AmplitudePmf {
            amplitudes,
            probs,
            lambda: None,
        })
    }

    /// Normalises nonnegative weights into a PMF.
    pub fn from_weights(amplitudes: Vec<u32>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidParameter("weights do not normalise".into()));
        }
        let probs = weights.iter().map(|w| w / total).collect();
        Self::new(amplitudes, probs)
    }

    pub fn uniform(amplitudes: &[u32]) -> Self {
        let p = 1.0 / amplitudes.len() as f64;
        AmplitudePmf {
            amplitudes: amplitudes.to_vec(),
            probs: vec![p; amplitudes.len()],
            lambda: Some(0.0),
        }
    }

    pub fn amplitudes(&self) -> &[u32] {
        &self.amplitudes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// Probability of `amplitude`, zero if it is not in the alphabet.
    pub fn prob(&self, amplitude: u32) -> f64 {
        self.amplitudes
            .iter()
            .position(|&a| a == amplitude)
            .map_or(0.0, |i| self.probs[i])
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// `E[A²]`.
    pub fn avg_energy(&self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&self.probs)
            .map(|(&a, p)| p * f64::from(a) * f64::from(a))
            .sum()
    }
}

pub(crate) fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Entropy (bits) and average energy of a PMF.
pub fn pmf_stats(pmf: &AmplitudePmf) -> (f64, f64) {
    (pmf.entropy(), pmf.avg_energy())
}

fn check_groups(amplitudes: &[u32], group_size: usize) -> Result<()> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidParameter("empty amplitude alphabet".into()));
    }
    if group_size == 0 || !group_size.is_power_of_two() || amplitudes.len() % group_size != 0 {
        return Err(Error::InvalidParameter(format!(
            "group size {group_size} does not evenly split {} amplitudes",
            amplitudes.len()
        )));
    }
    Ok(())
}

fn group_energies(amplitudes: &[u32], group_size: usize) -> Vec<f64> {
    amplitudes
        .chunks(group_size)
        .map(|g| g.iter().map(|&a| f64::from(a) * f64::from(a)).sum::<f64>() / g.len() as f64)
        .collect()
}

/// MB distribution `K(λ)·exp(−λ a²)`.
pub fn mb_pmf(lambda: f64, amplitudes: &[u32]) -> Result<AmplitudePmf> {
    partial_mb_pmf(lambda, amplitudes, 1)
}

/// MB distribution over groups of `group_size` consecutive amplitudes, each
/// group weighted by its mean energy and uniform inside.
pub fn partial_mb_pmf(lambda: f64, amplitudes: &[u32], group_size: usize) -> Result<AmplitudePmf> {
    check_groups(amplitudes, group_size)?;
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    let energies = group_energies(amplitudes, group_size);
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies
        .iter()
        .flat_map(|e| std::iter::repeat((-lambda * (e - e_min)).exp()).take(group_size))
        .collect();
    let mut pmf = AmplitudePmf::from_weights(amplitudes.to_vec(), &weights)?;
    pmf.lambda = Some(lambda);
    Ok(pmf)
}

/// Bisection for the λ at which a strictly decreasing `f` crosses `target`.
fn solve_decreasing<F: Fn(f64) -> f64>(f: F, target: f64, scale: f64) -> f64 {
    if f(0.0) <= target {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0 / scale;
    while f(hi) > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// λ such that the (partial) MB PMF has entropy `target_bits`.
pub fn fit_entropy(target_bits: f64, amplitudes: &[u32], group_size: usize) -> Result<f64> {
    check_groups(amplitudes, group_size)?;
    let h_max = (amplitudes.len() as f64).log2();
    let h_min = (group_size as f64).log2();
    if !(target_bits > h_min && target_bits <= h_max + 1e-12) {
        return Err(Error::Infeasible(format!(
            "entropy {target_bits} outside ({h_min}, {h_max}]"
        )));
    }
    let scale = energy_scale(amplitudes);
    let entropy_at = |lambda: f64| {
        partial_mb_pmf(lambda, amplitudes, group_size)
            .map(|p| p.entropy())
            .unwrap_or(f64::NAN)
    };
    Ok(solve_decreasing(entropy_at, target_bits, scale))
}

/// λ such that the (partial) MB PMF has average energy `target_energy`.
pub fn fit_energy(target_energy: f64, amplitudes: &[u32], group_size: usize) -> Result<f64> {
    check_groups(amplitudes, group_size)?;
    let energies = group_energies(amplitudes, group_size);
    let e_uniform = energies.iter().sum::<f64>() / energies.len() as f64;
    let e_low = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * e_uniform;
    if !(target_energy > e_low && target_energy <= e_uniform + tol) {
        return Err(Error::Infeasible(format!(
            "average energy {target_energy} outside ({e_low}, {e_uniform}]"
        )));
    }
    let scale = energy_scale(amplitudes);
    let energy_at = |lambda: f64| {
        partial_mb_pmf(lambda, amplitudes, group_size)
            .map(|p| p.avg_energy())
            .unwrap_or(f64::NAN)
    };
    Ok(solve_decreasing(energy_at, target_energy, scale))
}

fn energy_scale(amplitudes: &[u32]) -> f64 {
    let a = f64::from(*amplitudes.last().unwrap_or(&1));
    (a * a).max(1.0)
}

/// Shaping gain in dB of a constellation with `rate` bits per amplitude and
/// average energy `avg_energy`, against uniform `2^(rate+1)`-ASK at the same rate.
pub fn shaping_gain(rate: f64, avg_energy: f64) -> f64 {
    let uniform_energy = ((2.0f64).powf(2.0 * (rate + 1.0)) - 1.0) / 3.0;
    10.0 * (uniform_energy / avg_energy).log10()
}

/// Rate loss `H(A_MB) − R_s`, where `A_MB` is the MB amplitude with the
/// same average energy as the shaper output.
pub fn rate_loss(shaping_rate: f64, induced_energy: f64, amplitudes: &[u32]) -> Result<f64> {
    let lambda = fit_energy(induced_energy, amplitudes, 1)?;
    Ok(mb_pmf(lambda, amplitudes)?.entropy() - shaping_rate)
}

/// Per-amplitude occurrence counts of a constant-composition sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    counts: Vec<u64>,
}

impl Composition {
    pub fn new(counts: Vec<u64>) -> Self {
        Composition { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Block length `N = Σ #(a)`.
    pub fn len(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of distinct sequences `N! / Π #(a)!`, computed exactly.
    pub fn num_sequences(&self) -> BigUint {
        let mut result = BigUint::from(1u32);
        let mut running = 0u64;
        for &c in &self.counts {
            for j in 1..=c {
                running += 1;
                result *= running;
                result /= j;
            }
        }
        result
    }
}

/// Input size, rate and energy of a constant-composition matcher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdmAnalytics {
    /// `⌊log2(N! / Π #(a)!)⌋`.
    pub input_bits: u64,
    /// `input_bits / N`, bits per amplitude.
    pub rate: f64,
    /// `Σ #(a)·a² / N`.
    pub avg_energy: f64,
}

/// Rate and per-symbol energy of a constant-composition code.
pub fn ccdm_analytics(comp: &Composition, amplitudes: &[u32]) -> Result<CcdmAnalytics> {
    if comp.counts.len() != amplitudes.len() {
        return Err(Error::InvalidParameter(format!(
            "composition has {} entries for {} amplitudes",
            comp.counts.len(),
            amplitudes.len()
        )));
    }
    let n = comp.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty composition".into()));
    }
    let input_bits = comp.num_sequences().bits() - 1;
    let energy: u64 = comp
        .counts
        .iter()
        .zip(amplitudes)
        .map(|(&c, &a)| c * u64::from(a) * u64::from(a))
        .sum();
    Ok(CcdmAnalytics {
        input_bits,
        rate: input_bits as f64 / n as f64,
        avg_energy: energy as f64 / n as f64,
    })
}

/// Largest-remainder rounding of `n·p` to an integer composition summing to `n`.
///
/// Ties go to the lower-energy amplitude.
pub fn mb_composition(pmf: &AmplitudePmf, n: u64) -> Composition {
    let scaled: Vec<f64> = pmf.probs.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = scaled[i] - counts[i] as f64;
        let rj = scaled[j] - counts[j] as f64;
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().take(n.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    Composition { counts }
}

/// Lowest-energy MB-rounded composition of length `n` that carries at least `input_bits`.
///
/// The MB parameter is bisected; compositions come from [`mb_composition`].
pub fn ccdm_composition_for_bits(amplitudes: &[u32], n: u64, input_bits: u64) -> Result<Composition> {
    let bits = |lambda: f64| -> Result<(Composition, u64)> {
        let comp = mb_composition(&mb_pmf(lambda, amplitudes)?, n);
        let k = comp.num_sequences().bits().saturating_sub(1);
        Ok((comp, k))
    };
    let (uniform, k0) = bits(0.0)?;
    if k0 < input_bits {
        return Err(Error::Infeasible(format!(
            "{input_bits} bits exceed a length-{n} constant-composition code over {} amplitudes",
            amplitudes.len()
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while bits(hi)?.1 >= input_bits {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return bits(lo).map(|(c, _)| c);
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bits(mid)?.1 >= input_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Ok(uniform);
    }
    bits(lo).map(|(c, _)| c)
}
