//! Achievable rates on the real AWGN channel `Y = X + Z`.
//!
//! Inputs are `2^m`-ASK points with shaped amplitudes and equiprobable signs,
//! so `P_X(x) = P_A(|x|)/2`. The sign is label bit `B_1`; the amplitude label
//! supplies `B_2 … B_m`. SNR is `E[X²]/σ²`.
//!
//! Conditional entropies are expectations over the Gaussian noise and are
//! evaluated with a 128-node Gauss-Hermite rule per transmitted point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{AmplitudeLabeling, AskAlphabet};
use crate::distributions::{fit_entropy, partial_mb_pmf, AmplitudePmf};
use crate::quadrature::GaussHermite;
use crate::{Error, Result};

/// Gauss-Hermite order used for every conditional entropy.
pub const QUADRATURE_ORDER: usize = 128;

/// AWGN channel operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub snr_db: f64,
    pub noise_variance: f64,
}

impl ChannelSpec {
    /// Channel with `σ² = signal_energy / SNR`.
    pub fn new(snr_db: f64, signal_energy: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!("SNR must be finite, got {snr_db}")));
        }
        let noise_variance = signal_energy / db_to_linear(snr_db);
        if !(noise_variance > 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance {noise_variance} is not positive"
            )));
        }
        Ok(ChannelSpec {
            snr_db,
            noise_variance,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.noise_variance.sqrt()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Channel input: amplitude PMF plus amplitude labeling; signs are uniform.
#[derive(Debug, Clone)]
pub struct InputSpec {
    pmf: AmplitudePmf,
    labeling: AmplitudeLabeling,
}

impl InputSpec {
    pub fn new(pmf: AmplitudePmf, labeling: AmplitudeLabeling) -> Result<Self> {
        if pmf.amplitudes().len() != labeling.len() {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes but a {}-entry labeling",
                pmf.amplitudes().len(),
                labeling.len()
            )));
        }
        if pmf.amplitudes().iter().enumerate().any(|(i, &a)| a != 2 * i as u32 + 1) {
            return Err(Error::InvalidParameter(
                "amplitudes must be the ASK amplitudes 1, 3, 5, ...".into(),
            ));
        }
        Ok(InputSpec { pmf, labeling })
    }

    /// Uniform `2^m`-ASK with Gray amplitude labels.
    pub fn uniform(m: u32) -> Result<Self> {
        let alphabet = AskAlphabet::new(m)?;
        Self::new(
            AmplitudePmf::uniform(alphabet.amplitudes()),
            AmplitudeLabeling::brgc(m - 1),
        )
    }

    pub fn pmf(&self) -> &AmplitudePmf {
        &self.pmf
    }

    pub fn labeling(&self) -> &AmplitudeLabeling {
        &self.labeling
    }

    /// Bits per symbol including the sign bit.
    pub fn bits_per_symbol(&self) -> usize {
        self.labeling.num_bits() as usize + 1
    }

    /// `H(X) = H(A) + 1`.
    pub fn entropy(&self) -> f64 {
        self.pmf.entropy() + 1.0
    }

    /// `E[X²]`.
    pub fn energy(&self) -> f64 {
        self.pmf.avg_energy()
    }

    /// Signed points with nonzero probability: `(x, P_X(x), label)` where the
    /// label's bit 0 is the sign bit and bits `1..m` are the amplitude bits.
    pub(crate) fn points(&self) -> Vec<SignalPoint> {
        let nb = self.labeling.num_bits();
        let mut out = Vec::with_capacity(2 * self.pmf.amplitudes().len());
        for (i, (&a, &p)) in self.pmf.amplitudes().iter().zip(self.pmf.probs()).enumerate() {
            if p <= 0.0 {
                continue;
            }
            let amp_label = self.labeling.label_of_index(i);
            for sign_bit in 0..2u32 {
                let x = if sign_bit == 0 { f64::from(a) } else { -f64::from(a) };
                out.push(SignalPoint {
                    x,
                    prob: p / 2.0,
                    label: (sign_bit << nb) | amp_label,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SignalPoint {
    pub x: f64,
    pub prob: f64,
    /// `m`-bit label, most significant bit = sign bit `B_1`.
    pub label: u32,
}

/// `C = ½ log2(1 + SNR)`.
pub fn awgn_capacity(snr_db: f64) -> f64 {
    0.5 * (1.0 + db_to_linear(snr_db)).log2()
}

/// SNR (dB) at which the AWGN capacity equals `rate`.
pub fn capacity_snr_db(rate: f64) -> f64 {
    linear_to_db((2f64).powf(2.0 * rate) - 1.0)
}

/// Which achievable rate to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMetric {
    /// `[H(X) − Σ_i H(B_i|Y)]⁺`.
    BitMetric,
    /// `I(X;Y)`, the coded-modulation rate with a symbol-metric decoder.
    SymbolMetric,
}

struct RateEvaluator {
    rule: Vec<(f64, f64)>,
}

impl RateEvaluator {
    fn new() -> Self {
        RateEvaluator {
            rule: GaussHermite::new(QUADRATURE_ORDER).standard_normal_rule(),
        }
    }

    /// Sum of conditional entropies (bits) for the chosen metric.
    fn equivocation(&self, points: &[SignalPoint], num_bits: usize, sigma: f64, metric: RateMetric) -> f64 {
        let inv_two_var = 1.0 / (2.0 * sigma * sigma);
        let log_priors: Vec<f64> = points.iter().map(|p| p.prob.ln()).collect();
        let mut metrics = vec![0.0; points.len()];
        let mut total = 0.0;
        for (i, tx) in points.iter().enumerate() {
            let mut acc = 0.0;
            for &(z, w) in &self.rule {
                let y = tx.x + sigma * z;
                let mut best = f64::NEG_INFINITY;
                for (j, rx) in points.iter().enumerate() {
                    let d = y - rx.x;
                    metrics[j] = log_priors[j] - d * d * inv_two_var;
                    best = best.max(metrics[j]);
                }
                let mut all = 0.0;
                for v in metrics.iter_mut() {
                    *v = (*v - best).exp();
                    all += *v;
                }
                let h = match metric {
                    RateMetric::SymbolMetric => -(metrics[i] / all).ln(),
                    RateMetric::BitMetric => {
                        let mut h = 0.0;
                        for b in 0..num_bits {
                            let want = (tx.label >> b) & 1;
                            let same: f64 = points
                                .iter()
                                .zip(&metrics)
                                .filter(|(p, _)| (p.label >> b) & 1 == want)
                                .map(|(_, v)| v)
                                .sum();
                            h -= (same / all).ln();
                        }
                        h
                    }
                };
                acc += w * h;
            }
            total += tx.prob * acc;
        }
        total / std::f64::consts::LN_2
    }
}

fn achievable_rate(input: &InputSpec, snr_db: f64, metric: RateMetric, eval: &RateEvaluator) -> Result<f64> {
    if snr_db == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let channel = ChannelSpec::new(snr_db, input.energy())?;
    let points = input.points();
    let equivocation = eval.equivocation(&points, input.bits_per_symbol(), channel.sigma(), metric);
    let rate = input.entropy() - equivocation;
    if !rate.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite rate at {snr_db} dB"
        )));
    }
    Ok(rate.max(0.0))
}

/// Bit-metric decoding rate in bits per real dimension.
pub fn bmd_rate(input: &InputSpec, snr_db: f64) -> Result<f64> {
    achievable_rate(input, snr_db, RateMetric::BitMetric, &RateEvaluator::new())
}

/// Symbol-metric rate `I(X;Y)` in bits per real dimension.
pub fn symbol_mi(input: &InputSpec, snr_db: f64) -> Result<f64> {
    achievable_rate(input, snr_db, RateMetric::SymbolMetric, &RateEvaluator::new())
}

fn snr_for_rate_with(input: &InputSpec, target: f64, metric: RateMetric, eval: &RateEvaluator) -> Result<f64> {
    if !(target > 0.0) || target >= input.entropy() - 1e-12 {
        return Err(Error::Infeasible(format!(
            "rate {target} not reachable with input entropy {}",
            input.entropy()
        )));
    }
    let rate = |snr: f64| achievable_rate(input, snr, metric, eval);
    let mut lo = -10.0;
    while rate(lo)? >= target {
        lo -= 20.0;
        if lo < -200.0 {
            return Err(Error::Numerical("could not bracket the SNR from below".into()));
        }
    }
    let mut hi = 20.0;
    while rate(hi)? < target {
        lo = hi;
        hi += 20.0;
        if hi > 300.0 {
            return Err(Error::Infeasible(format!(
                "rate {target} not reached below 300 dB"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = rate(mid)?;
        if (r - target).abs() < 1e-6 && hi - lo < 1e-6 {
            return Ok(mid);
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// SNR (dB) at which the BMD rate of `input` reaches `target_rate`.
pub fn snr_for_rate(input: &InputSpec, target_rate: f64) -> Result<f64> {
    snr_for_rate_with(input, target_rate, RateMetric::BitMetric, &RateEvaluator::new())
}

/// Same as [`snr_for_rate`] for an arbitrary rate metric.
pub fn snr_for_rate_metric(input: &InputSpec, target_rate: f64, metric: RateMetric) -> Result<f64> {
    snr_for_rate_with(input, target_rate, metric, &RateEvaluator::new())
}

/// One point of a gap-to-capacity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    /// Input entropy `H(X)` in bits.
    pub h_x: f64,
    /// `SNR|_{R=R_t} − SNR|_{C=R_t}` in dB; infinite when the rate is unreachable.
    pub delta_snr_db: f64,
}

/// Entropy grid `R_t + step, R_t + 2·step, …, m` for a sweep.
pub fn entropy_grid(target_rate: f64, m: u32, step: f64) -> Vec<f64> {
    let count = ((f64::from(m) - target_rate) / step).round() as usize;
    (1..=count).map(|i| target_rate + i as f64 * step).collect()
}

/// Gap-to-capacity of `s`-bit shaped `2^m`-ASK at rate `target_rate` over an entropy grid.
///
/// Each grid entropy fixes a partial MB input with group size `2^(m−1−s)`.
pub fn gap_sweep(m: u32, shaped_bits: u32, target_rate: f64, entropies: &[f64]) -> Result<Vec<GapPoint>> {
    gap_sweep_metric(m, shaped_bits, target_rate, entropies, RateMetric::BitMetric)
}

pub fn gap_sweep_metric(
    m: u32,
    shaped_bits: u32,
    target_rate: f64,
    entropies: &[f64],
    metric: RateMetric,
) -> Result<Vec<GapPoint>> {
    let alphabet = AskAlphabet::new(m)?;
    if shaped_bits == 0 || shaped_bits > m - 1 {
        return Err(Error::InvalidParameter(format!(
            "shaped bits must lie in 1..={}, got {shaped_bits}",
            m - 1
        )));
    }
    if !(target_rate > 0.0 && target_rate < f64::from(m)) {
        return Err(Error::InvalidParameter(format!(
            "target rate {target_rate} outside (0, {m})"
        )));
    }
    let group = 1usize << (m - 1 - shaped_bits);
    let reference = capacity_snr_db(target_rate);
    let labeling = AmplitudeLabeling::brgc(m - 1);
    let eval = RateEvaluator::new();
    entropies
        .par_iter()
        .map(|&h_x| {
            let lambda = fit_entropy(h_x - 1.0, alphabet.amplitudes(), group)?;
            let pmf = partial_mb_pmf(lambda, alphabet.amplitudes(), group)?;
            let input = InputSpec::new(pmf, labeling.clone())?;
            let delta = match snr_for_rate_with(&input, target_rate, metric, &eval) {
                Ok(snr) => snr - reference,
                Err(Error::Infeasible(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            Ok(GapPoint {
                h_x,
                delta_snr_db: delta,
            })
        })
        .collect()
}

/// Optimum of a sweep against the uniform (maximum-entropy) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub best_h_x: f64,
    pub best_delta_snr_db: f64,
    pub uniform_delta_snr_db: f64,
    /// Uniform gap minus best gap, in dB.
    pub gain_db: f64,
}

/// Locates the minimum gap. The last point of `curve` must be the uniform input (`H(X) = m`).
pub fn summarize_gap(curve: &[GapPoint]) -> Option<GapSummary> {
    let uniform = curve.last()?;
    let best = curve
        .iter()
        .filter(|p| p.delta_snr_db.is_finite())
        .min_by(|a, b| a.delta_snr_db.total_cmp(&b.delta_snr_db))?;
    Some(GapSummary {
        best_h_x: best.h_x,
        best_delta_snr_db: best.delta_snr_db,
        uniform_delta_snr_db: uniform.delta_snr_db,
        gain_db: uniform.delta_snr_db - best.delta_snr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_formula() {
        assert!((awgn_capacity(linear_to_db(63.0)) - 3.0).abs() < 1e-12);
        assert!((awgn_capacity(0.0) - 0.5).abs() < 1e-12);
        assert!(awgn_capacity(-200.0) < 1e-18);
        assert!((capacity_snr_db(3.0) - 17.99).abs() < 0.01);
    }

    #[test]
    fn uniform_bmd_limits() {
        let input = InputSpec::uniform(4).unwrap();
        assert!((bmd_rate(&input, 60.0).unwrap() - 4.0).abs() < 1e-6);
        assert_eq!(bmd_rate(&input, f64::NEG_INFINITY).unwrap(), 0.0);
        assert!(bmd_rate(&input, -60.0).unwrap() < 1e-4);
    }

    #[test]
    fn bmd_below_symbol_rate_and_capacity() {
        let input = InputSpec::uniform(4).unwrap();
        for snr in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0] {
            let b = bmd_rate(&input, snr).unwrap();
            let s = symbol_mi(&input, snr).unwrap();
            assert!(b <= s + 1e-9, "{snr}: {b} > {s}");
            assert!(s <= awgn_capacity(snr) + 1e-9);
            assert!(b <= input.entropy());
        }
    }

    #[test]
    fn bmd_nondecreasing_in_snr() {
        let a = AskAlphabet::new(4).unwrap();
        let pmf = partial_mb_pmf(0.02, a.amplitudes(), 1).unwrap();
        let input = InputSpec::new(pmf, AmplitudeLabeling::brgc(3)).unwrap();
        let mut prev = 0.0;
        for i in 0..40 {
            let r = bmd_rate(&input, -5.0 + i as f64).unwrap();
            assert!(r + 1e-12 >= prev);
            prev = r;
        }
    }

    #[test]
    fn snr_for_rate_monotone() {
        let input = InputSpec::uniform(4).unwrap();
        let lo = snr_for_rate(&input, 2.9).unwrap();
        let hi = snr_for_rate(&input, 3.0).unwrap();
        assert!(lo < hi);
        assert!((bmd_rate(&input, hi).unwrap() - 3.0).abs() < 1e-6);
        assert!(matches!(snr_for_rate(&input, 4.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn mismatched_input_rejected() {
        let pmf = AmplitudePmf::uniform(&[1, 3, 5, 7]);
        assert!(InputSpec::new(pmf, AmplitudeLabeling::brgc(3)).is_err());
    }

    #[test]
    fn uncoded_end_of_sweep_diverges() {
        let curve = gap_sweep(4, 3, 3.0, &[3.0001, 3.001, 3.01, 3.05]).unwrap();
        assert!(curve.windows(2).all(|w| w[0].delta_snr_db > w[1].delta_snr_db));
        assert!(curve[0].delta_snr_db > 6.0);
        assert!(curve[3].delta_snr_db > 1.5);
    }

    #[test]
    fn grid_spacing() {
        let g = entropy_grid(3.0, 4, 0.01);
        assert_eq!(g.len(), 100);
        assert!((g[0] - 3.01).abs() < 1e-12);
        assert!((g[99] - 4.0).abs() < 1e-12);
    }
}
