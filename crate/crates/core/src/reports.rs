//! Table and curve generators for 16-ASK shaping at 8/3 bit per amplitude.
//!
//! Everything here is assembled from the lower modules; the command-line
//! tool serializes these structures to JSON and CSV.

use serde::{Deserialize, Serialize};

use crate::air::GapPoint;
use crate::constellation::AskAlphabet;
use crate::distributions::{
    ccdm_analytics, ccdm_composition_for_bits, fit_entropy, partial_mb_pmf, rate_loss, shaping_gain,
};
use crate::ess::{self, complexity_report, log2_big, sphere_histogram, BoundedTrellis, EssTrellis, PathCounts};
use crate::paschain::FerResult;
use crate::pess::{PessConfig, PessShaper, Precision};
use crate::{Error, Result};

/// Bits per 16-ASK symbol.
pub const M: u32 = 4;
/// Shaping rate of the reference setup, bits per amplitude.
pub const SHAPING_RATE: f64 = 8.0 / 3.0;
/// Block length of the reference setup.
pub const BLOCK_LENGTH: usize = 162;

fn amplitudes(m: u32) -> Result<Vec<u32>> {
    Ok(AskAlphabet::new(m)?.amplitudes().to_vec())
}

/// One MB or partial-MB distribution at the reference entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub shaped_bits: u32,
    pub group_size: usize,
    pub lambda: f64,
    pub amplitudes: Vec<u32>,
    pub probs: Vec<f64>,
    pub entropy: f64,
    pub avg_energy: f64,
    pub shaping_gain_db: f64,
}

/// MB (`s = m−1`) and partial MB distributions with `H(A) = entropy`.
pub fn pmf_table(m: u32, entropy: f64) -> Result<Vec<PmfRow>> {
    let amps = amplitudes(m)?;
    (1..m)
        .rev()
        .map(|s| {
            let group = 1usize << (m - 1 - s);
            let lambda = fit_entropy(entropy, &amps, group)?;
            let pmf = partial_mb_pmf(lambda, &amps, group)?;
            Ok(PmfRow {
                shaped_bits: s,
                group_size: group,
                lambda,
                amplitudes: amps.clone(),
                probs: pmf.probs().to_vec(),
                entropy: pmf.entropy(),
                avg_energy: pmf.avg_energy(),
                shaping_gain_db: shaping_gain(entropy, pmf.avg_energy()),
            })
        })
        .collect()
}

/// Shaper parameters and energies of one row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShaperRow {
    pub method: String,
    pub uniform_bits: u32,
    /// Energy bound of sphere shapers.
    pub e_max: Option<u64>,
    /// Composition of constant-composition matching.
    pub composition: Option<Vec<u64>>,
    pub input_bits: u64,
    /// `k / N`.
    pub shaper_rate: f64,
    /// `E[A²]` over every sequence of the code.
    pub energy_all: f64,
    /// `E[A²]` over the `2^k` sequences actually addressed.
    pub energy_operational: f64,
    /// Shaping gain of the operational energy at the overall amplitude rate.
    pub shaping_gain_db: f64,
}

/// Enumerative shaping rows for `s = m−1, …, 1` plus the CCDM row, at `N` and amplitude rate `rate`.
pub fn shaper_table(m: u32, n: usize, rate: f64) -> Result<Vec<ShaperRow>> {
    let mut rows = Vec::new();
    for s in (1..m).rev() {
        let u = m - 1 - s;
        let k = (n as f64 * (rate - f64::from(u))).round() as u64;
        let cfg = PessConfig::for_input_bits(m, s, n, k, Precision::Exact)?;
        let shaper = PessShaper::build(cfg)?;
        let exact = EssTrellis::build(n, &cfg.shaper_amplitudes(), cfg.e_max)?;
        let g2 = f64::from(1u32 << (2 * u));
        let energy_all = g2 * exact.induced_stats().avg_energy + (g2 - 1.0) / 3.0;
        let energy_operational = shaper.induced_pmf()?.avg_energy();
        rows.push(ShaperRow {
            method: if u == 0 { "ESS".into() } else { "P-ESS".into() },
            uniform_bits: u,
            e_max: Some(cfg.e_max),
            composition: None,
            input_bits: shaper.input_bits(),
            shaper_rate: shaper.input_bits() as f64 / n as f64,
            energy_all,
            energy_operational,
            shaping_gain_db: shaping_gain(rate, energy_operational),
        });
    }
    let amps = amplitudes(m)?;
    let k = (n as f64 * rate).round() as u64;
    let comp = ccdm_composition_for_bits(&amps, n as u64, k)?;
    let a = ccdm_analytics(&comp, &amps)?;
    rows.push(ShaperRow {
        method: "CCDM".into(),
        uniform_bits: 0,
        e_max: None,
        composition: Some(comp.counts().to_vec()),
        input_bits: a.input_bits,
        shaper_rate: a.rate,
        energy_all: a.avg_energy,
        energy_operational: a.avg_energy,
        shaping_gain_db: shaping_gain(rate, a.avg_energy),
    });
    Ok(rows)
}

/// Trellis size and indexing cost of one shaper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub shaped_bits: u32,
    pub e_max: u64,
    pub levels: usize,
    pub alphabet_size: usize,
    pub mantissa_bits: u32,
    pub exponent_bits: u32,
    /// `k` of the exact trellis.
    pub input_bits: u64,
    /// `k` of the bounded-precision trellis.
    pub bounded_input_bits: u64,
    pub bounded_storage_kb: f64,
    pub bounded_ops_per_dim: u64,
    pub exact_storage_kb: f64,
    pub exact_ops_per_dim: u64,
}

/// Mantissa/exponent widths of the reference bounded-precision shapers, by shaped bits.
pub fn reference_precision(shaped_bits: u32) -> Option<(u32, u32)> {
    match shaped_bits {
        3 => Some((17, 9)),
        2 => Some((10, 9)),
        1 => Some((8, 7)),
        _ => None,
    }
}

pub fn complexity_table(m: u32, n: usize, rate: f64) -> Result<Vec<ComplexityRow>> {
    (1..m)
        .rev()
        .filter_map(|s| reference_precision(s).map(|p| (s, p)))
        .map(|(s, (nm, np))| {
            let u = m - 1 - s;
            let k = (n as f64 * (rate - f64::from(u))).round() as u64;
            let cfg = PessConfig::for_input_bits(m, s, n, k, Precision::Exact)?;
            let amps = cfg.shaper_amplitudes();
            let exact = EssTrellis::build(n, &amps, cfg.e_max)?;
            let bounded = BoundedTrellis::build(n, &amps, cfg.e_max, nm, np)?;
            let levels = exact.grid().levels();
            let report = complexity_report(
                levels as u64,
                n as u64,
                u64::from(nm),
                u64::from(np),
                amps.len() as u64,
                exact.input_bits() as f64 / n as f64,
            );
            Ok(ComplexityRow {
                shaped_bits: s,
                e_max: cfg.e_max,
                levels,
                alphabet_size: amps.len(),
                mantissa_bits: nm,
                exponent_bits: np,
                input_bits: exact.input_bits(),
                bounded_input_bits: bounded.input_bits(),
                bounded_storage_kb: report.bounded_storage_kb(),
                bounded_ops_per_dim: report.bounded_ops_per_dim,
                exact_storage_kb: report.exact_storage_kb(),
                exact_ops_per_dim: report.exact_ops_per_dim,
            })
        })
        .collect()
}

/// All reference tables in one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tables {
    pub m: u32,
    pub block_length: usize,
    pub shaping_rate: f64,
    pub distributions: Vec<PmfRow>,
    pub shapers: Vec<ShaperRow>,
    pub complexity: Vec<ComplexityRow>,
}

pub fn reference_tables() -> Result<Tables> {
    Ok(Tables {
        m: M,
        block_length: BLOCK_LENGTH,
        shaping_rate: SHAPING_RATE,
        distributions: pmf_table(M, SHAPING_RATE)?,
        shapers: shaper_table(M, BLOCK_LENGTH, SHAPING_RATE)?,
        complexity: complexity_table(M, BLOCK_LENGTH, SHAPING_RATE)?,
    })
}

/// Rate loss of one finite-length shaper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLossPoint {
    pub scheme: String,
    pub n: usize,
    pub input_bits: u64,
    /// `log2 |code| / N` plus uniform bits, bits per amplitude.
    pub shaping_rate: f64,
    pub avg_energy: f64,
    pub rate_loss: f64,
}

/// Rate loss of `s`-bit (partial) sphere shaping targeting `rate` bits per amplitude.
///
/// Rate and energy are taken over the whole sphere, whose size and energy
/// histogram come from a single forward pass.
pub fn sphere_rate_loss(m: u32, shaped_bits: u32, rate: f64, n: usize) -> Result<RateLossPoint> {
    let u = m - 1 - shaped_bits;
    let k = (n as f64 * (rate - f64::from(u))).round() as u64;
    let cfg = PessConfig::for_input_bits(m, shaped_bits, n, k, Precision::Exact)?;
    let energies: Vec<u64> = cfg.shaper_amplitudes().iter().map(|&a| u64::from(a * a)).collect();
    let hist = sphere_histogram(n, &energies, cfg.e_max)?;
    let total: num_bigint::BigUint = hist.iter().map(|(_, c)| c.clone()).sum();
    let weighted: num_bigint::BigUint = hist.iter().map(|(e, c)| c * num_bigint::BigUint::from(*e)).sum();
    let shaper_energy = ess::ratio(&weighted, &total) / n as f64;
    let g2 = f64::from(1u32 << (2 * u));
    let avg_energy = g2 * shaper_energy + (g2 - 1.0) / 3.0;
    let shaping_rate = log2_big(&total) / n as f64 + f64::from(u);
    Ok(RateLossPoint {
        scheme: scheme_name(m, shaped_bits),
        n,
        input_bits: total.bits() - 1,
        shaping_rate,
        avg_energy,
        rate_loss: rate_loss(shaping_rate, avg_energy, &amplitudes(m)?)?,
    })
}

fn scheme_name(m: u32, shaped_bits: u32) -> String {
    if shaped_bits == m - 1 {
        format!("ess-s{shaped_bits}")
    } else {
        format!("pess-s{shaped_bits}")
    }
}

/// Rate loss of constant-composition matching with the lowest-energy MB-rounded
/// composition carrying `round(N·rate)` bits.
pub fn ccdm_rate_loss(m: u32, rate: f64, n: usize) -> Result<RateLossPoint> {
    let amps = amplitudes(m)?;
    let k = (n as f64 * rate).round() as u64;
    let comp = ccdm_composition_for_bits(&amps, n as u64, k)?;
    let a = ccdm_analytics(&comp, &amps)?;
    let shaping_rate = log2_big(&comp.num_sequences()) / n as f64;
    Ok(RateLossPoint {
        scheme: "ccdm".into(),
        n,
        input_bits: a.input_bits,
        shaping_rate,
        avg_energy: a.avg_energy,
        rate_loss: rate_loss(shaping_rate, a.avg_energy, &amps)?,
    })
}

/// Large-`N` limit of the partial shaper rate loss: the gap between the MB
/// entropy and the partial MB entropy at equal energy.
pub fn rate_loss_asymptote(m: u32, shaped_bits: u32, rate: f64) -> Result<f64> {
    let amps = amplitudes(m)?;
    let group = 1usize << (m - 1 - shaped_bits);
    let pmf = partial_mb_pmf(fit_entropy(rate, &amps, group)?, &amps, group)?;
    rate_loss(pmf.entropy(), pmf.avg_energy(), &amps)
}

/// Rate-loss curves of all shapers over a list of block lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateLossCurves {
    pub points: Vec<RateLossPoint>,
    /// `(scheme, asymptote)` for partial shapers.
    pub asymptotes: Vec<(String, f64)>,
}

/// Sphere, CCDM and uniform rate-loss curves. CCDM points are omitted where no
/// composition reaches the rate.
pub fn rate_loss_curves(m: u32, rate: f64, block_lengths: &[usize]) -> Result<RateLossCurves> {
    use rayon::prelude::*;
    let mut jobs: Vec<(Option<u32>, usize)> = Vec::new();
    for s in (1..m).rev() {
        jobs.extend(block_lengths.iter().map(|&n| (Some(s), n)));
    }
    jobs.extend(block_lengths.iter().map(|&n| (None, n)));
    let points = jobs
        .par_iter()
        .map(|&(s, n)| match s {
            Some(s) => sphere_rate_loss(m, s, rate, n).map(Some),
            // no composition of length n reaches the rate
            None => match ccdm_rate_loss(m, rate, n) {
                Err(Error::Infeasible(_)) => Ok(None),
                other => other.map(Some),
            },
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<RateLossPoint> = points.into_iter().flatten().collect();
    let amps = amplitudes(m)?;
    let uniform_energy = amps.iter().map(|&a| f64::from(a * a)).sum::<f64>() / amps.len() as f64;
    for &n in block_lengths {
        points.push(RateLossPoint {
            scheme: "uniform".into(),
            n,
            input_bits: (n as f64 * rate).round() as u64,
            shaping_rate: rate,
            avg_energy: uniform_energy,
            rate_loss: rate_loss(rate, uniform_energy, &amps)?,
        });
    }
    let asymptotes = (1..m - 1)
        .rev()
        .map(|s| Ok((scheme_name(m, s), rate_loss_asymptote(m, s, rate)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateLossCurves { points, asymptotes })
}

/// Block length where curve `a` drops below curve `b`, by linear interpolation
/// between the first pair of common block lengths that bracket the sign change.
pub fn crossover(a: &[RateLossPoint], b: &[RateLossPoint]) -> Option<f64> {
    let mut pairs: Vec<(usize, f64)> = a
        .iter()
        .filter_map(|p| {
            b.iter()
                .find(|q| q.n == p.n)
                .map(|q| (p.n, p.rate_loss - q.rate_loss))
        })
        .collect();
    pairs.sort_by_key(|(n, _)| *n);
    pairs.windows(2).find_map(|w| {
        let ((n0, d0), (n1, d1)) = (w[0], w[1]);
        (d0 > 0.0 && d1 <= 0.0).then(|| n0 as f64 + d0 / (d0 - d1) * (n1 - n0) as f64)
    })
}

/// Number with six significant digits, no exponent for moderate magnitudes.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=14).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    // re-check after rounding (e.g. 9.999995 → 10.0000)
    let s = format!("{x:.decimals$}");
    let rounded: f64 = s.parse().unwrap_or(x);
    let mag2 = rounded.abs().log10().floor() as i32;
    if mag2 != mag {
        let decimals = (5 - mag2).max(0) as usize;
        format!("{rounded:.decimals$}")
    } else {
        s
    }
}

pub fn gap_csv(curve: &[GapPoint]) -> String {
    let mut out = String::from("H_X,delta_snr_db\n");
    for p in curve {
        out.push_str(&format!("{},{}\n", fmt_sig(p.h_x), fmt_sig(p.delta_snr_db)));
    }
    out
}

pub fn rate_loss_csv(points: &[RateLossPoint]) -> String {
    let mut out = String::from("scheme,n,input_bits,shaping_rate,avg_energy,rate_loss\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.scheme,
            p.n,
            p.input_bits,
            fmt_sig(p.shaping_rate),
            fmt_sig(p.avg_energy),
            fmt_sig(p.rate_loss)
        ));
    }
    out
}

pub fn fer_csv(results: &[FerResult], config_id: &str) -> String {
    let mut out = String::from("snr_db,frames,frame_errors,fer,ci_low,ci_high,config_id\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_sig(r.snr_db),
            r.frames,
            r.frame_errors,
            fmt_sig(r.fer),
            fmt_sig(r.ci_low),
            fmt_sig(r.ci_high),
            config_id
        ));
    }
    out
}
