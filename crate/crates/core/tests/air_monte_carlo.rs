use pess::air::{bmd_rate, symbol_mi, InputSpec};
use pess::constellation::{AmplitudeLabeling, AskAlphabet};
use pess::distributions::{fit_entropy, mb_pmf, partial_mb_pmf, AmplitudePmf};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SAMPLES: usize = 400_000;

struct Point {
    x: f64,
    prob: f64,
    bits: Vec<u8>,
}

fn constellation(pmf: &AmplitudePmf, m: u32) -> Vec<Point> {
    let labeling = AmplitudeLabeling::brgc(m - 1);
    let mut out = Vec::new();
    for (&a, &p) in pmf.amplitudes().iter().zip(pmf.probs()) {
        let amp_bits = labeling.bits(a).unwrap();
        for sign in [1.0, -1.0] {
            let mut bits = vec![u8::from(sign < 0.0)];
            bits.extend(&amp_bits);
            out.push(Point {
                x: sign * f64::from(a),
                prob: p / 2.0,
                bits,
            });
        }
    }
    out
}

/// Sample estimate of `H(X) − Σ H(B_i | Y)` and `I(X;Y)` for a discrete input.
fn monte_carlo(points: &[Point], snr_db: f64, seed: u64) -> (f64, f64) {
    let energy: f64 = points.iter().map(|p| p.prob * p.x * p.x).sum();
    let sigma = (energy / 10f64.powf(snr_db / 10.0)).sqrt();
    let h_x: f64 = points.iter().filter(|p| p.prob > 0.0).map(|p| -p.prob * p.prob.log2()).sum();
    let nbits = points[0].bits.len();
    let dist = WeightedIndex::new(points.iter().map(|p| p.prob)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bit_equiv, mut sym_equiv) = (0.0, 0.0);
    let mut like = vec![0.0; points.len()];
    for _ in 0..SAMPLES {
        let t = dist.sample(&mut rng);
        let n: f64 = rng.sample(StandardNormal);
        let y = points[t].x + sigma * n;
        let d_ref = (y - points[t].x).powi(2);
        for (l, p) in like.iter_mut().zip(points) {
            *l = p.prob * (-((y - p.x).powi(2) - d_ref) / (2.0 * sigma * sigma)).exp();
        }
        let total: f64 = like.iter().sum();
        sym_equiv += -(like[t] / total).log2();
        for i in 0..nbits {
            let same: f64 = like
                .iter()
                .zip(points)
                .filter(|(_, p)| p.bits[i] == points[t].bits[i])
                .map(|(l, _)| l)
                .sum();
            bit_equiv += -(same / total).log2();
        }
    }
    let s = SAMPLES as f64;
    ((h_x - bit_equiv / s).max(0.0), h_x - sym_equiv / s)
}

fn check(pmf: AmplitudePmf, m: u32, snrs: &[f64]) {
    let points = constellation(&pmf, m);
    let input = InputSpec::new(pmf, AmplitudeLabeling::brgc(m - 1)).unwrap();
    for (i, &snr) in snrs.iter().enumerate() {
        let (bmd_mc, mi_mc) = monte_carlo(&points, snr, 1000 + i as u64);
        let bmd = bmd_rate(&input, snr).unwrap();
        let mi = symbol_mi(&input, snr).unwrap();
        assert!((bmd - bmd_mc).abs() < 0.005, "snr {snr}: quadrature {bmd}, monte carlo {bmd_mc}");
        assert!((mi - mi_mc).abs() < 0.005, "snr {snr}: quadrature {mi}, monte carlo {mi_mc}");
    }
}

#[test]
fn bmd_rate_matches_monte_carlo_for_mb_input() {
    let amps = AskAlphabet::new(4).unwrap().amplitudes().to_vec();
    let pmf = mb_pmf(fit_entropy(8.0 / 3.0, &amps, 1).unwrap(), &amps).unwrap();
    check(pmf, 4, &[5.0, 10.0, 14.0, 17.0, 20.0]);
}

#[test]
fn bmd_rate_matches_monte_carlo_for_partial_mb_input() {
    let amps = AskAlphabet::new(4).unwrap().amplitudes().to_vec();
    let pmf = partial_mb_pmf(fit_entropy(2.7, &amps, 2).unwrap(), &amps, 2).unwrap();
    check(pmf, 4, &[8.0, 18.0]);
}

#[test]
fn bmd_rate_matches_monte_carlo_for_uniform_8ask() {
    let amps = AskAlphabet::new(3).unwrap().amplitudes().to_vec();
    check(AmplitudePmf::uniform(&amps), 3, &[0.0, 12.0]);
}
