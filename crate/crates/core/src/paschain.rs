//! Probabilistic amplitude shaping link over the AWGN channel.
//!
//! Frame layout for `N` symbols of `2^m`-ASK and a systematic code of length
//! `m·N`:
//!
//! - data: `k` shaper bits, then `u·N` uniform amplitude bits (level by
//!   level), then `γ·N` extra bits;
//! - encoder input: the `(m−1)` amplitude label bits of every symbol
//!   (symbol-major, most significant first) followed by the `γ·N` extra bits;
//! - signs: codeword bits `(m−1)·N .. m·N`, i.e. the extra bits followed by
//!   the parity bits. Bit 0 is `+1`.
//!
//! The receiver demaps with the operational amplitude distribution as prior,
//! decodes the whole codeword and inverts the shaper. A frame is in error if
//! any data bit differs or the decoded amplitudes fall outside the shaper's
//! image.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::air::{db_to_linear, InputSpec, SignalPoint};
use crate::constellation::{sign_from_bit, AmplitudeLabeling, AskAlphabet};
use crate::distributions::AmplitudePmf;
use crate::fec::{load_code, CodeRate, QcLdpcCode, CODE_LENGTH, DEFAULT_MAX_ITER};
use crate::pess::{bits_to_index, index_to_bits, PessConfig, PessShaper, Precision};
use crate::{Error, Result};

/// Amplitude source of a link.
#[derive(Debug, Clone)]
pub enum Scheme {
    /// All amplitude bits are data bits.
    Uniform,
    /// Amplitudes from a (partial) enumerative shaper.
    Shaped(Arc<PessShaper>),
}

/// The four 16-ASK links compared at 3 bit/1-D with 648-bit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardLink {
    Uniform,
    Ess,
    Pess2,
    Pess1,
}

impl StandardLink {
    pub const ALL: [StandardLink; 4] = [
        StandardLink::Uniform,
        StandardLink::Ess,
        StandardLink::Pess2,
        StandardLink::Pess1,
    ];

    /// Shaped amplitude bit-levels, `None` for uniform signaling.
    pub fn shaped_bits(self) -> Option<u32> {
        match self {
            StandardLink::Uniform => None,
            StandardLink::Ess => Some(3),
            StandardLink::Pess2 => Some(2),
            StandardLink::Pess1 => Some(1),
        }
    }
}

/// A fully specified link.
#[derive(Debug, Clone)]
pub struct PasConfig {
    m: u32,
    block_length: usize,
    code: Arc<QcLdpcCode>,
    scheme: Scheme,
    extra_bits: usize,
    labeling: AmplitudeLabeling,
    input: InputSpec,
    max_iter: usize,
}

impl PasConfig {
    pub fn uniform(m: u32, code: Arc<QcLdpcCode>) -> Result<Self> {
        let alphabet = AskAlphabet::new(m)?;
        let priors = AmplitudePmf::uniform(alphabet.amplitudes());
        Self::assemble(m, code, Scheme::Uniform, priors)
    }

    pub fn shaped(shaper: PessShaper, code: Arc<QcLdpcCode>) -> Result<Self> {
        let priors = shaper.induced_pmf()?;
        let m = shaper.config().m;
        Self::assemble(m, code, Scheme::Shaped(Arc::new(shaper)), priors)
    }

    fn assemble(m: u32, code: Arc<QcLdpcCode>, scheme: Scheme, priors: AmplitudePmf) -> Result<Self> {
        let n = code.n();
        if n % m as usize != 0 {
            return Err(Error::InvalidParameter(format!(
                "code length {n} is not a multiple of m = {m}"
            )));
        }
        let block_length = n / m as usize;
        let label_bits = (m as usize - 1) * block_length;
        if code.k() < label_bits {
            return Err(Error::InvalidParameter(format!(
                "code rate below (m-1)/m: {} information bits for {label_bits} amplitude bits",
                code.k()
            )));
        }
        if let Scheme::Shaped(s) = &scheme {
            if s.block_length() != block_length {
                return Err(Error::InvalidParameter(format!(
                    "shaper block length {} does not match {block_length} symbols per codeword",
                    s.block_length()
                )));
            }
        }
        let labeling = AmplitudeLabeling::brgc(m - 1);
        let input = InputSpec::new(priors, labeling.clone())?;
        Ok(PasConfig {
            m,
            block_length,
            extra_bits: code.k() - label_bits,
            code,
            scheme,
            labeling,
            input,
            max_iter: DEFAULT_MAX_ITER,
        })
    }

    /// One of the four reference links, `N = 162`, `R_t = 3`.
    pub fn standard(link: StandardLink, precision: Precision) -> Result<Self> {
        const M: u32 = 4;
        const TARGET_BITS: usize = 3 * CODE_LENGTH / 4;
        match link.shaped_bits() {
            None => Self::uniform(M, Arc::new(load_code(CodeRate::ThreeQuarters, CODE_LENGTH)?)),
            Some(s) => {
                let code = Arc::new(load_code(CodeRate::FiveSixths, CODE_LENGTH)?);
                let n = CODE_LENGTH / M as usize;
                let extra = code.k() - (M as usize - 1) * n;
                let uniform = (M - 1 - s) as usize * n;
                let k = TARGET_BITS - extra - uniform;
                let cfg = PessConfig::for_input_bits(M, s, n, k as u64, precision)?;
                Self::shaped(PessShaper::build(cfg)?, code)
            }
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn code(&self) -> &QcLdpcCode {
        &self.code
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Amplitude distribution used as demapper prior.
    pub fn priors(&self) -> &AmplitudePmf {
        self.input.pmf()
    }

    /// `E[X²]` of the channel input.
    pub fn signal_energy(&self) -> f64 {
        self.input.energy()
    }

    /// Shaper input bits `k` (for uniform signaling, the amplitude label bits).
    pub fn shaper_bits(&self) -> usize {
        match &self.scheme {
            Scheme::Uniform => 0,
            Scheme::Shaped(s) => s.input_bits() as usize,
        }
    }

    /// Uniform amplitude data bits per frame.
    pub fn uniform_level_bits(&self) -> usize {
        match &self.scheme {
            Scheme::Uniform => (self.m as usize - 1) * self.block_length,
            Scheme::Shaped(s) => s.uniform_bits() as usize * self.block_length,
        }
    }

    /// Sign bits carrying data, `γ·N`.
    pub fn extra_bits(&self) -> usize {
        self.extra_bits
    }

    pub fn gamma(&self) -> f64 {
        self.extra_bits as f64 / self.block_length as f64
    }

    /// Data bits per frame.
    pub fn data_bits(&self) -> usize {
        self.shaper_bits() + self.uniform_level_bits() + self.extra_bits
    }

    /// Transmission rate in bit/1-D.
    pub fn rate(&self) -> f64 {
        self.data_bits() as f64 / self.block_length as f64
    }

    /// Short identifier used in result tables.
    pub fn id(&self) -> String {
        match &self.scheme {
            Scheme::Uniform => format!("uniform-m{}", self.m),
            Scheme::Shaped(s) if s.uniform_bits() == 0 => format!("ess-m{}", self.m),
            Scheme::Shaped(s) => format!("pess-m{}-s{}", self.m, s.config().shaped_bits),
        }
    }

    /// Noise standard deviation at the given SNR.
    pub fn sigma(&self, snr_db: f64) -> f64 {
        (self.signal_energy() / db_to_linear(snr_db)).sqrt()
    }

    fn amplitudes_and_labels(&self, data: &[u8]) -> Result<(Vec<u32>, Vec<u8>)> {
        let n = self.block_length;
        let nb = self.m as usize - 1;
        let amplitudes = match &self.scheme {
            Scheme::Uniform => data[..nb * n]
                .chunks(nb)
                .map(|bits| {
                    let label = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
                    self.labeling.amplitude(label).expect("label fits")
                })
                .collect(),
            Scheme::Shaped(shaper) => {
                let k = shaper.input_bits() as usize;
                let message = bits_to_index(&data[..k]);
                let levels: Vec<Vec<u8>> = data[k..k + self.uniform_level_bits()]
                    .chunks(n)
                    .map(|c| c.to_vec())
                    .collect();
                shaper.shape(&message, &levels)?
            }
        };
        let mut labels = Vec::with_capacity(nb * n);
        for &a in &amplitudes {
            labels.extend(self.labeling.bits(a).expect("alphabet amplitude"));
        }
        Ok((amplitudes, labels))
    }
}

/// Maps data bits to the signed channel input sequence.
pub fn transmit(data: &[u8], config: &PasConfig) -> Result<Vec<i32>> {
    Ok(transmit_codeword(data, config)?.0)
}

/// Channel input together with the transmitted codeword.
pub fn transmit_codeword(data: &[u8], config: &PasConfig) -> Result<(Vec<i32>, Vec<u8>)> {
    if data.len() != config.data_bits() {
        return Err(Error::InvalidParameter(format!(
            "frame carries {} data bits, got {}",
            config.data_bits(),
            data.len()
        )));
    }
    let (amplitudes, mut info) = config.amplitudes_and_labels(data)?;
    info.extend_from_slice(&data[data.len() - config.extra_bits..]);
    let codeword = config.code.encode(&info)?;
    let sign_bits = &codeword[(config.m as usize - 1) * config.block_length..];
    let x = amplitudes
        .iter()
        .zip(sign_bits)
        .map(|(&a, &s)| sign_from_bit(s) * a as i32)
        .collect();
    Ok((x, codeword))
}

/// `y = x + z` with `z ~ N(0, σ²)`.
pub fn awgn<R: Rng + ?Sized>(x: &[i32], sigma: f64, rng: &mut R) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            f64::from(v) + sigma * z
        })
        .collect()
}

/// Bitwise LLR demapper with non-uniform amplitude priors.
#[derive(Debug, Clone)]
pub struct Demapper {
    m: usize,
    points: Vec<SignalPoint>,
    log_priors: Vec<f64>,
}

impl Demapper {
    pub fn new(priors: &AmplitudePmf, labeling: &AmplitudeLabeling) -> Result<Self> {
        let input = InputSpec::new(priors.clone(), labeling.clone())?;
        let points = input.points();
        let log_priors = points.iter().map(|p| p.prob.ln()).collect();
        Ok(Demapper {
            m: labeling.num_bits() as usize + 1,
            points,
            log_priors,
        })
    }

    /// LLRs of one symbol, sign bit first, then the amplitude bits.
    pub fn symbol_llrs(&self, y: f64, sigma: f64, out: &mut [f64]) {
        let scale = 0.5 / (sigma * sigma);
        let metrics: Vec<f64> = self
            .points
            .iter()
            .zip(&self.log_priors)
            .map(|(p, lp)| lp - (y - p.x) * (y - p.x) * scale)
            .collect();
        for (level, slot) in out.iter_mut().enumerate().take(self.m) {
            let shift = self.m - 1 - level;
            let mut best = [f64::NEG_INFINITY; 2];
            for (p, &mt) in self.points.iter().zip(&metrics) {
                let b = ((p.label >> shift) & 1) as usize;
                best[b] = best[b].max(mt);
            }
            let mut sums = [0.0f64; 2];
            for (p, &mt) in self.points.iter().zip(&metrics) {
                let b = ((p.label >> shift) & 1) as usize;
                sums[b] += (mt - best[b]).exp();
            }
            let l0 = best[0] + sums[0].ln();
            let l1 = best[1] + sums[1].ln();
            *slot = l0 - l1;
        }
    }
}

/// LLRs of a received block in codeword order.
pub fn demap(y: &[f64], priors: &AmplitudePmf, sigma: f64) -> Result<Vec<f64>> {
    let m = priors.amplitudes().len().trailing_zeros() + 1;
    let demapper = Demapper::new(priors, &AmplitudeLabeling::brgc(m - 1))?;
    Ok(demap_with(&demapper, y, sigma))
}

fn demap_with(demapper: &Demapper, y: &[f64], sigma: f64) -> Vec<f64> {
    let n = y.len();
    let m = demapper.m;
    let mut llrs = vec![0.0; m * n];
    let mut sym = vec![0.0; m];
    for (j, &yj) in y.iter().enumerate() {
        demapper.symbol_llrs(yj, sigma, &mut sym);
        llrs[(m - 1) * n + j] = sym[0];
        llrs[j * (m - 1)..(j + 1) * (m - 1)].copy_from_slice(&sym[1..]);
    }
    llrs
}

/// Receiver output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    /// Recovered data, `None` when the decoded amplitudes are not a shaper output.
    pub data: Option<Vec<u8>>,
    pub converged: bool,
}

/// Receiver state shared across frames.
#[derive(Debug, Clone)]
pub struct Receiver<'a> {
    config: &'a PasConfig,
    demapper: Demapper,
}

impl<'a> Receiver<'a> {
    pub fn new(config: &'a PasConfig) -> Result<Self> {
        Ok(Receiver {
            demapper: Demapper::new(config.priors(), &config.labeling)?,
            config,
        })
    }

    pub fn receive(&self, y: &[f64], sigma: f64) -> Result<Reception> {
        let cfg = self.config;
        let n = cfg.block_length;
        if y.len() != n {
            return Err(Error::InvalidParameter(format!("expected {n} samples, got {}", y.len())));
        }
        let llrs = demap_with(&self.demapper, y, sigma);
        let decoded = cfg.code.decode(&llrs, cfg.max_iter)?;
        Ok(Reception {
            data: self.recover(&decoded.bits),
            converged: decoded.converged,
        })
    }

    /// Data bits carried by a codeword, `None` if it is not a valid frame.
    pub fn recover(&self, codeword: &[u8]) -> Option<Vec<u8>> {
        let cfg = self.config;
        let n = cfg.block_length;
        let nb = cfg.m as usize - 1;
        let labels = &codeword[..nb * n];
        let extra = &codeword[nb * n..nb * n + cfg.extra_bits];
        let mut data = Vec::with_capacity(cfg.data_bits());
        match &cfg.scheme {
            Scheme::Uniform => data.extend_from_slice(labels),
            Scheme::Shaped(shaper) => {
                let amplitudes: Vec<u32> = labels
                    .chunks(nb)
                    .map(|bits| {
                        let label = bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b));
                        cfg.labeling.amplitude(label).expect("label fits")
                    })
                    .collect();
                let (message, levels) = shaper.deshape(&amplitudes).ok()?;
                data.extend(index_to_bits(&message, shaper.input_bits() as usize).ok()?);
                for level in levels {
                    data.extend(level);
                }
            }
        }
        data.extend_from_slice(extra);
        Some(data)
    }
}

/// Demaps, decodes and deshapes one received block.
pub fn receive(y: &[f64], sigma: f64, config: &PasConfig) -> Result<Reception> {
    Receiver::new(config)?.receive(y, sigma)
}

/// Monte Carlo stopping rule for one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
    /// Frames simulated between stopping checks.
    #[serde(default = "default_batch")]
    pub batch: u64,
}

fn default_batch() -> u64 {
    256
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            min_frame_errors: 100,
            max_frames: 1_000_000,
            batch: default_batch(),
        }
    }
}

/// Frame error statistics at one SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FerResult {
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    /// 95 % normal-approximation interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl FerResult {
    fn new(snr_db: f64, frames: u64, frame_errors: u64, bit_errors: u64) -> Self {
        let fer = if frames == 0 { 0.0 } else { frame_errors as f64 / frames as f64 };
        let half = if frames == 0 { 0.0 } else { 1.96 * (fer * (1.0 - fer) / frames as f64).sqrt() };
        FerResult {
            snr_db,
            frames,
            frame_errors,
            bit_errors,
            fer,
            ci_low: (fer - half).max(0.0),
            ci_high: (fer + half).min(1.0),
        }
    }
}

/// Per-frame RNG: stream `(point << 40) | frame` of the master seed.
pub fn frame_rng(seed: u64, point: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((point << 40) | frame);
    rng
}

fn run_frame(config: &PasConfig, receiver: &Receiver<'_>, sigma: f64, rng: &mut ChaCha8Rng) -> Result<(bool, u64)> {
    let data: Vec<u8> = (0..config.data_bits()).map(|_| rng.random_range(0..2u8)).collect();
    let x = transmit(&data, config)?;
    let y = awgn(&x, sigma, rng);
    let rx = receiver.receive(&y, sigma)?;
    Ok(match rx.data {
        Some(d) => {
            let errors = d.iter().zip(&data).filter(|(a, b)| a != b).count() as u64;
            (errors > 0, errors)
        }
        None => (true, data.len() as u64 / 2),
    })
}

/// FER at one SNR; `point` selects the RNG stream family.
pub fn simulate_point(config: &PasConfig, snr_db: f64, point: u64, stop: &StopRule, seed: u64) -> Result<FerResult> {
    if stop.batch == 0 {
        return Err(Error::InvalidParameter("batch size must be positive".into()));
    }
    let receiver = Receiver::new(config)?;
    let sigma = config.sigma(snr_db);
    let (mut frames, mut frame_errors, mut bit_errors) = (0u64, 0u64, 0u64);
    while frames < stop.max_frames && frame_errors < stop.min_frame_errors {
        let count = stop.batch.min(stop.max_frames - frames);
        let outcomes = (frames..frames + count)
            .into_par_iter()
            .map(|f| run_frame(config, &receiver, sigma, &mut frame_rng(seed, point, f)))
            .collect::<Result<Vec<_>>>()?;
        for (err, bits) in outcomes {
            frame_errors += u64::from(err);
            bit_errors += bits;
        }
        frames += count;
    }
    Ok(FerResult::new(snr_db, frames, frame_errors, bit_errors))
}

/// FER curve over a list of SNRs. Deterministic in `seed` for any thread count.
pub fn simulate(config: &PasConfig, snrs_db: &[f64], stop: &StopRule, seed: u64) -> Result<Vec<FerResult>> {
    snrs_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| simulate_point(config, snr, i as u64, stop, seed))
        .collect()
}

/// SNR at which the FER crosses a target, from a stepped search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerCrossing {
    pub target_fer: f64,
    /// Interpolated SNR (log-FER linear in dB).
    pub snr_db: f64,
    /// Every simulated point, sorted by SNR.
    pub points: Vec<FerResult>,
}

/// Steps the SNR from `start_db` by `step_db` until two neighbouring points
/// bracket `target_fer`, then interpolates `log10 FER` linearly.
pub fn find_fer_crossing(
    config: &PasConfig,
    target_fer: f64,
    start_db: f64,
    step_db: f64,
    stop: &StopRule,
    seed: u64,
) -> Result<FerCrossing> {
    if !(target_fer > 0.0 && target_fer < 1.0) || step_db <= 0.0 {
        return Err(Error::InvalidParameter("need 0 < target FER < 1 and a positive step".into()));
    }
    const MAX_POINTS: usize = 60;
    let point_at = |i: i64| -> Result<FerResult> {
        let snr = start_db + i as f64 * step_db;
        simulate_point(config, snr, (i + 1_000) as u64, stop, seed)
    };
    let mut points = vec![(0i64, point_at(0)?)];
    let up = points[0].1.fer > target_fer;
    let mut i = 0i64;
    loop {
        if points.len() >= MAX_POINTS {
            return Err(Error::Numerical(format!("no FER crossing of {target_fer} within {MAX_POINTS} points")));
        }
        i += if up { 1 } else { -1 };
        let r = point_at(i)?;
        let crossed = if up { r.fer <= target_fer } else { r.fer > target_fer };
        points.push((i, r));
        if crossed {
            break;
        }
    }
    points.sort_by_key(|(i, _)| *i);
    let points: Vec<FerResult> = points.into_iter().map(|(_, r)| r).collect();
    let hi = points
        .iter()
        .position(|r| r.fer <= target_fer)
        .expect("bracket found");
    let (a, b) = (&points[hi - 1], &points[hi]);
    let floor = |r: &FerResult| r.fer.max(0.5 / r.frames as f64).log10();
    let (la, lb, lt) = (floor(a), floor(b), target_fer.log10());
    let snr_db = if (la - lb).abs() < 1e-12 {
        b.snr_db
    } else {
        a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db)
    };
    Ok(FerCrossing {
        target_fer,
        snr_db,
        points,
    })
}

/// JSON description of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub m: u32,
    /// Shaped amplitude bit-levels; absent for uniform signaling.
    #[serde(default)]
    pub shaped_bits: Option<u32>,
    /// Symbols per frame; must equal code length / m when given.
    #[serde(default)]
    pub block_length: Option<usize>,
    pub code_rate: CodeRate,
    #[serde(default)]
    pub e_max: Option<u64>,
    #[serde(default)]
    pub input_bits: Option<u64>,
    #[serde(default)]
    pub precision: Precision,
    pub seed: u64,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl RunConfig {
    pub fn build(&self) -> Result<PasConfig> {
        let code = Arc::new(load_code(self.code_rate, CODE_LENGTH)?);
        let n = code.n() / self.m.max(1) as usize;
        if let Some(b) = self.block_length {
            if b != n || code.n() % self.m as usize != 0 {
                return Err(Error::InvalidParameter(format!(
                    "block length {b} does not match code length {} and m = {}",
                    code.n(),
                    self.m
                )));
            }
        }
        let cfg = match self.shaped_bits {
            None => {
                if self.e_max.is_some() || self.input_bits.is_some() {
                    return Err(Error::InvalidParameter("uniform signaling takes no shaper parameters".into()));
                }
                PasConfig::uniform(self.m, code)?
            }
            Some(s) => {
                let pess = match (self.e_max, self.input_bits) {
                    (Some(e), None) => PessConfig::new(self.m, s, n, e, self.precision)?,
                    (None, Some(k)) => PessConfig::for_input_bits(self.m, s, n, k, self.precision)?,
                    _ => {
                        return Err(Error::InvalidParameter(
                            "shaped runs need exactly one of e_max or input_bits".into(),
                        ))
                    }
                };
                PasConfig::shaped(PessShaper::build(pess)?, code)?
            }
        };
        Ok(cfg.with_max_iter(self.max_iter))
    }
}
