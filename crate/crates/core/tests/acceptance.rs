//! Acceptance criteria. Runs every check, prints one line per criterion and
//! exits non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use pess::air::{entropy_grid, gap_sweep, summarize_gap};
use pess::constellation::{pair_energy_set, EnergySet};
use pess::distributions::{ccdm_analytics, fit_entropy, mb_pmf, partial_mb_pmf, Composition};
use pess::ess::{complexity_report, find_emax, BoundedTrellis, EssTrellis, PathCounts};
use pess::fec::{load_code, CodeRate, CODE_LENGTH};
use pess::paschain::{find_fer_crossing, transmit, PasConfig, Receiver, StandardLink, StopRule};
use pess::pess::Precision;
use pess::reports::{
    complexity_table, crossover, pmf_table, rate_loss_asymptote, rate_loss_curves, shaper_table, sphere_rate_loss,
    BLOCK_LENGTH, M, SHAPING_RATE,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: a list of (check, ok, detail).
#[derive(Default)]
struct Report {
    checks: Vec<(String, bool, String)>,
}

impl Report {
    fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push((name.into(), ok, detail.into()));
    }

    fn close(&mut self, name: impl Into<String>, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.check(name, ok, format!("{got:.6} vs {want} ± {tol}"));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok, _)| *ok)
    }
}

// ---------------------------------------------------------------------------
// 1. Distribution table
// ---------------------------------------------------------------------------

const TABLE_PMFS: [[f64; 8]; 3] = [
    [0.2443, 0.2225, 0.1847, 0.1396, 0.0962, 0.0603, 0.0345, 0.0180],
    [0.2365, 0.2365, 0.1623, 0.1623, 0.0765, 0.0765, 0.0247, 0.0247],
    [0.2065, 0.2065, 0.2065, 0.2065, 0.0435, 0.0435, 0.0435, 0.0435],
];
const TABLE_ENERGY: [f64; 3] = [38.66, 39.57, 43.27];
const TABLE_GAIN: [f64; 3] = [1.40, 1.30, 0.92];

fn distribution_table(r: &mut Report) {
    let start = Instant::now();
    let rows = pmf_table(M, SHAPING_RATE).unwrap();
    let elapsed = start.elapsed();
    for (i, row) in rows.iter().enumerate() {
        let worst = row
            .probs
            .iter()
            .zip(&TABLE_PMFS[i])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        r.check(
            format!("s={} probabilities", row.shaped_bits),
            worst <= 5e-5,
            format!("max dev {worst:.2e} ≤ 5e-5"),
        );
        r.close(format!("s={} E", row.shaped_bits), row.avg_energy, TABLE_ENERGY[i], 0.01);
        r.close(format!("s={} Gs", row.shaped_bits), row.shaping_gain_db, TABLE_GAIN[i], 0.01);
    }
    r.check("runtime", elapsed < Duration::from_secs(1), format!("{elapsed:?} < 1 s"));
}

// ---------------------------------------------------------------------------
// 2. Toy trellis and brute-force sweep
// ---------------------------------------------------------------------------

fn enumerate(n: usize, energies: &[u64], e_max: u64) -> Vec<Vec<usize>> {
    let q = energies.len();
    (0..q.pow(n as u32))
        .map(|mut code| {
            let mut seq = vec![0usize; n];
            for slot in seq.iter_mut().rev() {
                *slot = code % q;
                code /= q;
            }
            seq
        })
        .filter(|seq| seq.iter().map(|&s| energies[s]).sum::<u64>() <= e_max)
        .collect()
}

fn matches_enumeration(trellis: &EssTrellis, n: usize, energies: &[u64], e_max: u64) -> bool {
    let expected = enumerate(n, energies, e_max);
    trellis.num_sequences() == BigUint::from(expected.len())
        && expected.iter().enumerate().all(|(i, seq)| {
            let index = BigUint::from(i);
            trellis.shape_symbols(&index).ok().as_ref() == Some(seq)
                && trellis.deshape_symbols(seq).ok() == Some(index)
        })
}

fn toy_trellis(r: &mut Report) {
    let toy = EssTrellis::build(4, &[1, 3, 5, 7], 28).unwrap();
    r.check(
        "T_0^0 = 19",
        toy.num_sequences() == BigUint::from(19u32),
        toy.num_sequences().to_string(),
    );
    r.check("L = 4", toy.grid().levels() == 4, toy.grid().levels().to_string());
    r.check("toy table", matches_enumeration(&toy, 4, &[1, 9, 25, 49], 28), "shape/deshape vs enumeration");

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    const CASES: usize = 1000;
    for _ in 0..CASES {
        let n = rng.random_range(1..=6usize);
        let q = rng.random_range(1..=4usize);
        let mut amps: Vec<u32> = (0..8u32).map(|i| 2 * i + 1).collect();
        amps.shuffle(&mut rng);
        amps.truncate(q);
        amps.sort_unstable();
        let energies: Vec<u64> = amps.iter().map(|&a| u64::from(a * a)).collect();
        let lo = n as u64 * energies[0];
        let hi = n as u64 * energies[q - 1];
        let e_max = rng.random_range(lo..=hi + 10);
        let trellis = EssTrellis::build(n, &amps, e_max).unwrap();
        if !matches_enumeration(&trellis, n, &energies, e_max) {
            failures += 1;
        }
    }
    r.check("random sweep", failures == 0, format!("{failures}/{CASES} mismatches"));
}

// ---------------------------------------------------------------------------
// 3. Shaper parameter table
// ---------------------------------------------------------------------------

fn shaper_parameters(r: &mut Report) {
    let start = Instant::now();
    let amps: Vec<u32> = (0..8).map(|i| 2 * i + 1).collect();
    for (s, k, want) in [(3u32, 432u64, 6514u64), (2, 270, 1626), (1, 108, 402)] {
        let shaper_amps = &amps[..1 << s];
        let e_max = find_emax(BLOCK_LENGTH, shaper_amps, k).unwrap();
        r.check(format!("E_max s={s}"), e_max == want, format!("{e_max} vs {want}"));
    }
    let comp = Composition::new(vec![34, 32, 28, 23, 18, 13, 9, 5]);
    let a = ccdm_analytics(&comp, &amps).unwrap();
    r.close("CCDM rate", a.rate, 2.667, 0.01);
    r.close("CCDM E", a.avg_energy, 48.31, 0.01);
    let rows = shaper_table(M, BLOCK_LENGTH, SHAPING_RATE).unwrap();
    for (row, want) in rows.iter().zip([39.69, 40.73, 44.44]) {
        let label = format!("{} u={}", row.method, row.uniform_bits);
        r.close(format!("{label} E operational"), row.energy_operational, want, 0.15);
        r.close(format!("{label} E all"), row.energy_all, want, 0.15);
    }
    let elapsed = start.elapsed();
    r.check("runtime", elapsed < Duration::from_secs(60), format!("{elapsed:?} < 60 s"));
}

// ---------------------------------------------------------------------------
// 4. Complexity table
// ---------------------------------------------------------------------------

fn complexity(r: &mut Report) {
    let rows = complexity_table(M, BLOCK_LENGTH, SHAPING_RATE).unwrap();
    let want = [(795usize, "421.15", 182u64), (184, "71.23", 57), (31, "9.47", 15)];
    for (row, (levels, kb, ops)) in rows.iter().zip(want) {
        let s = row.shaped_bits;
        r.check(format!("L s={s}"), row.levels == levels, format!("{} vs {levels}", row.levels));
        let got = format!("{:.2}", row.bounded_storage_kb);
        r.check(format!("storage s={s}"), got == kb, format!("{got} kB vs {kb}"));
        r.check(
            format!("ops s={s}"),
            row.bounded_ops_per_dim == ops,
            format!("{} vs {ops}", row.bounded_ops_per_dim),
        );
    }
    // closed form from the levels alone
    let report = complexity_report(795, 162, 17, 9, 8, SHAPING_RATE);
    r.check(
        "closed form",
        format!("{:.2}", report.bounded_storage_kb()) == "421.15" && report.bounded_ops_per_dim == 182,
        format!("{:.2} kB, {}", report.bounded_storage_kb(), report.bounded_ops_per_dim),
    );
}

// ---------------------------------------------------------------------------
// 5. Gap-to-capacity sweep
// ---------------------------------------------------------------------------

fn gap_landmarks(r: &mut Report) {
    let grid = entropy_grid(3.0, 4, 0.01);
    for (s, want) in [(3u32, 1.08), (2, 1.03), (1, 0.76)] {
        let curve = gap_sweep(4, s, 3.0, &grid).unwrap();
        let summary = summarize_gap(&curve).unwrap();
        r.close(format!("gain s={s}"), summary.gain_db, want, 0.03);
        if s == 3 {
            r.close("optimum H(X) s=3", summary.best_h_x, 3.63, 0.02);
        }
    }
}

// ---------------------------------------------------------------------------
// 6. Rate-loss curves
// ---------------------------------------------------------------------------

fn rate_loss(r: &mut Report) {
    r.close("asymptote s=2", rate_loss_asymptote(4, 2, SHAPING_RATE).unwrap(), 0.015, 0.002);
    r.close("asymptote s=1", rate_loss_asymptote(4, 1, SHAPING_RATE).unwrap(), 0.071, 0.002);
    let ess = sphere_rate_loss(4, 3, SHAPING_RATE, BLOCK_LENGTH).unwrap();
    r.check(
        "ESS at N=162 < 0.01",
        ess.rate_loss < 0.01,
        format!("{:.5} bit/amp", ess.rate_loss),
    );
    let ns: Vec<usize> = (200..=400).step_by(20).collect();
    let curves = rate_loss_curves(4, SHAPING_RATE, &ns).unwrap();
    let of = |scheme: &str| -> Vec<_> { curves.points.iter().filter(|p| p.scheme == scheme).cloned().collect() };
    let x = crossover(&of("ccdm"), &of("pess-s1"));
    r.check(
        "CCDM vs 1-bit crossover in [240, 360]",
        x.is_some_and(|n| (240.0..=360.0).contains(&n)),
        format!("N = {x:?}"),
    );
}

// ---------------------------------------------------------------------------
// 7. FER experiment
// ---------------------------------------------------------------------------

fn fer_experiment(r: &mut Report) {
    fer_gains(r, 1e-2, [21.5, 20.0, 20.0, 20.5]);
}

/// Same experiment at FER 1e-3; only run when `PESS_ACCEPTANCE_FULL` is set.
fn fer_experiment_full(r: &mut Report) {
    fer_gains(r, 1e-3, [22.25, 20.75, 20.75, 21.0]);
}

fn fer_gains(r: &mut Report, target: f64, starts: [f64; 4]) {
    const SEED: u64 = 20_190_611;
    let stop = StopRule {
        min_frame_errors: 100,
        max_frames: 1_000_000,
        batch: 256,
    };
    let links = [StandardLink::Uniform, StandardLink::Ess, StandardLink::Pess2, StandardLink::Pess1];
    let runs = links.into_iter().zip(starts);
    let mut snr = Vec::new();
    for (link, start) in runs {
        let cfg = PasConfig::standard(link, Precision::Exact).unwrap();
        let c = find_fer_crossing(&cfg, target, start, 0.25, &stop, SEED).unwrap();
        let enough = c.points.iter().all(|p| p.frame_errors >= 100);
        r.check(format!("{} ≥100 errors per point", cfg.id()), enough, "");
        let monotone = c.points.windows(2).all(|w| w[1].fer <= w[0].fer);
        let table: Vec<String> = c.points.iter().map(|p| format!("{:.2}:{:.2e}", p.snr_db, p.fer)).collect();
        r.check(format!("{} monotone", cfg.id()), monotone, table.join(" "));
        snr.push(c.snr_db);
    }
    let [uniform, ess, pess2, pess1] = [snr[0], snr[1], snr[2], snr[3]];
    r.close("ESS gain", uniform - ess, 1.35, 0.15);
    r.close("2-bit P-ESS gain", uniform - pess2, 1.27, 0.15);
    r.close("1-bit P-ESS gain", uniform - pess1, 0.95, 0.15);
    r.check("ESS vs 2-bit gap ≤ 0.2", (pess2 - ess).abs() <= 0.2, format!("{:.3} dB", pess2 - ess));
    r.check(
        "ordering",
        ess < pess2 && pess2 < pess1 && pess1 < uniform,
        format!("uniform {uniform:.3}, ESS {ess:.3}, P-ESS2 {pess2:.3}, P-ESS1 {pess1:.3} dB"),
    );
}

// ---------------------------------------------------------------------------
// 8. Property suites
// ---------------------------------------------------------------------------

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..2u8)).collect()
}

fn properties(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    for link in StandardLink::ALL {
        let cfg = PasConfig::standard(link, Precision::Exact).unwrap();
        let rx = Receiver::new(&cfg).unwrap();
        let errors = (0..1000)
            .filter(|_| {
                let data = random_bits(&mut rng, cfg.data_bits());
                let y: Vec<f64> = transmit(&data, &cfg).unwrap().iter().map(|&v| f64::from(v)).collect();
                rx.receive(&y, 1e-3).unwrap().data.as_deref() != Some(&data[..])
            })
            .count();
        r.check(format!("noiseless {}", cfg.id()), errors == 0, format!("{errors}/1000 frame errors"));
    }

    let amps = [1u32, 3, 5, 7];
    let mut bad = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=30usize);
        let nm = rng.random_range(2..=12u32);
        let e_max = rng.random_range(n as u64..=49 * n as u64);
        let t = BoundedTrellis::build(n, &amps, e_max, nm, 16).unwrap();
        let size = t.num_sequences();
        for _ in 0..50 {
            let index = BigUint::from(rng.random::<u64>()) % &size;
            let ok = t.shape(&index).and_then(|seq| t.deshape(&seq)).ok() == Some(index);
            bad += usize::from(!ok);
        }
    }
    r.check("bounded bijection", bad == 0, format!("{bad}/10000 failures"));

    let mut mismatched = 0;
    for n in 1..=10usize {
        for q in 1..=4usize {
            let base = EnergySet::plain(q);
            let paired = pair_energy_set(&base, 1).unwrap();
            let e = base.energies();
            for e_max in (n as u64 * e[0]..=n as u64 * e[q - 1]).step_by(4) {
                let a = EssTrellis::from_energies(n, e, e_max).unwrap();
                let b = EssTrellis::from_energies(n, paired.energies(), 4 * e_max + n as u64).unwrap();
                mismatched += usize::from(a.counts() != b.counts());
            }
        }
    }
    r.check("paired energy counts", mismatched == 0, format!("{mismatched} mismatches"));

    let full: Vec<u32> = (0..16).map(|i| 2 * i + 1).collect();
    let half: Vec<u32> = (0..8).map(|i| 2 * i + 1).collect();
    let worst = [2.3, 8.0 / 3.0, 3.2]
        .iter()
        .map(|&h| {
            let p = partial_mb_pmf(fit_entropy(h, &full, 2).unwrap(), &full, 2).unwrap();
            let b = mb_pmf(fit_entropy(h - 1.0, &half, 1).unwrap(), &half).unwrap();
            p.probs()
                .chunks(2)
                .zip(b.probs())
                .map(|(pair, q)| (pair[0] + pair[1] - q).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    r.check("paired energy PMF", worst < 1e-9, format!("max dev {worst:.1e}"));

    let mut violations = 0;
    for rate in CodeRate::ALL {
        let code = load_code(rate, CODE_LENGTH).unwrap();
        for _ in 0..250 {
            let a = random_bits(&mut rng, code.k());
            let b = random_bits(&mut rng, code.k());
            let ca = code.encode(&a).unwrap();
            let cb = code.encode(&b).unwrap();
            let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let csum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            let decoded = code.decode(&ca.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect::<Vec<_>>(), 50);
            let ok = code.is_codeword(&ca)
                && code.encode(&sum).unwrap() == csum
                && decoded.is_ok_and(|d| d.converged && d.bits == ca);
            violations += usize::from(!ok);
        }
    }
    r.check("LDPC syndrome/linearity", violations == 0, format!("{violations}/1000 violations"));
}

fn main() -> ExitCode {
    let mut criteria: Vec<(&str, fn(&mut Report))> = vec![
        ("1 distribution table", distribution_table),
        ("2 toy trellis", toy_trellis),
        ("3 shaper parameters", shaper_parameters),
        ("4 complexity", complexity),
        ("5 gap-to-capacity", gap_landmarks),
        ("6 rate loss", rate_loss),
        ("7 FER", fer_experiment),
        ("8 properties", properties),
    ];
    if std::env::var_os("PESS_ACCEPTANCE_FULL").is_some() {
        criteria.push(("7b FER at 1e-3", fer_experiment_full));
    }
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut report = Report::default();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut report)));
        let ok = outcome.is_ok() && report.passed();
        failed += usize::from(!ok);
        println!("{} criterion {name} ({:.1?})", if ok { "PASS" } else { "FAIL" }, start.elapsed());
        for (check, pass, detail) in &report.checks {
            println!("    [{}] {check}: {detail}", if *pass { "ok" } else { "x " });
        }
        if outcome.is_err() {
            println!("    [x ] panicked");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
