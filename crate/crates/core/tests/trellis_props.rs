use std::collections::HashSet;

use num_bigint::BigUint;
use pess::constellation::{pair_energy_set, EnergySet};
use pess::distributions::{fit_entropy, mb_pmf, partial_mb_pmf};
use pess::ess::{BoundedTrellis, EssTrellis, PathCounts};
use pess::Error;
use proptest::prelude::*;

/// All sequences over `alphabet` (in symbol order) with total energy at most `e_max`,
/// in lexicographic order.
fn enumerate(n: usize, energies: &[u64], e_max: u64) -> Vec<Vec<usize>> {
    let q = energies.len();
    let mut out = Vec::new();
    let total = q.pow(n as u32);
    for mut code in 0..total {
        let mut seq = vec![0usize; n];
        for slot in seq.iter_mut().rev() {
            *slot = code % q;
            code /= q;
        }
        if seq.iter().map(|&s| energies[s]).sum::<u64>() <= e_max {
            out.push(seq);
        }
    }
    out
}

fn amplitude_set() -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::btree_set(0u32..8, 1..=4).prop_map(|s| s.into_iter().map(|i| 2 * i + 1).collect())
}

fn energy_set() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::btree_set(1u64..60, 1..=4).prop_map(|s| s.into_iter().collect())
}

fn check_against_enumeration<T: PathCounts>(trellis: &T, n: usize, energies: &[u64], e_max: u64) {
    let expected = enumerate(n, energies, e_max);
    assert_eq!(trellis.num_sequences(), BigUint::from(expected.len()));
    for (i, seq) in expected.iter().enumerate() {
        let index = BigUint::from(i);
        assert_eq!(&trellis.shape_symbols(&index).unwrap(), seq);
        assert_eq!(trellis.deshape_symbols(seq).unwrap(), index);
    }
    assert!(matches!(
        trellis.shape_symbols(&BigUint::from(expected.len())),
        Err(Error::InvalidIndex(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn amplitude_trellis_matches_enumeration(
        n in 1usize..=6,
        amps in amplitude_set(),
        slack in 0.0f64..=1.2,
    ) {
        let energies: Vec<u64> = amps.iter().map(|&a| u64::from(a * a)).collect();
        let lo = n as u64 * energies[0];
        let hi = n as u64 * energies[energies.len() - 1];
        let e_max = lo + ((hi - lo) as f64 * slack) as u64;
        let trellis = EssTrellis::build(n, &amps, e_max).unwrap();
        check_against_enumeration(&trellis, n, &energies, e_max);
        let expected = enumerate(n, &energies, e_max);
        for (i, seq) in expected.iter().enumerate() {
            let amps_seq: Vec<u32> = seq.iter().map(|&s| amps[s]).collect();
            prop_assert_eq!(trellis.shape(&BigUint::from(i)).unwrap(), amps_seq.clone());
            prop_assert_eq!(trellis.deshape(&amps_seq).unwrap(), BigUint::from(i));
        }
        // sequences outside the sphere are rejected
        let outside = vec![*amps.last().unwrap(); n];
        if energies[energies.len() - 1] * n as u64 > e_max {
            prop_assert!(matches!(trellis.deshape(&outside), Err(Error::InvalidSequence(_))));
        }
    }

    #[test]
    fn energy_trellis_matches_enumeration(
        n in 1usize..=6,
        energies in energy_set(),
        slack in 0.0f64..=1.2,
    ) {
        let lo = n as u64 * energies[0];
        let hi = n as u64 * energies[energies.len() - 1];
        let e_max = lo + ((hi - lo) as f64 * slack) as u64;
        let trellis = EssTrellis::from_energies(n, &energies, e_max).unwrap();
        check_against_enumeration(&trellis, n, &energies, e_max);
    }

    #[test]
    fn induced_stats_match_enumeration(
        n in 1usize..=5,
        amps in amplitude_set(),
        slack in 0.0f64..=1.0,
    ) {
        let energies: Vec<u64> = amps.iter().map(|&a| u64::from(a * a)).collect();
        let lo = n as u64 * energies[0];
        let hi = n as u64 * energies[energies.len() - 1];
        let e_max = lo + ((hi - lo) as f64 * slack) as u64;
        let trellis = EssTrellis::build(n, &amps, e_max).unwrap();
        let seqs = enumerate(n, &energies, e_max);
        let stats = trellis.induced_stats();
        let mut freq = vec![0f64; amps.len()];
        let mut energy = 0f64;
        for seq in &seqs {
            for &s in seq {
                freq[s] += 1.0;
                energy += energies[s] as f64;
            }
        }
        let total = (seqs.len() * n) as f64;
        for (p, f) in stats.pmf.iter().zip(&freq) {
            prop_assert!((p - f / total).abs() < 1e-12);
        }
        prop_assert!((stats.avg_energy - energy / total).abs() < 1e-9 * energy.max(1.0));
    }

    #[test]
    fn bounded_trellis_is_a_bijection_onto_its_image(
        n in 1usize..=24,
        mantissa_bits in 2u32..=12,
        slack in 0.0f64..=1.0,
        samples in proptest::collection::vec(any::<u64>(), 64),
    ) {
        let amps = [1u32, 3, 5, 7];
        let lo = n as u64;
        let hi = n as u64 * 49;
        let e_max = lo + ((hi - lo) as f64 * slack) as u64;
        let exact = EssTrellis::build(n, &amps, e_max).unwrap();
        let bounded = BoundedTrellis::build(n, &amps, e_max, mantissa_bits, 16).unwrap();
        let grid = bounded.grid();
        for col in 0..=n {
            for j in 0..grid.levels() {
                let b = bounded.count(col, j);
                prop_assert!(*b <= *exact.count(col, j));
                let tz = b.trailing_zeros().unwrap_or(0);
                prop_assert!((&*b >> tz).bits() <= u64::from(mantissa_bits));
            }
        }
        let size = bounded.num_sequences();
        let size_u64 = u64::try_from(&size).ok();
        let indices: Vec<BigUint> = match size_u64 {
            Some(s) if s <= 4096 => (0..s).map(BigUint::from).collect(),
            _ => samples.iter().map(|&r| BigUint::from(r) % &size).collect(),
        };
        let mut seen = HashSet::new();
        for index in &indices {
            let seq = bounded.shape(index).unwrap();
            let energy: u64 = seq.iter().map(|&a| u64::from(a * a)).sum();
            prop_assert!(energy <= e_max);
            prop_assert_eq!(&bounded.deshape(&seq).unwrap(), index);
            seen.insert(seq);
        }
        let distinct: HashSet<&BigUint> = indices.iter().collect();
        prop_assert_eq!(seen.len(), distinct.len());
    }

    #[test]
    fn paired_energy_set_gives_identical_counts(n in 1usize..=12, q in 1usize..=4, slack in 0.0f64..=1.0) {
        let base = EnergySet::plain(q);
        let paired = pair_energy_set(&base, 1).unwrap();
        let e = base.energies();
        let lo = n as u64 * e[0];
        let hi = n as u64 * e[q - 1];
        let e_max = lo + ((hi - lo) as f64 * slack) as u64;
        let a = EssTrellis::from_energies(n, e, e_max).unwrap();
        let b = EssTrellis::from_energies(n, paired.energies(), 4 * e_max + n as u64).unwrap();
        prop_assert_eq!(a.counts(), b.counts());
        let total = a.num_sequences();
        for r in [0u64, 1, 7, 1000, u64::MAX] {
            let index = BigUint::from(r) % &total;
            prop_assert_eq!(a.shape_symbols(&index).unwrap(), b.shape_symbols(&index).unwrap());
        }
    }
}

#[test]
fn toy_trellis_full_table() {
    let trellis = EssTrellis::build(4, &[1, 3, 5, 7], 28).unwrap();
    assert_eq!(trellis.num_sequences(), BigUint::from(19u32));
    assert_eq!(trellis.grid().levels(), 4);
    check_against_enumeration(&trellis, 4, &[1, 9, 25, 49], 28);
}

#[test]
fn paired_energies_are_four_e_plus_one() {
    let base = EnergySet::plain(8);
    let paired = pair_energy_set(&base, 1).unwrap();
    for (e, e1) in base.energies().iter().zip(paired.energies()) {
        assert_eq!(*e1, 4 * e + 1);
    }
}

#[test]
fn mb_over_paired_energies_equals_partial_mb_groups() {
    let full: Vec<u32> = (0..16).map(|i| 2 * i + 1).collect();
    let half: Vec<u32> = (0..8).map(|i| 2 * i + 1).collect();
    for h in [2.2, 8.0 / 3.0, 2.9, 3.5] {
        let partial = partial_mb_pmf(fit_entropy(h, &full, 2).unwrap(), &full, 2).unwrap();
        let base = mb_pmf(fit_entropy(h - 1.0, &half, 1).unwrap(), &half).unwrap();
        for (j, pair) in partial.probs().chunks(2).enumerate() {
            assert_eq!(pair[0], pair[1]);
            assert!((pair[0] + pair[1] - base.probs()[j]).abs() < 1e-9, "H={h}, group {j}");
        }
    }
}
