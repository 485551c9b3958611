//! ASK alphabets, amplitude labeling and symbol energy sets.
//!
//! A `2^m`-ASK alphabet `{±1, ±3, …, ±(2^m − 1)}` factors into a sign and an
//! amplitude. The sign carries label bit `B_1`; the amplitude carries the
//! `m − 1` bits `B_2 … B_m`, with `B_2` the most significant bit of the
//! amplitude label.

use crate::{Error, Result};

/// The amplitude half of a `2^m`-ASK constellation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AskAlphabet {
    m: u32,
    amplitudes: Vec<u32>,
}

impl AskAlphabet {
    /// Builds the `2^m`-ASK alphabet. Requires `m >= 2`.
    pub fn new(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "ASK alphabet needs m >= 2 bits per symbol, got {m}"
            )));
        }
        if m > 16 {
            return Err(Error::InvalidParameter(format!(
                "m = {m} is larger than supported (16)"
            )));
        }
        let amplitudes = (0..1u32 << (m - 1)).map(|i| 2 * i + 1).collect();
        Ok(AskAlphabet { m, amplitudes })
    }

    /// Bits per real symbol.
    pub fn bits_per_symbol(&self) -> u32 {
        self.m
    }

    /// Constellation size `M = 2^m`.
    pub fn order(&self) -> usize {
        1 << self.m
    }

    /// Amplitudes in increasing order.
    pub fn amplitudes(&self) -> &[u32] {
        &self.amplitudes
    }

    /// All signed points in increasing order, `−(2^m−1) … (2^m−1)`.
    pub fn points(&self) -> Vec<i32> {
        let neg = self.amplitudes.iter().rev().map(|&a| -(a as i32));
        let pos = self.amplitudes.iter().map(|&a| a as i32);
        neg.chain(pos).collect()
    }

    /// Position of `amplitude` in the amplitude list, if it belongs to the alphabet.
    pub fn index_of(&self, amplitude: u32) -> Option<usize> {
        amplitude_index(amplitude, self.amplitudes.len())
    }

    /// Plain energy set `{a²}` of the amplitudes.
    pub fn energy_set(&self) -> EnergySet {
        EnergySet::from_amplitudes(&self.amplitudes)
    }
}

pub(crate) fn amplitude_index(amplitude: u32, count: usize) -> Option<usize> {
    if amplitude % 2 == 1 && ((amplitude - 1) / 2) < count as u32 {
        Some(((amplitude - 1) / 2) as usize)
    } else {
        None
    }
}

/// Maps a sign bit to a sign: 0 → +1, 1 → −1.
#[inline]
pub fn sign_from_bit(bit: u8) -> i32 {
    if bit == 0 {
        1
    } else {
        -1
    }
}

/// Inverse of [`sign_from_bit`].
#[inline]
pub fn bit_from_sign(x: i32) -> u8 {
    u8::from(x < 0)
}

/// Bijection between amplitude positions and fixed-width bit labels.
///
/// Labels are stored as integers whose most significant of `num_bits` bits
/// is the first label bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplitudeLabeling {
    num_bits: u32,
    labels: Vec<u32>,
    positions: Vec<usize>,
}

impl AmplitudeLabeling {
    /// Builds a labeling from an explicit table (`table[i]` labels amplitude `2i+1`).
    pub fn from_table(num_bits: u32, table: Vec<u32>) -> Result<Self> {
        let size = 1usize << num_bits;
        if table.len() != size {
            return Err(Error::InvalidParameter(format!(
                "labeling of {num_bits} bits needs {size} entries, got {}",
                table.len()
            )));
        }
        let mut positions = vec![usize::MAX; size];
        for (i, &label) in table.iter().enumerate() {
            let slot = positions.get_mut(label as usize).ok_or_else(|| {
                Error::InvalidParameter(format!("label {label} does not fit in {num_bits} bits"))
            })?;
            if *slot != usize::MAX {
                return Err(Error::InvalidParameter(format!("label {label} used twice")));
            }
            *slot = i;
        }
        Ok(AmplitudeLabeling {
            num_bits,
            labels: table,
            positions,
        })
    }

    /// Binary reflected Gray code over `2^num_bits` amplitudes.
    pub fn brgc(num_bits: u32) -> Self {
        assert!(num_bits >= 1 && num_bits <= 16, "unsupported label width {num_bits}");
        let table = (0..1u32 << num_bits).map(|i| i ^ (i >> 1)).collect();
        Self::from_table(num_bits, table).expect("Gray code is a bijection")
    }

    pub fn num_bits(&self) -> u32 {
        self.num_bits
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label of the amplitude at position `index` (amplitude `2·index+1`).
    #[inline]
    pub fn label_of_index(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Amplitude position carrying `label`.
    #[inline]
    pub fn index_of_label(&self, label: u32) -> usize {
        self.positions[label as usize]
    }

    /// Label of an amplitude value, `None` if it is not in the alphabet.
    pub fn label(&self, amplitude: u32) -> Option<u32> {
        amplitude_index(amplitude, self.labels.len()).map(|i| self.labels[i])
    }

    /// Amplitude value carrying `label`.
    pub fn amplitude(&self, label: u32) -> Option<u32> {
        self.positions
            .get(label as usize)
            .map(|&i| 2 * i as u32 + 1)
    }

    /// Bit `level` (0 = first/most significant label bit) of the label at `index`.
    #[inline]
    pub fn bit(&self, index: usize, level: u32) -> u8 {
        ((self.labels[index] >> (self.num_bits - 1 - level)) & 1) as u8
    }

    /// Label bits of an amplitude as a vector, first bit first.
    pub fn bits(&self, amplitude: u32) -> Option<Vec<u8>> {
        let i = amplitude_index(amplitude, self.labels.len())?;
        Some((0..self.num_bits).map(|l| self.bit(i, l)).collect())
    }
}

/// Ordered set of symbol energies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergySet {
    energies: Vec<u64>,
}

impl EnergySet {
    pub fn new(energies: Vec<u64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidParameter("empty energy set".into()));
        }
        if energies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "energies must be strictly increasing".into(),
            ));
        }
        Ok(EnergySet { energies })
    }

    /// `{a²}` for the given amplitudes.
    pub fn from_amplitudes(amplitudes: &[u32]) -> Self {
        EnergySet {
            energies: amplitudes.iter().map(|&a| u64::from(a) * u64::from(a)).collect(),
        }
    }

    /// Plain ASK energy set with `count` levels: `(2i−1)²` for `i = 1..=count`.
    pub fn plain(count: usize) -> Self {
        EnergySet {
            energies: (1..=count as u64).map(|i| (2 * i - 1) * (2 * i - 1)).collect(),
        }
    }

    pub fn energies(&self) -> &[u64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    fn is_plain(&self) -> bool {
        self.energies
            .iter()
            .enumerate()
            .all(|(i, &e)| e == (2 * i as u64 + 1).pow(2))
    }
}

/// Energy set of equiprobable amplitude pairs of the doubled alphabet.
///
/// Level 0 returns `base`. Level 1 replaces the `l`-th energy by the mean energy
/// of the amplitudes `4l−3` and `4l−1`, which equals `4·e_l + 1`.
pub fn pair_energy_set(base: &EnergySet, level: u32) -> Result<EnergySet> {
    if !base.is_plain() {
        return Err(Error::InvalidParameter(
            "pairing requires a plain ASK energy set {1, 9, 25, ...}".into(),
        ));
    }
    match level {
        0 => Ok(base.clone()),
        1 => {
            let energies = (1..=base.len() as u64)
                .map(|j| ((4 * j - 3).pow(2) + (4 * j - 1).pow(2)) / 2)
                .collect();
            Ok(EnergySet { energies })
        }
        _ => Err(Error::InvalidParameter(format!(
            "unsupported pairing level {level}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets() {
        assert_eq!(AskAlphabet::new(4).unwrap().amplitudes(), &[1, 3, 5, 7, 9, 11, 13, 15]);
        assert_eq!(AskAlphabet::new(2).unwrap().amplitudes(), &[1, 3]);
        assert_eq!(AskAlphabet::new(3).unwrap().amplitudes(), &[1, 3, 5, 7]);
        assert!(matches!(AskAlphabet::new(1), Err(Error::InvalidParameter(_))));
        assert_eq!(AskAlphabet::new(2).unwrap().points(), vec![-3, -1, 1, 3]);
    }

    #[test]
    fn gray_labels_match_16ask_table() {
        let lab = AmplitudeLabeling::brgc(3);
        let expected = [
            (1, [0, 0, 0]),
            (3, [0, 0, 1]),
            (5, [0, 1, 1]),
            (7, [0, 1, 0]),
            (9, [1, 1, 0]),
            (11, [1, 1, 1]),
            (13, [1, 0, 1]),
            (15, [1, 0, 0]),
        ];
        for (a, bits) in expected {
            assert_eq!(lab.bits(a).unwrap(), bits.to_vec(), "amplitude {a}");
        }
        let two = AmplitudeLabeling::brgc(2);
        assert_eq!(two.label(1), Some(0b00));
        assert_eq!(two.label(3), Some(0b01));
        assert_eq!(two.label(5), Some(0b11));
        assert_eq!(two.label(7), Some(0b10));
        assert_eq!(two.label(9), None);
    }

    #[test]
    fn labels_round_trip_and_are_gray() {
        for bits in 1..=8 {
            let lab = AmplitudeLabeling::brgc(bits);
            for i in 0..lab.len() {
                let a = 2 * i as u32 + 1;
                assert_eq!(lab.amplitude(lab.label(a).unwrap()), Some(a));
            }
            for i in 1..lab.len() {
                let diff = lab.label_of_index(i) ^ lab.label_of_index(i - 1);
                assert_eq!(diff.count_ones(), 1);
            }
        }
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(AmplitudeLabeling::from_table(2, vec![0, 1, 1, 2]).is_err());
        assert!(AmplitudeLabeling::from_table(2, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn paired_energies() {
        let base = EnergySet::plain(4);
        assert_eq!(base.energies(), &[1, 9, 25, 49]);
        let paired = pair_energy_set(&base, 1).unwrap();
        assert_eq!(paired.energies(), &[5, 37, 101, 197]);
        for (e, e1) in base.energies().iter().zip(paired.energies()) {
            assert_eq!(*e1, 4 * e + 1);
        }
        assert_eq!(
            pair_energy_set(&EnergySet::plain(2), 1).unwrap().energies(),
            &[5, 37]
        );
        assert_eq!(pair_energy_set(&base, 0).unwrap(), base);
        assert!(pair_energy_set(&base, 2).is_err());
        assert!(pair_energy_set(&EnergySet::new(vec![2, 3]).unwrap(), 1).is_err());
    }

    #[test]
    fn sign_bits() {
        assert_eq!(sign_from_bit(0), 1);
        assert_eq!(sign_from_bit(1), -1);
        assert_eq!(bit_from_sign(-7), 1);
        assert_eq!(bit_from_sign(3), 0);
    }
}
