//! What an eavesdropper learns from a noisy key.
//!
//! Uniform NK-blocks (all `m + 1` bits equal) give the embedded bit away;
//! elsewhere Eve's best simple strategy is a majority vote per block. The
//! flipped bits then force her to enumerate which leaked bits were
//! inverted, which [`eve_attempts`] counts exactly.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::bits::{BitString, RngStream};
use crate::error::{Error, Result};
use crate::noisy_key::NoisyKey;

/// Probability that a level-`m` NK-block is uniform: `2^-m`.
pub fn p_leaked(m: u32) -> f64 {
    0.5f64.powi(m as i32)
}

/// Eve's majority vote on a single block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vote {
    Zero,
    One,
    Tie,
}

fn vote(ones: usize, len: usize) -> Vote {
    match (2 * ones).cmp(&len) {
        std::cmp::Ordering::Greater => Vote::One,
        std::cmp::Ordering::Less => Vote::Zero,
        std::cmp::Ordering::Equal => Vote::Tie,
    }
}

/// Per-block majority value; ties are settled by a fair coin from `rng`.
pub fn majority_guess(nk: &NoisyKey, rng: &mut RngStream) -> BitString {
    let w = nk.block_len();
    (0..nk.n())
        .map(|i| match vote(nk.block_ones(i), w) {
            Vote::One => true,
            Vote::Zero => false,
            Vote::Tie => rng.random_bool(0.5),
        })
        .collect()
}

/// `(2^m + C(m, m/2)) / 2^(m+1)` for even `m`.
pub fn majority_hit_rate_theoretical(m: u32) -> Result<f64> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::OddNoiseLevel(m));
    }
    // C(2r, r) / 4^r as a running product keeps large m finite.
    let r = m / 2;
    let central = (1..=r).fold(1.0f64, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64);
    Ok(0.5 + 0.5 * central)
}

/// One row of the exhaustive guess table for sifted bit 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessRow {
    pub noise: BitString,
    pub vote: Vote,
}

/// All `2^m` noise patterns next to a sifted `0`, with Eve's vote on each.
pub fn guess_table(m: u32) -> Vec<GuessRow> {
    let m = m as usize;
    assert!(m < usize::BITS as usize, "noise level too large to enumerate");
    (0..1usize << m)
        .map(|pattern| {
            let noise: BitString = (0..m).map(|j| pattern >> (m - 1 - j) & 1 == 1).collect();
            let v = vote(noise.count_ones(), m + 1);
            GuessRow { noise, vote: v }
        })
        .collect()
}

/// Exact hit probability from [`guess_table`], with ties scored as 1/2.
pub fn majority_hit_rate_exhaustive(m: u32) -> f64 {
    let table = guess_table(m);
    let score: f64 = table
        .iter()
        .map(|row| match row.vote {
            Vote::Zero => 1.0,
            Vote::Tie => 0.5,
            Vote::One => 0.0,
        })
        .sum();
    score / table.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryReport {
    pub n: usize,
    pub m: u32,
    pub p_leaked_theoretical: f64,
    pub uniform_block_count: usize,
    pub empirical_leak_rate: f64,
    pub majority_hits: usize,
    pub majority_hit_rate: f64,
}

/// Scores Eve's majority attack against the key actually embedded in `nk`.
pub fn measure_leakage(
    nk: &NoisyKey,
    embedded_key: &BitString,
    rng: &mut RngStream,
) -> Result<AdversaryReport> {
    if embedded_key.len() != nk.n() {
        return Err(Error::DimensionMismatch(format!(
            "truth key has {} bits, noisy key has {} blocks",
            embedded_key.len(),
            nk.n()
        )));
    }
    let guess = majority_guess(nk, rng);
    let w = nk.block_len();
    let mut uniform_block_count = 0;
    let mut majority_hits = 0;
    for i in 0..nk.n() {
        let ones = nk.block_ones(i);
        let truth = embedded_key.bit(i);
        let hit = guess.bit(i) == truth;
        if ones == 0 || ones == w {
            uniform_block_count += 1;
            assert!(hit, "uniform block {i} disagrees with its embedded bit");
        }
        majority_hits += hit as usize;
    }
    let n = nk.n() as f64;
    Ok(AdversaryReport {
        n: nk.n(),
        m: nk.m(),
        p_leaked_theoretical: p_leaked(nk.m()),
        uniform_block_count,
        empirical_leak_rate: uniform_block_count as f64 / n,
        majority_hits,
        majority_hit_rate: majority_hits as f64 / n,
    })
}

/// How many of `flip_positions` fall in uniform NK-blocks.
pub fn flips_in_uniform_blocks(nk: &NoisyKey, flip_positions: &[usize]) -> usize {
    let w = nk.block_len();
    flip_positions
        .iter()
        .filter(|&&i| i < nk.n())
        .filter(|&&i| {
            let ones = nk.block_ones(i);
            ones == 0 || ones == w
        })
        .count()
}

/// Exact size of Eve's search space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AttemptCount(pub BigUint);

impl std::fmt::Display for AttemptCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `C(n, k)` in exact arithmetic.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// `2^(n-L) * sum_{j=0..L} C(L, j)` with `L = round(n * p_leaked)`.
///
/// The binomial sum is `2^L`, so the result is always `2^n`; this is
/// asserted.
pub fn eve_attempts(n: u64, p_leaked: f64) -> AttemptCount {
    assert!(
        (0.0..=1.0).contains(&p_leaked),
        "p_leaked {p_leaked} outside [0, 1]"
    );
    let leaked = ((n as f64 * p_leaked) + 0.5).floor() as u64;
    let leaked = leaked.min(n);
    let sum: BigUint = (0..=leaked).map(|j| binomial(leaked, j)).sum();
    let total = (BigUint::one() << (n - leaked) as usize) * sum;
    assert_eq!(total, BigUint::one() << n as usize);
    AttemptCount(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::random_bits;
    use crate::noisy_key::{assemble, wrap};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn leak_rates() {
        assert_eq!(p_leaked(1), 0.5);
        assert_eq!(p_leaked(3), 0.125);
        assert_eq!(p_leaked(5), 0.03125);
    }

    #[test]
    fn majority_on_small_blocks() {
        let mut rng = RngStream::new(0, 0);
        let nk = NoisyKey::from_parts(bs("000011"), 2, 2).unwrap();
        assert_eq!(majority_guess(&nk, &mut rng).to_string(), "01");

        let nk = NoisyKey::from_parts(bs("01"), 1, 1).unwrap();
        let ones = (0..2000)
            .filter(|&s| majority_guess(&nk, &mut RngStream::new(s, 0)).bit(0))
            .count();
        assert!((900..=1100).contains(&ones), "{ones}");
    }

    #[test]
    fn guess_table_m2_matches_four_rows() {
        let table = guess_table(2);
        let rows: Vec<(String, Vote)> = table
            .iter()
            .map(|r| (r.noise.to_string(), r.vote))
            .collect();
        assert_eq!(
            rows,
            vec![
                ("00".into(), Vote::Zero),
                ("01".into(), Vote::Zero),
                ("10".into(), Vote::Zero),
                ("11".into(), Vote::One),
            ]
        );
        assert_eq!(majority_hit_rate_exhaustive(2), 0.75);
    }

    #[test]
    fn theoretical_hit_rate() {
        assert_eq!(majority_hit_rate_theoretical(2).unwrap(), 0.75);
        assert_eq!(majority_hit_rate_theoretical(4).unwrap(), 0.6875);
        assert!(matches!(
            majority_hit_rate_theoretical(3),
            Err(Error::OddNoiseLevel(3))
        ));
        assert!(majority_hit_rate_theoretical(0).is_err());

        let rates: Vec<f64> = (1..=10)
            .map(|r| majority_hit_rate_theoretical(2 * r).unwrap())
            .collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
        assert!(rates.iter().all(|&r| r > 0.5));
    }

    #[test]
    fn theoretical_matches_exhaustive_and_big_integers() {
        for m in (2..=20).step_by(2) {
            let exact = (BigUint::one() << m as usize) + binomial(m as u64, m as u64 / 2);
            let denom = BigUint::one() << (m as usize + 1);
            let oracle = exact.to_string().parse::<f64>().unwrap()
                / denom.to_string().parse::<f64>().unwrap();
            let got = majority_hit_rate_theoretical(m).unwrap();
            assert!((got - oracle).abs() < 1e-15, "m={m}");
            if m <= 12 {
                assert!((majority_hit_rate_exhaustive(m) - oracle).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn odd_levels_score_one_half_by_symmetry() {
        for m in [1, 3, 5] {
            let r = majority_hit_rate_exhaustive(m);
            assert!(r > 0.5);
        }
        // m = 1: patterns 0 -> vote 0, 1 -> tie.
        assert_eq!(majority_hit_rate_exhaustive(1), 0.75);
    }

    #[test]
    fn degenerate_all_zero() {
        let key = BitString::zeros(50);
        let noise = BitString::zeros(150);
        let nk = assemble(&key, &noise, &[1; 50], 3).unwrap();
        let r = measure_leakage(&nk, &key, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(r.uniform_block_count, 50);
        assert_eq!(r.majority_hit_rate, 1.0);
    }

    #[test]
    fn measure_leakage_dimension_mismatch() {
        let nk = NoisyKey::from_parts(bs("0011"), 2, 1).unwrap();
        assert!(matches!(
            measure_leakage(&nk, &bs("0"), &mut RngStream::new(0, 0)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn leak_rate_converges() {
        let n = 100_000;
        for m in [1u32, 2, 3, 5] {
            let mut rng = RngStream::new(31, m as u64);
            let key = random_bits(&mut rng, n);
            let (nk, _) = wrap(&key, m, &mut rng).unwrap();
            let r = measure_leakage(&nk, &key, &mut rng).unwrap();
            let p = p_leaked(m);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((r.empirical_leak_rate - p).abs() <= 3.0 * sigma, "m={m}: {r:?}");
        }
    }

    #[test]
    fn majority_rate_converges_for_even_levels() {
        let n = 100_000;
        for m in [2u32, 4] {
            let mut rng = RngStream::new(32, m as u64);
            let key = random_bits(&mut rng, n);
            let (nk, _) = wrap(&key, m, &mut rng).unwrap();
            let r = measure_leakage(&nk, &key, &mut rng).unwrap();
            let p = majority_hit_rate_theoretical(m).unwrap();
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((r.majority_hit_rate - p).abs() <= 3.0 * sigma, "m={m}: {r:?}");
        }
    }

    #[test]
    fn flipped_bits_in_uniform_blocks_are_binomial() {
        // k = 13 flips among n = 100 at m = 3: count ~ Binomial(13, 1/8).
        let (n, k, m, trials) = (100usize, 13usize, 3u32, 4000u64);
        let p = p_leaked(m);
        let mut hist = [0f64; 6];
        for t in 0..trials {
            let mut rng = RngStream::new(55, t);
            let key = random_bits(&mut rng, n);
            let flips = crate::bits::choose_positions(&mut rng, n, k).unwrap();
            let flipped = crate::bit_flip::apply_flips(&key, &flips).unwrap();
            let (nk, _) = wrap(&flipped, m, &mut rng).unwrap();
            let c = flips_in_uniform_blocks(&nk, &flips);
            hist[c.min(5)] += 1.0;
        }
        let pmf = |j: u64| -> f64 {
            binomial(k as u64, j).to_string().parse::<f64>().unwrap()
                * p.powi(j as i32)
                * (1.0 - p).powi((k as u64 - j) as i32)
        };
        let mut expected: Vec<f64> = (0..5).map(|j| pmf(j) * trials as f64).collect();
        expected.push(trials as f64 - expected.iter().sum::<f64>());
        let chi2: f64 = hist
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e).powi(2) / e)
            .sum();
        assert!(hist[1..].iter().sum::<f64>() > 0.0);
        // chi-square(5) upper 0.1% point.
        assert!(chi2 < 20.515, "chi2 = {chi2}, hist = {hist:?}, expected = {expected:?}");
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(10, 0), BigUint::one());
        assert_eq!(binomial(10, 10), BigUint::one());
        assert_eq!(binomial(3, 4), BigUint::zero());
        assert_eq!(binomial(52, 5), BigUint::from(2_598_960u32));
    }

    #[test]
    fn attempts_examples() {
        assert_eq!(eve_attempts(8, 0.25).0, BigUint::from(256u32));
        let a = eve_attempts(100, 0.125);
        assert_eq!(a.to_string(), "1267650600228229401496703205376");
        assert_eq!(a.to_string().len(), 31);
        assert_eq!(eve_attempts(500, 0.03125).0, BigUint::one() << 500usize);
    }

    #[test]
    fn attempts_equal_two_to_the_n() {
        for n in 1..=64u64 {
            for step in 0..=20 {
                let p = step as f64 / 20.0;
                assert_eq!(eve_attempts(n, p).0, BigUint::from(1u128 << n));
            }
        }
    }
}
