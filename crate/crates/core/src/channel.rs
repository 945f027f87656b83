//! Depolarizing noise: error sampling, the per-segment joint prior and the hashing bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gf2e::FieldTables;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("depolarizing probability {0} outside [0, 3/4]")]
    Probability(f64),
    #[error("rate {0} outside the range of the hashing curve")]
    Rate(f64),
}

/// Marginal flip probability of either bit, `f_m = 2 p_D / 3`.
pub fn fm_from_pd(p_d: f64) -> f64 {
    2.0 * p_d / 3.0
}

pub fn pd_from_fm(f_m: f64) -> f64 {
    1.5 * f_m
}

/// Which entropy expression defines the hashing curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashingConvention {
    /// No-error mass `1 - p`, each Pauli `p/3`.
    #[default]
    Standard,
    /// `1 + (1 - 3p) log2(1 - 3p) + 3p log2 p`: each Pauli `p`.
    PerPauli,
}

impl HashingConvention {
    /// Largest `p` at which the rate is still decreasing.
    fn upper(self) -> f64 {
        match self {
            Self::Standard => 0.75,
            Self::PerPauli => 0.25,
        }
    }
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

pub fn hashing_rate(p_d: f64, conv: HashingConvention) -> f64 {
    match conv {
        HashingConvention::Standard => 1.0 + xlog2x(1.0 - p_d) + 3.0 * xlog2x(p_d / 3.0),
        HashingConvention::PerPauli => 1.0 + xlog2x(1.0 - 3.0 * p_d) + 3.0 * xlog2x(p_d),
    }
}

/// The `p_D` at which the hashing rate equals `rate`, by bisection to `1e-10`.
pub fn hashing_threshold(rate: f64, conv: HashingConvention) -> Result<f64, ChannelError> {
    let hi_p = conv.upper();
    let floor = hashing_rate(hi_p, conv);
    if !(floor..=1.0).contains(&rate) || rate.is_nan() {
        return Err(ChannelError::Rate(rate));
    }
    if rate == 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, hi_p);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if hashing_rate(mid, conv) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_p(p_d: f64) -> Result<(), ChannelError> {
    if !(0.0..=0.75).contains(&p_d) {
        return Err(ChannelError::Probability(p_d));
    }
    Ok(())
}

/// Draws `(x, z)` over `segments` segments of `e` bits. Each qubit is clean with
/// probability `1 - p_D`, otherwise one of `(0,1), (1,0), (1,1)` uniformly.
pub fn sample_error<R: Rng + ?Sized>(segments: usize, e: u32, p_d: f64, rng: &mut R) -> (Vec<u32>, Vec<u32>) {
    let mut x = vec![0u32; segments];
    let mut z = vec![0u32; segments];
    for j in 0..segments {
        for k in 0..e {
            let u: f64 = rng.gen();
            if u < p_d {
                let which = ((u / p_d * 3.0) as u32).min(2);
                let (xb, zb) = [(0, 1), (1, 0), (1, 1)][which as usize];
                x[j] |= xb << k;
                z[j] |= zb << k;
            }
        }
    }
    (x, z)
}

pub fn sample_error_seeded(segments: usize, e: u32, p_d: f64, seed: u64) -> Result<(Vec<u32>, Vec<u32>), ChannelError> {
    check_p(p_d)?;
    Ok(sample_error(segments, e, p_d, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Joint prior of one segment, `q × q`, stored row-major as `table[x_index * q + z_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable {
    q: usize,
    e: u32,
    p_d: f64,
    table: Vec<f64>,
}

impl PriorTable {
    /// Indexed by the raw bit patterns `(x, z)`.
    pub fn bits(p_d: f64, e: u32) -> Result<Self, ChannelError> {
        Self::build(p_d, e, |x| x)
    }

    /// Indexed by field symbols `(ξ, ζ)` with `x = w(ξ)` and `z = v(ζ)`.
    pub fn field(p_d: f64, field: &FieldTables) -> Result<Self, ChannelError> {
        Self::build(p_d, field.degree(), |xi| field.w_of_bits(xi))
    }

    fn build(p_d: f64, e: u32, x_bits: impl Fn(u32) -> u32) -> Result<Self, ChannelError> {
        check_p(p_d)?;
        let q = 1usize << e;
        let mask = (q - 1) as u32;
        let mut table = vec![0.0; q * q];
        for xi in 0..q as u32 {
            let xb = x_bits(xi);
            for zeta in 0..q as u32 {
                let z00 = (!(xb | zeta) & mask).count_ones() as i32;
                table[xi as usize * q + zeta as usize] = (1.0 - p_d).powi(z00) * (p_d / 3.0).powi(e as i32 - z00);
            }
        }
        Ok(Self { q, e, p_d, table })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn degree(&self) -> u32 {
        self.e
    }

    pub fn p_d(&self) -> f64 {
        self.p_d
    }

    pub fn get(&self, x_index: usize, z_index: usize) -> f64 {
        self.table[x_index * self.q + z_index]
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2e::default_poly;

    const STD: HashingConvention = HashingConvention::Standard;

    #[test]
    fn rate_endpoints() {
        assert_eq!(hashing_rate(0.0, STD), 1.0);
        assert!((hashing_rate(0.75, STD) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        let p = hashing_threshold(0.5, STD).unwrap();
        assert!((p - 0.0747).abs() < 5e-4, "{p}");
        assert!((fm_from_pd(p) - 0.0498).abs() < 5e-4);
        let p = hashing_threshold(0.75, STD).unwrap();
        assert!((p - 0.0312).abs() < 5e-4, "{p}");
        assert!((fm_from_pd(p) - 0.0208).abs() < 5e-4);
        assert_eq!(hashing_threshold(1.0, STD).unwrap(), 0.0);
        assert!(hashing_threshold(1.5, STD).is_err());
        for r in [0.1, 0.3, 0.5, 0.6, 0.75, 0.9] {
            for conv in [STD, HashingConvention::PerPauli] {
                let p = hashing_threshold(r, conv).unwrap();
                assert!((hashing_rate(p, conv) - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rate_strictly_decreasing() {
        let mut prev = hashing_rate(0.0, STD);
        for i in 1..10_000 {
            let r = hashing_rate(0.75 * i as f64 / 10_000.0, STD);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn zero_noise_is_clean() {
        let (x, z) = sample_error_seeded(100, 8, 0.0, 1).unwrap();
        assert!(x.iter().chain(&z).all(|&s| s == 0));
    }

    #[test]
    fn empirical_pauli_frequencies() {
        let n = 1_000_000usize;
        let (x, z) = sample_error_seeded(n / 8, 8, 0.3, 7).unwrap();
        let mut counts = [0usize; 4];
        for (a, b) in x.iter().zip(&z) {
            for k in 0..8 {
                counts[((a >> k & 1) * 2 + (b >> k & 1)) as usize] += 1;
            }
        }
        let within = |c: usize, p: f64| {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            (c as f64 - n as f64 * p).abs() < 4.0 * sigma
        };
        assert!(within(counts[0], 0.7));
        for &c in &counts[1..] {
            assert!(within(c, 0.1));
        }
        let x_marginal = (counts[2] + counts[3]) as f64 / n as f64;
        assert!((x_marginal - 0.2).abs() < 0.002);
        assert!((counts[3] as f64 / n as f64 - 0.1).abs() < 0.002);
    }

    #[test]
    fn prior_entries() {
        let f = FieldTables::new(3, &default_poly(3).unwrap()).unwrap();
        let prior = PriorTable::field(0.3, &f).unwrap();
        assert!((prior.get(0, 0) - 0.7f64.powi(3)).abs() < 1e-15);
        // z = v(ζ) = (100): bit 0 set
        assert!((prior.get(0, 1) - 0.049).abs() < 1e-12);
        assert!((prior.table().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_x_marginal_is_bitwise() {
        let f = FieldTables::new(8, &default_poly(8).unwrap()).unwrap();
        let p = 0.12;
        let prior = PriorTable::field(p, &f).unwrap();
        let fm = fm_from_pd(p);
        for xi in 0..256 {
            let marg: f64 = (0..256).map(|z| prior.get(xi, z)).sum();
            let w = f.w_of_bits(xi as u32);
            let ones = w.count_ones() as i32;
            let want = fm.powi(ones) * (1.0 - fm).powi(8 - ones);
            assert!((marg - want).abs() < 1e-12);
        }
    }
}
