//! Counter-based random streams and exact discrete samplers.
//!
//! Every random quantity in the crate is drawn from a [`Substream`], a
//! generator of the splitmix family whose state is a pure function of
//! (master seed, replicate index, stream label). Two substreams with
//! different addresses never share state, so replicates may run on any
//! thread in any order and still reproduce bit for bit.
//!
//! The samplers here are exact in distribution, not approximations:
//! binomial draws use cdf inversion for small means and a rejection
//! sampler for large ones, and geometric skips invert the closed-form cdf
//! directly.

use crate::error::{Error, Result};

/// Address of one independent random stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamAddress {
    pub master_seed: u64,
    pub replicate_index: u64,
    pub stream_label: String,
}

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

/// Stateless 64-bit finalizer; full avalanche, bijective.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives an odd increment with enough bit diversity to act as a stream
/// constant. Follows the classic splittable-generator recipe.
fn mix_gamma(z: u64) -> u64 {
    let g = mix64(z) | 1;
    if (g ^ (g >> 1)).count_ones() < 24 {
        g ^ 0xAAAA_AAAA_AAAA_AAAA
    } else {
        g
    }
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a, stable across platforms.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// One independent random stream: a counter stepped by a per-stream odd
/// increment, finalized through `mix64`. Output depends only on the
/// `StreamAddress` used to create it and on how many values were drawn.
#[derive(Clone, Debug)]
pub struct Substream {
    counter: u64,
    gamma: u64,
    key: u64,
}

impl Substream {
    pub fn new(master_seed: u64, replicate_index: u64, stream_label: &str) -> Self {
        let mut h = mix64(master_seed.wrapping_add(GOLDEN));
        h = mix64(h ^ mix64(replicate_index.wrapping_add(GOLDEN)));
        h = mix64(h ^ label_hash(stream_label));
        Substream {
            counter: h,
            gamma: mix_gamma(h.wrapping_add(GOLDEN)),
            key: h,
        }
    }

    pub fn from_address(addr: &StreamAddress) -> Self {
        Self::new(addr.master_seed, addr.replicate_index, &addr.stream_label)
    }

    /// Stream identity, recorded in experiment output so a single replicate
    /// can be replayed in isolation.
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(self.gamma);
        mix64(self.counter)
    }

    /// Uniform in [0, 1), 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as an argument to `ln`.
    pub fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound), exactly unbiased.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() requires a positive bound");
        // Multiply-shift with rejection of the biased zone.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if m as u64 >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// Bridges a `Substream` into the `rand` ecosystem for the rejection-based
/// binomial branch.
struct RngBridge<'a>(&'a mut Substream);

impl rand::RngCore for RngBridge<'_> {
    fn next_u32(&mut self) -> u32 {
        (self.0.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.0.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Mean at or below which binomial sampling walks the cdf directly.
pub const BINOMIAL_INVERSION_MEAN_MAX: f64 = 30.0;

/// Draws Bi(trials, prob) exactly.
///
/// Small means invert the cdf with the pmf recurrence; the probability is
/// first folded to at most 1/2 by symmetry so the walk stays short and the
/// starting pmf cannot underflow. Larger means delegate to a transformed
/// rejection sampler, which is also exact in distribution.
pub fn sample_binomial(trials: u64, prob: f64, rng: &mut Substream) -> Result<u64> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::ParamDomain(format!(
            "binomial prob must lie in [0, 1], got {prob}"
        )));
    }
    if trials == 0 || prob == 0.0 {
        return Ok(0);
    }
    if prob == 1.0 {
        return Ok(trials);
    }
    let (p, flipped) = if prob > 0.5 {
        (1.0 - prob, true)
    } else {
        (prob, false)
    };
    let k = if trials as f64 * p <= BINOMIAL_INVERSION_MEAN_MAX {
        binomial_inversion(trials, p, rng)
    } else {
        let dist = rand_distr::Binomial::new(trials, p)
            .expect("validated binomial parameters");
        rand_distr::Distribution::sample(&dist, &mut RngBridge(rng))
    };
    Ok(if flipped { trials - k } else { k })
}

fn binomial_inversion(trials: u64, p: f64, rng: &mut Substream) -> u64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    let n = trials as f64;
    let ratio = p / (1.0 - p);
    let u = rng.next_f64();
    // pmf at zero: (1-p)^n, no underflow since n*p <= 30 and p <= 1/2.
    let mut pmf = (n * (-p).ln_1p()).exp();
    let mut cdf = pmf;
    let mut k: u64 = 0;
    while u >= cdf && k < trials {
        pmf *= ratio * (n - k as f64) / (k as f64 + 1.0);
        cdf += pmf;
        k += 1;
        // If rounding exhausts the pmf before the cdf reaches u, every
        // remaining step adds nothing; bail out at the tail.
        if pmf == 0.0 {
            break;
        }
    }
    k
}

/// Distance to the next success in a Bernoulli(prob) sequence: the count of
/// trials up to and including the first success, via inversion of the
/// geometric cdf. `prob` must lie in (0, 1]; the uniform is drawn from
/// (0, 1] so the logarithm never sees zero.
pub fn sample_geometric_skip(prob: f64, rng: &mut Substream) -> Result<u64> {
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::ParamDomain(format!(
            "geometric skip prob must lie in (0, 1], got {prob}"
        )));
    }
    if prob == 1.0 {
        // Consume a draw anyway so call sequences stay aligned.
        let _ = rng.next_u64();
        return Ok(1);
    }
    let u = rng.next_f64_open();
    let k = (u.ln() / (-prob).ln_1p()).floor() + 1.0;
    Ok(if k < 1.0 { 1 } else { k as u64 })
}
