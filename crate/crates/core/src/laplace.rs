//! Laplacian noise for the noisy fit.
//!
//! Samples are drawn by inverting the CDF, `L = -b·sgn(u)·ln(1 - 2|u|)` with
//! `u ~ U(-½, ½)` and scale `b = Δf/ε`, so a seeded generator replays the
//! exact same vector.
//!
//! Every (window, attribute) fit draws from its own ChaCha8 stream derived
//! from the master seed; see [`substream`].

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sensitivity of a query over data normalized to `[0, 1]`: `1 - 0`.
pub const SENSITIVITY: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    epsilon: f64,
}

impl NoiseSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon.is_finite() && epsilon > 0.0 {
            Ok(NoiseSpec { epsilon })
        } else {
            Err(Error::InvalidEpsilon(epsilon))
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        SENSITIVITY
    }

    pub fn location(&self) -> f64 {
        0.0
    }

    /// `b = Δf / ε`.
    pub fn scale(&self) -> f64 {
        SENSITIVITY / self.epsilon
    }
}

/// One noise sample per data point of the attribute being fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector(pub Vec<f64>);

impl NoiseVector {
    pub fn zeros(n: usize) -> Self {
        NoiseVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Inverse CDF of Laplace(0, `scale`) at `u ∈ (-½, ½)`.
#[inline]
pub fn inverse_cdf(u: f64, scale: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Draws `n` i.i.d. Laplace(0, Δf/ε) samples.
pub fn sample_laplace<R: Rng + ?Sized>(spec: NoiseSpec, n: usize, rng: &mut R) -> NoiseVector {
    let mut out = Vec::with_capacity(n);
    fill_laplace(spec, rng, |v| out.push(v), n);
    NoiseVector(out)
}

pub(crate) fn fill_laplace<R: Rng + ?Sized>(
    spec: NoiseSpec,
    rng: &mut R,
    mut sink: impl FnMut(f64),
    n: usize,
) {
    let scale = spec.scale();
    for _ in 0..n {
        // Open01 keeps u strictly inside (-½, ½), so ln never sees 0.
        let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
        sink(inverse_cdf(u, scale));
    }
}

/// What a derived stream is used for; keeps noise and shuffle streams apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Noise,
    Shuffle,
    Sampling,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Noise => 0x6e6f_6973_65,
            Purpose::Shuffle => 0x7368_7566_666c_65,
            Purpose::Sampling => 0x7361_6d70_6c65,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream id for `(purpose, window, attribute)`.
pub fn substream_id(purpose: Purpose, window: u64, attribute: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(purpose.tag()) ^ window) ^ attribute)
}

/// Independent generator for one `(purpose, window, attribute)` triple.
pub fn substream(master_seed: u64, purpose: Purpose, window: u64, attribute: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(substream_id(purpose, window, attribute));
    rng
}

/// A master seed from OS entropy, for runs without `--seed`.
pub fn entropy_seed() -> u64 {
    rand::random()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(eps: f64) -> NoiseSpec {
        NoiseSpec::new(eps).unwrap()
    }

    #[test]
    fn scale_is_sensitivity_over_epsilon() {
        assert_eq!(spec(1.0).scale(), 1.0);
        assert_eq!(spec(4.0).scale(), 0.25);
        assert_eq!(spec(1.0).location(), 0.0);
        assert_eq!(spec(1.0).sensitivity(), 1.0);
    }

    #[test]
    fn median_maps_to_zero() {
        assert_eq!(inverse_cdf(0.0, 3.0), 0.0);
    }

    #[test]
    fn inverse_cdf_is_odd_and_quartiles_match() {
        // P(L <= b ln 2) = 3/4 for Laplace(0, b).
        let b = 2.0;
        assert!((inverse_cdf(0.25, b) - b * 2f64.ln()).abs() < 1e-12);
        assert!((inverse_cdf(-0.25, b) + b * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_epsilon() {
        for eps in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(NoiseSpec::new(eps), Err(Error::InvalidEpsilon(_))));
        }
    }

    #[test]
    fn moments_at_unit_epsilon() {
        let mut rng = substream(7, Purpose::Noise, 0, 0);
        let v = sample_laplace(spec(1.0), 1_000_000, &mut rng);
        let n = v.len() as f64;
        let mean = v.0.iter().sum::<f64>() / n;
        let var = v.0.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var - 2.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn doubling_epsilon_halves_mean_abs_deviation() {
        let mad = |eps: f64, seed: u64| {
            let mut rng = substream(seed, Purpose::Noise, 0, 0);
            let v = sample_laplace(spec(eps), 1_000_000, &mut rng);
            v.0.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
        };
        let ratio = mad(2.0, 11) / mad(1.0, 12);
        assert!((ratio - 0.5).abs() < 0.5 * 0.03, "ratio {ratio}");
    }

    #[test]
    fn seeded_streams_replay_and_diverge() {
        let draw = |seed, w, a| sample_laplace(spec(1.0), 64, &mut substream(seed, Purpose::Noise, w, a));
        assert_eq!(draw(1, 0, 0), draw(1, 0, 0));
        assert_ne!(draw(1, 0, 0), draw(2, 0, 0));
        assert_ne!(draw(1, 0, 0), draw(1, 0, 1));
        assert_ne!(draw(1, 0, 1), draw(1, 1, 0));
    }

    #[test]
    fn purposes_are_separate_streams() {
        let a = substream_id(Purpose::Noise, 3, 4);
        let b = substream_id(Purpose::Shuffle, 3, 4);
        assert_ne!(a, b);
    }
}
