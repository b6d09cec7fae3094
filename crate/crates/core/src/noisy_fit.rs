//! Noisy least-squares fit of a sorted attribute onto the shifted Chebyshev
//! basis.
//!
//! Minimizing `Σ (f̂(x_i) + L_i - y_i)²` over the four coefficients gives the
//! normal system `C·a = B` with
//!
//! ```text
//! m_jk = Σ_i φ_j(x_i) φ_k(x_i)        (expanded into power sums S0..S6)
//! b_k  = Σ_i φ_k(x_i) (y_i - L_i)
//! ```
//!
//! `C` depends only on the abscissae, so callers that fit many attributes of
//! the same length should compute [`PowerSums`] once and reuse them.

use crate::chebyshev::{phi_all, BASIS_LEN};
use crate::error::{Error, Result};
use crate::laplace::NoiseVector;

/// Condition-number cutoff above which a system is treated as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// `x_i = i / (n - 1)` for `i = 0..n`: the min-max normalization of `1..=n`.
pub fn abscissae(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let d = (n - 1) as f64;
            (0..n).map(|i| i as f64 / d).collect()
        }
    }
}

/// Abscissae paired with sorted, normalized attribute values.
#[derive(Debug, Clone, Copy)]
pub struct AttributeSeries<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

impl<'a> AttributeSeries<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                what: "y",
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.len() < crate::MIN_WINDOW {
            return Err(Error::TooFewRows { rows: x.len() });
        }
        Ok(AttributeSeries { x, y })
    }

    /// Like [`AttributeSeries::new`], but also checks that `x` is the
    /// equispaced grid on `[0, 1]` and `y` is sorted ascending.
    pub fn new_checked(x: &'a [f64], y: &'a [f64]) -> Result<Self> {
        let s = Self::new(x, y)?;
        let n = x.len();
        let grid_ok = x[0] == 0.0
            && x[n - 1] == 1.0
            && x.windows(2).all(|w| w[0] < w[1]);
        if !grid_ok {
            return Err(Error::Precondition(
                "abscissae must increase strictly from 0 to 1".into(),
            ));
        }
        if !y.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Precondition("attribute values must be sorted".into()));
        }
        Ok(s)
    }

    pub fn x(&self) -> &'a [f64] {
        self.x
    }

    pub fn y(&self) -> &'a [f64] {
        self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// `S_k = Σ x_i^k` for `k = 0..=6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSums(pub [f64; 7]);

impl PowerSums {
    pub fn s(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn n(&self) -> f64 {
        self.0[0]
    }
}

pub fn power_sums(x: &[f64]) -> PowerSums {
    let mut s = [0.0; 7];
    for &xi in x {
        let mut p = 1.0;
        for sk in s.iter_mut() {
            *sk += p;
            p *= xi;
        }
    }
    PowerSums(s)
}

/// The 4×4 system `C·a = B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSystem {
    pub c: [[f64; BASIS_LEN]; BASIS_LEN],
    pub b: [f64; BASIS_LEN],
}

/// The coefficient matrix `C` from power sums.
pub fn coefficient_matrix(ps: &PowerSums) -> [[f64; BASIS_LEN]; BASIS_LEN] {
    let [n, s1, s2, s3, s4, s5, s6] = ps.0;
    let m11 = n;
    let m12 = 2.0 * s1 - n;
    let m13 = 8.0 * s2 - 8.0 * s1 + n;
    let m14 = 32.0 * s3 - 48.0 * s2 + 18.0 * s1 - n;
    let m22 = 4.0 * s2 - 4.0 * s1 + n;
    let m23 = 16.0 * s3 - 24.0 * s2 + 10.0 * s1 - n;
    let m24 = 64.0 * s4 - 128.0 * s3 + 84.0 * s2 - 20.0 * s1 + n;
    let m33 = 64.0 * s4 - 128.0 * s3 + 80.0 * s2 - 16.0 * s1 + n;
    let m34 = 256.0 * s5 - 640.0 * s4 + 560.0 * s3 - 200.0 * s2 + 26.0 * s1 - n;
    let m44 = 1024.0 * s6 - 3072.0 * s5 + 3456.0 * s4 - 1792.0 * s3 + 420.0 * s2 - 36.0 * s1
        + n;
    [
        [m11, m12, m13, m14],
        [m12, m22, m23, m24],
        [m13, m23, m33, m34],
        [m14, m24, m34, m44],
    ]
}

/// Right-hand side from the moments `Σ x^k v` (`k = 0..=3`) of `v = y` and
/// `v = L`.
fn constants(my: [f64; 4], ml: [f64; 4]) -> [f64; BASIS_LEN] {
    let combine = |m: [f64; 4]| {
        [
            m[0],
            2.0 * m[1] - m[0],
            8.0 * m[2] - 8.0 * m[1] + m[0],
            32.0 * m[3] - 48.0 * m[2] + 18.0 * m[1] - m[0],
        ]
    };
    let (y, l) = (combine(my), combine(ml));
    [y[0] - l[0], y[1] - l[1], y[2] - l[2], y[3] - l[3]]
}

fn moments(x: &[f64], v: &[f64]) -> [f64; 4] {
    let mut m = [0.0; 4];
    for (&xi, &vi) in x.iter().zip(v) {
        let t1 = xi * vi;
        let t2 = xi * t1;
        m[0] += vi;
        m[1] += t1;
        m[2] += t2;
        m[3] += xi * t2;
    }
    m
}

pub fn build_normal_system(series: AttributeSeries<'_>, noise: &NoiseVector) -> Result<NormalSystem> {
    build_normal_system_with(&power_sums(series.x()), series, noise)
}

/// [`build_normal_system`] with precomputed power sums of `series.x()`.
pub fn build_normal_system_with(
    sums: &PowerSums,
    series: AttributeSeries<'_>,
    noise: &NoiseVector,
) -> Result<NormalSystem> {
    if noise.len() != series.len() {
        return Err(Error::LengthMismatch {
            what: "noise",
            expected: series.len(),
            got: noise.len(),
        });
    }
    let my = moments(series.x(), series.y());
    let ml = moments(series.x(), noise.as_slice());
    Ok(NormalSystem {
        c: coefficient_matrix(sums),
        b: constants(my, ml),
    })
}

/// Fitted coefficients `a1..a4` of `f̂(x) = Σ a_k φ_k(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevModel {
    pub a: [f64; BASIS_LEN],
    /// Budget spent on the fit; `None` for a noiseless fit.
    pub epsilon: Option<f64>,
}

impl ChebyshevModel {
    pub fn new(a: [f64; BASIS_LEN]) -> Self {
        ChebyshevModel { a, epsilon: None }
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        let p = phi_all(x);
        self.a[0] * p[0] + self.a[1] * p[1] + self.a[2] * p[2] + self.a[3] * p[3]
    }
}

/// LU factorization with partial pivoting, `P·C = L·U`, packed in place.
struct Lu {
    lu: [[f64; 4]; 4],
    perm: [usize; 4],
}

impl Lu {
    fn factor(mut a: [[f64; 4]; 4]) -> Option<Self> {
        let mut perm = [0, 1, 2, 3];
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
                return None;
            }
            a.swap(col, pivot);
            perm.swap(col, pivot);
            for row in col + 1..4 {
                let f = a[row][col] / a[col][col];
                a[row][col] = f;
                for k in col + 1..4 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        Some(Lu { lu: a, perm })
    }

    fn solve(&self, b: &[f64; 4]) -> [f64; 4] {
        let mut y = [0.0; 4];
        for i in 0..4 {
            let mut s = b[self.perm[i]];
            for k in 0..i {
                s -= self.lu[i][k] * y[k];
            }
            y[i] = s;
        }
        let mut x = [0.0; 4];
        for i in (0..4).rev() {
            let mut s = y[i];
            for k in i + 1..4 {
                s -= self.lu[i][k] * x[k];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }

    fn inverse_norm1(&self) -> f64 {
        (0..4)
            .map(|j| {
                let mut e = [0.0; 4];
                e[j] = 1.0;
                self.solve(&e).iter().map(|v| v.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn norm1(c: &[[f64; 4]; 4]) -> f64 {
    (0..4)
        .map(|j| (0..4).map(|i| c[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number of `C`; infinite when `C` is singular.
pub fn condition_number(c: &[[f64; 4]; 4]) -> f64 {
    match Lu::factor(*c) {
        Some(lu) => norm1(c) * lu.inverse_norm1(),
        None => f64::INFINITY,
    }
}

/// Solves `C·a = B` by LU with partial pivoting.
pub fn solve(system: &NormalSystem) -> Result<ChebyshevModel> {
    let lu = Lu::factor(system.c).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&system.c) * lu.inverse_norm1();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let a = lu.solve(&system.b);
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { condition });
    }
    Ok(ChebyshevModel::new(a))
}

/// `f̂(x_i)` for every abscissa.
pub fn synthesize(model: &ChebyshevModel, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&xi| model.evaluate(xi)).collect()
}

/// `sqrt(mean((f̂(x_i) - y_i)²))`.
pub fn rmse(model: &ChebyshevModel, series: AttributeSeries<'_>) -> f64 {
    let n = series.len() as f64;
    let ss: f64 = series
        .x()
        .iter()
        .zip(series.y())
        .map(|(&x, &y)| (model.evaluate(x) - y).powi(2))
        .sum();
    (ss / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::{sample_laplace, substream, NoiseSpec, Purpose};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GRID4: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Dense least squares on the design matrix `[φ_k(x_i)]` via SVD.
    fn oracle_lstsq(x: &[f64], y: &[f64]) -> [f64; 4] {
        let design = DMatrix::from_fn(x.len(), 4, |i, k| {
            crate::chebyshev::chebyshev_t(k, 2.0 * x[i] - 1.0)
        });
        let rhs = DVector::from_column_slice(y);
        let sol = design.svd(true, true).solve(&rhs, 1e-14).unwrap();
        [sol[0], sol[1], sol[2], sol[3]]
    }

    fn sorted_uniform(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut y: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        y.sort_by(f64::total_cmp);
        y
    }

    #[test]
    fn power_sums_on_four_point_grid() {
        let ps = power_sums(&GRID4);
        assert_eq!(ps.n(), 4.0);
        assert!(close(ps.s(1), 2.0, 1e-15));
        assert!(close(ps.s(2), 14.0 / 9.0, 1e-15));
        assert!(close(ps.s(3), 4.0 / 3.0, 1e-15));
        assert!(close(ps.s(4), 98.0 / 81.0, 1e-15));
    }

    #[test]
    fn power_sums_of_zeros() {
        let ps = power_sums(&[0.0; 5]);
        assert_eq!(ps.0, [5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn power_sums_non_increasing() {
        let ps = power_sums(&abscissae(37));
        assert!(ps.0.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn first_row_on_four_point_grid() {
        let y = [0.0; 4];
        let sys =
            build_normal_system(AttributeSeries::new(&GRID4, &y).unwrap(), &NoiseVector::zeros(4))
                .unwrap();
        assert!(close(sys.c[0][0], 4.0, 1e-12));
        assert!(close(sys.c[0][1], 0.0, 1e-12));
        assert!(close(sys.c[0][2], 4.0 / 9.0, 1e-12));
        assert!(close(sys.c[0][3], 0.0, 1e-12));
        assert_eq!(sys.b, [0.0; 4]);
    }

    #[test]
    fn b1_is_sum_of_y_without_noise() {
        let y = GRID4;
        let sys =
            build_normal_system(AttributeSeries::new(&GRID4, &y).unwrap(), &NoiseVector::zeros(4))
                .unwrap();
        assert!(close(sys.b[0], 2.0, 1e-12));
    }

    #[test]
    fn coefficient_matrix_is_gram_matrix() {
        let x = abscissae(57);
        let c = coefficient_matrix(&power_sums(&x));
        for j in 0..4 {
            for k in 0..4 {
                let gram: f64 = x.iter().map(|&xi| phi_all(xi)[j] * phi_all(xi)[k]).sum();
                assert!(close(c[j][k], gram, 1e-9 * gram.abs().max(1.0)), "m{}{}", j + 1, k + 1);
            }
        }
    }

    #[test]
    fn constants_match_direct_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = abscissae(40);
        let y = sorted_uniform(40, &mut rng);
        let noise = sample_laplace(NoiseSpec::new(1.0).unwrap(), 40, &mut rng);
        let sys = build_normal_system(AttributeSeries::new(&x, &y).unwrap(), &noise).unwrap();
        for k in 0..4 {
            let direct: f64 = (0..40).map(|i| phi_all(x[i])[k] * (y[i] - noise.0[i])).sum();
            assert!(close(sys.b[k], direct, 1e-10), "b{}", k + 1);
        }
    }

    #[test]
    fn noise_length_mismatch() {
        let y = [0.0; 4];
        let err = build_normal_system(AttributeSeries::new(&GRID4, &y).unwrap(), &NoiseVector::zeros(3));
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn series_validation() {
        assert!(AttributeSeries::new(&GRID4, &[0.0; 3]).is_err());
        assert!(AttributeSeries::new(&[0.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(AttributeSeries::new_checked(&GRID4, &[0.0, 0.2, 0.1, 1.0]).is_err());
        assert!(AttributeSeries::new_checked(&[0.0, 0.5, 0.5, 1.0], &[0.0; 4]).is_err());
        assert!(AttributeSeries::new_checked(&GRID4, &[0.0, 0.1, 0.1, 1.0]).is_ok());
    }

    fn noiseless_fit(x: &[f64], y: &[f64]) -> ChebyshevModel {
        let series = AttributeSeries::new(x, y).unwrap();
        solve(&build_normal_system(series, &NoiseVector::zeros(x.len())).unwrap()).unwrap()
    }

    #[test]
    fn identity_is_recovered() {
        for n in [4, 5, 17, 100, 1001] {
            let x = abscissae(n);
            let m = noiseless_fit(&x, &x);
            let want = [0.5, 0.5, 0.0, 0.0];
            for k in 0..4 {
                assert!(close(m.a[k], want[k], 1e-12), "n={n} a={:?}", m.a);
            }
        }
    }

    #[test]
    fn constant_is_recovered() {
        let x = abscissae(50);
        let m = noiseless_fit(&x, &[0.3; 50]);
        assert!(close(m.a[0], 0.3, 1e-12));
        for k in 1..4 {
            assert!(close(m.a[k], 0.0, 1e-12));
        }
    }

    #[test]
    fn matches_dense_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = abscissae(100);
        for _ in 0..50 {
            let y = sorted_uniform(100, &mut rng);
            let got = noiseless_fit(&x, &y);
            let want = oracle_lstsq(&x, &y);
            for k in 0..4 {
                assert!(close(got.a[k], want[k], 1e-7), "{:?} vs {:?}", got.a, want);
            }
        }
    }

    #[test]
    fn residual_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = abscissae(500);
        let y = sorted_uniform(500, &mut rng);
        let noise = sample_laplace(NoiseSpec::new(0.5).unwrap(), 500, &mut rng);
        let sys = build_normal_system(AttributeSeries::new(&x, &y).unwrap(), &noise).unwrap();
        let m = solve(&sys).unwrap();
        let bmax = sys.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..4 {
            let r: f64 = (0..4).map(|k| sys.c[i][k] * m.a[k]).sum::<f64>() - sys.b[i];
            assert!(r.abs() <= 1e-8 * bmax);
        }
    }

    #[test]
    fn singular_system_is_rejected() {
        // All abscissae equal: only φ1 direction is determined.
        let x = [0.5; 6];
        let y = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let sys = build_normal_system(AttributeSeries::new(&x, &y).unwrap(), &NoiseVector::zeros(6))
            .unwrap();
        assert!(matches!(solve(&sys), Err(Error::Singular { .. })));
        assert!(condition_number(&sys.c) > MAX_CONDITION);
    }

    #[test]
    fn equispaced_grid_is_well_conditioned() {
        for n in [4, 10, 100, 10_000, 100_000] {
            let c = coefficient_matrix(&power_sums(&abscissae(n)));
            assert!(condition_number(&c) < 100.0, "n={n}");
        }
    }

    #[test]
    fn synthesize_examples() {
        let x = [0.0, 0.3, 1.0];
        assert_eq!(synthesize(&ChebyshevModel::new([1.0, 0.0, 0.0, 0.0]), &x), vec![1.0; 3]);
        let id = ChebyshevModel::new([0.5, 0.5, 0.0, 0.0]);
        assert!(close(synthesize(&id, &[0.25])[0], 0.25, 1e-15));
        assert_eq!(synthesize(&ChebyshevModel::new([0.0, 0.0, 1.0, 0.0]), &[0.5]), vec![-1.0]);
    }

    #[test]
    fn rmse_examples() {
        let x = abscissae(10);
        let id = ChebyshevModel::new([0.5, 0.5, 0.0, 0.0]);
        assert!(rmse(&id, AttributeSeries::new(&x, &x).unwrap()) < 1e-15);
        let zero = ChebyshevModel::new([0.0; 4]);
        assert_eq!(rmse(&zero, AttributeSeries::new(&x, &[1.0; 10]).unwrap()), 1.0);
    }

    #[test]
    fn fit_beats_random_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = abscissae(200);
        let y = sorted_uniform(200, &mut rng);
        let series = AttributeSeries::new(&x, &y).unwrap();
        let best = rmse(&noiseless_fit(&x, &y), series);
        for _ in 0..1000 {
            let fit = noiseless_fit(&x, &y);
            let a = std::array::from_fn(|k| fit.a[k] + rng.gen_range(-0.2..0.2));
            assert!(best <= rmse(&ChebyshevModel::new(a), series));
        }
    }

    #[test]
    fn seeded_noisy_fit_is_deterministic() {
        let x = abscissae(300);
        let y = sorted_uniform(300, &mut ChaCha8Rng::seed_from_u64(1));
        let fit = |seed| {
            let noise = sample_laplace(
                NoiseSpec::new(1.0).unwrap(),
                300,
                &mut substream(seed, Purpose::Noise, 0, 0),
            );
            solve(&build_normal_system(AttributeSeries::new(&x, &y).unwrap(), &noise).unwrap())
                .unwrap()
        };
        assert_eq!(fit(1), fit(1));
        assert_ne!(fit(1), fit(2));
    }

    proptest! {
        #[test]
        fn built_systems_are_symmetric(n in 4usize..400, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = abscissae(n);
            let y = sorted_uniform(n, &mut rng);
            let noise = sample_laplace(NoiseSpec::new(1.0).unwrap(), n, &mut rng);
            let sys = build_normal_system(AttributeSeries::new(&x, &y).unwrap(), &noise).unwrap();
            let max = sys.c.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((sys.c[i][j] - sys.c[j][i]).abs() <= 1e-9 * max);
                }
            }
        }

        #[test]
        fn noise_enters_linearly(n in 4usize..200, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = abscissae(n);
            let y1 = sorted_uniform(n, &mut rng);
            let y2 = sorted_uniform(n, &mut rng);
            let noise = sample_laplace(NoiseSpec::new(0.7).unwrap(), n, &mut rng);
            let zero = NoiseVector::zeros(n);
            let b = |y: &[f64], l: &NoiseVector| {
                build_normal_system(AttributeSeries::new(&x, y).unwrap(), l).unwrap().b
            };
            let (d1, d2) = (b(&y1, &noise), b(&y2, &noise));
            let (z1, z2) = (b(&y1, &zero), b(&y2, &zero));
            for k in 0..4 {
                // B(y, L) - B(y, 0) is the same for every y.
                prop_assert!(((d1[k] - z1[k]) - (d2[k] - z2[k])).abs() <= 1e-9 * (1.0 + d1[k].abs()));
                prop_assert!(((d2[k] - d1[k]) - (z2[k] - z1[k])).abs() <= 1e-9 * (1.0 + d1[k].abs()));
            }
        }
    }
}
