//! Chebyshev polynomials of the first kind and the shifted basis on `[0, 1]`.
//!
//! The fit uses four basis functions `φ_k(x) = T_{k-1}(2x - 1)`:
//!
//! ```text
//! φ1(x) = 1
//! φ2(x) = 2x - 1
//! φ3(x) = 8x² - 8x + 1
//! φ4(x) = 32x³ - 48x² + 18x - 1
//! ```
//!
//! [`phi`] evaluates the closed forms directly. [`chebyshev_t`] is the
//! three-term recurrence and is kept as the reference the closed forms are
//! checked against.

use std::fmt;

/// Number of basis functions in the fitted model.
pub const BASIS_LEN: usize = 4;

/// Position of a basis function, `1..=4`. Basis `k` has degree `k - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex(u8);

impl BasisIndex {
    pub const ALL: [BasisIndex; BASIS_LEN] =
        [BasisIndex(1), BasisIndex(2), BasisIndex(3), BasisIndex(4)];

    /// Returns `None` unless `1 <= k <= 4`.
    pub fn new(k: usize) -> Option<Self> {
        (1..=BASIS_LEN).contains(&k).then(|| BasisIndex(k as u8))
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub fn degree(self) -> usize {
        self.get() - 1
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "φ{}", self.0)
    }
}

/// `T_n(x)` via `T_0 = 1`, `T_1 = x`, `T_{n+1} = 2x·T_n - T_{n-1}`.
///
/// Arguments outside `[-1, 1]` are evaluated anyway; the polynomial is
/// simply no longer bounded by one there.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..n {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `φ_k(x)` from the hard-coded closed forms.
#[inline]
pub fn phi(k: BasisIndex, x: f64) -> f64 {
    match k.0 {
        1 => 1.0,
        2 => 2.0 * x - 1.0,
        3 => (8.0 * x - 8.0) * x + 1.0,
        _ => ((32.0 * x - 48.0) * x + 18.0) * x - 1.0,
    }
}

/// All four basis values at `x`, in order.
#[inline]
pub fn phi_all(x: f64) -> [f64; BASIS_LEN] {
    let x2 = x * x;
    [
        1.0,
        2.0 * x - 1.0,
        8.0 * x2 - 8.0 * x + 1.0,
        32.0 * x2 * x - 48.0 * x2 + 18.0 * x - 1.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k(i: usize) -> BasisIndex {
        BasisIndex::new(i).unwrap()
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(chebyshev_t(0, 0.7), 1.0);
        assert_eq!(chebyshev_t(2, 0.0), -1.0);
        assert_eq!(chebyshev_t(4, 1.0), 1.0);
    }

    #[test]
    fn shifted_basis_examples() {
        assert_eq!(phi(k(2), 0.5), 0.0);
        assert_eq!(phi(k(3), 0.5), -1.0);
        assert_eq!(phi(k(4), 1.0), 1.0);
    }

    #[test]
    fn closed_forms_low_degree() {
        for &x in &[-1.0, -0.3, 0.0, 0.25, 0.9, 1.0] {
            let x: f64 = x;
            assert!((chebyshev_t(2, x) - (2.0 * x * x - 1.0)).abs() < 1e-15);
            assert!((chebyshev_t(3, x) - (4.0 * x.powi(3) - 3.0 * x)).abs() < 1e-14);
            assert!((chebyshev_t(4, x) - (8.0 * x.powi(4) - 8.0 * x * x + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_index_bounds() {
        assert!(BasisIndex::new(0).is_none());
        assert!(BasisIndex::new(5).is_none());
        assert_eq!(k(4).degree(), 3);
    }

    #[test]
    fn phi_all_matches_phi() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            let all = phi_all(x);
            for b in BasisIndex::ALL {
                assert!((all[b.get() - 1] - phi(b, x)).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bounded_on_canonical_interval(n in 1usize..40, x in -1.0f64..=1.0) {
            prop_assert!(chebyshev_t(n, x).abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn closed_forms_agree_with_recurrence(i in 1usize..=4, x in 0.0f64..=1.0) {
            let b = k(i);
            prop_assert!((phi(b, x) - chebyshev_t(i - 1, 2.0 * x - 1.0)).abs() <= 1e-12);
        }

        #[test]
        fn three_term_recurrence_holds(n in 1usize..30, x in -1.0f64..=1.0) {
            let lhs = chebyshev_t(n + 1, x);
            let rhs = 2.0 * x * chebyshev_t(n, x) - chebyshev_t(n - 1, x);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
