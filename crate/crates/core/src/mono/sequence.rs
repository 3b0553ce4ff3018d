//! Tail, head and their combinations on finitely supported sequences.
//!
//! A sequence `x` of length `N` maps to a vector of length `N + 1`; the last
//! entry is the constant value the image takes at every index beyond `N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `λ·T + μ·H`, with the pure tail and head operators as special cases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqKind {
    Tail,
    Head,
    Combo(f64, f64),
}

impl SeqKind {
    /// `G = T - H`.
    pub const GOSSEZ: SeqKind = SeqKind::Combo(1.0, -1.0);

    /// Coefficients `(λ, μ)`.
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            SeqKind::Tail => (1.0, 0.0),
            SeqKind::Head => (0.0, 1.0),
            SeqKind::Combo(l, m) => (l, m),
        }
    }

    /// Monotone exactly when `λ + μ ≥ 0`.
    pub fn is_monotone(self) -> bool {
        let (l, m) = self.coefficients();
        l + m >= 0.0
    }

    pub fn scaled(self, s: f64) -> SeqKind {
        let (l, m) = self.coefficients();
        SeqKind::Combo(l * s, m * s)
    }

    pub fn apply(self, x: &[f64]) -> Vec<f64> {
        let (l, m) = self.coefficients();
        combo(l, m, x)
    }

    /// Transpose applied to `y` of length `N + 1`.
    pub fn apply_transpose(self, y: &[f64]) -> Vec<f64> {
        let (l, m) = self.coefficients();
        let n = y.len() - 1;
        let mut out = vec![0.0; n];
        let mut pre = 0.0;
        for k in 0..n {
            pre += y[k];
            out[k] += l * pre;
        }
        let mut suf = y[n];
        for k in (0..n).rev() {
            suf += y[k];
            out[k] += m * suf;
        }
        out
    }
}

/// `(Tx)_n = Σ_{k≥n} x_k`; beyond the support the value is 0.
pub fn tail(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n + 1];
    let mut acc = 0.0;
    for k in (0..n).rev() {
        acc += x[k];
        out[k] = acc;
    }
    out
}

/// `(Hx)_n = Σ_{k≤n} x_k`; beyond the support the value is `Σ x_k`.
pub fn head(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n + 1];
    let mut acc = 0.0;
    for k in 0..n {
        acc += x[k];
        out[k] = acc;
    }
    out[n] = acc;
    out
}

/// `λ·Tx + μ·Hx`.
pub fn combo(lambda: f64, mu: f64, x: &[f64]) -> Vec<f64> {
    let t = tail(x);
    let h = head(x);
    t.iter().zip(&h).map(|(a, b)| lambda * a + mu * b).collect()
}

/// Checks that `x` fits in a truncation of length `n` and zero-pads it.
pub fn truncate(x: &[f64], n: usize) -> Result<Vec<f64>> {
    if let Some(last) = x.iter().rposition(|v| *v != 0.0) {
        if last >= n {
            return Err(Error::InvalidArgument(format!(
                "support {} exceeds truncation {n}",
                last + 1
            )));
        }
    }
    let mut v = x[..x.len().min(n)].to_vec();
    v.resize(n, 0.0);
    Ok(v)
}

/// Pairing of `x` (length `N`) with a sequence of length `N + 1`.
pub fn pair(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_vector() {
        let e1 = [1.0, 0.0, 0.0];
        assert_eq!(tail(&e1), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(head(&e1), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(pair(&e1, &tail(&e1)), 1.0);
    }

    #[test]
    fn truncation_errors() {
        assert!(truncate(&[0.0, 1.0, 0.0], 1).is_err());
        assert_eq!(truncate(&[1.0, 0.0, 0.0], 2).unwrap(), vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn heads_and_tails_pair_equally(x in prop::collection::vec(-3.0..3.0f64, 1..40)) {
            let a = pair(&x, &head(&x));
            let b = pair(&x, &tail(&x));
            let sigma: f64 = x.iter().sum();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            prop_assert!(b - 0.5 * sigma * sigma >= -1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn combo_monotone(x in prop::collection::vec(-3.0..3.0f64, 8), y in prop::collection::vec(-3.0..3.0f64, 8),
                          l in -2.0..2.0f64, m in -2.0..2.0f64) {
            let k = SeqKind::Combo(l, m);
            let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let v = pair(&d, &k.apply(&d));
            if k.is_monotone() {
                prop_assert!(v >= -1e-12 * (1.0 + v.abs()));
            }
        }

        #[test]
        fn transpose_is_adjoint(x in prop::collection::vec(-3.0..3.0f64, 6), y in prop::collection::vec(-3.0..3.0f64, 7),
                                l in -2.0..2.0f64, m in -2.0..2.0f64) {
            let k = SeqKind::Combo(l, m);
            let lhs = pair(&y, &k.apply(&x));
            let rhs = pair(&x, &k.apply_transpose(&y));
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }
    }
}
