//! Norms on coordinate spaces, their duals, and smooth surrogates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A norm on a single coordinate block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseNorm {
    Euclidean,
    Ell1,
    EllInf,
}

impl BaseNorm {
    pub fn dual(self) -> BaseNorm {
        match self {
            BaseNorm::Euclidean => BaseNorm::Euclidean,
            BaseNorm::Ell1 => BaseNorm::EllInf,
            BaseNorm::EllInf => BaseNorm::Ell1,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            BaseNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            BaseNorm::Ell1 => v.iter().map(|x| x.abs()).sum(),
            BaseNorm::EllInf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// A maximizer of `<g, b>` over the unit ball; `<g, b>` then equals the dual norm of `g`.
    pub fn support_argmax(self, g: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; g.len()];
        match self {
            BaseNorm::Euclidean => {
                let n = self.norm(g);
                if n > 0.0 {
                    for (bi, gi) in b.iter_mut().zip(g) {
                        *bi = gi / n;
                    }
                }
            }
            BaseNorm::Ell1 => {
                if let Some((i, gi)) = g
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                {
                    if *gi != 0.0 {
                        b[i] = gi.signum();
                    }
                }
            }
            BaseNorm::EllInf => {
                for (bi, gi) in b.iter_mut().zip(g) {
                    *bi = if *gi >= 0.0 { 1.0 } else { -1.0 };
                }
            }
        }
        b
    }

    /// Smooth surrogate of `½‖v‖²`, writing its gradient into `grad`.
    ///
    /// Exact for the euclidean norm. For `ell1` uses `Σ sqrt(v²+μ²)`, for
    /// `ellinf` a log-sum-exp; both are upper bounds converging as `μ → 0`.
    pub fn smooth_half_sq(self, v: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        match self {
            BaseNorm::Euclidean => {
                grad.copy_from_slice(v);
                0.5 * v.iter().map(|x| x * x).sum::<f64>()
            }
            BaseNorm::Ell1 => {
                let mut s = 0.0;
                for (gi, x) in grad.iter_mut().zip(v) {
                    let r = (x * x + mu * mu).sqrt();
                    s += r;
                    *gi = x / r;
                }
                for gi in grad.iter_mut() {
                    *gi *= s;
                }
                0.5 * s * s
            }
            BaseNorm::EllInf => {
                if v.is_empty() {
                    return 0.0;
                }
                let m = self.norm(v);
                let mut z = 0.0;
                for (gi, x) in grad.iter_mut().zip(v) {
                    let p = ((x - m) / mu).exp();
                    let q = ((-x - m) / mu).exp();
                    z += p + q;
                    *gi = p - q;
                }
                let s = m + mu * z.ln();
                for gi in grad.iter_mut() {
                    *gi *= s / z;
                }
                0.5 * s * s
            }
        }
    }
}

/// Norm of an SN space.
///
/// `Product(p, d)` is `sqrt(‖x‖_p² + ‖x*‖_d²)` on `(x, x*)`, with `x` the first
/// `dim / 2` coordinates. The pair must be a norm and its dual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Euclidean,
    Ell1,
    EllInf,
    Product(BaseNorm, BaseNorm),
}

/// Sizes of the two blocks of a product space of dimension `dim`.
pub fn product_split(dim: usize) -> (usize, usize) {
    (dim / 2, dim - dim / 2)
}

impl NormKind {
    pub fn check(&self) -> Result<()> {
        if let NormKind::Product(p, d) = self {
            if p.dual() != *d {
                return Err(Error::InvalidNorm(format!(
                    "product blocks {p:?} and {d:?} are not a dual pair"
                )));
            }
        }
        Ok(())
    }

    pub fn from_base(b: BaseNorm) -> NormKind {
        match b {
            BaseNorm::Euclidean => NormKind::Euclidean,
            BaseNorm::Ell1 => NormKind::Ell1,
            BaseNorm::EllInf => NormKind::EllInf,
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, NormKind::Product(..))
    }

    /// Euclidean, or a product of two euclidean blocks (which is again euclidean).
    pub fn is_euclidean(&self) -> bool {
        matches!(
            self,
            NormKind::Euclidean | NormKind::Product(BaseNorm::Euclidean, BaseNorm::Euclidean)
        )
    }

    pub fn dual(&self) -> NormKind {
        match *self {
            NormKind::Euclidean => NormKind::Euclidean,
            NormKind::Ell1 => NormKind::EllInf,
            NormKind::EllInf => NormKind::Ell1,
            NormKind::Product(p, d) => NormKind::Product(p.dual(), d.dual()),
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match *self {
            NormKind::Euclidean => BaseNorm::Euclidean.norm(v),
            NormKind::Ell1 => BaseNorm::Ell1.norm(v),
            NormKind::EllInf => BaseNorm::EllInf.norm(v),
            NormKind::Product(p, d) => {
                let (n1, _) = product_split(v.len());
                p.norm(&v[..n1]).hypot(d.norm(&v[n1..]))
            }
        }
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        self.dual().norm(v)
    }

    /// A maximizer of `<g, b>` over the unit ball of this norm.
    pub fn support_argmax(&self, g: &[f64]) -> Vec<f64> {
        match *self {
            NormKind::Product(p, d) => {
                let (n1, _) = product_split(g.len());
                let (g1, g2) = g.split_at(n1);
                let a = p.dual().norm(g1);
                let b = d.dual().norm(g2);
                let t = a.hypot(b);
                let mut out = p.support_argmax(g1);
                out.extend(d.support_argmax(g2));
                if t > 0.0 {
                    for x in &mut out[..n1] {
                        *x *= a / t;
                    }
                    for x in &mut out[n1..] {
                        *x *= b / t;
                    }
                }
                out
            }
            _ => self.base().support_argmax(g),
        }
    }

    /// Smooth surrogate of `½‖v‖²` with gradient; see [`BaseNorm::smooth_half_sq`].
    pub fn smooth_half_sq(&self, v: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        match *self {
            NormKind::Product(p, d) => {
                let (n1, _) = product_split(v.len());
                let (g1, g2) = grad.split_at_mut(n1);
                p.smooth_half_sq(&v[..n1], mu, g1) + d.smooth_half_sq(&v[n1..], mu, g2)
            }
            _ => self.base().smooth_half_sq(v, mu, grad),
        }
    }

    fn base(&self) -> BaseNorm {
        match self {
            NormKind::Euclidean => BaseNorm::Euclidean,
            NormKind::Ell1 => BaseNorm::Ell1,
            NormKind::EllInf => BaseNorm::EllInf,
            NormKind::Product(..) => unreachable!("product norm has no single base"),
        }
    }
}
