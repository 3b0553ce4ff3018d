//! Closed-form convex functions with conjugates, proximal maps and
//! subgradients, plus brute-force Legendre oracles.

mod touching;

pub use touching::{
    circled_conjugate, coincidence_inner, is_touching, project_to_coincidence, touching_dual_check, CoincidenceStep,
    CoincidenceTrace, DualCheck, TouchRecord, TouchVerdict, TouchingCertificate,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::ext::ExtReal;
use crate::grid::Grid;
use crate::linalg::{orth, QuadOnAffine};
use crate::norm::{BaseNorm, NormKind};
use crate::optim::{nelder_mead, Budget, NelderMeadOptions};
use crate::sets::LPositiveSet;
use crate::space::Point;

/// Convex sets with exact projections and support functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ConvexSet {
    /// Axis-aligned box `[lo, hi]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Span of the given vectors in `R^dim`.
    Subspace { dim: usize, vectors: Vec<Vec<f64>> },
}

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Subspace { dim, .. } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lo, hi } => {
                check_len(lo.len(), hi.len())?;
                if lo.iter().zip(hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
                    return Err(Error::InvalidArgument("box needs finite lo <= hi".into()));
                }
            }
            ConvexSet::Subspace { dim, vectors } => {
                for v in vectors {
                    check_len(*dim, v.len())?;
                }
            }
        }
        Ok(())
    }

    fn basis(&self) -> Option<DMatrix<f64>> {
        match self {
            ConvexSet::Subspace { dim, vectors } => {
                let cols: Vec<DVector<f64>> = vectors.iter().map(|v| DVector::from_column_slice(v)).collect();
                if cols.is_empty() {
                    Some(DMatrix::zeros(*dim, 0))
                } else {
                    Some(orth(&DMatrix::from_columns(&cols)))
                }
            }
            ConvexSet::Box { .. } => None,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            ConvexSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| *v >= a - 1e-12 && *v <= b + 1e-12),
            ConvexSet::Subspace { .. } => {
                let q = self.basis().expect("subspace");
                crate::linalg::dist_to_span(&q, x) <= 1e-10 * (1.0 + x.norm())
            }
        }
    }

    pub fn project(&self, x: &Point) -> Point {
        match self {
            ConvexSet::Box { lo, hi } => {
                DVector::from_iterator(x.len(), x.iter().zip(lo.iter().zip(hi)).map(|(v, (a, b))| v.clamp(*a, *b)))
            }
            ConvexSet::Subspace { .. } => {
                let q = self.basis().expect("subspace");
                &q * (q.transpose() * x)
            }
        }
    }

    /// Support function `sup_{x ∈ C} <x, y>`.
    pub fn support(&self, y: &Point) -> ExtReal {
        match self {
            ConvexSet::Box { lo, hi } => ExtReal::new(
                y.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (a, b))| (v * a).max(v * b))
                    .sum(),
            ),
            ConvexSet::Subspace { .. } => {
                let q = self.basis().expect("subspace");
                if crate::linalg::dist_to_span(&crate::linalg::complement(&q), y) <= 1e-10 * (1.0 + y.norm()) {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
        }
    }
}

/// A member of the closed-form convex family.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexFn {
    /// `½xᵀQx + bᵀx + c` with `Q ⪰ 0`.
    Quadratic {
        #[serde(with = "crate::serde_mat::rows")]
        q: DMatrix<f64>,
        b: Vec<f64>,
        c: f64,
    },
    /// Indicator of a convex set.
    Indicator { set: ConvexSet },
    /// `α‖x‖^p` with `p ∈ {1, 2}`.
    NormPower { dim: usize, alpha: f64, power: u8, norm: BaseNorm },
    /// Pointwise sum.
    Sum { terms: Vec<ConvexFn> },
    /// Fitzpatrick function `Φ_A` of an L-positive set.
    Fitzpatrick { set: Box<LPositiveSet> },
    /// `(x, x*) ↦ k(x) + k*(x*)` on `E × E*`.
    SeparablePair { k: Box<ConvexFn> },
    /// `q_L + 𝕀_A`.
    QuadraticOnSet { set: Box<LPositiveSet> },
    /// `x ↦ output · inner(input · x)`.
    Scaled { inner: Box<ConvexFn>, input: f64, output: f64 },
}

impl ConvexFn {
    /// `½xᵀQx + bᵀx + c`.
    pub fn quadratic(q: DMatrix<f64>, b: Vec<f64>, c: f64) -> ConvexFn {
        ConvexFn::Quadratic { q, b, c }
    }

    /// `½‖x‖²` on `R^dim` (euclidean).
    pub fn half_square(dim: usize) -> ConvexFn {
        ConvexFn::quadratic(DMatrix::identity(dim, dim), vec![0.0; dim], 0.0)
    }

    /// `α‖x‖` for the given base norm.
    pub fn norm(dim: usize, alpha: f64, norm: BaseNorm) -> ConvexFn {
        ConvexFn::NormPower { dim, alpha, power: 1, norm }
    }

    /// `|x|` on `R`.
    pub fn abs() -> ConvexFn {
        ConvexFn::norm(1, 1.0, BaseNorm::Euclidean)
    }

    pub fn indicator_box(lo: Vec<f64>, hi: Vec<f64>) -> ConvexFn {
        ConvexFn::Indicator { set: ConvexSet::Box { lo, hi } }
    }

    pub fn indicator_subspace(dim: usize, vectors: Vec<Vec<f64>>) -> ConvexFn {
        ConvexFn::Indicator { set: ConvexSet::Subspace { dim, vectors } }
    }

    pub fn sum(terms: Vec<ConvexFn>) -> ConvexFn {
        ConvexFn::Sum { terms }
    }

    pub fn separable_pair(k: ConvexFn) -> ConvexFn {
        ConvexFn::SeparablePair { k: Box::new(k) }
    }

    pub fn scaled(inner: ConvexFn, input: f64, output: f64) -> ConvexFn {
        ConvexFn::Scaled { inner: Box::new(inner), input, output }
    }

    pub fn fitzpatrick(set: LPositiveSet) -> ConvexFn {
        ConvexFn::Fitzpatrick { set: Box::new(set) }
    }

    pub fn quadratic_on_set(set: LPositiveSet) -> ConvexFn {
        ConvexFn::QuadraticOnSet { set: Box::new(set) }
    }

    /// Dimension of the domain space, when determined by the parameters.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConvexFn::Quadratic { b, .. } => Some(b.len()),
            ConvexFn::Indicator { set } => Some(set.dim()),
            ConvexFn::NormPower { dim, .. } => Some(*dim),
            ConvexFn::Sum { terms } => terms.iter().find_map(ConvexFn::dim),
            ConvexFn::Fitzpatrick { set } | ConvexFn::QuadraticOnSet { set } => Some(set.space().dim()),
            ConvexFn::SeparablePair { k } => k.dim().map(|d| 2 * d),
            ConvexFn::Scaled { inner, .. } => inner.dim(),
        }
    }

    /// Checks the parameter constraints of each family.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexFn::Quadratic { q, b, c } => {
                check_len(b.len(), q.nrows())?;
                check_len(b.len(), q.ncols())?;
                let (vals, _) = crate::linalg::sym_eigen(q);
                if (q - q.transpose()).amax() > 1e-12 || vals.iter().any(|v| *v < -1e-12 * (1.0 + q.amax())) {
                    return Err(Error::InvalidArgument("quadratic needs symmetric Q ⪰ 0".into()));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidArgument("quadratic constant must be finite".into()));
                }
            }
            ConvexFn::Indicator { set } => set.validate()?,
            ConvexFn::NormPower { alpha, power, .. } => {
                if !(*alpha > 0.0) || !(*power == 1 || *power == 2) {
                    return Err(Error::InvalidArgument("norm power needs alpha > 0 and p in {1, 2}".into()));
                }
            }
            ConvexFn::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidArgument("empty sum".into()));
                }
                let d = self.dim();
                for t in terms {
                    t.validate()?;
                    if let (Some(a), Some(b)) = (d, t.dim()) {
                        check_len(a, b)?;
                    }
                }
            }
            ConvexFn::SeparablePair { k } => k.validate()?,
            ConvexFn::Scaled { inner, input, output } => {
                if !(*input > 0.0 && *output > 0.0) {
                    return Err(Error::InvalidArgument("scales must be positive".into()));
                }
                inner.validate()?;
            }
            ConvexFn::Fitzpatrick { .. } | ConvexFn::QuadraticOnSet { .. } => {}
        }
        Ok(())
    }

    /// The function as a quadratic on an affine set, when it is one.
    pub fn as_quad(&self) -> Option<QuadOnAffine> {
        match self {
            ConvexFn::Quadratic { q, b, c } => Some(QuadOnAffine::quadratic(q.clone(), DVector::from_column_slice(b), *c)),
            ConvexFn::Indicator { set } => set
                .basis()
                .map(|q| QuadOnAffine::indicator(DVector::zeros(set.dim()), &q)),
            ConvexFn::NormPower { dim, alpha, power: 2, norm: BaseNorm::Euclidean } => Some(QuadOnAffine::quadratic(
                DMatrix::identity(*dim, *dim) * (2.0 * alpha),
                DVector::zeros(*dim),
                0.0,
            )),
            ConvexFn::NormPower { .. } => None,
            ConvexFn::Sum { terms } => {
                let mut acc = terms[0].as_quad()?;
                for t in &terms[1..] {
                    acc = acc.add(&t.as_quad()?)?;
                }
                Some(acc)
            }
            ConvexFn::Scaled { inner, input, output } => {
                let q = inner.as_quad()?;
                Some(QuadOnAffine {
                    h: &q.h * (output * input * input),
                    g: &q.g * (output * input),
                    c: q.c * output,
                    p0: &q.p0 / *input,
                    v: q.v,
                })
            }
            ConvexFn::SeparablePair { k } => {
                let a = k.as_quad()?;
                let b = a.conjugate_fn();
                Some(direct_sum(&a, &b))
            }
            ConvexFn::Fitzpatrick { set } => crate::fitzpatrick::phi_quad(set),
            ConvexFn::QuadraticOnSet { set } => {
                let (p0, p) = set.affine_rep()?;
                let l = set.space().l().clone();
                let n = p0.len();
                Some(QuadOnAffine { h: l, g: DVector::zeros(n), c: 0.0, v: orth(&p), p0 })
            }
        }
    }

    pub fn evaluate(&self, x: &Point) -> Result<ExtReal> {
        self.evaluate_with(x, &Budget::default())
    }

    /// Value at `x`; `+inf` outside the effective domain.
    pub fn evaluate_with(&self, x: &Point, budget: &Budget) -> Result<ExtReal> {
        if let Some(d) = self.dim() {
            check_len(d, x.len())?;
        }
        Ok(match self {
            ConvexFn::Quadratic { q, b, c } => {
                ExtReal::new(0.5 * x.dot(&(q * x)) + x.iter().zip(b).map(|(u, v)| u * v).sum::<f64>() + c)
            }
            ConvexFn::Indicator { set } => {
                if set.contains(x) {
                    ExtReal::ZERO
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFn::NormPower { alpha, power, norm, .. } => ExtReal::new(alpha * norm.norm(x.as_slice()).powi(*power as i32)),
            ConvexFn::Sum { terms } => {
                let mut acc = ExtReal::ZERO;
                for t in terms {
                    acc = acc + t.evaluate_with(x, budget)?;
                    if acc.is_inf() {
                        break;
                    }
                }
                acc
            }
            ConvexFn::Fitzpatrick { set } => crate::fitzpatrick::phi(set, x, budget)?,
            ConvexFn::SeparablePair { k } => {
                let n = x.len() / 2;
                let xa = DVector::from_column_slice(&x.as_slice()[..n]);
                let xs = DVector::from_column_slice(&x.as_slice()[n..]);
                let a = k.evaluate_with(&xa, budget)?;
                if a.is_inf() {
                    return Ok(ExtReal::PosInf);
                }
                a + k.conjugate_with(&xs, budget)?
            }
            ConvexFn::QuadraticOnSet { set } => {
                if set.contains(x, 1e-9) {
                    ExtReal::new(set.space().q_l(x))
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFn::Scaled { inner, input, output } => match inner.evaluate_with(&(x * *input), budget)? {
                ExtReal::Finite(v) => ExtReal::new(output * v),
                ExtReal::PosInf => ExtReal::PosInf,
            },
        })
    }

    pub fn conjugate(&self, y: &Point) -> Result<ExtReal> {
        self.conjugate_with(y, &Budget::default())
    }

    /// Closed-form conjugate `f*(y) = sup_x [<x, y> - f(x)]`.
    pub fn conjugate_with(&self, y: &Point, budget: &Budget) -> Result<ExtReal> {
        if let Some(d) = self.dim() {
            check_len(d, y.len())?;
        }
        match self {
            ConvexFn::NormPower { alpha, power: 1, norm, .. } => {
                let d = norm.dual().norm(y.as_slice());
                Ok(if d <= alpha * (1.0 + 1e-12) { ExtReal::ZERO } else { ExtReal::PosInf })
            }
            ConvexFn::NormPower { alpha, power: 2, norm, .. } => {
                let d = norm.dual().norm(y.as_slice());
                Ok(ExtReal::new(d * d / (4.0 * alpha)))
            }
            ConvexFn::Indicator { set: set @ ConvexSet::Box { .. } } => Ok(set.support(y)),
            ConvexFn::Scaled { inner, input, output } => {
                match inner.conjugate_with(&(y / (input * output)), budget)? {
                    ExtReal::Finite(v) => Ok(ExtReal::new(output * v)),
                    ExtReal::PosInf => Ok(ExtReal::PosInf),
                }
            }
            ConvexFn::SeparablePair { k } => {
                let n = y.len() / 2;
                let ya = DVector::from_column_slice(&y.as_slice()[..n]);
                let yb = DVector::from_column_slice(&y.as_slice()[n..]);
                let a = k.conjugate_with(&ya, budget)?;
                if a.is_inf() {
                    return Ok(ExtReal::PosInf);
                }
                Ok(a + k.evaluate_with(&yb, budget)?)
            }
            ConvexFn::Fitzpatrick { set } => crate::fitzpatrick::phi_conjugate(set, y, budget),
            _ => match self.as_quad() {
                Some(q) => Ok(q.conjugate(y)),
                None => Err(Error::NoClosedForm(self.family().into())),
            },
        }
    }

    /// Family tag as used in JSON.
    pub fn family(&self) -> &'static str {
        match self {
            ConvexFn::Quadratic { .. } => "quadratic",
            ConvexFn::Indicator { .. } => "indicator",
            ConvexFn::NormPower { .. } => "norm_power",
            ConvexFn::Sum { .. } => "sum",
            ConvexFn::Fitzpatrick { .. } => "fitzpatrick",
            ConvexFn::SeparablePair { .. } => "separable_pair",
            ConvexFn::QuadraticOnSet { .. } => "quadratic_on_set",
            ConvexFn::Scaled { .. } => "scaled",
        }
    }

    /// `argmin_x γ f(x) + ½‖x - z‖²` (euclidean).
    pub fn prox(&self, z: &Point, gamma: f64) -> Result<Point> {
        if let Some(d) = self.dim() {
            check_len(d, z.len())?;
        }
        if let Some(q) = self.as_quad() {
            return Ok(q.prox(z, gamma));
        }
        match self {
            ConvexFn::Indicator { set } => Ok(set.project(z)),
            ConvexFn::NormPower { alpha, power: 1, norm, .. } => Ok(prox_norm(*norm, z, gamma * alpha)),
            ConvexFn::Scaled { inner, input, output } => {
                let u = inner.prox(&(z * *input), gamma * output * input * input)?;
                Ok(u / *input)
            }
            ConvexFn::SeparablePair { k } => {
                let n = z.len() / 2;
                let za = DVector::from_column_slice(&z.as_slice()[..n]);
                let zb = DVector::from_column_slice(&z.as_slice()[n..]);
                let pa = k.prox(&za, gamma)?;
                // Moreau: prox_{γk*}(v) = v - γ prox_{k/γ}(v/γ).
                let pb = &zb - k.prox(&(&zb / gamma), 1.0 / gamma)? * gamma;
                Ok(crate::space::SnSpace::join(pa.as_slice(), pb.as_slice()))
            }
            ConvexFn::Sum { terms } => prox_sum(terms, z, gamma),
            _ => self.prox_numeric(z, gamma),
        }
    }

    fn prox_numeric(&self, z: &Point, gamma: f64) -> Result<Point> {
        let budget = Budget::default();
        let obj = |x: &[f64]| -> f64 {
            let xv = DVector::from_column_slice(x);
            match self.evaluate_with(&xv, &budget) {
                Ok(ExtReal::Finite(v)) => gamma * v + 0.5 * (&xv - z).norm_squared(),
                _ => f64::INFINITY,
            }
        };
        let o = NelderMeadOptions { initial_step: 0.1, max_evals: 20_000, ..Default::default() };
        let m = nelder_mead(obj, z.as_slice(), &o);
        if !m.value.is_finite() {
            return Err(Error::NoClosedForm(format!("prox of {}", self.family())));
        }
        Ok(DVector::from_vec(m.x))
    }

    /// An element of `∂f(x)`.
    pub fn subgradient(&self, x: &Point) -> Result<Point> {
        if let Some(d) = self.dim() {
            check_len(d, x.len())?;
        }
        let n = x.len();
        match self {
            ConvexFn::Quadratic { q, b, .. } => Ok(q * x + DVector::from_column_slice(b)),
            ConvexFn::Indicator { set } => {
                if set.contains(x) {
                    Ok(DVector::zeros(n))
                } else {
                    Err(Error::InvalidArgument("point outside the domain".into()))
                }
            }
            ConvexFn::NormPower { alpha, power, norm, .. } => {
                let nv = norm.norm(x.as_slice());
                if nv == 0.0 {
                    return Ok(DVector::zeros(n));
                }
                // a norm-one dual vector attaining <x, s> = ‖x‖
                let s = DVector::from_vec(norm.dual().support_argmax(x.as_slice()));
                Ok(if *power == 1 { s * *alpha } else { s * (2.0 * alpha * nv) })
            }
            ConvexFn::Sum { terms } => {
                let mut acc = DVector::zeros(n);
                for t in terms {
                    acc += t.subgradient(x)?;
                }
                Ok(acc)
            }
            ConvexFn::Scaled { inner, input, output } => Ok(inner.subgradient(&(x * *input))? * (input * output)),
            _ => {
                if let Some(q) = self.as_quad() {
                    if q.contains(x) {
                        return Ok(q.gradient(x));
                    }
                    return Err(Error::InvalidArgument("point outside the domain".into()));
                }
                Err(Error::NoClosedForm(format!("subgradient of {}", self.family())))
            }
        }
    }

    /// Fenchel–Young gap `f(x) + f*(y) - <x, y>`, zero exactly when `y ∈ ∂f(x)`.
    pub fn fenchel_young_gap(&self, x: &Point, y: &Point) -> Result<ExtReal> {
        let a = self.evaluate(x)?;
        if a.is_inf() {
            return Ok(ExtReal::PosInf);
        }
        Ok(match a + self.conjugate(y)? {
            ExtReal::Finite(v) => ExtReal::new((v - x.dot(y)).max(0.0)),
            ExtReal::PosInf => ExtReal::PosInf,
        })
    }
}

fn direct_sum(a: &QuadOnAffine, b: &QuadOnAffine) -> QuadOnAffine {
    let (n, m) = (a.dim(), b.dim());
    let mut h = DMatrix::zeros(n + m, n + m);
    h.view_mut((0, 0), (n, n)).copy_from(&a.h);
    h.view_mut((n, n), (m, m)).copy_from(&b.h);
    let mut v = DMatrix::zeros(n + m, a.v.ncols() + b.v.ncols());
    v.view_mut((0, 0), (n, a.v.ncols())).copy_from(&a.v);
    v.view_mut((n, a.v.ncols()), (m, b.v.ncols())).copy_from(&b.v);
    QuadOnAffine {
        h,
        g: DVector::from_iterator(n + m, a.g.iter().chain(b.g.iter()).copied()),
        c: a.c + b.c,
        p0: DVector::from_iterator(n + m, a.p0.iter().chain(b.p0.iter()).copied()),
        v,
    }
}

/// `prox_{t‖·‖}` for a base norm.
fn prox_norm(norm: BaseNorm, z: &Point, t: f64) -> Point {
    match norm {
        BaseNorm::Euclidean => {
            let nz = z.norm();
            if nz <= t {
                DVector::zeros(z.len())
            } else {
                z * (1.0 - t / nz)
            }
        }
        BaseNorm::Ell1 => z.map(|v| v.signum() * (v.abs() - t).max(0.0)),
        BaseNorm::EllInf => z - project_l1_ball(&(z / t)) * t,
    }
}

/// Euclidean projection onto the unit `ell1` ball.
fn project_l1_ball(v: &Point) -> Point {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= 1.0 {
        return v.clone();
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i as f64 + 1.0);
        if *ui > t {
            theta = t;
        }
    }
    v.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Parallel proximal algorithm for `prox_{γ Σ f_i}`.
fn prox_sum(terms: &[ConvexFn], z: &Point, gamma: f64) -> Result<Point> {
    let m = terms.len() as f64;
    // Σ_i [γ f_i(x) + ‖x - z‖²/(2m)]; prox of the i-th term with step λ:
    // prox_{λγ f_i / (1 + λ/m)}((v + λ z/m) / (1 + λ/m)).
    let lam = 1.0;
    let s = 1.0 + lam / m;
    let mut ys: Vec<Point> = vec![z.clone(); terms.len()];
    let mut x = z.clone();
    for _ in 0..5000 {
        let ps: Vec<Point> = terms
            .iter()
            .zip(&ys)
            .map(|(t, y)| t.prox(&((y + z * (lam / m)) / s), lam * gamma / s))
            .collect::<Result<_>>()?;
        let p = ps.iter().fold(DVector::zeros(z.len()), |a, b| a + b) / m;
        for (y, pi) in ys.iter_mut().zip(&ps) {
            *y += &p * 2.0 - &x - pi;
        }
        let step = (&p - &x).norm();
        x = p;
        if step <= 1e-14 * (1.0 + x.norm()) {
            break;
        }
    }
    Ok(x)
}

/// `max over grid points x of <x, y> - f(x)`, a lower bound of `f*(y)`.
pub fn legendre_oracle(f: &ConvexFn, y: &Point, grid: &Grid) -> Result<f64> {
    check_len(grid.dim(), y.len())?;
    let mut best = f64::NEG_INFINITY;
    for x in grid.points() {
        if let ExtReal::Finite(v) = f.evaluate(&x)? {
            best = best.max(x.dot(y) - v);
        }
    }
    if best == f64::NEG_INFINITY {
        Err(Error::EmptyGrid)
    } else {
        Ok(best)
    }
}

/// Norm kind matching a base norm; convenience for callers building spaces.
pub fn norm_kind(b: BaseNorm) -> NormKind {
    NormKind::from_base(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::pt;
    use proptest::prelude::*;

    #[test]
    fn evaluate_examples() {
        assert_eq!(ConvexFn::half_square(1).evaluate(&pt(&[2.0])).unwrap(), ExtReal::Finite(2.0));
        let zero = ConvexFn::indicator_subspace(1, vec![]);
        assert_eq!(zero.evaluate(&pt(&[0.5])).unwrap(), ExtReal::PosInf);
        let f = ConvexFn::separable_pair(ConvexFn::half_square(1));
        assert!(f.evaluate(&pt(&[1.0, 1.0])).unwrap().approx_eq(ExtReal::Finite(1.0), 1e-12));
    }

    #[test]
    fn separable_pair_conjugate_swaps_roles() {
        let k = ConvexFn::abs();
        let f = ConvexFn::separable_pair(k);
        // f*(y*, y**) = k*(y*) + k(y**)
        assert_eq!(f.conjugate(&pt(&[0.5, -2.0])).unwrap(), ExtReal::Finite(2.0));
        assert_eq!(f.conjugate(&pt(&[1.5, -2.0])).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn oracle_examples() {
        let g = Grid::cube(1, -4.0, 4.0, 1e-3).unwrap();
        let v = legendre_oracle(&ConvexFn::half_square(1), &pt(&[1.0]), &g).unwrap();
        assert!((v - 0.5).abs() < 1e-3);
        let b = ConvexFn::indicator_box(vec![0.0], vec![1.0]);
        assert!((legendre_oracle(&b, &pt(&[2.0]), &g).unwrap() - 2.0).abs() < 1e-3);
        assert_eq!(legendre_oracle(&ConvexFn::abs(), &pt(&[0.0]), &g).unwrap(), 0.0);
    }

    #[test]
    fn subspace_conjugate_is_polar_indicator() {
        let f = ConvexFn::indicator_subspace(2, vec![vec![1.0, 2.0]]);
        assert_eq!(f.conjugate(&pt(&[2.0, -1.0])).unwrap(), ExtReal::ZERO);
        assert_eq!(f.conjugate(&pt(&[1.0, 0.0])).unwrap(), ExtReal::PosInf);
        let g = Grid::cube(2, -3.0, 3.0, 0.01).unwrap();
        assert!(legendre_oracle(&f, &pt(&[1.0, 0.0]), &g).unwrap() > 1.0);
    }

    #[test]
    fn prox_families() {
        let z = pt(&[3.0, -0.5]);
        let l1 = ConvexFn::norm(2, 1.0, BaseNorm::Ell1).prox(&z, 1.0).unwrap();
        assert_eq!(l1.as_slice(), &[2.0, 0.0]);
        let linf = ConvexFn::norm(2, 1.0, BaseNorm::EllInf).prox(&z, 1.0).unwrap();
        assert!((linf - pt(&[2.0, -0.5])).norm() < 1e-12);
        let sum = ConvexFn::sum(vec![ConvexFn::half_square(1), ConvexFn::abs()]);
        let p = sum.prox(&pt(&[3.0]), 1.0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9, "{p}");
        let boxed = ConvexFn::sum(vec![ConvexFn::half_square(1), ConvexFn::indicator_box(vec![0.0], vec![0.5])]);
        assert!((boxed.prox(&pt(&[3.0]), 1.0).unwrap()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn json_tagged_union() {
        let f = ConvexFn::sum(vec![ConvexFn::half_square(1), ConvexFn::abs()]);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with(r#"{"kind":"sum","terms":[{"kind":"quadratic","q":[[1.0]]"#), "{s}");
        let back: ConvexFn = serde_json::from_str(&s).unwrap();
        assert_eq!(back.evaluate(&pt(&[2.0])).unwrap(), ExtReal::Finite(4.0));
    }

    fn family() -> impl Strategy<Value = ConvexFn> {
        let d = 2usize;
        prop_oneof![
            (prop::collection::vec(-1.0..1.0f64, 4), prop::collection::vec(-1.0..1.0f64, 2), -1.0..1.0f64).prop_map(
                move |(m, b, c)| {
                    let a = DMatrix::from_row_slice(2, 2, &m);
                    ConvexFn::quadratic(&a * a.transpose(), b, c)
                }
            ),
            (0.1..3.0f64).prop_map(move |a| ConvexFn::norm(d, a, BaseNorm::Ell1)),
            (0.1..3.0f64).prop_map(move |a| ConvexFn::norm(d, a, BaseNorm::EllInf)),
            (0.1..3.0f64).prop_map(move |a| ConvexFn::NormPower { dim: d, alpha: a, power: 2, norm: BaseNorm::Ell1 }),
            (0.1..3.0f64).prop_map(move |a| ConvexFn::norm(d, a, BaseNorm::Euclidean)),
            (-1.0..0.0f64, 0.0..1.0f64).prop_map(move |(l, h)| ConvexFn::indicator_box(vec![l; 2], vec![h; 2])),
            (0.3..2.0f64, 0.3..2.0f64).prop_map(move |(a, o)| ConvexFn::scaled(ConvexFn::norm(d, 1.0, BaseNorm::Ell1), a, o)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn fenchel_young(f in family(), x in prop::collection::vec(-2.0..2.0f64, 2), y in prop::collection::vec(-2.0..2.0f64, 2)) {
            let (x, y) = (pt(&x), pt(&y));
            let v = f.evaluate(&x).unwrap() + f.conjugate(&y).unwrap();
            prop_assert!(v.ge_tol(ExtReal::Finite(x.dot(&y)), 1e-9));
        }

        #[test]
        fn closed_form_dominates_oracle(f in family(), y in prop::collection::vec(-2.0..2.0f64, 2)) {
            let y = pt(&y);
            let g = Grid::cube(2, -3.0, 3.0, 0.05).unwrap();
            let oracle = legendre_oracle(&f, &y, &g).unwrap();
            let exact = f.conjugate(&y).unwrap();
            prop_assert!(exact.ge_tol(ExtReal::Finite(oracle), 1e-9));
        }

        #[test]
        fn prox_is_optimal(f in family(), z in prop::collection::vec(-3.0..3.0f64, 2)) {
            let z = pt(&z);
            let p = f.prox(&z, 1.0).unwrap();
            let fp = f.evaluate(&p).unwrap().as_f64() + 0.5 * (&p - &z).norm_squared();
            let mut r = crate::optim::rng(3);
            for _ in 0..20 {
                let q = &p + pt(&crate::optim::uniform_vec(&mut r, 2, 0.1));
                if let ExtReal::Finite(v) = f.evaluate(&q).unwrap() {
                    prop_assert!(v + 0.5 * (&q - &z).norm_squared() >= fp - 1e-7);
                }
            }
        }
    }
}
