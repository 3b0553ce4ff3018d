//! Fitzpatrick functions `Φ_A`, `Θ_A`, the conjugate `Φ_A^*`, marker
//! functions and the Fitzpatrick extension `A^F`.
//!
//! Affine sets get exact quadratic representations, finite clouds are handled
//! by enumeration (and a linear program for `Φ_A^*`), subdifferential graphs of
//! sublinear functions use the identity `Φ = k ⊕ k*`, and everything else
//! falls back to multi-start ascent with divergence detection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::convex::{ConvexFn, ConvexSet};
use crate::error::{check_len, Error, Result};
use crate::ext::ExtReal;
use crate::linalg::{complement, orth, sup_concave_quadratic, sym_eigen, QuadOnAffine};
use crate::optim::{nelder_mead, uniform_vec, Budget, NelderMeadOptions};
use crate::sets::{LPositiveSet, SetRepr};
use crate::space::{Point, SnSpace};

/// `k` with `k(tx) = t·k(x)` for `t ≥ 0`, among the closed-form families.
fn is_sublinear(k: &ConvexFn) -> bool {
    match k {
        ConvexFn::NormPower { power, .. } => *power == 1,
        ConvexFn::Indicator { set } => matches!(set, ConvexSet::Subspace { .. }),
        ConvexFn::Scaled { inner, output, .. } => *output >= 0.0 && is_sublinear(inner),
        ConvexFn::Sum { terms } => terms.iter().all(is_sublinear),
        _ => false,
    }
}

/// The sublinear `k` whose subdifferential graph is `A`, when the pairing
/// `q_L(x, x*) = ⟨x, x*⟩` makes `Φ_A = k ⊕ k*` available.
fn sublinear_graph(set: &LPositiveSet) -> Option<&ConvexFn> {
    match set.repr() {
        SetRepr::SubdifferentialGraph { function } if set.space().is_block_swap() && is_sublinear(function) => {
            Some(function)
        }
        _ => None,
    }
}

struct Pseudo {
    /// `P H⁺ Pᵀ`
    m: DMatrix<f64>,
    /// `P K` with `K` spanning the kernel of `H`
    pk: DMatrix<f64>,
}

/// Pieces shared by the exact forms of `Φ_A` and `Θ_A` for `A = p0 + span(P)`.
fn pseudo(space: &SnSpace, p: &DMatrix<f64>) -> Option<Pseudo> {
    let h = p.transpose() * space.l() * p;
    let k = h.nrows();
    let (vals, vecs) = sym_eigen(&h);
    let tol = 1e-10 * vals.amax().max(1.0);
    let mut hp = DMatrix::zeros(k, k);
    let mut ker = Vec::new();
    for i in 0..k {
        let u = vecs.column(i);
        if vals[i] < -tol {
            return None;
        }
        if vals[i] <= tol {
            ker.push(u.into_owned());
        } else {
            hp += u * u.transpose() / vals[i];
        }
    }
    let kmat = if ker.is_empty() { DMatrix::zeros(k, 0) } else { DMatrix::from_columns(&ker) };
    Some(Pseudo { m: p * hp * p.transpose(), pk: p * kmat })
}

/// `Θ_A` as a quadratic on an affine domain, for affine L-positive `A`.
pub fn theta_quad(set: &LPositiveSet) -> Option<QuadOnAffine> {
    let space = set.space();
    let (p0, p) = set.affine_rep()?;
    let ps = pseudo(space, &p)?;
    let lp0 = space.apply_l(&p0);
    let g = &p0 - &ps.m * &lp0;
    let c = 0.5 * lp0.dot(&(&ps.m * &lp0)) - space.q_l(&p0);
    let v = complement(&orth(&ps.pk));
    Some(QuadOnAffine { h: ps.m, g, c, p0: lp0, v })
}

/// `Φ_A = Θ_A ∘ L` as a quadratic on an affine domain, for affine L-positive `A`.
pub fn phi_quad(set: &LPositiveSet) -> Option<QuadOnAffine> {
    let space = set.space();
    let (p0, p) = set.affine_rep()?;
    let ps = pseudo(space, &p)?;
    let l = space.l();
    let lml = l * &ps.m * l;
    let lp0 = space.apply_l(&p0);
    let g = &lp0 - &lml * &p0;
    let c = 0.5 * p0.dot(&(&lml * &p0)) - space.q_l(&p0);
    let v = complement(&orth(&(l * &ps.pk)));
    Some(QuadOnAffine { h: lml, g, c, p0, v })
}

/// `sup_{a∈A} [⟨a, y⟩ - q_L(a)]`.
fn sup_affine_minus_q(set: &LPositiveSet, y: &Point, budget: &Budget) -> Result<ExtReal> {
    let space = set.space();
    check_len(space.dim(), y.len())?;
    if let Some(points) = set.points() {
        let v = points.iter().map(|a| a.dot(y) - space.q_l(a)).fold(f64::NEG_INFINITY, f64::max);
        return Ok(ExtReal::new(v));
    }
    if let Some((p0, p)) = set.affine_rep() {
        let h = p.transpose() * space.l() * &p;
        let g = p.transpose() * (y - space.apply_l(&p0));
        let (s, _) = sup_concave_quadratic(&h, &g);
        return Ok(s + (p0.dot(y) - space.q_l(&p0)));
    }
    if let Some(k) = sublinear_graph(set) {
        let (y1, y2) = space.split(y);
        let v = k.conjugate(&DVector::from_column_slice(y1))? + k.evaluate(&DVector::from_column_slice(y2))?;
        return Ok(v);
    }
    numeric_sup(set, y, budget)
}

fn numeric_sup(set: &LPositiveSet, y: &Point, budget: &Budget) -> Result<ExtReal> {
    let space = set.space();
    let k = set.param_dim().unwrap_or(0);
    let neg = |z: &[f64]| match set.point_at(z) {
        Ok(a) => space.q_l(&a) - a.dot(y),
        Err(_) => f64::INFINITY,
    };
    let o = NelderMeadOptions { divergence: Some(budget.divergence), max_evals: budget.max_iter * 5, ..Default::default() };
    let mut best = f64::INFINITY;
    for r in 0..budget.restarts.max(1) {
        let z0 = if r == 0 {
            vec![0.0; k]
        } else {
            let mut g = budget.rng(0xf17 + r as u64);
            uniform_vec(&mut g, k, 1.0 + y.amax())
        };
        let m = nelder_mead(neg, &z0, &o);
        if m.diverged && -m.value > -neg(&z0) + 1.0 {
            return Ok(ExtReal::PosInf);
        }
        best = best.min(m.value);
    }
    Ok(ExtReal::new(-best))
}

/// `Φ_A(b) = sup_{a∈A} [⟨a, Lb⟩ - q_L(a)]`.
pub fn phi(set: &LPositiveSet, b: &Point, budget: &Budget) -> Result<ExtReal> {
    check_len(set.space().dim(), b.len())?;
    sup_affine_minus_q(set, &set.space().apply_l(b), budget)
}

/// `Θ_A(b*) = sup_{a∈A} [⟨a, b*⟩ - q_L(a)]`.
pub fn theta(set: &LPositiveSet, bstar: &Point, budget: &Budget) -> Result<ExtReal> {
    sup_affine_minus_q(set, bstar, budget)
}

/// `Φ_A^*(b*)`.
///
/// Finite clouds solve `min Σ λ_i q_L(a_i)` over convex weights with
/// `Σ λ_i L a_i = b*`; affine sets and sublinear subdifferential graphs are
/// exact; other sets use a numeric ascent (a lower bound).
pub fn phi_conjugate(set: &LPositiveSet, bstar: &Point, budget: &Budget) -> Result<ExtReal> {
    let space = set.space();
    check_len(space.dim(), bstar.len())?;
    if let Some(points) = set.points() {
        return cloud_conjugate(space, points, bstar);
    }
    if set.affine_rep().is_some() {
        let q = phi_quad(set).ok_or_else(|| Error::Precondition("set is not L-positive".into()))?;
        return Ok(q.conjugate(bstar));
    }
    if let Some(k) = sublinear_graph(set) {
        let (y1, y2) = space.split(bstar);
        return Ok(k.conjugate(&DVector::from_column_slice(y1))? + k.evaluate(&DVector::from_column_slice(y2))?);
    }
    let dim = space.dim();
    let inner = Budget { restarts: 3, max_iter: budget.max_iter / 4, ..budget.clone() };
    let neg = |b: &[f64]| {
        let b = DVector::from_column_slice(b);
        match phi(set, &b, &inner) {
            Ok(ExtReal::Finite(v)) => v - b.dot(bstar),
            _ => f64::INFINITY,
        }
    };
    let o = NelderMeadOptions { divergence: Some(budget.divergence), max_evals: 2000, restarts: 1, ..Default::default() };
    let mut best = f64::INFINITY;
    for r in 0..budget.restarts.clamp(1, 4) {
        let x0 = if r == 0 {
            vec![0.0; dim]
        } else {
            let mut g = budget.rng(0xc0 + r as u64);
            uniform_vec(&mut g, dim, 1.0 + bstar.amax())
        };
        let m = nelder_mead(neg, &x0, &o);
        if m.diverged && -m.value > -neg(&x0) + 1.0 {
            return Ok(ExtReal::PosInf);
        }
        best = best.min(m.value);
    }
    Ok(ExtReal::new(-best))
}

fn cloud_conjugate(space: &SnSpace, points: &[Point], y: &Point) -> Result<ExtReal> {
    use microlp::{ComparisonOp, OptimizationDirection, Problem};
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = points.iter().map(|a| lp.add_var(space.q_l(a), (0.0, f64::INFINITY))).collect();
    lp.add_constraint(vars.iter().map(|v| (*v, 1.0)), ComparisonOp::Eq, 1.0);
    let images: Vec<Point> = points.iter().map(|a| space.apply_l(a)).collect();
    for j in 0..space.dim() {
        let row: Vec<_> = vars.iter().zip(&images).filter(|(_, a)| a[j] != 0.0).map(|(v, a)| (*v, a[j])).collect();
        if row.is_empty() {
            if y[j].abs() > 1e-12 {
                return Ok(ExtReal::PosInf);
            }
            continue;
        }
        lp.add_constraint(row, ComparisonOp::Eq, y[j]);
    }
    match lp.solve() {
        Ok(out) => match out.solution() {
            Some(s) => Ok(ExtReal::new(s.objective())),
            None => Err(Error::BudgetExhausted("linear program interrupted".into())),
        },
        Err(microlp::Error::Infeasible) => Ok(ExtReal::PosInf),
        Err(e) => Err(Error::Inconsistent(format!("linear program failed: {e}"))),
    }
}

/// Candidate marker functions on `B*`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkerCandidate {
    PhiConjugate,
    Theta,
    Function { function: ConvexFn },
    /// `inner + shift`.
    Shifted { inner: Box<MarkerCandidate>, shift: f64 },
    /// `Σ w_i g_i`.
    Mix { parts: Vec<(f64, MarkerCandidate)> },
}

impl MarkerCandidate {
    pub fn evaluate(&self, set: &LPositiveSet, bstar: &Point, budget: &Budget) -> Result<ExtReal> {
        Ok(match self {
            MarkerCandidate::PhiConjugate => phi_conjugate(set, bstar, budget)?,
            MarkerCandidate::Theta => theta(set, bstar, budget)?,
            MarkerCandidate::Function { function } => function.evaluate_with(bstar, budget)?,
            MarkerCandidate::Shifted { inner, shift } => inner.evaluate(set, bstar, budget)? + *shift,
            MarkerCandidate::Mix { parts } => {
                let mut acc = ExtReal::ZERO;
                for (w, g) in parts {
                    acc = acc
                        + match g.evaluate(set, bstar, budget)? {
                            ExtReal::Finite(v) => ExtReal::new(w * v),
                            ExtReal::PosInf if *w > 0.0 => ExtReal::PosInf,
                            ExtReal::PosInf => ExtReal::ZERO,
                        };
                }
                acc
            }
        })
    }
}

/// Which defining inequality of a marker failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerSide {
    /// `g ≤ Φ_A^*`
    Upper,
    /// `g ≥ Θ_A`
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MarkerVerdict {
    MarkerOnGrid,
    Refuted { witness: Vec<f64>, side: MarkerSide },
}

/// Checks `Θ_A - tol ≤ g ≤ Φ_A^* + tol` at the samples.
pub fn is_marker(set: &LPositiveSet, g: &MarkerCandidate, dual_samples: &[Point], budget: &Budget) -> Result<MarkerVerdict> {
    let tol = budget.tol.max(1e-9);
    for b in dual_samples {
        let gv = g.evaluate(set, b, budget)?;
        let upper = phi_conjugate(set, b, budget)?;
        if !upper.ge_tol(gv, tol) {
            return Ok(MarkerVerdict::Refuted { witness: b.as_slice().to_vec(), side: MarkerSide::Upper });
        }
        let lower = theta(set, b, budget)?;
        if !gv.ge_tol(lower, tol) {
            return Ok(MarkerVerdict::Refuted { witness: b.as_slice().to_vec(), side: MarkerSide::Lower });
        }
    }
    Ok(MarkerVerdict::MarkerOnGrid)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum DensityVerdict {
    Consistent,
    Refuted { witness: Vec<f64>, marker: ExtReal, s_l: ExtReal },
}

/// Checks `g ≥ s_L - tol` at the samples.
pub fn density_via_marker(
    set: &LPositiveSet,
    g: &MarkerCandidate,
    dual_samples: &[Point],
    budget: &Budget,
) -> Result<DensityVerdict> {
    let tol = budget.tol.max(1e-6);
    for b in dual_samples {
        let gv = g.evaluate(set, b, budget)?;
        let s = set.space().s_l(b, budget)?;
        if !gv.ge_tol(s.value, tol * (1.0 + b.norm_squared())) {
            return Ok(DensityVerdict::Refuted { witness: b.as_slice().to_vec(), marker: gv, s_l: s.value });
        }
    }
    Ok(DensityVerdict::Consistent)
}

/// Membership of `b*` in `A^F = {Φ_A^* = q_L̃}`, cross-checked with `{Θ_A = q_L̃}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtensionMembership {
    pub point: Vec<f64>,
    pub phi_conjugate: ExtReal,
    pub theta: ExtReal,
    pub q_dual: f64,
    pub member: bool,
    pub theta_member: bool,
    /// Both routes agree within `10·tol`.
    pub consistent: bool,
}

pub fn extension_membership(set: &LPositiveSet, bstar: &Point, budget: &Budget) -> Result<ExtensionMembership> {
    let dual = set.space().dual_space()?;
    check_len(dual.dim(), bstar.len())?;
    let tol = budget.tol.max(1e-9);
    let q = dual.q_l(bstar);
    let pc = phi_conjugate(set, bstar, budget)?;
    let th = theta(set, bstar, budget)?;
    let scale = 1.0 + bstar.norm_squared();
    let member = pc.approx_eq(ExtReal::new(q), tol * scale);
    let theta_member = th.approx_eq(ExtReal::new(q), tol * scale);
    let consistent = member == theta_member
        || (pc.approx_eq(ExtReal::new(q), 10.0 * tol * scale) && th.approx_eq(ExtReal::new(q), 10.0 * tol * scale));
    Ok(ExtensionMembership {
        point: bstar.as_slice().to_vec(),
        phi_conjugate: pc,
        theta: th,
        q_dual: q,
        member,
        theta_member,
        consistent,
    })
}
