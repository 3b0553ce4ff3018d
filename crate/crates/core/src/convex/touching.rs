//! Touching functions: the shifted infima, their certification on test
//! points, the dual test against `s_L`, and the coincidence iteration.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ConvexFn;
use crate::error::{check_len, Error, Result};
use crate::ext::ExtReal;
use crate::optim::{lbfgs, nelder_mead, uniform_vec, Budget, LbfgsOptions, NelderMeadOptions};
use crate::space::{Point, SnSpace};

/// `f^⊛(b) = f*(Lb)`.
pub fn circled_conjugate(space: &SnSpace, f: &ConvexFn, b: &Point) -> Result<ExtReal> {
    check_len(space.dim(), b.len())?;
    f.conjugate(&space.apply_l(b))
}

/// Value of the shifted infimum at one test point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TouchRecord {
    pub c: Vec<f64>,
    pub value: f64,
    pub minimizer: Vec<f64>,
    /// Certified lower bound of the infimum, when available.
    pub lower_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TouchVerdict {
    TouchingOnGrid,
    Refuted { witness: Vec<f64>, bound: f64 },
    /// A positive value was found without a certified bound.
    NoTouchFoundWithinBudget { witness: Vec<f64>, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TouchingCertificate {
    pub records: Vec<TouchRecord>,
    #[serde(flatten)]
    pub verdict: TouchVerdict,
}

fn excess(space: &SnSpace, h: &ConvexFn, d: &Point, budget: &Budget) -> Result<f64> {
    Ok(match h.evaluate_with(d, budget)? {
        ExtReal::Finite(v) => v - space.q_l(d),
        ExtReal::PosInf => f64::INFINITY,
    })
}

/// `inf_d [(h - q_L)(d) + r_L(d - c)]`: returns the value, a minimizer, and
/// whether the value is exact.
pub fn coincidence_inner(space: &SnSpace, h: &ConvexFn, c: &Point, budget: &Budget) -> Result<(f64, Point, bool)> {
    check_len(space.dim(), c.len())?;
    if let ConvexFn::QuadraticOnSet { set } = h {
        let g = crate::sets::density_gap(set, c, budget)?;
        let exact = g.lower_bound.is_some_and(|lb| lb >= g.gap - 1e-12 * (1.0 + g.gap));
        return Ok((g.gap, g.minimizer, exact));
    }
    let objective = |d: &Point| -> Result<f64> { Ok(excess(space, h, d, budget)? + space.r_l(&(d - c))) };
    if space.norm_kind().is_euclidean() {
        // (h - q_L)(d) + r_L(d - c) = h(d) + ½‖d - c‖² - <d, Lc> + q_L(c)
        let exact = h.as_quad().is_some()
            || matches!(h, ConvexFn::NormPower { power: 1, .. } | ConvexFn::Indicator { .. });
        if let Ok(d) = h.prox(&(c + space.apply_l(c)), 1.0) {
            let v = objective(&d)?;
            if v.is_finite() {
                return Ok((v, d, exact));
            }
        }
    }
    let f = |x: &[f64]| objective(&DVector::from_column_slice(x)).unwrap_or(f64::INFINITY);
    let mut best = (f(c.as_slice()), c.as_slice().to_vec());
    let mut rng = budget.rng(0x70c);
    let o = NelderMeadOptions { initial_step: 0.25, ..Default::default() };
    for r in 0..=budget.restarts.min(4) {
        let x0: Vec<f64> = if r == 0 {
            c.as_slice().to_vec()
        } else {
            let p = uniform_vec(&mut rng, c.len(), 1.0 + c.amax());
            c.iter().zip(p).map(|(a, b)| a + b).collect()
        };
        let m = nelder_mead(f, &x0, &o);
        if m.value < best.0 {
            best = (m.value, m.x);
        }
    }
    Ok((best.0, DVector::from_vec(best.1), false))
}

/// Checks `inf_d [(f - q_L)(d) + r_L(d - c)] ≤ tol` at each test point.
///
/// # Errors
/// [`Error::NotAboveQuadratic`] when `f < q_L` at a sampled point.
pub fn is_touching(space: &SnSpace, f: &ConvexFn, test_points: &[Point], budget: &Budget) -> Result<TouchingCertificate> {
    let mut rng = budget.rng(0x9c);
    let mut samples: Vec<Point> = test_points.to_vec();
    for _ in 0..32 {
        samples.push(DVector::from_vec(uniform_vec(&mut rng, space.dim(), 2.0)));
    }
    let records: Vec<TouchRecord> = crate::parallel::par_map(test_points, |c| {
        coincidence_inner(space, f, c, budget).map(|(v, d, exact)| TouchRecord {
            c: c.as_slice().to_vec(),
            value: v,
            minimizer: d.as_slice().to_vec(),
            lower_bound: exact.then_some(v),
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    samples.extend(records.iter().map(|r| DVector::from_column_slice(&r.minimizer)));
    for x in &samples {
        let e = excess(space, f, x, budget)?;
        let scale = 1.0 + space.q_l(x).abs();
        if e < -1e-9 * scale {
            return Err(Error::NotAboveQuadratic { margin: e, point: x.as_slice().to_vec() });
        }
    }
    let tol = budget.tol;
    let verdict = match records.iter().find(|r| r.value > tol) {
        None => TouchVerdict::TouchingOnGrid,
        Some(r) => match r.lower_bound {
            Some(lb) if lb > tol => TouchVerdict::Refuted { witness: r.c.clone(), bound: lb },
            _ => TouchVerdict::NoTouchFoundWithinBudget { witness: r.c.clone(), value: r.value },
        },
    };
    Ok(TouchingCertificate { records, verdict })
}

/// Outcome of comparing `f*` with `s_L` on dual samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    pub consistent: bool,
    pub witness: Option<Vec<f64>>,
    pub conjugate_values: Vec<ExtReal>,
    pub s_values: Vec<ExtReal>,
}

/// Checks `f*(b*) ≥ s_L(b*) - tol` at each sample.
pub fn touching_dual_check(space: &SnSpace, f: &ConvexFn, dual_samples: &[Point], budget: &Budget) -> Result<DualCheck> {
    let mut conj = Vec::new();
    let mut svals = Vec::new();
    let mut witness = None;
    for bs in dual_samples {
        let fv = f.conjugate_with(bs, budget)?;
        let sv = space.s_l(bs, budget)?.value;
        if witness.is_none() && !fv.ge_tol(sv, budget.tol * (1.0 + sv.as_f64().abs().min(1e12))) {
            witness = Some(bs.as_slice().to_vec());
        }
        conj.push(fv);
        svals.push(sv);
    }
    Ok(DualCheck { consistent: witness.is_none(), witness, conjugate_values: conj, s_values: svals })
}

/// One step of the coincidence iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceStep {
    pub n: usize,
    /// Required bound `δ^{2n}` on the inner objective.
    pub slack: f64,
    pub achieved: f64,
    /// `‖c_n - c_{n-1}‖`.
    pub step: f64,
    /// `3δ^{n-1}` for `n ≥ 2`.
    pub step_bound: Option<f64>,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceTrace {
    pub delta: f64,
    pub steps: Vec<CoincidenceStep>,
    /// Radius such that the first inner objective is at most 1 only within it.
    pub n_c: f64,
    /// `‖a - c‖`.
    pub distance: f64,
    /// `(h - q_L)(a)`.
    pub residual: f64,
    pub steps_within_bound: bool,
}

/// Inner solve started at `start`, stopped once the objective reaches `target`.
fn inexact_inner(space: &SnSpace, h: &ConvexFn, c: &Point, start: &Point, target: f64, budget: &Budget) -> Result<(f64, Point)> {
    if space.norm_kind().is_euclidean() {
        if let Some(q) = h.as_quad() {
            let lc = space.apply_l(c);
            let d0 = &q.p0 + &q.v * (q.v.transpose() * (start - &q.p0));
            let vt = q.v.transpose();
            let f = |t: &[f64], g: &mut [f64]| -> f64 {
                let d = &d0 + &q.v * DVector::from_column_slice(t);
                let grad = &q.h * &d + &q.g + (&d - c) - &lc;
                let gt = &vt * grad;
                g.copy_from_slice(gt.as_slice());
                let hv = 0.5 * d.dot(&(&q.h * &d)) + q.g.dot(&d) + q.c;
                hv + 0.5 * (&d - c).norm_squared() - d.dot(&lc) + space.q_l(c)
            };
            let o = LbfgsOptions { target: Some(target), max_iter: budget.max_iter, ..Default::default() };
            let m = lbfgs(f, &vec![0.0; q.v.ncols()], &o);
            let d = &d0 + &q.v * DVector::from_vec(m.x);
            let v = excess(space, h, &d, budget)? + space.r_l(&(&d - c));
            return Ok((v, d));
        }
    }
    let (v, d, _) = coincidence_inner(space, h, c, budget)?;
    Ok((v, d))
}

/// Follows `c_n` with `(h - q_L)(c_n) + r_L(c_n - c_{n-1}) ≤ δ^{2n}` to a
/// point `a` of the coincidence set `{h = q_L}`.
///
/// # Errors
/// [`Error::InnerMinimizerFailed`] when a step's slack cannot be met.
pub fn project_to_coincidence(
    space: &SnSpace,
    h: &ConvexFn,
    c: &Point,
    delta: f64,
    budget: &Budget,
) -> Result<(Point, CoincidenceTrace)> {
    check_len(space.dim(), c.len())?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument("delta must lie in ]0, 1/2[".into()));
    }
    let (m1, d1, _) = coincidence_inner(space, h, c, budget)?;
    let n_c = (&d1 - c).norm() + (2.0 * (1.0 - m1).max(0.0)).sqrt();
    let mut steps = Vec::new();
    let mut prev = c.clone();
    let mut ok = true;
    for n in 1..=60usize {
        let slack = delta.powi(2 * n as i32);
        let (mut achieved, mut next) = inexact_inner(space, h, &prev, &prev, slack, budget)?;
        if achieved > slack {
            let (v, d, _) = coincidence_inner(space, h, &prev, budget)?;
            if v < achieved {
                achieved = v;
                next = d;
            }
        }
        if achieved > slack {
            return Err(Error::InnerMinimizerFailed { step: n, achieved, required: slack });
        }
        let step = space.norm(&(&next - &prev));
        let step_bound = (n >= 2).then(|| 3.0 * delta.powi(n as i32 - 1));
        if let Some(b) = step_bound {
            ok &= step <= b;
        }
        steps.push(CoincidenceStep { n, slack, achieved, step, step_bound, point: next.as_slice().to_vec() });
        prev = next;
        if slack < 1e-14 || (n >= 2 && step < 1e-10) {
            break;
        }
    }
    let residual = excess(space, h, &prev, budget)?;
    let distance = space.norm(&(&prev - c));
    Ok((prev, CoincidenceTrace { delta, steps, n_c, distance, residual, steps_within_bound: ok }))
}
