//! Partial inf-convolutions of functions on `E × E*` and the coincidence
//! identities behind the sum and parallel-sum theorems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{op_sum, parallel_sum, MonoMap};
use crate::convex::ConvexFn;
use crate::error::{check_len, Error, Result};
use crate::ext::ExtReal;
use crate::fitzpatrick::{phi_conjugate, phi_quad, theta};
use crate::linalg::{lstsq, null_space, QuadOnAffine};
use crate::norm::BaseNorm;
use crate::optim::{minimize_convex_1d, nelder_mead, uniform_vec, Budget, NelderMeadOptions};
use crate::sets::LPositiveSet;
use crate::space::{Point, SnSpace};

/// `h(x, x*)` together with the inner argument attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfConvValue {
    pub point: Vec<f64>,
    pub value: ExtReal,
    pub argmin: Option<Vec<f64>>,
}

fn ext(v: Result<ExtReal>) -> f64 {
    match v {
        Ok(ExtReal::Finite(x)) => x,
        _ => f64::INFINITY,
    }
}

/// Minimizes a convex function of `n` variables that may take `+inf`.
fn minimize_convex(f: impl Fn(&[f64]) -> f64, x0: &[f64], budget: &Budget) -> (Vec<f64>, f64) {
    if x0.len() == 1 {
        let (x, v) = minimize_convex_1d(|t| f(&[t]), x0[0], 1.0 + x0[0].abs());
        return (vec![x], v);
    }
    let o = NelderMeadOptions { max_evals: budget.max_iter * 10, ..Default::default() };
    let mut best = (x0.to_vec(), f(x0));
    for r in 0..budget.restarts.clamp(1, 4) {
        let s = if r == 0 {
            x0.to_vec()
        } else {
            let mut g = budget.rng(0x1c + r as u64);
            uniform_vec(&mut g, x0.len(), 2.0)
        };
        let m = nelder_mead(&f, &s, &o);
        if m.value < best.1 {
            best = (m.x, m.value);
        }
    }
    best
}

fn infconv(
    f: &ConvexFn,
    g: &ConvexFn,
    x: &[f64],
    xs: &[f64],
    budget: &Budget,
    split: impl Fn(&[f64]) -> (Point, Point),
) -> Result<InfConvValue> {
    let n = x.len();
    check_len(n, xs.len())?;
    if let Some(d) = f.dim() {
        check_len(2 * n, d)?;
    }
    let obj = |xi: &[f64]| {
        let (a, b) = split(xi);
        let fa = ext(f.evaluate_with(&a, budget));
        if !fa.is_finite() {
            return f64::INFINITY;
        }
        fa + ext(g.evaluate_with(&b, budget))
    };
    let (arg, v) = minimize_convex(obj, &vec![0.0; n], budget);
    let point = [x, xs].concat();
    if v.is_finite() && v.abs() < budget.divergence {
        Ok(InfConvValue { point, value: ExtReal::new(v), argmin: Some(arg) })
    } else {
        Ok(InfConvValue { point, value: ExtReal::PosInf, argmin: None })
    }
}

/// `h(x, x*) = inf_{ξ*} [f(x, x* - ξ*) + g(x, ξ*)]`.
pub fn domain_infconv(f: &ConvexFn, g: &ConvexFn, x: &[f64], xs: &[f64], budget: &Budget) -> Result<InfConvValue> {
    infconv(f, g, x, xs, budget, |xi| {
        let rest: Vec<f64> = xs.iter().zip(xi).map(|(a, b)| a - b).collect();
        (SnSpace::join(x, &rest), SnSpace::join(x, xi))
    })
}

/// `h(x, x*) = inf_ξ [f(x - ξ, x*) + g(ξ, x*)]`.
pub fn range_infconv(f: &ConvexFn, g: &ConvexFn, x: &[f64], xs: &[f64], budget: &Budget) -> Result<InfConvValue> {
    infconv(f, g, x, xs, budget, |xi| {
        let rest: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - b).collect();
        (SnSpace::join(&rest, xs), SnSpace::join(xi, xs))
    })
}

/// One probe of [`sum_identity_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumIdentityRecord {
    pub probe: Vec<f64>,
    /// `h^⊛` by direct maximization of the joint concave objective.
    pub direct: ExtReal,
    /// `h^⊛` from `min_u [φ_S^⊛(y, y* - u) + φ_T^⊛(y, u)]`.
    pub formula: ExtReal,
    pub q: f64,
    pub coincides: bool,
    pub formula_coincides: bool,
    /// `(y, y*) ∈ G(S + T)` by splitting.
    pub member: bool,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumIdentityReport {
    pub agree: bool,
    pub records: Vec<SumIdentityRecord>,
}

/// `φ^⊛ = Φ^* ∘ L` as an exact quadratic on an affine domain, when the graph is affine.
fn circled_quad(set: &LPositiveSet) -> Option<QuadOnAffine> {
    let q = phi_quad(set)?.conjugate_fn();
    let l = set.space().l();
    Some(QuadOnAffine {
        h: l.transpose() * &q.h * l,
        g: l.transpose() * &q.g,
        c: q.c,
        p0: l * &q.p0,
        v: l * &q.v,
    })
}

/// Restricts `u = u0 + W r` to `{u : c + E u ∈ dom q}`.
fn restrict(aff: Option<(DVector<f64>, DMatrix<f64>)>, q: &QuadOnAffine, c: &DVector<f64>, e: &DMatrix<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let (u0, w) = aff?;
    let dim = q.dim();
    let proj = DMatrix::identity(dim, dim) - &q.v * q.v.transpose();
    let a = &proj * e * &w;
    let rhs = &proj * (&q.p0 - c - e * &u0);
    let (r, res) = lstsq(&a, &rhs);
    if res > 1e-9 * (1.0 + rhs.norm()) {
        return None;
    }
    let ns = null_space(&a);
    Some((&u0 + &w * r, &w * ns))
}

/// Compares `{h^⊛ = q_L}` for `h = φ_S □ φ_T` with direct membership in
/// `G(S + T)` at every probe `(y, y*)`.
pub fn sum_identity_check(s: &MonoMap, t: &MonoMap, probes: &[Point], budget: &Budget) -> Result<SumIdentityReport> {
    let n = s.dim();
    check_len(n, t.dim())?;
    let ss = s.graph_set(BaseNorm::Euclidean)?;
    let ts = t.graph_set(BaseNorm::Euclidean)?;
    let sum = op_sum(s, t)?;
    let fs = ConvexFn::fitzpatrick(ss.clone());
    let ft = ConvexFn::fitzpatrick(ts.clone());
    let qs = fs.as_quad();
    let qt = ft.as_quad();
    let phi_s = |b: &Point| match &qs {
        Some(q) => q.eval(b).finite().unwrap_or(f64::INFINITY),
        None => ext(fs.evaluate_with(b, budget)),
    };
    let phi_t = |b: &Point| match &qt {
        Some(q) => q.eval(b).finite().unwrap_or(f64::INFINITY),
        None => ext(ft.evaluate_with(b, budget)),
    };
    let cs = circled_quad(&ss);
    let ct = circled_quad(&ts);
    let tol = budget.tol.max(1e-9);
    let ctol = 1e-6;
    let mut records = Vec::with_capacity(probes.len());
    for p in probes {
        check_len(2 * n, p.len())?;
        let (y, ys) = (&p.as_slice()[..n], &p.as_slice()[n..]);
        let q = y.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>();

        // sup over (x, a, ξ) of ⟨x, y*⟩ + ⟨a + ξ, y⟩ - φ_S(x, a) - φ_T(x, ξ)
        let neg = |v: &[f64]| {
            let (x, a, xi) = (&v[..n], &v[n..2 * n], &v[2 * n..]);
            let fa = phi_s(&SnSpace::join(x, a));
            if !fa.is_finite() {
                return f64::INFINITY;
            }
            let fb = phi_t(&SnSpace::join(x, xi));
            let lin: f64 = (0..n).map(|i| x[i] * ys[i] + (a[i] + xi[i]) * y[i]).sum();
            fa + fb - lin
        };
        let o = NelderMeadOptions { divergence: Some(budget.divergence), max_evals: 30_000, restarts: 6, ..Default::default() };
        let mut best = f64::INFINITY;
        let mut diverged = false;
        let mut starts = vec![[y, ys, &vec![0.0; n][..]].concat(), vec![0.0; 3 * n]];
        for r in 0..budget.restarts.min(4) {
            let mut g = budget.rng(0x51 + r as u64);
            starts.push(uniform_vec(&mut g, 3 * n, 1.0 + p.amax()));
        }
        for st in &starts {
            let m = nelder_mead(neg, st, &o);
            if m.diverged && -m.value > -neg(st) + 1.0 {
                diverged = true;
                break;
            }
            best = best.min(m.value);
        }
        let direct = if diverged || !best.is_finite() { ExtReal::PosInf } else { ExtReal::new(-best) };

        let formula = formula_value(&ss, &ts, cs.as_ref(), ct.as_ref(), y, ys, budget)?;
        let member = sum.contains(y, ys, tol, budget)?;
        let close = |v: ExtReal| v.approx_eq(ExtReal::new(q), ctol * (1.0 + q.abs()));
        let coincides = close(direct);
        let formula_coincides = close(formula);
        records.push(SumIdentityRecord {
            probe: p.as_slice().to_vec(),
            direct,
            formula,
            q,
            coincides,
            formula_coincides,
            member,
            agree: coincides == member && formula_coincides == member,
        });
    }
    Ok(SumIdentityReport { agree: records.iter().all(|r| r.agree), records })
}

fn formula_value(
    ss: &LPositiveSet,
    ts: &LPositiveSet,
    cs: Option<&QuadOnAffine>,
    ct: Option<&QuadOnAffine>,
    y: &[f64],
    ys: &[f64],
    budget: &Budget,
) -> Result<ExtReal> {
    let n = y.len();
    let eye = DMatrix::<f64>::identity(n, n);
    let zero = DMatrix::<f64>::zeros(n, n);
    let stack = |top: &DMatrix<f64>| {
        let mut e = DMatrix::zeros(2 * n, n);
        e.view_mut((0, 0), (n, n)).copy_from(top);
        e.view_mut((n, 0), (n, n)).copy_from(&zero);
        e
    };
    // φ_S^⊛(y, y* - u) = Φ_S^*(y* - u, y); φ_T^⊛(y, u) = Φ_T^*(u, y)
    let arg_s = |u: &[f64]| {
        let a: Vec<f64> = ys.iter().zip(u).map(|(a, b)| a - b).collect();
        SnSpace::join(y, &a)
    };
    let arg_t = |u: &[f64]| SnSpace::join(y, u);
    let es = stack(&(-&eye));
    let et = stack(&eye);
    let mut aff = Some((DVector::zeros(n), eye.clone()));
    if let Some(q) = cs {
        aff = restrict(aff, q, &SnSpace::join(y, ys), &swap_e(&es, n));
    }
    if let Some(q) = ct {
        aff = restrict(aff, q, &SnSpace::join(y, &vec![0.0; n]), &swap_e(&et, n));
    }
    let Some((u0, w)) = aff else {
        return Ok(ExtReal::PosInf);
    };
    let val = |b: &Point, q: Option<&QuadOnAffine>, set: &LPositiveSet| match q {
        Some(q) => q.eval(b).finite().unwrap_or(f64::INFINITY),
        None => ext(phi_conjugate(set, &set.space().apply_l(b), budget)),
    };
    let obj = |r: &[f64]| {
        let u = &u0 + &w * DVector::from_column_slice(r);
        let a = val(&arg_s(u.as_slice()), cs, ss);
        if !a.is_finite() {
            return f64::INFINITY;
        }
        a + val(&arg_t(u.as_slice()), ct, ts)
    };
    let v = if w.ncols() == 0 { obj(&[]) } else { minimize_convex(obj, &vec![0.0; w.ncols()], budget).1 };
    Ok(if v.is_finite() { ExtReal::new(v) } else { ExtReal::PosInf })
}

/// The arguments `(y, ·)` above are points `b` with `u` in the second block.
fn swap_e(e: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = e.clone();
    out.rows_mut(0, n).copy_from(&e.rows(n, n));
    out.rows_mut(n, n).copy_from(&e.rows(0, n));
    out
}

/// One probe of [`parallel_sum_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelSumRecord {
    pub probe: Vec<f64>,
    /// Membership in the graph of `S ∥ T`.
    pub parallel_member: bool,
    /// `y* ∈ (S^F + T^F)^{-1}(y)`, tested through `{Θ = q_L̃}`.
    pub p_member: bool,
    /// Smallest combined coincidence gap over splittings of `y`.
    pub p_gap: f64,
    pub agree: bool,
}

/// Compares the graph of `S ∥ T` with the multifunction
/// `P(y) = (S^F + T^F)^{-1}(y)` at the probes.
pub fn parallel_sum_check(s: &MonoMap, t: &MonoMap, probes: &[Point], budget: &Budget) -> Result<Vec<ParallelSumRecord>> {
    let n = s.dim();
    let ss = s.graph_set(BaseNorm::Euclidean)?;
    let ts = t.graph_set(BaseNorm::Euclidean)?;
    let par = parallel_sum(s, t)?;
    let tol = budget.tol.max(1e-9);
    let mut out = Vec::new();
    for p in probes {
        check_len(2 * n, p.len())?;
        let (y, ys) = (&p.as_slice()[..n], &p.as_slice()[n..]);
        // (y*, y - z) ∈ G(S)^F and (y*, z) ∈ G(T)^F
        let coincidence = |set: &LPositiveSet, second: &[f64]| {
            let b = SnSpace::join(ys, second);
            let q: f64 = ys.iter().zip(second).map(|(a, c)| a * c).sum();
            ext(theta(set, &b, budget)) - q
        };
        let obj = |z: &[f64]| {
            let rest: Vec<f64> = y.iter().zip(z).map(|(a, b)| a - b).collect();
            let a = coincidence(&ss, &rest);
            if !a.is_finite() {
                return f64::INFINITY;
            }
            a + coincidence(&ts, z)
        };
        let z0: Vec<f64> = y.iter().map(|v| 0.5 * v).collect();
        let (_, gap) = minimize_convex(obj, &z0, budget);
        let p_member = gap <= tol * (1.0 + p.norm_squared());
        let parallel_member = par.contains(y, ys, tol, budget)?;
        out.push(ParallelSumRecord { probe: p.as_slice().to_vec(), parallel_member, p_member, p_gap: gap, agree: p_member == parallel_member });
    }
    if out.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::pt;

    fn b() -> Budget {
        Budget::default()
    }

    fn phi_id() -> ConvexFn {
        ConvexFn::fitzpatrick(LPositiveSet::identity_graph(1))
    }

    #[test]
    fn domain_infconv_of_identity_fitzpatrick() {
        // inf_ξ [(x + x* - ξ)²/4 + (x + ξ)²/4], minimized at ξ = x*/2
        for &(x, xs) in &[(1.0, 2.0), (-0.5, 0.3), (0.0, 0.0)] {
            let h = domain_infconv(&phi_id(), &phi_id(), &[x], &[xs], &b()).unwrap();
            let expect = (2.0 * x + xs) * (2.0 * x + xs) / 8.0;
            assert!((h.value.as_f64() - expect).abs() < 1e-9, "{h:?}");
            assert!(h.value.as_f64() >= x * xs - 1e-9);
            // grid oracle
            let grid = (-400..=400).map(|i| i as f64 * 0.01);
            let oracle = grid
                .map(|xi| ((x + xs - xi) * (x + xs - xi) + (x + xi) * (x + xi)) / 4.0)
                .fold(f64::INFINITY, f64::min);
            assert!((oracle - h.value.as_f64()).abs() < 1e-4);
        }
    }

    #[test]
    fn infconv_outside_domains() {
        let abs = LPositiveSet::subdifferential_graph(
            std::sync::Arc::new(SnSpace::product(1, BaseNorm::Euclidean)),
            ConvexFn::indicator_box(vec![0.0], vec![1.0]),
        )
        .unwrap();
        let f = ConvexFn::fitzpatrick(abs);
        let h = domain_infconv(&f, &phi_id(), &[-3.0], &[0.0], &b()).unwrap();
        assert!(h.value.is_inf(), "{h:?}");
    }

    #[test]
    fn range_infconv_mirrors_domain() {
        for &(x, xs) in &[(1.0, 2.0), (-0.5, 0.3)] {
            let d = domain_infconv(&phi_id(), &phi_id(), &[x], &[xs], &b()).unwrap();
            let r = range_infconv(&phi_id(), &phi_id(), &[xs], &[x], &b()).unwrap();
            assert!((d.value.as_f64() - r.value.as_f64()).abs() < 1e-9);
            let arg = r.argmin.unwrap()[0];
            assert!((arg - xs / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn identity_sum_identity() {
        let id = MonoMap::identity(1);
        let probes = [pt(&[1.0, 2.0]), pt(&[1.0, 3.0]), pt(&[0.0, 0.0])];
        let r = sum_identity_check(&id, &id, &probes, &b()).unwrap();
        assert!(r.agree, "{r:?}");
        assert_eq!(r.records.iter().map(|x| x.member).collect::<Vec<_>>(), vec![true, false, true]);
    }

    #[test]
    fn half_square_plus_abs() {
        let s = MonoMap::subdiff(ConvexFn::half_square(1)).unwrap();
        let t = MonoMap::subdiff(ConvexFn::abs()).unwrap();
        let probes = [pt(&[1.0, 2.0]), pt(&[0.0, 0.5]), pt(&[1.0, 1.0]), pt(&[-1.0, 0.0])];
        let r = sum_identity_check(&s, &t, &probes, &b()).unwrap();
        assert!(r.agree, "{r:#?}");
    }

    #[test]
    fn parallel_identity() {
        let id = MonoMap::identity(1);
        let probes = [pt(&[2.0, 1.0]), pt(&[1.0, 1.0]), pt(&[-1.0, -0.5]), pt(&[0.0, 0.3])];
        let r = parallel_sum_check(&id, &id, &probes, &b()).unwrap();
        assert!(r.iter().all(|x| x.agree), "{r:?}");
        assert_eq!(r.iter().map(|x| x.p_member).collect::<Vec<_>>(), vec![true, false, true, false]);
    }
}
