//! Monotone multifunctions `E ⇉ E*` with sums, parallel sums, graph
//! sampling and membership tests.

pub mod infconv;
pub mod sequence;

pub use infconv::{
    domain_infconv, parallel_sum_check, range_infconv, sum_identity_check, InfConvValue, ParallelSumRecord,
    SumIdentityRecord, SumIdentityReport,
};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convex::ConvexFn;
use crate::error::{check_len, Error, Result};
use crate::ext::ExtReal;
use crate::linalg::{lstsq, null_space, orth, sym_eigen};
use crate::norm::BaseNorm;
use crate::optim::{minimize_convex_1d, nelder_mead, uniform_vec, Budget, NelderMeadOptions};
use crate::sets::{LPositiveSet, SetRepr};
use crate::space::{Point, SnSpace};
use sequence::SeqKind;

/// A multifunction from `R^n` to `R^n` (or to `R^{n+1}` for sequence operators).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonoMap {
    /// Finitely many pairs `(x, x*)`, each stored as one vector of length `2n`.
    FiniteGraph { n: usize, points: Vec<Vec<f64>> },
    /// `x ↦ Mx`.
    Linear {
        #[serde(with = "crate::serde_mat::rows")]
        matrix: DMatrix<f64>,
    },
    /// `∂k`.
    Subdiff { n: usize, function: ConvexFn },
    /// `λT + μH` truncated to length `n`.
    Sequence { operator: SeqKind, n: usize },
    /// A linear relation spanned by vectors of length `2n`.
    Relation { n: usize, vectors: Vec<Vec<f64>> },
    /// Pointwise sum of the terms.
    Sum { terms: Vec<MonoMap> },
    /// Inverse multifunction.
    Inverse { inner: Box<MonoMap> },
}

/// Zero-gap point found by the resolvent identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventGap {
    pub gap: f64,
    pub x: Vec<f64>,
    pub xstar: Vec<f64>,
}

impl MonoMap {
    pub fn identity(n: usize) -> MonoMap {
        MonoMap::Linear { matrix: DMatrix::identity(n, n) }
    }

    pub fn linear(matrix: DMatrix<f64>) -> MonoMap {
        MonoMap::Linear { matrix }
    }

    pub fn subdiff(function: ConvexFn) -> Result<MonoMap> {
        let n = function
            .dim()
            .ok_or_else(|| Error::InvalidArgument("function dimension is not determined".into()))?;
        Ok(MonoMap::Subdiff { n, function })
    }

    pub fn finite(n: usize, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<MonoMap> {
        let mut points = Vec::new();
        for (x, y) in pairs {
            check_len(n, x.len())?;
            check_len(n, y.len())?;
            points.push([x.as_slice(), y.as_slice()].concat());
        }
        Ok(MonoMap::FiniteGraph { n, points })
    }

    /// Dimension of `E`.
    pub fn dim(&self) -> usize {
        match self {
            MonoMap::FiniteGraph { n, .. }
            | MonoMap::Subdiff { n, .. }
            | MonoMap::Sequence { n, .. }
            | MonoMap::Relation { n, .. } => *n,
            MonoMap::Linear { matrix } => matrix.ncols(),
            MonoMap::Sum { terms } => terms.first().map_or(0, MonoMap::dim),
            MonoMap::Inverse { inner } => inner.dim(),
        }
    }

    /// Dimension of the target block.
    pub fn target_dim(&self) -> usize {
        match self {
            MonoMap::Sequence { n, .. } => n + 1,
            _ => self.dim(),
        }
    }

    /// A linear relation description, when the graph is a subspace.
    pub fn as_relation(&self) -> Option<DMatrix<f64>> {
        let n = self.dim();
        match self {
            MonoMap::Linear { matrix } => {
                let mut b = DMatrix::zeros(2 * n, n);
                b.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
                b.view_mut((n, 0), (n, n)).copy_from(matrix);
                Some(b)
            }
            MonoMap::Relation { vectors, .. } => Some(if vectors.is_empty() {
                DMatrix::zeros(2 * n, 0)
            } else {
                DMatrix::from_columns(&vectors.iter().map(|v| DVector::from_column_slice(v)).collect::<Vec<_>>())
            }),
            MonoMap::Inverse { inner } => inner.as_relation().map(|b| swap_rows(&b, n)),
            _ => None,
        }
    }

    fn from_relation(n: usize, b: &DMatrix<f64>) -> MonoMap {
        let q = orth(b);
        // a relation with identity top block is a linear map
        if q.ncols() == n {
            let top = q.rows(0, n).into_owned();
            if let Some(inv) = top.clone().try_inverse() {
                if crate::linalg::rank(&top) == n {
                    return MonoMap::Linear { matrix: q.rows(n, n) * inv };
                }
            }
        }
        MonoMap::Relation { n, vectors: q.column_iter().map(|c| c.iter().copied().collect()).collect() }
    }

    /// The graph as a set in the product space over `base` and its dual.
    pub fn graph_set(&self, base: BaseNorm) -> Result<LPositiveSet> {
        let n = self.dim();
        if let MonoMap::Sequence { operator, n } = self {
            return LPositiveSet::sequence_operator(*operator, *n);
        }
        let space = Arc::new(SnSpace::product(n, base));
        match self {
            MonoMap::FiniteGraph { points, .. } => {
                LPositiveSet::finite_cloud(space, points.iter().map(|p| DVector::from_column_slice(p)).collect())
            }
            MonoMap::Linear { matrix } => LPositiveSet::operator_graph(space, matrix.clone(), DVector::zeros(n)),
            MonoMap::Subdiff { function, .. } => LPositiveSet::subdifferential_graph(space, function.clone()),
            _ => match self.as_relation() {
                Some(b) => LPositiveSet::new(
                    space,
                    SetRepr::LinearSubspace { vectors: b.column_iter().map(|c| c.into_owned()).collect() },
                ),
                None => Err(Error::NoClosedForm("graph of a composite multifunction".into())),
            },
        }
    }

    /// `inf` of a nonnegative measure that vanishes exactly on the graph:
    /// Fenchel–Young gaps for subdifferentials, squared distances otherwise.
    pub fn gap(&self, x: &[f64], xs: &[f64], budget: &Budget) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        check_len(self.target_dim(), xs.len())?;
        let xv = DVector::from_column_slice(x);
        let ys = DVector::from_column_slice(xs);
        Ok(match self {
            MonoMap::FiniteGraph { n, points } => points
                .iter()
                .map(|p| {
                    let d: f64 = p.iter().zip(x.iter().chain(xs)).map(|(a, b)| (a - b).powi(2)).sum();
                    debug_assert_eq!(p.len(), 2 * n);
                    0.5 * d
                })
                .fold(f64::INFINITY, f64::min),
            MonoMap::Linear { matrix } => 0.5 * (matrix * &xv - &ys).norm_squared(),
            MonoMap::Sequence { operator, .. } => {
                0.5 * operator.apply(x).iter().zip(xs).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            }
            MonoMap::Relation { .. } | MonoMap::Inverse { .. } if self.as_relation().is_some() => {
                let b = self.as_relation().expect("checked");
                let (_, r) = lstsq(&b, &SnSpace::join(x, xs));
                0.5 * r * r
            }
            MonoMap::Subdiff { function, .. } => match function {
                ConvexFn::Sum { terms } => {
                    let parts: Vec<MonoMap> =
                        terms.iter().map(|t| MonoMap::Subdiff { n: x.len(), function: t.clone() }).collect();
                    split_gap(&parts, x, xs, budget)?
                }
                _ => subdiff_gap(function, &xv, &ys)?,
            },
            MonoMap::Sum { terms } => split_gap(terms, x, xs, budget)?,
            MonoMap::Inverse { inner } => inner.gap(xs, x, budget)?,
            MonoMap::Relation { .. } => unreachable!("relations have a subspace form"),
        })
    }

    /// `(x, x*) ∈ G(S)` up to `tol`.
    pub fn contains(&self, x: &[f64], xs: &[f64], tol: f64, budget: &Budget) -> Result<bool> {
        Ok(self.gap(x, xs, budget)? <= tol)
    }

    /// An element of `Sx`, when a selection is available.
    pub fn select(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        let xv = DVector::from_column_slice(x);
        match self {
            MonoMap::Linear { matrix } => Ok((matrix * xv).as_slice().to_vec()),
            MonoMap::Subdiff { function, .. } => Ok(function.subgradient(&xv)?.as_slice().to_vec()),
            MonoMap::Sequence { operator, .. } => Ok(operator.apply(x)),
            MonoMap::Sum { terms } => {
                let mut acc = vec![0.0; self.target_dim()];
                for t in terms {
                    for (a, v) in acc.iter_mut().zip(t.select(x)?) {
                        *a += v;
                    }
                }
                Ok(acc)
            }
            _ => Err(Error::NoClosedForm("selection".into())),
        }
    }

    /// Graph points. Finite graphs return all their points; other
    /// representations draw parameters uniformly from `[-scale, scale]`.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize, scale: f64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let n = self.dim();
        match self {
            MonoMap::FiniteGraph { points, .. } => Ok(points.iter().map(|p| (p[..n].to_vec(), p[n..].to_vec())).collect()),
            MonoMap::Subdiff { function, .. } => (0..count)
                .map(|_| {
                    let z = DVector::from_vec(uniform_vec(rng, n, scale));
                    let p = function.prox(&z, 1.0)?;
                    Ok((p.as_slice().to_vec(), (&z - &p).as_slice().to_vec()))
                })
                .collect(),
            MonoMap::Inverse { inner } => {
                Ok(inner.sample(rng, count, scale)?.into_iter().map(|(a, b)| (b, a)).collect())
            }
            _ => {
                if let MonoMap::Relation { .. } = self {
                    let b = self.as_relation().expect("relation");
                    return Ok((0..count)
                        .map(|_| {
                            let t = DVector::from_vec(uniform_vec(rng, b.ncols(), scale));
                            let p = &b * t;
                            (p.as_slice()[..n].to_vec(), p.as_slice()[n..].to_vec())
                        })
                        .collect());
                }
                (0..count)
                    .map(|_| {
                        let x = uniform_vec(rng, n, scale);
                        let y = self.select(&x)?;
                        Ok((x, y))
                    })
                    .collect()
            }
        }
    }

    /// Smallest `⟨s₁ - s₂, s₁* - s₂*⟩` over sampled pairs (exact for linear maps,
    /// via the symmetric part).
    pub fn monotonicity(&self, samples: usize, budget: &Budget) -> Result<f64> {
        if let MonoMap::Linear { matrix } = self {
            let s = (matrix + matrix.transpose()) * 0.5;
            let (vals, _) = sym_eigen(&s);
            return Ok(if vals.is_empty() { 0.0 } else { vals[0].min(0.0) });
        }
        let mut rng = budget.rng(0x3770);
        let pts = self.sample(&mut rng, samples, 2.0)?;
        let mut min = 0.0f64;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let v = sequence::pair(
                    &pts[i].0.iter().zip(&pts[j].0).map(|(a, b)| a - b).collect::<Vec<_>>(),
                    &pts[i].1.iter().zip(&pts[j].1).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                min = min.min(v);
            }
        }
        Ok(min)
    }

    /// Rows `x1..xn,y1..ym` of sampled graph points.
    pub fn samples_csv(&self, pts: &[(Vec<f64>, Vec<f64>)]) -> String {
        let mut head: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        head.extend((1..=self.target_dim()).map(|i| format!("y{i}")));
        let mut s = head.join(",");
        s.push('\n');
        for (x, y) in pts {
            let row: Vec<String> = x.iter().chain(y).map(|v| v.to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    /// `inf ½‖(s - w) + (s* - w*)‖²` over the graph, from `s + s* = w + w*`.
    ///
    /// In euclidean product spaces this is the density gap at `(w, w*)`.
    pub fn resolvent_gap_oracle(&self, w: &[f64], ws: &[f64]) -> Result<ResolventGap> {
        let n = self.dim();
        check_len(n, w.len())?;
        check_len(n, ws.len())?;
        let z = DVector::from_iterator(n, w.iter().zip(ws).map(|(a, b)| a + b));
        match self {
            MonoMap::FiniteGraph { points, .. } => {
                let (i, gap) = points
                    .iter()
                    .map(|p| 0.5 * (0..n).map(|k| (p[k] + p[n + k] - z[k]).powi(2)).sum::<f64>())
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .ok_or_else(|| Error::InvalidArgument("empty graph".into()))?;
                Ok(ResolventGap { gap, x: points[i][..n].to_vec(), xstar: points[i][n..].to_vec() })
            }
            MonoMap::Subdiff { function, .. } => {
                let s = function.prox(&z, 1.0)?;
                let ss = &z - &s;
                Ok(ResolventGap { gap: 0.0, x: s.as_slice().to_vec(), xstar: ss.as_slice().to_vec() })
            }
            _ => match self.as_relation() {
                Some(b) => {
                    let sum = b.rows(0, n) + b.rows(n, n);
                    let (t, r) = lstsq(&sum, &z);
                    let p = &b * t;
                    Ok(ResolventGap { gap: 0.5 * r * r, x: p.as_slice()[..n].to_vec(), xstar: p.as_slice()[n..].to_vec() })
                }
                None => Err(Error::NoClosedForm("resolvent of this representation".into())),
            },
        }
    }
}

pub fn swap_rows(b: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut out = b.clone();
    out.rows_mut(0, n).copy_from(&b.rows(n, n));
    out.rows_mut(n, n).copy_from(&b.rows(0, n));
    out
}

fn subdiff_gap(k: &ConvexFn, x: &Point, y: &Point) -> Result<f64> {
    match k.fenchel_young_gap(x, y) {
        Ok(ExtReal::Finite(v)) => Ok(v),
        Ok(ExtReal::PosInf) => Ok(f64::INFINITY),
        Err(Error::NoClosedForm(_)) => {
            // Minty residual
            let p = k.prox(&(x + y), 1.0)?;
            Ok(0.5 * (p - x).norm_squared())
        }
        Err(e) => Err(e),
    }
}

/// `inf Σ gap_i(x, s_i*)` over splittings `Σ s_i* = x*`.
fn split_gap(terms: &[MonoMap], x: &[f64], xs: &[f64], budget: &Budget) -> Result<f64> {
    match terms.len() {
        0 => return Ok(if xs.iter().all(|v| *v == 0.0) { 0.0 } else { f64::INFINITY }),
        1 => return terms[0].gap(x, xs, budget),
        _ => {}
    }
    let m = xs.len();
    let k = terms.len() - 1;
    let total = |s: &[f64]| -> f64 {
        let mut rest = xs.to_vec();
        let mut acc = 0.0;
        for (i, t) in terms[..k].iter().enumerate() {
            let si = &s[i * m..(i + 1) * m];
            for (r, v) in rest.iter_mut().zip(si) {
                *r -= v;
            }
            acc += t.gap(x, si, budget).unwrap_or(f64::INFINITY);
        }
        acc + terms[k].gap(x, &rest, budget).unwrap_or(f64::INFINITY)
    };
    // start from selections of the leading terms when available
    let mut s0 = Vec::with_capacity(k * m);
    for t in &terms[..k] {
        match t.select(x) {
            Ok(v) => s0.extend(v),
            Err(_) => s0.extend(vec![0.0; m]),
        }
    }
    if k * m == 1 {
        let (_, v) = minimize_convex_1d(|s| total(&[s]), s0[0], 1.0 + xs[0].abs());
        return Ok(v.max(0.0));
    }
    let o = NelderMeadOptions { initial_step: 0.25, ..Default::default() };
    let mut best = total(&s0);
    let mut starts = vec![s0];
    for r in 0..budget.restarts.min(4) {
        let mut g = budget.rng(0x5b1 + r as u64);
        starts.push(uniform_vec(&mut g, k * m, 1.0 + xs.iter().fold(0.0f64, |a, v| a.max(v.abs()))));
    }
    for s in starts {
        best = best.min(nelder_mead(total, &s, &o).value);
    }
    Ok(best.max(0.0))
}

/// Graph of `S + T`: `{(x, s* + t*) : s* ∈ Sx, t* ∈ Tx}`.
pub fn op_sum(s: &MonoMap, t: &MonoMap) -> Result<MonoMap> {
    check_len(s.dim(), t.dim())?;
    check_len(s.target_dim(), t.target_dim())?;
    Ok(match (s, t) {
        (MonoMap::Linear { matrix: a }, MonoMap::Linear { matrix: b }) => MonoMap::Linear { matrix: a + b },
        (MonoMap::Subdiff { n, function: f }, MonoMap::Subdiff { function: g, .. }) => {
            MonoMap::Subdiff { n: *n, function: ConvexFn::sum(vec![f.clone(), g.clone()]) }
        }
        _ => match (s.as_relation(), t.as_relation()) {
            (Some(a), Some(b)) => MonoMap::from_relation(s.dim(), &relation_sum(s.dim(), &a, &b)),
            _ => MonoMap::Sum { terms: vec![s.clone(), t.clone()] },
        },
    })
}

/// `{(x, y₁ + y₂) : (x, y₁) ∈ A, (x, y₂) ∈ B}` for spanning matrices `A`, `B`.
fn relation_sum(n: usize, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ka, kb) = (a.ncols(), b.ncols());
    let mut c = DMatrix::zeros(n, ka + kb);
    c.view_mut((0, 0), (n, ka)).copy_from(&a.rows(0, n));
    c.view_mut((0, ka), (n, kb)).copy_from(&(-b.rows(0, n)));
    let ker = null_space(&c);
    let mut out = DMatrix::zeros(2 * n, ker.ncols());
    for j in 0..ker.ncols() {
        let u = ker.column(j);
        let ua = u.rows(0, ka);
        let ub = u.rows(ka, kb);
        let x = a.rows(0, n) * ua;
        let y = a.rows(n, n) * ua + b.rows(n, n) * ub;
        out.view_mut((0, j), (n, 1)).copy_from(&x);
        out.view_mut((n, j), (n, 1)).copy_from(&y);
    }
    orth(&out)
}

/// Inverse multifunction.
pub fn inverse(s: &MonoMap) -> MonoMap {
    match s {
        MonoMap::Inverse { inner } => (**inner).clone(),
        MonoMap::Linear { matrix } => match matrix.clone().try_inverse() {
            Some(inv) if crate::linalg::rank(matrix) == matrix.ncols() => MonoMap::Linear { matrix: inv },
            _ => MonoMap::from_relation(s.dim(), &swap_rows(&s.as_relation().expect("linear"), s.dim())),
        },
        MonoMap::Relation { n, .. } => MonoMap::from_relation(*n, &swap_rows(&s.as_relation().expect("relation"), *n)),
        MonoMap::FiniteGraph { n, points } => MonoMap::FiniteGraph {
            n: *n,
            points: points.iter().map(|p| [&p[*n..], &p[..*n]].concat()).collect(),
        },
        _ => MonoMap::Inverse { inner: Box::new(s.clone()) },
    }
}

/// `S ∥ T = (S⁻¹ + T⁻¹)⁻¹`.
pub fn parallel_sum(s: &MonoMap, t: &MonoMap) -> Result<MonoMap> {
    Ok(inverse(&op_sum(&inverse(s), &inverse(t))?))
}

/// Image of `A` under `(x, x*) ↦ (x/α, x*/β)`.
pub fn deform(a: &LPositiveSet, alpha: f64, beta: f64) -> Result<LPositiveSet> {
    a.deform(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{certify_quasidense, density_gap};
    use crate::space::pt;
    use proptest::prelude::*;

    fn b() -> Budget {
        Budget::default()
    }

    fn m1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn sums_of_linear_maps() {
        let s = op_sum(&MonoMap::identity(1), &MonoMap::identity(1)).unwrap();
        assert!(s.contains(&[1.5], &[3.0], 1e-12, &b()).unwrap());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        match op_sum(&MonoMap::linear(a.clone()), &MonoMap::linear(c.clone())).unwrap() {
            MonoMap::Linear { matrix } => assert_eq!(matrix, a + c),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn subdifferential_sum() {
        let s = MonoMap::subdiff(ConvexFn::half_square(1)).unwrap();
        let t = MonoMap::subdiff(ConvexFn::abs()).unwrap();
        let st = op_sum(&s, &t).unwrap();
        assert!(st.contains(&[1.0], &[2.0], 1e-8, &b()).unwrap());
        assert!(st.contains(&[0.0], &[0.7], 1e-8, &b()).unwrap());
        assert!(st.contains(&[-2.0], &[-3.0], 1e-8, &b()).unwrap());
        assert!(!st.contains(&[1.0], &[1.5], 1e-8, &b()).unwrap());
        assert!(!st.contains(&[0.0], &[1.5], 1e-8, &b()).unwrap());
    }

    #[test]
    fn parallel_sums() {
        let p = parallel_sum(&MonoMap::identity(1), &MonoMap::identity(1)).unwrap();
        match &p {
            MonoMap::Linear { matrix } => assert!((matrix[(0, 0)] - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 3.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let expect = (a.clone().try_inverse().unwrap() + c.clone().try_inverse().unwrap()).try_inverse().unwrap();
        match parallel_sum(&MonoMap::linear(a), &MonoMap::linear(c)).unwrap() {
            MonoMap::Linear { matrix } => assert!((matrix - expect).amax() < 1e-10),
            other => panic!("{other:?}"),
        }
        // R(S) = {0}
        let zero = MonoMap::linear(m1(0.0));
        let p = parallel_sum(&zero, &MonoMap::identity(1)).unwrap();
        let mut g = b().rng(0);
        for (_, y) in p.sample(&mut g, 10, 3.0).unwrap() {
            assert!(y[0].abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_oracle_examples() {
        let id = MonoMap::identity(1);
        let r = id.resolvent_gap_oracle(&[1.0], &[-1.0]).unwrap();
        assert!(r.gap < 1e-14 && r.x[0].abs() < 1e-12);
        let single = MonoMap::finite(1, &[(vec![0.0], vec![0.0])]).unwrap();
        assert_eq!(single.resolvent_gap_oracle(&[1.0], &[0.0]).unwrap().gap, 0.5);
        let abs = MonoMap::subdiff(ConvexFn::abs()).unwrap();
        let r = abs.resolvent_gap_oracle(&[2.0], &[0.0]).unwrap();
        assert!(r.gap == 0.0 && (r.x[0] - 1.0).abs() < 1e-12 && (r.xstar[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_density_gap() {
        let maps = [
            MonoMap::identity(1),
            MonoMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 0.5])),
            MonoMap::subdiff(ConvexFn::abs()).unwrap(),
            MonoMap::subdiff(ConvexFn::indicator_box(vec![0.0], vec![1.0])).unwrap(),
            MonoMap::finite(1, &[(vec![0.0], vec![0.0]), (vec![1.0], vec![2.0])]).unwrap(),
        ];
        let mut g = b().rng(9);
        for m in &maps {
            let set = m.graph_set(BaseNorm::Euclidean).unwrap();
            let n = m.dim();
            for _ in 0..5 {
                let w = uniform_vec(&mut g, n, 2.0);
                let ws = uniform_vec(&mut g, n, 2.0);
                let o = m.resolvent_gap_oracle(&w, &ws).unwrap();
                let d = density_gap(&set, &SnSpace::join(&w, &ws), &b()).unwrap();
                assert!((o.gap - d.gap).abs() < 1e-6, "{m:?} {} {}", o.gap, d.gap);
            }
        }
    }

    #[test]
    fn surjective_linear_maps_certify() {
        let m = MonoMap::linear(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -2.0, 1.0]));
        let set = m.graph_set(BaseNorm::Euclidean).unwrap();
        let probes = crate::grid::Grid::lattice(4, 3, 1.0).points();
        assert!(certify_quasidense(&set, &probes, &b()).unwrap().is_quasidense());
    }

    #[test]
    fn deformation_preserves_certificates() {
        let id = LPositiveSet::identity_graph(1);
        let d = deform(&id, 2.0, 1.0).unwrap();
        assert!(d.contains(&pt(&[0.5, 1.0]), 1e-12));
        let probes = crate::grid::Grid::default_probes(2).points();
        assert!(certify_quasidense(&d, &probes, &b()).unwrap().is_quasidense());
        assert!(deform(&id, 1.0, 1.0).unwrap().contains(&pt(&[-1.0, -1.0]), 1e-12));
    }

    #[test]
    fn sampling_and_csv() {
        let abs = MonoMap::subdiff(ConvexFn::abs()).unwrap();
        let mut g = b().rng(4);
        let pts = abs.sample(&mut g, 20, 3.0).unwrap();
        assert!(pts.iter().all(|(x, y)| abs.contains(x, y, 1e-9, &b()).unwrap()));
        assert!(abs.monotonicity(20, &b()).unwrap() >= -1e-12);
        let csv = abs.samples_csv(&pts);
        assert!(csv.starts_with("x1,y1\n"));
        let json = serde_json::to_string(&abs).unwrap();
        let back: MonoMap = serde_json::from_str(&json).unwrap();
        assert!(back.contains(&[0.0], &[0.5], 1e-9, &b()).unwrap());
    }

    #[test]
    fn relations_invert_and_add() {
        // {(t, 0)} has inverse {(0, t)}
        let r = MonoMap::Relation { n: 1, vectors: vec![vec![1.0, 0.0]] };
        let inv = inverse(&r);
        assert!(inv.contains(&[0.0], &[3.0], 1e-12, &b()).unwrap());
        assert!(!inv.contains(&[1.0], &[3.0], 1e-12, &b()).unwrap());
        let s = op_sum(&r, &MonoMap::identity(1)).unwrap();
        assert!(s.contains(&[2.0], &[2.0], 1e-12, &b()).unwrap());
    }

    proptest! {
        #[test]
        fn linear_monotonicity_matches_samples(a in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64) {
            let m = MonoMap::linear(DMatrix::from_row_slice(2, 2, &[a, c, -c, d]));
            let exact = m.monotonicity(0, &b()).unwrap();
            prop_assert_eq!(exact >= -1e-12, a >= -1e-12 && d >= -1e-12);
        }

        #[test]
        fn sum_selections_are_members(x in -3.0..3.0f64) {
            let s = MonoMap::subdiff(ConvexFn::half_square(1)).unwrap();
            let t = MonoMap::linear(m1(2.0));
            let st = op_sum(&s, &t).unwrap();
            let y = st.select(&[x]).unwrap();
            prop_assert!(st.contains(&[x], &y, 1e-8, &b()).unwrap());
        }
    }
}
