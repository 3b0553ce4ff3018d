//! Density gaps `inf r_L(A - c)`, quasidensity certificates, stable radii and
//! maximality probes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{LPositiveSet, SetRepr};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, sup_concave_quadratic, sym_eigen};
use crate::mono::sequence::SeqKind;
use crate::optim::{minimize_smoothed, nelder_mead, uniform_vec, Budget, NelderMeadOptions};
use crate::parallel::par_map;
use crate::space::{Point, SnSpace};

/// Outcome of one density-gap minimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    /// Best value of `r_L(a - c)` found (an upper bound of the infimum).
    pub gap: f64,
    #[serde(with = "crate::serde_mat::vector")]
    pub minimizer: Point,
    /// Parameter of the minimizer for parametrized sets.
    pub param: Option<Vec<f64>>,
    /// Certified lower bound of the infimum, when one is available.
    pub lower_bound: Option<f64>,
    /// Whether `gap` is the exact infimum.
    pub exact: bool,
    /// Best value from each restart, in order.
    pub restart_values: Vec<f64>,
}

/// Cheap lower bound for the tail operator at probes `(0, t·e*)`.
fn tail_bound(kind: SeqKind, n: usize, c: &Point) -> Option<f64> {
    if kind != SeqKind::Tail {
        return None;
    }
    let (x, xs) = (&c.as_slice()[..n], &c.as_slice()[n..]);
    let t = xs[0];
    if x.iter().any(|v| *v != 0.0) || xs.iter().any(|v| *v != t) {
        return None;
    }
    Some(0.25 * t * t)
}

fn r_l_affine_exact(space: &SnSpace, p0: &Point, p: &DMatrix<f64>, c: &Point) -> (f64, Vec<f64>) {
    let k = DMatrix::identity(space.dim(), space.dim()) + space.l();
    let (vals, vecs) = sym_eigen(&k);
    let root = &vecs * DMatrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt())) * vecs.transpose();
    let w = p0 - c;
    let (t, _) = lstsq(&(&root * p), &(-(&root * &w)));
    let gap = space.r_l(&(p * &t + &w)).max(0.0);
    (gap, t.as_slice().to_vec())
}

/// `inf_{a∈A} r_L(a - c)`.
///
/// Exact for finite clouds and for affine sets in euclidean spaces; otherwise a
/// multi-start minimization over the set's parameters whose value is an upper
/// bound of the infimum.
pub fn density_gap(set: &LPositiveSet, c: &Point, budget: &Budget) -> Result<GapResult> {
    let space = set.space();
    crate::error::check_len(space.dim(), c.len())?;
    if let SetRepr::FiniteCloud { points } = set.repr() {
        let (i, gap) = points
            .iter()
            .map(|p| space.r_l(&(p - c)).max(0.0))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        return Ok(GapResult {
            gap,
            minimizer: points[i].clone(),
            param: None,
            lower_bound: Some(gap),
            exact: true,
            restart_values: vec![gap],
        });
    }
    if let Some((p0, p)) = set.affine_rep() {
        if space.norm_kind().is_euclidean() {
            let (gap, t) = r_l_affine_exact(space, &p0, &p, c);
            let minimizer = &p0 + &p * DVector::from_column_slice(&t);
            return Ok(GapResult {
                gap,
                minimizer,
                param: Some(t),
                lower_bound: Some(gap),
                exact: true,
                restart_values: vec![gap],
            });
        }
        return Ok(affine_numeric(set, &p0, &p, c, budget));
    }
    subdiff_numeric(set, c, budget)
}

fn affine_numeric(set: &LPositiveSet, p0: &Point, p: &DMatrix<f64>, c: &Point, budget: &Budget) -> GapResult {
    let space = set.space();
    let k = p.ncols();
    let w = p0 - c;
    let seq = match set.repr() {
        SetRepr::SequenceOperator { operator, n } => Some((*operator, *n)),
        _ => None,
    };
    let lower = seq.and_then(|(kind, n)| tail_bound(kind, n, c));
    let point = |t: &[f64]| -> Point {
        match seq {
            Some((kind, _)) => SnSpace::join(t, &kind.apply(t)) + &w,
            None => p * DVector::from_column_slice(t) + &w,
        }
    };
    let exact = |t: &[f64]| space.r_l(&point(t));
    let smooth = |t: &[f64], mu: f64, g: &mut [f64]| {
        let b = point(t);
        let mut gb = vec![0.0; b.len()];
        let v = space.r_l_smooth(b.as_slice(), mu, &mut gb);
        match seq {
            Some((kind, n)) => {
                let back = kind.apply_transpose(&gb[n..]);
                for i in 0..n {
                    g[i] = gb[i] + back[i];
                }
            }
            None => {
                let gt = p.transpose() * DVector::from_column_slice(&gb);
                g.copy_from_slice(gt.as_slice());
            }
        }
        v
    };
    let scale = 1.0 + c.amax();
    let restarts = budget.restarts.max(1);
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|r| {
            if r == 0 {
                vec![0.0; k]
            } else {
                let mut g = budget.rng(0x6a9 + r as u64);
                let s = scale / (k as f64).sqrt().max(1.0);
                uniform_vec(&mut g, k, s)
            }
        })
        .collect();
    let target = lower.map(|lb| lb + 1e-12);
    let runs = par_map(&starts, |x0| minimize_smoothed(smooth, exact, x0, budget.max_iter.min(500), target));
    finish(set, runs.into_iter().map(|m| (m.value, m.x)).collect(), lower, |t| point(t) + c)
}

fn finish<F: Fn(&[f64]) -> Point>(
    _set: &LPositiveSet,
    runs: Vec<(f64, Vec<f64>)>,
    lower: Option<f64>,
    point: F,
) -> GapResult {
    let restart_values: Vec<f64> = runs.iter().map(|r| r.0.max(0.0)).collect();
    let best = (0..runs.len()).min_by(|&a, &b| runs[a].0.total_cmp(&runs[b].0)).expect("at least one run");
    let (gap, t) = (runs[best].0.max(0.0), runs[best].1.clone());
    let lower_bound = lower.or(if gap <= 0.0 { Some(0.0) } else { None });
    GapResult {
        gap,
        minimizer: point(&t),
        param: Some(t),
        exact: lower_bound.is_some_and(|lb| lb >= gap),
        lower_bound,
        restart_values,
    }
}

fn subdiff_numeric(set: &LPositiveSet, c: &Point, budget: &Budget) -> Result<GapResult> {
    let space = set.space();
    let k = set.param_dim().unwrap_or(0);
    let f = |z: &[f64]| match set.point_at(z) {
        Ok(a) => space.r_l(&(a - c)),
        Err(_) => f64::INFINITY,
    };
    let (x, xs) = space.split(c);
    let sum: Vec<f64> = x.iter().zip(xs).map(|(a, b)| a + b).collect();
    let scale = 1.0 + c.amax();
    let mut starts = vec![vec![0.0; k], sum];
    for r in 0..budget.restarts.saturating_sub(2) {
        let mut g = budget.rng(0x5d1 + r as u64);
        starts.push(uniform_vec(&mut g, k, 2.0 * scale));
    }
    let o = NelderMeadOptions { max_evals: budget.max_iter * 10, ..Default::default() };
    let runs = par_map(&starts, |z0| {
        let m = nelder_mead(f, z0, &o);
        (m.value, m.x)
    });
    let point = |z: &[f64]| set.point_at(z).expect("valid parameter");
    Ok(finish(set, runs, None, point))
}

/// Verdict of a quasidensity sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GapVerdict {
    /// Every probe has gap at most `tol`.
    QuasidenseOnGrid,
    /// A probe whose infimum is certified to exceed `tol`.
    Refuted { witness: Vec<f64>, bound: f64 },
    /// A probe with gap above `tol` but no certified lower bound.
    NoGapFoundWithinBudget { witness: Vec<f64>, gap: f64 },
}

/// One probe of a [`GapCertificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub probe: Vec<f64>,
    pub gap: f64,
    pub minimizer: Vec<f64>,
    /// `‖minimizer - probe‖`.
    pub radius: f64,
    pub lower_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub tol: f64,
    pub records: Vec<ProbeRecord>,
    #[serde(flatten)]
    pub verdict: GapVerdict,
}

impl GapCertificate {
    pub fn is_quasidense(&self) -> bool {
        self.verdict == GapVerdict::QuasidenseOnGrid
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self.verdict, GapVerdict::Refuted { .. })
    }

    pub fn max_gap(&self) -> f64 {
        self.records.iter().map(|r| r.gap).fold(0.0, f64::max)
    }

    /// Rows `p1,...,pd,gap,radius`.
    pub fn to_csv(&self) -> String {
        let d = self.records.first().map_or(0, |r| r.probe.len());
        let mut out: Vec<String> = (1..=d).map(|i| format!("p{i}")).collect();
        out.extend(["gap".to_string(), "radius".to_string()]);
        let mut s = out.join(",");
        s.push('\n');
        for r in &self.records {
            let mut row: Vec<String> = r.probe.iter().map(|v| v.to_string()).collect();
            row.push(r.gap.to_string());
            row.push(r.radius.to_string());
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Runs [`density_gap`] at every probe.
pub fn certify_quasidense(set: &LPositiveSet, probes: &[Point], budget: &Budget) -> Result<GapCertificate> {
    if probes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let results = par_map(probes, |c| density_gap(set, c, budget));
    let mut records = Vec::with_capacity(probes.len());
    for (c, r) in probes.iter().zip(results) {
        let r = r?;
        records.push(ProbeRecord {
            probe: c.as_slice().to_vec(),
            gap: r.gap,
            radius: set.space().norm(&(&r.minimizer - c)),
            minimizer: r.minimizer.as_slice().to_vec(),
            lower_bound: r.lower_bound,
        });
    }
    let tol = budget.tol;
    let mut verdict = GapVerdict::QuasidenseOnGrid;
    for r in &records {
        if r.gap <= tol {
            continue;
        }
        match r.lower_bound {
            Some(lb) if lb > tol => {
                verdict = GapVerdict::Refuted { witness: r.probe.clone(), bound: lb };
                break;
            }
            _ => {
                if verdict == GapVerdict::QuasidenseOnGrid {
                    verdict = GapVerdict::NoGapFoundWithinBudget { witness: r.probe.clone(), gap: r.gap };
                }
            }
        }
    }
    Ok(GapCertificate { tol, records, verdict })
}

/// Smallest radius `K` (up to bisection precision) with
/// `inf{r_L(a - c) : a ∈ A, ‖a - c‖ ≤ K} ≤ tol`.
pub fn stable_radius(set: &LPositiveSet, c: &Point, tol: f64, budget: &Budget) -> Result<f64> {
    let space = set.space();
    let g = density_gap(set, c, budget)?;
    if g.gap > tol {
        return Err(Error::Precondition(format!("gap {} exceeds tolerance {tol}", g.gap)));
    }
    if set.contains(c, 1e-12) {
        return Ok(0.0);
    }
    if let Some(points) = set.points() {
        return Ok(points
            .iter()
            .filter(|p| space.r_l(&(*p - c)) <= tol)
            .map(|p| space.norm(&(p - c)))
            .fold(f64::INFINITY, f64::min));
    }
    let t0 = g.param.clone().unwrap_or_default();
    let hi0 = space.norm(&(&g.minimizer - c));
    let penalty = 1e8;
    let restricted = |t: &[f64], k: f64| -> (f64, f64, f64) {
        match set.point_at(t) {
            Ok(a) => {
                let d = &a - c;
                let dist = space.norm(&d);
                let r = space.r_l(&d);
                (r + penalty * (dist - k).max(0.0).powi(2), r, dist)
            }
            Err(_) => (f64::INFINITY, f64::INFINITY, f64::INFINITY),
        }
    };
    let o = NelderMeadOptions { max_evals: 4000, initial_step: 1e-2 * (1.0 + hi0), restarts: 2, ..Default::default() };
    let (mut lo, mut hi) = (0.0, hi0);
    let mut seed = t0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let m = nelder_mead(|t| restricted(t, mid).0, &seed, &o);
        let (_, r, dist) = restricted(&m.x, mid);
        if r <= tol && dist <= mid * (1.0 + 1e-9) + 1e-12 {
            hi = dist.max(lo);
            seed = m.x;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-9 * (1.0 + hi) {
            break;
        }
    }
    Ok(hi)
}

/// One candidate of a [`MaximalityReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub candidate: Vec<f64>,
    pub member: bool,
    /// `inf q_L(A - b)`, `None` when unbounded below.
    pub inf_q: Option<f64>,
    /// `A ∪ {b}` stays L-positive.
    pub extends: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalityReport {
    pub maximal_on_candidates: bool,
    pub records: Vec<CandidateRecord>,
    pub witnesses: Vec<Vec<f64>>,
}

fn inf_q_l(set: &LPositiveSet, b: &Point, budget: &Budget) -> Option<f64> {
    let space = set.space();
    if let Some(points) = set.points() {
        return Some(points.iter().map(|p| space.q_l(&(p - b))).fold(f64::INFINITY, f64::min));
    }
    if let Some((p0, p)) = set.affine_rep() {
        let w = &p0 - b;
        let h = p.transpose() * space.l() * &p;
        let g = p.transpose() * space.apply_l(&w);
        let (sup, _) = sup_concave_quadratic(&(-&h), &(-g));
        return sup.finite().map(|s| space.q_l(&w) - s);
    }
    let k = set.param_dim().unwrap_or(0);
    let f = |z: &[f64]| match set.point_at(z) {
        Ok(a) => space.q_l(&(a - b)),
        Err(_) => f64::INFINITY,
    };
    let o = NelderMeadOptions { divergence: Some(budget.divergence), ..Default::default() };
    let mut best = f64::INFINITY;
    for r in 0..budget.restarts.max(1) {
        let mut g = budget.rng(0x3a1 + r as u64);
        let z0 = if r == 0 { vec![0.0; k] } else { uniform_vec(&mut g, k, 1.0 + b.amax()) };
        let m = nelder_mead(f, &z0, &o);
        if m.diverged && m.value < -1.0 {
            return None;
        }
        best = best.min(m.value);
    }
    Some(best)
}

/// For each candidate `b ∉ A`, checks whether `inf q_L(A - b) ≥ -tol`; any
/// such `b` would extend `A`.
pub fn maximality_probe(set: &LPositiveSet, candidates: &[Point], budget: &Budget) -> Result<MaximalityReport> {
    let tol = budget.tol;
    let mut records = Vec::new();
    let mut witnesses = Vec::new();
    for b in candidates {
        crate::error::check_len(set.space().dim(), b.len())?;
        let member = set.contains(b, 1e-9);
        let (inf_q, extends) = if member {
            (Some(0.0), false)
        } else {
            let v = inf_q_l(set, b, budget);
            (v, v.is_some_and(|v| v >= -tol))
        };
        if extends {
            witnesses.push(b.as_slice().to_vec());
        }
        records.push(CandidateRecord { candidate: b.as_slice().to_vec(), member, inf_q, extends });
    }
    Ok(MaximalityReport { maximal_on_candidates: witnesses.is_empty(), records, witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexFn;
    use crate::norm::BaseNorm;
    use crate::space::pt;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn r1() -> Arc<SnSpace> {
        Arc::new(SnSpace::product(1, BaseNorm::Euclidean))
    }

    #[test]
    fn identity_gap_at_anti_diagonal() {
        let id = LPositiveSet::identity_graph(1);
        let g = density_gap(&id, &pt(&[1.0, -1.0]), &Budget::default()).unwrap();
        assert!(g.gap < 1e-14 && g.minimizer.amax() < 1e-12 && g.exact);
    }

    #[test]
    fn singleton_gap() {
        let a = LPositiveSet::finite_cloud(r1(), vec![pt(&[0.0, 0.0])]).unwrap();
        let g = density_gap(&a, &pt(&[1.0, 0.0]), &Budget::default()).unwrap();
        assert_eq!(g.gap, 0.5);
    }

    #[test]
    fn tail_gap_is_bounded_below() {
        let n = 30;
        let t = LPositiveSet::sequence_operator(SeqKind::Tail, n).unwrap();
        let mut c = vec![0.0; n];
        c.extend(vec![1.0; n + 1]);
        let g = density_gap(&t, &pt(&c), &Budget::default().with_restarts(4)).unwrap();
        assert_eq!(g.lower_bound, Some(0.25));
        assert!(g.restart_values.iter().all(|v| *v >= 0.25 - 1e-9));
        assert!(g.gap <= 0.26, "{}", g.gap);
    }

    #[test]
    fn certificates() {
        let b = Budget::default();
        let probes = crate::grid::Grid::default_probes(2).points();
        let id = LPositiveSet::identity_graph(1);
        assert!(certify_quasidense(&id, &probes, &b).unwrap().is_quasidense());
        let abs = LPositiveSet::subdifferential_graph(r1(), ConvexFn::abs()).unwrap();
        let cert = certify_quasidense(&abs, &probes, &b).unwrap();
        assert!(cert.is_quasidense(), "{:?}", cert.max_gap());
        let single = LPositiveSet::finite_cloud(r1(), vec![pt(&[0.0, 0.0])]).unwrap();
        assert!(certify_quasidense(&single, &probes, &b).unwrap().is_refuted());
        let csv = cert.to_csv();
        assert!(csv.starts_with("p1,p2,gap,radius\n"));
        assert_eq!(csv.lines().count(), probes.len() + 1);
    }

    #[test]
    fn tail_certificate_refutes() {
        let n = 20;
        let t = LPositiveSet::sequence_operator(SeqKind::Tail, n).unwrap();
        let mut c = vec![0.0; n];
        c.extend(vec![1.0; n + 1]);
        let cert = certify_quasidense(&t, &[pt(&c)], &Budget::default().with_restarts(2)).unwrap();
        assert_eq!(cert.verdict, GapVerdict::Refuted { witness: c, bound: 0.25 });
    }

    #[test]
    fn radii() {
        let b = Budget::default();
        let id = LPositiveSet::identity_graph(1);
        assert_eq!(stable_radius(&id, &pt(&[2.0, 2.0]), 1e-8, &b).unwrap(), 0.0);
        let k = stable_radius(&id, &pt(&[1.0, -1.0]), 1e-8, &b).unwrap();
        assert!((k - 2f64.sqrt()).abs() < 1e-3, "{k}");
        let cloud = LPositiveSet::finite_cloud(r1(), vec![pt(&[0.0, 0.0]), pt(&[3.0, 3.0])]).unwrap();
        assert!((stable_radius(&cloud, &pt(&[1.0, -1.0]), 1e-8, &b).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let far = stable_radius(&cloud, &pt(&[5.0, 0.0]), 1e-8, &b);
        assert!(far.is_err());
    }

    #[test]
    fn maximality() {
        let b = Budget::default();
        let id = LPositiveSet::identity_graph(1);
        let cands = vec![pt(&[1.0, 0.0]), pt(&[0.0, 2.0]), pt(&[-1.0, 3.0]), pt(&[1.0, 1.0])];
        let r = maximality_probe(&id, &cands, &b).unwrap();
        assert!(r.maximal_on_candidates);
        assert!(r.records[3].member);
        let single = LPositiveSet::finite_cloud(r1(), vec![pt(&[0.0, 0.0])]).unwrap();
        let r = maximality_probe(&single, &[pt(&[1.0, 1.0])], &b).unwrap();
        assert_eq!(r.witnesses, vec![vec![1.0, 1.0]]);
        let abs = LPositiveSet::subdifferential_graph(r1(), ConvexFn::abs()).unwrap();
        let r = maximality_probe(&abs, &[pt(&[1.0, 0.0]), pt(&[0.0, 2.0])], &b).unwrap();
        assert!(r.maximal_on_candidates, "{r:?}");
    }

    #[test]
    fn lemma_4_7_at_tolerance() {
        let b = Budget::default();
        let cloud = LPositiveSet::finite_cloud(r1(), vec![pt(&[0.0, 0.0]), pt(&[1.0, 2.0])]).unwrap();
        let cand = pt(&[0.5, 2.0]);
        let m = maximality_probe(&cloud, &[cand.clone()], &b).unwrap();
        let g = density_gap(&cloud, &cand, &b).unwrap();
        if m.records[0].extends && g.gap <= b.tol {
            assert!(g.minimizer.iter().zip(cand.iter()).all(|(a, c)| (a - c).abs() <= (2.0 * b.tol).sqrt()));
        }
    }

    proptest! {
        #[test]
        fn gap_is_nonnegative(c in proptest::collection::vec(-3.0..3.0f64, 2), m in -2.0..2.0f64) {
            let b = Budget::default();
            let g = LPositiveSet::linear_graph(DMatrix::from_element(1, 1, m.abs())).unwrap();
            prop_assert!(density_gap(&g, &pt(&c), &b).unwrap().gap >= -1e-9);
            let cloud = LPositiveSet::finite_cloud(r1(), vec![pt(&[m, m]), pt(&[0.0, 0.0])]).unwrap();
            prop_assert!(density_gap(&cloud, &pt(&c), &b).unwrap().gap >= -1e-9);
        }

        #[test]
        fn tail_pairing_bound(x in proptest::collection::vec(-2.0..2.0f64, 1..40)) {
            let s: f64 = x.iter().sum();
            let t = crate::mono::sequence::tail(&x);
            prop_assert!(crate::mono::sequence::pair(&x, &t) - 0.5 * s * s >= -1e-12);
        }

        #[test]
        fn euclidean_graphs_certify(m in -2.0..2.0f64) {
            // maximal monotone linear graphs over R
            let g = LPositiveSet::linear_graph(DMatrix::from_element(1, 1, m.abs())).unwrap();
            let probes = crate::grid::Grid::lattice(2, 3, 1.0).points();
            prop_assert!(certify_quasidense(&g, &probes, &Budget::default()).unwrap().is_quasidense());
        }
    }
}
