//! Negative alignment pairs, the alignment criterion for quasidensity,
//! almost-negative-alignment probes and norm bounds for L-positive sets.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::convex::ConvexFn;
use crate::error::{check_len, Error, Result};
use crate::mono::sequence::SeqKind;
use crate::norm::BaseNorm;
use crate::optim::{nelder_mead, uniform_vec, Budget, NelderMeadOptions};
use crate::parallel::par_map;
use crate::sets::{certify_quasidense, density_gap, GapCertificate, LPositiveSet};
use crate::space::{Point, SnSpace};

/// Restarts used by [`alignment_tau`].
pub const TAU_RESTARTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `‖s - w‖`, `‖s* - w*‖` and `⟨s - w, s* - w*⟩` at the witness.
    pub primal_distance: f64,
    pub dual_distance: f64,
    pub pairing: f64,
    pub witness: Vec<f64>,
    /// `r_L(t - u)` in the deformed set.
    pub gap: f64,
    /// `|‖t - u‖ - ‖t* - u*‖|` in the deformed set.
    pub norm_difference: f64,
    pub restart_taus: Vec<f64>,
    pub spread: f64,
    pub converged: bool,
}

impl AlignmentResult {
    /// Largest violation of the three limit relations at `tau`.
    pub fn residual(&self) -> f64 {
        let t = self.tau;
        (self.primal_distance - self.alpha * t)
            .abs()
            .max((self.dual_distance - self.beta * t).abs())
            .max((self.pairing + self.alpha * self.beta * t * t).abs())
    }
}

fn one_run(deformed: &LPositiveSet, u: &Point, budget: &Budget) -> Result<(f64, f64, Point, f64)> {
    let g = density_gap(deformed, u, budget)?;
    let (a, b) = deformed.space().block_norms(&(&g.minimizer - u));
    Ok((0.5 * (a + b), (a - b).abs(), g.minimizer, g.gap))
}

/// The unique `τ ≥ 0` for which `(ατ, βτ)` is a negative alignment pair for
/// `A` at `(w, w*)`, found by minimizing `r_L` over the deformed set
/// `{(s/α, s*/β)}` near `(w/α, w*/β)`.
pub fn alignment_tau(set: &LPositiveSet, w: &[f64], ws: &[f64], alpha: f64, beta: f64, budget: &Budget) -> Result<AlignmentResult> {
    let space = set.space();
    let (n1, n2) = space.require_blocks()?;
    check_len(n1, w.len())?;
    check_len(n2, ws.len())?;
    let deformed = set.deform(alpha, beta)?;
    let scale = |p: &[f64], s: f64| p.iter().map(|v| v / s).collect::<Vec<_>>();
    let u = SnSpace::join(&scale(w, alpha), &scale(ws, beta));
    let seeds: Vec<u64> = (0..TAU_RESTARTS as u64).map(|i| budget.seed.wrapping_add(i)).collect();
    let mut runs = par_map(&seeds, |s| one_run(&deformed, &u, &budget.clone().with_seed(*s)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let tol = budget.tol.max(1e-12);
    let disagree = |r: &[(f64, f64, Point, f64)]| r.iter().any(|x| x.1 > 1e2 * tol.sqrt());
    if disagree(&runs) {
        let mut longer = budget.clone();
        longer.max_iter *= 4;
        longer.restarts *= 2;
        runs = par_map(&seeds, |s| one_run(&deformed, &u, &longer.clone().with_seed(*s)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
    }
    let best = runs.iter().min_by(|a, b| a.3.total_cmp(&b.3)).expect("nonempty").clone();
    let restart_taus: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let lo = restart_taus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = restart_taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t = best.2;
    let s: Vec<f64> = t.iter().enumerate().map(|(i, v)| if i < n1 { v * alpha } else { v * beta }).collect();
    let c = SnSpace::join(w, ws);
    let d = DVector::from_vec(s.clone()) - &c;
    let (pd, dd) = space.block_norms(&d);
    Ok(AlignmentResult {
        tau: best.0,
        alpha,
        beta,
        primal_distance: pd,
        dual_distance: dd,
        pairing: space.q_l(&d),
        witness: s,
        gap: best.3,
        norm_difference: best.1,
        spread: hi - lo,
        restart_taus,
        converged: best.3 <= tol,
    })
}

/// One probe of [`quasidense_via_alignment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentProbe {
    pub probe: Vec<f64>,
    pub tau: f64,
    /// `|‖s - w‖ - ‖s* - w*‖| + |⟨s - w, s* - w*⟩ + ‖s - w‖‖s* - w*‖|` at the best witness.
    pub residual: f64,
    pub gap: f64,
    pub aligned: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentVerdict {
    pub records: Vec<AlignmentProbe>,
    /// A `(τ, τ)` alignment was realized at every probe.
    pub consistent_with_quasidense: bool,
    pub certificate: GapCertificate,
    pub agree: bool,
}

/// Searches for `(τ, τ)` negative alignment at every probe and compares the
/// outcome with [`certify_quasidense`].
pub fn quasidense_via_alignment(set: &LPositiveSet, probes: &[Point], budget: &Budget) -> Result<AlignmentVerdict> {
    let certificate = certify_quasidense(set, probes, budget)?;
    let space = set.space();
    let tol = budget.tol.max(1e-12);
    let records: Vec<AlignmentProbe> = certificate
        .records
        .iter()
        .map(|r| {
            let d = DVector::from_column_slice(&r.minimizer) - DVector::from_column_slice(&r.probe);
            if space.is_product() {
                let (a, b) = space.block_norms(&d);
                let residual = (a - b).abs() + (space.q_l(&d) + a * b).abs();
                AlignmentProbe { probe: r.probe.clone(), tau: 0.5 * (a + b), residual, gap: r.gap, aligned: residual <= 4.0 * tol.sqrt() }
            } else {
                // no (s - w, s* - w*) split; only the r_L gap is available
                let tau = space.norm(&d) / std::f64::consts::SQRT_2;
                AlignmentProbe { probe: r.probe.clone(), tau, residual: r.gap, gap: r.gap, aligned: r.gap <= tol }
            }
        })
        .collect();
    let consistent = records.iter().all(|r| r.aligned);
    let agree = consistent == certificate.is_quasidense();
    Ok(AlignmentVerdict { records, consistent_with_quasidense: consistent, certificate, agree })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AnaVerdict {
    Found { witness: Vec<f64>, ratio: f64 },
    /// Nothing found within budget; never a refutation.
    Inconclusive { best_ratio: f64 },
}

fn cosine(space: &SnSpace, d: &Point) -> f64 {
    let (a, b) = space.block_norms(d);
    if a <= 1e-14 || b <= 1e-14 {
        return f64::INFINITY;
    }
    space.q_l(d) / (a * b)
}

/// Looks for `(s, s*) ∈ A` with `s ≠ w`, `s* ≠ w*` and
/// `⟨s - w, s* - w*⟩ ≤ (-1 + ε)‖s - w‖‖s* - w*‖`.
pub fn ana_probe(set: &LPositiveSet, w: &[f64], ws: &[f64], epsilon: f64, budget: &Budget) -> Result<AnaVerdict> {
    let space = set.space();
    let (n1, n2) = space.require_blocks()?;
    check_len(n1, w.len())?;
    check_len(n2, ws.len())?;
    let c = SnSpace::join(w, ws);
    if set.contains(&c, 1e-9) {
        return Err(Error::Precondition("(w, w*) lies in the set".into()));
    }
    let target = -1.0 + epsilon;
    let mut best: (f64, Option<Point>) = (f64::INFINITY, None);
    let mut consider = |p: Point| {
        let r = cosine(space, &(&p - &c));
        if r < best.0 {
            best = (r, Some(p));
        }
    };
    if let Some(pts) = set.points() {
        pts.iter().cloned().for_each(&mut consider);
    } else {
        let g = density_gap(set, &c, budget)?;
        let start = g.param.clone();
        consider(g.minimizer);
        if let (Some(k), Some(t0)) = (set.param_dim(), start) {
            let f = |t: &[f64]| set.point_at(t).map(|p| cosine(space, &(&p - &c))).unwrap_or(f64::INFINITY);
            let o = NelderMeadOptions { max_evals: budget.max_iter * 5, ..Default::default() };
            let mut starts = vec![t0];
            let mut rng = budget.rng(0xa7a);
            for _ in 0..budget.restarts {
                starts.push(uniform_vec(&mut rng, k, 1.0 + c.amax()));
            }
            for s in starts {
                let m = nelder_mead(f, &s, &o);
                if let Ok(p) = set.point_at(&m.x) {
                    consider(p);
                }
            }
        }
    }
    Ok(match best {
        (r, Some(p)) if r <= target => AnaVerdict::Found { witness: p.as_slice().to_vec(), ratio: r },
        (r, _) => AnaVerdict::Inconclusive { best_ratio: r },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZagrodnySlack {
    /// `√(2 r_L(a - b)) + (5/2) dist(b, A) + ‖b‖ - ‖a‖`.
    pub slack: f64,
    pub dist: f64,
    /// `dist` is exact (finite clouds) rather than a sampled upper bound.
    pub dist_exact: bool,
}

/// Distance from `b` to the set: exact for clouds, otherwise the minimum over
/// samples and the density-gap minimizer.
pub fn dist_to_set(set: &LPositiveSet, b: &Point, budget: &Budget) -> Result<(f64, bool)> {
    let space = set.space();
    if let Some(pts) = set.points() {
        return Ok((pts.iter().map(|p| space.norm(&(p - b))).fold(f64::INFINITY, f64::min), true));
    }
    let mut rng = budget.rng(0xd15);
    let mut pts = set.sample(&mut rng, 256, 1.0 + b.amax())?;
    pts.push(density_gap(set, b, budget)?.minimizer);
    Ok((pts.iter().map(|p| space.norm(&(p - b))).fold(f64::INFINITY, f64::min), false))
}

/// Slack of `‖a‖ ≤ √(2 r_L(a - b)) + (5/2) dist(b, A) + ‖b‖` for `a ∈ A`.
pub fn zagrodny_check(set: &LPositiveSet, a: &Point, b: &Point, budget: &Budget) -> Result<ZagrodnySlack> {
    let space = set.space();
    check_len(space.dim(), a.len())?;
    check_len(space.dim(), b.len())?;
    if !set.contains(a, 1e-9) {
        return Err(Error::Precondition("a is not in the set".into()));
    }
    let (dist, dist_exact) = dist_to_set(set, b, budget)?;
    let rhs = (2.0 * space.r_l(&(a - b)).max(0.0)).sqrt() + 2.5 * dist + space.norm(b);
    Ok(ZagrodnySlack { slack: rhs - space.norm(a), dist, dist_exact })
}

/// Slack of `‖(s, s*)‖ ≤ M + √(‖s - w‖² + ‖s* - w*‖² + 2⟨s - w, s* - w*⟩)` with
/// `M = (5/2) dist((w, w*), A) + ‖(w, w*)‖`, for `(s, s*) ∈ A`.
pub fn monotone_bound_slack(set: &LPositiveSet, w: &Point, s: &Point, budget: &Budget) -> Result<f64> {
    let space = set.space();
    space.require_blocks()?;
    let (dist, _) = dist_to_set(set, w, budget)?;
    let m = 2.5 * dist + space.norm(w);
    let d = s - w;
    let (a, b) = space.block_norms(&d);
    let root = (a * a + b * b + 2.0 * space.q_l(&d)).max(0.0).sqrt();
    Ok(m + root - space.norm(s))
}

/// Slack of `‖e‖ ≤ √(2r_L(e) + 2r_L(d) - 2q_L(d - e)) + ‖d‖`.
pub fn norm_bound_slack(space: &SnSpace, d: &Point, e: &Point) -> f64 {
    let inner = 2.0 * space.r_l(e) + 2.0 * space.r_l(d) - 2.0 * space.q_l(&(d - e));
    inner.max(0.0).sqrt() + space.norm(d) - space.norm(e)
}

/// Slack of `‖e‖ ≤ √(2r_L(e)) + (5/2)‖d‖` for `e, d` in an L-positive set.
pub fn positive_pair_bound_slack(space: &SnSpace, d: &Point, e: &Point) -> f64 {
    (2.0 * space.r_l(e).max(0.0)).sqrt() + 2.5 * space.norm(d) - space.norm(e)
}

/// Slack of `-q_L(a - c) ≤ 2(f - q_L)(a) + 2(f - q_L)(c)` for `f ≥ q_L` convex.
pub fn midpoint_slack(space: &SnSpace, f: impl Fn(&Point) -> f64, a: &Point, c: &Point) -> f64 {
    2.0 * (f(a) - space.q_l(a)) + 2.0 * (f(c) - space.q_l(c)) + space.q_l(&(a - c))
}

/// Slack of `-q_L(a - c) ≤ [√((f - q_L)(a)) + √((f - q_L)(c))]²`.
pub fn sqrt_midpoint_slack(space: &SnSpace, f: impl Fn(&Point) -> f64, a: &Point, c: &Point) -> f64 {
    let fa = (f(a) - space.q_l(a)).max(0.0).sqrt();
    let fc = (f(c) - space.q_l(c)).max(0.0).sqrt();
    (fa + fc).powi(2) + space.q_l(&(a - c))
}

/// A named `(A, (w, w*), α, β)` input for τ tables.
#[derive(Clone, Debug)]
pub struct AlignmentCase {
    pub name: String,
    pub set: LPositiveSet,
    pub w: Vec<f64>,
    pub ws: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

fn product(n: usize) -> Arc<SnSpace> {
    Arc::new(SnSpace::product(n, BaseNorm::Euclidean))
}

/// Twenty closed monotone quasidense examples with varied probes and scalings.
pub fn library_cases() -> Vec<AlignmentCase> {
    let id1 = LPositiveSet::identity_graph(1);
    let id2 = LPositiveSet::identity_graph(2);
    let rot = LPositiveSet::linear_graph(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).expect("square");
    let mixed = LPositiveSet::linear_graph(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 0.5])).expect("square");
    let sub = |f: ConvexFn, n: usize| LPositiveSet::subdifferential_graph(product(n), f).expect("valid");
    let sq = sub(ConvexFn::half_square(1), 1);
    let abs = sub(ConvexFn::abs(), 1);
    let boxed = sub(ConvexFn::indicator_box(vec![0.0], vec![1.0]), 1);
    let l1 = sub(ConvexFn::norm(2, 1.0, BaseNorm::Ell1), 2);
    let case = |name: &str, set: &LPositiveSet, w: &[f64], ws: &[f64], alpha: f64, beta: f64| AlignmentCase {
        name: name.into(),
        set: set.clone(),
        w: w.to_vec(),
        ws: ws.to_vec(),
        alpha,
        beta,
    };
    vec![
        case("identity (1,-1)", &id1, &[1.0], &[-1.0], 1.0, 1.0),
        case("identity member", &id1, &[0.5], &[0.5], 1.0, 1.0),
        case("identity (2,0)", &id1, &[2.0], &[0.0], 1.0, 1.0),
        case("identity scaled", &id1, &[1.0], &[-1.0], 2.0, 0.5),
        case("identity (0,3)", &id1, &[0.0], &[3.0], 1.0, 3.0),
        case("identity R^2", &id2, &[1.0, -1.0], &[0.5, 2.0], 1.0, 1.0),
        case("identity R^2 scaled", &id2, &[0.0, 1.0], &[1.0, 0.0], 0.3, 1.7),
        case("rotation", &rot, &[1.0, 0.0], &[0.0, 1.0], 1.0, 1.0),
        case("rotation scaled", &rot, &[-1.0, 2.0], &[0.5, 0.5], 2.0, 1.0),
        case("mixed linear", &mixed, &[1.0, 1.0], &[-1.0, 0.0], 1.0, 1.0),
        case("mixed linear scaled", &mixed, &[0.0, -2.0], &[1.0, 1.0], 0.5, 2.0),
        case("half square", &sq, &[1.0], &[-1.0], 1.0, 1.0),
        case("half square scaled", &sq, &[2.0], &[0.5], 1.5, 0.5),
        case("abs", &abs, &[1.0], &[2.0], 1.0, 1.0),
        case("abs origin", &abs, &[0.0], &[3.0], 1.0, 1.0),
        case("abs scaled", &abs, &[-2.0], &[0.0], 0.5, 2.0),
        case("box indicator", &boxed, &[2.0], &[1.0], 1.0, 1.0),
        case("box indicator inside", &boxed, &[0.5], &[1.0], 1.0, 1.0),
        case("box indicator scaled", &boxed, &[-1.0], &[-1.0], 2.0, 1.0),
        case("l1 norm R^2", &l1, &[0.5, -2.0], &[2.0, 0.0], 1.0, 1.0),
    ]
}

/// Named sets used to compare the alignment criterion with density gaps,
/// with their probes.
pub fn library_sets() -> Vec<(String, LPositiveSet, Vec<Point>)> {
    let grid = |n: usize| -> Vec<Point> {
        let vals = [-1.5, 0.0, 1.0];
        let mut out = Vec::new();
        for i in 0..vals.len().pow(2 * n as u32) {
            let mut k = i;
            let p: Vec<f64> = (0..2 * n)
                .map(|_| {
                    let v = vals[k % vals.len()];
                    k /= vals.len();
                    v
                })
                .collect();
            out.push(DVector::from_vec(p));
        }
        out
    };
    let sub = |f: ConvexFn| LPositiveSet::subdifferential_graph(product(1), f).expect("valid");
    let zero = LPositiveSet::linear_subspace(product(1), vec![]).expect("valid");
    let flat = LPositiveSet::linear_subspace(product(1), vec![DVector::from_vec(vec![1.0, 0.0])]).expect("valid");
    let tail = LPositiveSet::sequence_operator(SeqKind::Tail, 20).expect("valid");
    let mut e_star = vec![0.0; 20];
    e_star.extend(vec![1.0; 21]);
    let singleton = LPositiveSet::finite_cloud(Arc::new(SnSpace::scaled_identity(2, -1.0)), vec![DVector::zeros(2)]).expect("valid");
    vec![
        ("identity".into(), LPositiveSet::identity_graph(1), grid(1)),
        ("identity R^2".into(), LPositiveSet::identity_graph(2), grid(2).into_iter().step_by(7).collect()),
        (
            "rotation".into(),
            LPositiveSet::linear_graph(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).expect("square"),
            grid(2).into_iter().step_by(5).collect(),
        ),
        ("half square".into(), sub(ConvexFn::half_square(1)), grid(1)),
        ("abs".into(), sub(ConvexFn::abs()), grid(1)),
        ("box indicator".into(), sub(ConvexFn::indicator_box(vec![0.0], vec![1.0])), grid(1)),
        ("zero relation".into(), zero, grid(1)),
        ("flat relation".into(), flat, grid(1)),
        ("tail operator".into(), tail, vec![DVector::from_vec(e_star)]),
        ("singleton, negative identity".into(), singleton, grid(1)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::rng;
    use crate::space::pt;
    use proptest::prelude::*;
    use rand::Rng;

    fn b() -> Budget {
        Budget::default()
    }

    #[test]
    fn identity_tau_is_one() {
        let r = alignment_tau(&LPositiveSet::identity_graph(1), &[1.0], &[-1.0], 1.0, 1.0, &b()).unwrap();
        assert!((r.tau - 1.0).abs() < 1e-10, "{r:?}");
        assert!(r.witness.iter().all(|v| v.abs() < 1e-10));
        assert!(r.residual() < 1e-9 && r.spread < 1e-12 && r.converged);
    }

    #[test]
    fn member_has_zero_tau() {
        let r = alignment_tau(&LPositiveSet::identity_graph(1), &[0.3], &[0.3], 2.0, 0.5, &b()).unwrap();
        assert!(r.tau < 1e-10);
    }

    #[test]
    fn scaled_identity_matches_resolvent() {
        // s + (α/β)s = w + (α/β)w*, τ = |s - w| / α
        let (w, ws, a, bt) = (1.0, -1.0, 2.0, 0.5);
        let s = (w + a / bt * ws) / (1.0 + a / bt);
        let r = alignment_tau(&LPositiveSet::identity_graph(1), &[w], &[ws], a, bt, &b()).unwrap();
        assert!((r.tau - (s - w).abs() / a).abs() < 1e-9, "{r:?}");
        assert!(r.residual() < 1e-8);
    }

    #[test]
    fn library_spread_and_invariants() {
        for c in library_cases().iter() {
            let r = alignment_tau(&c.set, &c.w, &c.ws, c.alpha, c.beta, &b()).unwrap();
            assert!(r.spread <= 1e-4, "{}: {r:?}", c.name);
            assert!(r.residual() <= 1e-4, "{}: {r:?}", c.name);
            assert!(r.norm_difference <= 1e-4, "{}", c.name);
        }
    }

    #[test]
    fn tau_below_one_when_pairing_bounded() {
        // inf ⟨s - w, s - w*⟩ over the identity graph is -(w - w*)²/4
        let (w, ws) = (1.0, -0.5);
        let inf = -(w - ws) * (w - ws) / 4.0;
        let (a, bt) = (1.0, 1.0);
        assert!(inf > -a * bt);
        let r = alignment_tau(&LPositiveSet::identity_graph(1), &[w], &[ws], a, bt, &b()).unwrap();
        assert!(r.tau < 1.0);
    }

    #[test]
    fn alignment_agrees_with_certificates() {
        for (name, set, probes) in library_sets() {
            let v = quasidense_via_alignment(&set, &probes, &b()).unwrap();
            assert!(v.agree, "{name}: {v:?}");
        }
    }

    #[test]
    fn tail_has_no_alignment() {
        let (_, set, probes) = library_sets().into_iter().find(|s| s.0 == "tail operator").unwrap();
        let v = quasidense_via_alignment(&set, &probes, &b()).unwrap();
        assert!(!v.consistent_with_quasidense && v.certificate.is_refuted());
    }

    #[test]
    fn ana_examples() {
        let id = LPositiveSet::identity_graph(1);
        match ana_probe(&id, &[1.0], &[-1.0], 0.01, &b()).unwrap() {
            AnaVerdict::Found { witness, ratio } => {
                assert!((ratio + 1.0).abs() < 1e-9);
                assert!(witness.iter().all(|v| v.abs() < 1e-8));
            }
            v => panic!("{v:?}"),
        }
        assert!(matches!(ana_probe(&id, &[1.0], &[1.0], 0.01, &b()), Err(Error::Precondition(_))));
        let mut g = rng(3);
        for _ in 0..10 {
            let m = DMatrix::from_fn(2, 2, |_, _| g.random_range(-1.0..1.0));
            let m = &m * m.transpose() + DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
            let set = LPositiveSet::linear_graph(m).unwrap();
            let w = uniform_vec(&mut g, 2, 2.0);
            let ws = uniform_vec(&mut g, 2, 2.0);
            assert!(matches!(ana_probe(&set, &w, &ws, 0.01, &b()).unwrap(), AnaVerdict::Found { .. }));
        }
    }

    #[test]
    fn zagrodny_examples() {
        let space = product(1);
        let cloud = LPositiveSet::finite_cloud(space, vec![pt(&[0.0, 0.0]), pt(&[1.0, 2.0]), pt(&[2.0, 3.0])]).unwrap();
        let a = pt(&[1.0, 2.0]);
        let r = zagrodny_check(&cloud, &a, &a, &b()).unwrap();
        assert!(r.slack.abs() < 1e-12 && r.dist_exact);
        assert!(zagrodny_check(&cloud, &pt(&[5.0, 5.0]), &a, &b()).is_err());
        let r = zagrodny_check(&LPositiveSet::identity_graph(1), &pt(&[2.0, 2.0]), &pt(&[-1.0, 3.0]), &b()).unwrap();
        assert!(r.slack >= 0.0 && !r.dist_exact);
    }

    fn random_cloud(g: &mut impl Rng, n: usize, base: BaseNorm) -> LPositiveSet {
        // points on the graph of a monotone map stay monotone
        let m = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0));
        let k = DMatrix::from_fn(n, n, |_, _| g.random_range(-1.0..1.0));
        let m = &m * m.transpose() + (&k - k.transpose());
        let pts = (0..g.random_range(1..6))
            .map(|_| {
                let x = DVector::from_vec(uniform_vec(g, n, 2.0));
                SnSpace::join(x.as_slice(), (&m * &x).as_slice())
            })
            .collect();
        LPositiveSet::finite_cloud(Arc::new(SnSpace::product(n, base)), pts).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn zagrodny_slack_nonnegative(seed in 0u64..100_000, n in 1usize..5, nb in 0usize..3) {
            let mut g = rng(seed);
            let base = [BaseNorm::Euclidean, BaseNorm::Ell1, BaseNorm::EllInf][nb];
            let set = random_cloud(&mut g, n, base);
            let pts = set.points().unwrap().to_vec();
            let a = &pts[g.random_range(0..pts.len())];
            let bpt = DVector::from_vec(uniform_vec(&mut g, 2 * n, 3.0));
            let r = zagrodny_check(&set, a, &bpt, &b()).unwrap();
            prop_assert!(r.slack >= -1e-9);
            let s = monotone_bound_slack(&set, &bpt, a, &b()).unwrap();
            prop_assert!(s >= -1e-9);
        }

        #[test]
        fn norm_bounds(seed in 0u64..100_000, n in 1usize..4, nb in 0usize..3) {
            let mut g = rng(seed);
            let base = [BaseNorm::Euclidean, BaseNorm::Ell1, BaseNorm::EllInf][nb];
            let space = SnSpace::product(n, base);
            let d = DVector::from_vec(uniform_vec(&mut g, 2 * n, 3.0));
            let e = DVector::from_vec(uniform_vec(&mut g, 2 * n, 3.0));
            prop_assert!(norm_bound_slack(&space, &d, &e) >= -1e-9);
            if space.q_l(&(&d - &e)) >= 0.0 {
                prop_assert!(positive_pair_bound_slack(&space, &d, &e) >= -1e-9);
            }
        }

        #[test]
        fn midpoint_bounds(seed in 0u64..100_000, n in 1usize..4) {
            let mut g = rng(seed);
            let space = SnSpace::product(n, BaseNorm::Euclidean);
            let a = DVector::from_vec(uniform_vec(&mut g, 2 * n, 3.0));
            let c = DVector::from_vec(uniform_vec(&mut g, 2 * n, 3.0));
            let half_sq = |p: &Point| 0.5 * p.norm_squared();
            prop_assert!(midpoint_slack(&space, half_sq, &a, &c) >= -1e-9);
            prop_assert!(sqrt_midpoint_slack(&space, half_sq, &a, &c) >= -1e-9);
            let sq = sqrt_midpoint_slack(&space, half_sq, &a, &c) + space.q_l(&(&a - &c));
            let mid = midpoint_slack(&space, half_sq, &a, &c) + space.q_l(&(&a - &c));
            prop_assert!(sq <= mid + 1e-9);
        }
    }
}
