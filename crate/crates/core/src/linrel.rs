//! Linear relations `A ⊂ R^n × R^n`: polar subspaces, adjoints, the
//! `sup s_L(A⁰) ≤ 0` test and the adjoint characterizations of quasidensity.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::linalg::{dist_to_span, null_space, orth, rank, sym_eigen, RANK_TOL};
use crate::mono::MonoMap;
use crate::norm::BaseNorm;
use crate::optim::uniform_vec;
use crate::sets::{LPositiveSet, SetRepr};
use crate::space::{block_swap, Point, SnSpace};

/// A subspace of `R^n × R^n` stored by an orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RelationFile", into = "RelationFile")]
pub struct LinearRelation {
    n: usize,
    basis: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct RelationFile {
    n: usize,
    /// Column-major entries of a `2n × k` matrix.
    basis: Vec<f64>,
}

impl TryFrom<RelationFile> for LinearRelation {
    type Error = Error;

    fn try_from(f: RelationFile) -> Result<Self> {
        if f.n == 0 {
            return Err(Error::InvalidArgument("relation needs n ≥ 1".into()));
        }
        if f.basis.len() % (2 * f.n) != 0 {
            return Err(Error::InvalidArgument(format!("basis length {} is not a multiple of 2n = {}", f.basis.len(), 2 * f.n)));
        }
        let k = f.basis.len() / (2 * f.n);
        LinearRelation::new(f.n, DMatrix::from_column_slice(2 * f.n, k, &f.basis))
    }
}

impl From<LinearRelation> for RelationFile {
    fn from(r: LinearRelation) -> Self {
        RelationFile { n: r.n, basis: r.basis.as_slice().to_vec() }
    }
}

/// Verdict of [`LinearRelation::sup_s_on_polar`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarSup {
    /// Largest value of `⟨x*, x**⟩` on the unit sphere of `A⁰` (`-inf` when `A⁰ = {0}`).
    pub max_form: f64,
    /// `sup s_L(A⁰)`, either `0` or `+inf` by homogeneity.
    pub sup: ExtReal,
    pub quasidense: bool,
}

/// Report of [`brezis_browder_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjointReport {
    pub polar_test: bool,
    pub adjoint_monotone: bool,
    /// `A^T` monotone with `dim A^T = n`.
    pub adjoint_maximal: bool,
    /// `A^T` monotone and no probed vector extends it.
    pub adjoint_maximal_by_probe: bool,
    pub max_form: f64,
    pub adjoint_min_form: f64,
    pub adjoint_dim: usize,
}

/// `∂k(b) = Lb + A⁰` for `k = q_L + 𝕀_A`, or empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineSet {
    pub point: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl AffineSet {
    pub fn contains(&self, b: &[f64], tol: f64) -> bool {
        if b.len() != self.point.len() {
            return false;
        }
        let d = DVector::from_iterator(b.len(), b.iter().zip(&self.point).map(|(u, v)| u - v));
        let q = columns(b.len(), &self.directions);
        dist_to_span(&orth(&q), &d) <= tol * (1.0 + d.norm())
    }
}

fn columns(m: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        return DMatrix::zeros(m, 0);
    }
    DMatrix::from_columns(&cols.iter().map(|c| DVector::from_column_slice(c)).collect::<Vec<_>>())
}

/// Extreme eigenvalue of `(x, x*) ↦ ⟨x, x*⟩` on the unit sphere of `span(Q)`.
fn form_extreme(n: usize, q: &DMatrix<f64>, largest: bool) -> f64 {
    if q.ncols() == 0 {
        return if largest { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    let f = q.transpose() * block_swap(2 * n) * q * 0.5;
    let (vals, _) = sym_eigen(&f);
    if largest {
        vals[vals.len() - 1]
    } else {
        vals[0]
    }
}

impl LinearRelation {
    /// The span of the columns of `basis` (`2n` rows).
    pub fn new(n: usize, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: basis.nrows() });
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("basis entries must be finite".into()));
        }
        Ok(LinearRelation { n, basis: orth(&basis) })
    }

    pub fn graph(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidArgument("graph matrix must be square".into()));
        }
        let n = m.nrows();
        let mut b = DMatrix::zeros(2 * n, n);
        b.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        b.view_mut((n, 0), (n, n)).copy_from(m);
        Self::new(n, b)
    }

    pub fn identity(n: usize) -> Self {
        Self::graph(&DMatrix::identity(n, n)).expect("square")
    }

    pub fn zero(n: usize) -> Self {
        LinearRelation { n, basis: DMatrix::zeros(2 * n, 0) }
    }

    pub fn full(n: usize) -> Self {
        LinearRelation { n, basis: DMatrix::identity(2 * n, 2 * n) }
    }

    pub fn from_map(a: &MonoMap) -> Option<Self> {
        Self::new(a.dim(), a.as_relation()?).ok()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Orthonormal basis, one column per dimension.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn contains(&self, b: &[f64], tol: f64) -> bool {
        b.len() == 2 * self.n && {
            let v = DVector::from_column_slice(b);
            dist_to_span(&self.basis, &v) <= tol * (1.0 + v.norm())
        }
    }

    /// Smallest value of `⟨x, x*⟩` on the unit sphere of the relation.
    pub fn min_form(&self) -> f64 {
        form_extreme(self.n, &self.basis, false)
    }

    pub fn is_monotone(&self) -> bool {
        self.min_form() >= -RANK_TOL
    }

    /// Same span up to the rank tolerance.
    pub fn same_span(&self, other: &LinearRelation) -> bool {
        self.n == other.n && self.dim() == other.dim() && (self.dim() == 0 || {
            let both = DMatrix::from_columns(
                &self.basis.column_iter().chain(other.basis.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>(),
            );
            rank(&both) == self.dim()
        })
    }

    /// `A⁰ = {b* : ⟨a, b*⟩ = 0 for all a ∈ A}`, elements `(x*, x**)`.
    pub fn polar(&self) -> LinearRelation {
        let q = if self.dim() == 0 {
            DMatrix::identity(2 * self.n, 2 * self.n)
        } else {
            null_space(&self.basis.transpose())
        };
        LinearRelation { n: self.n, basis: q }
    }

    /// `A^T = {(y**, y*) : (y*, -y**) ∈ A⁰}`.
    pub fn adjoint(&self) -> LinearRelation {
        let p = self.polar().basis;
        let n = self.n;
        let mut out = DMatrix::zeros(2 * n, p.ncols());
        out.rows_mut(0, n).copy_from(&(-p.rows(n, n)));
        out.rows_mut(n, n).copy_from(&p.rows(0, n));
        LinearRelation { n, basis: out }
    }

    /// `sup s_L(A⁰)`, using `s_L(x*, x**) = ⟨x*, x**⟩` in a product space.
    pub fn sup_s_on_polar(&self) -> Result<PolarSup> {
        if !self.is_monotone() {
            return Err(Error::Precondition(format!("relation is not monotone (min form {:e})", self.min_form())));
        }
        let max_form = form_extreme(self.n, &self.polar().basis, true);
        let quasidense = max_form <= RANK_TOL;
        Ok(PolarSup { max_form, sup: if quasidense { ExtReal::ZERO } else { ExtReal::PosInf }, quasidense })
    }

    /// `span(A ∪ {c})`.
    pub fn extend(&self, c: &[f64]) -> Result<LinearRelation> {
        if c.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: c.len() });
        }
        let mut cols: Vec<DVector<f64>> = self.basis.column_iter().map(|v| v.into_owned()).collect();
        cols.push(DVector::from_column_slice(c));
        Self::new(self.n, DMatrix::from_columns(&cols))
    }

    /// Vectors outside `A` whose span with `A` is monotone, searched among the
    /// nonnegative directions of the form on the `L`-orthogonal complement of
    /// `A` and among random vectors.
    pub fn extension_witnesses<R: Rng>(&self, rng: &mut R, random: usize) -> Vec<Vec<f64>> {
        let n = self.n;
        let l = block_swap(2 * n);
        let lperp = if self.dim() == 0 {
            DMatrix::identity(2 * n, 2 * n)
        } else {
            null_space(&(self.basis.transpose() * &l))
        };
        let mut cands: Vec<Vec<f64>> = Vec::new();
        if lperp.ncols() > 0 {
            let f = lperp.transpose() * &l * &lperp * 0.5;
            let (vals, vecs) = sym_eigen(&f);
            for i in 0..vals.len() {
                if vals[i] >= -RANK_TOL {
                    cands.push((&lperp * vecs.column(i)).as_slice().to_vec());
                }
            }
        }
        for _ in 0..random {
            cands.push(uniform_vec(rng, 2 * n, 1.0));
        }
        cands
            .into_iter()
            .filter(|c| !self.contains(c, 1e-8))
            .filter(|c| self.extend(c).map(|e| e.is_monotone()).unwrap_or(false))
            .collect()
    }

    /// `∂(q_L + 𝕀_A)(b)`.
    pub fn indicator_quadratic_subdiff(&self, b: &[f64]) -> Result<Option<AffineSet>> {
        if b.len() != 2 * self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, got: b.len() });
        }
        if !self.contains(b, RANK_TOL) {
            return Ok(None);
        }
        let lb = block_swap(2 * self.n) * DVector::from_column_slice(b);
        let polar = self.polar();
        Ok(Some(AffineSet {
            point: lb.as_slice().to_vec(),
            directions: polar.basis.column_iter().map(|c| c.iter().copied().collect()).collect(),
        }))
    }

    pub fn to_map(&self) -> MonoMap {
        MonoMap::Relation { n: self.n, vectors: self.basis.column_iter().map(|c| c.iter().copied().collect()).collect() }
    }

    pub fn to_set(&self, base: BaseNorm) -> LPositiveSet {
        let space = Arc::new(SnSpace::product(self.n, base));
        LPositiveSet::new(space, SetRepr::LinearSubspace { vectors: self.basis.column_iter().map(|c| c.into_owned()).collect() })
            .expect("basis has 2n rows")
    }

    /// Random monotone relation: the graph of `PSD + skew`, optionally inverted
    /// and optionally cut down to a random subspace.
    pub fn random_monotone<R: Rng>(n: usize, rng: &mut R) -> LinearRelation {
        let r = rng.random_range(0..=n);
        let g = DMatrix::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
        let k = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let skew = if rng.random_bool(0.5) { &k - k.transpose() } else { DMatrix::zeros(n, n) };
        let m = &g * g.transpose() + skew;
        let mut b = DMatrix::zeros(2 * n, n);
        b.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        b.view_mut((n, 0), (n, n)).copy_from(&m);
        if rng.random_bool(0.3) {
            b = crate::mono::swap_rows(&b, n);
        }
        if rng.random_bool(0.4) {
            let keep = rng.random_range(0..n);
            let c = DMatrix::from_fn(n, keep, |_, _| rng.random_range(-1.0..1.0));
            b = &b * c;
        }
        LinearRelation::new(n, b).expect("2n rows")
    }

    /// Random probes `(x, x*)`.
    pub fn probes<R: Rng>(&self, rng: &mut R, count: usize, scale: f64) -> Vec<Point> {
        (0..count).map(|_| DVector::from_vec(uniform_vec(rng, 2 * self.n, scale))).collect()
    }
}

/// The polar test, monotonicity of `A^T` and maximality of `A^T` (by dimension
/// and by extension probing); an error when they disagree.
pub fn brezis_browder_check(a: &LinearRelation) -> Result<AdjointReport> {
    let polar = a.sup_s_on_polar()?;
    let adj = a.adjoint();
    let adjoint_min_form = adj.min_form();
    let adjoint_monotone = adj.is_monotone();
    let adjoint_maximal = adjoint_monotone && adj.dim() == a.n;
    let mut rng = crate::optim::rng(0xb8);
    let adjoint_maximal_by_probe = adjoint_monotone && adj.extension_witnesses(&mut rng, 16).is_empty();
    let report = AdjointReport {
        polar_test: polar.quasidense,
        adjoint_monotone,
        adjoint_maximal,
        adjoint_maximal_by_probe,
        max_form: polar.max_form,
        adjoint_min_form,
        adjoint_dim: adj.dim(),
    };
    let all = [report.polar_test, adjoint_monotone, adjoint_maximal, adjoint_maximal_by_probe];
    if all.iter().any(|v| *v != all[0]) {
        return Err(Error::Inconsistent(format!("{report:?}")));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{rng, Budget};
    use crate::sets::certify_quasidense;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn rel(n: usize, cols: &[&[f64]]) -> LinearRelation {
        LinearRelation::new(n, columns(2 * n, &cols.iter().map(|c| c.to_vec()).collect::<Vec<_>>())).unwrap()
    }

    #[test]
    fn polar_examples() {
        let p = LinearRelation::identity(1).polar();
        assert!(p.same_span(&rel(1, &[&[1.0, -1.0]])));
        assert_eq!(LinearRelation::zero(1).polar().dim(), 2);
        assert_eq!(LinearRelation::full(1).polar().dim(), 0);
    }

    #[test]
    fn adjoint_examples() {
        let m = dmatrix![1.0, 2.0; -0.5, 3.0];
        let adj = LinearRelation::graph(&m).unwrap().adjoint();
        assert!(adj.same_span(&LinearRelation::graph(&m.transpose()).unwrap()));
        assert!(LinearRelation::identity(2).adjoint().same_span(&LinearRelation::identity(2)));
        let flat = rel(1, &[&[1.0, 0.0]]);
        assert!(flat.adjoint().same_span(&flat));
    }

    #[test]
    fn polar_sup_examples() {
        let id = LinearRelation::identity(1).sup_s_on_polar().unwrap();
        assert!(id.quasidense);
        assert!((id.max_form + 0.5).abs() < 1e-12);
        let z = LinearRelation::zero(1).sup_s_on_polar().unwrap();
        assert!(!z.quasidense && z.sup.is_inf());
        let flat = rel(1, &[&[1.0, 0.0]]).sup_s_on_polar().unwrap();
        assert!(flat.quasidense && flat.max_form.abs() < 1e-12);
        assert!(matches!(rel(1, &[&[1.0, -1.0]]).sup_s_on_polar(), Err(Error::Precondition(_))));
    }

    #[test]
    fn brezis_browder_examples() {
        let rot = LinearRelation::graph(&dmatrix![0.0, 1.0; -1.0, 0.0]).unwrap();
        let r = brezis_browder_check(&rot).unwrap();
        assert!(r.polar_test && r.adjoint_monotone && r.adjoint_maximal && r.adjoint_maximal_by_probe);
        let z = brezis_browder_check(&LinearRelation::zero(1)).unwrap();
        assert!(!z.polar_test && !z.adjoint_monotone && !z.adjoint_maximal);
        let id = brezis_browder_check(&LinearRelation::identity(1)).unwrap();
        assert!(id.polar_test && id.adjoint_maximal);
    }

    #[test]
    fn subdiff_of_restricted_quadratic() {
        let a = LinearRelation::identity(1);
        let s = a.indicator_quadratic_subdiff(&[2.0, 2.0]).unwrap().unwrap();
        assert_eq!(s.point, vec![2.0, 2.0]);
        assert!(s.contains(&[3.0, 1.0], 1e-12));
        assert!(!s.contains(&[3.0, 3.0], 1e-12));
        assert!(a.indicator_quadratic_subdiff(&[1.0, 2.0]).unwrap().is_none());
        let full = LinearRelation::full(1).indicator_quadratic_subdiff(&[1.0, 2.0]).unwrap().unwrap();
        assert_eq!(full.point, vec![2.0, 1.0]);
        assert!(full.directions.is_empty());
    }

    #[test]
    fn json_is_column_major() {
        let r: LinearRelation = serde_json::from_str(r#"{"n":1,"basis":[1.0,1.0]}"#).unwrap();
        assert!(r.same_span(&LinearRelation::identity(1)));
        let back: LinearRelation = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.same_span(&r));
        assert!(serde_json::from_str::<LinearRelation>(r#"{"n":2,"basis":[1.0,1.0,0.0]}"#).is_err());
    }

    #[test]
    fn theorem_routes_agree_on_random_relations() {
        let mut g = rng(5);
        let budget = Budget::default().with_tol(1e-8);
        for _ in 0..60 {
            let a = LinearRelation::random_monotone(3, &mut g);
            let r = brezis_browder_check(&a).unwrap();
            let probes = a.probes(&mut g, 12, 2.0);
            let cert = certify_quasidense(&a.to_set(BaseNorm::Euclidean), &probes, &budget).unwrap();
            assert_eq!(r.polar_test, cert.is_quasidense(), "{a:?} {r:?}");
        }
    }

    #[test]
    fn corollary_extension_of_polar() {
        let mut g = rng(9);
        for _ in 0..100 {
            let a = LinearRelation::random_monotone(2, &mut g);
            let p = a.polar();
            let c = if g.random_bool(0.5) && p.dim() > 0 {
                (p.basis() * DVector::from_vec(uniform_vec(&mut g, p.dim(), 1.0))).as_slice().to_vec()
            } else {
                uniform_vec(&mut g, 4, 1.0)
            };
            let ext = p.extend(&c).unwrap();
            if form_extreme(2, ext.basis(), true) <= RANK_TOL {
                assert!(p.contains(&c, 1e-8));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn polar_is_involutive(seed in 0u64..10_000, n in 1usize..4) {
            let mut g = rng(seed);
            let k = g.random_range(0..=2 * n);
            let b = DMatrix::from_fn(2 * n, k, |_, _| g.random_range(-1.0..1.0));
            let a = LinearRelation::new(n, b).unwrap();
            prop_assert!(a.polar().polar().same_span(&a));
            prop_assert_eq!(a.dim() + a.polar().dim(), 2 * n);
        }

        #[test]
        fn adjoint_matches_polar(seed in 0u64..10_000, n in 1usize..4) {
            let mut g = rng(seed);
            let a = LinearRelation::random_monotone(n, &mut g);
            let p = a.polar();
            for c in a.adjoint().basis().column_iter() {
                let (yss, ys) = (c.rows(0, n), c.rows(n, n));
                let v: Vec<f64> = ys.iter().copied().chain(yss.iter().map(|x| -x)).collect();
                prop_assert!(p.contains(&v, 1e-9));
            }
        }

        #[test]
        fn graph_adjoint_monotonicity(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let m = DMatrix::from_fn(3, 3, |_, _| g.random_range(-1.0..1.0));
            let sym = (&m + m.transpose()) * 0.5;
            let psd = sym_eigen(&sym).0[0] >= -RANK_TOL;
            let a = LinearRelation::graph(&m).unwrap();
            if psd {
                let r = brezis_browder_check(&a).unwrap();
                let direct = sym_eigen(&((&m + m.transpose()) * 0.5)).0[0] >= -RANK_TOL;
                prop_assert_eq!(r.adjoint_monotone, direct);
            } else {
                prop_assert!(a.sup_s_on_polar().is_err());
            }
        }
    }
}
