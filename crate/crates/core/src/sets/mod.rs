//! L-positive sets under several representations, with positivity checks,
//! density gaps, quasidensity certificates and maximality probes.

mod density;

pub use density::{
    certify_quasidense, density_gap, maximality_probe, stable_radius, GapCertificate, GapResult, GapVerdict,
    CandidateRecord, MaximalityReport, ProbeRecord,
};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::convex::ConvexFn;
use crate::error::{check_len, Error, Result};
use crate::linalg::{lstsq, sym_eigen};
use crate::mono::sequence::SeqKind;
use crate::optim::{uniform_vec, Budget};
use crate::space::{Point, SnSpace};

/// How a set is stored.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetRepr {
    /// Finitely many points.
    FiniteCloud {
        #[serde(with = "crate::serde_mat::vectors")]
        points: Vec<Point>,
    },
    /// Span of the given vectors.
    LinearSubspace {
        #[serde(with = "crate::serde_mat::vectors")]
        vectors: Vec<Point>,
    },
    /// `{(x, Mx + o)}` in a product space.
    OperatorGraph {
        #[serde(with = "crate::serde_mat::rows")]
        matrix: DMatrix<f64>,
        #[serde(with = "crate::serde_mat::vector")]
        offset: Point,
    },
    /// Graph of `∂k` in a product space, parametrized by `z ↦ (prox_k z, z - prox_k z)`.
    SubdifferentialGraph { function: ConvexFn },
    /// `{(x, Sx)}` for a truncated sequence operator on `R^n`.
    SequenceOperator { operator: SeqKind, n: usize },
}

/// A nonempty subset of an SN space.
#[derive(Clone, Debug)]
pub struct LPositiveSet {
    space: Arc<SnSpace>,
    repr: SetRepr,
}

/// Result of [`LPositiveSet::is_l_positive`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub ok: bool,
    /// Whether every pair (or the whole span) was checked.
    pub exhaustive: bool,
    /// Smallest `q_L(a - c)` seen (normalized by `‖a - c‖²` for spans).
    pub min_value: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

impl LPositiveSet {
    pub fn new(space: Arc<SnSpace>, repr: SetRepr) -> Result<Self> {
        let dim = space.dim();
        match &repr {
            SetRepr::FiniteCloud { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidArgument("finite cloud must be nonempty".into()));
                }
                for p in points {
                    check_len(dim, p.len())?;
                }
            }
            SetRepr::LinearSubspace { vectors } => {
                for v in vectors {
                    check_len(dim, v.len())?;
                }
            }
            SetRepr::OperatorGraph { matrix, offset } => {
                let (n1, n2) = space.require_blocks()?;
                check_len(n2, matrix.nrows())?;
                check_len(n1, matrix.ncols())?;
                check_len(n2, offset.len())?;
            }
            SetRepr::SubdifferentialGraph { function } => {
                let (n1, n2) = space.require_blocks()?;
                check_len(n1, n2)?;
                function.validate()?;
                if let Some(d) = function.dim() {
                    check_len(n1, d)?;
                }
                function.prox(&DVector::zeros(n1), 1.0)?;
            }
            SetRepr::SequenceOperator { n, .. } => {
                if *n == 0 {
                    return Err(Error::InvalidArgument("truncation must be positive".into()));
                }
                check_len(2 * n + 1, dim)?;
                if !space.is_block_swap() {
                    return Err(Error::InvalidArgument("sequence operators need the sequence space".into()));
                }
            }
        }
        Ok(LPositiveSet { space, repr })
    }

    pub fn finite_cloud(space: Arc<SnSpace>, points: Vec<Point>) -> Result<Self> {
        LPositiveSet::new(space, SetRepr::FiniteCloud { points })
    }

    pub fn linear_subspace(space: Arc<SnSpace>, vectors: Vec<Point>) -> Result<Self> {
        LPositiveSet::new(space, SetRepr::LinearSubspace { vectors })
    }

    pub fn operator_graph(space: Arc<SnSpace>, matrix: DMatrix<f64>, offset: Point) -> Result<Self> {
        LPositiveSet::new(space, SetRepr::OperatorGraph { matrix, offset })
    }

    /// Graph of a linear map `x ↦ Mx` on the euclidean product space over `R^n`.
    pub fn linear_graph(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.ncols();
        let space = Arc::new(SnSpace::product(n, crate::norm::BaseNorm::Euclidean));
        LPositiveSet::operator_graph(space, matrix, DVector::zeros(n))
    }

    /// Graph of the identity on euclidean `R^n`.
    pub fn identity_graph(n: usize) -> Self {
        LPositiveSet::linear_graph(DMatrix::identity(n, n)).expect("valid")
    }

    pub fn subdifferential_graph(space: Arc<SnSpace>, function: ConvexFn) -> Result<Self> {
        LPositiveSet::new(space, SetRepr::SubdifferentialGraph { function })
    }

    /// `{(x, Sx)}` in the truncated sequence space of length `n`.
    pub fn sequence_operator(operator: SeqKind, n: usize) -> Result<Self> {
        LPositiveSet::new(Arc::new(SnSpace::sequence(n)), SetRepr::SequenceOperator { operator, n })
    }

    pub fn space(&self) -> &SnSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<SnSpace> {
        &self.space
    }

    pub fn repr(&self) -> &SetRepr {
        &self.repr
    }

    pub fn points(&self) -> Option<&[Point]> {
        match &self.repr {
            SetRepr::FiniteCloud { points } => Some(points),
            _ => None,
        }
    }

    /// `p0 + span(P)` when the set is affine.
    pub fn affine_rep(&self) -> Option<(Point, DMatrix<f64>)> {
        let dim = self.space.dim();
        match &self.repr {
            SetRepr::LinearSubspace { vectors } => {
                let p = if vectors.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(vectors) };
                Some((DVector::zeros(dim), p))
            }
            SetRepr::OperatorGraph { matrix, offset } => {
                let (n1, n2) = self.space.blocks()?;
                let mut p = DMatrix::zeros(dim, n1);
                p.view_mut((0, 0), (n1, n1)).copy_from(&DMatrix::identity(n1, n1));
                p.view_mut((n1, 0), (n2, n1)).copy_from(matrix);
                Some((SnSpace::join(&vec![0.0; n1], offset.as_slice()), p))
            }
            SetRepr::SequenceOperator { operator, n } => {
                let mut p = DMatrix::zeros(dim, *n);
                for k in 0..*n {
                    let mut e = vec![0.0; *n];
                    e[k] = 1.0;
                    let col = SnSpace::join(&e, &operator.apply(&e));
                    p.set_column(k, &col);
                }
                Some((DVector::zeros(dim), p))
            }
            SetRepr::SubdifferentialGraph { function } => {
                let q = function.as_quad()?;
                if q.v.ncols() != q.dim() {
                    return None;
                }
                let n = q.dim();
                let mut p = DMatrix::zeros(2 * n, n);
                p.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
                p.view_mut((n, 0), (n, n)).copy_from(&q.h);
                Some((SnSpace::join(&vec![0.0; n], q.g.as_slice()), p))
            }
            SetRepr::FiniteCloud { .. } => None,
        }
    }

    /// Number of free parameters, for parametrized representations.
    pub fn param_dim(&self) -> Option<usize> {
        match &self.repr {
            SetRepr::FiniteCloud { .. } => None,
            SetRepr::LinearSubspace { vectors } => Some(vectors.len()),
            SetRepr::OperatorGraph { matrix, .. } => Some(matrix.ncols()),
            SetRepr::SubdifferentialGraph { .. } => self.space.blocks().map(|b| b.0),
            SetRepr::SequenceOperator { n, .. } => Some(*n),
        }
    }

    /// The point with parameter `t`.
    pub fn point_at(&self, t: &[f64]) -> Result<Point> {
        match &self.repr {
            SetRepr::FiniteCloud { .. } => Err(Error::InvalidArgument("finite clouds are not parametrized".into())),
            SetRepr::LinearSubspace { vectors } => {
                check_len(vectors.len(), t.len())?;
                Ok(vectors.iter().zip(t).fold(DVector::zeros(self.space.dim()), |a, (v, s)| a + v * *s))
            }
            SetRepr::OperatorGraph { matrix, offset } => {
                check_len(matrix.ncols(), t.len())?;
                let x = DVector::from_column_slice(t);
                Ok(SnSpace::join(t, (matrix * x + offset).as_slice()))
            }
            SetRepr::SubdifferentialGraph { function } => {
                let z = DVector::from_column_slice(t);
                let p = function.prox(&z, 1.0)?;
                Ok(SnSpace::join(p.as_slice(), (&z - &p).as_slice()))
            }
            SetRepr::SequenceOperator { operator, n } => {
                check_len(*n, t.len())?;
                Ok(SnSpace::join(t, &operator.apply(t)))
            }
        }
    }

    /// Membership up to `tol` (relative to the point's size).
    pub fn contains(&self, b: &Point, tol: f64) -> bool {
        if b.len() != self.space.dim() {
            return false;
        }
        let scale = 1.0 + b.amax();
        match &self.repr {
            SetRepr::FiniteCloud { points } => points.iter().any(|p| (p - b).amax() <= tol * scale),
            SetRepr::SubdifferentialGraph { function } => {
                let (x, xs) = self.space.split(b);
                let z: Point = DVector::from_iterator(x.len(), x.iter().zip(xs).map(|(a, c)| a + c));
                match function.prox(&z, 1.0) {
                    Ok(p) => p.iter().zip(x).all(|(u, v)| (u - v).abs() <= tol * scale),
                    Err(_) => false,
                }
            }
            SetRepr::SequenceOperator { operator, .. } => {
                let (x, xs) = self.space.split(b);
                operator.apply(x).iter().zip(xs).all(|(u, v)| (u - v).abs() <= tol * scale)
            }
            _ => {
                let (p0, p) = self.affine_rep().expect("affine");
                let (_, r) = lstsq(&p, &(b - &p0));
                r <= tol * scale
            }
        }
    }

    /// First block of a product-space point.
    pub fn pi1(&self, b: &Point) -> Vec<f64> {
        self.space.split(b).0.to_vec()
    }

    /// Second block of a product-space point.
    pub fn pi2(&self, b: &Point) -> Vec<f64> {
        self.space.split(b).1.to_vec()
    }

    /// Sample points: all members of a cloud, or images of parameters
    /// uniform in `[-scale, scale]`.
    pub fn sample<R: Rng>(&self, rng: &mut R, count: usize, scale: f64) -> Result<Vec<Point>> {
        if let Some(pts) = self.points() {
            return Ok(pts.to_vec());
        }
        let k = self.param_dim().unwrap_or(0);
        (0..count).map(|_| self.point_at(&uniform_vec(rng, k, scale))).collect()
    }

    /// Checks `q_L(a - c) ≥ -1e-12` over pairs of members: exhaustive for
    /// clouds, exact (spectral) for affine sets, sampled otherwise.
    pub fn is_l_positive(&self, samples: usize, budget: &Budget) -> Result<PositivityReport> {
        let tol = 1e-12;
        if let Some((p0, p)) = self.affine_rep() {
            let k = p.ncols();
            if k == 0 {
                return Ok(PositivityReport { ok: true, exhaustive: true, min_value: 0.0, witness: None });
            }
            let h = p.transpose() * self.space.l() * &p;
            let g = p.transpose() * &p;
            // generalized eigen-test on q_L restricted to the span, normalized by the coordinates' gram
            let (gv, gw) = sym_eigen(&g);
            let keep: Vec<usize> = (0..k).filter(|&i| gv[i] > 1e-12 * gv.amax().max(1.0)).collect();
            let mut w = DMatrix::zeros(k, keep.len());
            for (j, &i) in keep.iter().enumerate() {
                w.set_column(j, &(gw.column(i) / gv[i].sqrt()));
            }
            let hr = w.transpose() * &h * &w;
            let (vals, vecs) = sym_eigen(&hr);
            let min = if vals.is_empty() { 0.0 } else { 0.5 * vals[0] };
            let ok = min >= -tol;
            let witness = (!ok).then(|| {
                let u = &w * vecs.column(0);
                let a = &p0 + &p * u;
                (a.as_slice().to_vec(), p0.as_slice().to_vec())
            });
            return Ok(PositivityReport { ok, exhaustive: true, min_value: min, witness });
        }
        let mut rng = budget.rng(0x905);
        let pts = self.sample(&mut rng, samples, 2.0)?;
        let exhaustive = self.points().is_some();
        let mut min = f64::INFINITY;
        let mut witness = None;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let v = self.space.q_l(&(&pts[i] - &pts[j]));
                if v < min {
                    min = v;
                    if v < -tol {
                        witness = Some((pts[i].as_slice().to_vec(), pts[j].as_slice().to_vec()));
                    }
                }
            }
        }
        if min == f64::INFINITY {
            min = 0.0;
        }
        Ok(PositivityReport { ok: witness.is_none(), exhaustive, min_value: min, witness })
    }

    /// Image under `Δ(x, x*) = (x/α, x*/β)`.
    pub fn deform(&self, alpha: f64, beta: f64) -> Result<LPositiveSet> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidArgument("alpha and beta must be positive".into()));
        }
        let (n1, _) = self.space.require_blocks()?;
        let delta = |p: &Point| -> Point {
            DVector::from_iterator(p.len(), p.iter().enumerate().map(|(i, v)| if i < n1 { v / alpha } else { v / beta }))
        };
        let repr = match &self.repr {
            SetRepr::FiniteCloud { points } => SetRepr::FiniteCloud { points: points.iter().map(delta).collect() },
            SetRepr::LinearSubspace { vectors } => SetRepr::LinearSubspace { vectors: vectors.iter().map(delta).collect() },
            SetRepr::OperatorGraph { matrix, offset } => SetRepr::OperatorGraph {
                matrix: matrix * (alpha / beta),
                offset: offset / beta,
            },
            SetRepr::SubdifferentialGraph { function } => SetRepr::SubdifferentialGraph {
                function: ConvexFn::scaled(function.clone(), alpha, 1.0 / (alpha * beta)),
            },
            SetRepr::SequenceOperator { operator, n } => SetRepr::SequenceOperator {
                operator: operator.scaled(alpha / beta),
                n: *n,
            },
        };
        LPositiveSet::new(self.space.clone(), repr)
    }
}

#[derive(Serialize, Deserialize)]
struct SetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    space: Option<SnSpace>,
    #[serde(flatten)]
    repr: SetRepr,
}

impl LPositiveSet {
    /// Parses a set from JSON, using `fallback` when the file has no `space`.
    pub fn from_json(value: serde_json::Value, fallback: Option<Arc<SnSpace>>) -> Result<Self> {
        let f: SetFile = serde_json::from_value(value)?;
        let space = match (f.space, &f.repr, fallback) {
            (Some(s), _, _) => Arc::new(s),
            (None, SetRepr::SequenceOperator { n, .. }, _) => Arc::new(SnSpace::sequence(*n)),
            (None, _, Some(s)) => s,
            (None, _, None) => return Err(Error::InvalidArgument("set needs a space".into())),
        };
        LPositiveSet::new(space, f.repr)
    }
}

impl Serialize for LPositiveSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetFile { space: Some((*self.space).clone()), repr: self.repr.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LPositiveSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = serde_json::Value::deserialize(d)?;
        LPositiveSet::from_json(v, None).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::BaseNorm;
    use crate::space::pt;

    fn r1() -> Arc<SnSpace> {
        Arc::new(SnSpace::product(1, BaseNorm::Euclidean))
    }

    #[test]
    fn positivity_examples() {
        let b = Budget::default();
        let a = Arc::new(SnSpace::scaled_identity(2, 0.5));
        let cloud = LPositiveSet::finite_cloud(a, vec![pt(&[1.0, 2.0]), pt(&[-3.0, 0.5]), pt(&[0.0, 0.0])]).unwrap();
        assert!(cloud.is_l_positive(0, &b).unwrap().ok);
        let neg = Arc::new(SnSpace::scaled_identity(2, -1.0));
        let two = LPositiveSet::finite_cloud(neg, vec![pt(&[1.0, 0.0]), pt(&[0.0, 0.0])]).unwrap();
        let r = two.is_l_positive(0, &b).unwrap();
        assert!(!r.ok && r.witness.is_some());
        let mono = LPositiveSet::finite_cloud(r1(), vec![pt(&[0.0, 0.0]), pt(&[1.0, 1.0])]).unwrap();
        assert!(mono.is_l_positive(0, &b).unwrap().ok);
    }

    #[test]
    fn spans_are_checked_spectrally() {
        let b = Budget::default();
        let rot = LPositiveSet::linear_graph(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(rot.is_l_positive(0, &b).unwrap().ok);
        let bad = LPositiveSet::linear_graph(DMatrix::from_row_slice(1, 1, &[-1.0])).unwrap();
        assert!(!bad.is_l_positive(0, &b).unwrap().ok);
    }

    #[test]
    fn membership() {
        let id = LPositiveSet::identity_graph(1);
        assert!(id.contains(&pt(&[2.0, 2.0]), 1e-12));
        assert!(!id.contains(&pt(&[2.0, 1.0]), 1e-12));
        let abs = LPositiveSet::subdifferential_graph(r1(), ConvexFn::abs()).unwrap();
        assert!(abs.contains(&pt(&[0.0, 0.3]), 1e-12));
        assert!(abs.contains(&pt(&[2.0, 1.0]), 1e-12));
        assert!(!abs.contains(&pt(&[2.0, 0.5]), 1e-12));
        let t = LPositiveSet::sequence_operator(SeqKind::Tail, 3).unwrap();
        assert!(t.contains(&pt(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), 1e-12));
    }

    #[test]
    fn deformation_of_identity_graph() {
        let id = LPositiveSet::identity_graph(1);
        let d = id.deform(2.0, 1.0).unwrap();
        assert!(d.contains(&pt(&[0.5, 1.0]), 1e-12));
        let same = id.deform(1.0, 1.0).unwrap();
        assert!(same.contains(&pt(&[3.0, 3.0]), 1e-12));
        let abs = LPositiveSet::subdifferential_graph(r1(), ConvexFn::abs()).unwrap();
        let da = abs.deform(2.0, 3.0).unwrap();
        // (2, 1) ∈ G(∂|·|) maps to (1, 1/3)
        assert!(da.contains(&pt(&[1.0, 1.0 / 3.0]), 1e-9));
    }

    #[test]
    fn json_round_trip() {
        let id = LPositiveSet::identity_graph(1);
        let s = serde_json::to_string(&id).unwrap();
        let back: LPositiveSet = serde_json::from_str(&s).unwrap();
        assert!(back.contains(&pt(&[1.0, 1.0]), 1e-12));
        let seq: LPositiveSet = serde_json::from_str(r#"{"kind":"sequence_operator","operator":"tail","n":4}"#).unwrap();
        assert_eq!(seq.space().dim(), 9);
        let no_space = serde_json::from_str::<LPositiveSet>(r#"{"kind":"finite_cloud","points":[[0,0]]}"#);
        assert!(no_space.is_err());
    }
}
