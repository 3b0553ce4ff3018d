//! Banach SN spaces: a coordinate space `R^dim` with a norm and a symmetric
//! nonexpansive matrix `L`, together with `q_L`, `r_L`, `s_L`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_len, Error, Result};
use crate::ext::ExtReal;
use crate::linalg::{spectral_norm, sym_eigen};
use crate::norm::{product_split, BaseNorm, NormKind};
use crate::optim::{lbfgs, nelder_mead, uniform_vec, Budget, LbfgsOptions, NelderMeadOptions, SMOOTHING};

/// A point of an SN space or of its dual, in coordinates.
pub type Point = DVector<f64>;

/// Builds a point from a slice.
pub fn pt(v: &[f64]) -> Point {
    DVector::from_column_slice(v)
}

/// A finite-dimensional Banach SN space.
#[derive(Clone, Debug, PartialEq)]
pub struct SnSpace {
    dim: usize,
    norm: NormKind,
    l: DMatrix<f64>,
    swap: bool,
}

/// Tolerance on symmetry of `L`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// How a value of `s_L` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupVerdict {
    /// Spectral formula; no approximation beyond rounding.
    Exact,
    /// Multi-start ascent converged; the value is a lower bound.
    Finite,
    /// Ascent left the divergence radius while still increasing.
    InfiniteHeuristic,
    /// Budget exhausted without a verdict; the value is a lower bound.
    Unknown,
}

/// Result of evaluating `s_L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: ExtReal,
    pub verdict: SupVerdict,
    /// Best lower bound found by the ascent (equals `value` when finite).
    pub lower_bound: f64,
}

/// A violated SN condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub value: f64,
    pub witness: Vec<Vec<f64>>,
}

/// Outcome of [`SnSpace::validate_sn`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnReport {
    pub ok: bool,
    pub asymmetry: f64,
    pub operator_norm: f64,
    /// Whether `operator_norm` is exact or an ascent estimate.
    pub norm_exact: bool,
    pub violations: Vec<Violation>,
}

impl SnSpace {
    /// A space with the given norm and matrix. Symmetry and nonexpansiveness
    /// are not enforced here; see [`SnSpace::validate_sn`].
    pub fn new(norm: NormKind, l: DMatrix<f64>) -> Result<Self> {
        norm.check()?;
        let dim = l.nrows();
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be positive".into()));
        }
        check_len(dim, l.ncols())?;
        if norm.is_product() && dim < 2 {
            return Err(Error::InvalidNorm("product norm needs dim >= 2".into()));
        }
        let swap = norm.is_product() && l == block_swap(dim);
        Ok(SnSpace { dim, norm, l, swap })
    }

    /// Euclidean `R^dim` with `L = λI`.
    pub fn scaled_identity(dim: usize, lambda: f64) -> Self {
        SnSpace::new(NormKind::Euclidean, DMatrix::identity(dim, dim) * lambda).expect("valid")
    }

    /// Euclidean `R^3` with `L(b) = λ(b2, b1, b3)`.
    pub fn partial_swap3(lambda: f64) -> Self {
        let l = DMatrix::from_row_slice(3, 3, &[0.0, lambda, 0.0, lambda, 0.0, 0.0, 0.0, 0.0, lambda]);
        SnSpace::new(NormKind::Euclidean, l).expect("valid")
    }

    /// `E × E*` with `E = (R^n, base)`, product norm, `L(x, x*) = (x*, x)`.
    pub fn product(n: usize, base: BaseNorm) -> Self {
        SnSpace::new(NormKind::Product(base, base.dual()), block_swap(2 * n)).expect("valid")
    }

    /// Truncated sequence space: `E = (R^n, ell1)` and `E* = (R^{n+1}, ellinf)`
    /// whose last coordinate is the constant value of the sequence beyond `n`.
    pub fn sequence(n: usize) -> Self {
        SnSpace::new(NormKind::Product(BaseNorm::Ell1, BaseNorm::EllInf), block_swap(2 * n + 1)).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn is_product(&self) -> bool {
        self.norm.is_product()
    }

    /// Block sizes `(n1, n2)` for product spaces.
    pub fn blocks(&self) -> Option<(usize, usize)> {
        self.is_product().then(|| product_split(self.dim))
    }

    /// Block sizes, or [`Error::NotProductSpace`].
    pub fn require_blocks(&self) -> Result<(usize, usize)> {
        self.blocks().ok_or(Error::NotProductSpace)
    }

    /// `(x, x*)` of a product-space point.
    pub fn split<'a>(&self, b: &'a Point) -> (&'a [f64], &'a [f64]) {
        let n1 = product_split(self.dim).0;
        b.as_slice().split_at(n1)
    }

    pub fn join(x: &[f64], xs: &[f64]) -> Point {
        DVector::from_iterator(x.len() + xs.len(), x.iter().chain(xs).copied())
    }

    /// Norms of the two blocks of a product-space point.
    pub fn block_norms(&self, b: &Point) -> (f64, f64) {
        match self.norm {
            NormKind::Product(p, d) => {
                let (x, xs) = self.split(b);
                (p.norm(x), d.norm(xs))
            }
            _ => (self.norm.norm(b.as_slice()), 0.0),
        }
    }

    pub fn norm(&self, b: &Point) -> f64 {
        self.norm.norm(b.as_slice())
    }

    pub fn dual_norm(&self, bs: &Point) -> f64 {
        self.norm.dual_norm(bs.as_slice())
    }

    fn check(&self, b: &Point) -> Result<()> {
        check_len(self.dim, b.len())
    }

    pub fn apply_l(&self, b: &Point) -> Point {
        if self.swap {
            let (n1, _) = product_split(self.dim);
            let mut out = DVector::zeros(self.dim);
            for i in 0..n1 {
                out[i] = b[n1 + i];
                out[n1 + i] = b[i];
            }
            return out;
        }
        &self.l * b
    }

    /// `q_L(b) = ½<b, Lb>`.
    pub fn q_l(&self, b: &Point) -> f64 {
        self.q_l_slice(b.as_slice())
    }

    fn q_l_slice(&self, b: &[f64]) -> f64 {
        if self.swap {
            let (n1, _) = product_split(self.dim);
            return (0..n1).map(|i| b[i] * b[n1 + i]).sum();
        }
        let mut q = 0.0;
        for i in 0..self.dim {
            let mut li = 0.0;
            for j in 0..self.dim {
                li += self.l[(i, j)] * b[j];
            }
            q += b[i] * li;
        }
        0.5 * q
    }

    /// `r_L(b) = ½‖b‖² + q_L(b)`.
    pub fn r_l(&self, b: &Point) -> f64 {
        let n = self.norm(b);
        0.5 * n * n + self.q_l(b)
    }

    /// Checked variant of [`SnSpace::q_l`].
    pub fn try_q_l(&self, b: &Point) -> Result<f64> {
        self.check(b)?;
        Ok(self.q_l(b))
    }

    /// Checked variant of [`SnSpace::r_l`].
    pub fn try_r_l(&self, b: &Point) -> Result<f64> {
        self.check(b)?;
        Ok(self.r_l(b))
    }

    /// Smooth surrogate of `r_L` with gradient.
    pub fn r_l_smooth(&self, b: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        let v = self.norm.smooth_half_sq(b, mu, grad);
        if self.swap {
            let (n1, _) = product_split(self.dim);
            let mut q = 0.0;
            for i in 0..n1 {
                grad[i] += b[n1 + i];
                grad[n1 + i] += b[i];
                q += b[i] * b[n1 + i];
            }
            return v + q;
        }
        let mut q = 0.0;
        for i in 0..self.dim {
            let mut li = 0.0;
            for j in 0..self.dim {
                li += self.l[(i, j)] * b[j];
            }
            grad[i] += li;
            q += b[i] * li;
        }
        v + 0.5 * q
    }

    /// The objective inside the supremum defining `s_L`.
    fn s_objective(&self, c: &Point, bs: &Point) -> f64 {
        let lc = &self.l * c;
        let d = self.dual_norm(&(&lc - bs));
        c.dot(bs) - 0.5 * c.dot(&lc) - 0.5 * d * d
    }

    /// `s_L(b*) = sup_c [<c, b*> - q_L(c) - ½‖Lc - b*‖²]`.
    ///
    /// Euclidean norms use the spectral formula. Other norms use multi-start
    /// ascent with smoothing; `+inf` is declared when an ascent leaves the
    /// divergence radius while still increasing.
    pub fn s_l(&self, bs: &Point, budget: &Budget) -> Result<SupResult> {
        self.check(bs)?;
        if self.norm.is_euclidean() {
            return Ok(self.s_l_spectral(bs));
        }
        Ok(self.s_l_ascent(bs, budget))
    }

    fn s_l_spectral(&self, bs: &Point) -> SupResult {
        let (vals, vecs) = sym_eigen(&self.l);
        let scale = bs.norm().max(1.0);
        let mut value = 0.0;
        let mut inf = false;
        for i in 0..self.dim {
            let lam = vals[i];
            let beta = vecs.column(i).dot(bs);
            if (lam + 1.0).abs() <= 1e-12 {
                value -= 0.5 * beta * beta;
            } else if lam.abs() <= 1e-12 {
                if beta.abs() > 1e-12 * scale {
                    inf = true;
                }
            } else if lam * (1.0 + lam) < 0.0 {
                inf = true;
            } else {
                value += 0.5 * beta * beta / lam;
            }
        }
        if inf {
            SupResult { value: ExtReal::PosInf, verdict: SupVerdict::Exact, lower_bound: f64::INFINITY }
        } else {
            SupResult { value: ExtReal::new(value), verdict: SupVerdict::Exact, lower_bound: value }
        }
    }

    fn s_l_ascent(&self, bs: &Point, budget: &Budget) -> SupResult {
        let n = self.dim;
        let dual = self.norm.dual();
        let exact = |c: &[f64]| -self.s_objective(&DVector::from_column_slice(c), bs);
        let smooth = |c: &[f64], mu: f64, g: &mut [f64]| {
            let cv = DVector::from_column_slice(c);
            let lc = &self.l * &cv;
            let v = &lc - bs;
            let mut gv = vec![0.0; n];
            let h = dual.smooth_half_sq(v.as_slice(), mu, &mut gv);
            let lg = &self.l * DVector::from_vec(gv);
            for i in 0..n {
                g[i] = -bs[i] + lc[i] + lg[i];
            }
            -c.iter().zip(bs.iter()).map(|(a, b)| a * b).sum::<f64>() + 0.5 * cv.dot(&lc) + h
        };
        let mut rng = budget.rng(0x5_1);
        let scale = 1.0 + bs.amax();
        let mut starts = vec![vec![0.0; n]];
        for _ in 0..budget.restarts {
            starts.push(uniform_vec(&mut rng, n, scale));
        }
        let mut best = f64::NEG_INFINITY;
        for x0 in starts {
            let mut x = x0;
            let start_val = -exact(&x);
            for &mu in &SMOOTHING {
                let o = LbfgsOptions {
                    max_iter: budget.max_iter,
                    divergence: Some(budget.divergence),
                    ..Default::default()
                };
                let m = lbfgs(|p, g| smooth(p, mu, g), &x, &o);
                x = m.x;
                let v = -exact(&x);
                if m.diverged && v > start_val + 1.0 {
                    let half: Vec<f64> = x.iter().map(|t| 0.5 * t).collect();
                    if v > -exact(&half) {
                        return SupResult {
                            value: ExtReal::PosInf,
                            verdict: SupVerdict::InfiniteHeuristic,
                            lower_bound: v,
                        };
                    }
                }
                best = best.max(v);
            }
            if n <= 12 {
                let o = NelderMeadOptions {
                    initial_step: 1e-2,
                    max_evals: 6000,
                    divergence: Some(budget.divergence),
                    ..Default::default()
                };
                let m = nelder_mead(exact, &x, &o);
                if m.diverged && -m.value > start_val + 1.0 {
                    return SupResult {
                        value: ExtReal::PosInf,
                        verdict: SupVerdict::InfiniteHeuristic,
                        lower_bound: -m.value,
                    };
                }
                best = best.max(-m.value);
            }
        }
        if best.is_finite() {
            SupResult { value: ExtReal::new(best), verdict: SupVerdict::Finite, lower_bound: best }
        } else {
            SupResult { value: ExtReal::ZERO, verdict: SupVerdict::Unknown, lower_bound: best }
        }
    }

    /// `L` is the (generalized) block swap `(x, x*) ↦ (x*, x)` of a product space.
    pub fn is_block_swap(&self) -> bool {
        self.swap
    }

    /// `(B*, L̃)` with the dual norm and `L̃(y*, y**) = (y**, y*)`.
    pub fn dual_space(&self) -> Result<SnSpace> {
        if !self.is_block_swap() {
            return Err(Error::NotProductSpace);
        }
        SnSpace::new(self.norm.dual(), block_swap(self.dim))
    }

    /// Checks symmetry and `‖L‖ ≤ 1`.
    pub fn validate_sn(&self) -> SnReport {
        let n = self.dim;
        let mut violations = Vec::new();
        let mut asym = 0.0;
        let mut wit = (0, 0);
        for i in 0..n {
            for j in 0..n {
                let d = (self.l[(i, j)] - self.l[(j, i)]).abs();
                if d > asym {
                    asym = d;
                    wit = (i, j);
                }
            }
        }
        if asym > SYMMETRY_TOL {
            let mut b = vec![0.0; n];
            let mut c = vec![0.0; n];
            b[wit.0] = 1.0;
            c[wit.1] = 1.0;
            violations.push(Violation { condition: "symmetry".into(), value: asym, witness: vec![b, c] });
        }
        let (opnorm, exact, witness, tol) = if self.norm.is_euclidean() {
            let svd = self.l.clone().svd(false, true);
            let i = svd.singular_values.imax();
            let w = svd.v_t.expect("requested").row(i).transpose();
            (spectral_norm(&self.l), true, w.as_slice().to_vec(), 1e-12)
        } else if self.is_block_swap() {
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            (if n >= 2 { 1.0 } else { 0.0 }, true, w, 1e-12)
        } else {
            let (v, w) = self.operator_norm_ascent();
            (v, false, w, 1e-8)
        };
        if opnorm > 1.0 + tol {
            violations.push(Violation { condition: "nonexpansive".into(), value: opnorm, witness: vec![witness] });
        }
        SnReport { ok: violations.is_empty(), asymmetry: asym, operator_norm: opnorm, norm_exact: exact, violations }
    }

    /// Estimate of `max ‖Lb‖_* / ‖b‖` by alternating support maximization
    /// from axis, sign-vertex and random starts.
    fn operator_norm_ascent(&self) -> (f64, Vec<f64>) {
        let n = self.dim;
        let mut starts: Vec<Vec<f64>> = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            starts.push(e);
        }
        if n <= 12 {
            for mask in 0u32..(1 << (n - 1)) {
                starts.push((0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect());
            }
        }
        let mut rng = crate::optim::rng(0x0b5e);
        for _ in 0..64 {
            starts.push(uniform_vec(&mut rng, n, 1.0));
        }
        let eval = |b: &[f64]| -> f64 {
            let nb = self.norm.norm(b);
            if nb == 0.0 {
                return 0.0;
            }
            self.dual_norm(&(&self.l * DVector::from_column_slice(b))) / nb
        };
        let mut best = (0.0, starts[0].clone());
        for s in starts {
            let mut b = s;
            let mut val = eval(&b);
            for _ in 0..200 {
                let lb = &self.l * DVector::from_column_slice(&b);
                let s2 = self.norm.support_argmax(lb.as_slice());
                let g = &self.l * DVector::from_vec(s2);
                let nb = self.norm.support_argmax(g.as_slice());
                let nv = eval(&nb);
                if nv <= val * (1.0 + 1e-15) {
                    if nv > val {
                        b = nb;
                        val = nv;
                    }
                    break;
                }
                b = nb;
                val = nv;
            }
            if val > best.0 {
                best = (val, b);
            }
        }
        best
    }
}

/// The matrix of `(x, x*) ↦ (x*, x)` on `R^dim` split as `(dim/2, dim - dim/2)`;
/// for odd `dim` the last coordinate is mapped to zero.
pub fn block_swap(dim: usize) -> DMatrix<f64> {
    let (n1, n2) = product_split(dim);
    let mut l = DMatrix::zeros(dim, dim);
    for i in 0..n1.min(n2) {
        l[(i, n1 + i)] = 1.0;
        l[(n1 + i, i)] = 1.0;
    }
    l
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    dim: usize,
    norm: NormKind,
    #[serde(rename = "L")]
    l: MatrixInput,
}

impl Serialize for SnSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let flat: Vec<f64> = (0..self.dim)
            .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
            .map(|(i, j)| self.l[(i, j)])
            .collect();
        SpaceFile { dim: self.dim, norm: self.norm, l: MatrixInput::Flat(flat) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SnSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = SpaceFile::deserialize(d)?;
        let n = f.dim;
        let flat = match f.l {
            MatrixInput::Flat(v) => v,
            MatrixInput::Nested(rows) => {
                if rows.iter().any(|r| r.len() != n) {
                    return Err(D::Error::custom(format!("L rows must have length {n}")));
                }
                rows.concat()
            }
        };
        if flat.len() != n * n {
            return Err(D::Error::custom(format!("L must have {} entries, got {}", n * n, flat.len())));
        }
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(D::Error::custom("L entries must be finite"));
        }
        SnSpace::new(f.norm, DMatrix::from_row_slice(n, n, &flat)).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fast() -> Budget {
        Budget::default().with_restarts(3)
    }

    #[test]
    fn validate_examples() {
        assert!(SnSpace::scaled_identity(3, 1.0).validate_sn().ok);
        let r = SnSpace::scaled_identity(3, 2.0).validate_sn();
        assert!(!r.ok);
        assert_eq!(r.violations[0].condition, "nonexpansive");
        assert!((r.operator_norm - 2.0).abs() < 1e-12);
        assert!(SnSpace::product(2, BaseNorm::Euclidean).validate_sn().ok);
        assert!(SnSpace::product(2, BaseNorm::Ell1).validate_sn().ok);
        assert!(SnSpace::sequence(4).validate_sn().ok);
    }

    #[test]
    fn asymmetric_matrix_is_reported() {
        let l = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.0, 0.0]);
        let r = SnSpace::new(NormKind::Euclidean, l).unwrap().validate_sn();
        assert!(r.violations.iter().any(|v| v.condition == "symmetry"));
    }

    #[test]
    fn ascent_estimates_mixed_operator_norm() {
        // ell1 -> ellinf norm of a symmetric matrix is its largest entry.
        let l = DMatrix::from_row_slice(3, 3, &[0.2, 0.9, -0.1, 0.9, 0.3, 0.0, -0.1, 0.0, -0.5]);
        let s = SnSpace::new(NormKind::Ell1, l).unwrap();
        let r = s.validate_sn();
        assert!((r.operator_norm - 0.9).abs() < 1e-12, "{r:?}");
        let l2 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]) * 0.6;
        let s2 = SnSpace::new(NormKind::Ell1, l2).unwrap();
        assert!(s2.validate_sn().ok);
        let s3 = SnSpace::new(NormKind::EllInf, DMatrix::from_row_slice(2, 2, &[0.6, 0.6, 0.6, 0.6])).unwrap();
        // ellinf -> ell1 norm is the sum of |entries| over sign patterns: 2.4.
        let r3 = s3.validate_sn();
        assert!((r3.operator_norm - 2.4).abs() < 1e-12 && !r3.ok);
    }

    #[test]
    fn worked_values() {
        let s = SnSpace::partial_swap3(1.0);
        let b = pt(&[1.0, 2.0, 3.0]);
        assert!((s.q_l(&b) - 6.5).abs() < 1e-12);
        assert!((s.r_l(&b) - 13.5).abs() < 1e-12);
        let a = SnSpace::scaled_identity(2, 0.5);
        assert!((a.r_l(&pt(&[2.0, 0.0])) - 3.0).abs() < 1e-12);
        let p = SnSpace::product(1, BaseNorm::Euclidean);
        assert_eq!(p.q_l(&pt(&[3.0, -2.0])), -6.0);
    }

    #[test]
    fn s_zero_dichotomy() {
        let s = SnSpace::scaled_identity(2, 0.0);
        let b = fast();
        assert_eq!(s.s_l(&pt(&[0.0, 0.0]), &b).unwrap().value, ExtReal::ZERO);
        assert_eq!(s.s_l(&pt(&[1.0, 0.0]), &b).unwrap().value, ExtReal::PosInf);
        let s1 = SnSpace::new(NormKind::Ell1, DMatrix::zeros(2, 2)).unwrap();
        let r = s1.s_l(&pt(&[1.0, 0.0]), &b).unwrap();
        assert_eq!(r.verdict, SupVerdict::InfiniteHeuristic);
        assert!(s1.s_l(&pt(&[0.0, 0.0]), &b).unwrap().value.approx_eq(ExtReal::ZERO, 1e-9));
    }

    #[test]
    fn s_on_mixed_product_matches_duality_product() {
        let s = SnSpace::product(2, BaseNorm::Ell1);
        let bs = pt(&[0.7, -0.3, 0.2, 1.1]);
        let r = s.s_l(&bs, &fast()).unwrap();
        let expect = 0.7 * 0.2 - 0.3 * 1.1;
        assert!((r.value.as_f64() - expect).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn dual_space_needs_product() {
        assert!(SnSpace::scaled_identity(2, 1.0).dual_space().is_err());
        let d = SnSpace::product(1, BaseNorm::Euclidean).dual_space().unwrap();
        assert_eq!(d.q_l(&pt(&[2.0, 3.0])), 6.0);
        let seq = SnSpace::sequence(3).dual_space().unwrap();
        assert_eq!(seq.norm_kind(), NormKind::Product(BaseNorm::EllInf, BaseNorm::Ell1));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let s = SnSpace::product(1, BaseNorm::Euclidean);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"dim":2,"norm":{"product":["euclidean","euclidean"]},"L":[0.0,1.0,1.0,0.0]}"#);
        assert_eq!(serde_json::from_str::<SnSpace>(&j).unwrap(), s);
        let nested = r#"{"dim":2,"norm":"euclidean","L":[[1,0],[0,1]]}"#;
        assert!(serde_json::from_str::<SnSpace>(nested).is_ok());
        assert!(serde_json::from_str::<SnSpace>(r#"{"dim":3,"norm":"euclidean","L":[1,0,0,1]}"#).is_err());
    }

    fn space_strategy() -> impl Strategy<Value = SnSpace> {
        (1usize..4, prop::collection::vec(-1.0..1.0f64, 16), 0usize..4).prop_map(|(n, raw, kind)| {
            let m = DMatrix::from_fn(n, n, |i, j| raw[i * 4 + j] + raw[j * 4 + i]);
            match kind {
                0 => {
                    let s = spectral_norm(&m).max(1e-9);
                    SnSpace::new(NormKind::Euclidean, m / s.max(1.0)).unwrap()
                }
                1 => SnSpace::product(n, BaseNorm::Ell1),
                2 => SnSpace::product(n, BaseNorm::Euclidean),
                _ => SnSpace::sequence(n),
            }
        })
    }

    proptest! {
        #[test]
        fn r_bounds_and_lipschitz(s in space_strategy(), raw in prop::collection::vec(-3.0..3.0f64, 16)) {
            let n = s.dim();
            let b = pt(&raw[..n]);
            let d = pt(&raw[8..8 + n]);
            let r = s.r_l(&b);
            let nb = s.norm(&b);
            prop_assert!(r >= -1e-12 && r <= nb * nb + 1e-12);
            prop_assert!(s.q_l(&b).abs() <= 0.5 * nb * nb + 1e-12);
            let lhs = (s.r_l(&b) - s.r_l(&d)).abs();
            prop_assert!(lhs <= s.norm(&(&b - &d)) * (nb + s.norm(&d)) + 1e-9);
            prop_assert!((s.q_l(&-&b) - s.q_l(&b)).abs() <= 1e-12);
            prop_assert!((s.r_l(&-&b) - s.r_l(&b)).abs() <= 1e-12);
            prop_assert!((b.dot(&s.apply_l(&d)) - d.dot(&s.apply_l(&b))).abs() <= 1e-12);
        }

        #[test]
        fn s_is_quadratically_homogeneous(raw in prop::collection::vec(-2.0..2.0f64, 4), lam in 0.2..3.0f64) {
            let s = SnSpace::product(2, BaseNorm::Euclidean);
            let bs = pt(&raw);
            let b = Budget::default();
            let v1 = s.s_l(&bs, &b).unwrap().value.as_f64();
            let v2 = s.s_l(&(&bs * lam), &b).unwrap().value.as_f64();
            prop_assert!((v2 - lam * lam * v1).abs() <= 1e-6 * (1.0 + v2.abs()));
        }
    }
}
