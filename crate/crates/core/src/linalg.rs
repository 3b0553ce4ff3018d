//! Dense linear-algebra helpers: spectral decompositions, subspaces, and
//! quadratics restricted to affine subspaces.

use nalgebra::{DMatrix, DVector};

use crate::ext::ExtReal;

/// Relative tolerance for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Symmetric eigendecomposition with eigenvalues in ascending order.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let e = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| e.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormal basis of the column span of `a`.
pub fn orth(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return DMatrix::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let cut = RANK_TOL * smax.max(1.0);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut)
        .collect();
    let mut q = DMatrix::zeros(m, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        q.set_column(j, &u.column(i));
    }
    q
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    orth(a).ncols()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `q` inside `R^m`.
pub fn complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let m = q.nrows();
    let p = DMatrix::<f64>::identity(m, m) - q * q.transpose();
    let (vals, vecs) = sym_eigen(&p);
    let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > 0.5).collect();
    let mut out = DMatrix::zeros(m, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &vecs.column(i));
    }
    out
}

/// Orthonormal basis of `{x : a x = 0}`.
pub fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    complement(&orth(&a.transpose()))
}

/// Distance from `v` to the column span of the orthonormal matrix `q`.
pub fn dist_to_span(q: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v - q * (q.transpose() * v)).norm()
}

/// Minimum-norm least-squares solution of `a x = b` and its residual norm.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), b.norm());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(b, RANK_TOL * smax.max(1.0))
        .expect("U and V were computed");
    let r = (a * &x - b).norm();
    (x, r)
}

/// `sup_t [gᵀt - ½ tᵀ H t]` for symmetric `H`, with a maximizer when finite.
///
/// The supremum is `+inf` when `H` has a negative direction or when `g` has a
/// component along the kernel of `H`.
pub fn sup_concave_quadratic(h: &DMatrix<f64>, g: &DVector<f64>) -> (ExtReal, Option<DVector<f64>>) {
    let k = g.len();
    if k == 0 {
        return (ExtReal::ZERO, Some(DVector::zeros(0)));
    }
    let (vals, vecs) = sym_eigen(h);
    let hscale = vals.amax().max(1.0);
    let gscale = g.norm().max(1.0);
    let htol = 1e-10 * hscale;
    let gtol = 1e-9 * gscale;
    let mut val = 0.0;
    let mut t = DVector::zeros(k);
    for i in 0..k {
        let u = vecs.column(i);
        let beta = u.dot(g);
        let lam = vals[i];
        if lam < -htol {
            return (ExtReal::PosInf, None);
        }
        if lam <= htol {
            if beta.abs() > gtol {
                return (ExtReal::PosInf, None);
            }
            continue;
        }
        val += 0.5 * beta * beta / lam;
        t += u * (beta / lam);
    }
    (ExtReal::Finite(val), Some(t))
}

/// The function `x ↦ ½xᵀHx + gᵀx + c` restricted to `p0 + span(V)`,
/// `+inf` elsewhere. `V` has orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadOnAffine {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub c: f64,
    pub p0: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl QuadOnAffine {
    /// Full-space quadratic.
    pub fn quadratic(h: DMatrix<f64>, g: DVector<f64>, c: f64) -> Self {
        let n = g.len();
        QuadOnAffine {
            h,
            g,
            c,
            p0: DVector::zeros(n),
            v: DMatrix::identity(n, n),
        }
    }

    /// Indicator of `p0 + span(dirs)`.
    pub fn indicator(p0: DVector<f64>, dirs: &DMatrix<f64>) -> Self {
        let n = p0.len();
        QuadOnAffine {
            h: DMatrix::zeros(n, n),
            g: DVector::zeros(n),
            c: 0.0,
            v: orth(dirs),
            p0,
        }
    }

    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    fn raw(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x) + self.c
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let d = x - &self.p0;
        dist_to_span(&self.v, &d) <= 1e-9 * (1.0 + x.norm() + self.p0.norm())
    }

    pub fn eval(&self, x: &DVector<f64>) -> ExtReal {
        if self.contains(x) {
            ExtReal::new(self.raw(x))
        } else {
            ExtReal::PosInf
        }
    }

    /// Exact Fenchel conjugate at `y`.
    pub fn conjugate(&self, y: &DVector<f64>) -> ExtReal {
        let vt = self.v.transpose();
        let hr = &vt * &self.h * &self.v;
        let gr = &vt * (y - &self.h * &self.p0 - &self.g);
        let base = self.p0.dot(y) - self.raw(&self.p0);
        match sup_concave_quadratic(&hr, &gr).0 {
            ExtReal::Finite(s) => ExtReal::new(base + s),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }

    /// The conjugate as a quadratic on an affine set.
    pub fn conjugate_fn(&self) -> QuadOnAffine {
        let vt = self.v.transpose();
        let hr = &vt * &self.h * &self.v;
        let (vals, vecs) = sym_eigen(&hr);
        let tol = 1e-10 * vals.amax().max(1.0);
        let k = vals.len();
        let mut pinv = DMatrix::zeros(k, k);
        let mut kern = Vec::new();
        for i in 0..k {
            let u = vecs.column(i);
            if vals[i] > tol {
                pinv += u * u.transpose() / vals[i];
            } else {
                kern.push(u.clone_owned());
            }
        }
        let kmat = if kern.is_empty() {
            DMatrix::zeros(k, 0)
        } else {
            DMatrix::from_columns(&kern)
        };
        let w = orth(&(&self.v * kmat));
        let a = &self.h * &self.p0 + &self.g;
        let m = &self.v * &pinv * &vt;
        let y0 = &w * (w.transpose() * &a);
        let ma = &m * &a;
        QuadOnAffine {
            h: m.clone(),
            g: &self.p0 - &ma,
            c: 0.5 * a.dot(&ma) - self.raw(&self.p0),
            v: complement(&w),
            p0: y0,
        }
    }

    /// A maximizer of `<x, y> - f(x)`, when the supremum is finite.
    pub fn conjugate_argmax(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let vt = self.v.transpose();
        let hr = &vt * &self.h * &self.v;
        let gr = &vt * (y - &self.h * &self.p0 - &self.g);
        sup_concave_quadratic(&hr, &gr).1.map(|t| &self.p0 + &self.v * t)
    }

    /// `argmin_x f(x) + ‖x - z‖² / (2γ)` (euclidean).
    pub fn prox(&self, z: &DVector<f64>, gamma: f64) -> DVector<f64> {
        let k = self.v.ncols();
        if k == 0 {
            return self.p0.clone();
        }
        let vt = self.v.transpose();
        let a = &vt * &self.h * &self.v + DMatrix::identity(k, k) / gamma;
        let rhs = &vt * (z - &self.p0) / gamma - &vt * (&self.h * &self.p0 + &self.g);
        let t = a
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|| lstsq(&a, &rhs).0);
        &self.p0 + &self.v * t
    }

    /// A subgradient at `x ∈ dom f` (the minimal-norm one is not required).
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x + &self.g
    }

    /// Sum of two quadratics on affine sets; `None` when the domains are disjoint.
    pub fn add(&self, other: &QuadOnAffine) -> Option<QuadOnAffine> {
        let n = self.dim();
        let (k1, k2) = (self.v.ncols(), other.v.ncols());
        let mut m = DMatrix::zeros(n, k1 + k2);
        m.view_mut((0, 0), (n, k1)).copy_from(&self.v);
        m.view_mut((0, k1), (n, k2)).copy_from(&(-&other.v));
        let rhs = &other.p0 - &self.p0;
        let (st, res) = lstsq(&m, &rhs);
        if res > 1e-9 * (1.0 + rhs.norm()) {
            return None;
        }
        let p0 = &self.p0 + &self.v * st.rows(0, k1);
        let ns = null_space(&m);
        let dirs = &self.v * ns.rows(0, k1);
        Some(QuadOnAffine {
            h: &self.h + &other.h,
            g: &self.g + &other.g,
            c: self.c + other.c,
            v: orth(&dirs),
            p0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_row() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let ns = null_space(&a);
        assert_eq!(ns.ncols(), 1);
        assert!((a * ns).norm() < 1e-12);
    }

    #[test]
    fn sup_concave_detects_unbounded_kernel_direction() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let g = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(sup_concave_quadratic(&h, &g).0, ExtReal::Finite(0.5));
        let g = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(sup_concave_quadratic(&h, &g).0, ExtReal::PosInf);
    }

    #[test]
    fn conjugate_of_half_square_is_half_square() {
        let f = QuadOnAffine::quadratic(DMatrix::identity(2, 2), DVector::zeros(2), 0.0);
        let y = DVector::from_vec(vec![1.0, -2.0]);
        assert!(f.conjugate(&y).approx_eq(ExtReal::Finite(2.5), 1e-12));
    }

    #[test]
    fn subspace_indicator_conjugate_is_polar_indicator() {
        let dirs = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let f = QuadOnAffine::indicator(DVector::zeros(2), &dirs);
        assert_eq!(f.conjugate(&DVector::from_vec(vec![1.0, -1.0])), ExtReal::ZERO);
        assert_eq!(f.conjugate(&DVector::from_vec(vec![1.0, 0.0])), ExtReal::PosInf);
    }

    #[test]
    fn intersection_of_lines() {
        let a = QuadOnAffine::indicator(DVector::zeros(2), &DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let b = QuadOnAffine::indicator(
            DVector::from_vec(vec![0.0, 1.0]),
            &DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
        );
        let s = a.add(&b).unwrap();
        assert_eq!(s.v.ncols(), 0);
        assert!((s.p0 - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-12);
        let c = QuadOnAffine::indicator(DVector::from_vec(vec![0.0, 1.0]), &DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        assert!(a.add(&c).is_none());
    }

    #[test]
    fn conjugate_fn_matches_pointwise_conjugate() {
        let h = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let dirs = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, -1.0]);
        let mut f = QuadOnAffine::indicator(DVector::from_vec(vec![0.5, -1.0, 2.0]), &dirs);
        f.h = h;
        f.g = DVector::from_vec(vec![0.3, -0.2, 0.7]);
        f.c = 1.5;
        let fs = f.conjugate_fn();
        let fss = fs.conjugate_fn();
        let pts = [[0.1, 0.2, 0.3], [1.0, -2.0, 0.5], [-1.0, 0.0, 3.0]];
        for p in pts {
            let y = DVector::from_row_slice(&p);
            assert!(fs.eval(&y).approx_eq(f.conjugate(&y), 1e-9), "{:?} {:?}", fs.eval(&y), f.conjugate(&y));
            assert!(fss.eval(&y).approx_eq(f.eval(&y), 1e-9));
        }
        let x = f.p0.clone() + f.v.column(0) * 0.7;
        assert!(fss.eval(&x).approx_eq(f.eval(&x), 1e-9));
    }

    #[test]
    fn prox_on_line() {
        let f = QuadOnAffine::indicator(DVector::zeros(2), &DMatrix::from_column_slice(2, 1, &[1.0, 1.0]));
        let p = f.prox(&DVector::from_vec(vec![2.0, 0.0]), 1.0);
        assert!((p - DVector::from_vec(vec![1.0, 1.0])).norm() < 1e-12);
    }
}
