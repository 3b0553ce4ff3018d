//! Local optimizers used by every inner minimization: L-BFGS with
//! backtracking, Nelder–Mead, golden-section search, and smoothing
//! continuation for nonsmooth norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Budget shared by the numerical routines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Iteration cap per local solve.
    pub max_iter: usize,
    /// Number of multi-start restarts.
    pub restarts: usize,
    /// Seed for every stochastic choice.
    pub seed: u64,
    /// Acceptance tolerance for gaps and coincidences.
    pub tol: f64,
    /// Iterate norm past which an increasing objective is declared unbounded.
    pub divergence: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_iter: 2000,
            restarts: 8,
            seed: 0,
            tol: 1e-8,
            divergence: 1e6,
        }
    }
}

impl Budget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// Seeded generator.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vector with independent entries uniform in `[-scale, scale]`.
pub fn uniform_vec<R: Rng>(r: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-scale..=scale)).collect()
}

/// Result of a local solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stopped because the iterate norm passed the divergence bound.
    pub diverged: bool,
}

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub memory: usize,
    /// Stop as soon as the value drops to this level.
    pub target: Option<f64>,
    /// Stop once the iterate norm exceeds this bound.
    pub divergence: Option<f64>,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iter: 500,
            grad_tol: 1e-12,
            f_tol: 1e-16,
            memory: 8,
            target: None,
            divergence: None,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Limited-memory BFGS. `f` returns the value and writes the gradient.
/// Non-finite values are treated as failed line-search trials.
pub fn lbfgs<F>(mut f: F, x0: &[f64], o: &LbfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut it = 0;
    let mut init_scale = 1.0;
    let mut converged = false;
    let mut diverged = false;
    if n == 0 || !fx.is_finite() {
        return Minimum { x, value: fx, iterations: 0, converged: n == 0, diverged: false };
    }
    while it < o.max_iter {
        if o.target.is_some_and(|t| fx <= t) {
            converged = true;
            break;
        }
        let gnorm = norm2(&g);
        if gnorm <= o.grad_tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        // Two-loop recursion.
        d.copy_from_slice(&g);
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dot(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if m > 0 {
            let gamma = dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1]);
            for dj in d.iter_mut() {
                *dj *= gamma;
            }
        } else {
            let sc = init_scale * (1.0 / gnorm.max(1e-300)).min(1.0);
            for dj in d.iter_mut() {
                *dj *= sc;
            }
        }
        for i in 0..m {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        for dj in d.iter_mut() {
            *dj = -*dj;
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            for (dj, gj) in d.iter_mut().zip(&g) {
                *dj = -gj / gnorm.max(1e-300);
            }
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            let fnew = f(&xn, &mut gn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = true;
                let fprev = fx;
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                if dot(&s, &y) > 1e-16 * norm2(&s) * norm2(&y) {
                    if s_hist.len() == o.memory {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                    s_hist.push(s);
                    y_hist.push(y);
                }
                if s_hist.is_empty() && step == 1.0 {
                    init_scale *= 2.0;
                }
                x.copy_from_slice(&xn);
                g.copy_from_slice(&gn);
                fx = fnew;
                if (fprev - fx).abs() <= o.f_tol * (1.0 + fx.abs()) && s_hist.len() > 1 {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        it += 1;
        if let Some(b) = o.divergence {
            if norm2(&x) > b {
                diverged = true;
                break;
            }
        }
        if !accepted {
            if s_hist.is_empty() {
                converged = true;
                break;
            }
            s_hist.clear();
            y_hist.clear();
            continue;
        }
        if converged {
            break;
        }
    }
    Minimum { x, value: fx, iterations: it, converged, diverged }
}

/// Central-difference gradient.
pub fn numeric_grad<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], g: &mut [f64]) {
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub initial_step: f64,
    /// Stop once the best vertex norm exceeds this bound.
    pub divergence: Option<f64>,
    /// Number of simplex rebuilds around the incumbent.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 20_000,
            f_tol: 1e-15,
            x_tol: 1e-12,
            initial_step: 0.5,
            divergence: None,
            restarts: 3,
        }
    }
}

/// Nelder–Mead with dimension-adaptive coefficients; `+inf` values are allowed.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], o: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut best_x = x0.to_vec();
    let mut best_f = f(x0);
    if n == 0 {
        return Minimum { x: best_x, value: best_f, iterations: 0, converged: true, diverged: false };
    }
    let nf = n as f64;
    let (ca, cb, cc, cs) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut evals = 1usize;
    let mut converged = false;
    let mut diverged = false;
    let mut step = o.initial_step;
    for _round in 0..=o.restarts {
        let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
        let mut fs = vec![best_f];
        for i in 0..n {
            let mut p = best_x.clone();
            p[i] += step * best_x[i].abs().max(1.0);
            fs.push(f(&p));
            simplex.push(p);
            evals += 1;
        }
        let mut round_converged = false;
        while evals < o.max_evals {
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            fs = idx.iter().map(|&i| fs[i]).collect();
            if let Some(b) = o.divergence {
                if norm2(&simplex[0]) > b {
                    diverged = true;
                    break;
                }
            }
            let fspread = (fs[n] - fs[0]).abs();
            let diam = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            let scale = 1.0 + norm2(&simplex[0]);
            if fs[n].is_finite() && fspread <= o.f_tol * (1.0 + fs[0].abs()) && diam <= o.x_tol * scale {
                round_converged = true;
                break;
            }
            if diam <= 1e-15 * scale {
                round_converged = true;
                break;
            }
            let mut cen = vec![0.0; n];
            for p in &simplex[..n] {
                for (c, v) in cen.iter_mut().zip(p) {
                    *c += v / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                cen.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
            };
            let xr = along(ca);
            let fr = f(&xr);
            evals += 1;
            if fr < fs[0] {
                let xe = along(ca * cb);
                let fe = f(&xe);
                evals += 1;
                if fe < fr {
                    simplex[n] = xe;
                    fs[n] = fe;
                } else {
                    simplex[n] = xr;
                    fs[n] = fr;
                }
                continue;
            }
            if fr < fs[n - 1] {
                simplex[n] = xr;
                fs[n] = fr;
                continue;
            }
            let (xc, fc) = if fr < fs[n] {
                let xc = along(ca * cc);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-cc);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < fs[n].min(fr) {
                simplex[n] = xc;
                fs[n] = fc;
                continue;
            }
            for i in 1..=n {
                let p: Vec<f64> = simplex[0]
                    .iter()
                    .zip(&simplex[i])
                    .map(|(b, v)| b + cs * (v - b))
                    .collect();
                fs[i] = f(&p);
                simplex[i] = p;
                evals += 1;
            }
        }
        let i0 = (0..=n).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap();
        let improved = fs[i0] < best_f - 1e-15 * (1.0 + best_f.abs());
        if fs[i0] <= best_f {
            best_f = fs[i0];
            best_x = simplex[i0].clone();
        }
        converged = round_converged;
        if diverged || evals >= o.max_evals || !improved {
            break;
        }
        step *= 0.1;
    }
    Minimum { x: best_x, value: best_f, iterations: evals, converged, diverged }
}

/// Golden-section search for a unimodal function on `[a, b]`.
pub fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes a convex function of one variable that may be `+inf` off an
/// interval: geometric scan around `x0`, then golden section between the
/// neighbours of the best sample.
pub fn minimize_convex_1d<F: Fn(f64) -> f64>(f: F, x0: f64, scale: f64) -> (f64, f64) {
    let mut pts = vec![x0];
    for j in -8..=24 {
        let h = scale * 2f64.powi(j);
        pts.push(x0 + h);
        pts.push(x0 - h);
    }
    pts.sort_by(f64::total_cmp);
    let vals: Vec<f64> = pts.iter().map(|&x| f(x)).collect();
    let i = (0..pts.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    if !vals[i].is_finite() {
        return (pts[i], vals[i]);
    }
    let lo = pts[i.saturating_sub(1)];
    let hi = pts[(i + 1).min(pts.len() - 1)];
    let (x, fx) = golden(&f, lo, hi, 1e-14);
    if fx <= vals[i] {
        (x, fx)
    } else {
        (pts[i], vals[i])
    }
}

/// Smoothing levels used for nonsmooth norms.
pub const SMOOTHING: [f64; 7] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8];

/// Continuation over smoothing levels: L-BFGS on `smooth(x, μ, grad)` for
/// decreasing `μ`, keeping the iterate with the smallest `exact` value, then a
/// Nelder–Mead polish on `exact` for small dimensions.
pub fn minimize_smoothed<S, E>(smooth: S, exact: E, x0: &[f64], max_iter: usize, target: Option<f64>) -> Minimum
where
    S: Fn(&[f64], f64, &mut [f64]) -> f64,
    E: Fn(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut best_x = x.clone();
    let mut best = exact(&x);
    let mut iters = 0;
    for &mu in &SMOOTHING {
        let o = LbfgsOptions { max_iter, ..Default::default() };
        let m = lbfgs(|p, g| smooth(p, mu, g), &x, &o);
        iters += m.iterations;
        x = m.x;
        let v = exact(&x);
        if v < best {
            best = v;
            best_x = x.clone();
        }
        if target.is_some_and(|t| best <= t) {
            break;
        }
    }
    if x0.len() <= 12 && !target.is_some_and(|t| best <= t) {
        let o = NelderMeadOptions { initial_step: 1e-3, max_evals: 4000, restarts: 2, ..Default::default() };
        let m = nelder_mead(&exact, &best_x, &o);
        iters += m.iterations;
        if m.value < best {
            best = m.value;
            best_x = m.x;
        }
    }
    Minimum { x: best_x, value: best, iterations: iters, converged: true, diverged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let m = lbfgs(f, &[-1.2, 1.0], &LbfgsOptions { max_iter: 2000, ..Default::default() });
        assert!(m.value < 1e-14, "{m:?}");
    }

    #[test]
    fn lbfgs_reports_divergence() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = -1.0;
            -x[0]
        };
        let o = LbfgsOptions { divergence: Some(1e6), max_iter: 10_000, ..Default::default() };
        assert!(lbfgs(f, &[0.0], &o).diverged);
    }

    #[test]
    fn nelder_mead_abs() {
        let f = |x: &[f64]| (x[0] - 1.0).abs() + 2.0 * (x[1] + 0.5).abs();
        let m = nelder_mead(f, &[3.0, 3.0], &NelderMeadOptions::default());
        assert!(m.value < 1e-9, "{m:?}");
    }

    #[test]
    fn convex_1d_with_domain() {
        let f = |x: f64| if (0.0..=1.0).contains(&x) { (x - 2.0).powi(2) } else { f64::INFINITY };
        let (x, v) = minimize_convex_1d(f, 0.5, 1.0);
        assert!((x - 1.0).abs() < 1e-9 && (v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn golden_quadratic() {
        let (x, _) = golden(|x| (x - 0.3).powi(2), -1.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-9);
    }
}
