//! Rectangular grids of points, used for probe sets and brute-force oracles.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtReal;
use crate::space::Point;

/// Cartesian product of per-axis sample values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Vec<f64>>,
}

fn axis(x0: f64, x1: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !x0.is_finite() || !x1.is_finite() {
        return Err(Error::InvalidArgument(format!("bad axis {x0}:{x1}:{step}")));
    }
    if x1 < x0 {
        return Err(Error::EmptyGrid);
    }
    let n = ((x1 - x0) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| x0 + i as f64 * step).collect())
}

impl Grid {
    /// Parses `"x0:x1:step,..."`, one triple per axis.
    pub fn parse(spec: &str) -> Result<Grid> {
        let mut axes = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let f: Vec<f64> = part
                .split(':')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("grid axis '{part}': {e}")))?;
            if f.len() != 3 {
                return Err(Error::InvalidArgument(format!("grid axis '{part}' needs x0:x1:step")));
            }
            axes.push(axis(f[0], f[1], f[2])?);
        }
        if axes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(Grid { axes })
    }

    /// Uniform box `[lo, hi]^dim` with the given step.
    pub fn cube(dim: usize, lo: f64, hi: f64, step: f64) -> Result<Grid> {
        let a = axis(lo, hi, step)?;
        Ok(Grid { axes: vec![a; dim] })
    }

    /// Centered lattice with `side` points per axis spaced by `step`.
    pub fn lattice(dim: usize, side: usize, step: f64) -> Grid {
        let h = (side as f64 - 1.0) / 2.0;
        let a: Vec<f64> = (0..side).map(|i| (i as f64 - h) * step).collect();
        Grid { axes: vec![a; dim] }
    }

    /// Default probe lattice: side 5, step 0.5.
    pub fn default_probes(dim: usize) -> Grid {
        Grid::lattice(dim, 5, 0.5)
    }

    /// Repeats a single-axis grid to `dim` axes; otherwise checks the dimension.
    pub fn broadcast(self, dim: usize) -> Result<Grid> {
        match self.axes.len() {
            n if n == dim => Ok(self),
            1 => Ok(Grid { axes: vec![self.axes[0].clone(); dim] }),
            n => Err(Error::DimensionMismatch { expected: dim, got: n }),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, first axis varying slowest.
    pub fn points(&self) -> Vec<Point> {
        let d = self.dim();
        let total = self.len();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            out.push(DVector::from_iterator(d, (0..d).map(|k| self.axes[k][idx[k]])));
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < self.axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    /// Largest spacing along any axis.
    pub fn max_step(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }
}

/// A function known only through its values on finitely many points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    #[serde(with = "crate::serde_mat::vectors")]
    pub points: Vec<Point>,
    pub values: Vec<ExtReal>,
}

impl GridFunction {
    pub fn tabulate<F: Fn(&Point) -> ExtReal>(points: Vec<Point>, f: F) -> GridFunction {
        let values = points.iter().map(&f).collect();
        GridFunction { points, values }
    }

    /// `*g(x) ≈ max over the grid of <x, x*> - g(x*)`, a lower bound of the
    /// preconjugate.
    pub fn preconjugate(&self, x: &Point) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for (p, v) in self.points.iter().zip(&self.values) {
            if let ExtReal::Finite(v) = v {
                best = best.max(x.dot(p) - v);
            }
        }
        if best == f64::NEG_INFINITY {
            Err(Error::EmptyGrid)
        } else {
            Ok(best)
        }
    }
}
