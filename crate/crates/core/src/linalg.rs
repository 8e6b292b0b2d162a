//! Small dense linear algebra on `R^d` with a selectable vector norm.
//!
//! Dimensions are tiny (at most [`MAX_DIMENSION`]), so everything is plain
//! row-major `Vec<f64>` storage and exact induced-norm formulas where they
//! exist.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 8;

const POWER_ITERATION_CAP: usize = 10_000;
const POWER_ITERATION_RTOL: f64 = 1e-10;

/// Vector norm on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    /// The norm on functionals induced by this norm.
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::Linf,
            NormKind::L2 => NormKind::L2,
            NormKind::Linf => NormKind::L1,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::Linf => "Linf",
        }
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "l2" => Ok(NormKind::L2),
            "linf" | "l_inf" | "max" => Ok(NormKind::Linf),
            other => Err(Error::Config(format!("unknown norm '{other}'"))),
        }
    }
}

/// Duality pairing `<v*, v>`.
pub fn pairing(vstar: &[f64], v: &[f64]) -> f64 {
    vstar.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Square matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Matrix { dim, data }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut data = vec![0.0; dim * dim];
        for (i, d) in entries.iter().enumerate() {
            data[i * dim + i] = *d;
        }
        Matrix { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        Matrix { dim: d, data }
    }

    pub fn transpose(&self) -> Matrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.get(i, j);
            }
        }
        Matrix { dim: d, data }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `A^T v`, i.e. the adjoint acting on a functional.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j) * v[i]).sum())
            .collect()
    }

    /// Operator norm induced by `norm`.
    pub fn operator_norm(&self, norm: NormKind) -> Result<f64> {
        let d = self.dim;
        match norm {
            NormKind::L1 => Ok((0..d)
                .map(|j| (0..d).map(|i| self.get(i, j).abs()).sum::<f64>())
                .fold(0.0, f64::max)),
            NormKind::Linf => Ok((0..d)
                .map(|i| (0..d).map(|j| self.get(i, j).abs()).sum::<f64>())
                .fold(0.0, f64::max)),
            NormKind::L2 => {
                if self.is_diagonal() {
                    Ok((0..d).map(|i| self.get(i, i).abs()).fold(0.0, f64::max))
                } else {
                    self.spectral_norm()
                }
            }
        }
    }

    /// Largest singular value by power iteration on `A^T A`.
    fn spectral_norm(&self) -> Result<f64> {
        let d = self.dim;
        let gram = self.transpose().mul(self);
        // Irregular start vector so it is unlikely to be orthogonal to the
        // dominant eigenvector.
        let mut x: Vec<f64> = (0..d).map(|i| 1.0 + 0.618_033_988_75 * i as f64).collect();
        let n = NormKind::L2.norm(&x);
        x.iter_mut().for_each(|c| *c /= n);
        let mut lambda = 0.0_f64;
        for _ in 0..POWER_ITERATION_CAP {
            let y = gram.apply(&x);
            let ny = NormKind::L2.norm(&y);
            if ny == 0.0 {
                return Ok(0.0);
            }
            let next = pairing(&x, &y);
            x = y.into_iter().map(|c| c / ny).collect();
            if (next - lambda).abs() <= POWER_ITERATION_RTOL * next.abs() {
                return Ok(next.max(0.0).sqrt());
            }
            lambda = next;
        }
        Err(Error::ConvergenceFailure {
            iterations: POWER_ITERATION_CAP,
        })
    }
}
