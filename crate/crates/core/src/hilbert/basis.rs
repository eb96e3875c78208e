//! Eigenbasis of the truncated position quadrature.
//!
//! The truncated `q̂` is a real symmetric tridiagonal (Jacobi) matrix whose
//! eigenvalues are Gauss–Hermite nodes. Exponentials `exp(i t q̂)` and
//! `exp(i t p̂)` built from this decomposition are exactly unitary on the
//! truncated space.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone)]
pub struct QuadratureEigenbasis {
    nodes: Vec<f64>,
    // columns are eigenvectors, ordered by ascending node
    vecs: Array2<f64>,
}

impl QuadratureEigenbasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "need at least two Fock levels",
            });
        }
        let mut q = DMatrix::<f64>::zeros(dim, dim);
        for n in 0..dim - 1 {
            let v = ((n + 1) as f64 / 2.0).sqrt();
            q[(n, n + 1)] = v;
            q[(n + 1, n)] = v;
        }
        let eig = SymmetricEigen::new(q);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let nodes = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = Array2::<f64>::zeros((dim, dim));
        for (col, &i) in order.iter().enumerate() {
            let sign = if eig.eigenvectors[(0, i)] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..dim {
                vecs[[r, col]] = sign * eig.eigenvectors[(r, i)];
            }
        }
        Ok(Self { nodes, vecs })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Eigenvalues of the truncated `q̂`, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `U f(x) Uᵀ` with `U` the eigenvector matrix.
    fn spectral(&self, f: impl Fn(f64) -> C64) -> Array2<C64> {
        let d = self.dim();
        let vals: Vec<C64> = self.nodes.iter().map(|&x| f(x)).collect();
        let mut scaled_re = self.vecs.clone();
        let mut scaled_im = self.vecs.clone();
        for (j, v) in vals.iter().enumerate() {
            scaled_re.column_mut(j).mapv_inplace(|u| u * v.re);
            scaled_im.column_mut(j).mapv_inplace(|u| u * v.im);
        }
        let ut = self.vecs.t();
        let re = scaled_re.dot(&ut);
        let im = scaled_im.dot(&ut);
        Array2::from_shape_fn((d, d), |(i, j)| C64::new(re[[i, j]], im[[i, j]]))
    }

    /// `exp(i t q̂)`: a momentum kick by `t`.
    pub fn exp_iq(&self, t: f64) -> Array2<C64> {
        self.spectral(|x| C64::from_polar(1.0, t * x))
    }

    /// `exp(i t p̂)`: a position shift by `-t`.
    ///
    /// Uses `p̂ = -Φ† q̂ Φ` with `Φ = diag(iⁿ)`.
    pub fn exp_ip(&self, t: f64) -> Array2<C64> {
        let mut m = self.exp_iq(-t);
        for ((r, c), z) in m.indexed_iter_mut() {
            *z *= i_pow(c as i64 - r as i64);
        }
        m
    }
}

/// `iᵏ` for any integer `k`.
fn i_pow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}
