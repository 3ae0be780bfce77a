//! Geometry of the closed convex set `K = R^m_+ x R^m` in which the pair
//! `(X1 - X2, X2)` must stay for the two solutions to remain ordered.

use serde::{Deserialize, Serialize};

/// A point `x = (x1, x2)` of `R^{2m}`; `x1` is the difference block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConePoint {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl ConePoint {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>) -> Self {
        assert_eq!(x1.len(), x2.len(), "blocks must have equal length");
        Self { x1, x2 }
    }

    /// Splits a packed `2m` vector.
    pub fn from_packed(x: &[f64]) -> Self {
        assert!(x.len().is_multiple_of(2), "packed point must have even length");
        let m = x.len() / 2;
        Self::new(x[..m].to_vec(), x[m..].to_vec())
    }

    pub fn packed(&self) -> Vec<f64> {
        let mut v = self.x1.clone();
        v.extend_from_slice(&self.x2);
        v
    }

    pub fn dim(&self) -> usize {
        self.x1.len()
    }

    pub fn in_cone(&self) -> bool {
        self.x1.iter().all(|v| *v >= 0.0)
    }
}

/// Diagonal of the a.e. Hessian of `d_K^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianDiag {
    pub diag: Vec<f64>,
    /// Set when some `x1_k == 0`, where the Hessian does not exist.
    pub boundary_flag: bool,
}

#[inline]
pub fn positive_part(v: f64) -> f64 {
    v.max(0.0)
}

#[inline]
pub fn negative_part(v: f64) -> f64 {
    (-v).max(0.0)
}

/// `Π_K(x) = ((x1)^+, x2)`.
pub fn project_onto_k(x: &ConePoint) -> ConePoint {
    ConePoint {
        x1: x.x1.iter().map(|v| positive_part(*v)).collect(),
        x2: x.x2.clone(),
    }
}

/// `d_K^2(x) = sum_k 1{x1_k < 0} (x1_k)^2`.
pub fn dist2_k(x: &ConePoint) -> f64 {
    x.x1.iter().filter(|v| **v < 0.0).map(|v| v * v).sum()
}

/// `∇ d_K^2(x) = 2 (x - Π_K x) = (-2 (x1)^-, 0)`, packed.
pub fn grad_dist2_k(x: &ConePoint) -> Vec<f64> {
    let m = x.dim();
    let mut g = vec![0.0; 2 * m];
    for (gk, v) in g.iter_mut().zip(&x.x1) {
        *gk = -2.0 * negative_part(*v);
    }
    g
}

/// Diagonal Hessian of `d_K^2`: `2` where `x1_k < 0`, else `0`. On the
/// boundary the one-sided value `0` is returned and the flag is raised.
pub fn hess_dist2_k(x: &ConePoint) -> HessianDiag {
    let m = x.dim();
    let mut diag = vec![0.0; 2 * m];
    for (d, v) in diag.iter_mut().zip(&x.x1) {
        if *v < 0.0 {
            *d = 2.0;
        }
    }
    HessianDiag {
        diag,
        boundary_flag: x.x1.contains(&0.0),
    }
}
