//! Gauss-Hermite and Gauss-Legendre rules.
//!
//! Nodes are the eigenvalues of the symmetric Jacobi matrix of the
//! orthogonal polynomial family (Golub-Welsch), refined by a few Newton
//! steps on the three-term recurrence. Weights are evaluated from the
//! Christoffel function `1 / Σ_k p_k(x)^2` of the orthonormal polynomials,
//! which keeps full relative accuracy for the tiny tail weights that the
//! eigenvector formula loses.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Expectations under the standard normal law.
    GaussHermite,
    /// Integrals over a finite interval with unit weight.
    GaussLegendre,
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub kind: QuadratureKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn jacobi_eigenvalues(offdiag: &[f64]) -> Vec<f64> {
    let n = offdiag.len() + 1;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for (k, &b) in offdiag.iter().enumerate() {
        j[(k, k + 1)] = b;
        j[(k + 1, k)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(j).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    nodes
}

/// Makes a symmetric rule exactly symmetric around zero.
fn symmetrize(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Orthonormal probabilists' Hermite values p_0..p_n at x.
fn hermite_orthonormal(x: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let next = (x * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
        p.push(next);
    }
    p
}

/// `n`-point Gauss-Hermite rule normalized so that `Σ w_i f(x_i)`
/// approximates `E[f(X)]` for `X ~ N(0, 1)`.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if !(1..=100).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Hermite order must be in 1..=100, got {n}"
        )));
    }
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    let mut nodes = jacobi_eigenvalues(&offdiag);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let p = hermite_orthonormal(*x, n);
            let dp = (n as f64).sqrt() * p[n - 1];
            if dp != 0.0 {
                *x -= p[n] / dp;
            }
        }
        let p = hermite_orthonormal(*x, n - 1);
        weights.push(1.0 / p.iter().map(|v| v * v).sum::<f64>());
    }
    symmetrize(&mut nodes, &mut weights);
    Ok(QuadratureRule {
        kind: QuadratureKind::GaussHermite,
        nodes,
        weights,
    })
}

/// Legendre polynomial P_n and its derivative at x in (-1, 1).
fn legendre_with_derivative(x: f64, n: usize) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss-Legendre rule for `∫_a^b f(x) dx`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gauss-Legendre order must be positive".into()));
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Legendre interval requires a < b, got [{a}, {b}]"
        )));
    }
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let mut nodes = jacobi_eigenvalues(&offdiag);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = legendre_with_derivative(*x, n);
            if dp != 0.0 {
                *x -= p / dp;
            }
        }
        let (_, dp) = legendre_with_derivative(*x, n);
        weights.push(2.0 / ((1.0 - *x * *x) * dp * dp));
    }
    symmetrize(&mut nodes, &mut weights);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Ok(QuadratureRule {
        kind: QuadratureKind::GaussLegendre,
        nodes: nodes.iter().map(|x| mid + half * x).collect(),
        weights: weights.iter().map(|w| half * w).collect(),
    })
}
