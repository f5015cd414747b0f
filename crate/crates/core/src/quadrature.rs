//! Gaussian quadrature on the reference triangle and the unit interval.
//!
//! Triangle rules of degree 1 and 2 are the classical centroid and
//! three-point interior rules. From degree 3 upwards the rules are built by
//! collapsing a tensor Gauss–Legendre rule onto the triangle (Duffy map), so
//! every point lies strictly inside the reference element.

use crate::error::{Error, Result};

/// Highest polynomial degree served by [`triangle_rule`] and [`edge_rule`].
pub const MAX_DEGREE: usize = 10;

/// Degree used for element matrices and the estimator.
pub const ASSEMBLY_DEGREE: usize = 4;

/// Degree used for integrals against exact (non-polynomial) data.
pub const EXACT_DATA_DEGREE: usize = 8;

/// Rule on the reference triangle `{(x, y) : x, y >= 0, x + y <= 1}`.
///
/// Points are stored as reference coordinates `(x, y)`; the barycentric
/// coordinates are `(1 - x - y, x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn barycentric(&self, q: usize) -> [f64; 3] {
        let [x, y] = self.points[q];
        [1.0 - x - y, x, y]
    }
}

/// Rule on the unit interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub degree: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(Error::QuadratureDegree {
            degree,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the three-term recurrence, started from the
/// Chebyshev-like asymptotic guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule on `[0, 1]` exact for polynomials up to `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    check_degree(degree)?;
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre(n);
    Ok(EdgeRule {
        degree,
        points: x.iter().map(|t| 0.5 * (1.0 + t)).collect(),
        weights: w.iter().map(|w| 0.5 * w).collect(),
    })
}

/// Rule on the reference triangle exact for polynomials up to `degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    check_degree(degree)?;
    let (points, weights) = match degree {
        1 => (vec![[1.0 / 3.0, 1.0 / 3.0]], vec![0.5]),
        2 => (
            vec![
                [1.0 / 6.0, 1.0 / 6.0],
                [2.0 / 3.0, 1.0 / 6.0],
                [1.0 / 6.0, 2.0 / 3.0],
            ],
            vec![1.0 / 6.0; 3],
        ),
        _ => collapsed_rule(degree),
    };
    Ok(TriangleRule {
        degree,
        points,
        weights,
    })
}

// x = u, y = v (1 - u); the Jacobian (1 - u) raises the u-degree by one.
fn collapsed_rule(degree: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    let n = (degree + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let nodes: Vec<f64> = x.iter().map(|t| 0.5 * (1.0 + t)).collect();
    let wts: Vec<f64> = w.iter().map(|w| 0.5 * w).collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in nodes.iter().zip(&wts) {
        for (v, wv) in nodes.iter().zip(&wts) {
            points.push([*u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    (points, weights)
}
