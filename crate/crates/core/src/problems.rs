//! Benchmark problems and exact-error norms.
//!
//! Data and exact fields are evaluated as `field(x, inside)`, where `inside`
//! is any point of the cell (or the cell on the `plus` side of an edge) the
//! evaluation belongs to. Piecewise definitions dispatch on `inside`, so
//! points on the lines `x = 1/2`, `y = 1/4`, `y = 3/4` are never ambiguous.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{EdgeTag, Mesh, ProblemGeometry, FAULT_X, FAULT_Y};
use crate::postprocess::PostPressure;
use crate::quadrature::{edge_rule, triangle_rule, EXACT_DATA_DEGREE};
use crate::spaces::{CellGeometry, DofMap};
use crate::system::DiscreteSolution;

pub type ScalarField = Arc<dyn Fn([f64; 2], [f64; 2]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn([f64; 2], [f64; 2]) -> [f64; 2] + Send + Sync>;

/// Coefficients and data of the fault problem.
#[derive(Clone)]
pub struct ProblemData {
    /// Robin coefficient of the fault condition `α u·n = [p]`.
    pub alpha: f64,
    /// Uniform scalar permeability.
    pub kappa: f64,
    pub source: ScalarField,
    /// Pressure on Dirichlet edges.
    pub dirichlet: ScalarField,
    /// Outward normal flux on Neumann edges.
    pub neumann: ScalarField,
}

impl ProblemData {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidKappa(self.kappa));
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> ProblemData {
        self.alpha = alpha;
        self
    }
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("alpha", &self.alpha)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub pressure: ScalarField,
    pub flux: VectorField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Manufactured,
    LinearFault,
    FaultFlow,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Manufactured => "manufactured",
            ProblemId::LinearFault => "linear-fault",
            ProblemId::FaultFlow => "fault-flow",
        }
    }

    pub fn parse(s: &str) -> Result<ProblemId> {
        match s {
            "manufactured" => Ok(ProblemId::Manufactured),
            "linear-fault" => Ok(ProblemId::LinearFault),
            "fault-flow" => Ok(ProblemId::FaultFlow),
            _ => Err(Error::Config(format!("unknown problem id `{s}`"))),
        }
    }

    /// Default α: forced for `manufactured`, free for the others.
    pub fn default_alpha(self) -> f64 {
        match self {
            ProblemId::Manufactured => MANUFACTURED_ALPHA,
            ProblemId::LinearFault => 1.0,
            ProblemId::FaultFlow => 10.0,
        }
    }

    pub fn definition(self, alpha: f64) -> Result<ProblemDefinition> {
        match self {
            ProblemId::Manufactured => Ok(manufactured()),
            ProblemId::LinearFault => linear_fault(alpha),
            ProblemId::FaultFlow => fault_flow(alpha),
        }
    }
}

#[derive(Clone)]
pub struct ProblemDefinition {
    pub id: ProblemId,
    pub geometry: ProblemGeometry,
    pub data: ProblemData,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("id", &self.id)
            .field("geometry", &self.geometry)
            .field("data", &self.data)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// The only α for which the manufactured pressure satisfies the fault
/// condition: `[p] = √2 c(y)` and `u·n = (3π√2/4) c(y)`.
pub const MANUFACTURED_ALPHA: f64 = 4.0 / (3.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Outside,
    Left,
    Right,
}

fn region(inside: [f64; 2]) -> Region {
    let [x, y] = inside;
    if y <= FAULT_Y[0] || y >= FAULT_Y[1] {
        Region::Outside
    } else if x < FAULT_X {
        Region::Left
    } else {
        Region::Right
    }
}

// p = s(x) c(y) in the strip; c = cos²θ, θ = 2π(y - 1/2).
fn strip_factors(x: f64, r: Region) -> (f64, f64) {
    let s = match r {
        Region::Left => (1.5 * PI * x).sin(),
        Region::Right => -(1.5 * PI * (1.0 - x)).sin(),
        Region::Outside => 0.0,
    };
    let ds = match r {
        Region::Left => 1.5 * PI * (1.5 * PI * x).cos(),
        Region::Right => 1.5 * PI * (1.5 * PI * (1.0 - x)).cos(),
        Region::Outside => 0.0,
    };
    (s, ds)
}

fn manufactured_pressure(x: [f64; 2], inside: [f64; 2]) -> f64 {
    let r = region(inside);
    let (s, _) = strip_factors(x[0], r);
    let theta = 2.0 * PI * (x[1] - 0.5);
    s * theta.cos().powi(2)
}

fn manufactured_flux(x: [f64; 2], inside: [f64; 2]) -> [f64; 2] {
    let r = region(inside);
    let (s, ds) = strip_factors(x[0], r);
    let theta = 2.0 * PI * (x[1] - 0.5);
    // c' = -2π sin 2θ
    [
        -ds * theta.cos().powi(2),
        2.0 * PI * s * (2.0 * theta).sin(),
    ]
}

fn manufactured_source(x: [f64; 2], inside: [f64; 2]) -> f64 {
    let r = region(inside);
    let (s, _) = strip_factors(x[0], r);
    let theta = 2.0 * PI * (x[1] - 0.5);
    // s'' = -(9π²/4) s and c'' = -8π² cos 2θ in both strip halves
    2.25 * PI * PI * s * theta.cos().powi(2) + 8.0 * PI * PI * s * (2.0 * theta).cos()
}

/// Smooth-per-region pressure with a fault jump, all-Dirichlet `g_D = 0`.
pub fn manufactured() -> ProblemDefinition {
    ProblemDefinition {
        id: ProblemId::Manufactured,
        geometry: ProblemGeometry::AllDirichlet,
        data: ProblemData {
            alpha: MANUFACTURED_ALPHA,
            kappa: 1.0,
            source: Arc::new(manufactured_source),
            dirichlet: Arc::new(|_, _| 0.0),
            neumann: Arc::new(|_, _| 0.0),
        },
        exact: Some(ExactSolution {
            pressure: Arc::new(manufactured_pressure),
            flux: Arc::new(manufactured_flux),
        }),
    }
}

/// Uniform flow `u = (1, 0)` through a fault cutting the whole square; the
/// pressure drops by `alpha` across it. The exact flux lies in both flux spaces.
pub fn linear_fault(alpha: f64) -> Result<ProblemDefinition> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let pressure: ScalarField = Arc::new(move |x: [f64; 2], inside: [f64; 2]| {
        if inside[0] < FAULT_X {
            -x[0]
        } else {
            -x[0] - alpha
        }
    });
    Ok(ProblemDefinition {
        id: ProblemId::LinearFault,
        geometry: ProblemGeometry::ThroughFault,
        data: ProblemData {
            alpha,
            kappa: 1.0,
            source: Arc::new(|_, _| 0.0),
            dirichlet: pressure.clone(),
            neumann: Arc::new(|_, _| 0.0),
        },
        exact: Some(ExactSolution {
            pressure,
            flux: Arc::new(|_, _| [1.0, 0.0]),
        }),
    })
}

/// Unit source, no-flux top and bottom, `p = 0` left and `p = -1` right.
pub fn fault_flow(alpha: f64) -> Result<ProblemDefinition> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(ProblemDefinition {
        id: ProblemId::FaultFlow,
        geometry: ProblemGeometry::NeumannTopBottom,
        data: ProblemData {
            alpha,
            kappa: 1.0,
            source: Arc::new(|_, _| 1.0),
            dirichlet: Arc::new(|x: [f64; 2], _| if x[0] < 0.5 { 0.0 } else { -1.0 }),
            neumann: Arc::new(|_, _| 0.0),
        },
        exact: None,
    })
}

/// Errors against an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorNorms {
    /// `‖u - u_h‖_0`
    pub flux_l2: f64,
    /// `‖p - p_h*‖_0`
    pub postpressure_l2: f64,
    /// `‖p - p_h‖_0`
    pub pressure_l2: f64,
    /// Flux error in the fault-weighted norm.
    pub tnorm: f64,
    /// Cellwise `‖u - u_h‖_{0,T}`.
    pub flux_l2_cells: Vec<f64>,
}

pub fn error_norms(
    mesh: &Mesh,
    dofs: &DofMap,
    solution: &DiscreteSolution,
    post: &PostPressure,
    problem: &ProblemDefinition,
) -> Result<ErrorNorms> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::NoExactSolution(problem.id.name().to_string()))?;
    let flux = solution.flux_field(mesh, dofs)?;
    let rule = triangle_rule(EXACT_DATA_DEGREE)?;
    let mut flux_sq = 0.0;
    let mut post_sq = 0.0;
    let mut pres_sq = 0.0;
    let mut flux_cells = Vec::with_capacity(mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let geom = CellGeometry::of_cell(mesh, c)?;
        let inside = mesh.centroid(c);
        let mut cell_sq = 0.0;
        for q in 0..rule.len() {
            let x = geom.map(rule.points[q]);
            let w = rule.weights[q] * geom.det;
            let u = (exact.flux)(x, inside);
            let uh = flux.eval(c, x);
            cell_sq += w * ((u[0] - uh[0]).powi(2) + (u[1] - uh[1]).powi(2));
            let p = (exact.pressure)(x, inside);
            post_sq += w * (p - post.eval(&geom, c, x)).powi(2);
            pres_sq += w * (p - solution.pressure[c]).powi(2);
        }
        flux_sq += cell_sq;
        flux_cells.push(cell_sq.sqrt());
    }
    let erule = edge_rule(EXACT_DATA_DEGREE)?;
    let mut fault_sq = 0.0;
    for e in mesh.edges_with_tag(EdgeTag::InterfaceGamma) {
        let plus = mesh.edge_cells(e)[0].expect("fault edge without plus cell");
        let inside = mesh.centroid(plus);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        for (s, w) in erule.points.iter().zip(&erule.weights) {
            let x = mesh.edge_point(e, *s);
            let u = (exact.flux)(x, inside);
            let uh = flux.eval(plus, x);
            let d = (u[0] - uh[0]) * n[0] + (u[1] - uh[1]) * n[1];
            fault_sq += w * len * problem.data.alpha * d * d;
        }
    }
    Ok(ErrorNorms {
        flux_l2: flux_sq.sqrt(),
        postpressure_l2: post_sq.sqrt(),
        pressure_l2: pres_sq.sqrt(),
        tnorm: (flux_sq / problem.data.kappa + fault_sq).sqrt(),
        flux_l2_cells: flux_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_point_values() {
        let p = manufactured().exact.unwrap().pressure;
        let x = [0.25, 0.5];
        assert!((p(x, x) - (3.0 * PI / 8.0).sin()).abs() < 1e-15);
        assert!((p(x, x) - 0.923_879_5).abs() < 1e-7);
        for i in 0..=10 {
            let x = [i as f64 / 10.0, 0.1];
            assert_eq!(p(x, x), 0.0);
        }
    }

    #[test]
    fn manufactured_alpha_satisfies_fault_condition() {
        let def = manufactured();
        let exact = def.exact.unwrap();
        assert!((def.data.alpha - 0.424_413_2).abs() < 1e-7);
        for i in 1..=20 {
            let y = 0.25 + 0.5 * i as f64 / 21.0;
            let x = [0.5, y];
            let (left, right) = ([0.4, y], [0.6, y]);
            let jump = (exact.pressure)(x, left) - (exact.pressure)(x, right);
            let un = (exact.flux)(x, left)[0];
            let c2 = (2.0 * PI * (y - 0.5)).cos().powi(2);
            // symbolic oracle
            assert!((jump - 2f64.sqrt() * c2).abs() < 1e-12);
            assert!((un - 3.0 * PI * 2f64.sqrt() / 4.0 * c2).abs() < 1e-12);
            assert!((def.data.alpha * un - jump).abs() < 1e-10);
            // normal flux continuous across the fault
            assert!(((exact.flux)(x, right)[0] - un).abs() < 1e-10);
        }
    }

    #[test]
    fn manufactured_flux_continuous_across_strip_lines() {
        let u = manufactured().exact.unwrap().flux;
        for i in 0..=20 {
            let x0 = i as f64 / 20.0;
            for y in [0.25, 0.75] {
                let x = [x0, y];
                let inner = u(x, [x0.clamp(0.01, 0.99), 0.5]);
                let outer = u(x, [x0, if y < 0.5 { 0.1 } else { 0.9 }]);
                assert!((inner[1] - outer[1]).abs() < 1e-10);
                assert!(inner[1].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn manufactured_source_matches_finite_differences() {
        let def = manufactured();
        let exact = def.exact.unwrap();
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let h = 1e-4;
        let mut checked = 0;
        while checked < 100 {
            let x = [next(), next()];
            // stay clear of the kinks
            if (x[0] - 0.5).abs() < 2.0 * h
                || (x[1] - 0.25).abs() < 2.0 * h
                || (x[1] - 0.75).abs() < 2.0 * h
            {
                continue;
            }
            let u = |p: [f64; 2]| (exact.flux)(p, x);
            let div = (u([x[0] + h, x[1]])[0] - u([x[0] - h, x[1]])[0]) / (2.0 * h)
                + (u([x[0], x[1] + h])[1] - u([x[0], x[1] - h])[1]) / (2.0 * h);
            let f = (def.data.source)(x, x);
            assert!(
                (div - f).abs() <= 1e-6 * f.abs().max(1.0),
                "{x:?}: {div} vs {f}"
            );
            // u = -∇p as well
            let p = |q: [f64; 2]| (exact.pressure)(q, x);
            let gx = (p([x[0] + h, x[1]]) - p([x[0] - h, x[1]])) / (2.0 * h);
            let gy = (p([x[0], x[1] + h]) - p([x[0], x[1] - h])) / (2.0 * h);
            let ux = u(x);
            // central-difference truncation: h²/6 · (4π)³
            let tol = h * h / 6.0 * (4.0 * std::f64::consts::PI).powi(3);
            assert!(
                (ux[0] + gx).abs() < tol && (ux[1] + gy).abs() < tol,
                "{x:?}: {ux:?} vs {gx} {gy}"
            );
            checked += 1;
        }
    }

    #[test]
    fn manufactured_boundary_data_is_zero() {
        let p = manufactured().exact.unwrap().pressure;
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            for x in [[0.0, t], [1.0, t], [t, 0.0], [t, 1.0]] {
                assert!(p(x, x).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn linear_fault_interface_residual() {
        for alpha in [0.5, 1.0, MANUFACTURED_ALPHA, 10.0] {
            let def = linear_fault(alpha).unwrap();
            let exact = def.exact.unwrap();
            for y in [0.0, 0.3, 0.9] {
                let x = [0.5, y];
                let jump = (exact.pressure)(x, [0.4, y]) - (exact.pressure)(x, [0.6, y]);
                assert_eq!(alpha * (exact.flux)(x, x)[0] - jump, 0.0);
                assert_eq!((def.data.source)(x, x), 0.0);
            }
        }
        assert!(linear_fault(0.0).is_err());
        assert!(linear_fault(-1.0).is_err());
    }

    #[test]
    fn fault_flow_data() {
        let def = fault_flow(100.0).unwrap();
        assert!(def.exact.is_none());
        assert_eq!(def.geometry, ProblemGeometry::NeumannTopBottom);
        assert_eq!((def.data.source)([0.3, 0.3], [0.3, 0.3]), 1.0);
        assert_eq!((def.data.dirichlet)([0.0, 0.3], [0.1, 0.3]), 0.0);
        assert_eq!((def.data.dirichlet)([1.0, 0.3], [0.9, 0.3]), -1.0);
        assert!(fault_flow(f64::INFINITY).is_err());
    }

    #[test]
    fn problem_ids_round_trip() {
        for id in [
            ProblemId::Manufactured,
            ProblemId::LinearFault,
            ProblemId::FaultFlow,
        ] {
            assert_eq!(ProblemId::parse(id.name()).unwrap(), id);
        }
        assert!(ProblemId::parse("poisson").is_err());
    }
}
