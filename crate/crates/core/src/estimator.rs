//! Post-processed-pressure error estimator.
//!
//! ```text
//! η_T = ‖u_h + ∇p*‖_{0,T}
//! η_E = h_E^{-1/2} ‖[p*]‖_{0,E}            interior edges off the fault
//! η_E = α^{-1/2} ‖(I - P_E^m)[p*]‖_{0,E}   fault edges, m = trace degree
//! osc_T = h_T ‖f - P_h f‖_{0,T}
//! ```
//!
//! Boundary edges do not contribute. Jumps are `p*(plus) - p*(minus)` with
//! the global edge orientation; only their norms and means enter here.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::{EdgeTag, Mesh};
use crate::postprocess::PostPressure;
use crate::problems::ProblemData;
use crate::quadrature::{edge_rule, triangle_rule, EdgeRule, ASSEMBLY_DEGREE, EXACT_DATA_DEGREE};
use crate::spaces::{orthonormal_edge_poly, CellGeometry, ElementFamily};
use crate::system::FluxField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub eta_cells: Vec<f64>,
    /// Zero on boundary edges.
    pub eta_edges: Vec<f64>,
    pub osc_cells: Vec<f64>,
    pub eta_total: f64,
    pub osc_total: f64,
    /// Projection degree used on fault edges.
    pub fault_projection_degree: usize,
}

impl EstimatorReport {
    pub fn from_parts(
        eta_cells: Vec<f64>,
        eta_edges: Vec<f64>,
        osc_cells: Vec<f64>,
        fault_projection_degree: usize,
    ) -> EstimatorReport {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        let eta_total = (sq(&eta_cells) + sq(&eta_edges)).sqrt();
        let osc_total = sq(&osc_cells).sqrt();
        EstimatorReport {
            eta_cells,
            eta_edges,
            osc_cells,
            eta_total,
            osc_total,
            fault_projection_degree,
        }
    }
}

/// Geometry of every cell, computed once.
pub fn cell_geometries(mesh: &Mesh) -> Result<Vec<CellGeometry>> {
    (0..mesh.n_cells())
        .map(|c| CellGeometry::of_cell(mesh, c))
        .collect()
}

pub fn eta_cell(
    geom: &CellGeometry,
    c: usize,
    flux: &FluxField,
    post: &PostPressure,
) -> Result<f64> {
    let rule = triangle_rule(ASSEMBLY_DEGREE)?;
    let mut sq = 0.0;
    for q in 0..rule.len() {
        let x = geom.map(rule.points[q]);
        let u = flux.eval(c, x);
        let g = post.gradient(geom, c, x);
        sq += rule.weights[q] * geom.det * ((u[0] + g[0]).powi(2) + (u[1] + g[1]).powi(2));
    }
    Ok(sq.sqrt())
}

/// `[p*]` at fraction `s` along edge `e`; zero on boundary edges.
pub fn jump(mesh: &Mesh, geoms: &[CellGeometry], post: &PostPressure, e: usize, s: f64) -> f64 {
    let [Some(p), Some(m)] = mesh.edge_cells(e) else {
        return 0.0;
    };
    let x = mesh.edge_point(e, s);
    post.eval(&geoms[p], p, x) - post.eval(&geoms[m], m, x)
}

fn projection_residual_sq(rule: &EdgeRule, len: f64, values: &[f64], degree: Option<usize>) -> f64 {
    let coeffs: Vec<f64> = match degree {
        None => Vec::new(),
        Some(m) => (0..=m)
            .map(|k| {
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .zip(values)
                    .map(|((s, w), v)| w * len * v * orthonormal_edge_poly(k, *s, len))
                    .sum()
            })
            .collect(),
    };
    rule.points
        .iter()
        .zip(&rule.weights)
        .zip(values)
        .map(|((s, w), v)| {
            let proj: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, ck)| ck * orthonormal_edge_poly(k, *s, len))
                .sum();
            w * len * (v - proj).powi(2)
        })
        .sum()
}

pub fn eta_edge(
    mesh: &Mesh,
    geoms: &[CellGeometry],
    post: &PostPressure,
    e: usize,
    alpha: f64,
    family: ElementFamily,
) -> Result<f64> {
    let rule = edge_rule(ASSEMBLY_DEGREE)?;
    let len = mesh.edge_length(e);
    let values = || -> Vec<f64> {
        rule.points
            .iter()
            .map(|s| jump(mesh, geoms, post, e, *s))
            .collect()
    };
    Ok(match mesh.edge_tag(e) {
        EdgeTag::Interior => (projection_residual_sq(&rule, len, &values(), None) / len).sqrt(),
        EdgeTag::InterfaceGamma => {
            (projection_residual_sq(&rule, len, &values(), Some(family.trace_degree())) / alpha)
                .sqrt()
        }
        EdgeTag::DirichletBoundary | EdgeTag::NeumannBoundary => 0.0,
    })
}

pub fn oscillation(mesh: &Mesh, geom: &CellGeometry, c: usize, data: &ProblemData) -> Result<f64> {
    let rule = triangle_rule(EXACT_DATA_DEGREE)?;
    let inside = mesh.centroid(c);
    let vals: Vec<f64> = (0..rule.len())
        .map(|q| (data.source)(geom.map(rule.points[q]), inside))
        .collect();
    let mean = vals
        .iter()
        .zip(&rule.weights)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        * 2.0;
    let sq: f64 = vals
        .iter()
        .zip(&rule.weights)
        .map(|(v, w)| w * geom.det * (v - mean).powi(2))
        .sum();
    Ok(mesh.diameter(c) * sq.sqrt())
}

pub fn estimate(
    mesh: &Mesh,
    flux: &FluxField,
    post: &PostPressure,
    data: &ProblemData,
    family: ElementFamily,
) -> Result<EstimatorReport> {
    let geoms = cell_geometries(mesh)?;
    let mut eta_cells = Vec::with_capacity(mesh.n_cells());
    let mut osc_cells = Vec::with_capacity(mesh.n_cells());
    for (c, geom) in geoms.iter().enumerate() {
        eta_cells.push(eta_cell(geom, c, flux, post)?);
        osc_cells.push(oscillation(mesh, geom, c, data)?);
    }
    let eta_edges = (0..mesh.n_edges())
        .map(|e| eta_edge(mesh, &geoms, post, e, data.alpha, family))
        .collect::<Result<Vec<f64>>>()?;
    Ok(EstimatorReport::from_parts(
        eta_cells,
        eta_edges,
        osc_cells,
        family.trace_degree(),
    ))
}

/// `sqrt(η² + osc²/π²) / ‖u - u_h‖_0`; `None` when the error vanishes.
pub fn effectivity(report: &EstimatorReport, flux_error: f64) -> Option<f64> {
    if flux_error.is_nan() || flux_error <= 0.0 {
        return None;
    }
    let pi2 = std::f64::consts::PI.powi(2);
    Some((report.eta_total.powi(2) + report.osc_total.powi(2) / pi2).sqrt() / flux_error)
}

/// Residuals of the mean-value identities satisfied by `p*`, each divided
/// by `max|p*| h_E` (plus one, for vanishing pressures).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpLemmaResiduals {
    /// `max |∫_E [p*]|` over interior edges off the fault.
    pub interior: f64,
    /// `max |∫_E (α u_h·n - [p*])|` over fault edges.
    pub fault: f64,
    /// `max |(I - P_E^m)(α u_h·n)|` at fault quadrature points.
    pub fault_trace_projection: f64,
}

pub fn jump_lemma_residuals(
    mesh: &Mesh,
    flux: &FluxField,
    post: &PostPressure,
    alpha: f64,
    family: ElementFamily,
) -> Result<JumpLemmaResiduals> {
    let geoms = cell_geometries(mesh)?;
    let rule = edge_rule(ASSEMBLY_DEGREE)?;
    let pmax = post
        .coeffs
        .iter()
        .flat_map(|k| k.iter())
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let mut out = JumpLemmaResiduals {
        interior: 0.0,
        fault: 0.0,
        fault_trace_projection: 0.0,
    };
    for e in 0..mesh.n_edges() {
        let tag = mesh.edge_tag(e);
        if tag.is_boundary() {
            continue;
        }
        let len = mesh.edge_length(e);
        let scale = (1.0 + pmax) * len;
        let n = mesh.edge_normal(e);
        let plus = mesh.edge_cells(e)[0].expect("interior edge without plus cell");
        let mut integral = 0.0;
        let mut traces = Vec::with_capacity(rule.len());
        for (s, w) in rule.points.iter().zip(&rule.weights) {
            let j = jump(mesh, &geoms, post, e, *s);
            if tag == EdgeTag::InterfaceGamma {
                let u = flux.eval(plus, mesh.edge_point(e, *s));
                let un = alpha * (u[0] * n[0] + u[1] * n[1]);
                traces.push(un);
                integral += w * len * (un - j);
            } else {
                integral += w * len * j;
            }
        }
        let r = integral.abs() / scale;
        if tag == EdgeTag::InterfaceGamma {
            out.fault = out.fault.max(r);
            let m = family.trace_degree();
            let rsq = projection_residual_sq(&rule, len, &traces, Some(m));
            let tmax = traces.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            out.fault_trace_projection = out
                .fault_trace_projection
                .max((rsq / len).sqrt() / (1.0 + tmax));
        } else {
            out.interior = out.interior.max(r);
        }
    }
    Ok(out)
}
