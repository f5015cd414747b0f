//! Cellwise quadratic pressure reconstruction.
//!
//! On each cell `p*` solves
//!
//! ```text
//! (∇p*, ∇q)_T = -(u_h, ∇q)_T   for all q ∈ P2(T)
//! (p*, 1)_T   = (p_h, 1)_T
//! ```
//!
//! as a 7x7 saddle system (six Lagrange coefficients plus a multiplier for
//! the mean constraint).

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{triangle_rule, ASSEMBLY_DEGREE};
use crate::spaces::{p2_gradients, p2_values, CellGeometry, DofMap};
use crate::system::{DiscreteSolution, FluxField};

/// Residual tolerance of every local solve, relative to the local data.
pub const LOCAL_SOLVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PostPressure {
    /// Lagrange P2 coefficients per cell, node order as in [`p2_values`].
    pub coeffs: Vec<[f64; 6]>,
    /// Largest local condition-number estimate seen.
    pub max_condition: f64,
}

impl PostPressure {
    pub fn eval(&self, geom: &CellGeometry, c: usize, x: [f64; 2]) -> f64 {
        let phi = p2_values(geom.barycentric(x));
        phi.iter().zip(&self.coeffs[c]).map(|(a, b)| a * b).sum()
    }

    pub fn gradient(&self, geom: &CellGeometry, c: usize, x: [f64; 2]) -> [f64; 2] {
        let g = p2_gradients(geom, geom.barycentric(x));
        let mut out = [0.0; 2];
        for (gi, ci) in g.iter().zip(&self.coeffs[c]) {
            out[0] += ci * gi[0];
            out[1] += ci * gi[1];
        }
        out
    }

    /// Cell average of `p*`. For Lagrange P2 only the edge nodes carry mass.
    pub fn cell_mean(&self, c: usize) -> f64 {
        let k = &self.coeffs[c];
        (k[3] + k[4] + k[5]) / 3.0
    }
}

type Mat7 = SMatrix<f64, 7, 7>;
type Vec7 = SVector<f64, 7>;

pub fn postprocess(
    mesh: &Mesh,
    dofs: &DofMap,
    solution: &DiscreteSolution,
) -> Result<PostPressure> {
    let field = solution.flux_field(mesh, dofs)?;
    postprocess_with(mesh, &field, &solution.pressure)
}

/// Reconstruction from an already built flux evaluator.
pub fn postprocess_with(mesh: &Mesh, flux: &FluxField, pressure: &[f64]) -> Result<PostPressure> {
    if pressure.len() != mesh.n_cells() {
        return Err(Error::DofMapMismatch(format!(
            "{} pressure values for {} cells",
            pressure.len(),
            mesh.n_cells()
        )));
    }
    let rule = triangle_rule(ASSEMBLY_DEGREE)?;
    let mut coeffs = Vec::with_capacity(mesh.n_cells());
    let mut max_condition: f64 = 0.0;
    for (c, &mean) in pressure.iter().enumerate() {
        let geom = CellGeometry::of_cell(mesh, c)?;
        let mut k = Mat7::zeros();
        let mut b = Vec7::zeros();
        for q in 0..rule.len() {
            let lam = rule.barycentric(q);
            let x = geom.map(rule.points[q]);
            let w = rule.weights[q] * geom.det;
            let g = p2_gradients(&geom, lam);
            let phi = p2_values(lam);
            let u = flux.eval(c, x);
            for i in 0..6 {
                for j in 0..6 {
                    k[(i, j)] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
                b[i] -= w * (u[0] * g[i][0] + u[1] * g[i][1]);
                k[(i, 6)] += w * phi[i];
                k[(6, i)] += w * phi[i];
            }
        }
        b[6] = mean * geom.area();

        let lu = k.lu();
        let sol = lu.solve(&b).ok_or(Error::DegenerateCell {
            cell: c,
            area: geom.area(),
        })?;
        let resid = (k * sol - b).amax();
        let scale = b.amax().max(k.amax() * sol.amax());
        if resid > LOCAL_SOLVE_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Solver(format!(
                "post-processing on cell {c}: local residual {resid:e}"
            )));
        }
        let sv = k.singular_values();
        let cond = sv.max() / sv.min();
        max_condition = max_condition.max(cond);
        coeffs.push([sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]]);
    }
    log::debug!("post-processing: max local condition number {max_condition:.3e}");
    Ok(PostPressure {
        coeffs,
        max_condition,
    })
}
