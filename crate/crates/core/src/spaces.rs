//! Finite element spaces: lowest-order Raviart–Thomas and BDM1 fluxes,
//! cellwise constant pressures and cellwise quadratic post-processed pressures.
//!
//! Flux shape functions are built per cell. A spanning set of the reference
//! space is pushed forward with the contravariant Piola map, and the dual
//! basis is taken with respect to moments of the normal trace against the
//! *globally* oriented edge normal. The local function attached to edge
//! moment `(e, k)` is therefore the restriction of the global basis function
//! with no sign flip, which makes normal continuity hold by construction.
//!
//! Edge moments:
//! * RT: `∫_e v·n ds` (total flux, so the normal trace is `1/|e|`),
//! * BDM1: `∫_e v·n q_k ds` for the orthonormal Legendre pair
//!   `q_0 = 1/√L`, `q_1 = √(3/L)(2s - 1)`, with `s ∈ [0, 1]` along the edge.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{EdgeTag, Mesh};
use crate::quadrature::{edge_rule, ASSEMBLY_DEGREE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    /// Lowest-order Raviart–Thomas: constant normal trace per edge.
    Rt1,
    /// Brezzi–Douglas–Marini of degree one: linear normal trace per edge.
    Bdm1,
}

impl ElementFamily {
    pub fn dofs_per_edge(self) -> usize {
        match self {
            ElementFamily::Rt1 => 1,
            ElementFamily::Bdm1 => 2,
        }
    }

    /// Polynomial degree of the normal trace on an edge.
    pub fn trace_degree(self) -> usize {
        match self {
            ElementFamily::Rt1 => 0,
            ElementFamily::Bdm1 => 1,
        }
    }

    pub fn local_dim(self) -> usize {
        3 * self.dofs_per_edge()
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementFamily::Rt1 => "rt1",
            ElementFamily::Bdm1 => "bdm1",
        }
    }
}

/// `k`-th member of the L²-orthonormal Legendre basis on an edge of length
/// `len`, at arc-length fraction `s`.
pub fn orthonormal_edge_poly(k: usize, s: f64, len: f64) -> f64 {
    match k {
        0 => 1.0 / len.sqrt(),
        1 => (3.0 / len).sqrt() * (2.0 * s - 1.0),
        2 => (5.0 / len).sqrt() * (6.0 * s * s - 6.0 * s + 1.0),
        _ => panic!("edge polynomial degree {k} not supported"),
    }
}

fn moment_weight(family: ElementFamily, k: usize, s: f64, len: f64) -> f64 {
    match family {
        ElementFamily::Rt1 => 1.0,
        ElementFamily::Bdm1 => orthonormal_edge_poly(k, s, len),
    }
}

/// Affine map from the reference triangle onto a mesh cell.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub coords: [[f64; 2]; 3],
    /// Columns are `p1 - p0` and `p2 - p0`.
    pub jacobian: [[f64; 2]; 2],
    pub det: f64,
    /// Gradients of the three barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(coords: [[f64; 2]; 3], cell: usize) -> Result<CellGeometry> {
        let [p0, p1, p2] = coords;
        let jacobian = [
            [p1[0] - p0[0], p2[0] - p0[0]],
            [p1[1] - p0[1], p2[1] - p0[1]],
        ];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let scale = (jacobian[0][0].abs() + jacobian[1][0].abs())
            * (jacobian[0][1].abs() + jacobian[1][1].abs());
        if det.is_nan() || det <= 1e-14 * scale {
            return Err(Error::DegenerateCell {
                cell,
                area: 0.5 * det,
            });
        }
        // ∇λ_i = outward-rotated opposite edge / (2 area)
        let mut grad_lambda = [[0.0; 2]; 3];
        for (i, g) in grad_lambda.iter_mut().enumerate() {
            let a = coords[(i + 1) % 3];
            let b = coords[(i + 2) % 3];
            *g = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Ok(CellGeometry {
            coords,
            jacobian,
            det,
            grad_lambda,
        })
    }

    pub fn of_cell(mesh: &Mesh, c: usize) -> Result<CellGeometry> {
        CellGeometry::new(mesh.cell_coords(c), c)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, xr: [f64; 2]) -> [f64; 2] {
        let [p0, ..] = self.coords;
        let j = &self.jacobian;
        [
            p0[0] + j[0][0] * xr[0] + j[0][1] * xr[1],
            p0[1] + j[1][0] * xr[0] + j[1][1] * xr[1],
        ]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let [p0, ..] = self.coords;
        let (dx, dy) = (x[0] - p0[0], x[1] - p0[1]);
        let j = &self.jacobian;
        [
            (j[1][1] * dx - j[0][1] * dy) / self.det,
            (-j[1][0] * dx + j[0][0] * dy) / self.det,
        ]
    }

    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let [u, v] = self.to_reference(x);
        [1.0 - u - v, u, v]
    }

    /// Contravariant Piola push-forward of a reference vector.
    pub fn piola(&self, v: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            (j[0][0] * v[0] + j[0][1] * v[1]) / self.det,
            (j[1][0] * v[0] + j[1][1] * v[1]) / self.det,
        ]
    }
}

/// Reference spanning set: values and divergence.
fn reference_span(family: ElementFamily, xr: [f64; 2]) -> Vec<[f64; 2]> {
    let [x, y] = xr;
    match family {
        ElementFamily::Rt1 => vec![[1.0, 0.0], [0.0, 1.0], [x, y]],
        ElementFamily::Bdm1 => vec![
            [1.0, 0.0],
            [0.0, 1.0],
            [x, 0.0],
            [y, 0.0],
            [0.0, x],
            [0.0, y],
        ],
    }
}

fn reference_span_div(family: ElementFamily) -> &'static [f64] {
    match family {
        ElementFamily::Rt1 => &[0.0, 0.0, 2.0],
        ElementFamily::Bdm1 => &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
    }
}

/// Flux shape functions on one cell.
///
/// Local function `i * dofs_per_edge + k` belongs to moment `k` of local
/// edge `i` (the edge opposite local vertex `i`).
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub family: ElementFamily,
    pub geometry: CellGeometry,
    /// `coeffs[(s, j)]`: weight of mapped spanning function `s` in shape function `j`.
    coeffs: DMatrix<f64>,
    divergence: Vec<f64>,
}

impl LocalBasis {
    pub fn new(mesh: &Mesh, c: usize, family: ElementFamily) -> Result<LocalBasis> {
        let geometry = CellGeometry::of_cell(mesh, c)?;
        let dim = family.local_dim();
        let dpe = family.dofs_per_edge();
        let rule = edge_rule(ASSEMBLY_DEGREE)?;
        let mut moments = DMatrix::<f64>::zeros(dim, dim);
        for (i, &e) in mesh.cell_edges(c).iter().enumerate() {
            let len = mesh.edge_length(e);
            let n = mesh.edge_normal(e);
            for (s, w) in rule.points.iter().zip(&rule.weights) {
                let x = mesh.edge_point(e, *s);
                let span = reference_span(family, geometry.to_reference(x));
                for k in 0..dpe {
                    let q = moment_weight(family, k, *s, len);
                    for (m, v) in span.iter().enumerate() {
                        let pv = geometry.piola(*v);
                        moments[(i * dpe + k, m)] += w * len * q * (pv[0] * n[0] + pv[1] * n[1]);
                    }
                }
            }
        }
        let coeffs = moments.try_inverse().ok_or(Error::DegenerateCell {
            cell: c,
            area: geometry.area(),
        })?;
        let span_div = reference_span_div(family);
        let divergence = (0..dim)
            .map(|j| (0..dim).map(|m| coeffs[(m, j)] * span_div[m]).sum::<f64>() / geometry.det)
            .collect();
        Ok(LocalBasis {
            family,
            geometry,
            coeffs,
            divergence,
        })
    }

    pub fn dim(&self) -> usize {
        self.family.local_dim()
    }

    /// Values of all shape functions at physical point `x`.
    pub fn values(&self, x: [f64; 2]) -> Vec<[f64; 2]> {
        let span: Vec<[f64; 2]> = reference_span(self.family, self.geometry.to_reference(x))
            .into_iter()
            .map(|v| self.geometry.piola(v))
            .collect();
        (0..self.dim())
            .map(|j| {
                let mut v = [0.0; 2];
                for (m, s) in span.iter().enumerate() {
                    v[0] += self.coeffs[(m, j)] * s[0];
                    v[1] += self.coeffs[(m, j)] * s[1];
                }
                v
            })
            .collect()
    }

    /// Divergence of shape function `j` (constant on the cell).
    pub fn divergence(&self, j: usize) -> f64 {
        self.divergence[j]
    }

    /// Evaluate `Σ_j coeffs[j] φ_j(x)`.
    pub fn evaluate(&self, local_coeffs: &[f64], x: [f64; 2]) -> [f64; 2] {
        let vals = self.values(x);
        let mut out = [0.0; 2];
        for (v, c) in vals.iter().zip(local_coeffs) {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }
}

/// Global numbering of flux and pressure unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub family: ElementFamily,
    pub n_flux: usize,
    pub n_pressure: usize,
    /// Flux unknowns fixed by Neumann data.
    pub constrained: Vec<bool>,
    cell_signs: Vec<[f64; 3]>,
    n_edges: usize,
    mesh_generation: usize,
}

impl DofMap {
    pub fn build(mesh: &Mesh, family: ElementFamily) -> DofMap {
        let dpe = family.dofs_per_edge();
        let n_flux = dpe * mesh.n_edges();
        let mut constrained = vec![false; n_flux];
        for e in mesh.edges_with_tag(EdgeTag::NeumannBoundary) {
            for k in 0..dpe {
                constrained[e * dpe + k] = true;
            }
        }
        let cell_signs = (0..mesh.n_cells())
            .map(|c| [0, 1, 2].map(|i| mesh.cell_edge_sign(c, i)))
            .collect();
        DofMap {
            family,
            n_flux,
            n_pressure: mesh.n_cells(),
            constrained,
            cell_signs,
            n_edges: mesh.n_edges(),
            mesh_generation: mesh.generation(),
        }
    }

    pub fn n_total(&self) -> usize {
        self.n_flux + self.n_pressure
    }

    pub fn flux_dof(&self, edge: usize, k: usize) -> usize {
        edge * self.family.dofs_per_edge() + k
    }

    /// Global flux unknowns of the cell, in local shape-function order.
    pub fn cell_flux_dofs(&self, mesh: &Mesh, c: usize) -> Vec<usize> {
        let dpe = self.family.dofs_per_edge();
        mesh.cell_edges(c)
            .iter()
            .flat_map(|&e| (0..dpe).map(move |k| e * dpe + k))
            .collect()
    }

    /// Index of cell `c`'s pressure unknown in the full system.
    pub fn pressure_dof(&self, c: usize) -> usize {
        self.n_flux + c
    }

    /// `+1` when the global normal of local edge `i` is the outward normal of `c`.
    pub fn orientation(&self, c: usize, i: usize) -> f64 {
        self.cell_signs[c][i]
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.n_edges != mesh.n_edges()
            || self.n_pressure != mesh.n_cells()
            || self.mesh_generation != mesh.generation()
        {
            return Err(Error::DofMapMismatch(format!(
                "dof map built for {} edges / {} cells (generation {}), mesh has {} / {} (generation {})",
                self.n_edges,
                self.n_pressure,
                self.mesh_generation,
                mesh.n_edges(),
                mesh.n_cells(),
                mesh.generation()
            )));
        }
        Ok(())
    }
}

/// Lagrange P2 basis on a cell: vertex functions first, then the midpoints
/// of the edges opposite vertices 0, 1, 2.
pub fn p2_values(lambda: [f64; 3]) -> [f64; 6] {
    let [l0, l1, l2] = lambda;
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l1 * l2,
        4.0 * l2 * l0,
        4.0 * l0 * l1,
    ]
}

pub fn p2_gradients(geom: &CellGeometry, lambda: [f64; 3]) -> [[f64; 2]; 6] {
    let g = &geom.grad_lambda;
    let vertex = |i: usize| {
        let f = 4.0 * lambda[i] - 1.0;
        [f * g[i][0], f * g[i][1]]
    };
    let edge = |i: usize, j: usize| {
        [
            4.0 * (lambda[i] * g[j][0] + lambda[j] * g[i][0]),
            4.0 * (lambda[i] * g[j][1] + lambda[j] * g[i][1]),
        ]
    };
    [
        vertex(0),
        vertex(1),
        vertex(2),
        edge(1, 2),
        edge(2, 0),
        edge(0, 1),
    ]
}

/// Physical coordinates of the six Lagrange nodes.
pub fn p2_nodes(geom: &CellGeometry) -> [[f64; 2]; 6] {
    let [a, b, c] = geom.coords;
    let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    [a, b, c, mid(b, c), mid(c, a), mid(a, b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ProblemGeometry;
    use crate::quadrature::triangle_rule;
    use std::collections::HashMap;

    fn reference_mesh() -> Mesh {
        let mut tags = HashMap::new();
        for pair in [[0, 1], [1, 2], [0, 2]] {
            tags.insert(pair, EdgeTag::DirichletBoundary);
        }
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            &tags,
            vec![0],
            0,
        )
        .unwrap()
    }

    fn two_cell_mesh() -> Mesh {
        let mut tags = HashMap::new();
        for pair in [[0, 1], [1, 3], [2, 3], [0, 2]] {
            tags.insert(pair, EdgeTag::DirichletBoundary);
        }
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![[3, 0, 1], [0, 3, 2]],
            &tags,
            vec![0, 1],
            0,
        )
        .unwrap()
    }

    // moments of the normal trace of φ_j on every edge, by direct quadrature
    fn moment_table(mesh: &Mesh, c: usize, basis: &LocalBasis) -> DMatrix<f64> {
        let family = basis.family;
        let dpe = family.dofs_per_edge();
        let dim = basis.dim();
        let rule = edge_rule(6).unwrap();
        let mut table = DMatrix::zeros(dim, dim);
        for (i, &e) in mesh.cell_edges(c).iter().enumerate() {
            let len = mesh.edge_length(e);
            let n = mesh.edge_normal(e);
            for (s, w) in rule.points.iter().zip(&rule.weights) {
                let vals = basis.values(mesh.edge_point(e, *s));
                for k in 0..dpe {
                    for (j, v) in vals.iter().enumerate() {
                        table[(i * dpe + k, j)] += w
                            * len
                            * moment_weight(family, k, *s, len)
                            * (v[0] * n[0] + v[1] * n[1]);
                    }
                }
            }
        }
        table
    }

    #[test]
    fn rt_reference_traces() {
        let mesh = reference_mesh();
        let basis = LocalBasis::new(&mesh, 0, ElementFamily::Rt1).unwrap();
        assert_eq!(basis.dim(), 3);
        for (i, &e) in mesh.cell_edges(0).iter().enumerate() {
            let len = mesh.edge_length(e);
            let n = mesh.edge_normal(e);
            for s in [0.0, 0.3, 1.0] {
                let vals = basis.values(mesh.edge_point(e, s));
                for (j, v) in vals.iter().enumerate() {
                    let trace = v[0] * n[0] + v[1] * n[1];
                    let expected = if i == j { 1.0 / len } else { 0.0 };
                    assert!((trace - expected).abs() < 1e-12, "edge {i} fn {j}: {trace}");
                }
            }
        }
    }

    #[test]
    fn bdm_moment_duality() {
        let mesh = Mesh::build_structured(4, ProblemGeometry::AllDirichlet)
            .unwrap()
            .refine(&[3, 9]);
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            for c in 0..mesh.n_cells() {
                let basis = LocalBasis::new(&mesh, c, family).unwrap();
                let table = moment_table(&mesh, c, &basis);
                let err = (table - DMatrix::<f64>::identity(basis.dim(), basis.dim()))
                    .abs()
                    .max();
                assert!(err < 1e-12, "family {family:?} cell {c}: {err}");
            }
        }
    }

    #[test]
    fn divergence_is_constant_and_matches_flux() {
        let mesh = Mesh::build_structured(4, ProblemGeometry::AllDirichlet)
            .unwrap()
            .refine(&[0, 7, 20]);
        let tri = triangle_rule(2).unwrap();
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            for c in 0..mesh.n_cells() {
                let basis = LocalBasis::new(&mesh, c, family).unwrap();
                // finite-difference divergence at interior points agrees with the constant
                for q in 0..tri.len() {
                    let x = basis.geometry.map(tri.points[q]);
                    let h = 1e-6;
                    let vxp = basis.values([x[0] + h, x[1]]);
                    let vxm = basis.values([x[0] - h, x[1]]);
                    let vyp = basis.values([x[0], x[1] + h]);
                    let vym = basis.values([x[0], x[1] - h]);
                    for j in 0..basis.dim() {
                        let fd = (vxp[j][0] - vxm[j][0] + vyp[j][1] - vym[j][1]) / (2.0 * h);
                        assert!((fd - basis.divergence(j)).abs() < 1e-5 * (1.0 + fd.abs()));
                    }
                }
                // ∫_T div φ = Σ_e ∫_e φ·n_out
                let erule = edge_rule(4).unwrap();
                for j in 0..basis.dim() {
                    let lhs = basis.divergence(j) * basis.geometry.area();
                    let mut rhs = 0.0;
                    for (i, &e) in mesh.cell_edges(c).iter().enumerate() {
                        let n = mesh.edge_normal(e);
                        let sgn = mesh.cell_edge_sign(c, i);
                        for (s, w) in erule.points.iter().zip(&erule.weights) {
                            let v = basis.values(mesh.edge_point(e, *s))[j];
                            rhs += w * mesh.edge_length(e) * sgn * (v[0] * n[0] + v[1] * n[1]);
                        }
                    }
                    assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
                }
            }
        }
    }

    #[test]
    fn dofmap_counts() {
        let mesh = two_cell_mesh();
        let bdm = DofMap::build(&mesh, ElementFamily::Bdm1);
        assert_eq!((bdm.n_flux, bdm.n_pressure, bdm.n_total()), (10, 2, 12));
        let rt = DofMap::build(&mesh, ElementFamily::Rt1);
        assert_eq!((rt.n_flux, rt.n_pressure), (5, 2));
        let structured = Mesh::build_structured(4, ProblemGeometry::AllDirichlet).unwrap();
        assert_eq!(DofMap::build(&structured, ElementFamily::Rt1).n_flux, 56);
    }

    #[test]
    fn dofmap_shared_edge_signs_and_constraints() {
        let mesh = Mesh::build_structured(8, ProblemGeometry::NeumannTopBottom).unwrap();
        let dofs = DofMap::build(&mesh, ElementFamily::Bdm1);
        let mut seen: HashMap<usize, Vec<f64>> = HashMap::new();
        for c in 0..mesh.n_cells() {
            for i in 0..3 {
                seen.entry(mesh.cell_edges(c)[i])
                    .or_default()
                    .push(dofs.orientation(c, i));
            }
        }
        for (e, signs) in seen {
            if signs.len() == 2 {
                assert_eq!(signs[0], -signs[1], "edge {e}");
            }
        }
        let n_constrained = dofs.constrained.iter().filter(|&&b| b).count();
        assert_eq!(n_constrained, 2 * 16);
        assert!(dofs.check_mesh(&mesh).is_ok());
        assert!(dofs.check_mesh(&mesh.refine(&[0])).is_err());
    }

    #[test]
    fn global_fields_have_continuous_normal_trace() {
        let mesh = Mesh::build_structured(4, ProblemGeometry::AllDirichlet)
            .unwrap()
            .refine(&[1, 12, 13]);
        let rule = edge_rule(4).unwrap();
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            let dofs = DofMap::build(&mesh, family);
            // deterministic pseudo-random coefficients
            let coeffs: Vec<f64> = (0..dofs.n_flux)
                .map(|i| ((i as f64 * 12.9898).sin() * 43758.5453).fract())
                .collect();
            let bases: Vec<LocalBasis> = (0..mesh.n_cells())
                .map(|c| LocalBasis::new(&mesh, c, family).unwrap())
                .collect();
            let local = |c: usize| -> Vec<f64> {
                dofs.cell_flux_dofs(&mesh, c)
                    .iter()
                    .map(|&d| coeffs[d])
                    .collect()
            };
            for e in 0..mesh.n_edges() {
                let [Some(p), Some(m)] = mesh.edge_cells(e) else {
                    continue;
                };
                let n = mesh.edge_normal(e);
                for s in &rule.points {
                    let x = mesh.edge_point(e, *s);
                    let up = bases[p].evaluate(&local(p), x);
                    let um = bases[m].evaluate(&local(m), x);
                    let jump = (up[0] - um[0]) * n[0] + (up[1] - um[1]) * n[1];
                    assert!(jump.abs() <= 1e-11, "edge {e}: {jump}");
                }
            }
        }
    }

    #[test]
    fn p2_partition_of_unity_and_reproduction() {
        let geom = CellGeometry::new([[0.1, 0.2], [0.7, 0.3], [0.2, 0.9]], 0).unwrap();
        let rule = triangle_rule(4).unwrap();
        let nodes = p2_nodes(&geom);
        let coeffs: Vec<f64> = nodes.iter().map(|p| p[0] * p[0]).collect();
        for q in 0..rule.len() {
            let lam = rule.barycentric(q);
            let vals = p2_values(lam);
            assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let x = geom.map(rule.points[q]);
            let interp: f64 = vals.iter().zip(&coeffs).map(|(v, c)| v * c).sum();
            assert!((interp - x[0] * x[0]).abs() < 1e-14);
            let grads = p2_gradients(&geom, lam);
            let gx: f64 = grads.iter().zip(&coeffs).map(|(g, c)| g[0] * c).sum();
            let gy: f64 = grads.iter().zip(&coeffs).map(|(g, c)| g[1] * c).sum();
            assert!((gx - 2.0 * x[0]).abs() < 1e-12 && gy.abs() < 1e-12);
        }
    }

    #[test]
    fn p2_stiffness_has_rank_five() {
        let geom = CellGeometry::new([[0.0, 0.0], [0.5, 0.1], [0.2, 0.4]], 0).unwrap();
        let rule = triangle_rule(4).unwrap();
        let mut k = DMatrix::<f64>::zeros(6, 6);
        for q in 0..rule.len() {
            let g = p2_gradients(&geom, rule.barycentric(q));
            let w = rule.weights[q] * geom.det;
            for i in 0..6 {
                for j in 0..6 {
                    k[(i, j)] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        let eig = k.symmetric_eigenvalues();
        let max = eig.amax();
        let rank = eig.iter().filter(|&&l| l > 1e-10 * max).count();
        assert_eq!(rank, 5);
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        assert!(CellGeometry::new([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], 4).is_err());
    }
}
