//! Assembly and solution of the mixed saddle-point system.
//!
//! The stored matrix is `[[A, Bᵀ], [B, 0]]` with
//!
//! * `A_ij = (κ⁻¹ φ_j, φ_i) + Σ_{E ⊂ Γ} α ∫_E (φ_j·n)(φ_i·n)`,
//! * `B_Tj = (1_T, div φ_j)`.
//!
//! The pressure block unknown is `-p_h`, which keeps the matrix symmetric
//! while the pressure load stays `(f, 1_T)`. Dirichlet pressure enters the
//! flux load as `-∫ g_D v·n`; Neumann flux data fixes edge moments and is
//! eliminated symmetrically.

use std::io::Write;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::mesh::{EdgeTag, Mesh};
use crate::problems::ProblemData;
use crate::quadrature::{edge_rule, triangle_rule, ASSEMBLY_DEGREE, EXACT_DATA_DEGREE};
use crate::spaces::{orthonormal_edge_poly, CellGeometry, DofMap, ElementFamily, LocalBasis};

/// Relative residual required from [`solve`].
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicates are summed in insertion order, so the result is
    /// independent of anything but the triplet sequence.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> SparseMatrix {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Largest `|M_ij - M_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .entries()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &trips)
            .map_err(|e| Error::Solver(format!("{e:?}")))
    }

    /// Coordinate text dump, one `i j value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, j, v) in self.entries() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Eliminated flux unknowns and their values.
    pub constraints: Vec<(usize, f64)>,
    pub n_flux: usize,
    pub n_pressure: usize,
    /// Number of Dirichlet boundary edges; zero means pressure is only
    /// determined up to a constant.
    pub n_dirichlet_edges: usize,
}

/// Discrete flux coefficients and cellwise pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub family: ElementFamily,
    pub flux: Vec<f64>,
    pub pressure: Vec<f64>,
    /// `‖Mx - b‖ / ‖b‖` (absolute when `b = 0`).
    pub residual: f64,
}

impl DiscreteSolution {
    pub fn local_flux(&self, mesh: &Mesh, dofs: &DofMap, c: usize) -> Vec<f64> {
        dofs.cell_flux_dofs(mesh, c)
            .iter()
            .map(|&d| self.flux[d])
            .collect()
    }

    /// Cached per-cell evaluator of `u_h`.
    pub fn flux_field(&self, mesh: &Mesh, dofs: &DofMap) -> Result<FluxField> {
        FluxField::new(mesh, dofs, &self.flux)
    }
}

/// Pointwise evaluation of a discrete flux field.
#[derive(Debug, Clone)]
pub struct FluxField {
    bases: Vec<LocalBasis>,
    local: Vec<Vec<f64>>,
}

impl FluxField {
    pub fn new(mesh: &Mesh, dofs: &DofMap, coeffs: &[f64]) -> Result<FluxField> {
        dofs.check_mesh(mesh)?;
        let mut bases = Vec::with_capacity(mesh.n_cells());
        let mut local = Vec::with_capacity(mesh.n_cells());
        for c in 0..mesh.n_cells() {
            bases.push(LocalBasis::new(mesh, c, dofs.family)?);
            local.push(
                dofs.cell_flux_dofs(mesh, c)
                    .iter()
                    .map(|&d| coeffs[d])
                    .collect(),
            );
        }
        Ok(FluxField { bases, local })
    }

    pub fn eval(&self, c: usize, x: [f64; 2]) -> [f64; 2] {
        self.bases[c].evaluate(&self.local[c], x)
    }

    pub fn divergence(&self, c: usize) -> f64 {
        self.local[c]
            .iter()
            .enumerate()
            .map(|(j, v)| v * self.bases[c].divergence(j))
            .sum()
    }

    pub fn basis(&self, c: usize) -> &LocalBasis {
        &self.bases[c]
    }
}

fn local_index_of_edge(mesh: &Mesh, c: usize, e: usize) -> usize {
    mesh.cell_edges(c)
        .iter()
        .position(|&x| x == e)
        .expect("edge not on cell")
}

type Triplets = Vec<(usize, usize, f64)>;

/// Unconstrained matrix triplets and load vector.
fn assemble_raw(mesh: &Mesh, dofs: &DofMap, data: &ProblemData) -> Result<(Triplets, Vec<f64>)> {
    data.validate()?;
    dofs.check_mesh(mesh)?;
    let family = dofs.family;
    let dpe = family.dofs_per_edge();
    let n = dofs.n_total();
    let mut trips =
        Vec::with_capacity(mesh.n_cells() * (family.local_dim().pow(2) + 2 * family.local_dim()));
    let mut rhs = vec![0.0; n];
    let tri = triangle_rule(ASSEMBLY_DEGREE)?;
    let tri_data = triangle_rule(EXACT_DATA_DEGREE)?;
    let inv_kappa = 1.0 / data.kappa;

    for c in 0..mesh.n_cells() {
        let basis = LocalBasis::new(mesh, c, family)?;
        let geom = basis.geometry;
        let gdofs = dofs.cell_flux_dofs(mesh, c);
        let dim = basis.dim();
        let mut local = vec![0.0; dim * dim];
        for q in 0..tri.len() {
            let x = geom.map(tri.points[q]);
            let w = tri.weights[q] * geom.det * inv_kappa;
            let vals = basis.values(x);
            for i in 0..dim {
                for j in 0..dim {
                    local[i * dim + j] += w * (vals[i][0] * vals[j][0] + vals[i][1] * vals[j][1]);
                }
            }
        }
        for i in 0..dim {
            for j in 0..dim {
                trips.push((gdofs[i], gdofs[j], local[i * dim + j]));
            }
        }
        let pd = dofs.pressure_dof(c);
        for (j, &gj) in gdofs.iter().enumerate() {
            let b = basis.divergence(j) * geom.area();
            trips.push((pd, gj, b));
            trips.push((gj, pd, b));
        }
        let inside = mesh.centroid(c);
        let load: f64 = (0..tri_data.len())
            .map(|q| {
                let x = geom.map(tri_data.points[q]);
                tri_data.weights[q] * geom.det * (data.source)(x, inside)
            })
            .sum();
        rhs[pd] = load;
    }

    // fault term, once per fault edge
    let erule = edge_rule(ASSEMBLY_DEGREE)?;
    for e in mesh.edges_with_tag(EdgeTag::InterfaceGamma) {
        let c = mesh.edge_cells(e)[0].expect("fault edge without plus cell");
        let basis = LocalBasis::new(mesh, c, family)?;
        let li = local_index_of_edge(mesh, c, e);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        let mut local = vec![0.0; dpe * dpe];
        for (s, w) in erule.points.iter().zip(&erule.weights) {
            let vals = basis.values(mesh.edge_point(e, *s));
            for k in 0..dpe {
                let tk = vals[li * dpe + k][0] * n[0] + vals[li * dpe + k][1] * n[1];
                for l in 0..dpe {
                    let tl = vals[li * dpe + l][0] * n[0] + vals[li * dpe + l][1] * n[1];
                    local[k * dpe + l] += data.alpha * w * len * tk * tl;
                }
            }
        }
        for k in 0..dpe {
            for l in 0..dpe {
                trips.push((dofs.flux_dof(e, k), dofs.flux_dof(e, l), local[k * dpe + l]));
            }
        }
    }

    let erule_data = edge_rule(EXACT_DATA_DEGREE)?;
    for e in mesh.edges_with_tag(EdgeTag::DirichletBoundary) {
        let c = mesh.boundary_cell(e);
        let basis = LocalBasis::new(mesh, c, family)?;
        let li = local_index_of_edge(mesh, c, e);
        let sign = dofs.orientation(c, li);
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        let inside = mesh.centroid(c);
        for (s, w) in erule_data.points.iter().zip(&erule_data.weights) {
            let x = mesh.edge_point(e, *s);
            let g = (data.dirichlet)(x, inside);
            let vals = basis.values(x);
            for k in 0..dpe {
                let v = vals[li * dpe + k];
                rhs[dofs.flux_dof(e, k)] -= w * len * g * sign * (v[0] * n[0] + v[1] * n[1]);
            }
        }
    }
    Ok((trips, rhs))
}

/// Values of the Neumann-constrained flux moments.
fn neumann_constraints(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &ProblemData,
) -> Result<Vec<(usize, f64)>> {
    let family = dofs.family;
    let rule = edge_rule(EXACT_DATA_DEGREE)?;
    let mut out = Vec::new();
    for e in mesh.edges_with_tag(EdgeTag::NeumannBoundary) {
        let c = mesh.boundary_cell(e);
        let sign = dofs.orientation(c, local_index_of_edge(mesh, c, e));
        let len = mesh.edge_length(e);
        let inside = mesh.centroid(c);
        for k in 0..family.dofs_per_edge() {
            let value: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(s, w)| {
                    let g = (data.neumann)(mesh.edge_point(e, *s), inside);
                    let q = match family {
                        ElementFamily::Rt1 => 1.0,
                        ElementFamily::Bdm1 => orthonormal_edge_poly(k, *s, len),
                    };
                    w * len * sign * g * q
                })
                .sum();
            out.push((dofs.flux_dof(e, k), value));
        }
    }
    Ok(out)
}

/// Assemble without eliminating Neumann constraints. Used for residual
/// probes of the discrete equations.
pub fn assemble_unconstrained(
    mesh: &Mesh,
    dofs: &DofMap,
    data: &ProblemData,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let (trips, rhs) = assemble_raw(mesh, dofs, data)?;
    Ok((SparseMatrix::from_triplets(dofs.n_total(), trips), rhs))
}

pub fn assemble(mesh: &Mesh, dofs: &DofMap, data: &ProblemData) -> Result<LinearSystem> {
    let (trips, mut rhs) = assemble_raw(mesh, dofs, data)?;
    let constraints = neumann_constraints(mesh, dofs, data)?;
    let n = dofs.n_total();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for &(d, v) in &constraints {
        fixed[d] = Some(v);
    }
    let mut kept = Vec::with_capacity(trips.len());
    for (i, j, v) in trips {
        match (fixed[i], fixed[j]) {
            (None, None) => kept.push((i, j, v)),
            (None, Some(g)) => rhs[i] -= v * g,
            _ => {}
        }
    }
    for &(d, g) in &constraints {
        kept.push((d, d, 1.0));
        rhs[d] = g;
    }
    Ok(LinearSystem {
        matrix: SparseMatrix::from_triplets(n, kept),
        rhs,
        constraints,
        n_flux: dofs.n_flux,
        n_pressure: dofs.n_pressure,
        n_dirichlet_edges: mesh.edges_with_tag(EdgeTag::DirichletBoundary).count(),
    })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_residual(m: &SparseMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let r: Vec<f64> = m.mul_vec(x).iter().zip(b).map(|(mx, b)| b - mx).collect();
    let nb = norm2(b);
    let nr = norm2(&r);
    (r, if nb > 0.0 { nr / nb } else { nr })
}

pub fn solve(system: &LinearSystem, family: ElementFamily) -> Result<DiscreteSolution> {
    if system.n_dirichlet_edges == 0 {
        return Err(Error::IllPosed(
            "no Dirichlet boundary edges: pure Neumann problem, pressure only fixed up to a constant"
                .into(),
        ));
    }
    let n = system.matrix.dim();
    if norm2(&system.rhs) == 0.0 {
        return Ok(DiscreteSolution {
            family,
            flux: vec![0.0; system.n_flux],
            pressure: vec![0.0; system.n_pressure],
            residual: 0.0,
        });
    }
    let lu = system.matrix.to_faer()?.sp_lu().map_err(|e| {
        Error::Solver(format!(
            "sparse LU failed ({e:?}); matrix of size {n} may be singular"
        ))
    })?;
    let solve_with = |b: &[f64]| -> Vec<f64> {
        let col = Col::<f64>::from_fn(n, |i| b[i]);
        let x = lu.solve(&col);
        (0..n).map(|i| x[i]).collect()
    };
    let mut x = solve_with(&system.rhs);
    let (mut r, mut rel) = relative_residual(&system.matrix, &x, &system.rhs);
    for _ in 0..3 {
        if rel <= RESIDUAL_TOL * 1e-2 || !rel.is_finite() {
            break;
        }
        let dx = solve_with(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        (r, rel) = relative_residual(&system.matrix, &x, &system.rhs);
    }
    if rel.is_nan() || rel > RESIDUAL_TOL {
        return Err(Error::Solver(format!(
            "relative residual {rel:e} exceeds {RESIDUAL_TOL:e}; system is singular or ill-conditioned"
        )));
    }
    for &(d, g) in &system.constraints {
        x[d] = g;
    }
    let flux = x[..system.n_flux].to_vec();
    let pressure = x[system.n_flux..].iter().map(|v| -v).collect();
    Ok(DiscreteSolution {
        family,
        flux,
        pressure,
        residual: rel,
    })
}

/// Assemble and solve in one step.
pub fn solve_problem(mesh: &Mesh, dofs: &DofMap, data: &ProblemData) -> Result<DiscreteSolution> {
    let system = assemble(mesh, dofs, data)?;
    solve(&system, dofs.family)
}

/// `‖div u_h - P_h f‖_0`.
pub fn mass_balance_error(
    mesh: &Mesh,
    dofs: &DofMap,
    solution: &DiscreteSolution,
    data: &ProblemData,
) -> Result<f64> {
    let rule = triangle_rule(EXACT_DATA_DEGREE)?;
    let mut sq = 0.0;
    for c in 0..mesh.n_cells() {
        let basis = LocalBasis::new(mesh, c, dofs.family)?;
        let local = solution.local_flux(mesh, dofs, c);
        let div: f64 = local
            .iter()
            .enumerate()
            .map(|(j, v)| v * basis.divergence(j))
            .sum();
        let geom = basis.geometry;
        let inside = mesh.centroid(c);
        let mean: f64 = (0..rule.len())
            .map(|q| rule.weights[q] * geom.det * (data.source)(geom.map(rule.points[q]), inside))
            .sum::<f64>()
            / geom.area();
        sq += geom.area() * (div - mean).powi(2);
    }
    Ok(sq.sqrt())
}

/// `‖f‖_0`.
pub fn source_norm(mesh: &Mesh, data: &ProblemData) -> Result<f64> {
    let rule = triangle_rule(EXACT_DATA_DEGREE)?;
    let mut sq = 0.0;
    for c in 0..mesh.n_cells() {
        let geom = CellGeometry::of_cell(mesh, c)?;
        let inside = mesh.centroid(c);
        for q in 0..rule.len() {
            sq += rule.weights[q]
                * geom.det
                * (data.source)(geom.map(rule.points[q]), inside).powi(2);
        }
    }
    Ok(sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ProblemGeometry;
    use crate::problems::{fault_flow, linear_fault, manufactured};
    use std::collections::HashMap;
    use std::sync::Arc;

    fn zero_data(alpha: f64) -> ProblemData {
        ProblemData {
            alpha,
            kappa: 1.0,
            source: Arc::new(|_, _| 0.0),
            dirichlet: Arc::new(|_, _| 0.0),
            neumann: Arc::new(|_, _| 0.0),
        }
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

    #[test]
    fn zero_data_gives_zero_load_and_solution() {
        let mesh = Mesh::build_structured(4, ProblemGeometry::AllDirichlet).unwrap();
        let dofs = DofMap::build(&mesh, ElementFamily::Bdm1);
        let system = assemble(&mesh, &dofs, &zero_data(1.0)).unwrap();
        assert!(system.rhs.iter().all(|&v| v == 0.0));
        let sol = solve(&system, dofs.family).unwrap();
        assert!(sol.flux.iter().chain(&sol.pressure).all(|&v| v == 0.0));
    }

    #[test]
    fn unit_source_load_is_cell_area() {
        let mesh = two_cell_mesh();
        let dofs = DofMap::build(&mesh, ElementFamily::Bdm1);
        let mut data = zero_data(1.0);
        data.source = Arc::new(|_, _| 1.0);
        let system = assemble(&mesh, &dofs, &data).unwrap();
        let loads: Vec<f64> = (0..2).map(|c| system.rhs[dofs.pressure_dof(c)]).collect();
        assert!((loads[0] - 0.5).abs() < 1e-15 && (loads[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fault_term_matches_dense_edge_integral() {
        let mesh = Mesh::build_structured(4, ProblemGeometry::AllDirichlet).unwrap();
        let alpha = 3.7;
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            let dofs = DofMap::build(&mesh, family);
            let (with, _) = assemble_unconstrained(&mesh, &dofs, &zero_data(alpha)).unwrap();
            let (without, _) =
                assemble_unconstrained(&mesh, &dofs, &zero_data(alpha * 2.0)).unwrap();
            for e in mesh.edges_with_tag(EdgeTag::InterfaceGamma) {
                let len = mesh.edge_length(e);
                let n = mesh.edge_normal(e);
                // oracle: 40-point midpoint sum of α (φ_k·n)(φ_l·n) on the minus side
                let c = mesh.edge_cells(e)[1].unwrap();
                let basis = LocalBasis::new(&mesh, c, family).unwrap();
                let li = local_index_of_edge(&mesh, c, e);
                let dpe = family.dofs_per_edge();
                for k in 0..dpe {
                    for l in 0..dpe {
                        let m = 4000;
                        let mut dense = 0.0;
                        for t in 0..m {
                            let s = (t as f64 + 0.5) / m as f64;
                            let v = basis.values(mesh.edge_point(e, s));
                            let a = v[li * dpe + k];
                            let b = v[li * dpe + l];
                            dense += alpha * len / m as f64
                                * (a[0] * n[0] + a[1] * n[1])
                                * (b[0] * n[0] + b[1] * n[1]);
                        }
                        let (i, j) = (dofs.flux_dof(e, k), dofs.flux_dof(e, l));
                        let term = (without.get(i, j) - with.get(i, j)) / 1.0;
                        assert!((term - dense).abs() < 1e-6 * dense.abs().max(1e-3));
                        if family == ElementFamily::Rt1 {
                            // flux-normalised DOF: α/L; unit-trace scaling: αL
                            assert!((term - alpha / len).abs() < 1e-12);
                            assert!((term * len * len - alpha * len).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn doubling_alpha_only_touches_fault_entries() {
        let mesh = Mesh::build_structured(8, ProblemGeometry::AllDirichlet)
            .unwrap()
            .refine(&[60, 61]);
        let dofs = DofMap::build(&mesh, ElementFamily::Bdm1);
        let (a1, _) = assemble_unconstrained(&mesh, &dofs, &zero_data(2.0)).unwrap();
        let (a2, _) = assemble_unconstrained(&mesh, &dofs, &zero_data(4.0)).unwrap();
        let mut fault_dofs = vec![false; dofs.n_total()];
        for e in mesh.edges_with_tag(EdgeTag::InterfaceGamma) {
            fault_dofs[dofs.flux_dof(e, 0)] = true;
            fault_dofs[dofs.flux_dof(e, 1)] = true;
        }
        assert_eq!(a1.nnz(), a2.nnz());
        for ((i, j, v1), (_, _, v2)) in a1.entries().zip(a2.entries()) {
            if fault_dofs[i] && fault_dofs[j] && i / 2 == j / 2 {
                continue;
            }
            assert_eq!(v1.to_bits(), v2.to_bits(), "entry ({i}, {j})");
        }
    }

    #[test]
    fn assembled_matrix_is_symmetric() {
        let def = fault_flow(10.0).unwrap();
        let mesh = Mesh::build_structured(8, def.geometry)
            .unwrap()
            .refine(&[3, 50, 77]);
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            let dofs = DofMap::build(&mesh, family);
            let system = assemble(&mesh, &dofs, &def.data).unwrap();
            assert!(system.matrix.asymmetry() <= 1e-14);
        }
    }

    #[test]
    fn rejects_bad_alpha_and_mismatched_dofmap() {
        let mesh = Mesh::build_structured(4, ProblemGeometry::AllDirichlet).unwrap();
        let dofs = DofMap::build(&mesh, ElementFamily::Rt1);
        assert!(matches!(
            assemble(&mesh, &dofs, &zero_data(0.0)),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            assemble(&mesh, &dofs, &zero_data(-1.0)),
            Err(Error::InvalidAlpha(_))
        ));
        let finer = mesh.refine_uniform();
        assert!(matches!(
            assemble(&finer, &dofs, &zero_data(1.0)),
            Err(Error::DofMapMismatch(_))
        ));
    }

    #[test]
    fn pure_neumann_is_reported() {
        let mut tags = HashMap::new();
        for pair in [[0, 1], [1, 3], [2, 3], [0, 2]] {
            tags.insert(pair, EdgeTag::NeumannBoundary);
        }
        let mesh = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            vec![[3, 0, 1], [0, 3, 2]],
            &tags,
            vec![0, 1],
            0,
        )
        .unwrap();
        let dofs = DofMap::build(&mesh, ElementFamily::Rt1);
        let mut data = zero_data(1.0);
        data.source = Arc::new(|_, _| 1.0);
        let system = assemble(&mesh, &dofs, &data).unwrap();
        assert!(matches!(
            solve(&system, dofs.family),
            Err(Error::IllPosed(_))
        ));
    }

    #[test]
    fn linear_fault_is_reproduced() {
        let def = linear_fault(2.5).unwrap();
        let exact = def.exact.clone().unwrap();
        let mesh = Mesh::build_structured(8, def.geometry)
            .unwrap()
            .refine(&[10, 20, 30]);
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            let dofs = DofMap::build(&mesh, family);
            let sol = solve_problem(&mesh, &dofs, &def.data).unwrap();
            assert!(sol.residual <= RESIDUAL_TOL);
            let field = sol.flux_field(&mesh, &dofs).unwrap();
            let rule = triangle_rule(4).unwrap();
            for c in 0..mesh.n_cells() {
                let geom = CellGeometry::of_cell(&mesh, c).unwrap();
                let inside = mesh.centroid(c);
                let mut mean = 0.0;
                for q in 0..rule.len() {
                    let x = geom.map(rule.points[q]);
                    let u = field.eval(c, x);
                    assert!((u[0] - 1.0).abs() < 1e-9 && u[1].abs() < 1e-9);
                    mean += rule.weights[q] * 2.0 * (exact.pressure)(x, inside);
                }
                assert!((sol.pressure[c] - mean).abs() < 1e-9, "cell {c}");
            }
        }
    }

    #[test]
    fn manufactured_mass_balance() {
        let def = manufactured();
        let mesh = Mesh::build_structured(8, def.geometry).unwrap();
        for family in [ElementFamily::Rt1, ElementFamily::Bdm1] {
            let dofs = DofMap::build(&mesh, family);
            let sol = solve_problem(&mesh, &dofs, &def.data).unwrap();
            let err = mass_balance_error(&mesh, &dofs, &sol, &def.data).unwrap();
            let fnorm = source_norm(&mesh, &def.data).unwrap();
            assert!(err <= 1e-9 * fnorm, "{err} vs {fnorm}");
        }
    }

    #[test]
    fn galerkin_orthogonality_probe() {
        let def = fault_flow(10.0).unwrap();
        let mesh = Mesh::build_structured(8, def.geometry)
            .unwrap()
            .refine(&[5, 6, 70]);
        let dofs = DofMap::build(&mesh, ElementFamily::Bdm1);
        let sol = solve_problem(&mesh, &dofs, &def.data).unwrap();
        let (m, rhs) = assemble_unconstrained(&mesh, &dofs, &def.data).unwrap();
        let mut x: Vec<f64> = sol.flux.clone();
        x.extend(sol.pressure.iter().map(|p| -p));
        let r: Vec<f64> = m.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let scale = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut seed = 7u64;
        for _ in 0..20 {
            let v: Vec<f64> = (0..dofs.n_flux)
                .map(|d| {
                    seed = seed
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    if dofs.constrained[d] {
                        0.0
                    } else {
                        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                    }
                })
                .collect();
            let vn = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let res: f64 = v.iter().zip(&r).map(|(a, b)| a * b).sum();
            assert!(res.abs() <= 1e-9 * scale * vn);
        }
    }

    #[test]
    fn fault_flow_net_outflow_is_one() {
        let def = fault_flow(10.0).unwrap();
        let mesh = Mesh::build_structured(8, def.geometry).unwrap();
        let dofs = DofMap::build(&mesh, ElementFamily::Bdm1);
        let sol = solve_problem(&mesh, &dofs, &def.data).unwrap();
        let field = sol.flux_field(&mesh, &dofs).unwrap();
        let rule = edge_rule(4).unwrap();
        let mut outflow = 0.0;
        for e in 0..mesh.n_edges() {
            if !mesh.edge_tag(e).is_boundary() {
                continue;
            }
            let c = mesh.boundary_cell(e);
            let sign = dofs.orientation(c, local_index_of_edge(&mesh, c, e));
            let n = mesh.edge_normal(e);
            for (s, w) in rule.points.iter().zip(&rule.weights) {
                let u = field.eval(c, mesh.edge_point(e, *s));
                outflow += w * mesh.edge_length(e) * sign * (u[0] * n[0] + u[1] * n[1]);
            }
        }
        assert!((outflow - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coo_dump_lists_every_entry() {
        let mesh = two_cell_mesh();
        let dofs = DofMap::build(&mesh, ElementFamily::Rt1);
        let system = assemble(&mesh, &dofs, &zero_data(1.0)).unwrap();
        let mut buf = Vec::new();
        system.matrix.write_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), system.matrix.nnz());
        for line in text.lines() {
            let parts: Vec<&str> = line.split(' ').collect();
            let (i, j): (usize, usize) = (parts[0].parse().unwrap(), parts[1].parse().unwrap());
            let v: f64 = parts[2].parse().unwrap();
            assert_eq!(v, system.matrix.get(i, j));
        }
    }
}
