//! Conforming triangle meshes of the unit square with a tagged vertical fault.
//!
//! Cells are stored counterclockwise as `[a, b, c]` where `(a, b)` is the
//! refinement edge and `c` the newest vertex. Local edge `i` is the edge
//! opposite local vertex `i`, so the refinement edge is always local edge 2.
//!
//! Every edge carries a global orientation `[start, end]` chosen so that the
//! unit normal `(t_y, -t_x)` points in the positive `x` direction, or in the
//! positive `y` direction for horizontal edges. On the fault this makes the
//! normal `(1, 0)`, pointing from the left part of the domain into the right.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Relative tolerance for geometric comparisons.
pub const COORD_TOL: f64 = 1e-12;

/// x-coordinate of the fault.
pub const FAULT_X: f64 = 0.5;
/// Vertical extent of the fault.
pub const FAULT_Y: [f64; 2] = [0.25, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Interior,
    InterfaceGamma,
    DirichletBoundary,
    NeumannBoundary,
}

impl EdgeTag {
    pub fn is_boundary(self) -> bool {
        matches!(self, EdgeTag::DirichletBoundary | EdgeTag::NeumannBoundary)
    }

    pub fn dump_name(self) -> &'static str {
        match self {
            EdgeTag::Interior => "int",
            EdgeTag::InterfaceGamma => "gamma",
            EdgeTag::DirichletBoundary => "dir",
            EdgeTag::NeumannBoundary => "neu",
        }
    }
}

/// Boundary tagging and fault extent of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemGeometry {
    /// Pressure prescribed on the whole boundary; fault `{1/2} x [1/4, 3/4]`.
    AllDirichlet,
    /// No-flux top and bottom, pressure on the left and right sides; fault
    /// `{1/2} x [1/4, 3/4]`.
    NeumannTopBottom,
    /// Pressure prescribed on the whole boundary; the fault cuts the square
    /// into two halves, `{1/2} x [0, 1]`.
    ThroughFault,
}

impl ProblemGeometry {
    /// `[y_min, y_max]` of the vertical fault at `x = 1/2`.
    pub fn fault_extent(self) -> [f64; 2] {
        match self {
            ProblemGeometry::ThroughFault => [0.0, 1.0],
            _ => FAULT_Y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_tags: Vec<EdgeTag>,
    cell_edges: Vec<[usize; 3]>,
    /// `[plus, minus]`: the global normal is outward for `plus`.
    edge_cells: Vec<[Option<usize>; 2]>,
    /// Index of the initial-mesh cell each cell descends from.
    root: Vec<usize>,
    generation: usize,
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

impl Mesh {
    /// `n x n` squares, each split along its `(0,0)-(1,1)` diagonal.
    pub fn build_structured(n: usize, geometry: ProblemGeometry) -> Result<Mesh> {
        if n == 0 || !n.is_multiple_of(4) {
            return Err(Error::MeshSize(n));
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (p00, p10, p01, p11) =
                    (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                // hypotenuse first, right-angle vertex last
                cells.push([p11, p00, p10]);
                cells.push([p00, p11, p01]);
            }
        }

        let fault = geometry.fault_extent();
        let mut tags = HashMap::new();
        let on = |v: f64, c: f64| (v - c).abs() <= COORD_TOL;
        let mut tag_edge = |a: usize, b: usize, va: [f64; 2], vb: [f64; 2]| {
            let tag = if (on(va[0], 0.0) && on(vb[0], 0.0)) || (on(va[0], 1.0) && on(vb[0], 1.0)) {
                Some(EdgeTag::DirichletBoundary)
            } else if (on(va[1], 0.0) && on(vb[1], 0.0)) || (on(va[1], 1.0) && on(vb[1], 1.0)) {
                Some(match geometry {
                    ProblemGeometry::NeumannTopBottom => EdgeTag::NeumannBoundary,
                    _ => EdgeTag::DirichletBoundary,
                })
            } else if on_fault(va, fault) && on_fault(vb, fault) {
                Some(EdgeTag::InterfaceGamma)
            } else {
                None
            };
            if let Some(tag) = tag {
                tags.insert(sorted_pair(a, b), tag);
            }
        };
        for cell in &cells {
            for i in 0..3 {
                let (a, b) = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
                tag_edge(a, b, vertices[a], vertices[b]);
            }
        }
        let root = (0..cells.len()).collect();
        Mesh::from_parts(vertices, cells, &tags, root, 0)
    }

    /// Build topology for the given cells. Edges absent from `tags` are interior.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        tags: &HashMap<[usize; 2], EdgeTag>,
        root: Vec<usize>,
        generation: usize,
    ) -> Result<Mesh> {
        for (c, cell) in cells.iter().enumerate() {
            let area = 0.5
                * cross(
                    sub(vertices[cell[1]], vertices[cell[0]]),
                    sub(vertices[cell[2]], vertices[cell[0]]),
                );
            if area <= 0.0 {
                return Err(Error::DegenerateCell { cell: c, area });
            }
        }
        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2);
        let mut edges = Vec::new();
        let mut edge_tags = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::new();
        for (c, cell) in cells.iter().enumerate() {
            let mut local = [0; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let (a, b) = (cell[(i + 1) % 3], cell[(i + 2) % 3]);
                let key = sorted_pair(a, b);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(canonical_orientation(&vertices, a, b));
                    edge_tags.push(tags.get(&key).copied().unwrap_or(EdgeTag::Interior));
                    edge_cells.push([None, None]);
                    edges.len() - 1
                });
                *slot = e;
                // (a, b) runs counterclockwise around the cell, so the outward
                // normal agrees with the global one iff the orientations agree.
                let slot_ix = if edges[e] == [a, b] { 0 } else { 1 };
                if edge_cells[e][slot_ix].is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} has two cells on the same side"
                    )));
                }
                edge_cells[e][slot_ix] = Some(c);
            }
            cell_edges.push(local);
        }
        let mesh = Mesh {
            vertices,
            cells,
            edges,
            edge_tags,
            cell_edges,
            edge_cells,
            root,
            generation,
        };
        mesh.check_tags()?;
        Ok(mesh)
    }

    fn check_tags(&self) -> Result<()> {
        for e in 0..self.n_edges() {
            let nc = self.edge_cells[e].iter().flatten().count();
            let tag = self.edge_tags[e];
            let ok = if tag.is_boundary() { nc == 1 } else { nc == 2 };
            if !ok {
                return Err(Error::InvalidMesh(format!(
                    "edge {e} tagged {tag:?} has {nc} adjacent cells"
                )));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> [usize; 3] {
        self.cells[c]
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_edges(&self, c: usize) -> [usize; 3] {
        self.cell_edges[c]
    }

    /// Initial-mesh ancestor of cell `c`.
    pub fn root(&self, c: usize) -> usize {
        self.root[c]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Oriented endpoints `[start, end]` of edge `e`.
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn edge_coords(&self, e: usize) -> [[f64; 2]; 2] {
        self.edges[e].map(|v| self.vertices[v])
    }

    pub fn edge_tag(&self, e: usize) -> EdgeTag {
        self.edge_tags[e]
    }

    pub fn edge_tags(&self) -> &[EdgeTag] {
        &self.edge_tags
    }

    /// `[plus, minus]` cells of edge `e`; the global normal points out of `plus`.
    pub fn edge_cells(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_cells[e]
    }

    /// The single cell adjacent to a boundary edge.
    pub fn boundary_cell(&self, e: usize) -> usize {
        let [p, m] = self.edge_cells[e];
        p.or(m).expect("edge without cells")
    }

    /// `+1` if the global normal of local edge `i` is outward for cell `c`.
    pub fn cell_edge_sign(&self, c: usize, i: usize) -> f64 {
        let e = self.cell_edges[c][i];
        if self.edge_cells[e][0] == Some(c) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn area(&self, c: usize) -> f64 {
        let [a, b, p] = self.cell_coords(c);
        0.5 * cross(sub(b, a), sub(p, a))
    }

    /// Longest edge of the cell.
    pub fn diameter(&self, c: usize) -> f64 {
        self.cell_edges[c]
            .iter()
            .map(|&e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self, c: usize) -> [f64; 2] {
        let [a, b, p] = self.cell_coords(c);
        [(a[0] + b[0] + p[0]) / 3.0, (a[1] + b[1] + p[1]) / 3.0]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edge_coords(e);
        norm(sub(b, a))
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edge_coords(e);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Unit tangent from `start` to `end`.
    pub fn edge_tangent(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edge_coords(e);
        let t = sub(b, a);
        let l = norm(t);
        [t[0] / l, t[1] / l]
    }

    /// Globally oriented unit normal.
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let t = self.edge_tangent(e);
        [t[1], -t[0]]
    }

    /// Point at arc-length fraction `s` in `[0, 1]` along the oriented edge.
    pub fn edge_point(&self, e: usize, s: f64) -> [f64; 2] {
        let [a, b] = self.edge_coords(e);
        [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
    }

    /// Smallest interior angle (radians) over all cells.
    pub fn min_angle(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| {
                let p = self.cell_coords(c);
                (0..3)
                    .map(|i| {
                        let u = sub(p[(i + 1) % 3], p[i]);
                        let v = sub(p[(i + 2) % 3], p[i]);
                        cross(u, v).atan2(u[0] * v[0] + u[1] * v[1])
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.area(c)).sum()
    }

    pub fn edges_with_tag(&self, tag: EdgeTag) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(move |&e| self.edge_tags[e] == tag)
    }

    /// Every interior edge has a cell on each side, every boundary edge
    /// exactly one, and no vertex lies in the interior of another edge.
    pub fn is_conforming(&self) -> bool {
        let sides_ok = (0..self.n_edges()).all(|e| {
            let [p, m] = self.edge_cells[e];
            match self.edge_tags[e] {
                EdgeTag::Interior | EdgeTag::InterfaceGamma => p.is_some() && m.is_some(),
                _ => p.is_some() != m.is_some(),
            }
        });
        if !sides_ok {
            return false;
        }
        // Hanging nodes would leave a boundary-like edge untagged; this is
        // caught above, but also check that edges on the square's boundary
        // are exactly the tagged ones.
        (0..self.n_edges()).all(|e| {
            let [a, b] = self.edge_coords(e);
            let on_side = [0.0, 1.0].iter().any(|&c| {
                ((a[0] - c).abs() <= COORD_TOL && (b[0] - c).abs() <= COORD_TOL)
                    || ((a[1] - c).abs() <= COORD_TOL && (b[1] - c).abs() <= COORD_TOL)
            });
            on_side == self.edge_tags[e].is_boundary()
        })
    }

    /// Newest-vertex bisection of the marked cells plus the closure needed
    /// to keep the mesh conforming. Every marked cell is bisected at least once.
    pub fn refine(&self, marked: &[usize]) -> Mesh {
        if marked.is_empty() {
            return self.clone();
        }
        let mut edge_marked = vec![false; self.n_edges()];
        let mut stack = Vec::new();
        for &c in marked {
            let e = self.cell_edges[c][2];
            if !edge_marked[e] {
                edge_marked[e] = true;
                stack.push(e);
            }
        }
        while let Some(e) = stack.pop() {
            for c in self.edge_cells[e].iter().flatten() {
                let r = self.cell_edges[*c][2];
                if !edge_marked[r] {
                    edge_marked[r] = true;
                    stack.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<[usize; 2], usize> = HashMap::new();
        let mut tags: HashMap<[usize; 2], EdgeTag> = HashMap::new();
        for (e, &split) in edge_marked.iter().enumerate() {
            let [a, b] = self.edges[e];
            let key = sorted_pair(a, b);
            let tag = self.edge_tags[e];
            if split {
                let m = vertices.len();
                vertices.push(self.edge_midpoint(e));
                midpoint.insert(key, m);
                if tag != EdgeTag::Interior {
                    tags.insert(sorted_pair(a, m), tag);
                    tags.insert(sorted_pair(m, b), tag);
                }
            } else if tag != EdgeTag::Interior {
                tags.insert(key, tag);
            }
        }

        let mut cells = Vec::with_capacity(self.n_cells() * 2);
        let mut root = Vec::with_capacity(self.n_cells() * 2);
        for (c, &cell) in self.cells.iter().enumerate() {
            bisect(cell, &midpoint, &mut |child| {
                cells.push(child);
                root.push(self.root[c]);
            });
        }
        Mesh::from_parts(vertices, cells, &tags, root, self.generation + 1)
            .expect("bisection produced an inconsistent mesh")
    }

    /// Refine every cell once.
    pub fn refine_uniform(&self) -> Mesh {
        let all: Vec<usize> = (0..self.n_cells()).collect();
        self.refine(&all)
    }

    /// Text dump: `mesh nv nc ne`, then `v x y`, `c i j k`, `e i j tag` lines.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "mesh {} {} {}",
            self.n_vertices(),
            self.n_cells(),
            self.n_edges()
        )?;
        for v in &self.vertices {
            writeln!(w, "v {:.17e} {:.17e}", v[0], v[1])?;
        }
        for c in &self.cells {
            writeln!(w, "c {} {} {}", c[0], c[1], c[2])?;
        }
        for (e, tag) in self.edges.iter().zip(&self.edge_tags) {
            writeln!(w, "e {} {} {}", e[0], e[1], tag.dump_name())?;
        }
        Ok(())
    }
}

fn on_fault(p: [f64; 2], extent: [f64; 2]) -> bool {
    (p[0] - FAULT_X).abs() <= COORD_TOL
        && p[1] >= extent[0] - COORD_TOL
        && p[1] <= extent[1] + COORD_TOL
}

fn canonical_orientation(vertices: &[[f64; 2]], a: usize, b: usize) -> [usize; 2] {
    let t = sub(vertices[b], vertices[a]);
    let l = norm(t);
    let (nx, ny) = (t[1], -t[0]);
    if nx > COORD_TOL * l || (nx.abs() <= COORD_TOL * l && ny > 0.0) {
        [a, b]
    } else {
        [b, a]
    }
}

fn bisect(
    cell: [usize; 3],
    midpoint: &HashMap<[usize; 2], usize>,
    out: &mut impl FnMut([usize; 3]),
) {
    let [a, b, c] = cell;
    match midpoint.get(&sorted_pair(a, b)) {
        Some(&m) => {
            bisect([c, a, m], midpoint, out);
            bisect([b, c, m], midpoint, out);
        }
        None => out(cell),
    }
}
