//! Dörfler marking and the solve → estimate → mark → refine loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{effectivity, estimate, EstimatorReport};
use crate::mesh::{EdgeTag, Mesh, FAULT_X, FAULT_Y};
use crate::postprocess::{postprocess_with, PostPressure};
use crate::problems::{error_norms, ErrorNorms, ProblemDefinition, ProblemId};
use crate::spaces::{DofMap, ElementFamily};
use crate::system::{assemble, solve, DiscreteSolution, FluxField, LinearSystem};

/// Radius around the fault tips used by [`endpoint_fraction`].
pub const ENDPOINT_RADIUS: f64 = 0.1;

/// Share of an edge indicator attributed to each adjacent cell.
pub const EDGE_SHARE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Uniform,
    Adaptive,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Uniform => "uniform",
            Mode::Adaptive => "adaptive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    pub problem: ProblemId,
    pub family: ElementFamily,
    pub mode: Mode,
    pub theta: f64,
    pub initial_n: usize,
    pub max_iterations: usize,
    pub max_dofs: usize,
    /// Overrides the problem's default α (ignored by `manufactured`).
    pub alpha: Option<f64>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            problem: ProblemId::Manufactured,
            family: ElementFamily::Bdm1,
            mode: Mode::Adaptive,
            theta: 0.5,
            initial_n: 8,
            max_iterations: 5,
            max_dofs: 200_000,
            alpha: None,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!(
                "theta must lie in (0, 1], got {}",
                self.theta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.initial_n == 0 || !self.initial_n.is_multiple_of(4) {
            return Err(Error::MeshSize(self.initial_n));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidAlpha(a));
            }
        }
        Ok(())
    }

    /// α actually used by the run.
    pub fn resolved_alpha(&self) -> f64 {
        match self.problem {
            ProblemId::Manufactured => self.problem.default_alpha(),
            p => self.alpha.unwrap_or(p.default_alpha()),
        }
    }

    pub fn problem_definition(&self) -> Result<ProblemDefinition> {
        self.problem.definition(self.resolved_alpha())
    }
}

/// One iteration of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub iteration: usize,
    pub n_cells: usize,
    pub n_dofs: usize,
    pub eta_total: f64,
    pub osc_total: f64,
    pub flux_error: Option<f64>,
    pub postpressure_error: Option<f64>,
    pub tnorm_error: Option<f64>,
    pub effectivity: Option<f64>,
    pub n_marked: usize,
    pub endpoint_fraction: f64,
}

/// Everything computed in one iteration, handed to study observers.
pub struct IterationState<'a> {
    pub iteration: usize,
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub system: &'a LinearSystem,
    pub solution: &'a DiscreteSolution,
    pub flux: &'a FluxField,
    pub post: &'a PostPressure,
    pub report: &'a EstimatorReport,
    pub errors: Option<&'a ErrorNorms>,
    pub marked: &'a [usize],
    pub record: &'a StudyRecord,
}

/// `η_T² + ½ Σ η_E²` over the cell's non-boundary edges.
pub fn cell_indicators(report: &EstimatorReport, mesh: &Mesh) -> Vec<f64> {
    (0..mesh.n_cells())
        .map(|c| {
            let edges: f64 = mesh
                .cell_edges(c)
                .iter()
                .filter(|&&e| {
                    matches!(
                        mesh.edge_tag(e),
                        EdgeTag::Interior | EdgeTag::InterfaceGamma
                    )
                })
                .map(|&e| EDGE_SHARE * report.eta_edges[e].powi(2))
                .sum();
            report.eta_cells[c].powi(2) + edges
        })
        .collect()
}

/// Smallest set of largest indicators carrying a `theta` share of the total.
/// Returned in decreasing indicator order, ties by cell id.
pub fn mark_indicators(indicators: &[f64], theta: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&c| indicators[c]).sum();
    if total.is_nan() || total <= 0.0 {
        return Vec::new();
    }
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for c in order {
        if acc >= target || indicators[c] <= 0.0 {
            break;
        }
        acc += indicators[c];
        marked.push(c);
    }
    marked
}

pub fn mark(report: &EstimatorReport, mesh: &Mesh, theta: f64) -> Vec<usize> {
    mark_indicators(&cell_indicators(report, mesh), theta)
}

/// Share of `marked` cells whose centroid lies within [`ENDPOINT_RADIUS`] of
/// a fault tip.
pub fn endpoint_fraction(mesh: &Mesh, marked: &[usize]) -> f64 {
    if marked.is_empty() {
        return 0.0;
    }
    let near = marked
        .iter()
        .filter(|&&c| {
            let [x, y] = mesh.centroid(c);
            FAULT_Y
                .iter()
                .any(|&ty| (x - FAULT_X).hypot(y - ty) < ENDPOINT_RADIUS)
        })
        .count();
    near as f64 / marked.len() as f64
}

pub fn run_study(config: &AdaptConfig) -> Result<Vec<StudyRecord>> {
    run_study_with(config, |_| Ok(()))
}

/// Run a study, calling `observe` after every iteration.
pub fn run_study_with<F>(config: &AdaptConfig, mut observe: F) -> Result<Vec<StudyRecord>>
where
    F: FnMut(&IterationState<'_>) -> Result<()>,
{
    config.validate()?;
    let problem = config.problem_definition()?;
    let mut mesh = Mesh::build_structured(config.initial_n, problem.geometry)?;
    let mut records = Vec::with_capacity(config.max_iterations);
    for iteration in 0..config.max_iterations {
        let wrap = |e: Error| Error::Iteration {
            iteration,
            source: Box::new(e),
        };
        let dofs = DofMap::build(&mesh, config.family);
        let system = assemble(&mesh, &dofs, &problem.data).map_err(wrap)?;
        let solution = solve(&system, config.family).map_err(wrap)?;
        let flux = solution.flux_field(&mesh, &dofs).map_err(wrap)?;
        let post = postprocess_with(&mesh, &flux, &solution.pressure).map_err(wrap)?;
        let report = estimate(&mesh, &flux, &post, &problem.data, config.family).map_err(wrap)?;
        let errors = match problem.exact {
            Some(_) => Some(error_norms(&mesh, &dofs, &solution, &post, &problem).map_err(wrap)?),
            None => None,
        };
        let marked = match config.mode {
            Mode::Uniform => (0..mesh.n_cells()).collect(),
            Mode::Adaptive => mark(&report, &mesh, config.theta),
        };
        let record = StudyRecord {
            iteration,
            n_cells: mesh.n_cells(),
            n_dofs: dofs.n_total(),
            eta_total: report.eta_total,
            osc_total: report.osc_total,
            flux_error: errors.as_ref().map(|e| e.flux_l2),
            postpressure_error: errors.as_ref().map(|e| e.postpressure_l2),
            tnorm_error: errors.as_ref().map(|e| e.tnorm),
            effectivity: errors
                .as_ref()
                .and_then(|e| effectivity(&report, e.flux_l2)),
            n_marked: marked.len(),
            endpoint_fraction: endpoint_fraction(&mesh, &marked),
        };
        log::info!(
            "iteration {iteration}: {} cells, {} dofs, eta {:.4e}, marked {}",
            record.n_cells,
            record.n_dofs,
            record.eta_total,
            record.n_marked
        );
        observe(&IterationState {
            iteration,
            mesh: &mesh,
            dofs: &dofs,
            system: &system,
            solution: &solution,
            flux: &flux,
            post: &post,
            report: &report,
            errors: errors.as_ref(),
            marked: &marked,
            record: &record,
        })?;
        let stop = iteration + 1 == config.max_iterations
            || record.n_dofs >= config.max_dofs
            || marked.is_empty();
        records.push(record);
        if stop {
            break;
        }
        mesh = mesh.refine(&marked);
    }
    Ok(records)
}
