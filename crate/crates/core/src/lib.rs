//! Adaptive mixed finite elements for single-phase Darcy flow in a domain cut
//! by a thin fault, modelled as an interface with a Robin-type transmission
//! condition.
//!
//! The pipeline is: [`mesh`] → [`spaces`] → [`system`] → [`postprocess`] →
//! [`estimator`] → [`adapt`], with benchmark data in [`problems`] and a
//! command-line driver in [`cli`].

pub mod adapt;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod mesh;
pub mod postprocess;
pub mod problems;
pub mod quadrature;
pub mod spaces;
pub mod system;

pub use adapt::{run_study, run_study_with, AdaptConfig, Mode, StudyRecord};
pub use error::{Error, Result};
pub use estimator::{estimate, EstimatorReport};
pub use mesh::{EdgeTag, Mesh, ProblemGeometry};
pub use postprocess::{postprocess, PostPressure};
pub use problems::{ProblemDefinition, ProblemId};
pub use spaces::{DofMap, ElementFamily};
pub use system::{assemble, solve, DiscreteSolution, LinearSystem};
