//! Coherence distillation numerics: coherence monotones, the m-distillation
//! norm, distillation fidelities and one-shot rates, and the channels that
//! achieve them. All programs are solved by the bundled dense SDP solver.

pub mod distill;
pub mod error;
pub mod linalg;
pub mod monotones;
pub mod pure_state;
pub mod sampling;
pub mod sdp;
pub mod transforms;

pub use distill::{
    fidelity_distill, hypothesis_test_relent, min_hypothesis_over_incoherent,
    min_hypothesis_over_j, one_shot_distillable, one_shot_distillable_pure, DistillationReport,
    OperationClass, RatePoint, Route,
};
pub use error::{Error, Result};
pub use linalg::{DensityMatrix, HermitianMatrix, LinalgError, StateVector};
pub use monotones::MonotoneResult;
pub use pure_state::{m_distillation_norm, MNormResult, ProbabilityMultiset};
pub use sdp::{ConicProgram, ConicSolution, SolveStatus};
pub use transforms::{ChoiChannel, MajorizationPlan};
