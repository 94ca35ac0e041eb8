//! Crate-wide error type.

use core::fmt;

/// Errors reported by the numerical kernels.
///
/// Solver failures carry the diagnostics the caller needs to retune
/// (iteration count and last residual); geometric failures carry the node
/// where the invariant broke.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Exterior derivative applied to a top-degree cochain.
    DegreeOverflow { degree: usize, dim: usize },
    /// Codifferential applied to a degree-0 cochain.
    DegreeUnderflow,
    /// Two cochains live on different grids.
    GridMismatch,
    /// Two cochains have different degrees.
    DegreeMismatch { left: usize, right: usize },
    /// Operator/vector shapes are inconsistent.
    ShapeMismatch { expected: usize, got: usize },
    /// Iterative solve did not reach the requested tolerance.
    SolverDiverged { iterations: usize, residual: f64 },
    /// The compact-embedding weight is singular or indefinite.
    SingularWeight,
    /// Rank decision ambiguous: singular-value gap below the safety ratio.
    RankAmbiguous { gap_ratio: f64 },
    /// An oscillation is not resolvable on the grid (fast period < 8 cells).
    UnderResolved { period: f64, spacing: f64 },
    /// Schedule index out of range.
    ScheduleIndex { index: usize, len: usize },
    /// Mismatched epsilon schedules between two families.
    ScheduleMismatch,
    /// Differential of the immersion lost full rank at a node.
    RankDeficient { node: usize, sigma_min: f64 },
    /// Metric not positive definite at a node.
    MetricDegenerate { node: usize, eigenvalue: f64 },
    /// Frame field jumped between neighbouring nodes; resolution too coarse.
    FrameDiscontinuity { node: usize, dot: f64 },
    /// A frame expected to be orthonormal is not.
    FrameNotOrthonormal { defect: f64 },
    /// Initial matrix for path integration is not orthogonal.
    NotOrthogonal { defect: f64 },
    /// Frame integral used before the frame part was solved.
    MissingFrames,
    /// Point cloud is too degenerate for rigid alignment.
    DegenerateCloud { rank: usize },
    /// Bending amplitude violates the immersivity bound.
    ImmersivityViolated { bound: f64, got: f64 },
    /// Invalid parameter (named).
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DegreeOverflow { degree, dim } => {
                write!(f, "cannot raise degree {degree} on a {dim}-dimensional grid")
            }
            Error::DegreeUnderflow => write!(f, "codifferential of a 0-cochain is undefined"),
            Error::GridMismatch => write!(f, "cochains live on different grids"),
            Error::DegreeMismatch { left, right } => {
                write!(f, "degree mismatch: {left} vs {right}")
            }
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected}, got {got}")
            }
            Error::SolverDiverged { iterations, residual } => write!(
                f,
                "iterative solve stalled after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::SingularWeight => write!(f, "embedding weight is singular"),
            Error::RankAmbiguous { gap_ratio } => {
                write!(f, "rank decision ambiguous: singular-value gap ratio {gap_ratio:.2}")
            }
            Error::UnderResolved { period, spacing } => write!(
                f,
                "oscillation under-resolved: fast period {period:.3e} < 8 x spacing {spacing:.3e}"
            ),
            Error::ScheduleIndex { index, len } => {
                write!(f, "schedule index {index} out of range (len {len})")
            }
            Error::ScheduleMismatch => write!(f, "epsilon schedules differ between families"),
            Error::RankDeficient { node, sigma_min } => write!(
                f,
                "immersion rank deficient at node {node} (smallest singular value {sigma_min:.3e})"
            ),
            Error::MetricDegenerate { node, eigenvalue } => write!(
                f,
                "metric not positive definite at node {node} (eigenvalue {eigenvalue:.3e})"
            ),
            Error::FrameDiscontinuity { node, dot } => write!(
                f,
                "frame discontinuity at node {node} (alignment dot {dot:.3}); refine the resolution"
            ),
            Error::FrameNotOrthonormal { defect } => {
                write!(f, "frame not orthonormal (defect {defect:.3e})")
            }
            Error::NotOrthogonal { defect } => {
                write!(f, "matrix not orthogonal (defect {defect:.3e})")
            }
            Error::MissingFrames => write!(f, "frame field missing: solve the frame system first"),
            Error::DegenerateCloud { rank } => {
                write!(f, "point cloud rank {rank} too low for rigid alignment")
            }
            Error::ImmersivityViolated { bound, got } => write!(
                f,
                "bending family not immersive: amplitude x epsilon {got:.3e} exceeds {bound:.3e}"
            ),
            Error::InvalidParameter(name) => write!(f, "invalid parameter: {name}"),
        }
    }
}

impl core::error::Error for Error {}
