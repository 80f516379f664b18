//! Frozen reference instances.

use crate::benchmark::COUPLER;
use crate::error::Result;
use crate::problem::IsingProblem;

/// Fields of the 7-qubit single-instance study, already normalised to `max|h| = 1`.
pub const SEVEN_QUBIT_H_Z: [f64; 7] =
    [1.0, -0.32610452, 0.16998698, -0.12109217, -0.58725647, 0.19980255, -0.4370849];

/// Ten-edge graph of the 7-qubit study. Only the fields are tabulated for this
/// instance; the edge set was recovered by exhaustive search over connected
/// ten-edge graphs, matching the reported crossing structure and AQA success.
pub const SEVEN_QUBIT_EDGES: [(usize, usize); 10] =
    [(0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (1, 2), (1, 4), (2, 3), (2, 5), (2, 6)];

/// The 7-qubit study instance at energy scale `r` (GHz).
pub fn seven_qubit(r: f64) -> Result<IsingProblem> {
    IsingProblem::new(
        7,
        SEVEN_QUBIT_EDGES.to_vec(),
        SEVEN_QUBIT_H_Z.iter().map(|h| h * r).collect(),
        vec![COUPLER * r; SEVEN_QUBIT_EDGES.len()],
        vec![r; 7],
        r,
    )
}

/// Small frustrated instance used by structural checks.
pub fn four_qubit_frustrated() -> Result<IsingProblem> {
    IsingProblem::new(
        4,
        vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)],
        vec![1.0, -0.6, -0.4, -0.3],
        vec![-0.5; 5],
        vec![1.0; 4],
        1.0,
    )
}
