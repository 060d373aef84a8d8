//! Constructions of special instances: the Gaussian integrality-gap family
//! and the Min-Uncut and Unique-Label-Cover hardness reductions.

mod gap;
mod minuncut;
mod ulc;

pub use gap::{gap_net_parameters, gaussian_gap_instance, GapNetParameters};
pub use minuncut::{cut_vector, min_uncut_exhaustive, minuncut_reduce, uncut_edges, Graph, MinUncutReduction};
pub use ulc::{
    dictator_solution, ulc_objective, ulc_parameters, ulc_reduce, unsatisfied_fraction, UlcEdge, UlcInstance,
    UlcObjective, UlcParams, UlcReduction, MAX_ULC_ALPHABET,
};
