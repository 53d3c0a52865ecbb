//! Distances between matrices, step graphons and degree distributions.

pub mod coupling;
pub mod hat;
pub mod levy;
pub mod norms;

pub use coupling::{delta_p_step, Coupling, CouplingBound};
pub use hat::{hat_delta_cut, hat_delta_p, hat_delta_p_vs_graphon, lp_distance, Alignment, Mode};
pub use levy::{degree_cdf_of_matrix, levy_prokhorov, normalized_degree_cdf};
pub use norms::{cut_norm_auto, cut_norm_exact, cut_norm_lower, matrix_lp, Cut};
