//! Group-labelled simplicial chains and the amenable averaging operator.

pub mod amenable;
pub mod group;
pub mod io;
pub mod simplex;

pub use amenable::{
    amenable_average, classify_essential, essentiality, folner_set, involution_partial_sum, same_color_labels,
    square_fraction, AverageMode, AverageReport, Essentiality, FolnerSet, PartialColoring, DEFAULT_SIZE_CAP,
};
pub use group::{Elem, Group};
pub use io::{chain_to_json, parse_chain, parse_coefficient, parse_coloring};
pub use simplex::{permutations, LabeledChain, LabeledSimplex, Shape};
