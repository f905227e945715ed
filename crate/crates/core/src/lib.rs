//! Computational tools for traversing vector fields on compact domains:
//! boundary tangency strata and multiplicities, trajectory integration and
//! censuses, trajectory-space graphs, and the chain-level machinery used to
//! bound simplicial norms (straightening, anti-symmetrization, Følner
//! averaging, ℓ¹ linear programs, stratified cycle conditions and
//! ε-partitions of stratified spaces).

pub mod census;
pub mod chain;
pub mod error;
pub mod expr;
pub mod flow;
pub mod graph;
pub mod halton;
mod linalg;
pub mod lp;
pub mod norm;
pub mod ode;
pub mod scene;
pub mod partition;
pub mod strata;
pub mod stratcheck;

pub use census::{
    count_mm_2d, count_mm_3d, make_local_model, roundtrip_type, CensusOptions, LocalModel, MMCensus,
};
pub use error::{Error, Result};
pub use expr::ScalarExpr;
pub use flow::{
    admissible_types, check_traversally_generic, integrate_trajectory, linearized_transport,
    reduced_multiplicity, trajectory_through, BoundaryEvent, EventKind, Flow, FlowOptions,
    Trajectory,
};
pub use scene::{lie_derivative, FlowJet, Scene, SceneFile};
pub use graph::{build_trajectory_graph_2d, GraphOptions, TrajectoryGraph};
pub use strata::{
    check_boundary_generic, find_strata, point_multiplicity, StratumSample, TangencyPoint,
};
pub use chain::{amenable_average, AverageMode, AverageReport, FolnerSet, Group, LabeledChain, LabeledSimplex, PartialColoring};
pub use lp::{minimize, verify_certificate, LpSolution};
pub use norm::{norm_lp, norm_lp_straight, NormReport, StraightModel, TriangulatedSurface};
pub use partition::{build_partition, verify_partition, DiscretizedStratifiedSpace, Partition, PartitionCheck};
pub use stratcheck::{check_stratified_cycle, Condition, SimplexLabels, SimplexVerdict, StratLabel, Stratification};
