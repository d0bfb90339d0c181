//! The substrate network: graph topology, min-hop routing, the greedy
//! DU/CU placement heuristic, and the linear power and electricity-cost
//! model that the upper-level auction charges against.

mod graph;
mod placement;

pub use graph::{
    build_graph, shortest_path, GraphConfig, LinkDefaults, LinkOverride, LinkSpec, NetError,
    NetworkGraph, NodeDefaults, NodeOverride, NodeRoles, NodeSpec, PowerParams,
};
pub use placement::{
    check_placement, compute_energy_cost, Placement, PlacementEngine, PlacedSlice, SliceSpec,
};
