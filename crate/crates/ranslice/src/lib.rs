//! Deterministic simulator and solver library for two-level hierarchical
//! slice auctions in a 5G RAN.
//!
//! An operator (MNO) auctions network slices to virtual operators (MVNOs)
//! every timeslot, pricing feasibility against a power-aware DU/CU
//! placement on a substrate graph. The MVNOs resell capacity to end users
//! through a pair-bid double auction in which users bid for slices and
//! MVNOs quote counter-prices back. Both levels clear greedily with
//! monotone rankings, charge winners an externality price floored by a
//! base access price, and exact solvers are available as desk-scale
//! oracles for verification.
//!
//! The narrative guide lives in `book/`; every code snippet in it builds
//! as a doc-test of this crate.
//!
//! ```
//! use ranslice::fixtures::run_walkthrough;
//!
//! let out = run_walkthrough();
//! assert_eq!(out.allocation.surplus, 250.0);
//! ```

pub mod baselines;
pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod lower;
pub mod model;
pub mod net;
pub mod oracle;
pub mod pricing;
pub mod sim;
pub mod testgen;
pub mod upper;

pub use config::{Config, ConfigError, ResaleProfile};
pub use model::{
    compatible, is_active, CounterBidPolicy, MvnoId, MvnoProfile, NodeId, Request, RequestId,
    ServiceCatalog, ServiceType, ServiceTypeId, Slice, SliceId, SliceOwner,
};
pub use sim::{run_simulation, Algorithm, Scenario, ScenarioOverrides, SimMetrics};

// The book chapters double as doc-tests so the guide cannot drift from
// the API. `cargo test --doc` compiles and runs every snippet.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            #[allow(unused)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(domain_model, "../../../book/src/domain-model.md");
    chapter!(substrate, "../../../book/src/substrate.md");
    chapter!(lower_auction, "../../../book/src/lower-auction.md");
    chapter!(upper_auction, "../../../book/src/upper-auction.md");
    chapter!(pricing, "../../../book/src/pricing.md");
    chapter!(simulation, "../../../book/src/simulation.md");
    chapter!(verification, "../../../book/src/verification.md");
    chapter!(experiments, "../../../book/src/experiments.md");
}
