//! Deterministic Walker Delta constellation simulator and service-function-chain
//! routing laboratory.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`orbital`] propagates circular Keplerian orbits for every satellite.
//! 2. [`topology`] assembles the inter-satellite-link graph per time slot.
//! 3. [`pathdelay`] computes shortest-path propagation delays per slot and
//!    reduces them into a time-averaged delay matrix.
//! 4. [`stability`] measures how stable those delays are (coefficient of
//!    variation, per pair and per multi-hop path).
//! 5. [`sfc`] models VNF catalogs, per-satellite deployments, and realized
//!    end-to-end delays of a chosen route.
//! 6. [`router`] implements stability-aware multi-stage-graph routing and the
//!    baseline strategies it is benchmarked against.
//! 7. [`harness`] ties everything together: config files, offline artifacts,
//!    experiment orchestration, CSV emission.
//!
//! The narrative guide in `book/` walks through the same pipeline chapter by
//! chapter; its code snippets are compiled as doc-tests (see the bottom of
//! this file).

pub mod error;
pub mod harness;
pub mod orbital;
pub mod pathdelay;
pub mod router;
pub mod sfc;
pub mod stability;
pub mod topology;

mod geom;

pub use error::Error;
pub use orbital::{ConstellationConfig, SatelliteId, StateVector};

/// Book chapters are compiled as doc-tests so the guide can never drift from
/// the library. `cargo test --doc` runs every fenced Rust block in `book/src`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(Geometry, "../../../book/src/geometry.md");
    chapter!(Topology, "../../../book/src/topology.md");
    chapter!(DelayFields, "../../../book/src/delay-fields.md");
    chapter!(Stability, "../../../book/src/stability.md");
    chapter!(Routing, "../../../book/src/routing.md");
    chapter!(Experiments, "../../../book/src/experiments.md");
}
