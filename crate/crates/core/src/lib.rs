//! Unified control/data flow (UCDF) diagrams.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! file system or the process environment lives in `ucdf-cli`.
//!
//! * [`model`] holds the diagram graph and its builders.
//! * [`validate`] checks a diagram against the closed rule set.
//! * [`graph`] has the queries: alias classes, contraction, data sources.
//! * [`text`] is the line-oriented `.ucdf` format.
//! * [`flowc`] is the Flow-C front end, [`extract`] turns a resolved
//!   program into a diagram and [`trace`] runs it and checks the diagram
//!   against the execution.
//! * [`render`] emits DOT and SVG.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod extract;
pub mod flowc;
pub mod graph;
pub mod model;
pub mod render;
pub mod text;
pub mod trace;
pub mod validate;

mod fnv;

pub use model::{
    Diagram, DiagramNode, Dispatch, Edge, EdgeId, EdgeKind, Endpoint, HolderKind, Marker,
    ModelError, NodeId, NodeKind, NodeSpec, OrderMark, Timeline, TimelineId, TimelineOwner,
    TimelineSpec,
};
pub use validate::{validate, RuleCode, Violation};
