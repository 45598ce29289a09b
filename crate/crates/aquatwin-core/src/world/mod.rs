//! World model: declarative scenario specs, the event-driven network engine,
//! and the trace it produces.

pub mod engine;
pub mod spec;
pub mod trace;

pub use engine::{run, Simulation};
pub use spec::{
    CollectRole, DtParams, Mutation, MutationKind, NodeSpec, TrafficMode, WorldSpec, BROADCAST,
};
pub use trace::{Counters, DecisionRec, DeliveryRec, Row, SendRec, Trace};
