//! Deterministic discrete-event simulator for underwater acoustic sensor
//! networks with a two-layer digital-twin framework built in.
//!
//! The crate is organized around a single-threaded event engine:
//!
//! - [`sim`], [`channel`], [`types`]: event queue, acoustic channel model,
//!   and shared domain types.
//! - [`protocols`]: slotted MAC, static routing, power-control MAC family.
//! - [`world`]: the network simulation itself (nodes, queues, traffic,
//!   receptions, energy ledger, trace output).
//! - [`localdt`]: per-node twin (database, metric prediction, degradation
//!   detection and diagnosis, resource allocation).
//! - [`globaldt`]: fused network replica (aggregation, patching, status
//!   acquisition, artifact distribution).
//! - [`cmfd`]: centralized hybrid multi-agent RL (value mixing and
//!   policy-gradient variants) trained on mixed real and twin transitions.
//! - [`tnsd`]: task decomposition, demand extraction, network slicing, and
//!   per-node instruction dispatch.
//! - [`scenario`], [`experiments`], [`report`]: scenario files, end-to-end
//!   experiment drivers, and run reports.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod localdt;
pub mod math;
pub mod protocols;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod types;
pub mod world;

pub use channel::{
    attenuation_db, ber, packet_loss_prob, propagation_delay, snr_db, transmission_delay,
    ChannelParams,
};
pub use error::{ConfigError, SimError};
pub use localdt::{LocalDatabase, LocalTwin, MetricId, StaticKnowledge};
pub use protocols::{compute_slot_length, next_hop, pmac_may_send, RoutingTable, SlotSchedule};
pub use sim::{EventQueue, SimTime};
pub use types::{
    DeliveryOutcome, DtSnapshot, NodeConfig, NodeId, NodeKind, Packet, PacketKind, PayloadMeta,
    Transmission,
};
pub use world::{run, DtParams, Mutation, MutationKind, NodeSpec, Trace, TrafficMode, WorldSpec};
