//! Declarative description of a network world: everything needed to run a
//! simulation, and nothing tied to runtime state. Replicas inside digital
//! twins are built by constructing one of these from believed state.

use crate::channel::ChannelParams;
use crate::protocols::{PcVariant, RoutingTable, SlotSchedule};
use crate::sim::SimTime;
use crate::types::{NodeConfig, NodeId, NodeKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Broadcast destination: every node in detection range accepts the packet.
pub const BROADCAST: NodeId = NodeId(u32::MAX);

/// How nodes decide what to transmit in their slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficMode {
    /// Rate-driven generation into a FIFO queue; one packet per owned slot.
    Periodic,
    /// Link lab: a requester/responder pair exchanging fresh packets every
    /// owned slot under one of the power-control variants.
    PowerControl,
    /// Scripted status collection: schedule flood down a tree, then
    /// store-and-forward status uploads at precomputed slots.
    StatusCollection,
}

/// Role parameters for status-collection mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectRole {
    /// The collection root every status report flows to.
    pub root: NodeId,
    /// Hops from the collection root (root = 0).
    pub depth: u32,
    /// Absolute slot index at which this node originates its status report.
    pub upload_slot: Option<i64>,
    /// Number of status reports the root expects (root only).
    pub expect_statuses: u32,
    /// Whether this node re-broadcasts the schedule announcement.
    pub forwards_schedule: bool,
    #[serde(default = "default_schedule_bytes")]
    pub schedule_bytes: u32,
    #[serde(default = "default_status_bytes")]
    pub status_bytes: u32,
}

fn default_schedule_bytes() -> u32 {
    50
}

fn default_status_bytes() -> u32 {
    600
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub kind: NodeKind,
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    pub initial_energy_j: f64,
    pub config: NodeConfig,
    /// Pre-seeded backlog of own packets (used by replicas).
    #[serde(default)]
    pub queue_own: u32,
    /// Pre-seeded backlog of forwarded packets (used by replicas).
    #[serde(default)]
    pub queue_fwd: u32,
    /// Backlog composition in service order as (size_bytes, own) pairs.
    /// When present it overrides the counts above, letting replicas carry a
    /// mixed-size queue across a packet-size reconfiguration.
    #[serde(default)]
    pub queue_sizes: Vec<(u32, bool)>,
    /// Absolute time of next generation; None derives it from the rate.
    #[serde(default)]
    pub next_gen_at: Option<SimTime>,
    /// Nodes can start dormant and be activated by a mutation, or be
    /// injected mid-run by a replica anchor.
    #[serde(default = "default_true")]
    pub starts_up: bool,
    /// Inject this believed state at the given time (replica reconstruction
    /// from piggybacked snapshots anchored at slot starts).
    #[serde(default)]
    pub anchor_t: Option<SimTime>,
    /// Run a local twin on this node.
    #[serde(default)]
    pub hosts_local_dt: bool,
    /// Host the fleet-level twin on this node.
    #[serde(default)]
    pub hosts_global_dt: bool,
    /// Power-control behavior for PowerControl mode.
    #[serde(default)]
    pub pc_variant: Option<PcVariant>,
    /// Continuous acoustic interference source level driver: electric watts
    /// fed to the projector while active.
    #[serde(default)]
    pub interferer_power_w: f64,
    #[serde(default)]
    pub interferer_active: bool,
    /// Extra receiver-side noise (linear watts) believed present at this
    /// node. Used by replicas to encode diagnosed interference.
    #[serde(default)]
    pub extra_noise_w: f64,
    /// Status-collection role, if any.
    #[serde(default)]
    pub collect: Option<CollectRole>,
}

fn default_true() -> bool {
    true
}

impl NodeSpec {
    pub fn stationary(
        id: u32,
        kind: NodeKind,
        position: [f64; 3],
        config: NodeConfig,
    ) -> Self {
        Self {
            id: NodeId(id),
            kind,
            position,
            velocity: [0.0; 3],
            initial_energy_j: 1.0e7,
            config,
            queue_own: 0,
            queue_fwd: 0,
            queue_sizes: Vec::new(),
            next_gen_at: None,
            starts_up: true,
            anchor_t: None,
            hosts_local_dt: false,
            hosts_global_dt: false,
            pc_variant: None,
            interferer_power_w: 0.0,
            interferer_active: false,
            extra_noise_w: 0.0,
            collect: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    /// Change generation rate on every node that generates traffic.
    SendingRate(f64),
    /// Change payload size on every node that generates traffic.
    PacketSize(u32),
    /// Change the slot length; the slot clock re-anchors at the mutation
    /// time so earlier boundaries are unaffected.
    SlotLength(f64),
    /// Switch an interference source on or off.
    InterfererActive(NodeId, bool),
    /// Set a node's transmit power.
    NodePower(NodeId, f64),
    /// Set a node's velocity (drift).
    NodeVelocity(NodeId, [f64; 3]),
    /// Bring a node up or take it down.
    NodeUp(NodeId, bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mutation {
    pub at: SimTime,
    pub kind: MutationKind,
}

/// Digital-twin wiring for a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtParams {
    /// Attach twin summaries to every data packet.
    pub piggyback: bool,
    /// Local perception cadence, seconds.
    pub perception_period_s: f64,
    /// Fleet-twin maintenance cadence, seconds (0 disables).
    pub maintenance_period_s: f64,
    /// Predictor hidden width.
    pub lstm_hidden: usize,
    /// Predictor input window length.
    pub lstm_window: usize,
    /// Relative degradation threshold.
    pub degradation_delta: f64,
    /// Forward-run replicas during perception to forecast the next interval.
    pub replicas: bool,
    /// Let local twins push scheme changes back into the node.
    pub auto_reallocate: bool,
    /// Evaluation budget for the twin's scheme optimizer.
    #[serde(default = "default_optimizer_budget")]
    pub optimizer_budget: u32,
    /// Service thresholds the allocator optimizes against; required for
    /// `auto_reallocate` to act.
    #[serde(default)]
    pub demand: Option<crate::types::Demand>,
}

fn default_optimizer_budget() -> u32 {
    64
}

impl Default for DtParams {
    fn default() -> Self {
        Self {
            piggyback: true,
            perception_period_s: 100.0,
            maintenance_period_s: 0.0,
            lstm_hidden: 12,
            lstm_window: 10,
            degradation_delta: 0.10,
            replicas: true,
            auto_reallocate: false,
            optimizer_budget: 64,
            demand: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSpec {
    pub channel: ChannelParams,
    /// Calibrated on-wire durations per payload size (seconds).
    #[serde(default)]
    pub tx_overrides: BTreeMap<u32, f64>,
    pub slots: SlotSchedule,
    pub routing: RoutingTable,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub mutations: Vec<Mutation>,
    pub mode: TrafficMode,
    /// Simulation start time. Nonzero for twin replicas reconstructing a
    /// window of an outer run; event times stay on the outer clock.
    #[serde(default)]
    pub start_s: f64,
    /// Run duration from `start_s`.
    pub horizon_s: f64,
    pub seed: u64,
    /// Cadence of metric rows in the trace.
    pub report_period_s: f64,
    #[serde(default)]
    pub dt: Option<DtParams>,
}

impl WorldSpec {
    /// A spec with no nodes and sane defaults, to be filled by builders.
    pub fn empty(seed: u64, horizon_s: f64) -> Self {
        Self {
            channel: ChannelParams::default_acoustic(),
            tx_overrides: crate::channel::calibrated_overrides(),
            slots: SlotSchedule::new(6.0, 1, BTreeMap::new()),
            routing: RoutingTable::default(),
            nodes: Vec::new(),
            mutations: Vec::new(),
            mode: TrafficMode::Periodic,
            start_s: 0.0,
            horizon_s,
            seed,
            report_period_s: 100.0,
            dt: None,
        }
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError::Invalid;
        if !(self.horizon_s > 0.0) {
            return Err(Invalid("horizon must be positive".into()));
        }
        if !(self.slots.slot_len_s > 0.0) {
            return Err(Invalid("slot length must be positive".into()));
        }
        if self.slots.slot_cycle == 0 {
            return Err(Invalid("slot cycle must be nonzero".into()));
        }
        if !(self.report_period_s > 0.0) {
            return Err(Invalid("report period must be positive".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(Invalid(format!("duplicate node id {}", n.id)));
            }
            if n.config.gen_rate_pps < 0.0 {
                return Err(Invalid(format!("node {} negative rate", n.id)));
            }
            if n.config.power_w < 0.0 || n.config.power_w > crate::protocols::MAX_POWER_W {
                return Err(Invalid(format!("node {} power out of range", n.id)));
            }
            if n.config.gen_rate_pps > 0.0 && n.config.gen_dst.is_none() {
                return Err(Invalid(format!("node {} generates without destination", n.id)));
            }
        }
        for m in &self.mutations {
            if m.at < 0.0 {
                return Err(Invalid("mutation before start".into()));
            }
        }
        Ok(())
    }
}
