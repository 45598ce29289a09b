//! Shared domain types: nodes, packets, transmissions, and the digital-twin
//! snapshot that piggybacks on data traffic.

use crate::sim::SimTime;
use serde::{Deserialize, Serialize};

/// Stable node identifier, unique within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Sensor,
    Buoy,
    Central,
    Auv,
    /// A jamming source; transmits noise, never data.
    Interferer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Data,
    Rts,
    Cts,
    Schedule,
    Status,
    Interference,
}

impl PacketKind {
    pub fn label(self) -> &'static str {
        match self {
            PacketKind::Data => "data",
            PacketKind::Rts => "rts",
            PacketKind::Cts => "cts",
            PacketKind::Schedule => "schedule",
            PacketKind::Status => "status",
            PacketKind::Interference => "interference",
        }
    }
}

/// Per-node tunable configuration. This is also the unit the local twin's
/// resource allocator proposes changes to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    /// Electric transmit power in watts.
    pub power_w: f64,
    /// Packet generation rate in packets per second (0 for pure relays/sinks).
    pub gen_rate_pps: f64,
    /// Payload size of generated packets in bytes.
    pub packet_size_bytes: u32,
    /// Final destination of generated packets.
    pub gen_dst: Option<NodeId>,
    /// Slot offset within the TDMA cycle.
    pub slot_offset: u32,
}

/// Minimum service thresholds a resource allocation must satisfy. Absent
/// fields are unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Demand {
    #[serde(default)]
    pub min_throughput_bps: Option<f64>,
    /// Upper bound on the per-packet loss fraction.
    #[serde(default)]
    pub max_loss: Option<f64>,
    #[serde(default)]
    pub max_latency_s: Option<f64>,
    /// Energy budget over one evaluation horizon.
    #[serde(default)]
    pub max_energy_j: Option<f64>,
}

/// State summary for one node as known by some local twin.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStateSnap {
    /// Time the state was captured at its origin.
    pub at: SimTime,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub energy_j: f64,
    pub config: NodeConfig,
    /// Queued packets created by the node itself.
    pub queue_own: u32,
    /// Queued packets the node is relaying for others.
    pub queue_fwd: u32,
    /// Buffer composition in service order, as (size_bytes, own) pairs.
    /// Twin replicas need this to reproduce throughput through congested
    /// periods where the backlog mixes packet sizes from before and after a
    /// reconfiguration; counts alone would misprice the drain.
    pub queue_sizes: Vec<(u32, bool)>,
    /// Absolute time of the next scheduled packet generation.
    pub next_gen_at: Option<SimTime>,
}

/// Environment estimate held by a local twin, scoped to its own receptions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnvSnap {
    /// Estimated interference at this node, as received-equivalent acoustic
    /// watts, with the time the estimate was formed. `None` means no
    /// interference has been diagnosed.
    pub interference: Option<(f64, SimTime)>,
    /// Mean SNR of recent successful receptions, if any.
    pub mean_snr_db: Option<f64>,
}

/// The digital-twin summary a node piggybacks on its outgoing data packets:
/// its own state, what it currently believes about its neighbors, and its
/// environment estimate. Costs zero extra transmissions by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DtSnapshot {
    pub origin: NodeId,
    pub taken_at: SimTime,
    pub own: NodeStateSnap,
    pub neighbors: Vec<(NodeId, NodeStateSnap)>,
    pub env: EnvSnap,
}

/// Protocol-level payload metadata. These are simulation-side descriptions of
/// what a packet carries, not serialized bytes.
#[derive(Debug, Clone, PartialEq)]
pub enum PayloadMeta {
    None,
    /// RTS probe sent at maximum power so the receiver can size the channel.
    PowerProbe,
    /// CTS reply carrying the receiver's minimum workable transmit power.
    PowerGrant { power_w: f64 },
    /// Receiver-measured link BER piggybacked on reverse traffic.
    LinkFeedback { ber: f64 },
    /// Status-acquisition downlink notice.
    Schedule { round: u32 },
    /// Status-acquisition uplink report.
    Status { round: u32 },
    /// A distributed artifact (model parameters, slice schedule, ...).
    Artifact { id: u64, bytes: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub created_at: SimTime,
    pub payload: PayloadMeta,
    /// Twin summary piggybacked by the transmitting node, refreshed per hop.
    pub dt: Option<DtSnapshot>,
}

/// One in-flight transmission.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub id: u64,
    pub tx: NodeId,
    pub tx_pos: [f64; 3],
    pub packet: Packet,
    /// Electric transmit power in watts.
    pub power_w: f64,
    pub start: SimTime,
    /// Time on the wire (preamble + payload + calibrated overhead).
    pub duration: f64,
}

impl Transmission {
    pub fn end(&self) -> SimTime {
        self.start + self.duration
    }
}

/// Outcome of one reception attempt at one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered,
    /// Destroyed by another reception overlapping in time at this receiver.
    Collided,
    /// Detected but demodulated with bit errors.
    Corrupted,
    /// Received level below the modem's detection threshold.
    OutOfRange,
}

impl DeliveryOutcome {
    pub fn label(self) -> &'static str {
        match self {
            DeliveryOutcome::Delivered => "delivered",
            DeliveryOutcome::Collided => "collided",
            DeliveryOutcome::Corrupted => "corrupted",
            DeliveryOutcome::OutOfRange => "out_of_range",
        }
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}
