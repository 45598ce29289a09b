//! The local twin's database: everything one node knows about itself, its
//! neighborhood, and its acoustic environment, fed exclusively by in-band
//! observations (own state changes, received or overheard packets, and the
//! twin summaries piggybacked on them).

use crate::sim::SimTime;
use crate::types::{DeliveryOutcome, DtSnapshot, NodeId, NodeStateSnap, PacketKind};
use std::collections::{BTreeMap, VecDeque};

/// One reception attempt as recorded by the receiving modem.
#[derive(Debug, Clone, Copy)]
pub struct CommDatum {
    pub t: SimTime,
    /// Transmitting node, as decoded from the preamble.
    pub counterpart: NodeId,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub outcome: DeliveryOutcome,
    pub snr_db: f64,
    /// Electric transmit power of the counterpart if known from protocol
    /// state (grants, configured schedules), used for channel inversion.
    pub counterpart_power_w: Option<f64>,
}

/// Identity of a tracked behavior metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricId {
    SentTotal,
    ReceivedOk,
    SuccessRate,
    ThroughputBps,
    EnergyJ,
}

impl MetricId {
    pub fn label(self) -> &'static str {
        match self {
            MetricId::SentTotal => "sent",
            MetricId::ReceivedOk => "received",
            MetricId::SuccessRate => "success_rate",
            MetricId::ThroughputBps => "throughput_bps",
            MetricId::EnergyJ => "energy_j",
        }
    }

    /// Whether larger values are better. Degradation of a benefit metric is
    /// the real value falling below the prediction; for a cost metric it is
    /// the real value rising above it.
    pub fn is_benefit(self) -> bool {
        !matches!(self, MetricId::EnergyJ)
    }

    pub fn all() -> [MetricId; 5] {
        [
            MetricId::SentTotal,
            MetricId::ReceivedOk,
            MetricId::SuccessRate,
            MetricId::ThroughputBps,
            MetricId::EnergyJ,
        ]
    }
}

/// Windowed per-interval values of one metric, indexed by perception
/// interval. Ingest is idempotent per interval.
#[derive(Debug, Clone, Default)]
pub struct MetricSeries {
    values: VecDeque<(u64, f64)>,
    capacity: usize,
}

impl MetricSeries {
    pub fn new(capacity: usize) -> Self {
        Self { values: VecDeque::new(), capacity }
    }

    pub fn push(&mut self, interval: u64, value: f64) {
        if self.values.iter().any(|(k, _)| *k == interval) {
            return;
        }
        self.values.push_back((interval, value));
        while self.values.len() > self.capacity {
            self.values.pop_front();
        }
    }

    pub fn latest(&self) -> Option<(u64, f64)> {
        self.values.back().copied()
    }

    pub fn get(&self, interval: u64) -> Option<f64> {
        self.values.iter().find(|(k, _)| *k == interval).map(|(_, v)| *v)
    }

    /// Values in interval order (the stored window).
    pub fn window(&self) -> Vec<f64> {
        self.values.iter().map(|(_, v)| *v).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// What the node believes about one neighbor.
#[derive(Debug, Clone)]
pub struct NeighborEntry {
    pub state: NodeStateSnap,
    /// When evidence about this neighbor last arrived here.
    pub heard_at: SimTime,
    /// Who reported it (the neighbor itself, or a relaying snapshot).
    pub via: NodeId,
    /// Recently adopted states, oldest first. Replicas anchor on the newest
    /// state not later than their start time, so a short history is kept.
    pub history: VecDeque<NodeStateSnap>,
}

const NEIGHBOR_HISTORY: usize = 16;
const OWN_HISTORY: usize = 32;

fn push_history(hist: &mut VecDeque<NodeStateSnap>, state: NodeStateSnap, cap: usize) {
    if let Some(last) = hist.back_mut() {
        if last.at == state.at {
            *last = state;
            return;
        }
    }
    hist.push_back(state);
    while hist.len() > cap {
        hist.pop_front();
    }
}

/// Environment knowledge derived from reception history.
#[derive(Debug, Clone, Default)]
pub struct EnvInfo {
    /// Ambient noise floor estimate, linear received watts.
    pub noise_floor_w: Option<f64>,
    /// Diagnosed interference at this node (received-equivalent acoustic
    /// watts) and when it was diagnosed.
    pub interference_w: Option<(f64, SimTime)>,
    /// Recent reception measurements, newest last.
    pub snr_window: VecDeque<(SimTime, f64, DeliveryOutcome)>,
}

/// Datum kinds accepted by [`LocalDatabase::ingest`].
#[derive(Debug, Clone)]
pub enum DtDatum {
    /// The node's own state (uploaded immediately whenever it changes).
    OwnState(NodeStateSnap),
    /// A twin summary read from a delivered or overheard packet.
    Snapshot(DtSnapshot),
    /// A reception attempt at this node.
    Comm(CommDatum),
    /// A per-interval behavior metric computed by the node itself.
    Metric { interval: u64, id: MetricId, value: f64 },
}

#[derive(Debug, Clone)]
pub struct LocalDatabase {
    pub node: NodeId,
    pub own: NodeStateSnap,
    pub own_history: VecDeque<NodeStateSnap>,
    pub neighbors: BTreeMap<NodeId, NeighborEntry>,
    pub env: EnvInfo,
    /// Excess noise believed present at *other* nodes (received-equivalent
    /// acoustic watts), learned from their reported link quality. The own
    /// estimate lives in `env`; this map lets a sender evaluate candidate
    /// powers against the conditions at its receiver.
    pub remote_noise_w: BTreeMap<NodeId, (f64, SimTime)>,
    pub metrics: BTreeMap<MetricId, MetricSeries>,
    pub comm_log: VecDeque<CommDatum>,
    comm_capacity: usize,
}

impl LocalDatabase {
    pub fn new(node: NodeId, initial: NodeStateSnap) -> Self {
        let mut metrics = BTreeMap::new();
        for id in MetricId::all() {
            metrics.insert(id, MetricSeries::new(256));
        }
        let mut own_history = VecDeque::new();
        own_history.push_back(initial.clone());
        Self {
            node,
            own: initial,
            own_history,
            neighbors: BTreeMap::new(),
            env: EnvInfo::default(),
            remote_noise_w: BTreeMap::new(),
            metrics,
            comm_log: VecDeque::new(),
            comm_capacity: 512,
        }
    }

    /// Ingest one datum. Newest-timestamp-wins per (source, field); stale or
    /// duplicate data leave the database unchanged, so ingest is idempotent.
    pub fn ingest(&mut self, datum: DtDatum) {
        match datum {
            DtDatum::OwnState(snap) => {
                if snap.at >= self.own.at {
                    self.own = snap.clone();
                    push_history(&mut self.own_history, snap, OWN_HISTORY);
                }
            }
            DtDatum::Snapshot(snap) => {
                let via = snap.origin;
                if snap.origin != self.node {
                    self.apply_neighbor_state(snap.origin, snap.own.clone(), snap.taken_at, via);
                    // A neighbor advertising its own diagnosed interference
                    // describes the conditions at *its* end of the link —
                    // exactly what a sender needs to size power toward it.
                    if let Some((w, at)) = snap.env.interference {
                        let newer = self
                            .remote_noise_w
                            .get(&snap.origin)
                            .is_none_or(|(_, t)| at > *t);
                        if newer {
                            self.remote_noise_w.insert(snap.origin, (w, at));
                        }
                    }
                }
                for (id, state) in &snap.neighbors {
                    // Own state is authoritative; ignore what others report
                    // about this node.
                    if *id == self.node {
                        continue;
                    }
                    self.apply_neighbor_state(*id, state.clone(), snap.taken_at, via);
                }
            }
            DtDatum::Comm(c) => {
                if self.comm_log.back().is_some_and(|last| {
                    last.t == c.t && last.counterpart == c.counterpart
                }) {
                    return;
                }
                self.env.snr_window.push_back((c.t, c.snr_db, c.outcome));
                while self.env.snr_window.len() > 64 {
                    self.env.snr_window.pop_front();
                }
                self.comm_log.push_back(c);
                while self.comm_log.len() > self.comm_capacity {
                    self.comm_log.pop_front();
                }
            }
            DtDatum::Metric { interval, id, value } => {
                self.metrics
                    .entry(id)
                    .or_insert_with(|| MetricSeries::new(256))
                    .push(interval, value);
            }
        }
    }

    fn apply_neighbor_state(
        &mut self,
        id: NodeId,
        state: NodeStateSnap,
        heard_at: SimTime,
        via: NodeId,
    ) {
        match self.neighbors.get_mut(&id) {
            Some(entry) => {
                if state.at > entry.state.at {
                    entry.state = state.clone();
                    entry.heard_at = heard_at;
                    entry.via = via;
                    push_history(&mut entry.history, state, NEIGHBOR_HISTORY);
                } else if heard_at > entry.heard_at {
                    entry.heard_at = heard_at;
                }
            }
            None => {
                let mut history = VecDeque::new();
                history.push_back(state.clone());
                self.neighbors
                    .insert(id, NeighborEntry { state, heard_at, via, history });
            }
        }
    }

    /// Newest believed state of `id` whose anchor time is not later than `t`,
    /// if any is still in the kept history.
    pub fn state_as_of(&self, id: NodeId, t: SimTime) -> Option<NodeStateSnap> {
        if id == self.node {
            return self.own_history.iter().rev().find(|s| s.at <= t).cloned();
        }
        self.neighbors
            .get(&id)?
            .history
            .iter()
            .rev()
            .find(|s| s.at <= t)
            .cloned()
    }

    /// The twin summary this node piggybacks on outgoing data packets.
    pub fn snapshot(&self, now: SimTime) -> DtSnapshot {
        DtSnapshot {
            origin: self.node,
            taken_at: now,
            own: self.own.clone(),
            neighbors: self
                .neighbors
                .iter()
                .map(|(id, e)| (*id, e.state.clone()))
                .collect(),
            env: crate::types::EnvSnap {
                interference: self.env.interference_w,
                mean_snr_db: self.mean_recent_snr(),
            },
        }
    }

    fn mean_recent_snr(&self) -> Option<f64> {
        let ok: Vec<f64> = self
            .env
            .snr_window
            .iter()
            .filter(|(_, _, o)| *o == DeliveryOutcome::Delivered)
            .map(|(_, s, _)| *s)
            .collect();
        if ok.is_empty() {
            None
        } else {
            Some(crate::math::mean(&ok))
        }
    }

    pub fn series(&self, id: MetricId) -> Option<&MetricSeries> {
        self.metrics.get(&id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::NodeConfig;

    fn snap(at: f64, power: f64) -> NodeStateSnap {
        NodeStateSnap {
            at,
            position: [0.0; 3],
            velocity: [0.0; 3],
            energy_j: 1000.0,
            config: NodeConfig {
                power_w: power,
                gen_rate_pps: 0.03,
                packet_size_bytes: 400,
                gen_dst: Some(NodeId(3)),
                slot_offset: 0,
            },
            queue_own: 0,
            queue_fwd: 0,
            queue_sizes: Vec::new(),
            next_gen_at: None,
        }
    }

    fn dt_snap(origin: u32, at: f64, power: f64) -> DtSnapshot {
        DtSnapshot {
            origin: NodeId(origin),
            taken_at: at,
            own: snap(at, power),
            neighbors: vec![],
            env: Default::default(),
        }
    }

    #[test]
    fn duplicate_ingest_leaves_state_unchanged() {
        let mut db = LocalDatabase::new(NodeId(3), snap(0.0, 2.0));
        db.ingest(DtDatum::Snapshot(dt_snap(2, 10.0, 2.0)));
        let before = format!("{:?}", db.neighbors);
        db.ingest(DtDatum::Snapshot(dt_snap(2, 10.0, 2.0)));
        assert_eq!(before, format!("{:?}", db.neighbors));
    }

    #[test]
    fn stale_snapshot_is_ignored_newer_wins() {
        let mut db = LocalDatabase::new(NodeId(3), snap(0.0, 2.0));
        db.ingest(DtDatum::Snapshot(dt_snap(2, 10.0, 2.0)));
        db.ingest(DtDatum::Snapshot(dt_snap(2, 5.0, 9.0)));
        assert_eq!(db.neighbors[&NodeId(2)].state.config.power_w, 2.0);
        db.ingest(DtDatum::Snapshot(dt_snap(2, 12.0, 4.0)));
        assert_eq!(db.neighbors[&NodeId(2)].state.config.power_w, 4.0);
    }

    #[test]
    fn neighbor_reports_about_self_are_ignored() {
        let mut db = LocalDatabase::new(NodeId(3), snap(0.0, 2.0));
        let mut s = dt_snap(2, 10.0, 2.0);
        s.neighbors.push((NodeId(3), snap(99.0, 77.0)));
        db.ingest(DtDatum::Snapshot(s));
        assert_eq!(db.own.config.power_w, 2.0);
        assert!(!db.neighbors.contains_key(&NodeId(3)));
    }

    #[test]
    fn metric_series_is_idempotent_per_interval() {
        let mut s = MetricSeries::new(8);
        s.push(0, 3.0);
        s.push(0, 99.0);
        s.push(1, 4.0);
        assert_eq!(s.window(), vec![3.0, 4.0]);
        assert_eq!(s.get(0), Some(3.0));
    }

    #[test]
    fn state_history_answers_as_of_queries() {
        let mut db = LocalDatabase::new(NodeId(3), snap(0.0, 2.0));
        db.ingest(DtDatum::Snapshot(dt_snap(2, 10.0, 2.0)));
        db.ingest(DtDatum::Snapshot(dt_snap(2, 20.0, 4.0)));
        db.ingest(DtDatum::Snapshot(dt_snap(2, 30.0, 6.0)));
        assert_eq!(db.state_as_of(NodeId(2), 25.0).unwrap().config.power_w, 4.0);
        assert_eq!(db.state_as_of(NodeId(2), 30.0).unwrap().config.power_w, 6.0);
        assert!(db.state_as_of(NodeId(2), 5.0).is_none());
        db.ingest(DtDatum::OwnState(snap(50.0, 2.0)));
        assert_eq!(db.state_as_of(NodeId(3), 60.0).unwrap().at, 50.0);
        assert_eq!(db.state_as_of(NodeId(3), 10.0).unwrap().at, 0.0);
    }

    #[test]
    fn relayed_neighbor_tables_extend_knowledge() {
        // Node 3 never hears node 1 directly, but node 2's snapshot carries
        // what node 2 knows about node 1.
        let mut db = LocalDatabase::new(NodeId(3), snap(0.0, 2.0));
        let mut s = dt_snap(2, 20.0, 2.0);
        s.neighbors.push((NodeId(1), snap(15.0, 2.0)));
        db.ingest(DtDatum::Snapshot(s));
        assert!(db.neighbors.contains_key(&NodeId(1)));
        assert_eq!(db.neighbors[&NodeId(1)].via, NodeId(2));
        assert_eq!(db.neighbors[&NodeId(1)].state.at, 15.0);
    }
}
