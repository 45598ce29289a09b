//! Per-node digital twin. Each node keeps a [`LocalDatabase`] of everything
//! it has observed in-band, and nodes that host a twin additionally run a
//! perception loop: score last interval's predictions against what actually
//! happened, diagnose any degradation (reconfiguration vs. interference),
//! and forecast the next interval twice over — with a learned per-metric
//! predictor and with a faithful replica simulation reconstructed from the
//! piggybacked state snapshots.

pub mod alloc;
pub mod db;
pub mod lstm;

use std::collections::BTreeMap;

use crate::channel::{self, ChannelParams};
use crate::protocols::{RoutingTable, SlotSchedule};
use crate::sim::SimTime;
use crate::types::{distance, DeliveryOutcome, NodeConfig, NodeId, NodeKind, NodeStateSnap};
use crate::world::spec::{DtParams, NodeSpec, TrafficMode, WorldSpec};

pub use alloc::{
    measure_own_traffic, AllocationScheme, EvaluationResult, OptimizeOutcome, TunableGrids,
};
pub use db::{CommDatum, DtDatum, LocalDatabase, MetricId, MetricSeries};
pub use lstm::{Lstm, Predictor};

/// Training passes per perception when refitting a metric predictor.
const TRAIN_EPOCHS: usize = 12;

/// Acceptance bound for the hindcast fit: sum of squared relative errors of
/// own sent/received counts between the hypothesis replay and reality.
const HINDCAST_FIT_TOL: f64 = 0.25;

/// Deployment decisions replay candidates over several perception periods:
/// replica losses are sampled from finitely many frames, and a longer window
/// keeps a marginal scheme from slipping through on a lucky draw.
const DEPLOY_EVAL_PERIODS: f64 = 10.0;

// ============================================================================
// Static network knowledge
// ============================================================================

/// Deployment-time facts every node is provisioned with before launch:
/// channel model, schedule, routing, and the as-deployed node list. Twins
/// fall back to these for nodes they have never heard from. Interference
/// sources are not part of the deployment plan — they are precisely the
/// thing a twin has to discover from measurements.
#[derive(Debug, Clone)]
pub struct StaticKnowledge {
    pub channel: ChannelParams,
    pub tx_overrides: BTreeMap<u32, f64>,
    pub slots: SlotSchedule,
    pub routing: RoutingTable,
    pub deployment: Vec<(NodeId, NodeKind, [f64; 3], NodeConfig)>,
    pub mode: TrafficMode,
    /// Where traffic converges; fleet-level forecasts report throughput here.
    pub sink: NodeId,
    pub report_period_s: f64,
    pub seed: u64,
}

impl StaticKnowledge {
    pub fn from_spec(spec: &WorldSpec) -> Self {
        let deployment = spec
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Interferer)
            .map(|n| (n.id, n.kind, n.position, n.config))
            .collect();
        let sink = match spec.mode {
            TrafficMode::StatusCollection => spec
                .nodes
                .iter()
                .find_map(|n| n.collect.as_ref().map(|c| c.root)),
            _ => {
                let mut votes: BTreeMap<NodeId, u32> = BTreeMap::new();
                for n in &spec.nodes {
                    if let Some(d) = n.config.gen_dst {
                        *votes.entry(d).or_default() += 1;
                    }
                }
                votes
                    .into_iter()
                    .max_by_key(|&(id, c)| (c, std::cmp::Reverse(id)))
                    .map(|(id, _)| id)
            }
        }
        .or_else(|| spec.nodes.first().map(|n| n.id))
        .unwrap_or(NodeId(0));
        Self {
            channel: spec.channel.clone(),
            tx_overrides: spec.tx_overrides.clone(),
            slots: spec.slots.clone(),
            routing: spec.routing.clone(),
            deployment,
            mode: spec.mode,
            sink,
            report_period_s: spec.report_period_s,
            seed: spec.seed,
        }
    }
}

// ============================================================================
// Perception output
// ============================================================================

/// What one perception pass hands back to the hosting node.
#[derive(Debug, Clone, Default)]
pub struct PerceptionReport {
    /// Values describing the completed interval, stamped at its start so
    /// they line up with the realized metric rows.
    pub rows: Vec<(String, f64)>,
    /// Predictions for the interval that starts now, stamped at now.
    pub forecast: Vec<(String, f64)>,
    /// Audit events (degradation flags, diagnosis results).
    pub notes: Vec<(String, f64)>,
    /// A reallocation scheme ready for deployment, if one was optimized.
    pub scheme: Option<NodeConfig>,
}

/// Root cause attributed to a perceived performance degradation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnosis {
    /// Explained by a recent known configuration or schedule change, either
    /// our own or one observed on a neighbor.
    Reconfigured,
    /// The node's own buffer is filling faster than its slots drain it.
    Congestion,
    /// An undeclared noise source; the estimate is received-equivalent
    /// acoustic watts at this node.
    Interference { watts: f64 },
    /// A neighbor is gone: its last reported state shows a depleted battery,
    /// or nothing has been heard from it for multiple perception periods.
    NeighborDown(NodeId),
    Unknown,
}

/// A benefit metric degrades when reality falls short of the expectation; a
/// cost metric degrades when reality overshoots it. The threshold is
/// relative to the expectation, floored at one unit so near-zero predictions
/// don't flag on noise.
pub fn metric_degraded(id: MetricId, predicted: f64, real: f64, delta: f64) -> bool {
    let scale = predicted.abs().max(1.0);
    if id.is_benefit() {
        predicted - real > delta * scale
    } else {
        real - predicted > delta * scale
    }
}

// ============================================================================
// Local twin
// ============================================================================

/// The twin attached to one node. Every node carries the database (it is
/// what gets piggybacked), but only nodes flagged as twin hosts run the
/// perceive/diagnose/forecast loop; the fleet host additionally forecasts
/// network-wide throughput at the sink.
#[derive(Debug, Clone)]
pub struct LocalTwin {
    pub node: NodeId,
    db: LocalDatabase,
    enabled: bool,
    fleet_view: bool,
    params: Option<DtParams>,
    know: StaticKnowledge,
    /// Current believed slot schedule; starts at the deployed one and tracks
    /// coordinated schedule changes.
    slots: SlotSchedule,
    predictors: BTreeMap<MetricId, Predictor>,
    /// Predictions awaiting their realization: metric -> (interval, value).
    pending_lstm: BTreeMap<MetricId, (u64, f64)>,
    config_changed_at: Option<SimTime>,
    slots_changed_at: Option<SimTime>,
    neighbor_config_changed_at: Option<SimTime>,
    last_seen_configs: BTreeMap<NodeId, NodeConfig>,
    seed: u64,
    pub diagnosis_log: Vec<(SimTime, Diagnosis)>,
}

impl LocalTwin {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        node: NodeId,
        initial: NodeStateSnap,
        know: StaticKnowledge,
        params: Option<DtParams>,
        hosts_local_dt: bool,
        hosts_global_dt: bool,
        seed: u64,
    ) -> Self {
        let slots = know.slots.clone();
        Self {
            node,
            db: LocalDatabase::new(node, initial),
            enabled: hosts_local_dt || hosts_global_dt,
            fleet_view: hosts_global_dt,
            params,
            know,
            slots,
            predictors: BTreeMap::new(),
            pending_lstm: BTreeMap::new(),
            config_changed_at: None,
            slots_changed_at: None,
            neighbor_config_changed_at: None,
            last_seen_configs: BTreeMap::new(),
            seed,
            diagnosis_log: Vec::new(),
        }
    }

    pub fn db(&self) -> &LocalDatabase {
        &self.db
    }

    pub fn ingest(&mut self, datum: DtDatum) {
        if let DtDatum::OwnState(s) = &datum {
            if s.at >= self.db.own.at && s.config != self.db.own.config {
                self.config_changed_at = Some(s.at);
            }
        }
        self.db.ingest(datum);
    }

    /// Called when the network performs a coordinated slot-schedule change;
    /// schedule changes are global by nature, so every twin learns of them
    /// the moment they take effect.
    pub fn on_slots_changed(&mut self, slots: &SlotSchedule, at: SimTime) {
        self.slots = slots.clone();
        self.slots_changed_at = Some(at);
    }

    /// One perception pass at the end of interval `interval` (which covers
    /// `[now - period, now)`). Returns None on nodes that don't host a twin.
    pub fn perceive(&mut self, now: SimTime, interval: u64) -> Option<PerceptionReport> {
        if !self.enabled {
            return None;
        }
        let params = self.params.clone()?;
        let period = params.perception_period_s;
        let mut report = PerceptionReport::default();

        // Watch for neighbor reconfigurations between perceives: a changed
        // believed config is itself an observation that explains degraded
        // behavior, even though the change didn't happen on this node.
        for (id, entry) in &self.db.neighbors {
            if self
                .last_seen_configs
                .get(id)
                .is_some_and(|prev| *prev != entry.state.config)
            {
                self.neighbor_config_changed_at = Some(now);
            }
        }
        for (id, entry) in &self.db.neighbors {
            self.last_seen_configs.insert(*id, entry.state.config);
        }

        // Score the predictions made one interval ago against what the node
        // actually measured.
        let mut degraded = false;
        for (mid, (target, pred)) in std::mem::take(&mut self.pending_lstm) {
            if target != interval {
                continue;
            }
            let Some(real) = self.db.series(mid).and_then(|s| s.get(interval)) else {
                continue;
            };
            if metric_degraded(mid, pred, real, params.degradation_delta) {
                degraded = true;
                report
                    .notes
                    .push((format!("degraded_{}", mid.label()), pred - real));
            }
        }

        if degraded {
            let diag = self.diagnose(now, period, interval, &mut report);
            self.diagnosis_log.push((now, diag));
        }

        // Close the loop when configured to: turn the diagnosis into a seed
        // scheme, search the power grid in the replica, and hand the winning
        // configuration back for deployment.
        let mut deploy_cfg: Option<NodeConfig> = None;
        if degraded && params.auto_reallocate {
            if let Some(demand) = params.demand {
                let diag = self
                    .diagnosis_log
                    .last()
                    .filter(|(t, _)| *t == now)
                    .map(|(_, d)| *d);
                let grids = alloc::TunableGrids::power_only();
                let seed = self.propose_scheme(diag, &grids);
                match self.optimize_scheme(
                    now,
                    seed,
                    &demand,
                    &grids,
                    params.optimizer_budget,
                    DEPLOY_EVAL_PERIODS * period,
                ) {
                    Ok(out) if out.feasible => {
                        let cfg = self.scheme_config(&out.scheme);
                        if cfg != self.db.own.config {
                            report.notes.push(("scheme_power_w".into(), cfg.power_w));
                            deploy_cfg = Some(cfg);
                        }
                    }
                    Ok(_) => report.notes.push(("scheme_infeasible".into(), 1.0)),
                    Err(_) => report.notes.push(("scheme_error".into(), 1.0)),
                }
            }
        }

        // Learned forecast for the coming interval, one predictor per metric.
        for (idx, mid) in MetricId::all().into_iter().enumerate() {
            let series = match self.db.series(mid) {
                Some(s) => s.window(),
                None => continue,
            };
            let seed = predictor_seed(self.seed, self.node, idx);
            let predictor = self
                .predictors
                .entry(mid)
                .or_insert_with(|| Predictor::new(params.lstm_hidden, params.lstm_window, seed));
            if let Some(pred) = predictor.fit_predict(&series, TRAIN_EPOCHS) {
                report.forecast.push((format!("lstm_{}", mid.label()), pred));
                self.pending_lstm.insert(mid, (interval + 1, pred));
            }
        }

        // Replica forecast: reconstruct the believed network from the last
        // heard states and run it across the coming interval. A scheme about
        // to deploy takes effect now, so the forecast assumes it.
        if params.replicas {
            let mut spec = self.replica_spec(now, now + period);
            if let Some(cfg) = deploy_cfg {
                for n in &mut spec.nodes {
                    if n.id == self.node {
                        n.config = cfg;
                    }
                }
            }
            match crate::world::run(&spec) {
                Ok(trace) => {
                    let sent = trace.sends_by_in(self.node, now, now + period) as f64;
                    let recv = trace.delivered_to_in(self.node, now, now + period) as f64;
                    report.forecast.push(("dt_sent".into(), sent));
                    report.forecast.push(("dt_received".into(), recv));
                    if self.fleet_view {
                        let bits =
                            trace.delivered_bits_to_in(self.know.sink, now, now + period) as f64;
                        report
                            .forecast
                            .push(("global_pred_bps".into(), bits / period));
                    }
                }
                Err(_) => report.notes.push(("replica_error".into(), 1.0)),
            }
        }

        report.scheme = deploy_cfg;
        Some(report)
    }

    // ------------------------------------------------------------------
    // Degradation diagnosis
    // ------------------------------------------------------------------

    fn diagnose(
        &mut self,
        now: SimTime,
        period: f64,
        interval: u64,
        report: &mut PerceptionReport,
    ) -> Diagnosis {
        // A neighbor whose last report shows a dead battery is definitive.
        for (id, entry) in &self.db.neighbors {
            if entry.state.energy_j <= 0.0 {
                report.notes.push(("diag_neighbor_down".into(), id.0 as f64));
                return Diagnosis::NeighborDown(*id);
            }
        }

        // Measured physical evidence outranks bookkeeping: a corrupted frame
        // whose SNR implies excess noise over ambient points at an undeclared
        // source no matter what was reconfigured lately (a twin that keeps
        // redeploying must not talk itself out of seeing the jammer). Invert
        // the newest corrupted reception, replay last interval under that
        // hypothesis, and keep it only if the replay matches reality.
        let last_bad = self
            .db
            .comm_log
            .iter()
            .rev()
            .find(|c| c.outcome == DeliveryOutcome::Corrupted)
            .copied();
        if let Some(c) = last_bad {
            if let Some(watts) = self.invert_interference(&c) {
                if self.hindcast_fits(now - period, now, interval, watts) {
                    self.db.env.interference_w = Some((watts, now));
                    report.notes.push(("diag_interference".into(), watts));
                    return Diagnosis::Interference { watts };
                }
            }
        }

        // This node's own backlog growing monotonically.
        let growth: Vec<u32> = self
            .db
            .own_history
            .iter()
            .rev()
            .take(3)
            .map(|s| s.queue_own + s.queue_fwd)
            .collect();
        if growth.len() == 3 && growth[0] > growth[1] && growth[1] > growth[2] && growth[0] >= 4 {
            report.notes.push(("diag_congestion".into(), growth[0] as f64));
            return Diagnosis::Congestion;
        }

        // Known configuration activity within the last two intervals.
        let recent = |t: Option<SimTime>| t.is_some_and(|at| now - at <= 2.0 * period);
        if recent(self.config_changed_at)
            || recent(self.slots_changed_at)
            || recent(self.neighbor_config_changed_at)
        {
            report.notes.push(("diag_reconfigured".into(), 1.0));
            return Diagnosis::Reconfigured;
        }

        // With no better story, prolonged silence from a neighbor is itself
        // the diagnosis.
        for (id, entry) in &self.db.neighbors {
            if now - entry.heard_at > 2.0 * period {
                report.notes.push(("diag_neighbor_down".into(), id.0 as f64));
                return Diagnosis::NeighborDown(*id);
            }
        }
        report.notes.push(("diag_unknown".into(), 1.0));
        Diagnosis::Unknown
    }

    /// Solve the measured SNR of a corrupted frame for the excess noise it
    /// implies: snr = signal / (ambient + excess), with the signal level
    /// reconstructed from the sender's believed power and position.
    fn invert_interference(&self, c: &CommDatum) -> Option<f64> {
        let them = self.db.state_as_of(c.counterpart, c.t)?;
        let us = self
            .db
            .state_as_of(self.node, c.t)
            .unwrap_or_else(|| self.db.own.clone());
        let d = distance(pos_at(&them, c.t), pos_at(&us, c.t));
        let power = c.counterpart_power_w.unwrap_or(them.config.power_w);
        let sig = channel::received_acoustic_w(power, d, &self.know.channel);
        let snr_lin = 10f64.powf(c.snr_db / 10.0);
        if !(snr_lin > 0.0) {
            return None;
        }
        let excess = sig / snr_lin - channel::ambient_noise_w(&self.know.channel);
        (excess > 0.0).then_some(excess)
    }

    /// Replay the just-completed interval with `watts` of extra noise at
    /// this node and check the story reproduces the node's own measured
    /// sent/received counts.
    fn hindcast_fits(&self, start: SimTime, end: SimTime, interval: u64, watts: f64) -> bool {
        let real_sent = self
            .db
            .series(MetricId::SentTotal)
            .and_then(|s| s.get(interval));
        let real_recv = self
            .db
            .series(MetricId::ReceivedOk)
            .and_then(|s| s.get(interval));
        let (Some(real_sent), Some(real_recv)) = (real_sent, real_recv) else {
            return false;
        };
        let mut spec = self.replica_spec(start, end);
        for n in &mut spec.nodes {
            if n.id == self.node {
                n.extra_noise_w = watts;
            }
        }
        let Ok(trace) = crate::world::run(&spec) else {
            return false;
        };
        let sim_sent = trace.sends_by_in(self.node, start, end) as f64;
        let sim_recv = trace.delivered_to_in(self.node, start, end) as f64;
        let rel = |sim: f64, real: f64| (sim - real) / real.abs().max(1.0);
        rel(sim_sent, real_sent).powi(2) + rel(sim_recv, real_recv).powi(2) <= HINDCAST_FIT_TOL
    }

    // ------------------------------------------------------------------
    // Replica construction
    // ------------------------------------------------------------------

    /// Build a replica of the believed network covering `[start, end)`.
    /// Nodes anchor at their newest believed state not newer than `start`
    /// (simulation begins at the oldest anchor so every belief is replayed
    /// forward); never-heard nodes fall back to deployment defaults. The
    /// replica carries no nested twin and no scheduled mutations — it is a
    /// pure what-if of the world as currently believed.
    pub fn replica_spec(&self, start: SimTime, end: SimTime) -> WorldSpec {
        let mut nodes = Vec::new();
        for (id, kind, position, config) in &self.know.deployment {
            let mut n = NodeSpec::stationary(id.0, *kind, *position, *config);
            if let Some(s) = self.db.state_as_of(*id, start) {
                n.position = s.position;
                n.velocity = s.velocity;
                n.initial_energy_j = s.energy_j;
                n.config = s.config;
                n.queue_own = s.queue_own;
                n.queue_fwd = s.queue_fwd;
                n.queue_sizes = s.queue_sizes.clone();
                n.next_gen_at = s.next_gen_at;
                n.anchor_t = Some(s.at);
            }
            if *id == self.node {
                if let Some((w, _)) = self.db.env.interference_w {
                    n.extra_noise_w = w;
                }
            } else if let Some((w, _)) = self.db.remote_noise_w.get(id) {
                n.extra_noise_w = *w;
            }
            nodes.push(n);
        }
        let anchor = nodes.iter().filter_map(|n| n.anchor_t).fold(start, f64::min);
        WorldSpec {
            channel: self.know.channel.clone(),
            tx_overrides: self.know.tx_overrides.clone(),
            slots: self.slots.clone(),
            routing: self.know.routing.clone(),
            nodes,
            mutations: Vec::new(),
            mode: self.know.mode,
            start_s: anchor,
            horizon_s: end - anchor,
            seed: self.seed,
            report_period_s: self.know.report_period_s,
            dt: None,
        }
    }
}

fn pos_at(s: &NodeStateSnap, t: SimTime) -> [f64; 3] {
    let dt = t - s.at;
    [
        s.position[0] + s.velocity[0] * dt,
        s.position[1] + s.velocity[1] * dt,
        s.position[2] + s.velocity[2] * dt,
    ]
}

fn predictor_seed(seed: u64, node: NodeId, idx: usize) -> u64 {
    seed ^ ((node.0 as u64) << 40) ^ (idx as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::NodeKind;

    fn cfg(rate: f64, dst: Option<u32>, slot: u32) -> NodeConfig {
        NodeConfig {
            power_w: 2.0,
            gen_rate_pps: rate,
            packet_size_bytes: 400,
            gen_dst: dst.map(NodeId),
            slot_offset: slot,
        }
    }

    fn chain_spec() -> WorldSpec {
        let mut spec = WorldSpec::empty(7, 2500.0);
        spec.slots = SlotSchedule::new(
            6.0,
            3,
            [(NodeId(1), 0), (NodeId(2), 1), (NodeId(3), 2)].into(),
        );
        spec.routing
            .add_chain(&[NodeId(1), NodeId(2), NodeId(3)]);
        spec.nodes = vec![
            NodeSpec::stationary(1, NodeKind::Sensor, [0.0, 0.0, -100.0], cfg(0.03, Some(3), 0)),
            NodeSpec::stationary(2, NodeKind::Sensor, [3000.0, 0.0, -100.0], cfg(0.03, Some(3), 1)),
            NodeSpec::stationary(3, NodeKind::Buoy, [6000.0, 0.0, -100.0], cfg(0.0, None, 2)),
            NodeSpec::stationary(9, NodeKind::Interferer, [6300.0, 0.0, -100.0], cfg(0.0, None, 0)),
        ];
        spec
    }

    #[test]
    fn degradation_rule_matches_definition() {
        // Throughput 30% under a prediction of 100 at a 10% threshold.
        assert!(metric_degraded(MetricId::ThroughputBps, 100.0, 70.0, 0.10));
        // 5% under does not trip it.
        assert!(!metric_degraded(MetricId::ThroughputBps, 100.0, 95.0, 0.10));
        // Outperforming a benefit prediction is fine.
        assert!(!metric_degraded(MetricId::ThroughputBps, 100.0, 130.0, 0.10));
        // Energy is a cost: burning more than predicted is the degradation.
        assert!(metric_degraded(MetricId::EnergyJ, 100.0, 130.0, 0.10));
        assert!(!metric_degraded(MetricId::EnergyJ, 100.0, 70.0, 0.10));
    }

    #[test]
    fn knowledge_finds_sink_and_drops_interferer() {
        let know = StaticKnowledge::from_spec(&chain_spec());
        assert_eq!(know.sink, NodeId(3));
        assert_eq!(know.deployment.len(), 3);
        assert!(know.deployment.iter().all(|(_, k, _, _)| *k != NodeKind::Interferer));
    }

    #[test]
    fn replica_spec_carries_beliefs() {
        let spec = chain_spec();
        let know = StaticKnowledge::from_spec(&spec);
        let initial = NodeStateSnap {
            at: 0.0,
            position: [6000.0, 0.0, -100.0],
            velocity: [0.0; 3],
            energy_j: 1.0e7,
            config: cfg(0.0, None, 2),
            queue_own: 0,
            queue_fwd: 0,
            queue_sizes: Vec::new(),
            next_gen_at: None,
        };
        let mut twin = LocalTwin::new(
            NodeId(3),
            initial,
            know,
            Some(DtParams::default()),
            true,
            true,
            7,
        );
        // Hear node 2 at t=190 with a mixed backlog.
        let heard = NodeStateSnap {
            at: 190.0,
            position: [3000.0, 0.0, -100.0],
            velocity: [0.0; 3],
            energy_j: 9.0e6,
            config: cfg(0.08, Some(3), 1),
            queue_own: 1,
            queue_fwd: 1,
            queue_sizes: vec![(400, false), (200, true)],
            next_gen_at: Some(195.5),
        };
        twin.ingest(DtDatum::Snapshot(crate::types::DtSnapshot {
            origin: NodeId(2),
            taken_at: 190.0,
            own: heard,
            neighbors: vec![],
            env: Default::default(),
        }));
        let replica = twin.replica_spec(200.0, 300.0);
        assert!(replica.dt.is_none());
        assert!(replica.mutations.is_empty());
        // Anchored node 2 carries the believed state; the run starts at the
        // oldest anchor so that belief is replayed forward.
        let n2 = replica.node(NodeId(2)).unwrap();
        assert_eq!(n2.anchor_t, Some(190.0));
        assert_eq!(n2.queue_sizes, vec![(400, false), (200, true)]);
        assert_eq!(n2.next_gen_at, Some(195.5));
        assert_eq!(n2.config.gen_rate_pps, 0.08);
        assert!(replica.start_s <= 190.0);
        // Node 1 was never heard: deployment defaults, no anchor.
        let n1 = replica.node(NodeId(1)).unwrap();
        assert_eq!(n1.anchor_t, None);
        assert_eq!(n1.config.gen_rate_pps, 0.03);
        // The interference source is not part of the believed world.
        assert!(replica.node(NodeId(9)).is_none());
    }

    #[test]
    fn own_config_change_is_remembered() {
        let spec = chain_spec();
        let know = StaticKnowledge::from_spec(&spec);
        let mut snap = NodeStateSnap {
            at: 0.0,
            position: [0.0; 3],
            velocity: [0.0; 3],
            energy_j: 1.0e7,
            config: cfg(0.03, Some(3), 0),
            queue_own: 0,
            queue_fwd: 0,
            queue_sizes: Vec::new(),
            next_gen_at: None,
        };
        let mut twin = LocalTwin::new(
            NodeId(1),
            snap.clone(),
            know,
            Some(DtParams::default()),
            true,
            false,
            7,
        );
        snap.at = 500.0;
        snap.config.gen_rate_pps = 0.08;
        twin.ingest(DtDatum::OwnState(snap));
        assert_eq!(twin.config_changed_at, Some(500.0));
    }
}
