//! Scheme search inside the local twin: propose a starting allocation from
//! the diagnosis, score candidates by replaying them in the believed
//! replica, and walk the tunable grids for the cheapest feasible point.

use crate::error::SimError;
use crate::localdt::{Diagnosis, LocalTwin};
use crate::protocols::{FINE_POWER_GRID_W, MAX_POWER_W};
use crate::sim::SimTime;
use crate::types::{Demand, NodeConfig, NodeId, PacketKind};
use crate::world::Trace;
use std::collections::BTreeMap;
use thiserror::Error;

/// How stale the twin's own snapshot may be before scheme evaluation
/// refuses to trust the replica.
pub const MAX_REPLICA_STALENESS_S: f64 = 600.0;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("own snapshot is {age_s:.0}s old, beyond the {bound_s:.0}s staleness bound")]
    StaleReplica { age_s: f64, bound_s: f64 },
    #[error("no tunable parameter axis was given")]
    NoTunable,
    #[error(transparent)]
    Sim(#[from] SimError),
}

// ============================================================================
// Scheme, grids, evaluation result
// ============================================================================

/// One point in the allocator's search space. `frequency_id` selects among
/// configured acoustic bands; the simulated modem has a single band, so the
/// field is carried through but never affects evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationScheme {
    pub power_w: f64,
    pub slot_length_s: f64,
    pub sending_rate_pps: f64,
    pub packet_size_bytes: u32,
    pub frequency_id: u32,
}

impl AllocationScheme {
    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError::Invalid;
        if !(self.power_w > 0.0 && self.power_w <= MAX_POWER_W) {
            return Err(Invalid(format!(
                "power {} outside (0, {}] W",
                self.power_w, MAX_POWER_W
            )));
        }
        if !(self.slot_length_s > 0.0) {
            return Err(Invalid("slot length must be positive".into()));
        }
        if !(self.sending_rate_pps >= 0.0) {
            return Err(Invalid("sending rate must be nonnegative".into()));
        }
        if self.packet_size_bytes == 0 {
            return Err(Invalid("packet size must be at least one byte".into()));
        }
        Ok(())
    }
}

/// Candidate values per tunable axis; an empty axis is held fixed at the
/// seed scheme's value.
#[derive(Debug, Clone, Default)]
pub struct TunableGrids {
    pub power_w: Vec<f64>,
    pub slot_length_s: Vec<f64>,
    pub sending_rate_pps: Vec<f64>,
    pub packet_size_bytes: Vec<u32>,
}

impl TunableGrids {
    /// The device power steps, nothing else. This is what the automatic
    /// reallocation path searches: other knobs need network-wide
    /// coordination and stay with the operator.
    pub fn power_only() -> Self {
        Self { power_w: FINE_POWER_GRID_W.to_vec(), ..Self::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.power_w.is_empty()
            && self.slot_length_s.is_empty()
            && self.sending_rate_pps.is_empty()
            && self.packet_size_bytes.is_empty()
    }

    /// Number of points in the full cartesian grid.
    pub fn points(&self) -> u64 {
        let n = |l: usize| l.max(1) as u64;
        n(self.power_w.len())
            * n(self.slot_length_s.len())
            * n(self.sending_rate_pps.len())
            * n(self.packet_size_bytes.len())
    }
}

/// Predicted outcome of running one scheme in the replica, measured on the
/// evaluating node's own traffic over the forecast window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationResult {
    /// Bits of this node's packets landing at their final destination, per
    /// second of window.
    pub throughput_bps: f64,
    /// Fraction of this node's sent packets that never arrived.
    pub loss: f64,
    /// Mean origination-to-delivery delay; infinite when packets were sent
    /// but none arrived, zero when nothing was sent.
    pub latency_s: f64,
    /// Transmit energy spent by this node over the window.
    pub energy_j: f64,
    pub sent: u64,
    pub delivered: u64,
}

impl Demand {
    pub fn satisfied(&self, e: &EvaluationResult) -> bool {
        self.violation(e) == 0.0
    }

    /// Total normalized shortfall against the thresholds; zero iff every
    /// bound holds. Used to rank infeasible schemes by how badly they miss.
    pub fn violation(&self, e: &EvaluationResult) -> f64 {
        let mut v = 0.0;
        if let Some(min) = self.min_throughput_bps {
            v += ((min - e.throughput_bps) / min.abs().max(1.0)).max(0.0);
        }
        if let Some(max) = self.max_loss {
            v += ((e.loss - max) / max.abs().max(1e-6)).max(0.0);
        }
        if let Some(max) = self.max_latency_s {
            v += ((e.latency_s - max) / max.abs().max(1.0)).max(0.0);
        }
        if let Some(max) = self.max_energy_j {
            v += ((e.energy_j - max) / max.abs().max(1.0)).max(0.0);
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub scheme: AllocationScheme,
    pub eval: EvaluationResult,
    pub feasible: bool,
    /// Replica runs spent.
    pub evaluations: u32,
}

/// Smallest grid value strictly above `v`.
fn step_above(v: f64, grid: &[f64]) -> Option<f64> {
    grid.iter().copied().filter(|g| *g > v).fold(None, |acc, g| {
        Some(acc.map_or(g, |a: f64| a.min(g)))
    })
}

/// Largest grid value strictly below `v`.
fn step_below(v: f64, grid: &[f64]) -> Option<f64> {
    grid.iter().copied().filter(|g| *g < v).fold(None, |acc, g| {
        Some(acc.map_or(g, |a: f64| a.max(g)))
    })
}

// ============================================================================
// Twin-side allocator
// ============================================================================

impl LocalTwin {
    /// The currently deployed allocation as the twin believes it.
    pub fn current_scheme(&self) -> AllocationScheme {
        let cfg = self.db().own.config;
        AllocationScheme {
            power_w: cfg.power_w,
            slot_length_s: self.slots.slot_len_s,
            sending_rate_pps: cfg.gen_rate_pps,
            packet_size_bytes: cfg.packet_size_bytes,
            frequency_id: 0,
        }
    }

    /// The node configuration a scheme deploys to. Slot length is not part
    /// of it: the schedule is shared, so retiming goes through a
    /// network-wide change rather than one node's config.
    pub fn scheme_config(&self, s: &AllocationScheme) -> NodeConfig {
        let mut cfg = self.db().own.config;
        cfg.power_w = s.power_w;
        cfg.gen_rate_pps = s.sending_rate_pps;
        cfg.packet_size_bytes = s.packet_size_bytes;
        cfg
    }

    /// Seed scheme for optimization: the current allocation with the knob
    /// implicated by the diagnosis nudged one grid step in the relieving
    /// direction — power up against interference, rate (or failing that,
    /// slot length) down against congestion.
    pub fn propose_scheme(
        &self,
        diagnosis: Option<Diagnosis>,
        grids: &TunableGrids,
    ) -> AllocationScheme {
        let mut s = self.current_scheme();
        match diagnosis {
            Some(Diagnosis::Interference { .. }) => {
                let steps: &[f64] =
                    if grids.power_w.is_empty() { &FINE_POWER_GRID_W } else { &grids.power_w };
                s.power_w = step_above(s.power_w, steps).unwrap_or(MAX_POWER_W);
            }
            Some(Diagnosis::Congestion) => {
                if let Some(r) = step_below(s.sending_rate_pps, &grids.sending_rate_pps) {
                    s.sending_rate_pps = r;
                } else if let Some(l) = step_below(s.slot_length_s, &grids.slot_length_s) {
                    s.slot_length_s = l;
                }
            }
            _ => {}
        }
        s
    }

    /// Predict how `scheme` would perform by replaying the believed world
    /// over `[now, now + horizon_s)` with the scheme installed on this node.
    /// Deterministic given the database contents.
    ///
    /// For single-hop flows the loss estimate is the expected per-frame
    /// corruption probability from each replica frame's SNR rather than the
    /// counted outcome, so feasibility near the demand threshold does not
    /// hinge on which way a handful of corruption draws happened to fall.
    /// Relayed flows keep the counted estimate.
    pub fn evaluate_scheme(
        &self,
        now: SimTime,
        scheme: &AllocationScheme,
        horizon_s: f64,
    ) -> Result<EvaluationResult, AllocError> {
        let age = now - self.db().own.at;
        if age > MAX_REPLICA_STALENESS_S {
            return Err(AllocError::StaleReplica { age_s: age, bound_s: MAX_REPLICA_STALENESS_S });
        }
        let mut spec = self.replica_spec(now, now + horizon_s);
        if (scheme.slot_length_s - spec.slots.slot_len_s).abs() > 1e-12 {
            // A slot-length candidate is evaluated as the coordinated
            // schedule change it would be, re-anchored at the replica start.
            spec.slots.retime(scheme.slot_length_s, spec.start_s);
        }
        for n in &mut spec.nodes {
            if n.id != self.node {
                continue;
            }
            n.config.power_w = scheme.power_w;
            n.config.packet_size_bytes = scheme.packet_size_bytes;
            if n.config.gen_rate_pps != scheme.sending_rate_pps {
                n.config.gen_rate_pps = scheme.sending_rate_pps;
                n.next_gen_at = None;
            }
        }
        let trace = crate::world::run(&spec)?;
        let mut out = measure_own_traffic(&trace, self.node, now, now + horizon_s);
        if let Some(loss) = expected_direct_loss(&trace, self.node, now, now + horizon_s) {
            out.loss = loss;
        }
        Ok(out)
    }

    /// Grid search for the cheapest demand-feasible scheme. When the full
    /// grid fits in the evaluation budget it is enumerated outright, which
    /// makes the result exactly the exhaustive optimum; larger grids fall
    /// back to coordinate descent from the seed, one axis sweep at a time,
    /// until a fixpoint or the budget runs out. Either way the result is
    /// never worse than the seed under the (feasibility, violation, energy,
    /// power) ordering.
    pub fn optimize_scheme(
        &self,
        now: SimTime,
        seed: AllocationScheme,
        demand: &Demand,
        grids: &TunableGrids,
        budget: u32,
        horizon_s: f64,
    ) -> Result<OptimizeOutcome, AllocError> {
        if grids.is_empty() {
            return Err(AllocError::NoTunable);
        }
        if budget == 0 {
            return Err(AllocError::NoTunable);
        }
        let mut search = Search {
            twin: self,
            now,
            horizon_s,
            demand: *demand,
            cache: BTreeMap::new(),
            spent: 0,
            budget,
        };

        let mut best = seed;
        let mut best_eval = search.eval(&seed)?;

        if grids.points() <= budget as u64 {
            for s in enumerate(&seed, grids) {
                let e = search.eval(&s)?;
                if search.better(&s, &e, &best, &best_eval) {
                    best = s;
                    best_eval = e;
                }
            }
        } else {
            loop {
                let before = best;
                for axis in 0..4usize {
                    for s in axis_points(&best, grids, axis) {
                        if search.spent >= search.budget {
                            break;
                        }
                        let e = search.eval(&s)?;
                        if search.better(&s, &e, &best, &best_eval) {
                            best = s;
                            best_eval = e;
                        }
                    }
                }
                if best == before || search.spent >= search.budget {
                    break;
                }
            }
        }

        let feasible = demand.satisfied(&best_eval);
        Ok(OptimizeOutcome { scheme: best, eval: best_eval, feasible, evaluations: search.spent })
    }
}

struct Search<'a> {
    twin: &'a LocalTwin,
    now: SimTime,
    horizon_s: f64,
    demand: Demand,
    cache: BTreeMap<SchemeKey, EvaluationResult>,
    spent: u32,
    budget: u32,
}

type SchemeKey = (u64, u64, u64, u32, u32);

fn key(s: &AllocationScheme) -> SchemeKey {
    (
        s.power_w.to_bits(),
        s.slot_length_s.to_bits(),
        s.sending_rate_pps.to_bits(),
        s.packet_size_bytes,
        s.frequency_id,
    )
}

impl Search<'_> {
    fn eval(&mut self, s: &AllocationScheme) -> Result<EvaluationResult, AllocError> {
        if let Some(e) = self.cache.get(&key(s)) {
            return Ok(*e);
        }
        let e = self.twin.evaluate_scheme(self.now, s, self.horizon_s)?;
        self.cache.insert(key(s), e);
        self.spent += 1;
        Ok(e)
    }

    /// Strict ordering used for the search: feasibility first, then smaller
    /// demand violation, then lower energy, then lower power.
    fn better(
        &self,
        _s: &AllocationScheme,
        e: &EvaluationResult,
        best: &AllocationScheme,
        best_eval: &EvaluationResult,
    ) -> bool {
        let a = (self.demand.violation(e), e.energy_j, _s.power_w);
        let b = (self.demand.violation(best_eval), best_eval.energy_j, best.power_w);
        a < b
    }
}

/// Full cartesian product of the grids, with empty axes pinned to the seed.
fn enumerate(seed: &AllocationScheme, g: &TunableGrids) -> Vec<AllocationScheme> {
    let powers = if g.power_w.is_empty() { vec![seed.power_w] } else { g.power_w.clone() };
    let slots =
        if g.slot_length_s.is_empty() { vec![seed.slot_length_s] } else { g.slot_length_s.clone() };
    let rates = if g.sending_rate_pps.is_empty() {
        vec![seed.sending_rate_pps]
    } else {
        g.sending_rate_pps.clone()
    };
    let sizes = if g.packet_size_bytes.is_empty() {
        vec![seed.packet_size_bytes]
    } else {
        g.packet_size_bytes.clone()
    };
    let mut out = Vec::new();
    for &p in &powers {
        for &sl in &slots {
            for &r in &rates {
                for &sz in &sizes {
                    out.push(AllocationScheme {
                        power_w: p,
                        slot_length_s: sl,
                        sending_rate_pps: r,
                        packet_size_bytes: sz,
                        frequency_id: seed.frequency_id,
                    });
                }
            }
        }
    }
    out
}

/// All single-axis variations of `at` along grid axis `axis`.
fn axis_points(at: &AllocationScheme, g: &TunableGrids, axis: usize) -> Vec<AllocationScheme> {
    let mut out = Vec::new();
    match axis {
        0 => {
            for &p in &g.power_w {
                out.push(AllocationScheme { power_w: p, ..*at });
            }
        }
        1 => {
            for &sl in &g.slot_length_s {
                out.push(AllocationScheme { slot_length_s: sl, ..*at });
            }
        }
        2 => {
            for &r in &g.sending_rate_pps {
                out.push(AllocationScheme { sending_rate_pps: r, ..*at });
            }
        }
        _ => {
            for &sz in &g.packet_size_bytes {
                out.push(AllocationScheme { packet_size_bytes: sz, ..*at });
            }
        }
    }
    out
}

/// Measure one node's own traffic in a trace window: sends it originated,
/// end-to-end arrivals of its packets, and its transmit energy. Scheme
/// evaluation reduces replica traces with this; reducing a real trace with
/// the same function gives the comparable ground-truth vector.
pub fn measure_own_traffic(
    trace: &Trace,
    node: NodeId,
    from: SimTime,
    to: SimTime,
) -> EvaluationResult {
    let mut sent = 0u64;
    let mut energy = 0.0;
    let mut send_t: BTreeMap<u64, SimTime> = BTreeMap::new();
    for s in &trace.sends {
        if s.node != node || s.t < from || s.t >= to {
            continue;
        }
        energy += s.power_w * s.duration_s;
        if s.kind == PacketKind::Data && s.own {
            sent += 1;
            send_t.entry(s.packet_id).or_insert(s.t);
        }
    }
    let mut delivered = 0u64;
    let mut bits = 0u64;
    let mut lat_sum = 0.0;
    let mut lat_n = 0u64;
    for d in &trace.deliveries {
        let end_to_end = d.src == node
            && d.rx == d.dst
            && d.kind == PacketKind::Data
            && d.outcome == crate::types::DeliveryOutcome::Delivered
            && d.t >= from
            && d.t < to;
        if !end_to_end {
            continue;
        }
        delivered += 1;
        bits += 8 * d.size_bytes as u64;
        if let Some(t0) = send_t.get(&d.packet_id) {
            lat_sum += d.t - t0;
            lat_n += 1;
        }
    }
    let horizon = (to - from).max(f64::MIN_POSITIVE);
    let loss = if sent == 0 { 0.0 } else { (1.0 - delivered as f64 / sent as f64).clamp(0.0, 1.0) };
    let latency_s = if sent == 0 {
        0.0
    } else if lat_n == 0 {
        f64::INFINITY
    } else {
        lat_sum / lat_n as f64
    };
    EvaluationResult {
        throughput_bps: bits as f64 / horizon,
        loss,
        latency_s,
        energy_j: energy,
        sent,
        delivered,
    }
}

/// Expected end-to-end loss for a node whose packets reach their destination
/// in one hop. Each such send has at most one resolution row at the
/// destination carrying the measured SNR, so the per-frame corruption
/// probability is known exactly and the mean over the window is the expected
/// loss — free of corruption-draw variance. Frames lost to a collision count
/// in full: a slot overlap corrupts deterministically. Returns None when no
/// send resolved directly at its destination (relayed or out-of-range
/// traffic), leaving those flows to the counted estimate.
fn expected_direct_loss(trace: &Trace, node: NodeId, from: SimTime, to: SimTime) -> Option<f64> {
    use crate::types::DeliveryOutcome;
    let mut in_window: std::collections::BTreeSet<u64> = std::collections::BTreeSet::new();
    for s in &trace.sends {
        if s.node == node && s.own && s.kind == PacketKind::Data && s.t >= from && s.t < to {
            in_window.insert(s.packet_id);
        }
    }
    let mut sum = 0.0;
    let mut n = 0u64;
    for d in &trace.deliveries {
        let direct = d.tx == node
            && d.rx == d.dst
            && d.kind == PacketKind::Data
            && in_window.contains(&d.packet_id);
        if !direct {
            continue;
        }
        sum += match d.outcome {
            DeliveryOutcome::Collided => 1.0,
            DeliveryOutcome::Delivered | DeliveryOutcome::Corrupted => {
                let ber = crate::channel::ber(d.snr_db);
                crate::channel::packet_loss_prob(ber, 8 * d.size_bytes as u64)
            }
            // A sub-detection echo at the final destination is bookkeeping
            // of a non-reception, not a link attempt: the packet relays.
            DeliveryOutcome::OutOfRange => continue,
        };
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localdt::StaticKnowledge;
    use crate::types::{NodeKind, NodeStateSnap};
    use crate::world::{NodeSpec, TrafficMode, WorldSpec};
    use std::collections::BTreeMap;

    fn cfg(power: f64, rate: f64, dst: Option<u32>, slot: u32) -> NodeConfig {
        NodeConfig {
            power_w: power,
            gen_rate_pps: rate,
            packet_size_bytes: 200,
            gen_dst: dst.map(NodeId),
            slot_offset: slot,
        }
    }

    /// Two nodes 3 km apart, node 1 sending to node 2 every other 6 s slot.
    fn pair_spec(rate: f64) -> WorldSpec {
        let mut spec = WorldSpec::empty(7, 600.0);
        let mut offsets = BTreeMap::new();
        offsets.insert(NodeId(1), 0);
        offsets.insert(NodeId(2), 1);
        spec.slots = crate::protocols::SlotSchedule::new(6.0, 2, offsets);
        spec.routing.add_chain(&[NodeId(1), NodeId(2)]);
        spec.nodes.push(NodeSpec::stationary(
            1,
            NodeKind::Sensor,
            [0.0, 0.0, -100.0],
            cfg(2.0, rate, Some(2), 0),
        ));
        spec.nodes.push(NodeSpec::stationary(
            2,
            NodeKind::Sensor,
            [3000.0, 0.0, -100.0],
            cfg(2.0, 0.0, None, 1),
        ));
        spec.mode = TrafficMode::Periodic;
        spec
    }

    fn twin_for(spec: &WorldSpec, node: u32) -> LocalTwin {
        let know = StaticKnowledge::from_spec(spec);
        let n = spec.node(NodeId(node)).unwrap();
        let initial = NodeStateSnap {
            at: 0.0,
            position: n.position,
            velocity: n.velocity,
            energy_j: n.initial_energy_j,
            config: n.config,
            queue_own: 0,
            queue_fwd: 0,
            queue_sizes: Vec::new(),
            next_gen_at: None,
        };
        LocalTwin::new(NodeId(node), initial, know, Some(Default::default()), true, false, spec.seed)
    }

    #[test]
    fn violation_is_zero_exactly_when_satisfied() {
        let e = EvaluationResult {
            throughput_bps: 100.0,
            loss: 0.02,
            latency_s: 4.0,
            energy_j: 50.0,
            sent: 10,
            delivered: 9,
        };
        let ok = Demand {
            min_throughput_bps: Some(90.0),
            max_loss: Some(0.05),
            max_latency_s: Some(5.0),
            max_energy_j: Some(60.0),
        };
        assert!(ok.satisfied(&e));
        assert_eq!(ok.violation(&e), 0.0);
        let tight = Demand { min_throughput_bps: Some(120.0), ..ok };
        assert!(!tight.satisfied(&e));
        assert!(tight.violation(&e) > 0.0);
        assert!(Demand::default().satisfied(&e));
    }

    #[test]
    fn propose_raises_power_on_interference_and_slows_on_congestion() {
        let spec = pair_spec(0.05);
        let twin = twin_for(&spec, 1);
        let grids = TunableGrids {
            power_w: vec![1.0, 2.0, 4.0, 8.0],
            sending_rate_pps: vec![0.0125, 0.025, 0.05],
            slot_length_s: vec![4.0, 6.0],
            packet_size_bytes: Vec::new(),
        };
        let current = twin.current_scheme();

        let s = twin.propose_scheme(Some(Diagnosis::Interference { watts: 1e-9 }), &grids);
        assert!(s.power_w > current.power_w, "interference must raise power");
        assert_eq!(s.power_w, 4.0);

        let s = twin.propose_scheme(Some(Diagnosis::Congestion), &grids);
        assert!(
            s.sending_rate_pps < current.sending_rate_pps
                || s.slot_length_s < current.slot_length_s,
            "congestion must slow the sender or shorten slots"
        );
        assert_eq!(s.sending_rate_pps, 0.025);

        let s = twin.propose_scheme(None, &grids);
        assert_eq!(s, current, "no diagnosis leaves the scheme alone");
    }

    #[test]
    fn zero_traffic_replica_evaluates_to_zero_throughput() {
        let spec = pair_spec(0.0);
        let twin = twin_for(&spec, 1);
        let e = twin.evaluate_scheme(0.0, &twin.current_scheme(), 300.0).unwrap();
        assert_eq!(e.throughput_bps, 0.0);
        assert_eq!(e.sent, 0);
        assert_eq!(e.latency_s, 0.0);
    }

    #[test]
    fn stale_snapshot_is_refused() {
        let spec = pair_spec(0.05);
        let twin = twin_for(&spec, 1);
        let err = twin
            .evaluate_scheme(MAX_REPLICA_STALENESS_S + 1.0, &twin.current_scheme(), 100.0)
            .unwrap_err();
        assert!(matches!(err, AllocError::StaleReplica { .. }));
    }

    #[test]
    fn higher_power_never_raises_predicted_loss() {
        let spec = pair_spec(0.05);
        let mut twin = twin_for(&spec, 1);
        // Believe in enough noise at the receiver that low powers corrupt.
        twin.db.remote_noise_w.insert(NodeId(2), (2.0e-9, 0.0));
        let mut last = f64::INFINITY;
        for p in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let mut s = twin.current_scheme();
            s.power_w = p;
            let e = twin.evaluate_scheme(0.0, &s, 600.0).unwrap();
            assert!(
                e.loss <= last + 1e-12,
                "loss rose from {last} to {} at {p} W",
                e.loss
            );
            last = e.loss;
        }
    }

    #[test]
    fn small_grids_match_exhaustive_search() {
        let spec = pair_spec(0.05);
        let mut twin = twin_for(&spec, 1);
        twin.db.remote_noise_w.insert(NodeId(2), (1.0e-9, 0.0));
        let demand = Demand {
            max_loss: Some(0.05),
            min_throughput_bps: Some(1.0),
            ..Default::default()
        };
        let grids = TunableGrids {
            power_w: vec![0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0],
            sending_rate_pps: vec![0.025, 0.05],
            ..Default::default()
        };
        let seed = twin.current_scheme();
        let out = twin
            .optimize_scheme(0.0, seed, &demand, &grids, 200, 300.0)
            .unwrap();

        // Independent exhaustive pass over the same grid.
        let mut best: Option<(f64, f64, f64, AllocationScheme)> = None;
        for s in enumerate(&seed, &grids) {
            let e = twin.evaluate_scheme(0.0, &s, 300.0).unwrap();
            let k = (demand.violation(&e), e.energy_j, s.power_w);
            if best.as_ref().is_none_or(|(v, en, p, _)| k < (*v, *en, *p)) {
                best = Some((k.0, k.1, k.2, s));
            }
        }
        let (v, _, _, s) = best.unwrap();
        assert_eq!(out.scheme, s, "optimizer must match brute force");
        assert_eq!(out.feasible, v == 0.0);
    }

    #[test]
    fn seed_at_the_optimum_is_returned_unchanged() {
        let spec = pair_spec(0.05);
        let twin = twin_for(&spec, 1);
        // Clean channel: the lowest power is feasible, every higher power
        // costs more energy.
        let demand = Demand { max_loss: Some(0.05), ..Default::default() };
        let grids = TunableGrids { power_w: vec![0.5, 1.0, 2.0], ..Default::default() };
        let mut seed = twin.current_scheme();
        seed.power_w = 0.5;
        let out = twin.optimize_scheme(0.0, seed, &demand, &grids, 50, 300.0).unwrap();
        assert_eq!(out.scheme, seed);
        assert!(out.feasible);
    }

    #[test]
    fn descent_with_tight_budget_never_does_worse_than_seed() {
        let spec = pair_spec(0.05);
        let mut twin = twin_for(&spec, 1);
        twin.db.remote_noise_w.insert(NodeId(2), (1.0e-9, 0.0));
        let demand = Demand { max_loss: Some(0.05), ..Default::default() };
        // 11 * 3 * 2 = 66 points, budget 20: forces the descent path.
        let grids = TunableGrids {
            power_w: FINE_POWER_GRID_W.to_vec(),
            sending_rate_pps: vec![0.0125, 0.025, 0.05],
            packet_size_bytes: vec![200, 400],
            ..Default::default()
        };
        let seed = twin.current_scheme();
        let seed_eval = twin.evaluate_scheme(0.0, &seed, 300.0).unwrap();
        let out = twin.optimize_scheme(0.0, seed, &demand, &grids, 20, 300.0).unwrap();
        let a = (demand.violation(&out.eval), out.eval.energy_j, out.scheme.power_w);
        let b = (demand.violation(&seed_eval), seed_eval.energy_j, seed.power_w);
        assert!(a <= b, "descent result {a:?} ranks worse than seed {b:?}");
        assert!(out.evaluations <= 20 + 1, "budget overrun: {}", out.evaluations);
    }

    #[test]
    fn replica_search_agrees_with_the_closed_form_power_step() {
        use crate::channel::{ambient_noise_w, received_acoustic_w, ChannelParams};
        use crate::protocols::{
            pcmac_dt_step, LinkEstimate, PcAction, PcMacState, PcVariant,
        };

        // The interfered-link lab as the sender's twin believes it: lab
        // ambient noise, and the mid-placed source's power landing at the
        // receiver as remote noise.
        let mut spec = pair_spec(0.05);
        spec.channel = ChannelParams {
            ambient_noise_db: 94.826,
            ..ChannelParams::default_acoustic()
        };
        let jam_dist = (1500.0f64.powi(2) + 3629.3f64.powi(2)).sqrt();
        let interference_w = received_acoustic_w(2.0, jam_dist, &spec.channel);
        let mut twin = twin_for(&spec, 1);
        twin.db.remote_noise_w.insert(NodeId(2), (interference_w, 0.0));

        // The closed form predicts loss per candidate power; the twin's
        // search samples deliveries in a believed replica. A long window
        // keeps the sampled loss close enough to the prediction that both
        // must settle on the same grid point.
        let demand = Demand {
            max_loss: Some(0.05),
            min_throughput_bps: Some(1.0),
            ..Default::default()
        };
        let out = twin
            .optimize_scheme(
                0.0,
                twin.current_scheme(),
                &demand,
                &TunableGrids::power_only(),
                64,
                9600.0,
            )
            .unwrap();
        assert!(out.feasible);

        let mut state = PcMacState::new(PcVariant::DtAssisted, 1600);
        state.data_power_w = 6.0;
        let link = LinkEstimate {
            distance_m: 3000.0,
            noise_w: ambient_noise_w(&spec.channel),
            interference_w,
        };
        let closed_form = match pcmac_dt_step(&state, &link, &spec.channel) {
            PcAction::SetPower(p) => p,
            other => panic!("expected a power selection, got {other:?}"),
        };
        assert_eq!(closed_form, 8.0);
        assert_eq!(out.scheme.power_w, closed_form);
    }

    #[test]
    fn scheme_validation_guards_device_ranges() {
        let good = AllocationScheme {
            power_w: 8.0,
            slot_length_s: 4.0,
            sending_rate_pps: 0.05,
            packet_size_bytes: 200,
            frequency_id: 0,
        };
        assert!(good.validate().is_ok());
        assert!(AllocationScheme { power_w: 40.0, ..good }.validate().is_err());
        assert!(AllocationScheme { power_w: 0.0, ..good }.validate().is_err());
        assert!(AllocationScheme { slot_length_s: 0.0, ..good }.validate().is_err());
        assert!(AllocationScheme { packet_size_bytes: 0, ..good }.validate().is_err());
    }
}
