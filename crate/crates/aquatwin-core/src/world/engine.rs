//! The discrete-event network engine. Runs a [`WorldSpec`] forward: slotted
//! MAC transmissions, acoustic receptions with collision and corruption
//! resolution, traffic generation, scripted mutations, power-control
//! handshakes, status-collection floods, and the per-node twin bookkeeping
//! (piggybacked summaries in, perception out).
//!
//! Everything is deterministic for a fixed spec: events are ordered by
//! (time, insertion sequence), node iteration is in id order, and the only
//! randomness is a dedicated corruption-draw stream that is consumed solely
//! for loss probabilities strictly between 0 and 1.

use crate::channel::{self, ChannelParams};
use crate::error::SimError;
use crate::localdt::db::{CommDatum, DtDatum, MetricId};
use crate::localdt::{LocalTwin, StaticKnowledge};
use crate::protocols::{
    pcmac_dt_step, pcmac_handshake, pcmac_r_step, LinkEstimate, PcAction, PcMacState, PcPhase,
    PcVariant, RoutingTable, SlotSchedule, CONTROL_PACKET_BYTES, GRANT_LEVELS_W, MAX_POWER_W,
};
use crate::rng::stream;
use crate::sim::{EventQueue, SimTime};
use crate::types::{
    distance, DeliveryOutcome, NodeConfig, NodeId, NodeKind, NodeStateSnap, Packet, PacketKind,
    PayloadMeta, Transmission,
};
use crate::world::spec::{
    CollectRole, Mutation, MutationKind, NodeSpec, TrafficMode, WorldSpec, BROADCAST,
};
use crate::world::trace::{Counters, DeliveryRec, SendRec, Trace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, VecDeque};

// ============================================================================
// Events
// ============================================================================

#[derive(Debug, Clone)]
enum Ev {
    SlotStart { index: i64, epoch: u32 },
    TxEnd { tx_id: u64 },
    RxEnd { rx: NodeId, tx_id: u64 },
    Gen { node: NodeId, epoch: u32 },
    Mutate { idx: usize },
    Report,
    Perceive,
    /// Twin-assisted power change lands after the compute latency.
    PcApply { node: NodeId, power_w: f64 },
    /// Replica reconstruction: adopt the believed state at its anchor time.
    Inject { node: NodeId },
}

// ============================================================================
// Per-node runtime
// ============================================================================

/// Interval accumulators, reset at each perception boundary.
#[derive(Debug, Clone, Copy, Default)]
struct Window {
    sent: u64,
    received_ok: u64,
    corrupted: u64,
    collided: u64,
    bits_to_me: u64,
    energy_j: f64,
}

#[derive(Debug, Clone, Copy)]
struct ActiveRx {
    tx_id: u64,
    arrival: SimTime,
    end: SimTime,
}

/// Power-control runtime for one endpoint of the managed link.
#[derive(Debug, Clone)]
struct PcRt {
    state: PcMacState,
    requester: bool,
    partner: NodeId,
    /// Power the counterpart is believed to transmit at. The responder
    /// adopts the grant for its reverse traffic, so after a handshake this
    /// belief is exact on both sides.
    reverse_power_w: f64,
    /// Responder: grant waiting to go out in the next owned slot.
    pending_grant: Option<f64>,
    /// Responder: a grant has been issued, reverse data may flow.
    granted: bool,
    /// Slot in which the current degradation was detected.
    detect_slot: Option<i64>,
    /// Responder: latest measured loss of the forward link, returned to the
    /// requester as feedback on reverse data.
    fwd_loss_est: f64,
}

#[derive(Debug, Clone)]
struct CollectRt {
    role: CollectRole,
    notified: bool,
    schedule_sent: bool,
    status_sent: bool,
    statuses_received: u32,
}

pub struct NodeRt {
    pub id: NodeId,
    pub kind: NodeKind,
    pos_anchor: [f64; 3],
    pos_anchor_t: SimTime,
    pub velocity: [f64; 3],
    pub up: bool,
    pub energy_j: f64,
    pub config: NodeConfig,
    pub queue: VecDeque<Packet>,
    pub next_gen_at: Option<SimTime>,
    gen_epoch: u32,
    pub counters: Counters,
    window: Window,
    active_rx: Vec<ActiveRx>,
    own_tx: Vec<(SimTime, SimTime)>,
    pub interferer_power_w: f64,
    pub interferer_active: bool,
    pub extra_noise_w: f64,
    pcmac: Option<PcRt>,
    collect: Option<CollectRt>,
    pub twin: LocalTwin,
    /// Pending replica-injection payload; consumed by the Inject event.
    inject: Option<NodeSpec>,
}

impl NodeRt {
    pub fn pos(&self, t: SimTime) -> [f64; 3] {
        let dt = t - self.pos_anchor_t;
        [
            self.pos_anchor[0] + self.velocity[0] * dt,
            self.pos_anchor[1] + self.velocity[1] * dt,
            self.pos_anchor[2] + self.velocity[2] * dt,
        ]
    }

    fn queue_counts(&self) -> (u32, u32) {
        let own = self.queue.iter().filter(|p| p.src == self.id).count() as u32;
        (own, self.queue.len() as u32 - own)
    }

    /// State summary anchored at `t`. Callers snapshot at slot starts before
    /// dequeuing, so a piggybacked queue count includes the packet being
    /// carried — the convention replicas rely on.
    pub fn state_snap(&self, t: SimTime) -> NodeStateSnap {
        let (own, fwd) = self.queue_counts();
        NodeStateSnap {
            at: t,
            position: self.pos(t),
            velocity: self.velocity,
            energy_j: self.energy_j,
            config: self.config,
            queue_own: own,
            queue_fwd: fwd,
            queue_sizes: self
                .queue
                .iter()
                .map(|p| (p.size_bytes, p.src == self.id))
                .collect(),
            next_gen_at: self.next_gen_at,
        }
    }
}

// ============================================================================
// Simulation
// ============================================================================

pub struct Simulation {
    pub now: SimTime,
    end: SimTime,
    queue: EventQueue<Ev>,
    pub nodes: BTreeMap<NodeId, NodeRt>,
    pub slots: SlotSchedule,
    slot_epoch: u32,
    routing: RoutingTable,
    ch: ChannelParams,
    overrides: BTreeMap<u32, f64>,
    mode: TrafficMode,
    mutations: Vec<Mutation>,
    piggyback: bool,
    perception_period: Option<f64>,
    report_period: f64,
    start: SimTime,
    loss_rng: ChaCha8Rng,
    next_packet_id: u64,
    next_tx_id: u64,
    tx_live: BTreeMap<u64, (Transmission, u32)>,
    pub trace: Trace,
}

/// Run a spec to its horizon and return the trace. Experiments and twin
/// replicas all go through this one entry point.
pub fn run(spec: &WorldSpec) -> Result<Trace, SimError> {
    let mut sim = Simulation::new(spec.clone())?;
    sim.run_to_end();
    Ok(sim.into_trace())
}

enum PcSend {
    Rts,
    Data { power_w: f64 },
    Cts { grant_w: f64 },
    Feedback { loss: f64, power_w: f64 },
    Nothing,
}

enum ColSend {
    Schedule { bytes: u32 },
    Status { root: NodeId, bytes: u32 },
    Forward,
    Nothing,
}

enum PcOut {
    Nothing,
    Degraded(f64),
    Apply { power_w: f64, delay: f64, fresh_detect: bool },
}

impl Simulation {
    pub fn new(spec: WorldSpec) -> Result<Self, SimError> {
        spec.validate().map_err(|e| SimError::Other(e.to_string()))?;
        let start = spec.start_s;
        let end = start + spec.horizon_s;
        let dt = spec.dt.clone();
        let piggyback = dt.as_ref().map(|d| d.piggyback).unwrap_or(false);
        let perception_period = dt
            .as_ref()
            .filter(|d| d.perception_period_s > 0.0)
            .map(|d| d.perception_period_s);

        let knowledge = StaticKnowledge::from_spec(&spec);
        let mut nodes = BTreeMap::new();
        for n in &spec.nodes {
            let anchor = n.anchor_t;
            let initial = NodeStateSnap {
                at: anchor.unwrap_or(start),
                position: n.position,
                velocity: n.velocity,
                energy_j: n.initial_energy_j,
                config: n.config,
                queue_own: n.queue_own,
                queue_fwd: n.queue_fwd,
                queue_sizes: n.queue_sizes.clone(),
                next_gen_at: n.next_gen_at,
            };
            let twin = LocalTwin::new(
                n.id,
                initial,
                knowledge.clone(),
                dt.clone(),
                n.hosts_local_dt,
                n.hosts_global_dt,
                spec.seed,
            );
            let rt = NodeRt {
                id: n.id,
                kind: n.kind,
                pos_anchor: n.position,
                pos_anchor_t: anchor.unwrap_or(start),
                velocity: n.velocity,
                up: n.starts_up && anchor.is_none(),
                energy_j: n.initial_energy_j,
                config: n.config,
                queue: VecDeque::new(),
                next_gen_at: None,
                gen_epoch: 0,
                counters: Counters::default(),
                window: Window::default(),
                active_rx: Vec::new(),
                own_tx: Vec::new(),
                interferer_power_w: n.interferer_power_w,
                interferer_active: n.interferer_active,
                extra_noise_w: n.extra_noise_w,
                pcmac: n.pc_variant.map(|variant| {
                    let bits = 8 * n.config.packet_size_bytes as u64;
                    let mut state = PcMacState::new(variant, bits);
                    state.data_power_w = n.config.power_w;
                    PcRt {
                        state,
                        requester: n.config.gen_dst.is_some(),
                        partner: n.config.gen_dst.unwrap_or(n.id),
                        reverse_power_w: 0.0,
                        pending_grant: None,
                        granted: false,
                        detect_slot: None,
                        fwd_loss_est: 0.0,
                    }
                }),
                collect: n.collect.clone().map(|role| CollectRt {
                    notified: role.depth == 0,
                    schedule_sent: false,
                    status_sent: false,
                    statuses_received: 0,
                    role,
                }),
                twin,
                inject: anchor.map(|_| n.clone()),
            };
            nodes.insert(n.id, rt);
        }

        // Pair up the managed power-control link: the requester names its
        // partner via the traffic destination and the responder is paired
        // back to it.
        let pairs: Vec<(NodeId, NodeId, f64, f64)> = spec
            .nodes
            .iter()
            .filter(|n| n.pc_variant.is_some())
            .filter_map(|n| {
                n.config.gen_dst.map(|d| {
                    let resp_power = spec.node(d).map(|r| r.config.power_w).unwrap_or(0.0);
                    (n.id, d, resp_power, n.config.power_w)
                })
            })
            .collect();
        for (req, resp, resp_power, req_power) in pairs {
            if let Some(pc) = nodes.get_mut(&req).and_then(|n| n.pcmac.as_mut()) {
                pc.reverse_power_w = resp_power;
            }
            if let Some(pc) = nodes.get_mut(&resp).and_then(|n| n.pcmac.as_mut()) {
                pc.partner = req;
                pc.requester = false;
                pc.reverse_power_w = req_power;
            }
        }

        let mut mutations = spec.mutations.clone();
        mutations.sort_by(|a, b| a.at.total_cmp(&b.at));

        let mut sim = Self {
            now: start,
            end,
            queue: EventQueue::new(),
            nodes,
            slots: spec.slots.clone(),
            slot_epoch: 0,
            routing: spec.routing.clone(),
            ch: spec.channel,
            overrides: spec.tx_overrides.clone(),
            mode: spec.mode,
            mutations,
            piggyback,
            perception_period,
            report_period: spec.report_period_s,
            start,
            loss_rng: stream(spec.seed, "corruption-draws", 0),
            next_packet_id: 0,
            next_tx_id: 0,
            tx_live: BTreeMap::new(),
            trace: Trace::default(),
        };
        sim.trace.horizon_s = spec.horizon_s;
        sim.schedule_initial();
        Ok(sim)
    }

    fn schedule_initial(&mut self) {
        // Injections go in first so same-instant slot starts see the state.
        let injects: Vec<(NodeId, SimTime)> = self
            .nodes
            .values()
            .filter_map(|n| {
                n.inject
                    .as_ref()
                    .and_then(|s| s.anchor_t)
                    .map(|at| (n.id, at.max(self.start)))
            })
            .collect();
        for (id, at) in injects {
            self.queue.push(at, Ev::Inject { node: id });
        }
        for i in 0..self.mutations.len() {
            let at = self.mutations[i].at;
            if at >= self.start && at < self.end {
                self.queue.push(at, Ev::Mutate { idx: i });
            }
        }
        if self.mode == TrafficMode::Periodic {
            let gens: Vec<(NodeId, SimTime)> = self
                .nodes
                .values()
                .filter(|n| n.up && n.config.gen_rate_pps > 0.0 && n.config.gen_dst.is_some())
                .map(|n| (n.id, self.start + 1.0 / n.config.gen_rate_pps))
                .collect();
            for (id, at) in gens {
                self.nodes.get_mut(&id).unwrap().next_gen_at = Some(at);
                self.queue.push(at, Ev::Gen { node: id, epoch: 0 });
            }
        }
        // First slot boundary at or after the start.
        let mut idx = self.slots.slot_index(self.start);
        if self.slots.slot_start(idx) < self.start {
            idx += 1;
        }
        self.queue
            .push(self.slots.slot_start(idx), Ev::SlotStart { index: idx, epoch: 0 });
        self.queue.push(self.start + self.report_period, Ev::Report);
        if let Some(p) = self.perception_period {
            self.queue.push(self.start + p, Ev::Perceive);
        }
    }

    pub fn run_to_end(&mut self) {
        while let Some(t) = self.queue.peek_time() {
            if t >= self.end {
                break;
            }
            let (t, ev) = self.queue.pop().expect("peeked");
            debug_assert!(t + 1e-9 >= self.now, "time went backwards");
            self.now = t;
            self.dispatch(ev);
        }
        self.now = self.end;
        let finals: Vec<(NodeId, Counters)> =
            self.nodes.values().map(|n| (n.id, n.counters)).collect();
        for (id, c) in finals {
            self.trace.final_counters.insert(id, c);
        }
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    fn dispatch(&mut self, ev: Ev) {
        match ev {
            Ev::SlotStart { index, epoch } => self.on_slot_start(index, epoch),
            Ev::TxEnd { tx_id } => self.on_tx_end(tx_id),
            Ev::RxEnd { rx, tx_id } => self.on_rx_end(rx, tx_id),
            Ev::Gen { node, epoch } => self.on_gen(node, epoch),
            Ev::Mutate { idx } => self.on_mutate(idx),
            Ev::Report => self.on_report(),
            Ev::Perceive => self.on_perceive(),
            Ev::PcApply { node, power_w } => self.on_pc_apply(node, power_w),
            Ev::Inject { node } => self.on_inject(node),
        }
    }

    // ------------------------------------------------------------------
    // Slot handling
    // ------------------------------------------------------------------

    fn on_slot_start(&mut self, index: i64, epoch: u32) {
        if epoch != self.slot_epoch {
            return;
        }
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let node = &self.nodes[&id];
            if !node.up || node.kind == NodeKind::Interferer {
                continue;
            }
            let offset = match self.slots.offsets.get(&id) {
                Some(o) => *o,
                None => continue,
            };
            if index.rem_euclid(self.slots.slot_cycle as i64) != offset as i64 {
                continue;
            }
            match self.mode {
                TrafficMode::Periodic => self.slot_periodic(id),
                TrafficMode::PowerControl => self.slot_power_control(id),
                TrafficMode::StatusCollection => self.slot_collect(id, index),
            }
        }
        let next = index + 1;
        self.queue
            .push(self.slots.slot_start(next), Ev::SlotStart { index: next, epoch });
    }

    fn slot_periodic(&mut self, id: NodeId) {
        // Anchor the twin's own-state at the slot boundary before dequeuing,
        // so piggybacked snapshots can be replayed exactly from slot starts.
        self.refresh_own_state(id);
        let packet = match self.nodes.get_mut(&id).unwrap().queue.pop_front() {
            Some(p) => p,
            None => return,
        };
        let power = self.nodes[&id].config.power_w;
        self.transmit(id, packet, power);
    }

    fn slot_power_control(&mut self, id: NodeId) {
        self.refresh_own_state(id);
        let now = self.now;
        let timeout = 2.0 * self.slots.slot_cycle as f64 * self.slots.slot_len_s;
        let (act, partner, size) = {
            let node = self.nodes.get_mut(&id).unwrap();
            let cfg_power = node.config.power_w;
            let size = node.config.packet_size_bytes;
            let pc = match node.pcmac.as_mut() {
                Some(pc) => pc,
                None => return,
            };
            let partner = pc.partner;
            let act = if pc.requester {
                match pc.state.phase {
                    PcPhase::AwaitHandshake => {
                        pc.state.phase = PcPhase::RtsSent { at: now };
                        PcSend::Rts
                    }
                    PcPhase::RtsSent { at } => {
                        if now - at >= timeout {
                            pc.state.phase = PcPhase::RtsSent { at: now };
                            PcSend::Rts
                        } else {
                            PcSend::Nothing
                        }
                    }
                    PcPhase::Established => PcSend::Data { power_w: pc.state.data_power_w },
                }
            } else if let Some(grant_w) = pc.pending_grant.take() {
                PcSend::Cts { grant_w }
            } else if pc.granted {
                PcSend::Feedback { loss: pc.fwd_loss_est, power_w: cfg_power }
            } else {
                PcSend::Nothing
            };
            (act, partner, size)
        };
        match act {
            PcSend::Rts => {
                let p = self.make_packet(
                    id,
                    partner,
                    PacketKind::Rts,
                    CONTROL_PACKET_BYTES,
                    PayloadMeta::PowerProbe,
                );
                self.transmit(id, p, MAX_POWER_W);
            }
            PcSend::Data { power_w } => {
                self.nodes.get_mut(&id).unwrap().counters.generated += 1;
                let p = self.make_packet(id, partner, PacketKind::Data, size, PayloadMeta::None);
                self.transmit(id, p, power_w);
            }
            PcSend::Cts { grant_w } => {
                let p = self.make_packet(
                    id,
                    partner,
                    PacketKind::Cts,
                    CONTROL_PACKET_BYTES,
                    PayloadMeta::PowerGrant { power_w: grant_w },
                );
                self.transmit(id, p, MAX_POWER_W);
            }
            PcSend::Feedback { loss, power_w } => {
                self.nodes.get_mut(&id).unwrap().counters.generated += 1;
                let p = self.make_packet(
                    id,
                    partner,
                    PacketKind::Data,
                    size,
                    PayloadMeta::LinkFeedback { ber: loss },
                );
                self.transmit(id, p, power_w);
            }
            PcSend::Nothing => {}
        }
    }

    fn slot_collect(&mut self, id: NodeId, index: i64) {
        self.refresh_own_state(id);
        let act = {
            let node = self.nodes.get_mut(&id).unwrap();
            let c = match node.collect.as_mut() {
                Some(c) => c,
                None => return,
            };
            if c.notified && c.role.forwards_schedule && !c.schedule_sent {
                c.schedule_sent = true;
                ColSend::Schedule { bytes: c.role.schedule_bytes }
            } else if c.role.depth > 0
                && !c.status_sent
                && c.role.upload_slot.map(|u| index >= u).unwrap_or(false)
            {
                if c.notified {
                    c.status_sent = true;
                    ColSend::Status { root: c.role.root, bytes: c.role.status_bytes }
                } else {
                    ColSend::Nothing
                }
            } else if node
                .queue
                .front()
                .map(|p| p.kind == PacketKind::Status)
                .unwrap_or(false)
            {
                ColSend::Forward
            } else {
                ColSend::Nothing
            }
        };
        let power = self.nodes[&id].config.power_w;
        match act {
            ColSend::Schedule { bytes } => {
                let p = self.make_packet(
                    id,
                    BROADCAST,
                    PacketKind::Schedule,
                    bytes,
                    PayloadMeta::Schedule { round: 0 },
                );
                self.transmit(id, p, power);
            }
            ColSend::Status { root, bytes } => {
                self.nodes.get_mut(&id).unwrap().counters.generated += 1;
                let p = self.make_packet(
                    id,
                    root,
                    PacketKind::Status,
                    bytes,
                    PayloadMeta::Status { round: 0 },
                );
                self.transmit(id, p, power);
            }
            ColSend::Forward => {
                let packet = self.nodes.get_mut(&id).unwrap().queue.pop_front().unwrap();
                self.transmit(id, packet, power);
            }
            ColSend::Nothing => {}
        }
    }

    // ------------------------------------------------------------------
    // Transmission and reception
    // ------------------------------------------------------------------

    fn make_packet(
        &mut self,
        src: NodeId,
        dst: NodeId,
        kind: PacketKind,
        size_bytes: u32,
        payload: PayloadMeta,
    ) -> Packet {
        let id = self.next_packet_id;
        self.next_packet_id += 1;
        Packet {
            id,
            src,
            dst,
            kind,
            size_bytes,
            created_at: self.now,
            payload,
            dt: None,
        }
    }

    /// Refresh the node's own state in its twin database, anchored at `now`.
    fn refresh_own_state(&mut self, id: NodeId) {
        let snap = self.nodes[&id].state_snap(self.now);
        self.nodes
            .get_mut(&id)
            .unwrap()
            .twin
            .ingest(DtDatum::OwnState(snap));
    }

    fn transmit(&mut self, id: NodeId, mut packet: Packet, power_w: f64) {
        let now = self.now;
        if self.piggyback && matches!(packet.kind, PacketKind::Data | PacketKind::Status) {
            packet.dt = Some(self.nodes[&id].twin.db().snapshot(now));
        }
        let duration = channel::tx_duration(packet.size_bytes, &self.ch, &self.overrides);
        let tx_id = self.next_tx_id;
        self.next_tx_id += 1;
        let tx_pos = self.nodes[&id].pos(now);
        let own = packet.src == id;
        let tx = Transmission {
            id: tx_id,
            tx: id,
            tx_pos,
            packet,
            power_w,
            start: now,
            duration,
        };
        self.trace.sends.push(SendRec {
            t: now,
            node: id,
            dst: tx.packet.dst,
            kind: tx.packet.kind,
            size_bytes: tx.packet.size_bytes,
            power_w,
            duration_s: duration,
            packet_id: tx.packet.id,
            own,
        });
        {
            let node = self.nodes.get_mut(&id).unwrap();
            if own {
                node.counters.sent_own += 1;
            } else {
                node.counters.sent_fwd += 1;
            }
            node.window.sent += 1;
            node.own_tx.push((now, now + duration));
            let cutoff = now - 120.0;
            node.own_tx.retain(|(_, e)| *e > cutoff);
        }
        self.queue.push(now + duration, Ev::TxEnd { tx_id });

        // Register a reception window at every node that can detect the
        // signal, including nodes currently down: whether the packet lands is
        // decided by the receiver's state at reception end, so a transmission
        // already on the wire still reaches a node that wakes mid-flight.
        // Sub-detection receivers are logged and take no part in collision
        // resolution.
        let mut pending = 0u32;
        let rx_ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for rx_id in rx_ids {
            if rx_id == id {
                continue;
            }
            let rx = &self.nodes[&rx_id];
            if rx.kind == NodeKind::Interferer {
                continue;
            }
            let d = distance(tx_pos, rx.pos(now));
            let level = channel::received_level_db(power_w, d, &self.ch);
            let arrival = now + channel::propagation_delay(d, &self.ch);
            if level < self.ch.detection_level_db {
                self.trace.deliveries.push(DeliveryRec {
                    t: arrival,
                    rx: rx_id,
                    tx: id,
                    src: tx.packet.src,
                    dst: tx.packet.dst,
                    kind: tx.packet.kind,
                    size_bytes: tx.packet.size_bytes,
                    outcome: DeliveryOutcome::OutOfRange,
                    snr_db: f64::NEG_INFINITY,
                    packet_id: tx.packet.id,
                });
                continue;
            }
            let end = arrival + duration;
            self.nodes
                .get_mut(&rx_id)
                .unwrap()
                .active_rx
                .push(ActiveRx { tx_id, arrival, end });
            self.queue.push(end, Ev::RxEnd { rx: rx_id, tx_id });
            pending += 1;
        }
        self.tx_live.insert(tx_id, (tx, pending));
    }

    fn on_tx_end(&mut self, tx_id: u64) {
        let (power_w, duration, tx_node) = match self.tx_live.get(&tx_id) {
            Some((tx, _)) => (tx.power_w, tx.duration, tx.tx),
            None => return,
        };
        let spent = power_w * duration;
        *self.trace.energy_j.entry(tx_node).or_insert(0.0) += spent;
        let went_down = {
            let node = self.nodes.get_mut(&tx_node).unwrap();
            node.energy_j -= spent;
            node.window.energy_j += spent;
            if node.energy_j <= 0.0 && node.up {
                node.up = false;
                true
            } else {
                false
            }
        };
        if went_down {
            self.trace.decide(self.now, tx_node, "energy_exhausted", 0.0);
        }
        if self
            .tx_live
            .get(&tx_id)
            .map(|(_, pending)| *pending == 0)
            .unwrap_or(false)
        {
            self.tx_live.remove(&tx_id);
        }
    }

    /// Summed received-equivalent acoustic power of all active interference
    /// sources at a receiver, plus any configured local extra noise.
    fn interference_at(&self, rx_id: NodeId, rx_pos: [f64; 3]) -> f64 {
        let mut total = self.nodes[&rx_id].extra_noise_w;
        for n in self.nodes.values() {
            if n.interferer_active && n.up && n.interferer_power_w > 0.0 && n.id != rx_id {
                let d = distance(n.pos(self.now), rx_pos);
                total += channel::received_acoustic_w(n.interferer_power_w, d, &self.ch);
            }
        }
        total
    }

    /// Resolve one reception: half-duplex and collision checks against every
    /// overlapping window at this receiver, then SNR and a corruption draw
    /// when the loss probability is strictly fractional.
    fn deliver(&mut self, rx_id: NodeId, tx_id: u64) -> (DeliveryOutcome, f64) {
        let tx = self.tx_live[&tx_id].0.clone();
        let (collided, rx_pos) = {
            let rx = &self.nodes[&rx_id];
            let w = rx
                .active_rx
                .iter()
                .find(|a| a.tx_id == tx_id)
                .copied()
                .expect("reception window registered at transmit time");
            let half_duplex = rx.own_tx.iter().any(|(s, e)| *s < w.end && w.arrival < *e);
            let overlap = rx
                .active_rx
                .iter()
                .any(|a| a.tx_id != tx_id && a.arrival < w.end && w.arrival < a.end);
            (half_duplex || overlap, rx.pos(self.now))
        };
        let interference = self.interference_at(rx_id, rx_pos);
        let snr_db = channel::snr_db(&tx, rx_pos, interference, &self.ch);
        let outcome = if collided {
            DeliveryOutcome::Collided
        } else {
            let bits = 8 * tx.packet.size_bytes as u64;
            let p = channel::packet_loss_prob(channel::ber(snr_db), bits);
            if p <= 0.0 {
                DeliveryOutcome::Delivered
            } else if p >= 1.0 {
                DeliveryOutcome::Corrupted
            } else if self.loss_rng.gen::<f64>() < p {
                DeliveryOutcome::Corrupted
            } else {
                DeliveryOutcome::Delivered
            }
        };
        self.trace.deliveries.push(DeliveryRec {
            t: self.now,
            rx: rx_id,
            tx: tx.tx,
            src: tx.packet.src,
            dst: tx.packet.dst,
            kind: tx.packet.kind,
            size_bytes: tx.packet.size_bytes,
            outcome,
            snr_db,
            packet_id: tx.packet.id,
        });
        (outcome, snr_db)
    }

    fn on_rx_end(&mut self, rx_id: NodeId, tx_id: u64) {
        if !self.nodes[&rx_id].up {
            // Receiver shut down while the signal was in flight.
            self.release_rx(rx_id, tx_id);
            return;
        }
        let (outcome, snr_db) = self.deliver(rx_id, tx_id);
        let tx = self.tx_live[&tx_id].0.clone();

        // Every detectable reception is a channel measurement for the twin;
        // the payload is only readable on delivery.
        {
            let node = self.nodes.get_mut(&rx_id).unwrap();
            node.twin.ingest(DtDatum::Comm(CommDatum {
                t: self.now,
                counterpart: tx.tx,
                kind: tx.packet.kind,
                size_bytes: tx.packet.size_bytes,
                outcome,
                snr_db,
                counterpart_power_w: None,
            }));
            match outcome {
                DeliveryOutcome::Corrupted => {
                    node.counters.received_corrupted += 1;
                    node.window.corrupted += 1;
                }
                DeliveryOutcome::Collided => {
                    node.counters.received_collided += 1;
                    node.window.collided += 1;
                }
                DeliveryOutcome::Delivered | DeliveryOutcome::OutOfRange => {}
            }
        }

        if outcome == DeliveryOutcome::Delivered {
            if let Some(snap) = tx.packet.dt.clone() {
                self.nodes
                    .get_mut(&rx_id)
                    .unwrap()
                    .twin
                    .ingest(DtDatum::Snapshot(snap));
            }
            let to_me = tx.packet.dst == rx_id || tx.packet.dst == BROADCAST;
            if to_me {
                let node = self.nodes.get_mut(&rx_id).unwrap();
                node.counters.received_ok += 1;
                node.window.received_ok += 1;
                if matches!(tx.packet.kind, PacketKind::Data | PacketKind::Status)
                    && tx.packet.dst == rx_id
                {
                    let bits = 8 * tx.packet.size_bytes as u64;
                    node.counters.bits_to_me += bits;
                    node.window.bits_to_me += bits;
                }
            }
            self.delivered_effects(rx_id, &tx, snr_db);
        } else if tx.packet.kind == PacketKind::Data && outcome == DeliveryOutcome::Corrupted {
            // A corrupted frame still carries SNR information for power
            // control even though its payload is gone.
            self.pc_on_data(rx_id, &tx, outcome, snr_db);
        }
        self.release_rx(rx_id, tx_id);
    }

    fn release_rx(&mut self, rx_id: NodeId, tx_id: u64) {
        {
            let node = self.nodes.get_mut(&rx_id).unwrap();
            let cutoff = self.now - 120.0;
            node.active_rx.retain(|a| a.end > cutoff);
        }
        let remove = match self.tx_live.get_mut(&tx_id) {
            Some(entry) => {
                entry.1 = entry.1.saturating_sub(1);
                entry.1 == 0 && entry.0.end() <= self.now
            }
            None => false,
        };
        if remove {
            self.tx_live.remove(&tx_id);
        }
    }

    fn delivered_effects(&mut self, rx_id: NodeId, tx: &Transmission, snr_db: f64) {
        match tx.packet.kind {
            PacketKind::Data => {
                self.pc_on_data(rx_id, tx, DeliveryOutcome::Delivered, snr_db);
                self.maybe_forward(rx_id, tx);
            }
            PacketKind::Status => {
                let is_root = self.nodes[&rx_id]
                    .collect
                    .as_ref()
                    .map(|c| c.role.depth == 0)
                    .unwrap_or(false);
                if tx.packet.dst == rx_id && is_root {
                    let (count, expect) = {
                        let c =
                            self.nodes.get_mut(&rx_id).unwrap().collect.as_mut().unwrap();
                        c.statuses_received += 1;
                        (c.statuses_received, c.role.expect_statuses)
                    };
                    self.trace
                        .decide(self.now, rx_id, "status_received", count as f64);
                    if count == expect {
                        self.trace
                            .decide(self.now, rx_id, "collection_complete", count as f64);
                    }
                } else {
                    self.maybe_forward(rx_id, tx);
                }
            }
            PacketKind::Schedule => {
                let newly = match self.nodes.get_mut(&rx_id).unwrap().collect.as_mut() {
                    Some(c) if !c.notified => {
                        c.notified = true;
                        true
                    }
                    _ => false,
                };
                if newly {
                    self.trace.decide(self.now, rx_id, "notified", 1.0);
                }
            }
            PacketKind::Rts => {
                if let PayloadMeta::PowerProbe = tx.packet.payload {
                    self.pc_on_rts(rx_id, tx.tx, snr_db);
                }
            }
            PacketKind::Cts => {
                if let PayloadMeta::PowerGrant { power_w } = tx.packet.payload {
                    self.pc_on_grant(rx_id, tx.tx, power_w);
                }
            }
            PacketKind::Interference => {}
        }
    }

    /// Take custody of a packet when this node is the transmitter's next hop
    /// toward the final destination.
    fn maybe_forward(&mut self, rx_id: NodeId, tx: &Transmission) {
        let dst = tx.packet.dst;
        if dst == rx_id || dst == BROADCAST {
            return;
        }
        if self.routing.next_hop(tx.tx, dst) != Some(rx_id) {
            return;
        }
        let mut fwd = tx.packet.clone();
        // The piggybacked summary is per hop; the forwarder attaches its own.
        fwd.dt = None;
        self.nodes.get_mut(&rx_id).unwrap().queue.push_back(fwd);
    }

    // ------------------------------------------------------------------
    // Power-control protocol effects
    // ------------------------------------------------------------------

    fn pc_on_rts(&mut self, rx_id: NodeId, from: NodeId, snr_db: f64) {
        let grant = {
            let node = self.nodes.get_mut(&rx_id).unwrap();
            let pc = match node.pcmac.as_mut() {
                Some(pc) if !pc.requester && pc.partner == from => pc,
                _ => return,
            };
            let grant = pcmac_handshake(
                snr_db,
                MAX_POWER_W,
                pc.state.loss_threshold,
                pc.state.packet_bits,
                &GRANT_LEVELS_W,
            );
            pc.pending_grant = Some(grant);
            pc.granted = true;
            pc.reverse_power_w = grant;
            // Both directions of the managed link run at the sized power, so
            // the requester's belief about reverse power stays exact.
            node.config.power_w = grant;
            grant
        };
        self.trace.decide(self.now, rx_id, "pc_grant_w", grant);
    }

    fn pc_on_grant(&mut self, rx_id: NodeId, from: NodeId, power_w: f64) {
        let slot = self.slots.slot_index(self.now);
        let mut rows: Vec<(&str, f64)> = Vec::new();
        {
            let node = self.nodes.get_mut(&rx_id).unwrap();
            let pc = match node.pcmac.as_mut() {
                Some(pc) if pc.requester && pc.partner == from => pc,
                _ => return,
            };
            pc.state.data_power_w = power_w;
            pc.state.phase = PcPhase::Established;
            pc.reverse_power_w = power_w;
            rows.push(("pc_power_set_w", power_w));
            if let Some(t0) = pc.state.degraded_since.take() {
                rows.push(("pc_adjust_time_s", self.now - t0));
                if let Some(d) = pc.detect_slot.take() {
                    rows.push(("pc_adjust_slots", (slot - d) as f64));
                }
            }
        }
        for (label, v) in rows {
            self.trace.decide(self.now, rx_id, label, v);
        }
    }

    fn pc_on_data(
        &mut self,
        rx_id: NodeId,
        tx: &Transmission,
        outcome: DeliveryOutcome,
        snr_db: f64,
    ) {
        let now = self.now;
        let slot = self.slots.slot_index(now);
        let rx_pos = self.nodes[&rx_id].pos(now);
        let d = distance(tx.tx_pos, rx_pos);
        let ambient = channel::ambient_noise_w(&self.ch);
        let ch = self.ch;
        let out = {
            let node = self.nodes.get_mut(&rx_id).unwrap();
            let pc = match node.pcmac.as_mut() {
                Some(pc) => pc,
                None => return,
            };
            if tx.tx != pc.partner {
                return;
            }
            if !pc.requester {
                // Responder side: every forward frame measures the link the
                // requester cares about; feed it back on reverse data.
                pc.fwd_loss_est =
                    channel::packet_loss_prob(channel::ber(snr_db), pc.state.packet_bits);
                return;
            }
            if pc.state.phase != PcPhase::Established {
                PcOut::Nothing
            } else {
                // Reverse traffic carries the responder's measured forward
                // loss; a corrupted frame is still an SNR sample, and the
                // managed link is symmetric, so the local reading stands in.
                let loss_est = match (&tx.packet.payload, outcome) {
                    (PayloadMeta::LinkFeedback { ber }, DeliveryOutcome::Delivered) => *ber,
                    _ => channel::packet_loss_prob(channel::ber(snr_db), pc.state.packet_bits),
                };
                match pc.state.variant {
                    PcVariant::Fixed => PcOut::Nothing,
                    PcVariant::Relink => {
                        if pcmac_r_step(&pc.state, loss_est) == PcAction::StartHandshake {
                            pc.state.phase = PcPhase::AwaitHandshake;
                            pc.state.degraded_since = Some(now);
                            pc.detect_slot = Some(slot);
                            PcOut::Degraded(loss_est)
                        } else {
                            PcOut::Nothing
                        }
                    }
                    PcVariant::DtAssisted => {
                        // Channel inversion: reverse power and geometry are
                        // known, so the measured SNR yields the total noise.
                        let sig_w = channel::received_acoustic_w(pc.reverse_power_w, d, &ch);
                        let snr_lin = 10f64.powf(snr_db / 10.0);
                        let total_noise_w = sig_w / snr_lin;
                        let loss_here = channel::packet_loss_prob(
                            channel::ber(snr_db),
                            pc.state.packet_bits,
                        );
                        if loss_here <= pc.state.loss_threshold {
                            let floor = pc.state.noise_floor_w.unwrap_or(f64::INFINITY);
                            if total_noise_w < floor {
                                pc.state.noise_floor_w = Some(total_noise_w);
                            }
                        }
                        if pc.state.degraded_since.is_some() {
                            // An adjustment is already in flight.
                            PcOut::Nothing
                        } else {
                            let floor = pc.state.noise_floor_w.unwrap_or(ambient);
                            pc.state.interference_est_w = (total_noise_w - floor).max(0.0);
                            let link = LinkEstimate {
                                distance_m: d,
                                noise_w: floor,
                                interference_w: pc.state.interference_est_w,
                            };
                            match pcmac_dt_step(&pc.state, &link, &ch) {
                                PcAction::Keep | PcAction::StartHandshake => PcOut::Nothing,
                                PcAction::SetPower(p) => {
                                    let upgrading = p > pc.state.data_power_w;
                                    if upgrading {
                                        pc.state.degraded_since = Some(now);
                                        pc.detect_slot = Some(slot);
                                    }
                                    PcOut::Apply {
                                        power_w: p,
                                        delay: pc.state.compute_delay_s,
                                        fresh_detect: upgrading,
                                    }
                                }
                            }
                        }
                    }
                }
            }
        };
        match out {
            PcOut::Nothing => {}
            PcOut::Degraded(loss) => {
                self.trace.decide(now, rx_id, "pc_degraded", loss);
            }
            PcOut::Apply { power_w, delay, fresh_detect } => {
                if fresh_detect {
                    self.trace.decide(now, rx_id, "pc_degraded", 1.0);
                }
                self.queue.push(now + delay, Ev::PcApply { node: rx_id, power_w });
            }
        }
    }

    fn on_pc_apply(&mut self, id: NodeId, power_w: f64) {
        let slot = self.slots.slot_index(self.now);
        let mut rows: Vec<(&str, f64)> = vec![("pc_power_set_w", power_w)];
        {
            let node = self.nodes.get_mut(&id).unwrap();
            let pc = match node.pcmac.as_mut() {
                Some(pc) => pc,
                None => return,
            };
            pc.state.data_power_w = power_w;
            if let Some(t0) = pc.state.degraded_since.take() {
                rows.push(("pc_adjust_time_s", self.now - t0));
                if let Some(d) = pc.detect_slot.take() {
                    rows.push(("pc_adjust_slots", (slot - d) as f64));
                }
            }
        }
        for (label, v) in rows {
            self.trace.decide(self.now, id, label, v);
        }
    }

    // ------------------------------------------------------------------
    // Generation, mutation, injection
    // ------------------------------------------------------------------

    fn on_gen(&mut self, id: NodeId, epoch: u32) {
        let (rate, size, dst, up, node_epoch) = {
            let n = &self.nodes[&id];
            (
                n.config.gen_rate_pps,
                n.config.packet_size_bytes,
                n.config.gen_dst,
                n.up,
                n.gen_epoch,
            )
        };
        if epoch != node_epoch || rate <= 0.0 {
            return;
        }
        if up {
            if let Some(dst) = dst {
                let p = self.make_packet(id, dst, PacketKind::Data, size, PayloadMeta::None);
                let node = self.nodes.get_mut(&id).unwrap();
                node.queue.push_back(p);
                node.counters.generated += 1;
            }
        }
        let next = self.now + 1.0 / rate;
        self.nodes.get_mut(&id).unwrap().next_gen_at = Some(next);
        self.queue.push(next, Ev::Gen { node: id, epoch });
    }

    fn on_mutate(&mut self, idx: usize) {
        let m = self.mutations[idx];
        match m.kind {
            MutationKind::SendingRate(rate) => {
                let ids: Vec<NodeId> = self
                    .nodes
                    .values()
                    .filter(|n| n.config.gen_dst.is_some())
                    .map(|n| n.id)
                    .collect();
                for id in ids {
                    let (next, epoch) = {
                        let node = self.nodes.get_mut(&id).unwrap();
                        node.config.gen_rate_pps = rate;
                        node.gen_epoch += 1;
                        let next = self.now + 1.0 / rate;
                        node.next_gen_at = Some(next);
                        (next, node.gen_epoch)
                    };
                    self.queue.push(next, Ev::Gen { node: id, epoch });
                    self.refresh_own_state(id);
                }
            }
            MutationKind::PacketSize(size) => {
                let ids: Vec<NodeId> = self
                    .nodes
                    .values()
                    .filter(|n| n.config.gen_dst.is_some())
                    .map(|n| n.id)
                    .collect();
                for id in ids {
                    self.nodes.get_mut(&id).unwrap().config.packet_size_bytes = size;
                    self.refresh_own_state(id);
                }
            }
            MutationKind::SlotLength(len) => {
                self.slots.retime(len, self.now);
                self.slot_epoch += 1;
                let epoch = self.slot_epoch;
                self.queue.push(self.now, Ev::SlotStart { index: 0, epoch });
                let slots = self.slots.clone();
                let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
                for id in ids {
                    self.nodes
                        .get_mut(&id)
                        .unwrap()
                        .twin
                        .on_slots_changed(&slots, self.now);
                }
            }
            MutationKind::InterfererActive(id, on) => {
                if let Some(n) = self.nodes.get_mut(&id) {
                    n.interferer_active = on;
                }
            }
            MutationKind::NodePower(id, p) => {
                if self.nodes.contains_key(&id) {
                    self.nodes.get_mut(&id).unwrap().config.power_w = p;
                    self.refresh_own_state(id);
                }
            }
            MutationKind::NodeVelocity(id, v) => {
                if self.nodes.contains_key(&id) {
                    {
                        let n = self.nodes.get_mut(&id).unwrap();
                        let pos = n.pos(self.now);
                        n.pos_anchor = pos;
                        n.pos_anchor_t = self.now;
                        n.velocity = v;
                    }
                    self.refresh_own_state(id);
                }
            }
            MutationKind::NodeUp(id, up) => {
                if self.nodes.contains_key(&id) {
                    let arm = {
                        let n = self.nodes.get_mut(&id).unwrap();
                        n.up = up;
                        up && n.config.gen_rate_pps > 0.0
                            && n.config.gen_dst.is_some()
                            && self.mode == TrafficMode::Periodic
                    };
                    if arm {
                        let (next, epoch) = {
                            let n = self.nodes.get_mut(&id).unwrap();
                            n.gen_epoch += 1;
                            let next = self.now + 1.0 / n.config.gen_rate_pps;
                            n.next_gen_at = Some(next);
                            (next, n.gen_epoch)
                        };
                        self.queue.push(next, Ev::Gen { node: id, epoch });
                    }
                    self.refresh_own_state(id);
                }
            }
        }
        self.trace
            .decide(self.now, NodeId(0), "mutation_applied", idx as f64);
    }

    fn on_inject(&mut self, id: NodeId) {
        let spec = match self.nodes.get_mut(&id).unwrap().inject.take() {
            Some(s) => s,
            None => return,
        };
        {
            let node = self.nodes.get_mut(&id).unwrap();
            node.up = spec.starts_up;
            node.pos_anchor = spec.position;
            node.pos_anchor_t = self.now;
            node.velocity = spec.velocity;
            node.energy_j = spec.initial_energy_j;
            node.config = spec.config;
            node.next_gen_at = spec.next_gen_at;
        }
        // Materialize the believed queue. Forwarded packets are attributed to
        // the upstream neighbor routing through this node; the distinction
        // only matters for queue composition, not timing. The per-packet size
        // list preserves a mixed-size backlog in service order; the plain
        // counts are the fallback for specs that never carried one.
        let dst = spec.config.gen_dst;
        let upstream: Vec<NodeId> = dst
            .map(|d| self.routing.children_via(id, d))
            .unwrap_or_default();
        let fwd_src = upstream.first().copied().unwrap_or(id);
        let entries: Vec<(u32, bool)> = if !spec.queue_sizes.is_empty() {
            spec.queue_sizes.clone()
        } else {
            let fwd_size = self
                .nodes
                .get(&fwd_src)
                .map(|n| n.config.packet_size_bytes)
                .unwrap_or(spec.config.packet_size_bytes);
            std::iter::repeat((fwd_size, false))
                .take(spec.queue_fwd as usize)
                .chain(
                    std::iter::repeat((spec.config.packet_size_bytes, true))
                        .take(spec.queue_own as usize),
                )
                .collect()
        };
        if let Some(d) = dst {
            for (size, own) in entries {
                let src = if own { id } else { fwd_src };
                let p = self.make_packet(src, d, PacketKind::Data, size, PayloadMeta::None);
                self.nodes.get_mut(&id).unwrap().queue.push_back(p);
            }
        }
        if spec.config.gen_rate_pps > 0.0
            && dst.is_some()
            && self.mode == TrafficMode::Periodic
            && spec.starts_up
        {
            let (next, epoch) = {
                let node = self.nodes.get_mut(&id).unwrap();
                node.gen_epoch += 1;
                let next = spec
                    .next_gen_at
                    .unwrap_or(self.now + 1.0 / spec.config.gen_rate_pps)
                    .max(self.now);
                node.next_gen_at = Some(next);
                (next, node.gen_epoch)
            };
            self.queue.push(next, Ev::Gen { node: id, epoch });
        }
        self.refresh_own_state(id);
    }

    // ------------------------------------------------------------------
    // Reporting and perception
    // ------------------------------------------------------------------

    fn on_report(&mut self) {
        let rows: Vec<(NodeId, f64, f64)> = self
            .nodes
            .values()
            .map(|n| (n.id, n.queue.len() as f64, n.energy_j))
            .collect();
        for (id, qlen, energy) in rows {
            self.trace.row(self.now, id, "queue_len", qlen);
            self.trace.row(self.now, id, "energy_j", energy);
        }
        self.queue.push(self.now + self.report_period, Ev::Report);
    }

    fn on_perceive(&mut self) {
        let period = self
            .perception_period
            .expect("perceive scheduled without a period");
        let interval_start = self.now - period;
        let interval = ((self.now - self.start) / period).round() as u64 - 1;
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in ids {
            let (metrics, up) = {
                let n = self.nodes.get_mut(&id).unwrap();
                let w = n.window;
                n.window = Window::default();
                let attempts = w.received_ok + w.corrupted + w.collided;
                let success = if attempts > 0 {
                    w.received_ok as f64 / attempts as f64
                } else {
                    1.0
                };
                (
                    [
                        (MetricId::SentTotal, w.sent as f64),
                        (MetricId::ReceivedOk, w.received_ok as f64),
                        (MetricId::SuccessRate, success),
                        (MetricId::ThroughputBps, w.bits_to_me as f64 / period),
                        (MetricId::EnergyJ, w.energy_j),
                    ],
                    n.up,
                )
            };
            if !up {
                continue;
            }
            // Fresh own state plus the completed interval's metrics go into
            // the twin before it perceives.
            self.refresh_own_state(id);
            {
                let n = self.nodes.get_mut(&id).unwrap();
                for (mid, v) in metrics {
                    n.twin.ingest(DtDatum::Metric { interval, id: mid, value: v });
                }
            }
            // Realized per-interval rows are stamped at the interval start so
            // forecasts and realizations share a time key.
            for (mid, v) in metrics {
                self.trace
                    .row(interval_start, id, &format!("real_{}", mid.label()), v);
            }
            let report = {
                let n = self.nodes.get_mut(&id).unwrap();
                n.twin.perceive(self.now, interval)
            };
            if let Some(report) = report {
                for (metric, value) in report.rows {
                    self.trace.row(interval_start, id, &metric, value);
                }
                for (metric, value) in report.forecast {
                    self.trace.row(self.now, id, &metric, value);
                }
                for (label, value) in report.notes {
                    self.trace.decide(self.now, id, &label, value);
                }
                if let Some(cfg) = report.scheme {
                    self.deploy_scheme(id, cfg);
                }
            }
        }
        self.queue.push(self.now + period, Ev::Perceive);
    }

    /// Apply a twin-issued configuration to the owning node. Deployment is
    /// atomic: an illegal parameter rejects the whole scheme and leaves the
    /// node as it was. Either way the attempt is logged.
    pub fn deploy_scheme(&mut self, id: NodeId, cfg: NodeConfig) -> bool {
        let legal = cfg.power_w > 0.0
            && cfg.power_w <= MAX_POWER_W
            && cfg.gen_rate_pps >= 0.0
            && cfg.packet_size_bytes >= 1
            && (cfg.gen_rate_pps == 0.0 || cfg.gen_dst.is_some());
        if legal {
            self.nodes.get_mut(&id).unwrap().config = cfg;
            self.trace.decide(self.now, id, "scheme_deployed", cfg.power_w);
            self.refresh_own_state(id);
        } else {
            self.trace.decide(self.now, id, "scheme_rejected", cfg.power_w);
        }
        legal
    }
}
