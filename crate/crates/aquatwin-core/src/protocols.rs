//! MAC and routing protocols: the pipelined slotted MAC, static routing, and
//! the power-control MAC family (fixed grant, re-handshake, twin-assisted).

use crate::channel::{self, ChannelParams};
use crate::sim::SimTime;
use crate::types::NodeId;
use std::collections::BTreeMap;

// ============================================================================
// Slotted MAC
// ============================================================================

/// Slot length in whole seconds covering one transmission plus its
/// propagation to the next hop.
pub fn compute_slot_length(tx_delay_s: f64, prop_delay_s: f64) -> f64 {
    (tx_delay_s + prop_delay_s).ceil()
}

/// Global TDMA schedule. Slots are numbered from an anchor time; a node owns
/// every slot whose index is congruent to its offset modulo the cycle.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(from = "SlotScheduleRepr", into = "SlotScheduleRepr")]
pub struct SlotSchedule {
    /// Anchor time of slot 0; re-anchored when the slot length changes.
    pub origin: SimTime,
    pub slot_len_s: f64,
    pub slot_cycle: u32,
    pub offsets: BTreeMap<NodeId, u32>,
}

/// Wire form of [`SlotSchedule`] with offsets as a list, which keeps the
/// JSON free of structured map keys.
#[derive(serde::Serialize, serde::Deserialize)]
struct SlotScheduleRepr {
    #[serde(default)]
    origin: SimTime,
    slot_len_s: f64,
    slot_cycle: u32,
    offsets: Vec<(NodeId, u32)>,
}

impl From<SlotScheduleRepr> for SlotSchedule {
    fn from(r: SlotScheduleRepr) -> Self {
        Self {
            origin: r.origin,
            slot_len_s: r.slot_len_s,
            slot_cycle: r.slot_cycle,
            offsets: r.offsets.into_iter().collect(),
        }
    }
}

impl From<SlotSchedule> for SlotScheduleRepr {
    fn from(s: SlotSchedule) -> Self {
        Self {
            origin: s.origin,
            slot_len_s: s.slot_len_s,
            slot_cycle: s.slot_cycle,
            offsets: s.offsets.into_iter().collect(),
        }
    }
}

impl SlotSchedule {
    pub fn new(slot_len_s: f64, slot_cycle: u32, offsets: BTreeMap<NodeId, u32>) -> Self {
        Self { origin: 0.0, slot_len_s, slot_cycle, offsets }
    }

    pub fn slot_index(&self, t: SimTime) -> i64 {
        ((t - self.origin) / self.slot_len_s).floor() as i64
    }

    pub fn slot_start(&self, index: i64) -> SimTime {
        self.origin + index as f64 * self.slot_len_s
    }

    /// Re-anchor the schedule with a new slot length, starting a fresh slot 0
    /// at `at`. Keeps offsets.
    pub fn retime(&mut self, slot_len_s: f64, at: SimTime) {
        self.slot_len_s = slot_len_s;
        self.origin = at;
    }

    /// Start time of the first slot owned by `node` at or after `from`.
    pub fn next_owned_start(&self, node: NodeId, from: SimTime) -> Option<SimTime> {
        let offset = *self.offsets.get(&node)?;
        let mut idx = self.slot_index(from.max(self.origin));
        for _ in 0..=self.slot_cycle as i64 {
            let start = self.slot_start(idx);
            if start >= from && idx.rem_euclid(self.slot_cycle as i64) == offset as i64 {
                return Some(start);
            }
            idx += 1;
        }
        None
    }
}

/// Whether `node` may transmit at time `t` under the pipelined slotted MAC.
pub fn pmac_may_send(sched: &SlotSchedule, node: NodeId, t: SimTime) -> bool {
    match sched.offsets.get(&node) {
        Some(offset) => {
            sched.slot_index(t).rem_euclid(sched.slot_cycle as i64) == *offset as i64
        }
        None => false,
    }
}

// ============================================================================
// Routing
// ============================================================================

/// Static next-hop routing, configured per scenario.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(from = "Vec<RouteEntry>", into = "Vec<RouteEntry>")]
pub struct RoutingTable {
    next: BTreeMap<(NodeId, NodeId), NodeId>,
}

/// Wire form of one routing entry: at `at`, traffic for `dst` goes to `via`.
#[derive(serde::Serialize, serde::Deserialize)]
struct RouteEntry {
    at: NodeId,
    dst: NodeId,
    via: NodeId,
}

impl From<Vec<RouteEntry>> for RoutingTable {
    fn from(entries: Vec<RouteEntry>) -> Self {
        let mut t = RoutingTable::default();
        for e in entries {
            t.set(e.at, e.dst, e.via);
        }
        t
    }
}

impl From<RoutingTable> for Vec<RouteEntry> {
    fn from(t: RoutingTable) -> Self {
        t.next
            .into_iter()
            .map(|((at, dst), via)| RouteEntry { at, dst, via })
            .collect()
    }
}

impl RoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, at: NodeId, dst: NodeId, via: NodeId) {
        self.next.insert((at, dst), via);
    }

    /// Install routes along a forward chain of nodes, first to last.
    pub fn add_chain(&mut self, chain: &[NodeId]) {
        for i in 0..chain.len() {
            for j in (i + 1)..chain.len() {
                self.set(chain[i], chain[j], chain[i + 1]);
            }
        }
    }

    pub fn next_hop(&self, at: NodeId, dst: NodeId) -> Option<NodeId> {
        if at == dst {
            return Some(dst);
        }
        self.next.get(&(at, dst)).copied()
    }

    /// Full path from `at` to `dst`, if one is configured and loop-free.
    pub fn path(&self, at: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![at];
        let mut cur = at;
        while cur != dst {
            let hop = self.next_hop(cur, dst)?;
            if path.contains(&hop) {
                return None;
            }
            path.push(hop);
            cur = hop;
        }
        Some(path)
    }

    /// Nodes whose configured route to `dst` goes through `via` as the first
    /// hop. Used to fan broadcasts down a collection tree.
    pub fn children_via(&self, via: NodeId, dst: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .next
            .iter()
            .filter(|((at, d), hop)| *d == dst && **hop == via && *at != via)
            .map(|((at, _), _)| *at)
            .collect();
        out.dedup();
        out
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }
}

/// Next hop for a packet currently at `at` with final destination `dst`.
pub fn next_hop(routing: &RoutingTable, at: NodeId, dst: NodeId) -> Option<NodeId> {
    routing.next_hop(at, dst)
}

// ============================================================================
// Power-control MAC family
// ============================================================================

/// Candidate electric transmit powers of the modem, in watts.
pub const FINE_POWER_GRID_W: [f64; 11] =
    [0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 12.0, 16.0, 18.0, 24.0, 30.0];

/// Power levels encodable in the handshake grant field. The twin-assisted
/// variant is not bound by this quantization, which is where its finer
/// allocations come from.
pub const GRANT_LEVELS_W: [f64; 5] = [6.0, 12.0, 18.0, 24.0, 30.0];

pub const MAX_POWER_W: f64 = 30.0;
pub const CONTROL_PACKET_BYTES: u32 = 30;

/// Smallest grid value >= `p`, clamped to the grid maximum.
pub fn round_up_in_grid(p: f64, grid: &[f64]) -> f64 {
    for &g in grid {
        if g >= p {
            return g;
        }
    }
    *grid.last().expect("grid must be non-empty")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcVariant {
    /// Handshake once, never adjust.
    Fixed,
    /// Re-handshake when the observed error rate crosses the threshold.
    Relink,
    /// Local twin estimates interference and re-selects power directly.
    DtAssisted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcPhase {
    AwaitHandshake,
    RtsSent { at: SimTime },
    Established,
}

/// Sender-side state of one power-controlled link.
#[derive(Debug, Clone)]
pub struct PcMacState {
    pub variant: PcVariant,
    pub phase: PcPhase,
    /// Currently selected electric transmit power for data.
    pub data_power_w: f64,
    /// Error-rate threshold on the packet error rate. The per-bit BER is also
    /// reported, but adjust decisions act on packet losses.
    pub loss_threshold: f64,
    /// Bits per data packet, for converting per-bit BER to packet loss.
    pub packet_bits: u64,
    /// Twin-side decision latency for the assisted variant, seconds.
    pub compute_delay_s: f64,
    /// Sender-side noise floor estimate (linear received watts).
    pub noise_floor_w: Option<f64>,
    /// Sender-side interference estimate (linear received watts).
    pub interference_est_w: f64,
    /// Set when degradation was observed and an adjustment is in flight.
    pub degraded_since: Option<SimTime>,
}

impl PcMacState {
    pub fn new(variant: PcVariant, packet_bits: u64) -> Self {
        Self {
            variant,
            phase: PcPhase::AwaitHandshake,
            data_power_w: MAX_POWER_W,
            loss_threshold: 0.05,
            packet_bits,
            compute_delay_s: 0.1,
            noise_floor_w: None,
            interference_est_w: 0.0,
            degraded_since: None,
        }
    }
}

/// Action requested by a power-control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcAction {
    Keep,
    /// Send an RTS probe at maximum power in the next owned slot.
    StartHandshake,
    /// Apply a new data power (twin-assisted path, no control packets).
    SetPower(f64),
}

/// SNR (dB) a link must reach so a packet of `bits` survives with loss
/// probability `loss_threshold`.
pub fn snr_target_db(loss_threshold: f64, bits: u64) -> f64 {
    let per_bit = -f64::exp_m1(f64::ln_1p(-loss_threshold) / bits as f64);
    channel::snr_for_ber(per_bit)
}

/// Receiver side of the handshake: size the minimum workable power from the
/// measured SNR of an RTS probe sent at `rts_power_w`, then quantize it to
/// the grant levels.
pub fn pcmac_handshake(
    rts_snr_db: f64,
    rts_power_w: f64,
    loss_threshold: f64,
    packet_bits: u64,
    grant_levels: &[f64],
) -> f64 {
    let target_lin = 10f64.powf(snr_target_db(loss_threshold, packet_bits) / 10.0);
    let measured_lin = 10f64.powf(rts_snr_db / 10.0);
    let required = rts_power_w * target_lin / measured_lin;
    round_up_in_grid(required, grant_levels)
}

/// Re-handshake policy: adjust only when the observed packet error rate
/// crosses the threshold.
pub fn pcmac_r_step(state: &PcMacState, observed_loss: f64) -> PcAction {
    if observed_loss > state.loss_threshold {
        PcAction::StartHandshake
    } else {
        PcAction::Keep
    }
}

/// Link estimate assembled by a sender's local twin from its own reception
/// history: known geometry plus measured noise and interference.
#[derive(Debug, Clone, Copy)]
pub struct LinkEstimate {
    pub distance_m: f64,
    /// Ambient noise at the receiver, linear received watts.
    pub noise_w: f64,
    /// Interference at the receiver, linear received watts.
    pub interference_w: f64,
}

/// Predicted packet loss on a link at a candidate power.
pub fn predicted_loss(power_w: f64, link: &LinkEstimate, bits: u64, ch: &ChannelParams) -> f64 {
    let signal = channel::received_acoustic_w(power_w, link.distance_m, ch);
    let snr_db = 10.0 * (signal / (link.noise_w + link.interference_w)).log10();
    channel::packet_loss_prob(channel::ber(snr_db), bits)
}

/// Twin-assisted power selection: walk the device power grid from the bottom
/// and pick the first power whose predicted packet loss meets the threshold.
/// Returns the grid maximum if nothing qualifies.
pub fn pcmac_dt_step(state: &PcMacState, link: &LinkEstimate, ch: &ChannelParams) -> PcAction {
    let current_ok =
        predicted_loss(state.data_power_w, link, state.packet_bits, ch) <= state.loss_threshold;
    let mut choice = *FINE_POWER_GRID_W.last().expect("grid non-empty");
    for &p in FINE_POWER_GRID_W.iter() {
        if predicted_loss(p, link, state.packet_bits, ch) <= state.loss_threshold {
            choice = p;
            break;
        }
    }
    if current_ok && choice >= state.data_power_w {
        PcAction::Keep
    } else {
        PcAction::SetPower(choice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ambient_noise_w, received_acoustic_w, ChannelParams};

    fn sched_123() -> SlotSchedule {
        let mut offsets = BTreeMap::new();
        offsets.insert(NodeId(1), 0);
        offsets.insert(NodeId(2), 1);
        offsets.insert(NodeId(3), 2);
        SlotSchedule::new(6.0, 3, offsets)
    }

    #[test]
    fn slot_length_covers_transmission_and_propagation() {
        assert_eq!(compute_slot_length(3.133, 2.0), 6.0);
        assert_eq!(compute_slot_length(1.817, 2.0), 4.0);
    }

    #[test]
    fn may_send_follows_offsets() {
        let s = sched_123();
        assert!(pmac_may_send(&s, NodeId(1), 0.0));
        assert!(!pmac_may_send(&s, NodeId(2), 0.0));
        assert!(pmac_may_send(&s, NodeId(2), 6.0));
        assert!(pmac_may_send(&s, NodeId(3), 12.0));
        assert!(pmac_may_send(&s, NodeId(1), 18.0));
        // Unknown nodes never own a slot.
        assert!(!pmac_may_send(&s, NodeId(9), 0.0));
    }

    #[test]
    fn distinct_offsets_never_share_a_slot() {
        let s = sched_123();
        for step in 0..6000 {
            let t = step as f64 * 0.5;
            let senders = [NodeId(1), NodeId(2), NodeId(3)]
                .iter()
                .filter(|n| pmac_may_send(&s, **n, t))
                .count();
            assert!(senders <= 1, "multiple owners at t={t}");
        }
    }

    #[test]
    fn retime_re_anchors_slot_zero() {
        let mut s = sched_123();
        s.retime(4.0, 1500.0);
        assert_eq!(s.slot_index(1500.0), 0);
        assert_eq!(s.slot_index(1504.0), 1);
        assert!(pmac_may_send(&s, NodeId(1), 1500.0));
        assert!(pmac_may_send(&s, NodeId(2), 1504.0));
    }

    #[test]
    fn next_owned_start_lands_on_owned_slots() {
        let s = sched_123();
        assert_eq!(s.next_owned_start(NodeId(2), 0.0), Some(6.0));
        assert_eq!(s.next_owned_start(NodeId(2), 6.0), Some(6.0));
        assert_eq!(s.next_owned_start(NodeId(2), 6.1), Some(24.0));
        assert_eq!(s.next_owned_start(NodeId(9), 0.0), None);
    }

    #[test]
    fn chain_routes_forward_through_middle() {
        let mut r = RoutingTable::new();
        r.add_chain(&[NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(next_hop(&r, NodeId(1), NodeId(3)), Some(NodeId(2)));
        assert_eq!(next_hop(&r, NodeId(2), NodeId(3)), Some(NodeId(3)));
        assert_eq!(next_hop(&r, NodeId(3), NodeId(3)), Some(NodeId(3)));
        assert_eq!(next_hop(&r, NodeId(3), NodeId(1)), None);
        assert_eq!(r.path(NodeId(1), NodeId(3)), Some(vec![NodeId(1), NodeId(2), NodeId(3)]));
    }

    #[test]
    fn round_up_in_grid_picks_first_fit_and_clamps() {
        assert_eq!(round_up_in_grid(4.5, &FINE_POWER_GRID_W), 6.0);
        assert_eq!(round_up_in_grid(4.5, &GRANT_LEVELS_W), 6.0);
        assert_eq!(round_up_in_grid(7.4, &FINE_POWER_GRID_W), 8.0);
        assert_eq!(round_up_in_grid(7.4, &GRANT_LEVELS_W), 12.0);
        assert_eq!(round_up_in_grid(99.0, &GRANT_LEVELS_W), 30.0);
    }

    #[test]
    fn r_step_keeps_below_threshold() {
        let st = PcMacState::new(PcVariant::Relink, 1600);
        assert_eq!(pcmac_r_step(&st, 0.002), PcAction::Keep);
        assert_eq!(pcmac_r_step(&st, 0.051), PcAction::StartHandshake);
    }

    /// Lab link used by the power-control experiments: 3 km, 200 B packets,
    /// interferer equidistant from both ends. The ambient level is calibrated
    /// so the baseline handshake lands on 6 W.
    fn lab_link(ch: &ChannelParams, interference_elec_w: f64) -> LinkEstimate {
        let interferer_dist = ((1500.0f64).powi(2) + (3629.3f64).powi(2)).sqrt();
        LinkEstimate {
            distance_m: 3000.0,
            noise_w: ambient_noise_w(ch),
            interference_w: received_acoustic_w(interference_elec_w, interferer_dist, ch),
        }
    }

    fn lab_channel() -> ChannelParams {
        ChannelParams { ambient_noise_db: 94.826, ..ChannelParams::default_acoustic() }
    }

    #[test]
    fn handshake_baseline_grants_six_watts() {
        let ch = lab_channel();
        let link = lab_link(&ch, 0.0);
        // Receiver measures the RTS at max power against ambient noise only.
        let sig = received_acoustic_w(MAX_POWER_W, link.distance_m, &ch);
        let rts_snr = 10.0 * (sig / link.noise_w).log10();
        let grant = pcmac_handshake(rts_snr, MAX_POWER_W, 0.05, 1600, &GRANT_LEVELS_W);
        assert_eq!(grant, 6.0);
        // The fine grid agrees at baseline.
        let grant_fine = pcmac_handshake(rts_snr, MAX_POWER_W, 0.05, 1600, &FINE_POWER_GRID_W);
        assert_eq!(grant_fine, 6.0);
    }

    /// Power selections across the interference sweep. The re-handshake
    /// variant is quantized to grant levels; the twin-assisted variant walks
    /// the device grid, which is what buys it the lower allocations.
    #[test]
    fn interference_sweep_matches_expected_power_columns() {
        let ch = lab_channel();
        let cases = [
            (0.5, None, None),
            (1.0, None, None),
            (2.0, Some(12.0), Some(8.0)),
            (4.0, Some(12.0), Some(12.0)),
            (6.0, Some(18.0), Some(16.0)),
            (8.0, Some(18.0), Some(18.0)),
        ];
        for (i_power, expect_r, expect_dt) in cases {
            let link = lab_link(&ch, i_power);
            let loss_at_6 = predicted_loss(6.0, &link, 1600, &ch);
            let mut st = PcMacState::new(PcVariant::DtAssisted, 1600);
            st.data_power_w = 6.0;
            match (expect_r, expect_dt) {
                (None, None) => {
                    assert!(loss_at_6 <= 0.05, "I={i_power}: expected no adjustment");
                    assert_eq!(pcmac_dt_step(&st, &link, &ch), PcAction::Keep);
                }
                (Some(r_power), Some(dt_power)) => {
                    assert!(loss_at_6 > 0.05, "I={i_power}: expected degradation");
                    // Re-handshake measures the RTS under interference.
                    let sig = received_acoustic_w(MAX_POWER_W, link.distance_m, &ch);
                    let snr = 10.0 * (sig / (link.noise_w + link.interference_w)).log10();
                    let grant = pcmac_handshake(snr, MAX_POWER_W, 0.05, 1600, &GRANT_LEVELS_W);
                    assert_eq!(grant, r_power, "re-handshake power at I={i_power}");
                    match pcmac_dt_step(&st, &link, &ch) {
                        PcAction::SetPower(p) => {
                            assert_eq!(p, dt_power, "twin power at I={i_power}")
                        }
                        other => panic!("expected SetPower at I={i_power}, got {other:?}"),
                    }
                    assert!(dt_power <= r_power);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn selected_powers_restore_loss_below_threshold() {
        let ch = lab_channel();
        for (i_power, power) in [(2.0, 8.0), (4.0, 12.0), (6.0, 16.0), (8.0, 18.0)] {
            let link = lab_link(&ch, i_power);
            let loss = predicted_loss(power, &link, 1600, &ch);
            assert!(loss <= 0.05, "loss {loss} at I={i_power}, P={power}");
        }
    }
}
