//! Run artifacts: the metric row stream (`time,node,metric,value`), the
//! packet-level logs used by experiments and twin replicas, the transmit
//! energy ledger, and protocol decision records.

use crate::sim::SimTime;
use crate::types::{DeliveryOutcome, NodeId, PacketKind};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub time: SimTime,
    pub node: NodeId,
    pub metric: String,
    pub value: f64,
}

/// One transmission start.
#[derive(Debug, Clone, Copy)]
pub struct SendRec {
    pub t: SimTime,
    pub node: NodeId,
    pub dst: NodeId,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub power_w: f64,
    pub duration_s: f64,
    pub packet_id: u64,
    /// True when the packet was generated here rather than forwarded.
    pub own: bool,
}

/// One reception resolution at one receiver.
#[derive(Debug, Clone, Copy)]
pub struct DeliveryRec {
    pub t: SimTime,
    pub rx: NodeId,
    pub tx: NodeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: PacketKind,
    pub size_bytes: u32,
    pub outcome: DeliveryOutcome,
    pub snr_db: f64,
    pub packet_id: u64,
}

/// A protocol or twin decision worth auditing, as a labeled scalar.
#[derive(Debug, Clone)]
pub struct DecisionRec {
    pub t: SimTime,
    pub node: NodeId,
    pub label: String,
    pub value: f64,
}

/// Cumulative per-node counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Counters {
    pub generated: u64,
    pub sent_own: u64,
    pub sent_fwd: u64,
    /// Deliveries addressed to this node (it was the packet destination).
    pub received_ok: u64,
    pub received_corrupted: u64,
    pub received_collided: u64,
    /// Payload bits of deliveries addressed to this node.
    pub bits_to_me: u64,
    pub dropped: u64,
}

impl Counters {
    pub fn sent_total(&self) -> u64 {
        self.sent_own + self.sent_fwd
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub rows: Vec<Row>,
    pub sends: Vec<SendRec>,
    pub deliveries: Vec<DeliveryRec>,
    pub decisions: Vec<DecisionRec>,
    /// Cumulative transmit energy per node, joules.
    pub energy_j: BTreeMap<NodeId, f64>,
    pub final_counters: BTreeMap<NodeId, Counters>,
    pub horizon_s: f64,
}

impl Trace {
    pub fn row(&mut self, time: SimTime, node: NodeId, metric: &str, value: f64) {
        self.rows.push(Row { time, node, metric: metric.to_string(), value });
    }

    pub fn decide(&mut self, t: SimTime, node: NodeId, label: &str, value: f64) {
        self.decisions.push(DecisionRec { t, node, label: label.to_string(), value });
    }

    /// Render the metric rows as `time,node,metric,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,node,metric,value\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.3},{},{},{}\n",
                r.time,
                r.node,
                r.metric,
                fmt_value(r.value)
            ));
        }
        out
    }

    /// Total transmit energy across all nodes.
    pub fn total_energy_j(&self) -> f64 {
        self.energy_j.values().sum()
    }

    /// Energy attributable to the given packet kinds, computed from the send
    /// log (power times on-wire time per transmission).
    pub fn energy_for_kinds(&self, kinds: &[PacketKind]) -> f64 {
        self.sends
            .iter()
            .filter(|s| kinds.contains(&s.kind))
            .map(|s| s.power_w * s.duration_s)
            .sum()
    }

    /// Deliveries addressed to `node` (as final packet destination) whose
    /// resolution time falls in `[from, to)`.
    pub fn delivered_to_in(&self, node: NodeId, from: SimTime, to: SimTime) -> u64 {
        self.deliveries
            .iter()
            .filter(|d| {
                d.dst == node
                    && d.rx == node
                    && d.outcome == DeliveryOutcome::Delivered
                    && d.t >= from
                    && d.t < to
            })
            .count() as u64
    }

    /// Payload bits successfully delivered to `node` in `[from, to)`. Counts
    /// the same packet kinds as the per-node throughput counters.
    pub fn delivered_bits_to_in(&self, node: NodeId, from: SimTime, to: SimTime) -> u64 {
        self.deliveries
            .iter()
            .filter(|d| {
                d.dst == node
                    && d.rx == node
                    && matches!(d.kind, PacketKind::Data | PacketKind::Status)
                    && d.outcome == DeliveryOutcome::Delivered
                    && d.t >= from
                    && d.t < to
            })
            .map(|d| d.size_bytes as u64 * 8)
            .sum()
    }

    /// Transmissions started by `node` in `[from, to)`.
    pub fn sends_by_in(&self, node: NodeId, from: SimTime, to: SimTime) -> u64 {
        self.sends
            .iter()
            .filter(|s| s.node == node && s.t >= from && s.t < to)
            .count() as u64
    }

    pub fn collision_count(&self) -> usize {
        self.deliveries
            .iter()
            .filter(|d| d.outcome == DeliveryOutcome::Collided)
            .count()
    }

    /// Last value of a metric row for a node, if any.
    pub fn last_value(&self, node: NodeId, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.node == node && r.metric == metric)
            .map(|r| r.value)
    }

    /// All `(time, value)` pairs of one metric for one node, in emit order.
    pub fn series(&self, node: NodeId, metric: &str) -> Vec<(SimTime, f64)> {
        self.rows
            .iter()
            .filter(|r| r.node == node && r.metric == metric)
            .map(|r| (r.time, r.value))
            .collect()
    }
}

/// Compact float formatting: integral values print without a fraction, the
/// rest with six significant decimals. Deterministic across runs.
fn fmt_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1.0e15 {
        format!("{}", v as i64)
    } else {
        format!("{:.6}", v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_stable_formatting() {
        let mut t = Trace::default();
        t.row(12.5, NodeId(3), "queue_len", 7.0);
        t.row(100.0, NodeId(1), "throughput_bps", 177.77777);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,node,metric,value");
        assert_eq!(lines[1], "12.500,3,queue_len,7");
        assert_eq!(lines[2], "100.000,1,throughput_bps,177.777770");
    }

    #[test]
    fn energy_for_kinds_sums_the_send_ledger() {
        let mut t = Trace::default();
        t.sends.push(SendRec {
            t: 0.0,
            node: NodeId(1),
            dst: NodeId(2),
            kind: PacketKind::Rts,
            size_bytes: 30,
            power_w: 30.0,
            duration_s: 0.71,
            packet_id: 0,
            own: true,
        });
        t.sends.push(SendRec {
            t: 4.0,
            node: NodeId(1),
            dst: NodeId(2),
            kind: PacketKind::Data,
            size_bytes: 200,
            power_w: 6.0,
            duration_s: 1.817,
            packet_id: 1,
            own: true,
        });
        let rts = t.energy_for_kinds(&[PacketKind::Rts]);
        assert!((rts - 21.3).abs() < 1e-9);
        let all = t.energy_for_kinds(&[PacketKind::Rts, PacketKind::Data]);
        assert!((all - (21.3 + 10.902)).abs() < 1e-9);
    }
}
