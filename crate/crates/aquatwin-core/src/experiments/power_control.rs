//! Comparison of the three power-adjustment strategies on one interfered
//! link: sweep the interference power and measure, per strategy, the settled
//! transmit power, the residual link quality, and the time and energy spent
//! adjusting.

use serde::Serialize;

use crate::channel::{self, tx_duration};
use crate::error::SimError;
use crate::protocols::PcVariant;
use crate::scenario::{
    power_control_spec, PC_INTERFERENCE_ONSET_S, PC_REQUESTER, PC_RESPONDER,
};
use crate::types::PacketKind;
use crate::world::{run, Trace, WorldSpec};

/// The settled tail of a run: forward frames in the final stretch of the
/// horizon, long after the single mid-run adjustment has landed.
const SETTLED_TAIL_S: f64 = 100.0;

/// Measured outcome of one run of the interfered-link lab.
#[derive(Debug, Clone, Serialize)]
pub struct PcOutcome {
    pub variant: PcVariant,
    pub i_power_w: f64,
    /// Data transmit power at the end of the run.
    pub end_power_w: f64,
    /// Mean per-bit error rate of forward data frames in the settled tail,
    /// computed from each frame's measured SNR.
    pub end_ber: f64,
    /// Mean corruption probability of a whole forward frame in the settled
    /// tail, on the same basis as `end_ber`.
    pub end_loss: f64,
    /// Detection-to-application delay of the post-onset adjustment; absent
    /// when the strategy never adjusted.
    pub adjust_time_s: Option<f64>,
    /// Energy spent on the adjustment itself: control frames exchanged
    /// between detection and application, plus one data transmission at the
    /// newly selected power.
    pub adjust_energy_j: Option<f64>,
}

pub fn run_one(seed: u64, variant: PcVariant, i_power_w: f64) -> Result<PcOutcome, SimError> {
    let spec = power_control_spec(seed, variant, i_power_w);
    let trace = run(&spec)?;
    Ok(reduce(variant, i_power_w, &spec, &trace))
}

/// All three strategies across an interference sweep, one run each.
pub fn run_sweep(seed: u64, i_powers_w: &[f64]) -> Result<Vec<PcOutcome>, SimError> {
    let mut out = Vec::new();
    for variant in [PcVariant::Fixed, PcVariant::Relink, PcVariant::DtAssisted] {
        for &i in i_powers_w {
            out.push(run_one(seed, variant, i)?);
        }
    }
    Ok(out)
}

fn reduce(variant: PcVariant, i_power_w: f64, spec: &WorldSpec, trace: &Trace) -> PcOutcome {
    let data_bytes = spec.node(PC_REQUESTER).unwrap().config.packet_size_bytes;
    let data_bits = 8 * data_bytes as u64;

    let end_power_w = trace
        .decisions
        .iter()
        .rev()
        .find(|d| d.node == PC_REQUESTER && d.label == "pc_power_set_w")
        .map(|d| d.value)
        .unwrap_or(spec.node(PC_REQUESTER).unwrap().config.power_w);

    // The adjustment, if any: the engine records the detection-to-application
    // delay at the moment the new power takes effect, so the detection time
    // is recoverable from the record itself.
    let adjust = trace
        .decisions
        .iter()
        .rev()
        .find(|d| {
            d.node == PC_REQUESTER
                && d.label == "pc_adjust_time_s"
                && d.t >= PC_INTERFERENCE_ONSET_S
        })
        .map(|d| (d.t - d.value, d.t, d.value));
    let adjust_time_s = adjust.map(|(_, _, dt)| dt);
    let adjust_energy_j = adjust.map(|(detect_t, set_t, _)| {
        let control: f64 = trace
            .sends
            .iter()
            .filter(|s| {
                matches!(s.kind, PacketKind::Rts | PacketKind::Cts)
                    && s.t >= detect_t
                    && s.t <= set_t
            })
            .map(|s| s.power_w * s.duration_s)
            .sum();
        control + end_power_w * tx_duration(data_bytes, &spec.channel, &spec.tx_overrides)
    });

    // Residual link quality from the settled tail, as the deterministic
    // corruption probability each received frame's SNR implies rather than
    // the sampled delivery outcomes: the mean is exact at any frame count.
    let tail_from = spec.start_s + spec.horizon_s - SETTLED_TAIL_S;
    let mut ber_sum = 0.0;
    let mut loss_sum = 0.0;
    let mut n = 0u64;
    for d in &trace.deliveries {
        if d.tx == PC_REQUESTER
            && d.rx == PC_RESPONDER
            && d.kind == PacketKind::Data
            && d.t >= tail_from
        {
            let ber = channel::ber(d.snr_db);
            ber_sum += ber;
            loss_sum += channel::packet_loss_prob(ber, data_bits);
            n += 1;
        }
    }
    let (end_ber, end_loss) = if n == 0 {
        (1.0, 1.0)
    } else {
        (ber_sum / n as f64, loss_sum / n as f64)
    };

    PcOutcome {
        variant,
        i_power_w,
        end_power_w,
        end_ber,
        end_loss,
        adjust_time_s,
        adjust_energy_j,
    }
}
