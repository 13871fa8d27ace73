//! Scenario parameter types shared by the analytic model, the optimizer and
//! the simulator. All times are in milliseconds, energies in joules.

use crate::error::{Error, Result};

/// Global parameters of a one-hop scenario: `n_nodes` source nodes each
/// generate one packet every `period` ms and emit copies of `packet_time` ms
/// on a shared collision channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    n_nodes: u32,
    period: f64,
    packet_time: f64,
    carrier_sense: f64,
    channel_error: f64,
    energy_per_copy: f64,
}

/// Default transmission energy per copy, in joules. Placeholder scale for a
/// short sensor frame; override with [`SystemParams::with_energy_per_copy`].
pub const DEFAULT_ENERGY_PER_COPY: f64 = 1e-6;

fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    require_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be > 0, got {value}")))
    }
}

impl SystemParams {
    /// Builds a parameter set with carrier sense 0, channel error 0 and the
    /// default per-copy energy. Rejects `packet_time >= period` (not even a
    /// single copy would fit) and non-positive inputs.
    pub fn new(n_nodes: u32, period_ms: f64, packet_time_ms: f64) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::invalid("n_nodes", "must be at least 1"));
        }
        require_positive("period", period_ms)?;
        require_positive("packet_time", packet_time_ms)?;
        if packet_time_ms >= period_ms {
            return Err(Error::PacketDoesNotFit {
                packet_time: packet_time_ms,
                period: period_ms,
            });
        }
        Ok(SystemParams {
            n_nodes,
            period: period_ms,
            packet_time: packet_time_ms,
            carrier_sense: 0.0,
            channel_error: 0.0,
            energy_per_copy: DEFAULT_ENERGY_PER_COPY,
        })
    }

    /// Carrier-sense period added to each copy's channel occupancy.
    pub fn with_carrier_sense(mut self, carrier_sense_ms: f64) -> Result<Self> {
        require_finite("carrier_sense", carrier_sense_ms)?;
        if carrier_sense_ms < 0.0 {
            return Err(Error::invalid("carrier_sense", "must be >= 0"));
        }
        self.carrier_sense = carrier_sense_ms;
        Ok(self)
    }

    /// Per-copy independent loss probability in [0, 1].
    pub fn with_channel_error(mut self, channel_error: f64) -> Result<Self> {
        require_finite("channel_error", channel_error)?;
        if !(0.0..=1.0).contains(&channel_error) {
            return Err(Error::invalid("channel_error", "must lie in [0, 1]"));
        }
        self.channel_error = channel_error;
        Ok(self)
    }

    /// Transmission energy of one copy, in joules.
    pub fn with_energy_per_copy(mut self, joules: f64) -> Result<Self> {
        require_positive("energy_per_copy", joules)?;
        self.energy_per_copy = joules;
        Ok(self)
    }

    pub fn n_nodes(&self) -> u32 {
        self.n_nodes
    }

    /// Data generation period T, ms.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Packet transmission time T_p, ms.
    pub fn packet_time(&self) -> f64 {
        self.packet_time
    }

    /// Carrier sense period, ms.
    pub fn carrier_sense(&self) -> f64 {
        self.carrier_sense
    }

    pub fn channel_error(&self) -> f64 {
        self.channel_error
    }

    pub fn energy_per_copy(&self) -> f64 {
        self.energy_per_copy
    }

    /// Channel occupancy of a single copy: carrier sense plus packet time.
    pub fn occupancy(&self) -> f64 {
        self.carrier_sense + self.packet_time
    }

    /// Largest copy count that fits in the period, `floor(T / T_p)`.
    pub fn max_copies(&self) -> u32 {
        (self.period / self.packet_time).floor() as u32
    }
}

/// One QoS group: `m` nodes sharing a retransmission period `t` and a
/// minimum delivery probability `q_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct QoSGroupSpec {
    m: u32,
    q_min: f64,
    t: f64,
}

impl QoSGroupSpec {
    pub fn new(m: u32, q_min: f64, t_ms: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        require_finite("q_min", q_min)?;
        if !(q_min > 0.0 && q_min < 1.0) {
            return Err(Error::invalid("q_min", "must lie strictly in (0, 1)"));
        }
        require_positive("t", t_ms)?;
        Ok(QoSGroupSpec { m, q_min, t: t_ms })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    /// Retransmission period t_k, ms.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Retransmission bound of Eq.-style packing: `floor(t / packet_time)`.
    pub fn max_retrans(&self, packet_time: f64) -> u32 {
        (self.t / packet_time).floor() as u32
    }
}

/// Chosen retransmission counts with their predicted delivery probabilities.
///
/// `copies` holds the total on-air emissions per packet per group: the search
/// variable itself for the one-hop model, retransmissions plus the original
/// for the group model. `aggregate_traffic` is the copy arrival rate the plan
/// induces (beta for one-hop, beta_tg for groups).
#[derive(Debug, Clone, PartialEq)]
pub struct RetransmissionPlan {
    pub copies: Vec<u32>,
    pub predicted_delivery: Vec<f64>,
    pub feasible: bool,
    pub aggregate_traffic: f64,
}

/// Total emissions per packet for a group node that retransmits `retrans`
/// times: the retransmissions plus the original copy.
pub fn total_copies(retrans: u32) -> u32 {
    retrans + 1
}

/// Inverse of [`total_copies`]; rejects a total of zero.
pub fn retrans_from_total(copies: u32) -> Result<u32> {
    if copies == 0 {
        return Err(Error::ZeroCopies);
    }
    Ok(copies - 1)
}
