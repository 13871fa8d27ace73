//! Continuous-time Monte Carlo simulation of transmit-only nodes emitting
//! packet copies at random instants into a shared collision channel.
//!
//! Every (node, period) pair draws from its own ChaCha substream, so the
//! result is a pure function of `(seed, inputs)` no matter how the periods
//! are scheduled across threads; counts are accumulated as integers and all
//! derived statistics are computed once at the end, which makes parallel and
//! sequential runs bit-identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{QoSGroupSpec, RetransmissionPlan, SystemParams};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Largest number of repeats of any group period inside one common horizon
/// when the two groups disagree on their retransmission period.
pub const MAX_HORIZON_REPEATS: u64 = 4096;

/// One copy on the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionEvent {
    pub node_id: u32,
    pub group_id: u32,
    /// Start time within the simulated horizon, ms.
    pub start: f64,
    /// Channel occupancy: carrier sense plus packet time, ms.
    pub duration: f64,
}

/// Per-group tallies of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub packets_offered: u64,
    pub packets_delivered: u64,
    /// `packets_delivered / packets_offered`.
    pub delivery_estimate: f64,
    /// 95% normal-approximation half width of the delivery estimate.
    pub ci_half_width: f64,
    pub copies_sent: u64,
    /// `copies_sent * energy_per_copy`, joules.
    pub energy_spent: f64,
    /// Joules per delivered packet; infinite when nothing got through.
    pub energy_per_delivered: f64,
}

/// Monte Carlo estimate of delivery probability and energy cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Independent periods (horizons) simulated.
    pub periods_simulated: u64,
    pub seed: u64,
    pub groups: Vec<GroupStats>,
}

impl SimResult {
    /// Stats of the single group of a one-hop run.
    pub fn one_hop(&self) -> &GroupStats {
        &self.groups[0]
    }
}

/// Energy accounting row derived from a simulation result and the plan that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub group: usize,
    pub copies_sent: u64,
    pub total_joules: f64,
    /// Energy spent per offered packet: plan copies times per-copy energy.
    pub joules_per_offered: f64,
    pub joules_per_delivered: f64,
}

/// Deterministic substream for one (node, period) cell: the whole tuple goes
/// into the ChaCha key, so distinct cells get independent streams and the
/// iteration order cannot matter.
fn substream(seed: u64, node: u64, period: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&node.to_le_bytes());
    key[16..24].copy_from_slice(&period.to_le_bytes());
    key[24..32].copy_from_slice(b"gorma-mc");
    ChaCha8Rng::from_seed(key)
}

/// Marks which events escape collision. Events are sorted by start time in
/// place; the returned flags align with the sorted order. Assumes the
/// uniform-occupancy model (all durations equal), where colliding with a
/// non-neighbour implies colliding with a neighbour.
pub fn collision_free_flags(events: &mut [TransmissionEvent]) -> Vec<bool> {
    events.sort_unstable_by(|a, b| a.start.total_cmp(&b.start));
    let n = events.len();
    let mut clean = vec![true; n];
    for i in 1..n {
        if events[i].start - events[i - 1].start < events[i - 1].duration {
            clean[i] = false;
            clean[i - 1] = false;
        }
    }
    clean
}

#[derive(Clone, Copy)]
struct Draw {
    start: f64,
    node: u32,
    group: u32,
    repeat: u32,
    survives_error: bool,
}

#[derive(Clone)]
struct Tally {
    offered: Vec<u64>,
    delivered: Vec<u64>,
}

impl Tally {
    fn zero(groups: usize) -> Self {
        Tally {
            offered: vec![0; groups],
            delivered: vec![0; groups],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.offered.iter_mut().zip(other.offered) {
            *a += b;
        }
        for (a, b) in self.delivered.iter_mut().zip(other.delivered) {
            *a += b;
        }
        self
    }
}

/// Node schedule shared by both scenario kinds: `emissions` copies per
/// sub-period, `repeats` sub-periods of length `period` per horizon.
#[derive(Clone)]
struct NodeSchedule {
    group: u32,
    emissions: u32,
    repeats: u64,
    period: f64,
    span: f64,
}

fn run_monte_carlo(
    params: &SystemParams,
    schedules: &[NodeSchedule],
    n_groups: usize,
    periods: u64,
    seed: u64,
) -> Tally {
    let occupancy = params.occupancy();
    let channel_error = params.channel_error();
    let total_draws: usize = schedules
        .iter()
        .map(|s| s.emissions as usize * s.repeats as usize)
        .sum();
    let simulate_period = |period_index: u64| -> Tally {
        let mut tally = Tally::zero(n_groups);
        let mut draws: Vec<Draw> = Vec::with_capacity(total_draws);
        for (node, sched) in schedules.iter().enumerate() {
            let mut rng = substream(seed, node as u64, period_index);
            for repeat in 0..sched.repeats {
                let offset = repeat as f64 * sched.period;
                let first = draws.len();
                for _ in 0..sched.emissions {
                    draws.push(Draw {
                        start: offset + rng.gen::<f64>() * sched.span,
                        node: node as u32,
                        group: sched.group,
                        repeat: repeat as u32,
                        survives_error: false,
                    });
                }
                for draw in &mut draws[first..] {
                    draw.survives_error = rng.gen::<f64>() >= channel_error;
                }
            }
        }
        draws.sort_unstable_by(|a, b| a.start.total_cmp(&b.start));
        // A packet is delivered iff at least one of its copies is both
        // collision-free and error-free. A node's sub-periods are disjoint
        // and so appear in order within the sorted draws, so the latest
        // delivered sub-period per node is enough to count each packet once.
        let mut delivered_upto: Vec<Option<u32>> = vec![None; schedules.len()];
        for i in 0..draws.len() {
            let d = &draws[i];
            if !d.survives_error {
                continue;
            }
            let clean_left = i == 0 || d.start - draws[i - 1].start >= occupancy;
            let clean_right =
                i + 1 == draws.len() || draws[i + 1].start - d.start >= occupancy;
            if clean_left && clean_right {
                let slot = &mut delivered_upto[d.node as usize];
                if slot.map_or(true, |r| r != d.repeat) {
                    *slot = Some(d.repeat);
                    tally.delivered[d.group as usize] += 1;
                }
            }
        }
        for sched in schedules {
            tally.offered[sched.group as usize] += sched.repeats;
        }
        tally
    };

    #[cfg(feature = "parallel")]
    let tally = (0..periods)
        .into_par_iter()
        .map(simulate_period)
        .reduce(|| Tally::zero(n_groups), Tally::merge);
    #[cfg(not(feature = "parallel"))]
    let tally = (0..periods)
        .map(simulate_period)
        .fold(Tally::zero(n_groups), Tally::merge);
    tally
}

fn finish(
    params: &SystemParams,
    tally: Tally,
    copies_per_offered: &[u32],
    periods: u64,
    seed: u64,
) -> SimResult {
    let groups = tally
        .offered
        .iter()
        .zip(&tally.delivered)
        .zip(copies_per_offered)
        .map(|((&offered, &delivered), &copies)| {
            let estimate = delivered as f64 / offered as f64;
            let ci_half_width =
                1.96 * (estimate * (1.0 - estimate) / offered as f64).sqrt();
            let copies_sent = offered * u64::from(copies);
            let energy_spent = copies_sent as f64 * params.energy_per_copy();
            let energy_per_delivered = if delivered == 0 {
                f64::INFINITY
            } else {
                energy_spent / delivered as f64
            };
            GroupStats {
                packets_offered: offered,
                packets_delivered: delivered,
                delivery_estimate: estimate,
                ci_half_width,
                copies_sent,
                energy_spent,
                energy_per_delivered,
            }
        })
        .collect();
    SimResult {
        periods_simulated: periods,
        seed,
        groups,
    }
}

/// Simulates the one-hop scenario: every node of `params` emits `copies`
/// copies per period at i.i.d. uniform instants in `[0, T - occupancy]`; a
/// copy is destroyed by any overlap (including the same node's siblings) or
/// by an independent channel-error coin, and a packet counts as delivered
/// iff at least one copy survives. Periods do not interfere.
pub fn simulate_one_hop(
    params: &SystemParams,
    copies: u32,
    periods: u64,
    seed: u64,
) -> Result<SimResult> {
    if copies == 0 {
        return Err(Error::ZeroCopies);
    }
    if periods == 0 {
        return Err(Error::ZeroPeriods);
    }
    if f64::from(copies) * params.packet_time() > params.period() {
        return Err(Error::CopiesExceedPeriod {
            copies,
            packet_time: params.packet_time(),
            period: params.period(),
        });
    }
    let span = params.period() - params.occupancy();
    if span < 0.0 {
        return Err(Error::PacketDoesNotFit {
            packet_time: params.occupancy(),
            period: params.period(),
        });
    }
    let schedules: Vec<NodeSchedule> = (0..params.n_nodes())
        .map(|_| NodeSchedule {
            group: 0,
            emissions: copies,
            repeats: 1,
            period: params.period(),
            span,
        })
        .collect();
    let tally = run_monte_carlo(params, &schedules, 1, periods, seed);
    Ok(finish(params, tally, &[copies], periods, seed))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Repeats of each group period within the least common horizon. Periods are
/// compared at nanosecond granularity; equal periods short-circuit to one
/// repeat each.
fn horizon_repeats(periods_ms: &[f64]) -> Result<Vec<u64>> {
    if periods_ms.windows(2).all(|w| w[0] == w[1]) {
        return Ok(vec![1; periods_ms.len()]);
    }
    let ns: Vec<u64> = periods_ms
        .iter()
        .map(|&t| {
            let n = (t * 1e6).round();
            if n < 1.0 || (n - t * 1e6).abs() > 1e-6 * n.max(1.0) {
                return Err(Error::invalid(
                    "t",
                    format!("period {t} ms is not representable at ns granularity"),
                ));
            }
            Ok(n as u64)
        })
        .collect::<Result<_>>()?;
    let lcm = ns
        .iter()
        .try_fold(1u64, |acc, &n| {
            acc.checked_mul(n / gcd(acc, n))
                .ok_or(Error::HorizonOverflow {
                    repeats: u64::MAX,
                    cap: MAX_HORIZON_REPEATS,
                })
        })?;
    let repeats: Vec<u64> = ns.iter().map(|&n| lcm / n).collect();
    if let Some(&worst) = repeats.iter().max() {
        if worst > MAX_HORIZON_REPEATS {
            return Err(Error::HorizonOverflow {
                repeats: worst,
                cap: MAX_HORIZON_REPEATS,
            });
        }
    }
    Ok(repeats)
}

/// Simulates QoS groups sharing the channel: each node of group `k` emits
/// `retrans + 1` copies in every one of its periods `t_k`, each copy
/// occupying carrier sense plus packet time. With unequal periods one
/// simulated horizon covers their least common multiple, so offered counts
/// differ per group.
pub fn simulate_two_groups(
    params: &SystemParams,
    groups: &[(QoSGroupSpec, u32)],
    periods: u64,
    seed: u64,
) -> Result<SimResult> {
    if groups.is_empty() {
        return Err(Error::GroupCount {
            expected: 2,
            got: 0,
        });
    }
    if periods == 0 {
        return Err(Error::ZeroPeriods);
    }
    let occupancy = params.occupancy();
    for (index, (group, retrans)) in groups.iter().enumerate() {
        if *retrans == 0 {
            return Err(Error::ZeroCopies);
        }
        let bound = group.t() / params.packet_time();
        if f64::from(*retrans) > bound {
            return Err(Error::RetransBoundExceeded {
                group: index,
                retrans: *retrans,
                bound,
            });
        }
        if occupancy > group.t() {
            return Err(Error::PacketDoesNotFit {
                packet_time: occupancy,
                period: group.t(),
            });
        }
    }
    let repeats = horizon_repeats(&groups.iter().map(|(g, _)| g.t()).collect::<Vec<_>>())?;
    let mut schedules = Vec::new();
    for (group_id, ((group, retrans), reps)) in groups.iter().zip(&repeats).enumerate() {
        for _ in 0..group.m() {
            schedules.push(NodeSchedule {
                group: group_id as u32,
                emissions: retrans + 1,
                repeats: *reps,
                period: group.t(),
                span: group.t() - occupancy,
            });
        }
    }
    let tally = run_monte_carlo(params, &schedules, groups.len(), periods, seed);
    let copies: Vec<u32> = groups.iter().map(|(_, retrans)| retrans + 1).collect();
    Ok(finish(params, tally, &copies, periods, seed))
}

/// Energy accounting per group: total joules, joules per offered packet
/// (plan copies times per-copy energy) and joules per delivered packet. A
/// group that delivered nothing reports an infinite per-delivered cost.
pub fn energy_report(
    params: &SystemParams,
    result: &SimResult,
    plan: &RetransmissionPlan,
) -> Result<Vec<EnergyRow>> {
    if plan.copies.len() != result.groups.len() {
        return Err(Error::PlanDimensionMismatch {
            plan: plan.copies.len(),
            groups: result.groups.len(),
        });
    }
    Ok(result
        .groups
        .iter()
        .zip(&plan.copies)
        .enumerate()
        .map(|(group, (stats, &copies))| EnergyRow {
            group,
            copies_sent: stats.copies_sent,
            total_joules: stats.energy_spent,
            joules_per_offered: f64::from(copies) * params.energy_per_copy(),
            joules_per_delivered: stats.energy_per_delivered,
        })
        .collect())
}
