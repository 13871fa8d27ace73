//! Retransmission-count search: the one-hop argmax, the two-group
//! minimum-traffic search and the inverse capacity question (largest first
//! group that still admits a feasible plan).

use crate::analytic::{
    delivery_probability_group, delivery_probability_one_hop, prob_no_collision, traffic_rate,
};
use crate::error::{Error, Result};
use crate::params::{QoSGroupSpec, RetransmissionPlan, SystemParams};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Search-bound cap used by [`max_group_size`] when no explicit cap is given.
pub const MAX_GROUP_SIZE_CAP: u32 = 1_000_000;

/// Integer search window for the two-group optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBounds {
    /// Lower bound of the retransmission search, always 1.
    pub y_low: u32,
    /// Intermediate bound; starts at `y_low`.
    pub y_int: u32,
    /// Upper bound after widening and clamping to the packing cap.
    pub y_high: u32,
}

/// Upper-bound widening step: `y_high + floor(m_2 (y_high - y_int) / m_1)`.
/// The non-integer quotient is floored because retransmission counts are
/// integers.
pub fn widen_upper_bound(y_high: u32, y_int: u32, m1: u32, m2: u32) -> u32 {
    debug_assert!(y_int <= y_high && m1 >= 1);
    let widening = u64::from(m2) * u64::from(y_high - y_int) / u64::from(m1);
    y_high.saturating_add(widening.min(u64::from(u32::MAX)) as u32)
}

fn check_two_groups(groups: &[QoSGroupSpec]) -> Result<(&QoSGroupSpec, &QoSGroupSpec)> {
    if groups.len() != 2 {
        return Err(Error::GroupCount {
            expected: 2,
            got: groups.len(),
        });
    }
    let (g1, g2) = (&groups[0], &groups[1]);
    if g1.q_min() < g2.q_min() {
        return Err(Error::QosOrdering {
            q1: g1.q_min(),
            q2: g2.q_min(),
        });
    }
    Ok((g1, g2))
}

/// Retransmission search window for two groups ordered by decreasing QoS
/// target. The raw upper bound is the tighter packing cap
/// `floor(t_k / packet_time)`; the widened bound is clamped back to it since
/// counts beyond the cap cannot be scheduled.
pub fn compute_bounds(params: &SystemParams, groups: &[QoSGroupSpec]) -> Result<SearchBounds> {
    let (g1, g2) = check_two_groups(groups)?;
    let cap = g1
        .max_retrans(params.packet_time())
        .min(g2.max_retrans(params.packet_time()));
    if cap < 1 {
        return Err(Error::EmptySearchRange);
    }
    let y_low = 1;
    let y_int = y_low;
    let widened = widen_upper_bound(cap, y_int, g1.m(), g2.m());
    Ok(SearchBounds {
        y_low,
        y_int,
        y_high: widened.min(cap),
    })
}

/// Exhaustive scan of the one-hop copy count over `1..=floor(T / T_p)`,
/// returning the plan that maximizes delivery probability. Ties go to the
/// smallest count, which also carries the least traffic.
pub fn optimize_one_hop(params: &SystemParams) -> Result<RetransmissionPlan> {
    let cap = params.max_copies();
    if cap < 1 {
        return Err(Error::EmptySearchRange);
    }
    let mut best = (1u32, delivery_probability_one_hop(params, 1)?);
    for copies in 2..=cap {
        let q = delivery_probability_one_hop(params, copies)?;
        if q > best.1 {
            best = (copies, q);
        }
    }
    Ok(RetransmissionPlan {
        copies: vec![best.0],
        predicted_delivery: vec![best.1],
        feasible: true,
        aggregate_traffic: traffic_rate(params, best.0),
    })
}

/// Loss mass seen by every copy under the pair `(y1, y2)`: collision against
/// the aggregate group traffic plus the independent channel error. Kept as a
/// single expression so the optimizer and the constraint check agree bit for
/// bit.
fn pair_loss_mass(params: &SystemParams, g1: &QoSGroupSpec, g2: &QoSGroupSpec, y1: u32, y2: u32) -> (f64, f64) {
    let rate = f64::from(g1.m()) * f64::from(y1) / g1.t()
        + f64::from(g2.m()) * f64::from(y2) / g2.t();
    let loss =
        1.0 - (1.0 - params.channel_error()) * prob_no_collision(rate, params.occupancy());
    (rate, loss)
}

fn qos_threshold(q_min: f64, retrans: u32) -> f64 {
    (1.0 - q_min).powf(1.0 / f64::from(retrans + 1))
}

/// Minimum feasible `(rate, y2)` for a fixed `y1`, if any.
///
/// For fixed `y1` the loss mass only grows with `y2`, so the first group's
/// constraint fails permanently once it fails, and the first `y2` that
/// clears the second group's threshold is the traffic minimum for this `y1`.
fn best_y2_for(
    params: &SystemParams,
    g1: &QoSGroupSpec,
    g2: &QoSGroupSpec,
    y1: u32,
    thresholds2: &[f64],
    bounds: &SearchBounds,
) -> Option<(f64, u32)> {
    let threshold1 = qos_threshold(g1.q_min(), y1);
    for y2 in bounds.y_low..=bounds.y_high {
        let (rate, loss) = pair_loss_mass(params, g1, g2, y1, y2);
        if loss > threshold1 {
            return None;
        }
        if loss <= thresholds2[y2 as usize] {
            return Some((rate, y2));
        }
    }
    None
}

/// Searches retransmission pairs `(y1, y2)` within [`compute_bounds`] for
/// the feasible pair of least aggregate traffic; ties break to the
/// lexicographically smallest pair. Returns `Ok(None)` when no pair
/// satisfies both QoS constraints — infeasibility is a result, not an error.
///
/// The returned plan stores total copies (`retrans + 1`) per group while
/// `aggregate_traffic` keeps the retransmission-rate sum the constraints are
/// written against.
pub fn optimize_two_groups(
    params: &SystemParams,
    groups: &[QoSGroupSpec],
) -> Result<Option<RetransmissionPlan>> {
    let bounds = compute_bounds(params, groups)?;
    let (g1, g2) = (groups[0].clone(), groups[1].clone());
    let mut thresholds2 = vec![0.0; bounds.y_high as usize + 1];
    for y2 in bounds.y_low..=bounds.y_high {
        thresholds2[y2 as usize] = qos_threshold(g2.q_min(), y2);
    }

    let candidate_for = |y1: u32| {
        best_y2_for(params, &g1, &g2, y1, &thresholds2, &bounds)
            .map(|(rate, y2)| (rate, y1, y2))
    };
    let better = |a: (f64, u32, u32), b: (f64, u32, u32)| {
        // Total order: finite rate, then smallest pair.
        if (a.0, a.1, a.2) <= (b.0, b.1, b.2) {
            a
        } else {
            b
        }
    };

    #[cfg(feature = "parallel")]
    let best = (bounds.y_low..=bounds.y_high)
        .into_par_iter()
        .filter_map(candidate_for)
        .reduce_with(better);
    #[cfg(not(feature = "parallel"))]
    let best = (bounds.y_low..=bounds.y_high)
        .filter_map(candidate_for)
        .reduce(better);

    match best {
        None => Ok(None),
        Some((rate, y1, y2)) => {
            let pairs = [(g1, y1), (g2, y2)];
            let plan = RetransmissionPlan {
                copies: vec![y1 + 1, y2 + 1],
                predicted_delivery: vec![
                    delivery_probability_group(params, &pairs, 0)?,
                    delivery_probability_group(params, &pairs, 1)?,
                ],
                feasible: true,
                aggregate_traffic: rate,
            };
            Ok(Some(plan))
        }
    }
}

/// Largest `m_1` for which a first group with QoS target `q_1` and period
/// `t_1` still admits a feasible plan next to `group2`; 0 when even a single
/// node cannot be served. Searches by bisection — growing `m_1` only raises
/// the aggregate traffic of every candidate pair, so feasibility is
/// monotone — and the cap bounds the search when the constraints are
/// vacuously loose.
pub fn max_group_size(
    params: &SystemParams,
    q1: f64,
    group2: &QoSGroupSpec,
    t1: f64,
) -> Result<u32> {
    max_group_size_with_cap(params, q1, group2, t1, MAX_GROUP_SIZE_CAP)
}

/// [`max_group_size`] with an explicit search ceiling.
pub fn max_group_size_with_cap(
    params: &SystemParams,
    q1: f64,
    group2: &QoSGroupSpec,
    t1: f64,
    cap: u32,
) -> Result<u32> {
    if cap == 0 {
        return Err(Error::invalid("cap", "must be at least 1"));
    }
    let feasible = |m1: u32| -> Result<bool> {
        let g1 = QoSGroupSpec::new(m1, q1, t1)?;
        // The pair search needs the stricter target first; feasibility does
        // not depend on the order.
        let ordered = if q1 >= group2.q_min() {
            [g1, group2.clone()]
        } else {
            [group2.clone(), g1]
        };
        Ok(optimize_two_groups(params, &ordered)?.is_some())
    };
    if !feasible(1)? {
        return Ok(0);
    }
    if feasible(cap)? {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (1u32, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Verification scan at the boundary; only a broken monotonicity
    // assumption could trip this.
    if !feasible(lo)? || feasible(lo + 1)? {
        return Err(Error::invalid(
            "max_group_size",
            "feasibility boundary verification failed",
        ));
    }
    Ok(lo)
}
