use thiserror::Error;

/// Errors returned by parameter constructors and model operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar input failed validation (wrong sign, out of range, non-finite).
    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: String,
    },

    /// The packet transmission time does not fit inside the generation period.
    #[error("packet time {packet_time} ms does not fit in period {period} ms")]
    PacketDoesNotFit { packet_time: f64, period: f64 },

    /// Zero copies requested where at least one transmission is required.
    #[error("at least one copy per packet is required")]
    ZeroCopies,

    /// Requested copy count cannot fit in the period.
    #[error("{copies} copies of {packet_time} ms exceed the {period} ms period")]
    CopiesExceedPeriod {
        copies: u32,
        packet_time: f64,
        period: f64,
    },

    /// Retransmission count violates the per-group bound t_k / T_p.
    #[error("group {group}: {retrans} retransmissions exceed the bound {bound:.3}")]
    RetransBoundExceeded {
        group: usize,
        retrans: u32,
        bound: f64,
    },

    /// An operation that is only defined for exactly two groups got another count.
    #[error("expected exactly {expected} groups, got {got}")]
    GroupCount { expected: usize, got: usize },

    /// Two-group search requires the first group to carry the stricter QoS target.
    #[error("group ordering violated: q_1 = {q1} must be >= q_2 = {q2}")]
    QosOrdering { q1: f64, q2: f64 },

    /// Group index out of range.
    #[error("group index {index} out of range for {len} groups")]
    GroupIndex { index: usize, len: usize },

    /// No retransmission count fits in the period for at least one group.
    #[error("empty search range: no copy count fits in the period")]
    EmptySearchRange,

    /// A plan's dimensions do not match the group list it is checked against.
    #[error("plan covers {plan} groups but {groups} were supplied")]
    PlanDimensionMismatch { plan: usize, groups: usize },

    /// Mixed retransmission periods require too many repeats per common horizon.
    #[error("common horizon needs {repeats} repeats of the shortest period (cap {cap})")]
    HorizonOverflow { repeats: u64, cap: u64 },

    /// Zero Monte Carlo periods requested.
    #[error("at least one simulated period is required")]
    ZeroPeriods,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
