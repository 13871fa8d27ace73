//! Analysis and simulation must tell the same story at the reference
//! operating points.

use gorma::analytic::delivery_probability_group;
use gorma::sim::simulate_two_groups;
use gorma::{QoSGroupSpec, SystemParams};

#[test]
fn two_group_simulation_tracks_analysis() {
    // Two groups of 30 at 1 ms periods, three retransmissions each. The
    // analysis rides on the Poisson approximation and counts only the
    // retransmission traffic, so a 0.02 band absorbs both the model gap and
    // Monte Carlo noise.
    let params = SystemParams::new(60, 1.0, 6.4e-4).unwrap();
    let group = QoSGroupSpec::new(30, 0.99, 1.0).unwrap();
    let pairs = [(group.clone(), 3u32), (group, 3u32)];
    let analytic = delivery_probability_group(&params, &pairs, 0).unwrap();
    assert!((analytic - 0.998206721824554428).abs() < 1e-12);

    let result = simulate_two_groups(&params, &pairs, 100_000, 42).unwrap();
    for stats in &result.groups {
        let gap = (stats.delivery_estimate - analytic).abs();
        assert!(
            gap <= 0.02,
            "per-group estimate {} strays {gap:.4} from analytic {analytic:.6}",
            stats.delivery_estimate
        );
    }
}
