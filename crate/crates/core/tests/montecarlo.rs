//! Monte Carlo agreement between the sampled delivery phase and the exact
//! rate polynomial on the reference instance.

use macc::delivery::{generate_transmissions, measured_rate_per_user, verify_delivery};
use macc::model::{canonicalize_profile, CacheSubsetTable, DemandVector, SystemParams};
use macc::rates::rate_per_user;
use macc::subsets::CacheSet;

fn reference(file_bits: u64) -> (SystemParams, CacheSubsetTable, DemandVector) {
    let params = SystemParams::new(4, 2, 9, 9, 3.0, file_bits).unwrap();
    let raw = vec![
        (CacheSet::from_members(&[1, 2]), 2),
        (CacheSet::from_members(&[1, 3]), 2),
        (CacheSet::from_members(&[1, 4]), 2),
        (CacheSet::from_members(&[2, 3]), 1),
        (CacheSet::from_members(&[2, 4]), 1),
        (CacheSet::from_members(&[3, 4]), 1),
    ];
    let table = canonicalize_profile(&raw, &params).unwrap();
    let demands = DemandVector::identity(&table, &params).unwrap();
    (params, table, demands)
}

#[test]
fn measured_rate_converges_to_the_polynomial() {
    // Max-padding of unequal terms biases the sampled rate high by
    // O(σ/F); the tolerance shrinks as F grows.
    let cases = [(1_000u64, 0.12), (10_000, 0.04), (100_000, 0.02)];
    for (file_bits, tolerance) in cases {
        let (params, table, demands) = reference(file_bits);
        let analytic = rate_per_user(&table, &params).eval(params.gamma());
        let state = macc::prefetch::decentralized_prefetch(&params, 1729);
        let log = generate_transmissions(&state, &table, &demands).unwrap();
        let measured = measured_rate_per_user(&log, &params);
        let relative = (measured - analytic).abs() / analytic;
        assert!(
            relative <= tolerance,
            "F={file_bits}: measured {measured}, analytic {analytic}, rel {relative}"
        );
        assert!(verify_delivery(&log, &state, &table, &demands).ok);
    }
}

#[test]
fn measured_rate_tracks_gamma() {
    // Same instance at a different memory point.
    let params = SystemParams::new(4, 2, 9, 9, 6.0, 100_000).unwrap();
    let raw = vec![
        (CacheSet::from_members(&[1, 2]), 2),
        (CacheSet::from_members(&[1, 3]), 2),
        (CacheSet::from_members(&[1, 4]), 2),
        (CacheSet::from_members(&[2, 3]), 1),
        (CacheSet::from_members(&[2, 4]), 1),
        (CacheSet::from_members(&[3, 4]), 1),
    ];
    let table = canonicalize_profile(&raw, &params).unwrap();
    let demands = DemandVector::identity(&table, &params).unwrap();
    let analytic = rate_per_user(&table, &params).eval(params.gamma());
    let state = macc::prefetch::decentralized_prefetch(&params, 99);
    let log = generate_transmissions(&state, &table, &demands).unwrap();
    let measured = measured_rate_per_user(&log, &params);
    assert!(
        (measured - analytic).abs() / analytic <= 0.02,
        "measured {measured}, analytic {analytic}"
    );
}
