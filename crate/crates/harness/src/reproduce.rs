//! Reference artifacts: deterministic text renderings of the bundled
//! example instance (4 caches, access degree 2, nine users on the
//! association profile (2,2,2,1,1,1), identity demands).
//!
//! Five artifacts are available; each is emitted in a stable line format
//! and checked byte-for-byte against files under `tests/golden/`.
//!
//! - `example1_association` — the canonical subset table: index, cache
//!   set, indicator vector, attached user numbers, user count.
//! - `example2_transmissions` — the full symbolic delivery log, one
//!   record per line, grouped by subset from the largest down (descending
//!   indicator within a size, leader slot ascending).
//! - `example3_A_sets` — per group: the power set `P` of the complement
//!   and the charged subsets `A`, both by descending indicator.
//! - `example4_E_sets` — per group: the running cache union `C` and the
//!   family `E` of subsets free of it.
//! - `example5_Y_sets` — the independent-set atoms as
//!   `(group,slot,mask) W=<file>` lines plus the expected-size
//!   polynomial, coefficients of `γ^a (1-γ)^b` per file bit.

use std::fmt::Write as _;

use macc::delivery::generate_symbolic_transmissions;
use macc::indexcoding::{build_e_sets, construct_independent_set};
use macc::model::{canonicalize_profile, CacheSubsetTable, DemandVector, SystemParams};
use macc::rates::build_a_sets;
use macc::subsets::CacheSet;

use crate::config::ConfigError;

pub const EXAMPLE_NAMES: [&str; 5] = [
    "example1_association",
    "example2_transmissions",
    "example3_A_sets",
    "example4_E_sets",
    "example5_Y_sets",
];

/// The instance every artifact is rendered from.
pub fn reference_instance() -> (SystemParams, CacheSubsetTable, DemandVector) {
    let params =
        SystemParams::new(4, 2, 9, 9, 3.0, 1024).expect("reference parameters are valid");
    let raw = vec![
        (CacheSet::from_members(&[1, 2]), 2),
        (CacheSet::from_members(&[1, 3]), 2),
        (CacheSet::from_members(&[1, 4]), 2),
        (CacheSet::from_members(&[2, 3]), 1),
        (CacheSet::from_members(&[2, 4]), 1),
        (CacheSet::from_members(&[3, 4]), 1),
    ];
    let table = canonicalize_profile(&raw, &params).expect("reference profile is valid");
    let demands = DemandVector::identity(&table, &params).expect("identity demands fit");
    (params, table, demands)
}

/// Render one artifact by name.
pub fn reproduce(name: &str) -> Result<String, ConfigError> {
    let (_, table, demands) = reference_instance();
    match name {
        "example1_association" => Ok(association_table(&table)),
        "example2_transmissions" => Ok(transmission_table(&table, &demands)),
        "example3_A_sets" => Ok(subset_assignment_table(&table)),
        "example4_E_sets" => Ok(union_family_table(&table)),
        "example5_Y_sets" => Ok(independent_set_table(&table, &demands)),
        other => Err(ConfigError::Invalid {
            field: "example".to_string(),
            reason: format!("unknown artifact {other:?}, expected one of {EXAMPLE_NAMES:?}"),
        }),
    }
}

fn join_sets(sets: &[CacheSet]) -> String {
    sets.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn association_table(table: &CacheSubsetTable) -> String {
    let c = table.caches();
    let mut out = String::new();
    let mut next_user = 1u32;
    for (i, entry) in table.entries().iter().enumerate() {
        let users: Vec<String> = (0..entry.user_count)
            .map(|slot| (next_user + slot).to_string())
            .collect();
        next_user += entry.user_count;
        let _ = writeln!(
            out,
            "i={} C={} b={} U={{{}}} L={}",
            i + 1,
            entry.caches,
            entry.caches.indicator_string(c),
            users.join(","),
            entry.user_count,
        );
    }
    out
}

fn transmission_table(table: &CacheSubsetTable, demands: &DemandVector) -> String {
    let c = table.caches();
    let log = generate_symbolic_transmissions(table, demands)
        .expect("reference demands cover all users");
    // Table reading order: largest subsets first, descending indicator
    // within a size, slots ascending. The log itself stays in loop order.
    let mut records: Vec<&macc::delivery::Transmission> = log.transmissions.iter().collect();
    records.sort_by(|a, b| {
        b.subset
            .len()
            .cmp(&a.subset.len())
            .then(b.subset.indicator_value(c).cmp(&a.subset.indicator_value(c)))
            .then(a.slot.cmp(&b.slot))
    });
    let mut out = String::new();
    for record in records {
        let _ = writeln!(out, "{}", log.format_transmission(record));
    }
    out
}

fn subset_assignment_table(table: &CacheSubsetTable) -> String {
    let c = table.caches();
    let families = build_a_sets(table);
    let mut out = String::new();
    for (i, entry) in table.entries().iter().enumerate() {
        // The full power set of the complement; the A column keeps only
        // the subsets actually charged to this group.
        let mut power: Vec<CacheSet> =
            macc::subsets::subsets_of(CacheSet::full(c).difference(entry.caches)).collect();
        macc::subsets::sort_descending_indicator(&mut power, c);
        let _ = writeln!(
            out,
            "i={} P={} A={}",
            i + 1,
            join_sets(&power),
            join_sets(families.family(i)),
        );
    }
    out
}

fn union_family_table(table: &CacheSubsetTable) -> String {
    let families = build_e_sets(table);
    let mut out = String::new();
    for i in 0..table.num_groups() {
        let _ = writeln!(
            out,
            "i={} C={} E={}",
            i + 1,
            families.cumulative(i),
            join_sets(families.family(i)),
        );
    }
    out
}

fn independent_set_table(table: &CacheSubsetTable, demands: &DemandVector) -> String {
    let y = construct_independent_set(table, demands)
        .expect("reference demands are distinct");
    y.to_text()
}
