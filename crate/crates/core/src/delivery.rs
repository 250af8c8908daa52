//! The XOR multicast delivery procedure, per-user decoding, and delivery
//! verification.
//!
//! For every cache subset `S` with `|S| ≥ r` the server makes `ℒ*_S`
//! transmissions, where `ℒ*_S` is the largest user count among the
//! `r`-subsets inside `S`. Transmission `ℓ` XORs, over every group
//! `i` with `𝔠_i ⊆ S` that still has an `ℓ`-th user, the bits of that
//! user's demanded file lying in subfile index `S \ 𝔠_i`. Groups with
//! fewer than `ℓ` users simply contribute no term.
//!
//! Logs come in two modes. A *sampled* log reads bit positions from a
//! [`PrefetchState`] and carries real XOR payloads; terms of unequal
//! length are serialized in ascending bit-position order and zero-padded
//! to the longest term, so `payload_bits` is the maximum term size. A
//! *symbolic* log carries only the `(group, file, subfile)` composition of
//! every transmission — enough to reproduce reference tables exactly and
//! to derive the exact rate polynomial.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{CacheSubsetTable, DemandVector, SystemParams, UserId};
use crate::poly::RatePolynomial;
use crate::prefetch::PrefetchState;
use crate::rng::mix;
use crate::subsets::{k_subsets, sort_descending_indicator, subsets_of, CacheSet};
use crate::{Error, Result};

/// One XOR component: the bits of `file` (demanded by the `slot`-th user
/// of `group`) lying in subfile index `mask`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Term {
    pub group: usize,
    pub file: usize,
    pub mask: CacheSet,
}

/// One server transmission: subset `S`, leader slot `ℓ`, and the XOR of
/// the listed terms.
#[derive(Clone, Debug)]
pub struct Transmission {
    pub subset: CacheSet,
    /// 0-based leader slot; rendered 1-based.
    pub slot: usize,
    pub terms: Vec<Term>,
    /// Bit values of the zero-padded XOR; empty in symbolic logs.
    pub payload: Vec<u8>,
    /// Length of the longest term (0 if all terms are empty).
    pub payload_bits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogMode {
    Symbolic,
    Sampled,
}

/// Ordered list of transmissions. Record order follows the delivery loop:
/// subset size `s` ascending from `r` to `c`, subsets of equal size by
/// descending indicator value, then slot `ℓ` ascending.
#[derive(Clone, Debug)]
pub struct TransmissionLog {
    pub mode: LogMode,
    caches: u32,
    access_degree: u32,
    pub transmissions: Vec<Transmission>,
}

/// `ℒ*_S`: the largest user count among groups whose caches lie inside
/// `S`; 0 when every such group is empty.
pub fn leader_count(subset: CacheSet, table: &CacheSubsetTable) -> Result<u32> {
    if subset.len() < table.access_degree() {
        return Err(Error::SubsetTooSmall {
            subset: subset.to_string(),
            access_degree: table.access_degree(),
        });
    }
    Ok(table
        .entries()
        .iter()
        .filter(|e| e.caches.is_subset_of(subset))
        .map(|e| e.user_count)
        .max()
        .unwrap_or(0))
}

/// Deterministic content of one file bit, independent of any placement.
pub fn bit_content(file: usize, pos: u64) -> u8 {
    (mix(0x5EED_C0DE_0000_0001, (file as u64) << 44 ^ pos) & 1) as u8
}

fn check_demands(table: &CacheSubsetTable, demands: &DemandVector) -> Result<()> {
    if demands.len() != table.num_users() as usize {
        return Err(Error::IncompleteDemandVector(format!(
            "{} demands for {} users",
            demands.len(),
            table.num_users()
        )));
    }
    Ok(())
}

fn loop_subsets(table: &CacheSubsetTable) -> Vec<CacheSet> {
    let c = table.caches();
    let r = table.access_degree();
    let mut out = Vec::new();
    for size in r..=c {
        let mut level = k_subsets(c, size);
        sort_descending_indicator(&mut level, c);
        out.extend(level);
    }
    out
}

fn record_terms(
    subset: CacheSet,
    slot: usize,
    table: &CacheSubsetTable,
    demands: &DemandVector,
) -> Vec<Term> {
    table
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.caches.is_subset_of(subset) && (slot as u32) < e.user_count)
        .map(|(group, e)| {
            let user = UserId { group, slot };
            Term {
                group,
                file: demands.file_of(user, table),
                mask: subset.difference(e.caches),
            }
        })
        .collect()
}

/// Run the delivery loop against a sampled placement.
pub fn generate_transmissions(
    state: &PrefetchState,
    table: &CacheSubsetTable,
    demands: &DemandVector,
) -> Result<TransmissionLog> {
    check_demands(table, demands)?;
    let mut transmissions = Vec::new();
    for subset in loop_subsets(table) {
        let leaders = leader_count(subset, table)?;
        for slot in 0..leaders as usize {
            let terms = record_terms(subset, slot, table, demands);
            let payload_bits = terms
                .iter()
                .map(|t| state.subfile_len(t.file, t.mask))
                .max()
                .unwrap_or(0);
            let mut payload = vec![0u8; payload_bits as usize];
            for term in &terms {
                for (k, &pos) in state.subfile(term.file, term.mask).iter().enumerate() {
                    payload[k] ^= bit_content(term.file, pos);
                }
            }
            transmissions.push(Transmission {
                subset,
                slot,
                terms,
                payload,
                payload_bits,
            });
        }
    }
    Ok(TransmissionLog {
        mode: LogMode::Sampled,
        caches: table.caches(),
        access_degree: table.access_degree(),
        transmissions,
    })
}

/// Run the delivery loop symbolically: terms only, no payloads.
pub fn generate_symbolic_transmissions(
    table: &CacheSubsetTable,
    demands: &DemandVector,
) -> Result<TransmissionLog> {
    check_demands(table, demands)?;
    let mut transmissions = Vec::new();
    for subset in loop_subsets(table) {
        let leaders = leader_count(subset, table)?;
        for slot in 0..leaders as usize {
            let terms = record_terms(subset, slot, table, demands);
            transmissions.push(Transmission {
                subset,
                slot,
                terms,
                payload: Vec::new(),
                payload_bits: 0,
            });
        }
    }
    Ok(TransmissionLog {
        mode: LogMode::Symbolic,
        caches: table.caches(),
        access_degree: table.access_degree(),
        transmissions,
    })
}

impl TransmissionLog {
    pub fn caches(&self) -> u32 {
        self.caches
    }

    pub fn access_degree(&self) -> u32 {
        self.access_degree
    }

    /// Total broadcast bits of a sampled log.
    pub fn total_payload_bits(&self) -> u64 {
        self.transmissions.iter().map(|t| t.payload_bits).sum()
    }

    /// Exact expected size of a symbolic log, as a polynomial: every
    /// record of subset size `s` transmits `γ^(s-r) (1-γ)^(c-s+r) F`
    /// expected bits.
    pub fn symbolic_rate_polynomial(&self, users: u32) -> RatePolynomial {
        let mut poly = RatePolynomial::new(users);
        for t in &self.transmissions {
            if t.terms.is_empty() {
                continue;
            }
            let s = t.subset.len();
            poly.add_term(s - self.access_degree, self.caches - s + self.access_degree, 1);
        }
        poly
    }

    /// One line per record:
    /// `S=<hex> l=<slot> V=(group,file,mask)^... len=<bits|->`.
    /// Group and file indices are 1-based; masks are indicator-value hex.
    pub fn format_transmission(&self, t: &Transmission) -> String {
        let terms = t
            .terms
            .iter()
            .map(|term| {
                format!(
                    "({},{},{})",
                    term.group + 1,
                    term.file + 1,
                    term.mask.hex(self.caches)
                )
            })
            .collect::<Vec<_>>()
            .join("^");
        let len = match self.mode {
            LogMode::Symbolic => "-".to_string(),
            LogMode::Sampled => t.payload_bits.to_string(),
        };
        format!(
            "S={} l={} V={} len={}",
            t.subset.hex(self.caches),
            t.slot + 1,
            terms,
            len
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.transmissions {
            let _ = writeln!(out, "{}", self.format_transmission(t));
        }
        out
    }
}

/// Simulate one user's decoder and return every bit position of the
/// demanded file it ends up holding.
///
/// The user owns all subfiles intersecting its caches. For each missing
/// subfile index `D` (disjoint from its caches) it looks up the record
/// for subset `D ∪ 𝔠_i` at its own slot, reconstructs every foreign term
/// from cached side information, strips them from the payload, and checks
/// the remainder against the expected bit values. The placement map is
/// consulted only to emulate those side-information lookups.
pub fn decode_user(
    log: &TransmissionLog,
    state: &PrefetchState,
    table: &CacheSubsetTable,
    demands: &DemandVector,
    user: UserId,
) -> Result<Vec<u64>> {
    let mut recovered = decode_user_inner(log, state, table, demands, user, true)?;
    recovered.sort_unstable();
    Ok(recovered)
}

fn decode_user_inner(
    log: &TransmissionLog,
    state: &PrefetchState,
    table: &CacheSubsetTable,
    demands: &DemandVector,
    user: UserId,
    strict: bool,
) -> Result<Vec<u64>> {
    check_demands(table, demands)?;
    debug_assert_eq!(log.mode, LogMode::Sampled, "decoding needs payloads");
    let access = table.caches_of(user);
    let file = demands.file_of(user, table);

    let mut index: HashMap<(CacheSet, usize), &Transmission> = HashMap::new();
    for t in &log.transmissions {
        index.insert((t.subset, t.slot), t);
    }

    let mut recovered: Vec<u64> = Vec::new();
    for (mask, positions) in state.partitions(file) {
        if mask.intersects(access) {
            recovered.extend_from_slice(positions);
        }
    }

    let complement = CacheSet::full(table.caches()).difference(access);
    for missing in subsets_of(complement) {
        let subset = missing.union(access);
        match decode_one_subfile(state, &index, access, file, user, subset, missing) {
            Ok(positions) => recovered.extend_from_slice(positions),
            // Lenient mode reports whatever still decoded.
            Err(err) if strict => return Err(err),
            Err(_) => {}
        }
    }
    Ok(recovered)
}

#[allow(clippy::too_many_arguments)]
fn decode_one_subfile<'a>(
    state: &'a PrefetchState,
    index: &HashMap<(CacheSet, usize), &Transmission>,
    access: CacheSet,
    file: usize,
    user: UserId,
    subset: CacheSet,
    missing: CacheSet,
) -> Result<&'a [u64]> {
    let fail = |reason: String| Error::DecodingFailure {
        user: user.to_string(),
        subset: subset.to_string(),
        slot: user.slot + 1,
        reason,
    };

    let own_positions = state.subfile(file, missing);
    let record = match index.get(&(subset, user.slot)) {
        Some(record) => *record,
        None => {
            if own_positions.is_empty() {
                // Nothing to recover from this subfile index.
                return Ok(own_positions);
            }
            return Err(fail("required record missing".into()));
        }
    };

    let mut remainder = record.payload.clone();
    let mut own_term_seen = false;
    for term in &record.terms {
        if term.group == user.group {
            own_term_seen = true;
            continue;
        }
        if !term.mask.intersects(access) {
            return Err(fail(format!(
                "foreign term ({},{},{}) not covered by side information",
                term.group + 1,
                term.file + 1,
                term.mask
            )));
        }
        let positions = state.subfile(term.file, term.mask);
        if positions.len() > remainder.len() {
            return Err(fail("payload shorter than a foreign term".into()));
        }
        for (k, &pos) in positions.iter().enumerate() {
            remainder[k] ^= bit_content(term.file, pos);
        }
    }
    if !own_term_seen && !own_positions.is_empty() {
        return Err(fail("own term absent from record".into()));
    }
    if (own_positions.len() as u64) > record.payload_bits {
        return Err(fail("payload shorter than the expected subfile".into()));
    }
    for (k, &pos) in own_positions.iter().enumerate() {
        if remainder[k] != bit_content(file, pos) {
            return Err(fail(format!("bit {pos} decoded incorrectly")));
        }
    }
    Ok(own_positions)
}

/// Outcome of verifying a whole delivery phase.
#[derive(Clone, Debug)]
pub struct DeliveryReport {
    /// True iff every user recovered its full file.
    pub ok: bool,
    /// Recovered fraction of the demanded file per user, row-major order.
    pub per_user: Vec<(UserId, f64)>,
}

/// Decode every user and report recovered fractions. Failures are
/// reported through fractions below one, never raised.
pub fn verify_delivery(
    log: &TransmissionLog,
    state: &PrefetchState,
    table: &CacheSubsetTable,
    demands: &DemandVector,
) -> DeliveryReport {
    let f = state.file_bits();
    let mut per_user = Vec::new();
    let mut ok = true;
    for user in table.users() {
        let recovered = decode_user_inner(log, state, table, demands, user, false)
            .map(|positions| dedup_count(positions))
            .unwrap_or(0);
        let fraction = recovered as f64 / f as f64;
        if recovered != f {
            ok = false;
        }
        per_user.push((user, fraction));
    }
    DeliveryReport { ok, per_user }
}

fn dedup_count(mut positions: Vec<u64>) -> u64 {
    positions.sort_unstable();
    positions.dedup();
    positions.len() as u64
}

/// Broadcast bits divided by `F · K`.
pub fn measured_rate_per_user(log: &TransmissionLog, params: &SystemParams) -> f64 {
    log.total_payload_bits() as f64 / (params.file_bits as f64 * params.users as f64)
}

/// Structural side-information soundness: in every record, each term's
/// subfile index intersects the caches of every *other* participating
/// group, so each user can strip all foreign terms.
pub fn side_information_sound(log: &TransmissionLog, table: &CacheSubsetTable) -> bool {
    log.transmissions.iter().all(|t| {
        t.terms.iter().all(|a| {
            t.terms.iter().all(|b| {
                a.group == b.group || b.mask.intersects(table.entry(a.group).caches)
            })
        })
    })
}
