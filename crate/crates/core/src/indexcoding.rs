//! The index coding view of a delivery phase and the explicit generalized
//! independent set that certifies the lower bound.
//!
//! Every bit of every file is a message; each user becomes up to `F`
//! receivers, one per demanded bit it does not already hold, all sharing
//! the side information of the user's caches. The independent set `𝒴`
//! collects, for each group `i`, slot `ℓ`, and subset `S` in the family
//! `ℰ_i`, the bits of the demanded file lying in subfile index `S`. The
//! families `ℰ_i` are the power sets of `[c] \ 𝒞_i`, where `𝒞_i` is the
//! union of the first `i` groups' caches, so any bit in an atom of group
//! `i` is invisible to every group `z ≤ i` — the structure behind the
//! independence argument.
//!
//! Independence is checked at atom granularity, mirroring that argument:
//! order a subset of atoms by group, then demand that no atom's subfile
//! index touches the first atom's caches. For tiny instances (at most 16
//! bits in `𝒴`) an exhaustive bit-level check over all message subsets
//! backs the atom-level reduction.

use std::fmt::Write as _;

use crate::model::{CacheSubsetTable, DemandVector, UserId};
use crate::poly::RatePolynomial;
use crate::prefetch::PrefetchState;
use crate::rng::SplitMix64;
use crate::subsets::{sort_descending_indicator, subsets_of, CacheSet};
use crate::{Error, Result};

/// For each group `i`: the running cache union `𝒞_i` and the family
/// `ℰ_i`, the power set of `[c] \ 𝒞_i` in descending indicator order.
#[derive(Clone, Debug)]
pub struct SetFamilyE {
    unions: Vec<CacheSet>,
    families: Vec<Vec<CacheSet>>,
}

impl SetFamilyE {
    /// `𝒞_i`: union of the caches of groups `1..=i`.
    pub fn cumulative(&self, group: usize) -> CacheSet {
        self.unions[group]
    }

    pub fn family(&self, group: usize) -> &[CacheSet] {
        &self.families[group]
    }

    pub fn families(&self) -> &[Vec<CacheSet>] {
        &self.families
    }
}

pub fn build_e_sets(table: &CacheSubsetTable) -> SetFamilyE {
    let c = table.caches();
    let full = CacheSet::full(c);
    let mut unions = Vec::with_capacity(table.num_groups());
    let mut families = Vec::with_capacity(table.num_groups());
    let mut running = CacheSet::EMPTY;
    for entry in table.entries() {
        running = running.union(entry.caches);
        unions.push(running);
        let mut family: Vec<CacheSet> = subsets_of(full.difference(running)).collect();
        sort_descending_indicator(&mut family, c);
        families.push(family);
    }
    SetFamilyE { unions, families }
}

/// The index coding instance induced by a delivery phase: one message per
/// file bit, one receiver per missing demanded bit. Receivers of the same
/// group share side information, so it is represented once per group and
/// queried through [`IndexCodingInstance::side_info_contains`].
#[derive(Clone, Copy, Debug)]
pub struct IndexCodingInstance<'a> {
    state: &'a PrefetchState,
    table: &'a CacheSubsetTable,
    demands: &'a DemandVector,
}

impl<'a> IndexCodingInstance<'a> {
    pub fn build(
        state: &'a PrefetchState,
        table: &'a CacheSubsetTable,
        demands: &'a DemandVector,
    ) -> Result<Self> {
        if demands.len() != table.num_users() as usize {
            return Err(Error::IncompleteDemandVector(format!(
                "{} demands for {} users",
                demands.len(),
                table.num_users()
            )));
        }
        Ok(Self {
            state,
            table,
            demands,
        })
    }

    pub fn message_count(&self) -> u64 {
        self.state.num_files() as u64 * self.state.file_bits()
    }

    /// Number of receivers: one per user per demanded bit outside its
    /// caches. At most `K · F`.
    pub fn receiver_count(&self) -> u64 {
        self.table
            .users()
            .map(|user| self.missing_positions(user).len() as u64)
            .sum()
    }

    /// Is message `(file, pos)` side information of the given group?
    pub fn side_info_contains(&self, group: usize, file: usize, pos: u64) -> bool {
        self.state
            .mask_of(file, pos)
            .intersects(self.table.entry(group).caches)
    }

    /// Demanded bits of `user` that are not in its side information; the
    /// receivers contributed by this user, in other words.
    pub fn missing_positions(&self, user: UserId) -> Vec<u64> {
        let file = self.demands.file_of(user, self.table);
        let access = self.table.caches_of(user);
        let mut missing = Vec::new();
        for (mask, positions) in self.state.partitions(file) {
            if !mask.intersects(access) {
                missing.extend_from_slice(positions);
            }
        }
        missing.sort_unstable();
        missing
    }

    pub fn demanded_file(&self, user: UserId) -> usize {
        self.demands.file_of(user, self.table)
    }

    pub fn table(&self) -> &CacheSubsetTable {
        self.table
    }

    pub fn state(&self) -> &PrefetchState {
        self.state
    }
}

/// One atom of the independent set: the bits of `file` (demanded by the
/// `slot`-th user of `group`) lying in subfile index `mask ∈ ℰ_group`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Atom {
    pub group: usize,
    pub slot: usize,
    pub file: usize,
    pub mask: CacheSet,
}

/// The generalized independent set `𝒴`, listed as atoms in construction
/// order: groups ascending, subfile indices of `ℰ_i` descending by
/// indicator, slots ascending within each index.
#[derive(Clone, Debug)]
pub struct IndependentSet {
    atoms: Vec<Atom>,
    caches: u32,
    users: u32,
}

/// Build `𝒴` from the table and demands. Pairwise distinct demands are
/// required: repeated files would collapse atoms into the same messages
/// and the bit count would no longer certify anything.
pub fn construct_independent_set(
    table: &CacheSubsetTable,
    demands: &DemandVector,
) -> Result<IndependentSet> {
    if demands.len() != table.num_users() as usize {
        return Err(Error::IncompleteDemandVector(format!(
            "{} demands for {} users",
            demands.len(),
            table.num_users()
        )));
    }
    if !demands.is_distinct() {
        return Err(Error::RequiresDistinctDemands);
    }
    let families = build_e_sets(table);
    let mut atoms = Vec::new();
    for (group, entry) in table.entries().iter().enumerate() {
        for &mask in families.family(group) {
            for slot in 0..entry.user_count as usize {
                let user = UserId { group, slot };
                atoms.push(Atom {
                    group,
                    slot,
                    file: demands.file_of(user, table),
                    mask,
                });
            }
        }
    }
    Ok(IndependentSet {
        atoms,
        caches: table.caches(),
        users: table.num_users(),
    })
}

impl IndependentSet {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Push an extra atom; exists so tests can build adversarial sets.
    pub fn push_atom(&mut self, atom: Atom) {
        self.atoms.push(atom);
    }

    /// Exact number of bits of `𝒴` under the given placement. This is the
    /// certified lower bound on the generalized independence number.
    pub fn alpha_count(&self, state: &PrefetchState) -> u64 {
        self.atoms
            .iter()
            .map(|a| state.subfile_len(a.file, a.mask))
            .sum()
    }

    /// Expected size of `𝒴` per file bit, as an exact polynomial:
    /// `Σ_atoms γ^|mask| (1-γ)^(c-|mask|)` (times `F` bits).
    pub fn alpha_polynomial(&self) -> RatePolynomial {
        let mut poly = RatePolynomial::new(self.users);
        for atom in &self.atoms {
            let e = atom.mask.len();
            poly.add_term(e, self.caches - e, 1);
        }
        poly
    }

    /// Serialization: one `(group,slot,mask) W=<file>` line per atom plus
    /// the expected-size polynomial. Indices 1-based, masks indicator hex.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for atom in &self.atoms {
            let _ = writeln!(
                out,
                "({},{},{}) W={}",
                atom.group + 1,
                atom.slot + 1,
                atom.mask.hex(self.caches),
                atom.file + 1,
            );
        }
        let _ = writeln!(out, "alpha={}", self.alpha_polynomial().to_text());
        out
    }
}

/// How to search the subsets of `𝒴` during verification.
#[derive(Clone, Copy, Debug)]
pub enum IndependenceMode {
    /// Every subset of atoms; use for at most ~20 atoms.
    Exhaustive,
    /// A seeded uniform sample of atom subsets.
    Sampled { subsets: usize, seed: u64 },
}

/// Default sample size for [`IndependenceMode::Sampled`].
pub const DEFAULT_SAMPLED_SUBSETS: usize = 10_000;

/// Structural atom-level independence: for every chosen subset of atoms,
/// ordered by group, no member's subfile index may touch the caches of
/// the first atom's group — those receivers must see no side information
/// about any bit in the subset.
pub fn check_atom_independence(
    atoms: &[Atom],
    table: &CacheSubsetTable,
    mode: IndependenceMode,
) -> bool {
    if atoms.is_empty() {
        return true;
    }
    // Atom order within a group never matters: same caches, same test.
    let check_subset = |contains: &dyn Fn(usize) -> bool| -> bool {
        let mut first: Option<&Atom> = None;
        for (idx, atom) in atoms.iter().enumerate() {
            if !contains(idx) {
                continue;
            }
            match first {
                None => first = Some(atom),
                Some(f) if atom.group < f.group => first = Some(atom),
                _ => {}
            }
        }
        let Some(first) = first else { return true };
        let caches = table.entry(first.group).caches;
        atoms
            .iter()
            .enumerate()
            .all(|(idx, atom)| !contains(idx) || !atom.mask.intersects(caches))
    };

    match mode {
        IndependenceMode::Exhaustive => {
            assert!(atoms.len() <= 24, "exhaustive mode over {} atoms", atoms.len());
            let total = 1u64 << atoms.len();
            (1..total).all(|subset| check_subset(&|idx| subset >> idx & 1 == 1))
        }
        IndependenceMode::Sampled { subsets, seed } => {
            let mut rng = SplitMix64::new(seed);
            let words = atoms.len().div_ceil(64);
            (0..subsets).all(|_| {
                let chosen: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
                check_subset(&|idx| chosen[idx / 64] >> (idx % 64) & 1 == 1)
            })
        }
    }
}

/// Verify that `𝒴` is a generalized independent set of the instance.
///
/// Atoms must belong to the instance (valid group and slot, file equal to
/// that user's demand) — anything else is an [`Error::InstanceMismatch`].
/// The atom-level subset search runs in the requested mode; instances
/// whose `𝒴` holds at most 16 bits additionally get an exhaustive
/// bit-level check over all subsets of the underlying messages.
pub fn check_generalized_independence(
    y: &IndependentSet,
    instance: &IndexCodingInstance<'_>,
    mode: IndependenceMode,
) -> Result<bool> {
    let table = instance.table();
    for atom in y.atoms() {
        if atom.group >= table.num_groups() {
            return Err(Error::InstanceMismatch(format!(
                "group {} out of range",
                atom.group + 1
            )));
        }
        if atom.slot >= table.entry(atom.group).user_count as usize {
            return Err(Error::InstanceMismatch(format!(
                "slot {} of group {} out of range",
                atom.slot + 1,
                atom.group + 1
            )));
        }
        let user = UserId {
            group: atom.group,
            slot: atom.slot,
        };
        if atom.file != instance.demanded_file(user) {
            return Err(Error::InstanceMismatch(format!(
                "atom file {} differs from the demand of {}",
                atom.file + 1,
                user
            )));
        }
    }

    if !check_atom_independence(y.atoms(), table, mode) {
        return Ok(false);
    }

    if y.alpha_count(instance.state()) <= 16 {
        return Ok(check_bits_exhaustively(y, instance));
    }
    Ok(true)
}

/// Bit-level ground truth on tiny instances: every subset of the messages
/// of `𝒴` must contain a bit whose receiver sees none of the others.
fn check_bits_exhaustively(y: &IndependentSet, instance: &IndexCodingInstance<'_>) -> bool {
    let mut bits: Vec<(usize, usize, u64)> = Vec::new(); // (group, file, pos)
    for atom in y.atoms() {
        for &pos in instance.state().subfile(atom.file, atom.mask) {
            bits.push((atom.group, atom.file, pos));
        }
    }
    debug_assert!(bits.len() <= 16);
    let total = 1u32 << bits.len();
    'subsets: for chosen in 1..total {
        for (i, &(group, _, _)) in bits.iter().enumerate() {
            if chosen >> i & 1 == 0 {
                continue;
            }
            // Candidate receiver: demands bit i, side information of
            // `group`. The subset qualifies if no other chosen message
            // (nor a duplicate of bit i itself) is visible to it.
            let ok = bits.iter().enumerate().all(|(j, &(_, file, pos))| {
                if chosen >> j & 1 == 0 || i == j {
                    true
                } else {
                    let distinct = (file, pos) != (bits[i].1, bits[i].2);
                    distinct && !instance.side_info_contains(group, file, pos)
                }
            });
            if ok {
                continue 'subsets;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{canonicalize_profile, SystemParams};
    use crate::prefetch::decentralized_prefetch;

    fn set(members: &[u32]) -> CacheSet {
        CacheSet::from_members(members)
    }

    fn example_table() -> (SystemParams, CacheSubsetTable) {
        let params = SystemParams::new(4, 2, 9, 9, 3.0, 512).unwrap();
        let raw = vec![
            (set(&[1, 2]), 2),
            (set(&[1, 3]), 2),
            (set(&[1, 4]), 2),
            (set(&[2, 3]), 1),
            (set(&[2, 4]), 1),
            (set(&[3, 4]), 1),
        ];
        (params, canonicalize_profile(&raw, &params).unwrap())
    }

    #[test]
    fn e_families_match_reference_table() {
        let (_, table) = example_table();
        let families = build_e_sets(&table);
        assert_eq!(families.cumulative(0), set(&[1, 2]));
        assert_eq!(families.cumulative(1), set(&[1, 2, 3]));
        for group in 2..6 {
            assert_eq!(families.cumulative(group), CacheSet::full(4));
        }
        assert_eq!(
            families.family(0),
            &[set(&[3, 4]), set(&[3]), set(&[4]), CacheSet::EMPTY]
        );
        assert_eq!(families.family(1), &[set(&[4]), CacheSet::EMPTY]);
        for group in 2..6 {
            assert_eq!(families.family(group), &[CacheSet::EMPTY]);
        }
    }

    #[test]
    fn e_family_sizes_follow_the_union_chain() {
        let (_, table) = example_table();
        let families = build_e_sets(&table);
        let mut previous = CacheSet::EMPTY;
        for group in 0..table.num_groups() {
            let current = families.cumulative(group);
            assert!(previous.is_subset_of(current));
            let free = table.caches() - current.len();
            assert_eq!(families.family(group).len(), 1 << free);
            previous = current;
        }
    }

    #[test]
    fn e_family_full_access_degree() {
        let params = SystemParams::new(3, 3, 3, 2, 1.0, 8).unwrap();
        let table = canonicalize_profile(&[(CacheSet::full(3), 2)], &params).unwrap();
        let families = build_e_sets(&table);
        assert_eq!(families.cumulative(0), CacheSet::full(3));
        assert_eq!(families.family(0), &[CacheSet::EMPTY]);
    }

    #[test]
    fn independent_set_atoms_in_reference_order() {
        let (params, table) = example_table();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let y = construct_independent_set(&table, &demands).unwrap();
        assert_eq!(y.len(), 17);
        // Group 1 leads with both its users on the largest subfile index.
        assert_eq!(
            y.atoms()[0],
            Atom {
                group: 0,
                slot: 0,
                file: 0,
                mask: set(&[3, 4])
            }
        );
        assert_eq!(
            y.atoms()[1],
            Atom {
                group: 0,
                slot: 1,
                file: 1,
                mask: set(&[3, 4])
            }
        );
        // Last five atoms: empty subfile index of the singleton groups.
        let tail: Vec<usize> = y.atoms()[12..].iter().map(|a| a.file).collect();
        assert_eq!(tail, vec![4, 5, 6, 7, 8]);

        let poly = y.alpha_polynomial();
        assert_eq!(poly.coefficient(0, 4), 9);
        assert_eq!(poly.coefficient(1, 3), 6);
        assert_eq!(poly.coefficient(2, 2), 2);
        // γ = 0 leaves only the nine empty-index atoms, one file each.
        assert!((poly.eval_total(0.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn independent_set_requires_distinct_demands() {
        let (params, table) = example_table();
        let demands =
            DemandVector::new(vec![0, 0, 1, 1, 2, 2, 3, 3, 4], &table, &params).unwrap();
        assert!(matches!(
            construct_independent_set(&table, &demands).unwrap_err(),
            Error::RequiresDistinctDemands
        ));
    }

    #[test]
    fn atom_independence_holds_for_construction() {
        let (params, table) = example_table();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let y = construct_independent_set(&table, &demands).unwrap();
        assert!(check_atom_independence(
            y.atoms(),
            &table,
            IndependenceMode::Exhaustive
        ));
    }

    #[test]
    fn adversarial_atom_is_rejected() {
        // A bit from subfile {1,2} sits inside group 1's caches; any
        // subset containing that atom fails at the first receiver.
        let (params, table) = example_table();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let mut y = construct_independent_set(&table, &demands).unwrap();
        y.push_atom(Atom {
            group: 0,
            slot: 0,
            file: 0,
            mask: set(&[1, 2]),
        });
        assert!(!check_atom_independence(
            y.atoms(),
            &table,
            IndependenceMode::Exhaustive
        ));
        // Deterministic under sampling too: the singleton subset is as
        // likely as any, but the exhaustive result is what certifies.
        let state = decentralized_prefetch(&params, 3);
        let instance = IndexCodingInstance::build(&state, &table, &demands).unwrap();
        assert_eq!(
            check_generalized_independence(&y, &instance, IndependenceMode::Exhaustive).unwrap(),
            false
        );
    }

    #[test]
    fn instance_mismatch_is_an_error() {
        let (params, table) = example_table();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let state = decentralized_prefetch(&params, 3);
        let instance = IndexCodingInstance::build(&state, &table, &demands).unwrap();
        let mut y = construct_independent_set(&table, &demands).unwrap();
        y.push_atom(Atom {
            group: 0,
            slot: 0,
            file: 3, // not what u1(1) demands
            mask: CacheSet::EMPTY,
        });
        assert!(matches!(
            check_generalized_independence(&y, &instance, IndependenceMode::Exhaustive),
            Err(Error::InstanceMismatch(_))
        ));
    }

    #[test]
    fn tiny_instance_passes_bit_level_exhaustion() {
        let params = SystemParams::new(2, 1, 2, 2, 1.0, 4).unwrap();
        let table = canonicalize_profile(&[(set(&[1]), 1), (set(&[2]), 1)], &params).unwrap();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let state = decentralized_prefetch(&params, 11);
        let instance = IndexCodingInstance::build(&state, &table, &demands).unwrap();
        let y = construct_independent_set(&table, &demands).unwrap();
        assert!(y.alpha_count(&state) <= 16);
        assert!(
            check_generalized_independence(&y, &instance, IndependenceMode::Exhaustive).unwrap()
        );
    }

    #[test]
    fn instance_shape_and_side_information() {
        let params = SystemParams::new(2, 1, 2, 2, 1.0, 4).unwrap();
        let table = canonicalize_profile(&[(set(&[1]), 1), (set(&[2]), 1)], &params).unwrap();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let state = decentralized_prefetch(&params, 21);
        let instance = IndexCodingInstance::build(&state, &table, &demands).unwrap();
        assert_eq!(instance.message_count(), 8);
        assert!(instance.receiver_count() <= 8);
        for user in table.users() {
            let file = instance.demanded_file(user);
            for pos in instance.missing_positions(user) {
                assert!(!instance.side_info_contains(user.group, file, pos));
            }
        }
    }

    #[test]
    fn receivers_vanish_under_full_caches() {
        let params = SystemParams::new(2, 1, 2, 2, 2.0, 4).unwrap();
        let table = canonicalize_profile(&[(set(&[1]), 1), (set(&[2]), 1)], &params).unwrap();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let state = decentralized_prefetch(&params, 21);
        let instance = IndexCodingInstance::build(&state, &table, &demands).unwrap();
        assert_eq!(instance.receiver_count(), 0);
    }

    #[test]
    fn empty_caches_expose_no_side_information() {
        let params = SystemParams::new(2, 1, 2, 2, 0.0, 4).unwrap();
        let table = canonicalize_profile(&[(set(&[1]), 1), (set(&[2]), 1)], &params).unwrap();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let state = decentralized_prefetch(&params, 21);
        let instance = IndexCodingInstance::build(&state, &table, &demands).unwrap();
        assert_eq!(instance.receiver_count(), 8);
        for user in table.users() {
            for file in 0..2 {
                for pos in 0..4 {
                    assert!(!instance.side_info_contains(user.group, file, pos));
                }
            }
        }
    }

    #[test]
    fn sampled_alpha_count_concentrates() {
        let f = 10_000u64;
        let params = SystemParams::new(4, 2, 9, 9, 3.0, f).unwrap();
        let raw = vec![
            (set(&[1, 2]), 2),
            (set(&[1, 3]), 2),
            (set(&[1, 4]), 2),
            (set(&[2, 3]), 1),
            (set(&[2, 4]), 1),
            (set(&[3, 4]), 1),
        ];
        let table = canonicalize_profile(&raw, &params).unwrap();
        let demands = DemandVector::identity(&table, &params).unwrap();
        let y = construct_independent_set(&table, &demands).unwrap();
        let state = decentralized_prefetch(&params, 2025);
        let expected = y.alpha_polynomial().eval_total(params.gamma()) * f as f64;
        let observed = y.alpha_count(&state) as f64;
        // Sum of 17 binomial counts; bound the deviation by 3σ of the sum
        // treated as independent (conservative within a file partition).
        let sigma: f64 = y
            .atoms()
            .iter()
            .map(|a| {
                let p = crate::prefetch::expected_subfile_fraction(a.mask, &params);
                p * (1.0 - p) * f as f64
            })
            .sum::<f64>()
            .sqrt();
        assert!(
            (observed - expected).abs() <= 3.0 * sigma,
            "alpha {observed} vs expected {expected} (sigma {sigma})"
        );
    }
}
