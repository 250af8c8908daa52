//! Problem parameters, the canonical cache-subset table, and demand
//! vectors.
//!
//! The association between users and caches is described by a table with
//! one row per `r`-subset of `[c]`, ordered by non-increasing user count
//! `ℒ_i`; ties are broken by descending indicator value (cache 1 in the
//! most significant position). All downstream constructions — delivery
//! loop order, set families, rate formulas — index groups through this
//! ordering, so the table is the single source of truth for it.

use std::collections::HashMap;
use std::fmt;

use crate::subsets::{k_subsets, CacheSet};
use crate::{Error, Result};

/// Largest supported cache count; subset enumeration is exponential in `c`.
pub const MAX_CACHES: u32 = 20;

/// Scalar parameters of a caching problem instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Number of caches `c`.
    pub caches: u32,
    /// Cache access degree `r`: caches read by each user.
    pub access_degree: u32,
    /// Number of files `N`.
    pub files: u32,
    /// Number of users `K`.
    pub users: u32,
    /// Normalized cache size `M`, in `[0, N]`.
    pub cache_size: f64,
    /// File size `F` in bits; only simulation touches it.
    pub file_bits: u64,
    /// True when `N ≥ K`: the regime in which pairwise distinct demands
    /// (and the optimality statements that assume them) are available.
    pub distinct_demands_valid: bool,
}

impl SystemParams {
    pub fn new(
        caches: u32,
        access_degree: u32,
        files: u32,
        users: u32,
        cache_size: f64,
        file_bits: u64,
    ) -> Result<Self> {
        if caches == 0 || caches > MAX_CACHES {
            return Err(Error::InvalidParams(format!(
                "caches must be in [1, {MAX_CACHES}], got {caches}"
            )));
        }
        if access_degree == 0 || access_degree > caches {
            return Err(Error::InvalidParams(format!(
                "access degree must satisfy 1 <= r <= c, got r={access_degree}, c={caches}"
            )));
        }
        if files == 0 {
            return Err(Error::InvalidParams("file count must be positive".into()));
        }
        if !cache_size.is_finite() || cache_size < 0.0 || cache_size > files as f64 {
            return Err(Error::InvalidParams(format!(
                "cache size must lie in [0, {files}], got {cache_size}"
            )));
        }
        if file_bits == 0 {
            return Err(Error::InvalidParams("file size must be positive".into()));
        }
        if (files as u128) * (file_bits as u128) * (caches as u128) >= 1 << 63 {
            return Err(Error::InvalidParams(
                "N * F * c too large for position counters".into(),
            ));
        }
        Ok(Self {
            caches,
            access_degree,
            files,
            users,
            cache_size,
            file_bits,
            distinct_demands_valid: files >= users,
        })
    }

    /// Cache size normalized by the number of files, `γ = M / N`.
    pub fn gamma(&self) -> f64 {
        self.cache_size / self.files as f64
    }

    /// 64-bit fixed-point sampling threshold: a uniform `u64` draw below
    /// this value means "cached". Computed from the exact rational `M/N`
    /// when `M` is an integer, so seeded placements do not depend on
    /// platform float behaviour.
    pub(crate) fn gamma_threshold(&self) -> u128 {
        if self.cache_size.fract() == 0.0 {
            let m = self.cache_size as u128;
            (m << 64) / self.files as u128
        } else {
            let scaled = self.gamma() * (u64::MAX as f64 + 1.0);
            if scaled >= u64::MAX as f64 + 1.0 {
                1u128 << 64
            } else {
                scaled as u128
            }
        }
    }
}

/// One row of the canonical table: an `r`-subset of caches together with
/// the number of users attached to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupEntry {
    pub caches: CacheSet,
    pub user_count: u32,
}

/// A user label `(group, slot)`: the `slot`-th user attached to the
/// group's cache set. Both components are 0-based; [`fmt::Display`]
/// renders the 1-based `u<i>(<l>)` form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct UserId {
    pub group: usize,
    pub slot: usize,
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}({})", self.group + 1, self.slot + 1)
    }
}

/// The canonically ordered list of all `C(c, r)` cache subsets with their
/// user counts. Zero-count subsets are kept: sums over the table then
/// range over every index and vanishing terms drop out on their own.
#[derive(Clone, Debug)]
pub struct CacheSubsetTable {
    caches: u32,
    access_degree: u32,
    entries: Vec<GroupEntry>,
    index_of: HashMap<CacheSet, usize>,
    /// `offsets[i]` = number of users in groups before `i`; the final
    /// element equals `K`. Drives the row-major user flattening.
    offsets: Vec<u32>,
}

impl CacheSubsetTable {
    fn build(caches: u32, access_degree: u32, counts: &HashMap<CacheSet, u32>) -> Self {
        let mut entries: Vec<GroupEntry> = k_subsets(caches, access_degree)
            .into_iter()
            .map(|set| GroupEntry {
                caches: set,
                user_count: counts.get(&set).copied().unwrap_or(0),
            })
            .collect();
        entries.sort_by(|x, y| {
            y.user_count.cmp(&x.user_count).then(
                y.caches
                    .indicator_value(caches)
                    .cmp(&x.caches.indicator_value(caches)),
            )
        });
        let index_of = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.caches, i))
            .collect();
        let mut offsets = Vec::with_capacity(entries.len() + 1);
        let mut total = 0u32;
        for entry in &entries {
            offsets.push(total);
            total += entry.user_count;
        }
        offsets.push(total);
        Self {
            caches,
            access_degree,
            entries,
            index_of,
            offsets,
        }
    }

    pub fn caches(&self) -> u32 {
        self.caches
    }

    pub fn access_degree(&self) -> u32 {
        self.access_degree
    }

    pub fn num_groups(&self) -> usize {
        self.entries.len()
    }

    /// Total number of users, `K = Σ_i ℒ_i`.
    pub fn num_users(&self) -> u32 {
        *self.offsets.last().unwrap()
    }

    pub fn entries(&self) -> &[GroupEntry] {
        &self.entries
    }

    pub fn entry(&self, group: usize) -> &GroupEntry {
        &self.entries[group]
    }

    /// Canonical index of the given cache subset, if it is an `r`-subset.
    pub fn group_of(&self, set: CacheSet) -> Option<usize> {
        self.index_of.get(&set).copied()
    }

    /// The association profile `ℒ` in canonical order.
    pub fn profile(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.user_count).collect()
    }

    /// The `(subset, count)` map the table was built from.
    pub fn counts(&self) -> Vec<(CacheSet, u32)> {
        self.entries
            .iter()
            .map(|e| (e.caches, e.user_count))
            .collect()
    }

    /// Users in row-major order over the canonical table.
    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.entries.iter().enumerate().flat_map(|(group, e)| {
            (0..e.user_count as usize).map(move |slot| UserId { group, slot })
        })
    }

    /// Deterministic flattening of `(group, slot)` labels: row-major
    /// position over the canonical order.
    pub fn global_index(&self, user: UserId) -> usize {
        debug_assert!(user.group < self.entries.len());
        debug_assert!(user.slot < self.entries[user.group].user_count as usize);
        self.offsets[user.group] as usize + user.slot
    }

    pub fn caches_of(&self, user: UserId) -> CacheSet {
        self.entries[user.group].caches
    }
}

/// Build the canonical table from a raw `(subset → user count)` map.
/// Missing subsets default to zero users.
pub fn canonicalize_profile(
    raw: &[(CacheSet, u32)],
    params: &SystemParams,
) -> Result<CacheSubsetTable> {
    let c = params.caches;
    let r = params.access_degree;
    let full = CacheSet::full(c);
    let mut counts: HashMap<CacheSet, u32> = HashMap::new();
    for &(set, count) in raw {
        if set.len() != r || !set.is_subset_of(full) {
            return Err(Error::InvalidSubset {
                subset: set.to_string(),
                expected: r,
            });
        }
        if counts.insert(set, count).is_some() {
            return Err(Error::DuplicateSubset(set.to_string()));
        }
    }
    let total: u32 = counts.values().sum();
    if total != params.users {
        return Err(Error::ProfileUserMismatch {
            expected: params.users,
            actual: total,
        });
    }
    Ok(CacheSubsetTable::build(c, r, &counts))
}

/// The consecutive wrap-around association: user `i` reads caches
/// `i, i+1, ..., i+r-1` (mod `c`), one user per window. Requires `K = c`.
/// For `r = c` every window is the same full set and the counts accumulate
/// onto that single row.
pub fn cyclic_profile(params: &SystemParams) -> Result<CacheSubsetTable> {
    if params.users != params.caches {
        return Err(Error::CyclicRequiresKEqualsC {
            users: params.users,
            caches: params.caches,
        });
    }
    let c = params.caches;
    let r = params.access_degree;
    let mut counts: HashMap<CacheSet, u32> = HashMap::new();
    for start in 0..c {
        let members: Vec<u32> = (0..r).map(|t| (start + t) % c + 1).collect();
        *counts.entry(CacheSet::from_members(&members)).or_insert(0) += 1;
    }
    Ok(CacheSubsetTable::build(c, r, &counts))
}

/// Demanded file per user, indexed by the table's row-major user order.
/// File indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandVector {
    files: Vec<usize>,
}

impl DemandVector {
    /// Demands for every user, in row-major order.
    pub fn new(
        files: Vec<usize>,
        table: &CacheSubsetTable,
        params: &SystemParams,
    ) -> Result<Self> {
        if files.len() != table.num_users() as usize {
            return Err(Error::IncompleteDemandVector(format!(
                "{} demands for {} users",
                files.len(),
                table.num_users()
            )));
        }
        for (g, &d) in files.iter().enumerate() {
            if d >= params.files as usize {
                return Err(Error::InvalidParams(format!(
                    "demand {} of user {} exceeds file count {}",
                    d + 1,
                    g + 1,
                    params.files
                )));
            }
        }
        Ok(Self { files })
    }

    /// Demands that must additionally be pairwise distinct.
    pub fn new_distinct(
        files: Vec<usize>,
        table: &CacheSubsetTable,
        params: &SystemParams,
    ) -> Result<Self> {
        let demands = Self::new(files, table, params)?;
        if !demands.is_distinct() {
            return Err(Error::RequiresDistinctDemands);
        }
        Ok(demands)
    }

    /// The identity assignment `d_g = g`: user `g` wants file `g`.
    pub fn identity(table: &CacheSubsetTable, params: &SystemParams) -> Result<Self> {
        let k = table.num_users() as usize;
        Self::new_distinct((0..k).collect(), table, params)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn file_of_global(&self, global: usize) -> usize {
        self.files[global]
    }

    pub fn file_of(&self, user: UserId, table: &CacheSubsetTable) -> usize {
        self.files[table.global_index(user)]
    }

    pub fn files(&self) -> &[usize] {
        &self.files
    }

    pub fn is_distinct(&self) -> bool {
        let mut seen = self.files.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}
