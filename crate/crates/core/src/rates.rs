//! Exact rate analysis: the achievable per-user rate of the delivery
//! procedure, the index-coding lower bound, and the closed forms for the
//! regimes where the two coincide.
//!
//! Both rates are driven by set families over the canonical table. Every
//! cache subset `A` with `|A| ≥ r` is charged to the *first* group whose
//! caches it contains; the family `𝒜_i` collects the subsets charged to
//! group `i`, and the delivery loop makes `ℒ_i` transmissions of expected
//! size `γ^(|A|-r) (1-γ)^(c-|A|+r) F` for each. The lower bound runs over
//! the families `ℰ_i` built in [`crate::indexcoding`].

use crate::indexcoding::build_e_sets;
use crate::model::{CacheSubsetTable, SystemParams};
use crate::poly::RatePolynomial;
use crate::subsets::{sort_descending_indicator, subsets_of, CacheSet};

/// For each group `i`, the cache subsets of size at least `r` whose first
/// containing group is `i`. Families are ordered by descending indicator
/// value; together they partition all subsets of size `≥ r`.
#[derive(Clone, Debug)]
pub struct SetFamilyA {
    families: Vec<Vec<CacheSet>>,
}

impl SetFamilyA {
    pub fn family(&self, group: usize) -> &[CacheSet] {
        &self.families[group]
    }

    pub fn families(&self) -> &[Vec<CacheSet>] {
        &self.families
    }
}

/// Assign every subset `S` with `|S| ≥ r` to the first group whose caches
/// lie inside `S`.
pub fn build_a_sets(table: &CacheSubsetTable) -> SetFamilyA {
    let c = table.caches();
    let mut families = vec![Vec::new(); table.num_groups()];
    for subset in subsets_of(CacheSet::full(c)) {
        if subset.len() < table.access_degree() {
            continue;
        }
        let owner = table
            .entries()
            .iter()
            .position(|e| e.caches.is_subset_of(subset))
            .expect("every large enough subset contains some r-subset");
        families[owner].push(subset);
    }
    for family in &mut families {
        sort_descending_indicator(family, c);
    }
    SetFamilyA { families }
}

/// Achievable rate per user of the delivery procedure, as an exact
/// polynomial: `Σ_i ℒ_i Σ_k γ^(|A_(i,k)|-r) (1-γ)^(c-|A_(i,k)|+r) / K`.
pub fn rate_per_user(table: &CacheSubsetTable, params: &SystemParams) -> RatePolynomial {
    debug_assert_eq!(params.users, table.num_users());
    let c = table.caches();
    let r = table.access_degree();
    let families = build_a_sets(table);
    let mut poly = RatePolynomial::new(table.num_users());
    for (group, entry) in table.entries().iter().enumerate() {
        for subset in families.family(group) {
            let s = subset.len();
            poly.add_term(s - r, c - s + r, entry.user_count as i64);
        }
    }
    poly
}

/// Lower bound on the per-user rate of any linear delivery scheme:
/// `Σ_i ℒ_i Σ_k γ^|E_(i,k)| (1-γ)^(c-|E_(i,k)|) / K`.
pub fn lower_bound_per_user(table: &CacheSubsetTable, params: &SystemParams) -> RatePolynomial {
    debug_assert_eq!(params.users, table.num_users());
    let c = table.caches();
    let families = build_e_sets(table);
    let mut poly = RatePolynomial::new(table.num_users());
    for (group, entry) in table.entries().iter().enumerate() {
        for subset in families.family(group) {
            let e = subset.len();
            poly.add_term(e, c - e, entry.user_count as i64);
        }
    }
    poly
}

/// Total rate of the shared-caching regime `r = 1`: `Σ_i ℒ_i (1-γ)^i`.
/// Divide by `K` (the recorded normalization) for the per-user value.
pub fn shared_caching_rate(
    table: &CacheSubsetTable,
    params: &SystemParams,
) -> crate::Result<RatePolynomial> {
    if table.access_degree() != 1 {
        return Err(crate::Error::WrongAccessDegree(table.access_degree()));
    }
    debug_assert_eq!(params.users, table.num_users());
    let mut poly = RatePolynomial::new(table.num_users());
    for (i, entry) in table.entries().iter().enumerate() {
        poly.add_term(0, i as u32 + 1, entry.user_count as i64);
    }
    Ok(poly)
}

/// Closed-form lower bound for the consecutive wrap-around association
/// with `K = c`:
/// `[Σ_{k=1}^{K-r} (1-γ)^(k+r-1) + r (1-γ)^K] / K`.
pub fn cyclic_lower_bound(params: &SystemParams) -> crate::Result<RatePolynomial> {
    if params.users != params.caches {
        return Err(crate::Error::CyclicRequiresKEqualsC {
            users: params.users,
            caches: params.caches,
        });
    }
    let k = params.users;
    let r = params.access_degree;
    let mut poly = RatePolynomial::new(k);
    for term in 1..=k.saturating_sub(r) {
        poly.add_term(0, term + r - 1, 1);
    }
    poly.add_term(0, k, r as i64);
    Ok(poly)
}

/// Closed form of the optimal per-user rate where the achievable rate and
/// the lower bound provably coincide: `r = c`, `r = c - 1`, or `r = 1`.
/// Returns `None` outside those regimes.
pub fn closed_form_optimal(
    table: &CacheSubsetTable,
    params: &SystemParams,
) -> Option<RatePolynomial> {
    debug_assert_eq!(params.users, table.num_users());
    let c = table.caches();
    let r = table.access_degree();
    let k = table.num_users();
    let profile = table.profile();
    let mut poly = RatePolynomial::new(k);
    if r == c {
        // Single group: ℒ_1 transmissions of the empty subfile index.
        poly.add_term(0, c, profile[0] as i64);
        Some(poly)
    } else if r == c - 1 {
        // ℒ_1 (1-γ)^(c-1) + Σ_{i≥2} ℒ_i (1-γ)^c. The leading group's two
        // charged subsets, [c] and 𝔠_1, collapse to (1-γ)^(c-1) because
        // γ(1-γ)^(c-1) + (1-γ)^c = (1-γ)^(c-1).
        poly.add_term(0, c - 1, profile[0] as i64);
        poly.add_term(0, c, (k - profile[0]) as i64);
        Some(poly)
    } else if r == 1 {
        for (i, count) in profile.iter().enumerate() {
            poly.add_term(0, i as u32 + 1, *count as i64);
        }
        Some(poly)
    } else {
        None
    }
}

/// One evaluation point of the rate/lower-bound comparison.
#[derive(Clone, Copy, Debug)]
pub struct GapPoint {
    pub gamma: f64,
    pub rate: f64,
    pub lower_bound: f64,
    pub gap: f64,
}

/// Pointwise per-user rate, lower bound, and their gap over a `γ` grid.
pub fn optimality_gap(
    table: &CacheSubsetTable,
    params: &SystemParams,
    gamma_grid: &[f64],
) -> Vec<GapPoint> {
    let rate = rate_per_user(table, params);
    let bound = lower_bound_per_user(table, params);
    gamma_grid
        .iter()
        .map(|&gamma| {
            let r = rate.eval(gamma);
            let lb = bound.eval(gamma);
            GapPoint {
                gamma,
                rate: r,
                lower_bound: lb,
                gap: r - lb,
            }
        })
        .collect()
}
