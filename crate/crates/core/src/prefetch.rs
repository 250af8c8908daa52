//! Decentralized random prefetching at bit granularity.
//!
//! Every `(file, bit, cache)` triple is an independent Bernoulli(`γ`) draw
//! from a counter-indexed generator, so a placement is fully determined by
//! its seed and any single draw can be recomputed without stored per-bit
//! state. The draws partition each file's bits into subfiles `W^i_S`: bit
//! `p` of file `i` lands in the subfile indexed by the exact set `S` of
//! caches that sampled it.
//!
//! Subfiles store bit *positions*, never payload bytes; when delivery
//! needs bit values they are synthesized from `(file, position)` by
//! [`crate::delivery::bit_content`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::SystemParams;
use crate::rng::mix;
use crate::subsets::CacheSet;

/// A sampled placement: for each file, the partition of `[F]` into
/// subfiles keyed by cache subset. Immutable once built.
#[derive(Clone, Debug)]
pub struct PrefetchState {
    caches: u32,
    file_bits: u64,
    seed: u64,
    threshold: u128,
    files: Vec<BTreeMap<CacheSet, Vec<u64>>>,
}

/// Sample a placement. Deterministic in `(params, seed)`; files can be
/// resampled independently because draws are counter-indexed.
pub fn decentralized_prefetch(params: &SystemParams, seed: u64) -> PrefetchState {
    let threshold = params.gamma_threshold();
    let mut files = Vec::with_capacity(params.files as usize);
    for file in 0..params.files as usize {
        let mut partition: BTreeMap<CacheSet, Vec<u64>> = BTreeMap::new();
        for pos in 0..params.file_bits {
            let mask = sample_mask(params, threshold, seed, file, pos);
            partition.entry(mask).or_default().push(pos);
        }
        files.push(partition);
    }
    PrefetchState {
        caches: params.caches,
        file_bits: params.file_bits,
        seed,
        threshold,
        files,
    }
}

fn sample_mask(
    params: &SystemParams,
    threshold: u128,
    seed: u64,
    file: usize,
    pos: u64,
) -> CacheSet {
    let base = (file as u64 * params.file_bits + pos) * params.caches as u64;
    let mut mask = 0u32;
    for cache in 0..params.caches {
        if (mix(seed, base + cache as u64) as u128) < threshold {
            mask |= 1 << cache;
        }
    }
    CacheSet(mask)
}

/// Expected fraction of a file landing in subfile index `S`:
/// `γ^|S| (1-γ)^(c-|S|)`.
pub fn expected_subfile_fraction(mask: CacheSet, params: &SystemParams) -> f64 {
    let gamma = params.gamma();
    let s = mask.len() as i32;
    gamma.powi(s) * (1.0 - gamma).powi(params.caches as i32 - s)
}

impl PrefetchState {
    pub fn caches(&self) -> u32 {
        self.caches
    }

    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bit positions of file `file` stored in exactly the caches of `mask`.
    pub fn subfile(&self, file: usize, mask: CacheSet) -> &[u64] {
        self.files[file]
            .get(&mask)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn subfile_len(&self, file: usize, mask: CacheSet) -> u64 {
        self.subfile(file, mask).len() as u64
    }

    /// Occupied subfile indices of a file with their positions.
    pub fn partitions(&self, file: usize) -> impl Iterator<Item = (CacheSet, &[u64])> {
        self.files[file].iter().map(|(&m, v)| (m, v.as_slice()))
    }

    /// Recompute the subset a single bit was assigned to.
    pub fn mask_of(&self, file: usize, pos: u64) -> CacheSet {
        let base = (file as u64 * self.file_bits + pos) * self.caches as u64;
        let mut mask = 0u32;
        for cache in 0..self.caches {
            if (mix(self.seed, base + cache as u64) as u128) < self.threshold {
                mask |= 1 << cache;
            }
        }
        CacheSet(mask)
    }

    /// Exact number of bits held by one cache across all files.
    pub fn cache_load(&self, cache: u32) -> u64 {
        self.files
            .iter()
            .map(|partition| {
                partition
                    .iter()
                    .filter(|(mask, _)| mask.contains(cache))
                    .map(|(_, positions)| positions.len() as u64)
                    .sum::<u64>()
            })
            .sum()
    }

    /// Number of bits of `file` a user reading the caches in `access`
    /// finds locally: every subfile whose index intersects `access`.
    pub fn bits_available(&self, file: usize, access: CacheSet) -> u64 {
        self.files[file]
            .iter()
            .filter(|(mask, _)| mask.intersects(access))
            .map(|(_, positions)| positions.len() as u64)
            .sum()
    }

    /// Order-independent digest of the whole placement.
    pub fn checksum(&self) -> u64 {
        let mut acc = 0xcbf2_9ce4_8422_2325u64;
        for (file, partition) in self.files.iter().enumerate() {
            for (mask, positions) in partition {
                for &pos in positions {
                    let word =
                        (file as u64) << 48 ^ (mask.0 as u64) << 32 ^ pos;
                    acc = (acc ^ mix(word, 0)).wrapping_mul(0x1000_0000_01b3);
                }
            }
        }
        acc
    }

    /// Debug serialization: one line per occupied subfile, as
    /// `file=<1-based> mask=<indicator hex> bits=<run-length positions>`.
    /// Masks are ordered by descending indicator value within a file.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (file, partition) in self.files.iter().enumerate() {
            let mut masks: Vec<CacheSet> = partition.keys().copied().collect();
            masks.sort_by(|a, b| {
                b.indicator_value(self.caches)
                    .cmp(&a.indicator_value(self.caches))
            });
            for mask in masks {
                let _ = writeln!(
                    out,
                    "file={} mask={} bits={}",
                    file + 1,
                    mask.hex(self.caches),
                    run_length(&self.files[file][&mask]),
                );
            }
        }
        out
    }
}

fn run_length(positions: &[u64]) -> String {
    let mut runs: Vec<String> = Vec::new();
    let mut i = 0;
    while i < positions.len() {
        let start = positions[i];
        let mut end = start;
        while i + 1 < positions.len() && positions[i + 1] == end + 1 {
            i += 1;
            end = positions[i];
        }
        runs.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    runs.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::subsets_of;

    fn params(c: u32, m: f64, n: u32, f: u64) -> SystemParams {
        SystemParams::new(c, 1.min(c), n, 0, m, f).unwrap()
    }

    #[test]
    fn empty_caches_put_everything_in_the_empty_subfile() {
        let p = params(4, 0.0, 2, 64);
        let state = decentralized_prefetch(&p, 7);
        for file in 0..2 {
            assert_eq!(state.subfile_len(file, CacheSet::EMPTY), 64);
        }
        for cache in 1..=4 {
            assert_eq!(state.cache_load(cache), 0);
        }
    }

    #[test]
    fn full_caches_put_everything_in_the_full_subfile() {
        let p = params(4, 2.0, 2, 64);
        let state = decentralized_prefetch(&p, 7);
        for file in 0..2 {
            assert_eq!(state.subfile_len(file, CacheSet::full(4)), 64);
        }
        for cache in 1..=4 {
            assert_eq!(state.cache_load(cache), 2 * 64);
        }
    }

    #[test]
    fn subfiles_partition_every_file() {
        let p = params(3, 1.0, 2, 500);
        let state = decentralized_prefetch(&p, 99);
        for file in 0..2 {
            let mut seen = vec![false; 500];
            for (_, positions) in state.partitions(file) {
                for &pos in positions {
                    assert!(!seen[pos as usize], "position sampled twice");
                    seen[pos as usize] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn mask_of_matches_stored_partition() {
        let p = params(4, 1.5, 2, 200);
        let state = decentralized_prefetch(&p, 3);
        for file in 0..2 {
            for (mask, positions) in state.partitions(file) {
                for &pos in positions {
                    assert_eq!(state.mask_of(file, pos), mask);
                }
            }
        }
    }

    #[test]
    fn same_seed_reproduces_different_seed_diverges() {
        let p = params(4, 1.0, 2, 256);
        let a = decentralized_prefetch(&p, 11);
        let b = decentralized_prefetch(&p, 11);
        let c = decentralized_prefetch(&p, 12);
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
    }

    #[test]
    fn expected_fraction_examples() {
        let p = SystemParams::new(4, 2, 3, 0, 1.0, 8).unwrap(); // γ = 1/3
        let empty = expected_subfile_fraction(CacheSet::EMPTY, &p);
        assert!((empty - 16.0 / 81.0).abs() < 1e-12);
        let full = expected_subfile_fraction(CacheSet::full(4), &p);
        assert!((full - (1.0f64 / 3.0).powi(4)).abs() < 1e-12);
    }

    #[test]
    fn expected_fractions_sum_to_one() {
        for m in [0.0, 0.4, 1.0, 2.7, 3.0] {
            let p = SystemParams::new(4, 2, 3, 0, m, 8).unwrap();
            let total: f64 = subsets_of(CacheSet::full(4))
                .map(|s| expected_subfile_fraction(s, &p))
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "m={m}: sum {total}");
        }
    }

    #[test]
    fn sampled_fractions_concentrate_around_expectation() {
        // c=4, γ=1/3, F=1e5: each subfile within 3σ of its expectation.
        let f = 100_000u64;
        let p = SystemParams::new(4, 2, 3, 0, 1.0, f).unwrap();
        let state = decentralized_prefetch(&p, 2024);
        for mask in subsets_of(CacheSet::full(4)) {
            let expect = expected_subfile_fraction(mask, &p);
            let sigma = (expect * (1.0 - expect) / f as f64).sqrt();
            let observed = state.subfile_len(0, mask) as f64 / f as f64;
            assert!(
                (observed - expect).abs() <= 3.0 * sigma,
                "subfile {mask}: observed {observed}, expected {expect}"
            );
        }
    }

    #[test]
    fn cache_load_tracks_normalized_size() {
        // Σ_j load(j) bits per cache ≈ M·F within 5σ of the binomial.
        let f = 50_000u64;
        let n = 3u32;
        let p = SystemParams::new(4, 2, n, 0, 1.0, f).unwrap();
        let state = decentralized_prefetch(&p, 5);
        let expect = p.cache_size * f as f64;
        let sigma = (n as f64 * f as f64 * p.gamma() * (1.0 - p.gamma())).sqrt();
        for cache in 1..=4 {
            let load = state.cache_load(cache) as f64;
            assert!(
                (load - expect).abs() <= 5.0 * sigma,
                "cache {cache}: load {load}, expected {expect}"
            );
        }
    }

    #[test]
    fn run_length_encoding_compacts_runs() {
        assert_eq!(run_length(&[0, 1, 2, 5, 7, 8]), "0-2,5,7-8");
        assert_eq!(run_length(&[]), "");
        assert_eq!(run_length(&[3]), "3");
    }

    #[test]
    fn serialization_round_trips_by_eye() {
        let p = params(2, 1.0, 1, 8);
        let state = decentralized_prefetch(&p, 1);
        let text = state.to_text();
        assert!(text.lines().all(|l| l.starts_with("file=1 mask=0x")));
        let total: usize = text
            .lines()
            .map(|l| {
                let bits = l.rsplit('=').next().unwrap();
                if bits.is_empty() {
                    0
                } else {
                    bits.split(',')
                        .map(|run| match run.split_once('-') {
                            Some((a, b)) => {
                                b.parse::<usize>().unwrap() - a.parse::<usize>().unwrap() + 1
                            }
                            None => 1,
                        })
                        .sum()
                }
            })
            .sum();
        assert_eq!(total, 8);
    }
}
