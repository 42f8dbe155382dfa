//! Seeded family of independent hash functions over [`FlowKey`]s.
//!
//! Every member is the same keyed 64-bit hash of the 13-byte big-endian key
//! serialization, keyed by a per-member seed derived from the family seed.
//! Bucket indices use multiply-shift range reduction (high bits); digests take
//! the low bits of member 1's raw output.

use crate::error::{Error, Result};
use crate::key::FlowKey;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reduces a 64-bit hash onto `[0, range)` by multiply-shift.
#[inline]
pub fn reduce(hash: u64, range: usize) -> usize {
    ((hash as u128 * range as u128) >> 64) as usize
}

/// A short fingerprint of a flow key used by HashFlow's ancillary table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub u32);

impl Digest {
    /// Truncates a raw member-1 hash to `width` bits.
    #[inline]
    pub fn from_hash(hash: u64, width: u32) -> Digest {
        debug_assert!((1..=32).contains(&width));
        Digest((hash & ((1u64 << width) - 1)) as u32)
    }
}

#[derive(Clone, Debug)]
pub struct HashFamily {
    seed: u64,
    member_seeds: Vec<u64>,
}

impl HashFamily {
    /// Builds members `1..=member_count`.
    pub fn new(seed: u64, member_count: usize) -> Result<Self> {
        if member_count == 0 {
            return Err(Error::invalid("hash family needs at least one member"));
        }
        let member_seeds = (1..=member_count as u64)
            .map(|m| mix64(seed ^ mix64(m.wrapping_mul(GOLDEN))))
            .collect();
        Ok(HashFamily { seed, member_seeds })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn member_count(&self) -> usize {
        self.member_seeds.len()
    }

    /// Raw 64-bit output of member `member` (1-based). Panics when out of range.
    #[inline]
    pub fn hash64(&self, member: usize, key: &FlowKey) -> u64 {
        let s = self.member_seeds[member - 1];
        let hi = ((key.src_addr as u64) << 32) | key.dst_addr as u64;
        let lo = ((key.src_port as u64) << 24) | ((key.dst_port as u64) << 8) | key.protocol as u64;
        mix64(mix64(s ^ hi).wrapping_add(GOLDEN) ^ lo)
    }

    /// Unchecked bucket index, for hot paths whose arguments are validated at construction.
    #[inline]
    pub fn index(&self, member: usize, key: &FlowKey, range: usize) -> usize {
        debug_assert!(range > 0);
        reduce(self.hash64(member, key), range)
    }

    /// Bucket index of `key` under `member`, in `[0, range)`.
    pub fn hash_at(&self, member: usize, key: &FlowKey, range: usize) -> Result<usize> {
        if member == 0 || member > self.member_count() {
            return Err(Error::invalid(format!(
                "hash member {member} outside 1..={}",
                self.member_count()
            )));
        }
        if range == 0 {
            return Err(Error::invalid("hash range must be at least 1"));
        }
        Ok(self.index(member, key, range))
    }

    /// `h_1(key) mod 2^digest_width`.
    pub fn digest_of(&self, key: &FlowKey, digest_width: u32) -> Result<Digest> {
        if !(1..=32).contains(&digest_width) {
            return Err(Error::invalid(format!(
                "digest width {digest_width} outside 1..=32"
            )));
        }
        Ok(Digest::from_hash(self.hash64(1, key), digest_width))
    }
}
