use crate::hash::HashFamily;
use crate::key::FlowKey;

/// A plain bloom filter whose bit positions come from consecutive members of
/// a caller-owned [`HashFamily`].
#[derive(Clone, Debug)]
pub struct BloomFilter {
    words: Vec<u64>,
    bits: usize,
    first_member: usize,
    members: usize,
    zeros: usize,
}

impl BloomFilter {
    /// `members` hash functions starting at family member `first_member`.
    pub fn new(bits: usize, first_member: usize, members: usize) -> Self {
        assert!(bits > 0 && members > 0 && first_member > 0);
        BloomFilter {
            words: vec![0; bits.div_ceil(64)],
            bits,
            first_member,
            members,
            zeros: bits,
        }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn zero_bits(&self) -> usize {
        self.zeros
    }

    pub fn hash_count(&self) -> usize {
        self.members
    }

    #[inline]
    fn test_bit(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    #[inline]
    fn set_bit(&mut self, i: usize) {
        let w = &mut self.words[i / 64];
        let mask = 1 << (i % 64);
        if *w & mask == 0 {
            *w |= mask;
            self.zeros -= 1;
        }
    }

    pub fn contains(&self, family: &HashFamily, key: &FlowKey) -> bool {
        (0..self.members).all(|j| self.test_bit(family.index(self.first_member + j, key, self.bits)))
    }

    /// Sets the key's bits; returns true when at least one was unset (a new flow).
    pub fn insert(&mut self, family: &HashFamily, key: &FlowKey) -> bool {
        let mut fresh = false;
        for j in 0..self.members {
            let i = family.index(self.first_member + j, key, self.bits);
            if !self.test_bit(i) {
                fresh = true;
                self.set_bit(i);
            }
        }
        fresh
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_then_contains() {
        let fam = HashFamily::new(3, 4).unwrap();
        let mut bf = BloomFilter::new(4096, 1, 4);
        let k = FlowKey::new(9, 8, 7, 6, 5);
        assert!(!bf.contains(&fam, &k));
        assert!(bf.insert(&fam, &k));
        assert!(bf.contains(&fam, &k));
        assert!(!bf.insert(&fam, &k));
        assert!(bf.zero_bits() >= 4092);
    }
}
