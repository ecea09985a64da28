//! Binary Merkle tree with multi-proofs.
//!
//! Leaves hash as `H(0x00 ‖ leaf)`, interior nodes as `H(0x01 ‖ l ‖ r)`. At a
//! level of odd width the last node is paired with itself.

use super::{hash_parts, CryptoError, Digest};

const LEAF_TAG: &[u8] = &[0x00];
const NODE_TAG: &[u8] = &[0x01];

pub fn leaf_digest(leaf: &[u8]) -> Digest {
    hash_parts(&[LEAF_TAG, leaf])
}

fn node_digest(l: &Digest, r: &Digest) -> Digest {
    hash_parts(&[NODE_TAG, &l.0, &r.0])
}

fn next_level(level: &[Digest]) -> Vec<Digest> {
    level
        .chunks(2)
        .map(|p| node_digest(&p[0], p.get(1).unwrap_or(&p[0])))
        .collect()
}

pub fn merkle_root_from_digests(leaves: &[Digest]) -> Result<Digest, CryptoError> {
    if leaves.is_empty() {
        return Err(CryptoError::EmptyTree);
    }
    let mut level = leaves.to_vec();
    while level.len() > 1 {
        level = next_level(&level);
    }
    Ok(level[0])
}

pub fn merkle_root<L: AsRef<[u8]>>(leaves: &[L]) -> Result<Digest, CryptoError> {
    let digests: Vec<Digest> = leaves.iter().map(|l| leaf_digest(l.as_ref())).collect();
    merkle_root_from_digests(&digests)
}

/// Proof that a subset of leaves belongs to a tree of `leaf_count` leaves.
///
/// Canonical encoding: `leaf_count_be32 ‖ |indices|_be32 ‖ indices_be32… ‖
/// |siblings|_be32 ‖ siblings…`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleMultiProof {
    pub leaf_count: u32,
    /// Strictly ascending leaf positions.
    pub indices: Vec<u32>,
    /// Sibling digests in the order the verifier consumes them.
    pub siblings: Vec<Digest>,
}

impl MerkleMultiProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.indices.len() + 32 * self.siblings.len());
        out.extend_from_slice(&self.leaf_count.to_be_bytes());
        out.extend_from_slice(&(self.indices.len() as u32).to_be_bytes());
        for i in &self.indices {
            out.extend_from_slice(&i.to_be_bytes());
        }
        out.extend_from_slice(&(self.siblings.len() as u32).to_be_bytes());
        for s in &self.siblings {
            out.extend_from_slice(&s.0);
        }
        out
    }
}

/// Returns the leaf digests of `subset` together with a multi-proof.
///
/// `subset` must be non-empty, strictly ascending and in range.
pub fn merkle_member<L: AsRef<[u8]>>(
    subset: &[usize],
    leaves: &[L],
) -> Result<(Vec<Digest>, MerkleMultiProof), CryptoError> {
    if leaves.is_empty() {
        return Err(CryptoError::EmptyTree);
    }
    if subset.is_empty()
        || subset.windows(2).any(|w| w[0] >= w[1])
        || *subset.last().unwrap() >= leaves.len()
    {
        return Err(CryptoError::BadSubset);
    }
    let mut level: Vec<Digest> = leaves.iter().map(|l| leaf_digest(l.as_ref())).collect();
    let digests = subset.iter().map(|&i| level[i]).collect();
    let mut known: Vec<usize> = subset.to_vec();
    let mut siblings = Vec::new();
    while level.len() > 1 {
        let width = level.len();
        let mut parents = Vec::with_capacity(known.len());
        let mut i = 0;
        while i < known.len() {
            let pos = known[i];
            if pos.is_multiple_of(2) {
                if i + 1 < known.len() && known[i + 1] == pos + 1 {
                    i += 1;
                } else if pos + 1 < width {
                    siblings.push(level[pos + 1]);
                }
            } else {
                siblings.push(level[pos - 1]);
            }
            parents.push(pos / 2);
            i += 1;
        }
        known = parents;
        level = next_level(&level);
    }
    Ok((
        digests,
        MerkleMultiProof {
            leaf_count: leaves.len() as u32,
            indices: subset.iter().map(|&i| i as u32).collect(),
            siblings,
        },
    ))
}

/// Checks that `digests` sit at `proof.indices` in a tree with root `root`.
pub fn merkle_verify(digests: &[Digest], proof: &MerkleMultiProof, root: &Digest) -> bool {
    let n = proof.leaf_count as usize;
    if n == 0
        || digests.is_empty()
        || digests.len() != proof.indices.len()
        || proof.indices.windows(2).any(|w| w[0] >= w[1])
        || *proof.indices.last().unwrap() as usize >= n
    {
        return false;
    }
    let mut known: Vec<(usize, Digest)> = proof
        .indices
        .iter()
        .zip(digests)
        .map(|(&i, d)| (i as usize, *d))
        .collect();
    let mut sibs = proof.siblings.iter();
    let mut width = n;
    while width > 1 {
        let mut parents = Vec::with_capacity(known.len());
        let mut i = 0;
        while i < known.len() {
            let (pos, d) = known[i];
            let parent = if pos % 2 == 0 {
                if i + 1 < known.len() && known[i + 1].0 == pos + 1 {
                    i += 1;
                    node_digest(&d, &known[i].1)
                } else if pos + 1 < width {
                    match sibs.next() {
                        Some(s) => node_digest(&d, s),
                        None => return false,
                    }
                } else {
                    node_digest(&d, &d)
                }
            } else {
                match sibs.next() {
                    Some(s) => node_digest(s, &d),
                    None => return false,
                }
            };
            parents.push((pos / 2, parent));
            i += 1;
        }
        known = parents;
        width = width.div_ceil(2);
    }
    sibs.next().is_none() && known.len() == 1 && known[0].1 == *root
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaves(n: usize) -> Vec<Vec<u8>> {
        (0..n).map(|i| format!("leaf-{i}").into_bytes()).collect()
    }

    #[test]
    fn empty_tree_rejected() {
        let none: Vec<Vec<u8>> = vec![];
        assert_eq!(merkle_root(&none), Err(CryptoError::EmptyTree));
        assert!(merkle_member(&[0], &none).is_err());
    }

    #[test]
    fn single_leaf_root_is_leaf_digest() {
        let l = leaves(1);
        assert_eq!(merkle_root(&l).unwrap(), leaf_digest(&l[0]));
        let (d, p) = merkle_member(&[0], &l).unwrap();
        assert!(p.siblings.is_empty());
        assert!(merkle_verify(&d, &p, &merkle_root(&l).unwrap()));
    }

    #[test]
    fn odd_width_duplicates_last_node() {
        let l = leaves(3);
        let d: Vec<Digest> = l.iter().map(|x| leaf_digest(x)).collect();
        let left = node_digest(&d[0], &d[1]);
        let right = node_digest(&d[2], &d[2]);
        assert_eq!(merkle_root(&l).unwrap(), node_digest(&left, &right));
    }

    #[test]
    fn bad_subsets_rejected() {
        let l = leaves(4);
        assert_eq!(merkle_member(&[], &l).unwrap_err(), CryptoError::BadSubset);
        assert_eq!(merkle_member(&[1, 1], &l).unwrap_err(), CryptoError::BadSubset);
        assert_eq!(merkle_member(&[2, 1], &l).unwrap_err(), CryptoError::BadSubset);
        assert_eq!(merkle_member(&[4], &l).unwrap_err(), CryptoError::BadSubset);
    }

    #[test]
    fn every_subset_of_small_trees_verifies() {
        for n in 1..=9usize {
            let l = leaves(n);
            let root = merkle_root(&l).unwrap();
            for mask in 1u32..(1 << n) {
                let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let (d, p) = merkle_member(&subset, &l).unwrap();
                assert!(merkle_verify(&d, &p, &root), "n={n} subset={subset:?}");
            }
        }
    }

    #[test]
    fn full_subset_needs_no_siblings() {
        let l = leaves(7);
        let all: Vec<usize> = (0..7).collect();
        let (_, p) = merkle_member(&all, &l).unwrap();
        assert!(p.siblings.is_empty());
    }
}
