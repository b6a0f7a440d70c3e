//! Multi-view representation indexing.
//!
//! A view (voxel grid or range image) is indexed by projecting every point to
//! an integer cell, packing the cell into a [`ViewKey`], and grouping point
//! indices into [`Buckets`] keyed exactly by that packed value. Bucket `j`
//! holds the point set `K_X(j)` that propagation averages over.

mod key;
mod range;
mod voxel;

use std::collections::HashMap;

pub use key::ViewKey;
pub use range::{spherical_project, RangeIndex, RangeParams};
pub use voxel::{voxelize, voxelize_positions, VoxelIndex};

/// Marks "no bucket" in dense point/pixel lookup tables.
pub const NO_BUCKET: u32 = u32::MAX;

/// Point-index buckets in first-occurrence order, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Buckets {
    keys: Vec<ViewKey>,
    offsets: Vec<u32>,
    members: Vec<u32>,
    point_bucket: Vec<u32>,
    lookup: HashMap<ViewKey, u32>,
}

impl Buckets {
    /// Groups points `0..n` by key. `None` keys are left out of every bucket.
    pub(crate) fn build(n: usize, mut key_of: impl FnMut(usize) -> Option<ViewKey>) -> Self {
        let mut lookup: HashMap<ViewKey, u32> = HashMap::new();
        let mut keys = Vec::new();
        let mut counts: Vec<u32> = Vec::new();
        let mut point_bucket = vec![NO_BUCKET; n];
        for (i, slot) in point_bucket.iter_mut().enumerate() {
            let Some(key) = key_of(i) else { continue };
            let j = *lookup.entry(key).or_insert_with(|| {
                keys.push(key);
                counts.push(0);
                (keys.len() - 1) as u32
            });
            counts[j as usize] += 1;
            *slot = j;
        }

        let mut offsets = Vec::with_capacity(keys.len() + 1);
        let mut acc = 0u32;
        offsets.push(0);
        for &c in &counts {
            acc += c;
            offsets.push(acc);
        }
        let mut cursor: Vec<u32> = offsets[..keys.len()].to_vec();
        let mut members = vec![0u32; acc as usize];
        for (i, &j) in point_bucket.iter().enumerate() {
            if j != NO_BUCKET {
                let slot = &mut cursor[j as usize];
                members[*slot as usize] = i as u32;
                *slot += 1;
            }
        }
        Self {
            keys,
            offsets,
            members,
            point_bucket,
            lookup,
        }
    }

    /// Number of occupied view elements `M`.
    #[inline]
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Number of points the index was built over, bucketed or not.
    #[inline]
    pub fn num_points(&self) -> usize {
        self.point_bucket.len()
    }

    /// Number of points that landed in some bucket.
    #[inline]
    pub fn num_indexed(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn keys(&self) -> &[ViewKey] {
        &self.keys
    }

    /// Point indices of bucket `j`, ascending.
    #[inline]
    pub fn bucket(&self, j: usize) -> &[u32] {
        &self.members[self.offsets[j] as usize..self.offsets[j + 1] as usize]
    }

    #[inline]
    pub fn bucket_len(&self, j: usize) -> usize {
        (self.offsets[j + 1] - self.offsets[j]) as usize
    }

    /// Bucket holding point `i`, if any.
    #[inline]
    pub fn bucket_of_point(&self, i: usize) -> Option<usize> {
        match self.point_bucket[i] {
            NO_BUCKET => None,
            j => Some(j as usize),
        }
    }

    #[inline]
    pub fn bucket_of_key(&self, key: ViewKey) -> Option<usize> {
        self.lookup.get(&key).map(|&j| j as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ViewKey, &[u32])> + '_ {
        self.keys.iter().enumerate().map(move |(j, &k)| (k, self.bucket(j)))
    }
}

/// Anything that groups a cloud's points into view buckets.
pub trait ViewIndex {
    fn buckets(&self) -> &Buckets;
}

impl ViewIndex for Buckets {
    fn buckets(&self) -> &Buckets {
        self
    }
}

/// Occupancy and crowding of an index's buckets, a proxy for quantization loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionStats {
    /// Occupied voxels or pixels.
    pub occupied: usize,
    /// Points that landed in some bucket.
    pub points: usize,
    pub mean_per_bucket: f64,
    pub max_per_bucket: usize,
    /// Fraction of buckets holding two or more points.
    pub multi_fraction: f64,
}

pub fn collision_stats(idx: &impl ViewIndex) -> CollisionStats {
    let b = idx.buckets();
    let occupied = b.len();
    let mut max = 0;
    let mut multi = 0;
    for j in 0..occupied {
        let len = b.bucket_len(j);
        max = max.max(len);
        if len > 1 {
            multi += 1;
        }
    }
    let (mean, frac) = if occupied == 0 {
        (0.0, 0.0)
    } else {
        (b.num_indexed() as f64 / occupied as f64, multi as f64 / occupied as f64)
    };
    CollisionStats {
        occupied,
        points: b.num_indexed(),
        mean_per_bucket: mean,
        max_per_bucket: max,
        multi_fraction: frac,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buckets_keep_first_occurrence_order() {
        let keys = [5u64, 3, 5, 9, 3, 5];
        let b = Buckets::build(keys.len(), |i| Some(ViewKey(keys[i])));
        assert_eq!(b.keys(), &[ViewKey(5), ViewKey(3), ViewKey(9)]);
        assert_eq!(b.bucket(0), &[0, 2, 5]);
        assert_eq!(b.bucket(1), &[1, 4]);
        assert_eq!(b.bucket(2), &[3]);
        assert_eq!(b.bucket_of_point(4), Some(1));
        assert_eq!(b.bucket_of_key(ViewKey(9)), Some(2));
        assert_eq!(b.bucket_of_key(ViewKey(1)), None);
    }

    #[test]
    fn unkeyed_points_are_skipped() {
        let b = Buckets::build(4, |i| (i % 2 == 0).then_some(ViewKey(0)));
        assert_eq!(b.len(), 1);
        assert_eq!(b.num_points(), 4);
        assert_eq!(b.num_indexed(), 2);
        assert_eq!(b.bucket_of_point(1), None);
    }

    #[test]
    fn stats_single_and_shared() {
        let one = Buckets::build(1, |_| Some(ViewKey(0)));
        let s = collision_stats(&one);
        assert_eq!((s.occupied, s.max_per_bucket), (1, 1));
        assert_eq!((s.mean_per_bucket, s.multi_fraction), (1.0, 0.0));

        let two = Buckets::build(2, |_| Some(ViewKey(0)));
        let s = collision_stats(&two);
        assert_eq!((s.occupied, s.max_per_bucket), (1, 2));
        assert_eq!((s.mean_per_bucket, s.multi_fraction), (2.0, 1.0));

        let none = Buckets::build(0, |_| None);
        let s = collision_stats(&none);
        assert_eq!((s.occupied, s.points, s.max_per_bucket), (0, 0, 0));
    }
}
