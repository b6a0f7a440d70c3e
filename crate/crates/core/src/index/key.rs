use crate::error::{Error, Result};

const FIELD_BITS: u32 = 21;
const FIELD_MASK: u64 = (1 << FIELD_BITS) - 1;

/// Exact, collision-free packed cell id.
///
/// Voxel cells use three 21-bit two's-complement fields `x | y | z` (x in the
/// high bits); range pixels use `row * width + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewKey(pub u64);

impl ViewKey {
    /// Packable voxel components satisfy `|c| < VOXEL_LIMIT`.
    pub const VOXEL_LIMIT: i64 = 1 << 20;

    #[inline]
    pub fn voxel_in_range(cell: [i64; 3]) -> bool {
        cell.iter().all(|c| c.abs() < Self::VOXEL_LIMIT)
    }

    pub fn voxel(cell: [i32; 3]) -> Result<Self> {
        let wide = cell.map(i64::from);
        if !Self::voxel_in_range(wide) {
            return Err(Error::Range(format!(
                "voxel cell {cell:?} outside the packable range |c| < 2^20"
            )));
        }
        Ok(Self::voxel_unchecked(cell))
    }

    #[inline]
    pub(crate) fn voxel_unchecked(cell: [i32; 3]) -> Self {
        let f = |c: i32| (c as i64 as u64) & FIELD_MASK;
        ViewKey((f(cell[0]) << (2 * FIELD_BITS)) | (f(cell[1]) << FIELD_BITS) | f(cell[2]))
    }

    pub fn to_voxel(self) -> [i32; 3] {
        let field = |shift: u32| {
            let raw = (self.0 >> shift) & FIELD_MASK;
            // sign-extend from 21 bits
            (((raw << (64 - FIELD_BITS)) as i64) >> (64 - FIELD_BITS)) as i32
        };
        [field(2 * FIELD_BITS), field(FIELD_BITS), field(0)]
    }

    pub fn pixel(row: u32, col: u32, width: u32) -> Result<Self> {
        if col >= width {
            return Err(Error::Range(format!("pixel column {col} outside image width {width}")));
        }
        Ok(ViewKey(row as u64 * width as u64 + col as u64))
    }

    pub fn to_pixel(self, width: u32) -> (u32, u32) {
        ((self.0 / width as u64) as u32, (self.0 % width as u64) as u32)
    }
}
