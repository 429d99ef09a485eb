use std::fmt;

use serde::{Deserialize, Serialize};

use super::{TensorError, VoxelCoord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvVariant {
    /// Outputs sit exactly on the input coordinates.
    Submanifold,
    /// Downsampling: an output exists if any input falls in its window.
    Generalized,
    /// Upsampling inverse of `Generalized`, restoring a saved coordinate set.
    Transposed,
}

impl fmt::Display for ConvVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConvVariant::Submanifold => "subm",
            ConvVariant::Generalized => "gconv",
            ConvVariant::Transposed => "tconv",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec", into = "RawKernelSpec")]
pub struct KernelSpec {
    size: u32,
    stride: u32,
    variant: ConvVariant,
}

#[derive(Serialize, Deserialize)]
struct RawKernelSpec {
    size: u32,
    stride: u32,
    variant: ConvVariant,
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = TensorError;
    fn try_from(r: RawKernelSpec) -> Result<Self, TensorError> {
        KernelSpec::new(r.size, r.stride, r.variant)
    }
}

impl From<KernelSpec> for RawKernelSpec {
    fn from(k: KernelSpec) -> Self {
        RawKernelSpec { size: k.size, stride: k.stride, variant: k.variant }
    }
}

impl KernelSpec {
    pub fn new(size: u32, stride: u32, variant: ConvVariant) -> Result<Self, TensorError> {
        if size == 0 || stride == 0 || size > 255 {
            return Err(TensorError::InvalidKernel { size, stride, variant });
        }
        if variant == ConvVariant::Submanifold && stride != 1 {
            return Err(TensorError::InvalidKernel { size, stride, variant });
        }
        Ok(Self { size, stride, variant })
    }

    /// `subm{k}`; panics on `k == 0`.
    pub fn subm(k: u32) -> Self {
        Self::new(k, 1, ConvVariant::Submanifold).expect("valid submanifold kernel")
    }

    pub fn generalized(k: u32, stride: u32) -> Self {
        Self::new(k, stride, ConvVariant::Generalized).expect("valid generalized kernel")
    }

    pub fn transposed(k: u32, stride: u32) -> Self {
        Self::new(k, stride, ConvVariant::Transposed).expect("valid transposed kernel")
    }

    pub fn size(&self) -> u32 {
        self.size
    }
    pub fn stride(&self) -> u32 {
        self.stride
    }
    pub fn variant(&self) -> ConvVariant {
        self.variant
    }

    pub fn volume(&self) -> usize {
        (self.size as usize).pow(3)
    }

    /// Smallest and largest per-axis offset component.
    pub fn offset_range(&self) -> (i32, i32) {
        let k = self.size as i32;
        if k % 2 == 1 {
            (-(k - 1) / 2, (k - 1) / 2)
        } else {
            (0, k - 1)
        }
    }

    /// Index of `(0,0,0)` in [`kernel_offsets`], when the kernel has a center.
    pub fn center_index(&self) -> Option<usize> {
        (self.size % 2 == 1).then(|| (self.volume() - 1) / 2)
    }

    /// Index of an offset in [`kernel_offsets`] order.
    pub fn offset_index(&self, o: KernelOffset) -> Option<usize> {
        let (lo, hi) = self.offset_range();
        let inr = |v: i32| v >= lo && v <= hi;
        if !(inr(o.dx) && inr(o.dy) && inr(o.dz)) {
            return None;
        }
        let k = self.size as usize;
        let (a, b, c) = ((o.dz - lo) as usize, (o.dy - lo) as usize, (o.dx - lo) as usize);
        Some((a * k + b) * k + c)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stride == 1 {
            write!(f, "{}{}", self.variant, self.size)
        } else {
            write!(f, "{}{}s{}", self.variant, self.size, self.stride)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KernelOffset {
    pub dx: i32,
    pub dy: i32,
    pub dz: i32,
}

impl KernelOffset {
    pub const CENTER: KernelOffset = KernelOffset { dx: 0, dy: 0, dz: 0 };

    pub const fn new(dx: i32, dy: i32, dz: i32) -> Self {
        Self { dx, dy, dz }
    }

    pub fn is_center(&self) -> bool {
        *self == Self::CENTER
    }

    /// First nonzero component of `(dz, dy, dx)` is positive.
    pub fn is_positive(&self) -> bool {
        (self.dz, self.dy, self.dx) > (0, 0, 0)
    }

    #[inline]
    pub fn apply(&self, c: VoxelCoord) -> VoxelCoord {
        c.offset(self.dx, self.dy, self.dz)
    }
}

impl std::ops::Neg for KernelOffset {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.dx, -self.dy, -self.dz)
    }
}

/// All `K³` offsets of a kernel in `(dz, dy, dx)` lexicographic order.
pub fn kernel_offsets(spec: &KernelSpec) -> Vec<KernelOffset> {
    let (lo, hi) = spec.offset_range();
    let mut out = Vec::with_capacity(spec.volume());
    for dz in lo..=hi {
        for dy in lo..=hi {
            for dx in lo..=hi {
                out.push(KernelOffset::new(dx, dy, dz));
            }
        }
    }
    out
}

/// The lexicographically positive half of a centered kernel, center excluded.
pub fn half_offsets(spec: &KernelSpec) -> Result<Vec<KernelOffset>, TensorError> {
    if spec.size.is_multiple_of(2) {
        return Err(TensorError::UnsupportedSymmetry { size: spec.size });
    }
    if spec.variant != ConvVariant::Submanifold {
        return Err(TensorError::UnsupportedVariant(spec.variant));
    }
    Ok(kernel_offsets(spec).into_iter().filter(KernelOffset::is_positive).collect())
}
