//! Arithmetic-operation accounting.
//!
//! Kernels that matter for complexity claims are generic over [`FlopCounter`];
//! the uncounted path uses [`NoFlops`], which compiles to nothing.

pub trait FlopCounter {
    fn add(&mut self, ops: u64);
}

/// Discards every count.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoFlops;

impl FlopCounter for NoFlops {
    #[inline(always)]
    fn add(&mut self, _ops: u64) {}
}

/// Running total of floating-point operations.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct FlopTally(pub u64);

impl FlopCounter for FlopTally {
    #[inline]
    fn add(&mut self, ops: u64) {
        self.0 += ops;
    }
}

/// Operations to project one complex entry onto the unit circle:
/// two squares, one add, one square root, two divisions.
pub const PROJECTION_FLOPS_PER_ENTRY: u64 = 6;
