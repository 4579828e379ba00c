use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Dense `(channels, depth, height, width)` array, channel-major then
/// z, y, x with x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTensor {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl VolumeTensor {
    pub fn new(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if dims.contains(&0) {
            return Err(invalid!("tensor dimensions must be positive, got {dims:?}"));
        }
        if data.len() != len {
            return Err(invalid!("tensor {dims:?} needs {len} values, got {}", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("tensor contains non-finite values"));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        Self { dims, data: vec![0.0; dims.iter().product()] }
    }

    pub fn filled(dims: [usize; 4], value: f64) -> Self {
        Self { dims, data: vec![value; dims.iter().product()] }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.dims[0]
    }

    pub fn spatial(&self) -> [usize; 3] {
        [self.dims[1], self.dims[2], self.dims[3]]
    }

    pub fn voxels(&self) -> usize {
        self.dims[1] * self.dims[2] * self.dims[3]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let v = self.voxels();
        &self.data[c * v..(c + 1) * v]
    }

    pub fn index(&self, c: usize, z: usize, y: usize, x: usize) -> usize {
        ((c * self.dims[1] + z) * self.dims[2] + y) * self.dims[3] + x
    }

    pub fn get(&self, c: usize, z: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(c, z, y, x)]
    }

    /// Skips the finiteness scan; callers guarantee finite data and a matching length.
    pub(crate) fn from_raw(dims: [usize; 4], data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self { dims, data }
    }
}
