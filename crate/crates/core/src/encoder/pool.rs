use alloc::vec;
use alloc::vec::Vec;

use super::tensor::VolumeTensor;
use crate::error::{invalid, Error, Result};

/// Flat input index of each pooled maximum, plus the input dims it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolIndices {
    pub input_dims: [usize; 4],
    pub argmax: Vec<usize>,
}

/// 2x2x2 max-pool with stride 2. Ties resolve to the first voxel in z, y, x
/// scan order within the window.
pub fn maxpool3d_forward(input: &VolumeTensor) -> Result<(VolumeTensor, PoolIndices)> {
    let [c, d, h, w] = input.dims();
    if d % 2 != 0 || h % 2 != 0 || w % 2 != 0 {
        return Err(invalid!("max-pool needs even spatial dims, got {:?}", [d, h, w]));
    }
    let (od, oh, ow) = (d / 2, h / 2, w / 2);
    let src = input.data();
    let mut out = Vec::with_capacity(c * od * oh * ow);
    let mut argmax = Vec::with_capacity(c * od * oh * ow);
    for ch in 0..c {
        for z in 0..od {
            for y in 0..oh {
                for x in 0..ow {
                    let mut best_i = input.index(ch, 2 * z, 2 * y, 2 * x);
                    let mut best = src[best_i];
                    for dz in 0..2 {
                        for dy in 0..2 {
                            for dx in 0..2 {
                                let i = input.index(ch, 2 * z + dz, 2 * y + dy, 2 * x + dx);
                                if src[i] > best {
                                    best = src[i];
                                    best_i = i;
                                }
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_i);
                }
            }
        }
    }
    Ok((VolumeTensor::from_raw([c, od, oh, ow], out), PoolIndices { input_dims: input.dims(), argmax }))
}

/// Routes each upstream gradient to the voxel that won its window.
pub fn maxpool3d_backward(grad_out: &VolumeTensor, indices: &PoolIndices) -> Result<VolumeTensor> {
    if grad_out.data().len() != indices.argmax.len() {
        return Err(Error::Internal(alloc::format!(
            "pool backward: {} gradients for {} recorded windows",
            grad_out.data().len(),
            indices.argmax.len()
        )));
    }
    let len: usize = indices.input_dims.iter().product();
    let mut grad = vec![0.0; len];
    for (&i, &g) in indices.argmax.iter().zip(grad_out.data()) {
        if i >= len {
            return Err(Error::Internal(alloc::format!("pool index {i} outside input of {len} voxels")));
        }
        grad[i] += g;
    }
    Ok(VolumeTensor::from_raw(indices.input_dims, grad))
}
