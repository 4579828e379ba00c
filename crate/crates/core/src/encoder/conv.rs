use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::VolumeTensor;
use crate::error::{invalid, Result};
use crate::rng::DetRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding of `(k - 1) / 2`, output edge equals input edge. Needs odd `k`.
    Same,
    /// No padding, output edge is `input - k + 1`.
    Valid,
}

/// Stride-1 3D convolution (cross-correlation). Weights are laid out
/// `(out_ch, in_ch, k, k, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv3dLayer {
    out_ch: usize,
    in_ch: usize,
    kernel: usize,
    padding: Padding,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv3dGrads {
    pub input: Option<VolumeTensor>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv3dLayer {
    pub fn new(
        out_ch: usize,
        in_ch: usize,
        kernel: usize,
        padding: Padding,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if out_ch == 0 || in_ch == 0 || kernel == 0 {
            return Err(invalid!("conv layer dimensions must be positive"));
        }
        if padding == Padding::Same && kernel.is_multiple_of(2) {
            return Err(invalid!("same-padded convolution needs an odd kernel, got {kernel}"));
        }
        if weight.len() != out_ch * in_ch * kernel.pow(3) || bias.len() != out_ch {
            return Err(invalid!(
                "conv weights {}x{}x{k}^3 / bias {out_ch} do not match {} / {}",
                out_ch,
                in_ch,
                weight.len(),
                bias.len(),
                k = kernel
            ));
        }
        if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(invalid!("conv parameters must be finite"));
        }
        Ok(Self { out_ch, in_ch, kernel, padding, weight, bias })
    }

    pub fn zeros(out_ch: usize, in_ch: usize, kernel: usize, padding: Padding) -> Result<Self> {
        Self::new(out_ch, in_ch, kernel, padding, vec![0.0; out_ch * in_ch * kernel.pow(3)], vec![0.0; out_ch])
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))` with fans `ch * k^3`; zero bias.
    pub fn glorot(out_ch: usize, in_ch: usize, kernel: usize, padding: Padding, rng: &mut DetRng) -> Result<Self> {
        let mut layer = Self::zeros(out_ch, in_ch, kernel, padding)?;
        let k3 = kernel.pow(3) as f64;
        let bound = libm::sqrt(6.0 / ((in_ch as f64 + out_ch as f64) * k3));
        for w in &mut layer.weight {
            *w = rng.random_range(-bound..bound);
        }
        Ok(layer)
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    fn pad(&self) -> usize {
        match self.padding {
            Padding::Same => (self.kernel - 1) / 2,
            Padding::Valid => 0,
        }
    }

    /// Output spatial dims for an input of spatial dims `dims`.
    pub fn output_spatial(&self, dims: [usize; 3]) -> Result<[usize; 3]> {
        let p = self.pad();
        let mut out = [0; 3];
        for (o, &d) in out.iter_mut().zip(&dims) {
            if d + 2 * p < self.kernel {
                return Err(invalid!("input edge {d} smaller than kernel {}", self.kernel));
            }
            *o = d + 2 * p - self.kernel + 1;
        }
        Ok(out)
    }
}

/// Unfolds `input` into a `(in_ch * k^3, out_voxels)` row-major matrix.
fn im2col(input: &VolumeTensor, k: usize, pad: usize, out: [usize; 3]) -> Vec<f64> {
    let [c_in, d, h, w] = input.dims();
    let n_out = out[0] * out[1] * out[2];
    let mut col = vec![0.0; c_in * k * k * k * n_out];
    let src = input.data();
    let mut row = 0;
    for c in 0..c_in {
        for kz in 0..k {
            for ky in 0..k {
                for kx in 0..k {
                    let dst = &mut col[row * n_out..(row + 1) * n_out];
                    for oz in 0..out[0] {
                        let iz = oz + kz;
                        if iz < pad || iz - pad >= d {
                            continue;
                        }
                        let iz = iz - pad;
                        for oy in 0..out[1] {
                            let iy = oy + ky;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let iy = iy - pad;
                            let base_src = ((c * d + iz) * h + iy) * w;
                            let base_dst = (oz * out[1] + oy) * out[2];
                            for ox in 0..out[2] {
                                let ix = ox + kx;
                                if ix < pad || ix - pad >= w {
                                    continue;
                                }
                                dst[base_dst + ox] = src[base_src + ix - pad];
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatter-adds the columns back onto an input-shaped tensor.
fn col2im(col: &[f64], dims: [usize; 4], k: usize, pad: usize, out: [usize; 3]) -> Vec<f64> {
    let [c_in, d, h, w] = dims;
    let n_out = out[0] * out[1] * out[2];
    let mut img = vec![0.0; c_in * d * h * w];
    let mut row = 0;
    for c in 0..c_in {
        for kz in 0..k {
            for ky in 0..k {
                for kx in 0..k {
                    let srow = &col[row * n_out..(row + 1) * n_out];
                    for oz in 0..out[0] {
                        let iz = oz + kz;
                        if iz < pad || iz - pad >= d {
                            continue;
                        }
                        let iz = iz - pad;
                        for oy in 0..out[1] {
                            let iy = oy + ky;
                            if iy < pad || iy - pad >= h {
                                continue;
                            }
                            let iy = iy - pad;
                            let base_img = ((c * d + iz) * h + iy) * w;
                            let base_col = (oz * out[1] + oy) * out[2];
                            for ox in 0..out[2] {
                                let ix = ox + kx;
                                if ix < pad || ix - pad >= w {
                                    continue;
                                }
                                img[base_img + ix - pad] += srow[base_col + ox];
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
    img
}

/// `c (m x n) = a (m x k) * b (k x n)` with explicit strides for transposes.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    debug_assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    // SAFETY: the asserts above bound every index the kernel touches, and `c`
    // does not alias `a` or `b` (distinct borrows).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn conv3d_forward(input: &VolumeTensor, layer: &Conv3dLayer) -> Result<VolumeTensor> {
    if input.channels() != layer.in_ch {
        return Err(invalid!("conv expects {} input channels, got {}", layer.in_ch, input.channels()));
    }
    let out = layer.output_spatial(input.spatial())?;
    let n_out = out[0] * out[1] * out[2];
    let rows = layer.in_ch * layer.kernel.pow(3);
    let col = im2col(input, layer.kernel, layer.pad(), out);
    let mut data = vec![0.0; layer.out_ch * n_out];
    gemm(layer.out_ch, rows, n_out, &layer.weight, rows, 1, &col, n_out, 1, &mut data);
    for (o, chunk) in data.chunks_mut(n_out).enumerate() {
        let b = layer.bias[o];
        for v in chunk {
            *v += b;
        }
    }
    Ok(VolumeTensor::from_raw([layer.out_ch, out[0], out[1], out[2]], data))
}

/// Gradients of [`conv3d_forward`] given the upstream gradient and the cached
/// forward input. The input gradient is skipped when `need_input` is false.
pub fn conv3d_backward(
    grad_out: &VolumeTensor,
    input: &VolumeTensor,
    layer: &Conv3dLayer,
    need_input: bool,
) -> Result<Conv3dGrads> {
    if input.channels() != layer.in_ch {
        return Err(invalid!("conv backward: input has {} channels, layer expects {}", input.channels(), layer.in_ch));
    }
    let out = layer.output_spatial(input.spatial())?;
    if grad_out.dims() != [layer.out_ch, out[0], out[1], out[2]] {
        return Err(invalid!(
            "conv backward: upstream gradient {:?} does not match output {:?}",
            grad_out.dims(),
            [layer.out_ch, out[0], out[1], out[2]]
        ));
    }
    let n_out = out[0] * out[1] * out[2];
    let rows = layer.in_ch * layer.kernel.pow(3);
    let col = im2col(input, layer.kernel, layer.pad(), out);
    let g = grad_out.data();

    let mut weight = vec![0.0; layer.out_ch * rows];
    // grad_w = grad_out (out_ch x n_out) * col^T (n_out x rows)
    gemm(layer.out_ch, n_out, rows, g, n_out, 1, &col, 1, n_out, &mut weight);

    let bias = g.chunks(n_out).map(|c| c.iter().sum()).collect();

    let input_grad = if need_input {
        let mut gcol = vec![0.0; rows * n_out];
        // grad_col = W^T (rows x out_ch) * grad_out (out_ch x n_out)
        gemm(rows, layer.out_ch, n_out, &layer.weight, 1, rows, g, n_out, 1, &mut gcol);
        let img = col2im(&gcol, input.dims(), layer.kernel, layer.pad(), out);
        Some(VolumeTensor::from_raw(input.dims(), img))
    } else {
        None
    };
    Ok(Conv3dGrads { input: input_grad, weight, bias })
}
