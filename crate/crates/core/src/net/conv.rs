//! Single-kernel 5×5 dilated convolution on 32×32 maps with zero padding.
//!
//! `out[i,j] = bias + Σ_{u,v} K[u,v] · in[i + d(u-2), j + d(v-2)]`, taps that
//! fall outside the map read zero, so every stage keeps 1024 features.

use crate::SIDE;

pub const KERNEL: usize = 5;
pub const TAPS: usize = KERNEL * KERNEL;

/// Receptive field span of a dilated 5×5 kernel.
pub fn receptive_span(dilation: usize) -> usize {
    dilation * (KERNEL - 1) + 1
}

/// Row/column ranges of output pixels whose tap at offset `off` is in bounds.
#[inline]
fn valid_range(off: isize) -> std::ops::Range<usize> {
    let lo = (-off).max(0) as usize;
    let hi = (SIDE as isize - off).clamp(0, SIDE as isize) as usize;
    lo..hi.max(lo)
}

#[inline]
fn tap_offsets(dilation: usize) -> impl Iterator<Item = (usize, isize, isize)> {
    let d = dilation as isize;
    (0..TAPS).map(move |t| {
        let (u, v) = ((t / KERNEL) as isize, (t % KERNEL) as isize);
        (t, d * (u - 2), d * (v - 2))
    })
}

/// Pre-activation output of the convolution.
pub fn conv2d_dilated(input: &[f64], kernel: &[f64; TAPS], bias: f64, dilation: usize) -> Vec<f64> {
    debug_assert_eq!(input.len(), SIDE * SIDE);
    let mut out = vec![bias; SIDE * SIDE];
    for (t, dr, dc) in tap_offsets(dilation) {
        let k = kernel[t];
        if k == 0.0 {
            continue;
        }
        let cols = valid_range(dc);
        for i in valid_range(dr) {
            let src = ((i as isize + dr) as usize) * SIDE;
            let o = &mut out[i * SIDE + cols.start..i * SIDE + cols.end];
            let s = &input[(src as isize + cols.start as isize + dc) as usize..][..cols.len()];
            for (o, &s) in o.iter_mut().zip(s) {
                *o += k * s;
            }
        }
    }
    out
}

/// Gradient of a scalar loss w.r.t. the kernel and bias, given `grad_out = dL/d(out)`.
pub fn conv_param_grad(input: &[f64], grad_out: &[f64], dilation: usize) -> ([f64; TAPS], f64) {
    let mut gk = [0.0; TAPS];
    for (t, dr, dc) in tap_offsets(dilation) {
        let cols = valid_range(dc);
        let mut acc = 0.0;
        for i in valid_range(dr) {
            let src = ((i as isize + dr) as usize) * SIDE;
            let g = &grad_out[i * SIDE + cols.start..i * SIDE + cols.end];
            let s = &input[(src as isize + cols.start as isize + dc) as usize..][..cols.len()];
            acc += g.iter().zip(s).map(|(g, s)| g * s).sum::<f64>();
        }
        gk[t] = acc;
    }
    (gk, grad_out.iter().sum())
}

/// Gradient w.r.t. the convolution input.
pub fn conv_input_grad(grad_out: &[f64], kernel: &[f64; TAPS], dilation: usize) -> Vec<f64> {
    let mut gin = vec![0.0; SIDE * SIDE];
    for (t, dr, dc) in tap_offsets(dilation) {
        let k = kernel[t];
        let cols = valid_range(dc);
        for i in valid_range(dr) {
            let dst = ((i as isize + dr) as usize) * SIDE;
            let g = &grad_out[i * SIDE + cols.start..i * SIDE + cols.end];
            let d = &mut gin[(dst as isize + cols.start as isize + dc) as usize..][..cols.len()];
            for (d, &g) in d.iter_mut().zip(g) {
                *d += k * g;
            }
        }
    }
    gin
}
