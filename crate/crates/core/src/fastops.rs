//! Fast orthonormal transforms: Walsh–Hadamard, FFT (radix-2 and
//! Bluestein) and the DCT-II/DCT-III pair built on it.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{cos, sin, sqrt};

#[inline]
pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// In-place orthonormal Walsh–Hadamard transform (Sylvester ordering).
///
/// Iterative butterflies, then a single scaling by n^{-1/2}.
pub fn fwht_in_place(x: &mut [f64]) -> Result<()> {
    let n = x.len();
    if !is_power_of_two(n) {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    let s = 1.0 / sqrt(n as f64);
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

pub fn fwht_normalized(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    fwht_in_place(&mut y)?;
    Ok(y)
}

/// Precomputed complex FFT of a fixed length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    kind: FftKind,
}

#[derive(Debug, Clone)]
enum FftKind {
    Radix2 {
        tw_re: Vec<f64>,
        tw_im: Vec<f64>,
        bitrev: Vec<usize>,
    },
    Bluestein {
        m: usize,
        chirp_re: Vec<f64>,
        chirp_im: Vec<f64>,
        kernel_re: Vec<f64>,
        kernel_im: Vec<f64>,
        inner: Box<FftPlan>,
    },
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        if n <= 1 || is_power_of_two(n) {
            let half = n / 2;
            let tw_re = (0..half).map(|k| cos(-2.0 * PI * k as f64 / n as f64)).collect();
            let tw_im = (0..half).map(|k| sin(-2.0 * PI * k as f64 / n as f64)).collect();
            let bits = n.trailing_zeros();
            let bitrev = (0..n)
                .map(|i| if n <= 1 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect();
            return Self {
                n,
                kind: FftKind::Radix2 {
                    tw_re,
                    tw_im,
                    bitrev,
                },
            };
        }
        let m = (2 * n - 1).next_power_of_two();
        let inner = Box::new(FftPlan::new(m));
        // w_k = exp(-iπ k²/n); k² is reduced mod 2n so the angle stays small.
        let two_n = 2 * n as u128;
        let angle = |k: usize| PI * ((k as u128 * k as u128) % two_n) as f64 / n as f64;
        let chirp_re: Vec<f64> = (0..n).map(|k| cos(angle(k))).collect();
        let chirp_im: Vec<f64> = (0..n).map(|k| -sin(angle(k))).collect();
        let mut kernel_re = vec![0.0; m];
        let mut kernel_im = vec![0.0; m];
        for k in 0..n {
            kernel_re[k] = chirp_re[k];
            kernel_im[k] = -chirp_im[k];
            if k > 0 {
                kernel_re[m - k] = chirp_re[k];
                kernel_im[m - k] = -chirp_im[k];
            }
        }
        inner.forward(&mut kernel_re, &mut kernel_im);
        Self {
            n,
            kind: FftKind::Bluestein {
                m,
                chirp_re,
                chirp_im,
                kernel_re,
                kernel_im,
                inner,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// X_k = Σ_j x_j e^{-2πi jk/n}, in place.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        debug_assert_eq!(re.len(), self.n);
        match &self.kind {
            FftKind::Radix2 {
                tw_re,
                tw_im,
                bitrev,
            } => {
                let n = self.n;
                for i in 0..n {
                    let j = bitrev[i];
                    if j > i {
                        re.swap(i, j);
                        im.swap(i, j);
                    }
                }
                let mut len = 2;
                while len <= n {
                    let half = len / 2;
                    let step = n / len;
                    for start in (0..n).step_by(len) {
                        for k in 0..half {
                            let (wr, wi) = (tw_re[k * step], tw_im[k * step]);
                            let a = start + k;
                            let b = a + half;
                            let tr = re[b] * wr - im[b] * wi;
                            let ti = re[b] * wi + im[b] * wr;
                            re[b] = re[a] - tr;
                            im[b] = im[a] - ti;
                            re[a] += tr;
                            im[a] += ti;
                        }
                    }
                    len *= 2;
                }
            }
            FftKind::Bluestein {
                m,
                chirp_re,
                chirp_im,
                kernel_re,
                kernel_im,
                inner,
            } => {
                let m = *m;
                let mut ar = vec![0.0; m];
                let mut ai = vec![0.0; m];
                for k in 0..self.n {
                    ar[k] = re[k] * chirp_re[k] - im[k] * chirp_im[k];
                    ai[k] = re[k] * chirp_im[k] + im[k] * chirp_re[k];
                }
                inner.forward(&mut ar, &mut ai);
                for k in 0..m {
                    let (xr, xi) = (ar[k], ai[k]);
                    ar[k] = xr * kernel_re[k] - xi * kernel_im[k];
                    ai[k] = xr * kernel_im[k] + xi * kernel_re[k];
                }
                inner.inverse(&mut ar, &mut ai);
                for k in 0..self.n {
                    re[k] = ar[k] * chirp_re[k] - ai[k] * chirp_im[k];
                    im[k] = ar[k] * chirp_im[k] + ai[k] * chirp_re[k];
                }
            }
        }
    }

    /// x_j = (1/n) Σ_k X_k e^{2πi jk/n}, in place.
    pub fn inverse(&self, re: &mut [f64], im: &mut [f64]) {
        im.iter_mut().for_each(|v| *v = -*v);
        self.forward(re, im);
        let s = 1.0 / self.n as f64;
        re.iter_mut().for_each(|v| *v *= s);
        im.iter_mut().for_each(|v| *v *= -s);
    }
}

/// Orthonormal DCT-II of a fixed length, via Makhoul's single n-point FFT.
///
/// `forward` applies the matrix C with C[k,j] = c_k cos(π(2j+1)k/(2n)),
/// `transpose` applies Cᵀ = C⁻¹ (the orthonormal DCT-III).
#[derive(Debug, Clone)]
pub struct DctPlan {
    n: usize,
    fft: FftPlan,
    tw_re: Vec<f64>,
    tw_im: Vec<f64>,
    c0: f64,
    ck: f64,
}

impl DctPlan {
    pub fn new(n: usize) -> Self {
        let tw_re = (0..n).map(|k| cos(-PI * k as f64 / (2 * n) as f64)).collect();
        let tw_im = (0..n).map(|k| sin(-PI * k as f64 / (2 * n) as f64)).collect();
        Self {
            n,
            fft: FftPlan::new(n),
            tw_re,
            tw_im,
            c0: sqrt(1.0 / n as f64),
            ck: sqrt(2.0 / n as f64),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for j in 0..n.div_ceil(2) {
            re[j] = x[2 * j];
        }
        for j in 0..n / 2 {
            re[n - 1 - j] = x[2 * j + 1];
        }
        self.fft.forward(&mut re, &mut im);
        for k in 0..n {
            let v = re[k] * self.tw_re[k] - im[k] * self.tw_im[k];
            out[k] = v * if k == 0 { self.c0 } else { self.ck };
        }
    }

    pub fn transpose(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let coef = |k: usize| {
            if k >= n {
                0.0
            } else {
                y[k] / if k == 0 { self.c0 } else { self.ck }
            }
        };
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        // V_k = e^{iπk/2n} (X_k − i X_{n−k}) with X_n = 0.
        for k in 0..n {
            let a = coef(k);
            let b = if k == 0 { 0.0 } else { -coef(n - k) };
            let (wr, wi) = (self.tw_re[k], -self.tw_im[k]);
            re[k] = a * wr - b * wi;
            im[k] = a * wi + b * wr;
        }
        self.fft.inverse(&mut re, &mut im);
        for j in 0..n.div_ceil(2) {
            out[2 * j] = re[j];
        }
        for j in 0..n / 2 {
            out[2 * j + 1] = re[n - 1 - j];
        }
    }
}
