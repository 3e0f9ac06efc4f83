//! Radix-2 complex FFT, sufficient for the power-of-two tori used by the
//! circulant embedding.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Self = Self { re: 0.0, im: 0.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.re * s, self.im * s)
    }
}

impl Add for Complex {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// Forward transform `X[k] = sum_j x[j] exp(-2 pi i j k / len)` for a fixed
/// power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    twiddles: Vec<Complex>,
}

impl Fft {
    /// # Panics
    /// If `len` is not a power of two.
    pub fn new(len: usize) -> Self {
        assert!(
            len.is_power_of_two(),
            "FFT length must be a power of two, got {len}"
        );
        let twiddles = (0..len / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / len as f64;
                Complex::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Self { len, twiddles }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn process(&self, data: &mut [Complex]) {
        let n = self.len;
        assert_eq!(data.len(), n);
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }

    /// In-place 2D forward transform of a row-major `len x len` array.
    pub fn process_2d(&self, data: &mut [Complex]) {
        let n = self.len;
        assert_eq!(data.len(), n * n);
        for row in data.chunks_exact_mut(n) {
            self.process(row);
        }
        let mut column = alloc::vec![Complex::ZERO; n];
        for c in 0..n {
            for (r, v) in column.iter_mut().enumerate() {
                *v = data[r * n + c];
            }
            self.process(&mut column);
            for (r, v) in column.iter().enumerate() {
                data[r * n + c] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive_dft(x: &[Complex]) -> Vec<Complex> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::ZERO, |acc, (j, &v)| {
                    let a = -2.0 * PI * (j * k % n) as f64 / n as f64;
                    acc + v * Complex::new(libm::cos(a), libm::sin(a))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 4, 8, 32] {
            let x: Vec<Complex> = (0..n)
                .map(|i| Complex::new(libm::sin(i as f64 * 1.3), (i as f64 * 0.7) - 1.0))
                .collect();
            let want = naive_dft(&x);
            let mut got = x.clone();
            Fft::new(n).process(&mut got);
            for (a, b) in got.iter().zip(&want) {
                assert!((a.re - b.re).abs() < 1e-10 && (a.im - b.im).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_dimensional_impulse_is_flat() {
        let n = 8;
        let mut data = vec![Complex::ZERO; n * n];
        data[0] = Complex::new(1.0, 0.0);
        Fft::new(n).process_2d(&mut data);
        assert!(data
            .iter()
            .all(|c| (c.re - 1.0).abs() < 1e-15 && c.im.abs() < 1e-15));
    }

    #[test]
    #[should_panic]
    fn rejects_non_power_of_two() {
        Fft::new(12);
    }
}
