//! Scalar spectral kernels `h(lambda)` and their analytic derivatives.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::linalg::Eigen;

/// Monic cubic mother kernel: `x` below 1, a cubic on `[1, 2]`, `2/x` above 2.
pub fn monic_cubic(x: f64) -> f64 {
    if x < 1.0 {
        x
    } else if x <= 2.0 {
        -5.0 + x * (11.0 + x * (-6.0 + x))
    } else {
        2.0 / x
    }
}

pub fn monic_cubic_derivative(x: f64) -> f64 {
    if x < 1.0 {
        1.0
    } else if x <= 2.0 {
        11.0 + x * (-12.0 + 3.0 * x)
    } else {
        -2.0 / (x * x)
    }
}

/// Spectral response of one filter, expressed in the shift's own eigenvalue units.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralKernel {
    /// `sum_k coeffs[k] * lambda^k`.
    Polynomial(Vec<f64>),
    /// `lambda^a - lambda^(2a)` with `a = 2^(j-1)`: the diffusion wavelet at scale `j`.
    Dyadic { exponent: i32 },
    /// `monic_cubic(scale * (lambda - offset))`.
    MonicCubic { scale: f64, offset: f64 },
    /// Itersine bump on the normalised axis `u = (lambda - lo) / width`,
    /// centred at `center` and vanishing outside `|u - center| <= spacing`.
    Itersine {
        lo: f64,
        width: f64,
        center: f64,
        spacing: f64,
    },
}

impl SpectralKernel {
    pub fn eval(&self, lambda: f64) -> f64 {
        match *self {
            SpectralKernel::Polynomial(ref c) => c.iter().rev().fold(0.0, |acc, &ck| acc * lambda + ck),
            SpectralKernel::Dyadic { exponent } => {
                let p = lambda.powi(exponent);
                p - p * p
            }
            SpectralKernel::MonicCubic { scale, offset } => monic_cubic(scale * (lambda - offset)),
            SpectralKernel::Itersine {
                lo,
                width,
                center,
                spacing,
            } => {
                let d = (lambda - lo) / width - center;
                if d.abs() > spacing {
                    0.0
                } else {
                    let c = (FRAC_PI_2 * d / spacing).cos();
                    (FRAC_PI_2 * c * c).sin()
                }
            }
        }
    }

    /// `d h / d lambda`.
    pub fn derivative(&self, lambda: f64) -> f64 {
        match *self {
            SpectralKernel::Polynomial(ref c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * lambda + k as f64 * ck),
            SpectralKernel::Dyadic { exponent } => {
                let a = exponent as f64;
                if exponent == 1 {
                    1.0 - 2.0 * lambda
                } else {
                    let p = lambda.powi(exponent - 1);
                    a * p - 2.0 * a * p * lambda.powi(exponent)
                }
            }
            SpectralKernel::MonicCubic { scale, offset } => scale * monic_cubic_derivative(scale * (lambda - offset)),
            SpectralKernel::Itersine {
                lo,
                width,
                center,
                spacing,
            } => {
                let d = (lambda - lo) / width - center;
                if d.abs() > spacing {
                    0.0
                } else {
                    let theta = FRAC_PI_2 * d / spacing;
                    let c = theta.cos();
                    let inner = FRAC_PI_2 * c * c;
                    // d/dd sin(pi/2 cos^2(theta)) = -cos(inner) * pi/2 * sin(2 theta) * pi/(2 spacing)
                    -inner.cos() * FRAC_PI_2 * (2.0 * theta).sin() * (PI / (2.0 * spacing)) / width
                }
            }
        }
    }

    /// Interval outside which the kernel is identically zero, if bounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            SpectralKernel::Itersine {
                lo,
                width,
                center,
                spacing,
            } => Some((lo + (center - spacing) * width, lo + (center + spacing) * width)),
            _ => None,
        }
    }

    /// Points worth including in any grid search (kernel peaks).
    pub fn landmarks(&self) -> Vec<f64> {
        match *self {
            SpectralKernel::Itersine { lo, width, center, .. } => vec![lo + center * width],
            _ => Vec::new(),
        }
    }

    /// Materialises `V diag(h(Lambda)) V^T`.
    pub fn materialize(&self, eig: &Eigen) -> nalgebra::DMatrix<f64> {
        eig.apply_kernel(|l| self.eval(l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_difference(k: &SpectralKernel, x: f64) -> f64 {
        let h = 1e-6;
        (k.eval(x + h) - k.eval(x - h)) / (2.0 * h)
    }

    #[test]
    fn monic_cubic_knots() {
        assert!((monic_cubic(1.0) - 1.0).abs() < 1e-12);
        assert!((monic_cubic(2.0) - 1.0).abs() < 1e-12);
        assert!((monic_cubic(1.0 - 1e-13) - 1.0).abs() < 1e-12);
        assert!((monic_cubic(2.0 + 1e-13) - 1.0).abs() < 1e-12);
        // middle piece: lambda h'(lambda) at 1 = 11 - 12 + 3
        assert_eq!(1.0 * monic_cubic_derivative(1.0), 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kernels = [
            SpectralKernel::Polynomial(vec![0.3, -1.0, 0.5, 0.25]),
            SpectralKernel::Dyadic { exponent: 1 },
            SpectralKernel::Dyadic { exponent: 4 },
            SpectralKernel::MonicCubic {
                scale: 3.0,
                offset: 0.1,
            },
            SpectralKernel::Itersine {
                lo: -1.0,
                width: 2.5,
                center: 0.5,
                spacing: 0.25,
            },
        ];
        for k in &kernels {
            for i in 1..40 {
                let x = -0.9 + i as f64 * 0.0473;
                let fd = central_difference(k, x);
                assert!(
                    (k.derivative(x) - fd).abs() < 1e-5,
                    "{k:?} at {x}: {} vs {fd}",
                    k.derivative(x)
                );
            }
        }
    }

    #[test]
    fn itersine_partition_of_unity() {
        let spacing = 1.0 / 3.0;
        let ks: Vec<_> = (0..4)
            .map(|j| SpectralKernel::Itersine {
                lo: 0.0,
                width: 1.0,
                center: j as f64 * spacing,
                spacing,
            })
            .collect();
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let e: f64 = ks.iter().map(|k| k.eval(x).powi(2)).sum();
            assert!((e - 1.0).abs() < 1e-12, "x={x} energy={e}");
        }
    }
}
