//! Fourth-order interior, second-order boundary summation-by-parts first
//! derivative on a uniform grid (Strand's diagonal-norm closure).

use std::ops::{Add, Mul, Sub};

/// Boundary rows for `h = 1`. Row `i` lists coefficients for `u_0..`.
const BOUNDARY: [&[f64]; 4] = [
    &[-24.0 / 17.0, 59.0 / 34.0, -4.0 / 17.0, -3.0 / 34.0],
    &[-0.5, 0.0, 0.5],
    &[4.0 / 43.0, -59.0 / 86.0, 0.0, 59.0 / 86.0, -4.0 / 43.0],
    &[3.0 / 98.0, 0.0, -59.0 / 98.0, 0.0, 32.0 / 49.0, -4.0 / 49.0],
];

const NORM: [f64; 4] = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];

/// Smallest grid the closure fits on without the two boundary blocks
/// overlapping.
pub const MIN_POINTS: usize = 9;

#[derive(Debug, Clone, Copy)]
pub struct Sbp42 {
    n: usize,
    h: f64,
}

impl Sbp42 {
    pub fn new(n: usize, h: f64) -> Self {
        assert!(n >= MIN_POINTS, "SBP operator needs at least {MIN_POINTS} points");
        Self { n, h }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Diagonal of the quadrature norm `H`.
    pub fn norm_weight(&self, i: usize) -> f64 {
        let k = i.min(self.n - 1 - i);
        if k < 4 { NORM[k] * self.h } else { self.h }
    }

    /// `H_00`, the boundary weight used by the penalty terms.
    pub fn boundary_weight(&self) -> f64 {
        NORM[0] * self.h
    }

    /// `out = D u`. Every row is written as a combination of differences
    /// `u_j - u_i`, so constants are annihilated in exact arithmetic.
    pub fn apply<T>(&self, u: &[T], out: &mut [T])
    where
        T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        assert_eq!(u.len(), self.n);
        assert_eq!(out.len(), self.n);
        let n = self.n;
        let inv_h = 1.0 / self.h;
        for (i, row) in BOUNDARY.iter().enumerate() {
            let mut left = (u[0] - u[i]) * row[0];
            let mut right = (u[n - 1] - u[n - 1 - i]) * row[0];
            for (j, c) in row.iter().enumerate().skip(1) {
                if *c != 0.0 {
                    left = left + (u[j] - u[i]) * *c;
                    right = right + (u[n - 1 - j] - u[n - 1 - i]) * *c;
                }
            }
            out[i] = left * inv_h;
            out[n - 1 - i] = right * (-inv_h);
        }
        for i in 4..n - 4 {
            out[i] = ((u[i - 2] - u[i + 2]) * (1.0 / 12.0) + (u[i + 1] - u[i - 1]) * (2.0 / 3.0))
                * inv_h;
        }
    }
}
