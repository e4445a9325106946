//! Minimal dense linear algebra for the solver.
//!
//! The subproblems here have a few dozen variables at most, so a plain
//! row-major matrix and an LU factorization with partial pivoting are all
//! that is needed.

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub(crate) struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: T) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += self * x`.
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(x) {
                acc += *a * *b;
            }
            out[r] += acc;
        }
    }

    /// `out += self^T * x`.
    pub fn mul_transpose_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            let xr = x[r];
            for (c, a) in row.iter().enumerate() {
                out[c] += *a * xr;
            }
        }
    }
}

/// Solves `A x = b` in place by LU with partial pivoting; `a` is destroyed.
/// Returns `None` when a pivot collapses (singular to working precision).
pub(crate) fn solve_in_place<T: Real>(a: &mut Mat<T>, b: &mut [T]) -> Option<()> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    debug_assert_eq!(b.len(), n);
    for k in 0..n {
        // Pivot: largest magnitude on or below the diagonal.
        let mut p = k;
        let mut best = a.at(k, k).abs();
        for r in (k + 1)..n {
            let v = a.at(r, k).abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > T::zero()) || !best.is_finite() {
            return None;
        }
        if p != k {
            for c in 0..n {
                let tmp = a.at(k, c);
                a.set(k, c, a.at(p, c));
                a.set(p, c, tmp);
            }
            b.swap(k, p);
        }
        let inv_piv = T::one() / a.at(k, k);
        for r in (k + 1)..n {
            let f = a.at(r, k) * inv_piv;
            if f == T::zero() {
                continue;
            }
            for c in (k + 1)..n {
                let v = a.at(r, c) - f * a.at(k, c);
                a.set(r, c, v);
            }
            b[r] -= f * b[k];
            a.set(r, k, T::zero());
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in (k + 1)..n {
            acc -= a.at(k, c) * b[c];
        }
        b[k] = acc / a.at(k, k);
    }
    Some(())
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub(crate) fn norm_inf<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

pub(crate) fn norm2<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_known_system() {
        // x = (1, -2, 3) for this 3x3 system.
        let mut a = Mat::zeros(3, 3);
        let rows = [[2.0, 1.0, -1.0], [-3.0, -1.0, 2.0], [-2.0, 1.0, 2.0]];
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                a.set(r, c, *v);
            }
        }
        let x_true = [1.0f64, -2.0, 3.0];
        let mut b = [0.0; 3];
        a.mul_vec_into(&x_true, &mut b);
        solve_in_place(&mut a.clone(), &mut b).unwrap();
        for (xi, ti) in b.iter().zip(x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn random_systems_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2, 5, 12, 40] {
            let mut a = Mat::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    a.set(r, c, rng.gen_range(-1.0..1.0));
                }
                // Diagonal dominance keeps the test matrices well conditioned.
                a.add_at(r, r, n as f64);
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut b = vec![0.0; n];
            a.mul_vec_into(&x_true, &mut b);
            solve_in_place(&mut a, &mut b).unwrap();
            for (xi, ti) in b.iter().zip(&x_true) {
                assert!((xi - ti).abs() < 1e-9, "n={n}: {xi} vs {ti}");
            }
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = Mat::zeros(2, 2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        let mut b = [1.0, 2.0];
        assert!(solve_in_place(&mut a, &mut b).is_none());
    }

    #[test]
    fn transpose_multiply_matches_manual() {
        let mut a = Mat::zeros(2, 3);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(0, 2, 3.0);
        a.set(1, 0, 4.0);
        a.set(1, 1, 5.0);
        a.set(1, 2, 6.0);
        let mut out = vec![0.0; 3];
        a.mul_transpose_vec_into(&[1.0, -1.0], &mut out);
        assert_eq!(out, vec![-3.0, -3.0, -3.0]);
    }
}
