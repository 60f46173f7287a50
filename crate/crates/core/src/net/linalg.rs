//! Dense kernels over row-major slices.

use super::Real;

const LANES: usize = 8;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..LANES {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s = s + *x * *y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// `out = W x + b` for a `rows x x.len()` matrix.
pub fn affine<T: Real>(w: &[T], b: &[T], x: &[T], out: &mut [T]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), b.len() * cols);
    for ((o, row), &bias) in out.iter_mut().zip(w.chunks_exact(cols)).zip(b) {
        *o = bias + dot(row, x);
    }
}

/// Accumulates the gradients of `out = W x + b` given `d_out`:
/// `dW += d_out x^T`, `db += d_out`, and `dx += W^T d_out` when `dx` is given.
pub fn affine_backward<T: Real>(w: &[T], x: &[T], d_out: &[T], dw: &mut [T], db: &mut [T], dx: Option<&mut [T]>) {
    let cols = x.len();
    for ((&g, dw_row), dbi) in d_out.iter().zip(dw.chunks_exact_mut(cols)).zip(db.iter_mut()) {
        if g != T::zero() {
            axpy(g, x, dw_row);
            *dbi = *dbi + g;
        }
    }
    if let Some(dx) = dx {
        for (&g, row) in d_out.iter().zip(w.chunks_exact(cols)) {
            if g != T::zero() {
                axpy(g, row, dx);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..19).map(|i| i as f64 * 0.5 - 3.0).collect();
        let b: Vec<f64> = (0..19).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn affine_small() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [0.5, -1.0];
        let mut out = [0.0; 2];
        affine(&w, &b, &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-1.5, -3.0]);
    }
}
