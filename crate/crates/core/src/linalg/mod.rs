//! Symmetric eigensolvers: a dense Householder/QL path and a deflated
//! Lanczos path for larger sparse operators.

mod csr;
mod dense;
mod lanczos;

pub use csr::CsrMatrix;
pub use dense::{symmetric_eigen, SymmetricEigen};
pub use lanczos::{lanczos_smallest, LanczosOptions, RitzPair};

use crate::Real;

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y -= c x`
pub(crate) fn axpy<T: Real>(y: &mut [T], c: T, x: &[T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi - c * *xi;
    }
}
