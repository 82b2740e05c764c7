//! Small dense-math helpers shared by the forward and backward passes.

use ndarray::{Array1, Array2};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// acc += a (outer) b
pub(crate) fn add_outer(acc: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
    for (i, &av) in a.iter().enumerate() {
        let mut row = acc.row_mut(i);
        for (j, &bv) in b.iter().enumerate() {
            row[j] += av * bv;
        }
    }
}

/// acc += W^T v
pub(crate) fn add_transposed_mul(acc: &mut Array1<f64>, w: &Array2<f64>, v: &Array1<f64>) {
    for (i, &vi) in v.iter().enumerate() {
        for (j, &wij) in w.row(i).iter().enumerate() {
            acc[j] += vi * wij;
        }
    }
}
