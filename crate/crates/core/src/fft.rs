//! Minimal 2-D FFT on `ndarray` arrays, built on `rustfft`.
//!
//! Row/column passes run in parallel with per-thread scratch buffers; each
//! element is written exactly once, so results are identical regardless of
//! scheduling. The forward transform is unnormalized; the inverse scales by
//! `1 / (nx ny)` so that `ifft2(fft2(a)) == a` up to rounding.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

fn pass_rows(a: &mut Array2<Complex64>, direction: FftDirection) {
    let n = a.ncols();
    let fft = FftPlanner::new().plan_fft(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();
    a.axis_iter_mut(Axis(0))
        .into_par_iter()
        .for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, mut row| {
                let slice = row.as_slice_mut().expect("rows of a standard-layout array");
                fft.process_with_scratch(slice, scratch);
            },
        );
}

/// In-place 2-D FFT over both axes (rows, then columns via transposition).
pub(crate) fn fft2_inplace(a: &mut Array2<Complex64>, direction: FftDirection) {
    pass_rows(a, direction);
    let mut t = a.t().as_standard_layout().into_owned();
    pass_rows(&mut t, direction);
    *a = t.t().as_standard_layout().into_owned();
}

/// Forward 2-D FFT, unnormalized.
pub(crate) fn fft2(mut a: Array2<Complex64>) -> Array2<Complex64> {
    fft2_inplace(&mut a, FftDirection::Forward);
    a
}

/// Inverse 2-D FFT, scaled by `1 / (nx ny)`.
pub(crate) fn ifft2(mut a: Array2<Complex64>) -> Array2<Complex64> {
    fft2_inplace(&mut a, FftDirection::Inverse);
    let scale = 1.0 / a.len() as f64;
    a.par_mapv_inplace(|v| v * scale);
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_recovers_input() {
        let n = 32;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new((i * 7 + j) as f64 * 0.013, (j * 3 + i) as f64 * -0.021)
        });
        let b = ifft2(fft2(a.clone()));
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn dc_bin_is_the_sum() {
        let n = 16;
        let a = Array2::from_elem((n, n), Complex64::new(2.0, 0.0));
        let s = fft2(a);
        assert!((s[[0, 0]].re - 2.0 * (n * n) as f64).abs() < 1e-9);
        assert!(s[[0, 1]].norm() < 1e-9);
    }

    #[test]
    fn parseval_holds() {
        let n = 64;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new((i as f64 * 0.37).sin(), (j as f64 * 0.11).cos())
        });
        let space: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = fft2(a).iter().map(|v| v.norm_sqr()).sum::<f64>() / (n * n) as f64;
        assert!((space - freq).abs() / space < 1e-12);
    }
}
