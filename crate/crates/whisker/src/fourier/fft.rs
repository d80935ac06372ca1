use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalised in-place multi-dimensional FFT over a row-major block.
pub(crate) fn fft_nd(data: &mut [Complex64], sizes: &[usize], inverse: bool) {
    let total: usize = sizes.iter().product();
    debug_assert_eq!(data.len(), total);
    let mut stride = total;
    let mut line = Vec::new();
    for &n in sizes {
        stride /= n;
        if n == 1 {
            continue;
        }
        let fft = plan(n, inverse);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        line.resize(n, Complex64::default());
        let block = n * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}
