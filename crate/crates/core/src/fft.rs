//! Multi-dimensional complex FFTs on row-major cubic arrays.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cubic `side^dim` transform. The forward transform uses `e^{-2πi jk/n}`,
/// the inverse `e^{+2πi jk/n}`; neither is normalized.
pub(crate) struct FftNd {
    side: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

type PlanCache = Mutex<HashMap<(usize, usize), Arc<FftNd>>>;

fn cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl FftNd {
    /// Shared plan for a cube of the given side and dimension.
    pub(crate) fn get(side: usize, dim: usize) -> Arc<FftNd> {
        let mut guard = cache().lock().expect("fft plan cache poisoned");
        guard
            .entry((side, dim))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(FftNd {
                    side,
                    dim,
                    forward: planner.plan_fft_forward(side),
                    inverse: planner.plan_fft_inverse(side),
                })
            })
            .clone()
    }

    pub(crate) fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    pub(crate) fn forward(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(&*self.forward, data, scratch);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        self.run(&*self.inverse, data, scratch);
    }

    fn run(&self, plan: &dyn Fft<f64>, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        assert_eq!(data.len(), self.len());
        let n = self.side;
        let inner_scratch_len = plan.get_inplace_scratch_len();
        let mut fft_scratch = vec![Complex64::new(0.0, 0.0); inner_scratch_len];

        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut fft_scratch);

        // Remaining axes: transpose each (n × inner) slab so the axis becomes
        // contiguous, transform, transpose back.
        for axis in (0..self.dim - 1).rev() {
            let inner = n.pow((self.dim - 1 - axis) as u32);
            let slab = n * inner;
            scratch.resize(slab, Complex64::new(0.0, 0.0));
            for block in data.chunks_exact_mut(slab) {
                transpose(block, &mut scratch[..slab], n, inner);
                plan.process_with_scratch(&mut scratch[..slab], &mut fft_scratch);
                transpose(&scratch[..slab], block, inner, n);
            }
        }
    }
}

/// `dst[c * rows + r] = src[r * cols + c]`, in tiles to stay cache friendly.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        let r1 = (r0 + TILE).min(rows);
        for c0 in (0..cols).step_by(TILE) {
            let c1 = (c0 + TILE).min(cols);
            for r in r0..r1 {
                for c in c0..c1 {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}
