//! Unnormalized 3D complex FFT built from 1D `rustfft` plans along each axis.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

static PLANS: LazyLock<Mutex<HashMap<(usize, bool), Plan>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, direction: FftDirection) -> Plan {
    let key = (n, direction == FftDirection::Forward);
    let mut cache = PLANS.lock().expect("fft plan cache poisoned");
    cache
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

/// In-place 3D transform of an `n^3` array with x fastest. No scaling.
pub(crate) fn fft3(data: &mut [Complex64], n: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n * n * n);
    let fft = plan(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();

    // x: contiguous lines
    data.par_chunks_mut(n * n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, plane| fft.process_with_scratch(plane, scratch),
    );

    // y: strided inside each z-plane
    data.par_chunks_mut(n * n).for_each_init(
        || (vec![Complex64::default(); n], vec![Complex64::default(); scratch_len]),
        |(line, scratch), plane| {
            for i in 0..n {
                for j in 0..n {
                    line[j] = plane[i + n * j];
                }
                fft.process_with_scratch(line, scratch);
                for j in 0..n {
                    plane[i + n * j] = line[j];
                }
            }
        },
    );

    // z: transpose so z lines are contiguous, transform, transpose back
    let nn = n * n;
    let mut t = vec![Complex64::default(); data.len()];
    {
        let src = &*data;
        t.par_chunks_mut(n).enumerate().for_each(|(col, line)| {
            for k in 0..n {
                line[k] = src[col + nn * k];
            }
        });
    }
    t.par_chunks_mut(n * n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, block| fft.process_with_scratch(block, scratch),
    );
    data.par_chunks_mut(nn).enumerate().for_each(|(k, plane)| {
        for col in 0..nn {
            plane[col] = t[col * n + k];
        }
    });
}

