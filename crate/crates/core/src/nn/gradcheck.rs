use alloc::vec::Vec;

use rand::Rng;

use super::DenseNet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Coordinates checked; a random subset is drawn above this count.
    pub max_coords: usize,
    /// Lower bound on the relative-error denominator.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { step: 1e-5, max_coords: 400, floor: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    pub worst_index: usize,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }

    /// Worst of two reports.
    pub fn merge(self, other: GradCheckReport) -> GradCheckReport {
        let worst = if other.max_rel_error > self.max_rel_error { other } else { self };
        GradCheckReport {
            max_rel_error: worst.max_rel_error,
            max_abs_error: self.max_abs_error.max(other.max_abs_error),
            checked: self.checked + other.checked,
            worst_index: worst.worst_index,
        }
    }
}

fn pick_coords<R: Rng + ?Sized>(n: usize, max: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if n <= max {
        return idx;
    }
    for i in 0..max {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(max);
    idx.sort_unstable();
    idx
}

/// Compares `analytic` with central differences of `f` around `x`.
///
/// `x` is restored before returning.
pub fn finite_difference_check<F, R>(
    x: &mut [f64],
    mut f: F,
    analytic: &[f64],
    opts: &GradCheckOptions,
    rng: &mut R,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    assert_eq!(x.len(), analytic.len(), "gradient length must match the point");
    let mut rep = GradCheckReport { max_rel_error: 0.0, max_abs_error: 0.0, checked: 0, worst_index: 0 };
    for i in pick_coords(x.len(), opts.max_coords, rng) {
        let orig = x[i];
        x[i] = orig + opts.step;
        let up = f(x);
        x[i] = orig - opts.step;
        let down = f(x);
        x[i] = orig;
        let numeric = (up - down) / (2.0 * opts.step);
        let a = analytic[i];
        let abs = libm::fabs(a - numeric);
        let rel = abs / libm::fabs(a).max(libm::fabs(numeric)).max(opts.floor);
        if rel > rep.max_rel_error || rel.is_nan() {
            rep.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
            rep.worst_index = i;
        }
        rep.max_abs_error = rep.max_abs_error.max(abs);
        rep.checked += 1;
    }
    rep
}

/// Checks the parameter gradient returned by `loss` against finite
/// differences of its value. `loss` returns `(value, gradient)`.
pub fn grad_check<F, R>(net: &mut DenseNet, mut loss: F, opts: &GradCheckOptions, rng: &mut R) -> GradCheckReport
where
    F: FnMut(&DenseNet) -> (f64, Vec<f64>),
    R: Rng + ?Sized,
{
    let (_, analytic) = loss(net);
    let mut params = net.params().to_vec();
    let mut probe = net.clone();
    let rep = finite_difference_check(
        &mut params,
        |p| {
            probe.params_mut().copy_from_slice(p);
            loss(&probe).0
        },
        &analytic,
        opts,
        rng,
    );
    rep
}
