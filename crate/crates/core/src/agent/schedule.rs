use alloc::vec::Vec;

use super::{AgentError, Result};

/// Scale applied to the fresh noise in each reverse step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseScale {
    /// `(φ̃_t / 2)²`.
    #[default]
    QuarterSquared,
    /// `√φ̃_t`, the usual DDPM posterior standard deviation.
    Sqrt,
}

/// Exponential variance schedule of the forward process.
///
/// `φ_t = 1 − exp(−φ_min/T − (2t−1)/(2T²)·(φ_max − φ_min))`, `ν_t = 1 − φ_t`,
/// `ν̄_t = Π_{s≤t} ν_s` and `φ̃_t = (1 − ν̄_{t−1})/(1 − ν̄_t)·φ_t` with `ν̄_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    steps: usize,
    phi_min: f64,
    phi_max: f64,
    phi: Vec<f64>,
    nu_bar: Vec<f64>,
    phi_tilde: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn new(steps: usize, phi_min: f64, phi_max: f64) -> Result<Self> {
        if steps == 0 || !(phi_min > 0.0 && phi_max > phi_min && phi_max.is_finite()) {
            return Err(AgentError::BadSchedule);
        }
        let tf = steps as f64;
        let mut phi = Vec::with_capacity(steps);
        let mut nu_bar = Vec::with_capacity(steps);
        let mut phi_tilde = Vec::with_capacity(steps);
        let mut prev = 1.0;
        for t in 1..=steps {
            let x = phi_min / tf + (2.0 * t as f64 - 1.0) / (2.0 * tf * tf) * (phi_max - phi_min);
            let p = -libm::expm1(-x);
            let nb = prev * (1.0 - p);
            phi.push(p);
            nu_bar.push(nb);
            phi_tilde.push((1.0 - prev) / (1.0 - nb) * p);
            prev = nb;
        }
        Ok(Self { steps, phi_min, phi_max, phi, nu_bar, phi_tilde })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn phi_min(&self) -> f64 {
        self.phi_min
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_max
    }

    /// `φ_t` for `t` in `1..=T`.
    pub fn phi(&self, t: usize) -> f64 {
        self.phi[t - 1]
    }

    pub fn nu(&self, t: usize) -> f64 {
        1.0 - self.phi[t - 1]
    }

    /// `ν̄_t` for `t` in `0..=T`.
    pub fn nu_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.nu_bar[t - 1]
        }
    }

    pub fn phi_tilde(&self, t: usize) -> f64 {
        self.phi_tilde[t - 1]
    }

    /// Coefficient of `z_t` in the reverse mean.
    pub fn z_coeff(&self, t: usize) -> f64 {
        1.0 / libm::sqrt(self.nu(t))
    }

    /// Coefficient of `tanh(σ)` in the reverse mean (subtracted).
    pub fn eps_coeff(&self, t: usize) -> f64 {
        self.phi(t) / (libm::sqrt(self.nu(t)) * libm::sqrt(1.0 - self.nu_bar(t)))
    }

    pub fn noise_coeff(&self, t: usize, scale: NoiseScale) -> f64 {
        let pt = self.phi_tilde(t);
        match scale {
            NoiseScale::QuarterSquared => (pt / 2.0) * (pt / 2.0),
            NoiseScale::Sqrt => libm::sqrt(pt),
        }
    }
}

/// `z_t = √ν̄_t·z0 + √(1−ν̄_t)·noise`.
pub fn forward_noise(z0: &[f64], t: usize, schedule: &DiffusionSchedule, noise: &[f64]) -> Vec<f64> {
    let nb = schedule.nu_bar(t);
    let (a, b) = (libm::sqrt(nb), libm::sqrt(1.0 - nb));
    z0.iter().zip(noise).map(|(z, e)| a * z + b * e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_step_schedule() {
        let s = DiffusionSchedule::new(1, 0.1, 20.0).unwrap();
        assert_relative_eq!(s.phi(1), 1.0 - (-0.1f64 - 19.9 / 2.0).exp(), max_relative = 1e-14);
        assert_eq!(s.phi_tilde(1), 0.0);
    }

    #[test]
    fn default_schedule_values() {
        let s = DiffusionSchedule::new(20, 0.1, 20.0).unwrap();
        let oracle = 1.0 - (-(0.005f64 + 19.9 / 800.0)).exp();
        assert_relative_eq!(s.phi(1), oracle, max_relative = 1e-14);
        assert!((s.phi(1) - 0.0294).abs() < 1e-4);
        assert_eq!(s.phi_tilde(1), 0.0);
        assert!(s.nu_bar(20) < 0.05);
        for t in 1..=20 {
            assert!(s.nu_bar(t) < s.nu_bar(t - 1));
            assert!(s.phi(t) > 0.0 && s.phi(t) < 1.0);
            if t > 1 {
                assert!(s.phi(t) > s.phi(t - 1));
            }
        }
    }

    #[test]
    fn bad_endpoints() {
        assert_eq!(DiffusionSchedule::new(0, 0.1, 20.0).unwrap_err(), AgentError::BadSchedule);
        assert_eq!(DiffusionSchedule::new(5, 0.0, 20.0).unwrap_err(), AgentError::BadSchedule);
        assert_eq!(DiffusionSchedule::new(5, 2.0, 1.0).unwrap_err(), AgentError::BadSchedule);
    }

    #[test]
    fn forward_noise_limits() {
        let s = DiffusionSchedule::new(5, 0.1, 20.0).unwrap();
        let z0 = [1.0, -2.0];
        let e = [0.5, 0.25];
        assert_eq!(forward_noise(&z0, 0, &s, &e), z0.to_vec());
        let z = forward_noise(&[0.0, 0.0], 3, &s, &e);
        let c = (1.0 - s.nu_bar(3)).sqrt();
        assert_relative_eq!(z[0], c * 0.5, max_relative = 1e-15);
    }

    #[test]
    fn forward_noise_second_moment() {
        let s = DiffusionSchedule::new(20, 0.1, 20.0).unwrap();
        let mut r = rng::stream(11, 0);
        let t = 4;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z0: f64 = 2.0 * r.sample::<f64, _>(StandardNormal);
            let e: f64 = r.sample(StandardNormal);
            let z = forward_noise(&[z0], t, &s, &[e])[0];
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let expect = s.nu_bar(t) * 4.0 + (1.0 - s.nu_bar(t));
        assert!((var / expect - 1.0).abs() < 0.02, "{var} vs {expect}");
    }
}
