//! Diffusion actor: a denoiser network unrolled over the reverse chain,
//! followed by a softmax per action head.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::schedule::{DiffusionSchedule, NoiseScale};
use super::{AgentError, Result};
use crate::nn::{Activation, DenseNet, ForwardCache};

/// Sinusoidal embedding of the diffusion step.
pub fn time_embedding(t: usize, dim: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    let half = dim / 2;
    for j in 0..half {
        let freq = libm::pow(10_000.0, -(2.0 * j as f64) / dim as f64);
        e[2 * j] = libm::sin(t as f64 * freq);
        e[2 * j + 1] = libm::cos(t as f64 * freq);
    }
    e
}

/// Probabilities of each factorized action head, concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadDistributions {
    heads: Vec<usize>,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl HeadDistributions {
    /// Per-head softmax of `logits`.
    pub fn from_logits(logits: &[f64], heads: &[usize]) -> Self {
        let mut probs = vec![0.0; logits.len()];
        let mut log_probs = vec![0.0; logits.len()];
        let mut off = 0;
        for &n in heads {
            let z = &logits[off..off + n];
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = z.iter().map(|v| libm::exp(v - m)).sum();
            let lse = m + libm::log(sum);
            for j in 0..n {
                log_probs[off + j] = z[j] - lse;
                probs[off + j] = libm::exp(log_probs[off + j]);
            }
            off += n;
        }
        Self { heads: heads.to_vec(), probs, log_probs }
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn head(&self, h: usize) -> &[f64] {
        let off: usize = self.heads[..h].iter().sum();
        &self.probs[off..off + self.heads[h]]
    }

    /// Entropy `−Σ π log π` of each head.
    pub fn entropies(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.heads.len());
        let mut off = 0;
        for &n in &self.heads {
            let h = (off..off + n).map(|j| if self.probs[j] > 0.0 { -self.probs[j] * self.log_probs[j] } else { 0.0 }).sum();
            out.push(h);
            off += n;
        }
        out
    }

    pub fn total_entropy(&self) -> f64 {
        self.entropies().iter().sum()
    }

    /// Log-probability of the joint action `idx`.
    pub fn log_prob(&self, idx: &[usize]) -> f64 {
        let mut off = 0;
        let mut lp = 0.0;
        for (&n, &i) in self.heads.iter().zip(idx) {
            lp += self.log_probs[off + i];
            off += n;
        }
        lp
    }

    /// Most probable category per head, lowest index on ties.
    pub fn argmax(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.heads.len());
        let mut off = 0;
        for &n in &self.heads {
            let p = &self.probs[off..off + n];
            let mut best = 0;
            for j in 1..n {
                if p[j] > p[best] {
                    best = j;
                }
            }
            out.push(best);
            off += n;
        }
        out
    }
}

/// A drawn action with its log-probability and head entropies.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    pub indices: Vec<usize>,
    pub log_prob: f64,
    pub entropies: Vec<f64>,
}

/// Independent categorical draw per head.
pub fn sample_action<R: Rng + ?Sized>(dist: &HeadDistributions, rng: &mut R) -> SampledAction {
    let mut indices = Vec::with_capacity(dist.heads.len());
    let mut off = 0;
    for &n in &dist.heads {
        indices.push(sample_categorical(&dist.probs[off..off + n], rng));
        off += n;
    }
    SampledAction { log_prob: dist.log_prob(&indices), entropies: dist.entropies(), indices }
}

fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    // Rounding left `u` past the cumulative sum; take the last positive category.
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

/// Gradient of `Σ_h w·H_h + Σ_j g_j·π_j` with respect to the logits, given
/// `g = dL/dπ` and entropy weight `w`.
pub fn logits_gradient(dist: &HeadDistributions, dprobs: &[f64], entropy_weight: f64) -> Vec<f64> {
    let mut out = vec![0.0; dist.probs.len()];
    let mut off = 0;
    for &n in &dist.heads {
        let p = &dist.probs[off..off + n];
        let lp = &dist.log_probs[off..off + n];
        // dH/dπ_j = −(log π_j + 1)
        let g: Vec<f64> = (0..n).map(|j| dprobs[off + j] - entropy_weight * (lp[j] + 1.0)).collect();
        let mean: f64 = (0..n).map(|j| p[j] * g[j]).sum();
        for j in 0..n {
            out[off + j] = p[j] * (g[j] - mean);
        }
        off += n;
    }
    out
}

/// Recorded reverse chain for a batch, sufficient for backpropagation.
#[derive(Debug, Clone)]
pub struct ChainTrace {
    batch: usize,
    /// `z[t]` for `t = 0..=T`.
    z: Vec<Vec<f64>>,
    /// Denoiser caches and `tanh(σ)` outputs at steps `1..=T` (index `t−1`).
    caches: Vec<ForwardCache>,
    squashed: Vec<Vec<f64>>,
}

impl ChainTrace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Final latent `z_0`, batch-major.
    pub fn z0(&self) -> &[f64] {
        &self.z[0]
    }

    pub fn z(&self, t: usize) -> &[f64] {
        &self.z[t]
    }
}

/// Exogenous noise of one chain run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainNoise {
    pub z_t: Vec<f64>,
    /// Noise added at step `t`, index `t−1`.
    pub steps: Vec<Vec<f64>>,
}

impl ChainNoise {
    pub fn draw<R: Rng + ?Sized>(steps: usize, len: usize, rng: &mut R) -> Self {
        let mut gauss = |n: usize| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<f64>>();
        let z_t = gauss(len);
        // Step 1 carries no noise; keep the slot to index uniformly.
        let steps = (1..=steps).map(|t| if t == 1 { vec![0.0; len] } else { gauss(len) }).collect();
        Self { z_t, steps }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionActor {
    pub denoiser: DenseNet,
    pub schedule: DiffusionSchedule,
    heads: Vec<usize>,
    feature_dim: usize,
    embed_dim: usize,
    pub noise_scale: NoiseScale,
}

impl DiffusionActor {
    /// Builds a randomly initialized actor with denoiser input
    /// `[z_t, emb(t), features]`.
    pub fn new<R: Rng + ?Sized>(
        feature_dim: usize,
        heads: &[usize],
        hidden: &[usize],
        hidden_activation: Activation,
        schedule: DiffusionSchedule,
        embed_dim: usize,
        noise_scale: NoiseScale,
        rng: &mut R,
    ) -> Result<Self> {
        let action_dim: usize = heads.iter().sum();
        if heads.is_empty() || heads.contains(&0) {
            return Err(AgentError::BadConfig("action heads must be non-empty"));
        }
        let mut dims = vec![action_dim + embed_dim + feature_dim];
        dims.extend_from_slice(hidden);
        dims.push(action_dim);
        let denoiser = DenseNet::random(&dims, hidden_activation, Activation::Linear, rng)?;
        Ok(Self { denoiser, schedule, heads: heads.to_vec(), feature_dim, embed_dim, noise_scale })
    }

    /// Wraps an existing denoiser, checking its shape.
    pub fn from_parts(
        denoiser: DenseNet,
        schedule: DiffusionSchedule,
        heads: &[usize],
        feature_dim: usize,
        embed_dim: usize,
        noise_scale: NoiseScale,
    ) -> Result<Self> {
        let a: usize = heads.iter().sum();
        if denoiser.input_dim() != a + embed_dim + feature_dim || denoiser.output_dim() != a {
            return Err(AgentError::BadConfig("denoiser shape does not match the action layout"));
        }
        Ok(Self { denoiser, schedule, heads: heads.to_vec(), feature_dim, embed_dim, noise_scale })
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn action_dim(&self) -> usize {
        self.heads.iter().sum()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    fn denoiser_input(&self, z: &[f64], t: usize, feats: &[f64], batch: usize) -> Vec<f64> {
        let a = self.action_dim();
        let emb = time_embedding(t, self.embed_dim);
        let mut x = Vec::with_capacity(batch * self.denoiser.input_dim());
        for r in 0..batch {
            x.extend_from_slice(&z[r * a..(r + 1) * a]);
            x.extend_from_slice(&emb);
            x.extend_from_slice(&feats[r * self.feature_dim..(r + 1) * self.feature_dim]);
        }
        x
    }

    fn check_feats(&self, feats: &[f64], batch: usize) -> Result<()> {
        if feats.len() != batch * self.feature_dim {
            return Err(AgentError::BadConfig("feature vector length does not match the actor"));
        }
        Ok(())
    }

    /// One reverse step for a single sample:
    /// `z_{t−1} = (z_t − φ_t·tanh(σ)/√(1−ν̄_t))/√ν_t + c_t·noise`.
    pub fn denoise_step(&self, z_t: &[f64], t: usize, feats: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        self.check_feats(feats, 1)?;
        let sigma = self.denoiser.forward(&self.denoiser_input(z_t, t, feats, 1))?;
        let s = &self.schedule;
        let (a, b, c) = (s.z_coeff(t), s.eps_coeff(t), s.noise_coeff(t, self.noise_scale));
        Ok(z_t.iter().zip(&sigma).zip(noise).map(|((z, sg), e)| a * z - b * libm::tanh(*sg) + c * e).collect())
    }

    /// Runs the reverse chain from `noise.z_t` down to `z_0` for `batch` states.
    pub fn run_chain(&self, feats: &[f64], batch: usize, noise: &ChainNoise) -> Result<ChainTrace> {
        self.check_feats(feats, batch)?;
        let steps = self.schedule.steps();
        let len = batch * self.action_dim();
        if noise.z_t.len() != len || noise.steps.len() != steps {
            return Err(AgentError::BadConfig("chain noise shape does not match"));
        }
        let mut z = vec![Vec::new(); steps + 1];
        z[steps] = noise.z_t.clone();
        let mut caches = vec![ForwardCache::default(); steps];
        let mut squashed = vec![Vec::new(); steps];
        for t in (1..=steps).rev() {
            let cache = self.denoiser.forward_batch(&self.denoiser_input(&z[t], t, feats, batch), batch)?;
            let sq: Vec<f64> = cache.output().iter().map(|v| libm::tanh(*v)).collect();
            let s = &self.schedule;
            let (a, b, c) = (s.z_coeff(t), s.eps_coeff(t), s.noise_coeff(t, self.noise_scale));
            let e = &noise.steps[t - 1];
            let next = (0..len).map(|j| a * z[t][j] - b * sq[j] + if t > 1 { c * e[j] } else { 0.0 }).collect();
            z[t - 1] = next;
            caches[t - 1] = cache;
            squashed[t - 1] = sq;
        }
        Ok(ChainTrace { batch, z, caches, squashed })
    }

    /// Draws chain noise and runs the chain.
    pub fn sample_chain<R: Rng + ?Sized>(&self, feats: &[f64], batch: usize, rng: &mut R) -> Result<ChainTrace> {
        let noise = ChainNoise::draw(self.schedule.steps(), batch * self.action_dim(), rng);
        self.run_chain(feats, batch, &noise)
    }

    /// Backpropagates `dL/dz_0` through every reverse step, accumulating the
    /// denoiser parameter gradient into `grads`.
    pub fn backward_chain(&self, trace: &ChainTrace, dz0: &[f64], grads: &mut [f64]) -> Result<()> {
        let a_dim = self.action_dim();
        let in_dim = self.denoiser.input_dim();
        let mut dz = dz0.to_vec();
        for t in 1..=self.schedule.steps() {
            let (a, b) = (self.schedule.z_coeff(t), self.schedule.eps_coeff(t));
            let sq = &trace.squashed[t - 1];
            let dsigma: Vec<f64> = dz.iter().zip(sq).map(|(g, y)| -b * g * (1.0 - y * y)).collect();
            let dx = self.denoiser.backward(&trace.caches[t - 1], &dsigma, grads)?;
            for r in 0..trace.batch {
                for j in 0..a_dim {
                    let k = r * a_dim + j;
                    dz[k] = a * dz[k] + dx[r * in_dim + j];
                }
            }
        }
        Ok(())
    }

    /// Head distributions per batch row from a finished chain.
    pub fn distributions(&self, trace: &ChainTrace) -> Vec<HeadDistributions> {
        let a = self.action_dim();
        (0..trace.batch).map(|r| HeadDistributions::from_logits(&trace.z[0][r * a..(r + 1) * a], &self.heads)).collect()
    }

    /// Samples `z_T`, denoises to `z_0` and applies a softmax per head.
    pub fn generate_action_distribution<R: Rng + ?Sized>(&self, feats: &[f64], rng: &mut R) -> Result<HeadDistributions> {
        let trace = self.sample_chain(feats, 1, rng)?;
        Ok(self.distributions(&trace).remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_difference_check, GradCheckOptions};
    use crate::rng;
    use approx::assert_relative_eq;

    fn actor(steps: usize, seed: u64) -> DiffusionActor {
        let s = DiffusionSchedule::new(steps, 0.1, 20.0).unwrap();
        DiffusionActor::new(3, &[5, 3, 2], &[16, 16], Activation::Tanh, s, 8, NoiseScale::QuarterSquared, &mut rng::stream(seed, 3))
            .unwrap()
    }

    #[test]
    fn uniform_logits_give_uniform_heads() {
        let d = HeadDistributions::from_logits(&[2.0; 7], &[4, 3]);
        for p in d.head(0) {
            assert_relative_eq!(*p, 0.25, max_relative = 1e-15);
        }
        assert_relative_eq!(d.entropies()[0], 4f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(d.entropies()[1], 3f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn one_hot_head_is_always_drawn() {
        let d = HeadDistributions::from_logits(&[0.0, 1e4, 0.0], &[3]);
        let mut r = rng::stream(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_action(&d, &mut r).indices, vec![1]);
        }
        assert_eq!(d.entropies()[0], 0.0);
    }

    #[test]
    fn empirical_frequencies_match() {
        let d = HeadDistributions::from_logits(&[0.1, -0.4, 0.9, 0.0], &[4]);
        let mut r = rng::stream(2, 0);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_action(&d, &mut r).indices[0]] += 1;
        }
        for j in 0..4 {
            let f = counts[j] as f64 / n as f64;
            assert!((f - d.probs()[j]).abs() < 0.01, "{f} vs {}", d.probs()[j]);
        }
    }

    #[test]
    fn zero_denoiser_rescales() {
        let mut a = actor(5, 1);
        a.denoiser.params_mut().iter_mut().for_each(|p| *p = 0.0);
        let z = [0.5, -1.0, 2.0, 0.1, 0.0, 3.0, -0.2, 0.7, 0.4, -0.9];
        let out = a.denoise_step(&z, 3, &[0.1, 0.2, 0.3], &[0.0; 10]).unwrap();
        for (o, zi) in out.iter().zip(&z) {
            assert_relative_eq!(*o, zi / a.schedule.nu(3).sqrt(), max_relative = 1e-15);
        }
    }

    #[test]
    fn step_one_is_noise_free() {
        let a = actor(5, 2);
        let z = [0.3; 10];
        let f = [0.1, 0.2, 0.3];
        let x = a.denoise_step(&z, 1, &f, &[0.0; 10]).unwrap();
        let y = a.denoise_step(&z, 1, &f, &[5.0; 10]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn denoise_step_matches_formula() {
        let a = actor(5, 3);
        let mut r = rng::stream(3, 1);
        let z: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let e: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let f = [0.4, -0.2, 0.9];
        let t = 4;
        let got = a.denoise_step(&z, t, &f, &e).unwrap();
        let mut input = z.clone();
        input.extend(time_embedding(t, 8));
        input.extend_from_slice(&f);
        let sigma = a.denoiser.forward(&input).unwrap();
        let s = &a.schedule;
        let pt = (1.0 - s.nu_bar(t - 1)) / (1.0 - s.nu_bar(t)) * s.phi(t);
        for j in 0..10 {
            let mu = (z[j] - s.phi(t) * sigma[j].tanh() / (1.0 - s.nu_bar(t)).sqrt()) / (1.0 - s.phi(t)).sqrt();
            assert_relative_eq!(got[j], mu + (pt / 2.0).powi(2) * e[j], max_relative = 1e-12);
        }
    }

    #[test]
    fn chain_matches_stepwise_evaluation() {
        let a = actor(5, 4);
        let mut r = rng::stream(4, 1);
        let f = [0.4, -0.2, 0.9];
        let noise = ChainNoise::draw(5, 10, &mut r);
        let trace = a.run_chain(&f, 1, &noise).unwrap();
        let mut z = noise.z_t.clone();
        for t in (1..=5).rev() {
            z = a.denoise_step(&z, t, &f, &noise.steps[t - 1]).unwrap();
        }
        assert_eq!(trace.z0(), z.as_slice());
    }

    #[test]
    fn generation_is_seeded_and_normalized() {
        let a = actor(20, 5);
        let f = [0.1, 0.5, 0.9];
        let d1 = a.generate_action_distribution(&f, &mut rng::stream(9, 5)).unwrap();
        let d2 = a.generate_action_distribution(&f, &mut rng::stream(9, 5)).unwrap();
        assert_eq!(d1, d2);
        for h in 0..3 {
            let s: f64 = d1.head(h).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
            assert!(d1.head(h).iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn logits_gradient_matches_finite_differences() {
        let mut r = rng::stream(6, 0);
        let heads = [5, 3, 2];
        let mut z: Vec<f64> = (0..10).map(|_| r.random_range(-2.0..2.0)).collect();
        let w: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let temp = 0.7;
        let f = |z: &[f64]| {
            let d = HeadDistributions::from_logits(z, &heads);
            temp * d.total_entropy() + d.probs().iter().zip(&w).map(|(p, w)| p * w).sum::<f64>()
        };
        let d = HeadDistributions::from_logits(&z, &heads);
        let g = logits_gradient(&d, &w, temp);
        let rep = finite_difference_check(&mut z, f, &g, &GradCheckOptions::default(), &mut r);
        assert!(rep.max_rel_error <= 1e-7, "{rep:?}");
    }

    #[test]
    fn chain_gradient_matches_finite_differences() {
        let a = actor(5, 7);
        let mut r = rng::stream(7, 0);
        let batch = 2;
        let f: Vec<f64> = (0..6).map(|_| r.random_range(0.0..1.0)).collect();
        let noise = ChainNoise::draw(5, batch * 10, &mut r);
        let w: Vec<f64> = (0..batch * 10).map(|_| r.random_range(-1.0..1.0)).collect();
        // Scale keeps logits moderate so the check is well-conditioned.
        let loss = |act: &DiffusionActor| {
            let tr = act.run_chain(&f, batch, &noise).unwrap();
            tr.z0().iter().zip(&w).map(|(z, w)| z * w).sum::<f64>() * 1e-2
        };
        let trace = a.run_chain(&f, batch, &noise).unwrap();
        let dz0: Vec<f64> = w.iter().map(|v| v * 1e-2).collect();
        let mut g = vec![0.0; a.denoiser.param_count()];
        a.backward_chain(&trace, &dz0, &mut g).unwrap();
        let mut params = a.denoiser.params().to_vec();
        let mut probe = a.clone();
        let rep = finite_difference_check(
            &mut params,
            |p| {
                probe.denoiser.params_mut().copy_from_slice(p);
                loss(&probe)
            },
            &g,
            &GradCheckOptions::default(),
            &mut r,
        );
        assert!(rep.max_rel_error <= 1e-5, "{rep:?}");
    }
}
