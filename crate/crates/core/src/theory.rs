//! Closed forms and Monte-Carlo estimates for the two noise-reduction
//! results behind intra-class mixup.
//!
//! * Label noise: mixing two same-class labels with independent
//!   `N(0, σ²)` noise gives noise `λε₁ + (1-λ)ε₂ ~ N(0, cσ²)` with
//!   `c = λ² + (1-λ)²`, hence `P(|mixed| < |ε|) = (2/π)·atan(c^{-1/2})` and
//!   `E|mixed| / E|ε| = √c`.
//! * Propagation noise: in a two-layer linear message-passing model, routing
//!   a noisy neighbour's influence through a mixup bridge node rather than a
//!   direct edge changes the noise reaching the clean node. Two closed forms
//!   circulate for that ratio (they differ in whether `2 + η₁ + η₂` is
//!   squared); both are reported and the simulation decides between them.
//!
//! Trials are split into fixed-size blocks, each with its own counter-derived
//! random stream, so estimates do not depend on the thread count.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

pub const MIN_TRIALS: usize = 100_000;
const BLOCK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_per_class: Vec<f64>,
    pub feature_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma_per_class: vec![1.0], feature_sigma: 1.0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_per_class.is_empty() {
            return Err(Error::InvalidConfig("noise model needs at least one class".into()));
        }
        if self.sigma_per_class.iter().chain(std::iter::once(&self.feature_sigma)).any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(Error::InvalidConfig("noise scales must be positive and finite".into()));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(())
}

fn mixing_factor(lambda: f64) -> f64 {
    lambda * lambda + (1.0 - lambda) * (1.0 - lambda)
}

/// `(P(|mixed noise| < |original noise|), E|mixed| / E|original|)`.
pub fn closed_form_theorem1(lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    let c = mixing_factor(lambda);
    let prob = std::f64::consts::FRAC_2_PI * (1.0 / c.sqrt()).atan();
    Ok((prob, c.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Class {
    pub sigma: f64,
    pub prob: f64,
    pub ratio: f64,
    /// 95% normal-approximation half-widths.
    pub prob_radius: f64,
    pub ratio_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Estimate {
    pub lambda: f64,
    pub trials: usize,
    pub per_class: Vec<Theorem1Class>,
    pub pooled_prob: f64,
    pub pooled_ratio: f64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    hits: f64,
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
}

impl Moments {
    fn add(&mut self, mixed: f64, original: f64) {
        self.n += 1.0;
        if mixed < original {
            self.hits += 1.0;
        }
        self.a += mixed;
        self.b += original;
        self.aa += mixed * mixed;
        self.bb += original * original;
        self.ab += mixed * original;
    }

    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            hits: self.hits + o.hits,
            a: self.a + o.a,
            b: self.b + o.b,
            aa: self.aa + o.aa,
            bb: self.bb + o.bb,
            ab: self.ab + o.ab,
        }
    }

    fn ratio(&self) -> f64 {
        self.a / self.b
    }

    /// Delta-method half-width for the ratio of means `ā / b̄`.
    fn ratio_radius(&self) -> f64 {
        let r = self.ratio();
        let mean_b = self.b / self.n;
        // sample variance of a - r b
        let m1 = (self.a - r * self.b) / self.n;
        let m2 = (self.aa - 2.0 * r * self.ab + r * r * self.bb) / self.n;
        let var = (m2 - m1 * m1).max(0.0);
        1.96 * (var / self.n).sqrt() / mean_b
    }

    fn prob(&self) -> f64 {
        self.hits / self.n
    }

    fn prob_radius(&self) -> f64 {
        let p = self.prob();
        1.96 * (p * (1.0 - p) / self.n).sqrt()
    }
}

/// Runs `trials` blocks of `sample` through [`Moments`], reducing in block
/// order.
fn simulate<F>(trials: usize, root: &SeedStream, sample: F) -> Moments
where
    F: Fn(&mut SeedStream) -> (f64, f64) + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let partials: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = root.split(b as u64);
            let count = BLOCK.min(trials - b * BLOCK);
            let mut m = Moments::default();
            for _ in 0..count {
                let (mixed, original) = sample(&mut rng);
                m.add(mixed, original);
            }
            m
        })
        .collect();
    partials.into_iter().fold(Moments::default(), Moments::merge)
}

fn normal(rng: &mut SeedStream) -> f64 {
    StandardNormal.sample(rng)
}

/// Estimates `P(|λε₁ + (1-λ)ε₂| < |ε|)` and `E|λε₁ + (1-λ)ε₂| / E|ε|` for
/// every class noise scale.
pub fn mc_theorem1(lambda: f64, noise: &NoiseModel, trials: usize, seed: u64) -> Result<Theorem1Estimate> {
    check_lambda(lambda)?;
    noise.validate()?;
    if trials < MIN_TRIALS {
        return Err(Error::InvalidConfig(format!("{trials} trials is below the minimum of {MIN_TRIALS}")));
    }
    let root = SeedStream::new(seed).split_named("theorem1");
    let per_class: Vec<Theorem1Class> = noise
        .sigma_per_class
        .iter()
        .enumerate()
        .map(|(class, &sigma)| {
            let m = simulate(trials, &root.split(class as u64), |rng| {
                let original = sigma * normal(rng);
                let e1 = sigma * normal(rng);
                let e2 = sigma * normal(rng);
                let mixed = lambda * e1 + (1.0 - lambda) * e2;
                (mixed.abs(), original.abs())
            });
            Theorem1Class {
                sigma,
                prob: m.prob(),
                ratio: m.ratio(),
                prob_radius: m.prob_radius(),
                ratio_radius: m.ratio_radius(),
            }
        })
        .collect();
    let k = per_class.len() as f64;
    Ok(Theorem1Estimate {
        lambda,
        trials,
        pooled_prob: per_class.iter().map(|c| c.prob).sum::<f64>() / k,
        pooled_ratio: per_class.iter().map(|c| c.ratio).sum::<f64>() / k,
        per_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGnnConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub lambda: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for LinearGnnConfig {
    fn default() -> Self {
        Self { eta1: 0.0, eta2: 0.0, lambda: 0.5, trials: 1_000_000, seed: 0 }
    }
}

impl LinearGnnConfig {
    fn depth_factor(&self) -> f64 {
        2.0 + self.eta1 + self.eta2
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if !(self.depth_factor().is_finite() && self.depth_factor() > 0.0) {
            return Err(Error::InvalidConfig(format!("2 + eta1 + eta2 = {} must be positive", self.depth_factor())));
        }
        Ok(())
    }
}

/// The two candidate closed forms for the bridged-to-direct noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2ClosedForms {
    /// `sqrt(c + 1 / (4 (2+η₁+η₂)))`, as printed in the theorem statement.
    pub ratio_printed: f64,
    /// `sqrt(c + 1 / (4 (2+η₁+η₂)²))`, what the expectation step implies.
    pub ratio_derivation: f64,
}

pub fn closed_form_theorem2(cfg: &LinearGnnConfig) -> Result<Theorem2ClosedForms> {
    cfg.validate()?;
    let c = mixing_factor(cfg.lambda);
    let k = cfg.depth_factor();
    Ok(Theorem2ClosedForms {
        ratio_printed: (c + 1.0 / (4.0 * k)).sqrt(),
        ratio_derivation: (c + 1.0 / (4.0 * k * k)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem2Verdict {
    PrintedFormula,
    DerivationFormula,
    Both,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Estimate {
    pub config: LinearGnnConfig,
    pub empirical_ratio: f64,
    pub ratio_radius: f64,
    pub closed_forms: Theorem2ClosedForms,
    pub tolerance: f64,
    pub verdict: Theorem2Verdict,
}

/// Simplified message passing `h_v ← (1+η_k) h_v + mean_{u∈N(v)} h_u` with
/// identity weights, applied once per entry of `etas`.
pub fn simplified_propagation(neighbors: &[Vec<usize>], features: &[f64], etas: &[f64]) -> Vec<f64> {
    let mut h = features.to_vec();
    for &eta in etas {
        h = neighbors
            .iter()
            .enumerate()
            .map(|(v, nb)| {
                let agg = if nb.is_empty() { 0.0 } else { nb.iter().map(|&u| h[u]).sum::<f64>() / nb.len() as f64 };
                (1.0 + eta) * h[v] + agg
            })
            .collect();
    }
    h
}

pub const THEOREM2_TOLERANCE: f64 = 0.01;

/// Estimates `E|noise at m, bridged| / E|noise at m, direct|` where `m` is a
/// clean node and `n` a noisy same-class node, either adjacent (`m–n`) or
/// joined through a mixup node (`m–v–n`) whose features mix two further
/// noisy same-class nodes. `signal` is the shared class value; it cancels
/// once the noise-free propagation is subtracted.
pub fn mc_theorem2_with_signal(cfg: &LinearGnnConfig, noise: &NoiseModel, signal: f64) -> Result<Theorem2Estimate> {
    cfg.validate()?;
    noise.validate()?;
    if cfg.trials < MIN_TRIALS {
        return Err(Error::InvalidConfig(format!("{} trials is below the minimum of {MIN_TRIALS}", cfg.trials)));
    }
    let sigma = noise.feature_sigma;
    let etas = [cfg.eta1, cfg.eta2];
    let lambda = cfg.lambda;
    // node order: m, n (direct); m, n, v (bridged)
    let direct = vec![vec![1], vec![0]];
    let bridged = vec![vec![2], vec![2], vec![0, 1]];
    let clean_direct = simplified_propagation(&direct, &[signal, signal], &etas)[0];
    let clean_bridged = simplified_propagation(&bridged, &[signal, signal, signal], &etas)[0];

    let root = SeedStream::new(cfg.seed).split_named("theorem2");
    let m = simulate(cfg.trials, &root, |rng| {
        let x_n = signal + sigma * normal(rng);
        let parent_a = signal + sigma * normal(rng);
        let parent_b = signal + sigma * normal(rng);
        let x_v = lambda * parent_a + (1.0 - lambda) * parent_b;
        let through_direct = simplified_propagation(&direct, &[signal, x_n], &etas)[0] - clean_direct;
        let through_bridge = simplified_propagation(&bridged, &[signal, x_n, x_v], &etas)[0] - clean_bridged;
        (through_bridge.abs(), through_direct.abs())
    });
    let closed_forms = closed_form_theorem2(cfg)?;
    let ratio = m.ratio();
    let near_printed = (ratio - closed_forms.ratio_printed).abs() <= THEOREM2_TOLERANCE;
    let near_derivation = (ratio - closed_forms.ratio_derivation).abs() <= THEOREM2_TOLERANCE;
    let verdict = match (near_printed, near_derivation) {
        (true, true) => Theorem2Verdict::Both,
        (true, false) => Theorem2Verdict::PrintedFormula,
        (false, true) => Theorem2Verdict::DerivationFormula,
        (false, false) => Theorem2Verdict::Neither,
    };
    Ok(Theorem2Estimate {
        config: *cfg,
        empirical_ratio: ratio,
        ratio_radius: m.ratio_radius(),
        closed_forms,
        tolerance: THEOREM2_TOLERANCE,
        verdict,
    })
}

pub fn mc_theorem2(cfg: &LinearGnnConfig, noise: &NoiseModel) -> Result<Theorem2Estimate> {
    mc_theorem2_with_signal(cfg, noise, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent evaluation of `(2/π)·atan(1/√c)` through a series
    /// expansion of `atan` around 1 rather than the libm call.
    fn atan_series(x: f64) -> f64 {
        // atan(x) = π/4 + atan((x-1)/(1+x))
        let t = (x - 1.0) / (1.0 + x);
        let mut sum = 0.0;
        let mut term = t;
        for k in 0..200 {
            sum += term / (2 * k + 1) as f64;
            term *= -t * t;
        }
        std::f64::consts::FRAC_PI_4 + sum
    }

    #[test]
    fn lambda_one_is_degenerate() {
        let (p, r) = closed_form_theorem1(1.0).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(r, 1.0);
    }

    #[test]
    fn midpoint_values() {
        let (p, r) = closed_form_theorem1(0.5).unwrap();
        let oracle = 2.0 / std::f64::consts::PI * atan_series(2f64.sqrt());
        assert!((p - oracle).abs() < 1e-14);
        assert!((p - 0.6082).abs() < 1e-4);
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn symmetric_in_lambda() {
        for l in [0.0, 0.1, 0.27, 0.4] {
            let a = closed_form_theorem1(l).unwrap();
            let b = closed_form_theorem1(1.0 - l).unwrap();
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn headline_inequalities_hold_inside_unit_interval() {
        let mut best = (f64::INFINITY, 0.0);
        for k in 1..1000 {
            let l = k as f64 / 1000.0;
            let (p, r) = closed_form_theorem1(l).unwrap();
            assert!(p > 0.5 && p <= 1.0);
            assert!(r < 1.0 && r > 0.0);
            if r < best.0 {
                best = (r, l);
            }
        }
        assert_eq!(best.1, 0.5);
    }

    #[test]
    fn rejects_lambda_outside_unit_interval() {
        assert!(closed_form_theorem1(1.2).is_err());
        assert!(closed_form_theorem1(-0.1).is_err());
    }

    #[test]
    fn mc_requires_minimum_trials() {
        assert!(mc_theorem1(0.5, &NoiseModel::default(), 100, 0).is_err());
    }

    #[test]
    fn identity_mixing_keeps_ratio_at_one() {
        let est = mc_theorem1(0.0, &NoiseModel::default(), 1_000_000, 3).unwrap();
        assert!((est.pooled_ratio - 1.0).abs() < 0.005);
    }

    #[test]
    fn theorem1_scale_free() {
        let a = mc_theorem1(0.5, &NoiseModel { sigma_per_class: vec![1.0], feature_sigma: 1.0 }, 1_000_000, 1).unwrap();
        let b =
            mc_theorem1(0.5, &NoiseModel { sigma_per_class: vec![10.0], feature_sigma: 1.0 }, 1_000_000, 2).unwrap();
        assert!((a.pooled_prob - b.pooled_prob).abs() < 0.005);
        assert!((a.pooled_ratio - b.pooled_ratio).abs() < 0.005);
    }

    #[test]
    fn per_class_and_pooled_reported() {
        let noise = NoiseModel { sigma_per_class: vec![0.5, 1.0, 3.0], feature_sigma: 1.0 };
        let est = mc_theorem1(0.3, &noise, MIN_TRIALS, 5).unwrap();
        assert_eq!(est.per_class.len(), 3);
        let (p, _) = closed_form_theorem1(0.3).unwrap();
        for c in &est.per_class {
            assert!((c.prob - p).abs() < 4.0 * c.prob_radius);
        }
    }

    #[test]
    fn estimate_independent_of_thread_count() {
        let noise = NoiseModel::default();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| mc_theorem1(0.3, &noise, 300_000, 9).unwrap());
        let multi = mc_theorem1(0.3, &noise, 300_000, 9).unwrap();
        assert_eq!(single, multi);
    }

    #[test]
    fn mc_gap_shrinks_with_more_trials() {
        // Average |estimate - closed form| over seeds at N and 4N trials:
        // 1/√N scaling predicts a factor of 2.
        let (p, _) = closed_form_theorem1(0.3).unwrap();
        let gap = |trials: usize| {
            (0..24)
                .map(|s| (mc_theorem1(0.3, &NoiseModel::default(), trials, 100 + s).unwrap().pooled_prob - p).abs())
                .sum::<f64>()
                / 24.0
        };
        let small = gap(100_000);
        let large = gap(400_000);
        assert!(large < small, "{small} vs {large}");
        let factor = small / large;
        assert!((1.2..3.5).contains(&factor), "shrink factor {factor}");
    }

    #[test]
    fn theorem2_closed_forms_at_origin() {
        let cf = closed_form_theorem2(&LinearGnnConfig::default()).unwrap();
        assert!((cf.ratio_printed - 0.625f64.sqrt()).abs() < 1e-15);
        assert!((cf.ratio_printed - 0.7906).abs() < 1e-4);
        assert!((cf.ratio_derivation - 0.75).abs() < 1e-15);
    }

    #[test]
    fn theorem2_limits() {
        let big = LinearGnnConfig { eta1: 1e9, eta2: 1e9, lambda: 0.3, ..Default::default() };
        let cf = closed_form_theorem2(&big).unwrap();
        let target = mixing_factor(0.3).sqrt();
        assert!((cf.ratio_printed - target).abs() < 1e-4);
        assert!((cf.ratio_derivation - target).abs() < 1e-8);
        let degenerate = LinearGnnConfig { eta1: 1e6, eta2: 1e6, lambda: 1.0, ..Default::default() };
        let cf = closed_form_theorem2(&degenerate).unwrap();
        assert!(cf.ratio_printed > 1.0 && cf.ratio_printed - 1.0 < 1e-6);
    }

    #[test]
    fn theorem2_rejects_nonpositive_depth_factor() {
        let cfg = LinearGnnConfig { eta1: -1.0, eta2: -1.0, ..Default::default() };
        assert!(closed_form_theorem2(&cfg).is_err());
    }

    #[test]
    fn both_closed_forms_decrease_in_eta() {
        let at =
            |eta: f64| closed_form_theorem2(&LinearGnnConfig { eta1: eta, eta2: eta, ..Default::default() }).unwrap();
        let (lo, hi) = (at(0.0), at(3.0));
        assert!(hi.ratio_printed < lo.ratio_printed);
        assert!(hi.ratio_derivation < lo.ratio_derivation);
    }

    #[test]
    fn propagation_matches_hand_expansion() {
        // direct m-n: noise at m after two layers is (2+η₁+η₂)δ
        let (e1, e2) = (0.7, -0.2);
        let h = simplified_propagation(&[vec![1], vec![0]], &[0.0, 1.0], &[e1, e2]);
        assert!((h[0] - (2.0 + e1 + e2)).abs() < 1e-15);
        // bridged m-v-n: (2+η₁+η₂)δ' + δ/2
        let h = simplified_propagation(&[vec![2], vec![2], vec![0, 1]], &[0.0, 1.0, 0.0], &[e1, e2]);
        assert!((h[0] - 0.5).abs() < 1e-15);
        let h = simplified_propagation(&[vec![2], vec![2], vec![0, 1]], &[0.0, 0.0, 1.0], &[e1, e2]);
        assert!((h[0] - (2.0 + e1 + e2)).abs() < 1e-15);
    }

    #[test]
    fn theorem2_invariant_to_scale_and_signal() {
        let cfg = LinearGnnConfig { trials: 400_000, seed: 4, ..Default::default() };
        let base = mc_theorem2(&cfg, &NoiseModel::default()).unwrap().empirical_ratio;
        let scaled = mc_theorem2(&cfg, &NoiseModel { sigma_per_class: vec![1.0], feature_sigma: 25.0 }).unwrap();
        let shifted = mc_theorem2_with_signal(&cfg, &NoiseModel::default(), -40.0).unwrap();
        assert!((base - scaled.empirical_ratio).abs() < 0.01);
        assert!((base - shifted.empirical_ratio).abs() < 1e-9);
    }
}
