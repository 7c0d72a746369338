//! Kernel-size controllers: per-region acceptance tallies and the
//! stochastic-approximation update of `λ = log σ²`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::mutations::KernelScales;
use crate::partition::{Partition, RegionId};

/// `f64` stored in an `AtomicU64`.
#[derive(Debug, Default)]
pub struct AtomicF64(AtomicU64);

impl AtomicF64 {
    pub fn new(v: f64) -> Self {
        AtomicF64(AtomicU64::new(v.to_bits()))
    }

    pub fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Acquire))
    }

    pub fn store(&self, v: f64) {
        self.0.store(v.to_bits(), Ordering::Release)
    }

    pub fn swap(&self, v: f64) -> f64 {
        f64::from_bits(self.0.swap(v.to_bits(), Ordering::AcqRel))
    }

    pub fn fetch_add(&self, v: f64) -> f64 {
        let mut cur = self.0.load(Ordering::Relaxed);
        loop {
            let new = (f64::from_bits(cur) + v).to_bits();
            match self
                .0
                .compare_exchange_weak(cur, new, Ordering::AcqRel, Ordering::Relaxed)
            {
                Ok(old) => return f64::from_bits(old),
                Err(x) => cur = x,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptationConfig {
    /// Visits per batch between two updates.
    pub batch: u64,
    pub gamma_max: f64,
    pub gamma_scale: f64,
    pub alpha_star: f64,
    pub lambda_init: f64,
    pub lambda_min: f64,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            batch: 10,
            gamma_max: 1.0,
            gamma_scale: 5.0,
            alpha_star: 0.5,
            lambda_init: 1.0,
            lambda_min: -30.0,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.batch < 1 {
            return bad("batch length L must be at least 1");
        }
        if !(self.gamma_max > 0.0) || !(self.gamma_scale > 0.0) {
            return bad("gamma_max and gamma_scale must be positive");
        }
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return bad("target acceptance must lie in (0, 1)");
        }
        if !self.lambda_init.is_finite() || !self.lambda_min.is_finite() {
            return bad("lambda bounds must be finite");
        }
        if self.lambda_init < self.lambda_min {
            return bad("initial lambda is below lambda_min");
        }
        Ok(())
    }
}

/// `γ_j = min(γ_max, γ_scale · j^{-1/2})`.
pub fn step_size(j: u64, config: &AdaptationConfig) -> f64 {
    config.gamma_max.min(config.gamma_scale / (j.max(1) as f64).sqrt())
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `max(λ + γ · sgn(α̂ − ᾱ*), λ_min)`.
pub fn update_lambda(lambda: f64, alpha_hat: f64, gamma: f64, config: &AdaptationConfig) -> f64 {
    (lambda + gamma * sgn(alpha_hat - config.alpha_star)).max(config.lambda_min)
}

pub fn sigma_of(lambda: f64) -> f64 {
    lambda.exp().sqrt()
}

/// One completed batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateRecord {
    /// Update count used for the step size.
    pub n: u64,
    pub gamma: f64,
    pub alpha_hat: f64,
    pub lambda_before: f64,
    pub lambda_after: f64,
}

/// Adaptation record of one region. Counters take concurrent updates; the
/// `λ` update itself runs under the region's lock.
#[derive(Debug)]
pub struct RegionState {
    lambda: AtomicF64,
    visits: AtomicU64,
    accumulated: AtomicF64,
    updates: AtomicU64,
    // lifetime tallies, never reset
    total_acceptance: AtomicF64,
    total_visits: AtomicU64,
    // traffic since the last refinement
    hits: AtomicU64,
    lock: Mutex<()>,
}

/// Plain copy of a [`RegionState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionSnapshot {
    pub lambda: f64,
    pub visits: u64,
    pub accumulated: f64,
    pub updates: u64,
    pub total_acceptance: f64,
    pub total_visits: u64,
    pub hits: u64,
}

impl RegionState {
    pub fn new(lambda: f64) -> Self {
        Self::with_updates(lambda, 1)
    }

    pub fn with_updates(lambda: f64, updates: u64) -> Self {
        RegionState {
            lambda: AtomicF64::new(lambda),
            visits: AtomicU64::new(0),
            accumulated: AtomicF64::new(0.0),
            updates: AtomicU64::new(updates.max(1)),
            total_acceptance: AtomicF64::new(0.0),
            total_visits: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            lock: Mutex::new(()),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.load()
    }

    pub fn sigma(&self) -> f64 {
        sigma_of(self.lambda())
    }

    pub fn updates(&self) -> u64 {
        self.updates.load(Ordering::Acquire)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Acquire)
    }

    pub fn add_hit(&self) {
        self.hits.fetch_add(1, Ordering::AcqRel);
    }

    pub(crate) fn reset_hits(&self) {
        self.hits.store(0, Ordering::Release);
    }

    pub fn snapshot(&self) -> RegionSnapshot {
        RegionSnapshot {
            lambda: self.lambda(),
            visits: self.visits.load(Ordering::Acquire),
            accumulated: self.accumulated.load(),
            updates: self.updates(),
            total_acceptance: self.total_acceptance.load(),
            total_visits: self.total_visits.load(Ordering::Acquire),
            hits: self.hits(),
        }
    }

    /// Adds one acceptance probability; completes a batch once `L` visits are
    /// pending.
    pub fn record(&self, a: f64, config: &AdaptationConfig) -> Option<UpdateRecord> {
        let a = a.clamp(0.0, 1.0);
        self.total_acceptance.fetch_add(a);
        self.total_visits.fetch_add(1, Ordering::AcqRel);
        // the acceptance is published before the visit that accounts for it
        self.accumulated.fetch_add(a);
        let i = self.visits.fetch_add(1, Ordering::AcqRel) + 1;
        if i < config.batch {
            return None;
        }
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());
        // Another chain may have closed the batch while we waited. Recording
        // can also overshoot L while the closing chain is descheduled, so the
        // trigger is `≥ L` and the batch takes every visit counted so far.
        let visits = self.visits.load(Ordering::Acquire);
        if visits < config.batch {
            return None;
        }
        let sum = self.accumulated.swap(0.0);
        self.visits.fetch_sub(visits, Ordering::AcqRel);
        let alpha_hat = (sum / visits as f64).clamp(0.0, 1.0);
        let n = self.updates();
        let gamma = step_size(n, config);
        let before = self.lambda();
        let after = update_lambda(before, alpha_hat, gamma, config);
        self.lambda.store(after);
        self.updates.store(n + 1, Ordering::Release);
        Some(UpdateRecord {
            n,
            gamma,
            alpha_hat,
            lambda_before: before,
            lambda_after: after,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    Fixed,
    Global,
    Regional,
}

/// Chooses `σ` for each proposal and feeds acceptance back into the region
/// states held by the partition.
#[derive(Debug)]
pub struct KernelController {
    kind: ControllerKind,
    partition: Partition,
    config: AdaptationConfig,
    /// `σ₂/σ₁` for multi-chain perturbations.
    sigma_ratio: f64,
}

impl KernelController {
    pub fn fixed(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidKernel(sigma));
        }
        let config = AdaptationConfig {
            lambda_init: (sigma * sigma).ln(),
            lambda_min: f64::MIN,
            ..AdaptationConfig::default()
        };
        Ok(KernelController {
            kind: ControllerKind::Fixed,
            partition: Partition::single(config.lambda_init),
            config,
            sigma_ratio: 1.0,
        })
    }

    pub fn global(config: AdaptationConfig) -> Result<Self> {
        config.validate()?;
        Ok(KernelController {
            kind: ControllerKind::Global,
            partition: Partition::single(config.lambda_init),
            config,
            sigma_ratio: 1.0,
        })
    }

    /// `partition` must have been built with `config.lambda_init`.
    pub fn regional(partition: Partition, config: AdaptationConfig) -> Result<Self> {
        config.validate()?;
        Ok(KernelController {
            kind: ControllerKind::Regional,
            partition,
            config,
            sigma_ratio: 1.0,
        })
    }

    pub fn with_sigma_ratio(mut self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidConfig(format!("sigma ratio {ratio} must be positive")));
        }
        self.sigma_ratio = ratio;
        Ok(self)
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn config(&self) -> &AdaptationConfig {
        &self.config
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn partition_mut(&mut self) -> &mut Partition {
        &mut self.partition
    }

    pub fn sigma_for(&self, region: RegionId) -> f64 {
        self.partition.region(region).sigma()
    }

    pub fn scales_for(&self, region: RegionId) -> KernelScales {
        let s = self.sigma_for(region);
        KernelScales {
            primary: s,
            secondary: s * self.sigma_ratio,
        }
    }

    /// Records one perturbation acceptance; the fixed controller ignores it.
    pub fn record_acceptance(&self, region: RegionId, a: f64) -> Option<UpdateRecord> {
        match self.kind {
            ControllerKind::Fixed => None,
            _ => self.partition.region(region).record(a, &self.config),
        }
    }
}

/// `|ᾱ − Σ_k (n_k/n) ᾱ_k|` for per-region tallies `(Σa, visits)` against
/// the global tally.
pub fn global_acceptance_identity(regions: &[(f64, u64)], global: (f64, u64)) -> f64 {
    let (sum, n) = global;
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let weighted: f64 = regions
        .iter()
        .filter(|r| r.1 > 0)
        .map(|&(s, k)| (k as f64 / n) * (s / k as f64))
        .sum();
    (sum / n - weighted).abs()
}
