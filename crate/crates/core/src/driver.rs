//! The sampling loop: normalization, chain start-up, mutation, splatting and
//! synchronized partition refinement.
//!
//! Chains run in parallel in epochs. Epoch boundaries fall on multiples of
//! the refinement period and the log interval; between epochs every chain
//! is parked, so refinement has exclusive access to the partition.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use crate::adaptation::{AdaptationConfig, KernelController, UpdateRecord};
use crate::diagnostics::{rrmse, ErrorChannels, LogRow, RunLog, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::image_io::Image;
use crate::math::{luminance, Rgb};
use crate::mutations::{
    eligibility, large_step, large_step_proposal, mh_accept, perturb, perturbation_density, Perturbation, SplitPlan,
};
use crate::partition::{
    classify_lens, classify_multichain, CompositePartition4D, Grid2D, Partition, Quadtree, RegionId,
};
use crate::path::{path_pdf, Contribution, Path, MAX_PATH_VERTICES};
use crate::sampling::{CanonicalPoint2, RandomSequence};
use crate::scene::{Camera, SceneModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyKind {
    Fixed,
    Global,
    RaGrid,
    RaQuadtree,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Fixed => "fixed",
            StrategyKind::Global => "global",
            StrategyKind::RaGrid => "ra-grid",
            StrategyKind::RaQuadtree => "ra-quadtree",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fixed" => StrategyKind::Fixed,
            "global" => StrategyKind::Global,
            "ra-grid" => StrategyKind::RaGrid,
            "ra-quadtree" => StrategyKind::RaQuadtree,
            _ => return Err(Error::InvalidConfig(format!("unknown strategy `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    Mutations(u64),
    WallClock(Duration),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderConfig {
    pub strategy: StrategyKind,
    pub perturbation: Perturbation,
    pub budget: Budget,
    pub chains: usize,
    pub adaptation: AdaptationConfig,
    /// `σ₂/σ₁` for multi-chain perturbations.
    pub sigma_ratio: f64,
    pub n_top: usize,
    pub n_bottom: usize,
    pub m_split: u64,
    pub m_refine: u64,
    pub b_samples: u64,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub max_vertices: usize,
    /// Probability of a perturbation when the path admits one.
    pub perturb_prob: f64,
    /// Mutations between log rows.
    pub log_interval: u64,
    pub record_trace: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            strategy: StrategyKind::RaQuadtree,
            perturbation: Perturbation::Lens,
            budget: Budget::Mutations(1_000_000),
            chains: 1,
            adaptation: AdaptationConfig::default(),
            sigma_ratio: 1.0,
            n_top: 20,
            n_bottom: 50,
            m_split: 5000,
            m_refine: 10_000_000,
            b_samples: 100_000,
            seed: 1,
            width: 64,
            height: 64,
            max_vertices: MAX_PATH_VERTICES,
            perturb_prob: 0.5,
            log_interval: 1_000_000,
            record_trace: false,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.adaptation.validate()?;
        if self.chains < 1 {
            return bad("need at least one chain".into());
        }
        match self.budget {
            Budget::WallClock(d) if d.is_zero() => return bad("wall-clock budget must be positive".into()),
            _ => {}
        }
        for (name, v) in [
            ("n_top", self.n_top as u64),
            ("n_bottom", self.n_bottom as u64),
            ("m_split", self.m_split),
            ("m_refine", self.m_refine),
            ("b_samples", self.b_samples),
            ("width", self.width as u64),
            ("height", self.height as u64),
            ("log_interval", self.log_interval),
        ] {
            if v < 1 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.max_vertices < 2 {
            return bad("max_vertices must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.perturb_prob) {
            return bad(format!(
                "perturbation probability {} is outside [0, 1]",
                self.perturb_prob
            ));
        }
        if !(self.sigma_ratio > 0.0) || !self.sigma_ratio.is_finite() {
            return bad("sigma ratio must be positive".into());
        }
        Ok(())
    }

    pub fn build_controller(&self) -> Result<KernelController> {
        let a = &self.adaptation;
        let multichain = self.perturbation == Perturbation::MultiChain;
        let c = match self.strategy {
            StrategyKind::Fixed => KernelController::fixed(crate::adaptation::sigma_of(a.lambda_init))?,
            StrategyKind::Global => KernelController::global(*a)?,
            StrategyKind::RaGrid => {
                let p = if multichain {
                    Partition::Composite(CompositePartition4D::with_grids(
                        self.n_top,
                        self.n_bottom,
                        a.lambda_init,
                    ))
                } else {
                    Partition::Grid(Grid2D::new(self.n_top, a.lambda_init))
                };
                KernelController::regional(p, *a)?
            }
            StrategyKind::RaQuadtree => {
                let p = if multichain {
                    Partition::Composite(CompositePartition4D::with_quadtrees(self.n_top, a.lambda_init))
                } else {
                    Partition::Quadtree(Quadtree::new(a.lambda_init))
                };
                KernelController::regional(p, *a)?
            }
        };
        c.with_sigma_ratio(self.sigma_ratio)
    }
}

/// Monte Carlo estimate of `b = ∫ π dμ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Mean of `π/p` over independent eye-traced paths; paths that miss every
/// emitter count as zero.
pub fn estimate_b(
    scene: &SceneModel,
    samples: u64,
    rng: &mut RandomSequence,
    max_vertices: usize,
) -> Result<BEstimate> {
    if samples == 0 {
        return Err(Error::InvalidConfig("b needs at least one sample".into()));
    }
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        if let Ok(s) = large_step(scene, rng, max_vertices) {
            if s.contribution.pi > 0.0 && s.pdf > 0.0 {
                let w = s.contribution.pi / s.pdf;
                sum += w;
                sum2 += w * w;
            }
        }
    }
    if !(sum > 0.0) {
        return Err(Error::BlackScene(samples as usize));
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        (sum2 - n * mean * mean).max(0.0) / (n - 1.0)
    } else {
        0.0
    };
    Ok(BEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}

/// Unnormalized accumulation buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Film {
    width: usize,
    height: usize,
    buffer: Vec<Rgb>,
    /// Total luminance weight splatted.
    pub weight: f64,
}

impl Film {
    pub fn new(width: usize, height: usize) -> Self {
        Film {
            width,
            height,
            buffer: vec![Rgb::ZERO; width * height],
            weight: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn buffer(&self) -> &[Rgb] {
        &self.buffer
    }

    pub fn add(&mut self, camera: &Camera, raster: CanonicalPoint2, value: Rgb) {
        let (x, y) = camera.pixel(raster);
        self.buffer[y * self.width + x] += value;
        self.weight += luminance(value);
    }

    pub fn merge(&mut self, other: &Film) {
        for (a, b) in self.buffer.iter_mut().zip(&other.buffer) {
            *a += *b;
        }
        self.weight += other.weight;
    }

    pub fn luminance_sum(&self) -> f64 {
        self.buffer.iter().map(|&c| luminance(c)).sum()
    }

    /// `b · buffer / N`; all black when `mutations` is zero.
    pub fn finalize(&self, b: f64, mutations: u64) -> Image {
        let k = if mutations == 0 { 0.0 } else { b / mutations as f64 };
        let px = self.buffer.iter().map(|&c| c * k).collect();
        Image::from_pixels(self.width, self.height, px).expect("film matches its dimensions")
    }
}

/// Expected-value splat: `(1−a)·f/π` to the current path and `a·f/π` to the
/// proposal.
pub fn splat(film: &mut Film, camera: &Camera, a: f64, current: &Contribution, proposal: Option<&Contribution>) {
    if a < 1.0 && current.pi > 0.0 {
        film.add(camera, current.raster, current.f * ((1.0 - a) / current.pi));
    }
    if let Some(p) = proposal {
        if a > 0.0 && p.pi > 0.0 {
            film.add(camera, p.raster, p.f * (a / p.pi));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub mutation: u64,
    pub region: RegionId,
    pub update: UpdateRecord,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("mutation_index,region_id,n_k,lambda,alpha_hat\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.mutation,
            r.region.encoded(),
            r.update.n,
            r.update.lambda_after,
            r.update.alpha_hat
        );
    }
    s
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MutationTally {
    pub mutations: u64,
    pub large_steps: u64,
    pub large_step_accept: f64,
    pub perturbations: u64,
    /// Sum of acceptance probabilities over all perturbation proposals.
    pub perturb_accept: f64,
    /// Perturbation acceptances fed to the controller.
    pub recorded: u64,
    pub recorded_accept: f64,
    pub structural_rejections: u64,
    pub off_screen: u64,
    pub path_vertices: u64,
}

impl MutationTally {
    fn merge(&mut self, o: &MutationTally) {
        self.mutations += o.mutations;
        self.large_steps += o.large_steps;
        self.large_step_accept += o.large_step_accept;
        self.perturbations += o.perturbations;
        self.perturb_accept += o.perturb_accept;
        self.recorded += o.recorded;
        self.recorded_accept += o.recorded_accept;
        self.structural_rejections += o.structural_rejections;
        self.off_screen += o.off_screen;
        self.path_vertices += o.path_vertices;
    }

    pub fn mean_perturb_acceptance(&self) -> f64 {
        if self.perturbations == 0 {
            0.0
        } else {
            self.perturb_accept / self.perturbations as f64
        }
    }
}

/// Refinement performed at a barrier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefineEvent {
    pub epoch: u64,
    pub mutations: u64,
    pub splits: usize,
    pub leaves: usize,
}

/// Markov chain state.
pub struct ChainState {
    pub path: Path,
    pub contribution: Contribution,
    pdf: Option<f64>,
    pub rng: RandomSequence,
    pub film: Film,
    pub tally: MutationTally,
    trace: Vec<TraceRow>,
    /// Luminance of the current state after each mutation, when sampled.
    pub series: Vec<f64>,
}

impl ChainState {
    /// Starts from the first large step with positive contribution.
    pub fn start(scene: &SceneModel, mut rng: RandomSequence, max_vertices: usize, attempts: u64) -> Result<Self> {
        for _ in 0..attempts {
            if let Ok(s) = large_step(scene, &mut rng, max_vertices) {
                if s.contribution.pi > 0.0 {
                    let cam = &scene.camera;
                    return Ok(ChainState {
                        path: s.path,
                        contribution: s.contribution,
                        pdf: Some(s.pdf),
                        rng,
                        film: Film::new(cam.width(), cam.height()),
                        tally: MutationTally::default(),
                        trace: Vec::new(),
                        series: Vec::new(),
                    });
                }
            }
        }
        Err(Error::BlackScene(attempts as usize))
    }

    fn current_pdf(&mut self, scene: &SceneModel, max_vertices: usize) -> f64 {
        *self
            .pdf
            .get_or_insert_with(|| path_pdf(scene, &self.path, max_vertices))
    }

    fn accept(&mut self, path: Path, contribution: Contribution, pdf: Option<f64>) {
        self.path = path;
        self.contribution = contribution;
        self.pdf = pdf;
    }
}

struct StepContext<'a> {
    scene: &'a SceneModel,
    controller: &'a KernelController,
    config: &'a RenderConfig,
    counter: &'a AtomicU64,
}

fn classify(ctx: &StepContext, path: &Path, plan: &SplitPlan) -> Option<RegionId> {
    let cam = &ctx.scene.camera;
    let p = ctx.controller.partition();
    match ctx.config.perturbation {
        Perturbation::Lens => classify_lens(path, cam, p),
        Perturbation::MultiChain => classify_multichain(path, plan, cam, p),
    }
}

/// One Metropolis–Hastings transition.
fn mutate(chain: &mut ChainState, ctx: &StepContext) {
    let cfg = ctx.config;
    let scene = ctx.scene;
    let cam = &scene.camera;
    let kind = cfg.perturbation;
    let index = ctx.counter.fetch_add(1, Ordering::Relaxed);
    chain.tally.mutations += 1;

    let plan = eligibility(&chain.path, kind);
    let s_perturb = if plan.is_some() { cfg.perturb_prob } else { 0.0 };
    let use_perturb = plan.is_some() && chain.rng.uniform() < s_perturb;

    if let (true, Some(plan)) = (use_perturb, plan) {
        chain.tally.perturbations += 1;
        let region = classify(ctx, &chain.path, &plan).expect("current path lies on the film");
        ctx.controller.partition().record_visit(region);
        let scales = ctx.controller.scales_for(region);
        let (a, proposal) = match perturb(scene, &chain.path, &plan, kind, scales, &mut chain.rng) {
            Err(_) => {
                chain.tally.structural_rejections += 1;
                (Some(0.0), None)
            }
            Ok(prop) => {
                if cam.raster_position(prop.path.primary_direction()).is_none() {
                    chain.tally.off_screen += 1;
                    (None, None)
                } else if !(prop.contribution.pi > 0.0) {
                    (Some(0.0), None)
                } else {
                    // reverse move uses the kernel of the proposal's region
                    let back_plan = eligibility(&prop.path, kind).filter(|p| *p == plan);
                    let reverse = back_plan
                        .and_then(|p| classify(ctx, &prop.path, &p))
                        .map(|r| perturbation_density(&chain.path, &prop.path, &plan, ctx.controller.scales_for(r)))
                        .unwrap_or(0.0);
                    let a = mh_accept(
                        chain.contribution.pi,
                        prop.contribution.pi,
                        prop.forward_density,
                        reverse,
                        s_perturb,
                        s_perturb,
                    )
                    .unwrap_or(0.0);
                    (Some(a), Some(prop))
                }
            }
        };
        let a_val = a.unwrap_or(0.0);
        chain.tally.perturb_accept += a_val;
        if let Some(a) = a {
            chain.tally.recorded += 1;
            chain.tally.recorded_accept += a;
            if let Some(update) = ctx.controller.record_acceptance(region, a) {
                if cfg.record_trace {
                    chain.trace.push(TraceRow {
                        mutation: index,
                        region,
                        update,
                    });
                }
            }
        }
        splat(
            &mut chain.film,
            cam,
            a_val,
            &chain.contribution,
            proposal.as_ref().map(|p| &p.contribution),
        );
        if let Some(p) = proposal {
            if a_val > 0.0 && chain.rng.uniform() < a_val {
                chain.accept(p.path, p.contribution, None);
            }
        }
    } else {
        chain.tally.large_steps += 1;
        let current_pdf = chain.current_pdf(scene, cfg.max_vertices);
        match large_step_proposal(scene, current_pdf, &mut chain.rng, cfg.max_vertices) {
            Err(_) => splat(&mut chain.film, cam, 0.0, &chain.contribution, None),
            Ok(prop) => {
                let s_fwd = 1.0 - s_perturb;
                let s_rev = 1.0
                    - if eligibility(&prop.path, kind).is_some() {
                        cfg.perturb_prob
                    } else {
                        0.0
                    };
                let a = mh_accept(
                    chain.contribution.pi,
                    prop.contribution.pi,
                    prop.forward_density,
                    prop.reverse_density,
                    s_fwd,
                    s_rev,
                )
                .unwrap_or(0.0);
                chain.tally.large_step_accept += a;
                splat(&mut chain.film, cam, a, &chain.contribution, Some(&prop.contribution));
                if a > 0.0 && chain.rng.uniform() < a {
                    chain.accept(prop.path, prop.contribution, Some(prop.forward_density));
                }
            }
        }
    }
    debug_assert!(chain.contribution.pi > 0.0);
    chain.tally.path_vertices += chain.path.len() as u64;
}

#[derive(Clone, Debug, Default)]
pub struct RenderOptions {
    /// Reference image for the rRMSE column of the run log.
    pub reference: Option<Image>,
    /// Record the luminance of chain 0's state every `n` mutations.
    pub series_stride: Option<u64>,
}

pub struct RenderOutput {
    pub image: Image,
    pub film: Film,
    pub b: BEstimate,
    pub mutations: u64,
    pub tally: MutationTally,
    pub log: RunLog,
    pub trace: Vec<TraceRow>,
    pub refinements: Vec<RefineEvent>,
    pub epochs: u64,
    pub controller: KernelController,
    pub series: Vec<f64>,
    pub elapsed: Duration,
}

impl RenderOutput {
    /// Per-region `(Σa, visits)` over every region that ever existed and the
    /// matching global tally.
    pub fn acceptance_tallies(&self) -> (Vec<(f64, u64)>, (f64, u64)) {
        let regions = self.controller.partition().all_tallies();
        (regions, (self.tally.recorded_accept, self.tally.recorded))
    }
}

/// Chains' share of `n` mutations, as even as possible.
fn shares(n: u64, chains: usize) -> Vec<u64> {
    let c = chains as u64;
    (0..c).map(|i| n / c + u64::from(i < n % c)).collect()
}

pub fn run_render(scene: &SceneModel, config: &RenderConfig) -> Result<RenderOutput> {
    run_render_with(scene, config, &RenderOptions::default())
}

pub fn run_render_with(scene: &SceneModel, config: &RenderConfig, options: &RenderOptions) -> Result<RenderOutput> {
    config.validate()?;
    let start = Instant::now();
    let scene = if scene.camera.width() != config.width || scene.camera.height() != config.height {
        scene.with_resolution(config.width, config.height)?
    } else {
        scene.clone()
    };
    let scene = &scene;
    let mut controller = config.build_controller()?;
    let b = estimate_b(
        scene,
        config.b_samples,
        &mut RandomSequence::new(config.seed, 0),
        config.max_vertices,
    )?;

    let mut chains = (0..config.chains)
        .map(|i| {
            let rng = RandomSequence::new(config.seed, i as u64 + 1);
            ChainState::start(scene, rng, config.max_vertices, 10_000_000)
        })
        .collect::<Result<Vec<_>>>()?;

    let refinable = matches!(config.strategy, StrategyKind::RaQuadtree);
    let counter = AtomicU64::new(0);
    let mut done = 0u64;
    let mut epochs = 0u64;
    let mut log = RunLog::default();
    let mut refinements = Vec::new();
    let mut last_tally = MutationTally::default();

    loop {
        let mut next = match config.budget {
            Budget::Mutations(m) => {
                if done >= m {
                    break;
                }
                m
            }
            Budget::WallClock(d) => {
                if start.elapsed() >= d {
                    break;
                }
                u64::MAX
            }
        };
        next = next.min((done / config.log_interval + 1) * config.log_interval);
        if refinable {
            next = next.min((done / config.m_refine + 1) * config.m_refine);
        }
        // keep wall-clock epochs short enough to stop on time
        if let Budget::WallClock(_) = config.budget {
            next = next.min(done + 100_000);
        }
        let quota = shares(next - done, config.chains);
        let ctx = StepContext {
            scene,
            controller: &controller,
            config,
            counter: &counter,
        };
        let stride = options.series_stride;
        let run_chain = |(ci, chain): (usize, &mut ChainState), n: u64| {
            for _ in 0..n {
                mutate(chain, &ctx);
                if let (0, Some(s)) = (ci, stride) {
                    if chain.tally.mutations % s.max(1) == 0 {
                        chain.series.push(chain.contribution.pi);
                    }
                }
            }
        };
        if config.chains == 1 {
            run_chain((0, &mut chains[0]), quota[0]);
        } else {
            std::thread::scope(|s| {
                for ((ci, chain), &n) in chains.iter_mut().enumerate().zip(&quota) {
                    let run_chain = &run_chain;
                    s.spawn(move || run_chain((ci, chain), n));
                }
            });
        }
        done = next;
        epochs += 1;
        debug_assert_eq!(counter.load(Ordering::Relaxed), done);

        if refinable && done.is_multiple_of(config.m_refine) {
            let splits = controller.partition_mut().refine(config.m_split);
            refinements.push(RefineEvent {
                epoch: epochs,
                mutations: done,
                splits,
                leaves: controller.partition().leaf_count(),
            });
        }
        let is_log_point =
            done.is_multiple_of(config.log_interval) || matches!(config.budget, Budget::Mutations(m) if done == m);
        if is_log_point {
            let mut tally = MutationTally::default();
            for c in &chains {
                tally.merge(&c.tally);
            }
            let n_p = tally.perturbations - last_tally.perturbations;
            let mean_acceptance = if n_p == 0 {
                0.0
            } else {
                (tally.perturb_accept - last_tally.perturb_accept) / n_p as f64
            };
            let rrmse_now = match &options.reference {
                Some(r) => {
                    let mut film = Film::new(config.width, config.height);
                    for c in &chains {
                        film.merge(&c.film);
                    }
                    Some(
                        rrmse(
                            &film.finalize(b.value, done),
                            r,
                            DEFAULT_EPSILON,
                            ErrorChannels::Luminance,
                        )?
                        .rrmse,
                    )
                }
                None => None,
            };
            log.push(LogRow {
                time_s: start.elapsed().as_secs_f64(),
                mutations: done,
                rrmse: rrmse_now,
                mean_acceptance,
            });
            last_tally = tally;
        }
    }

    let mut film = Film::new(config.width, config.height);
    let mut tally = MutationTally::default();
    let mut trace = Vec::new();
    for c in &mut chains {
        film.merge(&c.film);
        tally.merge(&c.tally);
        trace.append(&mut c.trace);
    }
    trace.sort_by_key(|r| r.mutation);
    let series = std::mem::take(&mut chains[0].series);
    Ok(RenderOutput {
        image: film.finalize(b.value, done),
        film,
        b,
        mutations: done,
        tally,
        log,
        trace,
        refinements,
        epochs,
        controller,
        series,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_are_even() {
        assert_eq!(shares(10, 3), vec![4, 3, 3]);
        assert_eq!(shares(2, 4), vec![1, 1, 0, 0]);
        assert_eq!(shares(0, 2), vec![0, 0]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [
            StrategyKind::Fixed,
            StrategyKind::Global,
            StrategyKind::RaGrid,
            StrategyKind::RaQuadtree,
        ] {
            assert_eq!(s.name().parse::<StrategyKind>().unwrap(), s);
        }
        assert!("best".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn splat_weights() {
        let cam = Camera::new(
            crate::math::Vec3::ZERO,
            -crate::math::Vec3::Z,
            crate::math::Vec3::Y,
            45.0,
            4,
            4,
        )
        .unwrap();
        let cur = Contribution {
            f: Rgb::new(2.0, 2.0, 2.0),
            pi: 2.0,
            raster: CanonicalPoint2::new(0.1, 0.1),
        };
        let prop = Contribution {
            f: Rgb::new(1.0, 0.0, 0.0),
            pi: luminance(Rgb::new(1.0, 0.0, 0.0)),
            raster: CanonicalPoint2::new(0.9, 0.9),
        };
        for a in [0.0, 0.3, 1.0] {
            let mut film = Film::new(4, 4);
            splat(&mut film, &cam, a, &cur, Some(&prop));
            assert!((film.luminance_sum() - 1.0).abs() < 1e-12);
            assert_eq!(film.buffer()[0] == Rgb::ZERO, a == 1.0);
            assert_eq!(film.buffer()[15] == Rgb::ZERO, a == 0.0);
        }
    }

    #[test]
    fn zero_budget_film_is_black() {
        let film = Film::new(3, 2);
        let img = film.finalize(5.0, 0);
        assert!(img.pixels().iter().all(|c| *c == Rgb::ZERO));
    }
}
