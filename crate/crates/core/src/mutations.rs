//! Mutation strategies and the Metropolis–Hastings acceptance.
//!
//! Perturbations split the current path at a deterministically chosen edge,
//! perturb one ray direction per non-specular chain start of the eye
//! subpath, re-trace the specular chains, and reconnect to the unchanged
//! light subpath. Their transition density, in the same measure as the
//! contribution, is the product of one angular-kernel density per perturbed
//! direction and the `|cos|/d²` conversion of every regenerated vertex.

use crate::error::{Error, Result};
use crate::path::{eval_contribution_with, trace_eye_subpath, Contribution, Path, PathVertex};
use crate::sampling::{perturb_direction, AngularKernel, RandomSequence};
use crate::scene::{event_of, SceneModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Perturbation {
    Lens,
    MultiChain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    LargeStep,
    Perturb(Perturbation),
}

/// Where a perturbation splits a path (0-based vertex indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitPlan {
    /// Last vertex of the eye subpath.
    pub eye_end: usize,
    /// Non-specular vertices whose outgoing direction is perturbed; the
    /// camera (index 0) comes first.
    pub chain_starts: Vec<usize>,
}

/// Why a perturbation could not produce a tentative path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    Ineligible,
    Miss,
    VertexMismatch,
    TotalInternalReflection,
    NoPath,
}

#[derive(Clone, Debug)]
pub struct Proposal {
    pub strategy: Strategy,
    pub path: Path,
    pub contribution: Contribution,
    /// `T(ȳ | x̄)`
    pub forward_density: f64,
    /// `T(x̄ | ȳ)`, for perturbations evaluated with the kernel scales the
    /// proposal was drawn with. See [`perturbation_density`] for other scales.
    pub reverse_density: f64,
    /// Angular-kernel densities entering `forward_density`, one per
    /// perturbed direction. Empty for large steps.
    pub kernel_factors: Vec<f64>,
    pub plan: Option<SplitPlan>,
}

/// Lens split: the eye subpath is the camera followed by specular vertices
/// up to the first non-specular vertex, which must be the emitter endpoint
/// or be followed by a non-specular vertex.
pub fn lens_eligibility(path: &Path) -> Option<SplitPlan> {
    if !path.is_complete() {
        return None;
    }
    let s = first_non_specular_after(path, 0)?;
    endpoint_ok(path, s).then(|| SplitPlan {
        eye_end: s,
        chain_starts: vec![0],
    })
}

/// Multi-chain split: chains start at the camera and at every non-specular
/// vertex of the eye subpath. The eye subpath extends past the first
/// non-specular vertex after the camera and ends at the nearest vertex that
/// satisfies the lens endpoint rule.
pub fn multichain_eligibility(path: &Path) -> Option<SplitPlan> {
    if !path.is_complete() {
        return None;
    }
    let k = path.len();
    let first = first_non_specular_after(path, 0)?;
    let mut chain_starts = vec![0];
    if first == k - 1 {
        return Some(SplitPlan {
            eye_end: first,
            chain_starts,
        });
    }
    chain_starts.push(first);
    let mut i = first;
    loop {
        let j = first_non_specular_after(path, i)?;
        if endpoint_ok(path, j) {
            return Some(SplitPlan {
                eye_end: j,
                chain_starts,
            });
        }
        chain_starts.push(j);
        i = j;
    }
}

pub fn eligibility(path: &Path, kind: Perturbation) -> Option<SplitPlan> {
    match kind {
        Perturbation::Lens => lens_eligibility(path),
        Perturbation::MultiChain => multichain_eligibility(path),
    }
}

fn first_non_specular_after(path: &Path, i: usize) -> Option<usize> {
    (i + 1..path.len()).find(|&j| !path.vertices[j].is_specular)
}

fn endpoint_ok(path: &Path, s: usize) -> bool {
    let v = &path.vertices;
    if path.is_light_endpoint(s) {
        return true;
    }
    s + 1 < v.len() && !v[s].is_specular && !v[s].is_emitter() && !v[s + 1].is_specular
}

/// Probability of choosing `strategy` for `path`. The perturbation gets
/// `perturb_prob` when it can mutate the path; the large step takes the rest.
pub fn suitability(path: &Path, strategy: Strategy, perturbation: Perturbation, perturb_prob: f64) -> f64 {
    let applicable = eligibility(path, perturbation).is_some();
    let p = if applicable { perturb_prob } else { 0.0 };
    match strategy {
        Strategy::Perturb(k) if k == perturbation => p,
        Strategy::Perturb(_) => 0.0,
        Strategy::LargeStep => 1.0 - p,
    }
}

/// `min(1, π(ȳ) T(x̄|ȳ) s(j|ȳ) / (π(x̄) T(ȳ|x̄) s(j|x̄)))`.
pub fn mh_accept(
    pi_current: f64,
    pi_proposal: f64,
    forward_density: f64,
    reverse_density: f64,
    s_forward: f64,
    s_reverse: f64,
) -> Result<f64> {
    if !(pi_current > 0.0) {
        return Err(Error::InvalidState);
    }
    let num = pi_proposal * reverse_density * s_reverse;
    if !(num > 0.0) {
        return Ok(0.0);
    }
    let den = pi_current * forward_density * s_forward;
    let ratio = num / den;
    Ok(if ratio.is_nan() { 0.0 } else { ratio.min(1.0) })
}

/// An independent sample from the eye-path tracer.
#[derive(Clone, Debug)]
pub struct LargeStepSample {
    pub path: Path,
    pub contribution: Contribution,
    pub pdf: f64,
}

/// Regenerates a full path by eye tracing. Fails with [`Rejection::NoPath`]
/// when tracing stops before reaching an emitter.
pub fn large_step(
    scene: &SceneModel,
    rng: &mut RandomSequence,
    max_vertices: usize,
) -> std::result::Result<LargeStepSample, Rejection> {
    let eye = trace_eye_subpath(scene, rng, max_vertices);
    if !eye.reached_emitter() {
        return Err(Rejection::NoPath);
    }
    let pdf = eye.pdf();
    let contribution = eval_contribution_with(scene, &eye.path, |_| false);
    Ok(LargeStepSample {
        path: eye.path,
        contribution,
        pdf,
    })
}

/// Large-step proposal from `current`, whose path-sampling density is
/// `current_pdf` (see [`crate::path::path_pdf`]).
pub fn large_step_proposal(
    scene: &SceneModel,
    current_pdf: f64,
    rng: &mut RandomSequence,
    max_vertices: usize,
) -> std::result::Result<Proposal, Rejection> {
    let s = large_step(scene, rng, max_vertices)?;
    Ok(Proposal {
        strategy: Strategy::LargeStep,
        path: s.path,
        contribution: s.contribution,
        forward_density: s.pdf,
        reverse_density: current_pdf,
        kernel_factors: Vec::new(),
        plan: None,
    })
}

/// Kernel scales of a perturbation: `primary` for the camera direction,
/// `secondary` for every later chain start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelScales {
    pub primary: f64,
    pub secondary: f64,
}

impl KernelScales {
    pub fn uniform(sigma: f64) -> Self {
        KernelScales {
            primary: sigma,
            secondary: sigma,
        }
    }

    fn for_chain(&self, i: usize) -> f64 {
        if i == 0 {
            self.primary
        } else {
            self.secondary
        }
    }
}

pub fn lens_perturb(
    scene: &SceneModel,
    path: &Path,
    sigma1: f64,
    rng: &mut RandomSequence,
) -> std::result::Result<Proposal, Rejection> {
    let plan = lens_eligibility(path).ok_or(Rejection::Ineligible)?;
    perturb(
        scene,
        path,
        &plan,
        Perturbation::Lens,
        KernelScales::uniform(sigma1),
        rng,
    )
}

pub fn multichain_perturb(
    scene: &SceneModel,
    path: &Path,
    sigma1: f64,
    sigma2: f64,
    rng: &mut RandomSequence,
) -> std::result::Result<Proposal, Rejection> {
    let plan = multichain_eligibility(path).ok_or(Rejection::Ineligible)?;
    let scales = KernelScales {
        primary: sigma1,
        secondary: sigma2,
    };
    perturb(scene, path, &plan, Perturbation::MultiChain, scales, rng)
}

/// Runs a perturbation with a precomputed split.
pub fn perturb(
    scene: &SceneModel,
    path: &Path,
    plan: &SplitPlan,
    kind: Perturbation,
    scales: KernelScales,
    rng: &mut RandomSequence,
) -> std::result::Result<Proposal, Rejection> {
    let s = plan.eye_end;
    let mut vertices = path.vertices.clone();
    let mut kernel_factors = Vec::with_capacity(plan.chain_starts.len());

    for (ci, &c) in plan.chain_starts.iter().enumerate() {
        let chain_end = plan.chain_starts.get(ci + 1).copied().unwrap_or(s);
        let kernel = AngularKernel::new(scales.for_chain(ci)).map_err(|_| Rejection::Ineligible)?;
        let old_dir = path.direction(c);
        let mut dir = perturb_direction(old_dir, &kernel, rng);
        kernel_factors.push(kernel.direction_pdf(old_dir.angle_to(dir)));
        let mut origin = vertices[c].position;

        // j indexes the old path and the proposal in step
        #[allow(clippy::needless_range_loop)]
        for j in c + 1..=chain_end {
            let hit = scene.intersect(origin, dir).ok_or(Rejection::Miss)?;
            let v = PathVertex::surface(scene, &hit);
            if j < chain_end {
                if !v.is_specular {
                    return Err(Rejection::VertexMismatch);
                }
                let old = &path.vertices[j];
                let event = event_of(-path.direction(j - 1), path.direction(j), old.normal);
                dir = scene
                    .material(hit.material)
                    .specular_direction(-dir, hit.normal, event)
                    .ok_or(Rejection::TotalInternalReflection)?;
            } else if path.is_light_endpoint(j) {
                if !v.is_emitter() {
                    return Err(Rejection::VertexMismatch);
                }
            } else if v.is_specular || v.is_emitter() {
                return Err(Rejection::VertexMismatch);
            }
            vertices[j] = v;
            origin = v.position;
        }
    }

    let proposed = Path::new(vertices);
    // only the reconnection edge can be occluded
    let contribution = eval_contribution_with(scene, &proposed, |i| i == s);
    let forward_density = kernel_factors.iter().product::<f64>() * regenerated_jacobian(&proposed, s);
    let reverse_density = perturbation_density(path, &proposed, plan, scales);
    Ok(Proposal {
        strategy: Strategy::Perturb(kind),
        path: proposed,
        contribution,
        forward_density,
        reverse_density,
        kernel_factors,
        plan: Some(plan.clone()),
    })
}

/// `T(to | from)` for a perturbation with split `plan` and kernel `scales`.
/// Both paths must share the split structure.
pub fn perturbation_density(to: &Path, from: &Path, plan: &SplitPlan, scales: KernelScales) -> f64 {
    let mut density = regenerated_jacobian(to, plan.eye_end);
    for (ci, &c) in plan.chain_starts.iter().enumerate() {
        let Ok(kernel) = AngularKernel::new(scales.for_chain(ci)) else {
            return 0.0;
        };
        density *= kernel.direction_pdf(from.direction(c).angle_to(to.direction(c)));
    }
    density
}

/// `Π |cos θ_j| / d²(j−1, j)` over the regenerated vertices `1..=eye_end`.
fn regenerated_jacobian(path: &Path, eye_end: usize) -> f64 {
    let v = &path.vertices;
    (1..=eye_end)
        .map(|j| {
            let d = v[j].position - v[j - 1].position;
            let dist2 = d.length_squared();
            v[j].normal.dot(d).abs() / (dist2 * dist2.sqrt())
        })
        .product()
}
