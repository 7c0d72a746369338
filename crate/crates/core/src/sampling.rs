//! Seedable random streams, the truncated-normal angular kernel used to
//! perturb ray directions, and the canonical-space mappings that project
//! directions onto the unit square.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math::{Frame, Vec3};
use crate::scene::Camera;

/// A reproducible random stream. Each `(seed, stream)` pair names an
/// independent ChaCha8 keystream, so every chain can own its own sequence.
#[derive(Clone, Debug)]
pub struct RandomSequence {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSequence {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSequence { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform sample in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RandomSequence {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Normal distribution centred at zero and truncated to `[-π, π]`; it
/// governs the polar offset of a perturbed direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularKernel {
    sigma: f64,
    /// `Φ(π/σ) − Φ(−π/σ)`
    mass: f64,
}

impl AngularKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidKernel(sigma));
        }
        let mass = statrs::function::erf::erf(PI / sigma * FRAC_1_SQRT_2);
        Ok(AngularKernel { sigma, mass })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Density per radian of the polar offset `theta`.
    pub fn pdf(&self, theta: f64) -> f64 {
        if !(theta.abs() <= PI) {
            return 0.0;
        }
        let z = theta / self.sigma;
        let phi = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        phi / (self.sigma * self.mass)
    }

    /// Exact rejection sampler. Narrow kernels propose from the untruncated
    /// normal; wide kernels propose uniformly on `[-π, π]` and accept with
    /// the Gaussian weight. Both acceptance rates stay above one half.
    pub fn sample(&self, rng: &mut RandomSequence) -> f64 {
        if self.sigma < 1.0 {
            loop {
                let theta = self.sigma * rng.standard_normal();
                if theta.abs() <= PI {
                    return theta;
                }
            }
        } else {
            loop {
                let theta = PI * (2.0 * rng.uniform() - 1.0);
                let z = theta / self.sigma;
                if rng.uniform() < (-0.5 * z * z).exp() {
                    return theta;
                }
            }
        }
    }

    /// Density per unit solid angle of moving a direction by `angle`
    /// radians (azimuth uniform). Symmetric in the two directions.
    pub fn direction_pdf(&self, angle: f64) -> f64 {
        // |θ| folds both signs of the offset onto the same cone.
        let s = angle.sin().abs().max(1e-300);
        self.pdf(angle) / (PI * s)
    }
}

/// Perturbs `omega` by a polar offset drawn from `kernel` and a uniform azimuth.
pub fn perturb_direction(omega: Vec3, kernel: &AngularKernel, rng: &mut RandomSequence) -> Vec3 {
    let theta = kernel.sample(rng);
    let phi = 2.0 * PI * rng.uniform();
    let (st, ct) = theta.sin_cos();
    let local = Vec3::new(st * phi.cos(), st * phi.sin(), ct);
    Frame::from_normal(omega).to_world(local).normalized()
}

/// Density per solid angle of `perturb_direction` proposing `to` from `from`.
pub fn perturb_direction_pdf(from: Vec3, to: Vec3, kernel: &AngularKernel) -> f64 {
    kernel.direction_pdf(from.angle_to(to))
}

/// A point of the canonical unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalPoint2 {
    pub u: f64,
    pub v: f64,
}

impl CanonicalPoint2 {
    pub fn new(u: f64, v: f64) -> Self {
        CanonicalPoint2 { u, v }
    }
}

/// Screen-space position of a primary direction; `None` when it leaves the
/// view frustum.
pub fn raster_position(omega: Vec3, camera: &Camera) -> Option<CanonicalPoint2> {
    camera.raster_position(omega)
}

/// Archimedes' cylindrical projection `(azimuth / 2π, (z + 1) / 2)`. Equal
/// canonical areas map to equal solid angles.
pub fn cylindrical_coords(omega: Vec3) -> CanonicalPoint2 {
    let mut u = omega.y.atan2(omega.x) / (2.0 * PI);
    if u < 0.0 {
        u += 1.0;
    }
    if u >= 1.0 {
        u = 0.0;
    }
    let v = ((omega.z + 1.0) * 0.5).clamp(0.0, 1.0);
    CanonicalPoint2 { u, v }
}

/// Inverse of [`cylindrical_coords`].
pub fn direction_from_cylindrical(p: CanonicalPoint2) -> Vec3 {
    let z = 2.0 * p.v - 1.0;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * p.u;
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

pub fn uniform_sphere(rng: &mut RandomSequence) -> Vec3 {
    direction_from_cylindrical(CanonicalPoint2::new(rng.uniform(), rng.uniform()))
}

/// Cosine-weighted direction about +z.
pub fn cosine_hemisphere(rng: &mut RandomSequence) -> Vec3 {
    let r = rng.uniform().sqrt();
    let phi = 2.0 * PI * rng.uniform();
    let z = (1.0 - r * r).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}
