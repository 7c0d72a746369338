//! Shared helpers for integration tests: an independent brute-force path
//! tracer and a few statistics.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ramlt_core::image_io::Image;
use ramlt_core::math::{luminance, Frame, Rgb, Vec3};
use ramlt_core::sampling::CanonicalPoint2;
use ramlt_core::scene::{fresnel_dielectric, refract, Material, SceneModel};

pub fn scene_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name)
}

pub fn load_scene(name: &str, w: usize, h: usize) -> SceneModel {
    SceneModel::load(scene_path(name))
        .unwrap()
        .with_resolution(w, h)
        .unwrap()
}

pub struct Reference {
    pub image: Image,
    /// Sum of pixel luminances, i.e. the normalization constant.
    pub b: f64,
    pub b_std_error: f64,
    /// Standard error of each pixel's mean luminance, row-major.
    pub pixel_std_error: Vec<f64>,
}

fn cosine_dir(n: Vec3, rng: &mut ChaCha8Rng) -> (Vec3, f64) {
    let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
    let r = u1.sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    let local = Vec3::new(r * phi.cos(), r * phi.sin(), z);
    (Frame::from_normal(n).to_world(local), z / std::f64::consts::PI)
}

/// Radiance along a camera ray, terminating at the first emitter hit or
/// after `max_vertices` path vertices (camera included).
fn radiance(scene: &SceneModel, mut origin: Vec3, mut dir: Vec3, max_vertices: usize, rng: &mut ChaCha8Rng) -> Rgb {
    let mut beta = Rgb::splat(1.0);
    let mut vertices = 1;
    loop {
        let Some(hit) = scene.intersect(origin, dir) else {
            return Rgb::ZERO;
        };
        vertices += 1;
        if hit.emitter.is_some() {
            return beta.mul_elem(scene.emitted(hit.shape, hit.normal, -dir));
        }
        if vertices >= max_vertices {
            return Rgb::ZERO;
        }
        let wo = -dir;
        let n = hit.normal;
        match scene.material(hit.material) {
            Material::Mirror { reflectance } => {
                beta = beta.mul_elem(*reflectance);
                dir = wo.reflect(n);
            }
            Material::Dielectric { ior, transmittance } => {
                let f = fresnel_dielectric(wo.dot(n), *ior);
                if rng.gen::<f64>() < f {
                    dir = wo.reflect(n);
                } else {
                    match refract(wo, n, *ior) {
                        Some(t) => {
                            beta = beta.mul_elem(*transmittance);
                            dir = t;
                        }
                        None => return Rgb::ZERO,
                    }
                }
            }
            m => {
                let side = if wo.dot(n) >= 0.0 { n } else { -n };
                let (wi, pdf) = cosine_dir(side, rng);
                if pdf <= 0.0 {
                    return Rgb::ZERO;
                }
                beta = beta.mul_elem(m.eval(wo, wi, n) * (wi.dot(side) / pdf));
                dir = wi;
            }
        }
        if beta.is_zero() {
            return Rgb::ZERO;
        }
        origin = hit.position;
    }
}

/// Path-traced pixel means with `spp` jittered samples per pixel.
pub fn brute_force(scene: &SceneModel, spp: u64, max_vertices: usize, seed: u64) -> Reference {
    let cam = &scene.camera;
    let (w, h) = (cam.width(), cam.height());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = Image::new(w, h);
    let (mut b, mut var_b) = (0.0, 0.0);
    let mut pixel_std_error = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (mut sum, mut lum, mut lum2) = (Rgb::ZERO, 0.0, 0.0);
            for _ in 0..spp {
                let p = CanonicalPoint2::new(
                    (x as f64 + rng.gen::<f64>()) / w as f64,
                    (y as f64 + rng.gen::<f64>()) / h as f64,
                );
                let l = radiance(
                    scene,
                    cam.position,
                    cam.primary_ray(p).normalized(),
                    max_vertices,
                    &mut rng,
                );
                sum += l;
                let y = luminance(l);
                lum += y;
                lum2 += y * y;
            }
            let n = spp as f64;
            img.set(x, y, sum / n);
            let mean = lum / n;
            b += mean;
            let var = (lum2 / n - mean * mean).max(0.0) / (n - 1.0).max(1.0);
            var_b += var;
            pixel_std_error.push(var.sqrt());
        }
    }
    Reference {
        image: img,
        b,
        b_std_error: var_b.sqrt(),
        pixel_std_error,
    }
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`, and its
/// asymptotic p-value.
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sq = n.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    (d, p.clamp(0.0, 1.0))
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    // start from many panels so narrow peaks are not missed
    let panels = 64;
    let hpanel = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * hpanel, a + (i + 1) as f64 * hpanel);
            let (f0, f1) = (f(x0), f(x1));
            let (m, fm, whole) = simpson(f, x0, f0, x1, f1);
            rec(f, x0, f0, x1, f1, m, fm, whole, tol / panels as f64, 50)
        })
        .sum()
}
