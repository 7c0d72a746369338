//! Scene description: shapes, materials, area emitters and a pinhole camera.

mod camera;
mod material;
mod parse;

pub use camera::Camera;
pub use material::{event_of, fresnel_dielectric, refract, BsdfSample, Material, SpecularEvent};
pub use parse::parse_scene;

use std::path::Path;

use crate::error::{Error, Result};
use crate::math::{Rgb, Vec3};

/// Minimum ray parameter accepted as a hit.
pub const RAY_EPSILON: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Sphere { center: Vec3, radius: f64 },
    Triangle { a: Vec3, b: Vec3, c: Vec3 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    pub geometry: Geometry,
    pub material: usize,
    /// Radiance leaving the front face, if this shape is an emitter.
    pub emission: Option<Rgb>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intersection {
    pub position: Vec3,
    /// Geometric normal; outward for spheres, right-handed winding for triangles.
    pub normal: Vec3,
    pub t: f64,
    pub shape: usize,
    pub material: usize,
    pub emitter: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneModel {
    pub camera: Camera,
    pub materials: Vec<Material>,
    pub shapes: Vec<Shape>,
    /// Indices into `shapes` of emitting geometry.
    pub emitters: Vec<usize>,
}

impl SceneModel {
    pub fn new(camera: Camera, materials: Vec<Material>, shapes: Vec<Shape>) -> Result<SceneModel> {
        for (i, m) in materials.iter().enumerate() {
            m.validate()
                .map_err(|e| Error::InvalidScene(format!("material {i}: {e}")))?;
        }
        let mut emitters = Vec::new();
        for (i, s) in shapes.iter().enumerate() {
            if s.material >= materials.len() {
                return Err(Error::InvalidScene(format!(
                    "shape {i} uses unknown material {}",
                    s.material
                )));
            }
            if let Geometry::Sphere { radius, .. } = s.geometry {
                if !(radius > 0.0) {
                    return Err(Error::InvalidScene(format!("sphere {i} has radius {radius}")));
                }
            }
            if let Some(e) = s.emission {
                if !(e.min_component() >= 0.0) || !e.is_finite() {
                    return Err(Error::InvalidScene(format!("emitter {i} has negative radiance")));
                }
                emitters.push(i);
            }
        }
        if emitters.is_empty() {
            return Err(Error::InvalidScene("scene has no emitters".into()));
        }
        Ok(SceneModel {
            camera,
            materials,
            shapes,
            emitters,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SceneModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_scene(&text, &path.display().to_string())
    }

    pub fn with_resolution(&self, width: usize, height: usize) -> Result<SceneModel> {
        let mut s = self.clone();
        s.camera = self.camera.with_resolution(width, height)?;
        Ok(s)
    }

    /// Copy of the scene with all emitted radiance multiplied by `k`.
    pub fn scaled_emission(&self, k: f64) -> SceneModel {
        let mut s = self.clone();
        for sh in &mut s.shapes {
            if let Some(e) = sh.emission.as_mut() {
                *e *= k;
            }
        }
        s
    }

    pub fn material(&self, id: usize) -> &Material {
        &self.materials[id]
    }

    /// Emitted radiance of `shape` towards `w` (one-sided, along the normal).
    pub fn emitted(&self, shape: usize, normal: Vec3, w: Vec3) -> Rgb {
        match self.shapes[shape].emission {
            Some(le) if normal.dot(w) > 0.0 => le,
            _ => Rgb::ZERO,
        }
    }

    /// Nearest hit along the ray with `t > RAY_EPSILON`.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<Intersection> {
        self.intersect_within(origin, dir, f64::INFINITY)
    }

    fn intersect_within(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<Intersection> {
        let mut best_t = t_max;
        let mut best: Option<usize> = None;
        for (i, s) in self.shapes.iter().enumerate() {
            if let Some(t) = hit_geometry(&s.geometry, origin, dir, RAY_EPSILON, best_t) {
                best_t = t;
                best = Some(i);
            }
        }
        let i = best?;
        let s = &self.shapes[i];
        let position = origin + dir * best_t;
        let normal = match s.geometry {
            Geometry::Sphere { center, radius } => (position - center) / radius,
            Geometry::Triangle { a, b, c } => (b - a).cross(c - a).normalized(),
        };
        Some(Intersection {
            position,
            normal: normal.normalized(),
            t: best_t,
            shape: i,
            material: s.material,
            emitter: s.emission.map(|_| i),
        })
    }

    /// Whether the open segment between two points is unobstructed.
    pub fn visible(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let dist = d.length();
        if dist <= 2.0 * RAY_EPSILON {
            return true;
        }
        let dir = d / dist;
        let t_max = dist - RAY_EPSILON;
        !self
            .shapes
            .iter()
            .any(|s| hit_geometry(&s.geometry, a, dir, RAY_EPSILON, t_max).is_some())
    }
}

fn hit_geometry(g: &Geometry, o: Vec3, d: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
    match *g {
        Geometry::Sphere { center, radius } => {
            let oc = o - center;
            let b = oc.dot(d);
            let c = oc.length_squared() - radius * radius;
            let disc = b * b - c;
            if disc < 0.0 {
                return None;
            }
            let sq = disc.sqrt();
            let t0 = -b - sq;
            if t0 > t_min && t0 < t_max {
                return Some(t0);
            }
            let t1 = -b + sq;
            (t1 > t_min && t1 < t_max).then_some(t1)
        }
        Geometry::Triangle { a, b, c } => {
            // Möller–Trumbore
            let e1 = b - a;
            let e2 = c - a;
            let p = d.cross(e2);
            let det = e1.dot(p);
            if det.abs() < 1e-14 {
                return None;
            }
            let inv = 1.0 / det;
            let s = o - a;
            let u = s.dot(p) * inv;
            if !(0.0..=1.0).contains(&u) {
                return None;
            }
            let q = s.cross(e1);
            let v = d.dot(q) * inv;
            if v < 0.0 || u + v > 1.0 {
                return None;
            }
            let t = e2.dot(q) * inv;
            (t > t_min && t < t_max).then_some(t)
        }
    }
}
