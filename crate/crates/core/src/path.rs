//! Light paths from the sensor to an emitter and their measurement
//! contribution in the area-product measure.
//!
//! Vertices are indexed from 0 (the camera). Specular vertices follow the
//! Dirac convention used by every density in this crate: the delta factor
//! and the matching `1/|cos|` of a mirror or dielectric lobe are dropped
//! from both contributions and sampling densities, so all ratios stay finite.

use crate::math::{luminance, Rgb, Vec3};
use crate::sampling::{CanonicalPoint2, RandomSequence};
use crate::scene::{Material, SceneModel};

/// Maximum number of vertices in a path.
pub const MAX_PATH_VERTICES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VertexKind {
    Camera,
    Surface {
        shape: usize,
        material: usize,
        emitter: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathVertex {
    pub position: Vec3,
    /// Geometric normal; the view axis for the camera vertex.
    pub normal: Vec3,
    pub kind: VertexKind,
    pub is_specular: bool,
}

impl PathVertex {
    pub fn camera(scene: &SceneModel) -> Self {
        PathVertex {
            position: scene.camera.position,
            normal: scene.camera.forward,
            kind: VertexKind::Camera,
            is_specular: false,
        }
    }

    pub fn surface(scene: &SceneModel, hit: &crate::scene::Intersection) -> Self {
        let emitter = hit.emitter.is_some();
        PathVertex {
            position: hit.position,
            normal: hit.normal,
            kind: VertexKind::Surface {
                shape: hit.shape,
                material: hit.material,
                emitter,
            },
            is_specular: !emitter && scene.material(hit.material).is_specular(),
        }
    }

    pub fn is_emitter(&self) -> bool {
        matches!(self.kind, VertexKind::Surface { emitter: true, .. })
    }

    pub fn material(&self) -> Option<usize> {
        match self.kind {
            VertexKind::Surface { material, .. } => Some(material),
            VertexKind::Camera => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Path {
    pub vertices: Vec<PathVertex>,
}

impl Path {
    pub fn new(vertices: Vec<PathVertex>) -> Self {
        Path { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Unit direction from vertex `i` to vertex `i + 1`.
    pub fn direction(&self, i: usize) -> Vec3 {
        (self.vertices[i + 1].position - self.vertices[i].position).normalized()
    }

    pub fn primary_direction(&self) -> Vec3 {
        self.direction(0)
    }

    /// Complete paths start at the camera and end on an emitter, with no
    /// emitter in between.
    pub fn is_complete(&self) -> bool {
        let k = self.len();
        k >= 2
            && self.vertices[0].kind == VertexKind::Camera
            && self.vertices[k - 1].is_emitter()
            && self.vertices[1..k - 1]
                .iter()
                .all(|v| matches!(v.kind, VertexKind::Surface { emitter: false, .. }))
    }

    /// Whether vertex `i` is the emitter at the end of the path.
    pub fn is_light_endpoint(&self, i: usize) -> bool {
        i + 1 == self.len() && self.vertices[i].is_emitter()
    }

    /// Vertex types used to check structural compatibility of two paths.
    pub fn signature(&self) -> Vec<(bool, bool)> {
        self.vertices.iter().map(|v| (v.is_specular, v.is_emitter())).collect()
    }
}

/// Measurement contribution of a path together with its scalar target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contribution {
    pub f: Rgb,
    pub pi: f64,
    pub raster: CanonicalPoint2,
}

impl Contribution {
    pub fn zero() -> Self {
        Contribution {
            f: Rgb::ZERO,
            pi: 0.0,
            raster: CanonicalPoint2::new(0.0, 0.0),
        }
    }

    fn from_f(f: Rgb, raster: CanonicalPoint2) -> Self {
        // guard against round-off producing a negative channel
        let f = f.max_elem(Rgb::ZERO);
        let pi = luminance(f);
        if pi > 0.0 && pi.is_finite() {
            Contribution { f, pi, raster }
        } else {
            Contribution::zero()
        }
    }
}

/// `|cosθ_a| |cosθ_b| / ‖a − b‖²`, times binary visibility.
pub fn geometry_term(scene: &SceneModel, a: &PathVertex, b: &PathVertex) -> f64 {
    let d = b.position - a.position;
    let dist2 = d.length_squared();
    if dist2 == 0.0 || !scene.visible(a.position, b.position) {
        return 0.0;
    }
    let w = d / dist2.sqrt();
    a.normal.dot(w).abs() * b.normal.dot(w).abs() / dist2
}

/// Evaluates `f(x̄)`; invalid or occluded paths yield zero.
pub fn eval_contribution(scene: &SceneModel, path: &Path) -> Contribution {
    eval_contribution_with(scene, path, |_| true)
}

/// As [`eval_contribution`], testing visibility only for the segments
/// `i → i+1` where `check(i)` holds. Callers pass `false` for segments that
/// were produced by ray casting and are visible by construction.
pub(crate) fn eval_contribution_with(scene: &SceneModel, path: &Path, check: impl Fn(usize) -> bool) -> Contribution {
    if !path.is_complete() {
        return Contribution::zero();
    }
    let v = &path.vertices;
    let k = v.len();
    let cam = &scene.camera;
    let w0 = path.primary_direction();
    let Some(raster) = cam.raster_position(w0) else {
        return Contribution::zero();
    };
    let mut f = Rgb::splat(cam.importance(w0) * w0.dot(cam.forward));

    for i in 0..k - 1 {
        let d = v[i + 1].position - v[i].position;
        let dist2 = d.length_squared();
        if dist2 == 0.0 {
            return Contribution::zero();
        }
        if check(i) && !scene.visible(v[i].position, v[i + 1].position) {
            return Contribution::zero();
        }
        let w = d / dist2.sqrt();
        let cos_a = if i == 0 || v[i].is_specular {
            1.0
        } else {
            v[i].normal.dot(w).abs()
        };
        let cos_b = v[i + 1].normal.dot(w).abs();
        f *= cos_a * cos_b / dist2;

        if i > 0 {
            let wo = -path.direction(i - 1);
            let m = scene.material(v[i].material().expect("interior vertex is a surface"));
            let s = if v[i].is_specular {
                m.specular_weight(wo, w, v[i].normal)
            } else {
                m.eval(wo, w, v[i].normal)
            };
            f = f.mul_elem(s);
        }
        if f.is_zero() {
            return Contribution::zero();
        }
    }
    let VertexKind::Surface { shape, .. } = v[k - 1].kind else {
        return Contribution::zero();
    };
    let le = scene.emitted(shape, v[k - 1].normal, -path.direction(k - 2));
    Contribution::from_f(f.mul_elem(le), raster)
}

/// An eye subpath produced by camera-ray and BSDF sampling.
#[derive(Clone, Debug)]
pub struct EyeSubpath {
    pub path: Path,
    /// Density of each sampled direction: the camera direction per solid
    /// angle, then one BSDF density per bounce (event probability for
    /// specular bounces).
    pub direction_pdfs: Vec<f64>,
    /// Area density of every vertex after the camera.
    pub area_pdfs: Vec<f64>,
}

impl EyeSubpath {
    /// Product of the per-vertex area densities.
    pub fn pdf(&self) -> f64 {
        self.area_pdfs.iter().product()
    }

    pub fn reached_emitter(&self) -> bool {
        self.path.is_complete()
    }
}

/// Traces from the camera until a miss, an emitter hit, or `max_vertices`.
pub fn trace_eye_subpath(scene: &SceneModel, rng: &mut RandomSequence, max_vertices: usize) -> EyeSubpath {
    let mut path = Path::new(vec![PathVertex::camera(scene)]);
    let mut direction_pdfs = Vec::new();
    let mut area_pdfs = Vec::new();
    if max_vertices < 2 {
        return EyeSubpath {
            path,
            direction_pdfs,
            area_pdfs,
        };
    }
    let (mut dir, _) = scene.camera.sample_direction(rng);
    let mut pdf_dir = scene.camera.direction_pdf(dir);
    let mut origin = scene.camera.position;
    while let Some(hit) = scene.intersect(origin, dir) {
        let vertex = PathVertex::surface(scene, &hit);
        direction_pdfs.push(pdf_dir);
        area_pdfs.push(pdf_dir * hit.normal.dot(dir).abs() / (hit.t * hit.t));
        path.vertices.push(vertex);
        if vertex.is_emitter() || path.len() >= max_vertices {
            break;
        }
        let wo = -dir;
        let Some(s) = scene.material(hit.material).sample(wo, hit.normal, rng) else {
            break;
        };
        dir = s.wi;
        pdf_dir = s.pdf;
        origin = hit.position;
    }
    EyeSubpath {
        path,
        direction_pdfs,
        area_pdfs,
    }
}

/// Density with which [`trace_eye_subpath`] generates the complete path,
/// evaluated from its vertices alone.
pub fn path_pdf(scene: &SceneModel, path: &Path, max_vertices: usize) -> f64 {
    if !path.is_complete() || path.len() > max_vertices {
        return 0.0;
    }
    let v = &path.vertices;
    let mut pdf_dir = scene.camera.direction_pdf(path.primary_direction());
    let mut pdf = 1.0;
    for i in 0..v.len() - 1 {
        let d = v[i + 1].position - v[i].position;
        let dist2 = d.length_squared();
        let w = d / dist2.sqrt();
        if i > 0 {
            let wo = -path.direction(i - 1);
            let m: &Material = scene.material(v[i].material().expect("surface vertex"));
            pdf_dir = m.pdf(wo, w, v[i].normal);
        }
        pdf *= pdf_dir * v[i + 1].normal.dot(w).abs() / dist2;
        if pdf == 0.0 {
            return 0.0;
        }
    }
    pdf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::parse_scene;

    fn floor_scene() -> SceneModel {
        parse_scene(
            "camera 0 1 4  0 0.8 0  0 1 0  60
             material white diffuse 0.7 0.7 0.7
             material light diffuse 0 0 0
             tri -3 0 -3  -3 0 3  3 0 3  white
             tri -3 0 -3  3 0 3  3 0 -3  white
             tri -0.5 2 -0.5  0.5 2 -0.5  0.5 2 0.5  light
             tri -0.5 2 -0.5  0.5 2 0.5  -0.5 2 0.5  light
             emitter 2 5 5 5
             emitter 3 5 5 5",
            "floor",
        )
        .unwrap()
    }

    fn surface(scene: &SceneModel, origin: Vec3, target: Vec3) -> PathVertex {
        let dir = (target - origin).normalized();
        PathVertex::surface(scene, &scene.intersect(origin, dir).unwrap())
    }

    #[test]
    fn geometry_term_cases() {
        let s = floor_scene();
        let mk = |p: Vec3, n: Vec3| PathVertex {
            position: p,
            normal: n,
            kind: VertexKind::Surface {
                shape: 0,
                material: 0,
                emitter: false,
            },
            is_specular: false,
        };
        let a = mk(Vec3::new(0.0, 0.5, 0.0), Vec3::Y);
        let b = mk(Vec3::new(0.0, 1.5, 0.0), -Vec3::Y);
        assert!((geometry_term(&s, &a, &b) - 1.0).abs() < 1e-12);
        let c = mk(Vec3::new(0.0, 1.75, 0.0), -Vec3::Y);
        let g2 = geometry_term(&s, &a, &c);
        assert!((g2 - 1.0 / 1.5625).abs() < 1e-12);
        // the emitter quad sits at y = 2 and blocks the pair
        let d = mk(Vec3::new(0.0, 3.0, 0.0), -Vec3::Y);
        assert_eq!(geometry_term(&s, &a, &d), 0.0);
    }

    #[test]
    fn occluded_segment_gives_zero() {
        let s = floor_scene();
        let cam = PathVertex::camera(&s);
        let floor = surface(&s, cam.position, Vec3::new(0.3, 0.0, 1.0));
        let light = surface(&s, floor.position, Vec3::new(0.0, 2.0, 0.0));
        let p = Path::new(vec![cam, floor, light]);
        assert!(p.is_complete());
        assert!(eval_contribution(&s, &p).pi > 0.0);

        // the light quad sits between the floor vertex and an endpoint above it
        let mut blocked = p.clone();
        blocked.vertices[1].position = Vec3::new(0.0, 0.0, -0.2);
        blocked.vertices[2].position = Vec3::new(0.0, 4.0, -0.2);
        assert_eq!(eval_contribution(&s, &blocked).pi, 0.0);
    }

    #[test]
    fn contribution_is_linear_in_emission() {
        let s = floor_scene();
        let s2 = s.scaled_emission(2.0);
        let mut rng = RandomSequence::new(1, 0);
        let mut n = 0;
        while n < 50 {
            let e = trace_eye_subpath(&s, &mut rng, 5);
            if !e.reached_emitter() {
                continue;
            }
            let a = eval_contribution(&s, &e.path);
            let b = eval_contribution(&s2, &e.path);
            assert_eq!(b.pi, 2.0 * a.pi);
            n += 1;
        }
    }

    #[test]
    fn luminance_and_determinism() {
        let s = floor_scene();
        let mut rng = RandomSequence::new(2, 0);
        let mut n = 0;
        while n < 50 {
            let e = trace_eye_subpath(&s, &mut rng, 3);
            let c = eval_contribution(&s, &e.path);
            if c.pi == 0.0 {
                continue;
            }
            assert_eq!(c.pi, 0.2126 * c.f.x + 0.7152 * c.f.y + 0.0722 * c.f.z);
            assert_eq!(eval_contribution(&s, &e.path), c);
            n += 1;
        }
    }

    #[test]
    fn single_vertex_subpath() {
        let s = floor_scene();
        let mut rng = RandomSequence::new(3, 0);
        let e = trace_eye_subpath(&s, &mut rng, 1);
        assert_eq!(e.path.len(), 1);
        assert!(e.area_pdfs.is_empty());
    }

    #[test]
    fn area_pdfs_rederivable_from_vertices() {
        let s = floor_scene();
        let mut rng = RandomSequence::new(4, 0);
        for _ in 0..200 {
            let e = trace_eye_subpath(&s, &mut rng, 6);
            for (i, (&pa, &ps)) in e.area_pdfs.iter().zip(&e.direction_pdfs).enumerate() {
                let a = e.path.vertices[i].position;
                let b = &e.path.vertices[i + 1];
                let d = b.position - a;
                let expect = ps * b.normal.dot(d.normalized()).abs() / d.length_squared();
                assert!((pa - expect).abs() <= 1e-9 * expect);
            }
            if e.reached_emitter() {
                let p = path_pdf(&s, &e.path, 6);
                assert!((p - e.pdf()).abs() <= 1e-9 * p);
            }
        }
    }

    #[test]
    fn direct_view_matches_radiance_times_importance() {
        let s = floor_scene();
        let cam = PathVertex::camera(&s);
        let light = surface(&s, cam.position, Vec3::new(0.1, 2.0, 0.05));
        let path = Path::new(vec![cam, light]);
        let c = eval_contribution(&s, &path);
        assert!(c.pi > 0.0);
        let w = path.primary_direction();
        let VertexKind::Surface { shape, .. } = light.kind else {
            unreachable!()
        };
        let le = s.emitted(shape, light.normal, -w);
        let g = geometry_term(&s, &cam, &light);
        let expect = s.camera.importance(w) * le.x * g;
        assert!((c.f.x - expect).abs() <= 1e-12 * expect.max(1e-300));
    }
}
