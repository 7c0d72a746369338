use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::sampling::{CanonicalPoint2, RandomSequence};

/// Pinhole camera with a box-filtered film. The film sits at unit distance
/// along `forward`; canonical `v` grows downward so that `(0, 0)` is the
/// top-left corner of the image.
#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub forward: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub fov_deg: f64,
    width: usize,
    height: usize,
    half_w: f64,
    half_h: f64,
}

impl Camera {
    pub fn new(
        position: Vec3,
        look_at: Vec3,
        up_hint: Vec3,
        fov_deg: f64,
        width: usize,
        height: usize,
    ) -> Result<Camera> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::InvalidScene(format!("field of view {fov_deg} out of (0, 180)")));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidScene("film resolution must be at least 1x1".into()));
        }
        let forward = look_at - position;
        if forward.length() == 0.0 {
            return Err(Error::InvalidScene("camera looks at its own position".into()));
        }
        let forward = forward.normalized();
        let right = forward.cross(up_hint);
        if right.length() < 1e-12 {
            return Err(Error::InvalidScene("camera up vector is parallel to view".into()));
        }
        let right = right.normalized();
        let up = right.cross(forward);
        let half_h = (fov_deg.to_radians() * 0.5).tan();
        let half_w = half_h * width as f64 / height as f64;
        Ok(Camera {
            position,
            forward,
            right,
            up,
            fov_deg,
            width,
            height,
            half_w,
            half_h,
        })
    }

    pub fn with_resolution(&self, width: usize, height: usize) -> Result<Camera> {
        Camera::new(
            self.position,
            self.position + self.forward,
            self.up,
            self.fov_deg,
            width,
            height,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Film area at unit distance.
    pub fn film_area(&self) -> f64 {
        4.0 * self.half_w * self.half_h
    }

    /// Direction of the primary ray through canonical point `(u, v)`.
    pub fn primary_ray(&self, p: CanonicalPoint2) -> Vec3 {
        let x = (2.0 * p.u - 1.0) * self.half_w;
        let y = (1.0 - 2.0 * p.v) * self.half_h;
        (self.forward + self.right * x + self.up * y).normalized()
    }

    pub fn raster_position(&self, omega: Vec3) -> Option<CanonicalPoint2> {
        let c = omega.dot(self.forward);
        if !(c > 0.0) {
            return None;
        }
        let x = omega.dot(self.right) / c;
        let y = omega.dot(self.up) / c;
        let u = 0.5 * (x / self.half_w + 1.0);
        let v = 0.5 * (1.0 - y / self.half_h);
        if (0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v) {
            Some(CanonicalPoint2 { u, v })
        } else {
            None
        }
    }

    /// Pixel containing a canonical point; coordinates equal to 1 clamp into
    /// the last row/column.
    pub fn pixel(&self, p: CanonicalPoint2) -> (usize, usize) {
        let x = ((p.u * self.width as f64) as usize).min(self.width - 1);
        let y = ((p.v * self.height as f64) as usize).min(self.height - 1);
        (x, y)
    }

    /// Sensor importance per unit projected solid angle, scaled so that each
    /// pixel measures its mean incident radiance.
    pub fn importance(&self, omega: Vec3) -> f64 {
        if self.raster_position(omega).is_none() {
            return 0.0;
        }
        let c = omega.dot(self.forward);
        self.pixel_count() as f64 / (self.film_area() * c * c * c * c)
    }

    /// Solid-angle density of sampling `omega` uniformly over the film.
    pub fn direction_pdf(&self, omega: Vec3) -> f64 {
        if self.raster_position(omega).is_none() {
            return 0.0;
        }
        let c = omega.dot(self.forward);
        1.0 / (self.film_area() * c * c * c)
    }

    pub fn sample_direction(&self, rng: &mut RandomSequence) -> (Vec3, CanonicalPoint2) {
        let p = CanonicalPoint2::new(rng.uniform(), rng.uniform());
        (self.primary_ray(p), p)
    }
}
