//! Material models. Directions follow the convention that both `wo`
//! (towards the eye side of the path) and `wi` (towards the light side)
//! point away from the surface.

use std::f64::consts::PI;

use crate::math::{Frame, Rgb, Vec3};
use crate::sampling::{cosine_hemisphere, RandomSequence};

#[derive(Clone, Debug, PartialEq)]
pub enum Material {
    Diffuse { albedo: Rgb },
    Mirror { reflectance: Rgb },
    Dielectric { ior: f64, transmittance: Rgb },
    Glossy { albedo: Rgb, exponent: f64 },
}

/// Which way a specular vertex scatters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecularEvent {
    Reflect,
    Transmit,
}

#[derive(Clone, Copy, Debug)]
pub struct BsdfSample {
    pub wi: Vec3,
    /// Solid-angle density for non-delta lobes, discrete event
    /// probability for delta lobes.
    pub pdf: f64,
    pub is_delta: bool,
}

impl Material {
    pub fn is_specular(&self) -> bool {
        matches!(self, Material::Mirror { .. } | Material::Dielectric { .. })
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let in_unit = |c: Rgb| c.min_component() >= 0.0 && c.max_component() <= 1.0;
        match *self {
            Material::Diffuse { albedo } | Material::Glossy { albedo, .. } if !in_unit(albedo) => {
                Err("albedo must lie in [0,1]".into())
            }
            Material::Mirror { reflectance } if !in_unit(reflectance) => Err("reflectance must lie in [0,1]".into()),
            Material::Dielectric { ior, .. } if !(ior > 1.0) => Err("ior must exceed 1".into()),
            Material::Dielectric { transmittance, .. } if !in_unit(transmittance) => {
                Err("transmittance must lie in [0,1]".into())
            }
            Material::Glossy { exponent, .. } if !(exponent > 0.0) => Err("glossy exponent must be positive".into()),
            _ => Ok(()),
        }
    }

    /// BSDF value for non-delta materials; zero for specular ones or when
    /// the two directions lie on opposite sides of the surface.
    pub fn eval(&self, wo: Vec3, wi: Vec3, n: Vec3) -> Rgb {
        let Some(ns) = same_side_normal(wo, wi, n) else {
            return Rgb::ZERO;
        };
        match *self {
            Material::Diffuse { albedo } => albedo / PI,
            Material::Glossy { albedo, exponent } => {
                let c = wi.dot(wo.reflect(ns));
                if c <= 0.0 {
                    Rgb::ZERO
                } else {
                    albedo * ((exponent + 2.0) / (2.0 * PI) * c.powf(exponent))
                }
            }
            Material::Mirror { .. } | Material::Dielectric { .. } => Rgb::ZERO,
        }
    }

    /// Density with which `sample` produces `wi` given `wo`.
    pub fn pdf(&self, wo: Vec3, wi: Vec3, n: Vec3) -> f64 {
        match *self {
            Material::Diffuse { .. } => match same_side_normal(wo, wi, n) {
                Some(ns) => wi.dot(ns) / PI,
                None => 0.0,
            },
            Material::Glossy { exponent, .. } => {
                let ns = facing(wo, n);
                let c = wi.dot(wo.reflect(ns));
                if c <= 0.0 {
                    0.0
                } else {
                    (exponent + 1.0) / (2.0 * PI) * c.powf(exponent)
                }
            }
            Material::Mirror { .. } => 1.0,
            Material::Dielectric { ior, .. } => {
                let f = fresnel_dielectric(wo.dot(n), ior);
                match event_of(wo, wi, n) {
                    SpecularEvent::Reflect => f,
                    SpecularEvent::Transmit => 1.0 - f,
                }
            }
        }
    }

    pub fn sample(&self, wo: Vec3, n: Vec3, rng: &mut RandomSequence) -> Option<BsdfSample> {
        match *self {
            Material::Diffuse { .. } => {
                let ns = facing(wo, n);
                let local = cosine_hemisphere(rng);
                let wi = Frame::from_normal(ns).to_world(local);
                let pdf = local.z / PI;
                (pdf > 0.0).then_some(BsdfSample {
                    wi,
                    pdf,
                    is_delta: false,
                })
            }
            Material::Glossy { exponent, .. } => {
                let ns = facing(wo, n);
                let r = wo.reflect(ns);
                let u1 = rng.uniform();
                let u2 = rng.uniform();
                let cos_a = u1.powf(1.0 / (exponent + 1.0));
                let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
                let phi = 2.0 * PI * u2;
                let wi = Frame::from_normal(r)
                    .to_world(Vec3::new(sin_a * phi.cos(), sin_a * phi.sin(), cos_a))
                    .normalized();
                if wi.dot(ns) <= 0.0 {
                    return None;
                }
                let pdf = self.pdf(wo, wi, n);
                (pdf > 0.0).then_some(BsdfSample {
                    wi,
                    pdf,
                    is_delta: false,
                })
            }
            Material::Mirror { .. } => Some(BsdfSample {
                wi: wo.reflect(n),
                pdf: 1.0,
                is_delta: true,
            }),
            Material::Dielectric { ior, .. } => {
                let f = fresnel_dielectric(wo.dot(n), ior);
                if rng.uniform() < f {
                    Some(BsdfSample {
                        wi: wo.reflect(n),
                        pdf: f,
                        is_delta: true,
                    })
                } else {
                    let wi = refract(wo, n, ior)?;
                    Some(BsdfSample {
                        wi,
                        pdf: 1.0 - f,
                        is_delta: true,
                    })
                }
            }
        }
    }

    /// Deterministic continuation through a specular vertex, keeping the
    /// scattering event fixed.
    pub fn specular_direction(&self, wo: Vec3, n: Vec3, event: SpecularEvent) -> Option<Vec3> {
        match (self, event) {
            (Material::Mirror { .. }, SpecularEvent::Reflect) => Some(wo.reflect(n)),
            (Material::Dielectric { .. }, SpecularEvent::Reflect) => Some(wo.reflect(n)),
            (Material::Dielectric { ior, .. }, SpecularEvent::Transmit) => refract(wo, n, *ior),
            _ => None,
        }
    }

    /// Throughput of a specular vertex with the Dirac factor and the
    /// `1/|cos|` projection removed. Zero for non-specular materials.
    pub fn specular_weight(&self, wo: Vec3, wi: Vec3, n: Vec3) -> Rgb {
        match *self {
            Material::Mirror { reflectance } => match event_of(wo, wi, n) {
                SpecularEvent::Reflect => reflectance,
                SpecularEvent::Transmit => Rgb::ZERO,
            },
            Material::Dielectric { ior, transmittance } => {
                let f = fresnel_dielectric(wo.dot(n), ior);
                match event_of(wo, wi, n) {
                    SpecularEvent::Reflect => Rgb::splat(f),
                    SpecularEvent::Transmit => transmittance * (1.0 - f),
                }
            }
            _ => Rgb::ZERO,
        }
    }
}

/// Reflection when both directions share a side of the surface.
pub fn event_of(wo: Vec3, wi: Vec3, n: Vec3) -> SpecularEvent {
    if wo.dot(n) * wi.dot(n) > 0.0 {
        SpecularEvent::Reflect
    } else {
        SpecularEvent::Transmit
    }
}

fn facing(wo: Vec3, n: Vec3) -> Vec3 {
    if wo.dot(n) < 0.0 {
        -n
    } else {
        n
    }
}

fn same_side_normal(wo: Vec3, wi: Vec3, n: Vec3) -> Option<Vec3> {
    let ns = facing(wo, n);
    (wo.dot(ns) > 0.0 && wi.dot(ns) > 0.0).then_some(ns)
}

/// Unpolarised Fresnel reflectance. `cos_o` is measured against the
/// outward normal; negative values mean the ray arrives from inside.
pub fn fresnel_dielectric(cos_o: f64, ior: f64) -> f64 {
    let (eta_i, eta_t, cos_i) = if cos_o >= 0.0 {
        (1.0, ior, cos_o)
    } else {
        (ior, 1.0, -cos_o)
    };
    let sin_t = eta_i / eta_t * (1.0 - cos_i * cos_i).max(0.0).sqrt();
    if sin_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin_t * sin_t).max(0.0).sqrt();
    let rs = (eta_i * cos_i - eta_t * cos_t) / (eta_i * cos_i + eta_t * cos_t);
    let rp = (eta_t * cos_i - eta_i * cos_t) / (eta_t * cos_i + eta_i * cos_t);
    0.5 * (rs * rs + rp * rp)
}

/// Refracted direction of `wo` through the interface; `None` on total
/// internal reflection.
pub fn refract(wo: Vec3, n: Vec3, ior: f64) -> Option<Vec3> {
    let (eta, nn) = if wo.dot(n) >= 0.0 { (1.0 / ior, n) } else { (ior, -n) };
    let cos_i = wo.dot(nn);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i).max(0.0);
    if sin2_t >= 1.0 {
        return None;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    Some((-wo * eta + nn * (eta * cos_i - cos_t)).normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::uniform_sphere;

    #[test]
    fn lambertian_constant() {
        let m = Material::Diffuse {
            albedo: Rgb::splat(0.5),
        };
        let mut rng = RandomSequence::new(2, 0);
        for _ in 0..100 {
            let wo = cosine_hemisphere(&mut rng);
            let wi = cosine_hemisphere(&mut rng);
            assert_eq!(m.eval(wo, wi, Vec3::Z), Rgb::splat(0.5 / PI));
        }
        assert_eq!(m.eval(Vec3::Z, -Vec3::Z, Vec3::Z), Rgb::ZERO);
    }

    #[test]
    fn sample_pdf_self_consistent() {
        let mats = [
            Material::Diffuse {
                albedo: Rgb::splat(0.7),
            },
            Material::Glossy {
                albedo: Rgb::splat(0.7),
                exponent: 30.0,
            },
        ];
        let mut rng = RandomSequence::new(3, 0);
        let n = Vec3::new(0.1, 0.2, 1.0).normalized();
        for m in &mats {
            for _ in 0..1000 {
                let wo = Frame::from_normal(n).to_world(cosine_hemisphere(&mut rng));
                if let Some(s) = m.sample(wo, n, &mut rng) {
                    assert!((s.pdf - m.pdf(wo, s.wi, n)).abs() <= 1e-12 * s.pdf.max(1.0));
                }
            }
        }
    }

    #[test]
    fn reciprocity() {
        let mats = [
            Material::Diffuse {
                albedo: Rgb::new(0.2, 0.5, 0.9),
            },
            Material::Glossy {
                albedo: Rgb::splat(0.8),
                exponent: 12.0,
            },
        ];
        let mut rng = RandomSequence::new(4, 0);
        for m in &mats {
            for _ in 0..1000 {
                let a = uniform_sphere(&mut rng);
                let b = uniform_sphere(&mut rng);
                let n = uniform_sphere(&mut rng);
                let (f, g) = (m.eval(a, b, n), m.eval(b, a, n));
                assert!((f - g).length() <= 1e-14 * f.length().max(1.0));
            }
        }
    }

    #[test]
    fn energy_conservation() {
        let albedo = 0.9;
        let mats = [
            Material::Diffuse {
                albedo: Rgb::splat(albedo),
            },
            Material::Glossy {
                albedo: Rgb::splat(albedo),
                exponent: 5.0,
            },
            Material::Glossy {
                albedo: Rgb::splat(albedo),
                exponent: 100.0,
            },
        ];
        let mut rng = RandomSequence::new(6, 0);
        for m in &mats {
            for wo in [
                Vec3::Z,
                Vec3::new(0.6, 0.0, 0.8),
                Vec3::new(0.99, 0.0, 0.141).normalized(),
            ] {
                // uniform-hemisphere quadrature, independent of the sampler
                let n = 1_000_000;
                let mut sum = 0.0;
                for _ in 0..n {
                    let mut w = uniform_sphere(&mut rng);
                    if w.z < 0.0 {
                        w.z = -w.z;
                    }
                    sum += m.eval(wo, w, Vec3::Z).x * w.z * 2.0 * PI;
                }
                let e = sum / n as f64;
                assert!(e <= albedo + 0.01, "{m:?} {wo:?} {e}");
            }
        }
    }

    #[test]
    fn fresnel_limits() {
        let r0 = ((1.5 - 1.0) / 2.5f64).powi(2);
        assert!((fresnel_dielectric(1.0, 1.5) - r0).abs() < 1e-12);
        assert!((fresnel_dielectric(-1.0, 1.5) - r0).abs() < 1e-12);
        assert_eq!(fresnel_dielectric(-0.1, 1.5), 1.0);
    }

    #[test]
    fn refraction_obeys_snell() {
        let wo = Vec3::new(0.6, 0.0, 0.8);
        let wi = refract(wo, Vec3::Z, 1.5).unwrap();
        assert!(wi.z < 0.0);
        let sin_o = 0.6;
        let sin_i = (1.0 - wi.z * wi.z).sqrt();
        assert!((sin_o - 1.5 * sin_i).abs() < 1e-12);
        // and back out again
        let back = refract(wi, Vec3::Z, 1.5).unwrap();
        assert!((back - wo).length() < 1e-12);
        assert_eq!(event_of(wo, wi, Vec3::Z), SpecularEvent::Transmit);
    }

    #[test]
    fn specular_classification() {
        assert!(Material::Mirror {
            reflectance: Rgb::splat(1.0)
        }
        .is_specular());
        assert!(Material::Dielectric {
            ior: 1.5,
            transmittance: Rgb::splat(1.0)
        }
        .is_specular());
        assert!(!Material::Diffuse {
            albedo: Rgb::splat(1.0)
        }
        .is_specular());
        assert!(!Material::Glossy {
            albedo: Rgb::splat(1.0),
            exponent: 3.0
        }
        .is_specular());
    }
}
