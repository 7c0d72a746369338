//! Line-oriented scene files:
//!
//! ```text
//! camera <px py pz> <lx ly lz> <ux uy uz> <fov_deg>
//! material <name> diffuse <r g b>
//! material <name> mirror <r g b>
//! material <name> dielectric <ior> <r g b>
//! material <name> glossy <r g b> <exponent>
//! sphere <cx cy cz> <radius> <material>
//! tri <ax ay az> <bx by bz> <cx cy cz> <material>
//! emitter <geometry-index> <r g b>
//! ```
//!
//! Geometry indices count `sphere` and `tri` records together in file order.

use std::collections::HashMap;

use super::{Camera, Geometry, Material, SceneModel, Shape};
use crate::error::{Error, Result};
use crate::math::Vec3;

const DEFAULT_RESOLUTION: usize = 64;

struct Cursor<'a> {
    tokens: Vec<&'a str>,
    pos: usize,
    line: usize,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::SceneParse {
            path: self.path.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn word(&mut self, what: &str) -> Result<&'a str> {
        let t = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err(format!("expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn real(&mut self, what: &str) -> Result<f64> {
        let t = self.word(what)?;
        let v: f64 = t
            .parse()
            .map_err(|_| self.err(format!("expected number for {what}, found `{t}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("{what} is not finite")));
        }
        Ok(v)
    }

    fn vec3(&mut self, what: &str) -> Result<Vec3> {
        Ok(Vec3::new(self.real(what)?, self.real(what)?, self.real(what)?))
    }

    fn finish(&self) -> Result<()> {
        match self.tokens.get(self.pos) {
            Some(t) => Err(self.err(format!("unexpected trailing token `{t}`"))),
            None => Ok(()),
        }
    }
}

pub fn parse_scene(text: &str, path: &str) -> Result<SceneModel> {
    let mut camera = None;
    let mut materials = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    // geometry with unresolved material names, plus the line for errors
    let mut pending: Vec<(Geometry, String, usize)> = Vec::new();
    let mut emitters: Vec<(usize, Vec3, usize)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut c = Cursor {
            tokens: line.split_whitespace().collect(),
            pos: 0,
            line: i + 1,
            path,
        };
        match c.word("record")? {
            "camera" => {
                if camera.is_some() {
                    return Err(c.err("duplicate camera"));
                }
                let pos = c.vec3("camera position")?;
                let look = c.vec3("look-at point")?;
                let up = c.vec3("up vector")?;
                let fov = c.real("field of view")?;
                c.finish()?;
                let cam = Camera::new(pos, look, up, fov, DEFAULT_RESOLUTION, DEFAULT_RESOLUTION)
                    .map_err(|e| c.err(e.to_string()))?;
                camera = Some(cam);
            }
            "material" => {
                let name = c.word("material name")?.to_string();
                let m = match c.word("material kind")? {
                    "diffuse" => Material::Diffuse {
                        albedo: c.vec3("albedo")?,
                    },
                    "mirror" => Material::Mirror {
                        reflectance: c.vec3("reflectance")?,
                    },
                    "dielectric" => {
                        let ior = c.real("ior")?;
                        Material::Dielectric {
                            ior,
                            transmittance: c.vec3("transmittance")?,
                        }
                    }
                    "glossy" => {
                        let albedo = c.vec3("albedo")?;
                        Material::Glossy {
                            albedo,
                            exponent: c.real("exponent")?,
                        }
                    }
                    other => return Err(c.err(format!("unknown material kind `{other}`"))),
                };
                c.finish()?;
                m.validate().map_err(|e| c.err(e))?;
                if names.insert(name.clone(), materials.len()).is_some() {
                    return Err(c.err(format!("duplicate material `{name}`")));
                }
                materials.push(m);
            }
            "sphere" => {
                let center = c.vec3("center")?;
                let radius = c.real("radius")?;
                if !(radius > 0.0) {
                    return Err(c.err("radius must be positive"));
                }
                let mat = c.word("material")?.to_string();
                c.finish()?;
                pending.push((Geometry::Sphere { center, radius }, mat, c.line));
            }
            "tri" => {
                let a = c.vec3("vertex")?;
                let b = c.vec3("vertex")?;
                let cc = c.vec3("vertex")?;
                let mat = c.word("material")?.to_string();
                c.finish()?;
                if (b - a).cross(cc - a).length() == 0.0 {
                    return Err(c.err("degenerate triangle"));
                }
                pending.push((Geometry::Triangle { a, b, c: cc }, mat, c.line));
            }
            "emitter" => {
                let idx = c.word("geometry index")?;
                let idx: usize = idx
                    .parse()
                    .map_err(|_| c.err(format!("expected geometry index, found `{idx}`")))?;
                let le = c.vec3("radiance")?;
                c.finish()?;
                if le.min_component() < 0.0 {
                    return Err(c.err("emitted radiance must be non-negative"));
                }
                emitters.push((idx, le, c.line));
            }
            other => return Err(c.err(format!("unknown record `{other}`"))),
        }
    }

    let mut shapes = Vec::with_capacity(pending.len());
    for (geometry, mat, line) in pending {
        let material = *names.get(&mat).ok_or_else(|| Error::SceneParse {
            path: path.to_string(),
            line,
            message: format!("unknown material `{mat}`"),
        })?;
        shapes.push(Shape {
            geometry,
            material,
            emission: None,
        });
    }
    for (idx, le, line) in emitters {
        let count = shapes.len();
        let shape = shapes.get_mut(idx).ok_or_else(|| Error::SceneParse {
            path: path.to_string(),
            line,
            message: format!("emitter references geometry {idx}, but only {count} exist"),
        })?;
        shape.emission = Some(le);
    }
    let camera = camera.ok_or_else(|| Error::InvalidScene(format!("{path}: no camera record")))?;
    SceneModel::new(camera, materials, shapes)
}
