//! RGB float images, PFM interchange and tonemapped PNG previews.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::{luminance, Rgb};

/// Row-major RGB image; row 0 is the top of the picture.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![Rgb::ZERO; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidConfig(format!(
                "{} pixels do not fill a {width}x{height} image",
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.data[y * self.width + x] = c;
    }

    pub fn luminance(&self) -> Vec<f64> {
        self.data.iter().map(|&c| luminance(c)).collect()
    }

    pub fn mean_luminance(&self) -> f64 {
        self.luminance().iter().sum::<f64>() / self.data.len().max(1) as f64
    }

    pub fn scaled(&self, k: f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&c| c * k).collect(),
        }
    }

    pub fn check_same_size(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn to_pfm_bytes(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.data.len() * 12);
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                let c = self.get(x, y);
                for v in [c.x, c.y, c.z] {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_pfm_bytes(bytes: &[u8], name: &str) -> Result<Image> {
        let bad = |m: &str| Error::ImageFormat {
            path: name.to_string(),
            message: m.to_string(),
        };
        // three newline-terminated header lines
        let mut fields = Vec::new();
        let mut start = 0;
        for (i, &b) in bytes.iter().enumerate() {
            if b == b'\n' {
                fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("header is not text"))?);
                start = i + 1;
                if fields.len() == 3 {
                    break;
                }
            }
        }
        if fields.len() != 3 {
            return Err(bad("truncated header"));
        }
        if fields[0].trim() != "PF" {
            return Err(bad("only colour PFM (PF) is supported"));
        }
        let dims: Vec<usize> = fields[1]
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad dimensions")))
            .collect::<Result<_>>()?;
        let [width, height] = dims[..] else {
            return Err(bad("bad dimensions"));
        };
        let scale: f64 = fields[2].trim().parse().map_err(|_| bad("bad scale"))?;
        let little = scale < 0.0;
        let body = &bytes[start..];
        if body.len() != width * height * 12 {
            return Err(bad("pixel data length does not match header"));
        }
        let mut img = Image::new(width, height);
        let mut it = body.chunks_exact(4).map(|c| {
            let a = [c[0], c[1], c[2], c[3]];
            (if little {
                f32::from_le_bytes(a)
            } else {
                f32::from_be_bytes(a)
            }) as f64
        });
        for y in (0..height).rev() {
            for x in 0..width {
                let (r, g, b) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
                img.set(x, y, Rgb::new(r, g, b));
            }
        }
        Ok(img)
    }

    pub fn write_pfm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pfm_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_pfm(path: impl AsRef<Path>) -> Result<Image> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Image::from_pfm_bytes(&bytes, &path.display().to_string())
    }

    /// 8-bit preview: `(2^exposure · c)^(1/2.2)`, clamped.
    pub fn tonemap(&self, exposure: f64) -> image::RgbImage {
        let k = exposure.exp2();
        let enc = |v: f64| ((k * v).max(0.0).powf(1.0 / 2.2).min(1.0) * 255.0).round() as u8;
        image::RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let c = self.get(x as usize, y as usize);
            image::Rgb([enc(c.x), enc(c.y), enc(c.z)])
        })
    }

    pub fn write_png(&self, path: impl AsRef<Path>, exposure: f64) -> Result<()> {
        self.tonemap(exposure).save(path.as_ref())?;
        Ok(())
    }
}
