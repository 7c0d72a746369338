//! Error metrics against a reference, chain correlation diagnostics and run
//! logging.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image_io::Image;
use crate::math::luminance;

/// Denominator guard of the relative error, in linear radiance units.
pub const DEFAULT_EPSILON: f64 = 1e-2;

/// Shortest series accepted by [`autocorrelation_time`].
pub const MIN_SERIES_LEN: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ErrorChannels {
    #[default]
    Luminance,
    Rgb,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub rrmse: f64,
    pub width: usize,
    pub height: usize,
    /// Per-pixel relative error; its mean square is `rrmse²`.
    pub map: Vec<f64>,
}

/// `sqrt(mean(((I − R)/(R + ε))²))`, per pixel on luminance or over the
/// three channels.
pub fn rrmse(image: &Image, reference: &Image, epsilon: f64, channels: ErrorChannels) -> Result<ErrorReport> {
    image.check_same_size(reference)?;
    let rel = |i: f64, r: f64| (i - r) / (r + epsilon);
    let map: Vec<f64> = image
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(&i, &r)| match channels {
            ErrorChannels::Luminance => rel(luminance(i), luminance(r)).abs(),
            ErrorChannels::Rgb => {
                let s = rel(i.x, r.x).powi(2) + rel(i.y, r.y).powi(2) + rel(i.z, r.z).powi(2);
                (s / 3.0).sqrt()
            }
        })
        .collect();
    let mse = map.iter().map(|e| e * e).sum::<f64>() / map.len().max(1) as f64;
    Ok(ErrorReport {
        rrmse: mse.sqrt(),
        width: image.width(),
        height: image.height(),
        map,
    })
}

pub fn error_map(image: &Image, reference: &Image, epsilon: f64) -> Result<ErrorReport> {
    rrmse(image, reference, epsilon, ErrorChannels::Luminance)
}

/// Colour ramp for error maps: black, blue, cyan, green, yellow, red at
/// errors 0, 0.2, 0.4, 0.6, 0.8 and ≥ 1 times `full_scale`.
pub fn false_color(e: f64, full_scale: f64) -> [u8; 3] {
    const RAMP: [[f64; 3]; 6] = [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 1.0],
        [0.0, 1.0, 0.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
    ];
    let t = if e.is_finite() {
        (e / full_scale).clamp(0.0, 1.0)
    } else {
        1.0
    } * 5.0;
    let i = (t.floor() as usize).min(4);
    let f = t - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = RAMP[i][c] * (1.0 - f) + RAMP[i + 1][c] * f;
        out[c] = (v * 255.0).round() as u8;
    }
    out
}

impl ErrorReport {
    pub fn as_image(&self) -> Image {
        let px = self.map.iter().map(|&e| crate::math::Rgb::splat(e)).collect();
        Image::from_pixels(self.width, self.height, px).expect("map matches its dimensions")
    }

    pub fn false_color(&self, full_scale: f64) -> image::RgbImage {
        image::RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            image::Rgb(false_color(self.map[y as usize * self.width + x as usize], full_scale))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainDiagnostics {
    pub tau: f64,
    pub n_eff: f64,
    /// `τ/N · var(g)`, the asymptotic variance of the sample mean.
    pub variance: f64,
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_k`, truncated by Geyer's
/// initial positive sequence rule.
pub fn autocorrelation_time(series: &[f64]) -> Result<ChainDiagnostics> {
    let n = series.len();
    if n < MIN_SERIES_LEN {
        return Err(Error::TooShort(format!("{n} samples, need at least {MIN_SERIES_LEN}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let autocov = |k: usize| -> f64 {
        centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::TooShort("series has zero variance".into()));
    }
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n / 2 {
        let pair = autocov(2 * m) + autocov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        m += 1;
    }
    let tau = if m == 0 { 1.0 } else { (2.0 * sum - c0) / c0 };
    Ok(ChainDiagnostics {
        tau,
        n_eff: n as f64 / tau,
        variance: tau / n as f64 * c0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub time_s: f64,
    pub mutations: u64,
    pub rrmse: Option<f64>,
    /// Mean acceptance of perturbation proposals since the previous row.
    pub mean_acceptance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub fn push(&mut self, row: LogRow) {
        debug_assert!(self.rows.last().is_none_or(|r| r.mutations < row.mutations));
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time_s,mutations,rrmse,mean_acceptance\n");
        for r in &self.rows {
            let e = r.rrmse.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", r.time_s, r.mutations, e, r.mean_acceptance);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rgb;

    fn flat(w: usize, h: usize, v: f64) -> Image {
        Image::from_pixels(w, h, vec![Rgb::splat(v); w * h]).unwrap()
    }

    #[test]
    fn rrmse_examples() {
        let r = flat(4, 3, 1.0);
        assert_eq!(
            rrmse(&r, &r, DEFAULT_EPSILON, ErrorChannels::Luminance).unwrap().rrmse,
            0.0
        );
        let e = rrmse(&flat(4, 3, 2.0), &r, 0.0, ErrorChannels::Rgb).unwrap();
        assert!((e.rrmse - 1.0).abs() < 1e-12);
        let a = rrmse(&flat(4, 3, 1.5), &r, 0.0, ErrorChannels::Luminance)
            .unwrap()
            .rrmse;
        let b = rrmse(&flat(4, 3, 4.5), &flat(4, 3, 3.0), 0.0, ErrorChannels::Luminance)
            .unwrap()
            .rrmse;
        assert!((a - b).abs() < 1e-12);
        assert!(matches!(
            rrmse(&flat(4, 3, 1.0), &flat(3, 4, 1.0), 0.0, ErrorChannels::Luminance),
            Err(Error::DimensionMismatch(..))
        ));
    }

    #[test]
    fn map_locality_and_mean_square() {
        let r = flat(5, 5, 0.5);
        let mut i = r.clone();
        i.set(2, 3, Rgb::splat(0.9));
        let rep = error_map(&i, &r, DEFAULT_EPSILON).unwrap();
        assert_eq!(rep.map.iter().filter(|&&e| e != 0.0).count(), 1);
        let ms = rep.map.iter().map(|e| e * e).sum::<f64>() / 25.0;
        assert!((ms - rep.rrmse * rep.rrmse).abs() < 1e-15);
        assert_eq!(rep.false_color(1.0).get_pixel(0, 0).0, [0, 0, 0]);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(false_color(0.0, 1.0), [0, 0, 0]);
        assert_eq!(false_color(1.0, 1.0), [255, 0, 0]);
        assert_eq!(false_color(0.2, 1.0), [0, 0, 255]);
        assert_eq!(false_color(f64::NAN, 1.0), [255, 0, 0]);
    }

    #[test]
    fn constant_series_is_an_error() {
        assert!(matches!(autocorrelation_time(&[1.0; 5000]), Err(Error::TooShort(_))));
        assert!(matches!(autocorrelation_time(&[1.0, 2.0]), Err(Error::TooShort(_))));
    }

    #[test]
    fn csv_layout() {
        let mut log = RunLog::default();
        log.push(LogRow {
            time_s: 0.5,
            mutations: 10,
            rrmse: None,
            mean_acceptance: 0.25,
        });
        log.push(LogRow {
            time_s: 1.0,
            mutations: 20,
            rrmse: Some(0.125),
            mean_acceptance: 0.5,
        });
        assert_eq!(
            log.to_csv(),
            "time_s,mutations,rrmse,mean_acceptance\n0.5,10,,0.25\n1,20,0.125,0.5\n"
        );
    }
}
