//! Online to offline conversion: binary, constant-thickness stroke
//! rendering.
//!
//! Pixel `(c, r)` has its center at `(c, r)`. A pixel is ink when its center
//! lies within `thickness / 2` of a segment, i.e. inside the segment's
//! capsule. The capsule is filled row by row: its intersection with a
//! horizontal line is one interval, the union of the end-cap discs and the
//! body rectangle.

use std::io::Write;
use std::path::Path;

use crate::ink::{OnlineHme, PenPoint};

pub const INK: u8 = 0;
pub const BACKGROUND: u8 = 255;

const EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("no ink")]
    NoInk,
    #[error("invalid raster config: {0}")]
    Config(String),
    #[error("png encoding failed: {0}")]
    Png(#[from] png::EncodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    pub target_height: u32,
    pub max_width: u32,
    pub thickness: u32,
    pub margin: u32,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            target_height: 128,
            max_width: 2048,
            thickness: 3,
            margin: 8,
        }
    }
}

impl RasterConfig {
    pub fn validate(&self) -> Result<(), RasterError> {
        if self.thickness < 1 {
            return Err(RasterError::Config("thickness must be at least 1".into()));
        }
        let min = 2 * self.margin + self.thickness;
        if self.target_height < min {
            return Err(RasterError::Config(format!(
                "target height {} below 2·margin + thickness = {min}",
                self.target_height
            )));
        }
        if self.max_width < min {
            return Err(RasterError::Config(format!(
                "max width {} below 2·margin + thickness = {min}",
                self.max_width
            )));
        }
        Ok(())
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Image {
    pub fn blank(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![BACKGROUND; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn is_ink(&self, x: u32, y: u32) -> bool {
        self.get(x, y) == INK
    }

    fn set_ink(&mut self, x: u32, y: u32) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = INK;
    }

    pub fn ink_pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == INK)
            .map(move |(i, _)| (i as u32 % w, i as u32 / w))
    }

    /// Rows containing at least one ink pixel.
    pub fn ink_rows(&self) -> Vec<u32> {
        (0..self.height)
            .filter(|&r| (0..self.width).any(|c| self.is_ink(c, r)))
            .collect()
    }

    pub fn write_png<W: Write>(&self, out: W) -> Result<(), RasterError> {
        let mut encoder = png::Encoder::new(out, self.width, self.height);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&self.pixels)?;
        writer.finish()?;
        Ok(())
    }

    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        let file = std::fs::File::create(path)?;
        self.write_png(std::io::BufWriter::new(file))
    }
}

/// x-interval of the disc `center, radius` on row `y`.
fn disc_span(center: PenPoint, radius: f64, y: f64) -> Option<(f64, f64)> {
    let dy = y - center.y;
    let h = radius * radius - dy * dy;
    (h >= -EPS).then(|| {
        let half = h.max(0.0).sqrt();
        (center.x - half, center.x + half)
    })
}

/// x-interval of a convex polygon on row `y`.
fn polygon_span(corners: &[PenPoint; 4], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let (ymin, ymax) = (a.y.min(b.y), a.y.max(b.y));
        if y < ymin - EPS || y > ymax + EPS {
            continue;
        }
        if (b.y - a.y).abs() < EPS {
            lo = lo.min(a.x.min(b.x));
            hi = hi.max(a.x.max(b.x));
        } else {
            let t = ((y - a.y) / (b.y - a.y)).clamp(0.0, 1.0);
            let x = a.x + t * (b.x - a.x);
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Inks every pixel whose center is within `thickness / 2` of the segment
/// `p0`–`p1`. Pixels outside the image are skipped.
pub fn draw_segment(image: &mut Image, p0: PenPoint, p1: PenPoint, thickness: f64) {
    let r = thickness / 2.0;
    let len = p0.distance(&p1);
    let body = (len > EPS).then(|| {
        let nx = -(p1.y - p0.y) / len * r;
        let ny = (p1.x - p0.x) / len * r;
        [
            PenPoint::new(p0.x + nx, p0.y + ny),
            PenPoint::new(p1.x + nx, p1.y + ny),
            PenPoint::new(p1.x - nx, p1.y - ny),
            PenPoint::new(p0.x - nx, p0.y - ny),
        ]
    });

    let top = (p0.y.min(p1.y) - r).ceil().max(0.0);
    let bottom = (p0.y.max(p1.y) + r)
        .floor()
        .min(f64::from(image.height) - 1.0);
    if top > bottom {
        return;
    }
    for row in top as u32..=bottom as u32 {
        let y = f64::from(row);
        let spans = [
            disc_span(p0, r, y),
            disc_span(p1, r, y),
            body.as_ref().and_then(|c| polygon_span(c, y)),
        ];
        let (lo, hi) = spans
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(a, b)| {
                (lo.min(a), hi.max(b))
            });
        if lo > hi {
            continue;
        }
        let first = (lo - EPS).ceil().max(0.0);
        let last = (hi + EPS).floor().min(f64::from(image.width) - 1.0);
        if first > last {
            continue;
        }
        for col in first as u32..=last as u32 {
            image.set_ink(col, row);
        }
    }
}

/// Renders the expression at a fixed height, preserving aspect ratio.
///
/// The ink (including stroke thickness) fills `target_height − 2·margin`
/// rows; the width follows, capped at `max_width` by shrinking the scale.
/// Ink with no vertical extent is scaled by its width instead, and is
/// placed on a pixel row so a straight horizontal stroke is exactly
/// `thickness` rows tall.
pub fn rasterize(hme: &OnlineHme, config: &RasterConfig) -> Result<Image, RasterError> {
    config.validate()?;
    if hme.strokes().is_empty() {
        return Err(RasterError::NoInk);
    }
    let bbox = hme.bounding_box();
    let t = f64::from(config.thickness);
    let m = f64::from(config.margin);
    let height = config.target_height;
    let avail_h = f64::from(height) - 2.0 * m - t;
    let avail_w = f64::from(config.max_width) - 2.0 * m - t;

    let (w, h) = (bbox.width(), bbox.height());
    let mut scale = if h > 0.0 {
        avail_h / h
    } else if w > 0.0 {
        avail_h / w
    } else {
        1.0
    };
    if w * scale > avail_w {
        scale = avail_w / w;
    }
    let width = ((w * scale - EPS).ceil().max(0.0) as u32 + 2 * config.margin + config.thickness)
        .min(config.max_width);

    let center = bbox.center();
    let mid = |extent: f64, size: u32| {
        let c = (f64::from(size) - 1.0) / 2.0;
        if extent > 0.0 {
            c
        } else {
            c.floor()
        }
    };
    let cx = mid(w, width);
    let cy = mid(h, height);
    let map =
        |p: &PenPoint| PenPoint::new(cx + (p.x - center.x) * scale, cy + (p.y - center.y) * scale);

    let mut image = Image::blank(width, height);
    for stroke in hme.strokes() {
        let pts: Vec<PenPoint> = stroke.points().iter().map(map).collect();
        if pts.len() == 1 {
            draw_segment(&mut image, pts[0], pts[0], t);
        }
        for pair in pts.windows(2) {
            draw_segment(&mut image, pair[0], pair[1], t);
        }
    }
    Ok(image)
}
