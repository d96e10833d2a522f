//! Decision-landscape rasters of two-dimensional models, written as binary PPM.

use std::io::Write;

use protolines::{Dataset, Error, PrototypeModel, Result};
use rayon::prelude::*;

/// tab20, indexed by `class_id % 20`.
pub const PALETTE: [[u8; 3]; 20] = [
    [31, 119, 180],
    [174, 199, 232],
    [255, 127, 14],
    [255, 187, 120],
    [44, 160, 44],
    [152, 223, 138],
    [214, 39, 40],
    [255, 152, 150],
    [148, 103, 189],
    [197, 176, 213],
    [140, 86, 75],
    [196, 156, 148],
    [227, 119, 194],
    [247, 182, 210],
    [127, 127, 127],
    [199, 199, 199],
    [188, 189, 34],
    [219, 219, 141],
    [23, 190, 207],
    [158, 218, 229],
];

pub fn class_color(class: usize) -> [u8; 3] {
    PALETTE[class % PALETTE.len()]
}

/// Axis-aligned region of feature space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    /// Smallest box holding the dataset and every segment endpoint, widened by
    /// `pad` of its extent on each side.
    pub fn covering(model: &PrototypeModel, data: Option<&Dataset>, pad: f64) -> Self {
        let mut pts: Vec<[f64; 2]> = Vec::new();
        for line in &model.lines {
            let s = &line.layout.segment;
            pts.push([s.a()[0], s.a()[1]]);
            pts.push([s.b()[0], s.b()[1]]);
        }
        if let Some(ds) = data {
            pts.extend(ds.rows().map(|r| [r[0], r[1]]));
        }
        let mut b = Bounds {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for [x, y] in pts {
            b.x_min = b.x_min.min(x);
            b.x_max = b.x_max.max(x);
            b.y_min = b.y_min.min(y);
            b.y_max = b.y_max.max(y);
        }
        let wx = (b.x_max - b.x_min).max(1e-9);
        let wy = (b.y_max - b.y_min).max(1e-9);
        Bounds {
            x_min: b.x_min - pad * wx,
            x_max: b.x_max + pad * wx,
            y_min: b.y_min - pad * wy,
            y_max: b.y_max + pad * wy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub bounds: Bounds,
    /// Predicted class per pixel, row-major from the top-left corner.
    pub classes: Vec<usize>,
    /// RGB per pixel: the class regions with overlays drawn on top.
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    /// Feature-space coordinates of the centre of pixel `(col, row)`; row 0 is the top.
    pub fn pixel_center(&self, col: usize, row: usize) -> [f64; 2] {
        pixel_center(&self.bounds, self.width, self.height, col, row)
    }

    pub fn class_at(&self, col: usize, row: usize) -> usize {
        self.classes[row * self.width + col]
    }

    fn to_pixel(&self, p: &[f64]) -> (f64, f64) {
        let b = &self.bounds;
        let col = (p[0] - b.x_min) / (b.x_max - b.x_min) * self.width as f64 - 0.5;
        let row = (b.y_max - p[1]) / (b.y_max - b.y_min) * self.height as f64 - 0.5;
        (col, row)
    }

    fn put(&mut self, col: i64, row: i64, rgb: [u8; 3]) {
        if col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height {
            self.pixels[row as usize * self.width + col as usize] = rgb;
        }
    }

    fn square(&mut self, p: &[f64], half: i64, fill: [u8; 3], edge: [u8; 3]) {
        let (c, r) = self.to_pixel(p);
        let (c, r) = (c.round() as i64, r.round() as i64);
        for dr in -half..=half {
            for dc in -half..=half {
                let on_edge = dr.abs() == half || dc.abs() == half;
                self.put(c + dc, r + dr, if on_edge { edge } else { fill });
            }
        }
    }

    fn segment(&mut self, a: &[f64], b: &[f64], rgb: [u8; 3]) {
        let (c0, r0) = self.to_pixel(a);
        let (c1, r1) = self.to_pixel(b);
        let steps = ((c1 - c0).abs().max((r1 - r0).abs()).ceil() as usize).max(1);
        for k in 0..=steps {
            let s = k as f64 / steps as f64;
            let c = (c0 + s * (c1 - c0)).round() as i64;
            let r = (r0 + s * (r1 - r0)).round() as i64;
            self.put(c, r, rgb);
        }
    }

    /// Binary PPM (`P6`).
    pub fn write_ppm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        out.write_all(&bytes)
    }
}

fn pixel_center(b: &Bounds, width: usize, height: usize, col: usize, row: usize) -> [f64; 2] {
    [
        b.x_min + (col as f64 + 0.5) * (b.x_max - b.x_min) / width as f64,
        b.y_max - (row as f64 + 0.5) * (b.y_max - b.y_min) / height as f64,
    ]
}

fn lighten(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| v + (255 - v) / 2)
}

/// Classifies every pixel centre, then draws data points, segments and
/// prototype locations over the lightened class regions.
pub fn render(model: &PrototypeModel, data: Option<&Dataset>, width: usize, height: usize, bounds: Bounds) -> Result<Raster> {
    if model.dim != 2 {
        return Err(Error::Usage(format!("landscapes need a two-dimensional model, got {}", model.dim)));
    }
    if width == 0 || height == 0 {
        return Err(Error::Usage("image size must be positive".into()));
    }
    if let Some(ds) = data {
        if ds.dim() != 2 {
            return Err(Error::Data("overlay dataset is not two-dimensional".into()));
        }
    }
    let mut classes = vec![0usize; width * height];
    classes.par_chunks_mut(width).enumerate().for_each(|(row, out)| {
        for (col, c) in out.iter_mut().enumerate() {
            *c = model.predict_one(&pixel_center(&bounds, width, height, col, row));
        }
    });
    let pixels = classes.iter().map(|&c| lighten(class_color(c))).collect();
    let mut raster = Raster {
        width,
        height,
        bounds,
        classes,
        pixels,
    };
    if let Some(ds) = data {
        for (p, &l) in ds.rows().zip(ds.labels()) {
            raster.square(p, 1, class_color(l), class_color(l));
        }
    }
    for line in &model.lines {
        let s = &line.layout.segment;
        raster.segment(s.a(), s.b(), [0, 0, 0]);
    }
    for line in &model.lines {
        for proto in line.prototypes() {
            raster.square(&proto.location, 3, [255, 255, 255], [0, 0, 0]);
        }
    }
    Ok(raster)
}
