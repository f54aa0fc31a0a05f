//! Poisson Image Editing on regular pixel grids: the blending operator that
//! keeps source gradients inside a mask while matching the target at the
//! mask boundary. Channels solve independently.

use crate::error::{Error, Result};
use crate::linalg::{cg_solve, SparseSystem, SystemBuilder};

/// Multi-channel raster image with f64 samples. Solver output may overshoot
/// [0,1] slightly; construction tolerates [-0.5, 1.5] and clamping is left
/// to the 8-bit I/O boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    /// Row-major, channel-interleaved.
    pub values: Vec<f64>,
}

impl Image {
    pub fn new(width: u32, height: u32, channels: usize) -> Self {
        assert!((1..=4).contains(&channels));
        Image {
            width,
            height,
            channels,
            values: vec![0.0; width as usize * height as usize * channels],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.values {
            if !v.is_finite() || *v < -0.5 || *v > 1.5 {
                return Err(Error::Validation(format!(
                    "image value {v} outside the tolerated [-0.5, 1.5] band"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32, c: usize) -> f64 {
        self.values[self.offset(x, y) + c]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: usize, v: f64) {
        let o = self.offset(x, y);
        self.values[o + c] = v;
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Binary pixel mask with the derived interior/boundary classification over
/// the 4-neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    pub width: u32,
    pub height: u32,
    inside: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: u32, height: u32, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries for {}x{}",
                inside.len(),
                width,
                height
            )));
        }
        Ok(PixelMask {
            width,
            height,
            inside,
        })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        PixelMask {
            width,
            height,
            inside: vec![false; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.inside[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.inside[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// A boundary pixel is outside the mask but 4-adjacent to an inside one.
    pub fn is_boundary(&self, x: u32, y: u32) -> bool {
        if self.get(x, y) {
            return false;
        }
        neighbors4(x, y, self.width, self.height)
            .into_iter()
            .flatten()
            .any(|(nx, ny)| self.get(nx, ny))
    }

    /// First inside pixel on the image border, if any.
    pub fn border_violation(&self) -> Option<(u32, u32)> {
        for y in 0..self.height {
            for x in 0..self.width {
                if (x == 0 || y == 0 || x == self.width - 1 || y == self.height - 1)
                    && self.get(x, y)
                {
                    return Some((x, y));
                }
            }
        }
        None
    }

    /// Clears inside pixels that sit on the image border.
    pub fn eroded_at_border(&self) -> PixelMask {
        let mut m = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                if x == 0 || y == 0 || x == self.width - 1 || y == self.height - 1 {
                    m.set(x, y, false);
                }
            }
        }
        m
    }
}

#[inline]
fn neighbors4(x: u32, y: u32, w: u32, h: u32) -> [Option<(u32, u32)>; 4] {
    [
        (x > 0).then(|| (x - 1, y)),
        (x + 1 < w).then(|| (x + 1, y)),
        (y > 0).then(|| (x, y - 1)),
        (y + 1 < h).then(|| (x, y + 1)),
    ]
}

/// Blend options. Defaults follow the classic formulation: pure source
/// gradients, and a mask on the image border is an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct BlendOptions {
    /// Per-neighbor, keep the stronger of source and target gradients.
    pub mixed_gradients: bool,
    /// Erode a border-touching mask by one pixel instead of erroring.
    pub erode_border: bool,
}

/// Assembles the 5-point Laplace system for all masked pixels: one unknown
/// per inside pixel, Dirichlet data from `target` just outside the mask,
/// divergence of the guidance field on the right-hand side. Returns the
/// system plus the flat pixel index of each unknown.
pub fn assemble_system(
    target: &Image,
    source: &Image,
    mask: &PixelMask,
    opts: &BlendOptions,
) -> Result<(SparseSystem, Vec<usize>)> {
    let w = target.width;
    let h = target.height;
    let mut unknown_of = vec![usize::MAX; w as usize * h as usize];
    let mut pixels = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                unknown_of[(y * w + x) as usize] = pixels.len();
                pixels.push((y * w + x) as usize);
            }
        }
    }

    let channels = target.channels;
    let mut builder = SystemBuilder::new(pixels.len(), channels);
    for (row, &flat) in pixels.iter().enumerate() {
        let x = (flat as u32) % w;
        let y = (flat as u32) / w;
        builder.add(row, row, 4.0);
        for (nx, ny) in neighbors4(x, y, w, h).into_iter().flatten() {
            let n_flat = (ny * w + nx) as usize;
            let n_unknown = unknown_of[n_flat];
            if n_unknown != usize::MAX {
                builder.add(row, n_unknown, -1.0);
            }
            for c in 0..channels {
                let gs = source.get(x, y, c) - source.get(nx, ny, c);
                let guidance = if opts.mixed_gradients {
                    let gt = target.get(x, y, c) - target.get(nx, ny, c);
                    if gt.abs() > gs.abs() {
                        gt
                    } else {
                        gs
                    }
                } else {
                    gs
                };
                builder.add_rhs(c, row, guidance);
                if n_unknown == usize::MAX {
                    builder.add_rhs(c, row, target.get(nx, ny, c));
                }
            }
        }
    }
    Ok((builder.build()?, pixels))
}

/// Poisson blend: outside the mask the output equals `target` bit-for-bit;
/// inside, the blend minimizes the gradient discrepancy to `source` with the
/// target as Dirichlet boundary.
pub fn poisson_blend(target: &Image, source: &Image, mask: &PixelMask) -> Result<Image> {
    poisson_blend_opts(target, source, mask, &BlendOptions::default())
}

pub fn poisson_blend_opts(
    target: &Image,
    source: &Image,
    mask: &PixelMask,
    opts: &BlendOptions,
) -> Result<Image> {
    if !target.same_dims(source)
        || target.channels != source.channels
        || mask.width != target.width
        || mask.height != target.height
    {
        return Err(Error::DimensionMismatch(format!(
            "target {}x{}x{}, source {}x{}x{}, mask {}x{}",
            target.width,
            target.height,
            target.channels,
            source.width,
            source.height,
            source.channels,
            mask.width,
            mask.height
        )));
    }

    let eroded;
    let mask = match mask.border_violation() {
        Some((x, y)) if !opts.erode_border => return Err(Error::MaskAtBorder { x, y }),
        Some(_) => {
            eroded = mask.eroded_at_border();
            &eroded
        }
        None => mask,
    };

    let mut out = target.clone();
    if mask.count() == 0 {
        return Ok(out);
    }

    let (system, pixels) = assemble_system(target, source, mask, opts)?;
    let max_iter = 10 * system.dimension().max(10);
    let (solutions, reports) = cg_solve(&system, 1e-12, max_iter, false)?;
    for report in &reports {
        if !report.final_residual.is_finite() {
            return Err(Error::Numeric("non-finite blend residual".into()));
        }
    }
    for (c, solution) in solutions.iter().enumerate() {
        for (row, &flat) in pixels.iter().enumerate() {
            out.values[flat * out.channels + c] = solution[row];
        }
    }
    Ok(out)
}
