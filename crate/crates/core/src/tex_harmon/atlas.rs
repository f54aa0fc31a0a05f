//! Texture atlas storage and 8-bit image I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// Multi-channel texture atlas. The first three channels are RGB; any extra
/// scalar channels (roughness, metallic, ...) are harmonized identically.
/// Values are f64 in [0,1] at rest; 8-bit only at the image I/O boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureAtlas {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    /// Row-major, `channels` values per texel.
    values: Vec<f64>,
    /// True for texels covered by some face's UV chart.
    valid: Vec<bool>,
}

impl TextureAtlas {
    pub fn new(width: u32, height: u32, channels: usize) -> Self {
        assert!(channels >= 1);
        let texels = (width as usize) * (height as usize);
        TextureAtlas {
            width,
            height,
            channels,
            values: vec![0.0; texels * channels],
            valid: vec![false; texels],
        }
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize * self.width as usize + x as usize) * self.channels
    }

    pub fn get(&self, x: u32, y: u32, channel: usize) -> f64 {
        self.values[self.offset(x, y) + channel]
    }

    pub fn set(&mut self, x: u32, y: u32, channel: usize, value: f64) {
        let o = self.offset(x, y);
        self.values[o + channel] = value;
    }

    pub fn texel(&self, x: u32, y: u32) -> &[f64] {
        let o = self.offset(x, y);
        &self.values[o..o + self.channels]
    }

    pub fn set_texel(&mut self, x: u32, y: u32, value: &[f64]) {
        let o = self.offset(x, y);
        self.values[o..o + self.channels].copy_from_slice(value);
    }

    pub fn is_valid(&self, x: u32, y: u32) -> bool {
        self.valid[y as usize * self.width as usize + x as usize]
    }

    pub fn set_valid(&mut self, x: u32, y: u32, valid: bool) {
        self.valid[y as usize * self.width as usize + x as usize] = valid;
    }

    pub fn texel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Loads the first three channels from an 8-bit RGB(A) image. All texels
    /// are marked valid; correspondence building refines validity.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|e| Error::Image {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let mut atlas = TextureAtlas::new(w, h, 3);
        for y in 0..h {
            for x in 0..w {
                let p = img.get_pixel(x, y);
                for c in 0..3 {
                    atlas.set(x, y, c, p[c] as f64 / 255.0);
                }
                atlas.set_valid(x, y, true);
            }
        }
        Ok(atlas)
    }

    /// Writes the first three channels as an 8-bit RGB image (lossless PNG
    /// when the extension says so). Values clamp to [0,1] here, at the 8-bit
    /// boundary.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut img = image::RgbImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let mut px = [0u8; 3];
                for (c, out) in px.iter_mut().enumerate() {
                    let v = if c < self.channels { self.get(x, y, c) } else { 0.0 };
                    *out = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                }
                img.put_pixel(x, y, image::Rgb(px));
            }
        }
        img.save(path).map_err(|e| Error::Image {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_quantizes_to_8_bits() {
        let mut atlas = TextureAtlas::new(4, 4, 3);
        for y in 0..4 {
            for x in 0..4 {
                atlas.set(x, y, 0, (x as f64) / 3.0);
                atlas.set(x, y, 1, 0.5);
                atlas.set(x, y, 2, (y as f64) / 3.0);
                atlas.set_valid(x, y, true);
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        atlas.save(&p).unwrap();
        let back = TextureAtlas::load(&p).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                for c in 0..3 {
                    assert!((back.get(x, y, c) - atlas.get(x, y, c)).abs() <= 0.5 / 255.0 + 1e-9);
                }
            }
        }
    }
}
