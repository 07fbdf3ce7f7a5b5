//! RGB textures and the procedural fallbacks used when no image pool is given.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::floor;
use crate::rng::RngStream;

pub type Rgb = [u8; 3];

/// Side length of generated procedural textures.
pub const PROCEDURAL_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Texture {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB texels.
    pub texels: Vec<Rgb>,
}

impl Texture {
    pub fn new(width: usize, height: usize, texels: Vec<Rgb>) -> Option<Texture> {
        if width == 0 || height == 0 || texels.len() != width * height {
            return None;
        }
        Some(Texture {
            width,
            height,
            texels,
        })
    }

    pub fn flat(color: Rgb) -> Texture {
        Texture {
            width: 1,
            height: 1,
            texels: alloc::vec![color],
        }
    }

    /// Nearest-texel lookup with wrap-around addressing.
    #[inline]
    pub fn sample(&self, u: f64, v: f64) -> Rgb {
        let fu = u - floor(u);
        let fv = v - floor(v);
        let x = ((fu * self.width as f64) as usize).min(self.width - 1);
        let y = ((fv * self.height as f64) as usize).min(self.height - 1);
        self.texels[y * self.width + x]
    }
}

/// Where a texture comes from. Procedural sources are fully described by
/// their parameters; images are resolved by the caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TextureSource {
    Checker { seed: u64 },
    Noise { seed: u64 },
    Flat { rgb: Rgb },
    Image { path: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextureRef {
    pub id: String,
    pub source: TextureSource,
}

impl TextureRef {
    pub fn checker(seed: u64) -> TextureRef {
        TextureRef {
            id: format!("checker-{seed}"),
            source: TextureSource::Checker { seed },
        }
    }

    pub fn noise(seed: u64) -> TextureRef {
        TextureRef {
            id: format!("noise-{seed}"),
            source: TextureSource::Noise { seed },
        }
    }

    pub fn flat(rgb: Rgb) -> TextureRef {
        TextureRef {
            id: format!("flat-{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]),
            source: TextureSource::Flat { rgb },
        }
    }

    pub fn image(id: &str, path: &str) -> TextureRef {
        TextureRef {
            id: id.into(),
            source: TextureSource::Image { path: path.into() },
        }
    }

    /// Build the texture for procedural sources; `None` for images.
    pub fn generate(&self) -> Option<Texture> {
        match self.source {
            TextureSource::Checker { seed } => Some(checkerboard(seed)),
            TextureSource::Noise { seed } => Some(value_noise(seed)),
            TextureSource::Flat { rgb } => Some(Texture::flat(rgb)),
            TextureSource::Image { .. } => None,
        }
    }

    /// Alternating checker and value-noise textures, seeds `base..base + n`.
    pub fn procedural_pool(base: u64, n: usize) -> Vec<TextureRef> {
        (0..n as u64)
            .map(|k| {
                if k % 2 == 0 {
                    TextureRef::checker(base + k)
                } else {
                    TextureRef::noise(base + k)
                }
            })
            .collect()
    }
}

fn random_color(rng: &mut RngStream) -> Rgb {
    [
        (rng.next_u32() >> 24) as u8,
        (rng.next_u32() >> 24) as u8,
        (rng.next_u32() >> 24) as u8,
    ]
}

fn lerp_color(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t + 0.5) as u8;
    [mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])]
}

/// Two-color checkerboard with 2 to 8 cells per side.
pub fn checkerboard(seed: u64) -> Texture {
    let mut rng = RngStream::new(seed, 0xC4EC);
    let a = random_color(&mut rng);
    let b = random_color(&mut rng);
    let cells = 2 + rng.index(7);
    let n = PROCEDURAL_SIZE;
    let texels = (0..n * n)
        .map(|i| {
            let (x, y) = (i % n, i / n);
            if ((x * cells / n) + (y * cells / n)).is_multiple_of(2) {
                a
            } else {
                b
            }
        })
        .collect();
    Texture {
        width: n,
        height: n,
        texels,
    }
}

/// Tileable two-octave value noise mapped onto a two-color palette.
pub fn value_noise(seed: u64) -> Texture {
    let mut rng = RngStream::new(seed, 0x7015E);
    let a = random_color(&mut rng);
    let b = random_color(&mut rng);
    let lattice = 4 + rng.index(5);
    let grid0: Vec<f64> = (0..lattice * lattice).map(|_| rng.next_f64()).collect();
    let l1 = lattice * 2;
    let grid1: Vec<f64> = (0..l1 * l1).map(|_| rng.next_f64()).collect();
    let n = PROCEDURAL_SIZE;
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let sample = |grid: &[f64], g: usize, x: usize, y: usize| {
        let fx = x as f64 * g as f64 / n as f64;
        let fy = y as f64 * g as f64 / n as f64;
        let (x0, y0) = (fx as usize % g, fy as usize % g);
        let (x1, y1) = ((x0 + 1) % g, (y0 + 1) % g);
        let (tx, ty) = (smooth(fx - floor(fx)), smooth(fy - floor(fy)));
        let top = grid[y0 * g + x0] * (1.0 - tx) + grid[y0 * g + x1] * tx;
        let bottom = grid[y1 * g + x0] * (1.0 - tx) + grid[y1 * g + x1] * tx;
        top * (1.0 - ty) + bottom * ty
    };
    let texels = (0..n * n)
        .map(|i| {
            let (x, y) = (i % n, i / n);
            let v = (sample(&grid0, lattice, x, y) * 2.0 + sample(&grid1, l1, x, y)) / 3.0;
            lerp_color(a, b, v)
        })
        .collect();
    Texture {
        width: n,
        height: n,
        texels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn procedural_textures_are_deterministic_and_distinct() {
        assert_eq!(checkerboard(3), checkerboard(3));
        assert_ne!(checkerboard(3), checkerboard(4));
        assert_eq!(value_noise(3), value_noise(3));
        assert_ne!(value_noise(3), value_noise(4));
    }

    #[test]
    fn checkerboard_has_two_colors() {
        let t = checkerboard(11);
        let first = t.texels[0];
        let other = t.texels.iter().find(|&&c| c != first).copied().unwrap();
        assert!(t.texels.iter().all(|&c| c == first || c == other));
    }

    #[test]
    fn sample_wraps() {
        let t = value_noise(5);
        assert_eq!(t.sample(0.25, 0.5), t.sample(1.25, -0.5));
    }
}
