//! Texture loading and frame/mask image files.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{Context, Result};
use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};
use simaug_core::randomize::SceneTextures;
use simaug_core::render::{FrameBuffer, SceneTextureSet};
use simaug_core::texture::{Texture, TextureRef, TextureSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Ppm,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Ppm => "ppm",
        }
    }

    pub fn from_path(path: &Path) -> Option<ImageFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "png" => Some(ImageFormat::Png),
            "ppm" => Some(ImageFormat::Ppm),
            _ => None,
        }
    }

    fn codec(self) -> image::ImageFormat {
        match self {
            ImageFormat::Png => image::ImageFormat::Png,
            ImageFormat::Ppm => image::ImageFormat::Pnm,
        }
    }
}

pub fn frame_file_name(index: usize, format: ImageFormat) -> String {
    format!("frame_{index:05}.{}", format.extension())
}

pub fn load_texture(path: &Path) -> Result<Texture> {
    let img = image::open(path)
        .with_context(|| format!("loading texture {}", path.display()))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let texels = img.pixels().map(|p| p.0).collect();
    Texture::new(w, h, texels).with_context(|| format!("texture {} is empty", path.display()))
}

/// Resolved textures keyed by id; image files are read once.
#[derive(Default)]
pub struct TextureCache {
    loaded: HashMap<String, Texture>,
}

impl TextureCache {
    pub fn resolve(&mut self, texture: &TextureRef) -> Result<Texture> {
        if let Some(t) = self.loaded.get(&texture.id) {
            return Ok(t.clone());
        }
        let t = match &texture.source {
            TextureSource::Image { path } => load_texture(Path::new(path))?,
            _ => texture.generate().expect("procedural texture"),
        };
        self.loaded.insert(texture.id.clone(), t.clone());
        Ok(t)
    }

    pub fn scene(&mut self, t: &SceneTextures) -> Result<SceneTextureSet> {
        Ok(SceneTextureSet {
            sky: self.resolve(&t.sky.texture)?,
            floor: self.resolve(&t.floor.texture)?,
            body: self.resolve(&t.body.texture)?,
        })
    }
}

fn encode(
    path: &Path,
    bytes: &[u8],
    w: usize,
    h: usize,
    color: image::ExtendedColorType,
    format: ImageFormat,
) -> Result<()> {
    image::save_buffer_with_format(path, bytes, w as u32, h as u32, color, format.codec())
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_frame(path: &Path, frame: &FrameBuffer, format: ImageFormat) -> Result<()> {
    encode(
        path,
        &frame.rgb,
        frame.width,
        frame.height,
        image::ExtendedColorType::Rgb8,
        format,
    )
}

/// Single-channel mask, 255 on the body. PPM output uses the PGM variant.
pub fn write_mask(
    path: &Path,
    mask: &[u8],
    width: usize,
    height: usize,
    format: ImageFormat,
) -> Result<()> {
    let bytes: Vec<u8> = mask.iter().map(|&m| if m != 0 { 255 } else { 0 }).collect();
    encode(
        path,
        &bytes,
        width,
        height,
        image::ExtendedColorType::L8,
        format,
    )
}

pub fn read_frame(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)
        .with_context(|| format!("reading frame {}", path.display()))?
        .to_rgb8())
}

pub fn read_mask(path: &Path) -> Result<GrayImage> {
    Ok(image::open(path)
        .with_context(|| format!("reading mask {}", path.display()))?
        .to_luma8())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trips_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let fb = FrameBuffer {
            width: 3,
            height: 2,
            rgb: (0..18).map(|i| i * 13).collect(),
            depth: vec![0.0; 6],
        };
        for f in [ImageFormat::Png, ImageFormat::Ppm] {
            let p = dir.path().join(frame_file_name(7, f));
            write_frame(&p, &fb, f).unwrap();
            assert_eq!(read_frame(&p).unwrap().into_raw(), fb.rgb);
            let m = dir.path().join(format!("m.{}", f.extension()));
            write_mask(&m, &[0, 1, 1, 0, 0, 1], 3, 2, f).unwrap();
            assert_eq!(
                read_mask(&m).unwrap().into_raw(),
                vec![0, 255, 255, 0, 0, 255]
            );
        }
        assert_eq!(frame_file_name(7, ImageFormat::Png), "frame_00007.png");
    }

    #[test]
    fn image_texture_loads_and_caches() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.png");
        RgbImage::from_pixel(2, 2, image::Rgb([9, 8, 7]))
            .save(&p)
            .unwrap();
        let mut cache = TextureCache::default();
        let t = TextureRef::image("t", &p.to_string_lossy());
        assert_eq!(cache.resolve(&t).unwrap().sample(0.3, 0.6), [9, 8, 7]);
        std::fs::remove_file(&p).unwrap();
        assert!(cache.resolve(&t).is_ok());
        let missing = TextureRef::image("m", "/nonexistent.png");
        assert!(cache.resolve(&missing).is_err());
    }
}
