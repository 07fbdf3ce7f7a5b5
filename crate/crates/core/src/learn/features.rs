use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            frames: 8,
            height: 12,
            width: 16,
        }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        self.frames * self.height * self.width
    }
}

/// Borrowed RGB image, 3 bytes per pixel, row-major.
#[derive(Debug, Clone, Copy)]
pub struct FrameView<'a> {
    pub width: usize,
    pub height: usize,
    pub rgb: &'a [u8],
}

/// Indices of `count` evenly spaced frames out of `total`: `i * total / count`.
pub fn subsample_indices(total: usize, count: usize) -> Vec<usize> {
    (0..count).map(|i| i * total / count).collect()
}

fn downsample(frame: &FrameView, h: usize, w: usize, out: &mut [f64]) {
    for by in 0..h {
        let (y0, y1) = (
            by * frame.height / h,
            ((by + 1) * frame.height / h).max(by * frame.height / h + 1),
        );
        for bx in 0..w {
            let (x0, x1) = (
                bx * frame.width / w,
                ((bx + 1) * frame.width / w).max(bx * frame.width / w + 1),
            );
            let mut sum = 0u64;
            for y in y0..y1 {
                let row = &frame.rgb[(y * frame.width + x0) * 3..(y * frame.width + x1) * 3];
                for px in row.chunks_exact(3) {
                    // BT.601 luma in fixed point (weights sum to 1000)
                    sum += 299 * px[0] as u64 + 587 * px[1] as u64 + 114 * px[2] as u64;
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            out[by * w + bx] = sum as f64 / (1000.0 * 255.0 * n);
        }
    }
}

/// Spatiotemporal grayscale cube, standardized per clip.
pub fn extract_features(
    frames: &[FrameView],
    config: &FeatureConfig,
) -> Result<Vec<f64>, LearnError> {
    if frames.len() < config.frames {
        return Err(LearnError::ShortClip {
            frames: frames.len(),
            needed: config.frames,
        });
    }
    let plane = config.height * config.width;
    let mut out = vec![0.0; config.dim()];
    for (k, &i) in subsample_indices(frames.len(), config.frames)
        .iter()
        .enumerate()
    {
        let f = &frames[i];
        if f.rgb.len() != f.width * f.height * 3
            || f.width < config.width
            || f.height < config.height
        {
            return Err(LearnError::FrameSize {
                width: f.width,
                height: f.height,
            });
        }
        downsample(
            f,
            config.height,
            config.width,
            &mut out[k * plane..(k + 1) * plane],
        );
    }
    standardize(&mut out);
    Ok(out)
}

/// Shift to zero mean and scale to unit variance; constant input becomes
/// all zeros.
pub fn standardize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var < 1e-12 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let sd = sqrt(var);
    v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn frames(n: usize, fill: impl Fn(usize) -> u8) -> Vec<Vec<u8>> {
        (0..n)
            .map(|k| (0..640 * 480 * 3).map(|i| fill(k * 7919 + i)).collect())
            .collect()
    }

    fn views(f: &[Vec<u8>]) -> Vec<FrameView<'_>> {
        f.iter()
            .map(|rgb| FrameView {
                width: 640,
                height: 480,
                rgb,
            })
            .collect()
    }

    #[test]
    fn black_clip_gives_zeros_of_fixed_dimension() {
        let f = frames(8, |_| 0);
        let x = extract_features(&views(&f), &FeatureConfig::default()).unwrap();
        assert_eq!(x.len(), 1536);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn random_clip_is_standardized() {
        let mut rng = RngStream::new(1, 1);
        let noise: Vec<u8> = (0..640 * 480 * 3 * 2)
            .map(|_| rng.next_u32() as u8)
            .collect();
        let f = frames(10, |i| noise[i % noise.len()]);
        let x = extract_features(&views(&f), &FeatureConfig::default()).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-6 && (var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn short_clip_is_rejected() {
        let f = frames(7, |_| 9);
        assert!(matches!(
            extract_features(&views(&f), &FeatureConfig::default()),
            Err(LearnError::ShortClip {
                frames: 7,
                needed: 8
            })
        ));
    }

    #[test]
    fn subsampling_is_even() {
        assert_eq!(subsample_indices(32, 8), [0, 4, 8, 12, 16, 20, 24, 28]);
        assert_eq!(subsample_indices(8, 8), [0, 1, 2, 3, 4, 5, 6, 7]);
    }
}
