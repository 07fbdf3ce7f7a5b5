//! Uniform nuisance sampling: camera placement, scene textures and the shape
//! of the capsule humanoid.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;
use crate::motion::Skeleton;
use crate::rng::RngStream;
use crate::texture::TextureRef;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("range {name}: min {min} exceeds max {max} or is not finite")]
    Range {
        name: &'static str,
        min: f64,
        max: f64,
    },
    #[error("range {name} must be positive, got [{min}, {max}]")]
    NotPositive {
        name: &'static str,
        min: f64,
        max: f64,
    },
    #[error("humanoid height range [{0}, {1}] must lie inside (0.5, 2.5) meters")]
    Height(f64, f64),
    #[error("texture pool is empty")]
    EmptyPool,
}

/// Closed interval `[min, max]`. Azimuth is conventionally given as
/// `[0, 360]` and treated modulo 360.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Range {
        Range { min, max }
    }

    pub const fn point(v: f64) -> Range {
        Range { min: v, max: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        rng.uniform(self.min, self.max)
    }

    fn check(&self, name: &'static str) -> Result<(), ConfigError> {
        if self.min.is_finite() && self.max.is_finite() && self.min <= self.max {
            Ok(())
        } else {
            Err(ConfigError::Range {
                name,
                min: self.min,
                max: self.max,
            })
        }
    }

    fn check_positive(&self, name: &'static str) -> Result<(), ConfigError> {
        self.check(name)?;
        if self.min > 0.0 {
            Ok(())
        } else {
            Err(ConfigError::NotPositive {
                name,
                min: self.min,
                max: self.max,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanoidRanges {
    /// Standing height in meters.
    pub height: Range,
    /// Bone-length multipliers per limb group, before height normalization.
    pub arm_ratio: Range,
    pub leg_ratio: Range,
    pub torso_ratio: Range,
    /// Base limb capsule radius in meters.
    pub limb_radius: Range,
    /// Torso radius as a multiple of the limb radius.
    pub torso_scale: Range,
}

impl Default for HumanoidRanges {
    fn default() -> Self {
        HumanoidRanges {
            height: Range::new(1.5, 1.9),
            arm_ratio: Range::new(0.85, 1.15),
            leg_ratio: Range::new(0.85, 1.15),
            torso_ratio: Range::new(0.85, 1.15),
            limb_radius: Range::new(0.035, 0.06),
            torso_scale: Range::new(1.6, 2.4),
        }
    }
}

impl HumanoidRanges {
    /// Every range collapsed to a single value.
    pub fn fixed(height: f64, limb_radius: f64, torso_scale: f64) -> HumanoidRanges {
        HumanoidRanges {
            height: Range::point(height),
            arm_ratio: Range::point(1.0),
            leg_ratio: Range::point(1.0),
            torso_ratio: Range::point(1.0),
            limb_radius: Range::point(limb_radius),
            torso_scale: Range::point(torso_scale),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceConfig {
    /// Camera distance from the subject anchor, meters.
    pub distance: Range,
    /// Degrees about the vertical axis, 0 looking along -Z from +Z.
    pub azimuth: Range,
    /// Degrees above the horizontal plane.
    pub elevation: Range,
    pub texture_pool: Vec<TextureRef>,
    pub humanoid: HumanoidRanges,
}

impl Default for NuisanceConfig {
    fn default() -> Self {
        NuisanceConfig {
            distance: Range::new(2.0, 6.0),
            azimuth: Range::new(0.0, 360.0),
            elevation: Range::new(0.0, 60.0),
            texture_pool: TextureRef::procedural_pool(1000, 16),
            humanoid: HumanoidRanges::default(),
        }
    }
}

impl NuisanceConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.distance.check_positive("distance")?;
        self.azimuth.check("azimuth")?;
        self.elevation.check("elevation")?;
        let h = &self.humanoid;
        h.height.check("height")?;
        if !(h.height.min > 0.5 && h.height.max < 2.5) {
            return Err(ConfigError::Height(h.height.min, h.height.max));
        }
        h.arm_ratio.check_positive("arm_ratio")?;
        h.leg_ratio.check_positive("leg_ratio")?;
        h.torso_ratio.check_positive("torso_ratio")?;
        h.limb_radius.check_positive("limb_radius")?;
        h.torso_scale.check_positive("torso_scale")?;
        if self.texture_pool.is_empty() {
            return Err(ConfigError::EmptyPool);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub distance: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureChoice {
    /// Index into the configured pool.
    pub index: usize,
    pub texture: TextureRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTextures {
    pub sky: TextureChoice,
    pub floor: TextureChoice,
    pub body: TextureChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanoidShape {
    pub height: f64,
    pub arm_ratio: f64,
    pub leg_ratio: f64,
    pub torso_ratio: f64,
    pub limb_radius: f64,
    pub torso_scale: f64,
    /// Length multiplier of the bone ending at each joint of the template.
    pub length_multipliers: Vec<f64>,
    /// Capsule radius of the bone ending at each joint, meters.
    pub radii: Vec<f64>,
}

impl HumanoidShape {
    /// Stable short identifier derived from the shape parameters.
    pub fn id(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in [
            self.height,
            self.arm_ratio,
            self.leg_ratio,
            self.torso_ratio,
            self.limb_radius,
            self.torso_scale,
        ] {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        format!("h{:016x}", h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuisanceSample {
    pub camera: CameraParams,
    pub textures: SceneTextures,
    pub humanoid: HumanoidShape,
}

/// The template every sampled humanoid is derived from.
pub fn humanoid_template() -> Skeleton {
    Skeleton::kinect25()
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Group {
    Torso,
    Head,
    Pelvis,
    Arm,
    Hand,
    Leg,
    Foot,
}

fn group_of(name: &str) -> Group {
    if name.starts_with("Spine") {
        Group::Torso
    } else if name == "Neck" || name == "Head" {
        Group::Head
    } else if name.starts_with("Hip") {
        Group::Pelvis
    } else if name.starts_with("Hand") || name.starts_with("Thumb") {
        Group::Hand
    } else if name.starts_with("Shoulder") || name.starts_with("Elbow") || name.starts_with("Wrist")
    {
        Group::Arm
    } else if name.starts_with("Foot") {
        Group::Foot
    } else if name.starts_with("Knee") || name.starts_with("Ankle") {
        Group::Leg
    } else {
        Group::Torso
    }
}

fn shape_from_params(
    template: &Skeleton,
    height: f64,
    arm_ratio: f64,
    leg_ratio: f64,
    torso_ratio: f64,
    limb_radius: f64,
    torso_scale: f64,
) -> HumanoidShape {
    let torso_radius = limb_radius * torso_scale;
    let mut length_multipliers = Vec::with_capacity(template.len());
    let mut radii = Vec::with_capacity(template.len());
    for joint in template.joints() {
        let (m, r) = match group_of(&joint.name) {
            Group::Torso => (torso_ratio, torso_radius),
            Group::Head if joint.name == "Head" => (torso_ratio, torso_radius * 0.6),
            Group::Head => (torso_ratio, limb_radius),
            Group::Pelvis => (torso_ratio, torso_radius * 0.6),
            Group::Arm => (arm_ratio, limb_radius),
            Group::Hand => (arm_ratio, limb_radius * 0.6),
            Group::Leg => (leg_ratio, limb_radius * 1.3),
            Group::Foot => (leg_ratio, limb_radius),
        };
        length_multipliers.push(m);
        radii.push(r);
    }
    HumanoidShape {
        height,
        arm_ratio,
        leg_ratio,
        torso_ratio,
        limb_radius,
        torso_scale,
        length_multipliers,
        radii,
    }
}

/// Topology for a shape: template offsets times the per-bone multipliers,
/// then uniformly scaled so the rest-pose height equals `shape.height`.
pub fn humanoid_topology(shape: &HumanoidShape) -> Skeleton {
    let template = humanoid_template();
    let stretched: Vec<Vec3> = template
        .offsets()
        .iter()
        .zip(&shape.length_multipliers)
        .map(|(o, m)| *o * *m)
        .collect();
    let provisional = template
        .with_offsets(&stretched)
        .expect("positive multipliers keep the template valid");
    let s = shape.height / provisional.height();
    let scaled: Vec<Vec3> = stretched.iter().map(|o| *o * s).collect();
    template
        .with_offsets(&scaled)
        .expect("uniform scaling keeps the template valid")
}

/// Draws height, the three limb ratios, limb radius and torso scale, in that
/// order.
pub fn sample_humanoid(config: &NuisanceConfig, rng: &mut RngStream) -> (HumanoidShape, Skeleton) {
    let h = &config.humanoid;
    let height = h.height.sample(rng);
    let arm = h.arm_ratio.sample(rng);
    let leg = h.leg_ratio.sample(rng);
    let torso = h.torso_ratio.sample(rng);
    let radius = h.limb_radius.sample(rng);
    let torso_scale = h.torso_scale.sample(rng);
    let shape = shape_from_params(
        &humanoid_template(),
        height,
        arm,
        leg,
        torso,
        radius,
        torso_scale,
    );
    let topology = humanoid_topology(&shape);
    (shape, topology)
}

fn pick(pool: &[TextureRef], rng: &mut RngStream) -> TextureChoice {
    let index = rng.index(pool.len());
    TextureChoice {
        index,
        texture: pool[index].clone(),
    }
}

/// One independent uniform draw of every nuisance factor. Draw order is
/// distance, azimuth, elevation, sky, floor, body, then the humanoid.
///
/// The caller is expected to have validated `config`.
pub fn sample_nuisances(config: &NuisanceConfig, rng: &mut RngStream) -> NuisanceSample {
    debug_assert!(config.validate().is_ok());
    let camera = CameraParams {
        distance: config.distance.sample(rng),
        azimuth: config.azimuth.sample(rng),
        elevation: config.elevation.sample(rng),
    };
    let textures = SceneTextures {
        sky: pick(&config.texture_pool, rng),
        floor: pick(&config.texture_pool, rng),
        body: pick(&config.texture_pool, rng),
    };
    let (humanoid, _) = sample_humanoid(config, rng);
    NuisanceSample {
        camera,
        textures,
        humanoid,
    }
}

impl NuisanceSample {
    /// Whether every factor lies inside the ranges of `config`.
    pub fn within(&self, config: &NuisanceConfig) -> bool {
        let h = &config.humanoid;
        let s = &self.humanoid;
        let tex_ok = |c: &TextureChoice| config.texture_pool.get(c.index) == Some(&c.texture);
        config.distance.contains(self.camera.distance)
            && config.azimuth.contains(self.camera.azimuth)
            && config.elevation.contains(self.camera.elevation)
            && tex_ok(&self.textures.sky)
            && tex_ok(&self.textures.floor)
            && tex_ok(&self.textures.body)
            && h.height.contains(s.height)
            && h.arm_ratio.contains(s.arm_ratio)
            && h.leg_ratio.contains(s.leg_ratio)
            && h.torso_ratio.contains(s.torso_ratio)
            && h.limb_radius.contains(s.limb_radius)
            && h.torso_scale.contains(s.torso_scale)
            && s.radii.iter().all(|r| *r > 0.0)
            && s.length_multipliers.iter().all(|m| *m > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{forward_kinematics, Pose};
    use crate::rng::derive_stream;
    use alloc::vec;
    use proptest::prelude::*;

    fn ks_uniform(samples: &mut [f64], lo: f64, hi: f64) -> f64 {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        let mut d: f64 = 0.0;
        for (i, x) in samples.iter().enumerate() {
            let f = (x - lo) / (hi - lo);
            d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
        }
        d
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma) * (x - ma);
            sbb += (y - mb) * (y - mb);
        }
        sab / crate::math::sqrt(saa * sbb)
    }

    #[test]
    fn azimuth_is_uniform() {
        let config = NuisanceConfig::default();
        let mut az: Vec<f64> = (0..10_000)
            .map(|i| {
                sample_nuisances(&config, &mut derive_stream(5, i))
                    .camera
                    .azimuth
            })
            .collect();
        let n = az.len() as f64;
        let mean = az.iter().sum::<f64>() / n;
        // standard error of U(0,360): 360 / sqrt(12 n)
        let se = 360.0 / crate::math::sqrt(12.0 * n);
        assert!((mean - 180.0).abs() < 3.0 * se, "mean {mean}");
        // asymptotic KS critical value at alpha = 0.01
        let crit = 1.6276 / crate::math::sqrt(n);
        let d = ks_uniform(&mut az, 0.0, 360.0);
        assert!(d < crit, "D = {d}, critical {crit}");
    }

    #[test]
    fn scalar_factors_are_uncorrelated() {
        let config = NuisanceConfig::default();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 6];
        for i in 0..10_000 {
            let s = sample_nuisances(&config, &mut derive_stream(77, i));
            let vals = [
                s.camera.distance,
                s.camera.azimuth,
                s.camera.elevation,
                s.humanoid.height,
                s.humanoid.limb_radius,
                s.humanoid.arm_ratio,
            ];
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
        }
        for i in 0..cols.len() {
            for j in i + 1..cols.len() {
                let r = pearson(&cols[i], &cols[j]);
                assert!(r.abs() < 0.05, "factors {i},{j}: r = {r}");
            }
        }
    }

    #[test]
    fn point_range_is_exact() {
        let config = NuisanceConfig {
            distance: Range::point(3.0),
            ..NuisanceConfig::default()
        };
        for i in 0..200 {
            assert_eq!(
                sample_nuisances(&config, &mut derive_stream(1, i))
                    .camera
                    .distance,
                3.0
            );
        }
    }

    #[test]
    fn fixed_stream_gives_identical_sample() {
        let config = NuisanceConfig::default();
        let a = sample_nuisances(&config, &mut derive_stream(9, 3));
        let b = sample_nuisances(&config, &mut derive_stream(9, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_shape_is_scaled_template() {
        let config = NuisanceConfig {
            humanoid: HumanoidRanges {
                height: Range::point(1.7),
                ..HumanoidRanges::fixed(1.7, 0.05, 2.0)
            },
            ..NuisanceConfig::default()
        };
        let (_, topo) = sample_humanoid(&config, &mut derive_stream(0, 0));
        let template = humanoid_template();
        let s = 1.7 / template.height();
        for (a, b) in topo.offsets().iter().zip(template.offsets()) {
            assert!((*a - b * s).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_pool_is_rejected() {
        let config = NuisanceConfig {
            texture_pool: vec![],
            ..NuisanceConfig::default()
        };
        assert_eq!(config.validate(), Err(ConfigError::EmptyPool));
    }

    #[test]
    fn consecutive_streams_give_distinct_shapes() {
        let config = NuisanceConfig::default();
        let shapes: Vec<HumanoidShape> = (0..100)
            .map(|i| sample_humanoid(&config, &mut derive_stream(3, i)).0)
            .collect();
        for w in shapes.windows(2) {
            assert_ne!(w[0], w[1]);
        }
    }

    fn arb_range(lo: f64, hi: f64) -> impl Strategy<Value = Range> {
        (lo..hi, lo..hi).prop_map(|(a, b)| {
            if a <= b {
                Range::new(a, b)
            } else {
                Range::new(b, a)
            }
        })
    }

    proptest! {
        #[test]
        fn samples_respect_random_configs(
            distance in arb_range(0.5, 10.0),
            azimuth in arb_range(0.0, 360.0),
            elevation in arb_range(-80.0, 80.0),
            height in arb_range(0.6, 2.4),
            ratio in arb_range(0.5, 1.5),
            pool in 1usize..6,
            seed in any::<u64>(),
        ) {
            let config = NuisanceConfig {
                distance,
                azimuth,
                elevation,
                texture_pool: TextureRef::procedural_pool(0, pool),
                humanoid: HumanoidRanges {
                    height,
                    arm_ratio: ratio,
                    ..HumanoidRanges::default()
                },
            };
            prop_assert!(config.validate().is_ok());
            let s = sample_nuisances(&config, &mut derive_stream(seed, 0));
            prop_assert!(s.within(&config));
            let topo = humanoid_topology(&s.humanoid);
            // recompute the height from an explicit rest-pose FK
            let p = forward_kinematics(&topo, &Pose::identity(topo.len()));
            let top = p.iter().map(|v| v.y).fold(f64::MIN, f64::max);
            let bottom = p.iter().map(|v| v.y).fold(f64::MAX, f64::min);
            prop_assert!(((top - bottom) - s.humanoid.height).abs() < 1e-6);
        }
    }
}
