//! Deterministic ray-cast renderer for capsule humanoids.
//!
//! The camera is a 640x480 pinhole with a 90 degree horizontal field of
//! view. Each pixel casts one ray through its center: the floor is the plane
//! `y = 0`, the sky an equirectangular sphere at infinity, and every bone is
//! a capsule. No anti-aliasing, so output bytes are reproducible.
//!
//! The light is attached to the camera rig, so turning the camera around the
//! vertical axis and turning the scene the other way yields the same image.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{acos, atan2, cos, sin, sqrt, tan, to_radians, Vec3, PI};
use crate::motion::{world_transforms, MotionClip, Pose};
use crate::randomize::{CameraParams, NuisanceSample};
use crate::rng::splitmix64;
use crate::texture::{Rgb, Texture};

pub const WIDTH: usize = 640;
pub const HEIGHT: usize = 480;
pub const FOV_DEGREES: f64 = 90.0;
pub const NEAR: f64 = 0.1;
pub const DEFAULT_FRAME_RATE: f64 = 30.0;
pub const DEFAULT_CLIP_FRAMES: usize = 32;

/// Floor texture repeat period in meters.
const FLOOR_TILE: f64 = 1.5;
/// Direction toward the light in camera axes (right, up, forward).
const LIGHT_CAMERA: [f64; 3] = [-0.35, 0.75, -0.55];
const AMBIENT: f64 = 0.35;
const DIFFUSE: f64 = 0.65;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("camera distance must be positive and finite, got {0}")]
    Distance(f64),
    #[error("camera elevation {0} degrees leaves the up direction undefined")]
    Elevation(f64),
    #[error("scene needs at least one frame")]
    NoFrames,
    #[error("frame rate must be positive and finite, got {0}")]
    FrameRate(f64),
    #[error("humanoid has {radii} bone radii but the motion has {joints} joints")]
    ShapeMismatch { radii: usize, joints: usize },
    #[error("frame index {index} is outside the clip window of {count} frames")]
    FrameIndex { index: usize, count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    /// Viewing direction.
    pub forward: Vec3,
    pub width: usize,
    pub height: usize,
    /// Focal length in pixels.
    pub focal: f64,
}

/// A point in front of the near plane, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Distance along the forward axis, meters.
    pub depth: f64,
}

/// Unit vector from the anchor toward a camera at the given angles (degrees).
pub fn orbit_direction(azimuth: f64, elevation: f64) -> Vec3 {
    let az = to_radians(azimuth % 360.0);
    let el = to_radians(elevation);
    Vec3::new(sin(az) * cos(el), sin(el), cos(az) * cos(el))
}

/// Camera on the sphere of radius `distance` around `anchor`, looking at it.
/// Azimuth 0 places the camera on the +Z side; positive azimuth swings it
/// toward +X; elevation raises it above the anchor.
pub fn build_camera(params: CameraParams, anchor: Vec3) -> Result<Camera, RenderError> {
    if !(params.distance > 0.0 && params.distance.is_finite()) {
        return Err(RenderError::Distance(params.distance));
    }
    if !params.elevation.is_finite() || !params.azimuth.is_finite() {
        return Err(RenderError::Elevation(params.elevation));
    }
    let dir = orbit_direction(params.azimuth, params.elevation);
    let forward = -dir;
    let right = forward
        .cross(Vec3::Y)
        .try_normalize(1e-9)
        .ok_or(RenderError::Elevation(params.elevation))?;
    let up = right.cross(forward);
    Ok(Camera {
        position: anchor + dir * params.distance,
        right,
        up,
        forward,
        width: WIDTH,
        height: HEIGHT,
        focal: (WIDTH as f64 / 2.0) / tan(to_radians(FOV_DEGREES / 2.0)),
    })
}

impl Camera {
    pub fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Camera-space coordinates (right, up, forward) of a world point.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.position;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// Unit world-space ray through the center of pixel `(px, py)`.
    pub fn pixel_ray(&self, px: usize, py: usize) -> Vec3 {
        let (cx, cy) = self.center();
        let x = (px as f64 + 0.5 - cx) / self.focal;
        let y = (cy - (py as f64 + 0.5)) / self.focal;
        (self.forward + self.right * x + self.up * y).normalize()
    }

    fn light(&self) -> Vec3 {
        let [a, b, c] = LIGHT_CAMERA;
        (self.right * a + self.up * b + self.forward * c).normalize()
    }
}

/// Pinhole projection; `None` when the point is not beyond the near plane.
pub fn project(camera: &Camera, point: Vec3) -> Option<Projection> {
    project_camera_space(camera, camera.to_camera(point))
}

fn project_camera_space(camera: &Camera, c: Vec3) -> Option<Projection> {
    if c.z.is_nan() || c.z <= NEAR {
        return None;
    }
    let (cx, cy) = camera.center();
    Some(Projection {
        u: cx + camera.focal * c.x / c.z,
        v: cy - camera.focal * c.y / c.z,
        depth: c.z,
    })
}

/// Post-processing that stands in for a physical camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub gamma: f64,
    /// Per-channel gain.
    pub tint: [f64; 3],
    /// Peak amplitude of uniform per-pixel noise, in 8-bit levels.
    pub noise: f64,
    /// Box blur radius in pixels (0 disables).
    pub blur: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub action: String,
    /// Motion already expressed on the humanoid's topology.
    pub motion: MotionClip,
    pub nuisance: NuisanceSample,
    pub frame_count: usize,
    pub frame_rate: f64,
    pub sensor: Option<SensorModel>,
}

/// Resolved sky, floor and body textures.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTextureSet {
    pub sky: Texture,
    pub floor: Texture,
    pub body: Texture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB, 3 bytes per pixel.
    pub rgb: Vec<u8>,
    /// Forward-axis depth in meters, `+inf` for sky.
    pub depth: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointObservation {
    pub u: f64,
    pub v: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundtruthFrame {
    /// 1 where the nearest surface is a body capsule.
    pub mask: Vec<u8>,
    pub joints: Vec<JointObservation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Groundtruth {
    pub action: String,
    pub frames: Vec<GroundtruthFrame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedClip {
    /// Clip-window index of each rendered frame.
    pub indices: Vec<usize>,
    pub frames: Vec<FrameBuffer>,
    pub groundtruth: Groundtruth,
    pub camera: Camera,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    /// Distance along the unit ray `rd` from `ro` to the first surface hit in
    /// front of the origin.
    pub fn intersect(&self, ro: Vec3, rd: Vec3) -> Option<f64> {
        let r2 = self.radius * self.radius;
        let mut best = f64::INFINITY;
        for c in [self.a, self.b] {
            let oc = ro - c;
            let b = oc.dot(rd);
            let h = b * b - (oc.dot(oc) - r2);
            if h >= 0.0 {
                let t = -b - sqrt(h);
                if t > 0.0 && t < best {
                    best = t;
                }
            }
        }
        let ba = self.b - self.a;
        let oa = ro - self.a;
        let baba = ba.dot(ba);
        let bard = ba.dot(rd);
        let baoa = ba.dot(oa);
        let qa = baba - bard * bard;
        if qa > 1e-12 * baba {
            let qb = baba * oa.dot(rd) - baoa * bard;
            let qc = baba * oa.dot(oa) - baoa * baoa - r2 * baba;
            let h = qb * qb - qa * qc;
            if h >= 0.0 {
                let t = (-qb - sqrt(h)) / qa;
                let y = baoa + t * bard;
                if t > 0.0 && y > 0.0 && y < baba && t < best {
                    best = t;
                }
            }
        }
        if best.is_finite() {
            Some(best)
        } else {
            None
        }
    }

    /// Outward unit normal at a surface point.
    pub fn normal(&self, p: Vec3) -> Vec3 {
        let ba = self.b - self.a;
        let baba = ba.dot(ba);
        let h = if baba > 0.0 {
            ((p - self.a).dot(ba) / baba).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p - (self.a + ba * h))
            .try_normalize(1e-15)
            .unwrap_or(Vec3::Y)
    }
}

/// One capsule per non-root bone, radius taken from the bone's child joint.
pub fn bone_capsules(
    pose_positions: &[Vec3],
    parents: &[Option<usize>],
    radii: &[f64],
) -> Vec<Capsule> {
    parents
        .iter()
        .enumerate()
        .filter_map(|(j, p)| {
            p.map(|p| Capsule {
                a: pose_positions[p],
                b: pose_positions[j],
                radius: radii[j],
            })
        })
        .collect()
}

fn shade(c: Rgb, k: f64) -> Rgb {
    let s = |x: u8| {
        let v = x as f64 * k + 0.5;
        if v >= 255.0 {
            255
        } else {
            v as u8
        }
    };
    [s(c[0]), s(c[1]), s(c[2])]
}

/// Sky and floor as seen from a fixed camera.
#[derive(Debug, Clone)]
pub struct Background {
    rgb: Vec<u8>,
    depth: Vec<f32>,
}

pub fn render_background(camera: &Camera, textures: &SceneTextureSet) -> Background {
    let (w, h) = (camera.width, camera.height);
    let mut rgb = vec![0u8; w * h * 3];
    let mut depth = vec![f32::INFINITY; w * h];
    let light = camera.light();
    let floor_shade = AMBIENT + DIFFUSE * light.y.max(0.0);
    let ro = camera.position;
    for py in 0..h {
        for px in 0..w {
            let rd = camera.pixel_ray(px, py);
            let i = py * w + px;
            let t = if rd.y != 0.0 { -ro.y / rd.y } else { -1.0 };
            let color = if t > 0.0 && t * rd.dot(camera.forward) > NEAR {
                let p = ro + rd * t;
                depth[i] = (t * rd.dot(camera.forward)) as f32;
                shade(
                    textures.floor.sample(p.x / FLOOR_TILE, p.z / FLOOR_TILE),
                    floor_shade,
                )
            } else {
                let u = atan2(rd.x, rd.z) / (2.0 * PI) + 0.5;
                let v = acos(rd.y.clamp(-1.0, 1.0)) / PI;
                textures.sky.sample(u * 4.0, v * 2.0)
            };
            rgb[i * 3..i * 3 + 3].copy_from_slice(&color);
        }
    }
    Background { rgb, depth }
}

/// Screen-space box `[x0, x1) x [y0, y1)` that contains the capsule, from the
/// projected corners of its camera-space bounding box.
fn screen_bounds(camera: &Camera, cap: &Capsule) -> Option<(usize, usize, usize, usize)> {
    let a = camera.to_camera(cap.a);
    let b = camera.to_camera(cap.b);
    let r = cap.radius;
    let lo = Vec3::new(a.x.min(b.x) - r, a.y.min(b.y) - r, a.z.min(b.z) - r);
    let hi = Vec3::new(a.x.max(b.x) + r, a.y.max(b.y) + r, a.z.max(b.z) + r);
    if hi.z <= NEAR {
        return None;
    }
    let (w, h) = (camera.width, camera.height);
    if lo.z <= NEAR {
        return Some((0, w, 0, h));
    }
    let (mut u0, mut u1, mut v0, mut v1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &x in &[lo.x, hi.x] {
        for &y in &[lo.y, hi.y] {
            for &z in &[lo.z, hi.z] {
                let p = project_camera_space(camera, Vec3::new(x, y, z))?;
                u0 = u0.min(p.u);
                u1 = u1.max(p.u);
                v0 = v0.min(p.v);
                v1 = v1.max(p.v);
            }
        }
    }
    let clampi = |x: f64, n: usize| -> usize {
        if x <= 0.0 {
            0
        } else if x >= n as f64 {
            n
        } else {
            x as usize
        }
    };
    let x0 = clampi(u0 - 1.0, w);
    let x1 = clampi(u1 + 2.0, w);
    let y0 = clampi(v0 - 1.0, h);
    let y1 = clampi(v1 + 2.0, h);
    if x0 >= x1 || y0 >= y1 {
        None
    } else {
        Some((x0, x1, y0, y1))
    }
}

fn body_color(texture: &Texture, cap: &Capsule, p: Vec3, n: Vec3) -> Rgb {
    let axis = cap.b - cap.a;
    let len = axis.norm();
    let dir = if len > 0.0 { axis / len } else { Vec3::Y };
    let e1 = dir.any_orthogonal();
    let e2 = dir.cross(e1);
    let along = (p - cap.a).dot(dir);
    let around = atan2(n.dot(e2), n.dot(e1)) / (2.0 * PI) + 0.5;
    texture.sample(around, along / 0.4)
}

/// Render one pose. `radii` gives the capsule radius of the bone ending at
/// each joint.
pub fn rasterize_frame(
    camera: &Camera,
    background: &Background,
    textures: &SceneTextureSet,
    motion: &MotionClip,
    pose: &Pose,
    radii: &[f64],
) -> (FrameBuffer, GroundtruthFrame) {
    let topo = &motion.topology;
    let (w, h) = (camera.width, camera.height);
    let (_, positions) = world_transforms(topo, pose);
    let parents: Vec<Option<usize>> = topo.joints().iter().map(|j| j.parent).collect();
    let capsules = bone_capsules(&positions, &parents, radii);
    let mut rgb = background.rgb.clone();
    let mut depth = background.depth.clone();
    let mut mask = vec![0u8; w * h];
    let light = camera.light();
    let ro = camera.position;
    for cap in &capsules {
        let Some((x0, x1, y0, y1)) = screen_bounds(camera, cap) else {
            continue;
        };
        for py in y0..y1 {
            for px in x0..x1 {
                let rd = camera.pixel_ray(px, py);
                let Some(t) = cap.intersect(ro, rd) else {
                    continue;
                };
                let z = t * rd.dot(camera.forward);
                let i = py * w + px;
                if z <= NEAR || z as f32 >= depth[i] {
                    continue;
                }
                depth[i] = z as f32;
                mask[i] = 1;
                let p = ro + rd * t;
                let n = cap.normal(p);
                let k = AMBIENT + DIFFUSE * n.dot(light).max(0.0);
                let c = shade(body_color(&textures.body, cap, p, n), k);
                rgb[i * 3..i * 3 + 3].copy_from_slice(&c);
            }
        }
    }
    let joints = observe_joints(camera, &positions, &parents, radii, &mask, &depth);
    (
        FrameBuffer {
            width: w,
            height: h,
            rgb,
            depth,
        },
        GroundtruthFrame { mask, joints },
    )
}

/// A joint is visible when it projects inside the image onto a body pixel
/// whose depth is not in front of the joint by more than the thickest
/// capsule touching it.
fn observe_joints(
    camera: &Camera,
    positions: &[Vec3],
    parents: &[Option<usize>],
    radii: &[f64],
    mask: &[u8],
    depth: &[f32],
) -> Vec<JointObservation> {
    let mut reach = vec![0.0f64; positions.len()];
    for (j, p) in parents.iter().enumerate() {
        if let Some(p) = *p {
            reach[j] = reach[j].max(radii[j]);
            reach[p] = reach[p].max(radii[j]);
        }
    }
    positions
        .iter()
        .enumerate()
        .map(|(j, &x)| match project(camera, x) {
            None => JointObservation {
                u: f64::NAN,
                v: f64::NAN,
                visible: false,
            },
            Some(p) => {
                let inside = p.u >= 0.0
                    && p.v >= 0.0
                    && p.u < camera.width as f64
                    && p.v < camera.height as f64;
                let visible = inside && {
                    let i = (p.v as usize) * camera.width + p.u as usize;
                    mask[i] == 1 && depth[i] as f64 >= p.depth - reach[j] - 1e-3
                };
                JointObservation {
                    u: p.u,
                    v: p.v,
                    visible,
                }
            }
        })
        .collect()
}

/// Source pose for clip frame `i`: nearest pose at the scene frame rate,
/// looping back and forth when the motion is shorter than the clip.
pub fn source_frame(clip: &MotionClip, i: usize, frame_rate: f64) -> usize {
    let n = clip.len();
    if n == 1 {
        return 0;
    }
    let t = i as f64 / frame_rate;
    let raw = crate::math::round(t / clip.frame_time) as usize;
    let period = 2 * (n - 1);
    let k = raw % period;
    if k < n {
        k
    } else {
        period - k
    }
}

/// Mean root position over the clip window; the camera looks at it.
pub fn subject_anchor(scene: &SceneDescription) -> Vec3 {
    let mut sum = Vec3::ZERO;
    for i in 0..scene.frame_count {
        let f = source_frame(&scene.motion, i, scene.frame_rate);
        sum += scene.motion.frames[f].root_translation;
    }
    sum / scene.frame_count as f64
}

fn apply_sensor(sensor: &SensorModel, frame_index: usize, fb: &mut FrameBuffer) {
    let mut lut = [[0.0f64; 256]; 3];
    for (c, table) in lut.iter_mut().enumerate() {
        for (x, v) in table.iter_mut().enumerate() {
            *v = 255.0 * crate::math::pow(x as f64 / 255.0, sensor.gamma) * sensor.tint[c];
        }
    }
    if sensor.blur > 0 {
        box_blur(&mut fb.rgb, fb.width, fb.height, sensor.blur);
    }
    let base = splitmix64(sensor.seed ^ (frame_index as u64).wrapping_mul(0x9E37_79B9));
    for (i, px) in fb.rgb.chunks_exact_mut(3).enumerate() {
        let hsh = splitmix64(base ^ i as u64);
        for (c, v) in px.iter_mut().enumerate() {
            let bits = (hsh >> (c * 21)) & 0x1F_FFFF;
            let n = (bits as f64 / 0x1F_FFFF as f64 * 2.0 - 1.0) * sensor.noise;
            let out = lut[c][*v as usize] + n + 0.5;
            *v = out.clamp(0.0, 255.0) as u8;
        }
    }
}

/// Mean over the `(2r+1)^2` window clipped to the image.
fn box_blur(rgb: &mut [u8], w: usize, h: usize, r: usize) {
    let inv = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 / ((i + r).min(n - 1) - i.saturating_sub(r) + 1) as f64)
            .collect()
    };
    let (inv_x, inv_y) = (inv(w), inv(h));
    let mut rows = vec![0u32; rgb.len()];
    for y in 0..h {
        let src = &rgb[y * w * 3..(y + 1) * w * 3];
        let dst = &mut rows[y * w * 3..(y + 1) * w * 3];
        for c in 0..3 {
            let mut sum: u32 = (0..=r.min(w - 1)).map(|k| src[k * 3 + c] as u32).sum();
            for x in 0..w {
                dst[x * 3 + c] = sum;
                if x + r + 1 < w {
                    sum += src[(x + r + 1) * 3 + c] as u32;
                }
                if x >= r {
                    sum -= src[(x - r) * 3 + c] as u32;
                }
            }
        }
    }
    let mut sums = vec![0u32; w * 3];
    let row = |k: usize| k * w * 3..(k + 1) * w * 3;
    for k in 0..=r.min(h - 1) {
        sums.iter_mut()
            .zip(&rows[row(k)])
            .for_each(|(s, t)| *s += t);
    }
    for y in 0..h {
        for (x, (o, s)) in rgb[row(y)]
            .chunks_exact_mut(3)
            .zip(sums.chunks_exact(3))
            .enumerate()
        {
            let k = inv_x[x] * inv_y[y];
            for c in 0..3 {
                o[c] = (s[c] as f64 * k + 0.5).min(255.0) as u8;
            }
        }
        if y + r + 1 < h {
            sums.iter_mut()
                .zip(&rows[row(y + r + 1)])
                .for_each(|(s, t)| *s += t);
        }
        if y >= r {
            sums.iter_mut()
                .zip(&rows[row(y - r)])
                .for_each(|(s, t)| *s -= t);
        }
    }
}

fn check_scene(scene: &SceneDescription) -> Result<(), RenderError> {
    if scene.frame_count == 0 {
        return Err(RenderError::NoFrames);
    }
    if !(scene.frame_rate > 0.0 && scene.frame_rate.is_finite()) {
        return Err(RenderError::FrameRate(scene.frame_rate));
    }
    let radii = scene.nuisance.humanoid.radii.len();
    if radii != scene.motion.topology.len() {
        return Err(RenderError::ShapeMismatch {
            radii,
            joints: scene.motion.topology.len(),
        });
    }
    Ok(())
}

/// Camera for the whole clip: one viewpoint per video.
pub fn scene_camera(scene: &SceneDescription) -> Result<Camera, RenderError> {
    check_scene(scene)?;
    build_camera(scene.nuisance.camera, subject_anchor(scene))
}

/// Render selected clip-window frames, in the order given.
pub fn render_frames(
    scene: &SceneDescription,
    textures: &SceneTextureSet,
    indices: &[usize],
) -> Result<RenderedClip, RenderError> {
    let camera = scene_camera(scene)?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= scene.frame_count) {
        return Err(RenderError::FrameIndex {
            index: bad,
            count: scene.frame_count,
        });
    }
    let background = render_background(&camera, textures);
    let radii = &scene.nuisance.humanoid.radii;
    let mut frames = Vec::with_capacity(indices.len());
    let mut gt = Vec::with_capacity(indices.len());
    for &i in indices {
        let pose = &scene.motion.frames[source_frame(&scene.motion, i, scene.frame_rate)];
        let (mut fb, g) =
            rasterize_frame(&camera, &background, textures, &scene.motion, pose, radii);
        if let Some(sensor) = &scene.sensor {
            apply_sensor(sensor, i, &mut fb);
        }
        frames.push(fb);
        gt.push(g);
    }
    Ok(RenderedClip {
        indices: indices.to_vec(),
        frames,
        groundtruth: Groundtruth {
            action: scene.action.clone(),
            frames: gt,
        },
        camera,
    })
}

/// Render the full clip window.
pub fn render_clip(
    scene: &SceneDescription,
    textures: &SceneTextureSet,
) -> Result<RenderedClip, RenderError> {
    let indices: Vec<usize> = (0..scene.frame_count).collect();
    render_frames(scene, textures, &indices)
}
