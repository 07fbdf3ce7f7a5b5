use super::Channel;
use crate::math::{asin, atan2, to_degrees, to_radians, Quat};

/// Compose rotation channels in the order they are listed (intrinsic), angles
/// in degrees.
pub fn euler_to_quat(channels: &[(Channel, f64)]) -> Quat {
    let mut q = Quat::IDENTITY;
    for &(c, deg) in channels {
        let a = to_radians(deg);
        let r = match c {
            Channel::Xrotation => Quat::rot_x(a),
            Channel::Yrotation => Quat::rot_y(a),
            Channel::Zrotation => Quat::rot_z(a),
            _ => continue,
        };
        q = q * r;
    }
    q.normalize()
}

/// Decompose `q` as `Rz(z) * Rx(x) * Ry(y)`; returns `(z, x, y)` in degrees.
///
/// `x` is in `[-90, 90]`. At the singularity `|x| = 90` the `y` angle is set
/// to zero.
pub fn quat_to_euler_zxy(q: Quat) -> (f64, f64, f64) {
    let m = q.normalize().to_mat3().m;
    let sx = m[2][1].clamp(-1.0, 1.0);
    let x = asin(sx);
    let (z, y) = if sx.abs() < 1.0 - 1e-12 {
        (atan2(-m[0][1], m[1][1]), atan2(-m[2][0], m[2][2]))
    } else {
        (atan2(m[1][0], m[0][0]), 0.0)
    };
    (to_degrees(z), to_degrees(x), to_degrees(y))
}
