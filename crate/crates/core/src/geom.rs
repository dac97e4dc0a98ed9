//! Small fixed-size vector helpers. Positions and normals are plain `[f64; 3]`.

pub type Vec3 = [f64; 3];

#[inline]
pub fn distance(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `a / |a|`, or `None` for a zero or non-finite vector.
pub fn normalized(a: &Vec3) -> Option<Vec3> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some([a[0] / n, a[1] / n, a[2] / n])
    } else {
        None
    }
}

/// Moves `h` toward `target` by `rate`: `h + rate * (target - h)`.
#[inline]
pub fn step_toward(h: &mut Vec3, target: &Vec3, rate: f64) {
    for (hi, ti) in h.iter_mut().zip(target) {
        *hi += rate * (ti - *hi);
    }
}

pub fn is_finite(a: &Vec3) -> bool {
    a.iter().all(|v| v.is_finite())
}
