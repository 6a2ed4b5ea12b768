//! Small fixed-size vector helpers.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn centroid(pts: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in pts {
        c = add(c, *p);
    }
    scale(c, 1.0 / pts.len() as f64)
}

/// Signed volume of the tetrahedron (a, b, c, d).
pub fn signed_volume(a: Point, b: Point, c: Point, d: Point) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0
}

/// Gradients of the four barycentric coordinates and the (positive) volume.
pub fn barycentric_gradients(x: &[Point; 4]) -> ([Point; 4], f64) {
    let e1 = sub(x[1], x[0]);
    let e2 = sub(x[2], x[0]);
    let e3 = sub(x[3], x[0]);
    let det = dot(e1, cross(e2, e3));
    let g1 = scale(cross(e2, e3), 1.0 / det);
    let g2 = scale(cross(e3, e1), 1.0 / det);
    let g3 = scale(cross(e1, e2), 1.0 / det);
    let g0 = scale(add(add(g1, g2), g3), -1.0);
    ([g0, g1, g2, g3], det.abs() / 6.0)
}

/// Distance from `x` to the segment `[a, b]`.
pub fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let t = (dot(sub(x, a), d) / dot(d, d)).clamp(0.0, 1.0);
    norm(sub(x, add(a, scale(d, t))))
}

/// Whether `x` lies in the closed convex planar polygon `corners` (ordered
/// counterclockwise about `normal`).
pub fn in_polygon(x: Point, corners: &[Point], normal: Point, tol: f64) -> bool {
    if dot(sub(x, corners[0]), normal).abs() > tol {
        return false;
    }
    let n = corners.len();
    (0..n).all(|i| {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        let side = sub(b, a);
        dot(cross(side, sub(x, a)), normal) >= -tol * norm(side)
    })
}
