//! Convex polygon clipping and areas in the wavenumber plane.

/// Polygon vertex `[κu, κv]`.
pub type Point = [f64; 2];

/// Signed shoelace area, positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Counter-clockwise copy of a polygon.
pub fn ccw(poly: &[Point]) -> Vec<Point> {
    let mut p = poly.to_vec();
    if signed_area(&p) < 0.0 {
        p.reverse();
    }
    p
}

#[inline]
fn side(a: Point, b: Point, p: Point) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn intersect(s: Point, e: Point, ds: f64, de: f64) -> Point {
    let t = ds / (ds - de);
    [s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]
}

/// Intersection of two convex polygons (Sutherland–Hodgman).
pub fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let clip = ccw(clip);
    let mut out = ccw(subject);
    let m = clip.len();
    for i in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % m]);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for j in 0..n {
            let s = input[j];
            let e = input[(j + 1) % n];
            let (ds, de) = (side(a, b, s), side(a, b, e));
            match (ds >= 0.0, de >= 0.0) {
                (true, true) => out.push(e),
                (true, false) => out.push(intersect(s, e, ds, de)),
                (false, true) => {
                    out.push(intersect(s, e, ds, de));
                    out.push(e);
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// Area of the intersection of two convex polygons.
pub fn overlap_area(a: &[Point], b: &[Point]) -> f64 {
    area(&clip_convex(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(cx: f64, cy: f64, h: f64) -> Vec<Point> {
        vec![[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]]
    }

    #[test]
    fn unit_square_area() {
        assert_eq!(area(&square(0.0, 0.0, 0.5)), 1.0);
        let mut cw = square(0.0, 0.0, 0.5);
        cw.reverse();
        assert_eq!(signed_area(&cw), -1.0);
    }

    #[test]
    fn half_overlap() {
        let a = square(0.0, 0.0, 1.0);
        let b = square(1.0, 0.0, 1.0);
        assert!((overlap_area(&a, &b) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_and_contained() {
        let a = square(0.0, 0.0, 1.0);
        assert_eq!(overlap_area(&a, &square(5.0, 0.0, 1.0)), 0.0);
        assert!((overlap_area(&a, &square(0.1, 0.0, 0.2)) - 0.16).abs() < 1e-15);
    }

    #[test]
    fn rotated_square_in_square() {
        let a = square(0.0, 0.0, 1.0);
        let d = vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        assert!((overlap_area(&a, &d) - 2.0).abs() < 1e-15);
        let big = vec![[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]];
        // square corners cut by the diamond |x|+|y| <= 2 touch exactly
        assert!((overlap_area(&a, &big) - 4.0).abs() < 1e-15);
    }
}
