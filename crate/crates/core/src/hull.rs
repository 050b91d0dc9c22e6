//! Convex hull and diameter of planar point sets.

use crate::geom_graph::Point;

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone chain. Counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Largest pairwise distance, via rotating calipers over the hull.
pub(crate) fn diameter(points: &[Point]) -> f64 {
    let hull = convex_hull(points);
    let m = hull.len();
    match m {
        0 | 1 => return 0.0,
        2 => return hull[0].distance(hull[1]),
        _ => {}
    }
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..m {
        let ni = (i + 1) % m;
        while cross(hull[i], hull[ni], hull[(j + 1) % m]).abs()
            > cross(hull[i], hull[ni], hull[j]).abs()
        {
            j = (j + 1) % m;
        }
        best = best
            .max(hull[i].distance(hull[j]))
            .max(hull[ni].distance(hull[j]));
    }
    best
}
