//! Euclidean convex-hull vertices in the plane and in space.
//!
//! Only the vertex set is needed downstream, so faces are not exported.
//! Points lying on a hull edge or face (not at a corner) are excluded.

use std::collections::HashMap;

use crate::geom::Point;

/// Dimensions with a convex-hull implementation.
pub trait ConvexHull: Sized {
    /// Sorted indices of the hull's extreme points.
    fn hull_vertices(points: &[Self]) -> Vec<usize>;
}

impl ConvexHull for Point<2> {
    fn hull_vertices(points: &[Self]) -> Vec<usize> {
        let idx: Vec<usize> = (0..points.len()).collect();
        let mut out = monotone_chain(&idx, |i| (points[i][0], points[i][1]));
        out.sort_unstable();
        out
    }
}

impl ConvexHull for Point<3> {
    fn hull_vertices(points: &[Self]) -> Vec<usize> {
        let mut out = quickhull3(points);
        out.sort_unstable();
        out
    }
}

#[inline]
fn cross2(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain over `idx`, with coordinates given by `xy`.
fn monotone_chain(idx: &[usize], xy: impl Fn(usize) -> (f64, f64)) -> Vec<usize> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (xy(a), xy(b));
        pa.0.total_cmp(&pb.0).then(pa.1.total_cmp(&pb.1))
    });
    order.dedup_by(|a, b| xy(*a) == xy(*b));
    if order.len() <= 2 {
        return order;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(order.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 && cross2(xy(hull[hull.len() - 2]), xy(hull[hull.len() - 1]), xy(i)) <= 0.0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 2 {
        // All points collinear and the chain folded onto the two extremes.
        return vec![order[0], order[order.len() - 1]];
    }
    hull
}

#[inline]
fn sub(a: &Point<3>, b: &Point<3>) -> Point<3> {
    *a - *b
}

#[inline]
fn cross(a: &Point<3>, b: &Point<3>) -> Point<3> {
    Point::new([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

struct Face {
    v: [usize; 3],
    normal: Point<3>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(points: &[Point<3>], v: [usize; 3]) -> Self {
        let n = cross(&sub(&points[v[1]], &points[v[0]]), &sub(&points[v[2]], &points[v[0]]));
        let normal = n.normalized().unwrap_or(n);
        Face {
            v,
            offset: normal.dot(&points[v[0]]),
            normal,
            outside: Vec::new(),
            alive: true,
        }
    }

    #[inline]
    fn height(&self, p: &Point<3>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

fn quickhull3(points: &[Point<3>]) -> Vec<usize> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let scale = points
        .iter()
        .flat_map(|p| p.0)
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(f64::MIN_POSITIVE);
    let eps = 1e-11 * scale;

    // Initial simplex from the widest coordinate extent.
    let mut best = (0usize, 0usize, -1.0f64);
    for axis in 0..3 {
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in points.iter().enumerate() {
            if p[axis] < points[lo][axis] {
                lo = i;
            }
            if p[axis] > points[hi][axis] {
                hi = i;
            }
        }
        let ext = points[hi][axis] - points[lo][axis];
        if ext > best.2 {
            best = (lo, hi, ext);
        }
    }
    let (i0, i1, ext) = best;
    if ext <= eps {
        return vec![i0];
    }
    let dir = sub(&points[i1], &points[i0]);
    let (mut i2, mut d2) = (0, -1.0);
    for (i, p) in points.iter().enumerate() {
        let d = cross(&dir, &sub(p, &points[i0])).norm() / dir.norm();
        if d > d2 {
            i2 = i;
            d2 = d;
        }
    }
    if d2 <= eps {
        return vec![i0, i1];
    }
    let plane = cross(&dir, &sub(&points[i2], &points[i0]));
    let plane_n = plane * (1.0 / plane.norm());
    let (mut i3, mut d3) = (0, 0.0f64);
    for (i, p) in points.iter().enumerate() {
        let d = plane_n.dot(&sub(p, &points[i0]));
        if d.abs() > d3.abs() {
            i3 = i;
            d3 = d;
        }
    }
    if d3.abs() <= eps {
        return planar_hull(points, &points[i0], &dir, &plane_n);
    }

    let mut faces: Vec<Face> = Vec::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    let tetra = if d3 > 0.0 {
        [[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    } else {
        [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    };
    for v in tetra {
        let id = faces.len();
        faces.push(Face::new(points, v));
        for k in 0..3 {
            edges.insert((v[k], v[(k + 1) % 3]), id);
        }
    }
    for (i, p) in points.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&i) {
            continue;
        }
        if let Some(f) = faces.iter_mut().find(|f| f.height(p) > eps) {
            f.outside.push(i);
        }
    }
    let mut stack: Vec<usize> = (0..4).filter(|&f| !faces[f].outside.is_empty()).collect();

    let mut visible: Vec<usize> = Vec::new();
    let mut horizon: Vec<(usize, usize)> = Vec::new();
    let mut orphans: Vec<usize> = Vec::new();
    while let Some(fid) = stack.pop() {
        if !faces[fid].alive || faces[fid].outside.is_empty() {
            continue;
        }
        let apex = *faces[fid]
            .outside
            .iter()
            .max_by(|&&a, &&b| faces[fid].height(&points[a]).total_cmp(&faces[fid].height(&points[b])))
            .expect("nonempty outside set");
        let ap = points[apex];

        visible.clear();
        horizon.clear();
        visible.push(fid);
        faces[fid].alive = false;
        let mut head = 0;
        while head < visible.len() {
            let f = visible[head];
            head += 1;
            let v = faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let Some(&g) = edges.get(&(b, a)) else {
                    continue;
                };
                if !faces[g].alive {
                    continue;
                }
                if faces[g].height(&ap) > eps {
                    faces[g].alive = false;
                    visible.push(g);
                }
            }
        }
        for &f in &visible {
            let v = faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let twin_visible = edges.get(&(b, a)).map(|&g| !faces[g].alive).unwrap_or(true);
                if !twin_visible {
                    horizon.push((a, b));
                }
            }
        }
        orphans.clear();
        for &f in &visible {
            orphans.extend(faces[f].outside.drain(..).filter(|&i| i != apex));
            let v = faces[f].v;
            for k in 0..3 {
                edges.remove(&(v[k], v[(k + 1) % 3]));
            }
        }
        let first_new = faces.len();
        for &(a, b) in &horizon {
            let id = faces.len();
            faces.push(Face::new(points, [a, b, apex]));
            edges.insert((a, b), id);
            edges.insert((b, apex), id);
            edges.insert((apex, a), id);
        }
        for &i in &orphans {
            let p = &points[i];
            if let Some(f) = faces[first_new..].iter_mut().find(|f| f.height(p) > eps) {
                f.outside.push(i);
            }
        }
        stack.extend((first_new..faces.len()).filter(|&f| !faces[f].outside.is_empty()));
    }

    let mut out: Vec<usize> = faces.iter().filter(|f| f.alive).flat_map(|f| f.v).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn planar_hull(points: &[Point<3>], origin: &Point<3>, dir: &Point<3>, normal: &Point<3>) -> Vec<usize> {
    let e1 = *dir * (1.0 / dir.norm());
    let e2 = cross(normal, &e1);
    let idx: Vec<usize> = (0..points.len()).collect();
    monotone_chain(&idx, |i| {
        let q = sub(&points[i], origin);
        (q.dot(&e1), q.dot(&e2))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// A point in general position is extreme iff it lies in no triangle of
    /// three other points.
    fn brute_2d(points: &[Point<2>]) -> Vec<usize> {
        let n = points.len();
        let mut out = Vec::new();
        'outer: for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if [j, k, l].contains(&i) || j == k || k == l || j == l {
                            continue;
                        }
                        // i inside triangle jkl (closed) => not extreme.
                        let (a, b, c, p) = (points[j], points[k], points[l], points[i]);
                        let s1 = cross2((a[0], a[1]), (b[0], b[1]), (p[0], p[1]));
                        let s2 = cross2((b[0], b[1]), (c[0], c[1]), (p[0], p[1]));
                        let s3 = cross2((c[0], c[1]), (a[0], a[1]), (p[0], p[1]));
                        if (s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0) || (s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0) {
                            continue 'outer;
                        }
                    }
                }
            }
            out.push(i);
        }
        out
    }

    /// In general position a vertex lies on a supporting plane through two
    /// other points.
    fn brute_3d(points: &[Point<3>]) -> Vec<usize> {
        let n = points.len();
        let mut out = Vec::new();
        for i in 0..n {
            let mut extreme = false;
            'search: for j in 0..n {
                for k in j + 1..n {
                    if i == j || i == k {
                        continue;
                    }
                    let nrm = cross(&sub(&points[j], &points[i]), &sub(&points[k], &points[i]));
                    let side: Vec<f64> = points.iter().map(|p| nrm.dot(&sub(p, &points[i]))).collect();
                    if side.iter().all(|s| *s <= 1e-12) || side.iter().all(|s| *s >= -1e-12) {
                        extreme = true;
                        break 'search;
                    }
                }
            }
            if extreme {
                out.push(i);
            }
        }
        out
    }

    #[test]
    fn square_with_interior_and_edge_points() {
        let pts = [
            Point::new([0.0, 0.0]),
            Point::new([1.0, 0.0]),
            Point::new([1.0, 1.0]),
            Point::new([0.0, 1.0]),
            Point::new([0.5, 0.5]),
            Point::new([0.5, 0.0]),
        ];
        assert_eq!(Point::<2>::hull_vertices(&pts), vec![0, 1, 2, 3]);
    }

    #[test]
    fn collinear_and_tiny_inputs() {
        let pts = [Point::new([-0.5, 0.0]), Point::new([0.0, 0.0]), Point::new([0.5, 0.0])];
        assert_eq!(Point::<2>::hull_vertices(&pts), vec![0, 2]);
        assert_eq!(Point::<2>::hull_vertices(&pts[..1]), vec![0]);
        assert!(Point::<2>::hull_vertices(&[]).is_empty());
        let p3 = [
            Point::new([0.0, 0.0, 0.0]),
            Point::new([1.0, 1.0, 1.0]),
            Point::new([0.5, 0.5, 0.5]),
        ];
        assert_eq!(Point::<3>::hull_vertices(&p3), vec![0, 1]);
    }

    #[test]
    fn cube_corners_only() {
        let mut pts = Vec::new();
        for k in 0..8 {
            pts.push(Point::new([
                (k & 1) as f64,
                ((k >> 1) & 1) as f64,
                ((k >> 2) & 1) as f64,
            ]));
        }
        pts.push(Point::new([0.5, 0.5, 0.5]));
        pts.push(Point::new([0.5, 0.5, 0.0]));
        assert_eq!(Point::<3>::hull_vertices(&pts), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn coplanar_points_in_space() {
        let pts = [
            Point::new([0.0, 0.0, 0.2]),
            Point::new([1.0, 0.0, 0.2]),
            Point::new([0.0, 1.0, 0.2]),
            Point::new([0.2, 0.2, 0.2]),
        ];
        assert_eq!(Point::<3>::hull_vertices(&pts), vec![0, 1, 2]);
    }

    #[test]
    fn random_plane_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.gen_range(3..25);
            let pts: Vec<Point<2>> = (0..n)
                .map(|_| Point::new([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            assert_eq!(Point::<2>::hull_vertices(&pts), brute_2d(&pts));
        }
    }

    #[test]
    fn random_space_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..30 {
            let n = rng.gen_range(4..30);
            let pts: Vec<Point<3>> = (0..n)
                .map(|_| {
                    Point::new([
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ])
                })
                .collect();
            assert_eq!(Point::<3>::hull_vertices(&pts), brute_3d(&pts));
        }
    }

    #[test]
    fn large_sphere_cloud_keeps_all_sphere_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut pts: Vec<Point<3>> = Vec::new();
        for _ in 0..300 {
            let v = Point::new([
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            pts.push(v.normalized().unwrap());
        }
        for _ in 0..3000 {
            let v: Point<3> = Point::new([
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ]);
            pts.push(v);
        }
        assert_eq!(Point::<3>::hull_vertices(&pts), (0..300).collect::<Vec<_>>());
    }
}
