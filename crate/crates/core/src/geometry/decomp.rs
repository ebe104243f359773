//! Convex decomposition of simple polygons.
//!
//! Ear clipping into triangles followed by greedy merging of pieces across
//! shared diagonals while the union stays convex. No new vertices are
//! introduced, so piece boundaries match the input exactly and areas add up
//! to the original. Quality (piece count) is best-effort; correctness of
//! the cover is what the callers rely on.

use super::shape::{is_convex_ccw, signed_area, validate_polygon};
use super::{GeometryError, Obstacle, Point};
use alloc::vec::Vec;

/// Splits a simple polygon into convex CCW pieces that tile it exactly.
/// Convex input comes back as a single piece.
pub fn convex_decomposition(vertices: &[Point]) -> Result<Vec<Obstacle>, GeometryError> {
    let v = validate_polygon(vertices.to_vec())?;
    if is_convex_ccw(&v) {
        return Ok(alloc::vec![Obstacle::ConvexPolygon { vertices: v }]);
    }
    let triangles = ear_clip(&v);
    let merged = greedy_merge(triangles);
    Ok(merged
        .into_iter()
        .map(|vertices| Obstacle::ConvexPolygon { vertices })
        .collect())
}

/// Closed containment: points on the triangle boundary count. An ear whose
/// chord merely touches another vertex would still degenerate the
/// remainder, so touching must block the clip.
fn triangle_blocks(a: Point, b: Point, c: Point, q: Point) -> bool {
    let d1 = (b - a).cross(q - a);
    let d2 = (c - b).cross(q - b);
    let d3 = (a - c).cross(q - c);
    d1 >= -1e-12 && d2 >= -1e-12 && d3 >= -1e-12
}

fn ear_clip(v: &[Point]) -> Vec<Vec<Point>> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut out = Vec::with_capacity(v.len().saturating_sub(2));
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        // Prefer the most convex ear for numeric robustness.
        let mut fallback: Option<(f64, usize)> = None;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (v[ia], v[ib], v[ic]);
            let turn = (b - a).cross(c - b);
            if turn <= 1e-12 {
                continue;
            }
            let blocked = idx
                .iter()
                .any(|&j| j != ia && j != ib && j != ic && triangle_blocks(a, b, c, v[j]));
            if blocked {
                continue;
            }
            if fallback.map_or(true, |(t, _)| turn > t) {
                fallback = Some((turn, k));
            }
        }
        if let Some((_, k)) = fallback {
            let n = idx.len();
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            out.push(alloc::vec![v[ia], v[ib], v[ic]]);
            idx.remove(k);
            clipped = true;
        }
        if !clipped {
            // Numerically stuck (near-degenerate outline): clip the least
            // reflex corner and continue; the area error is below the
            // degeneracy tolerance of the inputs.
            let n = idx.len();
            let k = (0..n)
                .max_by(|&x, &y| {
                    let t = |k: usize| {
                        let (a, b, c) = (
                            v[idx[(k + n - 1) % n]],
                            v[idx[k]],
                            v[idx[(k + 1) % n]],
                        );
                        (b - a).cross(c - b)
                    };
                    t(x).total_cmp(&t(y))
                })
                .unwrap_or(0);
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            out.push(alloc::vec![v[ia], v[ib], v[ic]]);
            idx.remove(k);
        }
    }
    out.push(idx.into_iter().map(|i| v[i]).collect());
    // Drop degenerate slivers the stuck-clip path may produce.
    out.retain(|t| signed_area(t) > 1e-12);
    out
}

/// Canonical key for an undirected edge between exact vertex coordinates.
fn edge_key(a: Point, b: Point) -> (u64, u64, u64, u64) {
    let pa = (a.x.to_bits(), a.y.to_bits());
    let pb = (b.x.to_bits(), b.y.to_bits());
    if pa <= pb {
        (pa.0, pa.1, pb.0, pb.1)
    } else {
        (pb.0, pb.1, pa.0, pa.1)
    }
}

/// Merges pieces across shared edges while the result stays convex.
fn greedy_merge(mut pieces: Vec<Vec<Point>>) -> Vec<Vec<Point>> {
    'outer: loop {
        let n = pieces.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if let Some(m) = try_merge(&pieces[i], &pieces[j]) {
                    pieces[i] = m;
                    pieces.swap_remove(j);
                    continue 'outer;
                }
            }
        }
        return pieces;
    }
}

/// Joins two CCW convex loops sharing exactly one edge, if convex.
fn try_merge(p1: &[Point], p2: &[Point]) -> Option<Vec<Point>> {
    let (n1, n2) = (p1.len(), p2.len());
    for i in 0..n1 {
        let (a, b) = (p1[i], p1[(i + 1) % n1]);
        for j in 0..n2 {
            let (c, d) = (p2[j], p2[(j + 1) % n2]);
            if edge_key(a, b) != edge_key(c, d) {
                continue;
            }
            // p1 travels a->b, p2 must travel b->a for consistent winding.
            if !(b == c && a == d) {
                continue;
            }
            let mut merged = Vec::with_capacity(n1 + n2 - 2);
            // Walk p1 from b around to a, then p2 from a around to b,
            // excluding the duplicated endpoints of the shared edge.
            for k in 1..n1 {
                merged.push(p1[(i + 1 + k) % n1]);
            }
            for k in 1..n2 {
                merged.push(p2[(j + 1 + k) % n2]);
            }
            if merged.len() >= 3 && is_convex_ccw(&merged) && signed_area(&merged) > 1e-12 {
                return Some(merged);
            }
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::{Point, Region};
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn piece_area_sum(pieces: &[Obstacle]) -> f64 {
        pieces
            .iter()
            .map(|p| signed_area(p.vertices().unwrap()))
            .sum()
    }

    #[test]
    fn convex_input_is_identity() {
        let square = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let pieces = convex_decomposition(&square).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_relative_eq!(piece_area_sum(&pieces), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn l_shape_splits_into_convex_cover() {
        let l = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        let pieces = convex_decomposition(&l).unwrap();
        assert!(pieces.len() >= 2);
        assert_relative_eq!(piece_area_sum(&pieces), 3.0, epsilon = 1e-9);
        for p in &pieces {
            assert!(is_convex_ccw(p.vertices().unwrap()));
        }
        // The union covers the original: grid-sample interior points.
        let original = Region::new(Obstacle::polygon(l).unwrap());
        let regions: Vec<Region> = pieces.iter().map(|p| Region::new(p.clone())).collect();
        for ix in 0..40 {
            for iy in 0..40 {
                let q = Point::new(ix as f64 * 0.05 + 0.025, iy as f64 * 0.05 + 0.025);
                if original.signed_distance(q) < -1e-6 {
                    assert!(
                        regions.iter().any(|r| r.signed_distance(q) <= 1e-9),
                        "interior point {q:?} not covered"
                    );
                }
                if original.signed_distance(q) > 1e-6 {
                    assert!(
                        regions.iter().all(|r| r.signed_distance(q) >= -1e-9),
                        "exterior point {q:?} covered"
                    );
                }
            }
        }
    }

    #[test]
    fn random_radial_polygons_decompose_cleanly() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..30 {
            let n = rng.gen_range(5..12);
            let mut angles: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(0.0..core::f64::consts::TAU))
                .collect();
            angles.sort_unstable_by(f64::total_cmp);
            angles.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
            if angles.len() < 4 {
                continue;
            }
            let verts: Vec<Point> = angles
                .iter()
                .map(|&a| Point::from_angle(a) * rng.gen_range(0.3..1.5))
                .collect();
            let Ok(poly) = Obstacle::polygon(verts) else {
                continue;
            };
            let v = poly.vertices().unwrap().to_vec();
            let pieces = convex_decomposition(&v).unwrap();
            let total = signed_area(&v);
            assert_relative_eq!(piece_area_sum(&pieces), total, epsilon = 1e-9);
            for p in &pieces {
                assert!(is_convex_ccw(p.vertices().unwrap()));
            }
        }
    }
}
