//! Incremental Bowyer-Watson Delaunay triangulation with a walking point
//! locator. Cocircular configurations resolve deterministically by insertion
//! order: points on a circumcircle (within tolerance) count as outside, so
//! the standing diagonal survives.

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Relative tolerance for the incircle and orientation predicates; scaled by
/// the input extent so it matches 1e-12 on unit-box data.
const REL_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    /// neighbor[k] faces edge (v[k], v[(k+1)%3])
    neighbor: [Option<usize>; 3],
    alive: bool,
}

/// Counter-clockwise signed parallelogram area of (a, b, c).
#[inline]
fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Positive when `d` lies strictly inside the circumcircle of CCW (a, b, c).
#[inline]
fn incircle(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> f64 {
    let adx = a.x - d.x;
    let ady = a.y - d.y;
    let bdx = b.x - d.x;
    let bdy = b.y - d.y;
    let cdx = c.x - d.x;
    let cdy = c.y - d.y;
    let ad2 = adx * adx + ady * ady;
    let bd2 = bdx * bdx + bdy * bdy;
    let cd2 = cdx * cdx + cdy * cdy;
    adx * (bdy * cd2 - bd2 * cdy) - ady * (bdx * cd2 - bd2 * cdx)
        + ad2 * (bdx * cdy - bdy * cdx)
}

/// Delaunay triangulation of a planar point set. Returns CCW triangles as
/// index triples into `points`. Fails when every point is collinear.
pub fn triangulate(points: &[Vec2]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    for (i, p) in points.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::DegenerateInput(format!("point {i} is not finite")));
        }
    }

    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let extent = (max_x - min_x).max(max_y - min_y).max(1e-12);
    let eps_orient = REL_EPS * extent * extent;
    let eps_incircle = REL_EPS * extent * extent * extent * extent;

    // super-triangle generously containing everything
    let cx = (min_x + max_x) * 0.5;
    let cy = (min_y + max_y) * 0.5;
    let m = 64.0 * extent;
    let n = points.len();
    let mut verts: Vec<Vec2> = points.to_vec();
    verts.push(Vec2::new(cx - 2.0 * m, cy - m));
    verts.push(Vec2::new(cx + 2.0 * m, cy - m));
    verts.push(Vec2::new(cx, cy + 2.0 * m));

    let mut tris: Vec<Tri> = vec![Tri {
        v: [n, n + 1, n + 2],
        neighbor: [None; 3],
        alive: true,
    }];
    let mut last = 0usize;

    for p in 0..n {
        let pt = verts[p];
        let t0 = locate(&verts, &tris, last, pt, eps_orient)?;

        // breadth-first cavity of triangles whose circumcircle strictly
        // contains the point
        let mut bad = vec![false; tris.len()];
        let mut cavity = Vec::new();
        let mut queue = vec![t0];
        let strictly_inside = |t: &Tri| -> bool {
            incircle(verts[t.v[0]], verts[t.v[1]], verts[t.v[2]], pt) > eps_incircle
        };
        if strictly_inside(&tris[t0]) {
            bad[t0] = true;
            cavity.push(t0);
        } else {
            // duplicate of an existing vertex, or exactly cocircular at a
            // vertex; either way there is nothing to insert into
            if tris[t0].v.iter().any(|&v| (verts[v] - pt).norm() <= f64::EPSILON * extent) {
                return Err(Error::DegenerateInput(format!(
                    "point {p} duplicates an earlier point"
                )));
            }
            return Err(Error::DegenerateInput(format!(
                "point {p} could not be inserted (degenerate configuration)"
            )));
        }
        while let Some(t) = queue.pop() {
            for k in 0..3 {
                if let Some(nb) = tris[t].neighbor[k] {
                    if !bad[nb] && tris[nb].alive && strictly_inside(&tris[nb]) {
                        bad[nb] = true;
                        cavity.push(nb);
                        queue.push(nb);
                    }
                }
            }
        }

        // cavity boundary: directed edges whose neighbor is outside
        struct BoundaryEdge {
            a: usize,
            b: usize,
            outer: Option<usize>,
            outer_slot: usize,
        }
        let mut boundary = Vec::new();
        for &t in &cavity {
            for k in 0..3 {
                let nb = tris[t].neighbor[k];
                let outside = match nb {
                    Some(x) => !bad[x],
                    None => true,
                };
                if outside {
                    boundary.push(BoundaryEdge {
                        a: tris[t].v[k],
                        b: tris[t].v[(k + 1) % 3],
                        outer: nb,
                        outer_slot: nb
                            .map(|x| {
                                (0..3)
                                    .find(|&s| tris[x].neighbor[s] == Some(t))
                                    .expect("adjacency is mutual")
                            })
                            .unwrap_or(0),
                    });
                }
            }
        }

        for &t in &cavity {
            tris[t].alive = false;
        }

        // fan the cavity from the new point; edge (b, p) of one fan triangle
        // meets edge (p, a) of the next
        use std::collections::HashMap;
        let mut fan_edge: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut created = Vec::with_capacity(boundary.len());
        for e in &boundary {
            let id = tris.len();
            tris.push(Tri {
                v: [e.a, e.b, p],
                neighbor: [e.outer, None, None],
                alive: true,
            });
            if let Some(outer) = e.outer {
                tris[outer].neighbor[e.outer_slot] = Some(id);
            }
            for (slot, key) in [(1usize, (e.b, p)), (2usize, (p, e.a))] {
                let norm_key = (key.0.min(key.1), key.0.max(key.1));
                match fan_edge.remove(&norm_key) {
                    Some((other, other_slot)) => {
                        tris[id].neighbor[slot] = Some(other);
                        tris[other].neighbor[other_slot] = Some(id);
                    }
                    None => {
                        fan_edge.insert(norm_key, (id, slot));
                    }
                }
            }
            created.push(id);
        }
        last = *created.last().expect("cavity has boundary");
    }

    let result: Vec<[usize; 3]> = tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect();
    if result.is_empty() {
        return Err(Error::DegenerateInput(
            "all points are collinear; no triangulation exists".into(),
        ));
    }
    Ok(result)
}

fn locate(verts: &[Vec2], tris: &[Tri], start: usize, p: Vec2, eps: f64) -> Result<usize> {
    let mut t = start;
    if !tris[t].alive {
        t = tris
            .iter()
            .rposition(|x| x.alive)
            .ok_or_else(|| Error::DegenerateInput("triangulation vanished".into()))?;
    }
    let mut steps = 0usize;
    let limit = 4 * tris.len() + 16;
    'walk: loop {
        steps += 1;
        if steps > limit {
            break;
        }
        let tri = &tris[t];
        for k in 0..3 {
            let a = verts[tri.v[k]];
            let b = verts[tri.v[(k + 1) % 3]];
            if orient(a, b, p) < -eps {
                match tri.neighbor[k] {
                    Some(nb) if tris[nb].alive => {
                        t = nb;
                        continue 'walk;
                    }
                    _ => break 'walk,
                }
            }
        }
        return Ok(t);
    }
    // fallback: linear scan with tolerant containment
    for (i, tri) in tris.iter().enumerate() {
        if !tri.alive {
            continue;
        }
        let inside = (0..3).all(|k| {
            orient(verts[tri.v[k]], verts[tri.v[(k + 1) % 3]], p) >= -eps
        });
        if inside {
            return Ok(i);
        }
    }
    Err(Error::DegenerateInput(
        "point lies outside the triangulation domain".into(),
    ))
}

/// Brute-force Delaunay check: no point strictly inside any triangle's
/// circumcircle, to the scaled tolerance. Used by tests and validation.
pub fn is_delaunay(points: &[Vec2], triangles: &[[usize; 3]]) -> bool {
    let mut extent: f64 = 1e-12;
    for p in points {
        for q in points {
            extent = extent.max((p.x - q.x).abs()).max((p.y - q.y).abs());
        }
    }
    let eps = REL_EPS * extent.powi(4);
    for t in triangles {
        let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
        for (i, p) in points.iter().enumerate() {
            if t.contains(&i) {
                continue;
            }
            if incircle(a, b, c, *p) > eps {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_points_one_triangle() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        let tris = triangulate(&pts).unwrap();
        assert_eq!(tris.len(), 1);
        let t = tris[0];
        assert!(orient(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0);
    }

    #[test]
    fn unit_square_two_triangles_cocircular() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let tris = triangulate(&pts).unwrap();
        assert_eq!(tris.len(), 2);
        assert!(is_delaunay(&pts, &tris));
    }

    #[test]
    fn collinear_points_rejected() {
        let pts: Vec<Vec2> = (0..5).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(
            triangulate(&pts),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn duplicate_point_rejected() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 0.0),
        ];
        assert!(matches!(triangulate(&pts), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn random_points_satisfy_empty_circumcircle_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts: Vec<Vec2> = (0..1000)
            .map(|_| Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
            .collect();
        let tris = triangulate(&pts).unwrap();
        assert!(is_delaunay(&pts, &tris), "brute-force Delaunay check failed");

        // convex-hull Euler sanity: T = 2n - 2 - h for n points with h on
        // the hull; at minimum the count lands in (n, 2n)
        assert!(tris.len() > pts.len());
        assert!(tris.len() < 2 * pts.len());

        // all CCW
        for t in &tris {
            assert!(orient(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0);
        }
    }

    #[test]
    fn grid_points_with_cocircular_quads() {
        // every unit cell of a grid is cocircular; insertion order decides
        // each diagonal and the result must still be Delaunay to tolerance
        let mut pts = Vec::new();
        for j in 0..8 {
            for i in 0..8 {
                pts.push(Vec2::new(i as f64, j as f64));
            }
        }
        let tris = triangulate(&pts).unwrap();
        assert_eq!(tris.len(), 2 * 7 * 7);
        assert!(is_delaunay(&pts, &tris));
        // determinism
        let again = triangulate(&pts).unwrap();
        assert_eq!(tris, again);
    }
}
