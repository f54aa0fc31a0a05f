//! First-order FEM operators on the 2D texel mesh: per-triangle hat-function
//! gradients, field gradient, divergence, and the assembled Laplacian behind
//! the color Poisson solve.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::linalg::{cg_solve, SparseSystem, SystemBuilder};

use super::TexelMesh;

/// Rotate by +90 degrees: the `perp` of the shared gradient formula.
#[inline]
fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Per-triangle geometry of the linear basis: for CCW triangle (i, j, k),
/// grad B_i = perp(v_k - v_j) / (2 |T|), and cyclically.
#[derive(Debug, Clone)]
pub struct Operators {
    /// Hat-function gradients per triangle corner.
    pub basis_grad: Vec<[Vec2; 3]>,
    /// Triangle areas |T|.
    pub area: Vec<f64>,
}

impl Operators {
    pub fn build(tm: &TexelMesh) -> Result<Self> {
        let mut basis_grad = Vec::with_capacity(tm.triangles.len());
        let mut area = Vec::with_capacity(tm.triangles.len());
        for (ti, t) in tm.triangles.iter().enumerate() {
            let (a, b, c) = (
                tm.positions[t[0]],
                tm.positions[t[1]],
                tm.positions[t[2]],
            );
            let area2 = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            if area2 <= 2.0 * 1e-14 {
                return Err(Error::Validation(format!(
                    "texel-mesh triangle {ti} is degenerate or flipped (2A = {area2:.3e})"
                )));
            }
            let t_area = area2 * 0.5;
            basis_grad.push([
                perp(c - b) / area2,
                perp(a - c) / area2,
                perp(b - a) / area2,
            ]);
            area.push(t_area);
        }
        Ok(Operators { basis_grad, area })
    }

    /// Gradient of a per-vertex scalar field, constant per triangle.
    pub fn field_gradient(&self, tm: &TexelMesh, values: &[f64]) -> Vec<Vec2> {
        tm.triangles
            .iter()
            .enumerate()
            .map(|(ti, t)| {
                let g = &self.basis_grad[ti];
                g[0] * values[t[0]] + g[1] * values[t[1]] + g[2] * values[t[2]]
            })
            .collect()
    }

    /// Divergence of a per-triangle vector field at each vertex:
    /// sum over incident triangles of grad B_i . w |T|.
    pub fn divergence(&self, tm: &TexelMesh, w: &[Vec2]) -> Vec<f64> {
        let mut div = vec![0.0; tm.positions.len()];
        for (ti, t) in tm.triangles.iter().enumerate() {
            for (corner, &v) in t.iter().enumerate() {
                div[v] += self.basis_grad[ti][corner].dot(&w[ti]) * self.area[ti];
            }
        }
        div
    }

    /// Assembles L = Div(Grad(.)): L[a][b] = sum_T |T| grad B_a . grad B_b.
    /// Symmetric, zero row sums, positive semidefinite.
    pub fn laplacian_builder(&self, tm: &TexelMesh, channels: usize) -> SystemBuilder {
        let mut builder = SystemBuilder::new(tm.positions.len(), channels);
        for (ti, t) in tm.triangles.iter().enumerate() {
            let g = &self.basis_grad[ti];
            for a in 0..3 {
                for b in 0..3 {
                    builder.add(t[a], t[b], self.area[ti] * g[a].dot(&g[b]));
                }
            }
        }
        builder
    }

    /// Dense Laplacian for oracle comparisons.
    pub fn laplacian_dense(&self, tm: &TexelMesh) -> Vec<f64> {
        let n = tm.positions.len();
        let mut dense = vec![0.0; n * n];
        for (ti, t) in tm.triangles.iter().enumerate() {
            let g = &self.basis_grad[ti];
            for a in 0..3 {
                for b in 0..3 {
                    dense[t[a] * n + t[b]] += self.area[ti] * g[a].dot(&g[b]);
                }
            }
        }
        dense
    }
}

/// Solves the mesh Poisson equation per channel: the guidance colors supply
/// the gradient field (its divergence is the right-hand side), the boundary
/// colors pin the Dirichlet vertices, and the result clamps to [0,1] at the
/// very end.
///
/// `guidance[v]` and the returned colors hold `channels` values per vertex;
/// `boundary` pairs a vertex index with its prescribed color.
pub fn harmonize(
    tm: &TexelMesh,
    guidance: &[Vec<f64>],
    boundary: &[(usize, Vec<f64>)],
) -> Result<Vec<Vec<f64>>> {
    if boundary.is_empty() {
        return Err(Error::NoBoundary);
    }
    let n = tm.positions.len();
    if guidance.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "guidance for {} vertices, mesh has {n}",
            guidance.len()
        )));
    }
    let channels = guidance.first().map_or(0, Vec::len);
    if channels == 0 {
        return Err(Error::Parameter("guidance has no channels".into()));
    }
    for (v, g) in guidance.iter().enumerate() {
        if g.len() != channels || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("bad guidance at vertex {v}")));
        }
    }

    let ops = Operators::build(tm)?;
    let mut builder = ops.laplacian_builder(tm, channels);

    // right-hand side: divergence of the guidance gradient field, per channel
    for ch in 0..channels {
        let values: Vec<f64> = guidance.iter().map(|g| g[ch]).collect();
        let w = ops.field_gradient(tm, &values);
        let div = ops.divergence(tm, &w);
        for (v, d) in div.into_iter().enumerate() {
            builder.set_rhs(ch, v, d);
        }
    }
    for (v, color) in boundary {
        if color.len() != channels {
            return Err(Error::DimensionMismatch(format!(
                "boundary color at vertex {v} has {} channels, expected {channels}",
                color.len()
            )));
        }
        builder.dirichlet(*v, color);
    }

    let system: SparseSystem = builder.build()?;
    let (solutions, reports) = cg_solve(&system, 1e-10, 20 * n.max(10), false)?;
    if !reports.iter().all(|r| r.converged) {
        return Err(Error::Numeric(format!(
            "color Poisson solve did not converge: residuals {:?}",
            reports.iter().map(|r| r.final_residual).collect::<Vec<_>>()
        )));
    }

    Ok((0..n)
        .map(|v| {
            (0..channels)
                .map(|ch| solutions[ch][v].clamp(0.0, 1.0))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tex_harmon::delaunay;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Texel mesh over a jittered grid in the unit square, colors zeroed.
    pub(crate) fn grid_texel_mesh(n: usize, jitter: f64, seed: u64) -> TexelMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let mut x = i as f64 / (n - 1) as f64;
                let mut y = j as f64 / (n - 1) as f64;
                if i > 0 && i < n - 1 && j > 0 && j < n - 1 && jitter > 0.0 {
                    x += rng.gen_range(-jitter..jitter);
                    y += rng.gen_range(-jitter..jitter);
                }
                positions.push(Vec2::new(x, y));
            }
        }
        let triangles = delaunay::triangulate(&positions).unwrap();
        let boundary: Vec<bool> = (0..n * n)
            .map(|v| {
                let (i, j) = (v % n, v / n);
                i == 0 || j == 0 || i == n - 1 || j == n - 1
            })
            .collect();
        TexelMesh {
            positions,
            triangles,
            colors: vec![vec![0.0]; n * n],
            boundary,
            texel: (0..(n * n) as u32).map(|v| (v % n as u32, v / n as u32)).collect(),
            component: vec![0; n * n],
            skipped_components: 0,
        }
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let tm = grid_texel_mesh(8, 0.02, 1);
        let ops = Operators::build(&tm).unwrap();
        let grad = ops.field_gradient(&tm, &vec![0.7; tm.positions.len()]);
        for g in grad {
            assert!(g.norm() < 1e-12);
        }
    }

    #[test]
    fn linear_field_has_unit_gradient() {
        let tm = grid_texel_mesh(9, 0.02, 2);
        let ops = Operators::build(&tm).unwrap();
        let values: Vec<f64> = tm.positions.iter().map(|p| p.x).collect();
        for g in ops.field_gradient(&tm, &values) {
            assert!((g - Vec2::new(1.0, 0.0)).norm() < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn laplacian_symmetric_zero_rowsum_psd() {
        let tm = grid_texel_mesh(10, 0.03, 3);
        let ops = Operators::build(&tm).unwrap();
        let n = tm.positions.len();
        let dense = ops.laplacian_dense(&tm);
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| dense[i * n + j]).sum();
            assert!(row_sum.abs() < 1e-10, "row {i} sums to {row_sum}");
            for j in 0..n {
                assert!((dense[i * n + j] - dense[j * n + i]).abs() < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut quad = 0.0;
            for i in 0..n {
                for j in 0..n {
                    quad += phi[i] * dense[i * n + j] * phi[j];
                }
            }
            assert!(quad >= -1e-10, "quadratic form {quad}");
        }
    }

    #[test]
    fn laplacian_matches_cotangent_formula() {
        // independent oracle: L_ij = -(cot alpha + cot beta)/2 over the one
        // or two triangles sharing edge ij; diagonal is minus the row sum
        let tm = grid_texel_mesh(9, 0.04, 5);
        let ops = Operators::build(&tm).unwrap();
        let n = tm.positions.len();
        let fem = ops.laplacian_dense(&tm);

        let mut cot = vec![0.0; n * n];
        for t in &tm.triangles {
            for corner in 0..3 {
                let opp = t[corner];
                let a = t[(corner + 1) % 3];
                let b = t[(corner + 2) % 3];
                let u = tm.positions[a] - tm.positions[opp];
                let v = tm.positions[b] - tm.positions[opp];
                let cross = u.x * v.y - u.y * v.x;
                let cotangent = u.dot(&v) / cross.abs();
                cot[a * n + b] += -0.5 * cotangent;
                cot[b * n + a] += -0.5 * cotangent;
                cot[a * n + a] += 0.5 * cotangent;
                cot[b * n + b] += 0.5 * cotangent;
            }
        }
        for i in 0..n * n {
            assert!(
                (fem[i] - cot[i]).abs() < 1e-9,
                "entry {i}: fem {} vs cot {}",
                fem[i],
                cot[i]
            );
        }
    }

    #[test]
    fn harmonize_constant_boundary_constant_guidance() {
        let tm = grid_texel_mesh(8, 0.02, 7);
        let c = 0.42;
        let guidance = vec![vec![0.9]; tm.positions.len()];
        let boundary: Vec<(usize, Vec<f64>)> = (0..tm.positions.len())
            .filter(|&v| tm.boundary[v])
            .map(|v| (v, vec![c]))
            .collect();
        // constant guidance has zero gradients: harmonic solution = c
        let out = harmonize(&tm, &guidance, &boundary).unwrap();
        for v in out {
            assert!((v[0] - c).abs() < 1e-8);
        }
    }

    #[test]
    fn harmonize_identity_reconstruction() {
        let tm = grid_texel_mesh(10, 0.03, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let guidance: Vec<Vec<f64>> = (0..tm.positions.len())
            .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
            .collect();
        let boundary: Vec<(usize, Vec<f64>)> = (0..tm.positions.len())
            .filter(|&v| tm.boundary[v])
            .map(|v| (v, guidance[v].clone()))
            .collect();
        let out = harmonize(&tm, &guidance, &boundary).unwrap();
        for (o, g) in out.iter().zip(&guidance) {
            for ch in 0..3 {
                assert!((o[ch] - g[ch]).abs() <= 1e-6, "{} vs {}", o[ch], g[ch]);
            }
        }
    }

    #[test]
    fn harmonize_shifts_mean_preserves_detail() {
        // fine checkerboard guidance in [0.4, 0.6]; boundary shifted +0.3:
        // interior follows at +0.3 with detail deltas intact
        let n = 20;
        let tm = grid_texel_mesh(n, 0.0, 0);
        let checker = |v: usize| -> f64 {
            let (i, j) = (v % n, v / n);
            if (i + j) % 2 == 0 {
                0.4
            } else {
                0.6
            }
        };
        let guidance: Vec<Vec<f64>> = (0..n * n).map(|v| vec![checker(v)]).collect();
        let boundary: Vec<(usize, Vec<f64>)> = (0..n * n)
            .filter(|&v| tm.boundary[v])
            .map(|v| (v, vec![checker(v) + 0.3]))
            .collect();
        let out = harmonize(&tm, &guidance, &boundary).unwrap();

        let interior: Vec<usize> = (0..n * n).filter(|&v| !tm.boundary[v]).collect();
        let mean_shift: f64 = interior
            .iter()
            .map(|&v| out[v][0] - guidance[v][0])
            .sum::<f64>()
            / interior.len() as f64;
        assert!((mean_shift - 0.3).abs() < 0.01, "mean shift {mean_shift}");

        // horizontal neighbor deltas deep inside the grid
        for &v in &interior {
            let (i, j) = (v % n, v / n);
            if i + 1 < n - 1 && j > 1 && j < n - 2 {
                let d_out = out[v][0] - out[v + 1][0];
                let d_guid = guidance[v][0] - guidance[v + 1][0];
                assert!(
                    (d_out - d_guid).abs() <= 0.05 * d_guid.abs().max(0.05),
                    "delta {d_out} vs {d_guid}"
                );
            }
        }

        // dense oracle agrees with the CG path
        let ops = Operators::build(&tm).unwrap();
        let mut builder = ops.laplacian_builder(&tm, 1);
        let values: Vec<f64> = guidance.iter().map(|g| g[0]).collect();
        let w = ops.field_gradient(&tm, &values);
        let div = ops.divergence(&tm, &w);
        for (v, d) in div.into_iter().enumerate() {
            builder.set_rhs(0, v, d);
        }
        for (v, c) in &boundary {
            builder.dirichlet(*v, c);
        }
        let dense = crate::linalg::dense_solve(&builder.build().unwrap()).unwrap();
        for v in 0..n * n {
            assert!((dense[0][v].clamp(0.0, 1.0) - out[v][0]).abs() < 1e-7);
        }
    }

    #[test]
    fn harmonize_requires_boundary() {
        let tm = grid_texel_mesh(6, 0.0, 0);
        let guidance = vec![vec![0.5]; tm.positions.len()];
        assert!(matches!(
            harmonize(&tm, &guidance, &[]),
            Err(Error::NoBoundary)
        ));
    }

    #[test]
    fn extra_channels_solve_independently() {
        // PBR path: k extra scalar channels equal k single-channel runs
        let tm = grid_texel_mesh(8, 0.02, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let guidance: Vec<Vec<f64>> = (0..tm.positions.len())
            .map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let boundary: Vec<(usize, Vec<f64>)> = (0..tm.positions.len())
            .filter(|&v| tm.boundary[v])
            .map(|v| (v, (0..5).map(|ch| guidance[v][ch] * 0.5).collect()))
            .collect();
        let joint = harmonize(&tm, &guidance, &boundary).unwrap();
        for ch in 0..5 {
            let g1: Vec<Vec<f64>> = guidance.iter().map(|g| vec![g[ch]]).collect();
            let b1: Vec<(usize, Vec<f64>)> = boundary
                .iter()
                .map(|(v, c)| (*v, vec![c[ch]]))
                .collect();
            let single = harmonize(&tm, &g1, &b1).unwrap();
            for v in 0..tm.positions.len() {
                assert!((joint[v][ch] - single[v][0]).abs() < 1e-12);
            }
        }
    }
}
