use crate::grid::{DomainKind, SpatialGrid};

/// Discrete Dirichlet energy `R(s) = sum_e c_e (s_i - s_j)^2 ~ int |grad s|^2`
/// on the lattice edges. Its gradient `2 L s` carries zero-flux boundary rows.
#[derive(Clone, Debug)]
pub struct GradientPenalty {
    edges: Vec<(usize, usize, f64)>,
    n: usize,
}

impl GradientPenalty {
    pub fn new(grid: &SpatialGrid) -> Self {
        let (nx, ny) = grid.lattice_dims();
        let (hx, hy) = grid.spacing_xy();
        let mut edges = Vec::new();
        let square = grid.kind() == DomainKind::UnitSquare;
        for iy in 0..ny {
            for ix in 0..nx {
                let Some(a) = grid.slot(ix, iy) else { continue };
                if ix + 1 < nx {
                    if let Some(b) = grid.slot(ix + 1, iy) {
                        let t = if square && (iy == 0 || iy == ny - 1) { 0.5 } else { 1.0 };
                        edges.push((a, b, hy * t / hx));
                    }
                }
                if iy + 1 < ny {
                    if let Some(b) = grid.slot(ix, iy + 1) {
                        let t = if square && (ix == 0 || ix == nx - 1) { 0.5 } else { 1.0 };
                        edges.push((a, b, hx * t / hy));
                    }
                }
            }
        }
        Self { edges, n: grid.num_nodes() }
    }

    pub fn energy(&self, s: &[f64]) -> f64 {
        self.edges.iter().map(|&(a, b, c)| c * (s[a] - s[b]).powi(2)).sum()
    }

    /// `L s`, half the gradient of [`energy`](Self::energy).
    pub fn laplacian(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(a, b, c) in &self.edges {
            let d = c * (s[a] - s[b]);
            out[a] += d;
            out[b] -= d;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_field_energy_is_exact() {
        let g = SpatialGrid::unit_square(9, 9).unwrap();
        let r = GradientPenalty::new(&g);
        let s = g.sample(|p| 2.0 * p[0] - p[1]);
        assert_abs_diff_eq!(r.energy(&s), 5.0, epsilon = 1e-12);
        let c = vec![0.7; g.num_nodes()];
        assert_eq!(r.energy(&c), 0.0);
        assert!(r.laplacian(&c).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_is_half_gradient() {
        let g = SpatialGrid::unit_disk(9).unwrap();
        let r = GradientPenalty::new(&g);
        let s: Vec<f64> = (0..g.num_nodes()).map(|i| ((i * 37) % 11) as f64 * 0.1).collect();
        let l = r.laplacian(&s);
        let eps = 1e-6;
        for i in [0, 5, 17, 30] {
            let mut p = s.clone();
            let mut m = s.clone();
            p[i] += eps;
            m[i] -= eps;
            let fd = (r.energy(&p) - r.energy(&m)) / (2.0 * eps);
            assert_abs_diff_eq!(fd, 2.0 * l[i], epsilon = 1e-7);
        }
    }
}
