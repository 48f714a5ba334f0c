//! Discretizations of the unit sphere S^{n-1} (n = 2 or 3) with quadrature
//! weights and covariant derivative operators in an orthonormal tangent frame.
//!
//! n = 2 uses a uniform angular grid with trigonometric (FFT) differentiation;
//! n = 3 uses a latitude-longitude grid of band centers with 4th-order centered
//! differences and a mirror-across-pole ghost rule.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::util::{kahan_dot, par_map};

/// Surface area of S^{n-1}: 2*pi for n = 2, 4*pi for n = 3.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dim is validated at grid construction"),
    }
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(dim: usize) -> f64 {
    match dim {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!("dim is validated at grid construction"),
    }
}

enum DiffOps {
    Circle {
        fwd: Arc<dyn Fft<f64>>,
        inv: Arc<dyn Fft<f64>>,
    },
    LatLong {
        n_lat: usize,
        n_lon: usize,
    },
}

/// Quadrature nodes, weights and derivative stencils on S^{n-1}.
///
/// Immutable after construction; all operations are pure and thread-safe.
pub struct SphereGrid {
    dim: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    ops: DiffOps,
}

fn build_nodes(dim: usize, resolution: usize) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    match dim {
        2 => {
            if resolution < 4 {
                return Err(Error::InvalidResolution {
                    dim,
                    got: resolution,
                    min: 4,
                });
            }
            let n = resolution;
            let w = 2.0 * PI / n as f64;
            let nodes = (0..n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    [t.cos(), t.sin(), 0.0]
                })
                .collect();
            Ok((nodes, vec![w; n]))
        }
        3 => {
            if resolution < 8 || resolution % 2 != 0 {
                return Err(Error::InvalidResolution {
                    dim,
                    got: resolution,
                    min: 8,
                });
            }
            let n_lon = resolution;
            let n_lat = resolution / 2;
            let dphi = PI / n_lat as f64;
            let dlam = 2.0 * PI / n_lon as f64;
            let mut nodes = Vec::with_capacity(n_lat * n_lon);
            let mut weights = Vec::with_capacity(n_lat * n_lon);
            for j in 0..n_lat {
                let phi = (j as f64 + 0.5) * dphi;
                // exact band area split evenly over longitudes, so the
                // weights sum to 4*pi to rounding
                let w = dlam * ((j as f64 * dphi).cos() - ((j + 1) as f64 * dphi).cos());
                for i in 0..n_lon {
                    let lam = i as f64 * dlam;
                    nodes.push([phi.sin() * lam.cos(), phi.sin() * lam.sin(), phi.cos()]);
                    weights.push(w);
                }
            }
            Ok((nodes, weights))
        }
        _ => Err(Error::InvalidResolution {
            dim,
            got: resolution,
            min: 2,
        }),
    }
}

/// Build a sphere grid; `resolution` is the node count for n = 2 and the
/// longitude count (even, with resolution/2 latitude bands) for n = 3.
pub fn make_grid(dim: usize, resolution: usize) -> Result<SphereGrid> {
    let (nodes, weights) = build_nodes(dim, resolution)?;
    let ops = match dim {
        2 => {
            let mut planner = FftPlanner::new();
            DiffOps::Circle {
                fwd: planner.plan_fft_forward(resolution),
                inv: planner.plan_fft_inverse(resolution),
            }
        }
        _ => DiffOps::LatLong {
            n_lat: resolution / 2,
            n_lon: resolution,
        },
    };
    Ok(SphereGrid {
        dim,
        nodes,
        weights,
        ops,
    })
}

impl SphereGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Tangent-space dimension n - 1.
    pub fn tdim(&self) -> usize {
        self.dim - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> [f64; 3] {
        self.nodes[i]
    }

    /// Orthonormal tangent frame at node i; the second vector is unused for n = 2.
    pub fn frame(&self, i: usize) -> [[f64; 3]; 2] {
        match &self.ops {
            DiffOps::Circle { .. } => {
                let [c, s, _] = self.nodes[i];
                [[-s, c, 0.0], [0.0, 0.0, 0.0]]
            }
            DiffOps::LatLong { n_lat, n_lon } => {
                let (j, k) = (i / n_lon, i % n_lon);
                let phi = (j as f64 + 0.5) * PI / *n_lat as f64;
                let lam = k as f64 * 2.0 * PI / *n_lon as f64;
                let e_phi = [
                    phi.cos() * lam.cos(),
                    phi.cos() * lam.sin(),
                    -phi.sin(),
                ];
                let e_lam = [-lam.sin(), lam.cos(), 0.0];
                [e_phi, e_lam]
            }
        }
    }

    fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(())
    }

    /// Quadrature of a scalar field: sum of w_i s_i with compensated summation
    /// in fixed node order. Deterministic: identical inputs give bit-identical
    /// output.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples)?;
        Ok(kahan_dot(&self.weights, samples))
    }

    /// Spectral derivative of given order for the circle grid.
    fn circle_derivative(&self, samples: &[f64], order: u32) -> Vec<f64> {
        let (fwd, inv) = match &self.ops {
            DiffOps::Circle { fwd, inv } => (fwd, inv),
            _ => unreachable!(),
        };
        let n = self.len();
        let mut buf: Vec<Complex<f64>> =
            samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fwd.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            // signed wavenumber
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            let mult = match order {
                1 => {
                    // Nyquist mode of the first derivative has no consistent
                    // real representative; drop it.
                    if n % 2 == 0 && k == n / 2 {
                        Complex::new(0.0, 0.0)
                    } else {
                        Complex::new(0.0, kk)
                    }
                }
                2 => Complex::new(-kk * kk, 0.0),
                _ => unreachable!(),
            };
            *c *= mult;
        }
        inv.process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    /// First covariant derivative of `samples` in the orthonormal frame.
    /// Component 1 is zero for n = 2.
    pub fn gradient(&self, samples: &[f64]) -> Result<Vec<[f64; 2]>> {
        self.check_len(samples)?;
        match &self.ops {
            DiffOps::Circle { .. } => {
                let d1 = self.circle_derivative(samples, 1);
                Ok(d1.into_iter().map(|v| [v, 0.0]).collect())
            }
            DiffOps::LatLong { n_lat, n_lon } => {
                let (n_lat, n_lon) = (*n_lat, *n_lon);
                let f_phi = latlong_dphi(samples, n_lat, n_lon);
                let f_lam = latlong_dlam(samples, n_lat, n_lon);
                Ok(par_map(self.len(), |i| {
                    let j = i / n_lon;
                    let phi = (j as f64 + 0.5) * PI / n_lat as f64;
                    [f_phi[i], f_lam[i] / phi.sin()]
                }))
            }
        }
    }

    /// Spherical Hessian of `samples` in the orthonormal frame. For n = 2 only
    /// the [0][0] entry (the scalar h'') is nonzero.
    pub fn hessian(&self, samples: &[f64]) -> Result<Vec<[[f64; 2]; 2]>> {
        self.check_len(samples)?;
        match &self.ops {
            DiffOps::Circle { .. } => {
                let d2 = self.circle_derivative(samples, 2);
                Ok(d2
                    .into_iter()
                    .map(|v| [[v, 0.0], [0.0, 0.0]])
                    .collect())
            }
            DiffOps::LatLong { n_lat, n_lon } => {
                let (n_lat, n_lon) = (*n_lat, *n_lon);
                let f_phi = latlong_dphi(samples, n_lat, n_lon);
                let f_lam = latlong_dlam(samples, n_lat, n_lon);
                let f_phiphi = latlong_dphi2(samples, n_lat, n_lon);
                let f_lamlam = latlong_dlam(&f_lam, n_lat, n_lon);
                let f_philam = latlong_dphi(&f_lam, n_lat, n_lon);
                Ok(par_map(self.len(), |i| {
                    let j = i / n_lon;
                    let phi = (j as f64 + 0.5) * PI / n_lat as f64;
                    let (sin_p, cos_p) = (phi.sin(), phi.cos());
                    let h11 = f_phiphi[i];
                    let h12 = f_philam[i] / sin_p - cos_p / (sin_p * sin_p) * f_lam[i];
                    let h22 = f_lamlam[i] / (sin_p * sin_p) + cos_p / sin_p * f_phi[i];
                    [[h11, h12], [h12, h22]]
                }))
            }
        }
    }
}

/// Fetch a sample with the mirror-across-pole ghost rule: the field at
/// colatitude -phi, longitude lam equals the field at phi, lam + pi.
fn ll_get(f: &[f64], n_lat: usize, n_lon: usize, j: isize, i: usize) -> f64 {
    let half = n_lon / 2;
    let (jj, ii) = if j < 0 {
        ((-1 - j) as usize, (i + half) % n_lon)
    } else if j as usize >= n_lat {
        (2 * n_lat - 1 - j as usize, (i + half) % n_lon)
    } else {
        (j as usize, i)
    };
    f[jj * n_lon + ii]
}

fn latlong_dphi(f: &[f64], n_lat: usize, n_lon: usize) -> Vec<f64> {
    let d = PI / n_lat as f64;
    par_map(n_lat * n_lon, |idx| {
        let (j, i) = ((idx / n_lon) as isize, idx % n_lon);
        let g = |o: isize| ll_get(f, n_lat, n_lon, j + o, i);
        (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * d)
    })
}

fn latlong_dphi2(f: &[f64], n_lat: usize, n_lon: usize) -> Vec<f64> {
    let d = PI / n_lat as f64;
    par_map(n_lat * n_lon, |idx| {
        let (j, i) = ((idx / n_lon) as isize, idx % n_lon);
        let g = |o: isize| ll_get(f, n_lat, n_lon, j + o, i);
        (-g(2) + 16.0 * g(1) - 30.0 * g(0) + 16.0 * g(-1) - g(-2)) / (12.0 * d * d)
    })
}

fn latlong_dlam(f: &[f64], n_lat: usize, n_lon: usize) -> Vec<f64> {
    let d = 2.0 * PI / n_lon as f64;
    par_map(n_lat * n_lon, |idx| {
        let (j, i) = (idx / n_lon, idx % n_lon);
        let g = |o: isize| {
            let ii = (i as isize + o).rem_euclid(n_lon as isize) as usize;
            f[j * n_lon + ii]
        };
        (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * d)
    })
}

/// A (possibly coarser) set of unit directions with weights, used for
/// radial-function quadrature and the dual quermassintegral integrals.
///
/// For n = 2 the directions are in ascending angular order, which the
/// monotone radial sweep relies on.
pub struct DirectionGrid {
    dim: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl DirectionGrid {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        let (nodes, weights) = build_nodes(dim, resolution)?;
        Ok(DirectionGrid {
            dim,
            nodes,
            weights,
        })
    }

    /// Direction grid matching a body grid's nodes.
    pub fn from_grid(grid: &SphereGrid) -> Self {
        DirectionGrid {
            dim: grid.dim(),
            nodes: grid.nodes().to_vec(),
            weights: grid.weights().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle_field<F: Fn(f64) -> f64>(n: usize, f: F) -> Vec<f64> {
        (0..n).map(|i| f(2.0 * PI * i as f64 / n as f64)).collect()
    }

    #[test]
    fn four_node_circle() {
        let g = make_grid(2, 4).unwrap();
        assert_eq!(g.len(), 4);
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (i, e) in expect.iter().enumerate() {
            assert!((g.node(i)[0] - e[0]).abs() < 1e-15);
            assert!((g.node(i)[1] - e[1]).abs() < 1e-15);
            assert!((g.weights()[i] - PI / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_low_resolution() {
        assert!(matches!(
            make_grid(2, 3),
            Err(Error::InvalidResolution { .. })
        ));
        assert!(matches!(
            make_grid(3, 6),
            Err(Error::InvalidResolution { .. })
        ));
    }

    #[test]
    fn circle_weights_sum() {
        let g = make_grid(2, 256).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_weights_sum() {
        let g = make_grid(3, 32).unwrap();
        let total = g.integrate(&vec![1.0; g.len()]).unwrap();
        assert!((total - 4.0 * PI).abs() < 1e-10);
        for (node, w) in g.nodes().iter().zip(g.weights()) {
            let norm = (node[0] * node[0] + node[1] * node[1] + node[2] * node[2]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            assert!(*w > 0.0);
        }
    }

    #[test]
    fn integrate_examples() {
        let g = make_grid(2, 256).unwrap();
        let one = vec![1.0; g.len()];
        assert!((g.integrate(&one).unwrap() - 2.0 * PI).abs() < 1e-12);
        let cos = circle_field(256, |t| t.cos());
        assert!(g.integrate(&cos).unwrap().abs() < 1e-12);
        let cos2 = circle_field(256, |t| t.cos() * t.cos());
        assert!((g.integrate(&cos2).unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn integrate_shape_mismatch() {
        let g = make_grid(2, 16).unwrap();
        assert!(matches!(
            g.integrate(&[1.0; 5]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn integrate_deterministic() {
        let g = make_grid(2, 128).unwrap();
        let field = circle_field(128, |t| (3.0 * t).sin() + 0.3 * (5.0 * t).cos());
        let a = g.integrate(&field).unwrap();
        let b = g.integrate(&field).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn quadrature_exactness_harmonics() {
        let g = make_grid(2, 64).unwrap();
        for k in 1..=10usize {
            let f = circle_field(64, |t| (k as f64 * t).cos());
            assert!(g.integrate(&f).unwrap().abs() < 1e-8, "harmonic {k}");
        }
    }

    #[test]
    fn derivatives_annihilate_constants() {
        for (dim, res) in [(2usize, 64usize), (3, 16)] {
            let g = make_grid(dim, res).unwrap();
            let c = vec![3.7; g.len()];
            for gr in g.gradient(&c).unwrap() {
                assert!(gr[0].abs() < 1e-11 && gr[1].abs() < 1e-11);
            }
            for h in g.hessian(&c).unwrap() {
                for row in h {
                    for v in row {
                        assert!(v.abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn spectral_second_derivative_cos() {
        let n = 256;
        let g = make_grid(2, n).unwrap();
        let f = circle_field(n, |t| t.cos());
        let h = g.hessian(&f).unwrap();
        let mut max_err = 0.0f64;
        for (i, hi) in h.iter().enumerate() {
            let t = 2.0 * PI * i as f64 / n as f64;
            max_err = max_err.max((hi[0][0] + t.cos()).abs());
        }
        assert!(max_err <= 1e-8, "max err {max_err}");
    }

    #[test]
    fn ellipse_support_curvature_identity() {
        // h(t) = sqrt(4cos^2 + sin^2): h'' + h = 4/h^3 for the a=2, b=1 ellipse
        let n = 512;
        let g = make_grid(2, n).unwrap();
        let f = circle_field(n, |t| (4.0 * t.cos().powi(2) + t.sin().powi(2)).sqrt());
        let h2 = g.hessian(&f).unwrap();
        for (i, hi) in h2.iter().enumerate() {
            let hv = f[i];
            assert!(
                (hi[0][0] + hv - 4.0 / hv.powi(3)).abs() < 1e-6,
                "node {i}"
            );
        }
    }

    #[test]
    fn random_trig_polynomials_match_analytic() {
        let n = 256;
        let g = make_grid(2, n).unwrap();
        // deterministic pseudo-random coefficients
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..5 {
            let coeffs: Vec<(f64, f64, f64)> =
                (1..=8).map(|k| (k as f64, next(), next())).collect();
            let f = circle_field(n, |t| {
                coeffs
                    .iter()
                    .map(|(k, a, b)| a * (k * t).cos() + b * (k * t).sin())
                    .sum()
            });
            let grad = g.gradient(&f).unwrap();
            let hess = g.hessian(&f).unwrap();
            for i in 0..n {
                let t = 2.0 * PI * i as f64 / n as f64;
                let d1: f64 = coeffs
                    .iter()
                    .map(|(k, a, b)| k * (-a * (k * t).sin() + b * (k * t).cos()))
                    .sum();
                let d2: f64 = coeffs
                    .iter()
                    .map(|(k, a, b)| -k * k * (a * (k * t).cos() + b * (k * t).sin()))
                    .sum();
                assert!((grad[i][0] - d1).abs() < 1e-6);
                assert!((hess[i][0][0] - d2).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn latlong_derivatives_of_linear_field() {
        // f = z = cos(colat) is the support-linear term; b = hess + f*I = 0
        let g = make_grid(3, 48).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x[2]).collect();
        let hess = g.hessian(&f).unwrap();
        for (i, h) in hess.iter().enumerate() {
            let b11 = h[0][0] + f[i];
            let b22 = h[1][1] + f[i];
            assert!(b11.abs() < 5e-4, "node {i}: {b11}");
            assert!(b22.abs() < 5e-4, "node {i}: {b22}");
            assert!(h[0][1].abs() < 5e-4);
        }
    }
}
