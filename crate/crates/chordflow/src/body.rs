//! The discretized convex body: support-function samples on a sphere grid
//! plus lazily computed geometric caches (gradient, curvature matrix, Gauss
//! curvature, boundary points) and the support/radial/Wulff conversions.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::grid::{DirectionGrid, SphereGrid};
use crate::util::{fmt17, par_map};

/// Default strict-convexity threshold on the minimum eigenvalue of the
/// curvature matrix b = hess(h) + h*I.
pub const DEFAULT_EPS_CONVEX: f64 = 1e-8;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Radial function of a star-shaped body: positive samples on a direction grid.
pub struct RadialFunction {
    pub dirs: DirectionGrid,
    pub samples: Vec<f64>,
}

impl RadialFunction {
    pub fn new(dirs: DirectionGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != dirs.len() {
            return Err(Error::ShapeMismatch {
                expected: dirs.len(),
                got: samples.len(),
            });
        }
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NotPositive { min });
        }
        Ok(RadialFunction { dirs, samples })
    }
}

/// A convex body given by support-function samples h > 0 on a sphere grid.
///
/// A body snapshot is immutable; derived quantities are computed lazily and
/// sealed on first access, so evaluation is safe from multiple threads.
/// Mutation means constructing a new snapshot.
pub struct ConvexBody {
    grid: Arc<SphereGrid>,
    h: Vec<f64>,
    grad: OnceLock<Vec<[f64; 2]>>,
    hess: OnceLock<Vec<[[f64; 2]; 2]>>,
    det_b: OnceLock<Vec<f64>>,
    min_eig_b: OnceLock<Vec<f64>>,
    boundary: OnceLock<Vec<[f64; 3]>>,
}

impl Clone for ConvexBody {
    fn clone(&self) -> Self {
        // caches are not cloned; they reseal lazily
        ConvexBody::new(self.grid.clone(), self.h.clone()).expect("clone of valid body")
    }
}

impl ConvexBody {
    /// Build a body from support samples. Requires h > 0 at every node
    /// (origin in the interior); strict convexity is checked separately via
    /// [`ConvexBody::min_convexity`].
    pub fn new(grid: Arc<SphereGrid>, h: Vec<f64>) -> Result<Self> {
        if h.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: h.len(),
            });
        }
        let min = h.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(Error::NotPositive { min });
        }
        Ok(ConvexBody {
            grid,
            h,
            grad: OnceLock::new(),
            hess: OnceLock::new(),
            det_b: OnceLock::new(),
            min_eig_b: OnceLock::new(),
            boundary: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn gradient(&self) -> &[[f64; 2]] {
        self.grad
            .get_or_init(|| self.grid.gradient(&self.h).expect("length checked"))
    }

    pub fn hessian(&self) -> &[[[f64; 2]; 2]] {
        self.hess
            .get_or_init(|| self.grid.hessian(&self.h).expect("length checked"))
    }

    /// det of the curvature matrix b = hess(h) + h*I per node
    /// (for n = 2 this is the scalar h'' + h).
    pub fn det_b(&self) -> &[f64] {
        self.det_b.get_or_init(|| {
            let hess = self.hessian();
            match self.grid.tdim() {
                1 => par_map(self.h.len(), |i| hess[i][0][0] + self.h[i]),
                _ => par_map(self.h.len(), |i| {
                    let b11 = hess[i][0][0] + self.h[i];
                    let b22 = hess[i][1][1] + self.h[i];
                    let b12 = hess[i][0][1];
                    b11 * b22 - b12 * b12
                }),
            }
        })
    }

    /// Minimum eigenvalue of b per node.
    pub fn min_eig_b(&self) -> &[f64] {
        self.min_eig_b.get_or_init(|| {
            let hess = self.hessian();
            match self.grid.tdim() {
                1 => par_map(self.h.len(), |i| hess[i][0][0] + self.h[i]),
                _ => par_map(self.h.len(), |i| {
                    let b11 = hess[i][0][0] + self.h[i];
                    let b22 = hess[i][1][1] + self.h[i];
                    let b12 = hess[i][0][1];
                    let mean = 0.5 * (b11 + b22);
                    let d = 0.5 * (b11 - b22);
                    mean - (d * d + b12 * b12).sqrt()
                }),
            }
        })
    }

    /// Smallest eigenvalue of b over all nodes.
    pub fn min_convexity(&self) -> f64 {
        self.min_eig_b()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn assert_strictly_convex(&self, eps: f64) -> Result<()> {
        let min_eig = self.min_convexity();
        if min_eig < eps {
            return Err(Error::ConvexityLoss { min_eig, eps });
        }
        Ok(())
    }

    /// Boundary point X(x_i) = grad h + h x_i; the outward normal there is x_i.
    pub fn boundary_point(&self, i: usize) -> [f64; 3] {
        self.boundary_points()[i]
    }

    pub fn boundary_points(&self) -> &[[f64; 3]] {
        self.boundary.get_or_init(|| {
            let grad = self.gradient();
            par_map(self.h.len(), |i| {
                let frame = self.grid.frame(i);
                let x = self.grid.node(i);
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = grad[i][0] * frame[0][k] + grad[i][1] * frame[1][k] + self.h[i] * x[k];
                }
                p
            })
        })
    }

    /// Gauss curvature K = 1 / det b at node i.
    pub fn gauss_curvature(&self, i: usize) -> Result<f64> {
        let d = self.det_b()[i];
        if d <= DEFAULT_EPS_CONVEX {
            return Err(Error::ConvexityLoss {
                min_eig: d,
                eps: DEFAULT_EPS_CONVEX,
            });
        }
        Ok(1.0 / d)
    }

    /// Radial function of the Wulff shape [h] in direction u:
    /// min over nodes x with x.u > 0 of h(x)/(x.u).
    pub fn radial_from_support(&self, u: [f64; 3]) -> Result<f64> {
        radial_min(self.grid.nodes(), &self.h, [0.0; 3], u)
    }

    /// Radial samples about `z` for every direction of `dirs`, in direction
    /// order. Uses the monotone edge sweep for n = 2 and the direct min
    /// formula otherwise; values are clamped at 0.
    pub fn radial_about_all(&self, z: [f64; 3], dirs: &DirectionGrid) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let c: Vec<f64> = nodes
            .iter()
            .zip(&self.h)
            .map(|(x, &h)| (h - dot(z, *x)).max(0.0))
            .collect();
        if self.grid.dim() == 2 {
            radial_sweep(nodes, &c, dirs.nodes())
        } else {
            par_map(dirs.len(), |k| {
                radial_min_clamped(nodes, &c, dirs.nodes()[k])
            })
        }
    }

    /// Radial function of the body (about the origin) on a direction grid.
    pub fn radial_samples(&self, dirs: DirectionGrid) -> Result<RadialFunction> {
        let samples = self.radial_about_all([0.0; 3], &dirs);
        RadialFunction::new(dirs, samples)
    }

    /// Support samples of [h] on the body grid: the convexification of h.
    /// Exact half-plane intersection for n = 2; discrete double transform
    /// (radial then support envelope) for n = 3.
    pub fn wulff_project(&self) -> Result<ConvexBody> {
        let h_new = match self.grid.dim() {
            2 => wulff_support_2d(self.grid.nodes(), &self.h)?,
            _ => {
                let dirs = DirectionGrid::from_grid(&self.grid);
                let rho = self.radial_about_all([0.0; 3], &dirs);
                support_from_radial_samples(&dirs, &rho, &self.grid)
            }
        };
        ConvexBody::new(self.grid.clone(), h_new)
    }

    /// V = (1/n) int h det(b) dx.
    pub fn volume(&self) -> f64 {
        let det = self.det_b();
        let field: Vec<f64> = self.h.iter().zip(det).map(|(h, d)| h * d).collect();
        self.grid.integrate(&field).expect("length checked") / self.grid.dim() as f64
    }

    /// S = int det(b) dx.
    pub fn surface_area(&self) -> f64 {
        self.grid.integrate(self.det_b()).expect("length checked")
    }

    /// CSV serialization: node_index, node coordinates, h, rho, K.
    /// All numbers at 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let dim = self.grid.dim();
        if dim == 2 {
            writeln!(w, "node_index,x0,x1,h,rho,K")?;
        } else {
            writeln!(w, "node_index,x0,x1,x2,h,rho,K")?;
        }
        for i in 0..self.h.len() {
            let x = self.grid.node(i);
            let rho = self.radial_from_support(x)?;
            let k = self.gauss_curvature(i)?;
            let coords: Vec<String> = (0..dim).map(|d| fmt17(x[d])).collect();
            writeln!(
                w,
                "{},{},{},{},{}",
                i,
                coords.join(","),
                fmt17(self.h[i]),
                fmt17(rho),
                fmt17(k)
            )?;
        }
        Ok(())
    }
}

/// h(x) = max over directions u of rho(u) (u.x); the support function of the
/// star body with the given radial samples.
pub fn support_from_radial(radial: &RadialFunction, grid: &SphereGrid) -> Vec<f64> {
    support_from_radial_samples(&radial.dirs, &radial.samples, grid)
}

fn support_from_radial_samples(
    dirs: &DirectionGrid,
    rho: &[f64],
    grid: &SphereGrid,
) -> Vec<f64> {
    par_map(grid.len(), |i| {
        let x = grid.node(i);
        dirs.nodes()
            .iter()
            .zip(rho)
            .map(|(u, r)| r * dot(*u, x))
            .fold(f64::NEG_INFINITY, f64::max)
    })
}

/// Direct min formula for the radial function about z, without clamping
/// negative numerators (z must be inside; callers check).
fn radial_min(nodes: &[[f64; 3]], h: &[f64], z: [f64; 3], u: [f64; 3]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for (x, &hv) in nodes.iter().zip(h) {
        let d = dot(*x, u);
        if d > 1e-12 {
            let v = (hv - dot(z, *x)) / d;
            if v < best {
                best = v;
            }
        }
    }
    if best.is_infinite() {
        return Err(Error::DegenerateGrid);
    }
    Ok(best.max(0.0))
}

fn radial_min_clamped(nodes: &[[f64; 3]], c: &[f64], u: [f64; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for (x, &cv) in nodes.iter().zip(c) {
        let d = dot(*x, u);
        if d > 1e-12 {
            let v = cv / d;
            if v < best {
                best = v;
            }
        }
    }
    best.max(0.0)
}

/// O(N + M) radial evaluation for n = 2: as the query direction rotates, the
/// active polygon edge index is nondecreasing, so a single forward sweep over
/// the (angle-sorted) constraint set covers all directions.
///
/// `c[j] = max(h_j - z.x_j, 0)` are the constraint slacks at the basepoint.
fn radial_sweep(nodes: &[[f64; 3]], c: &[f64], dirs: &[[f64; 3]]) -> Vec<f64> {
    let n = nodes.len();
    let value = |j: usize, u: [f64; 3]| -> f64 {
        let d = nodes[j][0] * u[0] + nodes[j][1] * u[1];
        if d > 1e-12 {
            c[j] / d
        } else {
            f64::INFINITY
        }
    };
    let mut out = Vec::with_capacity(dirs.len());
    // brute-force start for the first direction
    let mut j = 0;
    let mut best = f64::INFINITY;
    for (k, _) in nodes.iter().enumerate() {
        let v = value(k, dirs[0]);
        if v < best {
            best = v;
            j = k;
        }
    }
    out.push(if best.is_finite() { best.max(0.0) } else { 0.0 });
    for &u in &dirs[1..] {
        let mut advanced = 0;
        loop {
            let jn = (j + 1) % n;
            if value(jn, u) <= value(j, u) {
                j = jn;
                advanced += 1;
                if advanced > 2 * n {
                    // degenerate data; fall back to the direct min
                    break;
                }
            } else {
                break;
            }
        }
        let v = if advanced > 2 * n {
            radial_min_clamped(nodes, c, u)
        } else {
            value(j, u)
        };
        out.push(if v.is_finite() { v.max(0.0) } else { 0.0 });
    }
    out
}

/// Support samples of the half-plane intersection of {y.x_j <= h_j} at the
/// same normals, via the sorted-normals deque algorithm. Exact (to rounding)
/// for strictly convex inputs, where every constraint stays active.
fn wulff_support_2d(nodes: &[[f64; 3]], h: &[f64]) -> Result<Vec<f64>> {
    let n = nodes.len();
    let scale = h.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-12 * scale.max(1.0);
    let vertex = |a: usize, b: usize| -> Option<[f64; 2]> {
        let (xa, xb) = (nodes[a], nodes[b]);
        let det = xa[0] * xb[1] - xa[1] * xb[0];
        if det.abs() < 1e-14 {
            return None;
        }
        Some([
            (h[a] * xb[1] - h[b] * xa[1]) / det,
            (h[b] * xa[0] - h[a] * xb[0]) / det,
        ])
    };
    let violates = |v: [f64; 2], j: usize| v[0] * nodes[j][0] + v[1] * nodes[j][1] > h[j] + tol;

    let mut dq: Vec<usize> = Vec::with_capacity(n);
    for j in 0..n {
        while dq.len() >= 2 {
            match vertex(dq[dq.len() - 2], dq[dq.len() - 1]) {
                Some(v) if violates(v, j) => {
                    dq.pop();
                }
                None => {
                    dq.pop();
                }
                _ => break,
            }
        }
        dq.push(j);
    }
    // wrap-around cleanup
    loop {
        let mut changed = false;
        while dq.len() >= 3 {
            match vertex(dq[dq.len() - 2], dq[dq.len() - 1]) {
                Some(v) if violates(v, dq[0]) => {
                    dq.pop();
                    changed = true;
                }
                _ => break,
            }
        }
        while dq.len() >= 3 {
            match vertex(dq[0], dq[1]) {
                Some(v) if violates(v, dq[dq.len() - 1]) => {
                    dq.remove(0);
                    changed = true;
                }
                _ => break,
            }
        }
        if !changed {
            break;
        }
    }
    if dq.len() < 3 {
        return Err(Error::NotPositive { min: 0.0 });
    }
    let m = dq.len();
    let verts: Vec<[f64; 2]> = (0..m)
        .filter_map(|k| vertex(dq[k], dq[(k + 1) % m]))
        .collect();
    let h_new: Vec<f64> = (0..n)
        .map(|i| {
            verts
                .iter()
                .map(|v| v[0] * nodes[i][0] + v[1] * nodes[i][1])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let min = h_new.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NotPositive { min });
    }
    Ok(h_new)
}
