//! Dual quermassintegrals, chord integrals (two independent pipelines), and
//! chord / L_p / L_phi chord measure densities.
//!
//! Pipeline one integrates dual quermassintegrals over the body in polar
//! coordinates; pipeline two integrates chord-length powers over the affine
//! Grassmannian of lines directly (n = 2), with the line measure normalized
//! so that I_1 = V.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{ball_volume, sphere_area, DirectionGrid};
use crate::util::{gauss_legendre, kahan_sum, par_map};

fn dot2(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A measure density g on the body grid: d(measure) = g dx.
pub struct MeasureDensity {
    /// which measure the samples represent, e.g. "F_q(q=2)" or "F_{p,q}(p=2,q=1)"
    pub tag: String,
    pub samples: Vec<f64>,
}

impl MeasureDensity {
    pub fn total_mass(&self, body: &ConvexBody) -> f64 {
        body.grid()
            .integrate(&self.samples)
            .expect("density lives on the body grid")
    }
}

/// Slack of the basepoint inside the Wulff polytope: min over nodes of
/// h_j - z.x_j. Negative means outside.
fn min_slack(body: &ConvexBody, z: [f64; 3]) -> f64 {
    body.grid()
        .nodes()
        .iter()
        .zip(body.h())
        .map(|(x, &h)| h - dot2(z, *x))
        .fold(f64::INFINITY, f64::min)
}

fn check_inside(body: &ConvexBody, z: [f64; 3]) -> Result<f64> {
    let slack = min_slack(body, z);
    if slack < -1e-9 {
        return Err(Error::PointOutsideBody { violation: -slack });
    }
    Ok(slack)
}

/// Radial function of the body about basepoint `z` in direction `u`,
/// clamped at 0. `z` must lie in the closure of the body.
pub fn radial_about(body: &ConvexBody, z: [f64; 3], u: [f64; 3]) -> Result<f64> {
    check_inside(body, z)?;
    let mut best = f64::INFINITY;
    for (x, &h) in body.grid().nodes().iter().zip(body.h()) {
        let d = dot2(*x, u);
        if d > 1e-12 {
            let v = (h - dot2(z, *x)) / d;
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

/// rho^q with the convention 0^0 := 0 (the integrand is supported where
/// rho > 0), and fast paths for small integer exponents.
#[inline]
fn rho_pow(rho: f64, q: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    if q == 1.0 {
        rho
    } else if q == 2.0 {
        rho * rho
    } else if q == 0.0 {
        1.0
    } else {
        rho.powf(q)
    }
}

/// (1/n) sum of w_u rho_u^q from a precomputed radial profile.
pub(crate) fn quermass_from_profile(profile: &[f64], weights: &[f64], q: f64, dim: usize) -> f64 {
    kahan_sum(
        profile
            .iter()
            .zip(weights)
            .map(|(&r, &w)| w * rho_pow(r, q)),
    ) / dim as f64
}

/// q-th dual quermassintegral of the body about basepoint z:
/// (1/n) int rho_{body,z}(u)^q du over the direction grid.
///
/// For a boundary basepoint the integrand vanishes on the closed half-space
/// of outward directions; q = 0 there uses the exact half-sphere value.
pub fn dual_quermass(body: &ConvexBody, dirs: &DirectionGrid, z: [f64; 3], q: f64) -> Result<f64> {
    let slack = check_inside(body, z)?;
    let scale = body.h().iter().cloned().fold(0.0f64, f64::max);
    let on_boundary = slack <= 1e-9 * scale.max(1.0);
    if q < 0.0 && on_boundary {
        return Err(Error::InvalidExponent { q });
    }
    let n = body.grid().dim();
    if q == 0.0 {
        // rho^0 with 0^0 := 0 integrates the indicator of {rho > 0}: the
        // whole sphere for interior basepoints, exactly half for boundary ones
        let area = sphere_area(n);
        return Ok(if on_boundary {
            area / (2.0 * n as f64)
        } else {
            area / n as f64
        });
    }
    let profile = body.radial_about_all(z, dirs);
    Ok(quermass_from_profile(&profile, dirs.weights(), q, n))
}

/// Chord integral I_q via the polar decomposition
/// I_q = (q/omega_n) int_Omega V~_{q-1}(Omega, z) dz,
/// with an outer direction quadrature, Gauss-Legendre in radius, and the
/// dual quermassintegral at each interior basepoint.
///
/// The radial rule starts at `gl_points` and doubles (up to 128) until two
/// successive refinements agree to 0.1 %.
pub fn chord_integral(body: &ConvexBody, dirs: &DirectionGrid, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidExponent { q });
    }
    let mut m = 32;
    let mut prev = chord_integral_fixed(body, dirs, q, m)?;
    while m < 128 {
        m *= 2;
        let next = chord_integral_fixed(body, dirs, q, m)?;
        let close = (next - prev).abs() <= 1e-3 * next.abs();
        prev = next;
        if close {
            break;
        }
    }
    Ok(prev)
}

/// Fixed-rule variant of [`chord_integral`], used by the flow monitor where
/// only drift (not absolute accuracy) matters.
pub fn chord_integral_fixed(
    body: &ConvexBody,
    dirs: &DirectionGrid,
    q: f64,
    gl_points: usize,
) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidExponent { q });
    }
    let n = body.grid().dim();
    let rho = body.radial_about_all([0.0; 3], dirs);
    let (gx, gw) = gauss_legendre(gl_points);
    let per_dir = par_map(dirs.len(), |k| {
        let xi = dirs.nodes()[k];
        let r_out = rho[k];
        let mut inner = 0.0;
        for (t, wt) in gx.iter().zip(&gw) {
            let r = 0.5 * r_out * (t + 1.0);
            let wr = 0.5 * r_out * wt;
            let z = [r * xi[0], r * xi[1], r * xi[2]];
            let profile = body.radial_about_all(z, dirs);
            let v = quermass_from_profile(&profile, dirs.weights(), q - 1.0, n);
            inner += wr * r.powi(n as i32 - 1) * v;
        }
        dirs.weights()[k] * inner
    });
    Ok(q / ball_volume(n) * kahan_sum(per_dir))
}

/// How the line-space pipeline samples the affine Grassmannian.
pub enum LineSampler {
    /// `angles` uniform normal angles on [0, pi), `offsets` Gauss-Legendre
    /// points across the support interval per angle.
    Product { angles: usize, offsets: usize },
    /// Seeded uniform sampling of (angle, offset) over a bounding strip.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for LineSampler {
    fn default() -> Self {
        LineSampler::Product {
            angles: 256,
            offsets: 64,
        }
    }
}

/// Chord integral over lines directly (n = 2): lines are parametrized by
/// normal angle and signed offset, the chord length comes from the two
/// boundary intersections, and the measure is (1/pi) d(angle) d(offset) so
/// that I_1 = V.
pub fn chord_integral_lines(body: &ConvexBody, q: f64, sampler: &LineSampler) -> Result<f64> {
    if body.grid().dim() != 2 {
        return Err(Error::Config(
            "the line-space pipeline is implemented for dim 2".into(),
        ));
    }
    if q < 0.0 {
        return Err(Error::InvalidExponent { q });
    }
    let nodes = body.grid().nodes();
    let h = body.h();
    // chord cut by the line {s*omega + t*omega_perp}
    let chord = |omega: [f64; 2], s: f64| -> f64 {
        let mut t_hi = f64::INFINITY;
        let mut t_lo = f64::NEG_INFINITY;
        for (x, &hv) in nodes.iter().zip(h) {
            let e = -x[0] * omega[1] + x[1] * omega[0]; // x . omega_perp
            let c = hv - s * (x[0] * omega[0] + x[1] * omega[1]);
            if e > 1e-12 {
                t_hi = t_hi.min(c / e);
            } else if e < -1e-12 {
                t_lo = t_lo.max(c / e);
            }
        }
        (t_hi - t_lo).max(0.0)
    };
    // support extent along +-omega from the sampled boundary points
    let extent = |omega: [f64; 2]| -> (f64, f64) {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for p in body.boundary_points() {
            let v = p[0] * omega[0] + p[1] * omega[1];
            hi = hi.max(v);
            lo = lo.min(v);
        }
        (lo, hi)
    };
    match sampler {
        LineSampler::Product { angles, offsets } => {
            let (gx, gw) = gauss_legendre(*offsets);
            let per_angle = par_map(*angles, |j| {
                let alpha = std::f64::consts::PI * j as f64 / *angles as f64;
                let omega = [alpha.cos(), alpha.sin()];
                let (lo, hi) = extent(omega);
                if q == 0.0 {
                    // chord^0 is the indicator of the support interval
                    return hi - lo;
                }
                let mut acc = 0.0;
                for (t, wt) in gx.iter().zip(&gw) {
                    let s = 0.5 * (hi + lo) + 0.5 * (hi - lo) * t;
                    let c = chord(omega, s);
                    acc += 0.5 * (hi - lo) * wt * rho_pow(c, q);
                }
                acc
            });
            Ok(kahan_sum(per_angle) / *angles as f64)
        }
        LineSampler::MonteCarlo { samples, seed } => {
            let r_max = body.h().iter().cloned().fold(0.0f64, f64::max);
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut acc = Vec::with_capacity(*samples);
            for _ in 0..*samples {
                let alpha: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                let s: f64 = rng.gen_range(-r_max..r_max);
                let omega = [alpha.cos(), alpha.sin()];
                let c = chord(omega, s);
                acc.push(if q == 0.0 {
                    if c > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    rho_pow(c, q)
                });
            }
            Ok(2.0 * r_max / *samples as f64 * kahan_sum(acc))
        }
    }
}

/// Density of the q-th chord measure F_q with respect to dx:
/// g_q(x) = (2q/omega_n) V~_{q-1}(Omega, X(x)) det b(x).
pub fn chord_measure_density(
    body: &ConvexBody,
    dirs: &DirectionGrid,
    q: f64,
) -> Result<MeasureDensity> {
    if !(q > 0.0) {
        return Err(Error::InvalidExponent { q });
    }
    body.assert_strictly_convex(crate::body::DEFAULT_EPS_CONVEX)?;
    let vq = boundary_quermass(body, dirs, q - 1.0);
    let det = body.det_b();
    let n = body.grid().dim();
    let c = 2.0 * q / ball_volume(n);
    let samples = par_map(body.h().len(), |i| c * vq[i] * det[i]);
    Ok(MeasureDensity {
        tag: format!("F_q(q={q})"),
        samples,
    })
}

/// V~_{qe} of the body about each boundary point X(x_i).
/// qe = 0 uses the exact half-sphere value (0^0 := 0 convention).
pub(crate) fn boundary_quermass(body: &ConvexBody, dirs: &DirectionGrid, qe: f64) -> Vec<f64> {
    let n = body.grid().dim();
    if qe == 0.0 {
        let v = sphere_area(n) / (2.0 * n as f64);
        return vec![v; body.h().len()];
    }
    let pts = body.boundary_points();
    par_map(body.h().len(), |i| {
        let profile = body.radial_about_all(pts[i], dirs);
        quermass_from_profile(&profile, dirs.weights(), qe, n)
    })
}

/// Density of the (p,q) chord measure: h^{1-p} g_q.
pub fn lp_chord_density(
    body: &ConvexBody,
    dirs: &DirectionGrid,
    p: f64,
    q: f64,
) -> Result<MeasureDensity> {
    let base = chord_measure_density(body, dirs, q)?;
    let samples = par_map(body.h().len(), |i| {
        body.h()[i].powf(1.0 - p) * base.samples[i]
    });
    Ok(MeasureDensity {
        tag: format!("F_pq(p={p},q={q})"),
        samples,
    })
}

/// First-variation check against a ball of radius `s`:
/// returns ([I_q(h + eps*s) - I_q(h)] / eps, s * total mass of g_q).
pub fn variational_check(
    body: &ConvexBody,
    dirs: &DirectionGrid,
    q: f64,
    s: f64,
    eps: f64,
) -> Result<(f64, f64)> {
    let base = chord_integral(body, dirs, q)?;
    let h_pert: Vec<f64> = body.h().iter().map(|&v| v + eps * s).collect();
    let perturbed = ConvexBody::new(body.grid().clone(), h_pert)?;
    let bumped = chord_integral(&perturbed, dirs, q)?;
    let fd = (bumped - base) / eps;
    let density = chord_measure_density(body, dirs, q)?;
    Ok((fd, s * density.total_mass(body)))
}
