//! Independent oracles: the Monge-Ampere residual of the prescription
//! equation, closed-form ball fixtures, and the special-value identity
//! cross-checks used for acceptance.

use crate::body::ConvexBody;
use crate::chord::{boundary_quermass, chord_integral, chord_integral_lines, LineSampler};
use crate::error::{Error, Result};
use crate::grid::{ball_volume, DirectionGrid};
use crate::orlicz::OrliczPhi;
use crate::util::{gauss_legendre, kahan_sum};

/// Pointwise defect of c phi(h) V~_{q-1} det b = f, with norms taken
/// against the grid quadrature weights.
pub struct ResidualReport {
    pub samples: Vec<f64>,
    pub sup: f64,
    pub l2: f64,
    /// the c that minimizes the weighted L2 residual for this body
    pub c_optimal: f64,
}

/// Monge-Ampere residual r(x) = c phi(h) V~_{q-1}(X(x)) det b(x) - f(x).
pub fn ma_residual(
    body: &ConvexBody,
    dirs: &DirectionGrid,
    f: &[f64],
    phi: &OrliczPhi,
    q: f64,
    c: f64,
) -> Result<ResidualReport> {
    if f.len() != body.h().len() {
        return Err(Error::ShapeMismatch {
            expected: body.h().len(),
            got: f.len(),
        });
    }
    if !(c > 0.0) {
        return Err(Error::NotPositive { min: c });
    }
    body.assert_strictly_convex(crate::body::DEFAULT_EPS_CONVEX)?;
    let v = boundary_quermass(body, dirs, q - 1.0);
    let det = body.det_b();
    let w = body.grid().weights();
    // the density c multiplies: a_i = phi(h) V~ det b
    let a: Vec<f64> = (0..f.len())
        .map(|i| phi.eval(body.h()[i]) * v[i] * det[i])
        .collect();
    let samples: Vec<f64> = (0..f.len()).map(|i| c * a[i] - f[i]).collect();
    let sup = samples.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let l2 = kahan_sum(samples.iter().zip(w).map(|(r, &wi)| wi * r * r)).sqrt();
    // r is affine in c, so the weighted least-squares c is <a, f> / <a, a>
    let num = kahan_sum(a.iter().zip(f).zip(w).map(|((ai, fi), wi)| wi * ai * fi));
    let den = kahan_sum(a.iter().zip(w).map(|(ai, wi)| wi * ai * ai));
    Ok(ResidualReport {
        samples,
        sup,
        l2,
        c_optimal: num / den,
    })
}

/// Closed-form quantities of the ball of radius R (support h = R):
/// Gauss curvature and the boundary dual quermassintegral
/// V~_{q-1} = (1/n) (2R)^{q-1} H_{n,q}, with H_{n,q} the hemisphere
/// integral of max(0, -cos)^{q-1} over the unit sphere.
pub struct BallOracle {
    pub r: f64,
    pub q: f64,
    pub dim: usize,
    pub h: f64,
    pub gauss_curvature: f64,
    pub v_boundary: f64,
}

/// Hemisphere integral H_{n,q} by 256-point Gauss quadrature.
fn hemisphere_integral(q: f64, dim: usize) -> f64 {
    let (x, w) = gauss_legendre(256);
    match dim {
        2 => {
            // angle alpha over (pi/2, 3pi/2), integrand (-cos alpha)^{q-1}
            let (a, b) = (std::f64::consts::FRAC_PI_2, 1.5 * std::f64::consts::PI);
            kahan_sum(x.iter().zip(&w).map(|(t, wt)| {
                let alpha = 0.5 * (a + b) + 0.5 * (b - a) * t;
                0.5 * (b - a) * wt * (-alpha.cos()).powf(q - 1.0)
            }))
        }
        3 => {
            // polar angle from the inward pole, with the 2 pi sin weight
            let (a, b) = (0.0, std::f64::consts::FRAC_PI_2);
            kahan_sum(x.iter().zip(&w).map(|(t, wt)| {
                let th = 0.5 * (a + b) + 0.5 * (b - a) * t;
                0.5 * (b - a) * wt * 2.0 * std::f64::consts::PI * th.sin() * th.cos().powf(q - 1.0)
            }))
        }
        _ => f64::NAN,
    }
}

pub fn ball_oracle(r: f64, q: f64, dim: usize) -> Result<BallOracle> {
    if !(r > 0.0) {
        return Err(Error::NotPositive { min: r });
    }
    if dim != 2 && dim != 3 {
        return Err(Error::Config(format!("ball_oracle supports dim 2 or 3, got {dim}")));
    }
    let h_nq = hemisphere_integral(q, dim);
    Ok(BallOracle {
        r,
        q,
        dim,
        h: r,
        gauss_curvature: r.powi(-(dim as i32 - 1)),
        v_boundary: (2.0 * r).powf(q - 1.0) * h_nq / dim as f64,
    })
}

/// One line of a verification report.
pub struct CheckLine {
    pub quantity: String,
    pub computed: f64,
    pub expected: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn new(quantity: &str, computed: f64, expected: f64, tolerance: f64) -> Self {
        let rel_error = if expected != 0.0 {
            ((computed - expected) / expected).abs()
        } else {
            computed.abs()
        };
        CheckLine {
            quantity: quantity.to_string(),
            computed,
            expected,
            rel_error,
            tolerance,
            pass: rel_error <= tolerance && computed.is_finite(),
        }
    }

    pub fn to_csv(&self) -> String {
        use crate::util::fmt17 as f;
        format!(
            "{},{},{},{},{},{}",
            self.quantity,
            f(self.computed),
            f(self.expected),
            f(self.rel_error),
            f(self.tolerance),
            if self.pass { "pass" } else { "fail" }
        )
    }
}

pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub const CSV_HEADER: &'static str = "quantity,computed,expected,rel_error,tolerance,status";

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

/// Special-value identity checks of the chord integrals against volume and
/// surface area: I_1 = V, I_0 = (omega_{n-1} / (n omega_n)) S,
/// I_{n+1} = ((n+1)/omega_n) V^2, plus agreement of the two pipelines at q.
pub fn cross_check(body: &ConvexBody, q: f64) -> Result<CheckReport> {
    let n = body.grid().dim();
    let dirs = DirectionGrid::from_grid(body.grid());
    let v = body.volume();
    let s = body.surface_area();
    let tol = 0.01;
    let mut lines = Vec::new();
    let i1 = chord_integral(body, &dirs, 1.0)?;
    lines.push(CheckLine::new("I_1 = V", i1, v, tol));
    let in1 = chord_integral(body, &dirs, n as f64 + 1.0)?;
    lines.push(CheckLine::new(
        "I_{n+1} = (n+1)/omega_n V^2",
        in1,
        (n as f64 + 1.0) / ball_volume(n) * v * v,
        tol,
    ));
    if n == 2 {
        let sampler = LineSampler::default();
        let i0 = chord_integral_lines(body, 0.0, &sampler)?;
        // omega_{n-1} for n = 2 is the length of [-1, 1]
        lines.push(CheckLine::new(
            "I_0 = omega_{n-1}/(n omega_n) S",
            i0,
            2.0 / (n as f64 * ball_volume(n)) * s,
            tol,
        ));
        let a = chord_integral(body, &dirs, q)?;
        let b = chord_integral_lines(body, q, &sampler)?;
        lines.push(CheckLine::new(
            &format!("I_q pipelines (q={q})"),
            a,
            b,
            tol,
        ));
    }
    Ok(CheckReport { lines })
}
