//! The Orlicz function phi, its reciprocal antiderivative psi, and
//! admissibility validation.
//!
//! Shipped families: powers phi(s) = s^{1-p} with p > 0, positive-coefficient
//! sums of powers, and tabulated data with monotone-cubic interpolation in
//! log-log space. All have 1/phi integrable at zero, so psi(s) =
//! int_0^s 1/phi is well defined.

use crate::error::{Error, Result};
use crate::util::adaptive_simpson;

#[derive(Debug, Clone)]
enum Family {
    /// phi(s) = s^{1-p}, psi(s) = s^p / p
    Power { p: f64 },
    /// phi(s) = sum of c_i s^{1-p_i}, c_i > 0, p_i > 0
    Sum { terms: Vec<(f64, f64)> },
    /// log-spaced samples (log s, log phi) with monotone cubic interpolation
    Table {
        log_s: Vec<f64>,
        log_phi: Vec<f64>,
        slopes: Vec<f64>,
    },
}

/// The function phi with evaluators for phi and psi plus validity flags.
/// Immutable and thread-safe.
#[derive(Debug, Clone)]
pub struct OrliczPhi {
    family: Family,
    descriptor: String,
    /// int_0 1/phi converges
    pub psi_finite_at_zero: bool,
    /// psi(s) -> infinity as s -> infinity (heuristic for tables)
    pub psi_diverges_at_infinity: bool,
    /// local power-law exponent of phi near 0: phi ~ s^alpha
    alpha_at_zero: f64,
}

/// Result of the admissibility checks of [`OrliczPhi::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub positive: bool,
    pub psi_finite_at_zero: bool,
    pub psi_diverges_at_infinity: bool,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.violations.is_empty()
    }
}

impl OrliczPhi {
    /// Power family phi(s) = s^{1-p}. Requires p > 0 (otherwise 1/phi is not
    /// integrable at 0: the chord case phi(s) = s is rejected here).
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0) {
            return Err(Error::PsiDivergentAtZero { p });
        }
        Ok(OrliczPhi {
            family: Family::Power { p },
            descriptor: format!("power:p={p}"),
            psi_finite_at_zero: true,
            psi_diverges_at_infinity: true,
            alpha_at_zero: 1.0 - p,
        })
    }

    /// Positive-coefficient sum of power terms: phi = sum c_i s^{1-p_i}.
    pub fn power_sum(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Config("empty phi sum".into()));
        }
        for &(c, p) in &terms {
            if !(c > 0.0) {
                return Err(Error::NotPositive { min: c });
            }
            if !(p > 0.0) {
                return Err(Error::PsiDivergentAtZero { p });
            }
        }
        // near zero the term with the most negative exponent 1-p (largest p)
        // dominates
        let p_max = terms.iter().map(|t| t.1).fold(0.0f64, f64::max);
        let desc = terms
            .iter()
            .map(|(c, p)| format!("{c}*power:p={p}"))
            .collect::<Vec<_>>()
            .join("+");
        Ok(OrliczPhi {
            family: Family::Sum { terms },
            descriptor: format!("sum:{desc}"),
            psi_finite_at_zero: true,
            psi_diverges_at_infinity: true,
            alpha_at_zero: 1.0 - p_max,
        })
    }

    /// Tabulated phi from (s, phi(s)) samples, all positive, s increasing.
    /// Interpolation is monotone cubic (Fritsch-Carlson) in log-log space,
    /// with power-law extrapolation beyond the sampled range.
    pub fn table(samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Config("phi table needs at least 2 samples".into()));
        }
        for &(s, v) in samples {
            if !(s > 0.0) || !(v > 0.0) {
                return Err(Error::NotPositive { min: v.min(s) });
            }
            if !s.is_finite() || !v.is_finite() {
                return Err(Error::Config("phi table entries must be finite".into()));
            }
        }
        let log_s: Vec<f64> = samples.iter().map(|p| p.0.ln()).collect();
        let log_phi: Vec<f64> = samples.iter().map(|p| p.1.ln()).collect();
        for w in log_s.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config("phi table abscissae must increase".into()));
            }
        }
        let slopes = fritsch_carlson_slopes(&log_s, &log_phi);
        let alpha0 = slopes[0];
        if alpha0 >= 1.0 {
            // 1/phi ~ s^{-alpha0} is not integrable at 0
            return Err(Error::PsiDivergentAtZero { p: 1.0 - alpha0 });
        }
        Ok(OrliczPhi {
            family: Family::Table {
                log_s,
                log_phi,
                slopes,
            },
            descriptor: "table".into(),
            psi_finite_at_zero: true,
            psi_diverges_at_infinity: true, // confirmed or refuted by validate()
            alpha_at_zero: alpha0,
        })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// phi(s) for s > 0.
    pub fn eval(&self, s: f64) -> f64 {
        match &self.family {
            Family::Power { p } => s.powf(1.0 - p),
            Family::Sum { terms } => terms.iter().map(|(c, p)| c * s.powf(1.0 - p)).sum(),
            Family::Table {
                log_s,
                log_phi,
                slopes,
            } => {
                let t = s.ln();
                let k = log_s.partition_point(|&v| v < t);
                if k == 0 {
                    // power-law extrapolation from the first sample
                    (log_phi[0] + slopes[0] * (t - log_s[0])).exp()
                } else if k == log_s.len() {
                    let m = log_s.len() - 1;
                    (log_phi[m] + slopes[m] * (t - log_s[m])).exp()
                } else {
                    let (x0, x1) = (log_s[k - 1], log_s[k]);
                    let (y0, y1) = (log_phi[k - 1], log_phi[k]);
                    let (m0, m1) = (slopes[k - 1], slopes[k]);
                    let hseg = x1 - x0;
                    let u = (t - x0) / hseg;
                    let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
                    let h10 = u * (1.0 - u) * (1.0 - u);
                    let h01 = u * u * (3.0 - 2.0 * u);
                    let h11 = u * u * (u - 1.0);
                    (h00 * y0 + hseg * h10 * m0 + h01 * y1 + hseg * h11 * m1).exp()
                }
            }
        }
    }

    /// Does a closed-form psi exist for this family?
    pub fn closed_form_psi(&self) -> bool {
        matches!(self.family, Family::Power { .. })
    }

    /// psi(s) = int_0^s 1/phi. Closed form for the power family, otherwise
    /// adaptive quadrature with the endpoint power-law singularity removed by
    /// substitution.
    pub fn psi(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Config(format!("psi requires s > 0, got {s}")));
        }
        match &self.family {
            Family::Power { p } => Ok(s.powf(*p) / p),
            _ => self.psi_quadrature(s),
        }
    }

    /// Quadrature path for psi, available for every family (used as the
    /// independent check of the closed form).
    ///
    /// Near zero 1/phi ~ s^{p0 - 1} with p0 = 1 - alpha_at_zero > 0; the
    /// substitution tau = s u^{2/p0} makes the integrand vanish linearly at
    /// u = 0 (for a pure power it is exactly linear), so the quadrature sees
    /// no endpoint singularity.
    pub fn psi_quadrature(&self, s: f64) -> Result<f64> {
        let p0 = 1.0 - self.alpha_at_zero;
        debug_assert!(p0 > 0.0);
        let gamma = 2.0 / p0;
        let g = |u: f64| -> f64 {
            if u <= 0.0 {
                return 0.0;
            }
            let tau = s * u.powf(gamma);
            let dtau = s * gamma * u.powf(gamma - 1.0);
            dtau / self.eval(tau)
        };
        // tolerance relative to the integrand scale, not absolute
        let scale = g(0.25).abs().max(g(0.5).abs()).max(g(1.0).abs()).max(1e-30);
        adaptive_simpson(&g, 0.0, 1.0, 1e-11 * scale).ok_or(Error::QuadratureFailure {
            estimate: f64::NAN,
        })
    }

    /// Admissibility checks: positivity on [1e-6, 1e6], psi finite at zero,
    /// and the divergence heuristic psi(10^k) unbounded up to k = 6.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut positive = true;
        let mut s = 1e-6;
        while s <= 1e6 {
            if !(self.eval(s) > 0.0) {
                positive = false;
                violations.push(format!("phi({s}) not positive"));
                break;
            }
            s *= 10.0_f64.powf(0.25);
        }
        if !self.psi_finite_at_zero {
            violations.push("int_0 1/phi diverges".into());
        }
        let mut diverges = true;
        if positive {
            let psi_vals: Vec<f64> = (0..=6)
                .map(|k| self.psi(10f64.powi(k)).unwrap_or(f64::NAN))
                .collect();
            // bounded psi flattens out; require sustained growth
            let lo = psi_vals[2];
            let hi = psi_vals[6];
            if !(hi.is_finite() && lo.is_finite()) || hi < 1.5 * lo.max(1e-300) {
                diverges = false;
                violations.push(format!(
                    "psi appears bounded at infinity (psi(1e2)={lo}, psi(1e6)={hi})"
                ));
            }
        }
        ValidationReport {
            positive,
            psi_finite_at_zero: self.psi_finite_at_zero,
            psi_diverges_at_infinity: diverges,
            violations,
        }
    }
}

/// Fritsch-Carlson monotone cubic slopes.
fn fritsch_carlson_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 {
            0.0
        } else {
            0.5 * (d[i - 1] + d[i])
        };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let a = m[i] / d[i];
            let b = m[i + 1] / d[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                m[i] = t * a * d[i];
                m[i + 1] = t * b * d[i];
            }
        }
    }
    m
}
