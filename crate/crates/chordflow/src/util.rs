//! Shared numerics: compensated summation, Gauss-Legendre rules, adaptive
//! quadrature and the parallel map helper used by the per-node kernels.

/// Kahan-Babuska compensated sum over a fixed iteration order.
///
/// All quadratures in the crate reduce through this so results are
/// bit-identical across runs and thread counts.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Weighted compensated dot product: sum of w[i] * f[i].
pub fn kahan_dot(w: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(w.len(), f.len());
    kahan_sum(w.iter().zip(f).map(|(a, b)| a * b))
}

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_m(x) and P'_m(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Adaptive Simpson quadrature of `f` on [a, b] to absolute tolerance `tol`.
/// Returns None if the recursion depth limit is hit before convergence.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Option<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        let l = rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Some(l + r)
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// Map `op` over `0..len`, collecting into a Vec in index order.
///
/// With the `parallel` feature the map runs on the rayon pool; the output
/// order (and therefore every downstream compensated reduction) is identical
/// either way.
#[cfg(feature = "parallel")]
pub fn par_map<T, F>(len: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(op).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, F>(len: usize, op: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).map(op).collect()
}

/// Format a float with 17 significant digits, the fixed width used by every
/// CSV and summary writer.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
