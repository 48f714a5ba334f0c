//! Run configuration for the CLI: flat key=value config files, descriptor
//! parsing for phi / f / initial bodies, and construction of the flow inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chordflow::body::ConvexBody;
use chordflow::error::{Error, Result};
use chordflow::flow::FlowConfig;
use chordflow::grid::{make_grid, SphereGrid};
use chordflow::orlicz::OrliczPhi;
use chordflow::util::fmt17;

/// Everything needed to reproduce a solve run. Serializes to flat
/// key=value lines; command-line flags override file values.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dim: usize,
    pub grid: usize,
    pub q: f64,
    pub phi: String,
    pub f: String,
    pub init: String,
    pub dt0: f64,
    pub tol_rhs: f64,
    pub tol_res: f64,
    pub max_steps: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub stride: usize,
    pub project_on_reject: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            grid: 256,
            q: 2.0,
            phi: "power:p=2".into(),
            f: "const:1".into(),
            init: "disk:1".into(),
            dt0: 1e-3,
            tol_rhs: 1e-6,
            tol_res: 1e-4,
            max_steps: 200_000,
            out: PathBuf::from("out"),
            seed: 0,
            stride: 50,
            project_on_reject: false,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        cfg.apply_lines(&text)?;
        Ok(cfg)
    }

    pub fn apply_lines(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", lineno + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 =
            |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
        let parse_usize =
            |v: &str| v.parse::<usize>().map_err(|_| bad(format!("bad integer {v:?}")));
        match key {
            "dim" => self.dim = parse_usize(value)?,
            "grid" => self.grid = parse_usize(value)?,
            "q" => self.q = parse_f64(value)?,
            "phi" => self.phi = value.to_string(),
            "f" => self.f = value.to_string(),
            "init" => self.init = value.to_string(),
            "dt0" => self.dt0 = parse_f64(value)?,
            "tol_rhs" => self.tol_rhs = parse_f64(value)?,
            "tol_res" => self.tol_res = parse_f64(value)?,
            "max_steps" => self.max_steps = parse_usize(value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("bad seed {value:?}")))?
            }
            "stride" => self.stride = parse_usize(value)?,
            "project_on_reject" => {
                self.project_on_reject = value
                    .parse::<bool>()
                    .map_err(|_| bad(format!("bad bool {value:?}")))?
            }
            other => return Err(bad(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// The effective configuration, one key=value per line. Floats use 17
    /// significant digits so reloading reproduces bit-identical runs.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("dim={}\n", self.dim));
        s.push_str(&format!("grid={}\n", self.grid));
        s.push_str(&format!("q={}\n", fmt17(self.q)));
        s.push_str(&format!("phi={}\n", self.phi));
        s.push_str(&format!("f={}\n", self.f));
        s.push_str(&format!("init={}\n", self.init));
        s.push_str(&format!("dt0={}\n", fmt17(self.dt0)));
        s.push_str(&format!("tol_rhs={}\n", fmt17(self.tol_rhs)));
        s.push_str(&format!("tol_res={}\n", fmt17(self.tol_res)));
        s.push_str(&format!("max_steps={}\n", self.max_steps));
        s.push_str(&format!("out={}\n", self.out.display()));
        s.push_str(&format!("seed={}\n", self.seed));
        s.push_str(&format!("stride={}\n", self.stride));
        s.push_str(&format!("project_on_reject={}\n", self.project_on_reject));
        s
    }

    pub fn make_grid(&self) -> Result<Arc<SphereGrid>> {
        Ok(Arc::new(make_grid(self.dim, self.grid)?))
    }

    pub fn build_phi(&self) -> Result<OrliczPhi> {
        parse_phi(&self.phi)
    }

    /// Samples of f on the grid, positivity-validated (for `fourier`, by
    /// dense sampling at 4x resolution).
    pub fn build_f(&self, grid: &SphereGrid) -> Result<Vec<f64>> {
        parse_f(&self.f, grid)
    }

    pub fn build_initial_body(&self, grid: Arc<SphereGrid>) -> Result<ConvexBody> {
        parse_init(&self.init, grid)
    }

    pub fn build_flow_config(&self, grid: &SphereGrid) -> Result<FlowConfig> {
        let phi = self.build_phi()?;
        let f = self.build_f(grid)?;
        let mut cfg = FlowConfig::new(self.q, phi, f)?;
        cfg.dt0 = self.dt0;
        cfg.tol_rhs = self.tol_rhs;
        cfg.tol_res = self.tol_res;
        cfg.max_steps = self.max_steps;
        cfg.stride = self.stride.max(1);
        cfg.project_on_reject = self.project_on_reject;
        Ok(cfg)
    }
}

pub fn parse_phi(desc: &str) -> Result<OrliczPhi> {
    if let Some(rest) = desc.strip_prefix("power:") {
        let p = rest
            .strip_prefix("p=")
            .ok_or_else(|| bad(format!("phi power descriptor needs p=, got {desc:?}")))?
            .parse::<f64>()
            .map_err(|_| bad(format!("bad phi exponent in {desc:?}")))?;
        OrliczPhi::power(p)
    } else if let Some(rest) = desc.strip_prefix("sum:") {
        // sum:<c1>,<p1>;<c2>,<p2>;...
        let mut terms = Vec::new();
        for part in rest.split(';') {
            let (c, p) = part
                .split_once(',')
                .ok_or_else(|| bad(format!("phi sum term {part:?} needs c,p")))?;
            terms.push((
                c.trim().parse::<f64>().map_err(|_| bad("bad sum coefficient"))?,
                p.trim().parse::<f64>().map_err(|_| bad("bad sum exponent"))?,
            ));
        }
        OrliczPhi::power_sum(terms)
    } else if let Some(path) = desc.strip_prefix("table:") {
        let text = std::fs::read_to_string(path)?;
        let mut samples = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("s,") {
                continue;
            }
            let (s, v) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("phi table line {line:?} needs s,phi")))?;
            samples.push((
                s.trim().parse::<f64>().map_err(|_| bad("bad table abscissa"))?,
                v.trim().parse::<f64>().map_err(|_| bad("bad table value"))?,
            ));
        }
        OrliczPhi::table(&samples)
    } else {
        Err(bad(format!(
            "unknown phi descriptor {desc:?} (expected power:p=, sum:, table:)"
        )))
    }
}

/// Fourier coefficients a0, c1, s1, c2, s2, ... on the circle angle.
fn fourier_eval(coeffs: &[f64], t: f64) -> f64 {
    let mut v = coeffs[0];
    for k in 0..(coeffs.len() - 1) / 2 {
        let c = coeffs[1 + 2 * k];
        let s = coeffs.get(2 + 2 * k).copied().unwrap_or(0.0);
        let kf = (k + 1) as f64;
        v += c * (kf * t).cos() + s * (kf * t).sin();
    }
    v
}

pub fn parse_f(desc: &str, grid: &SphereGrid) -> Result<Vec<f64>> {
    let samples = if let Some(v) = desc.strip_prefix("const:") {
        let v = v
            .parse::<f64>()
            .map_err(|_| bad(format!("bad constant in {desc:?}")))?;
        vec![v; grid.len()]
    } else if let Some(rest) = desc.strip_prefix("fourier:") {
        if grid.dim() != 2 {
            return Err(bad("fourier f descriptors are defined for dim 2"));
        }
        let coeffs: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(format!("bad fourier coefficients in {desc:?}")))?;
        if coeffs.is_empty() {
            return Err(bad("fourier f needs at least a0"));
        }
        // positivity by dense sampling at 4x resolution
        let m = 4 * grid.len();
        for j in 0..m {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let v = fourier_eval(&coeffs, t);
            if !(v > 0.0) {
                return Err(bad(format!(
                    "f must be positive (the prescribed data is a positive function); \
                     fourier descriptor dips to {v} at angle {t}"
                )));
            }
        }
        (0..grid.len())
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / grid.len() as f64;
                fourier_eval(&coeffs, t)
            })
            .collect()
    } else if let Some(path) = desc.strip_prefix("table:") {
        read_node_table(Path::new(path), grid.len())?
    } else {
        return Err(bad(format!(
            "unknown f descriptor {desc:?} (expected const:, fourier:, table:)"
        )));
    };
    if let Some(v) = samples.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(bad(format!(
            "f must be positive at every node (found {v}); the prescribed data \
             is required to be a positive function"
        )));
    }
    Ok(samples)
}

pub fn parse_init(desc: &str, grid: Arc<SphereGrid>) -> Result<ConvexBody> {
    let h: Vec<f64> = if let Some(r) = desc.strip_prefix("disk:") {
        let r = r
            .parse::<f64>()
            .map_err(|_| bad(format!("bad radius in {desc:?}")))?;
        if !(r > 0.0) {
            return Err(bad("disk radius must be positive"));
        }
        vec![r; grid.len()]
    } else if let Some(rest) = desc.strip_prefix("ellipse:") {
        let (a, b) = rest
            .split_once(',')
            .ok_or_else(|| bad(format!("ellipse descriptor needs a,b, got {desc:?}")))?;
        let a = a.trim().parse::<f64>().map_err(|_| bad("bad ellipse a"))?;
        let b = b.trim().parse::<f64>().map_err(|_| bad("bad ellipse b"))?;
        if !(a > 0.0) || !(b > 0.0) {
            return Err(bad("ellipse semi-axes must be positive"));
        }
        grid.nodes()
            .iter()
            .map(|x| ((a * x[0]).powi(2) + (b * x[1]).powi(2) + (b * x[2]).powi(2)).sqrt())
            .collect()
    } else if let Some(path) = desc.strip_prefix("table:") {
        read_node_table(Path::new(path), grid.len())?
    } else {
        return Err(bad(format!(
            "unknown init descriptor {desc:?} (expected disk:R, ellipse:a,b, table:)"
        )));
    };
    let body = ConvexBody::new(grid, h)?;
    body.assert_strictly_convex(chordflow::body::DEFAULT_EPS_CONVEX)
        .map_err(|e| bad(format!("initial body is not strictly convex: {e}")))?;
    Ok(body)
}

/// Per-node values from a CSV file: either one value per line, or the
/// solution-CSV format (header starting with node_index, h in column 4 for
/// dim 2 / column 5 for dim 3).
fn read_node_table(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    let mut h_col: Option<usize> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with("node_index") {
            h_col = line.split(',').position(|c| c == "h");
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let field = match h_col {
            Some(k) => fields.get(k).copied().ok_or_else(|| bad("short CSV row"))?,
            None => fields[0],
        };
        values.push(
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("bad table value {field:?} in {}", path.display())))?,
        );
    }
    if values.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            got: values.len(),
        });
    }
    Ok(values)
}

/// Key=value summary block for machine consumption.
pub fn summary_lines(pairs: &[(&str, String)]) -> String {
    let map: BTreeMap<&str, &String> = pairs.iter().map(|(k, v)| (*k, v)).collect();
    let mut s = String::new();
    // keep insertion order for readability, but dedup through the map
    for (k, _) in pairs {
        if let Some(v) = map.get(k) {
            s.push_str(&format!("{k}={v}\n"));
        }
    }
    s
}
