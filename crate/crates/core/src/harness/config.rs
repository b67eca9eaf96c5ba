//! Run configuration: initial data, time step rules, and the flat
//! key=value config file the CLI accepts.

use crate::limiter::QStrategy;
use crate::mesh::{build_uniform_unit_square, Mesh, MeshError};
use crate::stepper::{Scheme, State, StepParams, Stepper, StepperError, DEFAULT_FP_TOL};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("meshes are not nested: {0}")]
    NotNested(String),
    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Stepper(#[from] StepperError),
    #[error(transparent)]
    Assembly(#[from] crate::assembly::AssemblyError),
    #[error(transparent)]
    Sparse(#[from] crate::sparse::SparseError),
}

/// Built-in initial data on the unit square, all radially measured from the
/// center (0.5, 0.5).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    /// steep cell spike over a wide chemoattractant bump; concentrates
    /// toward blow-up
    Blowup,
    /// mild cell bump on a positive floor, no chemoattractant
    Gauss5,
    /// smooth separable profile, no chemoattractant
    SinCos,
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::Blowup => "blowup",
            InitialCondition::Gauss5 => "gauss5",
            InitialCondition::SinCos => "sincos",
        }
    }

    pub fn u(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        match self {
            InitialCondition::Blowup => 1000.0 * (-100.0 * r2).exp(),
            InitialCondition::Gauss5 => 10.0 * (-10.0 * r2).exp() + 5.0,
            InitialCondition::SinCos => {
                let s = (std::f64::consts::PI * x).sin();
                let c = (std::f64::consts::PI * y).cos();
                s * s * c * c
            }
        }
    }

    pub fn c(&self, x: f64, y: f64) -> f64 {
        let r2 = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        match self {
            InitialCondition::Blowup => 500.0 * (-50.0 * r2).exp(),
            InitialCondition::Gauss5 | InitialCondition::SinCos => 0.0,
        }
    }

    pub fn evaluate(&self, mesh: &Mesh) -> State {
        State {
            u: mesh.nodes().iter().map(|&[x, y]| self.u(x, y)).collect(),
            c: mesh.nodes().iter().map(|&[x, y]| self.c(x, y)).collect(),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "blowup" => Ok(InitialCondition::Blowup),
            "gauss5" => Ok(InitialCondition::Gauss5),
            "sincos" => Ok(InitialCondition::SinCos),
            other => Err(HarnessError::Config(format!(
                "unknown initial condition '{other}' (expected blowup, gauss5 or sincos)"
            ))),
        }
    }
}

pub fn parse_scheme(s: &str) -> Result<Scheme, HarnessError> {
    match s {
        "standard" => Ok(Scheme::Standard),
        "low" => Ok(Scheme::LowOrder),
        "afc" => Ok(Scheme::Afc),
        other => Err(HarnessError::Config(format!(
            "unknown scheme '{other}' (expected standard, low or afc)"
        ))),
    }
}

pub fn scheme_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Standard => "standard",
        Scheme::LowOrder => "low",
        Scheme::Afc => "afc",
    }
}

/// Bound-weight choice before the time step is known; MassOverK needs k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QChoice {
    GammaSumD,
    GammaMassOverNu(f64),
    MassOverK,
}

impl QChoice {
    pub fn resolve(&self, k: f64) -> QStrategy {
        match *self {
            QChoice::GammaSumD => QStrategy::GammaSumD,
            QChoice::GammaMassOverNu(nu) => QStrategy::GammaMassOverNu(nu),
            QChoice::MassOverK => QStrategy::MassOverK(k),
        }
    }
}

impl FromStr for QChoice {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "gamma-sum-d" {
            return Ok(QChoice::GammaSumD);
        }
        if s == "m-over-k" {
            return Ok(QChoice::MassOverK);
        }
        if let Some(rest) = s.strip_prefix("gamma-m-nu:") {
            let nu: f64 = rest.parse().map_err(|_| {
                HarnessError::Config(format!("cannot parse nu from '{rest}'"))
            })?;
            if !(nu > 0.0 && nu < 1.0) {
                return Err(HarnessError::Config(format!(
                    "nu must lie in (0, 1), got {nu}"
                )));
            }
            return Ok(QChoice::GammaMassOverNu(nu));
        }
        Err(HarnessError::Config(format!(
            "unknown bound weights '{s}' (expected gamma-sum-d, gamma-m-nu:<nu> or m-over-k)"
        )))
    }
}

/// Time step rule, resolved against the resolution and an optional end time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    /// k = 1e-5 h^1.01 with h the cell diameter sqrt(2)/M; small enough to
    /// track the concentration runs
    Blowup,
    /// k = h0 / c with h0 = 1/M
    HOver(f64),
    /// k = h0^2 / c
    H2Over(f64),
    /// explicit step
    Fixed(f64),
}

impl KRule {
    pub fn base_step(&self, m: usize) -> Result<f64, HarnessError> {
        if m == 0 {
            return Err(HarnessError::Config("resolution must be positive".into()));
        }
        let h0 = 1.0 / m as f64;
        let k = match *self {
            KRule::Blowup => 1e-5 * (std::f64::consts::SQRT_2 * h0).powf(1.01),
            KRule::HOver(c) => h0 / c,
            KRule::H2Over(c) => h0 * h0 / c,
            KRule::Fixed(k) => k,
        };
        if !(k > 0.0 && k.is_finite()) {
            return Err(HarnessError::Config(format!(
                "time step rule {self:?} gives k = {k} at M = {m}"
            )));
        }
        Ok(k)
    }

    /// Turn the rule into a concrete (k, n_steps). An end time T rounds the
    /// step count up and shortens k so n * k lands exactly on T; an explicit
    /// step count wins over the rounding.
    pub fn resolve(
        &self,
        m: usize,
        t_end: Option<f64>,
        steps: Option<usize>,
    ) -> Result<(f64, usize), HarnessError> {
        if let Some(t) = t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "end time must be positive, got {t}"
                )));
            }
        }
        if let Some(n) = steps {
            if n == 0 {
                return Err(HarnessError::Config("step count must be positive".into()));
            }
        }
        match (t_end, steps) {
            (None, None) => Err(HarnessError::Config(
                "the run needs an end time or a step count".into(),
            )),
            (None, Some(n)) => Ok((self.base_step(m)?, n)),
            (Some(t), Some(n)) => Ok((t / n as f64, n)),
            (Some(t), None) => {
                let base = self.base_step(m)?;
                let n = (t / base).ceil().max(1.0) as usize;
                Ok((t / n as f64, n))
            }
        }
    }
}

impl FromStr for KRule {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "blowup" {
            return Ok(KRule::Blowup);
        }
        if let Some(rest) = s.strip_prefix("h2/") {
            let c: f64 = rest
                .parse()
                .map_err(|_| HarnessError::Config(format!("cannot parse divisor from '{rest}'")))?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "step rule divisor must be positive, got {c}"
                )));
            }
            return Ok(KRule::H2Over(c));
        }
        if let Some(rest) = s.strip_prefix("h/") {
            let c: f64 = rest
                .parse()
                .map_err(|_| HarnessError::Config(format!("cannot parse divisor from '{rest}'")))?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "step rule divisor must be positive, got {c}"
                )));
            }
            return Ok(KRule::HOver(c));
        }
        Err(HarnessError::Config(format!(
            "unknown step rule '{s}' (expected blowup, h/<c> or h2/<c>)"
        )))
    }
}

/// Everything a single simulation needs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub m: usize,
    pub scheme: Scheme,
    pub lambda: f64,
    pub k_rule: KRule,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub q: QChoice,
    pub fp_tol: f64,
    pub ic: InitialCondition,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 32,
            scheme: Scheme::Afc,
            lambda: 1.0,
            k_rule: KRule::Blowup,
            t_end: None,
            steps: Some(100),
            q: QChoice::MassOverK,
            fp_tol: DEFAULT_FP_TOL,
            ic: InitialCondition::Blowup,
        }
    }
}

impl RunConfig {
    /// Resolve the step rule and build a ready stepper plus its step count.
    pub fn make_stepper(&self) -> Result<(Stepper, usize), HarnessError> {
        let (k, n_steps) = self.k_rule.resolve(self.m, self.t_end, self.steps)?;
        let mesh = build_uniform_unit_square(self.m)?;
        let initial = self.ic.evaluate(&mesh);
        let mut params = StepParams::new(k, self.lambda, self.scheme);
        params.q_strategy = self.q.resolve(k);
        params.fp_tol = self.fp_tol;
        let stepper = Stepper::new(mesh, initial, params)?;
        Ok((stepper, n_steps))
    }

    /// Apply one key=value pair, as found in a config file.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad_num = |k: &str, v: &str| {
            HarnessError::Config(format!("cannot parse number '{v}' for key '{k}'"))
        };
        match key {
            "m" | "M" => {
                self.m = value.parse().map_err(|_| bad_num(key, value))?;
            }
            "scheme" => self.scheme = parse_scheme(value)?,
            "lambda" => {
                self.lambda = value.parse().map_err(|_| bad_num(key, value))?;
            }
            "k" => {
                let k: f64 = value.parse().map_err(|_| bad_num(key, value))?;
                self.k_rule = KRule::Fixed(k);
            }
            "k_rule" | "k-rule" => self.k_rule = value.parse()?,
            "T" | "t_end" | "t-end" => {
                self.t_end = Some(value.parse().map_err(|_| bad_num(key, value))?);
            }
            "steps" => {
                self.steps = Some(value.parse().map_err(|_| bad_num(key, value))?);
            }
            "q" => self.q = value.parse()?,
            "fp_tol" | "fp-tol" => {
                self.fp_tol = value.parse().map_err(|_| bad_num(key, value))?;
            }
            "ic" => self.ic = value.parse()?,
            other => {
                return Err(HarnessError::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    /// Load a flat key=value file ('#' starts a comment) over the current
    /// values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), HarnessError> {
        for (key, value) in read_kv_file(path)? {
            self.apply_kv(&key, &value)?;
        }
        Ok(())
    }
}

pub fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Path {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}
