//! Per-record estimation of Ackerman parameters.
//!
//! Five samples and five parameters leave the least-squares problem exactly
//! determined and multimodal, so the fit is a bounded, penalized least-squares
//! problem solved from many deterministic starting points:
//!
//! ```text
//! objective = Σ (G_i - G_i^pred)² + λ·[ ((g0 - G_0)/w_g0)² + ((α - c_α)/w_α)² + ((ω - c_ω)/w_ω)² ]
//! ```
//!
//! where `G_0` is the measured fasting value, `c_*` are bound centers and
//! `w_*` bound widths. The quadratic penalty is the negative log of a Gaussian
//! prior, so the minimizer is a MAP point estimate.

mod simplex;

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{parse_f64, KvFile};
use crate::model::{
    mean_abs, normalize_phase, residuals, AckermanParams, OgttRecord, SAMPLE_TIMES,
};

use simplex::{minimize, SimplexOptions};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "{name} bounds must be finite with lo < hi, got [{}, {}]",
                self.lo, self.hi
            )))
        }
    }
}

/// Bounds on the baseline `g0`, either absolute or as factors of the
/// measured fasting concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G0Bounds {
    RelativeToFasting(Interval),
    Absolute(Interval),
}

impl G0Bounds {
    pub fn resolve(&self, fasting: f64) -> Interval {
        match *self {
            G0Bounds::RelativeToFasting(f) => Interval::new(f.lo * fasting, f.hi * fasting),
            G0Bounds::Absolute(i) => i,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub g0: G0Bounds,
    pub a: Interval,
    pub alpha: Interval,
    pub omega: Interval,
    /// Phase bounds; a full `2π`-wide interval is searched as a circle.
    pub delta: Interval,
    pub n_starts: usize,
    /// Weight λ of the quadratic prior penalty.
    pub prior_weight: f64,
    pub seed: u64,
    /// Simplex iterations allowed per start.
    pub max_iterations: usize,
    /// Simplex diameter, in scaled coordinates, at which a start is converged.
    pub convergence_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        default_fit_config()
    }
}

pub fn default_fit_config() -> FitConfig {
    FitConfig {
        g0: G0Bounds::RelativeToFasting(Interval::new(0.5, 1.5)),
        a: Interval::new(1.0, 400.0),
        alpha: Interval::new(0.001, 0.1),
        omega: Interval::new(0.005, 0.2),
        delta: Interval::new(-PI, PI),
        n_starts: 16,
        prior_weight: 0.01,
        seed: 0,
        max_iterations: 2000,
        convergence_tol: 1e-6,
    }
}

const KEYS: [&str; 10] = [
    "g0_bounds",
    "a_bounds",
    "alpha_bounds",
    "omega_bounds",
    "delta_bounds",
    "n_starts",
    "prior_weight",
    "seed",
    "max_iterations",
    "convergence_tol",
];

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        match self.g0 {
            G0Bounds::RelativeToFasting(f) => {
                f.check("g0 factor")?;
                if f.lo <= 0.0 {
                    return Err(Error::Parameter("g0 factors must be positive".into()));
                }
            }
            G0Bounds::Absolute(i) => {
                i.check("g0")?;
                if i.lo <= 0.0 {
                    return Err(Error::Parameter("g0 lower bound must be positive".into()));
                }
            }
        }
        self.a.check("a")?;
        self.alpha.check("alpha")?;
        self.omega.check("omega")?;
        self.delta.check("delta")?;
        if self.a.lo <= 0.0 || self.alpha.lo <= 0.0 || self.omega.lo <= 0.0 {
            return Err(Error::Parameter(
                "a, alpha and omega lower bounds must be positive".into(),
            ));
        }
        if self.delta.width() > TAU + 1e-12 {
            return Err(Error::Parameter("delta bounds wider than 2π".into()));
        }
        if self.n_starts == 0 || self.max_iterations == 0 {
            return Err(Error::Parameter(
                "n_starts and max_iterations must be at least 1".into(),
            ));
        }
        if !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return Err(Error::Parameter(
                "prior_weight must be finite and >= 0".into(),
            ));
        }
        if !(self.convergence_tol > 0.0 && self.convergence_tol.is_finite()) {
            return Err(Error::Parameter("convergence_tol must be positive".into()));
        }
        Ok(())
    }

    fn delta_is_circle(&self) -> bool {
        self.delta.width() >= TAU - 1e-9
    }

    /// Renders the configuration in the `key = value` file format.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let (mode, g0) = match self.g0 {
            G0Bounds::RelativeToFasting(i) => ("relative", i),
            G0Bounds::Absolute(i) => ("absolute", i),
        };
        let _ = writeln!(out, "g0_bounds = {mode} {} {}", g0.lo, g0.hi);
        for (key, i) in [
            ("a_bounds", self.a),
            ("alpha_bounds", self.alpha),
            ("omega_bounds", self.omega),
            ("delta_bounds", self.delta),
        ] {
            let _ = writeln!(out, "{key} = {} {}", i.lo, i.hi);
        }
        let _ = writeln!(out, "n_starts = {}", self.n_starts);
        let _ = writeln!(out, "prior_weight = {}", self.prior_weight);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "max_iterations = {}", self.max_iterations);
        let _ = writeln!(out, "convergence_tol = {}", self.convergence_tol);
        out
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut kv = KvFile::parse(text)?;
        let config = Self::take_from_kv(&mut kv)?;
        kv.finish()?;
        Ok(config)
    }

    /// Consumes the fit keys of a shared config file, starting from defaults.
    pub fn take_from_kv(kv: &mut KvFile) -> Result<Self> {
        let mut c = default_fit_config();
        if let Some((line, tokens)) = kv.take_tokens("g0_bounds") {
            let (mode, rest) = tokens.split_first().ok_or(Error::Config {
                line,
                message: "g0_bounds needs `relative|absolute lo hi`".into(),
            })?;
            let i = interval_from(line, "g0_bounds", rest)?;
            c.g0 = match mode.as_str() {
                "relative" => G0Bounds::RelativeToFasting(i),
                "absolute" => G0Bounds::Absolute(i),
                other => {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown g0_bounds mode `{other}`"),
                    })
                }
            };
        }
        for (key, slot) in [
            ("a_bounds", &mut c.a),
            ("alpha_bounds", &mut c.alpha),
            ("omega_bounds", &mut c.omega),
            ("delta_bounds", &mut c.delta),
        ] {
            if let Some((line, tokens)) = kv.take_tokens(key) {
                *slot = interval_from(line, key, &tokens)?;
            }
        }
        if let Some(v) = kv.take("n_starts")? {
            c.n_starts = v;
        }
        if let Some(v) = kv.take("prior_weight")? {
            c.prior_weight = v;
        }
        if let Some(v) = kv.take("seed")? {
            c.seed = v;
        }
        if let Some(v) = kv.take("max_iterations")? {
            c.max_iterations = v;
        }
        if let Some(v) = kv.take("convergence_tol")? {
            c.convergence_tol = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn keys() -> &'static [&'static str] {
        &KEYS
    }
}

fn interval_from(line: usize, key: &str, tokens: &[String]) -> Result<Interval> {
    match tokens {
        [lo, hi] => Ok(Interval::new(
            parse_f64(line, key, lo)?,
            parse_f64(line, key, hi)?,
        )),
        _ => Err(Error::Config {
            line,
            message: format!("`{key}` needs exactly two numbers"),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: AckermanParams,
    /// Mean absolute residual, mg/dl.
    pub error_abs: f64,
    /// `G_i - G_i^pred` at the five sample times.
    pub residuals: [f64; 5],
    pub objective: f64,
    /// At least one start met the simplex-diameter criterion.
    pub converged: bool,
    pub starts_tried: usize,
    /// Simplex iterations summed over all starts.
    pub iterations: usize,
}

/// Resolved search box for one record.
#[derive(Debug, Clone, Copy)]
struct SearchBox {
    lo: [f64; 5],
    width: [f64; 5],
    periodic: [bool; 5],
}

impl SearchBox {
    fn new(record: &OgttRecord, config: &FitConfig) -> Self {
        let bounds = [
            config.g0.resolve(record.fasting()),
            config.a,
            config.alpha,
            config.omega,
            config.delta,
        ];
        Self {
            lo: bounds.map(|b| b.lo),
            width: bounds.map(|b| b.width()),
            periodic: [false, false, false, false, config.delta_is_circle()],
        }
    }

    fn to_params(self, u: &[f64; 5]) -> AckermanParams {
        let x: [f64; 5] = std::array::from_fn(|i| {
            let ui = if self.periodic[i] {
                u[i].rem_euclid(1.0)
            } else {
                u[i]
            };
            self.lo[i] + ui * self.width[i]
        });
        AckermanParams {
            g0: x[0],
            a: x[1],
            alpha: x[2],
            omega: x[3],
            delta: normalize_phase(x[4]),
        }
    }

    fn to_unit(self, p: &AckermanParams) -> [f64; 5] {
        let x = p.as_array();
        std::array::from_fn(|i| {
            let u = (x[i] - self.lo[i]) / self.width[i];
            if self.periodic[i] {
                u.rem_euclid(1.0)
            } else {
                u.clamp(0.0, 1.0)
            }
        })
    }
}

/// Prior penalty (without the λ factor) of `params` for `record`.
pub fn prior_penalty(record: &OgttRecord, params: &AckermanParams, config: &FitConfig) -> f64 {
    let g0 = config.g0.resolve(record.fasting());
    let sq = |v: f64, center: f64, width: f64| ((v - center) / width).powi(2);
    sq(params.g0, record.fasting(), g0.width())
        + sq(params.alpha, config.alpha.center(), config.alpha.width())
        + sq(params.omega, config.omega.center(), config.omega.width())
}

/// The penalized least-squares objective minimized by [`fit`].
pub fn objective(record: &OgttRecord, params: &AckermanParams, config: &FitConfig) -> f64 {
    let sse: f64 = SAMPLE_TIMES
        .iter()
        .zip(&record.g)
        .map(|(&t, &g)| (g - params.value_at(t)).powi(2))
        .sum();
    sse + config.prior_weight * prior_penalty(record, params, config)
}

/// Starting points in the unit box: a data-driven guess followed by a
/// seed-rotated Halton sequence. Start `k` does not depend on `n_starts`, so
/// more starts only ever add candidates.
fn starting_points(record: &OgttRecord, config: &FitConfig, search: &SearchBox) -> Vec<[f64; 5]> {
    const PRIMES: [u32; 5] = [2, 3, 5, 7, 11];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shift: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());

    let mut starts = Vec::with_capacity(config.n_starts);
    starts.push(search.to_unit(&heuristic_guess(record)));
    for k in 1..config.n_starts {
        starts.push(std::array::from_fn(|d| {
            (radical_inverse(k as u64, PRIMES[d]) + shift[d]).fract()
        }));
    }
    starts
}

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let base = base as u64;
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

/// Baseline at the fasting value, a quarter period at the observed peak.
fn heuristic_guess(record: &OgttRecord) -> AckermanParams {
    let (peak_idx, peak) =
        record.g.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let t_peak = SAMPLE_TIMES[peak_idx].max(30.0);
    AckermanParams {
        g0: record.fasting(),
        a: (peak - record.fasting()).max(1.0) * 1.5,
        alpha: 0.015,
        omega: PI / (2.0 * t_peak),
        delta: PI / 2.0,
    }
}

/// Orders candidate fits: lower objective, then smaller ω, then smaller |δ|.
fn better(a: &FitResult, b: &FitResult) -> bool {
    a.objective
        .total_cmp(&b.objective)
        .then(a.params.omega.total_cmp(&b.params.omega))
        .then(a.params.delta.abs().total_cmp(&b.params.delta.abs()))
        .is_lt()
}

fn finish(record: &OgttRecord, params: AckermanParams, config: &FitConfig) -> FitResult {
    let res = residuals(record, &params).expect("fitted parameters are valid");
    FitResult {
        params,
        error_abs: mean_abs(&res),
        residuals: res,
        objective: objective(record, &params, config),
        converged: false,
        starts_tried: 0,
        iterations: 0,
    }
}

/// Fits one record. Deterministic in `(record, config)`.
///
/// Each start runs the simplex until its diameter drops below
/// `convergence_tol`, restarting from the incumbent while that still improves
/// the objective; all restarts share the start's iteration budget.
pub fn fit(record: &OgttRecord, config: &FitConfig) -> Result<FitResult> {
    record.validate()?;
    config.validate()?;

    let search = SearchBox::new(record, config);
    let f = |u: &[f64; 5]| objective(record, &search.to_params(u), config);

    let mut best: Option<FitResult> = None;
    let mut any_converged = false;
    let mut total_iterations = 0;
    for start in starting_points(record, config, &search) {
        let mut budget = config.max_iterations;
        let mut x = start;
        let mut fx = f64::INFINITY;
        let mut converged = false;
        while budget > 0 {
            let run = minimize(
                f,
                x,
                search.periodic,
                &SimplexOptions {
                    max_iterations: budget,
                    diameter_tol: config.convergence_tol,
                    initial_step: if fx.is_finite() { 0.02 } else { 0.1 },
                },
            );
            budget -= run.iterations.min(budget);
            total_iterations += run.iterations;
            converged = run.converged;
            let improved = run.f < fx - 1e-12 * fx.abs().max(1e-12);
            if run.f < fx {
                x = run.x;
                fx = run.f;
            }
            if !improved || !run.converged || run.iterations == 0 {
                break;
            }
        }
        any_converged |= converged;
        let candidate = finish(record, search.to_params(&x), config);
        if best.as_ref().is_none_or(|b| better(&candidate, b)) {
            best = Some(candidate);
        }
    }

    let mut best = best.expect("n_starts >= 1");
    best.converged = any_converged;
    best.starts_tried = config.n_starts;
    best.iterations = total_iterations;
    if any_converged {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            best: Box::new(best),
        })
    }
}
