//! Closed-form model of the downlink/uplink throughput ratio as a function of
//! the access-point buffer size.
//!
//! The access point is modelled as an M/M/1/B queue whose arrivals are the
//! uplink ACK stream plus the downlink data stream and whose service rate is
//! one uplink station's rate. Downlink flows follow the square-root TCP rate
//! law with an additive share `E` of any buffer space left over after the
//! uplink windows. Eliminating the loss probability yields a transcendental
//! equation in `R = D*R_D / (U*R_U)`:
//!
//! ```text
//! (1 + R)^B * P(R) = 3 D^2 / U^B,     P(R) = c3 R^3 + c2 R^2 + c1 R + c0
//! ```
//!
//! which is solved three ways (see [`ModelVariant`]).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::poly::{self, RealPolynomial, SolveError};

/// Candidates at or below this value are never accepted as a ratio.
pub const MIN_RATIO: f64 = 1e-9;

/// Width below which the M/M/1/B formula switches to its `rho -> 1` limit.
pub const RHO_UNITY_BAND: f64 = 1e-9;

/// Powers with exponent above this are evaluated in log space.
const LOG_SPACE_EXPONENT: u32 = 200;

/// Brackets used by the transcendental solver.
pub const EXACT_SCAN_CELLS: usize = 10_000;
pub const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("scenario needs at least one uplink and one downlink station (U={up}, D={down})")]
    Degenerate { up: u32, down: u32 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("ratio must be positive, got {0}")]
    NonPositiveRatio(f64),
    #[error("utilization must be positive, got {0}")]
    NonPositiveUtilization(f64),
    #[error("probability {0} outside (0, 1]")]
    InvalidProbability(f64),
    #[error("round-trip time must be positive, got {0}")]
    InvalidRtt(f64),
    #[error("extra service must be non-negative, got {0}")]
    InvalidExtraService(f64),
    #[error("downlink rate term U*w*R - D*E = {0} is not positive")]
    NonPhysical(f64),
    #[error("{0} overflows double precision")]
    NumericRange(&'static str),
    #[error("no physical root among {0} candidates")]
    NoPhysicalRoot(usize),
    #[error(transparent)]
    Solver(#[from] SolveError),
}

/// Model inputs shared with the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub up: u32,
    pub down: u32,
    pub buffer: u32,
    pub window: u32,
    /// Cancels out of the ratio equations; kept for the rate formulas.
    pub rtt: f64,
}

impl ScenarioParams {
    pub const DEFAULT_WINDOW: u32 = 42;
    pub const DEFAULT_RTT: f64 = 0.1;

    pub fn new(up: u32, down: u32, window: u32, buffer: u32) -> Self {
        Self {
            up,
            down,
            buffer,
            window,
            rtt: Self::DEFAULT_RTT,
        }
    }

    pub fn with_buffer(self, buffer: u32) -> Self {
        Self { buffer, ..self }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.up + self.down == 0 {
            return Err(ModelError::InvalidScenario(
                "U + D must be at least 1".into(),
            ));
        }
        if self.buffer == 0 {
            return Err(ModelError::InvalidScenario(
                "buffer must be at least 1".into(),
            ));
        }
        if self.window == 0 {
            return Err(ModelError::InvalidScenario(
                "window must be at least 1".into(),
            ));
        }
        if !(self.rtt > 0.0) || !self.rtt.is_finite() {
            return Err(ModelError::InvalidRtt(self.rtt));
        }
        Ok(())
    }

    /// Analytic operations need both directions populated.
    fn require_two_way(&self) -> Result<(), ModelError> {
        self.validate()?;
        if self.up == 0 || self.down == 0 {
            return Err(ModelError::Degenerate {
                up: self.up,
                down: self.down,
            });
        }
        Ok(())
    }

    fn u(&self) -> f64 {
        f64::from(self.up)
    }
    fn d(&self) -> f64 {
        f64::from(self.down)
    }
    fn w(&self) -> f64 {
        f64::from(self.window)
    }
    fn b(&self) -> f64 {
        f64::from(self.buffer)
    }
}

/// Buffer share credited to each downlink flow once the uplink windows fit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ExtraService(pub f64);

impl ExtraService {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn extra_service(p: &ScenarioParams) -> Result<ExtraService, ModelError> {
    p.require_two_way()?;
    let spare = i64::from(p.buffer) - i64::from(p.up) * i64::from(p.window);
    if spare > 0 {
        Ok(ExtraService(3.0 * spare as f64 / (4.0 * p.d())))
    } else {
        Ok(ExtraService(0.0))
    }
}

/// `rho = U (1 + R)`.
pub fn utilization(up: u32, ratio: f64) -> Result<f64, ModelError> {
    if up == 0 {
        return Err(ModelError::Degenerate { up, down: 0 });
    }
    if !(ratio > 0.0) {
        return Err(ModelError::NonPositiveRatio(ratio));
    }
    Ok(f64::from(up) * (1.0 + ratio))
}

/// Probability that an M/M/1/B queue is full.
pub fn blocking_probability(rho: f64, buffer: u32) -> Result<f64, ModelError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(ModelError::NonPositiveUtilization(rho));
    }
    if buffer == 0 {
        return Err(ModelError::InvalidScenario(
            "buffer must be at least 1".into(),
        ));
    }
    let b = f64::from(buffer);
    if (rho - 1.0).abs() < RHO_UNITY_BAND {
        return Ok(1.0 / (b + 1.0));
    }
    let l = rho.ln();
    if l > 0.0 {
        // (1 - 1/rho) / (1 - rho^-(B+1)) avoids overflow of rho^B.
        Ok(-(-l).exp_m1() / -(-(b + 1.0) * l).exp_m1())
    } else {
        Ok(-l.exp_m1() * (b * l).exp() / -((b + 1.0) * l).exp_m1())
    }
}

fn check_probability(pr: f64) -> Result<(), ModelError> {
    if pr > 0.0 && pr <= 1.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidProbability(pr))
    }
}

fn check_rtt(rtt: f64) -> Result<(), ModelError> {
    if rtt > 0.0 && rtt.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidRtt(rtt))
    }
}

/// Square-root TCP rate, packets per second.
pub fn padhye_rate(pr: f64, rtt: f64) -> Result<f64, ModelError> {
    check_probability(pr)?;
    check_rtt(rtt)?;
    Ok((3.0 / (2.0 * pr)).sqrt() / rtt)
}

/// Square-root rate plus the extra-service share.
pub fn downlink_rate(pr: f64, extra: ExtraService, rtt: f64) -> Result<f64, ModelError> {
    check_probability(pr)?;
    check_rtt(rtt)?;
    if !(extra.0 >= 0.0) {
        return Err(ModelError::InvalidExtraService(extra.0));
    }
    Ok(((3.0 / (2.0 * pr)).sqrt() + extra.0) / rtt)
}

/// `S = U w R - D E`, proportional to the downlink square-root rate.
pub fn downlink_term(p: &ScenarioParams, extra: ExtraService, ratio: f64) -> f64 {
    p.u() * p.w() * ratio - p.d() * extra.0
}

/// Unclamped loss probability implied by a ratio: `3 D^2 / (2 S^2)`.
pub fn loss_from_ratio(
    p: &ScenarioParams,
    extra: ExtraService,
    ratio: f64,
) -> Result<f64, ModelError> {
    p.require_two_way()?;
    let s = downlink_term(p, extra, ratio);
    if !(s > 0.0) {
        return Err(ModelError::NonPhysical(s));
    }
    Ok(3.0 * p.d() * p.d() / (2.0 * s * s))
}

/// Coefficients of `P(R) = c3 R^3 + c2 R^2 + c1 R + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseCubic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl BaseCubic {
    pub fn eval(&self, r: f64) -> f64 {
        ((self.c3 * r + self.c2) * r + self.c1) * r + self.c0
    }

    pub fn derivative_at(&self, r: f64) -> f64 {
        (3.0 * self.c3 * r + 2.0 * self.c2) * r + self.c1
    }

    pub fn as_polynomial(&self) -> RealPolynomial {
        RealPolynomial::new(vec![self.c0, self.c1, self.c2, self.c3])
    }
}

pub fn base_cubic_coeffs(p: &ScenarioParams, extra: ExtraService) -> Result<BaseCubic, ModelError> {
    p.require_two_way()?;
    let (u, d, w, e) = (p.u(), p.d(), p.w(), extra.0);
    Ok(BaseCubic {
        c3: -2.0 * u.powi(3) * w * w,
        c2: 4.0 * d * e * u * u * w - 2.0 * u.powi(3) * w * w + 2.0 * u * u * w * w,
        c1: 3.0 * u * d * d - 2.0 * u * d * d * e * e + 4.0 * d * e * u * u * w
            - 4.0 * d * e * u * w,
        c0: 3.0 * u * d * d - 2.0 * u * d * d * e * e + 2.0 * d * d * e * e,
    })
}

/// Cubic obtained by differentiating the log of the transcendental equation:
/// `B P(R) + (1 + R) P'(R) = 0`.
pub fn new_model_polynomial(p: &ScenarioParams) -> Result<RealPolynomial, ModelError> {
    let extra = extra_service(p)?;
    let BaseCubic { c0, c1, c2, c3 } = base_cubic_coeffs(p, extra)?;
    let b = p.b();
    Ok(RealPolynomial::new(vec![
        c1 + b * c0,
        2.0 * c2 + c1 + b * c1,
        3.0 * c3 + 2.0 * c2 + b * c2,
        b * c3 + 3.0 * c3,
    ]))
}

/// `3 D^2 / U^B`, the right-hand side of the transcendental equation.
fn rhs_constant(p: &ScenarioParams) -> f64 {
    let three_d2 = 3.0 * p.d() * p.d();
    if p.buffer <= LOG_SPACE_EXPONENT {
        three_d2 / p.u().powi(p.buffer as i32)
    } else {
        (three_d2.ln() - p.b() * p.u().ln()).exp()
    }
}

/// Quartic from replacing `(1 + R)^B` by `1 + B R`:
/// `(1 + B R) P(R) - 3 D^2 / U^B = 0`.
///
/// The published expansion of this quartic is written in undeclared symbols
/// `x` and `y`. They are read as `U` and `D` here; that is the only reading
/// under which its coefficients agree with this expansion.
pub fn old_model_polynomial(p: &ScenarioParams) -> Result<RealPolynomial, ModelError> {
    let extra = extra_service(p)?;
    let BaseCubic { c0, c1, c2, c3 } = base_cubic_coeffs(p, extra)?;
    let b = p.b();
    let k = rhs_constant(p);
    if !k.is_finite() {
        return Err(ModelError::NumericRange("3D^2/U^B"));
    }
    Ok(RealPolynomial::new(vec![
        c0 - k,
        c1 + b * c0,
        c2 + b * c1,
        c3 + b * c2,
        b * c3,
    ]))
}

/// `(1 + R)^B P(R) - 3 D^2 / U^B`.
pub fn eq13_residual(p: &ScenarioParams, ratio: f64) -> Result<f64, ModelError> {
    let extra = extra_service(p)?;
    let cubic = base_cubic_coeffs(p, extra)?;
    residual_with(p, &cubic, ratio)
}

fn residual_with(p: &ScenarioParams, cubic: &BaseCubic, ratio: f64) -> Result<f64, ModelError> {
    let poly = cubic.eval(ratio);
    let k = rhs_constant(p);
    let growth = if p.buffer <= LOG_SPACE_EXPONENT {
        poly * (1.0 + ratio).powi(p.buffer as i32)
    } else if poly == 0.0 {
        0.0
    } else {
        poly.signum() * (p.b() * ratio.ln_1p() + poly.abs().ln()).exp()
    };
    if !growth.is_finite() {
        return Err(ModelError::NumericRange("(1+R)^B"));
    }
    Ok(growth - k)
}

/// `P(R) - 3 D^2 / (U (1 + R))^B`: the residual divided by `(1 + R)^B`.
/// Same sign and roots as [`eq13_residual`] without the overflow.
fn scaled_residual(p: &ScenarioParams, cubic: &BaseCubic, ratio: f64) -> f64 {
    let three_d2 = 3.0 * p.d() * p.d();
    let rho = p.u() * (1.0 + ratio);
    cubic.eval(ratio) - (three_d2.ln() - p.b() * rho.ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelVariant {
    /// Roots of the derivative cubic.
    NewCubic,
    /// Roots of the `1 + B R` linearised quartic.
    OldQuartic,
    /// Bracketed bisection on the transcendental equation itself.
    ExactTranscendental,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [
        ModelVariant::NewCubic,
        ModelVariant::OldQuartic,
        ModelVariant::ExactTranscendental,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::NewCubic => "new_cubic",
            ModelVariant::OldQuartic => "old_quartic",
            ModelVariant::ExactTranscendental => "exact_transcendental",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "new_cubic" | "new" => Ok(ModelVariant::NewCubic),
            "old_quartic" | "old" => Ok(ModelVariant::OldQuartic),
            "exact_transcendental" | "exact" => Ok(ModelVariant::ExactTranscendental),
            other => Err(format!("unknown model variant `{other}`")),
        }
    }
}

/// Why a real root was not chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// `R <= MIN_RATIO`.
    NonPositive,
    /// `U w R - D E <= 0`: negative downlink rate.
    NonPhysical,
    /// Physical, but another root has a smaller residual.
    Outranked,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::NonPositive => "non_positive",
            Rejection::NonPhysical => "non_physical",
            Rejection::Outranked => "outranked",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCandidate {
    pub root: f64,
    /// `None` when the residual could not be evaluated in range.
    pub residual: Option<f64>,
    /// `None` for the accepted root.
    pub rejection: Option<Rejection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSolution {
    pub variant: ModelVariant,
    /// Total downlink over total uplink throughput.
    pub ratio_down_up: f64,
    /// Total uplink over total downlink throughput.
    pub ratio_up_down: f64,
    /// Loss probability clamped to (0, 1].
    pub loss_prob: f64,
    pub pr_raw: f64,
    /// Set when `pr_raw > 1`.
    pub pr_clamped: bool,
    pub utilization: f64,
    pub extra_service: ExtraService,
    pub residual_eq13: f64,
    pub candidates: Vec<RootCandidate>,
}

fn exact_roots(
    p: &ScenarioParams,
    cubic: &BaseCubic,
    extra: ExtraService,
) -> Result<Vec<f64>, ModelError> {
    let r_max = f64::max(2.0, 2.0 * p.d() * extra.0 / (p.u() * p.w()) + 2.0);
    let lo = MIN_RATIO;
    let step = (r_max - lo) / EXACT_SCAN_CELLS as f64;
    let g = |r: f64| scaled_residual(p, cubic, r);
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut g_prev = g(lo);
    for i in 1..=EXACT_SCAN_CELLS {
        let x = if i == EXACT_SCAN_CELLS {
            r_max
        } else {
            lo + step * i as f64
        };
        let gx = g(x);
        if gx == 0.0 {
            roots.push(x);
        } else if g_prev != 0.0 && g_prev.signum() != gx.signum() {
            roots.push(poly::bracket_bisect(g, x_prev, x, EXACT_TOL)?);
        }
        x_prev = x;
        g_prev = gx;
    }
    Ok(roots)
}

/// Solves one model variant and applies the root acceptance policy:
/// discard `R <= MIN_RATIO` and `U w R - D E <= 0`, then keep the root with
/// the smallest transcendental-equation residual (ties go to the smaller R).
pub fn solve_model(p: &ScenarioParams, variant: ModelVariant) -> Result<ModelSolution, ModelError> {
    let extra = extra_service(p)?;
    let cubic = base_cubic_coeffs(p, extra)?;
    let raw: Vec<f64> = match variant {
        ModelVariant::NewCubic => new_model_polynomial(p)?.real_roots()?.roots,
        ModelVariant::OldQuartic => old_model_polynomial(p)?.real_roots()?.roots,
        ModelVariant::ExactTranscendental => exact_roots(p, &cubic, extra)?,
    };

    let mut candidates: Vec<RootCandidate> = raw
        .iter()
        .map(|&root| {
            let rejection = if !(root > MIN_RATIO) {
                Some(Rejection::NonPositive)
            } else if !(downlink_term(p, extra, root) > 0.0) {
                Some(Rejection::NonPhysical)
            } else {
                None
            };
            RootCandidate {
                root,
                residual: residual_with(p, &cubic, root).ok(),
                rejection,
            }
        })
        .collect();

    let best = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.rejection.is_none())
        .min_by(|(_, a), (_, b)| {
            let ra = a.residual.map_or(f64::INFINITY, f64::abs);
            let rb = b.residual.map_or(f64::INFINITY, f64::abs);
            ra.total_cmp(&rb).then(a.root.total_cmp(&b.root))
        })
        .map(|(i, _)| i);
    let Some(best) = best else {
        return Err(ModelError::NoPhysicalRoot(candidates.len()));
    };
    for (i, c) in candidates.iter_mut().enumerate() {
        if i != best && c.rejection.is_none() {
            c.rejection = Some(Rejection::Outranked);
        }
    }

    let ratio = candidates[best].root;
    let residual = candidates[best]
        .residual
        .ok_or(ModelError::NumericRange("(1+R)^B"))?;
    let pr_raw = loss_from_ratio(p, extra, ratio)?;
    Ok(ModelSolution {
        variant,
        ratio_down_up: ratio,
        ratio_up_down: 1.0 / ratio,
        loss_prob: pr_raw.min(1.0),
        pr_raw,
        pr_clamped: pr_raw > 1.0,
        utilization: utilization(p.up, ratio)?,
        extra_service: extra,
        residual_eq13: residual,
        candidates,
    })
}
