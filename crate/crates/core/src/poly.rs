//! Real-root extraction for polynomials of degree at most four.
//!
//! The closed-form paths (quadratic formula, Cardano/trigonometric cubic,
//! Ferrari quartic) are the production route. [`scan_real_roots`] and
//! [`bracket_bisect`] form an independent grid-and-bisection path that only
//! evaluates the function, and is used to cross-check the closed forms.

use std::f64::consts::PI;

use thiserror::Error;

/// Roots closer than `MERGE_TOL * (1 + |r|)` are reported as one root with
/// a multiplicity.
pub const MERGE_TOL: f64 = 1e-8;

/// Leading coefficients smaller than this fraction of the largest
/// coefficient are treated as zero and the degree drops.
const DEGENERATE_LEADING: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("expected {expected} coefficients, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("degree {0} is not supported (maximum is 4)")]
    DegreeTooHigh(usize),
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid search interval [{lo}, {hi}] (tol {tol}, grid {grid})")]
    InvalidInterval {
        lo: f64,
        hi: f64,
        tol: f64,
        grid: usize,
    },
}

/// A polynomial with real coefficients stored in ascending order: index `k`
/// holds the coefficient of `x^k`. Trailing zeros are trimmed on
/// construction so `coeffs().len() == degree() + 1` for nonzero
/// polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn derivative(&self) -> RealPolynomial {
        if self.coeffs.len() == 1 {
            return RealPolynomial::new(vec![0.0]);
        }
        let d: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        RealPolynomial::new(d)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// All real roots, dispatching on degree to the closed forms.
    pub fn real_roots(&self) -> Result<RootSet, SolveError> {
        if self.degree() > 4 {
            return Err(SolveError::DegreeTooHigh(self.degree()));
        }
        closed_form_roots(&self.coeffs)
    }
}

/// How a [`RootSet`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMethod {
    ClosedForm,
    Bisection,
}

/// Distinct real roots in ascending order with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub roots: Vec<f64>,
    pub multiplicities: Vec<u32>,
    pub method: RootMethod,
}

impl RootSet {
    fn from_raw(mut raw: Vec<f64>, method: RootMethod) -> Self {
        raw.retain(|r| r.is_finite());
        raw.sort_by(f64::total_cmp);
        let mut roots: Vec<f64> = Vec::with_capacity(raw.len());
        let mut multiplicities: Vec<u32> = Vec::with_capacity(raw.len());
        // Cluster members are averaged weighted by how many raw roots they hold.
        for r in raw {
            match roots.last_mut() {
                Some(last) if (r - *last).abs() <= MERGE_TOL * (1.0 + last.abs()) => {
                    let m = multiplicities.last_mut().unwrap();
                    *last = (*last * f64::from(*m) + r) / f64::from(*m + 1);
                    *m += 1;
                }
                _ => {
                    roots.push(r);
                    multiplicities.push(1);
                }
            }
        }
        Self {
            roots,
            multiplicities,
            method,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Real roots of `c0 + c1 x + c2 x^2 + c3 x^3`.
pub fn solve_cubic(coeffs: &[f64]) -> Result<RootSet, SolveError> {
    if coeffs.len() != 4 {
        return Err(SolveError::WrongLength {
            expected: 4,
            got: coeffs.len(),
        });
    }
    closed_form_roots(coeffs)
}

/// Real roots of `c0 + c1 x + c2 x^2 + c3 x^3 + c4 x^4`.
pub fn solve_quartic(coeffs: &[f64]) -> Result<RootSet, SolveError> {
    if coeffs.len() != 5 {
        return Err(SolveError::WrongLength {
            expected: 5,
            got: coeffs.len(),
        });
    }
    closed_form_roots(coeffs)
}

fn closed_form_roots(coeffs: &[f64]) -> Result<RootSet, SolveError> {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(SolveError::ZeroPolynomial);
    }
    let mut hi = coeffs.len();
    while hi > 1 && coeffs[hi - 1].abs() < DEGENERATE_LEADING * scale {
        hi -= 1;
    }
    let active = &coeffs[..hi];
    // Exact zero low-order coefficients each contribute a root at 0.
    let zeros = active.iter().take_while(|&&c| c == 0.0).count();
    let reduced = &active[zeros..];

    let mut raw = vec![0.0; zeros];
    raw.extend(deflated_roots(reduced, reduced)?);
    Ok(RootSet::from_raw(raw, RootMethod::ClosedForm))
}

fn direct_roots(c: &[f64]) -> Result<Vec<f64>, SolveError> {
    Ok(match c.len() {
        0 | 1 => Vec::new(),
        2 => vec![-c[0] / c[1]],
        3 => quadratic(c[2], c[1], c[0]),
        4 => cubic_monic(c[2] / c[3], c[1] / c[3], c[0] / c[3]),
        5 => quartic_monic(c[3] / c[4], c[2] / c[4], c[1] / c[4], c[0] / c[4]),
        n => return Err(SolveError::DegreeTooHigh(n - 1)),
    })
}

/// Closed-form roots of `c`, polished against `original`. Above degree two
/// the largest root is divided out and the quotient solved again: when root
/// magnitudes differ widely the shifted closed forms lose the small roots.
fn deflated_roots(c: &[f64], original: &[f64]) -> Result<Vec<f64>, SolveError> {
    let found: Vec<f64> = direct_roots(c)?
        .into_iter()
        .map(|r| polish(original, r))
        .collect();
    let Some(&big) = found.iter().max_by(|x, y| x.abs().total_cmp(&y.abs())) else {
        return Ok(found);
    };
    if c.len() <= 3 || big == 0.0 || !big.is_finite() {
        return Ok(found);
    }
    // Backward division by (x - big), stable for the largest root.
    let n = c.len() - 1;
    let mut quotient = vec![0.0; n];
    quotient[0] = -c[0] / big;
    for k in 1..n {
        quotient[k] = (quotient[k - 1] - c[k]) / big;
    }
    let mut roots = deflated_roots(&quotient, original)?;
    roots.push(big);
    Ok(roots)
}

/// Newton refinement on the original coefficients; a step is kept only if
/// it lowers the residual.
fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    let deriv: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect();
    let mut fx = horner(coeffs, x).abs();
    for _ in 0..16 {
        if fx == 0.0 {
            break;
        }
        let d = horner(&deriv, x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - horner(coeffs, x) / d;
        let fn_ = horner(coeffs, next).abs();
        if !(fn_ < fx) {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    let noise = 8.0 * f64::EPSILON * (b * b + (4.0 * a * c).abs());
    if disc < -noise {
        return Vec::new();
    }
    if disc <= noise {
        let r = -b / (2.0 * a);
        return vec![r, r];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

/// `x^3 + a x^2 + b x + c`
fn cubic_monic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    // Rounding noise carried into the discriminant by p and q.
    let q_mag = (2.0 * a * a * a / 27.0).abs() + (a * b / 3.0).abs() + c.abs();
    let p_mag = b.abs() + a * a / 3.0;
    let noise = 16.0 * f64::EPSILON * (half_q.abs() * q_mag + third_p * third_p * p_mag);

    let depressed: Vec<f64> = if disc > noise {
        let root = disc.sqrt();
        let big = -half_q.signum() * (half_q.abs() + root).cbrt();
        let t = if big == 0.0 {
            0.0
        } else {
            big - p / (3.0 * big)
        };
        vec![t]
    } else if disc < -noise {
        let r = (-third_p).sqrt();
        let cos_arg = (-half_q / (r * r * r)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos();
        (0..3)
            .map(|k| 2.0 * r * ((phi + 2.0 * PI * f64::from(k)) / 3.0).cos())
            .collect()
    } else if p.abs() <= f64::EPSILON * p_mag.max(f64::MIN_POSITIVE) {
        vec![0.0, 0.0, 0.0]
    } else {
        let single = 3.0 * q / p;
        let double = -1.5 * q / p;
        vec![single, double, double]
    };
    depressed.into_iter().map(|t| t - shift).collect()
}

/// `x^4 + a x^3 + b x^2 + c x + d`, by Ferrari's resolvent cubic.
fn quartic_monic(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = a / 4.0;
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;

    // 8m^3 + 8p m^2 + (2p^2 - 8r) m - q^2 = 0; the largest root is positive
    // whenever q != 0.
    let resolvent = cubic_monic(p, p * p / 4.0 - r, -q * q / 8.0);
    let m = resolvent
        .iter()
        .copied()
        .filter(|m| m.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mag = p.abs() + r.abs().sqrt() + q.abs().cbrt();

    let depressed: Vec<f64> = if !(m > f64::EPSILON * mag * mag) {
        // Biquadratic: y^4 + p y^2 + r = 0.
        quadratic(1.0, p, r)
            .into_iter()
            .flat_map(|z| {
                if z > 0.0 {
                    let s = z.sqrt();
                    vec![s, -s]
                } else if z >= -f64::EPSILON * mag {
                    vec![0.0, 0.0]
                } else {
                    Vec::new()
                }
            })
            .collect()
    } else {
        let s = (2.0 * m).sqrt();
        let k = q / (2.0 * s);
        let mut ys = quadratic(1.0, -s, p / 2.0 + m + k);
        ys.extend(quadratic(1.0, s, p / 2.0 + m - k));
        ys
    };
    depressed.into_iter().map(|y| y - shift).collect()
}

/// Bisection on a bracketing interval. Stops once the bracket is no wider
/// than `tol` or the midpoint no longer moves, and returns the midpoint.
pub fn bracket_bisect<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, SolveError>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(SolveError::InvalidInterval {
            lo,
            hi,
            tol,
            grid: 0,
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(SolveError::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / 2.0)
}

/// Evaluates `f` on `grid` uniformly spaced points spanning `[lo, hi]` and
/// bisects every cell that shows a sign change. Grid points where `f` is
/// exactly zero are reported directly. Tangent roots without a sign change
/// are not detected.
pub fn scan_real_roots<F>(f: F, lo: f64, hi: f64, grid: usize) -> Result<RootSet, SolveError>
where
    F: Fn(f64) -> f64,
{
    if grid < 2 || !(lo < hi) {
        return Err(SolveError::InvalidInterval {
            lo,
            hi,
            tol: 0.0,
            grid,
        });
    }
    let step = (hi - lo) / (grid - 1) as f64;
    let point = |i: usize| {
        if i == grid - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let tol = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    let mut raw = Vec::new();
    let mut x_prev = point(0);
    let mut f_prev = f(x_prev);
    if f_prev == 0.0 {
        raw.push(x_prev);
    }
    for i in 1..grid {
        let x = point(i);
        let fx = f(x);
        if fx == 0.0 {
            raw.push(x);
        } else if f_prev != 0.0
            && f_prev.signum() != fx.signum()
            && !fx.is_nan()
            && !f_prev.is_nan()
        {
            raw.push(bracket_bisect(&f, x_prev, x, tol)?);
        }
        x_prev = x;
        f_prev = fx;
    }
    Ok(RootSet::from_raw(raw, RootMethod::Bisection))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_roots(set: &RootSet, expected: &[f64], tol: f64) {
        assert_eq!(set.roots.len(), expected.len(), "{set:?}");
        for (r, e) in set.roots.iter().zip(expected) {
            assert!((r - e).abs() <= tol, "{r} vs {e}");
        }
    }

    #[test]
    fn cubic_three_distinct() {
        let set = solve_cubic(&[-6.0, 11.0, -6.0, 1.0]).unwrap();
        assert_roots(&set, &[1.0, 2.0, 3.0], 1e-12);
        assert_eq!(set.multiplicities, vec![1, 1, 1]);
    }

    #[test]
    fn cubic_triple_zero() {
        let set = solve_cubic(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(set.roots, vec![0.0]);
        assert_eq!(set.multiplicities, vec![3]);
    }

    #[test]
    fn cubic_double_root_kept() {
        // (x-1)^2 (x-2)
        let set = solve_cubic(&[-2.0, 5.0, -4.0, 1.0]).unwrap();
        assert_roots(&set, &[1.0, 2.0], 1e-7);
        assert_eq!(set.multiplicities, vec![2, 1]);
    }

    #[test]
    fn cubic_model_polynomial_single_positive_root() {
        // Oracle: bisection on (0, 0.1) where f(0) = 63 > 0 and f(0.1) < 0.
        let c = [63.0, 63.0, -10584.0, -81144.0];
        let oracle = bracket_bisect(|x| horner(&c, x), 0.0, 0.1, 1e-14).unwrap();
        let set = solve_cubic(&c).unwrap();
        let positive: Vec<f64> = set.roots.iter().copied().filter(|&r| r > 0.0).collect();
        assert_eq!(positive.len(), 1);
        assert!((positive[0] - oracle).abs() < 1e-10);
        assert!((positive[0] - 0.0650).abs() < 5e-4);
    }

    #[test]
    fn cubic_degenerate_leading_delegates() {
        let set = solve_cubic(&[2.0, -3.0, 1.0, 0.0]).unwrap();
        assert_roots(&set, &[1.0, 2.0], 1e-12);
        let set = solve_cubic(&[4.0, -2.0, 0.0, 0.0]).unwrap();
        assert_roots(&set, &[2.0], 0.0);
        assert!(solve_cubic(&[1.0, 0.0, 0.0, 0.0]).unwrap().is_empty());
    }

    #[test]
    fn all_zero_is_an_error() {
        assert_eq!(solve_cubic(&[0.0; 4]), Err(SolveError::ZeroPolynomial));
        assert_eq!(solve_quartic(&[0.0; 5]), Err(SolveError::ZeroPolynomial));
    }

    #[test]
    fn quartic_four_distinct() {
        let set = solve_quartic(&[24.0, -50.0, 35.0, -10.0, 1.0]).unwrap();
        assert_roots(&set, &[1.0, 2.0, 3.0, 4.0], 1e-12);
    }

    #[test]
    fn quartic_no_real_roots() {
        assert!(solve_quartic(&[1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn quartic_biquadratic() {
        // (x^2 - 1)(x^2 - 4)
        let set = solve_quartic(&[4.0, 0.0, -5.0, 0.0, 1.0]).unwrap();
        assert_roots(&set, &[-2.0, -1.0, 1.0, 2.0], 1e-12);
    }

    #[test]
    fn quartic_with_zero_root() {
        let c = [0.0, 63.0, 60.0, -3528.0, -70560.0];
        let set = solve_quartic(&c).unwrap();
        assert!(set.roots.contains(&0.0));
        // Oracle on the cubic factor after dividing out x.
        let oracle = bracket_bisect(|x| horner(&c[1..], x), 0.08, 0.09, 1e-14).unwrap();
        assert!(set.roots.iter().any(|r| (r - oracle).abs() < 1e-10));
        assert!((oracle - 0.085).abs() < 1e-3);
    }

    #[test]
    fn quartic_degenerate_leading_delegates() {
        let set = solve_quartic(&[-6.0, 11.0, -6.0, 1.0, 0.0]).unwrap();
        assert_roots(&set, &[1.0, 2.0, 3.0], 1e-12);
    }

    #[test]
    fn quartic_double_roots() {
        // (x-1)^2 (x+2)^2
        let set = solve_quartic(&[4.0, -4.0, -3.0, 2.0, 1.0]).unwrap();
        assert_roots(&set, &[-2.0, 1.0], 1e-7);
        assert_eq!(set.multiplicities, vec![2, 2]);
    }

    #[test]
    fn bisect_examples() {
        let r = bracket_bisect(|x| x - 0.5, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert!(matches!(
            bracket_bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(SolveError::NoSignChange { .. })
        ));
        assert!(bracket_bisect(|x| x, 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn scan_examples() {
        let c = [-6.0, 11.0, -6.0, 1.0];
        let set = scan_real_roots(|x| horner(&c, x), 0.0, 4.0, 400).unwrap();
        assert_eq!(set.method, RootMethod::Bisection);
        assert_roots(&set, &[1.0, 2.0, 3.0], 1e-9);
        assert!(scan_real_roots(|_| 1.0, -1.0, 1.0, 10).unwrap().is_empty());
        assert!(scan_real_roots(|x| x, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn polynomial_normalizes_and_differentiates() {
        let p = RealPolynomial::new(vec![1.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs(), &[1.0, 2.0, 3.0]);
        assert_eq!(p.derivative().coeffs(), &[2.0, 6.0]);
        assert_eq!(p.eval(2.0), 17.0);
        assert!(RealPolynomial::new(vec![0.0, 0.0]).is_zero());
    }

    #[test]
    fn closed_form_is_deterministic() {
        let c = [1.25, -3.5, 0.75, 2.0, -0.5];
        let a = solve_quartic(&c).unwrap();
        let b = solve_quartic(&c).unwrap();
        assert_eq!(
            a.roots.iter().map(|r| r.to_bits()).collect::<Vec<_>>(),
            b.roots.iter().map(|r| r.to_bits()).collect::<Vec<_>>()
        );
    }
}
