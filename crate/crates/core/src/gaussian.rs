//! Normal-distribution primitives: standard score, series error function,
//! CDF, and a bracketed percent-point function (inverse CDF).
//!
//! The PPF solves `F(z) = q` for the standard normal with a Brent-style
//! bracketed root finder, then rescales by the distribution parameters. No
//! closed-form inverse-erf approximation is used.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use thiserror::Error;

/// Saturation threshold: beyond `|z| > 6` the error function is 1 within
/// 1e-17, far past double precision.
pub const ERF_SATURATION: f64 = 6.0;
/// Hard cap on series terms. 128 terms reach full double precision on the
/// whole `[-6, 6]` range (64 would leave ~1e-5 error near the edges).
pub const ERF_MAX_TERMS: usize = 128;
/// Relative magnitude at which the series is considered converged.
pub const ERF_SERIES_EPS: f64 = 1e-16;

/// Probability-space tolerance the returned root must satisfy.
pub const PPF_PROB_TOL: f64 = 1e-9;
/// z-space interval width at which the root finder stops iterating.
pub const PPF_Z_TOL: f64 = 1e-10;
/// Iteration cap for the root finder.
pub const PPF_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("quantile {0} is outside the open interval (0, 1)")]
    QuantileOutOfRange(f64),
    #[error("mean must be finite, got {0}")]
    InvalidMean(f64),
    #[error("variance must be positive and finite, got {0}")]
    InvalidVariance(f64),
    #[error("bracket [{lo}, {hi}] does not enclose the quantile {q}")]
    BracketInvalid { lo: f64, hi: f64, q: f64 },
    #[error("root finder did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// Location/scale of a fitted normal distribution. Variance must be
/// strictly positive; callers pass the floored running variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    mean: f64,
    variance: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self, GaussianError> {
        if !mean.is_finite() {
            return Err(GaussianError::InvalidMean(mean));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(GaussianError::InvalidVariance(variance));
        }
        Ok(GaussianParams { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Deviation of `x` from the mean in units of the standard deviation.
pub fn standard_score(x: f64, params: &GaussianParams) -> f64 {
    (x - params.mean) / params.std_dev()
}

/// Error function via the series
/// `erf(z) = (2 z e^{-z^2} / sqrt(pi)) * sum_k (2 z^2)^k / (1*3*5*...*(2k+1))`.
///
/// Exactly odd in `z`; saturates to `sign(z)` for `|z| > 6`.
pub fn erf_approx(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if z.abs() > ERF_SATURATION {
        return z.signum();
    }
    let two_z_sq = 2.0 * z * z;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 1..ERF_MAX_TERMS {
        term *= two_z_sq / (2 * k + 1) as f64;
        sum += term;
        if term < ERF_SERIES_EPS * sum {
            break;
        }
    }
    // Accumulated rounding can overshoot the saturated value by an ulp.
    (FRAC_2_SQRT_PI * z * (-z * z).exp() * sum).clamp(-1.0, 1.0)
}

/// Standard-normal CDF `F(z) = (1 + erf(z / sqrt(2))) / 2`.
///
/// Evaluated on `|z|` and mirrored, so `F(-z) == 1 - F(z)` holds bitwise.
pub fn cdf_std(z: f64) -> f64 {
    let upper = 0.5 + 0.5 * erf_approx(z.abs() / SQRT_2);
    if z.is_sign_negative() {
        1.0 - upper
    } else {
        upper
    }
}

/// CDF of the parameterized normal at `x`.
pub fn cdf(x: f64, params: &GaussianParams) -> f64 {
    cdf_std(standard_score(x, params))
}

/// z-space interval known to enclose the target quantile, plus the
/// multiplier used while expanding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub factor: f64,
}

impl Bracket {
    /// Initial half-width of the search interval.
    pub const INITIAL_HALF_WIDTH: f64 = 10.0;

    /// Expand `[-f, f]` (f = 10) outward by factors of `f` until the
    /// standard-normal CDF brackets `q`. For any `q` in (0, 1) the initial
    /// interval already suffices and the loops do not run.
    pub fn for_quantile(q: f64) -> Bracket {
        let factor = Self::INITIAL_HALF_WIDTH;
        let mut lo = -factor;
        let mut hi = factor;
        while cdf_std(lo) - q > 0.0 {
            hi = lo;
            lo *= factor;
        }
        while cdf_std(hi) - q < 0.0 {
            lo = hi;
            hi *= factor;
        }
        Bracket { lo, hi, factor }
    }
}

/// Solve `F(z) = q` for the standard normal inside `bracket`.
///
/// Brent's method: inverse-quadratic/secant steps with a bisection fallback
/// that guarantees progress. Iterates until the bracket narrows below
/// [`PPF_Z_TOL`]; the returned root satisfies `|F(z) - q| <= tol`. Stopping
/// on the interval rather than on `|F - q|` keeps the root accurate in the
/// distribution tails, where the CDF is nearly flat.
pub fn find_root_bracketed(q: f64, bracket: Bracket, tol: f64) -> Result<f64, GaussianError> {
    let g = |z: f64| cdf_std(z) - q;
    let (mut xpre, mut xcur) = (bracket.lo, bracket.hi);
    let (mut fpre, mut fcur) = (g(xpre), g(xcur));
    if fpre > 0.0 || fcur < 0.0 {
        return Err(GaussianError::BracketInvalid {
            lo: bracket.lo,
            hi: bracket.hi,
            q,
        });
    }
    if fpre == 0.0 {
        return Ok(xpre);
    }
    if fcur == 0.0 {
        return Ok(xcur);
    }

    let (mut xblk, mut fblk) = (0.0, 0.0);
    let (mut spre, mut scur) = (0.0, 0.0);
    let delta = PPF_Z_TOL / 2.0;
    for _ in 0..PPF_MAX_ITER {
        if fpre * fcur < 0.0 {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }

        let sbis = (xblk - xcur) / 2.0;
        if fcur == 0.0 || sbis.abs() < delta {
            if fcur.abs() > tol {
                return Err(GaussianError::NoConvergence(PPF_MAX_ITER));
            }
            return Ok(xcur);
        }

        if spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                // Secant step.
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                // Inverse quadratic interpolation.
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            if 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                scur = stry;
            } else {
                spre = sbis;
                scur = sbis;
            }
        } else {
            spre = sbis;
            scur = sbis;
        }

        xpre = xcur;
        fpre = fcur;
        if scur.abs() > delta {
            xcur += scur;
        } else {
            xcur += if sbis > 0.0 { delta } else { -delta };
        }
        fcur = g(xcur);
    }
    Err(GaussianError::NoConvergence(PPF_MAX_ITER))
}

/// Standard-normal percent-point function: the `z` with `F(z) = q`.
pub fn ppf_std(q: f64) -> Result<f64, GaussianError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(GaussianError::QuantileOutOfRange(q));
    }
    find_root_bracketed(q, Bracket::for_quantile(q), PPF_PROB_TOL)
}

/// Percent-point function of the parameterized normal:
/// `ppf(q) = z_q * sqrt(variance) + mean`.
pub fn ppf(q: f64, params: &GaussianParams) -> Result<f64, GaussianError> {
    Ok(ppf_std(q)? * params.std_dev() + params.mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed ahead of time with a 40-digit arbitrary
    // precision erf/erfinv (mpmath).
    const ERF_1: f64 = 0.8427007929497149;
    const ERF_2: f64 = 0.9953222650189527;
    const ERF_HALF: f64 = 0.5204998778130465;
    const PHI_3: f64 = 0.9986501019683699;
    const Z_99865: f64 = 2.999976992703393;

    fn std_params() -> GaussianParams {
        GaussianParams::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn standard_score_divides_by_std_dev() {
        let p = GaussianParams::new(0.5, 0.25).unwrap();
        assert_eq!(standard_score(0.5, &p), 0.0);
        assert!((standard_score(2.0, &p) - 3.0).abs() < 1e-12);
        let q = GaussianParams::new(1.0, 4.0).unwrap();
        assert!((standard_score(1.0 + 3.0 * 2.0, &q) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn erf_matches_reference_values() {
        assert_eq!(erf_approx(0.0), 0.0);
        assert!((erf_approx(1.0) - ERF_1).abs() < 1e-7);
        assert!((erf_approx(2.0) - ERF_2).abs() < 1e-7);
        assert!((erf_approx(0.5) - ERF_HALF).abs() < 1e-7);
        // Full-precision check: the series should actually be much tighter.
        assert!((erf_approx(1.0) - ERF_1).abs() < 1e-14);
    }

    #[test]
    fn erf_is_exactly_odd() {
        for z in [0.3, 1.0, 2.7, 5.9, 6.5] {
            assert_eq!(erf_approx(-z), -erf_approx(z));
        }
    }

    #[test]
    fn erf_saturates_past_six() {
        assert_eq!(erf_approx(6.1), 1.0);
        assert_eq!(erf_approx(-7.3), -1.0);
        // Inside the series region values stay strictly below 1 until erf
        // rounds to 1 in doubles (which happens just under z = 6).
        assert!(erf_approx(5.5) < 1.0);
    }

    #[test]
    fn cdf_reference_points() {
        let p = std_params();
        assert_eq!(cdf(0.0, &p), 0.5);
        assert!((cdf(3.0, &p) - PHI_3).abs() < 1e-6);
        assert_eq!(cdf(-3.0, &p), 1.0 - cdf(3.0, &p));
        let shifted = GaussianParams::new(5.0, 9.0).unwrap();
        assert_eq!(cdf(5.0, &shifted), 0.5);
    }

    #[test]
    fn bracket_expansion_is_a_noop_inside_zero_one() {
        for q in [1e-9, 0.1, 0.5, 0.9986501, 1.0 - 1e-9] {
            let b = Bracket::for_quantile(q);
            assert_eq!((b.lo, b.hi, b.factor), (-10.0, 10.0, 10.0));
        }
    }

    #[test]
    fn root_finder_reference_points() {
        let b = Bracket::for_quantile(0.5);
        assert!(find_root_bracketed(0.5, b, 1e-9).unwrap().abs() <= 1e-9);
        let z1 = find_root_bracketed(0.8413447, b, 1e-9).unwrap();
        assert!((z1 - 1.0).abs() < 1e-4);
        let z3 = find_root_bracketed(0.0013499, b, 1e-9).unwrap();
        assert!((z3 + 3.0).abs() < 1e-3);
    }

    #[test]
    fn root_finder_rejects_bad_bracket() {
        let bad = Bracket {
            lo: 5.0,
            hi: 10.0,
            factor: 10.0,
        };
        assert!(matches!(
            find_root_bracketed(0.5, bad, 1e-9),
            Err(GaussianError::BracketInvalid { .. })
        ));
    }

    #[test]
    fn ppf_reference_points() {
        let p = std_params();
        assert_eq!(ppf(0.5, &p).unwrap(), 0.0);
        assert!((ppf(PHI_3, &p).unwrap() - 3.0).abs() < 1e-3);
        assert!((ppf(0.99865, &p).unwrap() - Z_99865).abs() < 1e-6);
        // Median of any normal is its mean.
        let shifted = GaussianParams::new(10.0, 4.0).unwrap();
        assert_eq!(ppf(0.5, &shifted).unwrap(), 10.0);
    }

    #[test]
    fn ppf_rejects_degenerate_quantiles() {
        let p = std_params();
        for q in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(matches!(
                ppf(q, &p),
                Err(GaussianError::QuantileOutOfRange(_))
            ));
        }
    }

    #[test]
    fn ppf_cdf_roundtrip_within_six_sigma() {
        let p = GaussianParams::new(2.0, 0.81).unwrap();
        for i in 0..=24 {
            let x = 2.0 + 0.9 * (-6.0 + 0.5 * i as f64);
            let q = cdf(x, &p);
            if q > 0.0 && q < 1.0 {
                let back = ppf(q, &p).unwrap();
                assert!(
                    (back - x).abs() <= 1e-6 * x.abs().max(1.0),
                    "x={x} back={back}"
                );
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(GaussianParams::new(0.0, 0.0).is_err());
        assert!(GaussianParams::new(0.0, -1.0).is_err());
        assert!(GaussianParams::new(f64::NAN, 1.0).is_err());
        assert!(GaussianParams::new(0.0, f64::INFINITY).is_err());
    }
}
