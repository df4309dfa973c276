//! Critical shooting constants by bracketed bisection.
//!
//! `find_c_star` locates the blow-up boundary c*: below it f' reaches zero
//! and the solution escapes in finite time; at it the shot solves the
//! limit-zero problem. `find_c_upper` locates the concavity boundary c**.
//! Both searches integrate with tightened tolerances because classification
//! at the boundary is sensitive, and retry with a doubled horizon when a
//! shot ends undecided.

use rayon::prelude::*;
use serde::Serialize;

use crate::classifier::{classify, predicate_fp_below_one, predicate_fp_crosses_one_up, predicate_fp_hits_zero, RegimeLabel};
use crate::error::{Error, Result};
use crate::ode::{integrate, IntegratorControls, Termination, Trajectory};
use crate::problem::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriticalKind {
    #[serde(rename = "C_STAR")]
    CStar,
    #[serde(rename = "C_UPPER")]
    CUpper,
}

/// A computed critical constant with its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValue {
    pub which: CriticalKind,
    pub value: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub tol: f64,
    pub iterations: u32,
    pub predicate: &'static str,
}

/// JSON shape: keys `which`, `value`, `bracket`, `tol`, `iterations`,
/// `predicate`.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalRecord {
    pub which: CriticalKind,
    pub value: f64,
    pub bracket: [f64; 2],
    pub tol: f64,
    pub iterations: u32,
    pub predicate: &'static str,
}

impl CriticalValue {
    pub fn record(&self) -> CriticalRecord {
        CriticalRecord {
            which: self.which,
            value: self.value,
            bracket: [self.bracket_lo, self.bracket_hi],
            tol: self.tol,
            iterations: self.iterations,
            predicate: self.predicate,
        }
    }
}

/// Lower bound for c*: c >= -ab - sqrt((2b + a^2)(beta + d) d) with
/// d = max{b, 3/2}, valid for every c whose shot keeps f' > 0.
pub fn lower_bound_c_star(params: &ProblemParams) -> f64 {
    let d = params.b.max(1.5);
    -params.a * params.b - ((2.0 * params.b + params.a * params.a) * (params.beta + d) * d).sqrt()
}

/// Sharpen tolerances for boundary-sensitive integrations.
fn tightened(controls: &IntegratorControls) -> IntegratorControls {
    IntegratorControls {
        rtol: controls.rtol.min(1e-12),
        atol: controls.atol.min(1e-12),
        ..*controls
    }
}

const MAX_HORIZON_RETRIES: usize = 3;

/// Evaluate a predicate on the shot at `c`, retrying with a doubled horizon
/// while the trajectory ends at the horizon without a dwell-confirmed
/// limit. After the retries the predicate is declared from the terminal
/// concavity and slope (`fallback`).
fn eval_predicate<F, G>(
    params: &ProblemParams,
    c: f64,
    controls: &IntegratorControls,
    pred: &F,
    fallback: &G,
) -> Result<bool>
where
    F: Fn(&Trajectory) -> bool,
    G: Fn(&crate::problem::ShootState) -> bool,
{
    let mut local = *controls;
    for attempt in 0..=MAX_HORIZON_RETRIES {
        let traj = integrate(params, c, &local)?;
        match traj.termination {
            Termination::Horizon => {
                if attempt == MAX_HORIZON_RETRIES {
                    return Ok(fallback(&traj.final_state()));
                }
                local.t_max *= 2.0;
            }
            _ => return Ok(pred(&traj)),
        }
    }
    unreachable!()
}

/// Horizon verdict for `fp_hits_zero`: still descending below 1 means the
/// slope has not turned and the shot is zero-bound; descending toward 1
/// from above or already rising means it is not.
fn falls_to_zero(s: &crate::problem::ShootState) -> bool {
    s.fpp < 0.0 && s.fp < 1.0
}

/// Horizon verdict for `fp_below_one`: still above 1 and descending means
/// the crossing is ahead.
fn will_cross_one_down(s: &crate::problem::ShootState) -> bool {
    s.fpp < 0.0 && s.fp > 1.0
}

/// Horizon verdict for `fp_crosses_one_up`: below 1 and still convex means
/// the upward crossing is ahead.
fn will_cross_one_up(s: &crate::problem::ShootState) -> bool {
    s.fpp > 0.0 && s.fp < 1.0
}

struct Bisection {
    lo: f64,
    hi: f64,
    iterations: u32,
}

/// Bisect between a predicate-true `lo` and predicate-false `hi` (or the
/// reverse, per `true_side_low`). Returns the final bracket.
fn bisect<E>(mut lo: f64, mut hi: f64, tol: f64, true_side_low: bool, mut eval: E) -> Result<Bisection>
where
    E: FnMut(f64) -> Result<bool>,
{
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        iterations += 1;
        let p = eval(mid)?;
        if p == true_side_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bisection { lo, hi, iterations })
}

/// Locate c*, the boundary of the blow-up set, by bisecting on
/// `predicate_fp_hits_zero`. The shot at the returned value solves the
/// limit-zero problem.
pub fn find_c_star(
    params: &ProblemParams,
    controls: &IntegratorControls,
    tol: f64,
) -> Result<CriticalValue> {
    params.validate()?;
    controls.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition(format!("tol must be positive, got {tol}")));
    }
    if params.b == 0.0 {
        return Err(Error::Precondition(
            "c* requires b > 0; every shot with c < 0 from b = 0 escapes in finite time".into(),
        ));
    }
    if params.beta > 1.0 && params.b > params.beta / (params.beta - 1.0) {
        return Err(Error::Precondition(format!(
            "beta > 1 requires b <= beta/(beta-1) = {}; got b = {}",
            params.beta / (params.beta - 1.0),
            params.b
        )));
    }

    let tight = tightened(controls);
    let eval = |c: f64| {
        eval_predicate(params, c, &tight, &predicate_fp_hits_zero, &falls_to_zero)
    };

    // Padding of 1 below the analytic bound guards against attainment.
    let lo = lower_bound_c_star(params) - 1.0;
    let p_lo = eval(lo)?;
    if !p_lo {
        return Err(Error::BracketFailure {
            lo,
            hi: 0.0,
            detail: "fp_hits_zero false at the padded lower bound".into(),
        });
    }
    // For beta <= 1 every c >= 0 keeps f' positive; beyond that c = 0 may
    // itself be in the blow-up set, so climb toward the region where
    // 2ac >= b^2 - (2b - beta)a^2 guarantees f' -> 1, doubling past it if
    // needed.
    let mut hi = 0.0;
    if eval(hi)? {
        let mut step = if params.beta <= 2.0 && params.a > 0.0 {
            let thresh =
                (params.b * params.b - (2.0 * params.b - params.beta) * params.a * params.a)
                    / (2.0 * params.a);
            thresh.max(0.0) + 1.0
        } else {
            1.0
        };
        let mut found = false;
        for _ in 0..40 {
            hi = step;
            if !eval(hi)? {
                found = true;
                break;
            }
            step *= 2.0;
        }
        if !found {
            return Err(Error::BracketFailure {
                lo,
                hi,
                detail: "fp_hits_zero true everywhere while expanding upward".into(),
            });
        }
    }
    let bis = bisect(lo, hi, tol, true, eval)?;
    Ok(CriticalValue {
        which: CriticalKind::CStar,
        value: bis.hi,
        bracket_lo: bis.lo,
        bracket_hi: bis.hi,
        tol,
        iterations: bis.iterations,
        predicate: "fp_hits_zero",
    })
}

/// Locate c**, the boundary of the globally concave set (b >= 1) or of the
/// globally convex set (b < 1). Requires beta in (0, 1]: the interval
/// structure of C1 is not guaranteed beyond that.
pub fn find_c_upper(
    params: &ProblemParams,
    controls: &IntegratorControls,
    tol: f64,
) -> Result<CriticalValue> {
    params.validate()?;
    controls.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition(format!("tol must be positive, got {tol}")));
    }
    if params.beta > 1.0 {
        return Err(Error::Precondition(format!(
            "c** is only characterized for beta in (0, 1]; got beta = {}",
            params.beta
        )));
    }

    if params.b == 1.0 {
        // C1 = {0} exactly.
        return Ok(CriticalValue {
            which: CriticalKind::CUpper,
            value: 0.0,
            bracket_lo: 0.0,
            bracket_hi: 0.0,
            tol,
            iterations: 0,
            predicate: "fp_below_one",
        });
    }

    let tight = tightened(controls);
    if params.b > 1.0 {
        let c_star = find_c_star(params, controls, tol)?;
        let eval = |c: f64| {
            eval_predicate(
                params,
                c,
                &tight,
                &|t: &Trajectory| predicate_fp_below_one(t).unwrap_or(false),
                &will_cross_one_down,
            )
        };
        let lo = c_star.value;
        let hi = -params.a * (params.b - 1.0);
        let p_lo = eval(lo)?;
        let p_hi = eval(hi)?;
        if !p_lo || p_hi {
            return Err(Error::BracketFailure {
                lo,
                hi,
                detail: format!("fp_below_one gave ({p_lo}, {p_hi}); need (true, false)"),
            });
        }
        let bis = bisect(lo, hi, tol, true, eval)?;
        Ok(CriticalValue {
            which: CriticalKind::CUpper,
            value: bis.hi,
            bracket_lo: bis.lo,
            bracket_hi: bis.hi,
            tol,
            iterations: bis.iterations,
            predicate: "fp_below_one",
        })
    } else {
        // b < 1: c** bounds the convex set from above; above it f' crosses 1
        // upward. The theory gives no upper bound, so expand geometrically.
        let eval = |c: f64| {
            eval_predicate(params, c, &tight, &predicate_fp_crosses_one_up, &will_cross_one_up)
        };
        let lo = params.a * (1.0 - params.b);
        if eval(lo)? {
            return Err(Error::BracketFailure {
                lo,
                hi: lo,
                detail: "fp_crosses_one_up already true at a(1-b)".into(),
            });
        }
        let mut hi = lo + 1.0;
        let mut doublings = 0;
        while !eval(hi)? {
            hi = lo + 2.0 * (hi - lo);
            doublings += 1;
            if doublings > 60 {
                return Err(Error::BracketFailure {
                    lo,
                    hi,
                    detail: "fp_crosses_one_up never became true while expanding".into(),
                });
            }
        }
        let bis = bisect(lo, hi, tol, false, eval)?;
        Ok(CriticalValue {
            which: CriticalKind::CUpper,
            value: bis.lo,
            bracket_lo: bis.lo,
            bracket_hi: bis.hi,
            tol,
            iterations: bis.iterations,
            predicate: "fp_crosses_one_up",
        })
    }
}

/// Sufficient condition for f' -> 1 when beta in (1, 2] and a > 0:
/// 2ac >= b^2 - (2b - beta) a^2.
pub fn sufficient_condition_limit_one(params: &ProblemParams, c: f64) -> Result<bool> {
    params.validate()?;
    if params.beta <= 1.0 || params.beta > 2.0 {
        return Err(Error::Precondition(format!(
            "condition requires beta in (1, 2], got {}",
            params.beta
        )));
    }
    if params.a == 0.0 {
        return Err(Error::Precondition("condition requires a > 0".into()));
    }
    let lhs = 2.0 * params.a * c;
    let rhs = params.b * params.b - (2.0 * params.b - params.beta) * params.a * params.a;
    Ok(lhs >= rhs)
}

/// Integrate and classify every c on the grid. Entries run concurrently;
/// output order follows the grid.
pub fn sweep(
    params: &ProblemParams,
    c_grid: &[f64],
    controls: &IntegratorControls,
) -> Vec<(f64, Result<RegimeLabel>)> {
    c_grid
        .par_iter()
        .map(|&c| {
            let label = integrate(params, c, controls).and_then(|traj| classify(&traj));
            (c, label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Family;
    use crate::problem::TargetLimit;

    fn params(beta: f64, a: f64, b: f64) -> ProblemParams {
        ProblemParams::new(beta, a, b, TargetLimit::Zero).unwrap()
    }

    #[test]
    fn lower_bound_values() {
        // (beta=1, a=0, b=2): d = 2, bound = -sqrt(24).
        let lb = lower_bound_c_star(&params(1.0, 0.0, 2.0));
        assert!((lb + 24.0_f64.sqrt()).abs() < 1e-12);
        // a = b = 0 zeroes the radicand.
        assert_eq!(lower_bound_c_star(&params(1.0, 0.0, 0.0)), 0.0);
        // (beta=0.5, a=1, b=1.5): -1.5 - sqrt(12).
        let lb = lower_bound_c_star(&params(0.5, 1.0, 1.5));
        assert!((lb + 1.5 + 12.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sufficient_condition_hand_values() {
        assert!(sufficient_condition_limit_one(&params(2.0, 1.0, 1.0), 0.5).unwrap());
        assert!(!sufficient_condition_limit_one(&params(1.5, 1.0, 1.0), 0.0).unwrap());
        assert!(sufficient_condition_limit_one(&params(2.0, 1.0, 0.1), 1.0).unwrap());
        // Outside beta in (1,2] or with a = 0 the condition is not available.
        assert!(sufficient_condition_limit_one(&params(1.0, 1.0, 1.0), 0.5).is_err());
        assert!(sufficient_condition_limit_one(&params(2.5, 1.0, 1.0), 0.5).is_err());
        assert!(sufficient_condition_limit_one(&params(2.0, 0.0, 1.0), 0.5).is_err());
    }

    #[test]
    fn c_star_preconditions() {
        let controls = IntegratorControls::default();
        assert!(matches!(
            find_c_star(&params(1.0, 0.0, 0.0), &controls, 1e-8),
            Err(Error::Precondition(_))
        ));
        // beta/(beta-1) = 3 admits b = 3 but not b = 4.
        assert!(matches!(
            find_c_star(&params(1.5, 1.0, 4.0), &controls, 1e-8),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            find_c_star(&params(1.0, 0.0, 2.0), &controls, 0.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn c_upper_refuses_beta_above_one() {
        let controls = IntegratorControls::default();
        assert!(matches!(
            find_c_upper(&params(1.5, 1.0, 2.0), &controls, 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn c_upper_is_exactly_zero_at_b_one() {
        let cv = find_c_upper(&params(0.7, 1.0, 1.0), &IntegratorControls::default(), 1e-10)
            .unwrap();
        assert_eq!(cv.value, 0.0);
        assert_eq!(cv.iterations, 0);
    }

    #[test]
    fn sweep_preserves_order_and_handles_edges() {
        let controls = IntegratorControls::default();
        let empty = sweep(&params(1.0, 0.0, 2.0), &[], &controls);
        assert!(empty.is_empty());

        let single = sweep(&params(1.0, 2.0, 1.0), &[0.0], &controls);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].0, 0.0);
        assert_eq!(single[0].1.as_ref().unwrap().family, Family::C1);
        assert_eq!(single[0].1.as_ref().unwrap().shape, crate::classifier::Shape::Affine);
    }

    #[test]
    fn bisection_iteration_budget() {
        // Iterations never exceed ceil(log2(width / tol)) + 2.
        let tol = 1e-6;
        let mut evals = 0;
        let bis = bisect(-4.0, 1.0, tol, true, |c| {
            evals += 1;
            Ok(c < -1.2345)
        })
        .unwrap();
        assert!(bis.hi - bis.lo <= tol);
        assert!(bis.lo <= -1.2345 && -1.2345 <= bis.hi);
        let budget = ((5.0_f64 / tol).log2()).ceil() as u32 + 2;
        assert!(bis.iterations <= budget, "{} > {}", bis.iterations, budget);
    }
}
