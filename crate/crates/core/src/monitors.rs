//! Auxiliary functions H, L, K with signed derivatives along solutions.
//!
//! Along any solution of the equation:
//!
//!   H = f'' + f(f' - 1)                  H' = (1 - beta) f'(f' - 1)
//!   L = 3 f''^2 + beta (2f' - 3) f'^2    L' = -6 f f''^2
//!   K = 2 f f'' - f'^2 + (2f' - beta) f^2    K' = 2(2 - beta) f f'^2
//!
//! The numeric checks differentiate the sampled series with 5-point
//! stencils and compare against the closed forms.

use crate::error::{Error, Result};
use crate::numeric::derivative_5pt;
use crate::ode::Trajectory;
use crate::problem::{ProblemParams, ShootState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorKind {
    H,
    L,
    K,
}

/// Monitor values aligned with a trajectory's sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSeries {
    pub kind: MonitorKind,
    pub values: Vec<(f64, f64)>,
}

pub fn eval_h(state: &ShootState) -> f64 {
    state.fpp + state.f * (state.fp - 1.0)
}

pub fn eval_l(state: &ShootState, params: &ProblemParams) -> f64 {
    3.0 * state.fpp * state.fpp
        + params.beta * (2.0 * state.fp - 3.0) * state.fp * state.fp
}

pub fn eval_k(state: &ShootState, params: &ProblemParams) -> f64 {
    2.0 * state.f * state.fpp - state.fp * state.fp
        + (2.0 * state.fp - params.beta) * state.f * state.f
}

/// Evaluate one monitor along the whole sample grid.
pub fn series(traj: &Trajectory, kind: MonitorKind) -> MonitorSeries {
    let values = traj
        .samples
        .iter()
        .map(|s| {
            let v = match kind {
                MonitorKind::H => eval_h(s),
                MonitorKind::L => eval_l(s, &traj.params),
                MonitorKind::K => eval_k(s, &traj.params),
            };
            (s.t, v)
        })
        .collect();
    MonitorSeries { kind, values }
}

/// Closed-form derivative of the monitor at each sample.
pub fn derivative_closed_form(traj: &Trajectory, kind: MonitorKind) -> Vec<f64> {
    let beta = traj.params.beta;
    traj.samples
        .iter()
        .map(|s| match kind {
            MonitorKind::H => (1.0 - beta) * s.fp * (s.fp - 1.0),
            MonitorKind::L => -6.0 * s.f * s.fpp * s.fpp,
            MonitorKind::K => 2.0 * (2.0 - beta) * s.f * s.fp * s.fp,
        })
        .collect()
}

/// Numerically differentiated series on the sample grid.
pub fn derivative_numeric(series: &MonitorSeries) -> Result<Vec<f64>> {
    if series.values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if series.values.len() < 5 {
        return Err(Error::WindowTooShort { count: series.values.len(), needed: 5 });
    }
    let ts: Vec<f64> = series.values.iter().map(|(t, _)| *t).collect();
    let vs: Vec<f64> = series.values.iter().map(|(_, v)| *v).collect();
    Ok(derivative_5pt(&ts, &vs))
}

/// Sup-norm gap between the differentiated series and its closed form.
pub fn identity_residual(traj: &Trajectory, kind: MonitorKind) -> Result<f64> {
    let s = series(traj, kind);
    let numeric = derivative_numeric(&s)?;
    let exact = derivative_closed_form(traj, kind);
    Ok(numeric
        .iter()
        .zip(&exact)
        .map(|(n, e)| (n - e).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneVerdict {
    Pass,
    /// Index of the first pair violating the direction beyond the slack.
    Fail { first_violation: usize },
}

/// Check that consecutive values respect `direction` up to `slack`.
pub fn check_monotone(
    series: &MonitorSeries,
    direction: Direction,
    slack: f64,
) -> Result<MonotoneVerdict> {
    if series.values.is_empty() {
        return Err(Error::EmptySeries);
    }
    for (i, w) in series.values.windows(2).enumerate() {
        let dv = w[1].1 - w[0].1;
        let bad = match direction {
            Direction::NonIncreasing => dv > slack,
            Direction::NonDecreasing => dv < -slack,
        };
        if bad {
            return Ok(MonotoneVerdict::Fail { first_violation: i });
        }
    }
    Ok(MonotoneVerdict::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{integrate, IntegratorControls};
    use crate::problem::TargetLimit;

    fn state(f: f64, fp: f64, fpp: f64) -> ShootState {
        ShootState::new(0.0, f, fp, fpp)
    }

    fn params(beta: f64) -> ProblemParams {
        ProblemParams::new(beta, 1.0, 1.0, TargetLimit::One).unwrap()
    }

    #[test]
    fn h_at_initial_data() {
        // H(0) = c + a(b - 1) for initial data (a, b, c).
        let (a, b, c) = (1.7, 0.4, -2.2);
        assert_eq!(eval_h(&state(a, b, c)), c + a * (b - 1.0));
        assert_eq!(eval_h(&state(7.0, 1.0, 0.0)), 0.0);
        assert_eq!(eval_h(&state(2.0, 0.5, 1.0)), 0.0);
    }

    #[test]
    fn l_hand_values() {
        assert_eq!(eval_l(&state(0.0, 1.0, 0.0), &params(1.0)), -1.0);
        assert_eq!(eval_l(&state(3.0, 0.0, 0.0), &params(0.3)), 0.0);
        assert_eq!(eval_l(&state(0.0, 1.5, 0.0), &params(1.9)), 0.0);
    }

    #[test]
    fn k_hand_values() {
        // K(0) = 2ac - b^2 + (2b - beta) a^2.
        let (a, b, c, beta) = (2.0, 0.5, -1.0, 1.5);
        let expect = 2.0 * a * c - b * b + (2.0 * b - beta) * a * a;
        assert_eq!(eval_k(&state(a, b, c), &params(beta)), expect);
        assert_eq!(eval_k(&state(0.0, 1.0, 5.0), &params(0.7)), -1.0);
        assert_eq!(eval_k(&state(1.0, 0.0, 0.0), &params(2.0)), -2.0);
    }

    #[test]
    fn monotone_empty_series_errors() {
        let s = MonitorSeries { kind: MonitorKind::L, values: vec![] };
        assert!(matches!(
            check_monotone(&s, Direction::NonIncreasing, 0.0),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn monotone_constant_passes_both_directions() {
        let s = MonitorSeries {
            kind: MonitorKind::H,
            values: (0..10).map(|i| (i as f64, 4.2)).collect(),
        };
        assert_eq!(check_monotone(&s, Direction::NonIncreasing, 0.0).unwrap(), MonotoneVerdict::Pass);
        assert_eq!(check_monotone(&s, Direction::NonDecreasing, 0.0).unwrap(), MonotoneVerdict::Pass);
    }

    #[test]
    fn monotone_reports_first_violation() {
        let s = MonitorSeries {
            kind: MonitorKind::H,
            values: vec![(0.0, 3.0), (1.0, 2.0), (2.0, 2.5), (3.0, 1.0)],
        };
        assert_eq!(
            check_monotone(&s, Direction::NonIncreasing, 1e-8).unwrap(),
            MonotoneVerdict::Fail { first_violation: 1 }
        );
    }

    #[test]
    fn l_nonincreasing_while_f_nonnegative() {
        // f >= 0 throughout for these parameters, so L' = -6 f f''^2 <= 0.
        let p = ProblemParams::new(1.0, 1.0, 2.0, TargetLimit::One).unwrap();
        let traj = integrate(&p, -1.0, &IntegratorControls::default()).unwrap();
        assert!(traj.samples.iter().all(|s| s.f >= 0.0));
        let l = series(&traj, MonitorKind::L);
        assert_eq!(
            check_monotone(&l, Direction::NonIncreasing, 1e-8).unwrap(),
            MonotoneVerdict::Pass
        );
    }

    #[test]
    fn k_nondecreasing_for_beta_below_two() {
        // K' = 2(2 - beta) f f'^2 >= 0 while f, f' > 0 and beta <= 2.
        let p = ProblemParams::new(1.5, 1.0, 1.0, TargetLimit::One).unwrap();
        let traj = integrate(&p, 0.8, &IntegratorControls::default()).unwrap();
        assert!(traj.samples.iter().all(|s| s.f > 0.0 && s.fp > 0.0));
        let k = series(&traj, MonitorKind::K);
        assert_eq!(
            check_monotone(&k, Direction::NonDecreasing, 1e-8).unwrap(),
            MonotoneVerdict::Pass
        );
    }
}
