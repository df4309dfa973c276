//! Leading-order tail laws of the critical shots.
//!
//! At c* the solution approaches its limit l with
//!
//!   f'(t) = l A e^{-l t},   f(t) = l - A e^{-l t},   f''(t) = -l^2 A e^{-l t}
//!
//! up to relatively exponentially small corrections, so the decay rate of
//! f' equals the limit of f. At c** (slant asymptote), the approach of f'
//! to 1 carries a Gaussian factor:
//!
//!   f'(t) - 1 ~ A t^{beta - 1} e^{-t^2/2 - l t}.
//!
//! Fit windows are value bands on the decaying quantity, and the tail end
//! of each window is peeled while it deviates from the fitted line: past
//! the crossover where the neighbouring-shot mode overtakes the decay, the
//! samples say nothing about the law.

use serde::Serialize;

use crate::classifier::{classify, LimitTag, Shape};
use crate::error::{Error, Result};
use crate::numeric::ols_line_peeled;
use crate::ode::Trajectory;
use crate::problem::ProblemParams;

/// Value band on the decaying quantity defining the fit window.
const BAND: (f64, f64) = (1e-12, 1e-3);
/// Minimum samples inside the band.
const MIN_SAMPLES: usize = 20;
/// Peel trailing points while they sit farther than this from the line
/// (log scale, so about 1% relative).
const PEEL_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TailModel {
    Exp,
    Gauss,
}

/// Fitted tail law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub model: TailModel,
    pub amplitude_a: f64,
    pub rate_l: f64,
    pub fit_window: (f64, f64),
    pub max_rel_residual: f64,
}

/// JSON shape: keys `model`, `A`, `l`, `window`, `residual`.
#[derive(Debug, Clone, Serialize)]
pub struct TailFitRecord {
    pub model: TailModel,
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub l: f64,
    pub window: [f64; 2],
    pub residual: f64,
}

impl TailFit {
    pub fn record(&self) -> TailFitRecord {
        TailFitRecord {
            model: self.model,
            amplitude: self.amplitude_a,
            l: self.rate_l,
            window: [self.fit_window.0, self.fit_window.1],
            residual: self.max_rel_residual,
        }
    }
}

/// Fit f'(t) = l A e^{-l t} on a limit-zero trajectory by least squares
/// through (t, ln f'). The rate is cross-checked against the observed limit
/// of f; disagreement beyond 2% rejects the fit.
pub fn fit_exp_tail(traj: &Trajectory) -> Result<TailFit> {
    let label = classify(traj)?;
    if label.limit != LimitTag::Zero {
        return Err(Error::WrongClass {
            expected: "limit ZERO",
            found: format!("{:?}", label.limit),
        });
    }

    let mut ts = Vec::new();
    let mut zs = Vec::new();
    for s in &traj.samples {
        if s.fp >= BAND.0 && s.fp <= BAND.1 {
            ts.push(s.t);
            zs.push(s.fp.ln());
        }
    }
    if ts.len() < MIN_SAMPLES {
        return Err(Error::WindowTooShort { count: ts.len(), needed: MIN_SAMPLES });
    }

    let (fit, kept) = ols_line_peeled(&ts, &zs, PEEL_TOL, MIN_SAMPLES);
    let l = -fit.slope;
    let amplitude = fit.intercept.exp() / l;
    let t_hi = ts[kept - 1];

    // Observed limit of f at the window end.
    let l_direct = traj
        .samples
        .iter()
        .find(|s| s.t >= t_hi)
        .map(|s| s.f)
        .unwrap_or_else(|| traj.final_state().f);
    if (l - l_direct).abs() / l_direct.abs() > 0.02 {
        return Err(Error::RateMismatch { fitted: l, observed: l_direct });
    }

    Ok(TailFit {
        model: TailModel::Exp,
        amplitude_a: amplitude,
        rate_l: l,
        fit_window: (ts[0], t_hi),
        max_rel_residual: fit.max_abs_residual,
    })
}

/// Fit f'(t) - 1 = A t^{beta-1} e^{-t^2/2 - l t} on a concave limit-one
/// trajectory: ln(f'-1) + t^2/2 - (beta-1) ln t regressed against -t.
pub fn fit_gauss_tail(traj: &Trajectory, params: &ProblemParams) -> Result<TailFit> {
    let label = classify(traj)?;
    if label.limit != LimitTag::One || label.shape != Shape::Concave {
        return Err(Error::WrongClass {
            expected: "CONCAVE with limit ONE",
            found: format!("{:?}/{:?}", label.shape, label.limit),
        });
    }

    let mut ts = Vec::new();
    let mut zs = Vec::new();
    for s in &traj.samples {
        let dev = s.fp - 1.0;
        if dev >= BAND.0 && dev <= BAND.1 && s.t > 0.0 {
            ts.push(s.t);
            zs.push(dev.ln() + 0.5 * s.t * s.t - (params.beta - 1.0) * s.t.ln());
        }
    }
    if ts.len() < MIN_SAMPLES {
        return Err(Error::WindowTooShort { count: ts.len(), needed: MIN_SAMPLES });
    }

    let (fit, kept) = ols_line_peeled(&ts, &zs, PEEL_TOL, MIN_SAMPLES);
    Ok(TailFit {
        model: TailModel::Gauss,
        amplitude_a: fit.intercept.exp(),
        rate_l: -fit.slope,
        fit_window: (ts[0], ts[kept - 1]),
        max_rel_residual: fit.max_abs_residual,
    })
}

/// Sup relative deviations of f and f'' from the laws sharing the fitted
/// (A, l), over the fit window: the exp-law triple is self-consistent when
/// both stay small.
pub fn exp_law_consistency(traj: &Trajectory, fit: &TailFit) -> (f64, f64) {
    let (a, l) = (fit.amplitude_a, fit.rate_l);
    let mut dev_f = 0.0_f64;
    let mut dev_fpp = 0.0_f64;
    for s in &traj.samples {
        if s.t < fit.fit_window.0 || s.t > fit.fit_window.1 {
            continue;
        }
        let envelope = a * (-l * s.t).exp();
        dev_f = dev_f.max((s.f - (l - envelope)).abs() / envelope);
        dev_fpp = dev_fpp.max((s.fpp + l * l * envelope).abs() / (l * l * envelope));
    }
    (dev_f, dev_fpp)
}
