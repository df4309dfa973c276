//! Regime classification of shot trajectories.
//!
//! Labels are derived purely from the event log and termination verdict,
//! never by re-integrating. The unprimed families C0, C1, C2,1, C2,2 apply
//! when b >= 1; the primed families C0'1, C0'2, C1', C2' when b < 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{EventKind, Termination, Trajectory};
use crate::problem::TargetLimit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    C0,
    C1,
    #[serde(rename = "C21_TO_0")]
    C21To0,
    #[serde(rename = "C21_TO_1")]
    C21To1,
    C22,
    #[serde(rename = "C0P1")]
    C0p1,
    #[serde(rename = "C0P2")]
    C0p2,
    #[serde(rename = "C1P")]
    C1p,
    #[serde(rename = "C2P")]
    C2p,
    #[serde(rename = "UNRESOLVED")]
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Shape {
    Concave,
    Convex,
    ConcaveConvex,
    ConvexConcave,
    Affine,
    Constant,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LimitTag {
    Zero,
    One,
    Blowup,
    Unknown,
}

/// Family, concavity shape and detected limit of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegimeLabel {
    pub family: Family,
    pub shape: Shape,
    pub limit: LimitTag,
}

/// Event-threshold ties resolve at the refinement tolerance.
const TIE_TOL: f64 = 1e-10;

/// True iff f' reaches zero: an FP_ZERO event exists, or the trajectory
/// blew up with f' already negative.
pub fn predicate_fp_hits_zero(traj: &Trajectory) -> bool {
    if traj.has_event(EventKind::FpZero) {
        return true;
    }
    matches!(traj.termination, Termination::Blowup { .. }) && traj.final_state().fp < 0.0
}

/// True iff f' crosses 1 downward. Only meaningful on the b >= 1 branch.
pub fn predicate_fp_below_one(traj: &Trajectory) -> Result<bool> {
    if traj.params.b < 1.0 {
        return Err(Error::WrongBranch { b: traj.params.b });
    }
    Ok(traj.has_event(EventKind::FpOneDown))
}

/// True iff f' crosses 1 upward. Drives the c** search on the b < 1 branch.
pub fn predicate_fp_crosses_one_up(traj: &Trajectory) -> bool {
    traj.has_event(EventKind::FpOneUp)
}

fn limit_tag(t: &Termination) -> LimitTag {
    match t {
        Termination::Horizon => LimitTag::Unknown,
        Termination::Blowup { .. } => LimitTag::Blowup,
        Termination::Limit { lambda: TargetLimit::Zero } => LimitTag::Zero,
        Termination::Limit { lambda: TargetLimit::One } => LimitTag::One,
    }
}

/// Concavity shape from the f''-crossing log and the initial sign of f''.
fn shape_from_events(traj: &Trajectory) -> Shape {
    let b = traj.params.b;
    let c = traj.c;
    if c == 0.0 && b == 1.0 {
        return Shape::Affine;
    }
    if c == 0.0 && b == 0.0 {
        return Shape::Constant;
    }
    // Initial concavity: sign of c, or of f'''(0) = -beta b(b-1) when c = 0.
    let init_negative = if c != 0.0 {
        c < 0.0
    } else {
        b > 1.0
    };
    let crossings: Vec<EventKind> = traj
        .events
        .iter()
        .filter(|e| {
            matches!(e.kind, EventKind::FppZeroNegToPos | EventKind::FppZeroPosToNeg)
        })
        .map(|e| e.kind)
        .collect();
    match crossings.as_slice() {
        [] => {
            if init_negative {
                Shape::Concave
            } else {
                Shape::Convex
            }
        }
        [EventKind::FppZeroNegToPos] => Shape::ConcaveConvex,
        [EventKind::FppZeroPosToNeg] => Shape::ConvexConcave,
        _ => Shape::None,
    }
}

/// Assign the regime label. Errors with `ParamMismatch` when the
/// trajectory's initial sample disagrees with its declared parameters.
pub fn classify(traj: &Trajectory) -> Result<RegimeLabel> {
    let s0 = traj.samples.first().ok_or(Error::ParamMismatch)?;
    if s0.t != 0.0 || s0.f != traj.params.a || s0.fp != traj.params.b || s0.fpp != traj.c {
        return Err(Error::ParamMismatch);
    }

    let shape = shape_from_events(traj);
    let limit = limit_tag(&traj.termination);

    let family = if traj.params.b >= 1.0 {
        classify_unprimed(traj, shape, limit)
    } else {
        classify_primed(traj, shape, limit)
    };

    Ok(RegimeLabel { family, shape, limit })
}

fn classify_unprimed(traj: &Trajectory, shape: Shape, limit: LimitTag) -> Family {
    if shape == Shape::Affine {
        // b = 1, c = 0 is the single concave-and-convex member of C1.
        return Family::C1;
    }
    let c = traj.c;
    let fp_down = traj.has_event(EventKind::FpOneDown);
    let neg_to_pos: Vec<_> = traj.events_of(EventKind::FppZeroNegToPos).collect();

    if c > 0.0 {
        return if limit == LimitTag::One { Family::C0 } else { Family::Unresolved };
    }
    match limit {
        LimitTag::Blowup => {
            if predicate_fp_hits_zero(traj) && shape == Shape::Concave {
                Family::C22
            } else {
                Family::Unresolved
            }
        }
        LimitTag::One => {
            if !fp_down && neg_to_pos.is_empty() && shape == Shape::Concave {
                Family::C1
            } else if fp_down
                && neg_to_pos.len() == 1
                && in_open_unit_interval(neg_to_pos[0].state.fp)
                && shape == Shape::ConcaveConvex
            {
                Family::C21To1
            } else {
                Family::Unresolved
            }
        }
        LimitTag::Zero => {
            if !traj.has_event(EventKind::FpZero) && shape == Shape::Concave {
                Family::C21To0
            } else {
                Family::Unresolved
            }
        }
        LimitTag::Unknown => Family::Unresolved,
    }
}

fn classify_primed(traj: &Trajectory, shape: Shape, limit: LimitTag) -> Family {
    if shape == Shape::Constant {
        // b = 0, c = 0: f = a solves the problem with limit zero and sits in
        // the set defining C1' (b <= f' <= 1, f'' >= 0 throughout).
        return Family::C1p;
    }
    let c = traj.c;
    let fp_up = traj.has_event(EventKind::FpOneUp);
    let pos_to_neg: Vec<_> = traj.events_of(EventKind::FppZeroPosToNeg).collect();
    let neg_to_pos: Vec<_> = traj.events_of(EventKind::FppZeroNegToPos).collect();

    if c < 0.0 {
        match limit {
            LimitTag::Blowup => {
                if predicate_fp_hits_zero(traj) && shape == Shape::Concave {
                    Family::C0p2
                } else {
                    Family::Unresolved
                }
            }
            LimitTag::One => {
                if neg_to_pos.len() == 1
                    && neg_to_pos[0].state.fp < 1.0 - TIE_TOL
                    && shape == Shape::ConcaveConvex
                {
                    Family::C0p1
                } else {
                    Family::Unresolved
                }
            }
            LimitTag::Zero => {
                // The critical shot: concave throughout, f' > 0, f' -> 0.
                if !traj.has_event(EventKind::FpZero) && shape == Shape::Concave {
                    Family::C0p1
                } else {
                    Family::Unresolved
                }
            }
            LimitTag::Unknown => Family::Unresolved,
        }
    } else {
        match limit {
            LimitTag::One => {
                if !fp_up && pos_to_neg.is_empty() && shape == Shape::Convex {
                    Family::C1p
                } else if fp_up
                    && pos_to_neg.len() == 1
                    && pos_to_neg[0].state.fp > 1.0 + TIE_TOL
                    && shape == Shape::ConvexConcave
                {
                    Family::C2p
                } else {
                    Family::Unresolved
                }
            }
            _ => Family::Unresolved,
        }
    }
}

fn in_open_unit_interval(x: f64) -> bool {
    x > TIE_TOL && x < 1.0 - TIE_TOL
}

/// JSON classification record: family, shape, limit, events, termination.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationRecord {
    pub family: Family,
    pub shape: Shape,
    pub limit: LimitTag,
    pub events: Vec<EventEntry>,
    pub termination: Termination,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventEntry {
    pub kind: &'static str,
    pub t: f64,
}

pub fn classification_record(traj: &Trajectory, label: &RegimeLabel) -> ClassificationRecord {
    ClassificationRecord {
        family: label.family,
        shape: label.shape,
        limit: label.limit,
        events: traj
            .events
            .iter()
            .map(|e| EventEntry { kind: e.kind.label(), t: e.t })
            .collect(),
        termination: traj.termination,
    }
}
