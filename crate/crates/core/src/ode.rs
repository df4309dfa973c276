//! Initial-value integration of f''' + f f'' + beta f'(f' - 1) = 0.
//!
//! The scalar third-order equation is reduced to the first-order system
//! y = (f, f', f'') and integrated with the Dormand-Prince 5(4) embedded
//! pair. Accepted steps carry a quartic dense-output interpolant which is
//! used for three purposes:
//!
//! * uniform-resolution trajectory samples,
//! * localization of sign changes of f', f' - 1 and f'' (events),
//! * dwell-based detection of the limits f' -> 0 and f' -> 1.
//!
//! Solutions with finite escape time are reported as `Termination::Blowup`
//! once |f'| or |f''| passes `blowup_bound`, or once the step controller
//! collapses below `h_min`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{ProblemParams, ShootState, TargetLimit};

/// Spacing of the dense trajectory samples.
pub const SAMPLE_DT: f64 = 5e-3;

/// Absolute time tolerance of event root refinement.
pub const EVENT_TIME_TOL: f64 = 1e-10;

const EVENT_MAX_ITER: usize = 80;

/// Sign changes with both endpoint magnitudes under this floor are treated
/// as integration noise, not crossings. Keeps asymptotic tails and the dip
/// bottoms of near-critical shots (where the event functions pass through
/// zero at sub-resolution amplitudes) from shedding spurious events.
const EVENT_NOISE_FLOOR: f64 = 1e-9;

/// Tolerances and guards for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorControls {
    /// Relative local-error tolerance.
    pub rtol: f64,
    /// Absolute local-error tolerance.
    pub atol: f64,
    /// Integration horizon.
    pub t_max: f64,
    /// Magnitude threshold on |f'|, |f''| that declares blow-up.
    pub blowup_bound: f64,
    /// Minimum accepted step before step collapse declares blow-up.
    pub h_min: f64,
    /// Limit-detection tolerance on |f' - lambda| and |f''|.
    pub limit_eps: f64,
    /// Dwell time the limit tolerance must hold before a limit is declared.
    pub limit_window: f64,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        IntegratorControls {
            rtol: 1e-10,
            atol: 1e-12,
            t_max: 50.0,
            blowup_bound: 1e8,
            h_min: 1e-13,
            // 1e-5 keeps the dwell window ahead of the unstable mode that a
            // bracket-width error in c excites near the critical shot.
            limit_eps: 1e-5,
            limit_window: 5.0,
        }
    }
}

impl IntegratorControls {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("t_max", self.t_max),
            ("blowup_bound", self.blowup_bound),
            ("h_min", self.h_min),
            ("limit_eps", self.limit_eps),
            ("limit_window", self.limit_window),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidControls(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.rtol < 10.0 * f64::EPSILON {
            return Err(Error::InvalidControls(format!(
                "rtol must be at least 10*eps = {:.2e}, got {:.2e}",
                10.0 * f64::EPSILON,
                self.rtol
            )));
        }
        Ok(())
    }
}

/// Kind of a localized sign change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// f' crosses zero (downward; the only direction with dynamical meaning).
    #[serde(rename = "FP_ZERO")]
    FpZero,
    /// f' crosses 1 from above.
    #[serde(rename = "FP_ONE_DOWN")]
    FpOneDown,
    /// f' crosses 1 from below.
    #[serde(rename = "FP_ONE_UP")]
    FpOneUp,
    /// f'' crosses zero from negative to positive.
    #[serde(rename = "FPP_ZERO_NEG_TO_POS")]
    FppZeroNegToPos,
    /// f'' crosses zero from positive to negative.
    #[serde(rename = "FPP_ZERO_POS_TO_NEG")]
    FppZeroPosToNeg,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::FpZero => "FP_ZERO",
            EventKind::FpOneDown => "FP_ONE_DOWN",
            EventKind::FpOneUp => "FP_ONE_UP",
            EventKind::FppZeroNegToPos => "FPP_ZERO_NEG_TO_POS",
            EventKind::FppZeroPosToNeg => "FPP_ZERO_POS_TO_NEG",
        }
    }
}

/// A localized sign change along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub state: ShootState,
}

/// How a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Termination {
    #[serde(rename = "HORIZON")]
    Horizon,
    #[serde(rename = "BLOWUP")]
    Blowup { t_escape: f64 },
    #[serde(rename = "LIMIT")]
    Limit { lambda: TargetLimit },
}

/// Dense sample of one shot, with its event log and termination verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ProblemParams,
    /// Shooting parameter f''(0).
    pub c: f64,
    pub samples: Vec<ShootState>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn final_state(&self) -> ShootState {
        *self.samples.last().expect("trajectory has at least the initial sample")
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Number of f''-zero crossings, either direction.
    pub fn fpp_crossings(&self) -> usize {
        self.events
            .iter()
            .filter(|e| {
                matches!(e.kind, EventKind::FppZeroNegToPos | EventKind::FppZeroPosToNeg)
            })
            .count()
    }

    /// CSV export: header `t,f,fp,fpp` (plus `H,L,K` when `monitors` is set),
    /// one row per sample, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W, monitors: bool) -> std::io::Result<()> {
        if monitors {
            writeln!(w, "t,f,fp,fpp,H,L,K")?;
        } else {
            writeln!(w, "t,f,fp,fpp")?;
        }
        for s in &self.samples {
            if monitors {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    s.t,
                    s.f,
                    s.fp,
                    s.fpp,
                    crate::monitors::eval_h(s),
                    crate::monitors::eval_l(s, &self.params),
                    crate::monitors::eval_k(s, &self.params),
                )?;
            } else {
                writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.f, s.fp, s.fpp)?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self, monitors: bool) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, monitors).expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Right-hand side of the first-order system: returns (f', f'', f''') with
/// f''' = -f f'' - beta f'(f' - 1).
pub fn rhs(state: &ShootState, params: &ProblemParams) -> (f64, f64, f64) {
    (
        state.fp,
        state.fpp,
        -state.f * state.fpp - params.beta * state.fp * (state.fp - 1.0),
    )
}

#[inline]
fn rhs3(y: &[f64; 3], beta: f64) -> [f64; 3] {
    [y[1], y[2], -y[0] * y[2] - beta * y[1] * (y[1] - 1.0)]
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error coefficients (5th-order weights minus embedded 4th-order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Quartic interpolant over one accepted step [t0, t0 + h].
struct DenseStep {
    t0: f64,
    h: f64,
    rcont: [[f64; 3]; 5],
}

impl DenseStep {
    fn eval(&self, t: f64) -> [f64; 3] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + theta1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])));
        }
        out
    }
}

fn state_at(t: f64, y: &[f64; 3]) -> ShootState {
    ShootState { t, f: y[0], fp: y[1], fpp: y[2] }
}

/// Event functions: g0 = f', g1 = f' - 1, g2 = f''.
fn event_values(y: &[f64; 3]) -> [f64; 3] {
    [y[1], y[1] - 1.0, y[2]]
}

fn event_kind(which: usize, downward: bool) -> Option<EventKind> {
    match (which, downward) {
        (0, true) => Some(EventKind::FpZero),
        // An upward crossing of f' = 0 has no role in the classification.
        (0, false) => None,
        (1, true) => Some(EventKind::FpOneDown),
        (1, false) => Some(EventKind::FpOneUp),
        (2, false) => Some(EventKind::FppZeroNegToPos),
        (2, true) => Some(EventKind::FppZeroPosToNeg),
        _ => unreachable!(),
    }
}

/// Bisection with secant acceleration on the dense-output polynomial.
fn refine_root(step: &DenseStep, which: usize, mut ta: f64, mut ga: f64, mut tb: f64) -> f64 {
    let g = |t: f64| event_values(&step.eval(t))[which];
    let mut gb = g(tb);
    for _ in 0..EVENT_MAX_ITER {
        if tb - ta <= EVENT_TIME_TOL {
            break;
        }
        // Secant proposal, clipped into the bracket interior; fall back to
        // the midpoint when the proposal is degenerate.
        let mut tm = if (gb - ga).abs() > f64::MIN_POSITIVE {
            tb - gb * (tb - ta) / (gb - ga)
        } else {
            0.5 * (ta + tb)
        };
        let guard = 0.01 * (tb - ta);
        if !(tm > ta + guard && tm < tb - guard) {
            tm = 0.5 * (ta + tb);
        }
        let gm = g(tm);
        if gm == 0.0 {
            return tm;
        }
        if (ga < 0.0) == (gm < 0.0) {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
            gb = gm;
        }
    }
    0.5 * (ta + tb)
}

/// Tracks event sign changes, limit dwell, and the f' -> 1 basin
/// certificate along the stream of dense check points.
struct Watcher {
    limit_eps: f64,
    limit_window: f64,
    /// Dwell start for lambda = 0 and lambda = 1.
    dwell: [Option<f64>; 2],
    last_t: f64,
    last_g: [f64; 3],
    events: Vec<Event>,
    /// Certificates only hold for beta <= 1.
    beta_le_one: bool,
    /// Set once a check point lands in a forward-invariant basin of
    /// f' -> 1; from then on the limit is known even if the dwell window
    /// never completes within the horizon.
    certified_one: bool,
}

impl Watcher {
    fn new(y0: &[f64; 3], beta: f64, controls: &IntegratorControls) -> Self {
        let mut w = Watcher {
            limit_eps: controls.limit_eps,
            limit_window: controls.limit_window,
            dwell: [None, None],
            last_t: 0.0,
            last_g: event_values(y0),
            events: Vec::new(),
            beta_le_one: beta <= 1.0,
            certified_one: false,
        };
        w.certify(y0);
        w.limit_dwell(0.0, y0);
        w
    }

    /// Feed one check point. Returns a detected limit, if the dwell window
    /// has just completed.
    fn observe(&mut self, t: f64, y: &[f64; 3], step: &DenseStep) -> Option<TargetLimit> {
        let g = event_values(y);
        for (which, &g1) in g.iter().enumerate() {
            let g0 = self.last_g[which];
            let crossed = (g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0);
            if crossed && g0.abs().max(g1.abs()) >= EVENT_NOISE_FLOOR {
                if let Some(kind) = event_kind(which, g1 < g0) {
                    let te = refine_root(step, which, self.last_t, g0, t);
                    let state = state_at(te, &step.eval(te));
                    self.events.push(Event { kind, t: te, state });
                }
            }
        }
        self.last_t = t;
        self.last_g = g;
        self.certify(y);
        self.limit_dwell(t, y)
    }

    /// Basin certificates for f' -> 1 (exact for beta in (0, 1]):
    ///
    /// * 0 < f' < 1 with 0 <= f'' <= f (1 - f'), or
    /// * f' > 1 with f (1 - f') <= f'' <= 0.
    ///
    /// Both regions are forward invariant and force f' -> 1. Away from the
    /// slant-asymptote shot, f' approaches 1 only algebraically, so these
    /// are the only finite-time witnesses of the limit.
    fn certify(&mut self, y: &[f64; 3]) {
        if !self.beta_le_one || self.certified_one {
            return;
        }
        let (f, fp, fpp) = (y[0], y[1], y[2]);
        let basin_below = fp > 0.0 && fp < 1.0 && fpp >= 0.0 && fpp <= f * (1.0 - fp);
        let basin_above = fp > 1.0 && fpp <= 0.0 && fpp >= f * (1.0 - fp);
        if basin_below || basin_above {
            self.certified_one = true;
        }
    }

    fn limit_dwell(&mut self, t: f64, y: &[f64; 3]) -> Option<TargetLimit> {
        for (idx, lambda) in [(0usize, 0.0), (1usize, 1.0)] {
            let dev = (y[1] - lambda).abs().max(y[2].abs());
            if dev < self.limit_eps {
                let start = *self.dwell[idx].get_or_insert(t);
                if t - start >= self.limit_window {
                    return Some(if idx == 0 { TargetLimit::Zero } else { TargetLimit::One });
                }
            } else {
                self.dwell[idx] = None;
            }
        }
        None
    }
}

/// Emits samples on the uniform grid k * SAMPLE_DT without accumulating
/// floating-point drift.
struct SampleGrid {
    next_index: u64,
}

impl SampleGrid {
    fn new() -> Self {
        SampleGrid { next_index: 1 }
    }

    fn next_time(&self) -> f64 {
        self.next_index as f64 * SAMPLE_DT
    }

    fn advance(&mut self) {
        self.next_index += 1;
    }
}

/// Exact affine (b = 1, c = 0) and constant (b = 0, c = 0) trajectories.
/// Integrating them numerically only produces event chatter at machine
/// precision, so they are emitted in closed form.
fn exact_trajectory(params: &ProblemParams, c: f64, controls: &IntegratorControls) -> Trajectory {
    let affine = params.b == 1.0;
    let mut samples = Vec::new();
    let mut grid = SampleGrid { next_index: 0 };
    loop {
        let t = grid.next_time();
        if t >= controls.t_max {
            break;
        }
        let f = if affine { params.a + t } else { params.a };
        samples.push(ShootState { t, f, fp: params.b, fpp: 0.0 });
        grid.advance();
    }
    let t = controls.t_max;
    let f = if affine { params.a + t } else { params.a };
    samples.push(ShootState { t, f, fp: params.b, fpp: 0.0 });
    // Initial sample must carry the inputs bit-exactly.
    samples[0] = ShootState { t: 0.0, f: params.a, fp: params.b, fpp: c };
    Trajectory {
        params: *params,
        c,
        samples,
        events: Vec::new(),
        termination: Termination::Limit {
            lambda: if affine { TargetLimit::One } else { TargetLimit::Zero },
        },
    }
}

/// Events at t = 0 for starts sitting exactly on f' = 0 or f' = 1: the
/// crossing time of the set definitions is then t = 0 itself, with the
/// departure direction given by f''(0) = c.
fn seed_departure_events(params: &ProblemParams, c: f64, events: &mut Vec<Event>) {
    let state = ShootState { t: 0.0, f: params.a, fp: params.b, fpp: c };
    if params.b == 1.0 && c != 0.0 {
        let kind = if c < 0.0 { EventKind::FpOneDown } else { EventKind::FpOneUp };
        events.push(Event { kind, t: 0.0, state });
    }
    if params.b == 0.0 && c < 0.0 {
        events.push(Event { kind: EventKind::FpZero, t: 0.0, state });
    }
}

/// Initial step size heuristic (order-5 version of the standard algorithm).
fn initial_step(y0: &[f64; 3], f0: &[f64; 3], beta: f64, controls: &IntegratorControls) -> f64 {
    let sc: Vec<f64> = y0.iter().map(|y| controls.atol + controls.rtol * y.abs()).collect();
    let rms = |v: &[f64; 3]| -> f64 {
        let s: f64 = v.iter().zip(&sc).map(|(x, s)| (x / s) * (x / s)).sum();
        (s / 3.0).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(controls.t_max);
    let y1 = [y0[0] + h0 * f0[0], y0[1] + h0 * f0[1], y0[2] + h0 * f0[2]];
    let f1 = rhs3(&y1, beta);
    let diff = [f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]];
    let d2 = rms(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(controls.t_max)
}

/// Integrate the shot with initial data (a, b, c) up to `t_max`, blow-up,
/// or a dwell-confirmed limit of f'.
pub fn integrate(
    params: &ProblemParams,
    c: f64,
    controls: &IntegratorControls,
) -> Result<Trajectory> {
    controls.validate()?;
    params.validate()?;
    if !c.is_finite() {
        return Err(Error::InvalidParams(format!("c must be finite, got {c}")));
    }

    if c == 0.0 && (params.b == 0.0 || params.b == 1.0) {
        return Ok(exact_trajectory(params, c, controls));
    }

    let beta = params.beta;
    let mut t = 0.0_f64;
    let mut y = [params.a, params.b, c];
    let mut k1 = rhs3(&y, beta);
    let mut h = initial_step(&y, &k1, beta, controls);

    let mut samples = vec![ShootState { t: 0.0, f: params.a, fp: params.b, fpp: c }];
    let mut grid = SampleGrid::new();
    let mut watcher = Watcher::new(&y, beta, controls);
    seed_departure_events(params, c, &mut watcher.events);

    // PI step controller state (Hairer's dopri5 constants).
    const SAFE: f64 = 0.9;
    const BETA_PI: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA_PI * 0.75;
    const FACC1: f64 = 5.0; // max step increase
    const FACC2: f64 = 0.1; // max step decrease
    let mut facold = 1e-4_f64;

    let mut termination = None;
    // Generous runaway guard; never reached by well-posed inputs.
    const MAX_STEPS: u64 = 50_000_000;
    let mut nsteps: u64 = 0;

    while termination.is_none() {
        nsteps += 1;
        if nsteps > MAX_STEPS {
            termination = Some(if watcher.certified_one {
                Termination::Limit { lambda: TargetLimit::One }
            } else {
                Termination::Horizon
            });
            break;
        }

        let last_step = t + h >= controls.t_max;
        let hs = if last_step { controls.t_max - t } else { h };

        // Stages.
        let mut ys = [0.0; 3];
        for i in 0..3 {
            ys[i] = y[i] + hs * A21 * k1[i];
        }
        let k2 = rhs3(&ys, beta);
        for i in 0..3 {
            ys[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        let k3 = rhs3(&ys, beta);
        for i in 0..3 {
            ys[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        let k4 = rhs3(&ys, beta);
        for i in 0..3 {
            ys[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        let k5 = rhs3(&ys, beta);
        for i in 0..3 {
            ys[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let k6 = rhs3(&ys, beta);
        let mut ynew = [0.0; 3];
        for i in 0..3 {
            ynew[i] =
                y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        let k7 = rhs3(&ynew, beta);

        // Weighted RMS error of the embedded pair.
        let mut err = 0.0;
        for i in 0..3 {
            let e = hs
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = controls.atol + controls.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / 3.0).sqrt();

        if !err.is_finite() {
            // Overflow inside the stages: shrink hard; step collapse below
            // h_min is the blow-up verdict.
            h *= 0.1;
            if h < controls.h_min {
                termination = Some(Termination::Blowup { t_escape: t });
            }
            continue;
        }

        if err <= 1.0 {
            // Accepted. Build the dense interpolant.
            let mut rcont = [[0.0; 3]; 5];
            for i in 0..3 {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - hs * k7[i] - bspl;
                rcont[4][i] = hs
                    * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]);
            }
            let step = DenseStep { t0: t, h: hs, rcont };
            let tnew = t + hs;

            // Walk the dense grid inside the step, then the step endpoint.
            'emit: {
                while grid.next_time() <= tnew {
                    let ts = grid.next_time();
                    let yv = step.eval(ts);
                    samples.push(state_at(ts, &yv));
                    grid.advance();
                    if let Some(lambda) = watcher.observe(ts, &yv, &step) {
                        termination = Some(Termination::Limit { lambda });
                        break 'emit;
                    }
                }
                if tnew > watcher.last_t {
                    if let Some(lambda) = watcher.observe(tnew, &ynew, &step) {
                        termination = Some(Termination::Limit { lambda });
                        push_final(&mut samples, state_at(tnew, &ynew));
                        break 'emit;
                    }
                }
                if ynew[1].abs() >= controls.blowup_bound
                    || ynew[2].abs() >= controls.blowup_bound
                {
                    termination = Some(Termination::Blowup { t_escape: tnew });
                    push_final(&mut samples, state_at(tnew, &ynew));
                    break 'emit;
                }
                if last_step {
                    termination = Some(if watcher.certified_one {
                        Termination::Limit { lambda: TargetLimit::One }
                    } else {
                        Termination::Horizon
                    });
                    push_final(&mut samples, state_at(tnew, &ynew));
                    break 'emit;
                }
            }

            // PI step-size update.
            let errn = err.max(1e-50);
            let fac11 = errn.powf(EXPO1);
            let fac = (fac11 / facold.powf(BETA_PI) / SAFE).clamp(FACC2, FACC1);
            facold = errn.max(1e-4);
            t = tnew;
            y = ynew;
            k1 = k7; // FSAL
            h = hs / fac;
        } else {
            // Rejected: shrink without the PI memory term.
            let fac11 = err.powf(EXPO1);
            h = hs / (fac11 / SAFE).min(FACC1);
            if h < controls.h_min {
                termination = Some(Termination::Blowup { t_escape: t });
            }
        }
    }

    let mut events = watcher.events;
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("event times are finite"));

    Ok(Trajectory {
        params: *params,
        c,
        samples,
        events,
        termination: termination.expect("loop exits only with a verdict"),
    })
}

/// Append the terminal state unless it coincides with the last grid sample.
fn push_final(samples: &mut Vec<ShootState>, state: ShootState) {
    if let Some(last) = samples.last() {
        if state.t <= last.t + 1e-12 * state.t.max(1.0) {
            return;
        }
    }
    samples.push(state);
}
