//! Crocco-type change of variables on strictly concave, increasing shots.
//!
//! With y = f'(t)^2 and v(y) = f(t), valid while f' > 0 and f'' < 0, the
//! equation transforms to
//!
//!   v''(y) = v(y) v'(y)^2 / sqrt(y) + 2 beta (sqrt(y) - 1) v'(y)^3
//!
//! on (0, b^2], with v(b^2) = a and v'(b^2) = 1/(2c). The slope v' is taken
//! from the identity v' = 1/(2 f''), not from differences of v; only v''
//! is differenced when checking the residual.

use crate::error::{Error, Result};
use crate::numeric::{derivative_5pt, Pchip};
use crate::ode::Trajectory;
use crate::problem::ProblemParams;

/// Minimum distance from the singular endpoint y = 0 admitted by the
/// residual check.
pub const Y_MIN: f64 = 1e-6;

/// The transformed profile, stored with y strictly increasing up to b^2.
#[derive(Debug, Clone, PartialEq)]
pub struct CroccoProfile {
    pub params: ProblemParams,
    /// Shooting value of the source trajectory.
    pub c: f64,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub vp: Vec<f64>,
}

impl CroccoProfile {
    /// Sub-profile with y >= `y_min`.
    pub fn truncated(&self, y_min: f64) -> CroccoProfile {
        let keep: Vec<usize> =
            (0..self.y.len()).filter(|&i| self.y[i] >= y_min).collect();
        CroccoProfile {
            params: self.params,
            c: self.c,
            y: keep.iter().map(|&i| self.y[i]).collect(),
            v: keep.iter().map(|&i| self.v[i]).collect(),
            vp: keep.iter().map(|&i| self.vp[i]).collect(),
        }
    }

    /// CSV export: header `y,v,vp`, 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "y,v,vp")?;
        for i in 0..self.y.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.y[i], self.v[i], self.vp[i])?;
        }
        Ok(())
    }
}

/// Transform a trajectory to the Crocco profile. Consumes the maximal
/// initial segment on which f' > 0 and f'' < 0: any resolvable critical
/// shot eventually leaves that regime at the resolution of the shooting
/// parameter, so the tail past the first violation carries no usable
/// profile. Shots that start outside the regime (convex starts, affine and
/// constant solutions) have no segment at all and error.
pub fn to_crocco(traj: &Trajectory) -> Result<CroccoProfile> {
    let mut n = traj.samples.len();
    for (i, s) in traj.samples.iter().enumerate() {
        if s.fp <= 0.0 || s.fpp >= 0.0 {
            if i == 0 {
                return Err(Error::NotMonotone { index: 0 });
            }
            n = i;
            break;
        }
    }
    // Time order gives decreasing y; store reversed so y increases to b^2.
    let mut y = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut vp = Vec::with_capacity(n);
    for s in traj.samples[..n].iter().rev() {
        y.push(s.fp * s.fp);
        v.push(s.f);
        vp.push(1.0 / (2.0 * s.fpp));
    }
    for i in 1..n {
        if y[i] <= y[i - 1] {
            return Err(Error::NotMonotone { index: n - 1 - i });
        }
    }
    Ok(CroccoProfile { params: traj.params, c: traj.c, y, v, vp })
}

/// Max relative residual of the transformed equation over the profile's
/// interior points: |v''_fd - rhs| / (1 + |rhs|). All samples must keep
/// y >= Y_MIN, away from the singular endpoint.
pub fn crocco_residual(profile: &CroccoProfile, params: &ProblemParams) -> Result<f64> {
    if let Some(&y0) = profile.y.first() {
        if y0 < Y_MIN {
            return Err(Error::Domain { y: y0, y_min: Y_MIN });
        }
    }
    let n = profile.y.len();
    if n < 5 {
        return Err(Error::WindowTooShort { count: n, needed: 5 });
    }
    let vpp = derivative_5pt(&profile.y, &profile.vp);
    let mut worst = 0.0_f64;
    for (i, vpp_i) in vpp.iter().enumerate().take(n - 1).skip(1) {
        let y = profile.y[i];
        let sq = y.sqrt();
        let rhs = profile.v[i] * profile.vp[i] * profile.vp[i] / sq
            + 2.0 * params.beta * (sq - 1.0) * profile.vp[i].powi(3);
        let rel = (vpp_i - rhs).abs() / (1.0 + rhs.abs());
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Comparison quantities from the uniqueness argument: w = v1 - v2 and
/// W = 1/v1' - 1/v2' on a common grid, with W(b^2) = 2(c1 - c2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingReport {
    /// Whether w' < 0 across the whole common grid.
    pub w_sign_ok: bool,
    /// W at the right endpoint y = b^2.
    pub w_endpoint: f64,
}

/// Resample both profiles on a common uniform grid (monotone cubic
/// interpolation) and report the ordering quantities.
pub fn ordering_check(p1: &CroccoProfile, p2: &CroccoProfile) -> Result<OrderingReport> {
    if p1.params.beta != p2.params.beta
        || p1.params.a != p2.params.a
        || p1.params.b != p2.params.b
    {
        return Err(Error::GridMismatch("profiles have different (beta, a, b)".into()));
    }
    let lo = p1.y[0].max(p2.y[0]);
    let hi = p1.y.last().unwrap().min(*p2.y.last().unwrap());
    if hi <= lo {
        return Err(Error::GridMismatch(format!("no overlap: [{lo}, {hi}]")));
    }

    let n = 512;
    let i1v = Pchip::new(&p1.y, &p1.v);
    let i2v = Pchip::new(&p2.y, &p2.v);
    let i1p = Pchip::new(&p1.y, &p1.vp);
    let i2p = Pchip::new(&p2.y, &p2.vp);

    let mut w = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let y = lo + (hi - lo) * k as f64 / n as f64;
        w.push(i1v.eval(y) - i2v.eval(y));
    }
    let mut w_sign_ok = true;
    for pair in w.windows(2) {
        if pair[1] - pair[0] >= 0.0 {
            w_sign_ok = false;
            break;
        }
    }
    // W at the shared right endpoint; on untruncated profiles this is
    // exactly 1/(2c1)^-1... i.e. 2(c1 - c2).
    let w_endpoint = 1.0 / i1p.eval(hi) - 1.0 / i2p.eval(hi);
    Ok(OrderingReport { w_sign_ok, w_endpoint })
}
