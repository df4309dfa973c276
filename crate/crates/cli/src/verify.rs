//! Theorem-verification suites. Each suite samples trajectories around the
//! computed critical constants and checks every classification the theory
//! predicts, emitting a machine-readable report.

use mcbl_core::classifier::{classify, Family, LimitTag, RegimeLabel, Shape};
use mcbl_core::shooting::{find_c_star, find_c_upper, lower_bound_c_star, sufficient_condition_limit_one};
use mcbl_core::{integrate, IntegratorControls, ProblemParams, TargetLimit, Termination};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    PASS,
    FAIL,
    SKIP,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCase {
    pub description: String,
    pub params: serde_json::Value,
    pub status: Status,
    pub details: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub cases: Vec<VerifyCase>,
    pub exit_code: i32,
}

impl VerifyReport {
    fn new(suite: &str, cases: Vec<VerifyCase>) -> Self {
        let exit_code = if cases.iter().any(|c| c.status == Status::FAIL) { 5 } else { 0 };
        VerifyReport { suite: suite.to_string(), cases, exit_code }
    }

    pub fn passed(&self) -> bool {
        self.exit_code == 0
    }
}

pub fn run_suite(
    name: &str,
    params: &ProblemParams,
    controls: &IntegratorControls,
    tol: f64,
) -> Result<VerifyReport, String> {
    match name {
        "theorem4" => Ok(theorem4(params, controls, tol)),
        "theorem5" => Ok(theorem5(params, controls, tol)),
        "beta-gt-1" => Ok(beta_gt_1(params, controls, tol)),
        other => Err(format!(
            "unknown suite `{other}`; expected theorem4, theorem5 or beta-gt-1"
        )),
    }
}

fn params_json(p: &ProblemParams) -> serde_json::Value {
    json!({ "beta": p.beta, "a": p.a, "b": p.b })
}

fn case(description: &str, params: serde_json::Value, ok: bool, details: String) -> VerifyCase {
    VerifyCase {
        description: description.to_string(),
        params,
        status: if ok { Status::PASS } else { Status::FAIL },
        details,
    }
}

fn skip(description: &str, params: serde_json::Value, why: &str) -> VerifyCase {
    VerifyCase {
        description: description.to_string(),
        params,
        status: Status::SKIP,
        details: why.to_string(),
    }
}

/// Classify the shots on `cs` (fanning out to the ambient worker pool) and
/// collect the mismatches against the expected (family, shape, limit).
fn check_region(
    params: &ProblemParams,
    controls: &IntegratorControls,
    cs: &[f64],
    expect: (Family, Shape, LimitTag),
) -> (bool, String) {
    let mut bad = Vec::new();
    for (c, label) in mcbl_core::shooting::sweep(params, cs, controls) {
        match label {
            Ok(RegimeLabel { family, shape, limit })
                if (family, shape, limit) == expect => {}
            Ok(label) => bad.push(format!("c={c:.6}: got {label:?}")),
            Err(e) => bad.push(format!("c={c:.6}: error {e}")),
        }
    }
    if bad.is_empty() {
        (true, format!("{} shots classified {:?}", cs.len(), expect))
    } else {
        (false, format!("expected {expect:?}; violations: {}", bad.join("; ")))
    }
}

type Region = (&'static str, Vec<f64>, (Family, Shape, LimitTag));

fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
}

fn closed_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Full classification ladder for beta in (0, 1], b >= 1: blow-up below
/// c*, concave-convex on (c*, c**), concave on [c**, 0], convex-concave
/// above 0; no unresolved shots anywhere.
pub fn theorem4(params: &ProblemParams, controls: &IntegratorControls, tol: f64) -> VerifyReport {
    let pj = params_json(params);
    let mut cases = Vec::new();

    if !(params.beta > 0.0 && params.beta <= 1.0 && params.b >= 1.0) {
        return VerifyReport::new(
            "theorem4",
            vec![skip("preconditions", pj, "suite requires beta in (0,1] and b >= 1")],
        );
    }

    let c_star = match find_c_star(params, controls, tol) {
        Ok(cv) => cv,
        Err(e) => {
            cases.push(case("criticals.c_star", pj.clone(), false, e.to_string()));
            return VerifyReport::new("theorem4", cases);
        }
    };
    let c_upper = match find_c_upper(params, controls, tol) {
        Ok(cv) => cv,
        Err(e) => {
            cases.push(case("criticals.c_upper", pj.clone(), false, e.to_string()));
            return VerifyReport::new("theorem4", cases);
        }
    };

    let bound = lower_bound_c_star(params);
    let order_ok = bound <= c_star.value
        && c_star.value < 0.0
        && c_star.value < c_upper.value
        && c_upper.value <= -params.a * (params.b - 1.0) + 1e-6;
    cases.push(case(
        "criticals.order",
        pj.clone(),
        order_ok,
        format!(
            "bound={:.9} <= c*={:.9} < c**={:.9} <= -a(b-1)={:.9}",
            bound,
            c_star.value,
            c_upper.value,
            -params.a * (params.b - 1.0)
        ),
    ));

    let regions: [Region; 4] = [
        (
            "region.blowup",
            interior_grid(c_star.value - 2.0, c_star.value, 8),
            (Family::C22, Shape::Concave, LimitTag::Blowup),
        ),
        (
            "region.concave_convex",
            interior_grid(c_star.value, c_upper.value, 8),
            (Family::C21To1, Shape::ConcaveConvex, LimitTag::One),
        ),
        (
            "region.concave",
            closed_grid(c_upper.value, 0.0, 8),
            (Family::C1, Shape::Concave, LimitTag::One),
        ),
        (
            "region.convex_concave",
            (1..=8).map(|k| 0.25 * k as f64).collect(),
            (Family::C0, Shape::ConvexConcave, LimitTag::One),
        ),
    ];
    let mut unresolved = 0usize;
    for (name, grid, expect) in regions {
        for &c in &grid {
            if let Ok(t) = integrate(params, c, controls) {
                if let Ok(l) = classify(&t) {
                    if l.family == Family::Unresolved {
                        unresolved += 1;
                    }
                }
            }
        }
        let (ok, details) = check_region(params, controls, &grid, expect);
        cases.push(case(name, pj.clone(), ok, details));
    }
    cases.push(case(
        "unresolved.count",
        pj.clone(),
        unresolved == 0,
        format!("{unresolved} unresolved shots on the 32-point grid"),
    ));

    VerifyReport::new("theorem4", cases)
}

/// Classification ladder for beta in (0, 1] and 0 <= b < 1, including the
/// b = 0 degenerate cases.
pub fn theorem5(params: &ProblemParams, controls: &IntegratorControls, tol: f64) -> VerifyReport {
    let pj = params_json(params);
    let mut cases = Vec::new();

    if !(params.beta > 0.0 && params.beta <= 1.0 && params.b < 1.0) {
        return VerifyReport::new(
            "theorem5",
            vec![skip("preconditions", pj, "suite requires beta in (0,1] and b < 1")],
        );
    }

    if params.b == 0.0 {
        // Degenerate wall slope: c < 0 escapes, c = 0 is constant, c > 0
        // splits into convex then convex-concave at some c** >= a.
        for c in [-1.5, -0.5, -0.1] {
            let traj = integrate(params, c, controls).unwrap();
            let ok = matches!(traj.termination, Termination::Blowup { .. });
            cases.push(case(
                "b0.negative_c_escapes",
                json!({"beta": params.beta, "a": params.a, "b": 0.0, "c": c}),
                ok,
                format!("termination {:?}", traj.termination),
            ));
        }
        let traj = integrate(params, 0.0, controls).unwrap();
        let constant = traj.samples.iter().all(|s| s.f == params.a && s.fp == 0.0)
            && traj.termination == Termination::Limit { lambda: TargetLimit::Zero };
        cases.push(case(
            "b0.zero_c_constant",
            pj.clone(),
            constant,
            format!("f stays at a = {}, termination {:?}", params.a, traj.termination),
        ));
        match find_c_upper(params, controls, tol) {
            Ok(cu) => {
                let ok = cu.value >= params.a - 1e-9;
                cases.push(case(
                    "b0.c_upper_at_least_a",
                    pj.clone(),
                    ok,
                    format!("c** = {:.9} vs a = {}", cu.value, params.a),
                ));
                let (ok, details) = check_region(
                    params,
                    controls,
                    &interior_grid(0.0, cu.value, 4),
                    (Family::C1p, Shape::Convex, LimitTag::One),
                );
                cases.push(case("b0.convex_region", pj.clone(), ok, details));
                let (ok, details) = check_region(
                    params,
                    controls,
                    &closed_grid(cu.value + 0.3, cu.value + 2.0, 4),
                    (Family::C2p, Shape::ConvexConcave, LimitTag::One),
                );
                cases.push(case("b0.convex_concave_region", pj.clone(), ok, details));
            }
            Err(e) => cases.push(case("b0.c_upper_at_least_a", pj.clone(), false, e.to_string())),
        }
        return VerifyReport::new("theorem5", cases);
    }

    let c_star = match find_c_star(params, controls, tol) {
        Ok(cv) => cv,
        Err(e) => {
            cases.push(case("criticals.c_star", pj.clone(), false, e.to_string()));
            return VerifyReport::new("theorem5", cases);
        }
    };
    let c_upper = match find_c_upper(params, controls, tol) {
        Ok(cv) => cv,
        Err(e) => {
            cases.push(case("criticals.c_upper", pj.clone(), false, e.to_string()));
            return VerifyReport::new("theorem5", cases);
        }
    };

    let order_ok = c_star.value < 0.0 && c_upper.value >= params.a * (1.0 - params.b) - 1e-9;
    cases.push(case(
        "criticals.order",
        pj.clone(),
        order_ok,
        format!(
            "c*={:.9} < 0 and c**={:.9} >= a(1-b)={:.9}",
            c_star.value,
            c_upper.value,
            params.a * (1.0 - params.b)
        ),
    ));

    // The critical shot itself: concave with limit zero.
    let tight = IntegratorControls { rtol: 1e-12, atol: 1e-12, ..*controls };
    match integrate(params, c_star.value, &tight).and_then(|t| classify(&t)) {
        Ok(label) => {
            let ok = label.shape == Shape::Concave && label.limit == LimitTag::Zero;
            cases.push(case(
                "critical_shot.concave_limit_zero",
                pj.clone(),
                ok,
                format!("label {label:?}"),
            ));
        }
        Err(e) => cases.push(case("critical_shot.concave_limit_zero", pj.clone(), false, e.to_string())),
    }

    let regions: [Region; 4] = [
        (
            "region.blowup",
            interior_grid(c_star.value - 2.0, c_star.value, 5),
            (Family::C0p2, Shape::Concave, LimitTag::Blowup),
        ),
        (
            "region.concave_convex",
            interior_grid(c_star.value, 0.0, 5),
            (Family::C0p1, Shape::ConcaveConvex, LimitTag::One),
        ),
        (
            "region.convex",
            closed_grid(0.0, c_upper.value, 5),
            (Family::C1p, Shape::Convex, LimitTag::One),
        ),
        (
            "region.convex_concave",
            closed_grid(c_upper.value + 0.4, c_upper.value + 2.0, 5),
            (Family::C2p, Shape::ConvexConcave, LimitTag::One),
        ),
    ];
    for (name, grid, expect) in regions {
        let (ok, details) = check_region(params, controls, &grid, expect);
        cases.push(case(name, pj.clone(), ok, details));
    }

    VerifyReport::new("theorem5", cases)
}

/// Partial results for beta > 1: the unique limit-zero shot when
/// b <= beta/(beta-1), the initial-data condition forcing limit one when
/// beta in (1, 2] and a > 0, and emptiness of the concave family at a = 0.
pub fn beta_gt_1(params: &ProblemParams, controls: &IntegratorControls, tol: f64) -> VerifyReport {
    let pj = params_json(params);
    let mut cases = Vec::new();

    if params.beta <= 1.0 {
        return VerifyReport::new(
            "beta-gt-1",
            vec![skip("preconditions", pj, "suite requires beta > 1")],
        );
    }

    let b_cap = params.beta / (params.beta - 1.0);
    if params.b > 0.0 && params.b <= b_cap {
        match find_c_star(params, controls, tol) {
            Ok(cv) => {
                let tight = IntegratorControls { rtol: 1e-12, atol: 1e-12, ..*controls };
                let term = integrate(params, cv.value, &tight).map(|t| t.termination);
                let ok = matches!(term, Ok(Termination::Limit { lambda: TargetLimit::Zero }));
                cases.push(case(
                    "limit_zero_shot",
                    pj.clone(),
                    ok,
                    format!("c* = {:.9}, termination {term:?}", cv.value),
                ));
            }
            Err(e) => cases.push(case("limit_zero_shot", pj.clone(), false, e.to_string())),
        }
    } else {
        cases.push(skip(
            "limit_zero_shot",
            pj.clone(),
            "requires 0 < b <= beta/(beta-1); nothing is guaranteed beyond it",
        ));
    }

    if params.beta <= 2.0 && params.a > 0.0 {
        // Five values satisfying 2ac >= b^2 - (2b - beta)a^2; their limits
        // approach 1 only algebraically, so detection needs a coarse dwell
        // tolerance and a longer horizon.
        let threshold =
            (params.b * params.b - (2.0 * params.b - params.beta) * params.a * params.a)
                / (2.0 * params.a);
        let coarse = IntegratorControls {
            t_max: controls.t_max.max(200.0),
            limit_eps: controls.limit_eps.max(1e-3),
            ..*controls
        };
        let mut bad = Vec::new();
        for k in 0..5 {
            let c = threshold + k as f64;
            match sufficient_condition_limit_one(params, c) {
                Ok(true) => {}
                other => {
                    bad.push(format!("condition check failed at c={c}: {other:?}"));
                    continue;
                }
            }
            match integrate(params, c, &coarse).map(|t| t.termination) {
                Ok(Termination::Limit { lambda: TargetLimit::One }) => {}
                other => bad.push(format!("c={c}: {other:?}")),
            }
        }
        cases.push(case(
            "sufficient_condition_limit_one",
            pj.clone(),
            bad.is_empty(),
            if bad.is_empty() {
                format!("5 shots above threshold {threshold:.6} all reached limit one")
            } else {
                bad.join("; ")
            },
        ));
    } else {
        cases.push(skip(
            "sufficient_condition_limit_one",
            pj.clone(),
            "requires beta in (1, 2] and a > 0",
        ));
    }

    if params.a == 0.0 {
        let mut hits = Vec::new();
        for k in 0..15 {
            let c = -5.0 + 5.0 * k as f64 / 14.0;
            match integrate(params, c, controls).and_then(|t| classify(&t)) {
                Ok(label) if label.family == Family::C1 => hits.push(format!("c={c:.4}")),
                _ => {}
            }
        }
        cases.push(case(
            "concave_family_empty_at_a_zero",
            pj.clone(),
            hits.is_empty(),
            if hits.is_empty() {
                "no C1 member among 15 samples in [-5, 0]".to_string()
            } else {
                format!("C1 members found: {}", hits.join(", "))
            },
        ));
    } else {
        cases.push(skip(
            "concave_family_empty_at_a_zero",
            pj.clone(),
            "emptiness of C1 is only asserted for a = 0",
        ));
    }

    VerifyReport::new("beta-gt-1", cases)
}
