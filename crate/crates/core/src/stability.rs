//! Stability classifiers.
//!
//! Two spectral-free routes are implemented and agree on their
//! overlap:
//!
//! * the general route: boundedness of the weight-ratio sup, pointwise
//!   decay of rho_{t,p} on the non-equilibrium set (replaced by the
//!   exact escape check when every sampled point leaves the image in
//!   finite time) and the sign of h on a positive-measure equilibrium
//!   set;
//! * the unweighted route (rho = 1, F nonvanishing): boundedness of
//!   the orbit integral of (h - F'/p)/F, plus its divergence to
//!   -infinity when the flow is surjective.
//!
//! Boundedness of a log-scale curve is decided by two tests together:
//! the fitted slope of the tail must stay below `slope_tol` and the
//! late-window rise must stay below `bound_tol`. The second test is
//! what catches logarithmic growth, whose tail slope decays to zero
//! while the curve still climbs without bound.
//!
//! Every verdict carries the numeric evidence it was derived from, so
//! an Inconclusive outcome is auditable.

use serde::Serialize;

use crate::error::{EngineError, Result};
use crate::fit;
use crate::grid;
use crate::model::{partition_domain, DomainPartition, ProblemSpec};
use crate::weights::WeightEvolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayClass {
    DecaysToZero,
    BoundedNonvanishing,
    Grows,
    Undetermined,
}

/// Sampled curve t -> value with its fitted tail slope.
#[derive(Debug, Clone, Serialize)]
pub struct DecayEvidence {
    pub samples: Vec<(f64, f64)>,
    pub log_slope: f64,
    pub classification: DecayClass,
}

impl DecayEvidence {
    /// Classify a nonnegative curve. `slope_tol` separates genuine
    /// trends from flat noise; `value_tol` (relative to the initial
    /// value) decides whether the curve actually reached zero. A curve
    /// that hits exact zero and stays there has decayed (the indicator
    /// mechanism), regardless of slope.
    pub fn classify(samples: Vec<(f64, f64)>, slope_tol: f64, value_tol: f64) -> DecayEvidence {
        if samples.is_empty() {
            return DecayEvidence {
                samples,
                log_slope: 0.0,
                classification: DecayClass::Undetermined,
            };
        }
        let initial = samples[0].1;
        let final_value = samples[samples.len() - 1].1;

        // zero from some time onward counts as decayed
        if let Some(first_zero) = samples.iter().position(|&(_, v)| v <= 0.0) {
            if samples[first_zero..].iter().all(|&(_, v)| v <= 0.0) && first_zero > 0 {
                return DecayEvidence {
                    samples,
                    log_slope: f64::NEG_INFINITY,
                    classification: DecayClass::DecaysToZero,
                };
            }
        }
        if initial <= 0.0 {
            let class = if samples.iter().all(|&(_, v)| v <= 0.0) {
                DecayClass::DecaysToZero
            } else {
                DecayClass::Undetermined
            };
            return DecayEvidence {
                samples,
                log_slope: 0.0,
                classification: class,
            };
        }

        let horizon = samples[samples.len() - 1].0;
        let tail: Vec<(f64, f64)> = samples
            .iter()
            .copied()
            .filter(|&(t, v)| t >= horizon / 2.0 && v > 0.0)
            .collect();
        let xs: Vec<f64> = tail.iter().map(|s| s.0).collect();
        let ys: Vec<f64> = tail.iter().map(|s| s.1.ln()).collect();
        let (slope, _) = fit::line(&xs, &ys);

        let classification = if slope < -slope_tol && final_value < value_tol * initial {
            DecayClass::DecaysToZero
        } else if slope > slope_tol {
            DecayClass::Grows
        } else if slope.abs() <= slope_tol {
            DecayClass::BoundedNonvanishing
        } else {
            DecayClass::Undetermined
        };
        DecayEvidence {
            samples,
            log_slope: slope,
            classification,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointDecay {
    pub x: f64,
    pub evidence: DecayEvidence,
}

#[derive(Debug, Clone, Serialize)]
pub enum CriterionEvidence {
    /// A log-scale curve with its tail diagnostics.
    Curve {
        samples: Vec<(f64, f64)>,
        tail_slope: f64,
        late_rise: f64,
    },
    PerPoint(Vec<PointDecay>),
    Samples(Vec<(f64, f64)>),
    Scalar(f64),
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub outcome: Outcome,
    pub summary: String,
    pub evidence: CriterionEvidence,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub description: String,
    pub point: Option<f64>,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictMeta {
    pub classifier: String,
    pub horizon: f64,
    pub grid_size: usize,
    pub time_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub criteria: Vec<CriterionResult>,
    pub witness: Option<Witness>,
    pub meta: VerdictMeta,
}

impl Verdict {
    fn fold(
        criteria: Vec<CriterionResult>,
        witness: Option<Witness>,
        meta: VerdictMeta,
    ) -> Verdict {
        let any_fail = criteria.iter().any(|c| c.outcome == Outcome::Fail);
        let all_pass = criteria.iter().all(|c| c.outcome == Outcome::Pass);
        let status = if any_fail {
            Status::Unstable
        } else if all_pass {
            Status::Stable
        } else {
            Status::Inconclusive
        };
        Verdict {
            status,
            criteria,
            witness: if any_fail { witness } else { None },
            meta,
        }
    }

    pub fn criterion(&self, id: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.id == id)
    }
}

/// Tail diagnostics of a log-scale curve: fitted slope over the last
/// half and the rise of the final value over the quarter-horizon mark.
fn curve_tail_diagnostics(samples: &[(f64, f64)]) -> (f64, f64) {
    if samples.len() < 2 {
        return (0.0, 0.0);
    }
    let horizon = samples[samples.len() - 1].0;
    let tail: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= horizon / 2.0)
        .collect();
    let xs: Vec<f64> = tail.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = tail.iter().map(|s| s.1).collect();
    let (slope, _) = fit::line(&xs, &ys);

    let mid_idx = samples
        .iter()
        .position(|&(t, _)| t >= horizon / 4.0)
        .unwrap_or(0);
    let late_rise = samples[samples.len() - 1].1 - samples[mid_idx].1;
    (slope, late_rise)
}

fn bounded_curve_criterion(
    id: &str,
    samples: Vec<(f64, f64)>,
    slope_tol: f64,
    bound_tol: f64,
    what: &str,
) -> CriterionResult {
    if samples.len() < 3 {
        return CriterionResult {
            id: id.to_string(),
            outcome: Outcome::Pass,
            summary: format!(
                "{}: too few samples, trivially bounded (low confidence)",
                what
            ),
            evidence: CriterionEvidence::Curve {
                samples,
                tail_slope: 0.0,
                late_rise: 0.0,
            },
        };
    }
    let (tail_slope, late_rise) = curve_tail_diagnostics(&samples);
    let bounded = tail_slope <= slope_tol && late_rise <= bound_tol;
    CriterionResult {
        id: id.to_string(),
        outcome: if bounded {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        summary: if bounded {
            format!(
                "{} bounded: tail slope {:.3e}, late rise {:.3e}",
                what, tail_slope, late_rise
            )
        } else {
            format!(
                "{} unbounded: tail slope {:.3e}, late rise {:.3e}",
                what, tail_slope, late_rise
            )
        },
        evidence: CriterionEvidence::Curve {
            samples,
            tail_slope,
            late_rise,
        },
    }
}

/// Boundedness of the semigroup: sup over the grid of rho_{t,p}/rho
/// sampled on a uniform time grid; bounded log-sup curve passes.
pub fn check_boundedness(
    we: &WeightEvolution,
    horizon: f64,
    grid_pts: &[f64],
) -> Result<CriterionResult> {
    let ts = grid::time_grid(horizon, we.problem.sampling.time_samples);
    let mut samples = Vec::new();
    for &t in &ts {
        // argmax refinement matters here: the sup can live in a thin
        // layer behind the moving image boundary that no fixed grid
        // resolves
        let est = we.operator_norm(t, grid_pts)?;
        if est.raw_sup > 0.0 {
            samples.push((t, est.raw_sup.ln()));
        }
        // once every grid point has escaped the image the sup stays 0:
        // bounded from that time on
    }
    Ok(bounded_curve_criterion(
        "boundedness",
        samples,
        we.problem.tol.slope_tol,
        we.problem.tol.bound_tol,
        "weight-ratio sup",
    ))
}

/// Pointwise decay of rho_{t,p} on the non-equilibrium set.
pub fn check_pointwise_decay(
    we: &WeightEvolution,
    horizon: f64,
    grid_pts: &[f64],
) -> Result<CriterionResult> {
    let ts = grid::time_grid(horizon, we.problem.sampling.time_samples);
    let mut per_point = Vec::new();
    let mut worst: Option<(f64, DecayClass)> = None;
    for &x in grid_pts {
        let values = we.rho_tp_curve(x, &ts)?;
        let samples: Vec<(f64, f64)> = ts.iter().copied().zip(values).collect();
        let ev =
            DecayEvidence::classify(samples, we.problem.tol.slope_tol, we.problem.tol.value_tol);
        let class = ev.classification;
        per_point.push(PointDecay { x, evidence: ev });
        match class {
            DecayClass::DecaysToZero => {}
            other => {
                let rank = |c: DecayClass| match c {
                    DecayClass::Grows => 3,
                    DecayClass::BoundedNonvanishing => 2,
                    DecayClass::Undetermined => 1,
                    DecayClass::DecaysToZero => 0,
                };
                if worst.map(|(_, w)| rank(other) > rank(w)).unwrap_or(true) {
                    worst = Some((x, other));
                }
            }
        }
    }
    let (outcome, summary) = match worst {
        None => (
            Outcome::Pass,
            format!(
                "rho_tp decays to zero at all {} sampled points",
                per_point.len()
            ),
        ),
        Some((x, DecayClass::Grows)) => (Outcome::Fail, format!("rho_tp grows at x = {:.6}", x)),
        Some((x, DecayClass::BoundedNonvanishing)) => (
            Outcome::Fail,
            format!("rho_tp stalls above the decay threshold at x = {:.6}", x),
        ),
        Some((x, _)) => (
            Outcome::Unknown,
            format!("decay undetermined at x = {:.6}", x),
        ),
    };
    Ok(CriterionResult {
        id: "pointwise_decay".to_string(),
        outcome,
        summary,
        evidence: CriterionEvidence::PerPoint(per_point),
    })
}

/// Sign of h on the equilibrium set: vacuous on a measure-zero set,
/// otherwise h < 0 at every sample.
pub fn check_omega0_sign(
    problem: &ProblemSpec,
    partition: &DomainPartition,
    grid_pts: &[f64],
) -> CriterionResult {
    if !partition.omega0_has_measure {
        return CriterionResult {
            id: "omega0_sign".to_string(),
            outcome: Outcome::Pass,
            summary: "equilibrium set has measure zero: vacuous".to_string(),
            evidence: CriterionEvidence::None,
        };
    }
    let mut samples = Vec::new();
    let mut witness = None;
    for &x in grid_pts {
        let inside = partition
            .omega0
            .iter()
            .any(|iv| iv.length() > 0.0 && x >= iv.lo && x <= iv.hi);
        if !inside {
            continue;
        }
        let h = problem.multiplier.eval(x);
        samples.push((x, h));
        if h >= 0.0 && witness.is_none() {
            witness = Some((x, h));
        }
    }
    match witness {
        Some((x, h)) => CriterionResult {
            id: "omega0_sign".to_string(),
            outcome: Outcome::Fail,
            summary: format!(
                "h({:.6}) = {:.6} >= 0 on a positive-measure equilibrium set",
                x, h
            ),
            evidence: CriterionEvidence::Samples(samples),
        },
        None if samples.is_empty() => CriterionResult {
            id: "omega0_sign".to_string(),
            outcome: Outcome::Unknown,
            summary: "equilibrium set has measure but carried no samples".to_string(),
            evidence: CriterionEvidence::None,
        },
        None => CriterionResult {
            id: "omega0_sign".to_string(),
            outcome: Outcome::Pass,
            summary: format!("h < 0 at all {} equilibrium samples", samples.len()),
            evidence: CriterionEvidence::Samples(samples),
        },
    }
}

fn thin(grid_pts: &[f64], target: usize) -> Vec<f64> {
    if grid_pts.len() <= target {
        return grid_pts.to_vec();
    }
    let stride = grid_pts.len() as f64 / target as f64;
    (0..target)
        .map(|k| grid_pts[(k as f64 * stride) as usize])
        .collect()
}

/// The general one-dimensional classifier: boundedness + pointwise
/// decay on the non-equilibrium set (or the escape shortcut when every
/// sampled point leaves the image by the horizon) + equilibrium sign.
/// Errors out when the admissibility fit is refuted.
pub fn classify_stability_1d(problem: &ProblemSpec, horizon: f64) -> Result<Verdict> {
    let we = WeightEvolution::new(problem.clone());
    let full_grid = problem.default_grid();
    let partition = partition_domain(problem, &full_grid)?;

    let fit = we.admissibility_fit(horizon, &full_grid)?;
    if fit.refuted {
        return Err(EngineError::AdmissibilityRefuted);
    }

    let omega1_grid: Vec<f64> = full_grid
        .iter()
        .copied()
        .filter(|&x| !partition.in_omega0(x))
        .collect();

    let mut criteria = Vec::new();
    let mut witness = None;

    if omega1_grid.is_empty() {
        criteria.push(CriterionResult {
            id: "boundedness".to_string(),
            outcome: Outcome::Pass,
            summary: "non-equilibrium set empty on this grid".to_string(),
            evidence: CriterionEvidence::None,
        });
    } else {
        let c1 = check_boundedness(&we, horizon, &omega1_grid)?;
        if c1.outcome == Outcome::Fail {
            if let CriterionEvidence::Curve { tail_slope, .. } = &c1.evidence {
                witness = Some(Witness {
                    description: "weight-ratio sup grows".to_string(),
                    point: None,
                    value: Some(*tail_slope),
                });
            }
        }
        criteria.push(c1);

        // escape shortcut: with every point leaving the image in finite
        // time, pointwise decay is automatic
        let probe = thin(&omega1_grid, 24);
        let case = detect_flow_case(&we, &omega1_grid, horizon)?;
        if case == FlowCase::Escaping {
            criteria.push(CriterionResult {
                id: "pointwise_decay".to_string(),
                outcome: Outcome::Pass,
                summary: "escaping flow: every sampled point leaves the image".to_string(),
                evidence: CriterionEvidence::None,
            });
        } else {
            let c2 = check_pointwise_decay(&we, horizon, &probe)?;
            if c2.outcome == Outcome::Fail && witness.is_none() {
                if let CriterionEvidence::PerPoint(pts) = &c2.evidence {
                    if let Some(bad) = pts
                        .iter()
                        .find(|p| p.evidence.classification != DecayClass::DecaysToZero)
                    {
                        witness = Some(Witness {
                            description: "rho_tp does not vanish".to_string(),
                            point: Some(bad.x),
                            value: bad.evidence.samples.last().map(|s| s.1),
                        });
                    }
                }
            }
            criteria.push(c2);
        }
    }

    let c3 = check_omega0_sign(problem, &partition, &full_grid);
    if c3.outcome == Outcome::Fail && witness.is_none() {
        if let CriterionEvidence::Samples(samples) = &c3.evidence {
            if let Some(&(x, h)) = samples.iter().find(|&&(_, h)| h >= 0.0) {
                witness = Some(Witness {
                    description: "h >= 0 on the equilibrium set".to_string(),
                    point: Some(x),
                    value: Some(h),
                });
            }
        }
    }
    criteria.push(c3);

    Ok(Verdict::fold(
        criteria,
        witness,
        VerdictMeta {
            classifier: "1d_general".to_string(),
            horizon,
            grid_size: full_grid.len(),
            time_samples: problem.sampling.time_samples,
        },
    ))
}

/// Orbit integral of (h - F'/p)/F from y to phi(t, y), evaluated as
/// the cocycle integral minus log |F(phi)/F(y)| / p. This is exact up
/// to the cocycle quadrature and never touches the singular integrand.
pub fn stability_integral(we: &WeightEvolution, y: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let (phi, d2, coc) = we.flow.flow_jac_cocycle(t, y, &we.problem.multiplier)?;
    let fy = we.problem.field.eval(y);
    let fphi = we.problem.field.eval(phi);
    let p = we.problem.p;
    if fy == 0.0 {
        return Err(EngineError::InvalidArgument(
            "stability integral requires y off the equilibrium set".into(),
        ));
    }
    // If F vanishes at phi only in the limit, fall back to the Abel
    // identity d2phi = F(phi)/F(y) to keep the ratio well defined.
    let ratio = if fphi != 0.0 {
        (fphi / fy).abs()
    } else {
        d2.abs()
    };
    Ok(coc - ratio.ln() / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowCase {
    Surjective,
    Escaping,
    Ambiguous,
}

/// Probe whether the flow is surjective on the domain or escaping
/// (every point leaves the image in finite time).
///
/// Surjectivity is probed on interior and boundary-approaching
/// samples. The escaping case is recognized either directly (every
/// probe point leaves by the horizon) or through a strictly shrinking
/// image interval: when the image keeps contracting, any fixed point
/// of the domain is eventually swept past, even if the deepest grid
/// samples outlast the horizon.
pub fn detect_flow_case(we: &WeightEvolution, grid_pts: &[f64], horizon: f64) -> Result<FlowCase> {
    let probe = thin(grid_pts, 16);
    let mut all_in_image = true;
    let mut all_escape = true;
    for &x in &probe {
        if we.flow.image_indicator(horizon, x) {
            all_escape = false;
        } else {
            all_in_image = false;
        }
    }

    if all_in_image {
        // boundary-approaching samples must stay in the image too
        let mut boundary_ok = true;
        for iv in &we.problem.domain.intervals {
            let window = iv.clipped(we.problem.sampling.window);
            let len = window.length();
            for &rel in &[1e-6, 1e-9] {
                let candidates = [window.lo + len * rel, window.hi - len * rel];
                for &x in &candidates {
                    if iv.contains(x) && !we.flow.image_indicator(horizon, x) {
                        boundary_ok = false;
                    }
                }
            }
        }
        if boundary_ok {
            return Ok(FlowCase::Surjective);
        }
        return Ok(FlowCase::Ambiguous);
    }

    if all_escape {
        return Ok(FlowCase::Escaping);
    }

    // mixed: compare image lengths at horizon/2 and horizon
    let mut shrinking = true;
    for iv in &we.problem.domain.intervals {
        if !iv.is_bounded() {
            shrinking = false;
            continue;
        }
        let eps = 1e-12 * iv.length();
        let img_len = |t: f64| -> Result<f64> {
            let a = we.flow.flow(t, iv.lo + eps)?;
            let b = we.flow.flow(t, iv.hi - eps)?;
            Ok((b - a).abs())
        };
        let half = img_len(horizon / 2.0)?;
        let full = img_len(horizon)?;
        if !(full < 0.9 * half) {
            shrinking = false;
        }
    }
    if shrinking {
        return Ok(FlowCase::Escaping);
    }
    Ok(FlowCase::Ambiguous)
}

/// The rho = 1 classifier: detects the surjective/escaping case, then
/// checks boundedness of the orbit integral (and its divergence to
/// -infinity for surjective flows).
pub fn classify_stability_rho1(problem: &ProblemSpec, horizon: f64) -> Result<Verdict> {
    if !problem.weight.is_one() {
        return Err(EngineError::InvalidArgument(
            "rho = 1 classifier requires the unit weight".into(),
        ));
    }
    let we = WeightEvolution::new(problem.clone());
    let full_grid = problem.default_grid();
    let partition = partition_domain(problem, &full_grid)?;
    if !partition.omega0.is_empty() {
        return Err(EngineError::InvalidArgument(
            "rho = 1 classifier requires F nonvanishing on the domain".into(),
        ));
    }

    let case = detect_flow_case(&we, &full_grid, horizon)?;
    let ts = grid::time_grid(horizon, problem.sampling.time_samples);
    let y_grid = thin(&full_grid, 64);

    let mut samples = Vec::new();
    for &t in &ts {
        let mut sup = f64::NEG_INFINITY;
        for &y in &y_grid {
            sup = sup.max(stability_integral(&we, y, t)?);
        }
        samples.push((t, sup));
    }

    let mut criteria = Vec::new();
    let mut witness = None;

    let c_case = CriterionResult {
        id: "flow_case".to_string(),
        outcome: if case == FlowCase::Ambiguous {
            Outcome::Unknown
        } else {
            Outcome::Pass
        },
        summary: format!("flow case: {:?}", case),
        evidence: CriterionEvidence::None,
    };
    criteria.push(c_case);

    let c_bounded = bounded_curve_criterion(
        "integral_bounded",
        samples.clone(),
        problem.tol.slope_tol,
        problem.tol.bound_tol,
        "orbit-integral sup",
    );
    if c_bounded.outcome == Outcome::Fail {
        if let CriterionEvidence::Curve { tail_slope, .. } = &c_bounded.evidence {
            witness = Some(Witness {
                description: "orbit integral unbounded above".to_string(),
                point: None,
                value: Some(*tail_slope),
            });
        }
    }
    criteria.push(c_bounded);

    if case == FlowCase::Surjective {
        // divergence to -infinity at every sampled point
        let probe = thin(&full_grid, 16);
        let threshold = -problem.tol.divergence_threshold;
        let mut failed_at = None;
        for &y in &probe {
            let curve: Result<Vec<(f64, f64)>> = ts
                .iter()
                .map(|&t| stability_integral(&we, y, t).map(|v| (t, v)))
                .collect();
            let curve = curve?;
            let final_v = curve.last().map(|s| s.1).unwrap_or(0.0);
            let xs: Vec<f64> = curve.iter().map(|s| s.0).collect();
            let ys: Vec<f64> = curve.iter().map(|s| s.1).collect();
            let (slope, _) = fit::line(&xs, &ys);
            if !(final_v <= threshold && slope < 0.0) {
                failed_at = Some((y, final_v));
                break;
            }
        }
        let c_div = match failed_at {
            None => CriterionResult {
                id: "integral_diverges".to_string(),
                outcome: Outcome::Pass,
                summary: format!(
                    "orbit integral diverges below {} at all probe points",
                    threshold
                ),
                evidence: CriterionEvidence::None,
            },
            Some((y, v)) => {
                if witness.is_none() {
                    witness = Some(Witness {
                        description: "orbit integral does not diverge to -infinity".to_string(),
                        point: Some(y),
                        value: Some(v),
                    });
                }
                CriterionResult {
                    id: "integral_diverges".to_string(),
                    outcome: Outcome::Fail,
                    summary: format!(
                        "orbit integral at y = {:.6} ends at {:.3} > {}",
                        y, v, threshold
                    ),
                    evidence: CriterionEvidence::Scalar(v),
                }
            }
        };
        criteria.push(c_div);
    }

    Ok(Verdict::fold(
        criteria,
        witness,
        VerdictMeta {
            classifier: "rho1_integral".to_string(),
            horizon,
            grid_size: full_grid.len(),
            time_samples: problem.sampling.time_samples,
        },
    ))
}

/// Dispatch to the natural classifier for an L^p problem.
pub fn classify(problem: &ProblemSpec, horizon: f64) -> Result<Verdict> {
    let grid_pts = problem.default_grid();
    let partition = partition_domain(problem, &grid_pts)?;
    if problem.weight.is_one() && partition.omega0.is_empty() {
        classify_stability_rho1(problem, horizon)
    } else {
        classify_stability_1d(problem, horizon)
    }
}

/// Bisect a one-parameter family of verdicts to locate the
/// stable/unstable flip. The endpoints must classify differently.
pub fn bisect_threshold<F: Fn(f64) -> Result<Status>>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    classify_at: F,
) -> Result<f64> {
    let s_lo = classify_at(lo)?;
    let s_hi = classify_at(hi)?;
    if s_lo == s_hi {
        return Err(EngineError::InvalidArgument(format!(
            "no verdict flip in [{}, {}]: both {:?}",
            lo, hi, s_lo
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let s_mid = classify_at(mid)?;
        if s_mid == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, Family, Field, Multiplier, Weight};

    #[test]
    fn lasota_stable_at_and_below_threshold() {
        // p = 2: threshold c = -1/2
        for &c in &[-0.6, -0.5] {
            let p = ProblemSpec::lasota(c, 2.0).unwrap();
            let v = classify_stability_rho1(&p, 20.0).unwrap();
            assert_eq!(v.status, Status::Stable, "c = {}", c);
        }
    }

    #[test]
    fn lasota_unstable_above_threshold() {
        let p = ProblemSpec::lasota(-0.4, 2.0).unwrap();
        let v = classify_stability_rho1(&p, 20.0).unwrap();
        assert_eq!(v.status, Status::Unstable);
        assert!(v.witness.is_some());
    }

    #[test]
    fn classifiers_agree_on_lasota() {
        for &c in &[-0.6, -0.5, -0.4] {
            let p = ProblemSpec::lasota(c, 2.0).unwrap();
            let a = classify_stability_rho1(&p, 20.0).unwrap().status;
            let b = classify_stability_1d(&p, 20.0).unwrap().status;
            assert_eq!(a, b, "c = {}", c);
        }
    }

    #[test]
    fn boundedness_curve_matches_closed_form() {
        let (c, p) = (-0.4, 2.0);
        let prob = ProblemSpec::lasota(c, p).unwrap();
        let we = WeightEvolution::new(prob.clone());
        let grid_pts = prob.default_grid();
        let crit = check_boundedness(&we, 10.0, &grid_pts).unwrap();
        assert_eq!(crit.outcome, Outcome::Fail);
        if let CriterionEvidence::Curve { tail_slope, .. } = crit.evidence {
            assert!((tail_slope - (p * c + 1.0)).abs() < 1e-6, "{}", tail_slope);
        } else {
            panic!("expected curve evidence");
        }
    }

    #[test]
    fn translation_unit_weight_is_an_unstable_isometry() {
        let p = ProblemSpec::translation(Weight::One, 2.0).unwrap();
        let v = classify(&p, 20.0).unwrap();
        assert_eq!(v.status, Status::Unstable);
    }

    #[test]
    fn translation_exponential_weight_is_stable() {
        let rho = Weight::Expression(crate::expr::Expr::parse("exp(x)").unwrap());
        let p = ProblemSpec::translation(rho, 2.0).unwrap();
        let v = classify(&p, 20.0).unwrap();
        assert_eq!(v.status, Status::Stable);
    }

    #[test]
    fn zero_field_with_positive_multiplier_fails_omega0_sign() {
        let prob = ProblemSpec::new(
            Domain::interval(0.0, 1.0),
            Field::Registered(Family::Affine {
                alpha: 0.0,
                beta: 0.0,
            }),
            Multiplier::Const(0.1),
            2.0,
        )
        .unwrap();
        let v = classify_stability_1d(&prob, 20.0).unwrap();
        assert_eq!(v.status, Status::Unstable);
        let w = v.witness.unwrap();
        assert!(w.value.unwrap() >= 0.0);
    }

    #[test]
    fn zero_field_with_negative_multiplier_is_stable() {
        let prob = ProblemSpec::new(
            Domain::interval(0.0, 1.0),
            Field::Registered(Family::Affine {
                alpha: 0.0,
                beta: 0.0,
            }),
            Multiplier::Const(-1.0),
            2.0,
        )
        .unwrap();
        let v = classify_stability_1d(&prob, 20.0).unwrap();
        assert_eq!(v.status, Status::Stable);
    }

    #[test]
    fn mixed_sign_multiplier_on_zero_field_fails_with_witness() {
        let prob = ProblemSpec::new(
            Domain::interval(0.0, 1.0),
            Field::Registered(Family::Affine {
                alpha: 0.0,
                beta: 0.0,
            }),
            Multiplier::from_expr(crate::expr::Expr::parse("x - 0.5").unwrap()),
            2.0,
        )
        .unwrap();
        let v = classify_stability_1d(&prob, 20.0).unwrap();
        assert_eq!(v.status, Status::Unstable);
        let w = v.witness.unwrap();
        assert!(w.point.unwrap() >= 0.5);
    }

    #[test]
    fn slowly_decaying_weight_fails_pointwise_decay() {
        // F = 1-x with rho(r) r -> 1: rho_tp(x) = e^t/(1 + |x-1| e^t)
        // plateaus at (1+|x-1|)/|x-1| instead of vanishing
        let rho = Weight::Expression(crate::expr::Expr::parse("(1 + abs(x-1))^-1").unwrap());
        let prob = ProblemSpec::new(
            Domain::real_line(),
            Field::Registered(Family::Affine {
                alpha: 1.0,
                beta: -1.0,
            }),
            Multiplier::Const(0.0),
            2.0,
        )
        .unwrap()
        .with_weight(rho);
        let v = classify_stability_1d(&prob, 20.0).unwrap();
        assert_eq!(v.status, Status::Unstable);
        assert_eq!(
            v.criterion("pointwise_decay").unwrap().outcome,
            Outcome::Fail
        );
    }

    #[test]
    fn stability_integral_lasota_closed_form() {
        let (c, p) = (-0.3, 2.0);
        let prob = ProblemSpec::lasota(c, p).unwrap();
        let we = WeightEvolution::new(prob);
        for &(y, t) in &[(0.5f64, 1.0f64), (0.2, 3.0), (0.9, 0.0)] {
            let v = stability_integral(&we, y, t).unwrap();
            let expected = (c + 1.0 / p) * t;
            assert!((v - expected).abs() < 1e-10, "{} vs {}", v, expected);
        }
    }

    #[test]
    fn stability_integral_lasota_r_power_multiplier() {
        // h = c x^(r-1): integral = (c + r/p)/(r-1) log(1 + (r-1) t y^(r-1))
        let (r, c, p) = (2.0f64, -0.8f64, 2.0f64);
        let prob = ProblemSpec::lasota_r(
            r,
            Multiplier::PowerLaw {
                coeff: c,
                exponent: r - 1.0,
            },
            p,
        )
        .unwrap();
        let we = WeightEvolution::new(prob);
        for &(y, t) in &[(0.5f64, 2.0f64), (0.9, 10.0)] {
            let v = stability_integral(&we, y, t).unwrap();
            let expected = (c + r / p) / (r - 1.0) * (1.0 + (r - 1.0) * t * y.powf(r - 1.0)).ln();
            assert!((v - expected).abs() < 1e-10, "{} vs {}", v, expected);
        }
    }

    #[test]
    fn lasota_r_flip_is_at_minus_r_over_p_for_power_family() {
        let (r, p) = (2.0, 2.0);
        for &(c, expect) in &[
            (-r / p - 0.1, Status::Stable),
            (-r / p, Status::Stable),
            (-r / p + 0.1, Status::Unstable),
        ] {
            let prob = ProblemSpec::lasota_r(
                r,
                Multiplier::PowerLaw {
                    coeff: c,
                    exponent: r - 1.0,
                },
                p,
            )
            .unwrap();
            let v = classify_stability_rho1(&prob, 40.0).unwrap();
            assert_eq!(v.status, expect, "c = {}", c);
        }
    }

    #[test]
    fn surjective_case_requires_divergence() {
        // translation with rho = 1 is bounded but the integral is 0:
        // divergence fails, hence unstable
        let p = ProblemSpec::translation(Weight::One, 2.0).unwrap();
        let v = classify_stability_rho1(&p, 20.0).unwrap();
        assert_eq!(v.status, Status::Unstable);
        assert_eq!(
            v.criterion("integral_bounded").unwrap().outcome,
            Outcome::Pass
        );
        assert_eq!(
            v.criterion("integral_diverges").unwrap().outcome,
            Outcome::Fail
        );
    }

    #[test]
    fn bisection_locates_lasota_threshold() {
        let p = 2.0;
        let flip = bisect_threshold(-0.6, -0.4, 0.005, |c| {
            let prob = ProblemSpec::lasota(c, p).unwrap();
            Ok(classify_stability_rho1(&prob, 20.0)?.status)
        })
        .unwrap();
        assert!((flip + 0.5).abs() <= 0.01, "flip at {}", flip);
    }

    #[test]
    fn decay_evidence_classifies_zero_hit() {
        let samples = vec![(0.0, 1.0), (1.0, 1.0), (2.0, 0.0), (3.0, 0.0)];
        let ev = DecayEvidence::classify(samples, 1e-3, 1e-6);
        assert_eq!(ev.classification, DecayClass::DecaysToZero);
    }

    #[test]
    fn decay_evidence_classifies_growth_and_stall() {
        let grow: Vec<(f64, f64)> = (0..40)
            .map(|k| (k as f64, (0.1 * k as f64).exp()))
            .collect();
        assert_eq!(
            DecayEvidence::classify(grow, 1e-3, 1e-6).classification,
            DecayClass::Grows
        );
        let stall: Vec<(f64, f64)> = (0..40).map(|k| (k as f64, 1.0)).collect();
        assert_eq!(
            DecayEvidence::classify(stall, 1e-3, 1e-6).classification,
            DecayClass::BoundedNonvanishing
        );
    }
}
