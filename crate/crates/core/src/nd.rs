//! Multidimensional problems (N <= 3): the w*-convergence route of the
//! stability characterization, with rho_{t,p} evaluated straight from
//! its definition via the inverse flow, the cocycle and the backward
//! Jacobian determinant.
//!
//! Flows come either from product constructions over the 1-D
//! registered families or from user closures implementing
//! [`SemiflowNd`]; those closures are probed, not verified.

use std::sync::Arc;

use crate::error::{EngineError, Result};
use crate::grid;
use crate::model::{Interval, ProblemSpec, Tolerances};
use crate::quad::{self, QuadSettings};
use crate::semiflow::Semiflow;
use crate::stability::{
    CriterionEvidence, CriterionResult, DecayClass, DecayEvidence, Outcome, Status, Verdict,
    VerdictMeta, Witness,
};

/// Axis-aligned open box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxNd {
    pub sides: Vec<Interval>,
}

impl BoxNd {
    pub fn new(sides: Vec<Interval>) -> Self {
        BoxNd { sides }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.sides.len() && self.sides.iter().zip(x).all(|(iv, &xi)| iv.contains(xi))
    }
}

/// Minimal semiflow interface in N dimensions.
pub trait SemiflowNd: Send + Sync {
    fn dim(&self) -> usize;
    /// phi(t, x) for t >= 0; None when the trajectory leaves the domain.
    fn flow(&self, t: f64, x: &[f64]) -> Option<Vec<f64>>;
    /// Pre-image phi(-t, x); None when x is not in the image.
    fn inverse_flow(&self, t: f64, x: &[f64]) -> Option<Vec<f64>>;
    /// det D phi(t, .)(x) for t >= 0.
    fn jacobian_det(&self, t: f64, x: &[f64]) -> Option<f64>;
    /// Image of a box under phi(t, .), when representable as a box
    /// (true for product flows); used to clip quadrature domains.
    fn image_box(&self, _t: f64, _domain: &BoxNd) -> Option<BoxNd> {
        None
    }
}

/// Product of independent 1-D semiflows.
pub struct ProductFlow {
    components: Vec<Arc<Semiflow>>,
}

impl ProductFlow {
    pub fn new(components: Vec<Arc<Semiflow>>) -> Self {
        ProductFlow { components }
    }

    /// Product of identical 1-D problems, one per axis.
    pub fn from_problems(problems: &[ProblemSpec]) -> Self {
        ProductFlow {
            components: problems
                .iter()
                .map(|p| Arc::new(Semiflow::for_problem(p)))
                .collect(),
        }
    }
}

impl SemiflowNd for ProductFlow {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn flow(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        self.components
            .iter()
            .zip(x)
            .map(|(sf, &xi)| sf.flow(t, xi).ok())
            .collect()
    }

    fn inverse_flow(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        self.components
            .iter()
            .zip(x)
            .map(|(sf, &xi)| sf.inverse_flow(t, xi).ok().flatten())
            .collect()
    }

    fn jacobian_det(&self, t: f64, x: &[f64]) -> Option<f64> {
        let mut det = 1.0;
        for (sf, &xi) in self.components.iter().zip(x) {
            det *= sf.flow_with_jacobian(t, xi).ok()?.1;
        }
        Some(det)
    }

    fn image_box(&self, t: f64, domain: &BoxNd) -> Option<BoxNd> {
        let mut sides = Vec::new();
        for (sf, iv) in self.components.iter().zip(&domain.sides) {
            if !iv.is_bounded() {
                sides.push(*iv);
                continue;
            }
            let eps = 1e-12 * iv.length();
            let a = sf.flow(t, iv.lo + eps).ok()?;
            let b = sf.flow(t, iv.hi - eps).ok()?;
            sides.push(Interval::new(a.min(b), a.max(b)));
        }
        Some(BoxNd::new(sides))
    }
}

pub type NdScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// N-dimensional problem: flow, multiplier, weight, exponent.
#[derive(Clone)]
pub struct NdProblem {
    pub flow: Arc<dyn SemiflowNd>,
    pub multiplier: NdScalarFn,
    pub multiplier_const: Option<f64>,
    pub weight: NdScalarFn,
    pub p: f64,
    pub domain: BoxNd,
    pub tol: Tolerances,
}

impl NdProblem {
    pub fn new(
        flow: Arc<dyn SemiflowNd>,
        domain: BoxNd,
        multiplier_const: f64,
        p: f64,
    ) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(EngineError::InvalidExponent(p));
        }
        if domain.dim() > 3 {
            return Err(EngineError::UnsupportedDimension(domain.dim()));
        }
        Ok(NdProblem {
            flow,
            multiplier: Arc::new(move |_| multiplier_const),
            multiplier_const: Some(multiplier_const),
            weight: Arc::new(|_| 1.0),
            p,
            domain,
            tol: Tolerances::default(),
        })
    }

    pub fn with_weight(mut self, weight: NdScalarFn) -> Self {
        self.weight = weight;
        self
    }

    /// Cocycle integral along the forward orbit.
    fn cocycle_integral(&self, t: f64, x: &[f64], settings: &QuadSettings) -> Result<f64> {
        if let Some(c) = self.multiplier_const {
            return Ok(c * t);
        }
        let flow = Arc::clone(&self.flow);
        let h = Arc::clone(&self.multiplier);
        let x = x.to_vec();
        quad::integrate(
            move |s| match flow.flow(s, &x) {
                Some(y) => h(&y),
                None => f64::NAN,
            },
            0.0,
            t,
            settings,
        )
    }

    /// rho_{t,p}(x) from the definition:
    /// chi(x) h_t(y0)^p rho(y0) |det D phi(-t, .)(x)|.
    pub fn rho_tp(&self, t: f64, x: &[f64], settings: &QuadSettings) -> Result<f64> {
        if t == 0.0 {
            return Ok((self.weight)(x));
        }
        let y0 = match self.flow.inverse_flow(t, x) {
            None => return Ok(0.0),
            Some(y) => y,
        };
        if !self.domain.contains(&y0) {
            return Ok(0.0);
        }
        let coc = self.cocycle_integral(t, &y0, settings)?;
        let det_fwd = self.flow.jacobian_det(t, &y0).ok_or_else(|| {
            EngineError::InvalidArgument("Jacobian unavailable along the orbit".into())
        })?;
        Ok((self.p * coc).exp() * (self.weight)(&y0) / det_fwd.abs())
    }
}

/// Tensor-quadrature integral of rho_{t,p} over a box Q (N <= 3),
/// clipped to the image box when the flow exposes one.
pub fn wstar_integral(
    problem: &NdProblem,
    q: &BoxNd,
    t: f64,
    settings: &QuadSettings,
) -> Result<f64> {
    if q.dim() != problem.domain.dim() {
        return Err(EngineError::InvalidArgument(
            "box dimension mismatch".into(),
        ));
    }
    if q.dim() > 3 {
        return Err(EngineError::UnsupportedDimension(q.dim()));
    }
    // clip to the image box: rho_tp vanishes outside
    let mut clipped = q.clone();
    if let Some(img) = problem.flow.image_box(t, &problem.domain) {
        for (side, img_side) in clipped.sides.iter_mut().zip(&img.sides) {
            side.lo = side.lo.max(img_side.lo);
            side.hi = side.hi.min(img_side.hi);
            if !(side.lo < side.hi) {
                return Ok(0.0);
            }
        }
    }
    let inner_settings = QuadSettings {
        rel_tol: settings.rel_tol * 0.1,
        ..settings.clone()
    };
    match clipped.sides.len() {
        1 => quad::integrate(
            |x| problem.rho_tp(t, &[x], &inner_settings).unwrap_or(f64::NAN),
            clipped.sides[0].lo,
            clipped.sides[0].hi,
            settings,
        ),
        2 => quad::integrate(
            |x| {
                quad::integrate(
                    |y| {
                        problem
                            .rho_tp(t, &[x, y], &inner_settings)
                            .unwrap_or(f64::NAN)
                    },
                    clipped.sides[1].lo,
                    clipped.sides[1].hi,
                    &inner_settings,
                )
                .unwrap_or(f64::NAN)
            },
            clipped.sides[0].lo,
            clipped.sides[0].hi,
            settings,
        ),
        3 => quad::integrate(
            |x| {
                quad::integrate(
                    |y| {
                        quad::integrate(
                            |z| {
                                problem
                                    .rho_tp(t, &[x, y, z], &inner_settings)
                                    .unwrap_or(f64::NAN)
                            },
                            clipped.sides[2].lo,
                            clipped.sides[2].hi,
                            &inner_settings,
                        )
                        .unwrap_or(f64::NAN)
                    },
                    clipped.sides[1].lo,
                    clipped.sides[1].hi,
                    &inner_settings,
                )
                .unwrap_or(f64::NAN)
            },
            clipped.sides[0].lo,
            clipped.sides[0].hi,
            settings,
        ),
        n => Err(EngineError::UnsupportedDimension(n)),
    }
}

/// Decay of t -> integral of rho_{t,p} over Q.
pub fn check_wstar_integral(
    problem: &NdProblem,
    q: &BoxNd,
    horizon: f64,
    time_samples: usize,
    settings: &QuadSettings,
) -> Result<CriterionResult> {
    let ts = grid::time_grid(horizon, time_samples);
    let mut samples = Vec::new();
    for &t in &ts {
        samples.push((t, wstar_integral(problem, q, t, settings)?));
    }
    let ev = DecayEvidence::classify(samples, problem.tol.slope_tol, problem.tol.value_tol);
    let outcome = match ev.classification {
        DecayClass::DecaysToZero => Outcome::Pass,
        DecayClass::Undetermined => Outcome::Unknown,
        _ => Outcome::Fail,
    };
    Ok(CriterionResult {
        id: format!(
            "wstar_integral{:?}",
            q.sides.iter().map(|iv| (iv.lo, iv.hi)).collect::<Vec<_>>()
        ),
        outcome,
        summary: format!("box integral classification: {:?}", ev.classification),
        evidence: CriterionEvidence::Curve {
            samples: ev.samples.clone(),
            tail_slope: ev.log_slope,
            late_rise: 0.0,
        },
    })
}

/// Default grid for the sup criterion: per-axis grids (uniform plus
/// geometric edge refinement) combined along the diagonal and the
/// per-axis midlines. A full tensor grid is unnecessary for the sup of
/// the product-structured weights this route serves.
pub fn default_nd_grid(domain: &BoxNd, n_per_axis: usize) -> Vec<Vec<f64>> {
    let axis_grids: Vec<Vec<f64>> = domain
        .sides
        .iter()
        .map(|iv| grid::space_grid(iv, n_per_axis))
        .collect();
    let mut pts = Vec::new();
    let dim = domain.dim();
    let shortest = axis_grids.iter().map(|g| g.len()).min().unwrap_or(0);
    for i in 0..shortest {
        let diag: Vec<f64> = axis_grids.iter().map(|g| g[i]).collect();
        pts.push(diag);
    }
    let mids: Vec<f64> = domain
        .sides
        .iter()
        .map(|iv| 0.5 * (iv.lo + iv.hi))
        .collect();
    for (axis, g) in axis_grids.iter().enumerate().take(dim) {
        for &v in g {
            let mut p = mids.clone();
            p[axis] = v;
            pts.push(p);
        }
    }
    pts
}

/// The multidimensional classifier: boundedness of the weight-ratio
/// sup plus decay of the box integrals over the supplied family.
pub fn classify_stability_general(
    problem: &NdProblem,
    horizon: f64,
    boxes: &[BoxNd],
    time_samples: usize,
) -> Result<Verdict> {
    if problem.domain.dim() > 3 {
        return Err(EngineError::UnsupportedDimension(problem.domain.dim()));
    }
    let settings = QuadSettings {
        rel_tol: 1e-9,
        ..QuadSettings::default()
    };
    let grid_pts = default_nd_grid(&problem.domain, 65);
    let ts = grid::time_grid(horizon, time_samples);

    let mut sup_samples = Vec::new();
    for &t in &ts {
        let mut sup = 0.0f64;
        for x in &grid_pts {
            let v = problem.rho_tp(t, x, &settings)? / (problem.weight)(x);
            sup = sup.max(v);
        }
        if sup > 0.0 {
            sup_samples.push((t, sup.ln()));
        }
    }

    let mut criteria = Vec::new();
    let mut witness = None;

    let (tail_slope, late_rise) = tail_diag(&sup_samples);
    let bounded = tail_slope <= problem.tol.slope_tol && late_rise <= problem.tol.bound_tol;
    if !bounded {
        witness = Some(Witness {
            description: "weight-ratio sup grows".to_string(),
            point: None,
            value: Some(tail_slope),
        });
    }
    criteria.push(CriterionResult {
        id: "boundedness".to_string(),
        outcome: if bounded {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        summary: format!(
            "weight-ratio sup {}: tail slope {:.3e}, late rise {:.3e}",
            if bounded { "bounded" } else { "unbounded" },
            tail_slope,
            late_rise
        ),
        evidence: CriterionEvidence::Curve {
            samples: sup_samples,
            tail_slope,
            late_rise,
        },
    });

    for q in boxes {
        let c = check_wstar_integral(problem, q, horizon, time_samples, &settings)?;
        if c.outcome == Outcome::Fail && witness.is_none() {
            witness = Some(Witness {
                description: format!("box integral does not vanish: {}", c.summary),
                point: Some(q.sides[0].lo),
                value: None,
            });
        }
        criteria.push(c);
    }

    let any_fail = criteria.iter().any(|c| c.outcome == Outcome::Fail);
    let all_pass = criteria.iter().all(|c| c.outcome == Outcome::Pass);
    let status = if any_fail {
        Status::Unstable
    } else if all_pass {
        Status::Stable
    } else {
        Status::Inconclusive
    };
    Ok(Verdict {
        status,
        criteria,
        witness: if any_fail { witness } else { None },
        meta: VerdictMeta {
            classifier: "nd_wstar".to_string(),
            horizon,
            grid_size: grid_pts.len(),
            time_samples,
        },
    })
}

fn tail_diag(samples: &[(f64, f64)]) -> (f64, f64) {
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
    let (slope, _) = crate::fit::line(&xs, &ys);
    let mid_idx = samples
        .iter()
        .position(|&(t, _)| t >= horizon / 4.0)
        .unwrap_or(0);
    (slope, samples[samples.len() - 1].1 - samples[mid_idx].1)
}

/// The 2-D product of two Lasota problems: F(x, y) = (-x, -y) on
/// (0,1)^2 with a constant multiplier.
pub fn product_lasota_2d(c: f64, p: f64) -> Result<NdProblem> {
    let one_d = ProblemSpec::lasota(0.0, p)?;
    let flow = ProductFlow::from_problems(&[one_d.clone(), one_d]);
    NdProblem::new(
        Arc::new(flow),
        BoxNd::new(vec![Interval::new(0.0, 1.0), Interval::new(0.0, 1.0)]),
        c,
        p,
    )
}
