//! Stability on W^{1,p}(I) and W^{1,p}_*(I).
//!
//! On the subspace of functions vanishing at the left endpoint the
//! transported semigroup is conjugate to an unweighted L^p problem
//! whose multiplier is F' + h(a); stability transfers across the
//! conjugacy. The full space splits off the constants, whose orbit is
//! exp(h(a) t), so stability there additionally requires h(a) < 0.
//!
//! Derivatives are carried symbolically as evaluator pairs and never
//! reconstructed numerically from values (witness derivatives like
//! x^(-alpha) are ill-conditioned to difference near the endpoint);
//! finite differences are used only to validate transported
//! derivatives on smooth inputs.

use std::sync::Arc;

use crate::error::{EngineError, Result};
use crate::grid;
use crate::model::{Multiplier, ProblemSpec, RealFn, Weight};
use crate::stability::{
    classify_stability_rho1, CriterionEvidence, CriterionResult, Outcome, Status, Verdict,
    VerdictMeta, Witness,
};
use crate::weights::{SampledFunction, WeightEvolution};

/// A Sobolev-space element: value and distributional-derivative
/// evaluators plus the boundary value at the left endpoint.
#[derive(Clone)]
pub struct SobolevFunction {
    pub value: RealFn,
    pub deriv: RealFn,
    pub boundary_value: f64,
    /// Power exponent of the derivative at the left endpoint,
    /// f' ~ C (x-a)^(-alpha), when singular.
    pub deriv_left_singularity: Option<f64>,
    pub label: String,
}

impl SobolevFunction {
    pub fn new<F, G>(label: impl Into<String>, value: F, deriv: G, boundary_value: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SobolevFunction {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            boundary_value,
            deriv_left_singularity: None,
            label: label.into(),
        }
    }

    /// x^beta relative to the left endpoint a; lies in the vanishing
    /// subspace for beta > 0, with derivative exponent 1 - beta at a.
    pub fn power(a: f64, beta: f64) -> Self {
        SobolevFunction {
            value: Arc::new(move |x: f64| (x - a).powf(beta)),
            deriv: Arc::new(move |x: f64| beta * (x - a).powf(beta - 1.0)),
            boundary_value: 0.0,
            deriv_left_singularity: if beta < 1.0 { Some(1.0 - beta) } else { None },
            label: format!("(x-{})^{}", a, beta),
        }
    }

    pub fn constant(value: f64) -> Self {
        SobolevFunction {
            value: Arc::new(move |_| value),
            deriv: Arc::new(|_| 0.0),
            boundary_value: value,
            deriv_left_singularity: None,
            label: format!("{}", value),
        }
    }

    pub fn in_star_subspace(&self, tol: f64) -> bool {
        self.boundary_value.abs() <= tol
    }
}

impl std::fmt::Debug for SobolevFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SobolevFunction({})", self.label)
    }
}

/// Check the conjugacy hypotheses and build the unweighted L^p problem
/// with multiplier F' + h(a).
pub fn conjugate_problem(problem: &ProblemSpec) -> Result<ProblemSpec> {
    let iv = problem
        .domain
        .single()
        .ok_or(EngineError::SobolevUnboundedDomain)?;
    if !iv.is_bounded() {
        return Err(EngineError::SobolevUnboundedDomain);
    }
    let a = iv.lo;
    let fa = problem.field.eval(a).abs();
    if fa > 1e-9 * (1.0 + problem.field_scale()) {
        return Err(EngineError::SobolevNonvanishingField(fa));
    }
    let ha = problem.multiplier.eval(a);

    // (h(y) - h(a))/F(y) must stay bounded toward a; probed on a
    // geometric grid accumulating at the endpoint.
    let probe = grid::geometric_toward(a, iv.length(), 12);
    let mut values = Vec::new();
    for &y in &probe {
        let f = problem.field.eval(y);
        if f == 0.0 {
            continue;
        }
        values.push(((problem.multiplier.eval(y) - ha) / f).abs());
    }
    if values.len() >= 6 {
        let head = values[..3].iter().cloned().fold(0.0f64, f64::max);
        let tail = values[values.len() - 3..]
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        let increasing = values
            .windows(2)
            .skip(values.len().saturating_sub(6))
            .all(|w| w[1] >= w[0] * 0.99);
        if tail > 100.0 * (head + 1.0) && increasing {
            return Err(EngineError::HypothesisNotVerified(format!(
                "(h(y) - h(a))/F(y) unbounded toward the endpoint: |ratio| = {:.3e} at y = {:.3e}",
                tail,
                probe[probe.len() - 1]
            )));
        }
    }

    let mut conj = ProblemSpec::new(
        problem.domain.clone(),
        problem.field.clone(),
        Multiplier::FieldDerivPlus {
            field: Arc::new(problem.field.clone()),
            shift: ha,
        },
        problem.p,
    )?;
    conj.weight = Weight::One;
    conj.tol = problem.tol.clone();
    conj.sampling = problem.sampling.clone();
    Ok(conj)
}

/// ||u||_{1,p} = ||u||_p + ||u'||_p with the unit weight.
pub fn sobolev_norm(problem: &ProblemSpec, f: &SobolevFunction) -> Result<f64> {
    let mut plain = problem.clone();
    plain.weight = Weight::One;
    let we = WeightEvolution::new(plain);
    let value_part = SampledFunction::new(f.label.clone(), f.value.clone(), None);
    let deriv_part = SampledFunction::new(
        format!("{}'", f.label),
        f.deriv.clone(),
        f.deriv_left_singularity,
    );
    Ok(we.lp_norm(&value_part)? + we.lp_norm(&deriv_part)?)
}

/// Transported Sobolev function: value h_t(x) f(phi(t,x)) and the
/// chain-rule derivative
/// h_t(x) [K(t,x) f(phi) + f'(phi) d2phi], K = int h'(phi) d2phi ds.
pub fn apply_semigroup_sobolev(
    we: &WeightEvolution,
    t: f64,
    f: &SobolevFunction,
) -> Result<SobolevFunction> {
    let probe_x = we.problem.left_endpoint() + 1e-6;
    if we.problem.multiplier.eval_prime(probe_x).is_none() {
        return Err(EngineError::HypothesisNotVerified(
            "multiplier derivative unavailable for Sobolev transport".into(),
        ));
    }
    let flow = Arc::clone(&we.flow);
    let flow2 = Arc::clone(&we.flow);
    let h = we.problem.multiplier.clone();
    let h2 = we.problem.multiplier.clone();
    let fv = f.value.clone();
    let fv2 = f.value.clone();
    let fd = f.deriv.clone();

    let a = we.problem.left_endpoint();
    let ha = we.problem.multiplier.eval(a);
    let boundary_value = (ha * t).exp() * f.boundary_value;

    let value: RealFn = Arc::new(move |x: f64| match flow.flow_jac_cocycle(t, x, &h) {
        Ok((phi, _, coc)) => coc.exp() * fv(phi),
        Err(_) => f64::NAN,
    });
    let deriv: RealFn = Arc::new(move |x: f64| {
        match (
            flow2.flow_jac_cocycle(t, x, &h2),
            flow2.cocycle_deriv_integral(t, x, &h2),
        ) {
            (Ok((phi, d2, coc)), Ok(k)) => coc.exp() * (k * fv2(phi) + fd(phi) * d2),
            _ => f64::NAN,
        }
    });

    Ok(SobolevFunction {
        value,
        deriv,
        boundary_value,
        deriv_left_singularity: f.deriv_left_singularity,
        label: format!("S({}) {}", t, f.label),
    })
}

/// Orbit integral of (h(a) - (1/p - 1) F')/F: the conjugated problem's
/// stability integral in closed form, h(a) t - (1/p - 1) log |F(phi)/F(y)|.
pub fn sobolev_stability_integral(we: &WeightEvolution, y: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let a = we.problem.left_endpoint();
    let ha = we.problem.multiplier.eval(a);
    let (phi, d2, _) = we.flow.flow_jac_cocycle(t, y, &Multiplier::Const(0.0))?;
    let fy = we.problem.field.eval(y);
    let fphi = we.problem.field.eval(phi);
    let p = we.problem.p;
    if fy == 0.0 {
        return Err(EngineError::InvalidArgument(
            "integral requires y off the equilibrium set".into(),
        ));
    }
    let ratio = if fphi != 0.0 {
        (fphi / fy).abs()
    } else {
        d2.abs()
    };
    Ok(ha * t - (1.0 / p - 1.0) * ratio.ln())
}

/// Verdicts for W^{1,p}_* and W^{1,p}: the vanishing subspace goes
/// through the conjugated L^p classifier; the full space additionally
/// requires h(a) < 0 for the constant direction.
pub fn classify_stability_sobolev(
    problem: &ProblemSpec,
    horizon: f64,
) -> Result<(Verdict, Verdict)> {
    let conj = conjugate_problem(problem)?;
    let star = classify_stability_rho1(&conj, horizon)?;

    let a = problem.left_endpoint();
    let ha = problem.multiplier.eval(a);
    let constant_ok = ha < 0.0;
    let c_const = CriterionResult {
        id: "constant_direction".to_string(),
        outcome: if constant_ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        summary: format!(
            "constant-function orbit scales as exp({:.6} t): {}",
            ha,
            if constant_ok {
                "decays"
            } else {
                "does not decay"
            }
        ),
        evidence: CriterionEvidence::Scalar(ha),
    };

    let mut full_criteria = star.criteria.clone();
    let mut witness = star.witness.clone();
    if !constant_ok && witness.is_none() {
        witness = Some(Witness {
            description: "constant function does not decay".to_string(),
            point: Some(a),
            value: Some(ha),
        });
    }
    full_criteria.push(c_const);

    let full_status = match (star.status, constant_ok) {
        (_, false) => Status::Unstable,
        (s, true) => s,
    };
    let full = Verdict {
        status: full_status,
        criteria: full_criteria,
        witness: if full_status == Status::Unstable {
            witness
        } else {
            None
        },
        meta: VerdictMeta {
            classifier: "sobolev_full".to_string(),
            horizon,
            grid_size: star.meta.grid_size,
            time_samples: star.meta.time_samples,
        },
    };
    Ok((star, full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Multiplier, ProblemSpec, SpaceKind};

    fn rel_close(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol * (1.0 + b.abs()),
            "{} vs {} (tol {})",
            a,
            b,
            tol
        );
    }

    fn lasota_sobolev(c: f64, p: f64) -> ProblemSpec {
        ProblemSpec::lasota(c, p)
            .unwrap()
            .with_space(SpaceKind::W1pStar)
            .unwrap()
    }

    #[test]
    fn conjugate_multiplier_is_field_derivative_plus_boundary_value() {
        let prob = lasota_sobolev(0.25, 2.0);
        let conj = conjugate_problem(&prob).unwrap();
        // F' + h(0) = -1 + 0.25
        rel_close(conj.multiplier.eval(0.5), -0.75, 1e-14);
        assert!(conj.weight.is_one());

        let r = 2.0;
        let prob = ProblemSpec::lasota_r(r, Multiplier::Const(0.25), 2.0)
            .unwrap()
            .with_space(SpaceKind::W1pStar)
            .unwrap();
        let conj = conjugate_problem(&prob).unwrap();
        // F' = -2x
        rel_close(conj.multiplier.eval(0.5), -1.0 + 0.25, 1e-14);
    }

    #[test]
    fn conjugacy_hypothesis_probe_rejects_rough_multiplier() {
        // h(x) = sqrt(x): (h - h(0))/F = -x^(-1/2) unbounded toward 0
        let h = Multiplier::from_expr(crate::expr::Expr::parse("x^0.5").unwrap());
        let prob = ProblemSpec::lasota(0.0, 2.0)
            .unwrap()
            .with_multiplier(h)
            .with_space(SpaceKind::W1pStar)
            .unwrap();
        assert!(matches!(
            conjugate_problem(&prob),
            Err(EngineError::HypothesisNotVerified(_))
        ));
    }

    #[test]
    fn sobolev_norm_reference_value() {
        let prob = lasota_sobolev(0.0, 2.0);
        let f = SobolevFunction::new("x", |x| x, |_| 1.0, 0.0);
        // ||x||_2 + ||1||_2 = 1/sqrt(3) + 1
        rel_close(
            sobolev_norm(&prob, &f).unwrap(),
            1.0 / 3.0f64.sqrt() + 1.0,
            1e-10,
        );
        let one = SobolevFunction::constant(1.0);
        rel_close(sobolev_norm(&prob, &one).unwrap(), 1.0, 1e-12);
    }

    #[test]
    fn sobolev_norm_flags_derivative_outside_lp() {
        // beta = 1 - 1/p exactly: derivative exponent alpha p = 1
        let prob = lasota_sobolev(0.0, 2.0);
        let f = SobolevFunction::power(0.0, 0.5);
        assert!(matches!(
            sobolev_norm(&prob, &f),
            Err(EngineError::NotInSpace(_))
        ));
    }

    #[test]
    fn transported_function_matches_closed_form() {
        // lasota, h = c: S(t) x = e^((c-1)t) x with derivative e^((c-1)t)
        let c = -0.3;
        let prob = lasota_sobolev(c, 2.0);
        let we = WeightEvolution::new(prob);
        let f = SobolevFunction::new("x", |x| x, |_| 1.0, 0.0);
        let t = 1.2;
        let g = apply_semigroup_sobolev(&we, t, &f).unwrap();
        for &x in &[0.2, 0.7] {
            rel_close((g.value)(x), ((c - 1.0) * t).exp() * x, 1e-12);
            rel_close((g.deriv)(x), ((c - 1.0) * t).exp(), 1e-12);
        }
        assert_eq!(g.boundary_value, 0.0);
    }

    #[test]
    fn constant_transport_has_zero_derivative() {
        let c = 0.4;
        let prob = lasota_sobolev(c, 2.0);
        let we = WeightEvolution::new(prob);
        let one = SobolevFunction::constant(1.0);
        let t = 0.8;
        let g = apply_semigroup_sobolev(&we, t, &one).unwrap();
        rel_close((g.value)(0.5), (c * t).exp(), 1e-12);
        assert!((g.deriv)(0.5).abs() < 1e-12);
        rel_close(g.boundary_value, (c * t).exp(), 1e-12);
    }

    #[test]
    fn transported_derivative_validates_against_finite_differences() {
        // non-constant multiplier exercises the K-term
        let h = Multiplier::from_expr(crate::expr::Expr::parse("0.2 - 0.5*x^2").unwrap());
        let prob = ProblemSpec::lasota(0.0, 2.0)
            .unwrap()
            .with_multiplier(h)
            .with_space(SpaceKind::W1pStar)
            .unwrap();
        let we = WeightEvolution::new(prob);
        let f = SobolevFunction::new("x*(1-x)", |x| x * (1.0 - x), |x| 1.0 - 2.0 * x, 0.0);
        let t = 0.9;
        let g = apply_semigroup_sobolev(&we, t, &f).unwrap();
        let delta = 1e-5;
        for &x in &[0.3, 0.6] {
            let fd = ((g.value)(x + delta) - (g.value)(x - delta)) / (2.0 * delta);
            assert!(
                ((g.deriv)(x) - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                "deriv {} vs fd {}",
                (g.deriv)(x),
                fd
            );
        }
    }

    #[test]
    fn sobolev_integral_closed_form_lasota() {
        // (h(0) + 1/p - 1) t
        let (c, p) = (0.3, 2.0);
        let prob = lasota_sobolev(c, p);
        let we = WeightEvolution::new(prob);
        for &(y, t) in &[(0.5f64, 1.0f64), (0.8, 4.0)] {
            let v = sobolev_stability_integral(&we, y, t).unwrap();
            rel_close(v, (c + 1.0 / p - 1.0) * t, 1e-12);
        }
    }

    #[test]
    fn sobolev_integral_closed_form_lasota_r() {
        // h(0) t + (1/p - 1) r log(y/phi), second term <= 0
        let (r, c, p) = (2.0f64, 0.3f64, 2.0f64);
        let prob = ProblemSpec::lasota_r(r, Multiplier::Const(c), p)
            .unwrap()
            .with_space(SpaceKind::W1pStar)
            .unwrap();
        let we = WeightEvolution::new(prob);
        for &(y, t) in &[(0.5f64, 2.0f64), (0.9, 6.0)] {
            let v = sobolev_stability_integral(&we, y, t).unwrap();
            let phi = we.flow.flow(t, y).unwrap();
            let correction = (1.0 / p - 1.0) * r * (y / phi).ln();
            assert!(correction <= 0.0);
            rel_close(v, c * t + correction, 1e-12);
        }
    }

    #[test]
    fn transport_at_time_zero_is_identity() {
        let prob = lasota_sobolev(-0.3, 2.0);
        let we = WeightEvolution::new(prob);
        let f = SobolevFunction::new("x*(1-x)", |x| x * (1.0 - x), |x| 1.0 - 2.0 * x, 0.0);
        let g = apply_semigroup_sobolev(&we, 0.0, &f).unwrap();
        for &x in &[0.25, 0.75] {
            rel_close((g.value)(x), x * (1.0 - x), 1e-14);
            rel_close((g.deriv)(x), 1.0 - 2.0 * x, 1e-14);
        }
    }

    #[test]
    fn sobolev_thresholds_lasota_p2() {
        // W* threshold 1 - 1/p = 0.5, full space threshold 0
        let p = 2.0;
        let cases = [
            (0.4, Status::Stable, Status::Unstable),
            (-0.1, Status::Stable, Status::Stable),
            (0.6, Status::Unstable, Status::Unstable),
        ];
        for &(c, star_expect, full_expect) in &cases {
            let prob = lasota_sobolev(c, p);
            let (star, full) = classify_stability_sobolev(&prob, 20.0).unwrap();
            assert_eq!(star.status, star_expect, "star at c = {}", c);
            assert_eq!(full.status, full_expect, "full at c = {}", c);
        }
    }

    #[test]
    fn sobolev_thresholds_lasota_r2() {
        // W* threshold 0 for r = 2
        let (r, p) = (2.0, 2.0);
        for &(c, expect) in &[(-0.1, Status::Stable), (0.1, Status::Unstable)] {
            let prob = ProblemSpec::lasota_r(r, Multiplier::Const(c), p)
                .unwrap()
                .with_space(SpaceKind::W1pStar)
                .unwrap();
            let (star, _) = classify_stability_sobolev(&prob, 400.0).unwrap();
            assert_eq!(star.status, expect, "c = {}", c);
        }
    }
}
