//! Semiflow evaluation: phi(t, x), the inverse flow on the image
//! phi(t, Omega), Jacobians, image membership and escape times.
//!
//! Registered families evaluate in closed form. Everything else
//! integrates `x' = F(x)` with the adaptive Dormand-Prince stepper;
//! the Jacobian rides along as the variational equation `D' = F'(y) D`
//! and the multiplier cocycle as `I' = h(y)`, so one solve produces
//! flow, Jacobian and cocycle together.
//!
//! Not-in-image semantics for the numeric path: the backward
//! trajectory leaving the domain (with margin `tol_domain`) or blowing
//! up before time t counts as not in the image. This is the grid-level
//! reading of the almost-everywhere statements the classifiers
//! consume.

use crate::error::{EngineError, Result};
use crate::model::{Domain, Family, Field, Multiplier, ProblemSpec};
use crate::ode::{self, OdeSettings};
use crate::quad::{self, QuadSettings};

/// det D phi(t, .) at a point; equals 1 at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowJacobian {
    pub value: f64,
}

#[derive(Debug, Clone)]
enum FlowSource {
    ClosedForm(Family),
    Numeric,
}

#[derive(Debug, Clone)]
pub struct Semiflow {
    source: FlowSource,
    field: Field,
    domain: Domain,
    ode: OdeSettings,
    quad: QuadSettings,
    tol_domain: f64,
}

impl Semiflow {
    pub fn for_problem(problem: &ProblemSpec) -> Semiflow {
        let source = match problem.field.family() {
            Some(fam) => FlowSource::ClosedForm(fam),
            None => FlowSource::Numeric,
        };
        Semiflow {
            source,
            field: problem.field.clone(),
            domain: problem.domain.clone(),
            ode: OdeSettings {
                rel_tol: problem.tol.tol_ode_rel,
                abs_tol: problem.tol.tol_ode_abs,
                ..OdeSettings::default()
            },
            quad: QuadSettings {
                rel_tol: problem.tol.tol_quad,
                ..QuadSettings::default()
            },
            tol_domain: problem.tol.tol_domain,
        }
    }

    /// Force the numeric integration path even for registered families
    /// (used to cross-check the closed forms).
    pub fn numeric_for_problem(problem: &ProblemSpec) -> Semiflow {
        let mut sf = Semiflow::for_problem(problem);
        sf.source = FlowSource::Numeric;
        sf
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.source, FlowSource::ClosedForm(_))
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// phi(t, x) for t >= 0.
    pub fn flow(&self, t: f64, x: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(EngineError::InvalidArgument(
                "flow time must be nonnegative; use inverse_flow".into(),
            ));
        }
        if t == 0.0 {
            return Ok(x);
        }
        match &self.source {
            FlowSource::ClosedForm(fam) => {
                closed_phi(*fam, t, x).ok_or(EngineError::DomainExit { time: t })
            }
            FlowSource::Numeric => {
                let guard = self.forward_guard();
                let y = ode::integrate_to(
                    |y, dy| dy[0] = self.field.eval(y[0]),
                    &[x],
                    t,
                    Some(&guard),
                    &self.ode,
                )?;
                Ok(y[0])
            }
        }
    }

    /// phi at several sorted times in one pass.
    pub fn flow_samples(&self, x: f64, ts: &[f64]) -> Result<Vec<f64>> {
        match &self.source {
            FlowSource::ClosedForm(fam) => ts
                .iter()
                .map(|&t| closed_phi(*fam, t, x).ok_or(EngineError::DomainExit { time: t }))
                .collect(),
            FlowSource::Numeric => {
                let guard = self.forward_guard();
                let states = ode::integrate_samples(
                    |y, dy| dy[0] = self.field.eval(y[0]),
                    &[x],
                    ts,
                    Some(&guard),
                    &self.ode,
                )?;
                Ok(states.into_iter().map(|s| s[0]).collect())
            }
        }
    }

    /// The point y with phi(t, y) = x, when x lies in phi(t, Omega).
    pub fn inverse_flow(&self, t: f64, x: f64) -> Result<Option<f64>> {
        if t < 0.0 {
            return Err(EngineError::InvalidArgument(
                "inverse_flow takes t >= 0".into(),
            ));
        }
        if t == 0.0 {
            return Ok(Some(x));
        }
        match &self.source {
            FlowSource::ClosedForm(fam) => {
                Ok(closed_phi(*fam, -t, x).filter(|y| self.domain.contains(*y)))
            }
            FlowSource::Numeric => {
                let guard = self.backward_guard();
                match ode::integrate_to(
                    |y, dy| dy[0] = -self.field.eval(y[0]),
                    &[x],
                    t,
                    Some(&guard),
                    &self.ode,
                ) {
                    Ok(y) => Ok(Some(y[0])),
                    Err(EngineError::DomainExit { .. }) | Err(EngineError::BlowUp { .. }) => {
                        Ok(None)
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// det D phi(t, .)(x). Negative t means the backward Jacobian
    /// det D phi(-|t|, .), defined on the image only.
    pub fn flow_jacobian(&self, t: f64, x: f64) -> Result<FlowJacobian> {
        if t >= 0.0 {
            let (_, d) = self.flow_with_jacobian(t, x)?;
            return Ok(FlowJacobian { value: d });
        }
        let tt = -t;
        let y0 = self.inverse_flow(tt, x)?.ok_or_else(|| {
            EngineError::InvalidArgument(format!(
                "x = {} is not in phi({}, Omega); backward Jacobian undefined",
                x, tt
            ))
        })?;
        let (_, d) = self.flow_with_jacobian(tt, y0)?;
        Ok(FlowJacobian { value: 1.0 / d })
    }

    /// (phi(t, x), d2 phi(t, x)) for t >= 0.
    pub fn flow_with_jacobian(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        if t == 0.0 {
            return Ok((x, 1.0));
        }
        match &self.source {
            FlowSource::ClosedForm(fam) => {
                let phi = closed_phi(*fam, t, x).ok_or(EngineError::DomainExit { time: t })?;
                Ok((phi, closed_d2phi(*fam, t, x)))
            }
            FlowSource::Numeric => {
                let guard = self.forward_guard();
                let y = ode::integrate_to(
                    |y, dy| {
                        dy[0] = self.field.eval(y[0]);
                        dy[1] = self.field.eval_prime(y[0]) * y[1];
                    },
                    &[x, 1.0],
                    t,
                    Some(&guard),
                    &self.ode,
                )?;
                Ok((y[0], y[1]))
            }
        }
    }

    /// (phi, d2 phi, integral of h along the orbit) in one evaluation.
    pub fn flow_jac_cocycle(&self, t: f64, x: f64, h: &Multiplier) -> Result<(f64, f64, f64)> {
        if t == 0.0 {
            return Ok((x, 1.0, 0.0));
        }
        if let Some(c) = h.constant_value() {
            let (phi, d) = self.flow_with_jacobian(t, x)?;
            return Ok((phi, d, c * t));
        }
        match &self.source {
            FlowSource::ClosedForm(fam) => {
                let phi = closed_phi(*fam, t, x).ok_or(EngineError::DomainExit { time: t })?;
                let d = closed_d2phi(*fam, t, x);
                let coc = self.closed_cocycle_integral(*fam, t, x, phi, d, h)?;
                Ok((phi, d, coc))
            }
            FlowSource::Numeric => {
                let guard = self.forward_guard();
                let y = ode::integrate_to(
                    |y, dy| {
                        dy[0] = self.field.eval(y[0]);
                        dy[1] = self.field.eval_prime(y[0]) * y[1];
                        dy[2] = h.eval(y[0]);
                    },
                    &[x, 1.0, 0.0],
                    t,
                    Some(&guard),
                    &self.ode,
                )?;
                Ok((y[0], y[1], y[2]))
            }
        }
    }

    fn closed_cocycle_integral(
        &self,
        fam: Family,
        t: f64,
        x: f64,
        phi: f64,
        d2phi: f64,
        h: &Multiplier,
    ) -> Result<f64> {
        // h = c x^(r-1) on F = -x^r integrates to c log(x / phi).
        if let (Some((coeff, expo)), Some(r)) = (h.power_law(), fam.lasota_order()) {
            if (expo - (r - 1.0)).abs() < 1e-14 {
                return Ok(coeff * (x / phi).ln());
            }
        }
        // h = F' + shift integrates to shift t + log d2phi (Abel identity),
        // provided the derivative is taken along the same field.
        if let Multiplier::FieldDerivPlus { shift, .. } = h {
            return Ok(shift * t + d2phi.ln());
        }
        quad::integrate(
            |s| closed_phi(fam, s, x).map(|y| h.eval(y)).unwrap_or(f64::NAN),
            0.0,
            t,
            &self.quad,
        )
    }

    /// Integral of h'(phi(s, x)) d2phi(s, x) over [0, t]; the x-derivative
    /// of the cocycle integral, needed to transport Sobolev functions.
    pub fn cocycle_deriv_integral(&self, t: f64, x: f64, h: &Multiplier) -> Result<f64> {
        if h.constant_value().is_some() {
            return Ok(0.0);
        }
        match &self.source {
            FlowSource::ClosedForm(fam) => {
                let fam = *fam;
                quad::integrate(
                    |s| match (closed_phi(fam, s, x), h.eval_prime_at(fam, s, x)) {
                        (Some(_), Some(v)) => v,
                        _ => f64::NAN,
                    },
                    0.0,
                    t,
                    &self.quad,
                )
            }
            FlowSource::Numeric => {
                let guard = self.forward_guard();
                let y = ode::integrate_to(
                    |y, dy| {
                        dy[0] = self.field.eval(y[0]);
                        dy[1] = self.field.eval_prime(y[0]) * y[1];
                        dy[2] = match h.eval_prime(y[0]) {
                            Some(v) => v * y[1],
                            None => f64::NAN,
                        };
                    },
                    &[x, 1.0, 0.0],
                    t,
                    Some(&guard),
                    &self.ode,
                )?;
                if !y[2].is_finite() {
                    return Err(EngineError::HypothesisNotVerified(
                        "multiplier derivative unavailable".into(),
                    ));
                }
                Ok(y[2])
            }
        }
    }

    /// True iff x lies in phi(t, Omega).
    pub fn image_indicator(&self, t: f64, x: f64) -> bool {
        matches!(self.inverse_flow(t, x), Ok(Some(_)))
    }

    /// Smallest time at which x leaves the image, if it does by `horizon`.
    /// Exact for registered families on their canonical domains.
    pub fn escape_time(&self, x: f64, horizon: f64) -> Result<Option<f64>> {
        if let FlowSource::ClosedForm(fam) = &self.source {
            if self.domain == fam.canonical_domain() {
                let exact = match fam {
                    Family::Lasota => Some(-x.ln()),
                    Family::LasotaR { r } => Some((x.powf(1.0 - r) - 1.0) / (r - 1.0)),
                    Family::Translation | Family::Affine { .. } => None,
                };
                return Ok(exact.filter(|&tbar| tbar <= horizon));
            }
        }
        // coarse doubling scan, then bisection on the indicator
        let mut t_lo = 0.0f64;
        let mut t_hi = horizon / 1024.0;
        let mut found = false;
        while t_hi <= horizon {
            if !self.image_indicator(t_hi, x) {
                found = true;
                break;
            }
            t_lo = t_hi;
            t_hi *= 2.0;
        }
        if !found {
            if self.image_indicator(horizon, x) {
                return Ok(None);
            }
            t_hi = horizon;
        }
        for _ in 0..60 {
            let mid = 0.5 * (t_lo + t_hi);
            if self.image_indicator(mid, x) {
                t_lo = mid;
            } else {
                t_hi = mid;
            }
            if t_hi - t_lo <= 1e-9 * (1.0 + t_hi) {
                break;
            }
        }
        Ok(Some(t_hi))
    }

    fn forward_guard(&self) -> impl Fn(&[f64]) -> bool + '_ {
        let m = self.tol_domain;
        move |y: &[f64]| {
            self.domain
                .intervals
                .iter()
                .any(|iv| y[0] > iv.lo - m && y[0] < iv.hi + m)
        }
    }

    /// Backward integration stays strictly inside the domain: coming
    /// within `tol_domain` of a finite boundary counts as not-in-image.
    fn backward_guard(&self) -> impl Fn(&[f64]) -> bool + '_ {
        let m = self.tol_domain;
        move |y: &[f64]| {
            self.domain.intervals.iter().any(|iv| {
                let lo_ok = !iv.lo.is_finite() || y[0] > iv.lo + m;
                let hi_ok = !iv.hi.is_finite() || y[0] < iv.hi - m;
                lo_ok && hi_ok
            })
        }
    }
}

impl Multiplier {
    /// h'(phi(s, x)) * d2phi(s, x) for closed-form families, used by the
    /// cocycle derivative quadrature.
    fn eval_prime_at(&self, fam: Family, s: f64, x: f64) -> Option<f64> {
        let phi = closed_phi(fam, s, x)?;
        let hp = self.eval_prime(phi)?;
        Some(hp * closed_d2phi(fam, s, x))
    }
}

/// Closed-form phi(t, x); defined for signed t where the formula makes
/// sense (backward evaluation can run off the family's branch).
fn closed_phi(fam: Family, t: f64, x: f64) -> Option<f64> {
    match fam {
        Family::Translation => Some(x + t),
        Family::Affine { alpha, beta } => {
            if beta == 0.0 {
                Some(x + alpha * t)
            } else {
                let xs = -alpha / beta;
                Some(xs + (x - xs) * (beta * t).exp())
            }
        }
        Family::Lasota => Some(x * (-t).exp()),
        Family::LasotaR { r } => {
            if r == 1.0 {
                return Some(x * (-t).exp());
            }
            let base = x.powf(1.0 - r) + (r - 1.0) * t;
            if base <= 0.0 {
                None
            } else {
                Some(base.powf(1.0 / (1.0 - r)))
            }
        }
    }
}

fn closed_d2phi(fam: Family, t: f64, x: f64) -> f64 {
    match fam {
        Family::Translation => 1.0,
        Family::Affine { beta, .. } => (beta * t).exp(),
        Family::Lasota => (-t).exp(),
        Family::LasotaR { r } => {
            if r == 1.0 {
                return (-t).exp();
            }
            let base = x.powf(1.0 - r) + (r - 1.0) * t;
            x.powf(-r) * base.powf(r / (1.0 - r))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, Family, Field, Multiplier, ProblemSpec};

    fn rel_close(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol * (1.0 + b.abs()),
            "{} vs {} (tol {})",
            a,
            b,
            tol
        );
    }

    #[test]
    fn lasota_closed_form() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        rel_close(sf.flow(1.0, 0.5).unwrap(), 0.5 * (-1.0f64).exp(), 1e-14);
        rel_close(
            sf.flow_jacobian(1.0, 0.5).unwrap().value,
            (-1.0f64).exp(),
            1e-14,
        );
    }

    #[test]
    fn affine_closed_form_matches_paper_example() {
        let p = ProblemSpec::new(
            Domain::real_line(),
            Field::Registered(Family::Affine {
                alpha: 1.0,
                beta: -1.0,
            }),
            Multiplier::Const(0.0),
            2.0,
        )
        .unwrap();
        let sf = Semiflow::for_problem(&p);
        // phi(t,x) = 1 + (x-1) e^-t, d2phi = e^-t
        rel_close(
            sf.flow(2.0, 3.0).unwrap(),
            1.0 + 2.0 * (-2.0f64).exp(),
            1e-14,
        );
        rel_close(
            sf.flow_jacobian(2.0, 3.0).unwrap().value,
            (-2.0f64).exp(),
            1e-14,
        );
    }

    #[test]
    fn lasota_r_closed_form_matches_formula() {
        let r = 2.0;
        let p = ProblemSpec::lasota_r(r, Multiplier::Const(0.0), 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        let (t, x) = (1.5, 0.7);
        // phi = x / (1 + t x) for r = 2
        rel_close(sf.flow(t, x).unwrap(), x / (1.0 + t * x), 1e-14);
        let jac = sf.flow_jacobian(t, x).unwrap().value;
        rel_close(jac, 1.0 / (1.0 + t * x).powi(2), 1e-14);
    }

    #[test]
    fn inverse_flow_respects_image() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        // x = 0.5, t = 1: 0.5 e^1 > 1, not in image
        assert_eq!(sf.inverse_flow(1.0, 0.5).unwrap(), None);
        assert!(!sf.image_indicator(1.0, 0.5));
        // x = 0.2, t = 1: 0.2 e^1 ~ 0.5436 in (0,1)
        let y0 = sf.inverse_flow(1.0, 0.2).unwrap().unwrap();
        rel_close(y0, 0.2 * 1.0f64.exp(), 1e-14);
        assert!(sf.image_indicator(0.0, 0.5));
    }

    #[test]
    fn translation_always_in_image() {
        let p = ProblemSpec::translation(crate::model::Weight::One, 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        assert!(sf.image_indicator(5.0, -3.0));
        rel_close(sf.inverse_flow(2.0, 1.0).unwrap().unwrap(), -1.0, 1e-14);
        assert_eq!(sf.escape_time(0.0, 50.0).unwrap(), None);
    }

    #[test]
    fn escape_times_are_exact_for_registered_families() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        let tbar = sf.escape_time(0.5, 10.0).unwrap().unwrap();
        rel_close(tbar, 0.5f64.ln().abs(), 1e-14);

        let r = 3.0;
        let p = ProblemSpec::lasota_r(r, Multiplier::Const(0.0), 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        let x = 0.4;
        let tbar = sf.escape_time(x, 100.0).unwrap().unwrap();
        rel_close(tbar, (x.powf(1.0 - r) - 1.0) / (r - 1.0), 1e-14);
    }

    #[test]
    fn numeric_flow_matches_closed_form() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let numeric = Semiflow::numeric_for_problem(&p);
        for &x in &[0.1, 0.5, 0.9] {
            for &t in &[0.5f64, 2.0, 8.0] {
                let exact = x * (-t).exp();
                rel_close(numeric.flow(t, x).unwrap(), exact, 1e-9);
            }
        }
    }

    #[test]
    fn numeric_inverse_flags_escape() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let numeric = Semiflow::numeric_for_problem(&p);
        assert_eq!(numeric.inverse_flow(1.0, 0.5).unwrap(), None);
        let y0 = numeric.inverse_flow(1.0, 0.2).unwrap().unwrap();
        rel_close(y0, 0.2 * 1.0f64.exp(), 1e-8);
    }

    #[test]
    fn numeric_escape_time_close_to_exact() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let numeric = Semiflow::numeric_for_problem(&p);
        let tbar = numeric.escape_time(0.5, 10.0).unwrap().unwrap();
        assert!((tbar - 0.5f64.ln().abs()).abs() < 1e-5, "tbar = {}", tbar);
    }

    #[test]
    fn variational_jacobian_matches_closed_form() {
        let p = ProblemSpec::lasota_r(2.0, Multiplier::Const(0.0), 2.0).unwrap();
        let numeric = Semiflow::numeric_for_problem(&p);
        let exact = Semiflow::for_problem(&p);
        for &x in &[0.2, 0.6, 0.9] {
            let j_num = numeric.flow_jacobian(2.0, x).unwrap().value;
            let j_exact = exact.flow_jacobian(2.0, x).unwrap().value;
            rel_close(j_num, j_exact, 1e-8);
        }
    }

    #[test]
    fn cocycle_power_law_shortcut_matches_quadrature() {
        let r = 2.0;
        let h = Multiplier::PowerLaw {
            coeff: -0.8,
            exponent: r - 1.0,
        };
        let p = ProblemSpec::lasota_r(r, h.clone(), 2.0).unwrap();
        let exact = Semiflow::for_problem(&p);
        let numeric = Semiflow::numeric_for_problem(&p);
        for &(t, x) in &[(0.7, 0.3), (2.0, 0.8)] {
            let (_, _, c1) = exact.flow_jac_cocycle(t, x, &h).unwrap();
            let (_, _, c2) = numeric.flow_jac_cocycle(t, x, &h).unwrap();
            rel_close(c1, c2, 1e-8);
        }
    }

    #[test]
    fn jacobian_is_one_at_time_zero() {
        let p = ProblemSpec::lasota(-0.5, 2.0).unwrap();
        let sf = Semiflow::for_problem(&p);
        assert_eq!(sf.flow_jacobian(0.0, 0.3).unwrap().value, 1.0);
    }
}
