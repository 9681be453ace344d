//! Problem description: domain, vector field, multiplier, weight,
//! exponent and space, plus the equilibrium-set partition and the
//! standing-hypothesis validation probes.
//!
//! A problem is either built programmatically or parsed from a flat
//! key-value config document (see the repository README for the exact
//! grammar). Registered closed-form families bind exact semiflows;
//! everything else falls back to numeric integration of `x' = F(x)`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{EngineError, Result};
use crate::expr::Expr;
use crate::grid;
use crate::semiflow::Semiflow;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Open interval with possibly infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Finite window used for sampling: unbounded sides are clipped.
    pub fn clipped(&self, fallback: f64) -> Interval {
        Interval {
            lo: if self.lo.is_finite() {
                self.lo
            } else {
                -fallback
            },
            hi: if self.hi.is_finite() {
                self.hi
            } else {
                fallback
            },
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{}", v)
            }
        };
        write!(f, "({}, {})", side(self.lo), side(self.hi))
    }
}

/// Finite union of open intervals (the 1-D instance of "finite union
/// of open boxes").
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Domain {
    pub intervals: Vec<Interval>,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Domain {
            intervals: vec![Interval::new(lo, hi)],
        }
    }

    pub fn real_line() -> Self {
        Domain::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    pub fn is_bounded(&self) -> bool {
        self.intervals.iter().all(Interval::is_bounded)
    }

    /// The single interval, when the domain is one.
    pub fn single(&self) -> Option<Interval> {
        if self.intervals.len() == 1 {
            Some(self.intervals[0])
        } else {
            None
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        write!(f, "{}", parts.join(" | "))
    }
}

/// Registered closed-form semiflow families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Family {
    /// F = 1 on R: left translation semigroup.
    Translation,
    /// F = alpha + beta x on R.
    Affine { alpha: f64, beta: f64 },
    /// F = -x on (0, 1): von Foerster-Lasota transport.
    Lasota,
    /// F = -x^r on (0, 1), r >= 1; r = 1 degenerates to `Lasota`.
    LasotaR { r: f64 },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Translation => "translation",
            Family::Affine { .. } => "affine",
            Family::Lasota => "lasota",
            Family::LasotaR { .. } => "lasota_r",
        }
    }

    pub fn canonical_domain(&self) -> Domain {
        match self {
            Family::Translation | Family::Affine { .. } => Domain::real_line(),
            Family::Lasota | Family::LasotaR { .. } => Domain::interval(0.0, 1.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Family::Translation => 1.0,
            Family::Affine { alpha, beta } => alpha + beta * x,
            Family::Lasota => -x,
            Family::LasotaR { r } => -x.powf(*r),
        }
    }

    pub fn eval_prime(&self, x: f64) -> f64 {
        match self {
            Family::Translation => 0.0,
            Family::Affine { beta, .. } => *beta,
            Family::Lasota => -1.0,
            Family::LasotaR { r } => -r * x.powf(r - 1.0),
        }
    }

    pub fn eval_second(&self, x: f64) -> f64 {
        match self {
            Family::Translation | Family::Affine { .. } | Family::Lasota => 0.0,
            Family::LasotaR { r } => -r * (r - 1.0) * x.powf(r - 2.0),
        }
    }

    /// The exponent r for the Lasota-type families.
    pub fn lasota_order(&self) -> Option<f64> {
        match self {
            Family::Lasota => Some(1.0),
            Family::LasotaR { r } => Some(*r),
            _ => None,
        }
    }
}

/// The vector field F.
#[derive(Clone)]
pub enum Field {
    Registered(Family),
    Expression { f: Expr, f_prime: Expr },
    Closure { f: RealFn, f_prime: RealFn },
}

impl Field {
    pub fn from_expr(f: Expr) -> Self {
        let f_prime = f.derivative();
        Field::Expression { f, f_prime }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Field::Registered(fam) => fam.eval(x),
            Field::Expression { f, .. } => f.eval(x),
            Field::Closure { f, .. } => f(x),
        }
    }

    pub fn eval_prime(&self, x: f64) -> f64 {
        match self {
            Field::Registered(fam) => fam.eval_prime(x),
            Field::Expression { f_prime, .. } => f_prime.eval(x),
            Field::Closure { f_prime, .. } => f_prime(x),
        }
    }

    pub fn family(&self) -> Option<Family> {
        match self {
            Field::Registered(fam) => Some(*fam),
            _ => None,
        }
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Registered(fam) => write!(f, "Field::Registered({:?})", fam),
            Field::Expression { f: e, .. } => write!(f, "Field::Expression({})", e),
            Field::Closure { .. } => write!(f, "Field::Closure"),
        }
    }
}

/// The multiplier h.
#[derive(Clone)]
pub enum Multiplier {
    Const(f64),
    /// h(x) = coeff * x^exponent; the natural Lasota-type threshold
    /// family uses exponent = r - 1.
    PowerLaw {
        coeff: f64,
        exponent: f64,
    },
    Expression {
        h: Expr,
        h_prime: Expr,
    },
    /// h = F' + shift: the multiplier of the Sobolev-conjugated problem.
    FieldDerivPlus {
        field: Arc<Field>,
        shift: f64,
    },
    Closure {
        h: RealFn,
        h_prime: Option<RealFn>,
    },
}

impl Multiplier {
    pub fn from_expr(h: Expr) -> Self {
        let h_prime = h.derivative();
        Multiplier::Expression { h, h_prime }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Multiplier::Const(c) => *c,
            Multiplier::PowerLaw { coeff, exponent } => {
                if *exponent == 0.0 {
                    *coeff
                } else {
                    coeff * x.powf(*exponent)
                }
            }
            Multiplier::Expression { h, .. } => h.eval(x),
            Multiplier::FieldDerivPlus { field, shift } => field.eval_prime(x) + shift,
            Multiplier::Closure { h, .. } => h(x),
        }
    }

    pub fn eval_prime(&self, x: f64) -> Option<f64> {
        match self {
            Multiplier::Const(_) => Some(0.0),
            Multiplier::PowerLaw { coeff, exponent } => {
                Some(coeff * exponent * x.powf(exponent - 1.0))
            }
            Multiplier::Expression { h_prime, .. } => Some(h_prime.eval(x)),
            Multiplier::FieldDerivPlus { field, .. } => match field.as_ref() {
                Field::Registered(fam) => Some(fam.eval_second(x)),
                Field::Expression { f_prime, .. } => Some(f_prime.derivative().eval(x)),
                Field::Closure { .. } => None,
            },
            Multiplier::Closure { h_prime, .. } => h_prime.as_ref().map(|g| g(x)),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Multiplier::Const(c) => Some(*c),
            Multiplier::PowerLaw { coeff, exponent } if *exponent == 0.0 => Some(*coeff),
            Multiplier::Expression { h, .. } => h.constant_value(),
            _ => None,
        }
    }

    pub fn power_law(&self) -> Option<(f64, f64)> {
        match self {
            Multiplier::PowerLaw { coeff, exponent } => Some((*coeff, *exponent)),
            _ => None,
        }
    }
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplier::Const(c) => write!(f, "Multiplier::Const({})", c),
            Multiplier::PowerLaw { coeff, exponent } => {
                write!(f, "Multiplier::PowerLaw({} * x^{})", coeff, exponent)
            }
            Multiplier::Expression { h, .. } => write!(f, "Multiplier::Expression({})", h),
            Multiplier::FieldDerivPlus { shift, .. } => {
                write!(f, "Multiplier::FieldDerivPlus(F' + {})", shift)
            }
            Multiplier::Closure { .. } => write!(f, "Multiplier::Closure"),
        }
    }
}

/// The weight rho.
#[derive(Clone)]
pub enum Weight {
    One,
    Expression(Expr),
    Closure(RealFn),
}

impl Weight {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Expression(e) => e.eval(x),
            Weight::Closure(f) => f(x),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Weight::One => true,
            Weight::Expression(e) => e.constant_value() == Some(1.0),
            Weight::Closure(_) => false,
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::One => write!(f, "Weight::One"),
            Weight::Expression(e) => write!(f, "Weight::Expression({})", e),
            Weight::Closure(_) => write!(f, "Weight::Closure"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpaceKind {
    Lp,
    W1p,
    W1pStar,
}

impl SpaceKind {
    pub fn label(&self) -> &'static str {
        match self {
            SpaceKind::Lp => "Lp",
            SpaceKind::W1p => "W1p",
            SpaceKind::W1pStar => "W1p_star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalarMode {
    Real,
    ComplexReduced,
}

/// Numeric tolerances, all overridable from the config document.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub tol_ode_rel: f64,
    pub tol_ode_abs: f64,
    pub tol_quad: f64,
    pub tol_flow: f64,
    pub tol_domain: f64,
    /// Equilibrium detection threshold, in units of max |F| on the grid.
    pub zero_tol: f64,
    pub slope_tol: f64,
    pub value_tol: f64,
    /// Allowed late-window rise of a log-sup curve before it counts as
    /// unbounded. Catches logarithmic growth that a tail slope misses.
    pub bound_tol: f64,
    /// A curve must fall below -this to count as diverging to -infinity.
    pub divergence_threshold: f64,
    pub fd_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_ode_rel: 1e-10,
            tol_ode_abs: 1e-12,
            tol_quad: 1e-10,
            tol_flow: 1e-8,
            tol_domain: 1e-9,
            zero_tol: 1e-10,
            slope_tol: 1e-3,
            value_tol: 1e-6,
            bound_tol: 5e-3,
            divergence_threshold: 20.0,
            fd_tol: 1e-6,
        }
    }
}

/// Grid and horizon defaults for the sampled criteria.
#[derive(Debug, Clone, Serialize)]
pub struct Sampling {
    pub grid_n: usize,
    pub time_samples: usize,
    pub horizon: f64,
    /// Finite window substituted for unbounded domain sides.
    pub window: f64,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            grid_n: 201,
            time_samples: 40,
            horizon: 20.0,
            window: 20.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub field: Field,
    pub multiplier: Multiplier,
    /// Imaginary part of a complex multiplier, kept for diagnostics
    /// after reduction to the real part.
    pub multiplier_im: Option<Expr>,
    pub weight: Weight,
    pub p: f64,
    pub space: SpaceKind,
    pub scalar_mode: ScalarMode,
    pub tol: Tolerances,
    pub sampling: Sampling,
}

impl ProblemSpec {
    pub fn new(domain: Domain, field: Field, multiplier: Multiplier, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(EngineError::InvalidExponent(p));
        }
        Ok(ProblemSpec {
            domain,
            field,
            multiplier,
            multiplier_im: None,
            weight: Weight::One,
            p,
            space: SpaceKind::Lp,
            scalar_mode: ScalarMode::Real,
            tol: Tolerances::default(),
            sampling: Sampling::default(),
        })
    }

    /// von Foerster-Lasota problem F = -x on (0,1) with constant h.
    pub fn lasota(c: f64, p: f64) -> Result<Self> {
        ProblemSpec::new(
            Domain::interval(0.0, 1.0),
            Field::Registered(Family::Lasota),
            Multiplier::Const(c),
            p,
        )
    }

    /// Generalized problem F = -x^r on (0,1).
    pub fn lasota_r(r: f64, multiplier: Multiplier, p: f64) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(EngineError::InvalidArgument(format!(
                "lasota_r requires r >= 1, got {}",
                r
            )));
        }
        let fam = if r == 1.0 {
            Family::Lasota
        } else {
            Family::LasotaR { r }
        };
        ProblemSpec::new(
            Domain::interval(0.0, 1.0),
            Field::Registered(fam),
            multiplier,
            p,
        )
    }

    /// Left translation F = 1 on R with an explicit weight.
    pub fn translation(weight: Weight, p: f64) -> Result<Self> {
        let mut spec = ProblemSpec::new(
            Domain::real_line(),
            Field::Registered(Family::Translation),
            Multiplier::Const(0.0),
            p,
        )?;
        spec.weight = weight;
        Ok(spec)
    }

    pub fn with_space(mut self, space: SpaceKind) -> Result<Self> {
        if matches!(space, SpaceKind::W1p | SpaceKind::W1pStar) {
            self.check_sobolev_admissible()?;
        }
        self.space = space;
        Ok(self)
    }

    pub fn with_weight(mut self, weight: Weight) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_multiplier(mut self, multiplier: Multiplier) -> Self {
        self.multiplier = multiplier;
        self
    }

    fn check_sobolev_admissible(&self) -> Result<()> {
        let iv = self
            .domain
            .single()
            .ok_or(EngineError::SobolevUnboundedDomain)?;
        if !iv.is_bounded() {
            return Err(EngineError::SobolevUnboundedDomain);
        }
        let fa = self.field.eval(iv.lo).abs();
        let scale = self.field_scale().max(1e-30);
        if fa > 1e-9 * scale.max(1.0) {
            return Err(EngineError::SobolevNonvanishingField(fa));
        }
        Ok(())
    }

    /// max |F| over the default sampling grid; sets the unit for the
    /// equilibrium-detection tolerance.
    pub fn field_scale(&self) -> f64 {
        let mut scale: f64 = 0.0;
        for iv in &self.domain.intervals {
            let window = iv.clipped(self.sampling.window);
            for x in grid::uniform(&window, 64) {
                scale = scale.max(self.field.eval(x).abs());
            }
        }
        scale
    }

    /// Absolute equilibrium-detection threshold.
    pub fn zero_abs_tol(&self) -> f64 {
        let scale = self.field_scale();
        if scale > 0.0 {
            self.tol.zero_tol * scale
        } else {
            f64::MIN_POSITIVE
        }
    }

    /// Default space grid across all domain components (uniform plus
    /// geometric refinement toward finite endpoints).
    pub fn default_grid(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for iv in &self.domain.intervals {
            let window = iv.clipped(self.sampling.window);
            let mut g = grid::uniform(&window, self.sampling.grid_n);
            g.extend(grid::geometric_edges(iv, 1e-10));
            pts.extend(g.into_iter().filter(|&x| iv.contains(x)));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Left endpoint of the (first) domain interval.
    pub fn left_endpoint(&self) -> f64 {
        self.domain.intervals[0].lo
    }
}

/// Equilibrium set Omega_0 = {F = 0} and its complement Omega_1,
/// detected on a grid (exact for registered families).
#[derive(Debug, Clone, Serialize)]
pub struct DomainPartition {
    /// Sub-intervals where F vanishes; isolated zeros appear as
    /// degenerate intervals.
    pub omega0: Vec<Interval>,
    pub omega1: Vec<Interval>,
    pub zero_tolerance: f64,
    /// True when Omega_0 has positive length (not just isolated zeros).
    pub omega0_has_measure: bool,
}

impl DomainPartition {
    pub fn classify(&self, field: &Field, x: f64) -> PointClass {
        if field.eval(x).abs() <= self.zero_tolerance {
            PointClass::Omega0
        } else {
            PointClass::Omega1
        }
    }

    /// Membership in the detected equilibrium set (degenerate
    /// intervals are isolated zeros).
    pub fn in_omega0(&self, x: f64) -> bool {
        self.omega0.iter().any(|iv| x >= iv.lo && x <= iv.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Omega0,
    Omega1,
}

/// Partition the sampled domain into the equilibrium set and its
/// complement. Registered families use their exact zero sets.
pub fn partition_domain(problem: &ProblemSpec, grid: &[f64]) -> Result<DomainPartition> {
    if grid.is_empty() {
        return Err(EngineError::EmptyGrid);
    }
    let ztol = problem.zero_abs_tol();

    if let Some(fam) = problem.field.family() {
        let mut omega0 = Vec::new();
        match fam {
            Family::Translation => {}
            Family::Lasota | Family::LasotaR { .. } => {
                // F vanishes only at 0, outside the open canonical domain
            }
            Family::Affine { alpha, beta } => {
                if beta == 0.0 {
                    if alpha == 0.0 {
                        omega0 = problem.domain.intervals.clone();
                    }
                } else {
                    let zero = -alpha / beta;
                    if problem.domain.contains(zero) {
                        omega0.push(Interval::new(zero, zero));
                    }
                }
            }
        }
        let omega0_has_measure = omega0.iter().any(|iv| iv.length() > 0.0);
        let omega1 = complement(&problem.domain, &omega0);
        return Ok(DomainPartition {
            omega0,
            omega1,
            zero_tolerance: ztol,
            omega0_has_measure,
        });
    }

    // Sampled detection: contiguous runs of |F| <= tol become intervals.
    let mut omega0 = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, &x) in grid.iter().enumerate() {
        let is_zero = problem.field.eval(x).abs() <= ztol;
        match (is_zero, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                omega0.push(Interval::new(grid[s], grid[i - 1]));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        omega0.push(Interval::new(grid[s], grid[grid.len() - 1]));
    }
    let omega0_has_measure = omega0.iter().any(|iv| iv.length() > 0.0);
    let omega1 = complement(&problem.domain, &omega0);
    Ok(DomainPartition {
        omega0,
        omega1,
        zero_tolerance: ztol,
        omega0_has_measure,
    })
}

fn complement(domain: &Domain, omega0: &[Interval]) -> Vec<Interval> {
    let mut out = Vec::new();
    for iv in &domain.intervals {
        let mut cursor = iv.lo;
        let mut cuts: Vec<&Interval> = omega0
            .iter()
            .filter(|z| z.hi > iv.lo && z.lo < iv.hi)
            .collect();
        cuts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for z in cuts {
            if z.lo > cursor {
                out.push(Interval::new(cursor, z.lo));
            }
            cursor = cursor.max(z.hi);
        }
        if cursor < iv.hi {
            out.push(Interval::new(cursor, iv.hi));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Info,
    Warning,
    Violation,
}

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub code: String,
    pub severity: Severity,
    pub message: String,
}

/// Validation report for the standing hypotheses: smoothness spot
/// checks, forward completeness up to the horizon, and injectivity
/// (monotonicity) of the flow maps. Findings are reported, not thrown.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub findings: Vec<Finding>,
    pub forward_complete: bool,
    pub injective: bool,
    pub smooth: bool,
    pub horizon: f64,
}

pub fn validate_hypotheses(problem: &ProblemSpec, horizon: f64) -> HypothesisReport {
    let mut findings = Vec::new();
    let mut smooth = true;
    let mut forward_complete = true;
    let mut injective = true;

    let probe_grid: Vec<f64> = {
        let mut g = Vec::new();
        for iv in &problem.domain.intervals {
            let window = iv.clipped(problem.sampling.window);
            g.extend(grid::uniform(&window, 17));
        }
        g
    };

    // (H1)/(H2): continuity and C^1 spot checks via finite differences.
    for &x in &probe_grid {
        let h = 1e-6 * (1.0 + x.abs());
        if problem.domain.contains(x - h) && problem.domain.contains(x + h) {
            let fd = (problem.field.eval(x + h) - problem.field.eval(x - h)) / (2.0 * h);
            let fp = problem.field.eval_prime(x);
            if !fd.is_finite() || !fp.is_finite() {
                smooth = false;
                findings.push(Finding {
                    code: "H2.smoothness".into(),
                    severity: Severity::Violation,
                    message: format!("F or F' non-finite near x = {:.6}", x),
                });
            } else if (fd - fp).abs() > 1e-3 * (1.0 + fp.abs()) {
                smooth = false;
                findings.push(Finding {
                    code: "H2.smoothness".into(),
                    severity: Severity::Warning,
                    message: format!(
                        "finite-difference derivative mismatch at x = {:.6}: {:.3e} vs {:.3e}",
                        x, fd, fp
                    ),
                });
            }
        }
    }

    // (H3): forward completeness probes.
    let flow = Semiflow::for_problem(problem);
    for &x in &probe_grid {
        match flow.flow(horizon, x) {
            Ok(y) => {
                if !problem.domain.contains(y) && !on_boundary(problem, y) {
                    forward_complete = false;
                    findings.push(Finding {
                        code: "H3.completeness".into(),
                        severity: Severity::Violation,
                        message: format!("trajectory from x = {:.6} left the domain", x),
                    });
                }
            }
            Err(EngineError::BlowUp { time }) => {
                forward_complete = false;
                findings.push(Finding {
                    code: "H3.completeness".into(),
                    severity: Severity::Violation,
                    message: format!("finite-time blow-up from x = {:.6} near t = {:.6}", x, time),
                });
            }
            Err(EngineError::DomainExit { time }) => {
                forward_complete = false;
                findings.push(Finding {
                    code: "H3.completeness".into(),
                    severity: Severity::Violation,
                    message: format!("domain exit from x = {:.6} at t = {:.6}", x, time),
                });
            }
            Err(e) => {
                forward_complete = false;
                findings.push(Finding {
                    code: "H3.completeness".into(),
                    severity: Severity::Warning,
                    message: format!("flow probe failed from x = {:.6}: {}", x, e),
                });
            }
        }
    }

    // Injectivity probe: phi(t, .) strictly monotone on 1-D grids.
    // This is grid evidence only; injectivity for user-supplied F is
    // assumed, not proved.
    if forward_complete {
        for &t in &[horizon / 4.0, horizon / 2.0, horizon] {
            let mut prev: Option<f64> = None;
            let mut direction: Option<bool> = None;
            for &x in &probe_grid {
                if let Ok(y) = flow.flow(t, x) {
                    if let Some(py) = prev {
                        let up = y > py;
                        if y == py {
                            injective = false;
                        }
                        match direction {
                            None => direction = Some(up),
                            Some(d) if d != up => injective = false,
                            _ => {}
                        }
                    }
                    prev = Some(y);
                }
            }
        }
        if !injective {
            findings.push(Finding {
                code: "flow.injectivity".into(),
                severity: Severity::Warning,
                message: "phi(t, .) not strictly monotone on the probe grid".into(),
            });
        }
    }

    if findings.is_empty() {
        findings.push(Finding {
            code: "ok".into(),
            severity: Severity::Info,
            message: "all hypothesis probes passed".into(),
        });
    }

    HypothesisReport {
        findings,
        forward_complete,
        injective,
        smooth,
        horizon,
    }
}

fn on_boundary(problem: &ProblemSpec, y: f64) -> bool {
    problem.domain.intervals.iter().any(|iv| {
        (iv.lo.is_finite() && (y - iv.lo).abs() <= 1e-9 * (1.0 + iv.lo.abs()))
            || (iv.hi.is_finite() && (y - iv.hi).abs() <= 1e-9 * (1.0 + iv.hi.abs()))
    })
}
