//! Reproduction suites: closed-form threshold predictions compared
//! against the engine's verdicts, one row per case.

use semistab::error::{EngineError, Result};
use semistab::expr::Expr;
use semistab::lasota::{self, LasotaProblem};
use semistab::model::{Domain, Family, Field, Multiplier, ProblemSpec, SpaceKind, Weight};
use semistab::sobolev::classify_stability_sobolev;
use semistab::stability::{classify, classify_stability_rho1, Status};

#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub case: String,
    pub predicted: String,
    pub engine: String,
    pub agree: bool,
}

pub struct SuiteResult {
    pub name: String,
    pub rows: Vec<SuiteRow>,
}

impl SuiteResult {
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.agree)
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Stable => "Stable",
        Status::Unstable => "Unstable",
        Status::Inconclusive => "Inconclusive",
    }
}

fn row(case: String, predicted: Status, engine: Status) -> SuiteRow {
    SuiteRow {
        case,
        predicted: status_name(predicted).to_string(),
        engine: status_name(engine).to_string(),
        agree: predicted == engine,
    }
}

pub fn run_suite(name: &str) -> Result<SuiteResult> {
    let rows = match name {
        "lasota_lp" => lasota_lp()?,
        "lasota_sobolev" => lasota_sobolev()?,
        "generalized" => generalized()?,
        "hypercyclicity" => hypercyclicity()?,
        "examples_sec2" => examples_sec2()?,
        other => {
            return Err(EngineError::UnknownSuite(format!(
                "{} (expected one of: {})",
                other,
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteResult {
        name: name.to_string(),
        rows,
    })
}

pub const SUITES: &[&str] = &[
    "lasota_lp",
    "lasota_sobolev",
    "generalized",
    "hypercyclicity",
    "examples_sec2",
];

/// Threshold h(0) <= -1/p on L^p for the classical equation.
fn lasota_lp() -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for &p in &[1.0, 2.0, 4.0] {
        let threshold = -1.0 / p;
        for &dc in &[-0.1, 0.0, 0.1] {
            let c = threshold + dc;
            let predicted = if c <= threshold {
                Status::Stable
            } else {
                Status::Unstable
            };
            let prob = ProblemSpec::lasota(c, p)?;
            let engine = classify_stability_rho1(&prob, 20.0)?.status;
            rows.push(row(format!("p={} c={:+.2}", p, c), predicted, engine));
        }
    }
    Ok(rows)
}

/// Generalized equation with the threshold family h = c x^(r-1):
/// stable iff c <= -r/p.
fn generalized() -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for &r in &[2.0, 3.0] {
        for &p in &[1.0, 2.0] {
            let threshold = -r / p;
            for &dc in &[-0.1, 0.0, 0.1] {
                let c = threshold + dc;
                let predicted = if c <= threshold {
                    Status::Stable
                } else {
                    Status::Unstable
                };
                let prob = LasotaProblem::threshold_family(r, c, p)?.to_problem_spec()?;
                let engine = classify_stability_rho1(&prob, 40.0)?.status;
                rows.push(row(
                    format!("r={} p={} c={:+.2}", r, p, c),
                    predicted,
                    engine,
                ));
            }
        }
    }
    Ok(rows)
}

/// Sobolev thresholds: W^{1,p}_* flips at 1 - 1/p (r = 1) and at 0
/// (r > 1); the full space requires h(0) < 0 on top.
fn lasota_sobolev() -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    let p = 2.0;

    for &c in &[0.4, 0.5, 0.6, -0.1, 0.0] {
        let prob = ProblemSpec::lasota(c, p)?.with_space(SpaceKind::W1pStar)?;
        let (star, full) = classify_stability_sobolev(&prob, 20.0)?;
        let star_pred = if c <= 1.0 - 1.0 / p {
            Status::Stable
        } else {
            Status::Unstable
        };
        let full_pred = if c < 0.0 { star_pred } else { Status::Unstable };
        rows.push(row(
            format!("r=1 p={} c={:+.2} W1p_star", p, c),
            star_pred,
            star.status,
        ));
        rows.push(row(
            format!("r=1 p={} c={:+.2} W1p", p, c),
            full_pred,
            full.status,
        ));
    }

    for &c in &[-0.1, 0.0, 0.1] {
        let prob =
            ProblemSpec::lasota_r(2.0, Multiplier::Const(c), p)?.with_space(SpaceKind::W1pStar)?;
        let (star, full) = classify_stability_sobolev(&prob, 400.0)?;
        let star_pred = if c <= 0.0 {
            Status::Stable
        } else {
            Status::Unstable
        };
        let full_pred = if c < 0.0 { star_pred } else { Status::Unstable };
        rows.push(row(
            format!("r=2 p={} c={:+.2} W1p_star", p, c),
            star_pred,
            star.status,
        ));
        rows.push(row(
            format!("r=2 p={} c={:+.2} W1p", p, c),
            full_pred,
            full.status,
        ));
    }
    Ok(rows)
}

/// Trichotomy on F = -x, p = 2: stable iff lambda <= -1/2 iff not a
/// hypercyclicity candidate.
fn hypercyclicity() -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    let p = 2.0;
    let base = ProblemSpec::lasota(0.0, p)?;
    for &lambda in &[-1.0, -0.75, -0.5, -0.25, 0.0] {
        let rep = lasota::stability_vs_hypercyclicity(&base, lambda, 20.0)?;
        rows.push(SuiteRow {
            case: format!("lambda={:+.2} stability", lambda),
            predicted: if rep.analytic_stable {
                "Stable".to_string()
            } else {
                "Unstable".to_string()
            },
            engine: status_name(rep.numeric_verdict).to_string(),
            agree: rep.agree,
        });
        rows.push(SuiteRow {
            case: format!("lambda={:+.2} candidacy", lambda),
            predicted: format!("candidate={}", rep.analytic_hypercyclic),
            engine: format!("candidate={}", rep.numeric_candidate),
            agree: rep.numeric_candidate == rep.analytic_hypercyclic,
        });
    }
    Ok(rows)
}

/// The two worked weight examples plus the decaying rational weight
/// for F = 1 - x.
fn examples_sec2() -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();

    let exp_weight = Weight::Expression(Expr::parse("exp(x)").unwrap());
    let prob = ProblemSpec::translation(exp_weight, 2.0)?;
    rows.push(row(
        "translation rho=exp(x)".to_string(),
        Status::Stable,
        classify(&prob, 20.0)?.status,
    ));

    let prob = ProblemSpec::translation(Weight::One, 2.0)?;
    rows.push(row(
        "translation rho=1".to_string(),
        Status::Unstable,
        classify(&prob, 20.0)?.status,
    ));

    let rational = Weight::Expression(Expr::parse("(1 + abs(x-1))^-3").unwrap());
    let prob = ProblemSpec::new(
        Domain::real_line(),
        Field::Registered(Family::Affine {
            alpha: 1.0,
            beta: -1.0,
        }),
        Multiplier::Const(0.0),
        2.0,
    )?
    .with_weight(rational);
    rows.push(row(
        "F=1-x rho=(1+|x-1|)^-3".to_string(),
        Status::Stable,
        classify(&prob, 20.0)?.status,
    ));
    Ok(rows)
}
