//! Flat key-value problem configs.
//!
//! One `key = value` pair per line, `#` comments, blank lines ignored.
//! Keys (see the README for the full grammar):
//!
//! ```text
//! domain   = (0, 1)            # open interval(s), '|'-separated; inf allowed
//! family   = lasota            # translation | affine | lasota | lasota_r
//! alpha    = 1.0               # affine: F = alpha + beta x
//! beta     = -1.0
//! r        = 2.0               # lasota_r: F = -x^r
//! F_expr   = -x + x^2          # numeric field instead of a family
//! h_const  = -0.5              # constant multiplier
//! h_coeff  = -0.5              # h = coeff * x^(r-1), tied to the family's r
//! h_expr   = -0.5 + x^2        # general multiplier
//! h_im_expr = x                # imaginary part; reduced to the real part
//! rho_expr = exp(x)            # weight, default 1
//! p        = 2
//! space    = Lp                # Lp | W1p | W1p_star
//! ```
//!
//! plus `horizon`, `grid_n`, `time_samples`, `window`, `seed` and the
//! tolerance keys `tol_ode`, `tol_ode_abs`, `tol_quad`, `tol_flow`,
//! `tol_domain`, `zero_tol`, `slope_tol`, `value_tol`, `bound_tol`,
//! `divergence_threshold`, `fd_tol`.

use std::collections::BTreeMap;

use crate::error::{EngineError, Result};
use crate::expr::Expr;
use crate::model::{
    Domain, Family, Field, Interval, Multiplier, ProblemSpec, ScalarMode, SpaceKind, Weight,
};

fn err(line: usize, field: &str, message: impl Into<String>) -> EngineError {
    EngineError::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut entries = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, "line", "expected `key = value`"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if value.is_empty() {
                return Err(err(line_no, &key, "empty value"));
            }
            if entries.insert(key.clone(), (line_no, value)).is_some() {
                return Err(err(line_no, &key, "duplicate key"));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| err(line, key, format!("not a number: `{}`", v))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| err(line, key, format!("not an integer: `{}`", v))),
        }
    }
}

fn parse_endpoint(s: &str, line: usize) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| err(line, "domain", format!("bad endpoint `{}`", other))),
    }
}

fn parse_domain(s: &str, line: usize) -> Result<Domain> {
    let mut intervals = Vec::new();
    for part in s.split('|') {
        let part = part.trim();
        let inner = part
            .strip_prefix('(')
            .and_then(|p| p.strip_suffix(')'))
            .ok_or_else(|| err(line, "domain", format!("expected `(a, b)`, got `{}`", part)))?;
        let (lo, hi) = inner
            .split_once(',')
            .ok_or_else(|| err(line, "domain", "expected two endpoints"))?;
        let lo = parse_endpoint(lo, line)?;
        let hi = parse_endpoint(hi, line)?;
        if !(lo < hi) {
            return Err(err(line, "domain", "endpoints out of order"));
        }
        intervals.push(Interval::new(lo, hi));
    }
    if intervals.is_empty() {
        return Err(err(line, "domain", "empty domain"));
    }
    Ok(Domain { intervals })
}

/// Parse a problem config document into a fully resolved spec.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let mut raw = RawConfig::parse(text)?;

    // field: registered family or expression
    let family = raw.take("family");
    let f_expr = raw.take("F_expr");
    let (field, lasota_order) = match (family, f_expr) {
        (Some((line, tag)), None) => {
            let fam = match tag.as_str() {
                "translation" => Family::Translation,
                "affine" => Family::Affine {
                    alpha: raw.take_f64("alpha")?.unwrap_or(1.0),
                    beta: raw.take_f64("beta")?.unwrap_or(-1.0),
                },
                "lasota" => Family::Lasota,
                "lasota_r" => {
                    let r = raw
                        .take_f64("r")?
                        .ok_or_else(|| err(line, "r", "lasota_r requires `r`"))?;
                    if !(r >= 1.0) {
                        return Err(err(line, "r", format!("r must be >= 1, got {}", r)));
                    }
                    if r == 1.0 {
                        Family::Lasota
                    } else {
                        Family::LasotaR { r }
                    }
                }
                other => return Err(EngineError::UnknownFamily(other.to_string())),
            };
            let order = fam.lasota_order();
            (Field::Registered(fam), order)
        }
        (None, Some((line, src))) => {
            let f = Expr::parse(&src).map_err(|e| err(line, "F_expr", e.to_string()))?;
            (Field::from_expr(f), None)
        }
        (Some((line, _)), Some(_)) => {
            return Err(err(
                line,
                "family",
                "give either `family` or `F_expr`, not both",
            ))
        }
        (None, None) => return Err(err(0, "family", "missing field: give `family` or `F_expr`")),
    };

    // domain: explicit or the family's canonical one
    let domain = match raw.take("domain") {
        Some((line, s)) => parse_domain(&s, line)?,
        None => match &field {
            Field::Registered(fam) => fam.canonical_domain(),
            _ => return Err(err(0, "domain", "missing domain for expression field")),
        },
    };

    // multiplier
    let h_const = raw.take_f64("h_const")?;
    let h_coeff = raw.take_f64("h_coeff")?;
    let h_expr = raw.take("h_expr");
    let multiplier = match (h_const, h_coeff, h_expr) {
        (Some(c), None, None) => Multiplier::Const(c),
        (None, Some(c), None) => {
            let r = lasota_order.ok_or_else(|| {
                err(
                    0,
                    "h_coeff",
                    "h_coeff requires a lasota-type family (uses its r)",
                )
            })?;
            Multiplier::PowerLaw {
                coeff: c,
                exponent: r - 1.0,
            }
        }
        (None, None, Some((line, src))) => {
            let h = Expr::parse(&src).map_err(|e| err(line, "h_expr", e.to_string()))?;
            Multiplier::from_expr(h)
        }
        (None, None, None) => Multiplier::Const(0.0),
        _ => {
            return Err(err(
                0,
                "h",
                "give at most one of `h_const`, `h_coeff`, `h_expr`",
            ))
        }
    };

    // imaginary part: stored for diagnostics, computation uses Re h
    let (multiplier_im, scalar_mode) = match raw.take("h_im_expr") {
        Some((line, src)) => {
            let e = Expr::parse(&src).map_err(|e| err(line, "h_im_expr", e.to_string()))?;
            (Some(e), ScalarMode::ComplexReduced)
        }
        None => (None, ScalarMode::Real),
    };

    let weight = match raw.take("rho_expr") {
        Some((line, src)) => {
            let e = Expr::parse(&src).map_err(|e| err(line, "rho_expr", e.to_string()))?;
            if e.constant_value() == Some(1.0) {
                Weight::One
            } else {
                Weight::Expression(e)
            }
        }
        None => Weight::One,
    };

    let p = raw.take_f64("p")?.unwrap_or(2.0);
    if !(p >= 1.0) {
        return Err(EngineError::InvalidExponent(p));
    }

    let space = match raw.take("space") {
        None => SpaceKind::Lp,
        Some((line, s)) => match s.as_str() {
            "Lp" | "lp" => SpaceKind::Lp,
            "W1p" | "w1p" => SpaceKind::W1p,
            "W1p_star" | "w1p_star" => SpaceKind::W1pStar,
            other => return Err(err(line, "space", format!("unknown space `{}`", other))),
        },
    };

    let mut spec = ProblemSpec::new(domain, field, multiplier, p)?;
    spec.weight = weight;
    spec.multiplier_im = multiplier_im;
    spec.scalar_mode = scalar_mode;

    if let Some(v) = raw.take_f64("tol_ode")? {
        spec.tol.tol_ode_rel = v;
    }
    if let Some(v) = raw.take_f64("tol_ode_abs")? {
        spec.tol.tol_ode_abs = v;
    }
    if let Some(v) = raw.take_f64("tol_quad")? {
        spec.tol.tol_quad = v;
    }
    if let Some(v) = raw.take_f64("tol_flow")? {
        spec.tol.tol_flow = v;
    }
    if let Some(v) = raw.take_f64("tol_domain")? {
        spec.tol.tol_domain = v;
    }
    if let Some(v) = raw.take_f64("zero_tol")? {
        spec.tol.zero_tol = v;
    }
    if let Some(v) = raw.take_f64("slope_tol")? {
        spec.tol.slope_tol = v;
    }
    if let Some(v) = raw.take_f64("value_tol")? {
        spec.tol.value_tol = v;
    }
    if let Some(v) = raw.take_f64("bound_tol")? {
        spec.tol.bound_tol = v;
    }
    if let Some(v) = raw.take_f64("divergence_threshold")? {
        spec.tol.divergence_threshold = v;
    }
    if let Some(v) = raw.take_f64("fd_tol")? {
        spec.tol.fd_tol = v;
    }
    if let Some(v) = raw.take_f64("horizon")? {
        spec.sampling.horizon = v;
    }
    if let Some(v) = raw.take_usize("grid_n")? {
        spec.sampling.grid_n = v;
    }
    if let Some(v) = raw.take_usize("time_samples")? {
        spec.sampling.time_samples = v;
    }
    if let Some(v) = raw.take_f64("window")? {
        spec.sampling.window = v;
    }
    if let Some(v) = raw.take_usize("seed")? {
        spec.sampling.seed = v as u64;
    }

    if let Some((line, key_val)) = raw.entries.iter().next() {
        return Err(err(key_val.0, line, format!("unknown key `{}`", line)));
    }

    // final space checks (bounded interval, F(a) = 0)
    let spec = spec.with_space(space)?;
    Ok(spec)
}

/// Serialize a spec back to config text. Closure-backed specs cannot
/// be serialized.
pub fn serialize_problem(spec: &ProblemSpec) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("domain = {}\n", spec.domain));
    match &spec.field {
        Field::Registered(fam) => {
            out.push_str(&format!("family = {}\n", fam.tag()));
            match fam {
                Family::Affine { alpha, beta } => {
                    out.push_str(&format!("alpha = {}\nbeta = {}\n", alpha, beta));
                }
                Family::LasotaR { r } => out.push_str(&format!("r = {}\n", r)),
                _ => {}
            }
        }
        Field::Expression { f, .. } => out.push_str(&format!("F_expr = {}\n", f)),
        Field::Closure { .. } => {
            return Err(EngineError::InvalidArgument(
                "closure-backed field cannot be serialized".into(),
            ))
        }
    }
    match &spec.multiplier {
        Multiplier::Const(c) => out.push_str(&format!("h_const = {}\n", c)),
        Multiplier::PowerLaw { coeff, .. } => out.push_str(&format!("h_coeff = {}\n", coeff)),
        Multiplier::Expression { h, .. } => out.push_str(&format!("h_expr = {}\n", h)),
        Multiplier::FieldDerivPlus { .. } | Multiplier::Closure { .. } => {
            return Err(EngineError::InvalidArgument(
                "derived multiplier cannot be serialized".into(),
            ))
        }
    }
    if let Some(im) = &spec.multiplier_im {
        out.push_str(&format!("h_im_expr = {}\n", im));
    }
    match &spec.weight {
        Weight::One => {}
        Weight::Expression(e) => out.push_str(&format!("rho_expr = {}\n", e)),
        Weight::Closure(_) => {
            return Err(EngineError::InvalidArgument(
                "closure-backed weight cannot be serialized".into(),
            ))
        }
    }
    out.push_str(&format!("p = {}\n", spec.p));
    out.push_str(&format!("space = {}\n", spec.space.label()));
    out.push_str(&format!("horizon = {}\n", spec.sampling.horizon));
    out.push_str(&format!("grid_n = {}\n", spec.sampling.grid_n));
    out.push_str(&format!("time_samples = {}\n", spec.sampling.time_samples));
    out.push_str(&format!("window = {}\n", spec.sampling.window));
    out.push_str(&format!("seed = {}\n", spec.sampling.seed));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lasota_config() {
        let spec = parse_problem(
            "# von Foerster-Lasota\nfamily = lasota\nh_const = -0.5\np = 2\nspace = Lp\n",
        )
        .unwrap();
        assert_eq!(spec.field.family(), Some(Family::Lasota));
        assert_eq!(spec.multiplier.constant_value(), Some(-0.5));
        assert_eq!(spec.p, 2.0);
        assert_eq!(spec.domain, Domain::interval(0.0, 1.0));
    }

    #[test]
    fn parses_translation_with_weight() {
        let spec = parse_problem("family = translation\nrho_expr = exp(x)\np = 2\n").unwrap();
        assert_eq!(spec.field.family(), Some(Family::Translation));
        assert!(!spec.domain.is_bounded());
        assert!((spec.weight.eval(1.0) - 1.0f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_exponent() {
        let e = parse_problem("family = lasota\np = 0.5\n");
        assert!(matches!(e, Err(EngineError::InvalidExponent(_))));
    }

    #[test]
    fn rejects_unknown_family_and_keys() {
        assert!(matches!(
            parse_problem("family = sine\n"),
            Err(EngineError::UnknownFamily(_))
        ));
        assert!(matches!(
            parse_problem("family = lasota\nwibble = 3\n"),
            Err(EngineError::Parse { .. })
        ));
    }

    #[test]
    fn rejects_sobolev_on_unbounded_domain() {
        let e = parse_problem("family = translation\nspace = W1p_star\n");
        assert!(matches!(e, Err(EngineError::SobolevUnboundedDomain)));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let e = parse_problem("family = lasota\np = two\n");
        match e {
            Err(EngineError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn complex_multiplier_is_reduced() {
        let spec = parse_problem("family = lasota\nh_const = -0.5\nh_im_expr = x\n").unwrap();
        assert_eq!(spec.scalar_mode, ScalarMode::ComplexReduced);
        assert!(spec.multiplier_im.is_some());
        assert_eq!(spec.multiplier.constant_value(), Some(-0.5));
    }

    #[test]
    fn round_trip_preserves_the_problem() {
        let texts = [
            "family = lasota\nh_const = -0.5\np = 2\n",
            "family = lasota_r\nr = 2.5\nh_coeff = -1.25\np = 4\n",
            "family = affine\nalpha = 1\nbeta = -1\nrho_expr = (1 + abs(x-1))^-3\np = 2\n",
            "F_expr = -x + 0.5*x^2\ndomain = (0, 1)\nh_expr = -0.5 + x^2\np = 1.5\n",
        ];
        for text in texts {
            let spec = parse_problem(text).unwrap();
            let round = parse_problem(&serialize_problem(&spec).unwrap()).unwrap();
            assert_eq!(spec.domain, round.domain);
            assert_eq!(spec.p, round.p);
            assert_eq!(spec.space, round.space);
            assert_eq!(spec.field.family(), round.field.family());
            for &x in &[0.1, 0.4, 0.8] {
                assert_eq!(spec.field.eval(x), round.field.eval(x));
                assert_eq!(spec.multiplier.eval(x), round.multiplier.eval(x));
                assert_eq!(spec.weight.eval(x), round.weight.eval(x));
            }
        }
    }
}
