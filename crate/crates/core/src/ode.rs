//! Adaptive Dormand-Prince 5(4) integration for small autonomous systems.
//!
//! The integrator drives all numeric flow evaluation: plain flows,
//! variational (Jacobian) augmentation and multiplier cocycle
//! augmentation are all just different right-hand sides. Error control
//! is the usual mixed absolute/relative test with a PI-free step
//! controller clamped to [0.2, 5] growth.
//!
//! Two failure modes are reported with the time at which they occur:
//! a `guard` predicate turning false (domain exit, detected by step
//! halving against the last admissible state) and state blow-up (norm
//! exceeding `blowup_norm` or step size underflow).

use crate::error::{EngineError, Result};

#[derive(Debug, Clone)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub blowup_norm: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
            blowup_norm: 1e8,
        }
    }
}

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
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step from `y` with step `h`. Writes the 5th order
/// solution into `out` and returns the scaled error norm.
fn dp_step<F: Fn(&[f64], &mut [f64])>(
    f: &F,
    y: &[f64],
    h: f64,
    out: &mut [f64],
    s: &OdeSettings,
    work: &mut StepWork,
) -> f64 {
    let n = y.len();
    let StepWork {
        k1,
        k2,
        k3,
        k4,
        k5,
        k6,
        k7,
        tmp,
    } = work;

    f(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    f(tmp, k4);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    f(tmp, k5);
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    f(tmp, k6);
    for i in 0..n {
        out[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    f(out, k7);

    let mut err_sq = 0.0;
    for i in 0..n {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = s.abs_tol + s.rel_tol * y[i].abs().max(out[i].abs());
        err_sq += (e / scale) * (e / scale);
    }
    (err_sq / n as f64).sqrt()
}

struct StepWork {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    k7: Vec<f64>,
    tmp: Vec<f64>,
}

impl StepWork {
    fn new(n: usize) -> Self {
        StepWork {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            k5: vec![0.0; n],
            k6: vec![0.0; n],
            k7: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn state_ok(y: &[f64], s: &OdeSettings) -> bool {
    y.iter().all(|v| v.is_finite() && v.abs() <= s.blowup_norm)
}

/// Integrate `y' = f(y)` from `y0` over [0, t_end], returning the state
/// at each requested sample time. `samples` must be sorted ascending;
/// the `guard` predicate (state admissibility, e.g. staying inside the
/// open domain) is checked after every accepted step.
pub fn integrate_samples<F: Fn(&[f64], &mut [f64])>(
    f: F,
    y0: &[f64],
    samples: &[f64],
    guard: Option<&dyn Fn(&[f64]) -> bool>,
    s: &OdeSettings,
) -> Result<Vec<Vec<f64>>> {
    let n = y0.len();
    let mut work = StepWork::new(n);
    let mut y = y0.to_vec();
    let mut out = vec![0.0; n];
    let mut t = 0.0;
    let mut results = Vec::with_capacity(samples.len());
    let t_end = samples.last().copied().unwrap_or(0.0);

    let mut h = (t_end.abs() * 1e-3).max(1e-6);
    let mut sample_idx = 0;
    while sample_idx < samples.len() && samples[sample_idx] <= t {
        results.push(y.clone());
        sample_idx += 1;
    }

    let admissible = |state: &[f64]| guard.map(|g| g(state)).unwrap_or(true);
    if !admissible(&y) {
        return Err(EngineError::DomainExit { time: 0.0 });
    }

    let mut steps = 0;
    while sample_idx < samples.len() {
        if steps >= s.max_steps {
            return Err(EngineError::BlowUp { time: t });
        }
        steps += 1;

        let next_target = samples[sample_idx];
        let mut h_try = h.min(next_target - t);
        let hit_sample = h_try >= next_target - t - 1e-30;
        if h_try <= 0.0 {
            results.push(y.clone());
            sample_idx += 1;
            continue;
        }

        let err = dp_step(&f, &y, h_try, &mut out, s, &mut work);
        let ok = err <= 1.0 && state_ok(&out, s);
        if ok && admissible(&out) {
            t += h_try;
            std::mem::swap(&mut y, &mut out);
            if hit_sample && (t - next_target).abs() <= 1e-12 * (1.0 + next_target.abs()) {
                results.push(y.clone());
                sample_idx += 1;
            }
            let grow = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (h_try * grow).max(1e-14);
        } else if !ok {
            // error control rejection (or non-finite state)
            let shrink = if err.is_finite() && err > 1.0 {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h_try *= shrink;
            h = h_try;
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(EngineError::BlowUp { time: t });
            }
        } else {
            // guard violated inside this step: halve down to locate the exit
            h_try *= 0.5;
            h = h_try;
            if h < 1e-12 * (1.0 + t.abs()) {
                return Err(EngineError::DomainExit { time: t });
            }
        }
    }
    Ok(results)
}

/// Integrate to a single time and return the final state.
pub fn integrate_to<F: Fn(&[f64], &mut [f64])>(
    f: F,
    y0: &[f64],
    t_end: f64,
    guard: Option<&dyn Fn(&[f64]) -> bool>,
    s: &OdeSettings,
) -> Result<Vec<f64>> {
    if t_end == 0.0 {
        return Ok(y0.to_vec());
    }
    let mut r = integrate_samples(f, y0, &[t_end], guard, s)?;
    Ok(r.pop().expect("one sample requested"))
}
