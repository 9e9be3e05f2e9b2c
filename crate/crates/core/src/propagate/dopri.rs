//! Adaptive Dormand–Prince 5(4) integrator for complex linear systems.

use crate::error::{Error, Result};
use crate::hilbert::{ComplexVector, C64};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct DopriOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for DopriOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: None,
            max_steps: 10_000_000,
        }
    }
}

fn axpy(out: &mut ComplexVector, y: &ComplexVector, terms: &[(f64, &ComplexVector)]) {
    out.copy_from(y);
    for (coef, k) in terms {
        if *coef != 0.0 {
            out.axpy(C64::new(*coef, 0.0), k, C64::new(1.0, 0.0));
        }
    }
}

/// Integrates `y' = f(t, y)` from `times[0]` and returns the solution at every entry of `times`.
///
/// `times` must be non-decreasing. Steps are clipped to land on each output time.
pub fn integrate<F>(
    mut f: F,
    y0: &ComplexVector,
    times: &[f64],
    opts: &DopriOptions,
) -> Result<Vec<ComplexVector>>
where
    F: FnMut(f64, &ComplexVector, &mut ComplexVector),
{
    let n = y0.len();
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return Ok(out);
    }
    let mut t = times[0];
    let mut y = y0.clone();
    out.push(y.clone());

    let zeros = || ComplexVector::zeros(n);
    let (mut k1, mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (zeros(), zeros(), zeros(), zeros(), zeros(), zeros(), zeros());
    let mut tmp = zeros();
    let mut y_new = zeros();

    f(t, &y, &mut k1);
    let mut h = opts.initial_step.unwrap_or_else(|| {
        let scale: f64 = k1.camax().max(1e-300) / y.camax().max(1e-300);
        (0.01 / scale).min(0.1)
    });
    let mut steps = 0usize;

    for &target in &times[1..] {
        while t < target {
            let last = h >= target - t;
            let h_try = if last { target - t } else { h };

            axpy(&mut tmp, &y, &[(h_try * A21, &k1)]);
            f(t + C2 * h_try, &tmp, &mut k2);
            axpy(&mut tmp, &y, &[(h_try * A31, &k1), (h_try * A32, &k2)]);
            f(t + C3 * h_try, &tmp, &mut k3);
            axpy(&mut tmp, &y, &[(h_try * A41, &k1), (h_try * A42, &k2), (h_try * A43, &k3)]);
            f(t + C4 * h_try, &tmp, &mut k4);
            axpy(
                &mut tmp,
                &y,
                &[(h_try * A51, &k1), (h_try * A52, &k2), (h_try * A53, &k3), (h_try * A54, &k4)],
            );
            f(t + C5 * h_try, &tmp, &mut k5);
            axpy(
                &mut tmp,
                &y,
                &[
                    (h_try * A61, &k1),
                    (h_try * A62, &k2),
                    (h_try * A63, &k3),
                    (h_try * A64, &k4),
                    (h_try * A65, &k5),
                ],
            );
            f(t + h_try, &tmp, &mut k6);
            axpy(
                &mut y_new,
                &y,
                &[
                    (h_try * A71, &k1),
                    (h_try * A73, &k3),
                    (h_try * A74, &k4),
                    (h_try * A75, &k5),
                    (h_try * A76, &k6),
                ],
            );
            f(t + h_try, &y_new, &mut k7);

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = h_try
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / sc);
            }

            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepUnderflow { t, h: h_try });
            }

            if err <= 1.0 {
                t = if last { target } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Keep the natural step when the last one was shortened to hit an output time.
                if !last || h_try >= h {
                    h = h_try * grow;
                }
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}
