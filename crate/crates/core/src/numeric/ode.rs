//! Dormand–Prince 5(4) with complex state, landing exactly on requested output times.

use num_complex::Complex64;

pub type State = [Complex64; 2];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-13, atol: 1e-14, h_init: 1e-4, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure {
    StepSizeUnderflow { t: f64 },
    TooManySteps { t: f64 },
    NonFinite { t: f64 },
}

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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights: fifth-order minus embedded fourth-order
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..2 {
            out[i] += k[i] * (h * c);
        }
    }
    out
}

/// Integrate y' = f(t, y) from `t0`, returning the state at each time in `outputs`
/// (ascending, all ≥ t0).
pub fn dopri5<F>(f: F, t0: f64, y0: State, outputs: &[f64], opts: OdeOptions) -> Result<Vec<State>, OdeFailure>
where
    F: Fn(f64, &State) -> State,
{
    let mut res = Vec::with_capacity(outputs.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init;
    let mut k1 = f(t, &y);
    let mut steps = 0usize;
    for &target in outputs {
        debug_assert!(target >= t - 1e-15);
        while target - t > 1e-15 * target.abs().max(1.0) {
            steps += 1;
            if steps > opts.max_steps {
                return Err(OdeFailure::TooManySteps { t });
            }
            let last = h >= target - t;
            let hs = if last { target - t } else { h };
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + hs, &y_new);
            let mut err2 = 0.0;
            for i in 0..2 {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * hs;
                let sc = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = (err2 / 2.0).sqrt();
            if !err.is_finite() {
                return Err(OdeFailure::NonFinite { t });
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y_new;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    h = hs * fac;
                }
            } else {
                h = hs * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-15 * t.abs().max(1.0) {
                    return Err(OdeFailure::StepSizeUnderflow { t });
                }
            }
        }
        res.push(y);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let w = 3.0;
        let f = |_t: f64, y: &State| [y[1], -y[0] * (w * w)];
        let ts: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let out = dopri5(f, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], &ts, OdeOptions::default()).unwrap();
        for (t, y) in ts.iter().zip(&out) {
            assert!((y[0].re - (w * t).cos()).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn complex_exponential_growth() {
        let mu = Complex64::new(-0.3, 2.0);
        let f = move |_t: f64, y: &State| [y[0] * mu, y[1]];
        let out = dopri5(f, 0.0, [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], &[5.0], OdeOptions::default()).unwrap();
        let exact = (mu * 5.0).exp();
        assert!((out[0][0] - exact).norm() < 1e-11);
    }
}
