//! Dormand–Prince 5(4) steps for autonomous systems.

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
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

fn axpy(y: &[f64], terms: &[(f64, &[f64])], h: f64) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * c * ki;
        }
    }
    out
}

/// One step of size `h` (may be negative). Returns the fifth-order update and
/// the scaled error norm (≤ 1 means acceptable).
pub fn step<F>(f: &F, y: &[f64], h: f64, tol: Tolerances) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let k1 = f(y);
    let k2 = f(&axpy(y, &[(A21, &k1)], h));
    let k3 = f(&axpy(y, &[(A31, &k1), (A32, &k2)], h));
    let k4 = f(&axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(&axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
    let k6 = f(&axpy(
        y,
        &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        h,
    ));
    let y1 = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = f(&y1);
    let mut err: f64 = 0.0;
    for i in 0..y.len() {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol.atol + tol.rtol * y[i].abs().max(y1[i].abs());
        err = err.max((e / sc).abs());
    }
    (y1, err)
}

/// Step-size update from the error norm of the last attempt.
pub fn next_step(h: f64, err: f64) -> f64 {
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    h * factor
}

/// Integrates from `y0` to each of the increasing `times` (starting at 0),
/// landing exactly on them. `max_step` bounds |h|.
pub fn integrate_to<F>(f: &F, y0: &[f64], times: &[f64], max_step: f64, tol: Tolerances) -> Option<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = max_step.min(1e-3);
    for &target in times {
        while t < target {
            let hh = h.min(target - t).min(max_step);
            let (y1, err) = step(f, &y, hh, tol);
            if err <= 1.0 && y1.iter().all(|c| c.is_finite()) {
                t = if target - t <= hh { target } else { t + hh };
                y = y1;
                h = next_step(hh, err);
            } else {
                h = next_step(hh, err.min(1e10)).min(0.5 * hh);
                if h < 1e-15 * (1.0 + t.abs()) {
                    return None;
                }
            }
        }
        out.push(y.clone());
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let f = |y: &[f64]| vec![-y[0]];
        let ys = integrate_to(&f, &[1.0], &[1.0, 2.0], 0.5, Tolerances::default()).unwrap();
        assert!((ys[0][0] - (-1.0_f64).exp()).abs() < 1e-9);
        assert!((ys[1][0] - (-2.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rotation_is_fifth_order() {
        let f = |y: &[f64]| vec![-y[1], y[0]];
        let err = |h: f64| {
            let (y, _) = step(&f, &[1.0, 0.0], h, Tolerances::default());
            ((y[0] - h.cos()).powi(2) + (y[1] - h.sin()).powi(2)).sqrt()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 40.0 && ratio < 100.0, "{ratio}");
    }
}
