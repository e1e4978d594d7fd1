//! Adaptive Dormand-Prince 5(4) integrator with dense output.
//!
//! Classic 7-stage FSAL pair; the embedded 4th-order solution drives the
//! step-size controller and a quartic interpolant provides dense output on
//! every accepted step.

use crate::error::{Error, Result};

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
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// b - bhat: weights of the embedded error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights (Hairer & Wanner, DOPRI5 CONTD5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrator options.
#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        // Downstream residual checks need ~1e-5 headroom.
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted step with its quartic interpolation coefficients.
#[derive(Debug, Clone)]
struct DenseStep {
    t: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

/// Dense ODE solution on `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    t0: f64,
    t1: f64,
    steps: Vec<DenseStep>,
    pub y_end: Vec<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
}

impl OdeSolution {
    pub fn t_span(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    /// Evaluates the dense interpolant at `t` (clamped to the span).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(self.t0, self.t1);
        let i = self
            .steps
            .partition_point(|s| s.t + s.h < t)
            .min(self.steps.len() - 1);
        let step = &self.steps[i];
        let theta = ((t - step.t) / step.h).clamp(0.0, 1.0);
        let th1 = 1.0 - theta;
        let n = step.rcont[0].len();
        let mut out = vec![0.0; n];
        for j in 0..n {
            out[j] = step.rcont[0][j]
                + theta
                    * (step.rcont[1][j]
                        + th1 * (step.rcont[2][j]
                            + theta * (step.rcont[3][j] + th1 * step.rcont[4][j])));
        }
        out
    }

    /// Samples the solution on `grid` (each entry inside the span).
    pub fn sample(&self, grid: &[f64]) -> Vec<Vec<f64>> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// `guard` is checked after every accepted step and may reject the state
/// (returning an error string), aborting the integration; it receives the
/// step end time and state.
pub fn integrate_with_guard<F, G>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: &[f64],
    opts: &OdeOptions,
    mut guard: G,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    G: FnMut(f64, &[f64]) -> std::result::Result<(), String>,
{
    if !(t1 > t0) {
        return Err(Error::OdeFailure(format!(
            "integration span must be increasing, got [{t0}, {t1}]"
        )));
    }
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1);
    guard(t0, y0).map_err(Error::OdeFailure)?;

    let mut h = opts.h0.unwrap_or_else(|| initial_step(&k1, &y, t1 - t0, opts));
    let mut steps = Vec::new();
    let mut n_rejected = 0usize;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut ytmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    for _ in 0..opts.max_steps {
        if t >= t1 {
            return Ok(OdeSolution {
                t0,
                t1,
                steps,
                y_end: y,
                n_steps: 0,
                n_rejected,
            }
            .finalize());
        }
        h = h.min(t1 - t);
        if h < f64::EPSILON * t.abs().max(1.0) * 4.0 {
            return Err(Error::OdeFailure(format!("step size underflow at t = {t}")));
        }

        for j in 0..n {
            ytmp[j] = y[j] + h * A21 * k1[j];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for j in 0..n {
            ytmp[j] = y[j] + h * (A31 * k1[j] + A32 * k2[j]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for j in 0..n {
            ytmp[j] = y[j] + h * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for j in 0..n {
            ytmp[j] = y[j] + h * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for j in 0..n {
            ytmp[j] =
                y[j] + h * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j] + A64 * k4[j] + A65 * k5[j]);
        }
        f(t + h, &ytmp, &mut k6);
        for j in 0..n {
            y_new[j] =
                y[j] + h * (A71 * k1[j] + A73 * k3[j] + A74 * k4[j] + A75 * k5[j] + A76 * k6[j]);
        }
        f(t + h, &y_new, &mut k7);

        let mut err = 0.0;
        for j in 0..n {
            let e = h
                * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
            let sc = opts.atol + opts.rtol * y[j].abs().max(y_new[j].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / n as f64).sqrt();

        if err <= 1.0 {
            // Accepted: store the dense coefficients for [t, t+h].
            let mut rcont = [
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ];
            for j in 0..n {
                let dy = y_new[j] - y[j];
                let bspl = h * k1[j] - dy;
                rcont[0][j] = y[j];
                rcont[1][j] = dy;
                rcont[2][j] = bspl;
                rcont[3][j] = dy - h * k7[j] - bspl;
                rcont[4][j] = h
                    * (D1 * k1[j]
                        + D3 * k3[j]
                        + D4 * k4[j]
                        + D5 * k5[j]
                        + D6 * k6[j]
                        + D7 * k7[j]);
            }
            steps.push(DenseStep { t, h, rcont });
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7); // FSAL
            guard(t, &y).map_err(Error::OdeFailure)?;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
            h *= fac;
        } else {
            n_rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    Err(Error::OdeFailure(format!(
        "max step count {} exceeded at t = {t}",
        opts.max_steps
    )))
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0` with no state guard.
pub fn integrate<F>(f: F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    integrate_with_guard(f, t0, t1, y0, opts, |_, _| Ok(()))
}

impl OdeSolution {
    fn finalize(mut self) -> Self {
        self.n_steps = self.steps.len();
        self
    }
}

fn initial_step(k1: &[f64], y0: &[f64], span: f64, opts: &OdeOptions) -> f64 {
    // Crude h0 from the first derivative scale; the controller corrects fast.
    let d0: f64 = y0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d1: f64 = k1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = if d1 > 1e-12 {
        0.01 * (d0.max(1.0) / d1) * opts.rtol.powf(0.2).max(1e-3)
    } else {
        span * 1e-3
    };
    h.min(span / 10.0).max(span * 1e-9)
}
