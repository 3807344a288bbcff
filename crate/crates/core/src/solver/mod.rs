//! Fixed-step integration: explicit Euler, classical RK4 and SDIRK2 for
//! delay-free systems; explicit Euler with an interpolated history for
//! delay systems.

mod compiled;
mod history;
mod trajectory;

use nalgebra::{DMatrix, DVector};

use crate::error::SolverError;
use crate::system::DynamicalSystem;

use compiled::{Compiled, Scratch};
pub use history::HistoryBuffer;
pub use trajectory::{Method, Trajectory};

fn grid(t0: f64, t_end: f64, dt: f64) -> Result<usize, SolverError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::InvalidStep(dt));
    }
    if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
        return Err(SolverError::InvalidSpan(t0, t_end));
    }
    Ok((((t_end - t0) / dt).round() as usize).max(1))
}

struct Recorder {
    columns: Vec<Vec<f64>>,
    delays: Vec<Vec<f64>>,
}

impl Recorder {
    fn new(c: &Compiled, n: usize) -> Self {
        Self {
            columns: (0..c.width()).map(|_| Vec::with_capacity(n + 1)).collect(),
            delays: (0..c.delays.len()).map(|_| Vec::with_capacity(n + 1)).collect(),
        }
    }

    fn push(&mut self, s: &Scratch) {
        for (col, v) in self.columns.iter_mut().zip(&s.slots) {
            col.push(*v);
        }
        for (col, v) in self.delays.iter_mut().zip(&s.taus) {
            col.push(*v);
        }
    }

    fn finish(self, c: &Compiled, method: Method, t0: f64, dt: f64) -> Trajectory {
        let n = self.columns.first().map_or(0, Vec::len);
        Trajectory {
            system: c.name.clone(),
            method,
            t0,
            dt,
            times: (0..n).map(|k| t0 + k as f64 * dt).collect(),
            names: c.names.clone(),
            n_states: c.n_states,
            columns: self.columns,
            delay_names: c.delays.iter().map(|d| d.id.clone()).collect(),
            delays: self.delays,
        }
    }
}

/// Integrates a delay-free system on the uniform grid `t0 + k dt`.
pub fn integrate_ode(
    sys: &DynamicalSystem,
    t0: f64,
    t_end: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory, SolverError> {
    if sys.has_delays() {
        return Err(SolverError::DelaysNotSupported(match method {
            Method::Euler => "euler (ODE)",
            Method::Rk4 => "rk4",
            Method::Sdirk2 => "sdirk2",
        }));
    }
    let n = grid(t0, t_end, dt)?;
    let c = Compiled::new(sys)?;
    let ns = c.n_states;
    let mut s = c.scratch();
    let mut rec = Recorder::new(&c, n);
    let mut y = c.initial.clone();
    let mut stage = Stages::new(ns);

    for k in 0..=n {
        let t = t0 + k as f64 * dt;
        s.slots[..ns].copy_from_slice(&y);
        c.evaluate(t, &mut s, None, true)?;
        c.check_finite(&s, k, t)?;
        rec.push(&s);
        if k == n {
            break;
        }
        match method {
            Method::Euler => {
                for i in 0..ns {
                    y[i] += dt * s.deriv[i];
                }
            }
            Method::Rk4 => stage.rk4(&c, &mut s, &mut y, t, dt)?,
            Method::Sdirk2 => stage.sdirk2(&c, &mut s, &mut y, t, dt)?,
        }
    }
    Ok(rec.finish(&c, method, t0, dt))
}

struct Stages {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }

    fn rhs(c: &Compiled, s: &mut Scratch, y: &[f64], t: f64, out: &mut [f64]) -> Result<(), SolverError> {
        s.slots[..c.n_states].copy_from_slice(y);
        c.evaluate(t, s, None, true)?;
        out.copy_from_slice(&s.deriv);
        Ok(())
    }

    fn rk4(&mut self, c: &Compiled, s: &mut Scratch, y: &mut [f64], t: f64, dt: f64) -> Result<(), SolverError> {
        let n = y.len();
        self.k[0].copy_from_slice(&s.deriv);
        for (stage, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                self.tmp[i] = y[i] + frac * dt * self.k[stage - 1][i];
            }
            Self::rhs(c, s, &self.tmp, t + frac * dt, &mut self.k[stage])?;
        }
        for i in 0..n {
            y[i] += dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        Ok(())
    }

    /// Alexander's stiffly accurate SDIRK with `gamma = 1 - 1/sqrt(2)`.
    fn sdirk2(&mut self, c: &Compiled, s: &mut Scratch, y: &mut [f64], t: f64, dt: f64) -> Result<(), SolverError> {
        let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        let n = y.len();
        let base1 = y.to_vec();
        let y1 = newton(c, s, &base1, t + g * dt, g * dt, y)?;
        let mut f1 = vec![0.0; n];
        Self::rhs(c, s, &y1, t + g * dt, &mut f1)?;
        let base2: Vec<f64> = (0..n).map(|i| y[i] + dt * (1.0 - g) * f1[i]).collect();
        let y2 = newton(c, s, &base2, t + dt, g * dt, &y1)?;
        y.copy_from_slice(&y2);
        Ok(())
    }
}

/// Solves `Y = base + h f(t, Y)` by Newton's method with a finite-difference
/// Jacobian.
fn newton(
    c: &Compiled,
    s: &mut Scratch,
    base: &[f64],
    t: f64,
    h: f64,
    guess: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = base.len();
    let mut y = guess.to_vec();
    let mut f0 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut yp = vec![0.0; n];
    for _ in 0..30 {
        Stages::rhs(c, s, &y, t, &mut f0)?;
        let mut jac = DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            let step = 1e-7 * y[j].abs().max(1e-3);
            yp.copy_from_slice(&y);
            yp[j] += step;
            Stages::rhs(c, s, &yp, t, &mut f1)?;
            for i in 0..n {
                jac[(i, j)] -= h * (f1[i] - f0[i]) / step;
            }
        }
        let residual = DVector::from_iterator(n, (0..n).map(|i| -(y[i] - base[i] - h * f0[i])));
        let delta = jac.lu().solve(&residual).ok_or(SolverError::Newton(t))?;
        let mut size = 0.0f64;
        for i in 0..n {
            y[i] += delta[i];
            size = size.max(delta[i].abs() / (1.0 + y[i].abs()));
        }
        if !size.is_finite() {
            return Err(SolverError::Newton(t));
        }
        if size < 1e-13 {
            return Ok(y);
        }
    }
    Err(SolverError::Newton(t))
}

/// Explicit Euler for delay systems. At each grid point the delays are
/// evaluated from the current state, delayed values are read from the
/// stored history by linear interpolation (constant prolongation before
/// `t0`), then algebraic definitions and the right-hand side follow.
pub fn integrate_dde(sys: &DynamicalSystem, t0: f64, t_end: f64, dt: f64) -> Result<Trajectory, SolverError> {
    let n = grid(t0, t_end, dt)?;
    let c = Compiled::new(sys)?;
    let ns = c.n_states;
    let mut s = c.scratch();
    let mut rec = Recorder::new(&c, n);
    let mut hist = HistoryBuffer::new(dt, c.width(), n + 1);
    let mut y = c.initial.clone();

    for k in 0..=n {
        let t = t0 + k as f64 * dt;
        s.slots[..ns].copy_from_slice(&y);
        c.evaluate(t, &mut s, Some((&hist, k)), true)?;
        c.check_finite(&s, k, t)?;
        rec.push(&s);
        hist.push(&s.slots);
        if k == n {
            break;
        }
        for i in 0..ns {
            y[i] += dt * s.deriv[i];
        }
    }
    Ok(rec.finish(&c, Method::Euler, t0, dt))
}

/// Integrates with `method`, routing delay systems to [`integrate_dde`]
/// (explicit Euler only).
pub fn simulate(
    sys: &DynamicalSystem,
    t0: f64,
    t_end: f64,
    dt: f64,
    method: Method,
) -> Result<Trajectory, SolverError> {
    if sys.has_delays() {
        if method != Method::Euler {
            return Err(SolverError::DelaysNotSupported(match method {
                Method::Rk4 => "rk4",
                _ => "sdirk2",
            }));
        }
        integrate_dde(sys, t0, t_end, dt)
    } else {
        integrate_ode(sys, t0, t_end, dt, method)
    }
}

/// Evaluates the delays and algebraic definitions of `sys` along
/// `reference`, taking the state columns from the reference instead of
/// integrating them. Composed delays (a delay whose coefficient reads an
/// algebraic variable that itself reads delayed values) are resolved from
/// the replayed history.
pub fn replay(sys: &DynamicalSystem, reference: &Trajectory) -> Result<Trajectory, SolverError> {
    let c = Compiled::new(sys)?;
    let ns = c.n_states;
    let sources: Vec<&[f64]> = c.names[..ns]
        .iter()
        .map(|v| reference.column(v).ok_or_else(|| SolverError::MissingColumn(v.clone())))
        .collect::<Result<_, _>>()?;
    let n = reference.len();
    let mut s = c.scratch();
    let mut rec = Recorder::new(&c, n);
    let mut hist = HistoryBuffer::new(reference.dt, c.width(), n);
    for k in 0..n {
        let t = reference.times[k];
        for (slot, src) in s.slots[..ns].iter_mut().zip(&sources) {
            *slot = src[k];
        }
        c.evaluate(t, &mut s, Some((&hist, k)), false)?;
        rec.push(&s);
        hist.push(&s.slots);
    }
    let mut out = rec.finish(&c, reference.method, reference.t0, reference.dt);
    out.system = format!("{} (replayed along {})", c.name, reference.system);
    Ok(out)
}
