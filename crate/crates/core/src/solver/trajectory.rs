use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Euler,
    Rk4,
    /// Two-stage, L-stable singly diagonally implicit Runge-Kutta (order 2).
    Sdirk2,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Sdirk2 => "sdirk2",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "sdirk2" => Ok(Method::Sdirk2),
            other => Err(format!("unknown method `{other}` (expected euler, rk4 or sdirk2)")),
        }
    }
}

/// Uniform-grid solution: state columns first, then algebraic variables,
/// plus the value of every delay at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub system: String,
    pub method: Method,
    pub t0: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub n_states: usize,
    pub columns: Vec<Vec<f64>>,
    pub delay_names: Vec<String>,
    pub delays: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&self.t0)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn delay(&self, id: &str) -> Option<&[f64]> {
        self.delay_names
            .iter()
            .position(|n| n == id)
            .map(|i| self.delays[i].as_slice())
    }

    /// Linear interpolation of `name` at time `t`, clamped to the grid.
    pub fn value_at(&self, name: &str, t: f64) -> Option<f64> {
        let col = self.column(name)?;
        Some(interpolate(col, self.t0, self.dt, t))
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name).and_then(|c| c.last().copied())
    }

    /// `t,<names...>` with every value to 17 significant digits.
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        write_table(out, &self.times, &self.names, &self.columns)
    }

    /// `t,<delay ids...>`; nothing to write when the system has no delays.
    pub fn write_delays_csv(&self, out: &mut impl Write) -> io::Result<()> {
        write_table(out, &self.times, &self.delay_names, &self.delays)
    }
}

pub(crate) fn interpolate(col: &[f64], t0: f64, dt: f64, t: f64) -> f64 {
    let pos = (t - t0) / dt;
    if pos <= 0.0 {
        return col[0];
    }
    let last = col.len() - 1;
    if pos >= last as f64 {
        return col[last];
    }
    let i = pos.floor() as usize;
    let fr = pos - i as f64;
    if fr == 0.0 {
        col[i]
    } else {
        col[i] * (1.0 - fr) + col[i + 1] * fr
    }
}

pub(crate) fn write_table(
    out: &mut impl Write,
    times: &[f64],
    names: &[String],
    columns: &[Vec<f64>],
) -> io::Result<()> {
    write!(out, "t")?;
    for n in names {
        write!(out, ",{n}")?;
    }
    writeln!(out)?;
    for (k, t) in times.iter().enumerate() {
        write!(out, "{t:.16e}")?;
        for c in columns {
            write!(out, ",{:.16e}", c[k])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
