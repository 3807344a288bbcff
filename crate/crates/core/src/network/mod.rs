//! Mass-action reaction networks: stoichiometry, rate equations and linear
//! conservation laws.

mod dsl;
mod transform;

use std::fmt;

use indexmap::IndexMap;
use nalgebra::DMatrix;

use crate::expr::{format_number, Expr};
use crate::system::DynamicalSystem;

pub use dsl::{parse_network, render_network};
pub use transform::{eliminate_species, rename, rescale};

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// `(species index, coefficient)`, sorted by index, coefficients > 0.
    pub reactants: Vec<(usize, u32)>,
    pub products: Vec<(usize, u32)>,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    /// Species marked for reduction by the model file.
    pub fast: Vec<String>,
    pub reactions: Vec<Reaction>,
    pub initial: Vec<f64>,
}

impl ReactionNetwork {
    pub fn index_of(&self, species: &str) -> Option<usize> {
        self.species.iter().position(|s| s == species)
    }
}

/// `A` (reactant orders) and `B` (product counts) are `q x n`;
/// `M = (B - A)^T` is `n x q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoichiometricData {
    pub a: DMatrix<i64>,
    pub b: DMatrix<i64>,
    pub m: DMatrix<i64>,
    pub k: Vec<f64>,
}

pub fn build_matrices(net: &ReactionNetwork) -> StoichiometricData {
    let q = net.reactions.len();
    let n = net.species.len();
    let mut a = DMatrix::<i64>::zeros(q, n);
    let mut b = DMatrix::<i64>::zeros(q, n);
    for (i, r) in net.reactions.iter().enumerate() {
        for &(j, c) in &r.reactants {
            a[(i, j)] += c as i64;
        }
        for &(j, c) in &r.products {
            b[(i, j)] += c as i64;
        }
    }
    let m = (&b - &a).transpose();
    StoichiometricData {
        a,
        b,
        m,
        k: net.reactions.iter().map(|r| r.rate).collect(),
    }
}

/// Monomial `prod_l x_l^{A_il}` of reaction `i`, skipping the species in `skip`.
pub(crate) fn reaction_monomial(net: &ReactionNetwork, i: usize, skip: Option<usize>) -> Expr {
    Expr::product(
        net.reactions[i]
            .reactants
            .iter()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|&(j, c)| Expr::var(net.species[j].clone()).powi(c)),
    )
}

/// `dx_j/dt = sum_i M_ji k_i prod_l x_l^{A_il}`.
pub fn mass_action_odes(net: &ReactionNetwork) -> DynamicalSystem {
    let data = build_matrices(net);
    let mut sys = DynamicalSystem::new("mass-action");
    for (j, name) in net.species.iter().enumerate() {
        let terms = (0..net.reactions.len())
            .filter(|&i| data.m[(j, i)] != 0)
            .map(|i| {
                Expr::product([
                    Expr::Const(data.m[(j, i)] as f64 * data.k[i]),
                    reaction_monomial(net, i, None),
                ])
            });
        sys = sys.with_equation(name, Expr::sum(terms), net.initial[j]);
    }
    sys
}

/// Integer vector `v` with `v^T M = 0`, and the conserved value `v . x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationLaw {
    pub coefficients: IndexMap<String, i64>,
    pub value: f64,
}

impl ConservationLaw {
    pub fn coefficient(&self, species: &str) -> i64 {
        self.coefficients.get(species).copied().unwrap_or(0)
    }

    /// `v . x` for a state given by species order.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.coefficients
            .values()
            .zip(x)
            .map(|(&c, &v)| c as f64 * v)
            .sum()
    }
}

impl fmt::Display for ConservationLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (s, &c) in &self.coefficients {
            if c == 0 {
                continue;
            }
            if out.is_empty() {
                if c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if c < 0 { " - " } else { " + " });
            }
            if c.abs() != 1 {
                out.push_str(&format!("{} ", c.abs()));
            }
            out.push_str(s);
        }
        if out.is_empty() {
            out.push('0');
        }
        f.write_str(&out)?;
        write!(f, " = {}", format_number(self.value))
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn normalize(row: &mut [i128]) {
    let g = row.iter().fold(0, |g, &x| gcd(g, x));
    if g > 1 {
        for x in row.iter_mut() {
            *x /= g;
        }
    }
}

/// Basis of the integer left null space of `M`, by fraction-free
/// elimination on `M^T`. Each vector is primitive with a positive leading
/// entry.
pub fn conservation_laws(net: &ReactionNetwork) -> Vec<ConservationLaw> {
    let data = build_matrices(net);
    let n = net.species.len();
    let q = net.reactions.len();
    let mut rows: Vec<Vec<i128>> = (0..q)
        .map(|i| (0..n).map(|j| data.m[(j, i)] as i128).collect())
        .collect();

    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, p);
        let pivot_row = rows[r].clone();
        let pv = pivot_row[col];
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[col] == 0 {
                continue;
            }
            let factor = row[col];
            for (x, &y) in row.iter_mut().zip(&pivot_row) {
                *x = *x * pv - factor * y;
            }
            normalize(row);
        }
        pivots.push((r, col));
        r += 1;
        if r == rows.len() {
            break;
        }
    }

    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut laws = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let mut lcm: i128 = 1;
        for &(row, col) in &pivots {
            if rows[row][free] != 0 {
                let p = rows[row][col].abs();
                lcm = lcm / gcd(lcm, p) * p;
            }
        }
        let mut v = vec![0i128; n];
        v[free] = lcm;
        for &(row, col) in &pivots {
            v[col] = -rows[row][free] * lcm / rows[row][col];
        }
        normalize(&mut v);
        if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
            for x in &mut v {
                *x = -*x;
            }
        }
        let coefficients: IndexMap<String, i64> = net
            .species
            .iter()
            .zip(&v)
            .map(|(s, &c)| (s.clone(), c as i64))
            .collect();
        let value = v
            .iter()
            .zip(&net.initial)
            .map(|(&c, &x)| c as f64 * x)
            .sum();
        laws.push(ConservationLaw {
            coefficients,
            value,
        });
    }
    laws
}
