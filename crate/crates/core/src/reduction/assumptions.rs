use std::collections::BTreeSet;

use crate::error::{ReductionError, Violation};
use crate::expr::poly::Polynomial;
use crate::expr::Expr;
use crate::network::{build_matrices, reaction_monomial, ReactionNetwork, StoichiometricData};

/// Index sets of a fast/slow partition of a mass-action network.
///
/// For fast species `j`, `f_reactions[j]` holds reactions that change `j`
/// without consuming it and `g_reactions[j]` those consuming exactly one
/// molecule of it. `f_deps`/`g_deps` list the other species those reactions
/// need as reactants.
#[derive(Debug, Clone, PartialEq)]
pub struct FastSlowSplit {
    pub fast: Vec<usize>,
    pub slow: Vec<usize>,
    pub f_reactions: Vec<Vec<usize>>,
    pub g_reactions: Vec<Vec<usize>>,
    pub f_deps: Vec<BTreeSet<usize>>,
    pub g_deps: Vec<BTreeSet<usize>>,
}

impl FastSlowSplit {
    pub fn new(net: &ReactionNetwork, fast: &[&str]) -> Result<Self, ReductionError> {
        let fast = fast_indices(net, fast)?;
        let data = build_matrices(net);
        let slow = (0..net.species.len()).filter(|i| !fast.contains(i)).collect();
        let mut split = FastSlowSplit {
            fast: fast.clone(),
            slow,
            f_reactions: Vec::new(),
            g_reactions: Vec::new(),
            f_deps: Vec::new(),
            g_deps: Vec::new(),
        };
        for &j in &fast {
            let pick = |order: i64| -> Vec<usize> {
                (0..net.reactions.len())
                    .filter(|&i| data.m[(j, i)] != 0 && data.a[(i, j)] == order)
                    .collect()
            };
            let f = pick(0);
            let g = pick(1);
            split.f_deps.push(deps(&data, &f, j));
            split.g_deps.push(deps(&data, &g, j));
            split.f_reactions.push(f);
            split.g_reactions.push(g);
        }
        Ok(split)
    }

    /// `f_j = sum_{i in F_j} M_ji k_i prod_{l != j} x_l^A_il`.
    pub fn f_expr(&self, net: &ReactionNetwork, pos: usize) -> Expr {
        self.sum(net, pos, &self.f_reactions[pos], 1.0)
    }

    /// `g_j = -sum_{i in G_j} M_ji k_i prod_{l != j} x_l^A_il`.
    pub fn g_expr(&self, net: &ReactionNetwork, pos: usize) -> Expr {
        self.sum(net, pos, &self.g_reactions[pos], -1.0)
    }

    fn sum(&self, net: &ReactionNetwork, pos: usize, reactions: &[usize], sign: f64) -> Expr {
        let data = build_matrices(net);
        let j = self.fast[pos];
        Expr::sum(reactions.iter().map(|&i| {
            let c = sign * data.m[(j, i)] as f64 * data.k[i];
            Expr::product([Expr::Const(c), reaction_monomial(net, i, Some(j))])
        }))
    }
}

fn deps(data: &StoichiometricData, reactions: &[usize], j: usize) -> BTreeSet<usize> {
    reactions
        .iter()
        .flat_map(|&i| (0..data.a.ncols()).filter(move |&l| l != j && data.a[(i, l)] != 0))
        .collect()
}

fn fast_indices(net: &ReactionNetwork, fast: &[&str]) -> Result<Vec<usize>, ReductionError> {
    let mut out = Vec::new();
    for name in fast {
        let i = net
            .index_of(name)
            .ok_or_else(|| ReductionError::NotAState(name.to_string()))?;
        if !out.contains(&i) {
            out.push(i);
        }
    }
    if out.is_empty() || out.len() >= net.species.len() {
        return Err(ReductionError::InvalidFastSet);
    }
    Ok(out)
}

/// Reactant coefficients of fast species must be 0 or 1 unless the species
/// is a catalyst of that reaction.
pub fn check_assumption_a1(net: &ReactionNetwork, fast: &[&str]) -> Result<Vec<Violation>, ReductionError> {
    let fast = fast_indices(net, fast)?;
    let data = build_matrices(net);
    let mut out = Vec::new();
    for i in 0..net.reactions.len() {
        for &j in &fast {
            let (a, b) = (data.a[(i, j)], data.b[(i, j)]);
            if a > 1 && a != b {
                out.push(Violation {
                    reaction: i,
                    species: net.species[j].clone(),
                    detail: format!("consumed with coefficient {a}"),
                });
            }
        }
    }
    Ok(out)
}

/// No fast species may appear among the other reactants feeding `f_j` or
/// `g_j` of a fast species.
pub fn check_assumption_a3(net: &ReactionNetwork, fast: &[&str]) -> Result<Vec<Violation>, ReductionError> {
    let split = FastSlowSplit::new(net, fast)?;
    let data = build_matrices(net);
    let mut out = Vec::new();
    for (pos, &j) in split.fast.iter().enumerate() {
        for (label, reactions) in [("f", &split.f_reactions[pos]), ("g", &split.g_reactions[pos])] {
            for &i in reactions.iter() {
                for &l in &split.fast {
                    if l != j && data.a[(i, l)] != 0 {
                        out.push(Violation {
                            reaction: i,
                            species: net.species[j].clone(),
                            detail: format!("{label} depends on fast species `{}`", net.species[l]),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A2Check {
    Satisfied,
    Inconclusive,
}

/// Sufficient test for `g > 0` on the nonnegative orthant: `g` is a
/// polynomial whose coefficients are all nonnegative and whose constant term
/// is positive or which has at least one positive monomial. Parameters must
/// already be bound to numbers.
pub fn check_a2_sufficient(g: &Expr) -> A2Check {
    let Some(p) = Polynomial::from_expr(g) else {
        return A2Check::Inconclusive;
    };
    let mut any_positive = false;
    for (_, c) in p.terms() {
        if c < 0.0 {
            return A2Check::Inconclusive;
        }
        any_positive |= c > 0.0;
    }
    if any_positive {
        A2Check::Satisfied
    } else {
        A2Check::Inconclusive
    }
}
