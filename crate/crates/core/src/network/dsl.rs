//! Line-oriented `.crn` model files.
//!
//! ```text
//! species: D, Dp, M, P
//! fast: D
//! reaction: D + 5 P <-> Dp @ 2e-12, 0.02
//! reaction: M -> 0 @ 0.03
//! init: D=1
//! ```

use std::fmt::Write as _;

use super::{Reaction, ReactionNetwork};
use crate::error::NetworkError;

struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl Line<'_> {
    /// 1-based column of `part`, which must be a subslice of the line.
    fn col(&self, part: &str) -> usize {
        part.as_ptr() as usize - self.text.as_ptr() as usize + 1
    }

    fn err(&self, part: &str, message: impl Into<String>) -> NetworkError {
        NetworkError::Syntax {
            line: self.no,
            col: self.col(part),
            message: message.into(),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_number(line: &Line, s: &str, what: &str) -> Result<f64, NetworkError> {
    let t = s.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| line.err(t, format!("expected {what}, found `{t}`")))
}

fn names<'a>(line: &Line, body: &'a str) -> Result<Vec<&'a str>, NetworkError> {
    body.split(',')
        .map(|part| {
            let name = part.trim();
            if is_ident(name) {
                Ok(name)
            } else {
                Err(line.err(name, format!("expected a species name, found `{name}`")))
            }
        })
        .collect()
}

fn lookup(net: &ReactionNetwork, line: &Line, name: &str) -> Result<usize, NetworkError> {
    net.index_of(name).ok_or_else(|| NetworkError::UnknownSpecies {
        line: line.no,
        name: name.to_string(),
    })
}

fn parse_side(
    net: &ReactionNetwork,
    line: &Line,
    side: &str,
) -> Result<Vec<(usize, u32)>, NetworkError> {
    let side = side.trim();
    if side.is_empty() {
        return Err(line.err(side, "empty reaction side; write `0` for no species"));
    }
    if side == "0" {
        return Ok(Vec::new());
    }
    let mut out: Vec<(usize, u32)> = Vec::new();
    for term in side.split('+') {
        let term = term.trim();
        let (coef, name) = match term.split_once(char::is_whitespace) {
            Some((c, n)) => (Some(c), n.trim()),
            None => (None, term),
        };
        let coef = match coef {
            None => 1,
            Some(c) => c.parse::<u32>().map_err(|_| {
                line.err(c, format!("stoichiometric coefficient must be a nonnegative integer, found `{c}`"))
            })?,
        };
        if !is_ident(name) {
            return Err(line.err(name, format!("expected a species name, found `{name}`")));
        }
        let j = lookup(net, line, name)?;
        if coef == 0 {
            continue;
        }
        match out.iter_mut().find(|(k, _)| *k == j) {
            Some((_, c)) => *c += coef,
            None => out.push((j, coef)),
        }
    }
    out.sort_unstable();
    Ok(out)
}

fn parse_reaction(net: &mut ReactionNetwork, line: &Line, body: &str) -> Result<(), NetworkError> {
    let (scheme, rates) = body
        .split_once('@')
        .ok_or_else(|| line.err(body.trim_end(), "expected `@ <rate>`"))?;
    let (lhs, rhs, reversible) = if let Some((l, r)) = scheme.split_once("<->") {
        (l, r, true)
    } else if let Some((l, r)) = scheme.split_once("->") {
        (l, r, false)
    } else {
        return Err(line.err(scheme.trim(), "expected `->` or `<->`"));
    };
    let reactants = parse_side(net, line, lhs)?;
    let products = parse_side(net, line, rhs)?;
    let rates: Vec<&str> = rates.split(',').collect();
    let expected = if reversible { 2 } else { 1 };
    if rates.len() != expected {
        return Err(line.err(
            rates[0].trim(),
            format!("expected {expected} rate(s), found {}", rates.len()),
        ));
    }
    let mut values = Vec::new();
    for r in rates {
        let v = parse_number(line, r, "a rate")?;
        if v <= 0.0 {
            return Err(NetworkError::NonpositiveRate {
                line: line.no,
                value: v,
            });
        }
        values.push(v);
    }
    net.reactions.push(Reaction {
        reactants: reactants.clone(),
        products: products.clone(),
        rate: values[0],
    });
    if reversible {
        net.reactions.push(Reaction {
            reactants: products,
            products: reactants,
            rate: values[1],
        });
    }
    Ok(())
}

pub fn parse_network(text: &str) -> Result<ReactionNetwork, NetworkError> {
    let mut net = ReactionNetwork::default();
    let mut inits: Vec<(usize, String, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = Line { no: i + 1, text: raw };
        let content = raw.split('#').next().unwrap();
        if content.trim().is_empty() {
            continue;
        }
        let (key, body) = content
            .split_once(':')
            .ok_or_else(|| line.err(content.trim_start(), "expected `<keyword>: ...`"))?;
        match key.trim() {
            "species" => {
                for name in names(&line, body)? {
                    if net.index_of(name).is_some() {
                        return Err(NetworkError::DuplicateSpecies {
                            line: line.no,
                            name: name.to_string(),
                        });
                    }
                    net.species.push(name.to_string());
                }
            }
            "fast" => {
                for name in names(&line, body)? {
                    lookup(&net, &line, name)?;
                    if !net.fast.iter().any(|f| f == name) {
                        net.fast.push(name.to_string());
                    }
                }
            }
            "reaction" => parse_reaction(&mut net, &line, body)?,
            "init" => {
                for item in body.split(',') {
                    let (name, value) = item
                        .split_once('=')
                        .ok_or_else(|| line.err(item.trim(), "expected `<species>=<value>`"))?;
                    let name = name.trim();
                    lookup(&net, &line, name)?;
                    let v = parse_number(&line, value, "a number")?;
                    if v < 0.0 {
                        return Err(NetworkError::NegativeInitial {
                            line: line.no,
                            name: name.to_string(),
                            value: v,
                        });
                    }
                    inits.push((line.no, name.to_string(), v));
                }
            }
            other => return Err(line.err(key.trim_start(), format!("unknown keyword `{other}`"))),
        }
    }
    net.initial = vec![0.0; net.species.len()];
    for (_, name, v) in inits {
        let j = net.index_of(&name).unwrap();
        net.initial[j] = v;
    }
    Ok(net)
}

fn render_side(net: &ReactionNetwork, side: &[(usize, u32)]) -> String {
    if side.is_empty() {
        return "0".into();
    }
    side.iter()
        .map(|&(j, c)| {
            if c == 1 {
                net.species[j].clone()
            } else {
                format!("{c} {}", net.species[j])
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Inverse of [`parse_network`]; reversible pairs are written as two
/// irreversible reactions.
pub fn render_network(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "species: {}", net.species.join(", "));
    if !net.fast.is_empty() {
        let _ = writeln!(out, "fast: {}", net.fast.join(", "));
    }
    for r in &net.reactions {
        let _ = writeln!(
            out,
            "reaction: {} -> {} @ {:e}",
            render_side(net, &r.reactants),
            render_side(net, &r.products),
            r.rate
        );
    }
    if !net.species.is_empty() {
        let init: Vec<String> = net
            .species
            .iter()
            .zip(&net.initial)
            .map(|(s, v)| format!("{s}={v:e}"))
            .collect();
        let _ = writeln!(out, "init: {}", init.join(", "));
    }
    out
}
