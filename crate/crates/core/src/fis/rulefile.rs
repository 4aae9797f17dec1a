//! Plain-text rule files.
//!
//! ```text
//! # comment
//! input a = 0.4          # fixed input variable
//! init x = 0.2           # output with a lower bound
//! output y               # output declared without rules
//! x <= min(a, 0.5, y)
//! y <= id(x)
//! z <= amean[3](x, y)
//! ```
//!
//! Aggregators: `min`, `hmean`, `id`, `amean[α]`. Names appearing as a
//! conclusion are outputs; premises must be declared or concluded somewhere.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashSet;
use rustc_hash::FxBuildHasher;

use super::{Aggregator, Fis, Premise, VarId};
use crate::error::{Error, Result};

enum Line<'a> {
    Input(&'a str, f64),
    Init(&'a str, f64),
    Output(&'a str),
    Rule {
        conclusion: &'a str,
        aggregator: Aggregator,
        args: Vec<Arg<'a>>,
    },
}

enum Arg<'a> {
    Name(&'a str),
    Const(f64),
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::RuleSyntax {
        line,
        message: message.into(),
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || matches!(c, '_' | '.' | ':' | '-' | '\''))
}

fn parse_value(line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| syntax(line, alloc::format!("bad number {s:?}")))
}

fn parse_decl(line: usize, rest: &str) -> Result<(&str, f64)> {
    let (name, value) = rest
        .split_once('=')
        .ok_or_else(|| syntax(line, "expected `name = value`"))?;
    let name = name.trim();
    if !is_name(name) {
        return Err(syntax(line, alloc::format!("bad variable name {name:?}")));
    }
    Ok((name, parse_value(line, value)?))
}

fn parse_aggregator(line: usize, s: &str) -> Result<Aggregator> {
    match s {
        "min" => Ok(Aggregator::Min),
        "hmean" => Ok(Aggregator::HMean),
        "id" | "identity" => Ok(Aggregator::Identity),
        _ => {
            let alpha = s
                .strip_prefix("amean[")
                .or_else(|| s.strip_prefix("alpha_mean["))
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| syntax(line, alloc::format!("unknown aggregator {s:?}")))?;
            Ok(Aggregator::AlphaMean(parse_value(line, alpha)?))
        }
    }
}

fn parse_line(line: usize, text: &str) -> Result<Option<Line<'_>>> {
    let text = match text.find('#') {
        Some(i) => &text[..i],
        None => text,
    }
    .trim();
    if text.is_empty() {
        return Ok(None);
    }
    if let Some(rest) = text.strip_prefix("input ") {
        let (n, v) = parse_decl(line, rest)?;
        return Ok(Some(Line::Input(n, v)));
    }
    if let Some(rest) = text.strip_prefix("init ") {
        let (n, v) = parse_decl(line, rest)?;
        return Ok(Some(Line::Init(n, v)));
    }
    if let Some(rest) = text.strip_prefix("output ") {
        let name = rest.trim();
        if !is_name(name) {
            return Err(syntax(line, alloc::format!("bad variable name {name:?}")));
        }
        return Ok(Some(Line::Output(name)));
    }
    let (conclusion, body) = text
        .split_once("<=")
        .ok_or_else(|| syntax(line, "expected `conclusion <= AGG(...)`"))?;
    let conclusion = conclusion.trim();
    if !is_name(conclusion) {
        return Err(syntax(line, alloc::format!("bad conclusion {conclusion:?}")));
    }
    let body = body.trim();
    let open = body
        .find('(')
        .ok_or_else(|| syntax(line, "missing `(`"))?;
    let inner = body[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| syntax(line, "missing closing `)`"))?;
    let aggregator = parse_aggregator(line, body[..open].trim())?;
    let mut args = Vec::new();
    for raw in inner.split(',') {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(syntax(line, "empty premise"));
        }
        if is_name(raw) {
            args.push(Arg::Name(raw));
        } else {
            args.push(Arg::Const(parse_value(line, raw)?));
        }
    }
    Ok(Some(Line::Rule {
        conclusion,
        aggregator,
        args,
    }))
}

/// Parses a rule file into a [`Fis`]. Variables get ids in order of first
/// appearance.
pub fn parse_rules(text: &str) -> Result<Fis> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(l) = parse_line(i + 1, raw)? {
            lines.push((i + 1, l));
        }
    }
    let mut inputs: HashSet<&str, FxBuildHasher> = HashSet::default();
    let mut outputs: HashSet<&str, FxBuildHasher> = HashSet::default();
    for (_, l) in &lines {
        match l {
            Line::Input(n, _) => {
                inputs.insert(n);
            }
            Line::Init(n, _) | Line::Output(n) => {
                outputs.insert(n);
            }
            Line::Rule { conclusion, .. } => {
                outputs.insert(conclusion);
            }
        }
    }
    if let Some(both) = inputs.iter().find(|n| outputs.contains(*n)) {
        return Err(Error::NotOutput(both.to_string()));
    }

    let mut fis = Fis::new();
    let ensure = |fis: &mut Fis, line: usize, name: &str| -> Result<VarId> {
        if let Some(id) = fis.variable(name) {
            return Ok(id);
        }
        if outputs.contains(name) {
            fis.add_output(name)
        } else if inputs.contains(name) {
            // value is filled in when its declaration line is reached
            fis.add_input(name, 0.0)
        } else {
            Err(syntax(line, alloc::format!("undeclared premise {name:?}")))
        }
    };
    for (line, l) in &lines {
        match l {
            Line::Input(n, v) => {
                fis.add_input(n, *v).map_err(|e| syntax(*line, e.to_string()))?;
            }
            Line::Init(n, v) => {
                fis.add_output_with_initial(n, *v)
                    .map_err(|e| syntax(*line, e.to_string()))?;
            }
            Line::Output(n) => {
                ensure(&mut fis, *line, n)?;
            }
            Line::Rule {
                conclusion,
                aggregator,
                args,
            } => {
                let c = ensure(&mut fis, *line, conclusion)?;
                let mut premises = Vec::with_capacity(args.len());
                for a in args {
                    premises.push(match a {
                        Arg::Name(n) => Premise::Var(ensure(&mut fis, *line, n)?),
                        Arg::Const(v) => Premise::Const(*v),
                    });
                }
                fis.add_rule(premises, *aggregator, c)
                    .map_err(|e| syntax(*line, e.to_string()))?;
            }
        }
    }
    Ok(fis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fis::{solve, SolveOptions};

    #[test]
    fn parses_and_solves() {
        let fis = parse_rules(
            "# three rule cycle\n\
             x <= id(0.5)\n\
             y <= id(x)\n\
             x <= id(y)   # back edge\n",
        )
        .unwrap();
        let a = solve(&fis, &SolveOptions::default());
        assert_eq!(a.get(fis.variable("x").unwrap()), 0.5);
        assert_eq!(a.get(fis.variable("y").unwrap()), 0.5);
    }

    #[test]
    fn inputs_inits_and_alpha() {
        let fis = parse_rules(
            "z <= amean[3](a, b)\ninput a = 0.1\ninput b = 0.0\ninit w = 0.25\nw <= min(z, 0.2)\n",
        )
        .unwrap();
        let a = solve(&fis, &SolveOptions::default());
        assert!((a.get(fis.variable("z").unwrap()) - 0.15).abs() < 1e-12);
        assert_eq!(a.get(fis.variable("w").unwrap()), 0.25);
        assert_eq!(a.get(fis.variable("a").unwrap()), 0.1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_rules("x <= id(0.5)\ny <= min(q)\n").unwrap_err();
        assert!(matches!(err, Error::RuleSyntax { line: 2, .. }), "{err:?}");
        let err = parse_rules("x <= id(0.5, 0.2)\n").unwrap_err();
        assert!(matches!(err, Error::RuleSyntax { line: 1, .. }));
        assert!(parse_rules("x <= foo(0.5)").is_err());
        assert!(parse_rules("x <= min(0.5").is_err());
        assert!(parse_rules("x <= min(2.0)").is_err());
        assert!(parse_rules("input x = 0.1\nx <= id(0.2)").is_err());
    }

    #[test]
    fn display_round_trips() {
        let text = "input a = 0.3\ninit x = 0.1\nx <= hmean(a, y)\ny <= amean[3](x, 0.25)\nv <= id(x)\n";
        let fis = parse_rules(text).unwrap();
        let again = parse_rules(&fis.to_string()).unwrap();
        assert_eq!(fis.to_string(), again.to_string());
        assert_eq!(fis.rules(), again.rules());
    }
}
