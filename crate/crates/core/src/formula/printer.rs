use std::fmt;

use super::{Definition, Formula, IterationSystem, Term};

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::Until(..) => 4,
        Formula::And(..) => 5,
        Formula::Not(_)
        | Formula::Next(_)
        | Formula::Eventually(_)
        | Formula::Always(_)
        | Formula::Exists(..)
        | Formula::Forall(..) => 6,
        _ => 7,
    }
}

/// Binary node layout: (operator, minimum precedence of the left operand,
/// minimum precedence of the right operand).
fn binary(f: &Formula) -> Option<(&'static str, &Formula, &Formula, u8, u8)> {
    match f {
        Formula::Iff(a, b) => Some(("<->", a, b, 1, 2)),
        Formula::Implies(a, b) => Some(("->", a, b, 3, 2)),
        Formula::Or(a, b) => Some(("|", a, b, 3, 4)),
        Formula::Until(a, b) => Some(("U", a, b, 4, 5)),
        Formula::And(a, b) => Some(("&", a, b, 5, 6)),
        _ => None,
    }
}

/// True when the printed form ends in an unparenthesised quantifier body,
/// which would swallow anything written after it.
fn ends_open(f: &Formula) -> bool {
    match f {
        Formula::Exists(..) | Formula::Forall(..) => true,
        Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => {
            prec(a) >= 6 && ends_open(a)
        }
        _ => match binary(f) {
            Some((_, _, b, _, min_r)) => prec(b) >= min_r && ends_open(b),
            None => false,
        },
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[Term]) -> fmt::Result {
    f.write_str("(")?;
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{t}")?;
    }
    f.write_str(")")
}

fn write_def(f: &mut fmt::Formatter<'_>, d: &Definition) -> fmt::Result {
    write!(f, "{}({}): {}", d.pred, d.vars.join(","), d.body)
}

fn write_system(f: &mut fmt::Formatter<'_>, s: &IterationSystem) -> fmt::Result {
    for (i, d) in s.defs.iter().enumerate() {
        if i > 0 {
            f.write_str("; ")?;
        }
        write_def(f, d)?;
    }
    Ok(())
}

fn write_operand(f: &mut fmt::Formatter<'_>, child: &Formula, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((op, a, b, min_l, min_r)) = binary(self) {
            write_operand(f, a, prec(a) < min_l || ends_open(a))?;
            write!(f, " {op} ")?;
            return write_operand(f, b, prec(b) < min_r);
        }
        match self {
            Formula::Atom { pred, args } => {
                f.write_str(pred)?;
                write_terms(f, args)
            }
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(a) => {
                f.write_str("!")?;
                write_operand(f, a, prec(a) < 6)
            }
            Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => {
                let op = match self {
                    Formula::Next(_) => "X",
                    Formula::Eventually(_) => "F",
                    _ => "G",
                };
                write!(f, "{op} ")?;
                write_operand(f, a, prec(a) < 6)
            }
            Formula::Exists(v, a) => write!(f, "exists {v}. {a}"),
            Formula::Forall(v, a) => write!(f, "forall {v}. {a}"),
            Formula::Iter {
                header,
                system,
                args,
            } => {
                write!(f, "[{header}][iter ")?;
                write_system(f, system)?;
                f.write_str("]")?;
                write_terms(f, args)
            }
            Formula::Derived { kind, system, args } => {
                write!(f, "{kind}[")?;
                write_system(f, system)?;
                f.write_str("]")?;
                write_terms(f, args)
            }
            _ => unreachable!("binary nodes handled above"),
        }
    }
}

/// Renders a formula in the concrete syntax accepted by the parser.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}
