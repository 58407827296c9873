//! Property files.
//!
//! ```text
//! property sched_main is always (mk/main/state executing => not main_period_signal)
//! property stop_1 is (r/control_task/state Stop_req) leadsto (r/Goto/state stop) within [0, 0.5s]
//! (r/Goto/state stop) leads to leave (l/TS/state update) within [0, 60ms]
//! ```
//!
//! Interval bounds without a unit are seconds.

use super::ast::{Pred, Property, PropertySet};
use super::lexer::{Keyword, TokenKind};
use super::parser::{ParseError, ParseResult, TokenStream};
use super::scenario::time;

pub fn parse_properties(source: &str) -> ParseResult<PropertySet> {
    let mut ts = TokenStream::new(source)?;
    let mut properties: Vec<Property> = Vec::new();
    while !ts.at_end() {
        let start = ts.pos();
        let name = if is_word(&ts, "property") {
            ts.next();
            let (n, npos) = ts.name()?;
            if properties.iter().any(|p| p.name() == n) {
                return Err(ParseError::Duplicate { category: "property", name: n, pos: npos });
            }
            let kw = ts.pos();
            let (is, _) = ts.name()?;
            if is != "is" {
                return Err(ParseError::Unexpected { expected: vec!["`is`".into()], found: format!("`{}`", is), pos: kw });
            }
            n
        } else {
            format!("property_{}", properties.len() + 1)
        };
        let prop = if is_word(&ts, "always") {
            ts.next();
            Property::Invariant { name, pred: unary(&mut ts)? }
        } else if ts.peek() == Some(&TokenKind::LParen) {
            let trigger = unary(&mut ts)?;
            let kw = ts.pos();
            let (w, _) = ts.name()?;
            match w.as_str() {
                "leadsto" => {}
                "leads" => {
                    let tpos = ts.pos();
                    let (to, _) = ts.name()?;
                    if to != "to" {
                        return Err(ParseError::Unexpected { expected: vec!["`to`".into()], found: format!("`{}`", to), pos: tpos });
                    }
                }
                other => {
                    return Err(ParseError::Invalid { message: format!("unknown pattern keyword `{}`", other), pos: kw });
                }
            }
            let leave = if is_word(&ts, "leave") {
                ts.next();
                true
            } else {
                false
            };
            let target = unary(&mut ts)?;
            let wpos = ts.pos();
            let (within, _) = ts.name()?;
            if within != "within" {
                return Err(ParseError::Unexpected { expected: vec!["`within`".into()], found: format!("`{}`", within), pos: wpos });
            }
            let ipos = ts.pos();
            if !ts.eat(&TokenKind::LBracket) {
                return Err(ParseError::Invalid { message: "malformed interval: expected `[lo, hi]`".into(), pos: ipos });
            }
            let lo = time(&mut ts)?;
            if !ts.eat(&TokenKind::Comma) {
                return Err(ParseError::Invalid { message: "malformed interval: expected `,`".into(), pos: ts.pos() });
            }
            let hi = time(&mut ts)?;
            if !ts.eat(&TokenKind::RBracket) {
                return Err(ParseError::Invalid { message: "malformed interval: expected `]`".into(), pos: ts.pos() });
            }
            if lo > hi {
                return Err(ParseError::Invalid { message: format!("malformed interval: {}us > {}us", lo, hi), pos: ipos });
            }
            Property::LeadsToWithin { name, trigger, target, lo, hi, leave }
        } else {
            let found = ts.pos();
            let (w, _) = ts.name().map_err(|_| ParseError::Invalid { message: "expected a property".into(), pos: start })?;
            return Err(ParseError::Invalid { message: format!("unknown pattern keyword `{}`", w), pos: found });
        };
        properties.push(prop);
    }
    Ok(PropertySet { properties })
}

fn is_word(ts: &TokenStream, w: &str) -> bool {
    matches!(ts.peek(), Some(TokenKind::Ident(s)) if s == w)
}

/// Parses a standalone predicate (used by the CLI for ad-hoc checks).
pub fn parse_predicate(source: &str) -> ParseResult<Pred> {
    let mut ts = TokenStream::new(source)?;
    let p = implies(&mut ts)?;
    if !ts.at_end() {
        return ts.unexpected(&["end of input"]);
    }
    Ok(p)
}

fn implies(ts: &mut TokenStream) -> ParseResult<Pred> {
    let lhs = or(ts)?;
    if ts.eat(&TokenKind::FatArrow) {
        let rhs = implies(ts)?;
        return Ok(Pred::Implies(Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn or(ts: &mut TokenStream) -> ParseResult<Pred> {
    let mut lhs = and(ts)?;
    while is_word(ts, "or") {
        ts.next();
        lhs = Pred::Or(Box::new(lhs), Box::new(and(ts)?));
    }
    Ok(lhs)
}

fn and(ts: &mut TokenStream) -> ParseResult<Pred> {
    let mut lhs = unary(ts)?;
    while is_word(ts, "and") {
        ts.next();
        lhs = Pred::And(Box::new(lhs), Box::new(unary(ts)?));
    }
    Ok(lhs)
}

fn unary(ts: &mut TokenStream) -> ParseResult<Pred> {
    if is_word(ts, "not") {
        ts.next();
        return Ok(Pred::Not(Box::new(unary(ts)?)));
    }
    if is_word(ts, "true") {
        ts.next();
        return Ok(Pred::True);
    }
    if is_word(ts, "false") {
        ts.next();
        return Ok(Pred::False);
    }
    if ts.eat(&TokenKind::LParen) {
        let p = implies(ts)?;
        ts.expect(TokenKind::RParen)?;
        return Ok(p);
    }
    atom(ts)
}

fn atom(ts: &mut TokenStream) -> ParseResult<Pred> {
    let pos = ts.pos();
    if !matches!(ts.peek(), Some(TokenKind::Ident(_)) | Some(TokenKind::Keyword(_))) {
        return ts.unexpected(&["predicate"]);
    }
    let (first, _) = ts.name()?;
    if !ts.eat(&TokenKind::Slash) {
        return match first.strip_suffix("_period_signal") {
            Some(task) if !task.is_empty() => Ok(Pred::PeriodSignal { component: None, task: task.to_string(), pos }),
            _ => Err(ParseError::Invalid { message: format!("unknown predicate `{}`", first), pos }),
        };
    }
    let (entity, _) = ts.name()?;
    if !ts.eat(&TokenKind::Slash) {
        return match entity.strip_suffix("_period_signal") {
            Some(task) if !task.is_empty() => {
                Ok(Pred::PeriodSignal { component: Some(first), task: task.to_string(), pos })
            }
            _ => ts.unexpected(&["`/`"]),
        };
    }
    let spos = ts.pos();
    let (state_kw, _) = ts.name()?;
    if state_kw != "state" {
        return Err(ParseError::Unexpected { expected: vec!["`state`".into()], found: format!("`{}`", state_kw), pos: spos });
    }
    let (state, _) = match ts.peek() {
        Some(TokenKind::Keyword(Keyword::Ether)) | Some(TokenKind::Ident(_)) | Some(TokenKind::Keyword(_)) => ts.name()?,
        _ => return ts.unexpected(&["state name"]),
    };
    Ok(Pred::State { component: first, entity, state, pos })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Pos;

    fn st(c: &str, e: &str, s: &str) -> Pred {
        Pred::State { component: c.into(), entity: e.into(), state: s.into(), pos: Pos::default() }
    }

    #[test]
    fn bounded_stop_1() {
        let ps = parse_properties(
            "property bounded_stop_1 is (robmotion/control_task/state Stop_req) leadsto (robmotion/GotoPosition/state stop) within [0, 0.5s]",
        )
        .unwrap();
        assert_eq!(
            ps.properties,
            vec![Property::LeadsToWithin {
                name: "bounded_stop_1".into(),
                trigger: st("robmotion", "control_task", "Stop_req"),
                target: st("robmotion", "GotoPosition", "stop"),
                lo: 0,
                hi: 500_000,
                leave: false,
            }]
        );
    }

    #[test]
    fn unitless_bounds_are_seconds_and_leads_to_leave() {
        let ps = parse_properties(
            "property bounded_stop_2 is (robmotion/GotoPosition/state stop) leads to leave (robloco/TSStart/state update) within [0,0.06]",
        )
        .unwrap();
        match &ps.properties[0] {
            Property::LeadsToWithin { hi, leave, .. } => assert_eq!((*hi, *leave), (60_000, true)),
            p => panic!("{p:?}"),
        }
    }

    #[test]
    fn invariant_forms() {
        let ps = parse_properties("always (mk/main/state executing => not main_period_signal)").unwrap();
        assert_eq!(
            ps.properties[0],
            Property::Invariant {
                name: "property_1".into(),
                pred: Pred::Implies(
                    Box::new(st("mk", "main", "executing")),
                    Box::new(Pred::Not(Box::new(Pred::PeriodSignal {
                        component: None,
                        task: "main".into(),
                        pos: Pos::default()
                    })))
                )
            }
        );
        let ps = parse_properties(
            "property schedulability_main is\nalways (microkopter/main/state executing => not (main_period_signal))",
        )
        .unwrap();
        assert_eq!(ps.properties[0].name(), "schedulability_main");
    }

    #[test]
    fn precedence() {
        let p = parse_predicate("a_period_signal or b_period_signal and not c/d_period_signal").unwrap();
        assert!(matches!(p, Pred::Or(_, ref r) if matches!(**r, Pred::And(..))));
    }

    #[test]
    fn errors() {
        let err = parse_properties("property p is eventually (true)").unwrap_err();
        assert!(err.to_string().contains("unknown pattern keyword `eventually`"), "{err}");
        let err = parse_properties("(true) until (false) within [0, 1]").unwrap_err();
        assert!(err.to_string().contains("unknown pattern keyword `until`"));
        assert!(parse_properties("(true) leadsto (false) within [2, 1]").is_err());
        assert!(parse_properties("(true) leadsto (false) within 0, 1").is_err());
        assert!(parse_properties("always (foo)").is_err());
    }
}
