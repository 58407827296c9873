//! Scenario files: timed client requests.
//!
//! ```text
//! horizon 2s
//! at 0ms request robmotion.GotoPosition(1.0, 2.0)
//! at 600ms..1100ms request robmotion.Stop()
//! ```
//!
//! A window `a..b` sends the request at some instant in `[a, b]`. Windows
//! must not overlap once sorted, so requests always arrive in file order
//! after sorting.

use super::ast::{Literal, Scenario, ScenarioEvent};
use super::lexer::{duration_to_us, TokenKind};
use super::parser::{ParseError, ParseResult, TokenStream};

pub fn parse_scenario(source: &str) -> ParseResult<Scenario> {
    let mut ts = TokenStream::new(source)?;
    let mut events = Vec::new();
    let mut horizon: Option<(u64, crate::diag::Pos)> = None;
    while !ts.at_end() {
        let pos = ts.pos();
        let (word, _) = ts.name()?;
        match word.as_str() {
            "horizon" => {
                if horizon.is_some() {
                    return Err(ParseError::Duplicate { category: "scenario setting", name: "horizon".into(), pos });
                }
                horizon = Some((time(&mut ts)?, pos));
            }
            "at" => {
                let send_time = time(&mut ts)?;
                let latest = if ts.eat(&TokenKind::DotDot) {
                    let lpos = ts.pos();
                    let l = time(&mut ts)?;
                    if l < send_time {
                        return Err(ParseError::Invalid { message: "malformed window: end precedes start".into(), pos: lpos });
                    }
                    l
                } else {
                    send_time
                };
                let kw = ts.pos();
                let (req, _) = ts.name()?;
                if req != "request" {
                    return Err(ParseError::Unexpected {
                        expected: vec!["`request`".into()],
                        found: format!("identifier `{}`", req),
                        pos: kw,
                    });
                }
                let (component, _) = ts.name()?;
                ts.expect(TokenKind::Dot)?;
                let (service, _) = ts.name()?;
                ts.expect(TokenKind::LParen)?;
                let mut args = Vec::new();
                if !ts.eat(&TokenKind::RParen) {
                    loop {
                        args.push(literal(&mut ts)?);
                        if ts.eat(&TokenKind::RParen) {
                            break;
                        }
                        if !ts.eat(&TokenKind::Comma) {
                            return ts.unexpected(&["`,`", "`)`"]);
                        }
                    }
                }
                events.push(ScenarioEvent { send_time, latest, component, service, args, pos });
            }
            other => {
                return Err(ParseError::Invalid { message: format!("unknown scenario keyword `{}`", other), pos });
            }
        }
    }
    events.sort_by_key(|e| e.send_time);
    for w in events.windows(2) {
        if w[1].send_time < w[0].latest {
            return Err(ParseError::Invalid { message: "overlapping request windows".into(), pos: w[1].pos });
        }
    }
    let last = events.iter().map(|e| e.latest).max().unwrap_or(0);
    let horizon = match horizon {
        Some((h, pos)) if h < last => {
            return Err(ParseError::Invalid {
                message: format!("horizon {}us precedes the last request at {}us", h, last),
                pos,
            })
        }
        Some((h, _)) => h,
        None => last,
    };
    Ok(Scenario { events, horizon })
}

/// A duration literal, or a bare number of seconds.
pub(crate) fn time(ts: &mut TokenStream) -> ParseResult<u64> {
    let pos = ts.pos();
    match ts.peek().cloned() {
        Some(TokenKind::Duration(us)) => {
            ts.next();
            Ok(us)
        }
        Some(TokenKind::Number(n)) => {
            ts.next();
            if n.starts_with('-') {
                return Err(ParseError::Invalid { message: "negative time".into(), pos });
            }
            duration_to_us(&n, "s").map_err(|message| ParseError::Invalid { message, pos })
        }
        _ => ts.unexpected(&["duration"]),
    }
}

fn literal(ts: &mut TokenStream) -> ParseResult<Literal> {
    match ts.peek().cloned() {
        Some(TokenKind::Number(n)) => {
            ts.next();
            Ok(Literal::Number(n))
        }
        Some(TokenKind::Str(s)) => {
            ts.next();
            Ok(Literal::Str(s))
        }
        Some(TokenKind::Ident(s)) => {
            ts.next();
            Ok(Literal::Ident(s))
        }
        _ => ts.unexpected(&["number", "string literal", "identifier"]),
    }
}
