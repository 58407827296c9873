//! Recursive descent parser for `.gen` component files.

use super::ast::*;
use super::lexer::{tokenize, Keyword, LexError, Token, TokenKind};
use crate::diag::{Diagnostic, Pos};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("{0}")]
    Lex(#[from] LexError),
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Unexpected { expected: Vec<String>, found: String, pos: Pos },
    #[error("{pos}: duplicate {category} `{name}`")]
    Duplicate { category: &'static str, name: String, pos: Pos },
    #[error("{pos}: {message}")]
    Invalid { message: String, pos: Pos },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Lex(e) => e.pos,
            ParseError::Unexpected { pos, .. }
            | ParseError::Duplicate { pos, .. }
            | ParseError::Invalid { pos, .. } => *pos,
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let message = match self {
            ParseError::Lex(e) => e.message.clone(),
            ParseError::Unexpected { expected, found, .. } => {
                format!("expected {}, found {}", expected.join(" or "), found)
            }
            ParseError::Duplicate { category, name, .. } => format!("duplicate {} `{}`", category, name),
            ParseError::Invalid { message, .. } => message.clone(),
        };
        Diagnostic::error(message, Some(self.pos()))
    }
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Predefined function services every component offers, in dispatch order.
pub const PREDEFINED_SERVICES: [&str; 4] = ["connect_port", "connect_service", "kill", "abort"];

pub(crate) struct TokenStream {
    tokens: Vec<Token>,
    idx: usize,
    eof: Pos,
}

impl TokenStream {
    pub(crate) fn new(source: &str) -> ParseResult<Self> {
        let tokens = tokenize(source)?;
        let eof = tokens.last().map(|t| Pos::new(t.pos.line, t.pos.col + 1)).unwrap_or(Pos::new(1, 1));
        Ok(TokenStream { tokens, idx: 0, eof })
    }

    pub(crate) fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.idx).map(|t| &t.kind)
    }

    pub(crate) fn pos(&self) -> Pos {
        self.tokens.get(self.idx).map(|t| t.pos).unwrap_or(self.eof)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.idx >= self.tokens.len()
    }

    pub(crate) fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    pub(crate) fn found(&self) -> String {
        match self.peek() {
            Some(k) => k.to_string(),
            None => "end of input".into(),
        }
    }

    pub(crate) fn unexpected<T>(&self, expected: &[&str]) -> ParseResult<T> {
        Err(ParseError::Unexpected {
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found(),
            pos: self.pos(),
        })
    }

    pub(crate) fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&TokenKind::Keyword(kw))
    }

    pub(crate) fn expect(&mut self, kind: TokenKind) -> ParseResult<Pos> {
        let pos = self.pos();
        if self.eat(&kind) {
            Ok(pos)
        } else {
            self.unexpected(&[&kind.to_string()])
        }
    }

    pub(crate) fn expect_kw(&mut self, kw: Keyword) -> ParseResult<Pos> {
        self.expect(TokenKind::Keyword(kw))
    }

    pub(crate) fn ident(&mut self) -> ParseResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.idx += 1;
                Ok((s, pos))
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    /// Identifier, also accepting keywords (used for names in scenario and
    /// property paths where component-file keywords are not reserved).
    pub(crate) fn name(&mut self) -> ParseResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.idx += 1;
                Ok((s, pos))
            }
            Some(TokenKind::Keyword(k)) => {
                let s = k.as_str().to_string();
                self.idx += 1;
                Ok((s, pos))
            }
            _ => self.unexpected(&["identifier"]),
        }
    }

    pub(crate) fn duration(&mut self) -> ParseResult<u64> {
        match self.peek() {
            Some(TokenKind::Duration(us)) => {
                let us = *us;
                self.idx += 1;
                Ok(us)
            }
            _ => self.unexpected(&["duration"]),
        }
    }
}

/// Parses one component file.
pub fn parse_component(source: &str) -> ParseResult<ComponentSpec> {
    let mut ts = TokenStream::new(source)?;
    let comp = ComponentParser { ts: &mut ts }.component()?;
    if !ts.at_end() {
        return ts.unexpected(&["end of input"]);
    }
    Ok(comp)
}

struct ComponentParser<'a> {
    ts: &'a mut TokenStream,
}

impl ComponentParser<'_> {
    fn component(&mut self) -> ParseResult<ComponentSpec> {
        let pos = self.ts.expect_kw(Keyword::Component)?;
        let (name, _) = self.ts.ident()?;
        self.ts.expect(TokenKind::LBrace)?;
        let mut comp = ComponentSpec {
            name,
            ports: vec![],
            exceptions: vec![],
            ids: vec![],
            tasks: vec![],
            services: vec![],
            pos,
        };
        let mut seen = Names::default();
        while !self.ts.eat(&TokenKind::RBrace) {
            let dpos = self.ts.pos();
            match self.ts.peek() {
                Some(TokenKind::Keyword(Keyword::Port)) => {
                    let port = self.port()?;
                    seen.check("port", &port.name, dpos)?;
                    comp.ports.push(port);
                }
                Some(TokenKind::Keyword(Keyword::Exception)) => {
                    self.ts.next();
                    loop {
                        let (e, epos) = self.ts.ident()?;
                        seen.check("exception", &e, epos)?;
                        comp.exceptions.push(e);
                        if !self.ts.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Ids)) => {
                    self.ts.next();
                    self.ts.expect(TokenKind::LBrace)?;
                    while !self.ts.eat(&TokenKind::RBrace) {
                        let fpos = self.ts.pos();
                        let type_name = self.type_name()?;
                        let (fname, npos) = self.ts.ident()?;
                        self.ts.expect(TokenKind::Semi)?;
                        seen.check("ids field", &fname, npos)?;
                        comp.ids.push(IdsField { type_name, name: fname, pos: fpos });
                    }
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Task)) => {
                    let task = self.task()?;
                    seen.check("task", &task.name, dpos)?;
                    comp.tasks.push(task);
                }
                Some(TokenKind::Keyword(Keyword::Attribute))
                | Some(TokenKind::Keyword(Keyword::Function))
                | Some(TokenKind::Keyword(Keyword::Activity)) => {
                    let svc = self.service()?;
                    seen.check("service", &svc.name, svc.pos)?;
                    comp.services.push(svc);
                }
                _ => {
                    return self.ts.unexpected(&[
                        "`port`",
                        "`exception`",
                        "`ids`",
                        "`task`",
                        "`attribute`",
                        "`function`",
                        "`activity`",
                        "`}`",
                    ])
                }
            }
        }
        self.ts.expect(TokenKind::Semi)?;
        for p in PREDEFINED_SERVICES.iter().rev() {
            if let Some(existing) = comp.services.iter().find(|s| s.name == *p) {
                return Err(ParseError::Duplicate { category: "service", name: p.to_string(), pos: existing.pos });
            }
            comp.services.insert(0, predefined_service(p));
        }
        // keep predefined dispatch order
        comp.services[..PREDEFINED_SERVICES.len()].sort_by_key(|s| PREDEFINED_SERVICES.iter().position(|p| *p == s.name));
        Ok(comp)
    }

    fn type_name(&mut self) -> ParseResult<String> {
        let mut s = String::new();
        if self.ts.eat(&TokenKind::ColonColon) {
            s.push_str("::");
        }
        let (first, _) = self.ts.ident()?;
        s.push_str(&first);
        while self.ts.peek() == Some(&TokenKind::ColonColon) {
            self.ts.next();
            let (part, _) = self.ts.ident()?;
            s.push_str("::");
            s.push_str(&part);
        }
        Ok(s)
    }

    fn port(&mut self) -> ParseResult<PortDecl> {
        let pos = self.ts.expect_kw(Keyword::Port)?;
        let dir = if self.ts.eat_kw(Keyword::In) {
            PortDir::In
        } else if self.ts.eat_kw(Keyword::Out) {
            PortDir::Out
        } else {
            return self.ts.unexpected(&["`in`", "`out`"]);
        };
        let type_name = self.type_name()?;
        let (name, _) = self.ts.ident()?;
        self.ts.expect(TokenKind::Semi)?;
        Ok(PortDecl { dir, type_name, name, pos })
    }

    fn task(&mut self) -> ParseResult<TaskDecl> {
        let pos = self.ts.expect_kw(Keyword::Task)?;
        let (name, _) = self.ts.ident()?;
        self.ts.expect(TokenKind::LBrace)?;
        let mut timing = Timing::Aperiodic;
        let mut codels = Vec::new();
        let mut states = HashSet::new();
        while !self.ts.eat(&TokenKind::RBrace) {
            match self.ts.peek() {
                Some(TokenKind::Keyword(Keyword::Period)) => {
                    let ppos = self.ts.pos();
                    self.ts.next();
                    let dpos = self.ts.pos();
                    let period_us = self.ts.duration()?;
                    if period_us == 0 {
                        return Err(ParseError::Invalid { message: "task period must be positive".into(), pos: dpos });
                    }
                    if matches!(timing, Timing::Periodic { .. }) {
                        return Err(ParseError::Duplicate { category: "period of task", name: name.clone(), pos: ppos });
                    }
                    timing = Timing::Periodic { period_us };
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Codel)) | Some(TokenKind::Keyword(Keyword::Async)) => {
                    let cpos = self.ts.pos();
                    let codel = self.codel(true)?;
                    let st = codel.state.clone().unwrap_or_default();
                    if !states.insert(st.clone()) {
                        return Err(ParseError::Duplicate { category: "codel state", name: st, pos: cpos });
                    }
                    codels.push(codel);
                }
                _ => return self.ts.unexpected(&["`period`", "`codel`", "`async`", "`}`"]),
            }
        }
        self.ts.expect(TokenKind::Semi)?;
        if !codels.is_empty() && !states.contains("start") {
            return Err(ParseError::Invalid {
                message: format!("permanent activity of task `{}` has no `start` codel", name),
                pos,
            });
        }
        Ok(TaskDecl { name, timing, codels, pos })
    }

    /// `[async] codel [<state>] fn(args) [yield targets] [wcet] D [min D] ;`
    fn codel(&mut self, with_state: bool) -> ParseResult<CodelDecl> {
        let pos = self.ts.pos();
        let is_async = self.ts.eat_kw(Keyword::Async);
        self.ts.expect_kw(Keyword::Codel)?;
        let state = if self.ts.eat(&TokenKind::Lt) {
            let (s, _) = self.ts.ident()?;
            self.ts.expect(TokenKind::Gt)?;
            Some(s)
        } else {
            None
        };
        if with_state && state.is_none() {
            return self.ts.unexpected(&["`<`"]);
        }
        let (function, _) = self.ts.ident()?;
        let args = self.codel_args()?;
        let mut yields = Vec::new();
        if self.ts.eat_kw(Keyword::Yield) {
            loop {
                yields.push(self.yield_target()?);
                if !self.ts.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let had_kw = self.ts.eat_kw(Keyword::Wcet);
        let wcet_us = match self.ts.peek() {
            Some(TokenKind::Duration(_)) => Some(self.ts.duration()?),
            _ if had_kw => return self.ts.unexpected(&["duration"]),
            _ => None,
        };
        let min_us = if self.ts.eat_kw(Keyword::Min) {
            let mpos = self.ts.pos();
            let m = self.ts.duration()?;
            if let Some(w) = wcet_us {
                if m > w {
                    return Err(ParseError::Invalid {
                        message: format!("min duration {}us exceeds wcet {}us", m, w),
                        pos: mpos,
                    });
                }
            }
            Some(m)
        } else {
            None
        };
        self.ts.expect(TokenKind::Semi)?;
        Ok(CodelDecl { state, function, args, yields, wcet_us, min_us, is_async, pos })
    }

    fn codel_args(&mut self) -> ParseResult<Vec<CodelArg>> {
        self.ts.expect(TokenKind::LParen)?;
        let mut args = Vec::new();
        if self.ts.eat(&TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            let dir = self.arg_dir()?;
            let path = if self.ts.eat(&TokenKind::ColonColon) {
                self.ts.expect_kw(Keyword::Ids)?;
                ArgPath::AllIds
            } else {
                ArgPath::Name(self.ts.ident()?.0)
            };
            args.push(CodelArg { dir, path });
            if self.ts.eat(&TokenKind::RParen) {
                return Ok(args);
            }
            if !self.ts.eat(&TokenKind::Comma) {
                return self.ts.unexpected(&["`,`", "`)`"]);
            }
        }
    }

    fn arg_dir(&mut self) -> ParseResult<ArgDir> {
        if self.ts.eat_kw(Keyword::In) {
            Ok(ArgDir::In)
        } else if self.ts.eat_kw(Keyword::Out) {
            Ok(ArgDir::Out)
        } else if self.ts.eat_kw(Keyword::Inout) {
            Ok(ArgDir::Inout)
        } else {
            self.ts.unexpected(&["`in`", "`out`", "`inout`"])
        }
    }

    fn yield_target(&mut self) -> ParseResult<YieldTarget> {
        if self.ts.eat_kw(Keyword::Ether) {
            return Ok(YieldTarget::Ether);
        }
        if self.ts.eat_kw(Keyword::Pause) {
            self.ts.expect(TokenKind::ColonColon)?;
            if self.ts.peek() == Some(&TokenKind::Keyword(Keyword::Ether)) {
                return Err(ParseError::Invalid { message: "`pause::` cannot prefix `ether`".into(), pos: self.ts.pos() });
            }
            let (name, _) = self.ts.ident()?;
            return Ok(YieldTarget::State { name, pause: true });
        }
        match self.ts.peek() {
            Some(TokenKind::Ident(_)) => {
                let (name, _) = self.ts.ident()?;
                Ok(YieldTarget::State { name, pause: false })
            }
            _ => self.ts.unexpected(&["state name", "`ether`", "`pause::`"]),
        }
    }

    fn service(&mut self) -> ParseResult<ServiceDecl> {
        let pos = self.ts.pos();
        let kind = match self.ts.next().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Attribute)) => ServiceKind::Attribute,
            Some(TokenKind::Keyword(Keyword::Function)) => ServiceKind::Function,
            _ => ServiceKind::Activity,
        };
        let (name, _) = self.ts.ident()?;
        let args = self.service_args(kind)?;
        let mut svc = ServiceDecl {
            name,
            kind,
            args,
            doc: None,
            task: None,
            locals: vec![],
            validate: None,
            codels: vec![],
            interrupts: vec![],
            throws: vec![],
            implicit: false,
            pos,
        };
        if self.ts.eat(&TokenKind::Semi) {
            return Ok(svc);
        }
        self.ts.expect(TokenKind::LBrace)?;
        let mut states = HashSet::new();
        while !self.ts.eat(&TokenKind::RBrace) {
            let ipos = self.ts.pos();
            match self.ts.peek() {
                Some(TokenKind::Keyword(Keyword::Doc)) => {
                    self.ts.next();
                    match self.ts.next().map(|t| t.kind) {
                        Some(TokenKind::Str(s)) => svc.doc = Some(s),
                        _ => return Err(ParseError::Unexpected { expected: vec!["string literal".into()], found: "token".into(), pos: ipos }),
                    }
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Task)) => {
                    self.ts.next();
                    let (t, _) = self.ts.ident()?;
                    svc.task = Some(t);
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Local)) => {
                    self.ts.next();
                    let type_name = self.type_name()?;
                    let (n, npos) = self.ts.ident()?;
                    if svc.locals.iter().any(|l| l.name == n) || svc.args.iter().any(|a| a.name == n) {
                        return Err(ParseError::Duplicate { category: "service symbol", name: n, pos: npos });
                    }
                    svc.locals.push(LocalDecl { type_name, name: n });
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Validate)) => {
                    self.ts.next();
                    let (function, _) = self.ts.ident()?;
                    let args = self.codel_args()?;
                    let had_kw = self.ts.eat_kw(Keyword::Wcet);
                    let wcet_us = match self.ts.peek() {
                        Some(TokenKind::Duration(_)) => Some(self.ts.duration()?),
                        _ if had_kw => return self.ts.unexpected(&["duration"]),
                        _ => None,
                    };
                    let min_us = if self.ts.eat_kw(Keyword::Min) { Some(self.ts.duration()?) } else { None };
                    self.ts.expect(TokenKind::Semi)?;
                    svc.validate =
                        Some(CodelDecl { state: None, function, args, yields: vec![], wcet_us, min_us, is_async: false, pos: ipos });
                }
                Some(TokenKind::Keyword(Keyword::Codel)) | Some(TokenKind::Keyword(Keyword::Async)) => {
                    let codel = self.codel(kind == ServiceKind::Activity)?;
                    if kind != ServiceKind::Activity {
                        if !svc.codels.is_empty() {
                            return Err(ParseError::Invalid {
                                message: format!("{} `{}` can have only one codel", kind.as_str(), svc.name),
                                pos: ipos,
                            });
                        }
                        if codel.state.is_some() || !codel.yields.is_empty() {
                            return Err(ParseError::Invalid {
                                message: "function codels take no state and no yields".into(),
                                pos: ipos,
                            });
                        }
                    } else {
                        let st = codel.state.clone().unwrap_or_default();
                        if !states.insert(st.clone()) {
                            return Err(ParseError::Duplicate { category: "codel state", name: st, pos: ipos });
                        }
                    }
                    svc.codels.push(codel);
                }
                Some(TokenKind::Keyword(Keyword::Throw)) => {
                    self.ts.next();
                    loop {
                        svc.throws.push(self.ts.ident()?.0);
                        if !self.ts.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.ts.expect(TokenKind::Semi)?;
                }
                Some(TokenKind::Keyword(Keyword::Interrupt)) => {
                    self.ts.next();
                    loop {
                        svc.interrupts.push(self.ts.ident()?.0);
                        if !self.ts.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.ts.expect(TokenKind::Semi)?;
                }
                _ => {
                    return self.ts.unexpected(&[
                        "`doc`",
                        "`task`",
                        "`local`",
                        "`validate`",
                        "`codel`",
                        "`throw`",
                        "`interrupt`",
                        "`}`",
                    ])
                }
            }
        }
        self.ts.expect(TokenKind::Semi)?;
        if kind == ServiceKind::Activity {
            if svc.task.is_none() {
                return Err(ParseError::Invalid { message: format!("activity `{}` declares no task", svc.name), pos });
            }
            if !states.contains("start") {
                return Err(ParseError::Invalid { message: format!("activity `{}` has no `start` codel", svc.name), pos });
            }
        } else if svc.task.is_some() {
            return Err(ParseError::Invalid {
                message: format!("only activities run in an execution task (`{}` is a {})", svc.name, kind.as_str()),
                pos,
            });
        }
        Ok(svc)
    }

    fn service_args(&mut self, kind: ServiceKind) -> ParseResult<Vec<ServiceArg>> {
        self.ts.expect(TokenKind::LParen)?;
        let mut args: Vec<ServiceArg> = Vec::new();
        if self.ts.eat(&TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            let dir = self.arg_dir()?;
            let apos = self.ts.pos();
            let first = self.type_name()?;
            let (type_name, name) = match self.ts.peek() {
                Some(TokenKind::Ident(_)) => (Some(first), self.ts.ident()?.0),
                _ => (None, first),
            };
            if type_name.is_none() && kind != ServiceKind::Attribute {
                return self.ts.unexpected(&["argument name"]);
            }
            if args.iter().any(|a| a.name == name) {
                return Err(ParseError::Duplicate { category: "argument", name, pos: apos });
            }
            args.push(ServiceArg { dir, type_name, name });
            if self.ts.eat(&TokenKind::RParen) {
                return Ok(args);
            }
            if !self.ts.eat(&TokenKind::Comma) {
                return self.ts.unexpected(&["`,`", "`)`"]);
            }
        }
    }
}

fn predefined_service(name: &str) -> ServiceDecl {
    ServiceDecl {
        name: name.to_string(),
        kind: ServiceKind::Function,
        args: vec![],
        doc: None,
        task: None,
        locals: vec![],
        validate: None,
        codels: vec![],
        interrupts: if name == "abort" { vec!["*".into()] } else { vec![] },
        throws: vec![],
        implicit: true,
        pos: Pos::default(),
    }
}

#[derive(Default)]
struct Names {
    seen: HashSet<(&'static str, String)>,
}

impl Names {
    fn check(&mut self, category: &'static str, name: &str, pos: Pos) -> ParseResult<()> {
        // services, tasks and ports share the request/entity namespace
        let ns = match category {
            "service" | "task" => "entity",
            other => other,
        };
        if !self.seen.insert((ns, name.to_string())) {
            return Err(ParseError::Duplicate { category, name: name.to_string(), pos });
        }
        Ok(())
    }
}
