//! A small Tcl-flavoured interpreter for template code.
//!
//! Commands: `set`, `foreach`, `if`/`elseif`/`else`, `string
//! toupper|tolower|length`, `join`, `llength`, `lindex`, plus method calls on
//! model objects (`[$s name]`). A `foreach` or `if` whose body brace is left
//! open at the end of an Eval marker continues through the following
//! template text until a marker starting with `}` closes it.

use super::parse::{Segment, Template, TemplateError};
use crate::diag::Pos;
use crate::semantic::{CodelId, CodelOwner, SystemModel};
use crate::spec_ast::{ArgPath, PortDir, ServiceKind, Timing, YieldTarget};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq)]
enum Word {
    Braced(String),
    Parts(Vec<Part>),
}

#[derive(Clone, Debug, PartialEq)]
enum Part {
    Lit(String),
    Var(String),
    Cmd(Vec<Word>),
}

type Command = Vec<Word>;

enum Cont {
    Else,
    Elseif(Word),
}

enum Item {
    Lit(String),
    Subst(Vec<Part>, Pos),
    Cmd(Command, Pos),
    Open(Command, Pos),
    Close(Option<Cont>, Pos),
}

enum Node {
    Lit(String),
    Subst(Vec<Part>, Pos),
    Cmd(Command, Pos),
    Foreach { var: Word, list: Word, body: Vec<Node>, pos: Pos },
    If { branches: Vec<(Option<Word>, Vec<Node>)>, pos: Pos },
}

// ---------------------------------------------------------------- lexing

struct Lexer {
    chars: Vec<char>,
    i: usize,
}

enum Parsed {
    Done(Vec<Command>),
    /// Commands, then a command whose trailing `{` is left open.
    Open(Vec<Command>, Command),
}

impl Lexer {
    fn new(s: &str) -> Self {
        Lexer { chars: s.chars().collect(), i: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn rest_is_blank(&self) -> bool {
        self.chars[self.i..].iter().all(|c| c.is_whitespace())
    }

    fn skip_blank(&mut self) {
        while matches!(self.peek(), Some(' ') | Some('\t')) {
            self.i += 1;
        }
    }

    fn script(&mut self) -> Result<Parsed, String> {
        let mut cmds = Vec::new();
        loop {
            while matches!(self.peek(), Some(c) if c.is_whitespace() || c == ';') {
                self.i += 1;
            }
            if self.peek().is_none() {
                return Ok(Parsed::Done(cmds));
            }
            if self.peek() == Some('#') {
                while !matches!(self.peek(), None | Some('\n')) {
                    self.i += 1;
                }
                continue;
            }
            let (cmd, open) = self.command(None)?;
            if open {
                return Ok(Parsed::Open(cmds, cmd));
            }
            if !cmd.is_empty() {
                cmds.push(cmd);
            }
        }
    }

    /// Reads one command. Returns `true` as second element when the command
    /// ended on an unterminated `{` at the end of input.
    fn command(&mut self, term: Option<char>) -> Result<(Command, bool), String> {
        let mut words = Vec::new();
        loop {
            self.skip_blank();
            match self.peek() {
                None => return Ok((words, false)),
                Some('\n') | Some(';') if term.is_none() => return Ok((words, false)),
                Some('\n') => {
                    self.i += 1;
                    continue;
                }
                Some(c) if Some(c) == term => return Ok((words, false)),
                Some('{') => {
                    let start = self.i;
                    match self.braced()? {
                        Some(s) => words.push(Word::Braced(s)),
                        None => {
                            self.i = start + 1;
                            if term.is_none() && self.rest_is_blank() {
                                self.i = self.chars.len();
                                return Ok((words, true));
                            }
                            return Err("unbalanced `{`".into());
                        }
                    }
                }
                Some('"') => {
                    self.i += 1;
                    let parts = self.parts(&['"'], true)?;
                    if self.peek() != Some('"') {
                        return Err("unterminated quoted word".into());
                    }
                    self.i += 1;
                    words.push(Word::Parts(parts));
                }
                Some(_) => {
                    let mut stops = vec![' ', '\t', '\n', ';'];
                    if let Some(t) = term {
                        stops.push(t);
                    }
                    words.push(Word::Parts(self.parts(&stops, false)?));
                }
            }
        }
    }

    /// Braced word starting at `{`; `None` if the input ends first.
    fn braced(&mut self) -> Result<Option<String>, String> {
        self.i += 1;
        let mut depth = 1;
        let mut s = String::new();
        while let Some(c) = self.peek() {
            self.i += 1;
            match c {
                '\\' => {
                    s.push(c);
                    if let Some(n) = self.peek() {
                        s.push(n);
                        self.i += 1;
                    }
                }
                '{' => {
                    depth += 1;
                    s.push(c);
                }
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(Some(s));
                    }
                    s.push(c);
                }
                _ => s.push(c),
            }
        }
        Ok(None)
    }

    fn parts(&mut self, stops: &[char], quoted: bool) -> Result<Vec<Part>, String> {
        let mut parts = Vec::new();
        let mut lit = String::new();
        while let Some(c) = self.peek() {
            if stops.contains(&c) {
                break;
            }
            match c {
                '\\' => {
                    self.i += 1;
                    match self.peek() {
                        Some('n') => lit.push('\n'),
                        Some('t') => lit.push('\t'),
                        Some(o) => lit.push(o),
                        None => lit.push('\\'),
                    }
                    self.i += 1;
                }
                '$' => {
                    self.i += 1;
                    let name = if self.peek() == Some('{') {
                        self.i += 1;
                        let mut n = String::new();
                        while let Some(c) = self.peek() {
                            self.i += 1;
                            if c == '}' {
                                break;
                            }
                            n.push(c);
                        }
                        n
                    } else {
                        let mut n = String::new();
                        while let Some(c) = self.peek() {
                            if c.is_ascii_alphanumeric() || c == '_' {
                                n.push(c);
                                self.i += 1;
                            } else {
                                break;
                            }
                        }
                        n
                    };
                    if name.is_empty() {
                        lit.push('$');
                    } else {
                        if !lit.is_empty() {
                            parts.push(Part::Lit(std::mem::take(&mut lit)));
                        }
                        parts.push(Part::Var(name));
                    }
                }
                '[' => {
                    self.i += 1;
                    let (cmd, _) = self.command(Some(']'))?;
                    if self.peek() != Some(']') {
                        return Err("unterminated `[`".into());
                    }
                    self.i += 1;
                    if !lit.is_empty() {
                        parts.push(Part::Lit(std::mem::take(&mut lit)));
                    }
                    parts.push(Part::Cmd(cmd));
                }
                _ => {
                    lit.push(c);
                    self.i += 1;
                }
            }
        }
        if !lit.is_empty() || (parts.is_empty() && quoted) {
            parts.push(Part::Lit(lit));
        }
        Ok(parts)
    }
}

fn lex_eval(code: &str, pos: Pos, items: &mut Vec<Item>) -> Result<(), TemplateError> {
    let err = |m: String| TemplateError::new(m, pos);
    let trimmed = code.trim_start();
    let mut rest = code;
    if let Some(after) = trimmed.strip_prefix('}') {
        let mut lx = Lexer::new(after);
        lx.skip_blank();
        let cont = match lx.script().map_err(err)? {
            Parsed::Done(c) if c.is_empty() => None,
            Parsed::Open(pre, head) if pre.is_empty() => match head.as_slice() {
                [w] if literal(w) == Some("else") => Some(Cont::Else),
                [w, cond] if literal(w) == Some("elseif") => Some(Cont::Elseif(cond.clone())),
                _ => return Err(err("expected `else {` or `elseif cond {` after `}`".into())),
            },
            _ => {
                items.push(Item::Close(None, pos));
                rest = after;
                return push_script(rest, pos, items);
            }
        };
        items.push(Item::Close(cont, pos));
        return Ok(());
    }
    push_script(rest, pos, items)
}

fn push_script(code: &str, pos: Pos, items: &mut Vec<Item>) -> Result<(), TemplateError> {
    match Lexer::new(code).script().map_err(|m| TemplateError::new(m, pos))? {
        Parsed::Done(cmds) => items.extend(cmds.into_iter().map(|c| Item::Cmd(c, pos))),
        Parsed::Open(cmds, head) => {
            items.extend(cmds.into_iter().map(|c| Item::Cmd(c, pos)));
            items.push(Item::Open(head, pos));
        }
    }
    Ok(())
}

fn literal(w: &Word) -> Option<&str> {
    match w {
        Word::Parts(p) => match p.as_slice() {
            [Part::Lit(s)] => Some(s),
            _ => None,
        },
        Word::Braced(_) => None,
    }
}

enum Frame {
    Root(Vec<Node>),
    Foreach { var: Word, list: Word, body: Vec<Node>, pos: Pos },
    If { done: Vec<(Option<Word>, Vec<Node>)>, cond: Option<Word>, body: Vec<Node>, pos: Pos },
}

impl Frame {
    fn nodes(&mut self) -> &mut Vec<Node> {
        match self {
            Frame::Root(n) => n,
            Frame::Foreach { body, .. } | Frame::If { body, .. } => body,
        }
    }
}

fn build(template: &Template) -> Result<Vec<Node>, TemplateError> {
    let mut items = Vec::new();
    for seg in &template.segments {
        match seg {
            Segment::Literal(s) => items.push(Item::Lit(s.clone())),
            Segment::Subst { code, pos } => {
                let mut lx = Lexer::new(code.trim());
                let parts = lx.parts(&[], true).map_err(|m| TemplateError::new(m, *pos))?;
                items.push(Item::Subst(parts, *pos));
            }
            Segment::Eval { code, pos } => lex_eval(code, *pos, &mut items)?,
        }
    }
    let mut stack = vec![Frame::Root(Vec::new())];
    for item in items {
        match item {
            Item::Lit(s) => stack.last_mut().unwrap().nodes().push(Node::Lit(s)),
            Item::Subst(p, pos) => stack.last_mut().unwrap().nodes().push(Node::Subst(p, pos)),
            Item::Cmd(c, pos) => stack.last_mut().unwrap().nodes().push(Node::Cmd(c, pos)),
            Item::Open(head, pos) => match (head.first().and_then(literal), head.len()) {
                (Some("foreach"), 3) => {
                    let mut it = head.into_iter().skip(1);
                    stack.push(Frame::Foreach { var: it.next().unwrap(), list: it.next().unwrap(), body: vec![], pos })
                }
                (Some("if"), 2) => {
                    stack.push(Frame::If { done: vec![], cond: Some(head[1].clone()), body: vec![], pos })
                }
                _ => return Err(TemplateError::new("only `foreach var list {` and `if cond {` may span markers", pos)),
            },
            Item::Close(cont, pos) => {
                if stack.len() == 1 {
                    return Err(TemplateError::new("`}` closes no open block", pos));
                }
                let frame = stack.pop().unwrap();
                match (frame, cont) {
                    (Frame::If { mut done, cond, body, pos: fpos }, Some(c)) => {
                        if cond.is_none() {
                            return Err(TemplateError::new("branch after `else`", pos));
                        }
                        done.push((cond, body));
                        let cond = match c {
                            Cont::Else => None,
                            Cont::Elseif(w) => Some(w),
                        };
                        stack.push(Frame::If { done, cond, body: vec![], pos: fpos });
                    }
                    (_, Some(_)) => return Err(TemplateError::new("`else` without `if`", pos)),
                    (Frame::Foreach { var, list, body, pos }, None) => {
                        stack.last_mut().unwrap().nodes().push(Node::Foreach { var, list, body, pos })
                    }
                    (Frame::If { mut done, cond, body, pos }, None) => {
                        done.push((cond, body));
                        stack.last_mut().unwrap().nodes().push(Node::If { branches: done, pos })
                    }
                    (Frame::Root(_), None) => unreachable!(),
                }
            }
        }
    }
    match stack.pop() {
        Some(Frame::Root(nodes)) if stack.is_empty() => Ok(nodes),
        Some(Frame::Foreach { pos, .. }) | Some(Frame::If { pos, .. }) => {
            Err(TemplateError::new("block opened here is never closed", pos))
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------- values

#[derive(Clone, Copy, Debug, PartialEq)]
enum Obj {
    Component(usize),
    Service(usize, usize),
    Task(usize, usize),
    Codel(CodelId),
    CodelArg(CodelId, usize),
    Port(usize, usize),
    Ids(usize, usize),
    Arg(usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Str(String),
    List(Vec<Value>),
    Obj(Obj),
}

impl Value {
    fn s(v: impl Into<String>) -> Value {
        Value::Str(v.into())
    }

    fn empty() -> Value {
        Value::List(vec![])
    }
}

struct Interp<'m> {
    model: &'m SystemModel,
    vars: HashMap<String, Value>,
    out: String,
}

impl<'m> Interp<'m> {
    fn text(&self, v: &Value) -> String {
        match v {
            Value::Str(s) => s.clone(),
            Value::List(items) => items
                .iter()
                .map(|i| {
                    let t = self.text(i);
                    if t.is_empty() || t.contains(char::is_whitespace) {
                        format!("{{{}}}", t)
                    } else {
                        t
                    }
                })
                .collect::<Vec<_>>()
                .join(" "),
            Value::Obj(o) => self.obj_name(*o),
        }
    }

    fn list(&self, v: Value) -> Vec<Value> {
        match v {
            Value::List(l) => l,
            Value::Obj(o) => vec![Value::Obj(o)],
            Value::Str(s) => s.split_whitespace().map(Value::s).collect(),
        }
    }

    fn truthy(&self, v: &Value) -> bool {
        match v {
            Value::List(l) => !l.is_empty(),
            Value::Obj(_) => true,
            Value::Str(s) => !matches!(s.trim(), "" | "0" | "false" | "no" | "off"),
        }
    }

    fn obj_name(&self, o: Obj) -> String {
        let m = self.model;
        match o {
            Obj::Component(c) => m.components[c].spec.name.clone(),
            Obj::Service(c, s) => m.components[c].spec.services[s].name.clone(),
            Obj::Task(c, t) => m.components[c].spec.tasks[t].name.clone(),
            Obj::Codel(id) => m.codels[id].function.clone().unwrap_or_default(),
            Obj::CodelArg(id, i) => self.codel_arg_name(id, i),
            Obj::Port(c, p) => m.components[c].spec.ports[p].name.clone(),
            Obj::Ids(c, f) => m.components[c].spec.ids[f].name.clone(),
            Obj::Arg(c, s, a) => m.components[c].spec.services[s].args[a].name.clone(),
        }
    }

    fn codel_decl(&self, id: CodelId) -> Option<&'m crate::spec_ast::CodelDecl> {
        let m = self.model;
        let info = &m.codels[id];
        let comp = &m.components[info.component];
        match info.owner {
            CodelOwner::Task(t) => comp.task_codels[t].iter().position(|&x| x == id).map(|i| &comp.spec.tasks[t].codels[i]),
            CodelOwner::Service(s) => {
                let sc = &comp.service_codels[s];
                let svc = &comp.spec.services[s];
                if sc.validate == Some(id) {
                    svc.validate.as_ref()
                } else if let Some(i) = sc.fsm.iter().position(|&x| x == id) {
                    Some(&svc.codels[i])
                } else if sc.body == Some(id) {
                    svc.codels.first()
                } else {
                    None
                }
            }
        }
    }

    fn codel_arg_name(&self, id: CodelId, i: usize) -> String {
        match self.codel_decl(id).map(|d| &d.args[i].path) {
            Some(ArgPath::Name(n)) => n.clone(),
            Some(ArgPath::AllIds) => "::ids".into(),
            None => String::new(),
        }
    }

    fn method(&mut self, o: Obj, name: &str, _args: &[Value]) -> Result<Value, String> {
        let m = self.model;
        let list = |v: Vec<Obj>| Value::List(v.into_iter().map(Value::Obj).collect());
        let unknown = |kind: &str| Err(format!("unknown query `{}` on {}", name, kind));
        Ok(match o {
            Obj::Component(c) => {
                let spec = &m.components[c].spec;
                match name {
                    "name" => Value::s(&spec.name),
                    "services" => list((0..spec.services.len()).map(|s| Obj::Service(c, s)).collect()),
                    "activities" => list(
                        (0..spec.services.len())
                            .filter(|&s| spec.services[s].kind == ServiceKind::Activity)
                            .map(|s| Obj::Service(c, s))
                            .collect(),
                    ),
                    "tasks" => list((0..spec.tasks.len()).map(|t| Obj::Task(c, t)).collect()),
                    "ports" => list((0..spec.ports.len()).map(|p| Obj::Port(c, p)).collect()),
                    "ids" => list((0..spec.ids.len()).map(|f| Obj::Ids(c, f)).collect()),
                    "exceptions" => Value::List(spec.exceptions.iter().map(Value::s).collect()),
                    _ => return unknown("component"),
                }
            }
            Obj::Service(c, s) => {
                let comp = &m.components[c];
                let svc = &comp.spec.services[s];
                let sc = &comp.service_codels[s];
                match name {
                    "name" => Value::s(&svc.name),
                    "kind" => Value::s(svc.kind.as_str()),
                    "args" => list((0..svc.args.len()).map(|a| Obj::Arg(c, s, a)).collect()),
                    "task" => match comp.service_task[s] {
                        Some(t) => Value::Obj(Obj::Task(c, t)),
                        None => Value::empty(),
                    },
                    "doc" => Value::s(svc.doc.clone().unwrap_or_default()),
                    "codels" => {
                        let mut ids = sc.fsm.clone();
                        if !svc.codels.is_empty() && svc.kind != ServiceKind::Activity {
                            ids.extend(sc.body);
                        }
                        list(ids.into_iter().map(Obj::Codel).collect())
                    }
                    "validate" => match sc.validate {
                        Some(v) => Value::Obj(Obj::Codel(v)),
                        None => Value::empty(),
                    },
                    "interrupts" => list(comp.interrupts[s].iter().map(|&t| Obj::Service(c, t)).collect()),
                    "throws" => Value::List(svc.throws.iter().map(Value::s).collect()),
                    "predefined" => Value::s(if svc.implicit { "1" } else { "0" }),
                    _ => return unknown("service"),
                }
            }
            Obj::Task(c, t) => {
                let comp = &m.components[c];
                let task = &comp.spec.tasks[t];
                match name {
                    "name" => Value::s(&task.name),
                    "period" => match task.timing {
                        Timing::Periodic { period_us } => Value::s(period_us.to_string()),
                        Timing::Aperiodic => Value::empty(),
                    },
                    "codels" => list(comp.task_codels[t].iter().map(|&i| Obj::Codel(i)).collect()),
                    "services" => list(
                        (0..comp.spec.services.len())
                            .filter(|&s| comp.service_task[s] == Some(t))
                            .map(|s| Obj::Service(c, s))
                            .collect(),
                    ),
                    _ => return unknown("task"),
                }
            }
            Obj::Codel(id) => {
                let info = &m.codels[id];
                match name {
                    "name" => Value::s(info.function.clone().unwrap_or_default()),
                    "state" => match &info.role {
                        crate::semantic::CodelRole::State(s) => Value::s(s),
                        _ => Value::empty(),
                    },
                    "args" => {
                        let n = self.codel_decl(id).map(|d| d.args.len()).unwrap_or(0);
                        list((0..n).map(|i| Obj::CodelArg(id, i)).collect())
                    }
                    "yields" => Value::List(
                        info.yields
                            .iter()
                            .map(|y| match y {
                                YieldTarget::Ether => Value::s("ether"),
                                YieldTarget::State { name, pause: true } => Value::s(format!("pause::{}", name)),
                                YieldTarget::State { name, .. } => Value::s(name),
                            })
                            .collect(),
                    ),
                    "wcet" => Value::s(info.wcet_us.to_string()),
                    "async" => Value::s(if info.is_async { "1" } else { "0" }),
                    _ => return unknown("codel"),
                }
            }
            Obj::CodelArg(id, i) => {
                let d = self.codel_decl(id).ok_or("codel has no declaration")?;
                match name {
                    "name" => Value::s(self.codel_arg_name(id, i)),
                    "dir" => Value::s(d.args[i].dir.as_str()),
                    _ => return unknown("codel argument"),
                }
            }
            Obj::Port(c, p) => {
                let port = &m.components[c].spec.ports[p];
                match name {
                    "name" => Value::s(&port.name),
                    "dir" => Value::s(if port.dir == PortDir::In { "in" } else { "out" }),
                    "type" => Value::s(&port.type_name),
                    _ => return unknown("port"),
                }
            }
            Obj::Ids(c, f) => {
                let field = &m.components[c].spec.ids[f];
                match name {
                    "name" => Value::s(&field.name),
                    "type" => Value::s(&field.type_name),
                    _ => return unknown("ids field"),
                }
            }
            Obj::Arg(c, s, a) => {
                let arg = &m.components[c].spec.services[s].args[a];
                match name {
                    "name" => Value::s(&arg.name),
                    "dir" => Value::s(arg.dir.as_str()),
                    "type" => match &arg.type_name {
                        Some(t) => Value::s(t),
                        None => Value::empty(),
                    },
                    _ => return unknown("argument"),
                }
            }
        })
    }

    fn word(&mut self, w: &Word) -> Result<Value, String> {
        match w {
            Word::Braced(s) => Ok(Value::s(s)),
            Word::Parts(parts) => self.parts(parts),
        }
    }

    fn parts(&mut self, parts: &[Part]) -> Result<Value, String> {
        if let [single] = parts {
            return match single {
                Part::Lit(s) => Ok(Value::s(s)),
                Part::Var(v) => self.var(v),
                Part::Cmd(c) => self.command(c),
            };
        }
        let mut s = String::new();
        for p in parts {
            let v = match p {
                Part::Lit(l) => Value::s(l),
                Part::Var(v) => self.var(v)?,
                Part::Cmd(c) => self.command(c)?,
            };
            s.push_str(&self.text(&v));
        }
        Ok(Value::Str(s))
    }

    fn var(&self, name: &str) -> Result<Value, String> {
        self.vars.get(name).cloned().ok_or_else(|| format!("unbound variable `{}`", name))
    }

    fn command(&mut self, words: &[Word]) -> Result<Value, String> {
        let Some(first) = words.first() else { return Ok(Value::empty()) };
        if let Some(name) = literal(first) {
            match name {
                "set" => {
                    let var = match words.get(1).map(|w| self.word(w)).transpose()? {
                        Some(v) => self.text(&v),
                        None => return Err("`set` needs a variable name".into()),
                    };
                    return match words.get(2) {
                        Some(w) => {
                            let v = self.word(w)?;
                            self.vars.insert(var, v.clone());
                            Ok(v)
                        }
                        None => self.var(&var),
                    };
                }
                "foreach" => {
                    let [_, var, list, Word::Braced(body)] = words else {
                        return Err("usage: foreach var list {body}".into());
                    };
                    let script = parse_braced_script(body)?;
                    let var = self.word(var).map(|v| self.text(&v))?;
                    let items = self.word(list).map(|v| self.list(v))?;
                    for item in items {
                        self.vars.insert(var.clone(), item);
                        for c in &script {
                            self.command(c)?;
                        }
                    }
                    return Ok(Value::empty());
                }
                "if" => {
                    let mut i = 1;
                    loop {
                        let (cond, body) = match (words.get(i), words.get(i + 1)) {
                            (Some(c), Some(Word::Braced(b))) => (c, b),
                            _ => return Err("usage: if cond {body} ?elseif cond {body}? ?else {body}?".into()),
                        };
                        if self.condition(cond)? {
                            for c in &parse_braced_script(body)? {
                                self.command(c)?;
                            }
                            return Ok(Value::empty());
                        }
                        i += 2;
                        match words.get(i).and_then(literal) {
                            None => return Ok(Value::empty()),
                            Some("elseif") => i += 1,
                            Some("else") => {
                                let Some(Word::Braced(b)) = words.get(i + 1) else {
                                    return Err("`else` needs a braced body".into());
                                };
                                for c in &parse_braced_script(b)? {
                                    self.command(c)?;
                                }
                                return Ok(Value::empty());
                            }
                            Some(other) => return Err(format!("unexpected `{}` in if", other)),
                        }
                    }
                }
                "string" => {
                    let op = words.get(1).and_then(literal).ok_or("usage: string op value")?.to_string();
                    let v = words.get(2).ok_or("usage: string op value")?;
                    let s = self.word(v).map(|v| self.text(&v))?;
                    return match op.as_str() {
                        "toupper" => Ok(Value::Str(s.to_uppercase())),
                        "tolower" => Ok(Value::Str(s.to_lowercase())),
                        "length" => Ok(Value::Str(s.chars().count().to_string())),
                        _ => Err(format!("unknown string operation `{}`", op)),
                    };
                }
                "join" => {
                    let l = words.get(1).ok_or("usage: join list ?sep?")?;
                    let items = self.word(l).map(|v| self.list(v))?;
                    let sep = match words.get(2) {
                        Some(w) => self.word(w).map(|v| self.text(&v))?,
                        None => " ".into(),
                    };
                    let texts: Vec<String> = items.iter().map(|i| self.text(i)).collect();
                    return Ok(Value::Str(texts.join(&sep)));
                }
                "llength" => {
                    let l = words.get(1).ok_or("usage: llength list")?;
                    let n = self.word(l).map(|v| self.list(v).len())?;
                    return Ok(Value::Str(n.to_string()));
                }
                "lindex" => {
                    let l = words.get(1).ok_or("usage: lindex list i")?;
                    let items = self.word(l).map(|v| self.list(v))?;
                    let i = words.get(2).ok_or("usage: lindex list i")?;
                    let i: usize = self.word(i).map(|v| self.text(&v))?.parse().map_err(|_| "lindex needs an integer")?;
                    return Ok(items.get(i).cloned().unwrap_or(Value::Str(String::new())));
                }
                _ => return Err(format!("unknown command `{}`", name)),
            }
        }
        let head = self.word(first)?;
        match (head, words.len()) {
            (v, 1) => Ok(v),
            (Value::Obj(o), _) => {
                let method = self.word(&words[1]).map(|v| self.text(&v))?;
                let mut args = Vec::new();
                for w in &words[2..] {
                    args.push(self.word(w)?);
                }
                self.method(o, &method, &args)
            }
            (v, _) => Err(format!("`{}` is not an object", self.text(&v))),
        }
    }

    fn condition(&mut self, w: &Word) -> Result<bool, String> {
        let src = match w {
            Word::Braced(s) => s.clone(),
            other => {
                let v = self.word(other)?;
                return Ok(self.truthy(&v));
            }
        };
        let mut p = ExprParser { lx: Lexer::new(&src) };
        let e = p.or()?;
        p.lx.skip_ws();
        if p.lx.peek().is_some() {
            return Err(format!("trailing input in condition `{}`", src));
        }
        let v = self.expr(&e)?;
        Ok(self.truthy(&v))
    }

    fn expr(&mut self, e: &Expr) -> Result<Value, String> {
        let b = |x: bool| Value::s(if x { "1" } else { "0" });
        Ok(match e {
            Expr::Operand(w) => self.word(w)?,
            Expr::Not(x) => {
                let v = self.expr(x)?;
                b(!self.truthy(&v))
            }
            Expr::Eq(x, y, negate) => {
                let (x, y) = (self.expr(x)?, self.expr(y)?);
                b((self.text(&x) == self.text(&y)) != *negate)
            }
            Expr::And(x, y) => {
                let v = self.expr(x)?;
                if !self.truthy(&v) {
                    b(false)
                } else {
                    let v = self.expr(y)?;
                    b(self.truthy(&v))
                }
            }
            Expr::Or(x, y) => {
                let v = self.expr(x)?;
                if self.truthy(&v) {
                    b(true)
                } else {
                    let v = self.expr(y)?;
                    b(self.truthy(&v))
                }
            }
        })
    }

    fn run(&mut self, nodes: &[Node]) -> Result<(), TemplateError> {
        for n in nodes {
            match n {
                Node::Lit(s) => self.out.push_str(s),
                Node::Subst(parts, pos) => {
                    let v = self.parts(parts).map_err(|m| TemplateError::new(m, *pos))?;
                    let t = self.text(&v);
                    self.out.push_str(&t);
                }
                Node::Cmd(c, pos) => {
                    self.command(c).map_err(|m| TemplateError::new(m, *pos))?;
                }
                Node::Foreach { var, list, body, pos } => {
                    let e = |m| TemplateError::new(m, *pos);
                    let var = self.word(var).map(|v| self.text(&v)).map_err(e)?;
                    let items = self.word(list).map(|v| self.list(v)).map_err(e)?;
                    for item in items {
                        self.vars.insert(var.clone(), item);
                        self.run(body)?;
                    }
                }
                Node::If { branches, pos } => {
                    for (cond, body) in branches {
                        let hit = match cond {
                            Some(c) => self.condition(c).map_err(|m| TemplateError::new(m, *pos))?,
                            None => true,
                        };
                        if hit {
                            self.run(body)?;
                            break;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_braced_script(body: &str) -> Result<Vec<Command>, String> {
    match Lexer::new(body).script()? {
        Parsed::Done(c) => Ok(c),
        Parsed::Open(..) => Err("unbalanced `{` in body".into()),
    }
}

enum Expr {
    Operand(Word),
    Not(Box<Expr>),
    Eq(Box<Expr>, Box<Expr>, bool),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

struct ExprParser {
    lx: Lexer,
}

impl Lexer {
    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.i += 1;
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars.len() >= self.i + n && self.chars[self.i..self.i + n].iter().copied().eq(s.chars()) {
            self.i += n;
            true
        } else {
            false
        }
    }
}

impl ExprParser {
    fn or(&mut self) -> Result<Expr, String> {
        let mut l = self.and()?;
        while self.lx.eat("||") {
            l = Expr::Or(Box::new(l), Box::new(self.and()?));
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Expr, String> {
        let mut l = self.cmp()?;
        while self.lx.eat("&&") {
            l = Expr::And(Box::new(l), Box::new(self.cmp()?));
        }
        Ok(l)
    }

    fn cmp(&mut self) -> Result<Expr, String> {
        let l = self.unary()?;
        if self.lx.eat("==") {
            return Ok(Expr::Eq(Box::new(l), Box::new(self.unary()?), false));
        }
        if self.lx.eat("!=") {
            return Ok(Expr::Eq(Box::new(l), Box::new(self.unary()?), true));
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Expr, String> {
        if self.lx.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.lx.eat("(") {
            let e = self.or()?;
            if !self.lx.eat(")") {
                return Err("missing `)` in condition".into());
            }
            return Ok(e);
        }
        self.lx.skip_ws();
        match self.lx.peek() {
            None => Err("missing operand in condition".into()),
            Some('"') => {
                self.lx.i += 1;
                let parts = self.lx.parts(&['"'], true)?;
                if self.lx.peek() != Some('"') {
                    return Err("unterminated string in condition".into());
                }
                self.lx.i += 1;
                Ok(Expr::Operand(Word::Parts(parts)))
            }
            Some('{') => match self.lx.braced()? {
                Some(s) => Ok(Expr::Operand(Word::Braced(s))),
                None => Err("unbalanced `{` in condition".into()),
            },
            Some(_) => {
                let parts = self.lx.parts(&[' ', '\t', '\n', '=', '!', '&', '|', '(', ')'], false)?;
                if parts.is_empty() {
                    return Err("missing operand in condition".into());
                }
                Ok(Expr::Operand(Word::Parts(parts)))
            }
        }
    }
}

/// Expands `template` for one component of `model`.
///
/// Bindings: `$component` is the component object, `$comp` its name in lower
/// case and `$COMP` in upper case.
pub fn render(template: &Template, model: &SystemModel, component: &str) -> Result<String, TemplateError> {
    let ci = model
        .component_index(component)
        .ok_or_else(|| TemplateError::new(format!("unknown component `{}`", component), Pos::new(1, 1)))?;
    let nodes = build(template)?;
    let mut it = Interp { model, vars: HashMap::new(), out: String::new() };
    it.vars.insert("component".into(), Value::Obj(Obj::Component(ci)));
    it.vars.insert("comp".into(), Value::s(component.to_lowercase()));
    it.vars.insert("COMP".into(), Value::s(component.to_uppercase()));
    it.run(&nodes)?;
    Ok(it.out)
}
