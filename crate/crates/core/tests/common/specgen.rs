//! Random component specifications and the print/parse round trip.

use codelv::spec_ast::{parse_component, pretty_print};
use proptest::prelude::*;
use std::fmt::Write;

pub fn round_trip(src: &str) -> Result<(), String> {
    let ast = parse_component(src).map_err(|e| format!("{:?}", e))?;
    let printed = pretty_print(&ast);
    let again = parse_component(&printed).map_err(|e| format!("re-parse: {:?}\n{}", e, printed))?;
    if again != ast {
        return Err(format!("tree changed\n{}", printed));
    }
    if pretty_print(&again) != printed {
        return Err("printing is not stable".into());
    }
    Ok(())
}

pub fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

/// A duration as written, with its value in microseconds.
fn duration() -> impl Strategy<Value = (String, u32)> {
    prop_oneof![
        (0u32..5000).prop_map(|v| (format!("{}us", v), v)),
        (1u32..20).prop_map(|v| (format!("{} ms", v), v * 1000)),
        (1u32..9).prop_map(|v| (format!("0.{}ms", v), v * 100)),
    ]
}

#[derive(Clone, Debug)]
struct CodelText {
    args: Vec<(u8, usize)>,
    wcet: Option<String>,
    min: Option<String>,
    is_async: bool,
    yields: Vec<(bool, usize)>,
    ether: bool,
}

fn codel_text() -> impl Strategy<Value = CodelText> {
    (
        prop::collection::vec((0u8..3, 0usize..6), 0..4),
        prop::option::of((duration(), prop::option::of(0u32..=100))),
        any::<bool>(),
        prop::collection::vec((any::<bool>(), 0usize..3), 0..3),
        any::<bool>(),
    )
        .prop_map(|(args, timing, is_async, yields, ether)| {
            let wcet = timing.as_ref().map(|((w, _), _)| w.clone());
            let min = timing.and_then(|((_, us), pct)| pct.map(|p| format!("{}us", us * p / 100)));
            CodelText { args, wcet, min, is_async, yields, ether }
        })
}

const STATES: [&str; 3] = ["start", "run", "stop"];
const NAMES: [&str; 6] = ["f0", "f1", "p0", "p1", "x", "::ids"];

fn codel_line(c: &CodelText, state: Option<&str>, function: &str, fsm: bool) -> String {
    let mut s = String::new();
    if c.is_async && fsm {
        s.push_str("async ");
    }
    s.push_str("codel");
    if let Some(st) = state {
        let _ = write!(s, "<{}>", st);
    }
    let args: Vec<String> = c.args.iter().map(|(d, n)| format!("{} {}", ["in", "out", "inout"][*d as usize], NAMES[*n])).collect();
    let _ = write!(s, " {}({})", function, args.join(", "));
    if fsm {
        let mut ys: Vec<String> =
            c.yields.iter().map(|(p, k)| format!("{}{}", if *p { "pause::" } else { "" }, STATES[*k])).collect();
        ys.dedup();
        if c.ether || ys.is_empty() {
            ys.push("ether".into());
        }
        let _ = write!(s, " yield {}", ys.join(", "));
    }
    match (&c.wcet, &c.min) {
        (Some(w), Some(m)) => {
            let _ = write!(s, " wcet {} min {}", w, m);
        }
        (Some(w), None) => {
            let _ = write!(s, " wcet {}", w);
        }
        _ => {}
    }
    s.push(';');
    s
}

#[derive(Clone, Debug)]
struct ServiceText {
    kind: u8,
    doc: Option<String>,
    args: Vec<(u8, usize)>,
    validate: Option<CodelText>,
    codels: Vec<CodelText>,
    interrupts: bool,
    throws: bool,
}

fn service_text() -> impl Strategy<Value = ServiceText> {
    (
        0u8..3,
        prop::option::of("[a-z \"\\\\]{0,12}"),
        prop::collection::vec((0u8..3, 0usize..2), 0..3),
        prop::option::of(codel_text()),
        prop::collection::vec(codel_text(), 1..=3),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(kind, doc, args, validate, codels, interrupts, throws)| ServiceText {
            kind,
            doc,
            args,
            validate,
            codels,
            interrupts,
            throws,
        })
}

#[derive(Clone, Debug)]
pub struct SpecText {
    ports: Vec<bool>,
    periods: Vec<Option<String>>,
    permanent: Vec<Vec<CodelText>>,
    services: Vec<ServiceText>,
}

pub fn spec_text() -> impl Strategy<Value = SpecText> {
    (
        prop::collection::vec(any::<bool>(), 0..3),
        prop::collection::vec(prop::option::of(duration().prop_filter_map("positive", |(d, us)| (us > 0).then_some(d))), 0..3),
        prop::collection::vec(prop::collection::vec(codel_text(), 0..3), 3),
        prop::collection::vec(service_text(), 0..4),
    )
        .prop_map(|(ports, periods, permanent, services)| SpecText { ports, periods, permanent, services })
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl SpecText {
    pub fn source(&self) -> String {
        let mut s = String::from("/* generated */\ncomponent gen {\n");
        for (i, out) in self.ports.iter().enumerate() {
            let _ = writeln!(s, "  port {} ::pkg::t{} p{};", if *out { "out" } else { "in" }, i, i);
        }
        s.push_str("  exception e0, e1;\n  ids { double f0; int f1; };\n");
        for (t, period) in self.periods.iter().enumerate() {
            let _ = writeln!(s, "  task t{} {{", t);
            if let Some(p) = period {
                let _ = writeln!(s, "    period {};", p);
            }
            for (k, c) in self.permanent[t].iter().enumerate() {
                let _ = writeln!(s, "    {}", codel_line(c, Some(STATES[k]), &format!("t{}c{}", t, k), true));
            }
            s.push_str("  };\n");
        }
        for (i, svc) in self.services.iter().enumerate() {
            // an activity needs a task to run in
            let k = if svc.kind == 2 && self.periods.is_empty() { 1 } else { svc.kind };
            let kind = ["attribute", "function", "activity"][k as usize];
            let mut seen = std::collections::BTreeSet::new();
            let args: Vec<String> = svc
                .args
                .iter()
                .filter(|(_, n)| seen.insert(*n))
                .map(|(d, n)| match k {
                    0 => format!("{} f{}", ["in", "out", "inout"][*d as usize], n),
                    _ => format!("{} double a{}", ["in", "out", "inout"][*d as usize], i * 10 + n),
                })
                .collect();
            if k == 0 {
                let _ = writeln!(s, "  attribute s{}({});", i, args.join(", "));
                continue;
            }
            let _ = writeln!(s, "  {} s{}({}) {{", kind, i, args.join(", "));
            if let Some(d) = &svc.doc {
                let _ = writeln!(s, "    doc \"{}\";", escape(d));
            }
            if k == 2 {
                let _ = writeln!(s, "    task t0;\n    local int tmp{};", i);
            }
            if let Some(v) = &svc.validate {
                let line = codel_line(v, None, &format!("check{}", i), false);
                let _ = writeln!(s, "    {}", line.replacen("codel", "validate", 1));
            }
            if k == 1 {
                let _ = writeln!(s, "    {}", codel_line(&svc.codels[0], None, &format!("body{}", i), false));
            } else {
                for (k, c) in svc.codels.iter().enumerate() {
                    let _ = writeln!(s, "    {}", codel_line(c, Some(STATES[k]), &format!("s{}c{}", i, k), true));
                }
            }
            if svc.throws {
                s.push_str("    throw e0, e1;\n");
            }
            if svc.interrupts {
                let _ = writeln!(s, "    interrupt s{};", i);
            }
            s.push_str("  };\n");
        }
        s.push_str("};\n");
        s
    }
}

/// Every `.gen` file under `dir`, sorted.
pub fn gen_files(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    walk(dir).into_iter().filter(|p| p.extension().is_some_and(|e| e == "gen")).collect()
}
