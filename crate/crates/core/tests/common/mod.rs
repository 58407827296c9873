//! Shared helpers for integration tests: corpus loading and time scaling.
#![allow(dead_code)]

pub mod checks;
pub mod gen;
pub mod specgen;
pub mod zones;
pub mod oracle;

use codelv::semantic::{parse_wiring, resolve, SystemModel};
use codelv::spec_ast::{parse_component, parse_properties, parse_scenario, Property, Scenario, Timing};
use std::path::PathBuf;

pub fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn read(rel: &str) -> String {
    let p = corpus().join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {}", p.display(), e))
}

pub fn load(files: &[&str], wiring: Option<&str>) -> SystemModel {
    let specs = files.iter().map(|f| parse_component(&read(f)).unwrap_or_else(|e| panic!("{}: {:?}", f, e))).collect();
    let conns = wiring.map(|w| parse_wiring(&read(w)).expect("wiring")).unwrap_or_default();
    resolve(specs, &conns).unwrap_or_else(|e| panic!("{:?}", e.diagnostics))
}

pub fn maneuver() -> SystemModel {
    load(&["maneuver.gen"], None)
}

pub fn quadlike() -> SystemModel {
    load(&["quadlike/mk.gen", "quadlike/pom.gen", "quadlike/nhfc.gen"], Some("quadlike/wiring.txt"))
}

pub fn outdoor() -> SystemModel {
    load(
        &["outdoor/robloco.gen", "outdoor/roblaser.gen", "outdoor/robmap.gen", "outdoor/robmotion.gen"],
        Some("outdoor/wiring.txt"),
    )
}

pub fn outdoor_scenario() -> Scenario {
    parse_scenario(&read("outdoor/stop.scn")).expect("scenario")
}

pub fn outdoor_props() -> Vec<Property> {
    parse_properties(&read("outdoor/stop.prop")).expect("properties").properties
}

/// Every duration and period divided by `k` (all must be multiples of it).
pub fn scale_model(model: &SystemModel, k: u64) -> SystemModel {
    let mut m = model.clone();
    let div = |v: u64| {
        assert_eq!(v % k, 0, "{} is not a multiple of {}", v, k);
        v / k
    };
    for c in &mut m.codels {
        c.wcet_us = div(c.wcet_us);
        c.min_us = div(c.min_us);
    }
    for comp in &mut m.components {
        for t in &mut comp.spec.tasks {
            if let Timing::Periodic { period_us } = &mut t.timing {
                *period_us = div(*period_us);
            }
        }
    }
    m
}

pub fn scale_scenario(s: &Scenario, k: u64) -> Scenario {
    let mut s = s.clone();
    for e in &mut s.events {
        e.send_time /= k;
        e.latest /= k;
    }
    s.horizon /= k;
    s
}

/// Compares `actual` with `corpus/golden/<name>`. With `UPDATE_GOLDEN=1`
/// the file is rewritten instead.
pub fn golden(name: &str, actual: &str) -> Result<(), String> {
    let path = corpus().join("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        std::fs::write(&path, actual).map_err(|e| format!("{}: {}", path.display(), e))?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path)
        .map_err(|e| format!("{}: {} (run with UPDATE_GOLDEN=1 to create it)", path.display(), e))?;
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).map_or_else(
            || expected.lines().count().min(actual.lines().count()) + 1,
            |i| i + 1,
        );
        return Err(format!("{} differs from the rendered output from line {}", path.display(), line));
    }
    Ok(())
}
