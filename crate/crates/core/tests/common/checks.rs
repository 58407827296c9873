//! Verifier properties shared by the property suites and the acceptance run.

use super::gen::SystemGen;
use codelv::semantic::SystemModel;
use codelv::simulator::replay;
use codelv::spec_ast::{Property, Scenario};
use codelv::tts::{build_tts, default_schedulability, TtsOptions};
use codelv::verifier::{verify, ExploreConfig, Report, Stats, Verdict, VerifyOptions};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const BUDGET: usize = 200_000;

pub fn opts(pinned: bool, workers: usize, subsumption: bool) -> VerifyOptions {
    VerifyOptions {
        explore: ExploreConfig { budget: BUDGET, workers, subsumption, ..Default::default() },
        pinned_durations: pinned,
        ..Default::default()
    }
}

pub fn run(g: &SystemGen, cores: u32, o: &VerifyOptions) -> (SystemModel, Scenario, Vec<Property>, Report) {
    let m = g.model();
    let scn = g.scenario();
    let props = default_schedulability(&m);
    let r = verify(&m, &scn, &props, cores, o).expect("verify");
    (m, scn, props, r)
}

fn without_time(runs: &[Stats]) -> Vec<Stats> {
    runs.iter().cloned().map(|s| Stats { elapsed_ms: 0, ..s }).collect()
}

pub fn verdicts(r: &Report) -> Vec<(String, Verdict)> {
    r.results.iter().map(|p| (p.name.clone(), p.verdict)).collect()
}

pub fn worker_count_is_irrelevant(g: &SystemGen, cores: u32) -> Result<(), TestCaseError> {
    let (_, _, _, one) = run(g, cores, &opts(false, 1, true));
    let (_, _, _, four) = run(g, cores, &opts(false, 4, true));
    prop_assert_eq!(verdicts(&one), verdicts(&four));
    prop_assert_eq!(without_time(&one.runs), without_time(&four.runs));
    Ok(())
}

pub fn counterexamples_replay(g: &SystemGen, cores: u32, pinned: bool) -> Result<(), TestCaseError> {
    let (m, scn, props, r) = run(g, cores, &opts(pinned, 1, true));
    let tts = build_tts(&m, cores, &scn, &TtsOptions { properties: props, pinned_durations: pinned, ..Default::default() }).unwrap();
    for p in r.results.iter().filter(|p| p.verdict == Verdict::Violated) {
        let w = p.witness.as_ref().ok_or_else(|| TestCaseError::fail(format!("no witness for {}\n{}", p.name, g.source())))?;
        let out = replay(&w.trace, &tts).map_err(|e| TestCaseError::fail(format!("{}\n{}", e, g.source())))?;
        prop_assert!(out.confirmed.contains(&p.name));
    }
    Ok(())
}
