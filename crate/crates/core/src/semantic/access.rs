//! Per-codel resource access sets.

use super::{ResId, ResourceAccessSet};
use crate::spec_ast::{ArgDir, ArgPath, CodelDecl, PortDir};
use std::collections::{BTreeSet, HashMap};

/// Names visible to a codel, in lookup order: service arguments and locals
/// (never resources), then IDS fields, then ports.
pub struct Scope<'a> {
    pub locals: BTreeSet<String>,
    pub ids: &'a HashMap<String, ResId>,
    pub ports: &'a HashMap<String, (ResId, PortDir)>,
    pub all_ids: &'a [ResId],
}

/// `in` reads, `out` writes, `inout` does both. Fails on names that resolve
/// nowhere and on writes to in-ports.
pub fn codel_resources(codel: &CodelDecl, scope: &Scope) -> Result<ResourceAccessSet, String> {
    let mut acc = ResourceAccessSet::default();
    for arg in &codel.args {
        let targets: Vec<ResId> = match &arg.path {
            ArgPath::AllIds => scope.all_ids.to_vec(),
            ArgPath::Name(n) if scope.locals.contains(n) => continue,
            ArgPath::Name(n) => {
                if let Some(&r) = scope.ids.get(n) {
                    vec![r]
                } else if let Some(&(r, dir)) = scope.ports.get(n) {
                    if dir == PortDir::In && arg.dir != ArgDir::In {
                        return Err(format!("codel `{}` writes in-port `{}`", codel.function, n));
                    }
                    vec![r]
                } else {
                    return Err(format!("unresolved reference `{}` in codel `{}`", n, codel.function));
                }
            }
        };
        for r in targets {
            if matches!(arg.dir, ArgDir::In | ArgDir::Inout) {
                acc.reads.insert(r);
            }
            if matches!(arg.dir, ArgDir::Out | ArgDir::Inout) {
                acc.writes.insert(r);
            }
        }
    }
    Ok(acc)
}
