//! C stubs for every codel function of a component.
//!
//! Control-task codels (validate codels, function bodies) go to
//! `src/<comp>_codels.c`; permanent and activity codels of a task go to
//! `src/<comp>_<task>_codels.c`. A function used by several services gets a
//! single stub, in the file of its first use.

use crate::semantic::{CodelId, CodelOwner, CodelRole, SystemModel};
use crate::spec_ast::{ArgDir, ArgPath, CodelDecl, YieldTarget};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

struct Stub {
    function: String,
    users: Vec<String>,
    yields: BTreeSet<String>,
    wcet: u64,
    params: Vec<String>,
    is_validate: bool,
    is_body: bool,
}

pub fn generate_skeleton(model: &SystemModel, component: usize) -> Vec<(String, String)> {
    let comp = &model.components[component];
    let spec = &comp.spec;
    let name = &spec.name;
    let control_file = format!("src/{}_codels.c", name);
    let mut files: BTreeMap<String, Vec<Stub>> = BTreeMap::new();
    files.insert(control_file.clone(), Vec::new());
    let mut seen: BTreeMap<String, (String, usize)> = BTreeMap::new();

    let mut order: Vec<CodelId> = Vec::new();
    for t in &comp.task_codels {
        order.extend(t);
    }
    for sc in &comp.service_codels {
        order.extend(sc.validate);
        order.extend(&sc.fsm);
        order.extend(sc.body);
    }
    order.sort_unstable();

    for id in order {
        let info = &model.codels[id];
        let Some(function) = info.function.clone() else { continue };
        let (file, user, decl, scope): (String, String, &CodelDecl, Option<usize>) = match info.owner {
            CodelOwner::Task(t) => {
                let i = comp.task_codels[t].iter().position(|&x| x == id).unwrap();
                let task = &spec.tasks[t];
                (format!("src/{}_{}_codels.c", name, task.name), format!("task {}", task.name), &task.codels[i], None)
            }
            CodelOwner::Service(s) => {
                let svc = &spec.services[s];
                let sc = &comp.service_codels[s];
                let decl = if sc.validate == Some(id) {
                    svc.validate.as_ref().unwrap()
                } else if let Some(i) = sc.fsm.iter().position(|&x| x == id) {
                    &svc.codels[i]
                } else {
                    &svc.codels[0]
                };
                let file = match comp.service_task[s] {
                    Some(t) if info.role != CodelRole::Validate => format!("src/{}_{}_codels.c", name, spec.tasks[t].name),
                    _ => control_file.clone(),
                };
                (file, format!("{} {}", svc.kind.as_str(), svc.name), decl, Some(s))
            }
        };
        let yields: BTreeSet<String> = info
            .yields
            .iter()
            .map(|y| match y {
                YieldTarget::Ether => format!("{}_ether", name),
                YieldTarget::State { name: st, pause: true } => format!("{}_pause_{}", name, st),
                YieldTarget::State { name: st, .. } => format!("{}_{}", name, st),
            })
            .collect();
        if let Some((f, idx)) = seen.get(&function) {
            let stub = &mut files.get_mut(f).unwrap()[*idx];
            if !stub.users.contains(&user) {
                stub.users.push(user);
            }
            stub.yields.extend(yields);
            stub.wcet = stub.wcet.max(info.wcet_us);
            continue;
        }
        let params = decl.args.iter().map(|a| param(model, component, scope, a.dir, &a.path)).collect();
        let stubs = files.entry(file.clone()).or_default();
        stubs.push(Stub {
            function: function.clone(),
            users: vec![user],
            yields,
            wcet: info.wcet_us,
            params,
            is_validate: info.role == CodelRole::Validate,
            is_body: info.role == CodelRole::Body,
        });
        seen.insert(function, (file, stubs.len() - 1));
    }

    files
        .into_iter()
        .map(|(file, stubs)| {
            let mut out = String::new();
            let _ = writeln!(out, "/* Codel skeletons of component {}. */\n", name);
            let _ = writeln!(out, "#include \"ac{}.h\"\n#include \"{}_c_types.h\"", name, name);
            if file == control_file {
                for s in spec.services.iter().filter(|s| s.implicit) {
                    let _ = writeln!(out, "\n/* predefined service {}: provided by the component runtime */", s.name);
                }
            }
            for s in stubs {
                out.push('\n');
                let _ = writeln!(out, "/** Codel {} of {}.", s.function, s.users.join(", "));
                out.push_str(" *\n");
                let ret = if s.is_validate || s.is_body {
                    out.push_str(" * Returns genom_ok.\n");
                    "genom_ok".to_string()
                } else {
                    let ys: Vec<&str> = s.yields.iter().map(|y| y.as_str()).collect();
                    let _ = writeln!(out, " * Yields to {}.", ys.join(", "));
                    ys.first().map(|y| y.to_string()).unwrap_or_else(|| format!("{}_ether", name))
                };
                let _ = writeln!(out, " * WCET {}us.\n */", s.wcet);
                let params = if s.params.is_empty() { "void".to_string() } else { s.params.join(", ") };
                let _ = writeln!(out, "genom_event\n{}({})\n{{\n  /* skeleton sample: insert your code */\n  return {};\n}}", s.function, params, ret);
            }
            (file, out)
        })
        .collect()
}

fn param(model: &SystemModel, component: usize, service: Option<usize>, dir: ArgDir, path: &ArgPath) -> String {
    let spec = &model.components[component].spec;
    let qual = if dir == ArgDir::In { "const " } else { "" };
    let (ty, n) = match path {
        ArgPath::AllIds => (format!("{}_ids", spec.name), "ids".to_string()),
        ArgPath::Name(n) => {
            let svc = service.map(|s| &spec.services[s]);
            let ty = svc
                .and_then(|s| s.args.iter().find(|a| &a.name == n).and_then(|a| a.type_name.clone()))
                .or_else(|| svc.and_then(|s| s.locals.iter().find(|l| &l.name == n).map(|l| l.type_name.clone())))
                .or_else(|| spec.ids.iter().find(|f| &f.name == n).map(|f| f.type_name.clone()))
                .or_else(|| spec.ports.iter().find(|p| &p.name == n).map(|p| p.type_name.clone()))
                .unwrap_or_else(|| "void".into());
            (ty.trim_start_matches("::").replace("::", "_"), n.clone())
        }
    };
    format!("{}{} *{}", qual, ty, n)
}
