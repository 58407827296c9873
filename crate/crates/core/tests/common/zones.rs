//! Random zones and the zone-calculus properties checked on them.

use codelv::zone::{is_strict, le, lt, value, Dbm, INF};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CLOCKS: usize = 3;

#[derive(Clone, Debug)]
pub enum Op {
    Up,
    Reset(usize),
    Free(usize),
    Upper(usize, i32, bool),
    Lower(usize, i32, bool),
    Diff(usize, usize, i32, bool),
}

fn op() -> impl Strategy<Value = Op> {
    let c = 1..=CLOCKS;
    prop_oneof![
        Just(Op::Up),
        c.clone().prop_map(Op::Reset),
        c.clone().prop_map(Op::Free),
        (c.clone(), 0..12i32, any::<bool>()).prop_map(|(x, v, s)| Op::Upper(x, v, s)),
        (c.clone(), 0..12i32, any::<bool>()).prop_map(|(x, v, s)| Op::Lower(x, v, s)),
        (c.clone(), c, -6..6i32, any::<bool>()).prop_map(|(x, y, v, s)| Op::Diff(x, y, v, s)),
    ]
}

fn apply(z: &mut Dbm, op: &Op) {
    match *op {
        Op::Up => z.up(),
        Op::Reset(x) => z.reset(x, 0),
        Op::Free(x) => z.free(x),
        Op::Upper(x, v, s) => {
            z.constrain_upper(x, v, s);
        }
        Op::Lower(x, v, s) => {
            z.constrain_lower(x, v, s);
        }
        Op::Diff(x, y, v, s) if x != y => {
            z.constrain(x, y, if s { lt(v) } else { le(v) });
        }
        Op::Diff(..) => {}
    }
}

/// A zone reached from the origin by a random sequence of operations.
pub fn zone() -> impl Strategy<Value = Dbm> {
    prop::collection::vec(op(), 0..8).prop_map(|ops| {
        let mut z = Dbm::zero(CLOCKS);
        for o in &ops {
            if z.is_empty() {
                break;
            }
            apply(&mut z, o);
        }
        z
    })
}

pub fn nonempty_zone() -> impl Strategy<Value = Dbm> {
    zone().prop_filter("non-empty", |z| !z.is_empty())
}

/// Integer valuations of the clocks in `[0, 14]`, index 0 fixed at 0.
pub fn points() -> impl Iterator<Item = [i64; CLOCKS + 1]> {
    (0..15 * 15 * 15).map(|k| [0, k % 15, (k / 15) % 15, k / 225])
}

/// Bound as (value, strict); `None` is infinity.
pub type B = Option<(i64, bool)>;

pub fn decode(r: i32) -> B {
    (r != INF).then(|| (value(r) as i64, is_strict(r)))
}

fn plus(a: B, b: B) -> B {
    Some((a?.0 + b?.0, a?.1 || b?.1))
}

fn tighter(a: B, b: B) -> bool {
    match (a, b) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some((va, sa)), Some((vb, sb))) => va < vb || (va == vb && sa && !sb),
    }
}

/// Shortest paths over (value, strictness) pairs, independent of the raw
/// encoding. `None` means a negative cycle.
pub fn reference_closure(m: &[Vec<B>]) -> Option<Vec<Vec<B>>> {
    let n = m.len();
    let mut d = m.to_vec();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let c = plus(d[i][k], d[k][j]);
                if tighter(c, d[i][j]) {
                    d[i][j] = c;
                }
            }
        }
    }
    let negative = (0..n).any(|i| tighter(d[i][i], Some((0, false))));
    (!negative).then_some(d)
}

pub fn raw_matrix() -> impl Strategy<Value = Vec<Vec<Option<(i32, bool)>>>> {
    let n = CLOCKS + 1;
    prop::collection::vec(prop::collection::vec(prop::option::weighted(0.6, (-4..10i32, any::<bool>())), n), n)
}

pub fn canonical_form_matches_reference(raw: &[Vec<Option<(i32, bool)>>]) -> Result<(), TestCaseError> {
    let n = CLOCKS + 1;
    let mut z = Dbm::universe(CLOCKS);
    let mut m: Vec<Vec<B>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            let r = raw[i][j].map(|(v, s)| (v as i64, s));
            // clocks are non-negative: row 0 holds lower bounds, never above zero
            let b = match (i, j) {
                _ if i == j => Some((0, false)),
                (0, _) => Some(r.map_or((0, false), |(v, s)| (v.min(0), s && v <= 0))),
                _ => r,
            };
            m[i][j] = b;
            z.set(
                i,
                j,
                match b {
                    None => INF,
                    Some((v, true)) => lt(v as i32),
                    Some((v, false)) => le(v as i32),
                },
            );
        }
    }
    let ok = z.canonicalize();
    match reference_closure(&m) {
        None => prop_assert!(!ok && z.is_empty()),
        Some(d) => {
            prop_assert!(ok);
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(decode(z.get(i, j)), d[i][j], "entry ({}, {})", i, j);
                }
            }
        }
    }
    Ok(())
}

pub fn canonicalize_is_idempotent(z: &Dbm) -> Result<(), TestCaseError> {
    let mut again = z.clone();
    let ok = again.canonicalize();
    prop_assert_eq!(ok, !z.is_empty());
    if ok {
        prop_assert_eq!(&again, z);
    }
    Ok(())
}

pub fn inclusion_is_reflexive_and_sound(a: &Dbm, b: &Dbm) -> Result<(), TestCaseError> {
    prop_assert!(a.includes(a));
    if a.includes(b) {
        for p in points() {
            if b.contains(&p) {
                prop_assert!(a.contains(&p), "{:?}", p);
            }
        }
    }
    let mut both = a.clone();
    if both.intersect(b) {
        prop_assert!(a.includes(&both) && b.includes(&both));
        prop_assert_eq!(a.includes(b), &both == b);
    }
    Ok(())
}

pub fn inclusion_is_transitive(a: &Dbm, b: &Dbm, c: &Dbm) -> Result<(), TestCaseError> {
    let mut ab = a.clone();
    let mut abc = a.clone();
    if ab.intersect(b) && abc.intersect(b) && abc.intersect(c) {
        prop_assert!(ab.includes(&abc) && a.includes(&ab) && a.includes(&abc));
    }
    Ok(())
}

pub fn elapse_is_extensive_and_idempotent(z: &Dbm, d: i64) -> Result<(), TestCaseError> {
    let mut up = z.clone();
    up.up();
    prop_assert!(up.includes(z));
    let mut twice = up.clone();
    twice.up();
    prop_assert_eq!(&twice, &up);
    for p in points().filter(|p| z.contains(p)) {
        let later = [0, p[1] + d, p[2] + d, p[3] + d];
        prop_assert!(up.contains(&later));
    }
    Ok(())
}

pub fn extrapolation_is_extensive(z: &Dbm, max: &[i32]) -> Result<(), TestCaseError> {
    let mut e = z.clone();
    e.extrapolate(max);
    prop_assert!(e.includes(z));
    Ok(())
}
