//! Difference-bound matrices over integer clocks.
//!
//! Entry `(i, j)` bounds `x_i - x_j`; index 0 is the constant-zero reference
//! clock. Bounds are encoded as `(value << 1) | nonstrict`, so `<= 3` is
//! `7`, `< 3` is `6` and the encoded order matches bound tightness.

use std::fmt;

pub type Raw = i32;

pub const INF: Raw = i32::MAX;
pub const LE_ZERO: Raw = 1;

#[inline]
pub fn le(v: i32) -> Raw {
    (v << 1) | 1
}

#[inline]
pub fn lt(v: i32) -> Raw {
    v << 1
}

#[inline]
pub fn value(b: Raw) -> i32 {
    b >> 1
}

#[inline]
pub fn is_strict(b: Raw) -> bool {
    b & 1 == 0
}

#[inline]
pub fn add(a: Raw, b: Raw) -> Raw {
    if a == INF || b == INF {
        INF
    } else {
        (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)
    }
}

/// Negation of a bound: `x - y <= v` becomes `y - x < -v`.
#[inline]
pub fn complement(b: Raw) -> Raw {
    if b == INF {
        INF
    } else {
        // (v, <=) -> (-v, <) and (v, <) -> (-v, <=)
        ((-(b >> 1)) << 1) | ((b & 1) ^ 1)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    n: usize,
    m: Vec<Raw>,
}

impl Dbm {
    /// Zone where every one of `clocks` clocks equals zero.
    pub fn zero(clocks: usize) -> Self {
        let n = clocks + 1;
        Dbm { n, m: vec![LE_ZERO; n * n] }
    }

    /// All non-negative valuations.
    pub fn universe(clocks: usize) -> Self {
        let n = clocks + 1;
        let mut m = vec![INF; n * n];
        for i in 0..n {
            m[i * n + i] = LE_ZERO;
            m[i] = LE_ZERO;
        }
        Dbm { n, m }
    }

    /// Number of matrix rows (clocks + 1).
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Raw {
        self.m[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, b: Raw) {
        self.m[i * self.n + j] = b;
    }

    pub fn is_empty(&self) -> bool {
        self.get(0, 0) < LE_ZERO
    }

    fn mark_empty(&mut self) {
        self.m[0] = lt(0) - 2;
    }

    /// Floyd–Warshall closure. Returns `false` (and marks the zone empty)
    /// on a negative cycle.
    pub fn canonicalize(&mut self) -> bool {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik == INF {
                    continue;
                }
                for j in 0..n {
                    let c = add(ik, self.m[k * n + j]);
                    if c < self.m[i * n + j] {
                        self.m[i * n + j] = c;
                    }
                }
            }
        }
        for i in 0..n {
            if self.m[i * n + i] < LE_ZERO {
                self.mark_empty();
                return false;
            }
        }
        true
    }

    /// Delay: remove upper bounds of all clocks.
    pub fn up(&mut self) {
        for i in 1..self.n {
            self.set(i, 0, INF);
        }
    }

    /// Past: relax lower bounds to zero while keeping differences.
    pub fn down(&mut self) {
        let n = self.n;
        for j in 1..n {
            let mut b = LE_ZERO;
            for i in 1..n {
                let v = self.get(i, j);
                if v < b {
                    b = v;
                }
            }
            self.set(0, j, b);
        }
    }

    /// Intersects with `x_i - x_j ⊲ b` and restores canonical form in
    /// O(n²). Returns `false` if the result is empty.
    pub fn constrain(&mut self, i: usize, j: usize, b: Raw) -> bool {
        if self.is_empty() {
            return false;
        }
        if b >= self.get(i, j) {
            return true;
        }
        if add(self.get(j, i), b) < LE_ZERO {
            self.mark_empty();
            return false;
        }
        self.set(i, j, b);
        let n = self.n;
        for k in 0..n {
            let ki = self.get(k, i);
            if ki == INF {
                continue;
            }
            let kij = add(ki, b);
            for l in 0..n {
                let c = add(kij, self.get(j, l));
                if c < self.get(k, l) {
                    self.set(k, l, c);
                }
            }
        }
        true
    }

    /// `x <= v` (or `<` when `strict`).
    pub fn constrain_upper(&mut self, x: usize, v: i32, strict: bool) -> bool {
        self.constrain(x, 0, if strict { lt(v) } else { le(v) })
    }

    /// `x >= v` (or `>` when `strict`).
    pub fn constrain_lower(&mut self, x: usize, v: i32, strict: bool) -> bool {
        self.constrain(0, x, if strict { lt(-v) } else { le(-v) })
    }

    pub fn reset(&mut self, x: usize, v: i32) {
        let n = self.n;
        for j in 0..n {
            if j != x {
                let a = add(le(v), self.get(0, j));
                let b = add(self.get(j, 0), le(-v));
                self.set(x, j, a);
                self.set(j, x, b);
            }
        }
        self.set(x, x, LE_ZERO);
    }

    /// Forget every constraint on `x` except `x >= 0`.
    pub fn free(&mut self, x: usize) {
        let n = self.n;
        for j in 0..n {
            if j != x {
                self.set(x, j, INF);
                let b = self.get(j, 0);
                self.set(j, x, b);
            }
        }
        self.set(0, x, LE_ZERO);
        self.set(x, x, LE_ZERO);
    }

    /// `self ⊇ other` (both canonical).
    pub fn includes(&self, other: &Dbm) -> bool {
        if other.is_empty() {
            return true;
        }
        if self.is_empty() {
            return false;
        }
        self.m.iter().zip(&other.m).all(|(a, b)| a >= b)
    }

    /// Intersection (canonical result).
    pub fn intersect(&mut self, other: &Dbm) -> bool {
        for k in 0..self.m.len() {
            if other.m[k] < self.m[k] {
                self.m[k] = other.m[k];
            }
        }
        self.canonicalize()
    }

    /// Classic maximal-constant extrapolation (Extra_M). `max[i]` is the
    /// largest constant clock `i` is compared with; index 0 is ignored.
    pub fn extrapolate(&mut self, max: &[i32]) {
        let n = self.n;
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let b = self.get(i, j);
                if b == INF {
                    continue;
                }
                if i > 0 && b > le(max[i]) {
                    self.set(i, j, INF);
                    changed = true;
                } else if j > 0 && b < lt(-max[j]) {
                    self.set(i, j, lt(-max[j]));
                    changed = true;
                }
            }
        }
        if changed {
            self.canonicalize();
        }
    }

    /// Upper bound of clock `x`, `None` if unbounded.
    pub fn upper(&self, x: usize) -> Option<(i32, bool)> {
        let b = self.get(x, 0);
        (b != INF).then(|| (value(b), is_strict(b)))
    }

    /// Lower bound of clock `x` as `(value, strict)`.
    pub fn lower(&self, x: usize) -> (i32, bool) {
        let b = self.get(0, x);
        (-value(b), is_strict(b))
    }

    /// Membership of an integer valuation (`vals[0]` is ignored).
    pub fn contains(&self, vals: &[i64]) -> bool {
        if self.is_empty() {
            return false;
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let b = self.get(i, j);
                if b == INF {
                    continue;
                }
                let d = vals[i] - vals[j];
                let v = value(b) as i64;
                if d > v || (d == v && is_strict(b)) {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("Dbm(empty)");
        }
        let mut parts = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let b = self.get(i, j);
                if i == j || b == INF {
                    continue;
                }
                let name = |k: usize| if k == 0 { "0".to_string() } else { format!("x{}", k) };
                parts.push(format!("{}-{}{}{}", name(i), name(j), if is_strict(b) { "<" } else { "<=" }, value(b)));
            }
        }
        write!(f, "Dbm({})", parts.join(", "))
    }
}
