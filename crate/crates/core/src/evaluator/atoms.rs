//! Team atoms on compiled teams. Projections are packed into integer keys
//! and looked up in reusable epoch-stamped tables, so checking an atom does
//! not allocate.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::compile::{project, CModel, Compiled, Op, Row, MAX_VARS};
use crate::structures::Element;

/// Key spaces larger than this fall back to hashing.
const MAX_KEYS: usize = 1 << 16;

#[derive(Default)]
pub(crate) struct Scratch {
    epoch: u32,
    stamp: [Vec<u32>; 4],
    val: [Vec<u64>; 4],
    keys: Vec<usize>,
    /// Per-`cond` bitsets for `small_indep`.
    small: Vec<[u64; 3]>,
}

impl Scratch {
    fn begin(&mut self, sizes: &[usize]) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            for s in &mut self.stamp {
                s.iter_mut().for_each(|x| *x = 0);
            }
            self.epoch = 1;
        }
        for (t, &size) in sizes.iter().enumerate() {
            if self.stamp[t].len() < size {
                self.stamp[t].resize(size, 0);
                self.val[t].resize(size, 0);
            }
        }
        self.keys.clear();
    }

    /// Marks `key` in table `t`; true if it was new. New entries start at 0.
    #[inline]
    fn insert(&mut self, t: usize, key: usize) -> bool {
        if self.stamp[t][key] == self.epoch {
            return false;
        }
        self.stamp[t][key] = self.epoch;
        self.val[t][key] = 0;
        true
    }

    fn contains(&self, t: usize, key: usize) -> bool {
        self.stamp[t][key] == self.epoch
    }
}

fn space(n: usize, len: usize) -> Option<usize> {
    n.checked_pow(len as u32).filter(|&s| s <= MAX_KEYS)
}

#[inline]
fn key(r: &Row, slots: &[u8], n: usize) -> usize {
    // Slots are below the row width; the mask lets the bounds check go.
    let at = |s: u8| r[s as usize % MAX_VARS] as usize;
    match *slots {
        [] => 0,
        [a] => at(a),
        [a, b] => at(a) * n + at(b),
        _ => slots.iter().fold(0, |acc, &s| acc * n + at(s)),
    }
}

fn functional(s: &mut Scratch, rows: &[Row], ante: &[u8], y: u8, n: usize) -> Option<bool> {
    let keys = space(n, ante.len())?;
    if keys <= 64 {
        const NONE: u8 = u8::MAX;
        let mut val = [NONE; 64];
        for r in rows {
            let k = key(r, ante, n) % 64;
            let v = r[y as usize % MAX_VARS];
            if val[k] != v && val[k] != NONE {
                return Some(false);
            }
            val[k] = v;
        }
        return Some(true);
    }
    s.begin(&[keys]);
    for r in rows {
        let k = key(r, ante, n);
        let v = r[y as usize] as u64;
        if s.insert(0, k) {
            s.val[0][k] = v;
        } else if s.val[0][k] != v {
            return Some(false);
        }
    }
    Some(true)
}

/// Independence with every per-`cond` table packed into one word.
fn small_indep(
    s: &mut Scratch,
    rows: &[Row],
    (xs, cond, ys): (&[u8], &[u8], &[u8]),
    n: usize,
    nz: usize,
    ny: usize,
) -> bool {
    let bits = &mut s.small;
    bits.clear();
    bits.resize(nz, [0; 3]);
    let mut used = 0u64;
    for r in rows {
        let z = key(r, cond, n) % nz;
        let (kx, ky) = (key(r, xs, n), key(r, ys, n));
        used |= 1 << z;
        let b = &mut bits[z];
        b[0] |= 1 << (kx % 64);
        b[1] |= 1 << (ky % 64);
        b[2] |= 1 << ((kx * ny + ky) % 64);
    }
    let mut left = used;
    while left != 0 {
        let b = &bits[left.trailing_zeros() as usize % nz];
        if b[0].count_ones() * b[1].count_ones() != b[2].count_ones() {
            return false;
        }
        left &= left - 1;
    }
    true
}

/// Fast path; `None` when the key space is too large.
pub(crate) fn fast(s: &mut Scratch, c: &Compiled, id: usize, m: &CModel, rows: &[Row]) -> Option<bool> {
    let n = m.n;
    match &c.nodes[id].op {
        Op::Dep(ante, y) => functional(s, rows, ante, *y, n),
        Op::General { q, tuples } => {
            let k = c.quants[*q].dependence_arity()?;
            let t = &tuples[0];
            functional(s, rows, &t[..k - 1], t[k - 1], n)
        }
        Op::Inc(xs, ys) | Op::Exc(xs, ys) => {
            let inc = matches!(c.nodes[id].op, Op::Inc(..));
            s.begin(&[space(n, ys.len())?]);
            for r in rows {
                s.insert(0, key(r, ys, n));
            }
            Some(rows.iter().all(|r| s.contains(0, key(r, xs, n)) == inc))
        }
        Op::Indep { xs, cond, ys } => {
            let (nx, ny) = (space(n, xs.len())?, space(n, ys.len())?);
            let nz = space(n, cond.len())?;
            if nz <= 64 && nx * ny <= 64 {
                return Some(small_indep(s, rows, (xs, cond, ys), n, nz, ny));
            }
            let cap = |v: usize| (v <= MAX_KEYS).then_some(v);
            s.begin(&[cap(nz * nx)?, cap(nz * ny)?, cap(nz * nx * ny)?, nz]);
            // Per value of `cond`: distinct x-values, y-values, xy-pairs.
            const X: u64 = 1;
            const Y: u64 = 1 << 21;
            const XY: u64 = 1 << 42;
            for r in rows {
                let z = key(r, cond, n);
                let (kx, ky) = (key(r, xs, n), key(r, ys, n));
                if s.insert(3, z) {
                    s.keys.push(z);
                }
                if s.insert(0, z * nx + kx) {
                    s.val[3][z] += X;
                }
                if s.insert(1, z * ny + ky) {
                    s.val[3][z] += Y;
                }
                if s.insert(2, (z * nx + kx) * ny + ky) {
                    s.val[3][z] += XY;
                }
            }
            let mask = (1 << 21) - 1;
            Some(s.keys.iter().all(|&z| {
                let v = s.val[3][z];
                (v & mask) * (v >> 21 & mask) == v >> 42
            }))
        }
        Op::Induced { q, ys, x } => {
            s.begin(&[space(n, ys.len())?]);
            for r in rows {
                let k = key(r, ys, n);
                if s.insert(0, k) {
                    s.keys.push(k);
                }
                s.val[0][k] |= 1 << r[*x as usize];
            }
            let class = m.class(*q, c);
            Some(s.keys.iter().all(|&k| class.contains(s.val[0][k])))
        }
        _ => None,
    }
}

/// Reference implementation by hashing projections.
pub(crate) fn slow(c: &Compiled, id: usize, m: &CModel, rows: &[Row]) -> bool {
    match &c.nodes[id].op {
        Op::Dep(ante, y) => {
            let mut seen: HashMap<Vec<u8>, u8> = HashMap::new();
            rows.iter()
                .all(|r| *seen.entry(project(r, ante)).or_insert(r[*y as usize]) == r[*y as usize])
        }
        Op::Inc(xs, ys) => {
            let right: HashSet<Vec<u8>> = rows.iter().map(|r| project(r, ys)).collect();
            rows.iter().all(|r| right.contains(&project(r, xs)))
        }
        Op::Exc(xs, ys) => {
            let right: HashSet<Vec<u8>> = rows.iter().map(|r| project(r, ys)).collect();
            rows.iter().all(|r| !right.contains(&project(r, xs)))
        }
        Op::Indep { xs, cond, ys } => {
            let present: HashSet<(Vec<u8>, Vec<u8>, Vec<u8>)> = rows
                .iter()
                .map(|r| (project(r, xs), project(r, cond), project(r, ys)))
                .collect();
            let mut by_cond: BTreeMap<Vec<u8>, (BTreeSet<Vec<u8>>, BTreeSet<Vec<u8>>)> = BTreeMap::new();
            for r in rows {
                let e = by_cond.entry(project(r, cond)).or_default();
                e.0.insert(project(r, xs));
                e.1.insert(project(r, ys));
            }
            by_cond.into_iter().all(|(z, (xv, yv))| {
                xv.iter().all(|a| {
                    yv.iter()
                        .all(|b| present.contains(&(a.clone(), z.clone(), b.clone())))
                })
            })
        }
        Op::Induced { q, ys, x } => {
            let class = m.class(*q, c);
            let mut groups: HashMap<Vec<u8>, u64> = HashMap::new();
            for r in rows {
                *groups.entry(project(r, ys)).or_default() |= 1 << r[*x as usize];
            }
            groups.values().all(|&mask| class.contains(mask))
        }
        Op::General { q, tuples } => {
            let quant = &c.quants[*q];
            if let Some(k) = quant.dependence_arity() {
                let t = &tuples[0];
                let mut seen: HashMap<Vec<u8>, u8> = HashMap::new();
                return rows.iter().all(|r| {
                    let y = r[t[k - 1] as usize];
                    *seen.entry(project(r, &t[..k - 1])).or_insert(y) == y
                });
            }
            let rels: Vec<BTreeSet<Vec<Element>>> = tuples
                .iter()
                .map(|tup| {
                    rows.iter()
                        .map(|r| tup.iter().map(|&s| m.elements[r[s as usize] as usize]).collect())
                        .collect()
                })
                .collect();
            quant
                .member(&m.elements, &rels)
                .expect("type checked at compile time")
        }
        other => unreachable!("not an atom: {other:?}"),
    }
}
