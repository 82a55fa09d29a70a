//! Incompressible elements.
//!
//! `I_0` is the whole group. An element of length `m` lies in `I_k` when its
//! first-level sections have lengths summing to `m` and each lies in
//! `I_{k−1}` of the next level. Membership is read off the sphere tables of
//! consecutive level classes. Beyond the enumerated radius it is certified
//! through words: a word with `m` positive letters whose sections carry
//! weights `w_i` with `Σ w_i = m` lies in `I_k` with length exactly `m` iff
//! every section lies in `I_{k−1}` with length exactly `w_i`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::{SphereTable, Tables, NONE};
use crate::intern::{StateId, IDENTITY};
use crate::perm::Perm;
use crate::tree::Symbol;

pub const MAX_DEPTH: u32 = 31;
const CERTIFY_DEPTH: usize = 64;

/// `I_k` flags for every enumerated element of every class.
pub struct Incompressibility {
    tables: Tables,
    depth: u32,
    /// Bit `k` of `flags[c][i]` is set iff record `i` of class `c` is in `I_k`.
    flags: Vec<Vec<u32>>,
    /// Record positions of first-level sections, `d` per record.
    kids: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassReport {
    pub class: usize,
    /// `counts[k][n] = |I_k ∩ Ω(n)|`.
    pub counts: Vec<Vec<usize>>,
    /// Least `K*` with `I_{K*}(n) = I_{K*+1}(n)` for every enumerated `n`.
    pub stabilization_depth: Option<u32>,
    pub nested: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IncompressibilityReport {
    pub depth: u32,
    pub max_radius: u32,
    pub classes: Vec<ClassReport>,
}

impl Incompressibility {
    /// Computes `I_0 ⊇ … ⊇ I_depth` on the tables.
    pub fn new(tables: Tables, depth: u32) -> Result<Incompressibility> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidArgument(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        let group = &tables.group;
        let d = group.degree();
        let n_classes = group.num_classes();
        let mut kids = Vec::with_capacity(n_classes);
        let mut additive = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let next = tables.class(group.next_class(c));
            let t = tables.class(c);
            let per: Vec<(Vec<u32>, bool)> = t
                .records()
                .par_iter()
                .map(|r| {
                    let ch = group.store().children(r.state);
                    let pos: Vec<u32> = ch.iter().map(|&s| next.position(s).unwrap_or(NONE)).collect();
                    let ok = pos.iter().all(|&p| p != NONE);
                    let sum: u32 = if ok { pos.iter().map(|&p| next.records()[p as usize].radius).sum() } else { 0 };
                    (pos, ok && sum == r.radius)
                })
                .collect();
            let mut flat = Vec::with_capacity(per.len() * d);
            let mut add = Vec::with_capacity(per.len());
            for (pos, ok) in per {
                flat.extend(pos);
                add.push(ok);
            }
            kids.push(flat);
            additive.push(add);
        }
        let mut flags: Vec<Vec<u32>> = (0..n_classes).map(|c| vec![1u32; tables.class(c).len()]).collect();
        for k in 1..=depth {
            let prev = flags.clone();
            for c in 0..n_classes {
                let next = group.next_class(c);
                let bit = 1u32 << k;
                let pbit = 1u32 << (k - 1);
                for (i, f) in flags[c].iter_mut().enumerate() {
                    if additive[c][i] && kids[c][i * d..(i + 1) * d].iter().all(|&p| prev[next][p as usize] & pbit != 0) {
                        *f |= bit;
                    }
                }
            }
        }
        Ok(Incompressibility { tables, depth, flags, kids })
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn flags(&self, class: usize) -> &[u32] {
        &self.flags[class]
    }

    /// Section positions of record `i` in the next class's table.
    pub fn children(&self, class: usize, i: u32) -> &[u32] {
        let d = self.tables.group.degree();
        &self.kids[class][i as usize * d..(i as usize + 1) * d]
    }

    pub fn in_level(&self, class: usize, i: u32, k: u32) -> bool {
        k == 0 || self.flags[class][i as usize] & (1 << k) != 0
    }

    /// Membership of a stored state in `I_k`, for `k ≤ depth`.
    pub fn membership(&self, class: usize, state: StateId, k: u32) -> Result<bool> {
        if k > self.depth {
            return Err(Error::InvalidArgument(format!("depth {k} beyond computed {}", self.depth)));
        }
        let t = self.tables.class(class);
        let i = t
            .position(state)
            .ok_or(Error::TableExhausted { level: class, requested: t.max_radius + 1, available: t.max_radius })?;
        Ok(self.in_level(class, i, k))
    }

    /// Largest `k ≤ depth` with record `i` in `I_k`.
    pub fn max_level(&self, class: usize, i: u32) -> u32 {
        let f = self.flags[class][i as usize];
        (0..=self.depth).take_while(|&k| f & (1 << k) != 0).last().unwrap_or(0)
    }

    pub fn report(&self) -> IncompressibilityReport {
        let classes = (0..self.tables.classes.len())
            .map(|c| {
                let t = self.tables.class(c);
                let counts: Vec<Vec<usize>> = (0..=self.depth)
                    .map(|k| {
                        (0..=t.max_radius)
                            .map(|n| {
                                let lo = t.gamma(n) - t.sphere_size(n);
                                (lo..t.gamma(n)).filter(|&i| self.in_level(c, i as u32, k)).count()
                            })
                            .collect()
                    })
                    .collect();
                let nested = self.flags[c].iter().all(|&f| (f + 1).is_power_of_two());
                let stabilization_depth = (0..self.depth).find(|&k| counts[k as usize] == counts[k as usize + 1]);
                ClassReport { class: c, counts, stabilization_depth, nested }
            })
            .collect();
        IncompressibilityReport { depth: self.depth, max_radius: self.tables.radius(), classes }
    }

    /// Re-checks the definition on the stored flags: every element of `I_k`
    /// has additive section lengths and sections in `I_{k−1}`.
    pub fn check_hereditary(&self) -> bool {
        let group = &self.tables.group;
        (0..self.tables.classes.len()).all(|c| {
            let t = self.tables.class(c);
            let next = group.next_class(c);
            let nt = self.tables.class(next);
            t.records().iter().enumerate().all(|(i, r)| {
                let kids = self.children(c, i as u32);
                (1..=self.depth).all(|k| {
                    !self.in_level(c, i as u32, k)
                        || (kids.iter().map(|&p| nt.records()[p as usize].radius).sum::<u32>() == r.radius
                            && kids.iter().all(|&p| self.in_level(next, p, k - 1)))
                })
            })
        })
    }

    /// One plus the deepest level up to which every compressible element
    /// of `Ball(r)` survives; 1 when the ball has no compressible element.
    /// `I_∞` is approximated by `I_depth`, which must have stabilised on the
    /// ball.
    pub fn level_function(&self, class: usize, r: u32) -> Result<u32> {
        let t = self.tables.class(class);
        if r > t.max_radius {
            return Err(Error::TableExhausted { level: class, requested: r, available: t.max_radius });
        }
        let ball = 0..t.gamma(r) as u32;
        if self.depth == 0 || ball.clone().any(|i| self.in_level(class, i, self.depth - 1) != self.in_level(class, i, self.depth)) {
            return Err(Error::Undetermined(format!(
                "I_{} has not stabilised on the ball of radius {r}",
                self.depth
            )));
        }
        let deepest = ball.filter(|&i| !self.in_level(class, i, self.depth)).map(|i| self.max_level(class, i)).min();
        Ok(deepest.map_or(1, |k| k + 1))
    }

    /// `N(g)` for every element of the ball of radius `r`: the least number
    /// of factors from `I_depth` multiplying to `g` with additive lengths.
    pub fn factorization(&self, class: usize, r: u32) -> Result<Factorization> {
        let t = self.tables.class(class);
        if r > t.max_radius {
            return Err(Error::TableExhausted { level: class, requested: r, available: t.max_radius });
        }
        let store = self.tables.group.store();
        let size = t.gamma(r);
        let mut count = vec![u32::MAX; size];
        let mut split = vec![(NONE, NONE); size];
        let incompressible: Vec<u32> = (t.sphere_size(0) as u32..size as u32).filter(|&i| self.in_level(class, i, self.depth)).collect();
        for (c, rec) in count.iter_mut().zip(t.sphere(0)) {
            *c = u32::from(rec.state != IDENTITY);
        }
        for &y in &incompressible {
            count[y as usize] = 1;
        }
        for m in 1..=r {
            // Elements of Ω(m) are final once all shorter ones are.
            let lo = t.gamma(m) - t.sphere_size(m);
            for x in lo..t.gamma(m) {
                let (nx, rx, sx) = (count[x], t.records()[x].radius, t.records()[x].state);
                // Record order is radius order, so the admissible factors form a prefix.
                let end = incompressible.partition_point(|&y| rx + t.records()[y as usize].radius <= r);
                let candidates: Vec<(usize, u32)> = incompressible[..end]
                    .par_iter()
                    .filter_map(|&y| {
                        let ry = t.records()[y as usize].radius;
                        let p = store.multiply(sx, t.records()[y as usize].state).ok()?;
                        let j = t.position(p)?;
                        (t.records()[j as usize].radius == rx + ry).then_some((j as usize, y))
                    })
                    .collect();
                for (j, y) in candidates {
                    if nx + 1 < count[j] {
                        count[j] = nx + 1;
                        split[j] = (x as u32, y);
                    }
                }
            }
        }
        Ok(Factorization { class, radius: r, count, split })
    }

    /// Enumerates `I_depth ∩ Ω(n)` for `n ≤ max_radius`, possibly beyond the
    /// table radius. Uses that a geodesic prefix of an element of `I_k` is
    /// again in `I_k`, so each sphere is found among right multiples of the
    /// previous one.
    pub fn extend(&self, class: usize, max_radius: u32) -> Result<IncompressibleSpheres> {
        let group = &self.tables.group;
        let t = self.tables.class(class);
        let zero = group.zero_subgroup(class);
        let units = group.unit_generators(class);
        let store = group.store();
        let mut spheres: Vec<Vec<Entry>> = Vec::new();
        let sphere0 = t
            .sphere(0)
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.in_level(class, i as u32, self.depth))
            .map(|(_, r)| Entry { state: r.state, parent: NONE, gen: NONE, perm: r.perm, word: zero_word(zero.elements[r.perm as usize]) })
            .collect();
        spheres.push(sphere0);
        let mut seen: HashSet<StateId> = spheres[0].iter().map(|e| e.state).collect();
        for n in 1..=max_radius {
            let prev = &spheres[n as usize - 1];
            let mut cands = Vec::new();
            for (pi, p) in prev.iter().enumerate() {
                for &s in &units {
                    let x = store.multiply(p.state, group.generator_state(class, s))?;
                    for (k, &z) in zero.elements.iter().enumerate() {
                        cands.push((pi as u32, s as u32, k as u16, store.right_rooted(x, z)));
                    }
                }
            }
            let mut fresh = Vec::new();
            for c in cands {
                if seen.insert(c.3) {
                    fresh.push(c);
                }
            }
            let checked: Vec<Result<Option<Entry>>> = fresh
                .into_par_iter()
                .map(|(pi, s, k, state)| {
                    let mut word = prev[pi as usize].word.clone();
                    word.push(Symbol::Unit(s));
                    word.push(Symbol::Zero(zero.elements[k as usize]));
                    let word = self.reduce(class, word);
                    let ok = self.certify(class, &word, self.depth, n, 0)?;
                    Ok(ok.then_some(Entry { state, parent: pi, gen: s, perm: k, word }))
                })
                .collect();
            let mut sphere = Vec::new();
            for e in checked {
                if let Some(e) = e? {
                    sphere.push(e);
                }
            }
            log::debug!("class {class}: |I_{}(ω({n}))| = {}", self.depth, sphere.len());
            spheres.push(sphere);
        }
        Ok(IncompressibleSpheres { class, depth: self.depth, spheres })
    }

    fn reduce(&self, class: usize, word: Vec<Symbol>) -> Vec<Symbol> {
        crate::tree::reduce_word(&self.tables.group, class, word)
    }

    /// True iff the element spelled by `word` (with at most `m` positive
    /// letters) lies in `I_k` and has length exactly `m`.
    fn certify(&self, class: usize, word: &[Symbol], k: u32, m: u32, depth: usize) -> Result<bool> {
        let units = word.iter().filter(|s| matches!(s, Symbol::Unit(_))).count() as u32;
        if units < m {
            return Ok(false);
        }
        let t = self.tables.class(class);
        if m <= t.max_radius {
            let state = crate::tree::word_state(&self.tables.group, class, word)?;
            return Ok(match t.position(state) {
                Some(i) => t.records()[i as usize].radius == m && self.in_level(class, i, k),
                None => false,
            });
        }
        if depth >= CERTIFY_DEPTH {
            return Err(Error::Undetermined(format!("no length certificate within {CERTIFY_DEPTH} levels")));
        }
        let group = &self.tables.group;
        let (_, children) = crate::tree::decompose_symbols(group, class, word);
        let weights: Vec<u32> = children.iter().map(|w| w.iter().filter(|s| matches!(s, Symbol::Unit(_))).count() as u32).collect();
        let next = group.next_class(class);
        if weights.iter().sum::<u32>() < m {
            if k == 0 {
                return Err(Error::Undetermined(format!("length of a word with {m} letters not certified")));
            }
            return Ok(false);
        }
        for (w, &wi) in children.iter().zip(&weights) {
            let ok = self.certify(next, w, k.saturating_sub(1), wi, depth + 1)?;
            if !ok {
                if k == 0 {
                    return Err(Error::Undetermined(format!("length of a word with {m} letters not certified")));
                }
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn zero_word(p: Perm) -> Vec<Symbol> {
    if p.is_identity() {
        Vec::new()
    } else {
        vec![Symbol::Zero(p)]
    }
}

/// Minimal factorization counts over a ball.
pub struct Factorization {
    pub class: usize,
    pub radius: u32,
    /// `N` by record index; `u32::MAX` if no factorization was found.
    pub count: Vec<u32>,
    /// `(x, y)` with `g = x · y`, `y` incompressible, `N(g) = N(x) + 1`.
    pub split: Vec<(u32, u32)>,
}

impl Factorization {
    /// Record indices of the factors of a minimal factorization, in order.
    pub fn factors(&self, i: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut g = i;
        while self.split[g as usize].0 != NONE {
            let (x, y) = self.split[g as usize];
            out.push(y);
            g = x;
        }
        if self.count[g as usize] == 1 {
            out.push(g);
        }
        out.reverse();
        out
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub state: StateId,
    pub parent: u32,
    pub gen: u32,
    pub perm: u16,
    pub word: Vec<Symbol>,
}

/// `I_K ∩ Ω(n)` by radius, with the geodesic words that produced them.
pub struct IncompressibleSpheres {
    pub class: usize,
    pub depth: u32,
    pub spheres: Vec<Vec<Entry>>,
}

impl IncompressibleSpheres {
    pub fn counts(&self) -> Vec<usize> {
        self.spheres.iter().map(|s| s.len()).collect()
    }
}

/// Decomposition of a ternary spinal element as
/// `β_1^{a^{c_1}} ⋯ β_n^{a^{c_n}} a^s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TernaryData {
    /// Generator indices of the `β_j`.
    pub beta: Vec<u32>,
    pub s: u32,
    pub c: Vec<u32>,
    pub derivative: Vec<u32>,
    /// Switch index when the derivative is a run of 2's then a run of 1's.
    pub m_c: Option<usize>,
}

impl TernaryData {
    /// Parses the alternating word `a^{k_0} b_1 a^{k_1} ⋯ b_n a^{k_n}`.
    pub fn from_word(word: &[Symbol]) -> Result<TernaryData> {
        let rot = Perm::rotation(3, 1);
        let exponent = |p: Perm| -> Result<u32> {
            (0..3u32)
                .find(|&k| (0..k).fold(Perm::identity(3), |a, _| a.then_after(rot)) == p)
                .ok_or_else(|| Error::NotApplicable(format!("{p} is not a power of (1 2 3)")))
        };
        let mut beta = Vec::new();
        let mut c = Vec::new();
        let mut acc = 0u32;
        for &s in word {
            match s {
                Symbol::Zero(p) => {
                    if p.degree() != 3 {
                        return Err(Error::NotApplicable("not a ternary element".into()));
                    }
                    acc = (acc + exponent(p)?) % 3;
                }
                Symbol::Unit(u) => {
                    beta.push(u);
                    c.push(acc);
                }
            }
        }
        let derivative: Vec<u32> = c.windows(2).map(|w| (w[1] + 3 - w[0]) % 3).collect();
        Ok(TernaryData { beta, s: acc, m_c: switch_index(&derivative), c, derivative })
    }

    /// No zero entries and no 1 followed by 2.
    pub fn has_two_run_shape(&self) -> bool {
        self.m_c.is_some()
    }
}

/// `Some(m)` when `∂c(k) = 2` for `k < m` and `1` for `k ≥ m` (1-based).
pub fn switch_index(derivative: &[u32]) -> Option<usize> {
    let twos = derivative.iter().take_while(|&&x| x == 2).count();
    derivative[twos..].iter().all(|&x| x == 1).then_some(twos + 1)
}

/// `C_l = 3^(3^(l+2) − 1) (|B| − 1)^((3^(l+1) − 1)/2)` and the exponent
/// `(3^(l+2) − 1)/2`, or `None` if `C_l` overflows.
pub fn polynomial_bound_constants(l: u32, b_order: usize) -> (Option<u128>, u32) {
    let e = (3u32.pow(l + 2) - 1) / 2;
    let c = 3u128
        .checked_pow(3u32.pow(l + 2) - 1)
        .and_then(|x| ((b_order - 1) as u128).checked_pow((3u32.pow(l + 1) - 1) / 2).and_then(|y| x.checked_mul(y)));
    (c, e)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: u32,
    pub count: usize,
    /// `C_l n^e` in floating point, for display.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub l: u32,
    pub constant: String,
    pub exponent: u32,
    pub rows: Vec<BoundRow>,
    pub holds: bool,
}

/// `|I_K ∩ Ω(n)| ≤ C_l n^e` for every `n ≥ 1` in `counts`.
pub fn check_polynomial_bound(counts: &[usize], l: u32, b_order: usize) -> BoundCheck {
    let (c, e) = polynomial_bound_constants(l, b_order);
    let rows: Vec<BoundRow> = counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &count)| {
            let exact = c.and_then(|c| (n as u128).checked_pow(e).and_then(|p| p.checked_mul(c)));
            let holds = match exact {
                Some(b) => count as u128 <= b,
                // Overflow means the bound exceeds u128::MAX ≥ any count.
                None => true,
            };
            let bound = c.map_or(f64::INFINITY, |c| c as f64 * (n as f64).powi(e as i32));
            BoundRow { n: n as u32, count, bound, holds }
        })
        .collect();
    let holds = rows.iter().all(|r| r.holds);
    BoundCheck { l, constant: c.map_or("overflow".into(), |c| c.to_string()), exponent: e, rows, holds }
}

/// Ternary-derivative audit of a set of geodesic words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DerivativeAudit {
    pub checked: usize,
    pub violations: Vec<String>,
}

pub fn audit_derivatives<'a>(words: impl IntoIterator<Item = &'a [Symbol]>) -> Result<DerivativeAudit> {
    let mut audit = DerivativeAudit::default();
    for w in words {
        let data = TernaryData::from_word(w)?;
        audit.checked += 1;
        if !data.has_two_run_shape() {
            audit.violations.push(format!("c = {:?}, ∂c = {:?}", data.c, data.derivative));
        }
    }
    Ok(audit)
}

/// Sphere sizes restricted to a flag level, from a table.
pub fn level_counts(inc: &Incompressibility, class: usize, k: u32) -> Vec<usize> {
    let t: &SphereTable = inc.tables().class(class);
    (0..=t.max_radius)
        .map(|n| {
            let lo = t.gamma(n) - t.sphere_size(n);
            (lo..t.gamma(n)).filter(|&i| inc.in_level(class, i as u32, k)).count()
        })
        .collect()
}

/// Geodesic word of a table record, in symbols.
pub fn record_word(tables: &Tables, class: usize, i: u32) -> Vec<Symbol> {
    let zero = tables.group.zero_subgroup(class);
    let (z0, steps) = tables.class(class).geodesic(i);
    let mut w = zero_word(zero.elements[z0 as usize]);
    for (g, z) in steps {
        w.push(Symbol::Unit(g));
        w.extend(zero_word(zero.elements[z as usize]));
    }
    w
}
