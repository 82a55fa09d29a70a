//! Balls and spheres of the word pseudonorm.
//!
//! Every element of length `n ≥ 1` factors as `h · s · z` with `|h| = n − 1`,
//! `s` a positive-length generator and `z` in the zero-length subgroup, so
//! sphere `n` is found among the right multiples of sphere `n − 1`. Products
//! are formed in parallel; deduplication runs sequentially in a fixed order,
//! so the resulting tables do not depend on the thread count.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::Group;
use crate::intern::{StateId, IDENTITY};

pub const NONE: u32 = u32::MAX;
pub const DEFAULT_MAX_ELEMENTS: usize = 20_000_000;

/// One enumerated element: `parent · gen · zero[perm]`, or `zero[perm]`
/// on the zero sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Record {
    pub state: StateId,
    pub radius: u32,
    pub parent: u32,
    pub gen: u32,
    pub perm: u16,
}

#[derive(Clone, Debug)]
pub struct SphereTable {
    pub class: usize,
    pub max_radius: u32,
    pub truncated: bool,
    records: Vec<Record>,
    offsets: Vec<usize>,
    index: HashMap<StateId, u32>,
}

impl SphereTable {
    /// Enumerates spheres `0..=max_radius` at `class`. Stops early, with
    /// `truncated` set, once more than `max_elements` elements are known.
    pub fn enumerate(group: &Group, class: usize, max_radius: u32, max_elements: usize) -> Result<SphereTable> {
        let store = group.store();
        let zero = group.zero_subgroup(class);
        let units: Vec<(u32, StateId)> = group
            .unit_generators(class)
            .into_iter()
            .map(|g| (g as u32, group.generator_state(class, g)))
            .collect();
        let mut table = SphereTable {
            class,
            max_radius: 0,
            truncated: false,
            records: Vec::new(),
            offsets: vec![0],
            index: HashMap::new(),
        };
        for (k, &z) in zero.elements.iter().enumerate() {
            let state = store.rooted(z);
            if table.index.insert(state, table.records.len() as u32).is_none() {
                table.records.push(Record { state, radius: 0, parent: NONE, gen: NONE, perm: k as u16 });
            }
        }
        table.offsets.push(table.records.len());

        for n in 1..=max_radius {
            let (lo, hi) = (table.offsets[n as usize - 1], table.offsets[n as usize]);
            let parents = &table.records[lo..hi];
            let products: Vec<Result<Vec<StateId>>> = parents
                .par_iter()
                .with_min_len(64)
                .map(|r| {
                    let mut out = Vec::with_capacity(units.len() * zero.len());
                    for &(_, s) in &units {
                        let x = store.multiply(r.state, s)?;
                        out.extend(zero.elements.iter().map(|&z| store.right_rooted(x, z)));
                    }
                    Ok(out)
                })
                .collect();
            let start = table.records.len();
            for (i, cands) in products.into_iter().enumerate() {
                let cands = cands?;
                let parent = (lo + i) as u32;
                for (j, state) in cands.into_iter().enumerate() {
                    if table.index.contains_key(&state) {
                        continue;
                    }
                    let (u, k) = (j / zero.len(), j % zero.len());
                    table.index.insert(state, table.records.len() as u32);
                    table.records.push(Record { state, radius: n, parent, gen: units[u].0, perm: k as u16 });
                }
            }
            if table.records.len() > max_elements {
                for r in table.records.drain(start..) {
                    table.index.remove(&r.state);
                }
                table.truncated = true;
                log::warn!("class {class}: element cap {max_elements} reached at radius {n}");
                break;
            }
            table.offsets.push(table.records.len());
            table.max_radius = n;
            log::debug!("class {class}: |Ω({n})| = {}", table.sphere_size(n));
        }
        Ok(table)
    }

    /// Rebuilds a table from stored records, re-deriving each state.
    pub fn from_records(group: &Group, class: usize, rows: &[(u32, u32, u32, u16)], truncated: bool) -> Result<SphereTable> {
        let store = group.store();
        let zero = group.zero_subgroup(class);
        let mut records = Vec::with_capacity(rows.len());
        let mut offsets = vec![0];
        let mut index = HashMap::with_capacity(rows.len());
        for (i, &(radius, parent, gen, perm)) in rows.iter().enumerate() {
            let z = *zero
                .elements
                .get(perm as usize)
                .ok_or_else(|| Error::Parse(format!("row {i}: zero element {perm} out of range")))?;
            let state = if parent == NONE {
                store.rooted(z)
            } else {
                let p: &Record = records
                    .get(parent as usize)
                    .ok_or_else(|| Error::Parse(format!("row {i}: parent {parent} not yet defined")))?;
                let s = group.generator_state(class, gen as usize);
                store.right_rooted(store.multiply(p.state, s)?, z)
            };
            while offsets.len() <= radius as usize {
                offsets.push(i);
            }
            if index.insert(state, i as u32).is_some() {
                return Err(Error::Parse(format!("row {i} duplicates an earlier element")));
            }
            records.push(Record { state, radius, parent, gen, perm });
        }
        offsets.push(records.len());
        let max_radius = offsets.len() as u32 - 2;
        Ok(SphereTable { class, max_radius, truncated, records, offsets, index })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn sphere(&self, n: u32) -> &[Record] {
        &self.records[self.offsets[n as usize]..self.offsets[n as usize + 1]]
    }

    pub fn sphere_size(&self, n: u32) -> usize {
        self.offsets[n as usize + 1] - self.offsets[n as usize]
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        (0..=self.max_radius).map(|n| self.sphere_size(n)).collect()
    }

    /// `γ(n) = |Ball(n)|`.
    pub fn gamma(&self, n: u32) -> usize {
        self.offsets[n as usize + 1]
    }

    pub fn gammas(&self) -> Vec<usize> {
        (0..=self.max_radius).map(|n| self.gamma(n)).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn position(&self, state: StateId) -> Option<u32> {
        self.index.get(&state).copied()
    }

    /// Exact pseudolength, or `None` if it exceeds the enumerated radius.
    pub fn length(&self, state: StateId) -> Option<u32> {
        self.position(state).map(|i| self.records[i as usize].radius)
    }

    /// A geodesic word for record `i`, as (generator index, zero element
    /// index) steps after an initial zero element.
    pub fn geodesic(&self, i: u32) -> (u16, Vec<(u32, u16)>) {
        let mut steps = Vec::new();
        let mut r = self.records[i as usize];
        while r.parent != NONE {
            steps.push((r.gen, r.perm));
            r = self.records[r.parent as usize];
        }
        steps.reverse();
        (r.perm, steps)
    }
}

/// Sphere tables for every level class of a group, all to the same radius.
#[derive(Clone, Debug)]
pub struct Tables {
    pub group: Arc<Group>,
    pub classes: Vec<SphereTable>,
}

impl Tables {
    pub fn enumerate(group: &Arc<Group>, max_radius: u32, max_elements: usize) -> Result<Tables> {
        let classes = (0..group.num_classes())
            .map(|c| SphereTable::enumerate(group, c, max_radius, max_elements))
            .collect::<Result<Vec<_>>>()?;
        Ok(Tables { group: Arc::clone(group), classes })
    }

    pub fn class(&self, c: usize) -> &SphereTable {
        &self.classes[c]
    }

    /// Largest radius enumerated at every class.
    pub fn radius(&self) -> u32 {
        self.classes.iter().map(|t| t.max_radius).min().unwrap_or(0)
    }

    pub fn truncated(&self) -> bool {
        self.classes.iter().any(|t| t.truncated)
    }

    /// Exact pseudolength of `state` at `class`.
    pub fn length(&self, class: usize, state: StateId) -> Result<u32> {
        let t = &self.classes[class];
        t.length(state).ok_or(Error::TableExhausted { level: class, requested: t.max_radius + 1, available: t.max_radius })
    }

    /// Lengths of the first-level sections of an element of `class`.
    pub fn section_lengths(&self, class: usize, state: StateId) -> Result<Vec<u32>> {
        let next = self.group.next_class(class);
        let kids = self.group.store().children(state);
        kids.iter().map(|&k| self.length(next, k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaEstimate {
    /// `|Ω(n)|^(1/n)` for `n ≥ 1`.
    pub pointwise: Vec<f64>,
    /// `|Ω(n+1)| / |Ω(n)|` for `n ≥ 0`.
    pub ratio: Vec<f64>,
}

pub fn kappa_estimates(sphere_sizes: &[usize]) -> KappaEstimate {
    let pointwise = sphere_sizes.iter().enumerate().skip(1).map(|(n, &s)| (s as f64).powf(1.0 / n as f64)).collect();
    let ratio = sphere_sizes.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    KappaEstimate { pointwise, ratio }
}

/// `γ(n + m) ≤ γ(n) γ(m)` for all `n + m` within range.
pub fn check_submultiplicative(gammas: &[usize]) -> bool {
    let n = gammas.len();
    (0..n).all(|i| (0..n - i).all(|j| (gammas[i + j] as u128) <= gammas[i] as u128 * gammas[j] as u128))
}

/// `|G₀|^(n+1) |S₁|^n`.
pub fn ball_bound(zero_order: usize, units: usize, n: u32) -> u128 {
    (zero_order as u128).saturating_pow(n + 1).saturating_mul((units as u128).saturating_pow(n))
}

/// `Σ_{k ≤ n} |G₀|^(k+1) |S₁|^k`: one term per sphere.
pub fn summed_ball_bound(zero_order: usize, units: usize, n: u32) -> u128 {
    (0..=n).map(|k| ball_bound(zero_order, units, k)).fold(0u128, u128::saturating_add)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BallCertificate {
    /// `(n, |Ball(n)|, bound)` over the enumerated range.
    pub rows: Vec<(u32, u128, u128)>,
    pub holds_enumerated: bool,
    /// `|Ω(n)| ≤ |G₀|^(n+1)|S₁|^n` on the enumerated range.
    pub sphere_form: bool,
    /// `|Ball(n)| ≤ Σ_{k ≤ n} |G₀|^(k+1)|S₁|^k` on the enumerated range.
    pub summed_form: bool,
    /// A radius `n₀` from which the bound holds for every `n ≥ n₀`.
    pub certified_from: Option<u32>,
}

/// Checks `|Ball(n)| ≤ |G₀|^(n+1)|S₁|^n` on a table and extends it to all
/// radii. Every element of `Ω(n)` is `h·s·z` with `h ∈ Ω(n−1)`, so
/// `|Ω(n)| ≤ |Ω(n−1)|·|S₁|·|G₀|`, and the increments of the bound grow by
/// exactly that factor: once `|Ω(n₀)|` is below the increment at `n₀` and
/// `|Ball(n₀)|` below the bound, both stay so for every `n ≥ n₀`.
pub fn certify_ball_bound(table: &SphereTable, zero_order: usize, units: usize) -> BallCertificate {
    let rows: Vec<(u32, u128, u128)> =
        (0..=table.max_radius).map(|n| (n, table.gamma(n) as u128, ball_bound(zero_order, units, n))).collect();
    let holds_enumerated = rows.iter().all(|&(_, b, bound)| b <= bound);
    let certified_from = (1..=table.max_radius).find(|&n| {
        let increment = ball_bound(zero_order, units, n) - ball_bound(zero_order, units, n - 1);
        rows[n as usize].1 <= rows[n as usize].2 && table.sphere_size(n) as u128 <= increment
    });
    let range = 0..=table.max_radius;
    let sphere_form = range.clone().all(|n| table.sphere_size(n) as u128 <= ball_bound(zero_order, units, n));
    let summed_form = range.into_iter().all(|n| table.gamma(n) as u128 <= summed_ball_bound(zero_order, units, n));
    BallCertificate { rows, holds_enumerated, sphere_form, summed_form, certified_from }
}

/// `d! · Σ_{r_1+…+r_d ≤ n} Π γ'(r_i)`, from the ball sizes `γ'` of the
/// next level.
pub fn wreath_bound(degree: usize, next_gammas: &[usize], n: usize) -> u128 {
    // conv[k] = Σ_{r_1+…+r_j = k} Π γ'(r_i) after j factors.
    let mut conv = vec![0u128; n + 1];
    conv[0] = 1;
    for _ in 0..degree {
        let mut out = vec![0u128; n + 1];
        for (k, &c) in conv.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for r in 0..=n - k {
                out[k + r] = out[k + r].saturating_add(c.saturating_mul(next_gammas[r] as u128));
            }
        }
        conv = out;
    }
    let factorial: u128 = (1..=degree as u128).product();
    conv.iter().fold(0u128, |a, &x| a.saturating_add(x)).saturating_mul(factorial)
}

/// The finite counting inequality between consecutive levels, for every
/// radius up to `n`.
pub fn check_wreath_inequality(tables: &Tables, class: usize, n: u32) -> Result<bool> {
    let next = tables.group.next_class(class);
    let (t, u) = (tables.class(class), tables.class(next));
    if n > t.max_radius || n > u.max_radius {
        return Err(Error::TableExhausted { level: class, requested: n, available: t.max_radius.min(u.max_radius) });
    }
    let next_gammas = u.gammas();
    Ok((0..=n).all(|m| t.gamma(m) as u128 <= wreath_bound(tables.group.degree(), &next_gammas, m as usize)))
}

/// Checks every element's first-level section lengths against its own.
pub fn check_non_expansion(tables: &Tables, class: usize, n: u32) -> Result<bool> {
    let t = tables.class(class);
    for m in 0..=n.min(t.max_radius) {
        for r in t.sphere(m) {
            let s: u32 = tables.section_lengths(class, r.state)?.iter().sum();
            if s > m {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn is_identity_state(state: StateId) -> bool {
    state == IDENTITY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn ball_bounds_on_first_grigorchuk() {
        let g = catalog::first_grigorchuk().build().unwrap();
        let t = SphereTable::enumerate(&g, 0, 4, 1 << 20).unwrap();
        // G₀ = {1, a}, S₁ = {b, c, d}: Ω(1) = {a^i s a^j} has 12 elements.
        assert_eq!(t.sphere_size(1), 12);
        assert_eq!(t.gamma(1), 14);
        assert_eq!(ball_bound(2, 3, 1), 12);
        assert_eq!(summed_ball_bound(2, 3, 1), 14);
        let cert = certify_ball_bound(&t, 2, 3);
        assert!(!cert.holds_enumerated);
        assert!(cert.sphere_form && cert.summed_form);
        assert_eq!(cert.certified_from, Some(2));
        for n in 0..=4 {
            assert!(t.sphere_size(n) as u128 <= ball_bound(2, 3, n));
            assert!(t.gamma(n) as u128 <= summed_ball_bound(2, 3, n));
        }
    }

    #[test]
    fn certificate_needs_small_sphere() {
        let g = catalog::fabrykowski_gupta().build().unwrap();
        let t = SphereTable::enumerate(&g, 0, 2, 1 << 20).unwrap();
        let cert = certify_ball_bound(&t, 3, 2);
        // |Ball(1)| = 3 + 18 exceeds 3²·2.
        assert_eq!(cert.rows[1], (1, 21, 18));
        assert!(!cert.holds_enumerated);
        assert_eq!(cert.certified_from, Some(2));
        // A fictitious single unit generator makes the bound too small.
        assert_eq!(certify_ball_bound(&t, 3, 1).certified_from, None);
    }

    #[test]
    fn fabrykowski_gupta_small_spheres() {
        let g = catalog::fabrykowski_gupta().build().unwrap();
        let t = SphereTable::enumerate(&g, 0, 3, 1 << 20).unwrap();
        assert_eq!(t.sphere_size(0), 3);
        assert!(t.sphere_size(1) <= 18);
        assert!(check_submultiplicative(&t.gammas()));
    }

    #[test]
    fn wreath_bound_at_zero() {
        assert_eq!(wreath_bound(3, &[3], 0), 6 * 27);
    }

    #[test]
    fn submultiplicativity_negative_control() {
        assert!(check_submultiplicative(&[1, 3, 9, 27]));
        assert!(!check_submultiplicative(&[1, 3, 9, 28]));
    }

    #[test]
    fn constant_spheres_have_ratio_one() {
        let k = kappa_estimates(&[2, 2, 2, 2]);
        assert!(k.ratio.iter().all(|&r| r == 1.0));
    }
}
