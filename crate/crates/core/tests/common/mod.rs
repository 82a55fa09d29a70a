//! Independent oracles: generator actions on the leaves of a truncated tree,
//! computed directly from the family description, and sphere sizes obtained
//! by naive word enumeration deduplicated by that action.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use treegrowth::family::FamilySpec;

/// A permutation of the `d^depth` leaves, leaf `x_1 … x_depth` at index
/// `Σ x_i d^(depth − i)`.
pub type LeafPerm = Vec<u16>;

pub struct LeafAction {
    pub depth: u32,
    /// `gens[class][g]`.
    pub gens: Vec<Vec<LeafPerm>>,
}

fn compose(outer: &[u16], inner: &[u16]) -> LeafPerm {
    inner.iter().map(|&v| outer[v as usize]).collect()
}

fn identity(n: usize) -> LeafPerm {
    (0..n as u16).collect()
}

impl LeafAction {
    pub fn new(spec: &FamilySpec, depth: u32) -> LeafAction {
        let d = spec.degree;
        let leaves = d.pow(depth);
        assert!(leaves <= 1 << 16, "truncated tree too large for the oracle");
        let mut memo = HashMap::new();
        let gens = (0..spec.num_classes()).map(|c| generator_actions(spec, c, depth, &mut memo)).collect();
        LeafAction { depth, gens }
    }

    pub fn leaves(&self) -> usize {
        self.gens[0][0].len()
    }
}

/// Actions of every generator of `class` on depth-`depth` leaves:
/// `g(x w) = root(x) · g_x(w)`, where `g_x` is the product of its child word,
/// applied right to left.
fn generator_actions(spec: &FamilySpec, class: usize, depth: u32, memo: &mut HashMap<(usize, u32), Vec<LeafPerm>>) -> Vec<LeafPerm> {
    if let Some(v) = memo.get(&(class, depth)) {
        return v.clone();
    }
    let level = spec.class(class);
    let out = if depth == 0 {
        vec![vec![0u16]; level.generators.len()]
    } else {
        let d = spec.degree;
        let sub = d.pow(depth - 1);
        let below = generator_actions(spec, spec.next_class(class), depth - 1, memo);
        level
            .generators
            .iter()
            .map(|g| {
                let mut p = vec![0u16; d * sub];
                for x in 0..d {
                    let section = g.children[x].iter().rev().fold(identity(sub), |acc, &h| compose(&below[h], &acc));
                    let y = g.root.apply(x);
                    for w in 0..sub {
                        p[x * sub + w] = (y * sub + section[w] as usize) as u16;
                    }
                }
                p
            })
            .collect()
    };
    memo.insert((class, depth), out.clone());
    out
}

fn fingerprint(p: &[u16]) -> u128 {
    let mut a = DefaultHasher::new();
    p.hash(&mut a);
    let mut b = DefaultHasher::new();
    0xa5u8.hash(&mut b);
    p.hash(&mut b);
    (u128::from(a.finish()) << 64) | u128::from(b.finish())
}

/// `|Ω(0)|, …, |Ω(max_n)|` at `class` by enumerating the words
/// `z_0 s_1 z_1 ⋯ s_n z_n` and identifying words with equal leaf action.
/// Words are extended only from one representative per action.
pub fn oracle_spheres(spec: &FamilySpec, class: usize, depth: u32, max_n: u32) -> Vec<usize> {
    let act = LeafAction::new(spec, depth);
    let gens = &act.gens[class];
    let level = spec.class(class);
    let zero_gens: Vec<&LeafPerm> = level.generators.iter().zip(gens).filter(|(g, _)| g.pseudolength == 0).map(|(_, p)| p).collect();
    let units: Vec<&LeafPerm> = level.generators.iter().zip(gens).filter(|(g, _)| g.pseudolength == 1).map(|(_, p)| p).collect();
    let mut seen = HashSet::new();
    let mut zero = vec![identity(act.leaves())];
    seen.insert(fingerprint(&zero[0]));
    let mut i = 0;
    while i < zero.len() {
        for z in &zero_gens {
            let p = compose(&zero[i], z);
            if seen.insert(fingerprint(&p)) {
                zero.push(p);
            }
        }
        i += 1;
    }
    let mut sizes = vec![zero.len()];
    let mut frontier = zero.clone();
    for n in 1..=max_n {
        let keep = n < max_n;
        let mut next = Vec::new();
        let mut count = 0;
        for h in &frontier {
            for s in &units {
                let hs = compose(h, s);
                for z in &zero {
                    let p = compose(&hs, z);
                    if seen.insert(fingerprint(&p)) {
                        count += 1;
                        if keep {
                            next.push(p);
                        }
                    }
                }
            }
        }
        sizes.push(count);
        frontier = next;
    }
    sizes
}
