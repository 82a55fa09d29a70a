//! Words over level-indexed generators and their action on the tree.
//!
//! A [`GroupElement`] keeps a reduced word: zero-length letters are fused
//! into a single rooted block, identity blocks are dropped and inverse
//! unit letters cancel. Sections are computed word by word, and the word
//! problem is decided by exploring every reachable section. The canonical
//! store offers a second, independent route to the same answers through
//! [`GroupElement::state`].

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::intern::StateId;
use crate::perm::Perm;

pub const DEFAULT_BUDGET: usize = 10_000_000;

/// A vertex of the tree as 0-based letters.
pub type Vertex = Vec<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// A fused block of zero-length letters, i.e. a rooted permutation.
    Zero(Perm),
    /// A positive-length generator, by index.
    Unit(u32),
}

#[derive(Clone)]
pub struct GroupElement {
    group: Arc<Group>,
    level: usize,
    word: Vec<Symbol>,
    state: OnceLock<StateId>,
}

/// Root permutations of all sections above a given depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Portrait {
    pub depth: usize,
    pub perms: BTreeMap<Vertex, Perm>,
}

impl Portrait {
    /// Image of `v` (with `|v| ≤ depth`) under the portrayed automorphism.
    pub fn act(&self, v: &[usize]) -> Vertex {
        assert!(v.len() <= self.depth);
        let mut out = Vec::with_capacity(v.len());
        for (i, &x) in v.iter().enumerate() {
            out.push(self.perms[&v[..i].to_vec()].apply(x));
        }
        out
    }
}

fn symbol_root(group: &Group, class: usize, s: Symbol) -> Perm {
    match s {
        Symbol::Zero(p) => p,
        Symbol::Unit(u) => group.spec().class(class).generators[u as usize].root,
    }
}

/// Reduces a symbol sequence in place of `out`.
fn push_reduced(group: &Group, class: usize, out: &mut Vec<Symbol>, s: Symbol) {
    match s {
        Symbol::Zero(p) => {
            if p.is_identity() {
                return;
            }
            if let Some(Symbol::Zero(q)) = out.last().copied() {
                let r = q.then_after(p);
                out.pop();
                if !r.is_identity() {
                    out.push(Symbol::Zero(r));
                }
            } else {
                out.push(s);
            }
        }
        Symbol::Unit(u) => {
            let inv = group.spec().class(class).generators[u as usize].inverse as u32;
            if out.last() == Some(&Symbol::Unit(inv)) {
                out.pop();
            } else {
                out.push(s);
            }
        }
    }
}

fn letter(group: &Group, class: usize, gen: usize) -> Symbol {
    let g = &group.spec().class(class).generators[gen];
    if g.pseudolength == 0 {
        Symbol::Zero(g.root)
    } else {
        Symbol::Unit(gen as u32)
    }
}

fn reduce(group: &Group, class: usize, symbols: impl IntoIterator<Item = Symbol>) -> Vec<Symbol> {
    let mut out = Vec::new();
    for s in symbols {
        push_reduced(group, class, &mut out, s);
    }
    out
}

/// Sections of a reduced word at `class`: the root and the `d` reduced
/// child words at the next class.
fn decompose_word(group: &Group, class: usize, word: &[Symbol]) -> (Perm, Vec<Vec<Symbol>>) {
    let d = group.degree();
    let next = group.next_class(class);
    let gens = &group.spec().class(class).generators;
    let root = word.iter().fold(Perm::identity(d), |p, &s| p.then_after(symbol_root(group, class, s)));
    let children = (0..d)
        .map(|x| {
            let mut parts: Vec<&[usize]> = Vec::new();
            let mut y = x;
            for &s in word.iter().rev() {
                if let Symbol::Unit(u) = s {
                    parts.push(&gens[u as usize].children[y]);
                }
                y = symbol_root(group, class, s).apply(y);
            }
            let letters = parts.iter().rev().flat_map(|w| w.iter()).map(|&k| letter(group, next, k));
            reduce(group, next, letters)
        })
        .collect();
    (root, children)
}

pub(crate) fn reduce_word(group: &Group, class: usize, word: Vec<Symbol>) -> Vec<Symbol> {
    reduce(group, class, word)
}

pub(crate) fn decompose_symbols(group: &Group, class: usize, word: &[Symbol]) -> (Perm, Vec<Vec<Symbol>>) {
    decompose_word(group, class, word)
}

/// Canonical store id of a reduced word at `class`.
pub(crate) fn word_state(group: &Group, class: usize, word: &[Symbol]) -> Result<StateId> {
    let store = group.store();
    let mut acc = crate::intern::IDENTITY;
    for &s in word {
        acc = match s {
            Symbol::Zero(p) => store.right_rooted(acc, p),
            Symbol::Unit(u) => store.multiply(acc, group.generator_state(class, u as usize))?,
        };
    }
    Ok(acc)
}

impl GroupElement {
    pub fn identity(group: &Arc<Group>, level: usize) -> GroupElement {
        GroupElement::from_symbols(group, level, Vec::new())
    }

    fn from_symbols(group: &Arc<Group>, level: usize, word: Vec<Symbol>) -> GroupElement {
        GroupElement { group: Arc::clone(group), level, word, state: OnceLock::new() }
    }

    /// The element spelled by generator indices of `level`.
    pub fn from_word(group: &Arc<Group>, level: usize, gens: &[usize]) -> Result<GroupElement> {
        let class = group.spec().class_of(level);
        let n = group.spec().class(class).generators.len();
        if let Some(&bad) = gens.iter().find(|&&g| g >= n) {
            return Err(Error::InvalidArgument(format!("generator {bad} out of range at level {level}")));
        }
        let word = reduce(group, class, gens.iter().map(|&g| letter(group, class, g)));
        Ok(GroupElement::from_symbols(group, level, word))
    }

    /// The element spelled by generator names, e.g. `["b", "a", "b"]`.
    pub fn from_names(group: &Arc<Group>, level: usize, names: &[&str]) -> Result<GroupElement> {
        let spec = group.spec().level(level);
        let ids = names
            .iter()
            .map(|n| spec.position(n).ok_or_else(|| Error::InvalidArgument(format!("unknown generator {n}"))))
            .collect::<Result<Vec<_>>>()?;
        GroupElement::from_word(group, level, &ids)
    }

    pub fn generator(group: &Arc<Group>, level: usize, gen: usize) -> Result<GroupElement> {
        GroupElement::from_word(group, level, &[gen])
    }

    pub fn rooted(group: &Arc<Group>, level: usize, p: Perm) -> GroupElement {
        let class = group.spec().class_of(level);
        GroupElement::from_symbols(group, level, reduce(group, class, [Symbol::Zero(p)]))
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn class(&self) -> usize {
        self.group.spec().class_of(self.level)
    }

    pub fn normal_form(&self) -> &[Symbol] {
        &self.word
    }

    /// Number of positive-length letters in the reduced word; an upper
    /// bound for the pseudolength.
    pub fn letter_count(&self) -> usize {
        self.word.iter().filter(|s| matches!(s, Symbol::Unit(_))).count()
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.level != other.level || !Arc::ptr_eq(&self.group, &other.group) {
            return Err(Error::LevelMismatch { left: self.level, right: other.level });
        }
        let class = self.class();
        let word = reduce(&self.group, class, self.word.iter().chain(&other.word).copied());
        Ok(GroupElement::from_symbols(&self.group, self.level, word))
    }

    pub fn invert(&self) -> GroupElement {
        let class = self.class();
        let gens = &self.group.spec().class(class).generators;
        let inv = self.word.iter().rev().map(|&s| match s {
            Symbol::Zero(p) => Symbol::Zero(p.inverse()),
            Symbol::Unit(u) => Symbol::Unit(gens[u as usize].inverse as u32),
        });
        GroupElement::from_symbols(&self.group, self.level, reduce(&self.group, class, inv))
    }

    /// `g = (g_1, …, g_d) τ` with `g(xw) = τ(x) g_x(w)`.
    pub fn decompose(&self) -> (Vec<GroupElement>, Perm) {
        let (root, children) = decompose_word(&self.group, self.class(), &self.word);
        let kids = children
            .into_iter()
            .map(|w| GroupElement::from_symbols(&self.group, self.level + 1, w))
            .collect();
        (kids, root)
    }

    pub fn root(&self) -> Perm {
        let class = self.class();
        self.word
            .iter()
            .fold(Perm::identity(self.group.degree()), |p, &s| p.then_after(symbol_root(&self.group, class, s)))
    }

    pub fn section_at(&self, v: &[usize]) -> GroupElement {
        let mut g = self.clone();
        for &x in v {
            g = g.decompose().0.swap_remove(x);
        }
        g
    }

    /// Image of a vertex.
    pub fn act(&self, v: &[usize]) -> Vertex {
        let mut g = self.clone();
        let mut out = Vec::with_capacity(v.len());
        for &x in v {
            let (mut kids, root) = g.decompose();
            out.push(root.apply(x));
            g = kids.swap_remove(x);
        }
        out
    }

    pub fn portrait(&self, depth: usize) -> Portrait {
        let mut perms = BTreeMap::new();
        let mut layer = vec![(Vec::new(), self.clone())];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (v, g) in layer {
                let (kids, root) = g.decompose();
                perms.insert(v.clone(), root);
                for (x, k) in kids.into_iter().enumerate() {
                    let mut w = v.clone();
                    w.push(x);
                    next.push((w, k));
                }
            }
            layer = next;
        }
        Portrait { depth, perms }
    }

    /// Decides triviality by exploring every reachable section. Sections
    /// never gain positive-length letters, so the search is finite; the
    /// budget caps the number of distinct sections visited.
    pub fn is_identity_with_budget(&self, budget: usize) -> Result<bool> {
        let mut seen: HashSet<(usize, Vec<Symbol>)> = HashSet::new();
        let mut queue = VecDeque::new();
        let start = (self.class(), self.word.clone());
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some((class, word)) = queue.pop_front() {
            let (root, children) = decompose_word(&self.group, class, &word);
            if !root.is_identity() {
                return Ok(false);
            }
            let next = self.group.next_class(class);
            for w in children {
                if w.is_empty() {
                    continue;
                }
                let key = (next, w);
                if !seen.contains(&key) {
                    if seen.len() >= budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    seen.insert(key.clone());
                    queue.push_back(key);
                }
            }
        }
        Ok(true)
    }

    pub fn is_identity(&self) -> Result<bool> {
        self.is_identity_with_budget(DEFAULT_BUDGET)
    }

    pub fn equals(&self, other: &GroupElement) -> Result<bool> {
        self.multiply(&other.invert())?.is_identity()
    }

    /// Canonical id in the group's store: equal ids iff equal elements.
    pub fn state(&self) -> Result<StateId> {
        if let Some(&s) = self.state.get() {
            return Ok(s);
        }
        let acc = word_state(&self.group, self.class(), &self.word)?;
        Ok(*self.state.get_or_init(|| acc))
    }
}

impl PartialEq for GroupElement {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level
            && Arc::ptr_eq(&self.group, &other.group)
            && matches!((self.state(), other.state()), (Ok(a), Ok(b)) if a == b)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupElement(level {}, {self})", self.level)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return write!(f, "1");
        }
        let gens = &self.group.spec().class(self.class()).generators;
        let parts: Vec<String> = self
            .word
            .iter()
            .map(|&s| match s {
                Symbol::Zero(p) => gens
                    .iter()
                    .find(|g| g.pseudolength == 0 && g.root == p)
                    .map(|g| g.name.clone())
                    .unwrap_or_else(|| p.to_string()),
                Symbol::Unit(u) => gens[u as usize].name.clone(),
            })
            .collect();
        write!(f, "{}", parts.join("·"))
    }
}
