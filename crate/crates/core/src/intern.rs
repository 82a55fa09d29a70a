//! Hash-consed automaton states.
//!
//! Every tree automorphism reachable from a family's generators is stored
//! once, as a node `(root permutation, d child ids)`. The table is kept
//! minimal: two ids are equal iff the automorphisms are equal. Acyclic
//! nodes are interned by key; self-referential sections (`b = (a, 1, b)`)
//! form simple cycles in the state graph and are interned by the
//! lexicographically least rotation of their primitive period.
//!
//! Products, inverses and generator states are evaluated by a depth-first
//! unfolding over expressions. For non-ℓ₁-expanding families every
//! strongly connected component of that unfolding is a simple cycle; any
//! other shape is reported as [`Error::NonContracting`].

use std::hash::{BuildHasher, Hash, Hasher};

use hashbrown::DefaultHashBuilder;
use hashbrown::{HashMap, HashTable};
use parking_lot::RwLock;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::perm::Perm;

pub type StateId = u32;
pub const IDENTITY: StateId = 0;

const PENDING: StateId = StateId::MAX;

pub(crate) type Kids = SmallVec<[StateId; 6]>;

/// Position of a generator's only possibly-positive child inside a child
/// word: `prefix · unit · suffix` with `prefix`, `suffix` rooted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChildRef {
    pub prefix: Perm,
    pub unit: Option<u32>,
    pub suffix: Perm,
}

#[derive(Clone, Debug)]
pub struct GenDesc {
    pub root: Perm,
    pub zero_length: bool,
    pub children: Vec<ChildRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Expr {
    Mul(StateId, StateId),
    Inv(StateId),
    Gen { class: u32, gen: u32, left: Perm, right: Perm },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Local {
    root: Perm,
    pos: u8,
    children: Kids,
}

enum Outcome {
    Done(StateId),
    Pending(usize),
}

enum Kid {
    Id(StateId),
    Sub(Expr),
}

struct Inner {
    degree: usize,
    roots: Vec<Perm>,
    children: Vec<StateId>,
    keys: HashTable<StateId>,
    hasher: DefaultHashBuilder,
    cycles: HashMap<Vec<Local>, Vec<StateId>>,
    mul_memo: HashMap<(StateId, StateId), StateId>,
    inv_memo: HashMap<StateId, StateId>,
    gen_memo: HashMap<(u32, u32, Perm, Perm), StateId>,
}

impl Inner {
    fn new(degree: usize) -> Inner {
        let mut inner = Inner {
            degree,
            roots: Vec::new(),
            children: Vec::new(),
            keys: HashTable::new(),
            hasher: DefaultHashBuilder::default(),
            cycles: HashMap::new(),
            mul_memo: HashMap::new(),
            inv_memo: HashMap::new(),
            gen_memo: HashMap::new(),
        };
        let id = inner.intern(Perm::identity(degree), &[IDENTITY; 16][..degree]);
        debug_assert_eq!(id, IDENTITY);
        inner
    }

    fn key_hash(&self, root: Perm, children: &[StateId]) -> u64 {
        let mut h = self.hasher.build_hasher();
        root.packed().hash(&mut h);
        children.hash(&mut h);
        h.finish()
    }

    #[inline]
    fn kids(&self, id: StateId) -> &[StateId] {
        let d = self.degree;
        let start = id as usize * d;
        &self.children[start..start + d]
    }

    #[inline]
    fn child(&self, id: StateId, x: usize) -> StateId {
        self.children[id as usize * self.degree + x]
    }

    #[inline]
    fn root(&self, id: StateId) -> Perm {
        self.roots[id as usize]
    }

    fn is_rooted(&self, id: StateId) -> bool {
        self.kids(id).iter().all(|&c| c == IDENTITY)
    }

    fn push(&mut self, root: Perm, children: &[StateId]) -> StateId {
        let id = self.roots.len() as StateId;
        assert!(id < PENDING, "state table overflow");
        self.roots.push(root);
        self.children.extend_from_slice(children);
        let hash = self.key_hash(root, children);
        let Inner { keys, roots, children: flat, degree, hasher, .. } = self;
        let d = *degree;
        let rehash = |&other: &StateId| {
            let mut h = hasher.build_hasher();
            roots[other as usize].packed().hash(&mut h);
            flat[other as usize * d..other as usize * d + d].hash(&mut h);
            h.finish()
        };
        keys.insert_unique(hash, id, rehash);
        id
    }

    fn find(&self, root: Perm, children: &[StateId]) -> Option<StateId> {
        let hash = self.key_hash(root, children);
        self.keys
            .find(hash, |&id| self.roots[id as usize] == root && self.kids(id) == children)
            .copied()
    }

    /// Interns a node whose children are already canonical.
    fn intern(&mut self, root: Perm, children: &[StateId]) -> StateId {
        match self.find(root, children) {
            Some(id) => id,
            None => self.push(root, children),
        }
    }

    fn rooted(&mut self, root: Perm) -> StateId {
        let d = self.degree;
        self.intern(root, &[IDENTITY; 16][..d])
    }
}

/// Thread-safe canonical store of tree automorphisms for one family.
pub struct Store {
    degree: usize,
    classes: Vec<Vec<GenDesc>>,
    next_class: Vec<usize>,
    inner: RwLock<Inner>,
}

impl Store {
    /// `classes[c]` describes the generators of level class `c`;
    /// `next_class[c]` is the class of the following level.
    pub fn new(degree: usize, classes: Vec<Vec<GenDesc>>, next_class: Vec<usize>) -> Store {
        assert_eq!(classes.len(), next_class.len());
        Store { degree, classes, next_class, inner: RwLock::new(Inner::new(degree)) }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.inner.read().roots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn root(&self, id: StateId) -> Perm {
        self.inner.read().root(id)
    }

    pub fn child(&self, id: StateId, x: usize) -> StateId {
        self.inner.read().child(id, x)
    }

    pub fn children(&self, id: StateId) -> Kids {
        Kids::from_slice(self.inner.read().kids(id))
    }

    /// Root permutation and sections of `id` in one lock acquisition.
    pub fn decompose(&self, id: StateId) -> (Perm, Kids) {
        let inner = self.inner.read();
        (inner.root(id), Kids::from_slice(inner.kids(id)))
    }

    pub fn is_rooted(&self, id: StateId) -> bool {
        self.inner.read().is_rooted(id)
    }

    pub fn rooted(&self, p: Perm) -> StateId {
        if let Some(id) = self.inner.read().find(p, &[IDENTITY; 16][..self.degree]) {
            return id;
        }
        self.inner.write().rooted(p)
    }

    /// The section `g|_v`, following the action of `g` on prefixes of `v`.
    pub fn section(&self, id: StateId, vertex: &[usize]) -> StateId {
        let inner = self.inner.read();
        vertex.iter().fold(id, |g, &x| inner.child(g, x))
    }

    /// Image of a vertex (0-based letters) under `id`.
    pub fn act(&self, id: StateId, vertex: &[usize]) -> Vec<usize> {
        let inner = self.inner.read();
        let mut g = id;
        vertex
            .iter()
            .map(|&x| {
                let y = inner.root(g).apply(x);
                g = inner.child(g, x);
                y
            })
            .collect()
    }

    pub fn generator(&self, class: usize, gen: usize) -> Result<StateId> {
        let id = Perm::identity(self.degree);
        self.eval(Expr::Gen { class: class as u32, gen: gen as u32, left: id, right: id })
    }

    pub fn multiply(&self, a: StateId, b: StateId) -> Result<StateId> {
        self.eval(Expr::Mul(a, b))
    }

    pub fn inverse(&self, a: StateId) -> Result<StateId> {
        self.eval(Expr::Inv(a))
    }

    pub fn multiply_all(&self, ids: impl IntoIterator<Item = StateId>) -> Result<StateId> {
        ids.into_iter().try_fold(IDENTITY, |acc, x| self.multiply(acc, x))
    }

    /// `π · a`, for a rooted `π`.
    pub fn left_rooted(&self, p: Perm, a: StateId) -> StateId {
        let (root, kids) = self.decompose(a);
        let root = p.then_after(root);
        if let Some(id) = self.inner.read().find(root, &kids) {
            return id;
        }
        self.inner.write().intern(root, &kids)
    }

    /// `a · π`, for a rooted `π`.
    pub fn right_rooted(&self, a: StateId, p: Perm) -> StateId {
        let (root, kids) = self.decompose(a);
        let root = root.then_after(p);
        let kids: Kids = (0..self.degree).map(|x| kids[p.apply(x)]).collect();
        if let Some(id) = self.inner.read().find(root, &kids) {
            return id;
        }
        self.inner.write().intern(root, &kids)
    }

    fn eval(&self, e: Expr) -> Result<StateId> {
        {
            let inner = self.inner.read();
            if let Some(id) = quick(&inner, e) {
                return Ok(id);
            }
        }
        let mut inner = self.inner.write();
        let mut ev = Evaluator {
            inner: &mut inner,
            classes: &self.classes,
            next_class: &self.next_class,
            stack: Vec::new(),
            cycle: Vec::new(),
        };
        match ev.eval(e)? {
            Outcome::Done(id) => Ok(id),
            Outcome::Pending(_) => Err(Error::NonContracting("unresolved cycle at top level".into())),
        }
    }
}

/// Lookups that need neither recursion nor insertion.
fn quick(inner: &Inner, e: Expr) -> Option<StateId> {
    match e {
        Expr::Mul(a, b) => {
            if a == IDENTITY {
                Some(b)
            } else if b == IDENTITY {
                Some(a)
            } else {
                inner.mul_memo.get(&(a, b)).copied()
            }
        }
        Expr::Inv(a) => {
            if a == IDENTITY {
                Some(IDENTITY)
            } else {
                inner.inv_memo.get(&a).copied()
            }
        }
        Expr::Gen { class, gen, left, right } => inner.gen_memo.get(&(class, gen, left, right)).copied(),
    }
}

struct Evaluator<'a> {
    inner: &'a mut Inner,
    classes: &'a [Vec<GenDesc>],
    next_class: &'a [usize],
    stack: Vec<Expr>,
    /// Locals of frames that returned `Pending`, tagged with the stack
    /// index of the frame that will close their cycle.
    cycle: Vec<(usize, Expr, Local)>,
}

impl Evaluator<'_> {
    fn memoize(&mut self, e: Expr, id: StateId) {
        match e {
            Expr::Mul(a, b) => {
                self.inner.mul_memo.insert((a, b), id);
            }
            Expr::Inv(a) => {
                self.inner.inv_memo.insert(a, id);
            }
            Expr::Gen { class, gen, left, right } => {
                self.inner.gen_memo.insert((class, gen, left, right), id);
            }
        }
    }

    /// Cases resolved directly, possibly by interning one node.
    fn direct(&mut self, e: Expr) -> Result<Option<StateId>> {
        if let Some(id) = quick(self.inner, e) {
            return Ok(Some(id));
        }
        let inner = &mut *self.inner;
        let id = match e {
            Expr::Mul(a, b) => {
                let (ra, rb) = (inner.root(a), inner.root(b));
                if inner.is_rooted(a) {
                    let kids = Kids::from_slice(inner.kids(b));
                    inner.intern(ra.then_after(rb), &kids)
                } else if inner.is_rooted(b) {
                    let kids: Kids = (0..inner.degree).map(|x| inner.child(a, rb.apply(x))).collect();
                    inner.intern(ra.then_after(rb), &kids)
                } else {
                    return Ok(None);
                }
            }
            Expr::Inv(a) => {
                if inner.is_rooted(a) {
                    let r = inner.root(a).inverse();
                    inner.rooted(r)
                } else {
                    return Ok(None);
                }
            }
            Expr::Gen { class, gen, left, right } => {
                let desc = self
                    .classes
                    .get(class as usize)
                    .and_then(|c| c.get(gen as usize))
                    .ok_or_else(|| Error::InvalidFamily(format!("no generator {gen} at class {class}")))?;
                if desc.zero_length {
                    inner.rooted(left.then_after(desc.root).then_after(right))
                } else {
                    return Ok(None);
                }
            }
        };
        self.memoize(e, id);
        Ok(Some(id))
    }

    fn expand(&mut self, e: Expr) -> Result<(Perm, SmallVec<[Kid; 6]>)> {
        let d = self.inner.degree;
        Ok(match e {
            Expr::Mul(a, b) => {
                let (ra, rb) = (self.inner.root(a), self.inner.root(b));
                let kids = (0..d).map(|x| Kid::Sub(Expr::Mul(self.inner.child(a, rb.apply(x)), self.inner.child(b, x)))).collect();
                (ra.then_after(rb), kids)
            }
            Expr::Inv(a) => {
                let r = self.inner.root(a).inverse();
                let kids = (0..d).map(|x| Kid::Sub(Expr::Inv(self.inner.child(a, r.apply(x))))).collect();
                (r, kids)
            }
            Expr::Gen { class, gen, left, right } => {
                let desc = &self.classes[class as usize][gen as usize];
                let next = self.next_class[class as usize] as u32;
                let mut kids = SmallVec::new();
                for x in 0..d {
                    let r = desc.children[right.apply(x)];
                    kids.push(match r.unit {
                        None => Kid::Id(self.inner.rooted(r.prefix.then_after(r.suffix))),
                        Some(u) => Kid::Sub(Expr::Gen { class: next, gen: u, left: r.prefix, right: r.suffix }),
                    });
                }
                (left.then_after(desc.root).then_after(right), kids)
            }
        })
    }

    fn eval(&mut self, e: Expr) -> Result<Outcome> {
        if let Some(id) = self.direct(e)? {
            return Ok(Outcome::Done(id));
        }
        if let Some(i) = self.stack.iter().position(|f| *f == e) {
            return Ok(Outcome::Pending(i));
        }
        let (root, kids) = self.expand(e)?;
        self.stack.push(e);
        let me = self.stack.len() - 1;
        let mut ids = Kids::new();
        let mut pending: Option<(usize, usize)> = None;
        for (x, kid) in kids.into_iter().enumerate() {
            let id = match kid {
                Kid::Id(id) => id,
                Kid::Sub(sub) => match self.eval(sub)? {
                    Outcome::Done(id) => id,
                    Outcome::Pending(target) => {
                        if pending.is_some() {
                            return Err(Error::NonContracting(format!(
                                "two self-referential sections in {e:?}"
                            )));
                        }
                        pending = Some((x, target));
                        PENDING
                    }
                },
            };
            ids.push(id);
        }
        self.stack.pop();
        match pending {
            None => {
                let id = self.inner.intern(root, &ids);
                self.memoize(e, id);
                Ok(Outcome::Done(id))
            }
            Some((pos, target)) => {
                self.cycle.push((target, e, Local { root, pos: pos as u8, children: ids }));
                if target == me {
                    self.close_cycle(me).map(Outcome::Done)
                } else {
                    Ok(Outcome::Pending(target))
                }
            }
        }
    }

    /// Interns the cycle rooted at stack frame `me` and returns the id of
    /// that frame's expression.
    fn close_cycle(&mut self, me: usize) -> Result<StateId> {
        let mut exprs = Vec::new();
        let mut locals = Vec::new();
        while let Some((target, _, _)) = self.cycle.last() {
            if *target != me {
                break;
            }
            let (_, e, l) = self.cycle.pop().expect("non-empty");
            exprs.push(e);
            locals.push(l);
        }
        // Popped order is the cycle order: entry j's pending child is j + 1.
        let ids = intern_cycle(self.inner, &locals);
        for (e, &id) in exprs.iter().zip(&ids) {
            self.memoize(*e, id);
        }
        Ok(ids[0])
    }
}

/// Returns the canonical id of each position of the cycle `locals`.
fn intern_cycle(inner: &mut Inner, locals: &[Local]) -> Vec<StateId> {
    let k = locals.len();
    let trivial = locals.iter().all(|l| {
        l.root.is_identity() && l.children.iter().enumerate().all(|(x, &c)| x == l.pos as usize || c == IDENTITY)
    });
    if trivial {
        return vec![IDENTITY; k];
    }
    let period = (1..=k)
        .find(|&q| k.is_multiple_of(q) && (0..k).all(|j| locals[j] == locals[(j + q) % k]))
        .expect("k itself is a period");
    let base = &locals[..period];
    let shift = (0..period)
        .min_by(|&r, &s| {
            let a = (0..period).map(|t| &base[(t + r) % period]);
            let b = (0..period).map(|t| &base[(t + s) % period]);
            a.cmp(b)
        })
        .expect("period ≥ 1");
    let canonical: Vec<Local> = (0..period).map(|t| base[(t + shift) % period].clone()).collect();
    let ids = match inner.cycles.get(&canonical) {
        Some(ids) => ids.clone(),
        None => {
            let first = inner.roots.len() as StateId;
            let ids: Vec<StateId> = (0..period as StateId).map(|t| first + t).collect();
            for (t, l) in canonical.iter().enumerate() {
                let mut kids = l.children.clone();
                kids[l.pos as usize] = ids[(t + 1) % period];
                let id = inner.push(l.root, &kids);
                debug_assert_eq!(id, ids[t]);
            }
            inner.cycles.insert(canonical, ids.clone());
            ids
        }
    };
    (0..k).map(|j| ids[(j % period + period - shift) % period]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a3() -> Perm {
        Perm::from_cycles(3, &[&[1, 2, 3]]).unwrap()
    }

    /// Fabrykowski-Gupta: generators a (rooted) and b = (a, 1, b), b² = (a², 1, b²).
    fn fg_store() -> Store {
        let id = Perm::identity(3);
        let a = a3();
        let rooted = |p: Perm| ChildRef { prefix: p, unit: None, suffix: id };
        let gens = vec![
            GenDesc { root: a, zero_length: true, children: vec![rooted(id); 3] },
            GenDesc { root: a.inverse(), zero_length: true, children: vec![rooted(id); 3] },
            GenDesc {
                root: id,
                zero_length: false,
                children: vec![rooted(a), rooted(id), ChildRef { prefix: id, unit: Some(2), suffix: id }],
            },
            GenDesc {
                root: id,
                zero_length: false,
                children: vec![rooted(a.inverse()), rooted(id), ChildRef { prefix: id, unit: Some(3), suffix: id }],
            },
        ];
        Store::new(3, vec![gens], vec![0])
    }

    #[test]
    fn cube_of_b_is_trivial() {
        let s = fg_store();
        let b = s.generator(0, 2).unwrap();
        let b2 = s.generator(0, 3).unwrap();
        assert_ne!(b, IDENTITY);
        assert_eq!(s.multiply(b, b).unwrap(), b2);
        assert_eq!(s.multiply(b, b2).unwrap(), IDENTITY);
        assert_eq!(s.inverse(b).unwrap(), b2);
    }

    #[test]
    fn b_decomposes_into_a_one_b() {
        let s = fg_store();
        let b = s.generator(0, 2).unwrap();
        let (root, kids) = s.decompose(b);
        assert!(root.is_identity());
        assert_eq!(kids[0], s.rooted(a3()));
        assert_eq!(kids[1], IDENTITY);
        assert_eq!(kids[2], b);
    }

    #[test]
    fn conjugate_product_matches_hand_expansion() {
        // b · (a b a⁻¹) = (a, 1, b)(b, a, 1) = (ab, a, b)
        let s = fg_store();
        let a = s.rooted(a3());
        let ai = s.rooted(a3().inverse());
        let b = s.generator(0, 2).unwrap();
        let g = s.multiply_all([b, a, b, ai]).unwrap();
        let (root, kids) = s.decompose(g);
        assert!(root.is_identity());
        assert_eq!(kids[0], s.multiply(a, b).unwrap());
        assert_eq!(kids[1], a);
        assert_eq!(kids[2], b);
    }

    #[test]
    fn equal_words_share_ids() {
        let s = fg_store();
        let a = s.rooted(a3());
        let b = s.generator(0, 2).unwrap();
        let x = s.multiply_all([a, b, b, a, b]).unwrap();
        let y = s.multiply_all([a, b, b, a, b]).unwrap();
        assert_eq!(x, y);
        let inv = s.inverse(x).unwrap();
        assert_eq!(s.multiply(x, inv).unwrap(), IDENTITY);
        assert_eq!(s.multiply(inv, x).unwrap(), IDENTITY);
    }

    #[test]
    fn action_follows_left_convention() {
        let s = fg_store();
        let b = s.generator(0, 2).unwrap();
        // b acts as a below vertex 1, and as b again below vertex 3.
        assert_eq!(s.act(b, &[0, 0]), vec![0, 1]);
        assert_eq!(s.act(b, &[2, 0]), vec![2, 0]);
        assert_eq!(s.act(b, &[2, 0, 0]), vec![2, 0, 1]);
        assert_eq!(s.act(b, &[1, 0]), vec![1, 0]);
        assert_eq!(s.section(b, &[2, 2, 2]), b);
    }
}
