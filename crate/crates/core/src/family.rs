//! Eventually periodic families of level-indexed generating sets.
//!
//! Level `ν` of a family carries a finite symmetric generating set `S_ν`
//! with pseudolengths in `{0, 1}`. Each generator is given by its root
//! permutation and `d` child words over the generators of level `ν + 1`.
//! Levels `0..preperiod.len()` are listed explicitly; after that the
//! `period` levels repeat forever, so the family has finitely many
//! distinct *classes* of levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intern::{ChildRef, GenDesc, Store};
use crate::perm::{generate_group, orbit, Perm};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub pseudolength: u8,
    pub inverse: usize,
    pub root: Perm,
    /// One word per first-level vertex, as generator indices of the next level.
    pub children: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub generators: Vec<GeneratorSpec>,
}

impl LevelSpec {
    pub fn zero_length(&self) -> impl Iterator<Item = (usize, &GeneratorSpec)> {
        self.generators.iter().enumerate().filter(|(_, g)| g.pseudolength == 0)
    }

    pub fn unit_length(&self) -> impl Iterator<Item = (usize, &GeneratorSpec)> {
        self.generators.iter().enumerate().filter(|(_, g)| g.pseudolength > 0)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub degree: usize,
    #[serde(default)]
    pub preperiod: Vec<LevelSpec>,
    pub period: Vec<LevelSpec>,
}

/// The finite group generated by the zero-length generators of one level,
/// with its multiplication table. Zero-length generators are rooted, so this
/// is a subgroup of `Sym(d)`.
#[derive(Clone, Debug)]
pub struct ZeroSubgroup {
    pub elements: Vec<Perm>,
    pub table: Vec<Vec<u16>>,
}

impl ZeroSubgroup {
    pub fn generated_by(degree: usize, gens: &[Perm]) -> ZeroSubgroup {
        let elements = generate_group(degree, gens);
        let index = |p: Perm| elements.iter().position(|&q| q == p).expect("closed") as u16;
        let table = elements
            .iter()
            .map(|&x| elements.iter().map(|&y| index(x.then_after(y))).collect())
            .collect();
        ZeroSubgroup { elements, table }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, p: Perm) -> Option<usize> {
        self.elements.iter().position(|&q| q == p)
    }

    pub fn is_closed(&self) -> bool {
        self.table.iter().flatten().all(|&k| (k as usize) < self.elements.len())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn record(&mut self, name: &'static str, failures: Vec<String>) {
        self.checks.push(Check { name, passed: failures.is_empty(), failures });
    }

    /// Converts a failing report into an error naming every failed check.
    pub fn into_result(self) -> Result<ValidationReport> {
        if self.is_valid() {
            return Ok(self);
        }
        let msg = self
            .failed()
            .map(|c| format!("{}: {}", c.name, c.failures.join("; ")))
            .collect::<Vec<_>>()
            .join(" | ");
        Err(Error::Validation(msg))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<20} {}", c.name, if c.passed { "ok" } else { "FAILED" })?;
            for msg in &c.failures {
                writeln!(f, "    {msg}")?;
            }
        }
        Ok(())
    }
}

impl FamilySpec {
    pub fn num_classes(&self) -> usize {
        self.preperiod.len() + self.period.len()
    }

    /// Index of the class holding absolute level `level`.
    pub fn class_of(&self, level: usize) -> usize {
        let pre = self.preperiod.len();
        if level < pre {
            level
        } else {
            pre + (level - pre) % self.period.len()
        }
    }

    pub fn next_class(&self, class: usize) -> usize {
        let pre = self.preperiod.len();
        if class + 1 < self.num_classes() {
            class + 1
        } else {
            pre
        }
    }

    pub fn class(&self, class: usize) -> &LevelSpec {
        let pre = self.preperiod.len();
        if class < pre {
            &self.preperiod[class]
        } else {
            &self.period[class - pre]
        }
    }

    pub fn level(&self, level: usize) -> &LevelSpec {
        self.class(self.class_of(level))
    }

    /// The family re-based at level `k`.
    pub fn shift(&self, k: usize) -> FamilySpec {
        let pre = self.preperiod.len();
        if k < pre {
            return FamilySpec {
                degree: self.degree,
                preperiod: self.preperiod[k..].to_vec(),
                period: self.period.clone(),
            };
        }
        let r = (k - pre) % self.period.len();
        let mut period = self.period[r..].to_vec();
        period.extend_from_slice(&self.period[..r]);
        FamilySpec { degree: self.degree, preperiod: Vec::new(), period }
    }

    pub fn zero_subgroup(&self, class: usize) -> ZeroSubgroup {
        let roots: Vec<Perm> = self.class(class).zero_length().map(|(_, g)| g.root).collect();
        ZeroSubgroup::generated_by(self.degree, &roots)
    }

    /// Generator descriptors for the canonical store. Fails if a child word
    /// has more than one positive-length letter, or a zero-length generator
    /// is not rooted.
    pub fn gen_descs(&self) -> Result<Vec<Vec<GenDesc>>> {
        let d = self.degree;
        (0..self.num_classes())
            .map(|c| {
                let next = self.class(self.next_class(c));
                self.class(c)
                    .generators
                    .iter()
                    .map(|g| {
                        let children = g
                            .children
                            .iter()
                            .map(|w| child_ref(d, next, w))
                            .collect::<Result<Vec<_>>>()?;
                        let zero_length = g.pseudolength == 0;
                        if zero_length && children.iter().any(|r| r.unit.is_some() || !r.prefix.then_after(r.suffix).is_identity()) {
                            return Err(Error::InvalidFamily(format!("zero-length generator {} is not rooted", g.name)));
                        }
                        Ok(GenDesc { root: g.root, zero_length, children })
                    })
                    .collect()
            })
            .collect()
    }

    /// Canonical automaton store for this family.
    pub fn store(&self) -> Result<Store> {
        let descs = self.gen_descs()?;
        let next = (0..self.num_classes()).map(|c| self.next_class(c)).collect();
        Ok(Store::new(self.degree, descs, next))
    }

    /// Runs every definitional check and reports each by name. Never fails;
    /// problems are listed in the report.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let d = self.degree;

        let mut shape = Vec::new();
        if !(2..=crate::perm::MAX_DEGREE).contains(&d) {
            shape.push(format!("degree {d} unsupported"));
        }
        if self.period.is_empty() {
            shape.push("period is empty".into());
        }
        if shape.is_empty() {
            for c in 0..self.num_classes() {
                let next_len = self.class(self.next_class(c)).generators.len();
                for g in &self.class(c).generators {
                    if g.root.degree() != d {
                        shape.push(format!("class {c}: {} has root of degree {}", g.name, g.root.degree()));
                    }
                    if g.children.len() != d {
                        shape.push(format!("class {c}: {} has {} children", g.name, g.children.len()));
                    }
                    if let Some(&bad) = g.children.iter().flatten().find(|&&i| i >= next_len) {
                        shape.push(format!("class {c}: {} refers to generator {bad} of the next level, which has {next_len}", g.name));
                    }
                }
            }
        }
        let shape_ok = shape.is_empty();
        report.record("seam-consistency", shape);
        if !shape_ok {
            return report;
        }

        let mut symmetry = Vec::new();
        let mut expansion = Vec::new();
        let mut single = Vec::new();
        let mut zero = Vec::new();
        for c in 0..self.num_classes() {
            let level = self.class(c);
            let next = self.class(self.next_class(c));
            for (i, g) in level.generators.iter().enumerate() {
                match level.generators.get(g.inverse) {
                    None => symmetry.push(format!("class {c}: inverse of {} out of range", g.name)),
                    Some(h) => {
                        if h.inverse != i {
                            symmetry.push(format!("class {c}: inverse pairing of {} is not an involution", g.name));
                        }
                        if h.pseudolength != g.pseudolength {
                            symmetry.push(format!("class {c}: {} and its inverse differ in length", g.name));
                        }
                    }
                }
                if g.pseudolength > 1 {
                    expansion.push(format!("class {c}: {} has pseudolength {}", g.name, g.pseudolength));
                }
                let lens: Vec<usize> = g
                    .children
                    .iter()
                    .map(|w| w.iter().map(|&k| next.generators[k].pseudolength as usize).sum())
                    .collect();
                let total: usize = lens.iter().sum();
                if total > g.pseudolength as usize {
                    expansion.push(format!("class {c}: children of {} have total length {total} > {}", g.name, g.pseudolength));
                }
                if lens.iter().filter(|&&l| l > 0).count() > 1 {
                    single.push(format!("class {c}: {} has more than one positive child", g.name));
                }
                if g.pseudolength == 0 && g.children.iter().any(|w| !w.is_empty()) {
                    let rooted = g.children.iter().all(|w| {
                        w.iter().all(|&k| next.generators[k].pseudolength == 0)
                            && w.iter().fold(Perm::identity(d), |p, &k| p.then_after(next.generators[k].root)).is_identity()
                    });
                    if !rooted {
                        zero.push(format!("class {c}: zero-length generator {} is not rooted", g.name));
                    }
                }
            }
            let z = self.zero_subgroup(c);
            if !z.is_closed() {
                zero.push(format!("class {c}: zero-length subgroup table not closed"));
            }
        }

        let mut transitive = Vec::new();
        for c in 0..self.num_classes() {
            let mut roots: Vec<Perm> = self.class(c).generators.iter().map(|g| g.root).collect();
            for p in 0..self.num_classes() {
                if self.next_class(p) != c {
                    continue;
                }
                for g in &self.class(p).generators {
                    for w in &g.children {
                        roots.extend(w.iter().map(|&k| self.class(c).generators[k].root));
                    }
                }
            }
            let orb = orbit(d, &roots, 0);
            if orb.len() != d {
                let shown: Vec<usize> = orb.iter().map(|x| x + 1).collect();
                transitive.push(format!("class {c}: roots have orbit {shown:?} on the first level"));
            }
        }

        // Inverse pairs must multiply to the identity. Needs a well-formed store.
        if symmetry.is_empty() && single.is_empty() && zero.is_empty() {
            match self.store() {
                Err(e) => symmetry.push(e.to_string()),
                Ok(store) => {
                    for c in 0..self.num_classes() {
                        for (i, g) in self.class(c).generators.iter().enumerate() {
                            let product = store
                                .generator(c, i)
                                .and_then(|x| store.generator(c, g.inverse).and_then(|y| store.multiply(x, y)));
                            match product {
                                Ok(crate::intern::IDENTITY) => {}
                                Ok(_) => symmetry.push(format!("class {c}: {} times its inverse is not trivial", g.name)),
                                Err(e) => symmetry.push(format!("class {c}: {}: {e}", g.name)),
                            }
                        }
                    }
                }
            }
        }

        report.record("symmetry", symmetry);
        report.record("non-expansion", expansion);
        report.record("single-positive-child", single);
        report.record("zero-subgroup", zero);
        report.record("transitivity", transitive);
        report
    }
}

fn child_ref(degree: usize, next: &LevelSpec, word: &[usize]) -> Result<ChildRef> {
    let mut prefix = Perm::identity(degree);
    let mut suffix = Perm::identity(degree);
    let mut unit = None;
    for &k in word {
        let g = next
            .generators
            .get(k)
            .ok_or_else(|| Error::InvalidFamily(format!("child letter {k} out of range")))?;
        if g.pseudolength > 0 {
            if unit.is_some() {
                return Err(Error::InvalidFamily("child word with two positive-length letters".into()));
            }
            unit = Some(k as u32);
        } else if unit.is_none() {
            prefix = prefix.then_after(g.root);
        } else {
            suffix = suffix.then_after(g.root);
        }
    }
    Ok(ChildRef { prefix, unit, suffix })
}
