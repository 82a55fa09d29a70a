//! A validated family together with its canonical store.

use std::sync::Arc;

use crate::catalog::SpinalData;
use crate::error::Result;
use crate::family::{FamilySpec, ValidationReport, ZeroSubgroup};
use crate::intern::{StateId, Store};
use crate::perm::Perm;

pub struct Group {
    spec: FamilySpec,
    spinal: Option<SpinalData>,
    report: ValidationReport,
    store: Store,
    zero: Vec<ZeroSubgroup>,
    gens: Vec<Vec<StateId>>,
}

impl Group {
    /// Validates `spec` and builds its store. Fails with the names of all
    /// failed checks.
    pub fn new(spec: FamilySpec) -> Result<Arc<Group>> {
        Group::build(spec, None)
    }

    pub fn with_spinal(spec: FamilySpec, spinal: SpinalData) -> Result<Arc<Group>> {
        Group::build(spec, Some(spinal))
    }

    fn build(spec: FamilySpec, spinal: Option<SpinalData>) -> Result<Arc<Group>> {
        let report = spec.validate().into_result()?;
        let store = spec.store()?;
        let zero = (0..spec.num_classes()).map(|c| spec.zero_subgroup(c)).collect();
        let gens = (0..spec.num_classes())
            .map(|c| (0..spec.class(c).generators.len()).map(|i| store.generator(c, i)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Group { spec, spinal, report, store, zero, gens }))
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn spinal(&self) -> Option<&SpinalData> {
        self.spinal.as_ref()
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn degree(&self) -> usize {
        self.spec.degree
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes()
    }

    pub fn next_class(&self, class: usize) -> usize {
        self.spec.next_class(class)
    }

    pub fn zero_subgroup(&self, class: usize) -> &ZeroSubgroup {
        &self.zero[class]
    }

    pub fn generator_state(&self, class: usize, gen: usize) -> StateId {
        self.gens[class][gen]
    }

    /// Indices of positive-length generators at `class`.
    pub fn unit_generators(&self, class: usize) -> Vec<usize> {
        self.spec.class(class).unit_length().map(|(i, _)| i).collect()
    }

    pub fn rooted(&self, p: Perm) -> StateId {
        self.store.rooted(p)
    }
}

impl std::fmt::Debug for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Group")
            .field("degree", &self.spec.degree)
            .field("classes", &self.spec.num_classes())
            .field("states", &self.store.len())
            .finish()
    }
}
