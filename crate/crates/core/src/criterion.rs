//! Finite checks behind the subexponential growth criterion.
//!
//! Spheres are split by the minimal number `N(g)` of incompressible factors.
//! For the elements with many factors, consecutive factors are paired; the
//! short pairs are compressible, so their sections at a fixed depth are
//! strictly shorter, which bounds the total section length at that depth.
//! Every inequality here holds for all elements whenever the family meets
//! the hypotheses, so a reported violation points at a defect in the
//! computation rather than in the mathematics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::NONE;
use crate::incompressible::{check_polynomial_bound, BoundCheck, Factorization, Incompressibility};
use crate::intern::StateId;

/// Rejects `ε` outside `(0, 1/2)`.
pub fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1/2), got {epsilon}")))
    }
}

/// Record indices of `Ω(n)` with `N(g) > εn` and with `N(g) ≤ εn`.
pub fn partition(inc: &Incompressibility, fact: &Factorization, n: u32, epsilon: f64) -> (Vec<u32>, Vec<u32>) {
    let t = inc.tables().class(fact.class);
    let lo = (t.gamma(n) - t.sphere_size(n)) as u32;
    (lo..t.gamma(n) as u32).partition(|&i| fact.count[i as usize] as f64 > epsilon * n as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pairing {
    /// Lengths of `h_i = g_{2i−1} g_{2i}`.
    pub lengths: Vec<u32>,
    pub small: usize,
    pub large: usize,
    /// Pairs that nevertheless lie in `I_K`.
    pub incompressible_pairs: usize,
}

/// Pairs consecutive factors `g_{2i−1} g_{2i}` and splits them at `6/ε`.
pub fn pair_factors(inc: &Incompressibility, class: usize, factors: &[u32], epsilon: f64) -> Result<Pairing> {
    let t = inc.tables().class(class);
    let store = inc.tables().group.store();
    let mut lengths = Vec::new();
    let mut incompressible_pairs = 0;
    for pair in factors.chunks_exact(2) {
        let (x, y) = (&t.records()[pair[0] as usize], &t.records()[pair[1] as usize]);
        let h: StateId = store.multiply(x.state, y.state)?;
        let i = t
            .position(h)
            .ok_or(Error::TableExhausted { level: class, requested: x.radius + y.radius, available: t.max_radius })?;
        if inc.in_level(class, i, inc.depth()) {
            incompressible_pairs += 1;
        }
        lengths.push(t.records()[i as usize].radius);
    }
    let small = lengths.iter().filter(|&&l| l as f64 <= 6.0 / epsilon).count();
    Ok(Pairing { large: lengths.len() - small, small, lengths, incompressible_pairs })
}

/// `|S(g)| > (ε/8) n` for one element.
pub fn small_factor_bound_holds(pairing: &Pairing, n: u32, epsilon: f64) -> bool {
    pairing.small as f64 > epsilon / 8.0 * n as f64
}

/// Sum of the lengths of all sections of `state` at depth `l`, looked up
/// in the tables of the corresponding classes.
pub fn section_length_sum(inc: &Incompressibility, class: usize, state: StateId, l: u32) -> Result<u32> {
    let group = &inc.tables().group;
    let store = group.store();
    let mut layer = vec![state];
    let mut c = class;
    for _ in 0..l {
        layer = layer.iter().flat_map(|&s| store.children(s)).collect();
        c = group.next_class(c);
    }
    layer.iter().map(|&s| inc.tables().length(c, s)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusReport {
    pub n: u32,
    pub sphere: usize,
    pub big: usize,
    pub small: usize,
    pub partition_exact: bool,
    /// `None` when `n ≤ 3/ε`.
    pub small_factor_bound: Option<bool>,
    pub min_small_pairs: Option<usize>,
    pub incompressible_pairs: usize,
    pub level_reduction: Option<bool>,
    /// Largest ratio `Σ_j |g_j| / n` over `Ω^>` at the reduction level.
    pub max_reduction_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesesReport {
    /// Every generator of every class lies in `I_K`.
    pub generators_incompressible: bool,
    /// `max_ν |S_ν|`.
    pub generator_bound: usize,
    /// Per class, the polynomial bound on `|I_K ∩ Ω(n)|` for ternary spinal
    /// families; `None` otherwise.
    pub polynomial_bounds: Vec<Option<BoundCheck>>,
    /// `max_ν |I_K ∩ Ω(n)|` by radius.
    pub envelope: Vec<usize>,
    /// Least-squares slope of `log envelope(n)` against `log n`, `n ≥ 2`.
    pub fitted_exponent: Option<f64>,
    /// Second differences of `log(C_l n^e)` are non-positive on `[1, N]`.
    pub log_concave: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub epsilon: f64,
    pub class: usize,
    pub max_radius: u32,
    pub depth: u32,
    /// `l_ν(6/ε)`, when determined.
    pub level: Option<u32>,
    /// Why the level could not be determined.
    pub level_note: Option<String>,
    pub radii: Vec<RadiusReport>,
    pub hypotheses: HypothesesReport,
}

impl CriterionReport {
    pub fn all_pass(&self) -> bool {
        self.radii.iter().all(|r| {
            r.partition_exact && r.small_factor_bound != Some(false) && r.level_reduction != Some(false) && r.incompressible_pairs == 0
        }) && self.hypotheses.generators_incompressible
            && self.hypotheses.polynomial_bounds.iter().flatten().all(|b| b.holds)
    }
}

/// The level `l_ν(6/ε)`. The level function is non-increasing in the
/// radius and at least 1, so a value of 1 on a smaller ball settles it.
pub fn reduction_level(inc: &Incompressibility, class: usize, epsilon: f64) -> Result<u32> {
    let r = (6.0 / epsilon).floor() as u32;
    let t = inc.tables().class(class);
    if r <= t.max_radius {
        return inc.level_function(class, r);
    }
    match inc.level_function(class, t.max_radius)? {
        1 => Ok(1),
        l => Err(Error::Undetermined(format!(
            "l({}) = {l} on the enumerated ball; radius {r} is needed",
            t.max_radius
        ))),
    }
}

pub fn hypotheses(inc: &Incompressibility) -> Result<HypothesesReport> {
    let tables = inc.tables();
    let group = &tables.group;
    let k = inc.depth();
    let mut generators_incompressible = true;
    for c in 0..group.num_classes() {
        for i in 0..group.spec().class(c).generators.len() {
            generators_incompressible &= inc.membership(c, group.generator_state(c, i), k)?;
        }
    }
    let generator_bound = (0..group.num_classes()).map(|c| group.spec().class(c).generators.len()).max().unwrap_or(0);
    let per_class: Vec<Vec<usize>> = (0..group.num_classes()).map(|c| crate::incompressible::level_counts(inc, c, k)).collect();
    let radius = tables.radius() as usize;
    let envelope: Vec<usize> = (0..=radius).map(|n| per_class.iter().map(|v| v[n]).max().unwrap_or(0)).collect();
    let polynomial_bounds: Vec<Option<BoundCheck>> = (0..group.num_classes())
        .map(|c| {
            let s = group.spinal().filter(|s| s.is_ternary())?;
            let level = class_level(group.spec(), c);
            let l = s.kernel_depth(level)? as u32;
            Some(check_polynomial_bound(&per_class[c][..=radius], l, s.b_order()))
        })
        .collect();
    let pts: Vec<(f64, f64)> = envelope
        .iter()
        .enumerate()
        .skip(2)
        .filter(|(_, &v)| v > 0)
        .map(|(n, &v)| ((n as f64).ln(), (v as f64).ln()))
        .collect();
    let fitted_exponent = (pts.len() >= 2).then(|| {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x * x, b + x * y));
        (m * sxy - sx * sy) / (m * sxx - sx * sx)
    });
    let log_concave = polynomial_bounds.iter().flatten().next().map(|b| {
        let e = b.exponent as f64;
        let f = |n: f64| e * n.ln();
        (2..radius.max(2)).all(|n| {
            let n = n as f64;
            f(n + 1.0) - 2.0 * f(n) + f(n - 1.0) <= 0.0
        })
    });
    Ok(HypothesesReport { generators_incompressible, generator_bound, polynomial_bounds, envelope, fitted_exponent, log_concave })
}

/// An absolute level whose class is `class`.
fn class_level(spec: &crate::family::FamilySpec, class: usize) -> usize {
    (0..spec.num_classes()).find(|&l| spec.class_of(l) == class).unwrap_or(class)
}

/// Runs the full harness at `class` on radii `1..=max_radius`.
pub fn run(inc: &Incompressibility, class: usize, max_radius: u32, epsilon: f64) -> Result<CriterionReport> {
    check_epsilon(epsilon)?;
    let fact = inc.factorization(class, max_radius)?;
    if fact.count.contains(&u32::MAX) {
        return Err(Error::Undetermined("some element has no incompressible factorization".into()));
    }
    let level = reduction_level(inc, class, epsilon);
    let t = inc.tables().class(class);
    let mut radii = Vec::new();
    for n in 1..=max_radius {
        let (big, small) = partition(inc, &fact, n, epsilon);
        let applicable = n as f64 > 3.0 / epsilon;
        let mut bound_ok = true;
        let mut min_small = None::<usize>;
        let mut incompressible_pairs = 0;
        let mut reduction_ok = true;
        let mut max_ratio = 0.0f64;
        for &g in &big {
            let pairing = pair_factors(inc, class, &fact.factors(g), epsilon)?;
            incompressible_pairs += pairing.incompressible_pairs;
            if applicable {
                bound_ok &= small_factor_bound_holds(&pairing, n, epsilon);
                min_small = Some(min_small.map_or(pairing.small, |m| m.min(pairing.small)));
                if let Ok(l) = level {
                    let s = section_length_sum(inc, class, t.records()[g as usize].state, l)?;
                    reduction_ok &= (s as f64) < (8.0 - epsilon) / 8.0 * n as f64;
                    max_ratio = max_ratio.max(s as f64 / n as f64);
                }
            }
        }
        let has_level = applicable && level.is_ok();
        radii.push(RadiusReport {
            n,
            sphere: t.sphere_size(n),
            big: big.len(),
            small: small.len(),
            partition_exact: big.len() + small.len() == t.sphere_size(n),
            small_factor_bound: applicable.then_some(bound_ok),
            min_small_pairs: min_small,
            incompressible_pairs,
            level_reduction: has_level.then_some(reduction_ok),
            max_reduction_ratio: (has_level && !big.is_empty()).then_some(max_ratio),
        });
    }
    Ok(CriterionReport {
        epsilon,
        class,
        max_radius,
        depth: inc.depth(),
        level: level.as_ref().ok().copied(),
        level_note: level.as_ref().err().map(|e| e.to_string()),
        radii,
        hypotheses: hypotheses(inc)?,
    })
}

pub fn factor_count_histogram(fact: &Factorization) -> Vec<(u32, usize)> {
    let mut h = std::collections::BTreeMap::new();
    for &c in fact.count.iter().filter(|&&c| c != u32::MAX && c != NONE) {
        *h.entry(c).or_insert(0usize) += 1;
    }
    h.into_iter().collect()
}
