//! Acceptance criteria 1–10. Every comparison is exact: counts are integers
//! and every inequality is checked without slack.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use treegrowth::catalog::{self, Family, SpinalData};
use treegrowth::config::{GroupConfig, GroupKind};
use treegrowth::criterion;
use treegrowth::family::{FamilySpec, GeneratorSpec, LevelSpec};
use treegrowth::growth::{self, SphereTable, Tables, DEFAULT_MAX_ELEMENTS};
use treegrowth::incompressible::{
    audit_derivatives, level_counts, polynomial_bound_constants, record_word, switch_index, Incompressibility,
};
use treegrowth::intern::StateId;
use treegrowth::persist::PersistedTable;
use treegrowth::{Group, Perm};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);
/// Group, level class, failing radii and the radius-1 row.
type Violation = (String, usize, Vec<u32>, (u32, u128, u128));

/// Depth of the filtration throughout.
const K: u32 = 6;
/// Radius range of the sphere checks.
const N_MAX: u32 = 8;
/// Radius range of the incompressibility checks.
const N_INC: u32 = 10;
const EPSILON: f64 = 0.45;
/// Truncation depths of the action oracle.
const ORACLE_DEPTHS: [u32; 2] = [8, 10];
/// Radius to which the `(Z/3)²` spinal groups are enumerated exactly.
const R_SUNIC: u32 = 5;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn build(f: Family) -> Arc<Group> {
    f.build().expect("catalog family builds")
}

/// Every catalog group with the radius it is enumerated to here.
fn catalog_groups() -> Vec<(String, Arc<Group>, u32)> {
    let mut v = vec![
        ("first Grigorchuk".to_string(), build(catalog::first_grigorchuk()), N_MAX),
        ("Fabrykowski-Gupta".into(), build(catalog::fabrykowski_gupta()), N_MAX),
        ("Gupta-Sidki".into(), build(catalog::gupta_sidki()), N_MAX),
        ("sunic(3,1)".into(), build(catalog::sunic(3, 1, &[]).unwrap()), N_MAX),
        ("sunic(2,2,1)".into(), build(catalog::sunic(2, 2, &[1]).unwrap()), N_MAX),
        ("grigorchuk_3(0,3)".into(), build(catalog::grigorchuk_p(3, &[], &[0, 3]).unwrap()), 4),
        ("D_(0)".into(), build(catalog::nekrashevych(&[], &[0]).unwrap()), N_MAX),
        ("D_(1)".into(), build(catalog::nekrashevych(&[], &[1]).unwrap()), N_MAX),
        ("D_(01)".into(), build(catalog::nekrashevych(&[], &[0, 1]).unwrap()), N_MAX),
        ("Neumann".into(), build(catalog::neumann6()), 2),
    ];
    for a in 0..3 {
        v.push((format!("sunic(3,2,{a})"), build(catalog::sunic(3, 2, &[a]).unwrap()), 4));
    }
    v
}

fn tables(g: &Arc<Group>, r: u32) -> Tables {
    let t = Tables::enumerate(g, r, DEFAULT_MAX_ELEMENTS).expect("enumeration");
    assert!(!t.truncated(), "element cap reached");
    t
}

fn fg_inc() -> &'static Incompressibility {
    static INC: OnceLock<Incompressibility> = OnceLock::new();
    INC.get_or_init(|| Incompressibility::new(tables(&build(catalog::fabrykowski_gupta()), N_INC), K).unwrap())
}

fn sunic_inc(a: u32) -> &'static Incompressibility {
    static INC: [OnceLock<Incompressibility>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    INC[a as usize].get_or_init(|| Incompressibility::new(tables(&build(catalog::sunic(3, 2, &[a]).unwrap()), R_SUNIC), K).unwrap())
}

fn oracle_equivalence() -> Outcome {
    let groups = [
        ("first Grigorchuk", catalog::first_grigorchuk()),
        ("Fabrykowski-Gupta", catalog::ggs(3, &[1, 0]).unwrap()),
        ("Gupta-Sidki", catalog::ggs(3, &[1, 1]).unwrap()),
        ("D_(01)", catalog::nekrashevych(&[], &[0, 1]).unwrap()),
    ];
    let mut out = Vec::new();
    for (name, f) in groups {
        let spec = f.spec.clone();
        let g = build(f);
        for c in 0..g.num_classes() {
            let main = SphereTable::enumerate(&g, c, 6, DEFAULT_MAX_ELEMENTS).unwrap().sphere_sizes();
            for depth in ORACLE_DEPTHS {
                let oracle = common::oracle_spheres(&spec, c, depth, 6);
                ensure!(main == oracle, "{name} level {c}, depth {depth}: enumerator {main:?} vs oracle {oracle:?}");
            }
            if c == 0 {
                out.push(format!("{name} {main:?}"));
            }
        }
    }
    Ok(out.join("; "))
}

/// The literal bound `|Ball(n)| ≤ |G₀|^(n+1)|S₁|^n` for `n ≤ 8`. Failures
/// are listed per group; the sphere form `|Ω(n)| ≤ |G₀|^(n+1)|S₁|^n` and the
/// summed ball form are checked alongside and must hold.
fn ball_bound() -> Outcome {
    let mut violations: Vec<Violation> = Vec::new();
    let mut certified = Vec::new();
    for (name, g, r) in catalog_groups() {
        let t = tables(&g, r);
        for c in 0..g.num_classes() {
            let (z, u) = (g.zero_subgroup(c).len(), g.unit_generators(c).len());
            let table = t.class(c);
            let cert = growth::certify_ball_bound(table, z, u);
            for n in 0..=r {
                ensure!(table.sphere_size(n) as u128 <= growth::ball_bound(z, u, n), "{name} level {c}: |Ω({n})| exceeds the sphere bound");
                ensure!(table.gamma(n) as u128 <= growth::summed_ball_bound(z, u, n), "{name} level {c}: |Ball({n})| exceeds the summed bound");
            }
            let mut bad: Vec<u32> = cert.rows.iter().filter(|&&(_, b, bound)| b > bound).map(|&(n, ..)| n).collect();
            if r < N_MAX {
                match cert.certified_from {
                    Some(n0) if c == 0 => certified.push(format!("{name} n≥{n0}")),
                    Some(_) => {}
                    None => bad.extend(r + 1..=N_MAX),
                }
            }
            if !bad.is_empty() {
                violations.push((name.clone(), c, bad, cert.rows[1]));
            }
        }
    }
    let note = format!("sphere and summed forms hold; certified beyond the enumerated radius: {}", certified.join(", "));
    if !violations.is_empty() {
        let mut radii: Vec<u32> = violations.iter().flat_map(|v| v.2.iter().copied()).collect();
        radii.sort_unstable();
        radii.dedup();
        let mut groups: Vec<&str> = violations.iter().map(|v| v.0.as_str()).collect();
        groups.dedup();
        let examples: Vec<String> =
            violations.iter().filter(|v| v.1 == 0).map(|(name, _, _, (_, b, bound))| format!("{name} |Ball(1)|={b}>{bound}")).collect();
        return Err(format!(
            "literal ball bound fails at n={radii:?} in {} level classes of {} groups ({}); {note}",
            violations.len(),
            groups.len(),
            examples.join(", ")
        ));
    }
    Ok(note)
}

fn positive_children(spec: &FamilySpec) -> Result<(), String> {
    for c in 0..spec.num_classes() {
        let next = spec.class(spec.next_class(c));
        for g in &spec.class(c).generators {
            let weights: Vec<u32> =
                g.children.iter().map(|w| w.iter().map(|&h| u32::from(next.generators[h].pseudolength)).sum()).collect();
            ensure!(weights.iter().filter(|&&w| w > 0).count() <= 1, "{} at level {c}: child weights {weights:?}", g.name);
            ensure!(weights.iter().sum::<u32>() <= u32::from(g.pseudolength), "{} at level {c} expands", g.name);
        }
    }
    Ok(())
}

fn non_expansion() -> Outcome {
    let mut total = 0;
    for (name, f) in [("Fabrykowski-Gupta", catalog::fabrykowski_gupta()), ("first Grigorchuk", catalog::first_grigorchuk())] {
        positive_children(&f.spec)?;
        let g = build(f);
        let t = tables(&g, N_MAX);
        for c in 0..g.num_classes() {
            ensure!(growth::check_non_expansion(&t, c, N_MAX).unwrap(), "{name} level {c}: section lengths exceed length");
            total += t.class(c).len();
        }
        ensure!(g.report().check("single-positive-child").is_some_and(|c| c.passed), "{name}: validator disagrees");
    }
    Ok(format!("{total} elements decomposed"))
}

fn nesting_and_generators() -> Outcome {
    let inc = fg_inc();
    let report = inc.report();
    ensure!(report.classes.iter().all(|c| c.nested), "FG: flags not nested");
    for cr in &report.classes {
        for k in 0..K as usize {
            for n in 0..=N_INC as usize {
                ensure!(cr.counts[k + 1][n] <= cr.counts[k][n], "FG: |I_{}({n})| > |I_{k}({n})|", k + 1);
            }
        }
    }
    ensure!(inc.check_hereditary(), "FG: hereditary property fails");
    let mut gens = 0;
    for (name, g, _) in catalog_groups() {
        let inc = Incompressibility::new(tables(&g, 1), K).unwrap();
        for c in 0..g.num_classes() {
            for i in 0..g.spec().class(c).generators.len() {
                ensure!(inc.membership(c, g.generator_state(c, i), K).unwrap(), "{name}: generator {i} of level {c} not in I_{K}");
                gens += 1;
            }
        }
    }
    Ok(format!("FG |I_6(n)| = {:?}, stabilises at k={:?}; {gens} generators in I_6", report.classes[0].counts[K as usize], report.classes[0].stabilization_depth))
}

/// `∂c` of the three-letter word `b a^{k1} b' a^{k2} b''`.
fn window_state(g: &Group, c: usize, b: [usize; 3], k: [u32; 2]) -> StateId {
    let store = g.store();
    let a = Perm::rotation(3, 1);
    let pow = |e: u32| (0..e).fold(Perm::identity(3), |p, _| p.then_after(a));
    let mut s = g.generator_state(c, b[0]);
    for (j, &e) in k.iter().enumerate() {
        s = store.multiply(s, g.rooted(pow(e))).unwrap();
        s = store.multiply(s, g.generator_state(c, b[j + 1])).unwrap();
    }
    s
}

/// Certifies the two-run law for every radius. A consecutive factor of a
/// geodesic word of an element of `I_k` is a geodesic word of an element of
/// `I_k`, and the two forbidden patterns (`∂c = 0`, `∂c = 1, 2`) occupy at
/// most three consecutive `B`-letters. So it suffices that no length-3 word
/// `b a^{k1} b' a^{k2} b''` with a forbidden `(k1, k2)` is a geodesic of an
/// element of `I_K`, and that no `b a^0 b'` has length 2.
fn window_certificate(inc: &Incompressibility) -> Result<usize, String> {
    let g = &inc.tables().group;
    let mut checked = 0;
    for c in 0..g.num_classes() {
        let units = g.unit_generators(c);
        for &b0 in &units {
            for &b1 in &units {
                let s = g.store().multiply(g.generator_state(c, b0), g.generator_state(c, b1)).unwrap();
                ensure!(inc.tables().length(c, s).unwrap() < 2, "level {c}: b b' without conjugation is geodesic");
                for &b2 in &units {
                    for k1 in 0..3 {
                        for k2 in 0..3 {
                            let s = window_state(g, c, [b0, b1, b2], [k1, k2]);
                            let geodesic = inc.tables().length(c, s).unwrap() == 3;
                            let incompressible = geodesic && inc.membership(c, s, K).unwrap();
                            let good = switch_index(&[k1, k2]).is_some();
                            ensure!(!incompressible || good, "level {c}: window ∂c = ({k1}, {k2}) lies in I_{K}");
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(checked)
}

fn two_run_law() -> Outcome {
    let mut notes = Vec::new();
    // Fabrykowski-Gupta: every element of I_6 up to radius 10, from the
    // tables and independently from the restricted enumeration.
    let inc = fg_inc();
    let words: Vec<_> = (0..inc.tables().class(0).len() as u32)
        .filter(|&i| inc.in_level(0, i, K))
        .map(|i| record_word(inc.tables(), 0, i))
        .collect();
    let audit = audit_derivatives(words.iter().map(|w| w.as_slice())).unwrap();
    ensure!(audit.violations.is_empty(), "FG: {:?}", &audit.violations[..audit.violations.len().min(3)]);
    let ext = inc.extend(0, N_INC).unwrap();
    ensure!(ext.counts() == level_counts(inc, 0, K), "FG: restricted enumeration {:?} disagrees with tables", ext.counts());
    let ext_audit = audit_derivatives(ext.spheres.iter().flatten().map(|e| e.word.as_slice())).unwrap();
    ensure!(ext_audit.violations.is_empty(), "FG restricted: {:?}", ext_audit.violations.first());
    notes.push(format!("FG {} elements", audit.checked));
    // The (Z/3)² family: direct audit to the exact radius, window certificate beyond.
    for a in 0..3 {
        let inc = sunic_inc(a);
        let mut checked = 0;
        for c in 0..inc.tables().group.num_classes() {
            let words: Vec<_> = (0..inc.tables().class(c).len() as u32)
                .filter(|&i| inc.in_level(c, i, K))
                .map(|i| record_word(inc.tables(), c, i))
                .collect();
            let audit = audit_derivatives(words.iter().map(|w| w.as_slice())).unwrap();
            ensure!(audit.violations.is_empty(), "sunic(3,2,{a}) level {c}: {:?}", audit.violations.first());
            checked += audit.checked;
        }
        let windows = window_certificate(inc).map_err(|e| format!("sunic(3,2,{a}) {e}"))?;
        notes.push(format!("sunic(3,2,{a}) {checked} elements to n={R_SUNIC}, {windows} windows for all n"));
    }
    // b · b^a · b = b a b a² b: sections of lengths summing to 2 < 3.
    let fg = &inc.tables().group;
    let b = fg.unit_generators(0)[0];
    let s = window_state(fg, 0, [b, b, b], [1, 2]);
    let lengths = inc.tables().section_lengths(0, s).unwrap();
    ensure!(inc.tables().length(0, s).unwrap() == 3, "b·b^a·b should have length 3");
    ensure!(lengths.iter().sum::<u32>() == 2, "b·b^a·b sections {lengths:?}");
    ensure!(!inc.membership(0, s, 1).unwrap(), "b·b^a·b should be compressible at level 1");
    notes.push(format!("b·b^a·b sections {lengths:?}"));
    Ok(notes.join("; "))
}

fn polynomial_bound() -> Outcome {
    let fg = &fg_inc().tables().group;
    let l = fg.spinal().unwrap().kernel_depth(0).unwrap() as u32;
    let (c, e) = polynomial_bound_constants(l, 3);
    ensure!(l == 0 && c == Some(13122) && e == 4, "FG constants l={l}, C={c:?}, e={e}");
    let counts = level_counts(fg_inc(), 0, K);
    let check = treegrowth::incompressible::check_polynomial_bound(&counts, l, 3);
    ensure!(check.holds && check.rows.len() == N_INC as usize, "FG bound fails: {:?}", check.rows);
    let mut notes = vec![format!("FG l=0 C=13122 e=4 on n=1..{N_INC}")];
    for a in 0..3 {
        let inc = sunic_inc(a);
        let g = &inc.tables().group;
        let s = g.spinal().unwrap();
        for c in 0..g.num_classes() {
            let level = (0..).find(|&v| g.spec().class_of(v) == c).unwrap();
            let l = s.kernel_depth(level).ok_or("kernel condition")? as u32;
            let (cl, e) = polynomial_bound_constants(l, s.b_order());
            let check = treegrowth::incompressible::check_polynomial_bound(&level_counts(inc, c, K), l, s.b_order());
            ensure!(check.holds, "sunic(3,2,{a}) level {c}: {:?}", check.rows);
            // Beyond the exact radius, |I_K ∩ Ω(n)| ≤ |Ball(n)| ≤ |G₀|^(n+1)|S₁|^n.
            let (z, u) = (g.zero_subgroup(c).len(), g.unit_generators(c).len());
            let cl = cl.ok_or("C_l overflow")?;
            for n in R_SUNIC + 1..=N_INC {
                let bound = cl.checked_mul((n as u128).pow(e)).ok_or("bound overflow")?;
                ensure!(growth::ball_bound(z, u, n) <= bound, "sunic(3,2,{a}) level {c}, n={n}: ball bound exceeds C_l n^e");
            }
            if c == 0 {
                notes.push(format!("sunic(3,2,{a}) l={l} e={e}"));
            }
        }
    }
    Ok(notes.join("; "))
}

fn criterion_machinery() -> Outcome {
    let g = build(catalog::fabrykowski_gupta());
    let inc = Incompressibility::new(tables(&g, N_MAX), K).unwrap();
    let report = criterion::run(&inc, 0, N_MAX, EPSILON).unwrap();
    ensure!(report.level == Some(1), "l(6/ε) = {:?} ({:?})", report.level, report.level_note);
    let mut checked = 0;
    for r in &report.radii {
        ensure!(r.partition_exact && r.big + r.small == r.sphere, "n={}: partition {} + {} ≠ {}", r.n, r.big, r.small, r.sphere);
        ensure!(r.incompressible_pairs == 0, "n={}: {} paired factors lie in I_K", r.n, r.incompressible_pairs);
        if r.n as f64 > 3.0 / EPSILON {
            ensure!(r.small_factor_bound == Some(true), "n={}: |S(g)| ≤ (ε/8)n for some g", r.n);
            ensure!(r.level_reduction == Some(true), "n={}: level reduction fails, max ratio {:?}", r.n, r.max_reduction_ratio);
            checked += r.big;
        }
    }
    ensure!(checked > 0, "no element with n > 3/ε in Ω^>");
    ensure!(report.all_pass(), "hypotheses: {:?}", report.hypotheses);
    let last = report.radii.last().unwrap();
    Ok(format!("{checked} elements of Ω^> checked; n=8: |Ω^>|={}, |Ω^<|={}, max ratio {:.3} < {:.3}", last.big, last.small, last.max_reduction_ratio.unwrap(), (8.0 - EPSILON) / 8.0))
}

fn wreath_surrogate() -> Outcome {
    let mut notes = Vec::new();
    for (name, f) in [("Fabrykowski-Gupta", catalog::fabrykowski_gupta()), ("first Grigorchuk", catalog::first_grigorchuk())] {
        let g = build(f);
        let t = tables(&g, N_MAX);
        for c in 0..g.num_classes() {
            ensure!(growth::check_wreath_inequality(&t, c, N_MAX).unwrap(), "{name} level {c} fails");
        }
        notes.push(format!("{name} {} levels", g.num_classes()));
    }
    Ok(notes.join(", "))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_treegrowth")).args(args).output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    Ok(out.stdout)
}

fn determinism_and_persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (name, config) in [
        ("fg", GroupConfig::new(GroupKind::Ggs { degree: 3, epsilon: vec![1, 0] })),
        ("grigorchuk", GroupConfig::new(GroupKind::GrigorchukP { p: 2, k_preperiod: vec![], k_period: vec![1, 0, 2] })),
    ] {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
        let p = path.to_str().unwrap();
        let mut outputs = Vec::new();
        for threads in ["1", "2"] {
            let csv = dir.path().join(format!("{name}-{threads}.csv"));
            run_cli(&["spheres", "--config", p, "--max-radius", "8", "--threads", threads, "--out", csv.to_str().unwrap()])?;
            let inc = dir.path().join(format!("{name}-inc-{threads}"));
            run_cli(&["incompressible", "--config", p, "--max-radius", "6", "--threads", threads, "--out", inc.to_str().unwrap()])?;
            outputs.push((std::fs::read(&csv).unwrap(), std::fs::read(inc.with_extension("csv")).unwrap()));
        }
        ensure!(outputs[0] == outputs[1], "{name}: outputs differ between thread counts");
        compared += 2;

        let g = config.build().unwrap();
        let inc = Incompressibility::new(tables(&g, 6), K).unwrap();
        for c in 0..g.num_classes() {
            let t = inc.tables().class(c);
            let saved = PersistedTable::from_table(t, &config.hash(), Some((inc.flags(c), K))).unwrap();
            let file = dir.path().join(format!("{name}-{c}.jsonl"));
            saved.save(&file).unwrap();
            let loaded = PersistedTable::load(&file).unwrap();
            ensure!(loaded == saved, "{name} level {c}: rows differ after reload");
            ensure!(loaded.flags() == inc.flags(c), "{name} level {c}: flags differ after reload");
            let back = loaded.to_table(&g).unwrap();
            ensure!(back.sphere_sizes() == t.sphere_sizes() && back.records() == t.records(), "{name} level {c}: table differs");
        }
    }
    Ok(format!("{compared} CSV pairs byte-identical for 1 and 2 threads; tables and flags round-trip"))
}

fn negative_controls() -> Outcome {
    let gcd = catalog::ggs(4, &[2, 0, 2]).unwrap_err().to_string();
    ensure!(gcd.contains("gcd condition"), "GGS: {gcd}");
    let a = Perm::rotation(3, 1);
    let trivial = SpinalData {
        degree: 3,
        b_orders: vec![3],
        a_generators: vec![a],
        omega_preperiod: vec![],
        omega_period: vec![vec![vec![Perm::identity(3)], vec![Perm::identity(3)]]],
        labels: vec![],
    };
    let kernel = catalog::spinal(trivial).unwrap_err().to_string();
    ensure!(kernel.contains("kernel condition"), "spinal: {kernel}");
    let t = Perm::from_one_line(&[2, 1, 3]).unwrap();
    let spec = FamilySpec {
        degree: 3,
        preperiod: vec![],
        period: vec![LevelSpec {
            generators: vec![GeneratorSpec { name: "t".into(), pseudolength: 0, inverse: 0, root: t, children: vec![vec![]; 3] }],
        }],
    };
    let report = spec.validate();
    let failed: Vec<&str> = report.failed().map(|c| c.name).collect();
    ensure!(failed == ["transitivity"], "non-transitive: failed checks {failed:?}");
    ensure!(Group::new(spec).unwrap_err().to_string().contains("transitivity"), "group construction accepted it");
    Ok(format!("gcd, kernel and transitivity rejections: {gcd:?}; {kernel:?}; {failed:?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "oracle equivalence", oracle_equivalence),
        (2, "ball bound", ball_bound),
        (3, "non-expansion", non_expansion),
        (4, "I_k nesting and generators", nesting_and_generators),
        (5, "two-run law", two_run_law),
        (6, "polynomial bound", polynomial_bound),
        (7, "criterion machinery", criterion_machinery),
        (8, "wreath inequality", wreath_surrogate),
        (9, "determinism and persistence", determinism_and_persistence),
        (10, "negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name} [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name} [{secs:.1}s]: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
