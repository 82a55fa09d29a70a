//! The `treegrowth` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::GroupConfig;
use crate::criterion::{self, CriterionReport};
use crate::error::{Error, Result};
use crate::family::ValidationReport;
use crate::group::Group;
use crate::growth::{self, BallCertificate, KappaEstimate, Tables};
use crate::incompressible::{self, BoundCheck, DerivativeAudit, Incompressibility, IncompressibilityReport};
use crate::persist::{self, Cache};

#[derive(Debug, Parser)]
#[command(name = "treegrowth", version, about = "Growth of groups acting on regular rooted trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a group configuration.
    Define(Common),
    /// Sphere sizes per level class, as CSV.
    Spheres(Common),
    /// The `I_k` filtration, the derivative audit and the polynomial bound.
    Incompressible(Common),
    /// The counting checks of the growth criterion.
    Criterion(Common),
    /// Every analysis in one JSON document.
    Report(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Group configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Largest radius to enumerate; overrides the config caps.
    #[arg(long)]
    pub max_radius: Option<u32>,
    /// Level classes to report, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Depth `K` of the incompressibility filtration; overrides the config caps.
    #[arg(long)]
    pub k_depth: Option<u32>,
    #[arg(long, default_value_t = 0.45)]
    pub epsilon: f64,
    /// Output file; for `incompressible`, a prefix for `.csv` and `.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for persisted sphere tables.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Element cap per level class; overrides the config caps.
    #[arg(long)]
    pub budget: Option<usize>,
}

/// A loaded configuration with command-line overrides applied.
pub struct Session {
    pub config: GroupConfig,
    pub hash: String,
    pub group: Arc<Group>,
    pub args: Common,
}

impl Session {
    pub fn open(args: &Common) -> Result<Session> {
        let mut config = GroupConfig::load(&args.config)?;
        if let Some(r) = args.max_radius {
            config.caps.max_radius = r;
        }
        if let Some(k) = args.k_depth {
            config.caps.max_level_depth = k;
        }
        if let Some(b) = args.budget {
            config.caps.max_elements = b;
        }
        let group = config.build()?;
        Ok(Session { hash: config.hash(), config, group, args: args.clone() })
    }

    pub fn classes(&self) -> Result<Vec<usize>> {
        let all: Vec<usize> = (0..self.group.num_classes()).collect();
        match &self.args.levels {
            None => Ok(all),
            Some(ls) => match ls.iter().find(|&&l| l >= all.len()) {
                Some(l) => Err(Error::InvalidArgument(format!("level class {l} does not exist; there are {}", all.len()))),
                None => Ok(ls.clone()),
            },
        }
    }

    /// Sphere tables at every class, from the cache when possible.
    pub fn tables(&self) -> Result<Tables> {
        let caps = &self.config.caps;
        let cache = self.args.cache_dir.as_ref().map(Cache::new).transpose()?;
        if let Some(c) = &cache {
            if let Some(t) = c.load(&self.group, &self.hash, caps.max_radius)? {
                return Ok(t);
            }
        }
        let t = Tables::enumerate(&self.group, caps.max_radius, caps.max_elements)?;
        if let Some(c) = &cache {
            c.store(&t, &self.hash)?;
        }
        Ok(t)
    }

    pub fn incompressibility(&self) -> Result<Incompressibility> {
        let t = self.tables()?;
        if t.truncated() {
            return Err(Error::BudgetExceeded { budget: self.config.caps.max_elements });
        }
        Incompressibility::new(t, self.config.caps.max_level_depth)
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            serde_json::to_writer_pretty(&mut w, value)?;
            w.write_all(b"\n")?;
            w.flush()?;
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

/// Runs a command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let common = match &cli.command {
        Command::Define(c) | Command::Spheres(c) | Command::Incompressible(c) | Command::Criterion(c) | Command::Report(c) => c,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match cli.command {
        Command::Define(a) => define(&a),
        Command::Spheres(a) => spheres(&Session::open(&a)?),
        Command::Incompressible(a) => incompressible_cmd(&Session::open(&a)?),
        Command::Criterion(a) => criterion_cmd(&Session::open(&a)?),
        Command::Report(a) => report(&Session::open(&a)?),
    }
}

fn define(args: &Common) -> Result<i32> {
    let config = GroupConfig::load(&args.config)?;
    let family = config.family()?;
    let report = family.spec.validate();
    print!("{report}");
    if report.is_valid() {
        println!("group hash {}", config.hash());
        Ok(0)
    } else {
        Ok(1)
    }
}

fn spheres(s: &Session) -> Result<i32> {
    let t = s.tables()?;
    let classes = s.classes()?;
    match &s.args.out {
        Some(p) => persist::write_sphere_csv(BufWriter::new(File::create(p)?), &t, &classes)?,
        None => persist::write_sphere_csv(std::io::stdout().lock(), &t, &classes)?,
    }
    if t.truncated() {
        log::error!("element cap {} reached; output stops at radius {}", s.config.caps.max_elements, t.radius());
        return Ok(Error::BudgetExceeded { budget: s.config.caps.max_elements }.exit_code());
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
pub struct IncompressibleOutput {
    pub group_hash: String,
    pub report: IncompressibilityReport,
    pub hereditary: bool,
    /// `l_ν(r)` per class and radius; `None` where undetermined.
    pub level_function: Vec<Vec<Option<u32>>>,
    /// `None` when the group is not a ternary spinal group.
    pub derivative_audit: Option<Vec<DerivativeAudit>>,
    /// `None` for classes where the polynomial bound does not apply.
    pub polynomial_bounds: Vec<Option<BoundCheck>>,
}

pub fn incompressible_output(s: &Session, inc: &Incompressibility) -> Result<IncompressibleOutput> {
    let group = &s.group;
    let classes = s.classes()?;
    let k = inc.depth();
    let tables = inc.tables();
    let ternary = group.spinal().is_some_and(|d| d.is_ternary());
    let derivative_audit = if ternary {
        let audits = classes
            .iter()
            .map(|&c| {
                let words: Vec<_> = (0..tables.class(c).len() as u32)
                    .filter(|&i| inc.in_level(c, i, k))
                    .map(|i| incompressible::record_word(tables, c, i))
                    .collect();
                incompressible::audit_derivatives(words.iter().map(|w| w.as_slice()))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(audits)
    } else {
        None
    };
    let hyp = criterion::hypotheses(inc)?;
    Ok(IncompressibleOutput {
        group_hash: s.hash.clone(),
        report: inc.report(),
        hereditary: inc.check_hereditary(),
        level_function: classes
            .iter()
            .map(|&c| (1..=tables.radius()).map(|r| inc.level_function(c, r).ok()).collect())
            .collect(),
        derivative_audit,
        polynomial_bounds: classes.iter().map(|&c| hyp.polynomial_bounds[c].clone()).collect(),
    })
}

fn incompressible_cmd(s: &Session) -> Result<i32> {
    let inc = s.incompressibility()?;
    let out = incompressible_output(s, &inc)?;
    let classes = s.classes()?;
    let csv_path = s.args.out.as_ref().map(|p| p.with_extension("csv"));
    let json_path = s.args.out.as_ref().map(|p| p.with_extension("json"));
    {
        let sink: Box<dyn Write> = match &csv_path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        let mut w = csv::Writer::from_writer(sink);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["level", "k", "n", "count"]).map_err(io)?;
        for cr in out.report.classes.iter().filter(|cr| classes.contains(&cr.class)) {
            for (k, row) in cr.counts.iter().enumerate() {
                for (n, count) in row.iter().enumerate() {
                    w.write_record([cr.class.to_string(), k.to_string(), n.to_string(), count.to_string()]).map_err(io)?;
                }
            }
        }
        w.flush()?;
    }
    if json_path.is_some() {
        write_json(json_path.as_deref(), &out)?;
    }
    for (c, b) in classes.iter().zip(&out.polynomial_bounds) {
        match b {
            Some(b) => eprintln!(
                "level {c}: polynomial bound {} (l = {}, C = {}, exponent {})",
                if b.holds { "PASS" } else { "FAIL" },
                b.l,
                b.constant,
                b.exponent
            ),
            None => eprintln!("level {c}: polynomial bound not applicable"),
        }
    }
    if let Some(audits) = &out.derivative_audit {
        for (c, a) in classes.iter().zip(audits) {
            eprintln!("level {c}: derivative audit {} of {} words violate", a.violations.len(), a.checked);
        }
    } else {
        eprintln!("derivative audit not applicable");
    }
    let ok = out.hereditary
        && out.polynomial_bounds.iter().flatten().all(|b| b.holds)
        && out.derivative_audit.iter().flatten().all(|a| a.violations.is_empty());
    Ok(if ok { 0 } else { 1 })
}

fn criterion_cmd(s: &Session) -> Result<i32> {
    criterion::check_epsilon(s.args.epsilon)?;
    let inc = s.incompressibility()?;
    let reports = s
        .classes()?
        .into_iter()
        .map(|c| criterion::run(&inc, c, inc.tables().radius(), s.args.epsilon))
        .collect::<Result<Vec<CriterionReport>>>()?;
    for r in &reports {
        let insufficient = r.radii.iter().all(|x| x.level_reduction.is_none());
        eprintln!(
            "level {}: {}{}",
            r.class,
            if r.all_pass() { "PASS" } else { "FAIL" },
            if insufficient { format!(" (insufficient n: level reduction needs n > {:.2})", 3.0 / r.epsilon) } else { String::new() }
        );
    }
    write_json(s.args.out.as_deref(), &reports)?;
    Ok(if reports.iter().all(|r| r.all_pass()) { 0 } else { 1 })
}

#[derive(Debug, Serialize)]
pub struct LevelSummary {
    pub level: usize,
    pub sphere_sizes: Vec<usize>,
    pub kappa: KappaEstimate,
    pub submultiplicative: bool,
    pub wreath_inequality: bool,
    pub non_expansion: bool,
    pub ball_bound: BallCertificate,
}

#[derive(Debug, Serialize)]
pub struct FullReport {
    pub group_hash: String,
    pub config: GroupConfig,
    pub validation: ValidationReport,
    pub truncated: bool,
    pub levels: Vec<LevelSummary>,
    pub incompressible: Option<IncompressibleOutput>,
    pub criterion: Option<Vec<CriterionReport>>,
}

fn report(s: &Session) -> Result<i32> {
    criterion::check_epsilon(s.args.epsilon)?;
    let tables = s.tables()?;
    let group = &s.group;
    let classes = s.classes()?;
    let r = tables.radius();
    let levels = classes
        .iter()
        .map(|&c| {
            let t = tables.class(c);
            let units = group.unit_generators(c).len();
            Ok(LevelSummary {
                level: c,
                sphere_sizes: t.sphere_sizes(),
                kappa: growth::kappa_estimates(&t.sphere_sizes()),
                submultiplicative: growth::check_submultiplicative(&t.gammas()),
                wreath_inequality: growth::check_wreath_inequality(&tables, c, r)?,
                non_expansion: growth::check_non_expansion(&tables, c, r)?,
                ball_bound: growth::certify_ball_bound(t, group.zero_subgroup(c).len(), units),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let truncated = tables.truncated();
    let (incompressible, criterion) = if truncated {
        (None, None)
    } else {
        let inc = Incompressibility::new(tables, s.config.caps.max_level_depth)?;
        let out = incompressible_output(s, &inc)?;
        let crit = classes.iter().map(|&c| criterion::run(&inc, c, inc.tables().radius(), s.args.epsilon)).collect::<Result<Vec<_>>>()?;
        (Some(out), Some(crit))
    };
    let full = FullReport {
        group_hash: s.hash.clone(),
        config: s.config.clone(),
        validation: group.report().clone(),
        truncated,
        levels,
        incompressible,
        criterion,
    };
    write_json(s.args.out.as_deref(), &full)?;
    Ok(if truncated { Error::BudgetExceeded { budget: s.config.caps.max_elements }.exit_code() } else { 0 })
}
