//! On-disk sphere tables, the sphere CSV, and a hash-keyed table cache.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Group;
use crate::growth::{kappa_estimates, SphereTable, Tables, NONE};

pub const FORMAT_VERSION: u32 = 1;
/// Deepest `I_k` whose flag fits the persisted bitfield.
pub const MAX_PERSISTED_DEPTH: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableHeader {
    pub format_version: u32,
    pub group_hash: String,
    pub level: usize,
    pub max_radius: u32,
    pub truncated: bool,
    /// Depth the flags were computed to; `None` when no flags are stored.
    pub flag_depth: Option<u32>,
}

/// One element: radius, parent row, unit generator, zero-subgroup index,
/// and the `I_k` bitfield. The element is `parent · gen · perm`, or the
/// rooted element `perm` when there is no parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row(pub u32, pub Option<u32>, pub Option<u32>, pub u16, pub u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PersistedTable {
    pub header: TableHeader,
    pub rows: Vec<Row>,
}

fn opt(x: u32) -> Option<u32> {
    (x != NONE).then_some(x)
}

impl PersistedTable {
    pub fn from_table(table: &SphereTable, group_hash: &str, flags: Option<(&[u32], u32)>) -> Result<PersistedTable> {
        if let Some((_, k)) = flags {
            if k > MAX_PERSISTED_DEPTH {
                return Err(Error::InvalidArgument(format!("flags beyond depth {MAX_PERSISTED_DEPTH} are not persisted")));
            }
        }
        let mask = flags.map_or(0, |(_, k)| (1u32 << (k + 1)) - 1);
        let rows = table
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| Row(r.radius, opt(r.parent), opt(r.gen), r.perm, flags.map_or(0, |(f, _)| f[i] & mask)))
            .collect();
        Ok(PersistedTable {
            header: TableHeader {
                format_version: FORMAT_VERSION,
                group_hash: group_hash.to_owned(),
                level: table.class,
                max_radius: table.max_radius,
                truncated: table.truncated,
                flag_depth: flags.map(|(_, k)| k),
            },
            rows,
        })
    }

    pub fn to_table(&self, group: &Group) -> Result<SphereTable> {
        let rows: Vec<(u32, u32, u32, u16)> =
            self.rows.iter().map(|r| (r.0, r.1.unwrap_or(NONE), r.2.unwrap_or(NONE), r.3)).collect();
        let t = SphereTable::from_records(group, self.header.level, &rows, self.header.truncated)?;
        if t.max_radius != self.header.max_radius {
            return Err(Error::Parse(format!("header radius {} but rows reach {}", self.header.max_radius, t.max_radius)));
        }
        Ok(t)
    }

    pub fn flags(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.4).collect()
    }

    /// JSON Lines: the header, then one array per row.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for r in &self.rows {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PersistedTable> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let first = lines.next().ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))??;
        let header: TableHeader = serde_json::from_str(&first)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Parse(format!("format version {} unsupported", header.format_version)));
        }
        let rows = lines.map(|l| Ok(serde_json::from_str(&l?)?)).collect::<Result<Vec<Row>>>()?;
        Ok(PersistedTable { header, rows })
    }
}

/// `level,n,sphere_size,gamma,kappa_pointwise` for the given classes.
pub fn write_sphere_csv<W: Write>(out: W, tables: &Tables, classes: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "n", "sphere_size", "gamma", "kappa_pointwise"]).map_err(csv_error)?;
    for &c in classes {
        let t = tables.class(c);
        let sizes = t.sphere_sizes();
        let kappa = kappa_estimates(&sizes);
        for n in 0..=t.max_radius {
            let k = if n == 0 { String::new() } else { kappa.pointwise[n as usize - 1].to_string() };
            w.write_record([c.to_string(), n.to_string(), sizes[n as usize].to_string(), t.gamma(n).to_string(), k])
                .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Parse(format!("{k:?}")),
    }
}

/// A directory of persisted tables keyed by group hash and level class.
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Cache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn path(&self, hash: &str, class: usize) -> PathBuf {
        self.dir.join(format!("{hash}-{class}.jsonl"))
    }

    /// Tables for every class, if all are cached under `hash` at `radius`.
    pub fn load(&self, group: &Arc<Group>, hash: &str, radius: u32) -> Result<Option<Tables>> {
        let mut classes = Vec::new();
        for c in 0..group.num_classes() {
            let path = self.path(hash, c);
            if !path.exists() {
                return Ok(None);
            }
            let p = PersistedTable::load(&path)?;
            if p.header.group_hash != hash || p.header.level != c || (p.header.max_radius != radius && !p.header.truncated) {
                return Ok(None);
            }
            classes.push(p.to_table(group)?);
        }
        log::info!("cache hit for {hash}");
        Ok(Some(Tables { group: Arc::clone(group), classes }))
    }

    pub fn store(&self, tables: &Tables, hash: &str) -> Result<()> {
        for t in &tables.classes {
            PersistedTable::from_table(t, hash, None)?.save(&self.path(hash, t.class))?;
        }
        Ok(())
    }
}
