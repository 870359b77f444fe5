//! On-disk instance layout: a directory holding `instance.csv` (key/value
//! metadata) and `coverage.csv` (`bitmask,weight` rows).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{parse_satset, CoverageModel, ProblemInstance, SatSet, SyntheticCoverage, Vertex};
use crate::error::{Error, Result};

pub const META_FILE: &str = "instance.csv";
pub const COVERAGE_FILE: &str = "coverage.csv";

/// Writes metadata and the full coverage table of `inst` into `dir`.
///
/// Instances with a synthetic model also record `synthetic_seed`, which lets
/// the reader score groups missing from the table.
pub fn write_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut meta = format!(
        "n_sats,{}\nk_groups,{}\nmin_group,{}\nmax_group,{}\n",
        inst.n_sats, inst.k_groups, inst.min_group, inst.max_group
    );
    if let Some(m) = inst.coverage.synthetic() {
        meta.push_str(&format!("synthetic_seed,{}\n", m.seed()));
    }
    let meta_path = dir.join(META_FILE);
    fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
    write_coverage_csv(&dir.join(COVERAGE_FILE), &inst.candidate_vertices()?, inst.n_sats)
}

/// `bitmask,weight` CSV; also the export format for selected node lists.
pub fn write_coverage_csv(path: &Path, vertices: &[Vertex], n_sats: usize) -> Result<()> {
    let mut out = String::with_capacity(vertices.len() * (n_sats + 24) + 16);
    out.push_str("bitmask,weight\n");
    for v in vertices {
        out.push_str(&v.sats.to_bitstring(n_sats));
        out.push(',');
        out.push_str(&v.weight.to_string());
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_instance(dir: &Path) -> Result<ProblemInstance> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut meta: HashMap<String, u64> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line == "key,value") {
            continue;
        }
        let (key, value) = line
            .split_once(',')
            .ok_or_else(|| Error::format(line_no, format!("expected key,value but found {line:?}")))?;
        let value = value
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::format(line_no, format!("bad value for {key}: {e}")))?;
        meta.insert(key.trim().to_string(), value);
    }
    let get = |key: &str| -> Result<usize> {
        meta.get(key)
            .map(|&v| v as usize)
            .ok_or_else(|| Error::format(0, format!("{META_FILE} is missing {key}")))
    };
    let n_sats = get("n_sats")?;
    let k_groups = meta.get("k_groups").map_or(1, |&v| v as usize);
    let min_group = meta.get("min_group").map_or(super::DEFAULT_MIN_GROUP, |&v| v as usize);
    let max_group = get("max_group")?;
    let fallback = match meta.get("synthetic_seed") {
        Some(&seed) => Some(SyntheticCoverage::generate(n_sats, seed)?),
        None => None,
    };
    let entries = read_coverage_csv(&dir.join(COVERAGE_FILE), n_sats)?;
    ProblemInstance::new(
        n_sats,
        k_groups,
        min_group,
        max_group,
        CoverageModel::Table { entries, fallback },
    )
}

fn read_coverage_csv(path: &Path, n_sats: usize) -> Result<HashMap<SatSet, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
    if headers.len() != 2 || &headers[0] != "bitmask" || &headers[1] != "weight" {
        return Err(Error::format(1, "coverage header must be `bitmask,weight`"));
    }
    let mut entries = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::format(line, "expected 2 fields"));
        }
        if rec[0].len() > n_sats {
            return Err(Error::format(line, format!("bitmask longer than {n_sats} satellites")));
        }
        let set = parse_satset(&rec[0]).map_err(|e| Error::format(line, e.to_string()))?;
        if set.is_empty() {
            return Err(Error::format(line, "empty group"));
        }
        let w: f64 = rec[1]
            .parse()
            .map_err(|e| Error::format(line, format!("bad weight: {e}")))?;
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::format(line, format!("weight {w} outside [0, 1]")));
        }
        if entries.insert(set, w).is_some() {
            return Err(Error::format(line, format!("duplicate group {set}")));
        }
    }
    Ok(entries)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(line, format!("{other:?}")),
    }
}
