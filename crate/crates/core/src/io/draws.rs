//! Long-format draws file: `chain,iteration,parameter,value`, chains and
//! iterations 1-based. Per-draw sampler statistics are stored as extra
//! parameters with a trailing double underscore.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampler::{Chain, DrawsTable, TransitionStats};

pub const DRAWS_HEADER: [&str; 4] = ["chain", "iteration", "parameter", "value"];

const STAT_NAMES: [&str; 7] = [
    "lp__",
    "accept_stat__",
    "stepsize__",
    "treedepth__",
    "n_leapfrog__",
    "divergent__",
    "energy__",
];

fn stat_values(s: &TransitionStats) -> [f64; 7] {
    [
        s.log_density,
        s.accept_stat,
        s.step_size,
        s.tree_depth as f64,
        s.n_leapfrog as f64,
        s.divergent as u8 as f64,
        s.energy,
    ]
}

fn stats_from(v: &[f64; 7]) -> TransitionStats {
    TransitionStats {
        log_density: v[0],
        accept_stat: v[1],
        step_size: v[2],
        tree_depth: v[3] as usize,
        n_leapfrog: v[4] as usize,
        divergent: v[5] != 0.0,
        energy: v[6],
    }
}

pub fn draws_csv(table: &DrawsTable) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(DRAWS_HEADER)?;
    for (c, chain) in table.chains.iter().enumerate() {
        for (i, draw) in chain.draws.iter().enumerate() {
            let (cs, is) = ((c + 1).to_string(), (i + 1).to_string());
            for (name, v) in table.names.iter().zip(draw) {
                w.write_record([cs.as_str(), is.as_str(), name, &v.to_string()])?;
            }
            if let Some(s) = chain.stats.get(i) {
                for (name, v) in STAT_NAMES.iter().zip(stat_values(s)) {
                    w.write_record([cs.as_str(), is.as_str(), name, &v.to_string()])?;
                }
            }
        }
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

/// Reads a draws file. Parameter order follows first appearance; every
/// (chain, iteration) must carry every parameter.
pub fn parse_draws(text: &str) -> Result<DrawsTable> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != DRAWS_HEADER {
        return Err(Error::Data(format!(
            "draws header must be {}, found {}",
            DRAWS_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut names: Vec<String> = Vec::new();
    let mut name_idx: BTreeMap<String, usize> = BTreeMap::new();
    // (chain, iteration) -> parameter index -> value
    let mut cells: BTreeMap<(usize, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    let mut stats: BTreeMap<(usize, usize), [f64; 7]> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Data(format!("draws line {line}: {what}"));
        if row.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let chain: usize = row[0].trim().parse().map_err(|_| bad("bad chain"))?;
        let iter: usize = row[1].trim().parse().map_err(|_| bad("bad iteration"))?;
        if chain == 0 || iter == 0 {
            return Err(bad("chain and iteration are 1-based"));
        }
        let name = row[2].trim();
        let value: f64 = row[3].trim().parse().map_err(|_| bad("bad value"))?;
        if let Some(k) = STAT_NAMES.iter().position(|s| *s == name) {
            stats.entry((chain, iter)).or_insert([f64::NAN; 7])[k] = value;
            continue;
        }
        let p = *name_idx.entry(name.to_string()).or_insert_with(|| {
            names.push(name.to_string());
            names.len() - 1
        });
        if cells.entry((chain, iter)).or_default().insert(p, value).is_some() {
            return Err(bad("duplicate cell"));
        }
    }
    if cells.is_empty() {
        return Err(Error::Data("draws file has no draws".into()));
    }
    let n_chains = cells.keys().map(|k| k.0).max().unwrap_or(0);
    let n_iter = cells.keys().map(|k| k.1).max().unwrap_or(0);
    let mut chains = Vec::with_capacity(n_chains);
    for c in 1..=n_chains {
        let mut draws = Vec::with_capacity(n_iter);
        let mut chain_stats = Vec::new();
        for i in 1..=n_iter {
            let row = cells
                .get(&(c, i))
                .ok_or_else(|| Error::Data(format!("chain {c} lacks iteration {i}")))?;
            if row.len() != names.len() {
                return Err(Error::Data(format!(
                    "chain {c} iteration {i} has {} of {} parameters",
                    row.len(),
                    names.len()
                )));
            }
            draws.push(row.values().copied().collect());
            if let Some(s) = stats.get(&(c, i)) {
                chain_stats.push(stats_from(s));
            }
        }
        let step_size = chain_stats.first().map_or(f64::NAN, |s| s.step_size);
        chains.push(Chain {
            draws,
            stats: chain_stats,
            step_size,
            inv_metric: Vec::new(),
            warmup_divergences: 0,
        });
    }
    Ok(DrawsTable { names, chains })
}

pub fn load_draws(path: &Path) -> Result<DrawsTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_draws(&text)
}
