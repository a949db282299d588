use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mzplan_core::config::{parse_kv_text, Variant};
use mzplan_core::learn::RunConfig;
use rayon::prelude::*;

use crate::eval::median;
use crate::run::{config_hash, train_to_dir};

/// A parsed grid file.
///
/// ```text
/// base = chain.cfg          # optional config file, relative to the grid file
/// seeds = 0, 1, 2
/// variant = one_step, learn_data
/// budget = 4, 8
/// ```
///
/// Every other line is an axis. Cells are the cartesian product of the axes in
/// file order, the last axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub base: Vec<(String, String)>,
    pub seeds: Vec<u64>,
    pub axes: Vec<(String, Vec<String>)>,
}

fn split_list(key: &str, value: &str) -> Result<Vec<String>> {
    let items: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
    if items.iter().any(String::is_empty) {
        bail!("`{key}` has an empty entry");
    }
    Ok(items)
}

/// Key-value overrides that make up one grid cell.
pub type Cell = Vec<(String, String)>;

pub fn parse_grid(text: &str, dir: &Path) -> Result<Grid> {
    let pairs = parse_kv_text(text)?;
    if pairs.is_empty() {
        bail!("grid is empty");
    }
    let mut grid = Grid {
        base: Vec::new(),
        seeds: vec![0],
        axes: Vec::new(),
    };
    for (k, v) in pairs {
        match k.as_str() {
            "base" => {
                let path = dir.join(&v);
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading base config {}", path.display()))?;
                grid.base = parse_kv_text(&text)?;
            }
            "seeds" => {
                grid.seeds = split_list(&k, &v)?
                    .iter()
                    .map(|s| s.parse().with_context(|| format!("bad seed `{s}`")))
                    .collect::<Result<_>>()?;
            }
            "seed" => bail!("use `seeds` to list seeds"),
            _ => {
                let values = split_list(&k, &v)?;
                grid.axes.push((k, values));
            }
        }
    }
    Ok(grid)
}

impl Grid {
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = vec![Vec::new()];
        for (key, values) in &self.axes {
            cells = cells
                .into_iter()
                .flat_map(|cell| {
                    values.iter().map(move |v| {
                        let mut c: Vec<(String, String)> = cell.clone();
                        c.push((key.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }

    fn config(&self, cell: &[(String, String)], seed: u64) -> Result<RunConfig> {
        let mut pairs = self.base.clone();
        pairs.extend(cell.iter().cloned());
        pairs.push(("seed".to_string(), seed.to_string()));
        Ok(RunConfig::from_pairs(&pairs)?)
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub cell: usize,
    pub seed: u64,
    pub values: Vec<(String, String)>,
    pub hash: String,
    pub variant: Option<Variant>,
    /// Returns at the first and last evaluation, or the failure message.
    pub result: Result<(f64, f64), String>,
}

fn run_cell(grid: &Grid, cell: usize, values: &[(String, String)], seed: u64, out: &Path) -> SweepRow {
    let mut row = SweepRow {
        cell,
        seed,
        values: values.to_vec(),
        hash: String::new(),
        variant: None,
        result: Err(String::new()),
    };
    let config = match grid.config(values, seed) {
        Ok(c) => c,
        Err(e) => {
            row.result = Err(format!("{e:#}"));
            return row;
        }
    };
    row.hash = config_hash(&config);
    row.variant = Some(config.agent.variant);
    row.result = train_to_dir(&config, out, |_| {})
        .map(|report| {
            let m = &report.outcome.metrics;
            (m[0].mean_return, m[m.len() - 1].mean_return)
        })
        .map_err(|e| format!("{e:#}"));
    row
}

/// Runs every (cell, seed) pair with `jobs` workers and writes `sweep.csv`.
/// Failed pairs are recorded and the rest still run.
pub fn run_sweep(grid: &Grid, out: &Path, jobs: usize) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let work: Vec<(usize, Cell, u64)> = grid
        .cells()
        .into_iter()
        .enumerate()
        .flat_map(|(i, c)| grid.seeds.iter().map(move |&s| (i, c.clone(), s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        work.par_iter()
            .map(|(i, c, s)| run_cell(grid, *i, c, *s, out))
            .collect()
    });
    fs::write(out.join("sweep.csv"), sweep_csv(grid, &rows))?;
    Ok(rows)
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.6}")
    }
}

/// Scores rescaled so the untrained network scores 0 and the full agent 1.
///
/// The untrained level is the mean first evaluation over all runs. The full
/// agent is the median final return of `learn_data_eval` runs, or the best
/// cell median when the grid has none.
pub fn normalizers(rows: &[SweepRow]) -> (f64, f64) {
    let ok: Vec<(&SweepRow, (f64, f64))> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|&x| (r, x)))
        .collect();
    if ok.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let random = ok.iter().map(|(_, (i, _))| i).sum::<f64>() / ok.len() as f64;
    let full: Vec<f64> = ok
        .iter()
        .filter(|(r, _)| r.variant == Some(Variant::LearnDataEval))
        .map(|(_, (_, f))| *f)
        .collect();
    let baseline = if full.is_empty() {
        let cells = ok.iter().map(|(r, _)| r.cell).max().unwrap_or(0) + 1;
        (0..cells)
            .map(|c| {
                let finals: Vec<f64> = ok
                    .iter()
                    .filter(|(r, _)| r.cell == c)
                    .map(|(_, (_, f))| *f)
                    .collect();
                median(&finals)
            })
            .filter(|m| !m.is_nan())
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        median(&full)
    };
    (random, baseline)
}

pub fn sweep_csv(grid: &Grid, rows: &[SweepRow]) -> String {
    let (random, baseline) = normalizers(rows);
    let scale = baseline - random;
    let mut s = String::from("cell,seed,hash");
    for (k, _) in &grid.axes {
        write!(s, ",{k}").expect("write to string");
    }
    s.push_str(",status,initial_return,final_return,normalized,cell_median,cell_min,cell_max\n");
    for r in rows {
        let finals: Vec<f64> = rows
            .iter()
            .filter(|o| o.cell == r.cell)
            .filter_map(|o| o.result.as_ref().ok().map(|x| x.1))
            .collect();
        let min = finals.iter().copied().fold(f64::NAN, f64::min);
        let max = finals.iter().copied().fold(f64::NAN, f64::max);
        write!(s, "{},{},{}", r.cell, r.seed, r.hash).expect("write to string");
        for (_, v) in &r.values {
            write!(s, ",{v}").expect("write to string");
        }
        let (status, initial, fin) = match &r.result {
            Ok((i, f)) => ("ok".to_string(), *i, *f),
            Err(e) => (
                format!("failed: {}", e.replace([',', '\n'], ";")),
                f64::NAN,
                f64::NAN,
            ),
        };
        let normalized = if scale.abs() > 1e-12 {
            (fin - random) / scale
        } else {
            f64::NAN
        };
        writeln!(
            s,
            ",{status},{},{},{},{},{},{}",
            fmt_f(initial),
            fmt_f(fin),
            fmt_f(normalized),
            fmt_f(median(&finals)),
            fmt_f(min),
            fmt_f(max),
        )
        .expect("write to string");
    }
    s
}
