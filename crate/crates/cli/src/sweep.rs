//! Grid sweeps over `(K, p̃₀, N, σ)` with per-cell files, resumption from
//! the manifest and a merged long-format table.

use crate::analysis::{analysis_sigmas, analyze_cell, echo_series, fit_row, group_gamma, CellKey, EchoSetup, FIT_HEADER};
use crate::commands::print_fit_summary;
use crate::config::{ConfigError, EchoSource, ExperimentConfig};
use crate::output::{float, read_manifest, write_csv, ManifestRecord, Recorder, TaskState};
use anyhow::{Context, Result};
use fidelity::decayfit::Tau;
use fidelity::ensembles::derive_seed;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

/// Cells of the grid in index order: `σ` varies fastest, then `N`, `p̃₀`
/// and `K`.
pub fn cells(cfg: &ExperimentConfig) -> Vec<CellKey> {
    let sw = &cfg.sweep;
    let mut out = Vec::with_capacity(cfg.sweep_cells());
    for &k in &sw.k {
        for &p in &sw.p_center {
            for &n in &sw.n {
                for &sigma in &sw.sigmas {
                    let index = out.len();
                    let seed = (cfg.decay.source == EchoSource::Semiclassical).then(|| {
                        cfg.semiclassical.ensemble_seed.unwrap_or_else(|| derive_seed(cfg.seed, index as u64))
                    });
                    out.push(CellKey { k, p_center: p, n, sigma, index, seed });
                }
            }
        }
    }
    out
}

fn cell_id(index: usize) -> String {
    format!("cell-{index:06}")
}

fn cell_file(index: usize) -> String {
    format!("cells/{}.csv", cell_id(index))
}

/// Refuses grids above the cap, with an estimate of the work involved.
pub fn check_cap(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let cells = cfg.sweep_cells();
    if cells <= cfg.sweep.max_cells {
        return Ok(());
    }
    let per_cell = analysis_sigmas(&[f64::MAX], cfg.decay.nu_selection).len();
    let steps = cells as f64 * per_cell as f64 * cfg.echo.horizon as f64;
    Err(ConfigError::single(
        "sweep.max_cells",
        format!(
            "grid has {cells} cells ({} K × {} p_center × {} N × {} σ), above the cap of {}; \
             estimated work ≈ {steps:.3e} propagation steps",
            cfg.sweep.k.len(),
            cfg.sweep.p_center.len(),
            cfg.sweep.n.len(),
            cfg.sweep.sigmas.len(),
            cfg.sweep.max_cells
        ),
    ))
}

/// Cells completed by earlier sweeps of the same configuration in `dir`.
/// A sweep of a different configuration in the same directory is refused.
fn completed_cells(dir: &Path, hash: &str) -> Result<HashMap<String, Vec<String>>, ConfigError> {
    let records = read_manifest(dir).map_err(|e| ConfigError::single("--out", format!("unreadable manifest: {e:#}")))?;
    let mut done = HashMap::new();
    let mut current_is_same = false;
    for r in records {
        match r {
            ManifestRecord::Start { command, config_hash, .. } => {
                current_is_same = command == "sweep" && config_hash == hash;
                if command == "sweep" && config_hash != hash {
                    return Err(ConfigError::single(
                        "--out",
                        format!(
                            "{} holds a sweep with a different configuration (hash {config_hash}); \
                             choose another output directory",
                            dir.display()
                        ),
                    ));
                }
            }
            ManifestRecord::Task(t)
                if current_is_same
                    && t.status != TaskState::Failed
                    && t.files.iter().all(|f| dir.join(f).is_file()) =>
            {
                done.insert(t.id, t.files);
            }
            _ => {}
        }
    }
    Ok(done)
}

/// Computes one cell from scratch, exactly as a standalone `decay-fit` run
/// with that `(K, p̃₀, N)` and σ list would.
pub fn run_cell(cfg: &ExperimentConfig, key: &CellKey) -> Result<crate::analysis::CellFit> {
    let setup = EchoSetup {
        k: key.k,
        r0: cfg.packet.r0,
        p0: key.p_center,
        n: key.n,
        shape_k: cfg.packet.shape_k,
        horizon: cfg.echo.horizon,
        source: cfg.decay.source,
        seed: key.seed.unwrap_or(0),
    };
    let sigmas = analysis_sigmas(&[key.sigma], cfg.decay.nu_selection);
    let (series, _) = echo_series(&setup, cfg, &sigmas)?;
    analyze_cell(&sigmas, &series, key.sigma, &cfg.decay, cfg.echo.tail_fraction)
}

/// Runs the sweep; `limit` bounds the number of cells computed by this
/// invocation (the rest can be resumed later).
pub fn sweep(cfg: &ExperimentConfig, rec: &mut Recorder, done: &HashMap<String, Vec<String>>, limit: Option<usize>) -> Result<()> {
    let all = cells(cfg);
    let dir = rec.dir().to_path_buf();
    std::fs::create_dir_all(dir.join("cells"))?;
    let mut pending = Vec::new();
    for key in &all {
        let id = cell_id(key.index);
        match done.get(&id) {
            Some(files) => rec.skipped(&id, files.clone())?,
            None => pending.push(*key),
        }
    }
    pending.truncate(limit.unwrap_or(usize::MAX));
    let shared = Mutex::new(rec);
    pending.par_iter().try_for_each(|key| -> Result<()> {
        let fit = run_cell(cfg, key).map_err(|e| format!("{e:#}"));
        let path = write_csv(&dir, &cell_file(key.index), &FIT_HEADER, &[fit_row(key, &fit)])?;
        let outcome = match &fit {
            Ok(_) => Ok(vec![path]),
            Err(e) => Err(e.clone()),
        };
        shared.lock().expect("recorder lock").task(&cell_id(key.index), outcome)
    })?;
    let rec = shared.into_inner().expect("recorder lock");
    merge(cfg, rec, &all)
}

/// Concatenates the cell files present into `sweep.csv`, filling in the
/// decay-time exponent of each `(K, p̃₀, N)` group.
fn merge(cfg: &ExperimentConfig, rec: &mut Recorder, all: &[CellKey]) -> Result<()> {
    let dir = rec.dir().to_path_buf();
    let col = |name: &str| FIT_HEADER.iter().position(|h| *h == name).expect("known column");
    let (c_status, c_tau, c_reached, c_gamma, c_sigma) =
        (col("status"), col("tau"), col("tau_reached"), col("gamma"), col("sigma"));
    let mut rows: Vec<Vec<String>> = Vec::new();
    for key in all {
        let path = dir.join(cell_file(key.index));
        if !path.is_file() {
            continue;
        }
        let mut reader = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
        for r in reader.records() {
            rows.push(r?.iter().map(str::to_string).collect());
        }
    }
    let group_of = |r: &[String]| (r[0].clone(), r[1].clone(), r[2].clone());
    let mut groups: BTreeMap<(String, String, String), Vec<(f64, Tau)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r[c_status] == "ok") {
        let tau = Tau { value: r[c_tau].parse()?, reached: r[c_reached] == "true" };
        groups.entry(group_of(r)).or_default().push((r[c_sigma].parse()?, tau));
    }
    for r in rows.iter_mut().filter(|r| r[c_status] == "ok") {
        r[c_gamma] = group_gamma(&groups[&group_of(r)], cfg.decay.gamma_window).map(float).unwrap_or_default();
    }
    let path = write_csv(&dir, "sweep.csv", &FIT_HEADER, &rows)?;
    rec.file(&path);
    print_fit_summary(&rows);
    Ok(())
}

/// Loads the resume state for `dir`, refusing foreign sweeps.
pub fn resume_state(cfg: &ExperimentConfig) -> Result<HashMap<String, Vec<String>>, ConfigError> {
    check_cap(cfg)?;
    completed_cells(&cfg.output, &cfg.hash())
}
