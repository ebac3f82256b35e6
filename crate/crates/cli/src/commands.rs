//! Single-scenario subcommands. Each writes its tables into the output
//! directory, records one manifest task per stage and prints a summary.

use crate::analysis::{analysis_sigmas, analyze_cell, echo_series, fit_row, group_gamma, CellKey, EchoSetup, FIT_HEADER};
use crate::config::{EchoSource, ExperimentConfig};
use crate::output::{float, opt_float, write_csv, write_json, Recorder};
use anyhow::Result;
use fidelity::decayfit::decay_time_tau;
use fidelity::ensembles::{
    derive_seed, diffusion_fit, evolve_actions, sample_disc, sample_wavepacket, WavePacketSpec, DEFAULT_SAMPLE_CAP,
};
use fidelity::levy::{
    critical_eta_exp, critical_eta_lin, fit_eta_dl, lm_fit_exp, lm_fit_lin, spectrum_with_padding, LevyFit,
};
use fidelity::maps::{lyapunov_spectrum, step, sticking_time, MapParams, PhasePoint};
use fidelity::qdyn::{saturation_estimate, TorusGrid};
use rayon::prelude::*;
use serde_json::json;
use std::path::PathBuf;

/// Prints a left-aligned text table to stdout.
pub fn print_table(title: &str, header: &[&str], rows: &[Vec<String>]) {
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    println!("{title}");
    println!("{}", line(header.iter().map(|h| h.to_string()).collect()));
    for row in rows {
        println!("{}", line(row.clone()));
    }
}

/// Short human-readable float for summary tables.
fn short(x: f64) -> String {
    format!("{x:.6}")
}

fn classical_params(cfg: &ExperimentConfig) -> Result<MapParams> {
    Ok(MapParams::new(cfg.classical.k, cfg.classical.order)?)
}

fn packet_spec(cfg: &ExperimentConfig) -> Result<WavePacketSpec> {
    let hbar = TorusGrid::new(cfg.grid.n)?.hbar();
    Ok(WavePacketSpec::with_k(cfg.packet.r0, cfg.packet.p0, hbar, cfg.packet.shape_k)?)
}

fn ensemble_seed(cfg: &ExperimentConfig, cell: u64) -> u64 {
    cfg.semiclassical.ensemble_seed.unwrap_or_else(|| derive_seed(cfg.seed, cell))
}

fn failure(e: anyhow::Error) -> String {
    format!("{e:#}")
}

/// Single orbit with its accumulated action, and the action diffusion of a
/// wave-packet ensemble.
pub fn classical(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let params = classical_params(cfg)?;
    let mut x = PhasePoint::new(cfg.packet.r0, cfg.packet.p0);
    let mut s = 0.0;
    let mut rows = Vec::with_capacity(cfg.classical.orbit_steps as usize + 1);
    for t in 0..=cfg.classical.orbit_steps {
        rows.push(vec![t.to_string(), float(x.r), float(x.p), float(s)]);
        s += x.r.cos();
        x = step(&params, x);
    }
    let orbit = write_csv(rec.dir(), "orbit.csv", &["t", "r", "p", "s"], &rows)?;
    rec.task("orbit", Ok(vec![orbit]))?;

    let outcome = (|| -> Result<Vec<PathBuf>> {
        let ens = sample_wavepacket(&packet_spec(cfg)?, cfg.classical.diffusion_samples, derive_seed(cfg.seed, 0))?;
        let times = &cfg.classical.diffusion_times;
        let dists = evolve_actions(&ens, &params, times, Default::default(), DEFAULT_SAMPLE_CAP)?;
        let moments: Vec<f64> = dists.iter().map(|d| d.second_moment()).collect();
        let rows: Vec<Vec<String>> = dists
            .iter()
            .zip(&moments)
            .map(|(d, m)| vec![d.time.to_string(), float(*m), float(d.variance())])
            .collect();
        let table = write_csv(rec.dir(), "diffusion.csv", &["t", "second_moment", "variance"], &rows)?;
        let window = (times[0], *times.last().expect("validated non-empty"));
        let fit = diffusion_fit(times, &moments, window)?;
        let summary = write_json(rec.dir(), "diffusion_fit.json", &fit)?;
        print_table(
            "action diffusion",
            &["exponent", "ln D", "kind"],
            &[vec![short(fit.exponent), short(fit.intercept), format!("{:?}", fit.kind)]],
        );
        Ok(vec![table, summary])
    })();
    rec.task("diffusion", outcome.map_err(failure))
}

/// Both Lyapunov exponents of the orbit through the packet centre.
pub fn lyapunov(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let params = classical_params(cfg)?;
    let x0 = PhasePoint::new(cfg.packet.r0, cfg.packet.p0);
    let outcome = (|| -> Result<Vec<PathBuf>> {
        let (l1, l2) = lyapunov_spectrum(&params, x0, cfg.classical.lyapunov_steps)?;
        let row = vec![
            float(params.k),
            serde_json::to_value(params.order)?.as_str().unwrap_or_default().to_string(),
            float(x0.r),
            float(x0.p),
            cfg.classical.lyapunov_steps.to_string(),
            float(l1),
            float(l2),
        ];
        let header = ["k", "order", "r0", "p0", "steps", "lambda1", "lambda2"];
        let path = write_csv(rec.dir(), "lyapunov.csv", &header, &[row])?;
        print_table("Lyapunov exponents", &["lambda1", "lambda2"], &[vec![short(l1), short(l2)]]);
        Ok(vec![path])
    })();
    rec.task("lyapunov", outcome.map_err(failure))
}

/// Sticking time of a small disc of initial conditions.
pub fn stick(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let params = classical_params(cfg)?;
    let centre = PhasePoint::new(cfg.packet.r0, cfg.packet.p0);
    let st = &cfg.stick;
    let outcome = (|| -> Result<Vec<PathBuf>> {
        let disc = sample_disc(centre, st.radius, st.samples, derive_seed(cfg.seed, 0))?;
        let out = sticking_time(&params, &disc.points, &st.region, st.max_steps)?;
        let row = vec![
            float(params.k),
            float(centre.r),
            float(centre.p),
            float(st.radius),
            st.samples.to_string(),
            st.max_steps.to_string(),
            out.escaped().to_string(),
            out.escape_time().map(|t| t.to_string()).unwrap_or_default(),
        ];
        let header = ["k", "r0", "p0", "radius", "samples", "max_steps", "escaped", "step"];
        let path = write_csv(rec.dir(), "stick.csv", &header, &[row])?;
        let verdict = out.escape_time().map_or("stuck".to_string(), |t| format!("escaped at {t}"));
        print_table("sticking time", &["samples", "result"], &[vec![st.samples.to_string(), verdict]]);
        Ok(vec![path])
    })();
    rec.task("stick", outcome.map_err(failure))
}

/// Echo (quantum or semiclassical) for every configured perturbation.
fn echo_family(cfg: &ExperimentConfig, rec: &mut Recorder, source: EchoSource) -> Result<()> {
    let (name, id) = match source {
        EchoSource::Quantum => ("echo", "echo"),
        EchoSource::Semiclassical => ("semiclassical", "semiclassical"),
    };
    let setup = EchoSetup {
        k: cfg.map.k,
        r0: cfg.packet.r0,
        p0: cfg.packet.p0,
        n: cfg.grid.n,
        shape_k: cfg.packet.shape_k,
        horizon: cfg.echo.horizon,
        source,
        seed: ensemble_seed(cfg, 0),
    };
    let outcome = (|| -> Result<Vec<PathBuf>> {
        let sigmas = &cfg.echo.sigmas;
        let (series, notes) = echo_series(&setup, cfg, sigmas)?;
        let mut rows = Vec::with_capacity(series.iter().map(Vec::len).sum());
        for (s, v) in sigmas.iter().zip(&series) {
            for (t, m) in v.iter().enumerate() {
                rows.push(vec![float(*s), t.to_string(), float(*m)]);
            }
        }
        let table = write_csv(rec.dir(), &format!("{name}.csv"), &["sigma", "t", "m"], &rows)?;
        let summary: Vec<Vec<String>> = sigmas
            .iter()
            .zip(&series)
            .map(|(s, v)| {
                let tau = decay_time_tau(v);
                let f_inf = saturation_estimate(v, cfg.echo.tail_fraction).ok();
                vec![float(*s), float(tau.value), tau.reached.to_string(), opt_float(f_inf)]
            })
            .collect();
        let header = ["sigma", "tau", "tau_reached", "f_inf"];
        let sum_path = write_csv(rec.dir(), &format!("{name}_summary.csv"), &header, &summary)?;
        let meta = json!({
            "n": setup.n, "k": setup.k, "r0": setup.r0, "p0": setup.p0,
            "xi": (TorusGrid::new(setup.n)?.hbar() / setup.shape_k).sqrt(),
            "source": source, "seed": (source == EchoSource::Semiclassical).then_some(setup.seed),
            "notes": notes,
        });
        let meta_path = write_json(rec.dir(), &format!("{name}_meta.json"), &meta)?;
        let printable: Vec<Vec<String>> = summary
            .iter()
            .map(|r| vec![short(r[0].parse().unwrap_or(f64::NAN)), short(r[1].parse().unwrap_or(f64::NAN)), r[2].clone(), r[3].clone()])
            .collect();
        print_table(&format!("{name} decay times"), &header, &printable);
        for n in &notes {
            eprintln!("note: {n}");
        }
        Ok(vec![table, sum_path, meta_path])
    })();
    rec.task(id, outcome.map_err(failure))
}

pub fn echo(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    echo_family(cfg, rec, EchoSource::Quantum)
}

pub fn semiclassical(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    echo_family(cfg, rec, EchoSource::Semiclassical)
}

/// Lévy fits of the action distribution over time, the `D_L(η)` models and
/// the critical-η analysis at each configured perturbation.
pub fn levy_fit(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let lv = &cfg.levy;
    let params = MapParams::kick_first(cfg.map.k)?;
    let ens = sample_wavepacket(&packet_spec(cfg)?, lv.samples, ensemble_seed(cfg, 0))?;
    let dists = evolve_actions(&ens, &params, &lv.times, lv.binning, DEFAULT_SAMPLE_CAP)?;

    let mut hist_rows = Vec::new();
    for d in &dists {
        for (c, p) in d.histogram.centers().iter().zip(&d.histogram.density) {
            hist_rows.push(vec![d.time.to_string(), float(*c), float(*p)]);
        }
    }
    let hist = write_csv(rec.dir(), "histogram.csv", &["t", "bin_center", "density"], &hist_rows)?;
    rec.file(&hist);

    let fits: Vec<(u64, Result<LevyFit, String>)> = dists
        .par_iter()
        .map(|d| {
            let fit = spectrum_with_padding(d, lv.pad_factor).and_then(|rel| fit_eta_dl(&rel, lv.n_freq));
            (d.time, fit.map_err(|e| e.to_string()))
        })
        .collect();
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (t, fit) in &fits {
        match fit {
            Ok(f) => {
                points.push((f.eta, f.dl));
                rows.push(vec![
                    t.to_string(),
                    "ok".into(),
                    float(f.eta),
                    float(f.dl),
                    float(f.intercept),
                    float(f.residual),
                    f.n_freq.to_string(),
                    float(f.dz),
                    String::new(),
                ]);
            }
            Err(e) => rows.push(vec![
                t.to_string(),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ]),
        }
    }
    let header = ["t", "status", "eta", "dl", "intercept", "residual", "n_freq", "dz", "message"];
    let table = write_csv(rec.dir(), "levy.csv", &header, &rows)?;
    rec.file(&table);
    for (t, fit) in &fits {
        rec.task(&format!("levy-t{t}"), fit.as_ref().map(|_| vec![]).map_err(Clone::clone))?;
    }
    print_table(
        "Lévy fits",
        &["t", "eta", "dl"],
        &fits
            .iter()
            .map(|(t, f)| match f {
                Ok(f) => vec![t.to_string(), short(f.eta), short(f.dl)],
                Err(_) => vec![t.to_string(), "failed".into(), String::new()],
            })
            .collect::<Vec<_>>(),
    );

    let outcome = (|| -> Result<Vec<PathBuf>> {
        let exp = lm_fit_exp(&points, lv.damping);
        let lin = lm_fit_lin(&points);
        let models = json!({
            "points": points.len(),
            "exponential": exp.as_ref().map_err(ToString::to_string),
            "linear": lin.as_ref().map_err(ToString::to_string),
        });
        let models_path = write_json(rec.dir(), "levy_models.json", &models)?;
        let mut crit_rows = Vec::new();
        for &s in cfg.echo.sigmas.iter().filter(|s| **s > 0.0) {
            let results = [
                ("exponential", exp.as_ref().map_err(Clone::clone).and_then(|m| critical_eta_exp(m, s))),
                ("linear", lin.as_ref().map_err(Clone::clone).and_then(|m| critical_eta_lin(m, s))),
            ];
            for (model, r) in results {
                crit_rows.push(match r {
                    Ok(c) => vec![
                        float(s),
                        model.into(),
                        serde_json::to_value(c.regime)?.as_str().unwrap_or_default().to_string(),
                        opt_float(c.eta_star),
                        opt_float(c.root),
                        opt_float(c.sigma_bounds.map(|b| b.0)),
                        opt_float(c.sigma_bounds.map(|b| b.1)),
                        String::new(),
                    ],
                    Err(e) => vec![float(s), model.into(), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()],
                });
            }
        }
        let header = ["sigma", "model", "regime", "eta_star", "root", "sigma_lo", "sigma_hi", "message"];
        let crit_path = write_csv(rec.dir(), "critical_eta.csv", &header, &crit_rows)?;
        exp.map_err(anyhow::Error::from)?;
        Ok(vec![models_path, crit_path])
    })();
    rec.task("levy-models", outcome.map_err(failure))
}

/// Echo series plus the decay-law fit table for every configured
/// perturbation at the configured kick strength and packet.
pub fn decay_fit(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let d = &cfg.decay;
    let setup = EchoSetup {
        k: cfg.map.k,
        r0: cfg.packet.r0,
        p0: cfg.packet.p0,
        n: cfg.grid.n,
        shape_k: cfg.packet.shape_k,
        horizon: cfg.echo.horizon,
        source: d.source,
        seed: ensemble_seed(cfg, 0),
    };
    let sigmas = analysis_sigmas(&cfg.echo.sigmas, d.nu_selection);
    let (series, notes) = echo_series(&setup, cfg, &sigmas)?;
    let mut rows = Vec::new();
    for (s, v) in sigmas.iter().zip(&series) {
        for (t, m) in v.iter().enumerate() {
            rows.push(vec![float(*s), t.to_string(), float(*m)]);
        }
    }
    let series_path = write_csv(rec.dir(), "decay_series.csv", &["sigma", "t", "m"], &rows)?;
    rec.file(&series_path);
    let thresholds = write_json(rec.dir(), "decay_thresholds.json", &json!({ "decay": d, "tail_fraction": cfg.echo.tail_fraction, "analysis_sigmas": sigmas, "notes": notes }))?;
    rec.file(&thresholds);

    let mut fits: Vec<Result<_, String>> = cfg
        .echo
        .sigmas
        .par_iter()
        .map(|&s| analyze_cell(&sigmas, &series, s, d, cfg.echo.tail_fraction).map_err(failure))
        .collect();
    let taus: Vec<_> = fits.iter().flatten().map(|f| (f.sigma, f.tau)).collect();
    let gamma = group_gamma(&taus, d.gamma_window);
    for f in fits.iter_mut().flatten() {
        f.gamma = gamma;
    }
    let seed = (d.source == EchoSource::Semiclassical).then_some(setup.seed);
    let table: Vec<Vec<String>> = cfg
        .echo
        .sigmas
        .iter()
        .zip(&fits)
        .enumerate()
        .map(|(i, (&s, f))| {
            let key = CellKey { k: setup.k, p_center: setup.p0, n: setup.n, sigma: s, index: i, seed };
            fit_row(&key, f)
        })
        .collect();
    let path = write_csv(rec.dir(), "fits.csv", &FIT_HEADER, &table)?;
    rec.file(&path);
    for (s, f) in cfg.echo.sigmas.iter().zip(&fits) {
        rec.task(&format!("sigma-{s}"), f.as_ref().map(|_| vec![]).map_err(Clone::clone))?;
    }
    print_fit_summary(&table);
    Ok(())
}

/// Prints the main columns of fit-table rows.
pub fn print_fit_summary(rows: &[Vec<String>]) {
    let pick = [0, 1, 2, 3, 4, 8, 9, 11, 12, 13, 14, 17];
    let header: Vec<&str> = pick.iter().map(|&i| FIT_HEADER[i]).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            pick.iter()
                .map(|&i| match r[i].parse::<f64>() {
                    Ok(x) if r[i].contains('e') => short(x),
                    _ => r[i].clone(),
                })
                .collect()
        })
        .collect();
    print_table("decay-law fits", &header, &body);
}
