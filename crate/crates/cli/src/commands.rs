use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use shiftlab_core::bounds::coupon_envelope;
use shiftlab_core::dynamics::{
    all_hitting_exact, cover_bracket, cover_samples, expected_hitting_exact, hitting_samples,
    hitting_survival_exact, kac_samples, trial_records, MIN_TRIALS,
};
use shiftlab_core::gibbs::{
    gibbs_envelope_check, ln_cylinder_measure, ln_product_cell_measure, min_cell_at_scale,
    min_cell_measure, mmin_bracket, WeightModel,
};
use shiftlab_core::product::{random_point, verify_sandwich, CellId, ProductCover};
use shiftlab_core::report::{report_row, write_csv, ReportSettings, EXACT_HITTING_CELLS};
use shiftlab_core::stats::{proportion, trial_seed, Estimate};
use shiftlab_core::verify::{run_suite, Suite, SuiteOptions};

use crate::args::{
    Command, CoverArgs, MeasureArgs, ReportArgs, SimKind, SimulateArgs, VerifyArgs,
};
use crate::config::{parse_list, Effective, Resolver};
use crate::error::{CliError, EXIT_VERIFY};

/// Base points used by `cover --verify-sandwich`.
const SANDWICH_POINTS: u64 = 20;

pub fn dispatch(command: Command, r: &Resolver) -> Result<i32, CliError> {
    match command {
        Command::Cover(a) => cover(a, r),
        Command::Measure(a) => measure(a, r),
        Command::Simulate(a) => simulate(a, r),
        Command::Verify(a) => verify(a, r),
        Command::Report(a) => report(a, r),
    }
}

fn echo_config(cfg: &Effective) -> Result<(), CliError> {
    let line = serde_json::to_string(cfg).map_err(|e| CliError::runtime(e.to_string()))?;
    eprintln!("config: {line}");
    Ok(())
}

fn emit(value: &Value, out: &Option<PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data serializes")
}

fn shape(cover: &ProductCover) -> Value {
    json!({
        "K": cover.alphabet_size(),
        "k": cover.depth(),
        "cells": cover.cell_count(),
        "T": cover.sandwich_constant(),
        "clamped": cover.is_clamped(),
    })
}

fn cover(a: CoverArgs, r: &Resolver) -> Result<i32, CliError> {
    let (params, metric) = r.params(&a.metric)?;
    let delta = r.delta(a.delta)?;
    let budget = a.budget.or(r.file.budget).unwrap_or(u64::MAX);
    let mut cfg = r.effective("cover", &params, &metric)?;
    cfg.delta = Some(delta);
    cfg.budget = budget;
    echo_config(&cfg)?;

    let cover = ProductCover::build(delta, params, budget)?;
    let mut out = json!({
        "config": cfg,
        "alphabet_cover": cover.base().document(),
        "product": shape(&cover),
        "cell_diameter": cover.cell_diameter(),
        "outer_inclusion_holds": cover.outer_inclusion_holds(),
    });
    let mut code = 0;
    if let Some(samples) = a.verify_sandwich {
        if samples == 0 {
            return Err(CliError::validation("--verify-sandwich needs at least 1 sample"));
        }
        let seed = cfg.seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reports = Vec::new();
        let (mut inner, mut outer) = (0u64, 0u64);
        for p in 0..SANDWICH_POINTS {
            let x = random_point(&mut rng, &cover);
            let rep = verify_sandwich(&x, &cover, samples, trial_seed(seed, p))?;
            inner += rep.inner_violations;
            outer += rep.outer_violations;
            reports.push(json!({ "point": x.to_string(), "report": rep }));
        }
        if inner + outer > 0 {
            code = EXIT_VERIFY;
        }
        out["sandwich"] = json!({
            "inner_violations": inner,
            "outer_violations": outer,
            "points": reports,
        });
    }
    emit(&out, &a.out)?;
    Ok(code)
}

/// `worst`, a comma-separated tuple, or a packed id.
fn parse_cell(text: &str, cover: &ProductCover, model: &WeightModel) -> Result<CellId, CliError> {
    let text = text.trim();
    if text == "worst" {
        return Ok(min_cell_measure(cover, model).0);
    }
    let parts: Vec<usize> = parse_list(text)?;
    if parts.len() == 1 && cover.depth() > 1 {
        let id = parts[0] as u64;
        if id >= cover.cell_count() {
            return Err(CliError::validation(format!(
                "cell id {id} outside a cover of {} cells",
                cover.cell_count()
            )));
        }
        return Ok(CellId(id));
    }
    if parts.len() != cover.depth() {
        return Err(CliError::validation(format!(
            "cell tuple has {} entries, the cover has depth {}",
            parts.len(),
            cover.depth()
        )));
    }
    if let Some(&bad) = parts.iter().find(|&&i| i >= cover.alphabet_size()) {
        return Err(CliError::validation(format!(
            "alphabet cell {bad} out of range 0..{}",
            cover.alphabet_size()
        )));
    }
    Ok(cover.encode(&parts))
}

fn describe_cell(cell: CellId, cover: &ProductCover, model: &WeightModel) -> Value {
    json!({
        "id": cell.0,
        "tuple": cover.decode(cell),
        "cells": cover.render(cell),
        "mass": ln_product_cell_measure(cell, cover, model).exp(),
    })
}

fn measure(a: MeasureArgs, r: &Resolver) -> Result<i32, CliError> {
    let (params, metric) = r.params(&a.metric)?;
    let (model, model_name) = r.model(&a.model)?;
    let mut cfg = r.effective("measure", &params, &metric)?;
    cfg.model = Some(model_name);
    let needs_delta = a.cell.is_some() || a.min_cell || a.mmin;
    if needs_delta {
        cfg.delta = Some(r.delta(a.delta)?);
    }
    cfg.budget = a.budget.or(r.file.budget).unwrap_or(u64::MAX);
    if a.cell_word.is_none() && !needs_delta && a.gibbs_check.is_none() {
        return Err(CliError::validation(
            "nothing to measure: give --cell-word, --cell, --min-cell, --mmin or --gibbs-check",
        ));
    }
    echo_config(&cfg)?;

    let mut out = json!({ "config": cfg });
    if let Some(word) = &a.cell_word {
        let w: Vec<u64> = parse_list(word)?;
        if w.is_empty() || w.contains(&0) {
            return Err(CliError::validation("a word needs at least one symbol, all >= 1"));
        }
        let ln = ln_cylinder_measure(&w, &model);
        out["cylinder"] = json!({ "word": w, "measure": ln.exp(), "ln_measure": ln });
    }
    if let Some(delta) = cfg.delta {
        if let Some(text) = &a.cell {
            let cover = ProductCover::build(delta, params, cfg.budget)?;
            let cell = parse_cell(text, &cover, &model)?;
            out["cell"] = describe_cell(cell, &cover, &model);
        }
        if a.min_cell {
            let m = min_cell_at_scale(delta, params, &model)?;
            out["min_cell"] = json!({
                "tuple": vec![m.base_index; m.depth],
                "mass": m.mass(),
                "ln_mass": m.ln_mass,
            });
        }
        if a.mmin {
            let b = mmin_bracket(delta, params, &model)?;
            out["mmin"] = json!({ "lo": b.lo(), "hi": b.hi(), "ln_lo": b.ln_lo, "ln_hi": b.ln_hi });
        }
    }
    if let Some(kappa) = a.gibbs_check {
        if a.n_max == 0 {
            return Err(CliError::validation("--n-max must be at least 1"));
        }
        out["gibbs_check"] = to_value(&gibbs_envelope_check(&model, kappa, a.n_max)?);
    }
    emit(&out, &a.out)?;
    Ok(0)
}

fn write_jsonl(path: &Path, samples: &[u64], seed: u64) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    for rec in trial_records(samples, seed) {
        serde_json::to_writer(&mut w, &rec).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn summarize(samples: &[u64], seed: u64) -> Result<Estimate, CliError> {
    Ok(Estimate::from_samples(samples.iter().map(|&t| t as f64), seed)?)
}

fn simulate(a: SimulateArgs, r: &Resolver) -> Result<i32, CliError> {
    let (params, metric) = r.params(&a.metric)?;
    let (model, model_name) = r.model(&a.model)?;
    let delta = r.delta(a.delta)?;
    let default_trials = match a.kind {
        SimKind::Hit | SimKind::Kac => 10_000,
        SimKind::Cover => 1_000,
        SimKind::Tail => 100_000,
    };
    let trials = r.trials(a.trials, default_trials);
    let min = match a.kind {
        SimKind::Hit | SimKind::Kac => MIN_TRIALS,
        _ => 2,
    };
    if trials < min {
        return Err(CliError::validation(format!("need at least {min} trials, got {trials}")));
    }
    let mut cfg = r.effective("simulate", &params, &metric)?;
    cfg.model = Some(model_name);
    cfg.delta = Some(delta);
    cfg.trials = Some(trials);
    cfg.budget = r.budget(a.budget);
    let seed = cfg.seed;

    let grid: Vec<u64> = match (&a.grid, a.kind) {
        (Some(g), SimKind::Tail) => parse_list(g)?,
        (None, SimKind::Tail) => vec![256, 512, 1024, 2048],
        (Some(_), _) => return Err(CliError::validation("--grid only applies to `simulate tail`")),
        (None, _) => Vec::new(),
    };
    if a.kind == SimKind::Tail && grid.is_empty() {
        return Err(CliError::validation("the tail grid is empty"));
    }
    if a.bracket && a.kind != SimKind::Cover {
        return Err(CliError::validation("--bracket only applies to `simulate cover`"));
    }
    echo_config(&cfg)?;

    if a.bracket {
        let b = cover_bracket(delta, params, &model, trials, seed)?;
        emit(&json!({ "config": cfg, "kind": "cover", "bracket": b }), &a.out)?;
        return Ok(0);
    }

    let cover = ProductCover::build_clamped(delta, params, cfg.budget)?;
    let mut out = json!({ "config": cfg, "kind": a.kind.name(), "cover": shape(&cover) });
    let samples = match a.kind {
        SimKind::Cover => {
            let s = cover_samples(&cover, &model, trials, seed)?;
            out["estimate"] = to_value(&summarize(&s, seed)?);
            if cover.cell_count() <= EXACT_HITTING_CELLS {
                let exact = all_hitting_exact(&cover, &model)?;
                out["coupon"] = json!(coupon_envelope(&cover, &exact)?);
            }
            s
        }
        kind => {
            let cell = parse_cell(a.cell.as_deref().unwrap_or("worst"), &cover, &model)?;
            let mass = ln_product_cell_measure(cell, &cover, &model).exp();
            out["cell"] = describe_cell(cell, &cover, &model);
            let s = if kind == SimKind::Kac {
                kac_samples(cell, &cover, &model, trials, seed)?
            } else {
                hitting_samples(cell, &cover, &model, trials, seed)?
            };
            match kind {
                SimKind::Hit => {
                    out["estimate"] = to_value(&summarize(&s, seed)?);
                    out["exact"] = json!(expected_hitting_exact(cell, &cover, &model)?);
                }
                SimKind::Kac => {
                    out["estimate"] = to_value(&summarize(&s, seed)?);
                    out["inverse_mass"] = json!(1.0 / mass);
                }
                _ => {
                    let mut points = Vec::with_capacity(grid.len());
                    for &n in &grid {
                        let over = s.iter().filter(|&&t| t > n).count() as u64;
                        let (survival, stderr) = proportion(over, trials);
                        points.push(json!({
                            "n": n,
                            "survival": survival,
                            "stderr": stderr,
                            "exponential": (-mass * n as f64).exp(),
                            "exact": hitting_survival_exact(cell, &cover, &model, n)?,
                        }));
                    }
                    out["tail"] = Value::Array(points);
                }
            }
            s
        }
    };
    if let Some(path) = &a.jsonl {
        write_jsonl(path, &samples, seed)?;
    }
    emit(&out, &a.out)?;
    Ok(0)
}

impl SimKind {
    fn name(self) -> &'static str {
        match self {
            SimKind::Hit => "hit",
            SimKind::Cover => "cover",
            SimKind::Kac => "kac",
            SimKind::Tail => "tail",
        }
    }
}

fn verify(a: VerifyArgs, r: &Resolver) -> Result<i32, CliError> {
    let suite: Suite = a.suite.parse()?;
    let mut opts = SuiteOptions {
        seed: r.seed()?,
        ..SuiteOptions::default()
    };
    if !a.model.is_empty() {
        opts.psi_models = a
            .model
            .iter()
            .map(|m| m.parse::<WeightModel>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(g) = &a.grid {
        opts.dim_grid = parse_list(g)?;
        if opts.dim_grid.is_empty() {
            return Err(CliError::validation("the dim grid is empty"));
        }
    }
    eprintln!("config: {{\"command\":\"verify\",\"suite\":\"{}\",\"seed\":{}}}", a.suite, opts.seed);
    let checks = run_suite(suite, &opts);
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for c in &checks {
        writeln!(w, "{c}")?;
        for d in &c.details {
            writeln!(w, "    {d}")?;
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(w, "{} checks, {} failed", checks.len(), failed)?;
    Ok(if failed > 0 { EXIT_VERIFY } else { 0 })
}

fn report(a: ReportArgs, r: &Resolver) -> Result<i32, CliError> {
    let (params, metric) = r.params(&a.metric)?;
    let (model, model_name) = r.model(&a.model)?;
    let grid = r.grid(&a.grid)?;
    if grid.is_empty() {
        return Err(CliError::validation("the report grid is empty; pass --grid"));
    }
    if let Some(bad) = grid.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(CliError::validation(format!("grid points must lie in (0, 1), got {bad}")));
    }
    let eps = a.eps.or(r.file.eps);
    if let Some(e) = eps {
        if !(e > 0.0 && e.is_finite()) {
            return Err(CliError::validation(format!("eps must be positive, got {e}")));
        }
    }
    let trials = r.trials(a.trials, 1_000);
    if trials < 2 {
        return Err(CliError::validation("need at least 2 trials"));
    }
    let mut cfg = r.effective("report", &params, &metric)?;
    cfg.model = Some(model_name);
    cfg.grid = Some(grid.clone());
    cfg.trials = Some(trials);
    cfg.budget = r.budget(a.budget);
    cfg.eps = eps;
    echo_config(&cfg)?;

    let settings = ReportSettings {
        params,
        model,
        trials,
        master_seed: cfg.seed,
        eps,
        budget: cfg.budget,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &delta in &grid {
        let (row, warnings) = report_row(delta, &settings)?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        rows.push(row);
    }
    match &a.out {
        Some(path) => {
            write_csv(&rows, BufWriter::new(File::create(path)?))?;
            let mut sidecar = path.clone().into_os_string();
            sidecar.push(".config.json");
            let text = serde_json::to_string_pretty(&cfg).map_err(|e| CliError::runtime(e.to_string()))?;
            std::fs::write(PathBuf::from(sidecar), text + "\n")?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(0)
}
