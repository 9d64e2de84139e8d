//! `wgr`: experiment driver for weak Gurov–Reshetnyak checks.
//!
//! Exit status: 0 when every non-observational check passes (vacuous passes
//! included), 1 when a check fails or stops on a library error, 2 on
//! configuration and usage errors.

mod config;
mod output;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wgr::czdecomp::{cz_decompose, cz_nested, JnConstants};
use wgr::instances::{GEOMETRY_KINDS, KINDS};
use wgr::theorems::{check_final_rhi, check_jn_decay, check_osc_rhi, check_weak_rhi, Witness};
use wgr::{CheckReport, Weight};

use crate::config::{config_error, Check, ConfigError, ExperimentConfig, Format, Setup, CHECKS};
use crate::output::{csv_bytes, emit, real, sha256_hex, to_json, OutDir};
use crate::runner::{Outcome, Runner};

#[derive(Parser)]
#[command(
    name = "wgr",
    version,
    about = "Check weak Gurov–Reshetnyak estimates on finite metric measure spaces"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for `run`, output file for other commands (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces every seed of the instance.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured check and write reports plus a manifest.
    Run,
    /// Generate or validate the configured space.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Generate the configured weight.
    #[command(subcommand)]
    Weight(WeightCmd),
    /// Run one check; parameters come from the config entry of that name.
    Check {
        name: String,
        /// Parameters as JSON, overriding the config entry.
        #[arg(long)]
        params: Option<String>,
    },
    /// Calderón–Zygmund decompositions of the weight.
    #[command(subcommand)]
    Cz(CzCmd),
    /// Five-r cover of the base ball.
    Cover,
    /// Decay estimate per level as CSV: lambda, lhs, rhs, margin, vacuous.
    DecayTable {
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Tables across eps, p or sigma.
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// What a config may contain.
    #[command(subcommand)]
    Examples(ExamplesCmd),
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Write the instance's space as JSON.
    Gen,
    /// Check the metric axioms and report the exact doubling constant.
    Validate,
}

#[derive(Subcommand)]
enum WeightCmd {
    /// Write the instance's weight as CSV: index, mass, weight.
    Gen,
}

#[derive(Subcommand)]
enum CzCmd {
    /// Decomposition of `f` at one level.
    Decompose {
        #[arg(long)]
        lambda: f64,
        /// Decompose `(w - W)_+` at `lambda W`, `W` the average over `sigma B̂0`.
        #[arg(long)]
        excess: bool,
    },
    /// Nested decompositions at two levels.
    Nested {
        #[arg(long)]
        low: f64,
        #[arg(long)]
        high: f64,
        #[arg(long)]
        excess: bool,
    },
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Constants along `eps = 2^-k`.
    Eps {
        #[arg(long, default_value_t = 3)]
        from: u32,
        #[arg(long, default_value_t = 20)]
        to: u32,
    },
    /// Power-type estimates across exponents (measured `eps`).
    P {
        #[arg(long, value_delimiter = ',', default_values_t = [1.25, 1.5, 2.0, 3.0, 4.0])]
        values: Vec<f64>,
    },
    /// Measured `eps` and constants across `sigma`.
    Sigma {
        #[arg(long, value_delimiter = ',', default_values_t = [1.25, 1.5, 2.0, 3.0])]
        values: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum ExamplesCmd {
    /// Instance kinds, geometry kinds and checks with their parameters.
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<ConfigError>().is_some() {
                2
            } else {
                1
            })
        }
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(config_error("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let c = &cli.common;
    match &cli.command {
        Command::Examples(ExamplesCmd::List) => examples_list(c.out.as_deref()),
        Command::Run => run(c),
        cmd => {
            let setup = load(c)?;
            match cmd {
                Command::Space(SpaceCmd::Gen) => {
                    emit(c.out.as_deref(), &to_json(&setup.space().to_json())?)?;
                    Ok(0)
                }
                Command::Space(SpaceCmd::Validate) => space_validate(&setup, c.out.as_deref()),
                Command::Weight(WeightCmd::Gen) => weight_gen(&setup, c.out.as_deref()),
                Command::Check { name, params } => {
                    check_one(&setup, name, params.as_deref(), c.out.as_deref())
                }
                Command::Cz(cmd) => cz(&setup, cmd, c.out.as_deref()),
                Command::Cover => {
                    let s = &setup;
                    let cover = wgr::balls::five_r_cover(
                        s.space(),
                        s.base,
                        s.sigma(),
                        s.eta(),
                        &s.profile()?,
                    )?;
                    emit(c.out.as_deref(), &to_json(&cover)?)?;
                    Ok(if cover.all_ok() { 0 } else { 1 })
                }
                Command::DecayTable { eps } => decay_table(&setup, *eps, c.out.as_deref()),
                Command::Sweep(cmd) => sweep(&setup, cmd, c.out.as_deref()),
                Command::Run | Command::Examples(_) => unreachable!(),
            }
        }
    }
}

fn load(c: &Common) -> anyhow::Result<Setup> {
    let Some(path) = &c.config else {
        return Err(config_error("--config is required for this command"));
    };
    Setup::new(ExperimentConfig::load(path)?, c.seed)
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    config_path: String,
    config_sha256: String,
    seed_override: Option<u64>,
    seeds: std::collections::BTreeMap<String, u64>,
    base_ball: wgr::Ball,
    exit_status: u8,
    checks: Vec<ManifestCheck>,
    files: Vec<output::FileEntry>,
}

#[derive(Serialize)]
struct ManifestCheck {
    name: String,
    report: String,
    result: String,
}

fn run(c: &Common) -> anyhow::Result<u8> {
    let Some(path) = &c.config else {
        return Err(config_error("--config is required for `run`"));
    };
    let raw = std::fs::read(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let config = ExperimentConfig::load(path)?;
    let checks = config.parsed_checks()?;
    let formats = config.output.formats.clone();
    let dir = c
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let setup = Setup::new(config, c.seed)?;
    let mut out = OutDir::open(&dir)?;
    out.write("instance.json", &to_json(&setup.config.instance)?)?;
    let mut runner = Runner::new(&setup);
    let mut entries = Vec::new();
    let mut failing = Vec::new();
    for (i, (name, check)) in checks.iter().enumerate() {
        let outcome = runner.run(name, check);
        let stem = format!("{i:02}_{name}");
        let mut report_path = None;
        if formats.contains(&Format::Json) {
            report_path = Some(out.write(&format!("{stem}.json"), &to_json(&outcome)?)?);
        }
        if formats.contains(&Format::Csv) {
            if let Outcome::Report(r) = &outcome {
                let p = out.write(
                    &format!("{stem}.csv"),
                    &rows_csv(r, matches!(check, Check::JnDecay(_)))?,
                )?;
                report_path.get_or_insert(p);
            }
        }
        let label = outcome.label();
        println!("{name}: {label}");
        if outcome.fails() {
            failing.push(
                report_path
                    .as_ref()
                    .map_or(stem.clone(), |p| p.display().to_string()),
            );
        }
        entries.push(ManifestCheck {
            name: name.clone(),
            report: stem,
            result: label,
        });
    }
    let status = if failing.is_empty() { 0 } else { 1 };
    let manifest = Manifest {
        tool: "wgr",
        version: env!("CARGO_PKG_VERSION"),
        config_path: path.display().to_string(),
        config_sha256: sha256_hex(&raw),
        seed_override: c.seed,
        seeds: setup.seeds(),
        base_ball: setup.base,
        exit_status: status,
        checks: entries,
        files: out.files.clone(),
    };
    out.write("manifest.json", &to_json(&manifest)?)?;
    for f in &failing {
        eprintln!("failed: {f}");
    }
    Ok(status)
}

fn witness_cells(w: &Witness) -> [String; 3] {
    match *w {
        Witness::Ball(b) => ["ball".into(), b.center.to_string(), real(b.radius)],
        Witness::Lambda { lambda } => ["lambda".into(), String::new(), real(lambda)],
        Witness::Alpha { alpha } => ["alpha".into(), String::new(), real(alpha)],
        Witness::Exponent { p } => ["p".into(), String::new(), real(p)],
        Witness::Y { y } => ["y".into(), String::new(), real(y)],
        Witness::Point { index } => ["point".into(), index.to_string(), String::new()],
    }
}

fn rows_csv(r: &CheckReport, decay: bool) -> anyhow::Result<Vec<u8>> {
    if decay {
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|row| {
                let Witness::Lambda { lambda } = row.key else {
                    unreachable!("decay rows are keyed by level")
                };
                vec![
                    real(lambda),
                    real(row.lhs),
                    real(row.rhs),
                    real(row.margin),
                    row.vacuous.to_string(),
                ]
            })
            .collect();
        return csv_bytes(
            &["lambda", "lhs_measure", "rhs_bound", "margin", "vacuous"],
            &rows,
        );
    }
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            let [k, c, v] = witness_cells(&row.key);
            vec![
                k,
                c,
                v,
                real(row.lhs),
                real(row.rhs),
                real(row.margin),
                row.vacuous.to_string(),
            ]
        })
        .collect();
    csv_bytes(
        &["key", "center", "value", "lhs", "rhs", "margin", "vacuous"],
        &rows,
    )
}

fn check_one(
    setup: &Setup,
    name: &str,
    params: Option<&str>,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let spec = match params {
        Some(text) => config::CheckSpec {
            name: name.into(),
            params: serde_json::from_str(text)
                .map_err(|e| config_error(format!("--params: {e}")))?,
        },
        None => setup
            .config
            .checks
            .iter()
            .find(|c| c.name == name)
            .cloned()
            .unwrap_or(config::CheckSpec {
                name: name.into(),
                params: serde_json::Value::Null,
            }),
    };
    let check = Check::parse(&spec, "check")?;
    let outcome = Runner::new(setup).run(name, &check);
    emit(out, &to_json(&outcome)?)?;
    eprintln!("{name}: {}", outcome.label());
    Ok(if outcome.fails() { 1 } else { 0 })
}

fn space_validate(setup: &Setup, out: Option<&Path>) -> anyhow::Result<u8> {
    #[derive(Serialize)]
    struct Validation {
        points: usize,
        total_mass: f64,
        violations: usize,
        examples: Vec<wgr::space::MetricViolation>,
        c_mu: f64,
        #[serde(rename = "D")]
        dimension_d: f64,
    }
    let s = setup.space();
    let v = s.validate_metric();
    let profile = wgr::DoublingProfile::exact(s)?;
    let report = Validation {
        points: s.len(),
        total_mass: s.total_mass(),
        violations: v.len(),
        examples: v.iter().take(10).cloned().collect(),
        c_mu: profile.c_mu,
        dimension_d: profile.dimension_d,
    };
    emit(out, &to_json(&report)?)?;
    Ok(if v.is_empty() { 0 } else { 1 })
}

fn weight_gen(setup: &Setup, out: Option<&Path>) -> anyhow::Result<u8> {
    let s = setup.space();
    let w = setup.instance.weight.values();
    let rows: Vec<Vec<String>> = (0..s.len())
        .map(|i| vec![i.to_string(), real(s.mass(i)), real(w[i])])
        .collect();
    emit(out, &csv_bytes(&["index", "mass", "weight"], &rows)?)?;
    Ok(0)
}

fn cz(setup: &Setup, cmd: &CzCmd, out: Option<&Path>) -> anyhow::Result<u8> {
    let s = setup;
    let profile = s.profile()?;
    let excess = matches!(
        cmd,
        CzCmd::Decompose { excess: true, .. } | CzCmd::Nested { excess: true, .. }
    );
    let (f, scale): (Weight, f64) = if excess {
        let big = s.base.dilate(s.sigma() * (1.0 + s.eta()))?;
        let level = wgr::weights::average(s.space(), &s.instance.weight, &s.space().members(&big))?;
        (s.instance.weight.excess_over(level), level)
    } else {
        (s.instance.weight.clone(), 1.0)
    };
    let bytes = match *cmd {
        CzCmd::Decompose { lambda, .. } => to_json(&cz_decompose(
            s.space(),
            &f,
            lambda * scale,
            &s.family,
            &profile,
        )?)?,
        CzCmd::Nested { low, high, .. } => {
            #[derive(Serialize)]
            struct Nested {
                low: wgr::CzDecomposition,
                high: wgr::CzDecomposition,
                /// Index of a low-level ball whose 5-dilate holds each high-level ball.
                parent: Vec<usize>,
            }
            let (lo, hi, parent) = cz_nested(
                s.space(),
                &f,
                low * scale,
                high * scale,
                &s.family,
                &profile,
            )?;
            to_json(&Nested {
                low: lo,
                high: hi,
                parent,
            })?
        }
    };
    emit(out, &bytes)?;
    Ok(0)
}

fn decay_table(setup: &Setup, eps: Option<f64>, out: Option<&Path>) -> anyhow::Result<u8> {
    let grid = setup
        .config
        .checks
        .iter()
        .find(|c| c.name == "jn_decay")
        .map(|c| Check::parse(c, "jn_decay"));
    let grid = match grid.transpose()? {
        Some(Check::JnDecay(p)) => p.lambda_grid,
        _ => None,
    };
    let mut runner = Runner::new(setup);
    let ctx = runner.context(eps)?;
    let r = check_jn_decay(ctx, setup.space(), &setup.instance.weight, grid.as_deref())?;
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            let Witness::Lambda { lambda } = row.key else {
                unreachable!()
            };
            vec![
                real(lambda),
                real(row.lhs),
                real(row.rhs),
                real(row.margin),
                row.vacuous.to_string(),
            ]
        })
        .collect();
    emit(
        out,
        &csv_bytes(&["lambda", "lhs", "rhs", "margin", "vacuous"], &rows)?,
    )?;
    Ok(if r.passed { 0 } else { 1 })
}

fn sweep(setup: &Setup, cmd: &SweepCmd, out: Option<&Path>) -> anyhow::Result<u8> {
    let s = setup;
    let bytes = match cmd {
        SweepCmd::Eps { from, to } => {
            if from > to || *to > 1000 {
                return Err(config_error(format!(
                    "need from <= to <= 1000, got {from}..{to}"
                )));
            }
            let profile = s.profile()?;
            let rows: Vec<Vec<String>> = (*from..=*to)
                .map(|k| {
                    let eps = (-(k as f64)).exp2();
                    let c = JnConstants::new(&profile, s.sigma(), s.eta(), eps)?;
                    Ok(vec![
                        k.to_string(),
                        real(eps),
                        real(c.alpha),
                        real(c.a_const),
                        real(c.lambda0),
                        real(c.eps_threshold()),
                        real(c.exponent_cap()),
                        (eps < c.eps_threshold()).to_string(),
                    ])
                })
                .collect::<wgr::Result<_>>()?;
            csv_bytes(
                &[
                    "k",
                    "eps",
                    "alpha",
                    "A",
                    "lambda0",
                    "eps_threshold",
                    "exponent_cap",
                    "admissible",
                ],
                &rows,
            )?
        }
        SweepCmd::P { values } => {
            let mut runner = Runner::new(s);
            let ctx = runner.context(None)?;
            let (space, w) = (s.space(), &s.instance.weight);
            let rows: Vec<Vec<String>> = values
                .iter()
                .map(|&p| {
                    let cell = |r: wgr::Result<CheckReport>| match r {
                        Ok(r) => real(r.margin),
                        Err(e) => format!("error: {e}"),
                    };
                    let c_osc = ctx.osc_constant(p).map(|c| real(c.0)).unwrap_or_default();
                    let c_rhi = ctx.weak_rhi_constant(p).map(real).unwrap_or_default();
                    vec![
                        real(p),
                        c_osc,
                        c_rhi,
                        cell(check_osc_rhi(ctx, space, w, p)),
                        cell(check_weak_rhi(ctx, space, w, p)),
                        cell(check_final_rhi(ctx, space, w, p)),
                    ]
                })
                .collect();
            csv_bytes(
                &[
                    "p",
                    "C_osc",
                    "C_rhi",
                    "osc_margin",
                    "weak_margin",
                    "final_margin",
                ],
                &rows,
            )?
        }
        SweepCmd::Sigma { values } => {
            let profile = s.profile()?;
            let opts = wgr::theorems::JnOptions {
                eps: None,
                profile: Some(profile),
            };
            let rows: Vec<Vec<String>> = values
                .iter()
                .map(|&sigma| {
                    let ctx = wgr::theorems::JnContext::new(
                        s.space(),
                        &s.instance.weight,
                        sigma,
                        s.eta(),
                        s.base,
                        opts,
                    )?;
                    let c = ctx.constants;
                    Ok(vec![
                        real(sigma),
                        real(c.eps),
                        real(c.alpha),
                        real(c.a_const),
                        real(c.lambda0),
                        real(c.eps_threshold()),
                        real(c.exponent_cap()),
                    ])
                })
                .collect::<wgr::Result<_>>()?;
            csv_bytes(
                &[
                    "sigma",
                    "eps",
                    "alpha",
                    "A",
                    "lambda0",
                    "eps_threshold",
                    "exponent_cap",
                ],
                &rows,
            )?
        }
    };
    emit(out, &bytes)?;
    Ok(0)
}

fn examples_list(out: Option<&Path>) -> anyhow::Result<u8> {
    #[derive(Serialize)]
    struct Kind {
        kind: &'static str,
        params: std::collections::BTreeMap<&'static str, &'static str>,
    }
    #[derive(Serialize)]
    struct Listing {
        instances: Vec<Kind>,
        geometries: Vec<Kind>,
        checks: std::collections::BTreeMap<&'static str, &'static str>,
    }
    let kinds = |list: &[(&'static str, &[(&'static str, &'static str)])]| {
        list.iter()
            .map(|(k, ps)| Kind {
                kind: k,
                params: ps.iter().copied().collect(),
            })
            .collect()
    };
    let listing = Listing {
        instances: kinds(KINDS),
        geometries: kinds(GEOMETRY_KINDS),
        checks: CHECKS.iter().copied().collect(),
    };
    emit(out, &to_json(&listing)?)?;
    Ok(0)
}
