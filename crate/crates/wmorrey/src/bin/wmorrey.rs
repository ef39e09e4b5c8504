//! Batch front-end: config ingestion, corpus generation, preset execution,
//! and report emission.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wmorrey::config::RunConfig;
use wmorrey::io::{content_hash, import_function, save_json, write_csv};
use wmorrey::runner::{run_verification, FullReport, RunOptions};
use wmorrey::spaces::{bmo_norm, llogl_morrey_norm, lp_norm, morrey_norm, weak_lp_norm, weak_morrey_norm};
use wmorrey::weights::{
    ainf_characteristic, ainf_stability, ap_characteristic, ap_stability,
    doubling_and_comparability, reverse_holder_exponent, Weight,
};
use wmorrey::Error;

#[derive(Parser)]
#[command(name = "wmorrey", about = "Weighted-Morrey / singular-integral inequality harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a CSV of weight-class characteristics.
    Characterize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the configured norm requests on a stored function.
    Norms {
        #[arg(long)]
        config: PathBuf,
        /// Base path of the <base>.json / <base>.f64 pair.
        #[arg(long)]
        function: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every configured preset with a refinement study.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the corpus seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Refinement depth.
        #[arg(long)]
        levels: Option<usize>,
        /// Assert the kernel size condition on every quadrature tuple.
        #[arg(long)]
        audit: bool,
    },
    /// Print the summary of a saved verify report.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::CostGuard { .. } => 3,
        Error::DegenerateCorpus => 4,
        Error::InvalidConfig(_)
        | Error::InvalidArgument(_)
        | Error::InvalidExponent(_)
        | Error::WeightSingular { .. }
        | Error::GridMismatch(_)
        | Error::Json(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Characterize { config, out } => cmd_characterize(&config, &out),
        Command::Norms { config, function, out } => cmd_norms(&config, &function, &out),
        Command::Verify { config, out, seed, levels, audit } => {
            cmd_verify(&config, &out, seed, levels, audit)
        }
        Command::Report { input } => cmd_report(&input),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path)?;
    let cfg = RunConfig::from_json(&text)?;
    cfg.resolve_all()?;
    Ok(cfg)
}

fn fmt_stable(stable: bool) -> &'static str {
    if stable {
        "stable"
    } else {
        "unstable"
    }
}

fn cmd_characterize(config: &Path, out: &Path) -> Result<ExitCode, Error> {
    let cfg = load_config(config)?;
    let grid = cfg.build_grid()?;
    let family = cfg.build_family(&grid);
    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for spec in &cfg.weights {
        let w = cfg.weight(&spec.id)?;
        for p in [1.0, 2.0, 4.0] {
            let value = ap_characteristic(&w, p, &grid, &family)?;
            let probe = ap_stability(&w, p, &grid)?;
            rows.push(format!("{},a{},F0,{},{}", spec.id, p, value, fmt_stable(probe.stable)));
        }
        let value = ainf_characteristic(&w, &grid, &family)?;
        let probe = ainf_stability(&w, &grid)?;
        rows.push(format!("{},ainf,F0,{},{}", spec.id, value, fmt_stable(probe.stable)));
        let (doubling, delta) = doubling_and_comparability(&w, &grid, &family)?;
        rows.push(format!("{},doubling,F0,{doubling},stable", spec.id));
        rows.push(format!("{},compare_delta,F0,{delta},stable", spec.id));
        match reverse_holder_exponent(&w, &grid, &[1.25, 1.5, 2.0, 3.0, 4.0], 8.0)? {
            Some(s) => rows.push(format!("{},reverse_holder,F0,{s},stable", spec.id)),
            None => rows.push(format!("{},reverse_holder,F0,none,unstable", spec.id)),
        }
    }
    let path = out.join("characteristics.csv");
    write_csv(&path, "weight,class,family,value,stability", &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_norms(config: &Path, function: &Path, out: &Path) -> Result<ExitCode, Error> {
    let cfg = load_config(config)?;
    let grid = cfg.build_grid()?;
    let family = cfg.build_family(&grid);
    let base = function.with_extension("");
    let (name, f) = import_function(&base)?;
    if f.grid().as_ref() != grid.as_ref() {
        return Err(Error::GridMismatch(format!(
            "function lives on h = {}, config grid has h = {}",
            f.grid().spacing(),
            grid.spacing()
        )));
    }
    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for req in &cfg.norms {
        let p = req.p.unwrap_or(1.0);
        let kappa = req.kappa.unwrap_or(0.0);
        let w = match &req.weight {
            Some(id) => Some(cfg.weight(id)?.sample(&grid)?),
            None => None,
        };
        let value = match req.space.as_str() {
            "lp" => lp_norm(&f, w.as_ref(), p)?,
            "weak_lp" => weak_lp_norm(&f, w.as_ref(), p)?,
            "morrey" => morrey_norm(&f, w.as_ref(), p, kappa, &family)?,
            "weak_morrey" => weak_morrey_norm(&f, w.as_ref(), p, kappa, &family)?,
            "llogl_morrey" => {
                let one = Weight::one().sample(&grid)?;
                llogl_morrey_norm(&f, w.as_ref().unwrap_or(&one), kappa, &family)?
            }
            "bmo" => bmo_norm(&f, &family)?.norm,
            other => return Err(Error::InvalidConfig(format!("unknown space '{other}'"))),
        };
        rows.push(format!(
            "{name},{},{p},{kappa},{},{value}",
            req.space,
            req.weight.as_deref().unwrap_or("lebesgue"),
        ));
    }
    let path = out.join("norms.csv");
    write_csv(&path, "function,space,p,kappa,weight,value", &rows)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    levels: Option<usize>,
    audit: bool,
) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(config)?;
    let cfg = RunConfig::from_json(&text)?;
    let full = run_verification(&cfg, RunOptions { audit, levels, seed })?;
    fs::create_dir_all(out)?;

    for lemmas in &full.bmo_lemmas {
        println!(
            "preset bmo_lemmas: shift={:.4} osc_lp={:.4} exp_l={:.4} assertion={:.4}",
            lemmas.average_shift, lemmas.oscillation_lp, lemmas.exp_l,
            lemmas.fractional_assertion
        );
    }
    let mut csv_rows = Vec::new();
    for report in &full.presets {
        for r in &report.records {
            csv_rows.push(format!("{},{},{},{},{}", report.preset, r.member, r.lhs, r.rhs, r.ratio));
        }
    }
    for s in &full.summary {
        println!(
            "preset {}: C_obs={:.6e} drift={:.3} {} [{}]",
            s.preset,
            s.c_obs,
            s.drift,
            fmt_stable(s.stable),
            if s.pass { "PASS" } else { "FAIL" }
        );
    }
    save_json(&out.join("report.json"), &full)?;
    write_csv(&out.join("ratios.csv"), "preset,member,lhs,rhs,ratio", &csv_rows)?;

    if full.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_report(input: &Path) -> Result<ExitCode, Error> {
    let full: FullReport = serde_json::from_slice(&fs::read(input)?)?;
    let hash = content_hash(&full.config)?;
    println!(
        "report over seed {} at {} levels; config hash {} ({})",
        full.seed,
        full.levels,
        &full.config_hash[..12.min(full.config_hash.len())],
        if hash == full.config_hash { "verified" } else { "MISMATCH" }
    );
    for s in &full.summary {
        println!(
            "preset {}: C_obs={:.6e} drift={:.3} {}{} [{}]",
            s.preset,
            s.c_obs,
            s.drift,
            fmt_stable(s.stable),
            if s.negative_control { " (negative control)" } else { "" },
            if s.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(ExitCode::SUCCESS)
}
