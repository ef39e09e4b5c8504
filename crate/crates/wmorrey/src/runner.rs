//! One-shot execution of a full run configuration; shared by the CLI and
//! the C ABI.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::content_hash;
use crate::lattice::SampledFunction;
use crate::verify::{
    refinement_study, run_bmo_lemmas, run_inequality, BmoLemmaReport, Corpus, RefinementStudy,
    VerificationReport,
};
use crate::weights::{BmoSymbol, Weight};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetSummary {
    pub preset: String,
    pub negative_control: bool,
    pub c_obs: f64,
    pub drift: f64,
    pub stable: bool,
    /// Positive runs pass when stable; negative controls pass when detected
    /// as unstable.
    pub pass: bool,
}

/// Full artifact of a verify run: resolved config, its hash, per-preset
/// reports and drift studies, and the pass/fail summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullReport {
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: u64,
    pub levels: usize,
    pub presets: Vec<VerificationReport>,
    pub studies: Vec<RefinementStudy>,
    pub bmo_lemmas: Vec<BmoLemmaReport>,
    pub summary: Vec<PresetSummary>,
}

impl FullReport {
    pub fn all_pass(&self) -> bool {
        self.summary.iter().all(|s| s.pass)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub audit: bool,
    pub levels: Option<usize>,
    pub seed: Option<u64>,
}

/// Runs every configured preset with its refinement study.
pub fn run_verification(cfg: &RunConfig, options: RunOptions) -> Result<FullReport> {
    let mut cfg = cfg.clone();
    if let Some(seed) = options.seed {
        cfg.seed = Some(seed);
    }
    cfg.resolve_all()?;
    let grid = cfg.build_grid()?;
    let family = cfg.build_family(&grid);
    let corpus_seed = cfg.corpus_seed();
    let corpus = Corpus::generate(&grid, corpus_seed, cfg.corpus.members)?;
    let levels = options.levels.or(cfg.levels).unwrap_or(2);

    let mut presets = Vec::new();
    let mut studies = Vec::new();
    let mut bmo_lemmas = Vec::new();
    let mut summary = Vec::new();

    for preset in &cfg.presets {
        if preset.preset == "bmo_lemmas" {
            let omega_weight = match preset.params.weights.as_ref().and_then(|w| w.first()) {
                Some(id) => cfg.weight(id)?,
                None => Weight::one(),
            };
            let sym = match preset.params.symbols.as_ref().and_then(|s| s.first()) {
                Some(id) => cfg.bmo_symbol(id)?,
                None => BmoSymbol::LogAbs { scale: 1.0 },
            };
            let n = grid.dimension();
            let b = SampledFunction::from_fn(grid.clone(), |x| sym.eval(x, n))?;
            let omega = omega_weight.sample(&grid)?;
            let nu = omega_weight.pow(0.5).sample(&grid)?;
            bmo_lemmas.push(run_bmo_lemmas(&b, &omega, &nu, 2.0, 2, &family)?);
            continue;
        }
        let mut spec = cfg.build_spec(preset)?;
        spec.params.audit = options.audit;
        let report = run_inequality(&spec, &corpus, &grid, &family)?;
        let study = refinement_study(
            &spec,
            &grid,
            corpus_seed,
            cfg.corpus.members,
            cfg.family.stride,
            levels,
        )?;
        let stable = study.stable && report.all_pass && report.c_obs.is_finite();
        let pass = if preset.negative_control { !stable } else { stable };
        summary.push(PresetSummary {
            preset: report.preset.clone(),
            negative_control: preset.negative_control,
            c_obs: report.c_obs,
            drift: study.drift,
            stable,
            pass,
        });
        presets.push(report);
        studies.push(study);
    }

    let config_value = serde_json::to_value(&cfg)?;
    Ok(FullReport {
        config_hash: content_hash(&config_value)?,
        config: config_value,
        seed: corpus_seed,
        levels,
        presets,
        studies,
        bmo_lemmas,
        summary,
    })
}
