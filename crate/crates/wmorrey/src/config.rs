//! Run configuration: JSON schema for grids, weights, kernels, presets, and
//! norm requests, resolved and validated before any compute starts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BallFamily, Grid};
use crate::operators::{KernelKind, MultilinearKernel};
use crate::orlicz::ThetaModulus;
use crate::verify::{InequalitySpec, PresetParams, PresetTag};
use crate::weights::{BmoSymbol, PowerTerm, Weight};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermSpec {
    pub a: Vec<f64>,
    pub alpha: f64,
}

/// Weight entry: `{"id": ..., "kind": "power"|"exp_bmo"|"constant",
/// "c": ..., "terms": [{"a": [...], "alpha": ...}], "eta": ..., "bmo": id}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSpec {
    pub id: String,
    pub kind: String,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub bmo: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BmoSpec {
    pub id: String,
    pub kind: String,
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub harmonic: u32,
}

/// Kernel entry: `{"kind": "majorant"|"homogeneous", "m": ..., "A": ...,
/// "omega": {"harmonic": ...}, "trunc_eps_over_h": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: String,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(default)]
    pub omega: Option<OmegaSpec>,
    #[serde(default)]
    pub trunc_eps_over_h: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    /// Center sublattice stride in samples.
    pub stride: usize,
}

impl Default for FamilySpec {
    fn default() -> FamilySpec {
        FamilySpec { stride: 16 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub members: usize,
}

impl Default for CorpusSpec {
    fn default() -> CorpusSpec {
        CorpusSpec { seed: 7, members: 20 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PresetParamSpec {
    #[serde(rename = "P", default)]
    pub exponents: Option<Vec<f64>>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub weights: Option<Vec<String>>,
    #[serde(default)]
    pub symbols: Option<Vec<String>>,
    #[serde(default)]
    pub lambda_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PresetSpec {
    pub preset: String,
    #[serde(default)]
    pub params: PresetParamSpec,
    #[serde(default)]
    pub negative_control: bool,
}

/// Norm request: `{"space": ..., "p": ..., "kappa": ..., "weight": id}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRequestSpec {
    pub space: String,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub weight: Option<String>,
    #[serde(default)]
    pub family: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub grid: GridSpec,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
    #[serde(default)]
    pub bmo: Vec<BmoSpec>,
    #[serde(default)]
    pub theta: Option<ThetaModulus>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub presets: Vec<PresetSpec>,
    #[serde(default)]
    pub norms: Vec<NormRequestSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub levels: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn bmo_symbol(&self, id: &str) -> Result<BmoSymbol> {
        let spec = self
            .bmo
            .iter()
            .find(|b| b.id == id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown bmo symbol '{id}'")))?;
        match spec.kind.as_str() {
            "log_abs" => Ok(BmoSymbol::LogAbs { scale: spec.scale.unwrap_or(1.0) }),
            other => Err(Error::InvalidConfig(format!("unknown bmo kind '{other}'"))),
        }
    }

    pub fn weight(&self, id: &str) -> Result<Weight> {
        let spec = self
            .weights
            .iter()
            .find(|w| w.id == id)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown weight '{id}'")))?;
        self.build_weight(spec)
    }

    fn build_weight(&self, spec: &WeightSpec) -> Result<Weight> {
        match spec.kind.as_str() {
            "constant" => Ok(Weight::Constant { c: spec.c.unwrap_or(1.0) }),
            "power" => {
                let terms = spec
                    .terms
                    .as_deref()
                    .unwrap_or(&[])
                    .iter()
                    .map(|t| {
                        let mut anchor = [0.0, 0.0];
                        for (i, &v) in t.a.iter().take(2).enumerate() {
                            anchor[i] = v;
                        }
                        PowerTerm { anchor, alpha: t.alpha }
                    })
                    .collect();
                Ok(Weight::Power { c: spec.c.unwrap_or(1.0), terms })
            }
            "exp_bmo" => {
                let eta = spec.eta.ok_or_else(|| {
                    Error::InvalidConfig(format!("weight '{}' needs eta", spec.id))
                })?;
                let bmo_id = spec.bmo.as_deref().ok_or_else(|| {
                    Error::InvalidConfig(format!("weight '{}' needs a bmo reference", spec.id))
                })?;
                Ok(Weight::ExpBmo { eta, b: self.bmo_symbol(bmo_id)? })
            }
            other => Err(Error::InvalidConfig(format!("unknown weight kind '{other}'"))),
        }
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.grid.n, self.grid.l, self.grid.h)?))
    }

    pub fn build_family(&self, grid: &Grid) -> BallFamily {
        BallFamily::dyadic(grid, self.family.stride)
    }

    pub fn theta(&self) -> ThetaModulus {
        self.theta.clone().unwrap_or(ThetaModulus::Power { eps: 1.0 })
    }

    pub fn build_kernel(&self) -> Result<MultilinearKernel> {
        let spec = self
            .kernel
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("config has no kernel".into()))?;
        let kind = match spec.kind.as_str() {
            "majorant" => KernelKind::Majorant,
            "homogeneous" => KernelKind::Homogeneous {
                harmonic: spec.omega.as_ref().map_or(2, |o| o.harmonic),
            },
            other => return Err(Error::InvalidConfig(format!("unknown kernel kind '{other}'"))),
        };
        MultilinearKernel::new(spec.m, self.grid.n, kind, spec.a, self.theta())
    }

    pub fn corpus_seed(&self) -> u64 {
        self.seed.unwrap_or(self.corpus.seed)
    }

    fn preset_tag(name: &str) -> Result<PresetTag> {
        Ok(match name {
            "identity" => PresetTag::Identity,
            "holder_forward" => PresetTag::HolderForward,
            "holder_reverse" => PresetTag::HolderReverse,
            "holder_suite" => PresetTag::HolderSuite,
            "thm_2_1" | "thm_1_1" => PresetTag::Thm21,
            "thm_2_2" | "thm_1_2" => PresetTag::Thm22,
            "thm_2_3" => PresetTag::Thm23,
            "thm_2_4" => PresetTag::Thm24,
            "thm_5_1" => PresetTag::Thm51,
            "thm_5_2" => PresetTag::Thm52,
            "bmo_lemmas" => PresetTag::BmoLemmas,
            other => return Err(Error::InvalidConfig(format!("unknown preset '{other}'"))),
        })
    }

    /// Resolves one preset entry into a validated inequality spec. The
    /// `bmo_lemmas` bundle has its own runner and only gets its references
    /// checked here.
    pub fn build_spec(&self, preset: &PresetSpec) -> Result<InequalitySpec> {
        let tag = Self::preset_tag(&preset.preset)?;
        if tag == PresetTag::BmoLemmas {
            return Err(Error::InvalidConfig(
                "bmo_lemmas resolves through its own runner".into(),
            ));
        }
        let kernel = self.build_kernel()?;
        let m = kernel.arity;
        let exponents = preset.params.exponents.clone().unwrap_or_else(|| vec![2.0; m]);
        let weight_ids = preset
            .params
            .weights
            .clone()
            .unwrap_or_else(|| self.weights.iter().map(|w| w.id.clone()).collect());
        if weight_ids.len() != m {
            return Err(Error::InvalidConfig(format!(
                "preset '{}' needs {m} weights, got {}",
                preset.preset,
                weight_ids.len()
            )));
        }
        let weights = weight_ids
            .iter()
            .map(|id| self.weight(id))
            .collect::<Result<Vec<_>>>()?;
        let symbols = match &preset.params.symbols {
            Some(ids) => ids
                .iter()
                .map(|id| self.bmo_symbol(id))
                .collect::<Result<Vec<_>>>()?,
            None => vec![BmoSymbol::LogAbs { scale: 1.0 }; m],
        };
        let kernel_spec = self.kernel.as_ref().expect("kernel built above");
        let spec = InequalitySpec {
            tag,
            params: PresetParams {
                exponents,
                kappa: preset.params.kappa.unwrap_or(0.5),
                weights,
                kernel,
                trunc_eps_over_h: kernel_spec.trunc_eps_over_h.unwrap_or(1.0),
                symbols,
                lambda_cap: preset.params.lambda_cap.unwrap_or(24),
                audit: false,
            },
            negative_control: preset.negative_control,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Validates everything that can fail before compute.
    pub fn resolve_all(&self) -> Result<()> {
        let _ = self.build_grid()?;
        self.theta().validate()?;
        for w in &self.weights {
            let _ = self.build_weight(w)?;
        }
        for p in &self.presets {
            if Self::preset_tag(&p.preset)? == PresetTag::BmoLemmas {
                for id in p.params.weights.as_deref().unwrap_or(&[]) {
                    let _ = self.weight(id)?;
                }
                for id in p.params.symbols.as_deref().unwrap_or(&[]) {
                    let _ = self.bmo_symbol(id)?;
                }
                continue;
            }
            let _ = self.build_spec(p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config() -> &'static str {
        r#"{
            "grid": {"n": 1, "L": 1.0, "h": 0.03125},
            "family": {"stride": 16},
            "weights": [
                {"id": "one", "kind": "constant", "c": 1.0},
                {"id": "sqrt", "kind": "power", "terms": [{"a": [0.0], "alpha": 0.5}]},
                {"id": "eb", "kind": "exp_bmo", "eta": 0.25, "bmo": "b0"}
            ],
            "bmo": [{"id": "b0", "kind": "log_abs", "scale": 1.0}],
            "theta": {"kind": "power", "eps": 1.0},
            "kernel": {"kind": "homogeneous", "m": 2, "A": 1.0, "omega": {"harmonic": 2}},
            "corpus": {"seed": 7, "members": 6},
            "presets": [
                {"preset": "thm_2_1", "params": {"P": [2.0, 2.0], "kappa": 0.5, "weights": ["sqrt", "sqrt"]}}
            ]
        }"#
    }

    #[test]
    fn parses_and_resolves() {
        let cfg = RunConfig::from_json(sample_config()).unwrap();
        cfg.resolve_all().unwrap();
        let w = cfg.weight("sqrt").unwrap();
        assert_eq!(w.origin_power_exponent(), Some(0.5));
        let eb = cfg.weight("eb").unwrap();
        assert_eq!(eb.origin_power_exponent(), Some(0.25));
        let k = cfg.build_kernel().unwrap();
        assert_eq!(k.arity, 2);
        let spec = cfg.build_spec(&cfg.presets[0]).unwrap();
        assert_eq!(spec.tag, PresetTag::Thm21);
    }

    #[test]
    fn rejects_unknown_names() {
        let cfg = RunConfig::from_json(sample_config()).unwrap();
        assert!(cfg.weight("nope").is_err());
        let mut bad = cfg.clone();
        bad.presets[0].preset = "thm_9_9".into();
        assert!(bad.resolve_all().is_err());
        let mut bad = cfg.clone();
        bad.presets[0].params.kappa = Some(1.5);
        assert!(bad.resolve_all().is_err());
        let mut bad = cfg;
        bad.grid.h = 0.3;
        assert!(bad.resolve_all().is_err());
    }
}
