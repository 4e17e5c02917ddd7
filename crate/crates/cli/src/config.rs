use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use appell_core::measures::{ComponentMeasure, ProductMeasure};
use appell_core::operators::BlackboxOptions;
use appell_core::{AppellSystem, HilbertScale};
use serde::{Deserialize, Serialize};

/// A `(p, q)` pair at which norms are reported.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub p: i32,
    pub q: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub biorthogonality: f64,
    pub quadrature: f64,
    pub hermite: f64,
    pub e_norm: f64,
    pub rho_pairing: f64,
    pub c_transform: f64,
    pub coincidence: f64,
    pub symbol: f64,
    pub round_trip_exact: f64,
    pub round_trip_blackbox: f64,
    pub d_operator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            biorthogonality: 1e-10,
            quadrature: 1e-8,
            hermite: 1e-12,
            e_norm: 1e-10,
            rho_pairing: 1e-13,
            c_transform: 1e-8,
            coincidence: 1e-8,
            symbol: 1e-11,
            round_trip_exact: 1e-15,
            round_trip_blackbox: 1e-6,
            d_operator: 1e-11,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let all = [
            ("biorthogonality", self.biorthogonality),
            ("quadrature", self.quadrature),
            ("hermite", self.hermite),
            ("e_norm", self.e_norm),
            ("rho_pairing", self.rho_pairing),
            ("c_transform", self.c_transform),
            ("coincidence", self.coincidence),
            ("symbol", self.symbol),
            ("round_trip_exact", self.round_trip_exact),
            ("round_trip_blackbox", self.round_trip_blackbox),
            ("d_operator", self.d_operator),
        ];
        for (name, v) in all {
            if !(v > 0.0) {
                bail!("tolerance {name} must be positive, got {v}");
            }
        }
        Ok(())
    }
}

/// Points for the verification suites, as real coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub xi: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub seed: u64,
    pub samples: usize,
    /// Highest degree for the black-box round trip.
    pub blackbox_degree: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            xi: Vec::new(),
            eta: Vec::new(),
            seed: 1,
            samples: 5,
            blackbox_degree: 3,
        }
    }
}

/// Operator whose symbol is evaluated by `appell symbol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSource {
    /// `⟨P_{n,in} | w⟩ ↦ ⟨P_{n,out} | w⟩`.
    MeasureChange,
    Zero,
    /// Only `f_{0,0}`.
    Constant { value: f64 },
    /// Kernel JSON, relative to the config file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolParams {
    pub operator: OperatorSource,
    /// `ξ = s·xi_direction` for each `s` in the grid.
    pub xi_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_direction: Option<Vec<f64>>,
    pub reconstruct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blackbox: Option<BlackboxOptions>,
}

impl Default for SymbolParams {
    fn default() -> Self {
        SymbolParams {
            operator: OperatorSource::MeasureChange,
            xi_grid: (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect(),
            eta_grid: (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect(),
            xi_direction: None,
            eta_direction: None,
            reconstruct: false,
            blackbox: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// One measure per coordinate for the input side.
    pub measures: Vec<ComponentMeasure>,
    /// Output side; defaults to `measures`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures_out: Option<Vec<ComponentMeasure>>,
    #[serde(default = "default_views")]
    pub views: Vec<View>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub symbol: SymbolParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_views() -> Vec<View> {
    vec![View { p: 0, q: 0 }, View { p: 1, q: 1 }]
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `N = 0` is accepted so that `gen` can list `P_0` alone.
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            bail!("d must be at least 1");
        }
        if self.measures.len() != self.d {
            bail!("expected {} input measures, got {}", self.d, self.measures.len());
        }
        if let Some(out) = &self.measures_out {
            if out.len() != self.d {
                bail!("expected {} output measures, got {}", self.d, out.len());
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.d {
                bail!("expected {} weights, got {}", self.d, w.len());
            }
        }
        for pts in [&self.verify.xi, &self.verify.eta] {
            if let Some(bad) = pts.iter().find(|p| p.len() != self.d) {
                bail!("verification point {bad:?} does not have {} coordinates", self.d);
            }
        }
        self.tolerances.validate()
    }

    pub fn scale(&self) -> Result<HilbertScale> {
        Ok(match &self.weights {
            Some(w) => HilbertScale::new(w.clone())?,
            None => HilbertScale::default_for(self.d),
        })
    }

    pub fn system_in(&self) -> Result<Arc<AppellSystem>> {
        let m = ProductMeasure::new(self.measures.clone())?;
        Ok(AppellSystem::build(m, self.order, self.scale()?)?)
    }

    pub fn system_out(&self) -> Result<Arc<AppellSystem>> {
        match &self.measures_out {
            None => self.system_in(),
            Some(comps) => {
                let m = ProductMeasure::new(comps.clone())?;
                Ok(AppellSystem::build(m, self.order, self.scale()?)?)
            }
        }
    }
}
