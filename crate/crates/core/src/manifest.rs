//! Run manifests: one TOML document per invocation naming the subcommand,
//! the domain, the seed, and the subcommand's parameters.
//!
//! ```toml
//! format_version = "1"
//! subcommand = "verify-cordoba"
//! seed = 7
//!
//! [domain]
//! lengths = [3.141592653589793, 3.141592653589793]
//! modes = 8
//! nodes = 16
//!
//! [verify-cordoba]
//! samples = 50
//! ```
//!
//! Every table rejects unknown keys. Only the table named by `subcommand`
//! may appear; omitted tables and keys take their documented defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, Schedule};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    VerifyCordoba,
    VerifyLowerBound,
    ProbeHeatBounds,
    ProbeGradBounds,
    HalfspaceSuite,
    ProbeV0,
    CommutatorSuite,
    RunLinear,
    RunSqg,
    FracOracle,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Subcommand::VerifyCordoba,
        Subcommand::VerifyLowerBound,
        Subcommand::ProbeHeatBounds,
        Subcommand::ProbeGradBounds,
        Subcommand::HalfspaceSuite,
        Subcommand::ProbeV0,
        Subcommand::CommutatorSuite,
        Subcommand::RunLinear,
        Subcommand::RunSqg,
        Subcommand::FracOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::VerifyCordoba => "verify-cordoba",
            Subcommand::VerifyLowerBound => "verify-lower-bound",
            Subcommand::ProbeHeatBounds => "probe-heat-bounds",
            Subcommand::ProbeGradBounds => "probe-grad-bounds",
            Subcommand::HalfspaceSuite => "halfspace-suite",
            Subcommand::ProbeV0 => "probe-v0",
            Subcommand::CommutatorSuite => "commutator-suite",
            Subcommand::RunLinear => "run-linear",
            Subcommand::RunSqg => "run-sqg",
            Subcommand::FracOracle => "frac-oracle",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Manifest(format!("unknown subcommand `{s}`")))
    }
}

/// Uniform mode cutoff and grid size on every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainParams {
    pub lengths: Vec<f64>,
    pub modes: usize,
    pub nodes: usize,
}

impl DomainParams {
    pub fn square(modes: usize, nodes: usize) -> Self {
        DomainParams { lengths: vec![std::f64::consts::PI; 2], modes, nodes }
    }

    pub fn interval(modes: usize, nodes: usize) -> Self {
        DomainParams { lengths: vec![std::f64::consts::PI], modes, nodes }
    }

    pub fn with_resolution(&self, modes: usize, nodes: usize) -> Self {
        DomainParams { lengths: self.lengths.clone(), modes, nodes }
    }

    pub fn build(&self) -> Result<DomainSpec> {
        let dim = self.lengths.len();
        DomainSpec::new(&self.lengths, &vec![self.modes; dim], &vec![self.nodes; dim])
    }
}

/// `[verify-cordoba]`: pointwise convexity inequality on random fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CordobaParams {
    pub samples: usize,
    pub s_list: Vec<f64>,
    /// Even powers `p` of `Φ(r) = r^p`; `2` is read as `r²/2`.
    pub powers: Vec<u32>,
    pub tolerance: f64,
    pub gradient_tolerance: f64,
}

impl Default for CordobaParams {
    fn default() -> Self {
        CordobaParams {
            samples: 50,
            s_list: vec![0.5, 1.0, 1.5, 2.0],
            powers: vec![2, 4],
            tolerance: 1e-8,
            gradient_tolerance: 1e-6,
        }
    }
}

/// `[verify-lower-bound]`: nonlinear lower bound and the scaling of its proof.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LowerBoundParams {
    pub samples: usize,
    pub alphas: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub nodes_list: Vec<usize>,
    pub axis: usize,
    pub drift_tolerance: f64,
    /// `α` values of the proof-scaling sweep.
    pub trace_alphas: Vec<f64>,
    pub trace_slope_tolerance: f64,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        LowerBoundParams {
            samples: 20,
            alphas: vec![0.25, 0.5],
            c_grid: vec![0.5, 1.0, 2.0, 4.0],
            nodes_list: vec![64, 128],
            axis: 0,
            drift_tolerance: 0.2,
            trace_alphas: vec![0.25, 0.5, 0.75],
            trace_slope_tolerance: 0.05,
        }
    }
}

/// `[probe-heat-bounds]`: Gaussian two-sided bounds and the boundary floor of `e^{tΔ}1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatBoundParams {
    pub times: usize,
    pub points: usize,
    pub refinement_tolerance: f64,
}

impl Default for HeatBoundParams {
    fn default() -> Self {
        HeatBoundParams { times: 8, points: 11, refinement_tolerance: 0.1 }
    }
}

/// `[probe-grad-bounds]`: gradient bounds of the heat kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradBoundParams {
    pub times: usize,
    pub t_start: f64,
    pub stride: usize,
}

impl Default for GradBoundParams {
    fn default() -> Self {
        GradBoundParams { times: 8, t_start: 0.01, stride: 8 }
    }
}

/// `[halfspace-suite]`: closed-form half-space kernel identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HalfspaceParams {
    pub xd: Vec<f64>,
    pub t: Vec<f64>,
    pub tolerance: f64,
    pub kernel_tolerance: f64,
}

impl Default for HalfspaceParams {
    fn default() -> Self {
        HalfspaceParams {
            xd: vec![0.5, 1.0, 2.0, 4.0],
            t: vec![0.1, 1.0, 10.0],
            tolerance: 1e-9,
            kernel_tolerance: 1e-6,
        }
    }
}

/// `[probe-v0]`: trace-space norms and the Dirichlet-to-Neumann identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct V0Params {
    pub samples: usize,
    pub h: f64,
    pub halving_tolerance: f64,
}

impl Default for V0Params {
    fn default() -> Self {
        V0Params { samples: 10, h: 1e-3, halving_tolerance: 0.1 }
    }
}

/// `[commutator-suite]`: commutator ratios under grid refinement (`M = N / modes_divisor`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommutatorParams {
    pub samples: usize,
    pub nodes_list: Vec<usize>,
    pub modes_divisor: usize,
    /// Sample coefficients have variance `λ^{-2 decay}`.
    pub decay: f64,
    pub multiplier_modes: usize,
    pub drift_tolerance: f64,
}

impl Default for CommutatorParams {
    fn default() -> Self {
        CommutatorParams {
            samples: 30,
            nodes_list: vec![64, 128, 256],
            modes_divisor: 4,
            decay: 2.5,
            multiplier_modes: 4,
            drift_tolerance: 0.2,
        }
    }
}

/// How initial data is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// A single normalized eigenmode.
    Mode { index: Vec<usize> },
    /// Seeded random fields, scaled by `amplitude`.
    Random { amplitude: f64 },
}

/// `[run-linear]`: drift-diffusion with a prescribed random velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearParams {
    pub evolution: EvolutionConfig,
    pub initial: InitialData,
    /// Number of random runs (seeded initial data and velocity).
    pub runs: usize,
    /// Stream-function amplitude; `0` runs pure fractional diffusion.
    pub velocity_amplitude: f64,
    pub schedule: Schedule,
    pub lp_tolerance: f64,
    /// Also rerun at `dt / 2` and check that `Σ|r^n|` quarters.
    pub halving_check: bool,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams {
            evolution: EvolutionConfig { dt: 2e-3, t_end: 0.5, cadence: 10, ..EvolutionConfig::default() },
            initial: InitialData::Random { amplitude: 1.0 },
            runs: 10,
            velocity_amplitude: 1.0,
            schedule: Schedule::Static,
            lp_tolerance: 1e-8,
            halving_check: true,
        }
    }
}

/// `[run-sqg]`: critical SQG runs and the Galerkin ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SqgParams {
    pub evolution: EvolutionConfig,
    pub initial: InitialData,
    pub runs: usize,
    /// Galerkin cutoffs of the convergence ladder; empty skips it.
    pub ladder: Vec<usize>,
}

impl Default for SqgParams {
    fn default() -> Self {
        SqgParams {
            evolution: EvolutionConfig { dt: 5e-3, t_end: 0.5, cadence: 10, ..EvolutionConfig::default() },
            initial: InitialData::Random { amplitude: 5.0 },
            runs: 3,
            ladder: vec![8, 16, 32],
        }
    }
}

/// `[frac-oracle]`: heat-semigroup quadrature of `Λ^{2α}` against the spectral definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FracOracleParams {
    pub samples: usize,
    pub alphas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for FracOracleParams {
    fn default() -> Self {
        FracOracleParams { samples: 20, alphas: vec![0.25, 0.5, 0.75], tolerance: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: String,
    pub subcommand: Subcommand,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Omitted: the subcommand's default domain(s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainParams>,
    #[serde(default, rename = "verify-cordoba", skip_serializing_if = "Option::is_none")]
    pub verify_cordoba: Option<CordobaParams>,
    #[serde(default, rename = "verify-lower-bound", skip_serializing_if = "Option::is_none")]
    pub verify_lower_bound: Option<LowerBoundParams>,
    #[serde(default, rename = "probe-heat-bounds", skip_serializing_if = "Option::is_none")]
    pub probe_heat_bounds: Option<HeatBoundParams>,
    #[serde(default, rename = "probe-grad-bounds", skip_serializing_if = "Option::is_none")]
    pub probe_grad_bounds: Option<GradBoundParams>,
    #[serde(default, rename = "halfspace-suite", skip_serializing_if = "Option::is_none")]
    pub halfspace_suite: Option<HalfspaceParams>,
    #[serde(default, rename = "probe-v0", skip_serializing_if = "Option::is_none")]
    pub probe_v0: Option<V0Params>,
    #[serde(default, rename = "commutator-suite", skip_serializing_if = "Option::is_none")]
    pub commutator_suite: Option<CommutatorParams>,
    #[serde(default, rename = "run-linear", skip_serializing_if = "Option::is_none")]
    pub run_linear: Option<LinearParams>,
    #[serde(default, rename = "run-sqg", skip_serializing_if = "Option::is_none")]
    pub run_sqg: Option<SqgParams>,
    #[serde(default, rename = "frac-oracle", skip_serializing_if = "Option::is_none")]
    pub frac_oracle: Option<FracOracleParams>,
}

impl RunManifest {
    /// Manifest with every parameter at its default.
    pub fn new(subcommand: Subcommand) -> Self {
        RunManifest {
            format_version: FORMAT_VERSION.to_string(),
            subcommand,
            seed: 0,
            output_dir: None,
            domain: None,
            verify_cordoba: None,
            verify_lower_bound: None,
            probe_heat_bounds: None,
            probe_grad_bounds: None,
            halfspace_suite: None,
            probe_v0: None,
            commutator_suite: None,
            run_linear: None,
            run_sqg: None,
            frac_oracle: None,
        }
    }

    /// Fills the subcommand's parameter table with defaults where absent, so
    /// that the echoed manifest records every value used.
    pub fn populated(mut self) -> Self {
        match self.subcommand {
            Subcommand::VerifyCordoba => {
                self.verify_cordoba.get_or_insert_with(Default::default);
            }
            Subcommand::VerifyLowerBound => {
                self.verify_lower_bound.get_or_insert_with(Default::default);
            }
            Subcommand::ProbeHeatBounds => {
                self.probe_heat_bounds.get_or_insert_with(Default::default);
            }
            Subcommand::ProbeGradBounds => {
                self.probe_grad_bounds.get_or_insert_with(Default::default);
            }
            Subcommand::HalfspaceSuite => {
                self.halfspace_suite.get_or_insert_with(Default::default);
            }
            Subcommand::ProbeV0 => {
                self.probe_v0.get_or_insert_with(Default::default);
            }
            Subcommand::CommutatorSuite => {
                self.commutator_suite.get_or_insert_with(Default::default);
            }
            Subcommand::RunLinear => {
                self.run_linear.get_or_insert_with(Default::default);
            }
            Subcommand::RunSqg => {
                self.run_sqg.get_or_insert_with(Default::default);
            }
            Subcommand::FracOracle => {
                self.frac_oracle.get_or_insert_with(Default::default);
            }
        }
        self
    }

    fn present_tables(&self) -> Vec<Subcommand> {
        let flags = [
            self.verify_cordoba.is_some(),
            self.verify_lower_bound.is_some(),
            self.probe_heat_bounds.is_some(),
            self.probe_grad_bounds.is_some(),
            self.halfspace_suite.is_some(),
            self.probe_v0.is_some(),
            self.commutator_suite.is_some(),
            self.run_linear.is_some(),
            self.run_sqg.is_some(),
            self.frac_oracle.is_some(),
        ];
        Subcommand::ALL.into_iter().zip(flags).filter(|(_, f)| *f).map(|(c, _)| c).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Manifest(format!(
                "format_version `{}` is not supported (expected `{FORMAT_VERSION}`)",
                self.format_version
            )));
        }
        let stray: Vec<String> =
            self.present_tables().into_iter().filter(|c| *c != self.subcommand).map(|c| format!("[{c}]")).collect();
        if !stray.is_empty() {
            return Err(Error::Manifest(format!(
                "tables {} do not belong to subcommand `{}`",
                stray.join(", "),
                self.subcommand
            )));
        }
        if let Some(d) = &self.domain {
            d.build()?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: RunManifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Manifest(e.to_string()))
    }
}

/// Reads and validates a manifest file.
pub fn parse_manifest(path: &Path) -> Result<RunManifest> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Manifest(format!("cannot read {}: {e}", path.display())))?;
    RunManifest::from_toml(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest_takes_defaults() {
        let m = RunManifest::from_toml("format_version = \"1\"\nsubcommand = \"verify-cordoba\"\n").unwrap();
        assert_eq!(m.seed, 0);
        assert!(m.domain.is_none());
        let full = m.populated();
        assert_eq!(full.verify_cordoba, Some(CordobaParams::default()));
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "format_version = \"1\"\nsubcommand = \"verify-lower-bound\"\n[verify-lower-bound]\nalpah = 0.5\n";
        let err = RunManifest::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("alpah"), "{err}");
        let top = RunManifest::from_toml("format_version = \"1\"\nsubcommand = \"run-sqg\"\nsede = 3\n");
        assert!(top.unwrap_err().to_string().contains("sede"));
    }

    #[test]
    fn type_and_presence_errors() {
        assert!(RunManifest::from_toml("subcommand = \"run-sqg\"\n")
            .unwrap_err()
            .to_string()
            .contains("format_version"));
        assert!(RunManifest::from_toml("format_version = \"1\"\nsubcommand = \"run-sqg\"\nseed = \"x\"\n").is_err());
        assert!(RunManifest::from_toml("format_version = \"2\"\nsubcommand = \"run-sqg\"\n").is_err());
        assert!(RunManifest::from_toml("format_version = \"1\"\nsubcommand = \"run-fast\"\n").is_err());
        let stray = "format_version = \"1\"\nsubcommand = \"run-sqg\"\n[run-linear]\nruns = 2\n";
        assert!(RunManifest::from_toml(stray).unwrap_err().to_string().contains("[run-linear]"));
        let bad_domain =
            "format_version = \"1\"\nsubcommand = \"run-sqg\"\n[domain]\nlengths = [1.0]\nmodes = 8\nnodes = 8\n";
        assert!(RunManifest::from_toml(bad_domain).is_err());
    }

    #[test]
    fn nested_evolution_table() {
        let text = "format_version = \"1\"\nsubcommand = \"run-linear\"\n[run-linear]\nruns = 2\n\
                    [run-linear.evolution]\ndt = 0.01\nt_end = 0.1\n[run-linear.initial]\nkind = \"mode\"\nindex = [1, 1]\n";
        let m = RunManifest::from_toml(text).unwrap();
        let p = m.run_linear.unwrap();
        assert_eq!(p.evolution.dt, 0.01);
        assert_eq!(p.evolution.cfl_safety, 0.5);
        assert_eq!(p.initial, InitialData::Mode { index: vec![1, 1] });
    }

    #[test]
    fn every_populated_default_round_trips() {
        for c in Subcommand::ALL {
            let mut m = RunManifest::new(c).populated();
            m.seed = 12345;
            m.domain = Some(DomainParams::square(8, 16));
            let text = m.to_toml().unwrap();
            assert_eq!(RunManifest::from_toml(&text).unwrap(), m, "{text}");
            assert_eq!(c.name().parse::<Subcommand>().unwrap(), c);
        }
    }
}
