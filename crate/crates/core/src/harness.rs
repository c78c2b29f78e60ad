//! Batch execution of a [`RunManifest`]: each subcommand produces a results
//! table (`results.csv`), one JSON-lines assertion record per checked
//! inequality (`summary.jsonl`) and the manifest with every default filled in
//! (`manifest.toml`). Outputs depend only on the manifest.
//!
//! Summary records carry an `anchor` naming the inequality or identity they
//! check, so results can be cross-referenced with the literature.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::calculus::{apply_lambda_s, frac_heat_quadrature, HeatQuadratureSpec};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::evolution::{galerkin_ladder, run, Drive, EvolutionConfig, VelocityField};
use crate::extension::{
    commutator_advection, commutator_mult, dtn_check, extension_decay_norm, summarize_ratios, v0_norm,
};
use crate::field::SpectralField;
use crate::inequality::{
    cordoba_defect, cordoba_scale, grad_ratio_probe, gradient_l1_constant, grid_pairs, halfspace_kernel_suite,
    heat_bound_probe, lower_bound_probe, proof_trace_sweep, theta_floor_probe, truncation_time, ConvexFunction,
    EvenPower, HalfSquare, ProofTraceConfig,
};
use crate::manifest::{
    CommutatorParams, CordobaParams, DomainParams, FracOracleParams, GradBoundParams, HalfspaceParams, HeatBoundParams,
    InitialData, LinearParams, LowerBoundParams, RunManifest, SqgParams, Subcommand, V0Params,
};
use crate::random::FieldSampler;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.jsonl";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const STATE_DUMP_FILE: &str = "unstable_state.json";

/// Inequalities and identities referenced by summary records.
pub mod anchor {
    pub const CORDOBA: &str = "Prop-2.1";
    pub const LOWER_BOUND: &str = "Thm-3.1";
    pub const HEAT_REPRESENTATION: &str = "Eq-rep";
    pub const HEAT_BOUNDS: &str = "Eq-hb";
    pub const GRAD_BOUNDS: &str = "Eq-grby";
    pub const GRAD_L1: &str = "Eq-grup";
    pub const THETA_FLOOR: &str = "Eq-thetalow";
    pub const I_LOWER: &str = "Eq-ilow";
    pub const J_UPPER: &str = "Eq-jup";
    pub const HALFSPACE_GRADIENT: &str = "Eq-hone";
    pub const HALFSPACE_KERNEL: &str = "Eq-kernelone";
    pub const V0_NORM: &str = "Eq-vzero";
    pub const DTN: &str = "Eq-lambdavf";
    pub const EXTENSION_DECAY: &str = "Eq-expb";
    pub const COMMUTATOR_MULTIPLIER: &str = "Thm-4.2";
    pub const COMMUTATOR_TRANSPORT: &str = "Thm-4.3";
    pub const ENERGY: &str = "Eq-l2";
    pub const DISSIPATION: &str = "Eq-l2b";
    pub const LP: &str = "Eq-lp";
    pub const H2_ENVELOPE: &str = "Eq-liv2b";
    pub const SQG: &str = "Thm-6.1";
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub subcommand: &'static str,
    pub check: String,
    pub anchor: &'static str,
    pub passed: bool,
    pub measured: Value,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Column by header name.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// The manifest with all defaults populated.
    pub manifest: RunManifest,
    pub table: Table,
    pub records: Vec<SummaryRecord>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn summary_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(RESULTS_FILE), self.table.to_csv()?)?;
        fs::write(dir.join(SUMMARY_FILE), self.summary_jsonl()?)?;
        fs::write(dir.join(MANIFEST_FILE), self.manifest.to_toml()?)?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn point(p: &[f64]) -> String {
    p.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";")
}

struct Recorder {
    subcommand: &'static str,
    table: Table,
    records: Vec<SummaryRecord>,
}

impl Recorder {
    fn new(subcommand: Subcommand, header: &[&str]) -> Self {
        Recorder { subcommand: subcommand.name(), table: Table::new(header), records: Vec::new() }
    }

    fn row(&mut self, row: Vec<String>) {
        self.table.push(row);
    }

    fn check(&mut self, check: impl Into<String>, anchor: &'static str, passed: bool, measured: Value) {
        self.records.push(SummaryRecord { subcommand: self.subcommand, check: check.into(), anchor, passed, measured });
    }
}

/// Runs the manifest's subcommand without touching the file system.
pub fn execute(manifest: &RunManifest) -> Result<Outcome> {
    manifest.validate()?;
    let manifest = manifest.clone().populated();
    let sampler = FieldSampler::new(manifest.seed);
    let domain = manifest.domain.as_ref();
    let rec = match manifest.subcommand {
        Subcommand::VerifyCordoba => verify_cordoba(domain, manifest.verify_cordoba.as_ref().unwrap(), &sampler),
        Subcommand::VerifyLowerBound => {
            verify_lower_bound(domain, manifest.verify_lower_bound.as_ref().unwrap(), &sampler)
        }
        Subcommand::ProbeHeatBounds => probe_heat_bounds(domain, manifest.probe_heat_bounds.as_ref().unwrap()),
        Subcommand::ProbeGradBounds => probe_grad_bounds(domain, manifest.probe_grad_bounds.as_ref().unwrap()),
        Subcommand::HalfspaceSuite => halfspace_suite(manifest.halfspace_suite.as_ref().unwrap()),
        Subcommand::ProbeV0 => probe_v0(domain, manifest.probe_v0.as_ref().unwrap(), &sampler),
        Subcommand::CommutatorSuite => commutator_suite(domain, manifest.commutator_suite.as_ref().unwrap(), &sampler),
        Subcommand::RunLinear => run_linear(domain, manifest.run_linear.as_ref().unwrap(), &sampler),
        Subcommand::RunSqg => run_sqg(domain, manifest.run_sqg.as_ref().unwrap(), &sampler),
        Subcommand::FracOracle => frac_oracle(domain, manifest.frac_oracle.as_ref().unwrap(), &sampler),
    }?;
    Ok(Outcome { manifest, table: rec.table, records: rec.records })
}

/// Executes and writes the artifacts into `dir`. An instability writes the
/// offending state to [`STATE_DUMP_FILE`] before the error is returned.
pub fn dispatch(manifest: &RunManifest, dir: &Path) -> Result<Outcome> {
    match execute(manifest) {
        Ok(outcome) => {
            outcome.write(dir)?;
            Ok(outcome)
        }
        Err(Error::Unstable { time, before, after, state }) => {
            fs::create_dir_all(dir)?;
            let dump = json!({ "time": time, "energy_before": before, "energy_after": after, "coefficients": state });
            fs::write(dir.join(STATE_DUMP_FILE), serde_json::to_string_pretty(&dump)?)?;
            fs::write(dir.join(MANIFEST_FILE), manifest.clone().populated().to_toml()?)?;
            Err(Error::Unstable { time, before, after, state })
        }
        Err(e) => Err(e),
    }
}

fn domain_or(domain: Option<&DomainParams>, default: DomainParams) -> Result<DomainSpec> {
    domain.cloned().unwrap_or(default).build()
}

fn convex(power: u32) -> Result<Box<dyn ConvexFunction>> {
    Ok(if power == 2 { Box::new(HalfSquare) } else { Box::new(EvenPower::new(power)?) })
}

/// Columns: `phi, s, sample, min_defect, scale, argmin, violations`.
fn verify_cordoba(domain: Option<&DomainParams>, p: &CordobaParams, sampler: &FieldSampler) -> Result<Recorder> {
    let d = domain_or(domain, DomainParams::square(8, 32))?;
    let mut rec = Recorder::new(
        Subcommand::VerifyCordoba,
        &["phi", "s", "sample", "min_defect", "scale", "argmin", "violations"],
    );
    let fields: Vec<SpectralField> = (0..p.samples as u64).map(|k| sampler.smooth_field(d, k)).collect();
    for &power in &p.powers {
        let phi = convex(power)?;
        for &s in &p.s_list {
            let mut worst = f64::INFINITY;
            let mut violations = 0;
            for (k, f) in fields.iter().enumerate() {
                let defect = cordoba_defect(f, phi.as_ref(), s)?;
                let scale = cordoba_scale(f, phi.as_ref(), s);
                let (min, at) = defect.argmin();
                let bad = defect.values().iter().filter(|&&v| v < -p.tolerance * scale).count();
                violations += bad;
                if scale > 0.0 {
                    worst = worst.min(min / scale);
                }
                rec.row(vec![
                    phi.name(),
                    num(s),
                    k.to_string(),
                    num(min),
                    num(scale),
                    point(&d.grid_point(at)),
                    bad.to_string(),
                ]);
            }
            rec.check(
                format!("min_defect phi={} s={s}", phi.name()),
                anchor::CORDOBA,
                violations == 0,
                json!({ "min_normalized_defect": worst, "violations": violations, "tolerance": p.tolerance }),
            );
        }
    }
    if p.powers.contains(&2) && p.s_list.contains(&2.0) {
        let mut worst = 0.0f64;
        for f in &fields {
            let defect = cordoba_defect(f, &HalfSquare, 2.0)?;
            let grad = f.gradient_grid();
            let mut g2 = grad[0].map(|v| v * v);
            for g in &grad[1..] {
                g2 = g2.zip_with(g, |a, b| a + b * b)?;
            }
            let scale = g2.max_abs();
            if scale > 0.0 {
                let err = defect.zip_with(&g2, |a, b| a - b)?.max_abs() / scale;
                worst = worst.max(err);
            }
        }
        rec.check(
            "s=2 half-square defect equals |grad f|^2",
            anchor::CORDOBA,
            worst <= p.gradient_tolerance,
            json!({ "max_relative_error": worst, "tolerance": p.gradient_tolerance }),
        );
    }
    Ok(rec)
}

/// Columns: `section, alpha, sample, nodes, c, c_hat, support, tau, i, j_surrogate`.
fn verify_lower_bound(domain: Option<&DomainParams>, p: &LowerBoundParams, sampler: &FieldSampler) -> Result<Recorder> {
    let base = domain.cloned().unwrap_or(DomainParams::square(16, 64));
    if p.nodes_list.is_empty() {
        return Err(Error::param("nodes_list", "need at least one grid size"));
    }
    let domains: Vec<DomainSpec> =
        p.nodes_list.iter().map(|&n| base.with_resolution(base.modes, n).build()).collect::<Result<_>>()?;
    let mut rec = Recorder::new(
        Subcommand::VerifyLowerBound,
        &["section", "alpha", "sample", "nodes", "c", "c_hat", "support", "tau", "i", "j_surrogate"],
    );
    for &alpha in &p.alphas {
        let mut failures = 0;
        let mut worst_drift = 0.0f64;
        let mut min_c_hat = f64::INFINITY;
        for k in 0..p.samples as u64 {
            let fits: Vec<_> = domains
                .iter()
                .map(|d| lower_bound_probe(&sampler.smooth_field(*d, k), p.axis, alpha, &p.c_grid))
                .collect::<Result<_>>()?;
            for (d, per_c) in domains.iter().zip(&fits) {
                for fit in per_c {
                    rec.row(vec![
                        "lower-bound".into(),
                        num(alpha),
                        k.to_string(),
                        d.nodes()[0].to_string(),
                        num(fit.c),
                        opt(fit.c_hat),
                        fit.support.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
            }
            // best cutoff constant: positive at every resolution, smallest drift
            let best = (0..p.c_grid.len())
                .filter_map(|j| {
                    let vals: Option<Vec<f64>> = fits.iter().map(|f| f[j].c_hat.filter(|c| *c > 0.0)).collect();
                    vals.map(|v| {
                        let hi = v.iter().cloned().fold(0.0, f64::max);
                        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                        ((hi - lo) / hi, lo)
                    })
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match best {
                Some((drift, lo)) if drift <= p.drift_tolerance => {
                    worst_drift = worst_drift.max(drift);
                    min_c_hat = min_c_hat.min(lo);
                }
                _ => failures += 1,
            }
        }
        rec.check(
            format!("c_hat > 0 stable under refinement alpha={alpha}"),
            anchor::LOWER_BOUND,
            failures == 0,
            json!({
                "failed_samples": failures,
                "samples": p.samples,
                "max_drift": worst_drift,
                "min_c_hat": min_c_hat,
                "drift_tolerance": p.drift_tolerance,
            }),
        );
    }
    // proof scaling at the domain centre, one decade of τ well inside the
    // short-time regime
    let d = domains[0];
    let x: Vec<f64> = d.lengths().iter().map(|l| l / 2.0).collect();
    let horizon = 1.0 / d.lambda_1();
    let config = ProofTraceConfig { horizon, c1: 1.0 };
    let taus: Vec<f64> = (0..6).map(|i| horizon * 1e-6 * 10f64.powf(i as f64 / 5.0)).collect();
    for &alpha in &p.trace_alphas {
        let fit = proof_trace_sweep(&d, 1.0, &x, 1.0, alpha, &taus, &config)?;
        for t in &fit.traces {
            rec.row(vec![
                "proof-trace".into(),
                num(alpha),
                String::new(),
                d.nodes()[0].to_string(),
                String::new(),
                String::new(),
                String::new(),
                num(t.tau),
                num(t.i),
                num(t.j_surrogate),
            ]);
        }
        rec.check(
            format!("slope of I(tau) alpha={alpha}"),
            anchor::I_LOWER,
            (fit.slope_i + alpha).abs() <= p.trace_slope_tolerance,
            json!({ "slope": fit.slope_i, "expected": -alpha, "c2_hat": fit.c2_hat, "tolerance": p.trace_slope_tolerance }),
        );
        rec.check(
            format!("slope of J(tau) alpha={alpha}"),
            anchor::J_UPPER,
            (fit.slope_j + 0.5 + alpha).abs() <= p.trace_slope_tolerance,
            json!({ "slope": fit.slope_j, "expected": -0.5 - alpha, "c6_hat": fit.c6_hat, "tolerance": p.trace_slope_tolerance }),
        );
    }
    Ok(rec)
}

fn geometric(from: f64, to: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![from];
    }
    (0..count).map(|i| from * (to / from).powf(i as f64 / (count - 1) as f64)).collect()
}

fn interior_pairs(d: &DomainSpec, per_axis: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let axis_points: Vec<Vec<f64>> =
        d.lengths().iter().map(|&l| (1..=per_axis).map(|i| i as f64 * l / (per_axis + 1) as f64).collect()).collect();
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axis_points {
        points = points.iter().flat_map(|p| axis.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect();
    }
    points.iter().flat_map(|x| points.iter().map(move |y| (x.clone(), y.clone()))).collect()
}

/// Columns: `section, nodes, width, constant, samples, rejected`.
fn probe_heat_bounds(domain: Option<&DomainParams>, p: &HeatBoundParams) -> Result<Recorder> {
    let base = domain.cloned().unwrap_or(DomainParams::interval(32, 64));
    let coarse = base.build()?;
    let fine = base.with_resolution(2 * base.modes, 2 * base.nodes).build()?;
    let t_probe = 1.0 / coarse.lambda_1();
    let t_min = truncation_time(&coarse);
    let times = geometric(t_min, t_probe, p.times);
    let pairs = interior_pairs(&coarse, p.points);
    let mut rec =
        Recorder::new(Subcommand::ProbeHeatBounds, &["section", "nodes", "width", "constant", "samples", "rejected"]);
    let reports = [heat_bound_probe(&coarse, &times, &pairs)?, heat_bound_probe(&fine, &times, &pairs)?];
    for (d, r) in [coarse, fine].iter().zip(&reports) {
        for (section, list) in [("upper", &r.upper), ("lower", &r.lower)] {
            for (w, c) in list.iter() {
                rec.row(vec![
                    section.into(),
                    d.nodes()[0].to_string(),
                    num(*w),
                    num(*c),
                    r.fit.samples.to_string(),
                    r.fit.rejected.to_string(),
                ]);
            }
        }
    }
    let (a, b) = (&reports[0].fit, &reports[1].fit);
    let finite = a.big_c_hat.is_some_and(f64::is_finite) && a.c_hat.is_some_and(|c| c > 0.0);
    rec.check(
        "two-sided Gaussian bound constants",
        anchor::HEAT_BOUNDS,
        finite && a.consistent(),
        json!({ "C": a.big_c_hat, "K": a.big_k_hat, "c": a.c_hat, "k": a.k_hat, "samples": a.samples, "rejected": a.rejected }),
    );
    let rel = |u: Option<f64>, v: Option<f64>| match (u, v) {
        (Some(u), Some(v)) if u != 0.0 => (u - v).abs() / u.abs(),
        _ => f64::INFINITY,
    };
    let drift = rel(a.big_c_hat, b.big_c_hat).max(rel(a.c_hat, b.c_hat));
    rec.check(
        "bound constants stable under refinement",
        anchor::HEAT_BOUNDS,
        drift <= p.refinement_tolerance,
        json!({ "drift": drift, "C_fine": b.big_c_hat, "c_fine": b.c_hat, "tolerance": p.refinement_tolerance }),
    );
    let floor_times = geometric(t_probe * 1e-4, t_probe, 20);
    let floor = theta_floor_probe(&coarse, &floor_times)?;
    rec.row(vec![
        "theta-floor".into(),
        coarse.nodes()[0].to_string(),
        String::new(),
        opt(floor.fit.c_hat),
        floor.fit.samples.to_string(),
        "0".into(),
    ]);
    rec.check(
        "heat flow of unity bounded below near the boundary",
        anchor::THETA_FLOOR,
        floor.fit.c_hat.is_some_and(|c| c > 0.0)
            && floor.theta_min >= 0.0
            && floor.theta_max <= 1.0 + 1e-12
            && floor.monotone,
        json!({ "c1": floor.fit.c_hat, "theta_min": floor.theta_min, "theta_max": floor.theta_max, "monotone": floor.monotone }),
    );
    Ok(rec)
}

/// Columns: `section, time, value, samples`.
fn probe_grad_bounds(domain: Option<&DomainParams>, p: &GradBoundParams) -> Result<Recorder> {
    let d = domain_or(domain, DomainParams::interval(64, 128))?;
    let t_probe = 1.0 / d.lambda_1();
    let times = geometric(p.t_start, t_probe, p.times);
    let pairs = grid_pairs(&d, p.stride);
    let r = grad_ratio_probe(&d, &times, &pairs)?;
    let mut rec = Recorder::new(Subcommand::ProbeGradBounds, &["section", "time", "value", "samples"]);
    rec.row(vec!["ratio-far".into(), String::new(), opt(r.far), r.far_count.to_string()]);
    rec.row(vec!["ratio-near".into(), String::new(), opt(r.near), r.near_count.to_string()]);
    rec.check(
        "|grad_y H| / H bounded on both branches",
        anchor::GRAD_BOUNDS,
        r.far.is_some_and(f64::is_finite) && r.near.is_some_and(f64::is_finite),
        json!({ "far": r.far, "near": r.near, "far_count": r.far_count, "near_count": r.near_count, "rejected": r.fit.rejected }),
    );
    let x: Vec<f64> = d.lengths().iter().map(|l| l / 2.0).collect();
    let mut c1 = 0.0f64;
    for &t in &times {
        let c = gradient_l1_constant(&d, &x, &[t])?;
        c1 = c1.max(c);
        rec.row(vec!["l1-constant".into(), num(t), num(c), "1".into()]);
    }
    rec.check(
        "sqrt(t) * int |grad_y H| dy bounded",
        anchor::GRAD_L1,
        c1.is_finite() && c1 > 0.0,
        json!({ "c1": c1, "x": x }),
    );
    Ok(rec)
}

/// Columns: `identity, xd, t, computed, exact, abs_error`.
fn halfspace_suite(p: &HalfspaceParams) -> Result<Recorder> {
    let r = halfspace_kernel_suite(&p.xd, &p.t)?;
    let mut rec = Recorder::new(Subcommand::HalfspaceSuite, &["identity", "xd", "t", "computed", "exact", "abs_error"]);
    let mut worst = [0.0f64; 2];
    for c in &r.checks {
        let err = (c.computed - c.exact).abs();
        let slot = usize::from(c.identity != "normal-integral");
        worst[slot] = worst[slot].max(err);
        rec.row(vec![c.identity.into(), num(c.xd), opt(c.t), num(c.computed), num(c.exact), num(err)]);
    }
    for (xd, k) in &r.kernel_constants {
        rec.row(vec![
            "kernel-constant".into(),
            num(*xd),
            String::new(),
            num(*k),
            num(r.kernel_constant_exact),
            num((k - r.kernel_constant_exact).abs()),
        ]);
    }
    rec.check(
        "normal integral of the reflected kernel",
        anchor::HALFSPACE_GRADIENT,
        worst[0] <= p.tolerance,
        json!({ "max_abs_error": worst[0], "tolerance": p.tolerance }),
    );
    rec.check(
        "time integral gives 4 / x_d^2",
        anchor::HALFSPACE_KERNEL,
        worst[1] <= p.tolerance,
        json!({ "max_abs_error": worst[1], "tolerance": p.tolerance }),
    );
    rec.check(
        "x_d^2 * int K dy is constant",
        anchor::HALFSPACE_KERNEL,
        r.kernel_spread <= p.kernel_tolerance,
        json!({ "spread": r.kernel_spread, "exact": r.kernel_constant_exact, "tolerance": p.kernel_tolerance }),
    );
    Ok(rec)
}

/// Columns: `sample, v0_norm, half_norm, ratio, dtn_residual, dtn_residual_half, halving_ratio,
/// exact_residual, decay_norm`.
fn probe_v0(domain: Option<&DomainParams>, p: &V0Params, sampler: &FieldSampler) -> Result<Recorder> {
    let d = domain_or(domain, DomainParams::square(8, 16))?;
    let mut rec = Recorder::new(
        Subcommand::ProbeV0,
        &[
            "sample",
            "v0_norm",
            "half_norm",
            "ratio",
            "dtn_residual",
            "dtn_residual_half",
            "halving_ratio",
            "exact_residual",
            "decay_norm",
        ],
    );
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut worst_halving = 0.0f64;
    let mut worst_exact = 0.0f64;
    let mut decay_ratio = 0.0f64;
    for k in 0..p.samples as u64 {
        let f = sampler.smooth_field(d, k);
        let v0 = v0_norm(&f);
        let half = f.sobolev_norm(0.5);
        let ratio = v0 / half;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        let a = dtn_check(&f, p.h)?;
        let b = dtn_check(&f, p.h / 2.0)?;
        let halving = a.residual / b.residual;
        worst_halving = worst_halving.max((halving - 2.0).abs() / 2.0);
        let exact = a.exact_residual / f.sobolev_norm(1.0);
        worst_exact = worst_exact.max(exact);
        let decay = extension_decay_norm(&f)?;
        decay_ratio = decay_ratio.max(decay / v0);
        rec.row(vec![
            k.to_string(),
            num(v0),
            num(half),
            num(ratio),
            num(a.residual),
            num(b.residual),
            num(halving),
            num(a.exact_residual),
            num(decay),
        ]);
    }
    rec.check(
        "trace norm equivalent to the D(Lambda^1/2) norm",
        anchor::V0_NORM,
        lo > 0.0 && hi.is_finite(),
        json!({ "min_ratio": lo, "max_ratio": hi }),
    );
    rec.check(
        "normal derivative of the extension is Lambda f",
        anchor::DTN,
        worst_exact <= 1e-12,
        json!({ "max_relative_residual": worst_exact }),
    );
    rec.check(
        "one-sided difference residual halves with h",
        anchor::DTN,
        worst_halving <= p.halving_tolerance,
        json!({ "max_relative_deviation": worst_halving, "tolerance": p.halving_tolerance }),
    );
    rec.check(
        "weighted extension norm bounded by the trace norm",
        anchor::EXTENSION_DECAY,
        decay_ratio.is_finite(),
        json!({ "max_ratio": decay_ratio }),
    );
    Ok(rec)
}

/// Columns: `kind, nodes, modes, sample, numerator, b_norm, denominator, ratio`.
fn commutator_suite(domain: Option<&DomainParams>, p: &CommutatorParams, sampler: &FieldSampler) -> Result<Recorder> {
    let base = domain.cloned().unwrap_or(DomainParams::square(16, 64));
    if p.modes_divisor < 2 {
        return Err(Error::param("modes_divisor", "grids need at least 2M nodes"));
    }
    let mut rec = Recorder::new(
        Subcommand::CommutatorSuite,
        &["kind", "nodes", "modes", "sample", "numerator", "b_norm", "denominator", "ratio"],
    );
    let mut sups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for &n in &p.nodes_list {
        let d = base.with_resolution(n / p.modes_divisor, n).build()?;
        let mut ratios: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for k in 0..p.samples as u64 {
            let f = sampler.field_with_decay(d, 2 * k, p.decay);
            let a = sampler.cosine_multiplier(d.lengths(), p.multiplier_modes, k);
            let psi = sampler.field_with_decay(d, 2 * k + 1, p.decay);
            let samples = [("multiplier", commutator_mult(&a, &f)?), ("transport", commutator_advection(&psi, &f)?)];
            for (slot, (kind, s)) in samples.into_iter().enumerate() {
                ratios[slot].push(s.ratio);
                rec.row(vec![
                    kind.into(),
                    n.to_string(),
                    d.modes()[0].to_string(),
                    k.to_string(),
                    num(s.numerator),
                    num(s.b_norm),
                    num(s.denominator),
                    num(s.ratio),
                ]);
            }
        }
        for slot in 0..2 {
            sups[slot].push(summarize_ratios(&ratios[slot]).max_ratio);
        }
    }
    for (slot, (kind, anchor)) in
        [("multiplier", anchor::COMMUTATOR_MULTIPLIER), ("transport", anchor::COMMUTATOR_TRANSPORT)]
            .into_iter()
            .enumerate()
    {
        let s = &sups[slot];
        let hi = s.iter().cloned().fold(0.0, f64::max);
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let drift = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        rec.check(
            format!("{kind} commutator ratio bounded under refinement"),
            anchor,
            s.iter().all(|v| v.is_finite()) && drift <= p.drift_tolerance,
            json!({ "suprema": s, "nodes": p.nodes_list, "drift": drift, "tolerance": p.drift_tolerance }),
        );
    }
    Ok(rec)
}

fn initial_field(initial: &InitialData, d: DomainSpec, sampler: &FieldSampler, sample: u64) -> Result<SpectralField> {
    match initial {
        InitialData::Mode { index } => SpectralField::mode(d, index),
        InitialData::Random { amplitude } => Ok(sampler.smooth_field(d, sample).scaled(*amplitude)),
    }
}

fn series_header(p_list: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = [
        "run",
        "time",
        "energy",
        "dissipation",
        "lambda2_sq",
        "residual",
        "cumulative_dissipation",
        "velocity_integral",
        "commutator",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(p_list.iter().map(|p| format!("lp_{p}")));
    h
}

fn push_series(rec: &mut Recorder, run_id: usize, s: &crate::evolution::DiagnosticsSeries) {
    for i in 0..s.times.len() {
        let mut row = vec![
            run_id.to_string(),
            num(s.times[i]),
            num(s.energy[i]),
            num(s.dissipation[i]),
            num(s.lambda2_sq[i]),
            num(s.residual[i]),
            num(s.cumulative_dissipation[i]),
            num(s.velocity_integral[i]),
            s.commutator.get(i).map(|c| num(*c)).unwrap_or_default(),
        ];
        row.extend(s.lp.iter().map(|l| num(l.values[i])));
        rec.row(row);
    }
}

fn energy_checks(rec: &mut Recorder, run_id: usize, s: &crate::evolution::DiagnosticsSeries) {
    let e0 = s.energy[0];
    let increasing = s.energy.windows(2).filter(|w| w[1] > w[0]).count();
    rec.check(
        format!("energy nonincreasing run={run_id}"),
        anchor::ENERGY,
        increasing == 0,
        json!({ "increases": increasing, "energy_start": e0, "energy_end": s.energy.last() }),
    );
    let total = s.cumulative_dissipation.last().copied().unwrap_or(0.0);
    rec.check(
        format!("cumulative dissipation bounded by initial energy run={run_id}"),
        anchor::DISSIPATION,
        total <= e0 * (1.0 + 1e-12),
        json!({ "cumulative_dissipation": total, "initial_energy": e0 }),
    );
}

fn run_config(config: &EvolutionConfig, d: &DomainSpec) -> Result<()> {
    config.validate(d)
}

fn run_linear(domain: Option<&DomainParams>, p: &LinearParams, sampler: &FieldSampler) -> Result<Recorder> {
    let d = domain_or(domain, DomainParams::square(16, 32))?;
    run_config(&p.evolution, &d)?;
    let mut rec = Recorder::new(Subcommand::RunLinear, &[]);
    rec.table.header = series_header(&p.evolution.p_list);
    for r in 0..p.runs {
        let theta0 = initial_field(&p.initial, d, sampler, 2 * r as u64)?;
        let velocity = if p.velocity_amplitude != 0.0 {
            if d.dim() != 2 {
                return Err(Error::Dimension { required: "2", actual: d.dim() });
            }
            let stream = sampler.smooth_field(d, 2 * r as u64 + 1).scaled(p.velocity_amplitude);
            Some(VelocityField::new(stream, p.schedule)?)
        } else {
            None
        };
        let s = run(&p.evolution, &theta0, Drive::Linear(velocity.as_ref()))?;
        push_series(&mut rec, r, &s);
        energy_checks(&mut rec, r, &s);
        let worst = s.lp_max_increase().iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        rec.check(
            format!("L^p norms nonincreasing run={r}"),
            anchor::LP,
            worst <= p.lp_tolerance,
            json!({ "max_relative_increase": worst, "per_p": s.lp_max_increase(), "tolerance": p.lp_tolerance }),
        );
        rec.check(
            format!("H^2 growth within a Gronwall envelope run={r}"),
            anchor::H2_ENVELOPE,
            s.envelope_constant.is_some_and(f64::is_finite),
            json!({ "envelope_constant": s.envelope_constant }),
        );
        if velocity.is_none() {
            if let InitialData::Mode { index } = &p.initial {
                let lambda = d.eigenvalue(index)?;
                let t = *s.times.last().unwrap();
                let exact = 0.5 * (-2.0 * lambda.sqrt() * t).exp();
                let err = (s.energy.last().unwrap() - exact).abs();
                rec.check(
                    format!("single-mode energy decay run={r}"),
                    anchor::ENERGY,
                    err <= 1e-6,
                    json!({ "energy": s.energy.last(), "exact": exact, "abs_error": err, "time": t }),
                );
            }
        }
        if p.halving_check {
            let half =
                EvolutionConfig { dt: p.evolution.dt / 2.0, cadence: p.evolution.cadence * 2, ..p.evolution.clone() };
            let s2 = run(&half, &theta0, Drive::Linear(velocity.as_ref()))?;
            let ratio = s.residual_abs_sum / s2.residual_abs_sum;
            rec.check(
                format!("energy-identity residual quarters when dt halves run={r}"),
                anchor::ENERGY,
                (ratio - 4.0).abs() <= 0.4,
                json!({ "sum_dt": s.residual_abs_sum, "sum_half_dt": s2.residual_abs_sum, "ratio": ratio }),
            );
        }
    }
    Ok(rec)
}

fn run_sqg(domain: Option<&DomainParams>, p: &SqgParams, sampler: &FieldSampler) -> Result<Recorder> {
    let d = domain_or(domain, DomainParams::square(32, 64))?;
    if d.dim() != 2 {
        return Err(Error::Dimension { required: "2", actual: d.dim() });
    }
    run_config(&p.evolution, &d)?;
    let mut rec = Recorder::new(Subcommand::RunSqg, &[]);
    rec.table.header = series_header(&p.evolution.p_list);
    for r in 0..p.runs {
        let theta0 = initial_field(&p.initial, d, sampler, r as u64)?;
        let s = run(&p.evolution, &theta0, Drive::Sqg)?;
        push_series(&mut rec, r, &s);
        energy_checks(&mut rec, r, &s);
        if let InitialData::Mode { index } = &p.initial {
            let lambda = d.eigenvalue(index)?;
            let t = *s.times.last().unwrap();
            // ½‖θ‖² of the exact solution e^{-√λ t} w
            let exact = (-lambda.sqrt() * t).exp();
            let computed = (2.0 * s.energy.last().unwrap()).sqrt();
            let err = (computed - exact).abs();
            rec.check(
                format!("single mode decays at its own rate run={r}"),
                anchor::SQG,
                err <= 1e-9,
                json!({ "amplitude": computed, "exact": exact, "abs_error": err, "time": t }),
            );
        }
    }
    if !p.ladder.is_empty() {
        let theta0 = initial_field(&p.initial, d, sampler, 0)?;
        let ladder = galerkin_ladder(&p.evolution, &theta0, Drive::Sqg, &p.ladder)?;
        rec.check(
            "Galerkin ladder differences decrease",
            anchor::SQG,
            ladder.monotone(),
            json!({ "cutoffs": ladder.cutoffs, "differences": ladder.differences }),
        );
    }
    Ok(rec)
}

/// Columns: `dim, alpha, sample, relative_error`.
fn frac_oracle(domain: Option<&DomainParams>, p: &FracOracleParams, sampler: &FieldSampler) -> Result<Recorder> {
    let domains: Vec<DomainSpec> = match domain {
        Some(d) => vec![d.build()?],
        None => vec![DomainParams::interval(32, 128).build()?, DomainParams::square(32, 128).build()?],
    };
    let mut rec = Recorder::new(Subcommand::FracOracle, &["dim", "alpha", "sample", "relative_error"]);
    for d in &domains {
        let spec = HeatQuadratureSpec::for_domain(d);
        for &alpha in &p.alphas {
            let mut worst = 0.0f64;
            for k in 0..p.samples as u64 {
                let f = sampler.smooth_field(*d, k);
                let quad = frac_heat_quadrature(&f, alpha, &spec)?;
                let exact = apply_lambda_s(&f, 2.0 * alpha).to_grid();
                let err = quad.zip_with(&exact, |a, b| a - b)?.lp_norm(2.0) / exact.lp_norm(2.0);
                worst = worst.max(err);
                rec.row(vec![d.dim().to_string(), num(alpha), k.to_string(), num(err)]);
            }
            rec.check(
                format!("heat representation matches spectral power dim={} alpha={alpha}", d.dim()),
                anchor::HEAT_REPRESENTATION,
                worst <= p.tolerance,
                json!({ "max_relative_error": worst, "tolerance": p.tolerance }),
            );
        }
    }
    Ok(rec)
}
