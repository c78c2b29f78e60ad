//! Galerkin solvers for `∂_tθ + u·∇θ + Λθ = 0` with a prescribed
//! divergence-free velocity tangent to the boundary, and for critical SQG
//! (`u = R_D^⊥θ`), with the diagnostics of their a priori estimates.
//!
//! Time stepping treats `Λ` exactly through the integrating factor
//! `E = e^{-dt√λ_j}` and transport with Heun's method:
//! `k1 = -N(θⁿ)`, `θ* = E(θⁿ + dt k1)`, `k2 = -N(θ*)`,
//! `θⁿ⁺¹ = Eθⁿ + dt/2 (E k1 + k2)`.

use serde::{Deserialize, Serialize};

use crate::calculus::apply_lambda_s;
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::extension::{b_norm, commutator_advection, perp_gradient_series, product_domain, transport_product};
use crate::field::{GridField, SpectralField};

/// Time dependence of a prescribed velocity: `u(t) = a(t) ∇^⊥ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    #[default]
    Static,
    /// `a(t) = cos(2πt / period)`.
    Cosine { period: f64 },
}

impl Schedule {
    pub fn amplitude(&self, t: f64) -> f64 {
        match *self {
            Schedule::Static => 1.0,
            Schedule::Cosine { period } => (2.0 * std::f64::consts::PI * t / period).cos(),
        }
    }
}

/// `u = ∇^⊥ψ = (-∂_2ψ, ∂_1ψ)` for a sine-series stream function `ψ`, which
/// makes `u` divergence-free and tangent to the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    stream: SpectralField,
    schedule: Schedule,
    components: Vec<GridField>,
}

pub fn make_velocity(stream: SpectralField) -> Result<VelocityField> {
    VelocityField::new(stream, Schedule::Static)
}

impl VelocityField {
    pub fn new(stream: SpectralField, schedule: Schedule) -> Result<Self> {
        if stream.domain().dim() != 2 {
            return Err(Error::Dimension { required: "2", actual: stream.domain().dim() });
        }
        if let Schedule::Cosine { period } = schedule {
            if !(period > 0.0) {
                return Err(Error::param("period", "must be positive"));
            }
        }
        let components = vec![stream.derivative_grid(1).map(|v| -v), stream.derivative_grid(0)];
        Ok(VelocityField { stream, schedule, components })
    }

    pub fn stream(&self) -> &SpectralField {
        &self.stream
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Grid components of `∇^⊥ψ` (amplitude one).
    pub fn components(&self) -> &[GridField] {
        &self.components
    }

    /// Largest grid speed over all times (`|a(t)| ≤ 1`).
    pub fn max_speed(&self) -> f64 {
        (0..self.components[0].values().len())
            .map(|k| self.components.iter().map(|c| c.values()[k].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Grid maximum of `|div u|` from the exact series derivatives.
    pub fn divergence_residual(&self) -> f64 {
        let s = self.stream.to_series();
        let domain = *self.stream.domain();
        let a = GridField::from_series(domain, &s.derivative(1).derivative(0).scaled(-1.0));
        let b = GridField::from_series(domain, &s.derivative(0).derivative(1));
        a.zip_with(&b, |x, y| x + y).map(|g| g.max_abs()).unwrap_or(f64::NAN)
    }

    /// `‖∇^⊥ψ‖_B` at amplitude one.
    pub fn b_norm(&self) -> Result<f64> {
        Ok(b_norm(&perp_gradient_series(&self.stream)?)?.value)
    }
}

/// Nonlinearity grid: holds both bands' modes with at least `dealias · M` nodes.
fn transport_domain(stream: &DomainSpec, theta: &DomainSpec, dealias: f64) -> Result<DomainSpec> {
    if !stream.same_geometry(theta) {
        return Err(Error::DomainMismatch);
    }
    let modes: Vec<usize> = stream.modes().iter().zip(theta.modes()).map(|(a, b)| *a.max(b)).collect();
    let base = product_domain(theta, &modes)?;
    let nodes: Vec<usize> =
        base.nodes().iter().zip(&modes).map(|(&n, &m)| n.max((dealias * m as f64).ceil() as usize)).collect();
    DomainSpec::new(base.lengths(), &modes, &nodes)
}

/// `P_M(∇^⊥ψ · ∇θ)` in `θ`'s band. The product of two sine-band fields with
/// cutoffs `M_ψ, M_θ` is a sine series of band `M_ψ + M_θ`, which a grid with
/// at least `2 max(M_ψ, M_θ)` nodes per axis resolves without aliasing.
fn transport_term(stream: &SpectralField, theta: &SpectralField, dealias: f64) -> Result<SpectralField> {
    let target = transport_domain(stream.domain(), theta.domain(), dealias)?;
    transport_product(stream, theta, &target)?.to_spectral().resample(*theta.domain())
}

/// `P_M(u(t)·∇θ)`.
pub fn advect(u: &VelocityField, theta: &SpectralField, t: f64) -> Result<SpectralField> {
    let amp = u.schedule.amplitude(t);
    Ok(transport_term(&u.stream, theta, 2.0)?.scaled(amp))
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("time step {dt} must be nonnegative")));
    }
    Ok(())
}

/// Largest admissible step `cfl_safety · h / max|u|`.
pub fn cfl_limit(domain: &DomainSpec, max_speed: f64, cfl_safety: f64) -> f64 {
    if max_speed > 0.0 {
        cfl_safety * domain.min_spacing() / max_speed
    } else {
        f64::INFINITY
    }
}

fn check_cfl(domain: &DomainSpec, dt: f64, max_speed: f64, cfl_safety: f64) -> Result<()> {
    let admissible = cfl_limit(domain, max_speed, cfl_safety);
    if dt > admissible {
        return Err(Error::Cfl { dt, admissible });
    }
    Ok(())
}

fn heun_step(
    theta: &SpectralField,
    dt: f64,
    nonlinear: impl Fn(&SpectralField, f64) -> Result<SpectralField>,
    t: f64,
) -> Result<SpectralField> {
    if dt == 0.0 {
        return Ok(theta.clone());
    }
    let decay = |f: &SpectralField| f.map_spectrum(|l| (-dt * l.sqrt()).exp());
    let k1 = nonlinear(theta, t)?.scaled(-1.0);
    let stage = decay(&theta.add(&k1.scaled(dt))?);
    let k2 = nonlinear(&stage, t + dt)?.scaled(-1.0);
    decay(theta).add(&decay(&k1).add(&k2)?.scaled(0.5 * dt))
}

/// One step of the linear equation; `u = None` is pure fractional diffusion.
pub fn step_linear(
    theta: &SpectralField,
    u: Option<&VelocityField>,
    t: f64,
    dt: f64,
    cfl_safety: f64,
) -> Result<SpectralField> {
    check_dt(dt)?;
    match u {
        None => heun_step(theta, dt, |f, _| Ok(SpectralField::zeros(*f.domain())), t),
        Some(u) => {
            check_cfl(theta.domain(), dt, u.max_speed(), cfl_safety)?;
            heun_step(theta, dt, |f, s| advect(u, f, s), t)
        }
    }
}

/// `R_D^⊥θ = ∇^⊥(Λ^{-1}θ)` as a velocity field.
pub fn sqg_velocity(theta: &SpectralField) -> Result<VelocityField> {
    make_velocity(apply_lambda_s(theta, -1.0))
}

/// `P_M(R_D^⊥θ · ∇θ)`.
pub fn sqg_nonlinearity(theta: &SpectralField) -> Result<SpectralField> {
    if theta.domain().dim() != 2 {
        return Err(Error::Dimension { required: "2", actual: theta.domain().dim() });
    }
    transport_term(&apply_lambda_s(theta, -1.0), theta, 2.0)
}

/// One SQG step; the velocity is recomputed at each stage.
pub fn step_sqg(theta: &SpectralField, dt: f64, cfl_safety: f64) -> Result<SpectralField> {
    if theta.domain().dim() != 2 {
        return Err(Error::Dimension { required: "2", actual: theta.domain().dim() });
    }
    check_dt(dt)?;
    check_cfl(theta.domain(), dt, sqg_velocity(theta)?.max_speed(), cfl_safety)?;
    heun_step(theta, dt, |f, _| sqg_nonlinearity(f), 0.0)
}

/// `‖Γθ‖_{1/2,D} / (‖u‖_B ‖θ‖_{3/2,D})` with `Γ = [Λ, u·∇]`.
pub fn commutator_diagnostic(u: &VelocityField, theta: &SpectralField) -> Result<f64> {
    Ok(commutator_advection(u.stream(), theta)?.ratio)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    /// Galerkin cutoff `m` per axis; `None` uses the domain's cutoff.
    pub modes: Option<usize>,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Nonlinear products use at least `dealias · M` nodes per axis (≥ 2).
    pub dealias: f64,
    /// Diagnostics every `cadence` steps (and at the end).
    pub cadence: usize,
    /// Exponents of the tracked `L^p` norms; `inf` tracks the grid maximum.
    pub p_list: Vec<f64>,
    /// Relative energy growth per step that aborts the run.
    pub energy_tolerance: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            modes: None,
            dt: 1e-3,
            t_end: 1.0,
            cfl_safety: 0.5,
            dealias: 2.0,
            cadence: 1,
            p_list: vec![1.0, 2.0, 4.0, f64::INFINITY],
            energy_tolerance: 1e-12,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::param("t_end", "must be nonnegative"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::param("cfl_safety", "must lie in (0, 1]"));
        }
        if !(self.dealias >= 2.0) {
            return Err(Error::param("dealias", "products need at least 2M nodes per axis"));
        }
        if self.cadence == 0 {
            return Err(Error::param("cadence", "must be at least 1"));
        }
        if self.p_list.iter().any(|p| !(*p >= 1.0)) {
            return Err(Error::param("p_list", "exponents must be >= 1"));
        }
        if let Some(m) = self.modes {
            if m == 0 || domain.modes().iter().any(|&dm| m > dm) {
                return Err(Error::param(
                    "modes",
                    format!("cutoff {m} exceeds the domain cutoff {:?}", domain.modes()),
                ));
            }
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// What drives the transport term.
#[derive(Debug, Clone, Copy)]
pub enum Drive<'a> {
    Linear(Option<&'a VelocityField>),
    Sqg,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSeries {
    pub p: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    /// `½‖θ‖²`.
    pub energy: Vec<f64>,
    /// `‖θ‖²_{1/2,D}`.
    pub dissipation: Vec<f64>,
    pub lp: Vec<LpSeries>,
    /// `‖Λ²θ‖²`.
    pub lambda2_sq: Vec<f64>,
    /// Energy-identity residual of the step ending at each recorded time.
    pub residual: Vec<f64>,
    /// `Σ dt ‖θ^{n+½}‖²_{1/2,D}` up to each recorded time.
    pub cumulative_dissipation: Vec<f64>,
    /// `∫ ‖u‖_B² dt` up to each recorded time.
    pub velocity_integral: Vec<f64>,
    /// Commutator ratio at recorded times (runs with transport).
    pub commutator: Vec<f64>,
    /// `Σ_n |r^n|` over every step.
    pub residual_abs_sum: f64,
    /// Smallest `C` with `‖Λ²θ(t)‖² ≤ ‖Λ²θ_0‖² e^{C ∫_0^t ‖u‖_B²}` along the run.
    pub envelope_constant: Option<f64>,
}

impl DiagnosticsSeries {
    fn new(p_list: &[f64]) -> Self {
        DiagnosticsSeries {
            times: Vec::new(),
            energy: Vec::new(),
            dissipation: Vec::new(),
            lp: p_list.iter().map(|&p| LpSeries { p, values: Vec::new() }).collect(),
            lambda2_sq: Vec::new(),
            residual: Vec::new(),
            cumulative_dissipation: Vec::new(),
            velocity_integral: Vec::new(),
            commutator: Vec::new(),
            residual_abs_sum: 0.0,
            envelope_constant: None,
        }
    }

    fn record(&mut self, t: f64, theta: &SpectralField, residual: f64, cumulative: f64, vel: f64, comm: Option<f64>) {
        let grid = theta.to_grid();
        self.times.push(t);
        self.energy.push(0.5 * theta.l2_norm().powi(2));
        self.dissipation.push(theta.sobolev_norm(0.5).powi(2));
        for series in &mut self.lp {
            series.values.push(grid.lp_norm(series.p));
        }
        self.lambda2_sq.push(theta.sobolev_norm(2.0).powi(2));
        self.residual.push(residual);
        self.cumulative_dissipation.push(cumulative);
        self.velocity_integral.push(vel);
        if let Some(c) = comm {
            self.commutator.push(c);
        }
    }

    /// Largest relative per-record increase of each `L^p` norm.
    pub fn lp_max_increase(&self) -> Vec<(f64, f64)> {
        self.lp
            .iter()
            .map(|s| {
                let worst = s
                    .values
                    .windows(2)
                    .map(|w| (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE))
                    .fold(f64::NEG_INFINITY, f64::max);
                (s.p, worst)
            })
            .collect()
    }

    fn fit_envelope(&mut self) {
        let base = match self.lambda2_sq.first() {
            Some(&b) if b > 0.0 => b,
            _ => return,
        };
        let mut c = 0.0f64;
        for (l2, v) in self.lambda2_sq.iter().zip(&self.velocity_integral) {
            let growth = (l2 / base).ln();
            if growth > 0.0 {
                c = if *v > 0.0 { c.max(growth / v) } else { f64::INFINITY };
            }
        }
        self.envelope_constant = Some(c);
    }
}

/// Runs the solver and keeps the state at every recorded time.
pub fn run_trajectory(
    config: &EvolutionConfig,
    initial: &SpectralField,
    drive: Drive<'_>,
) -> Result<(DiagnosticsSeries, Vec<SpectralField>)> {
    let full = *initial.domain();
    config.validate(&full)?;
    let domain = match config.modes {
        Some(m) => full.with_resolution(m, full.nodes()[0])?,
        None => full,
    };
    let mut theta = initial.resample(domain)?;
    let (velocity, b) = match drive {
        Drive::Linear(Some(u)) => {
            if !u.stream().domain().same_geometry(&domain) {
                return Err(Error::DomainMismatch);
            }
            check_cfl(&domain, config.dt, u.max_speed(), config.cfl_safety)?;
            (Some(u), u.b_norm()?)
        }
        Drive::Linear(None) => (None, 0.0),
        Drive::Sqg => {
            if domain.dim() != 2 {
                return Err(Error::Dimension { required: "2", actual: domain.dim() });
            }
            (None, 0.0)
        }
    };
    let steps = config.steps();
    let mut series = DiagnosticsSeries::new(&config.p_list);
    let mut states = vec![theta.clone()];
    let mut cumulative = 0.0;
    let mut vel_integral = 0.0;
    let comm = |u: Option<&VelocityField>, th: &SpectralField| -> Result<Option<f64>> {
        match u {
            Some(u) if th.l2_norm() > 0.0 => commutator_diagnostic(u, th).map(Some),
            _ => Ok(None),
        }
    };
    series.record(0.0, &theta, 0.0, 0.0, 0.0, comm(velocity, &theta)?);
    for n in 0..steps {
        let t = n as f64 * config.dt;
        let (next, b_now) = match drive {
            Drive::Linear(u) => {
                let amp = velocity.map_or(0.0, |v| v.schedule().amplitude(t + 0.5 * config.dt));
                (step_linear(&theta, u, t, config.dt, config.cfl_safety)?, b * amp.abs())
            }
            Drive::Sqg => {
                let u = sqg_velocity(&theta)?;
                let b = if theta.l2_norm() > 0.0 { u.b_norm()? } else { 0.0 };
                (step_sqg(&theta, config.dt, config.cfl_safety)?, b)
            }
        };
        let before = 0.5 * theta.l2_norm().powi(2);
        let after = 0.5 * next.l2_norm().powi(2);
        if after > before * (1.0 + config.energy_tolerance) + f64::MIN_POSITIVE {
            return Err(Error::Unstable { time: t + config.dt, before, after, state: next.into_coeffs() });
        }
        let mid_dissipation = theta.add(&next)?.scaled(0.5).sobolev_norm(0.5).powi(2);
        let residual = after - before + config.dt * mid_dissipation;
        series.residual_abs_sum += residual.abs();
        cumulative += config.dt * mid_dissipation;
        vel_integral += config.dt * b_now * b_now;
        theta = next;
        if (n + 1) % config.cadence == 0 || n + 1 == steps {
            let c = match drive {
                Drive::Sqg if theta.l2_norm() > 0.0 => Some(commutator_diagnostic(&sqg_velocity(&theta)?, &theta)?),
                _ => comm(velocity, &theta)?,
            };
            series.record((n + 1) as f64 * config.dt, &theta, residual, cumulative, vel_integral, c);
            states.push(theta.clone());
        }
    }
    series.fit_envelope();
    Ok((series, states))
}

pub fn run(config: &EvolutionConfig, initial: &SpectralField, drive: Drive<'_>) -> Result<DiagnosticsSeries> {
    Ok(run_trajectory(config, initial, drive)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub cutoffs: Vec<usize>,
    /// `(∫_0^T ‖θ_{m_i} - θ_{m_{i+1}}‖² dt)^{1/2}` for consecutive cutoffs.
    pub differences: Vec<f64>,
}

impl LadderReport {
    pub fn monotone(&self) -> bool {
        self.differences.windows(2).all(|w| w[1] < w[0])
    }
}

/// Runs the same problem at increasing Galerkin cutoffs and measures how the
/// trajectories approach each other.
pub fn galerkin_ladder(
    config: &EvolutionConfig,
    initial: &SpectralField,
    drive: Drive<'_>,
    cutoffs: &[usize],
) -> Result<LadderReport> {
    let mut trajectories = Vec::new();
    for &m in cutoffs {
        let cfg = EvolutionConfig { modes: Some(m), ..config.clone() };
        trajectories.push(run_trajectory(&cfg, initial, drive)?.1);
    }
    let weight = config.dt * config.cadence as f64;
    let differences = trajectories
        .windows(2)
        .map(|pair| -> Result<f64> {
            let mut acc = 0.0;
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                let target = *b.domain();
                acc += weight * b.sub(&a.resample(target)?)?.l2_norm().powi(2);
            }
            Ok(acc.sqrt())
        })
        .collect::<Result<_>>()?;
    Ok(LadderReport { cutoffs: cutoffs.to_vec(), differences })
}
