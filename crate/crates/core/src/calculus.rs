//! Functional calculus of the Dirichlet Laplacian: `Λ^s = (-Δ)^{s/2}`, the heat
//! semigroup and its kernel, the constant `c_α`, the heat-semigroup
//! representation of `(-Δ)^α`, and the Riesz transforms `∇Λ^{-1}`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::field::{GridField, SpectralField};
use crate::quadrature;

/// Order `α` of `(-Δ)^α`; `s = 2α` in the `Λ^s` convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    alpha: f64,
}

impl FracOrder {
    /// Requires `0 <= α < 1`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} not in [0, 1)")));
        }
        Ok(FracOrder { alpha })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn s(self) -> f64 {
        2.0 * self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatQuadratureSpec {
    /// Lower time cutoff; `[0, ε]` is handled by a two-term Taylor head.
    pub epsilon: f64,
    pub t_max: f64,
    /// Total number of time nodes (Gauss–Legendre panels of 8 in `log t`).
    pub nodes: usize,
    /// Add `f t_max^{-α} / α` for the part of `∫ f t^{-1-α}` beyond `t_max`.
    pub tail: bool,
}

impl HeatQuadratureSpec {
    pub const PANEL_ORDER: usize = 8;

    /// `ε = 1e-8 (L/π)²`, `t_max = 10 / λ_1`, 200 nodes, tail on.
    pub fn for_domain(domain: &DomainSpec) -> Self {
        let l = domain.lengths().iter().cloned().fold(0.0, f64::max);
        HeatQuadratureSpec { epsilon: 1e-8 * (l / PI).powi(2), t_max: 10.0 / domain.lambda_1(), nodes: 200, tail: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        if !(self.epsilon < self.t_max) {
            return Err(Error::param(
                "epsilon",
                format!("epsilon {} must be below t_max {}", self.epsilon, self.t_max),
            ));
        }
        if self.nodes < Self::PANEL_ORDER {
            return Err(Error::param("nodes", format!("{} < {}", self.nodes, Self::PANEL_ORDER)));
        }
        Ok(())
    }
}

/// `Λ^s f`: coefficients `λ_j^{s/2} f_j`. Negative `s` gives the inverse powers.
pub fn apply_lambda_s(f: &SpectralField, s: f64) -> SpectralField {
    if s == 0.0 {
        return f.clone();
    }
    f.map_spectrum(|l| l.powf(0.5 * s))
}

/// `e^{tΔ} f`: coefficients `e^{-tλ_j} f_j`.
pub fn heat_apply(f: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("heat time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.map_spectrum(|l| (-t * l).exp()))
}

fn check_points(domain: &DomainSpec, x: &[f64], y: &[f64]) -> Result<()> {
    for p in [x, y] {
        if !domain.contains(p) {
            return Err(Error::PointOutside { point: p.to_vec() });
        }
    }
    Ok(())
}

/// One axis of the truncated kernel: `Σ_{k<=M} e^{-tκ_k²} s_k(x) s_k(y)`.
fn axis_kernel(domain: &DomainSpec, axis: usize, t: f64, x: f64, y: f64) -> f64 {
    (1..=domain.modes()[axis])
        .map(|k| (-t * domain.wavenumber(axis, k).powi(2)).exp() * domain.sine(axis, k, x) * domain.sine(axis, k, y))
        .sum()
}

fn axis_kernel_dy(domain: &DomainSpec, axis: usize, t: f64, x: f64, y: f64) -> f64 {
    (1..=domain.modes()[axis])
        .map(|k| {
            (-t * domain.wavenumber(axis, k).powi(2)).exp()
                * domain.sine(axis, k, x)
                * domain.sine_derivative(axis, k, y)
        })
        .sum()
}

/// `H_D(t, x, y) = Σ_j e^{-tλ_j} w_j(x) w_j(y)` truncated at the mode cutoff.
pub fn heat_kernel(domain: &DomainSpec, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param("t", format!("kernel time {t} must be positive")));
    }
    check_points(domain, x, y)?;
    Ok((0..domain.dim()).map(|a| axis_kernel(domain, a, t, x[a], y[a])).product())
}

/// `∇_y H_D(t, x, y)` from the term-wise differentiated series.
pub fn heat_kernel_grad_y(domain: &DomainSpec, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::param("t", format!("kernel time {t} must be positive")));
    }
    check_points(domain, x, y)?;
    let values: Vec<f64> = (0..domain.dim()).map(|a| axis_kernel(domain, a, t, x[a], y[a])).collect();
    Ok((0..domain.dim())
        .map(|d| {
            (0..domain.dim())
                .map(|a| if a == d { axis_kernel_dy(domain, a, t, x[a], y[a]) } else { values[a] })
                .product()
        })
        .collect())
}

/// `θ(x, t) = (e^{tΔ} 1)(x)` on `(0, L)`, untruncated.
fn heat_of_unity_1d(length: f64, x: f64, t: f64) -> f64 {
    if t * PI * PI / (length * length) < 0.05 {
        // images of the odd 2L-periodic square wave under the free heat flow
        let sigma = (4.0 * t).sqrt();
        let cdf = |z: f64| 0.5 * libm::erfc(-z / sigma);
        let mut theta = 0.0;
        for n in -3i32..=3 {
            let base = 2.0 * n as f64 * length;
            // +1 on (base, base + L), -1 on (base - L, base)
            theta += cdf(base + length - x) - cdf(base - x);
            theta -= cdf(base - x) - cdf(base - length - x);
        }
        theta
    } else {
        let mut theta = 0.0;
        let mut k = 1usize;
        loop {
            let kappa = k as f64 * PI / length;
            let decay = (-t * kappa * kappa).exp();
            if decay < 1e-18 {
                break;
            }
            theta += 4.0 / (k as f64 * PI) * (kappa * x).sin() * decay;
            k += 2;
        }
        theta
    }
}

/// `θ(x, t) = (e^{tΔ} 1)(x)`; the unit function is not band-limited, so this
/// uses the full expansion (or its image-sum form at small `t`).
pub fn heat_of_unity(domain: &DomainSpec, x: &[f64], t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("heat time {t} must be nonnegative")));
    }
    if !domain.contains(x) {
        return Err(Error::PointOutside { point: x.to_vec() });
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok((0..domain.dim()).map(|a| heat_of_unity_1d(domain.length(a), x[a], t)).product())
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("{alpha} not in (0, 1)")));
    }
    Ok(())
}

/// `c_α = 1 / ∫_0^∞ (1 - e^{-s}) s^{-1-α} ds`, by adaptive quadrature.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_open_alpha(alpha)?;
    // [0, 1] with s = u^{1/(1-α)} and [1, ∞) with s = w^{-1/α}; both integrands are bounded
    let p = 1.0 / (1.0 - alpha);
    let head = quadrature::integrate(
        |u: f64| {
            let s = u.powf(p);
            -(-s).exp_m1() * s.powf(-1.0 - alpha) * p * u.powf(p - 1.0)
        },
        0.0,
        1.0,
        1e-14,
    );
    let tail = quadrature::integrate(|w: f64| -(-w.powf(-1.0 / alpha)).exp_m1() / alpha, 0.0, 1.0, 1e-14);
    Ok(1.0 / (head + tail))
}

/// Closed form `α / Γ(1 - α)` of [`c_alpha`].
pub fn c_alpha_closed_form(alpha: f64) -> Result<f64> {
    check_open_alpha(alpha)?;
    Ok(alpha / libm::tgamma(1.0 - alpha))
}

/// `(-Δ)^α f` on the grid through the heat semigroup:
/// `c_α ∫ [f - e^{tΔ} f] t^{-1-α} dt`, with Gauss–Legendre panels in `log t` on
/// `[ε, t_max]`, a two-term Taylor head on `[0, ε]` and the `t_max` tail.
pub fn frac_heat_quadrature(f: &SpectralField, alpha: f64, spec: &HeatQuadratureSpec) -> Result<GridField> {
    check_open_alpha(alpha)?;
    spec.validate()?;
    let c = c_alpha(alpha)?;
    let panels = spec.nodes.div_ceil(HeatQuadratureSpec::PANEL_ORDER);
    let rule = quadrature::panel_rule(spec.epsilon.ln(), spec.t_max.ln(), panels, HeatQuadratureSpec::PANEL_ORDER);
    let mut acc = SpectralField::zeros(*f.domain());
    for (u, w) in rule {
        let t = u.exp();
        let diff = f.sub(&heat_apply(f, t)?)?;
        // dt / t = du
        acc = acc.add(&diff.scaled(w * t.powf(-alpha)))?;
    }
    let eps = spec.epsilon;
    // ∫_0^ε (1 - e^{-tλ}) t^{-1-α} dt ≈ λ ε^{1-α}/(1-α) - λ² ε^{2-α}/(2(2-α))
    let head = f.map_spectrum(|l| {
        l * eps.powf(1.0 - alpha) / (1.0 - alpha) - l * l * eps.powf(2.0 - alpha) / (2.0 * (2.0 - alpha))
    });
    acc = acc.add(&head)?;
    if spec.tail {
        acc = acc.add(&f.scaled(spec.t_max.powf(-alpha) / alpha))?;
    }
    Ok(acc.scaled(c).to_grid())
}

/// `R_D θ = ∇Λ^{-1} θ` on the grid, one component per axis.
pub fn riesz_transform(theta: &SpectralField) -> Vec<GridField> {
    apply_lambda_s(theta, -1.0).gradient_grid()
}

/// `R_D^⊥ θ = (-∂_2, ∂_1) Λ^{-1} θ` on the grid (rectangles only).
pub fn riesz_transform_perp(theta: &SpectralField) -> Result<Vec<GridField>> {
    if theta.domain().dim() != 2 {
        return Err(Error::Dimension { required: "2", actual: theta.domain().dim() });
    }
    let stream = apply_lambda_s(theta, -1.0);
    let dy = stream.derivative_grid(1).map(|v| -v);
    let dx = stream.derivative_grid(0);
    Ok(vec![dy, dx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line() -> DomainSpec {
        DomainSpec::interval(PI, 16, 64).unwrap()
    }

    fn square() -> DomainSpec {
        DomainSpec::rectangle([PI, PI], 8, 32).unwrap()
    }

    fn sample(domain: DomainSpec) -> SpectralField {
        let lambdas = domain.eigenvalues();
        let coeffs = lambdas.iter().enumerate().map(|(k, l)| ((k as f64 * 1.7).sin() + 0.3) / l).collect();
        SpectralField::new(domain, coeffs).unwrap()
    }

    #[test]
    fn lambda_s_examples() {
        let w1 = SpectralField::mode(line(), &[1]).unwrap();
        assert_eq!(apply_lambda_s(&w1, 1.0), w1);
        let w2 = SpectralField::mode(line(), &[2]).unwrap();
        assert_relative_eq!(apply_lambda_s(&w2, 1.0).coeff(&[2]).unwrap(), 2.0, epsilon = 1e-14);
        let f = sample(square());
        let lap = apply_lambda_s(&f, 2.0);
        for ((c, l), fc) in lap.coeffs().iter().zip(square().eigenvalues()).zip(f.coeffs()) {
            assert_relative_eq!(*c, l * fc, max_relative = 1e-14);
        }
        assert_eq!(apply_lambda_s(&f, 0.0), f);
    }

    #[test]
    fn lambda_composition_law() {
        let f = sample(square());
        let ab = apply_lambda_s(&apply_lambda_s(&f, 0.7), 0.6);
        let direct = apply_lambda_s(&f, 1.3);
        for (a, b) in ab.coeffs().iter().zip(direct.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
        let back = apply_lambda_s(&apply_lambda_s(&f, -1.0), 1.0);
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn heat_examples() {
        let w1 = SpectralField::mode(line(), &[1]).unwrap();
        let h = heat_apply(&w1, 1.0).unwrap();
        assert_relative_eq!(h.coeff(&[1]).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(heat_apply(&w1, 0.0).unwrap(), w1);
        assert!(heat_apply(&w1, -0.1).is_err());
        let f = sample(square());
        assert!(heat_apply(&f, 0.3).unwrap().l2_norm() <= f.l2_norm());
    }

    #[test]
    fn heat_semigroup_law() {
        let f = sample(square());
        let two_steps = heat_apply(&heat_apply(&f, 0.2).unwrap(), 0.35).unwrap();
        let one_step = heat_apply(&f, 0.55).unwrap();
        for (a, b) in two_steps.coeffs().iter().zip(one_step.coeffs()) {
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn heat_kernel_symmetry_and_one_mode_limit() {
        let d = square();
        let (x, y) = ([0.4, 2.1], [1.9, 0.8]);
        let a = heat_kernel(&d, 0.05, &x, &y).unwrap();
        let b = heat_kernel(&d, 0.05, &y, &x).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        assert!(heat_kernel(&d, 0.0, &x, &y).is_err());

        let l = line();
        let (x, y) = ([0.7], [2.2]);
        let t: f64 = 5.0;
        let exact = (-t).exp() * l.eigenfunction(&[1], &x) * l.eigenfunction(&[1], &y);
        let h = heat_kernel(&l, t, &x, &y).unwrap();
        assert!(((h - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn kernel_integrates_to_heat_of_unity() {
        let d = DomainSpec::interval(PI, 64, 128).unwrap();
        let t = 0.05;
        let x = [0.6];
        let (nodes, weights): (Vec<f64>, Vec<f64>) = quadrature::panel_rule(0.0, PI, 16, 16).into_iter().unzip();
        let integral: f64 = nodes.iter().zip(&weights).map(|(&y, w)| w * heat_kernel(&d, t, &x, &[y]).unwrap()).sum();
        let theta = heat_of_unity(&d, &x, t).unwrap();
        assert_relative_eq!(integral, theta, max_relative = 1e-10);
        assert!((0.0..=1.0).contains(&theta));
    }

    #[test]
    fn heat_of_unity_branches_agree() {
        let l = 2.0;
        let crossover = 0.05 * l * l / (PI * PI);
        for x in [0.01, 0.3, 1.0, 1.7] {
            let below = heat_of_unity_1d(l, x, crossover * (1.0 - 1e-9));
            let above = heat_of_unity_1d(l, x, crossover * (1.0 + 1e-9));
            assert!((below - above).abs() < 1e-9, "x = {x}: {below} vs {above}");
        }
        assert!((heat_of_unity_1d(PI, PI / 2.0, 1e-6) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_alpha_values() {
        assert_relative_eq!(c_alpha(0.5).unwrap(), 1.0 / (2.0 * PI.sqrt()), epsilon = 1e-12);
        assert_relative_eq!(c_alpha(0.5).unwrap(), 0.28209, epsilon = 1e-5);
        for a in [0.05, 0.25, 0.75, 0.95] {
            assert_relative_eq!(c_alpha(a).unwrap(), c_alpha_closed_form(a).unwrap(), max_relative = 1e-10);
        }
        // decays towards zero as α -> 0⁺
        let small: Vec<f64> = [0.2, 0.1, 0.05, 0.01].iter().map(|&a| c_alpha(a).unwrap()).collect();
        assert!(small.windows(2).all(|w| w[1] < w[0]));
        assert!(c_alpha(0.0).is_err() && c_alpha(1.0).is_err());
    }

    #[test]
    fn c_alpha_reproduces_lambda_power() {
        let (lambda, alpha) = (4.0f64, 0.3);
        let integral = quadrature::integrate(|s: f64| -(-lambda * s).exp_m1() * s.powf(-1.0 - alpha), 0.0, 1.0, 1e-14)
            // [1, ∞) with s = w^{-1/α}
            + quadrature::integrate(|w: f64| -(-lambda * w.powf(-1.0 / alpha)).exp_m1() / alpha, 0.0, 1.0, 1e-14);
        assert_relative_eq!(c_alpha(alpha).unwrap() * integral, lambda.powf(alpha), epsilon = 1e-8);
    }

    #[test]
    fn heat_quadrature_on_ground_mode() {
        let d = line();
        let w1 = SpectralField::mode(d, &[1]).unwrap();
        let spec = HeatQuadratureSpec { epsilon: 1e-8, ..HeatQuadratureSpec::for_domain(&d) };
        let q = frac_heat_quadrature(&w1, 0.5, &spec).unwrap();
        let exact = w1.to_grid();
        let err = q.zip_with(&exact, |a, b| a - b).unwrap().l2_norm() / exact.l2_norm();
        assert!(err < 1e-6, "relative error {err}");
        let zero = frac_heat_quadrature(&SpectralField::zeros(d), 0.5, &spec).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn heat_quadrature_errors() {
        let d = line();
        let f = sample(d);
        let spec = HeatQuadratureSpec::for_domain(&d);
        assert!(frac_heat_quadrature(&f, 1.0, &spec).is_err());
        assert!(frac_heat_quadrature(&f, 0.0, &spec).is_err());
        let bad = HeatQuadratureSpec { epsilon: spec.t_max, ..spec };
        assert!(frac_heat_quadrature(&f, 0.5, &bad).is_err());
    }

    #[test]
    fn heat_quadrature_halving_epsilon_converges() {
        let d = square();
        let f = sample(d);
        let exact = apply_lambda_s(&f, 1.5).to_grid();
        let mut errs = Vec::new();
        for eps in [1e-4, 5e-5, 2.5e-5] {
            let spec = HeatQuadratureSpec { epsilon: eps, ..HeatQuadratureSpec::for_domain(&d) };
            let q = frac_heat_quadrature(&f, 0.75, &spec).unwrap();
            errs.push(q.zip_with(&exact, |a, b| a - b).unwrap().l2_norm() / exact.l2_norm());
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn riesz_perp_of_ground_mode() {
        let d = square();
        let theta = SpectralField::mode(d, &[1, 1]).unwrap();
        let u = riesz_transform_perp(&theta).unwrap();
        let amp = 2.0 / (PI * 2f64.sqrt());
        for k in 0..d.grid_len() {
            let x = d.grid_point(k);
            assert_relative_eq!(u[0].values()[k], -amp * x[0].sin() * x[1].cos(), epsilon = 1e-13);
            assert_relative_eq!(u[1].values()[k], amp * x[0].cos() * x[1].sin(), epsilon = 1e-13);
        }
        assert!(riesz_transform_perp(&SpectralField::zeros(line())).is_err());
        assert_eq!(riesz_transform(&SpectralField::zeros(line())).len(), 1);
    }

    #[test]
    fn riesz_perp_is_divergence_free_and_tangent() {
        let d = square();
        let theta = sample(d);
        let stream = apply_lambda_s(&theta, -1.0).to_series();
        // ∂_1(-∂_2 ψ) + ∂_2(∂_1 ψ) evaluated on the grid
        let div = GridField::from_series(d, &stream.derivative(1).derivative(0).scaled(-1.0))
            .zip_with(&GridField::from_series(d, &stream.derivative(0).derivative(1)), |a, b| a + b)
            .unwrap();
        assert!(div.max_abs() <= 1e-10);
        // normal component at x_1 = 0: extrapolate the first two columns linearly
        let u = riesz_transform_perp(&theta).unwrap();
        let n = d.nodes()[1];
        let h = d.spacing(0);
        for j in 0..n {
            let (a, b) = (u[0].values()[j], u[0].values()[n + j]);
            let at_wall = a - (b - a) * h / h;
            assert!(at_wall.abs() < 5e-2 * u[0].max_abs().max(1e-12) + 1e-3, "trace {at_wall}");
        }
        // on x_1 = 0 the normal component of the exact field vanishes identically
        let exact_trace = stream.derivative(1).eval(&[0.0, 1.1]);
        assert!(exact_trace.abs() < 1e-14);
    }
}
