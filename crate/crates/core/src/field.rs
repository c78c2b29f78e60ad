//! Spectral (sine-coefficient) and grid representations of scalar fields.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::trig::{separable, sine_matrix, Family, Matrix, TrigSeries};

/// Coefficients `f_j` of `f = Σ f_j w_j` over the retained Dirichlet modes,
/// row-major in the multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: DomainSpec,
    coeffs: Vec<f64>,
}

/// Values on the interior tensor grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: DomainSpec,
    values: Vec<f64>,
}

impl SpectralField {
    pub fn new(domain: DomainSpec, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != domain.mode_count() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} coefficients", domain.mode_count()),
                got: coeffs.len().to_string(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coeffs", "non-finite coefficient"));
        }
        Ok(SpectralField { domain, coeffs })
    }

    pub(crate) fn from_raw(domain: DomainSpec, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), domain.mode_count());
        SpectralField { domain, coeffs }
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        SpectralField { domain, coeffs: vec![0.0; domain.mode_count()] }
    }

    /// The eigenfunction `w_j` as a coefficient vector.
    pub fn mode(domain: DomainSpec, index: &[usize]) -> Result<Self> {
        let k = domain.flat_mode(index)?;
        let mut f = Self::zeros(domain);
        f.coeffs[k] = 1.0;
        Ok(f)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, index: &[usize]) -> Result<f64> {
        Ok(self.coeffs[self.domain.flat_mode(index)?])
    }

    /// Multiplies each coefficient by `multiplier(λ_j)`.
    pub fn map_spectrum(&self, multiplier: impl Fn(f64) -> f64) -> Self {
        let coeffs = self.domain.eigenvalues().into_iter().zip(&self.coeffs).map(|(l, c)| multiplier(l) * c).collect();
        SpectralField { domain: self.domain, coeffs }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpectralField { domain: self.domain, coeffs: self.coeffs.iter().map(|c| c * factor).collect() }
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &SpectralField, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| op(a, b)).collect();
        Ok(SpectralField { domain: self.domain, coeffs })
    }

    pub fn inner(&self, other: &SpectralField) -> Result<f64> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    /// `‖f‖_{L²}` via Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `‖f‖_{s,D} = (Σ λ_j^s f_j²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.domain.eigenvalues().iter().zip(&self.coeffs).map(|(l, c)| l.powf(s) * c * c).sum::<f64>().sqrt()
    }

    /// Copies the overlapping modes into `target`'s mode set (truncating or zero-padding).
    pub fn resample(&self, target: DomainSpec) -> Result<Self> {
        if !self.domain.same_geometry(&target) {
            return Err(Error::DomainMismatch);
        }
        let mut out = SpectralField::zeros(target);
        for k in 0..target.mode_count() {
            let index = target.mode_index(k);
            if let Ok(src) = self.domain.flat_mode(&index) {
                out.coeffs[k] = self.coeffs[src];
            }
        }
        Ok(out)
    }

    pub fn to_series(&self) -> TrigSeries {
        let dim = self.domain.dim();
        TrigSeries::new(self.domain.lengths(), &vec![Family::Sin; dim], self.domain.modes(), self.coeffs.clone())
    }

    pub fn to_grid(&self) -> GridField {
        let mats: Vec<Matrix> = (0..self.domain.dim())
            .map(|a| sine_matrix(self.domain.length(a), &self.domain.axis_nodes(a), self.domain.modes()[a]))
            .collect();
        let values = separable(&self.coeffs, self.domain.modes(), &mats);
        GridField { domain: self.domain, values }
    }

    /// `∂f/∂x_axis` evaluated on the grid.
    pub fn derivative_grid(&self, axis: usize) -> GridField {
        GridField::from_series(self.domain, &self.to_series().derivative(axis))
    }

    pub fn gradient_grid(&self) -> Vec<GridField> {
        (0..self.domain.dim()).map(|a| self.derivative_grid(a)).collect()
    }
}

impl GridField {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.grid_len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} grid values", domain.grid_len()),
                got: values.len().to_string(),
            });
        }
        Ok(GridField { domain, values })
    }

    pub(crate) fn from_raw(domain: DomainSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), domain.grid_len());
        GridField { domain, values }
    }

    pub fn zeros(domain: DomainSpec) -> Self {
        GridField { domain, values: vec![0.0; domain.grid_len()] }
    }

    /// Samples an arbitrary function at the grid nodes.
    pub fn from_fn(domain: DomainSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..domain.grid_len()).map(|k| f(&domain.grid_point(k))).collect();
        GridField { domain, values }
    }

    pub fn from_series(domain: DomainSpec, series: &TrigSeries) -> Self {
        let nodes: Vec<Vec<f64>> = (0..domain.dim()).map(|a| domain.axis_nodes(a)).collect();
        GridField { domain, values: series.eval_tensor(&nodes) }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridField { domain: self.domain, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridField, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.domain.nodes()),
                got: format!("{:?}", other.domain.nodes()),
            });
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        Ok(GridField { domain: self.domain, values })
    }

    /// Quadrature coefficients onto the domain's retained sine modes.
    pub fn to_spectral(&self) -> SpectralField {
        let coeffs = self.analyze(self.domain.modes());
        SpectralField { domain: self.domain, coeffs }
    }

    /// Quadrature coefficients for `modes[axis]` sines per axis (at most the grid size).
    pub(crate) fn analyze(&self, modes: &[usize]) -> Vec<f64> {
        let mats: Vec<Matrix> = (0..self.domain.dim())
            .map(|a| {
                let nodes = self.domain.axis_nodes(a);
                let h = self.domain.spacing(a);
                let s = sine_matrix(self.domain.length(a), &nodes, modes[a]);
                Matrix::from_fn(modes[a], nodes.len(), |k, i| h * s.data[i * s.cols + k])
            })
            .collect();
        separable(&self.values, self.domain.nodes(), &mats)
    }

    /// Every resolvable sine mode of the grid interpolant (`M = N`).
    pub fn to_full_spectral(&self) -> SpectralField {
        let full = self.domain.full_band();
        SpectralField { domain: full, coeffs: self.analyze(full.nodes()) }
    }

    /// Samples the coarse nodes of a grid obtained with [`DomainSpec::refined`].
    pub fn coarsen(&self, coarse: DomainSpec) -> Result<Self> {
        if self.domain != coarse.refined().with_modes_unchecked(self.domain.modes()) {
            return Err(Error::ShapeMismatch {
                expected: format!("refinement of {:?}", coarse.nodes()),
                got: format!("{:?}", self.domain.nodes()),
            });
        }
        let values = (0..coarse.grid_len())
            .map(|k| {
                let mut rem = k;
                let mut idx = vec![0; coarse.dim()];
                for axis in (0..coarse.dim()).rev() {
                    idx[axis] = rem % coarse.nodes()[axis];
                    rem /= coarse.nodes()[axis];
                }
                let fine =
                    idx.iter().enumerate().fold(0, |acc, (axis, &i)| acc * self.domain.nodes()[axis] + 2 * i + 1);
                self.values[fine]
            })
            .collect();
        Ok(GridField { domain: coarse, values })
    }

    pub fn inner(&self, other: &GridField) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::ShapeMismatch {
                expected: self.values.len().to_string(),
                got: other.values.len().to_string(),
            });
        }
        Ok(self.domain.cell_volume() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// Grid-quadrature `L^p` norm; `p = ∞` gives the grid maximum of `|f|`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let w = self.domain.cell_volume();
        (w * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Minimum value and its flat grid position.
    pub fn argmin(&self) -> (f64, usize) {
        self.values.iter().enumerate().fold((f64::INFINITY, 0), |(m, k), (i, &v)| if v < m { (v, i) } else { (m, k) })
    }
}
