//! Intervals and rectangles with their explicit Dirichlet eigenbasis.
//!
//! Eigenpairs are `λ_j = Σ_i (j_i π / L_i)²` and
//! `w_j(x) = Π_i sqrt(2/L_i) sin(j_i π x_i / L_i)`. Grids are the interior
//! DST-I nodes `x_i = i L / (N + 1)`, `i = 1..N`, on which the sines up to
//! mode `N` are discretely orthonormal under the weight `L / (N + 1)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::GridField;

pub const MAX_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    dim: usize,
    lengths: [f64; MAX_DIM],
    modes: [usize; MAX_DIM],
    nodes: [usize; MAX_DIM],
}

impl DomainSpec {
    pub fn new(lengths: &[f64], modes: &[usize], nodes: &[usize]) -> Result<Self> {
        let dim = lengths.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDomain(format!("dimension {dim} not in 1..=2")));
        }
        if modes.len() != dim || nodes.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "expected {dim} mode cutoffs and grid sizes, got {} and {}",
                modes.len(),
                nodes.len()
            )));
        }
        let mut spec = DomainSpec { dim, lengths: [1.0; MAX_DIM], modes: [1; MAX_DIM], nodes: [1; MAX_DIM] };
        for axis in 0..dim {
            let (l, m, n) = (lengths[axis], modes[axis], nodes[axis]);
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidDomain(format!("length {l} on axis {axis} must be positive")));
            }
            if m == 0 {
                return Err(Error::InvalidDomain(format!("mode cutoff on axis {axis} must be positive")));
            }
            if n < 2 * m {
                return Err(Error::InvalidDomain(format!(
                    "grid size {n} on axis {axis} is below twice the mode cutoff {m}"
                )));
            }
            spec.lengths[axis] = l;
            spec.modes[axis] = m;
            spec.nodes[axis] = n;
        }
        Ok(spec)
    }

    pub fn interval(length: f64, modes: usize, nodes: usize) -> Result<Self> {
        Self::new(&[length], &[modes], &[nodes])
    }

    pub fn rectangle(lengths: [f64; 2], modes: usize, nodes: usize) -> Result<Self> {
        Self::new(&lengths, &[modes, modes], &[nodes, nodes])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes[..self.dim]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths[axis]
    }

    /// Grid spacing `L / (N + 1)` along `axis`; also the quadrature weight.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.nodes[axis] + 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Product of the per-axis quadrature weights.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn mode_count(&self) -> usize {
        self.modes().iter().product()
    }

    pub fn grid_len(&self) -> usize {
        self.nodes().iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn diameter(&self) -> f64 {
        self.lengths().iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    /// Same geometry with a different resolution.
    pub fn with_resolution(&self, modes: usize, nodes: usize) -> Result<Self> {
        let m = vec![modes; self.dim];
        let n = vec![nodes; self.dim];
        Self::new(self.lengths(), &m, &n)
    }

    /// Grid with `2N + 1` nodes per axis. Coarse node `i` (0-based) is fine node `2i + 1`.
    pub fn refined(&self) -> Self {
        let mut out = *self;
        for axis in 0..self.dim {
            out.nodes[axis] = 2 * self.nodes[axis] + 1;
        }
        out
    }

    /// The same grid with every resolvable sine mode retained (`M = N`).
    pub fn full_band(&self) -> Self {
        let mut out = *self;
        out.modes = out.nodes;
        out
    }

    pub(crate) fn with_modes_unchecked(&self, modes: &[usize]) -> Self {
        let mut out = *self;
        out.modes[..self.dim].copy_from_slice(modes);
        out
    }

    pub fn same_geometry(&self, other: &DomainSpec) -> bool {
        self.dim == other.dim && self.lengths() == other.lengths()
    }

    pub fn check_index(&self, index: &[usize]) -> Result<()> {
        let ok = index.len() == self.dim && index.iter().zip(self.modes()).all(|(&j, &m)| j >= 1 && j <= m);
        if ok {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: index.to_vec(), cutoff: self.modes().to_vec() })
        }
    }

    /// Row-major flat position of a 1-based multi-index.
    pub fn flat_mode(&self, index: &[usize]) -> Result<usize> {
        self.check_index(index)?;
        Ok(index.iter().zip(self.modes()).fold(0, |acc, (&j, &m)| acc * m + (j - 1)))
    }

    /// 1-based multi-index of a flat mode position.
    pub fn mode_index(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            index[axis] = flat % self.modes[axis] + 1;
            flat /= self.modes[axis];
        }
        index
    }

    pub fn wavenumber(&self, axis: usize, j: usize) -> f64 {
        j as f64 * PI / self.lengths[axis]
    }

    pub fn eigenvalue(&self, index: &[usize]) -> Result<f64> {
        self.check_index(index)?;
        Ok(self.eigenvalue_unchecked(index))
    }

    fn eigenvalue_unchecked(&self, index: &[usize]) -> f64 {
        index.iter().enumerate().map(|(axis, &j)| self.wavenumber(axis, j).powi(2)).sum()
    }

    /// Eigenvalues in flat (row-major) layout.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.mode_count()).map(|k| self.eigenvalue_unchecked(&self.mode_index(k))).collect()
    }

    pub fn lambda_1(&self) -> f64 {
        self.eigenvalue_unchecked(&vec![1; self.dim])
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalue_unchecked(self.modes())
    }

    /// Flat mode positions sorted by eigenvalue, ties broken by multi-index order.
    pub fn canonical_order(&self) -> Vec<usize> {
        let lambdas = self.eigenvalues();
        let mut order: Vec<usize> = (0..lambdas.len()).collect();
        order.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]).then(a.cmp(&b)));
        order
    }

    /// Coordinate of 0-based grid node `i` along `axis`.
    pub fn node(&self, axis: usize, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing(axis)
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.nodes[axis]).map(|i| self.node(axis, i)).collect()
    }

    /// Coordinates of a flat (row-major) grid position.
    pub fn grid_point(&self, mut flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            x[axis] = self.node(axis, flat % self.nodes[axis]);
            flat /= self.nodes[axis];
        }
        x
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().zip(self.lengths()).all(|(&xi, &l)| (0.0..=l).contains(&xi))
    }

    /// `d(x) = dist(x, ∂Ω)`.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::PointOutside { point: x.to_vec() });
        }
        Ok(x.iter().zip(self.lengths()).map(|(&xi, &l)| xi.min(l - xi)).fold(f64::INFINITY, f64::min))
    }

    /// `d(x)` at every grid node.
    pub fn distance_grid(&self) -> Vec<f64> {
        (0..self.grid_len())
            .map(|k| {
                let x = self.grid_point(k);
                x.iter().zip(self.lengths()).map(|(&xi, &l)| xi.min(l - xi)).fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// 1D normalized sine `sqrt(2/L) sin(jπx/L)`.
    pub fn sine(&self, axis: usize, j: usize, x: f64) -> f64 {
        (2.0 / self.lengths[axis]).sqrt() * (self.wavenumber(axis, j) * x).sin()
    }

    /// `d/dx` of [`Self::sine`].
    pub fn sine_derivative(&self, axis: usize, j: usize, x: f64) -> f64 {
        let k = self.wavenumber(axis, j);
        (2.0 / self.lengths[axis]).sqrt() * k * (k * x).cos()
    }

    /// Pointwise `w_j(x)`; mode indices beyond the cutoff are allowed here.
    pub fn eigenfunction(&self, index: &[usize], x: &[f64]) -> f64 {
        index.iter().enumerate().map(|(axis, &j)| self.sine(axis, j, x[axis])).product()
    }

    pub fn eigenfunction_gradient(&self, index: &[usize], x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|d| {
                index
                    .iter()
                    .enumerate()
                    .map(
                        |(axis, &j)| {
                            if axis == d {
                                self.sine_derivative(axis, j, x[axis])
                            } else {
                                self.sine(axis, j, x[axis])
                            }
                        },
                    )
                    .product()
            })
            .collect()
    }

    pub fn eigenfunction_grid(&self, index: &[usize]) -> Result<GridField> {
        self.check_index(index)?;
        let values = (0..self.grid_len()).map(|k| self.eigenfunction(index, &self.grid_point(k))).collect();
        GridField::new(*self, values)
    }

    /// Inf and sup of `w_1(x) / d(x)` over the interior grid.
    pub fn ground_state_bounds_probe(&self) -> GroundStateBounds {
        let ones = vec![1; self.dim];
        let dist = self.distance_grid();
        let mut bounds = GroundStateBounds { c0_hat: f64::INFINITY, big_c0_hat: 0.0 };
        for (k, d) in dist.iter().enumerate() {
            let ratio = self.eigenfunction(&ones, &self.grid_point(k)) / d;
            bounds.c0_hat = bounds.c0_hat.min(ratio);
            bounds.big_c0_hat = bounds.big_c0_hat.max(ratio);
        }
        bounds
    }
}

/// Grid estimates of the constants in `c0 d(x) <= w_1(x) <= C0 d(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateBounds {
    pub c0_hat: f64,
    pub big_c0_hat: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_match_closed_form() {
        let line = DomainSpec::interval(PI, 8, 16).unwrap();
        assert_relative_eq!(line.eigenvalue(&[1]).unwrap(), 1.0, epsilon = 1e-14);
        let square = DomainSpec::rectangle([PI, PI], 4, 8).unwrap();
        assert_relative_eq!(square.eigenvalue(&[1, 2]).unwrap(), 5.0, epsilon = 1e-13);
        let short = DomainSpec::interval(2.0, 4, 8).unwrap();
        assert_relative_eq!(short.eigenvalue(&[3]).unwrap(), (1.5 * PI).powi(2), epsilon = 1e-12);
        assert_relative_eq!(short.eigenvalue(&[3]).unwrap(), 22.2066, epsilon = 1e-4);
    }

    #[test]
    fn eigenvalue_index_errors() {
        let line = DomainSpec::interval(PI, 8, 16).unwrap();
        assert!(matches!(line.eigenvalue(&[0]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(line.eigenvalue(&[9]), Err(Error::IndexOutOfRange { .. })));
        assert!(line.eigenvalue(&[1, 1]).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(DomainSpec::interval(PI, 8, 15).is_err());
        assert!(DomainSpec::interval(-1.0, 8, 16).is_err());
        assert!(DomainSpec::interval(1.0, 0, 16).is_err());
        assert!(DomainSpec::new(&[1.0; 3], &[1; 3], &[2; 3]).is_err());
    }

    #[test]
    fn canonical_order_is_nondecreasing() {
        let rect = DomainSpec::rectangle([PI, 2.0], 6, 12).unwrap();
        let lambdas = rect.eigenvalues();
        let order = rect.canonical_order();
        assert!(order.windows(2).all(|w| lambdas[w[0]] <= lambdas[w[1]]));
        assert!(lambdas.iter().all(|&l| l > 0.0));
        // multiplicity: (1,2) and (2,1) on the square share λ = 5; lexicographic tie-break
        let square = DomainSpec::rectangle([PI, PI], 3, 6).unwrap();
        let order = square.canonical_order();
        let a = square.flat_mode(&[1, 2]).unwrap();
        let b = square.flat_mode(&[2, 1]).unwrap();
        let pa = order.iter().position(|&k| k == a).unwrap();
        let pb = order.iter().position(|&k| k == b).unwrap();
        assert_eq!(pb, pa + 1);
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let rect = DomainSpec::rectangle([1.0, 2.0], 5, 10).unwrap();
        for k in 0..rect.mode_count() {
            assert_eq!(rect.flat_mode(&rect.mode_index(k)).unwrap(), k);
        }
    }

    #[test]
    fn eigenfunction_grid_examples() {
        let line = DomainSpec::interval(PI, 4, 16).unwrap();
        let w = line.eigenfunction_grid(&[1]).unwrap();
        for (i, v) in w.values().iter().enumerate() {
            let x = line.node(0, i);
            assert_relative_eq!(*v, (2.0 / PI).sqrt() * x.sin(), epsilon = 1e-14);
        }
        let square = DomainSpec::rectangle([PI, PI], 4, 8).unwrap();
        let w = square.eigenfunction_grid(&[1, 1]).unwrap();
        for (k, v) in w.values().iter().enumerate() {
            let x = square.grid_point(k);
            assert_relative_eq!(*v, 2.0 / PI * x[0].sin() * x[1].sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn eigenfunctions_are_orthonormal_under_grid_quadrature() {
        let rect = DomainSpec::rectangle([PI, 1.5], 4, 9).unwrap();
        let fields: Vec<_> =
            (0..rect.mode_count()).map(|k| rect.eigenfunction_grid(&rect.mode_index(k)).unwrap()).collect();
        for (a, fa) in fields.iter().enumerate() {
            for (b, fb) in fields.iter().enumerate() {
                let gram = fa.inner(fb).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((gram - expected).abs() < 1e-10, "gram[{a}][{b}] = {gram}");
            }
        }
    }

    #[test]
    fn distance_to_boundary_examples() {
        let line = DomainSpec::interval(PI, 4, 8).unwrap();
        assert_relative_eq!(line.distance_to_boundary(&[PI / 2.0]).unwrap(), PI / 2.0);
        assert_eq!(line.distance_to_boundary(&[0.0]).unwrap(), 0.0);
        assert_eq!(line.distance_to_boundary(&[PI]).unwrap(), 0.0);
        let square = DomainSpec::rectangle([PI, PI], 4, 8).unwrap();
        assert_relative_eq!(square.distance_to_boundary(&[0.1, 1.0]).unwrap(), 0.1);
        assert!(matches!(square.distance_to_boundary(&[-0.1, 1.0]), Err(Error::PointOutside { .. })));
        assert!(square.distance_to_boundary(&[1.0, 4.0]).is_err());
    }

    #[test]
    fn ground_state_ratio_bounds_on_the_interval() {
        let line = DomainSpec::interval(PI, 8, 255).unwrap();
        let b = line.ground_state_bounds_probe();
        let amp = (2.0 / PI).sqrt();
        // inf at the midpoint (odd N puts a node there), sup approaches amp at the boundary
        assert_relative_eq!(b.c0_hat, amp / (PI / 2.0), epsilon = 1e-12);
        assert!(b.big_c0_hat < amp && b.big_c0_hat > amp * (1.0 - 1e-4));
        assert!(b.c0_hat > 0.0 && b.c0_hat <= b.big_c0_hat);
    }

    #[test]
    fn ground_state_ratio_bounds_on_a_rectangle() {
        let rect = DomainSpec::rectangle([PI, 2.0], 4, 31).unwrap();
        let b = rect.ground_state_bounds_probe();
        assert!(b.c0_hat > 0.0 && b.c0_hat <= b.big_c0_hat && b.big_c0_hat.is_finite());
    }

    #[test]
    fn refined_grid_contains_coarse_nodes() {
        let rect = DomainSpec::rectangle([PI, 2.0], 4, 9).unwrap();
        let fine = rect.refined();
        for axis in 0..2 {
            for i in 0..rect.nodes()[axis] {
                assert_relative_eq!(rect.node(axis, i), fine.node(axis, 2 * i + 1), epsilon = 1e-14);
            }
        }
    }
}
