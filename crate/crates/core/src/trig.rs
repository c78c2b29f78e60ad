//! Tensor-product sine/cosine series on a rectangle and separable evaluation.
//!
//! Sine fields are the Dirichlet expansions; cosine factors appear as
//! derivatives of sine fields and as smooth multipliers. A product whose
//! factors are odd in total per axis (sin·sin·sin, sin·cos·cos, ...) is again
//! a finite sine series, which is what makes the dealiased products exact.

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `sqrt(2/L) sin(kπx/L)`, `k >= 1`
    Sin,
    /// `sqrt(2/L) cos(kπx/L)`, `k >= 0`
    Cos,
}

impl Family {
    pub fn first_mode(self) -> usize {
        match self {
            Family::Sin => 1,
            Family::Cos => 0,
        }
    }

    pub fn eval(self, length: f64, k: usize, x: f64) -> f64 {
        let arg = k as f64 * PI * x / length;
        let amp = (2.0 / length).sqrt();
        match self {
            Family::Sin => amp * arg.sin(),
            Family::Cos => amp * arg.cos(),
        }
    }
}

/// Dense row-major matrix used for separable transforms.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }
}

/// Applies `mats[axis]` along each axis of a row-major tensor of shape
/// `shape` (`shape[axis] == mats[axis].cols`).
pub(crate) fn separable(data: &[f64], shape: &[usize], mats: &[Matrix]) -> Vec<f64> {
    debug_assert_eq!(shape.len(), mats.len());
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    for (axis, mat) in mats.iter().enumerate() {
        debug_assert_eq!(mat.cols, cur_shape[axis]);
        let outer: usize = cur_shape[..axis].iter().product();
        let inner: usize = cur_shape[axis + 1..].iter().product();
        let mut next = vec![0.0; outer * mat.rows * inner];
        for o in 0..outer {
            for r in 0..mat.rows {
                let row = &mat.data[r * mat.cols..(r + 1) * mat.cols];
                let dst = &mut next[(o * mat.rows + r) * inner..(o * mat.rows + r + 1) * inner];
                for (c, &m) in row.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let src = &cur[(o * mat.cols + c) * inner..(o * mat.cols + c + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += m * s;
                    }
                }
            }
        }
        cur = next;
        cur_shape[axis] = mat.rows;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    lengths: Vec<f64>,
    families: Vec<Family>,
    counts: Vec<usize>,
    coeffs: Vec<f64>,
}

impl TrigSeries {
    /// `counts[axis]` modes starting at the family's first mode; coefficients row-major.
    pub fn new(lengths: &[f64], families: &[Family], counts: &[usize], coeffs: Vec<f64>) -> Self {
        assert_eq!(lengths.len(), families.len());
        assert_eq!(lengths.len(), counts.len());
        assert_eq!(coeffs.len(), counts.iter().product::<usize>());
        TrigSeries { lengths: lengths.to_vec(), families: families.to_vec(), counts: counts.to_vec(), coeffs }
    }

    /// A constant function on the rectangle (cosine mode 0 in every axis).
    pub fn constant(lengths: &[f64], value: f64) -> Self {
        let scale: f64 = lengths.iter().map(|l| (l / 2.0).sqrt()).product();
        let dim = lengths.len();
        TrigSeries::new(lengths, &vec![Family::Cos; dim], &vec![1; dim], vec![value * scale])
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest mode number present along `axis`.
    pub fn bandwidth(&self, axis: usize) -> usize {
        (self.families[axis].first_mode() + self.counts[axis]).saturating_sub(1)
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= factor);
        self
    }

    /// Exact derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> TrigSeries {
        let length = self.lengths[axis];
        let family = self.families[axis];
        let (new_family, new_count, offset, sign) = match family {
            // sin(kx)' = k cos(kx): modes 1..=K become cosine modes 0..=K with mode 0 empty
            Family::Sin => (Family::Cos, self.counts[axis] + 1, 1usize, 1.0),
            // cos(kx)' = -k sin(kx): modes 0..K-1 become sine modes 1..K-1
            Family::Cos => (Family::Sin, self.counts[axis].saturating_sub(1), 0usize, -1.0),
        };
        let mut counts = self.counts.clone();
        counts[axis] = new_count;
        let mut families = self.families.clone();
        families[axis] = new_family;
        let outer: usize = self.counts[..axis].iter().product();
        let inner: usize = self.counts[axis + 1..].iter().product();
        let mut coeffs = vec![0.0; counts.iter().product()];
        for o in 0..outer {
            for k in 0..self.counts[axis] {
                let mode = family.first_mode() + k;
                let dst_k = match family {
                    Family::Sin => k + offset,
                    Family::Cos => {
                        if mode == 0 {
                            continue;
                        }
                        mode - 1
                    }
                };
                let factor = sign * mode as f64 * PI / length;
                for i in 0..inner {
                    coeffs[(o * new_count + dst_k) * inner + i] =
                        factor * self.coeffs[(o * self.counts[axis] + k) * inner + i];
                }
            }
        }
        TrigSeries { lengths: self.lengths.clone(), families, counts, coeffs }
    }

    /// Values on the tensor grid `nodes[0] x nodes[1] x ...` (row-major).
    pub fn eval_tensor(&self, nodes: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(nodes.len(), self.dim());
        let shape: Vec<usize> = nodes.iter().map(Vec::len).collect();
        if self.coeffs.is_empty() {
            return vec![0.0; shape.iter().product()];
        }
        let mats: Vec<Matrix> = (0..self.dim())
            .map(|axis| {
                let fam = self.families[axis];
                let l = self.lengths[axis];
                Matrix::from_fn(nodes[axis].len(), self.counts[axis], |i, k| {
                    fam.eval(l, fam.first_mode() + k, nodes[axis][i])
                })
            })
            .collect();
        separable(&self.coeffs, &self.counts, &mats)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let nodes: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        self.eval_tensor(&nodes)[0]
    }
}

/// Evaluation matrix (nodes x modes) of the normalized sines `1..=modes`.
pub(crate) fn sine_matrix(length: f64, nodes: &[f64], modes: usize) -> Matrix {
    Matrix::from_fn(nodes.len(), modes, |i, k| Family::Sin.eval(length, k + 1, nodes[i]))
}
