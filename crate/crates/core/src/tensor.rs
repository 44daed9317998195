//! Even-order tensors in matricized form.
//!
//! A tensor in `C^{I_1 x .. x I_N x I_1 x .. x I_N}` is stored as a `D x D`
//! complex matrix with `D = I_1 * .. * I_N`: the first `N` indices are
//! flattened row-major into the row index and the last `N` into the column
//! index. Under this encoding the order-`N` Einstein product is ordinary
//! matrix multiplication, and Hermitian tensors are Hermitian matrices, so
//! every spectral operation reduces to a Hermitian eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when validating Hermitian symmetry on input.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Mode dimensions `I_1..I_N` of an even-order tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorShape {
    mode_dims: Vec<usize>,
    flat_dim: usize,
}

impl TensorShape {
    pub fn new(mode_dims: Vec<usize>) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(Error::InvalidShape("mode_dims must be non-empty".into()));
        }
        if mode_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!(
                "mode dimensions must be positive, got {mode_dims:?}"
            )));
        }
        let flat_dim = mode_dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape("flat dimension overflows".into()))?;
        Ok(Self { mode_dims, flat_dim })
    }

    /// Order-2 shape (a plain `d x d` matrix).
    pub fn square(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    /// Number of modes `N` on each side.
    pub fn order(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn flat_dim(&self) -> usize {
        self.flat_dim
    }

    /// Row-major flattening of a multi-index over the mode dimensions.
    pub fn flatten(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.mode_dims.len());
        index
            .iter()
            .zip(&self.mode_dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    /// Inverse of [`TensorShape::flatten`].
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.mode_dims.len()];
        for (slot, &d) in index.iter_mut().zip(&self.mode_dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        index
    }
}

impl TryFrom<Vec<usize>> for TensorShape {
    type Error = Error;

    fn try_from(mode_dims: Vec<usize>) -> Result<Self> {
        Self::new(mode_dims)
    }
}

impl From<TensorShape> for Vec<usize> {
    fn from(shape: TensorShape) -> Self {
        shape.mode_dims
    }
}

fn check_same_shape(a: &TensorShape, b: &TensorShape) -> Result<()> {
    if a != b {
        return Err(Error::ShapeMismatch {
            left: a.mode_dims.clone(),
            right: b.mode_dims.clone(),
        });
    }
    Ok(())
}

fn check_matrix_dims(shape: &TensorShape, m: &DMatrix<Complex64>) -> Result<()> {
    let d = shape.flat_dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidShape(format!(
            "expected {d}x{d} matricization, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// A general (not necessarily Hermitian) square even-order tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: TensorShape,
    data: DMatrix<Complex64>,
}

impl Tensor {
    pub fn new(shape: TensorShape, data: DMatrix<Complex64>) -> Result<Self> {
        check_matrix_dims(&shape, &data)?;
        Ok(Self { shape, data })
    }

    pub fn identity(shape: TensorShape) -> Self {
        let d = shape.flat_dim();
        Self {
            shape,
            data: DMatrix::identity(d, d),
        }
    }

    /// Builds a tensor from its entries `T[i_1..i_N, j_1..j_N]`.
    pub fn from_fn(shape: TensorShape, mut f: impl FnMut(&[usize], &[usize]) -> Complex64) -> Self {
        let d = shape.flat_dim();
        let data = DMatrix::from_fn(d, d, |r, c| f(&shape.unflatten(r), &shape.unflatten(c)));
        Self { shape, data }
    }

    /// Entry at the multi-index `(i_1..i_N, j_1..j_N)`.
    pub fn get(&self, row: &[usize], col: &[usize]) -> Complex64 {
        self.data[(self.shape.flatten(row), self.shape.flatten(col))]
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn conj_transpose(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.adjoint(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.scale(s),
        }
    }

    pub fn min_singular_value(&self) -> f64 {
        self.data
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

impl From<HermitianTensor> for Tensor {
    fn from(h: HermitianTensor) -> Self {
        Self {
            shape: h.shape,
            data: h.data,
        }
    }
}

/// Order-`N` Einstein product; the matricization is the matrix product.
pub fn einstein_product(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    check_same_shape(&a.shape, &b.shape)?;
    Ok(Tensor {
        shape: a.shape.clone(),
        data: &a.data * &b.data,
    })
}

/// Unitarily invariant norm selected by its gauge function on `|eigenvalues|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeNorm {
    /// `max |lambda_i|`
    #[default]
    Spectral,
    /// `sum |lambda_i|`
    Trace,
    /// `sqrt(sum lambda_i^2)`
    Frobenius,
}

impl GaugeNorm {
    /// The gauge function applied to a vector of singular values.
    pub fn gauge(self, abs_values: &[f64]) -> f64 {
        match self {
            GaugeNorm::Spectral => abs_values.iter().copied().fold(0.0, f64::max),
            GaugeNorm::Trace => abs_values.iter().sum(),
            GaugeNorm::Frobenius => abs_values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Tolerances shared by comparisons and iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    /// Relative slack for Loewner comparisons.
    pub loewner_tol: f64,
    /// Threshold below which eigen/singular values count as zero.
    pub eig_tol: f64,
    /// Stopping threshold on the Thompson distance between iterates.
    pub fixed_point_tol: f64,
    pub max_iterations: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            loewner_tol: 1e-9,
            eig_tol: 1e-10,
            fixed_point_tol: 1e-12,
            max_iterations: 10_000,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.loewner_tol, self.eig_tol, self.fixed_point_tol]
            .iter()
            .all(|t| t.is_finite() && *t >= 0.0);
        if !all_finite {
            return Err(Error::InvalidParameter(
                "tolerances must be finite and nonnegative".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Eigenvalues (descending) and the unitary eigenbasis of a Hermitian tensor.
#[derive(Debug, Clone)]
pub struct Spectrum {
    shape: TensorShape,
    eigenvalues: Vec<f64>,
    eigenbasis: DMatrix<Complex64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the orthonormal eigenvectors, ordered like the eigenvalues.
    pub fn eigenbasis(&self) -> &DMatrix<Complex64> {
        &self.eigenbasis
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is never empty")
    }

    pub fn require_pd(&self) -> Result<()> {
        let min = self.lambda_min();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(())
    }

    /// `eigenbasis * diag(f(lambda_i)) * eigenbasis^H`, re-Hermitized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<HermitianTensor> {
        let values = self
            .eigenvalues
            .iter()
            .map(|&l| {
                let v = f(l);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::FunctionUndefined { eigenvalue: l })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.rebuild(&values))
    }

    fn rebuild(&self, values: &[f64]) -> HermitianTensor {
        let mut scaled = self.eigenbasis.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(values) {
            col.scale_mut(v);
        }
        let data = &scaled * self.eigenbasis.adjoint();
        HermitianTensor {
            shape: self.shape.clone(),
            data: hermitize(&data),
        }
    }

    /// Reassembles the source tensor from the decomposition.
    pub fn reconstruct(&self) -> HermitianTensor {
        self.rebuild(&self.eigenvalues)
    }
}

/// Result of a Loewner comparison `X <= Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoewnerComparison {
    pub holds: bool,
    /// `lambda_min(Y - X)`.
    pub margin: f64,
    /// `max(1, |X|_spec, |Y|_spec)`, the scale the tolerance is relative to.
    pub scale: f64,
}

/// A Hermitian even-order tensor in matricized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorFile", into = "TensorFile")]
pub struct HermitianTensor {
    shape: TensorShape,
    data: DMatrix<Complex64>,
}

/// On-disk tensor layout: row-major real and imaginary parts of the matricization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub mode_dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TryFrom<TensorFile> for HermitianTensor {
    type Error = Error;

    fn try_from(file: TensorFile) -> Result<Self> {
        Self::from_file(&file)
    }
}

impl From<HermitianTensor> for TensorFile {
    fn from(h: HermitianTensor) -> Self {
        h.to_file()
    }
}

impl HermitianTensor {
    /// Validates Hermitian symmetry and stores the exact Hermitian part.
    pub fn new(shape: TensorShape, data: DMatrix<Complex64>) -> Result<Self> {
        check_matrix_dims(&shape, &data)?;
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        let sym = hermitize(&data);
        let deviation = (&data - data.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let spec = sym
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let tolerance = HERMITIAN_TOL * (1.0 + spec);
        if deviation > tolerance {
            return Err(Error::NotHermitian { deviation, tolerance });
        }
        Ok(Self { shape, data: sym })
    }

    /// Wraps a plain `d x d` Hermitian matrix as an order-2 tensor.
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidShape("matrix must be square".into()));
        }
        let shape = TensorShape::square(data.nrows())?;
        Self::new(shape, data)
    }

    /// Hermitian part `(T + T^H) / 2` of a general tensor.
    pub fn hermitian_part(t: &Tensor) -> Self {
        Self {
            shape: t.shape.clone(),
            data: hermitize(&t.data),
        }
    }

    pub fn identity(shape: TensorShape) -> Self {
        Self::scaled_identity(shape, 1.0)
    }

    pub fn scaled_identity(shape: TensorShape, c: f64) -> Self {
        let d = shape.flat_dim();
        Self {
            shape,
            data: DMatrix::from_diagonal_element(d, d, Complex64::new(c, 0.0)),
        }
    }

    /// Real diagonal tensor over an order-2 shape.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let shape = TensorShape::square(diag.len())?;
        Self::from_diagonal_with_shape(shape, diag)
    }

    pub fn from_diagonal_with_shape(shape: TensorShape, diag: &[f64]) -> Result<Self> {
        if diag.len() != shape.flat_dim() {
            return Err(Error::InvalidShape(format!(
                "diagonal of length {} for flat dimension {}",
                diag.len(),
                shape.flat_dim()
            )));
        }
        if diag.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        let d = diag.len();
        let data = DMatrix::from_fn(d, d, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(Self { shape, data })
    }

    pub fn from_file(file: &TensorFile) -> Result<Self> {
        let shape = TensorShape::new(file.mode_dims.clone())?;
        let d = shape.flat_dim();
        if file.re.len() != d * d || file.im.len() != d * d {
            return Err(Error::Format(format!(
                "expected {} entries in re and im, found {} and {}",
                d * d,
                file.re.len(),
                file.im.len()
            )));
        }
        let data = DMatrix::from_fn(d, d, |r, c| Complex64::new(file.re[r * d + c], file.im[r * d + c]));
        Self::new(shape, data)
    }

    pub fn to_file(&self) -> TensorFile {
        let d = self.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let z = self.data[(r, c)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        TensorFile {
            mode_dims: self.shape.mode_dims.clone(),
            re,
            im,
        }
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    /// Flat dimension `D`.
    pub fn dim(&self) -> usize {
        self.shape.flat_dim()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn as_tensor(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_shape(&self.shape, &other.shape)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_same_shape(&self.shape, &other.shape)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: &self.data - &other.data,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.scale(s),
        }
    }

    /// `sum_i c_i T_i`, accumulated in index order.
    pub fn linear_combination(coeffs: &[f64], tensors: &[Self]) -> Result<Self> {
        let first = tensors
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty linear combination".into()))?;
        if coeffs.len() != tensors.len() {
            return Err(Error::ArityMismatch {
                expected: coeffs.len(),
                found: tensors.len(),
            });
        }
        let d = first.dim();
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        for (&c, t) in coeffs.iter().zip(tensors) {
            check_same_shape(&first.shape, &t.shape)?;
            acc += t.data.scale(c);
        }
        Ok(Self {
            shape: first.shape.clone(),
            data: acc,
        })
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    /// Eigenvalues in descending order, without eigenvectors.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.data.symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues().last().expect("non-empty")
    }

    pub fn eig(&self) -> Result<Spectrum> {
        hermitian_eig(self)
    }

    pub fn is_pd(&self) -> bool {
        self.lambda_min() > 0.0
    }

    pub fn require_pd(&self) -> Result<()> {
        let min = self.lambda_min();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        Ok(())
    }

    /// Real power of a PD tensor; `p = 1` returns the tensor unchanged.
    pub fn pow(&self, p: f64) -> Result<Self> {
        if p == 1.0 {
            return Ok(self.clone());
        }
        let s = self.eig()?;
        s.require_pd()?;
        s.map(|x| x.powf(p))
    }

    pub fn sqrt(&self) -> Result<Self> {
        self.pow(0.5)
    }

    pub fn log(&self) -> Result<Self> {
        let s = self.eig()?;
        s.require_pd()?;
        s.map(f64::ln)
    }

    pub fn exp(&self) -> Result<Self> {
        self.eig()?.map(f64::exp)
    }

    /// Inverse of a PD tensor via Cholesky.
    pub fn inverse(&self) -> Result<Self> {
        let chol = self
            .data
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite {
                min_eigenvalue: self.lambda_min(),
            })?;
        // the complex factorization can succeed with a non-real pivot on indefinite input
        if chol.l_dirty().diagonal().iter().any(|d| !(d.re > 0.0) || d.im.abs() > 0.0) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: self.lambda_min(),
            });
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: hermitize(&chol.inverse()),
        })
    }

    /// `|H| = U diag(|lambda|) U^H`.
    pub fn abs(&self) -> Result<Self> {
        self.eig()?.map(f64::abs)
    }

    pub fn norm(&self, gauge: GaugeNorm) -> f64 {
        norm(self, gauge)
    }

    /// `C^H * self * C` for any square `C` of matching dimension, re-Hermitized.
    pub(crate) fn sandwich(&self, c: &DMatrix<Complex64>) -> Self {
        let data = c.adjoint() * &self.data * c;
        Self {
            shape: self.shape.clone(),
            data: hermitize(&data),
        }
    }

    /// `A * self * A` for Hermitian `A`.
    pub(crate) fn sandwich_hermitian(&self, a: &Self) -> Self {
        let data = &a.data * &self.data * &a.data;
        Self {
            shape: self.shape.clone(),
            data: hermitize(&data),
        }
    }

    /// Maximum absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl From<HermitianTensor> for DMatrix<Complex64> {
    fn from(h: HermitianTensor) -> Self {
        h.data
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted descending.
pub fn hermitian_eig(h: &HermitianTensor) -> Result<Spectrum> {
    let d = h.dim();
    let eig = SymmetricEigen::try_new(h.data.clone(), f64::EPSILON, 1000 * d.max(1))
        .ok_or(Error::EigenSolverFailed)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenbasis = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        shape: h.shape.clone(),
        eigenvalues,
        eigenbasis,
    })
}

/// `U diag(f(lambda_i)) U^H` for a scalar function `f`.
pub fn apply_spectral_function(h: &HermitianTensor, f: impl Fn(f64) -> f64) -> Result<HermitianTensor> {
    h.eig()?.map(f)
}

pub fn norm(h: &HermitianTensor, gauge: GaugeNorm) -> f64 {
    let abs: Vec<f64> = h.eigenvalues().iter().map(|v| v.abs()).collect();
    gauge.gauge(&abs)
}

/// Tests `X <= Y` in the Loewner order up to `loewner_tol * max(1, |X|, |Y|)`.
pub fn loewner_leq(x: &HermitianTensor, y: &HermitianTensor, tol: &ToleranceConfig) -> Result<LoewnerComparison> {
    let diff = y.sub(x)?;
    let margin = diff.lambda_min();
    let scale = 1f64
        .max(norm(x, GaugeNorm::Spectral))
        .max(norm(y, GaugeNorm::Spectral));
    Ok(LoewnerComparison {
        holds: margin >= -tol.loewner_tol * scale,
        margin,
        scale,
    })
}

/// Thompson metric `max_i |log lambda_i(X^{-1/2} Y X^{-1/2})|`.
pub fn thompson_metric(x: &HermitianTensor, y: &HermitianTensor) -> Result<f64> {
    check_same_shape(&x.shape, &y.shape)?;
    let sx = x.eig()?;
    sx.require_pd()?;
    let x_inv_sqrt = sx.map(|v| v.sqrt().recip())?;
    thompson_with_inv_sqrt(&x_inv_sqrt, y)
}

/// Thompson distance when `X^{-1/2}` is already known.
pub(crate) fn thompson_with_inv_sqrt(x_inv_sqrt: &HermitianTensor, y: &HermitianTensor) -> Result<f64> {
    let inner = y.sandwich_hermitian(x_inv_sqrt);
    let ev = inner.eigenvalues();
    let (max, min) = (ev[0], ev[ev.len() - 1]);
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(max.ln().abs().max(min.ln().abs()))
}

/// `Z^H * A * Z` for invertible `Z`, re-Hermitized.
pub fn congruence(a: &HermitianTensor, z: &Tensor, tol: &ToleranceConfig) -> Result<HermitianTensor> {
    check_same_shape(&a.shape, &z.shape)?;
    let smin = z.min_singular_value();
    if !(smin > tol.eig_tol) {
        return Err(Error::Singular {
            min_singular_value: smin,
        });
    }
    Ok(a.sandwich(&z.data))
}
