use crate::error::{Error, Result};
use crate::means::RepresentingFunction;
use crate::tensor::HermitianTensor;

/// `X^{1/2}` and `X^{-1/2}` from one eigendecomposition of a PD tensor.
#[derive(Debug, Clone)]
pub struct SqrtPair {
    pub sqrt: HermitianTensor,
    pub inv_sqrt: HermitianTensor,
}

impl SqrtPair {
    pub fn new(x: &HermitianTensor) -> Result<Self> {
        let s = x.eig()?;
        s.require_pd()?;
        Ok(Self {
            sqrt: s.map(f64::sqrt)?,
            inv_sqrt: s.map(|v| v.sqrt().recip())?,
        })
    }

    /// `X^{1/2} g(X^{-1/2} Y X^{-1/2}) X^{1/2}` with `g` applied spectrally.
    pub(crate) fn connect(&self, y: &HermitianTensor, g: impl Fn(f64) -> f64) -> Result<HermitianTensor> {
        let inner = y.sandwich_hermitian(&self.inv_sqrt).eig()?;
        inner.require_pd()?;
        Ok(inner.map(g)?.sandwich_hermitian(&self.sqrt))
    }

    /// `X sigma Y` for a Kubo-Ando representing function.
    pub(crate) fn mean_with(&self, x: &HermitianTensor, y: &HermitianTensor, g: &RepresentingFunction) -> Result<HermitianTensor> {
        match g.power_exponent() {
            Some(q) if q == 0.0 => Ok(x.clone()),
            Some(q) if q == 1.0 => Ok(y.clone()),
            Some(q) => self.connect(y, |v| v.powf(q)),
            None => self.connect(y, |v| g.eval(v)),
        }
    }
}

/// Kubo-Ando mean `X^{1/2} g(X^{-1/2} Y X^{-1/2}) X^{1/2}`.
pub fn binary_mean(x: &HermitianTensor, y: &HermitianTensor, g: &RepresentingFunction) -> Result<HermitianTensor> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            left: x.shape().mode_dims().to_vec(),
            right: y.shape().mode_dims().to_vec(),
        });
    }
    y.require_pd()?;
    SqrtPair::new(x)?.mean_with(x, y, g)
}

/// Weighted geometric mean `X #_q Y` for any real `q`.
pub fn geometric_power_binary(x: &HermitianTensor, y: &HermitianTensor, q: f64) -> Result<HermitianTensor> {
    if !q.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent must be finite, got {q}")));
    }
    binary_mean(x, y, &RepresentingFunction::Power { q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::from_diagonal(v).unwrap()
    }

    fn pd3() -> HermitianTensor {
        let c = Complex64::new;
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(3.0, 0.0), c(0.5, 0.5), c(0.1, 0.0),
                c(0.5, -0.5), c(2.0, 0.0), c(0.0, -0.3),
                c(0.1, 0.0), c(0.0, 0.3), c(1.0, 0.0),
            ],
        );
        HermitianTensor::from_matrix(m).unwrap()
    }

    #[test]
    fn identity_base_gives_power() {
        let y = pd3();
        let id = HermitianTensor::identity(y.shape().clone());
        let out = binary_mean(&id, &y, &RepresentingFunction::power(0.3)).unwrap();
        assert!(out.max_abs_diff(&y.pow(0.3).unwrap()) < 1e-13);
    }

    #[test]
    fn equal_arguments_are_fixed() {
        let x = pd3();
        let out = binary_mean(&x, &x, &RepresentingFunction::ArithmeticHalf).unwrap();
        assert!(out.max_abs_diff(&x) < 1e-13);
    }

    #[test]
    fn commuting_scalar_formula() {
        // x^{1-q} y^q entrywise: 1^{1/2} 9^{1/2} = 3, 4^{1/2} 4^{1/2} = 4
        let out = binary_mean(&diag(&[1.0, 4.0]), &diag(&[9.0, 4.0]), &RepresentingFunction::power(0.5)).unwrap();
        let expected: Vec<f64> = [(1.0f64, 9.0f64), (4.0, 4.0)]
            .iter()
            .map(|(x, y)| x.powf(0.5) * y.powf(0.5))
            .collect();
        assert!(out.max_abs_diff(&diag(&expected)) < 1e-14);
    }

    #[test]
    fn geometric_power_endpoints() {
        let x = pd3();
        let y = pd3().pow(2.0).unwrap();
        assert_eq!(geometric_power_binary(&x, &y, 0.0).unwrap(), x);
        assert_eq!(geometric_power_binary(&x, &y, 1.0).unwrap(), y);
        let id = HermitianTensor::identity(x.shape().clone());
        let out = geometric_power_binary(&id, &y, 0.7).unwrap();
        assert!(out.max_abs_diff(&y.pow(0.7).unwrap()) < 1e-12);
        let s = geometric_power_binary(&diag(&[2.0]), &diag(&[8.0]), 0.5).unwrap();
        let oracle = 2f64.powf(0.5) * 8f64.powf(0.5);
        assert!((s.matrix()[(0, 0)].re - oracle).abs() < 1e-14);
        assert!((oracle - 4.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_mean_is_symmetric_at_half() {
        let x = pd3();
        let y = diag(&[1.0, 5.0, 2.0]);
        let a = geometric_power_binary(&x, &y, 0.5).unwrap();
        let b = geometric_power_binary(&y, &x, 0.5).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn non_pd_rejected() {
        let bad = diag(&[1.0, -1.0]);
        let ok = diag(&[1.0, 1.0]);
        let g = RepresentingFunction::power(0.5);
        assert!(binary_mean(&bad, &ok, &g).is_err());
        assert!(binary_mean(&ok, &bad, &g).is_err());
    }
}
