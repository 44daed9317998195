use crate::error::Result;
use crate::means::{MeanSpec, SolveDiagnostics, Weights};
use crate::tensor::{HermitianTensor, ToleranceConfig};

/// `sum_i w_i A_i`.
pub fn weighted_arithmetic(w: &Weights, inputs: &[HermitianTensor]) -> Result<HermitianTensor> {
    w.check_arity(inputs)?;
    HermitianTensor::linear_combination(w.as_slice(), inputs)
}

/// `(sum_i w_i A_i^{-1})^{-1}`.
pub fn weighted_harmonic(w: &Weights, inputs: &[HermitianTensor]) -> Result<HermitianTensor> {
    w.check_arity(inputs)?;
    let inverses = inputs.iter().map(HermitianTensor::inverse).collect::<Result<Vec<_>>>()?;
    HermitianTensor::linear_combination(w.as_slice(), &inverses)?.inverse()
}

/// Evaluates `M*(A) = M(A_1^{-1}, .., A_k^{-1})^{-1}`.
pub fn adjoint_evaluate(
    of: &MeanSpec,
    inputs: &[HermitianTensor],
    tol: &ToleranceConfig,
) -> Result<(HermitianTensor, SolveDiagnostics)> {
    let inverses = inputs.iter().map(HermitianTensor::inverse).collect::<Result<Vec<_>>>()?;
    let (x, diag) = of.evaluate(&inverses, tol)?;
    Ok((x.inverse()?, diag))
}
