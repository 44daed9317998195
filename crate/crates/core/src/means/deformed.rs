use crate::error::{Error, Result};
use crate::means::binary::SqrtPair;
use crate::means::{check_power_q, MeanSpec, RepresentingFunction, SolveDiagnostics, Weights};
use crate::tensor::{norm, thompson_with_inv_sqrt, GaugeNorm, HermitianTensor, ToleranceConfig};

/// Steps below this size are also checked against the rounding floor of the metric.
const NOISE_PROBE: f64 = 1e-10;

/// Multiple of the computed self-distance `d_T(X, X)` that counts as zero.
const NOISE_FACTOR: f64 = 8.0;

/// One application of `G(X) = base(X s A_1, .., X s A_k)`.
fn step(
    base: &MeanSpec,
    sigma: &RepresentingFunction,
    x: &HermitianTensor,
    roots: &SqrtPair,
    inputs: &[HermitianTensor],
    tol: &ToleranceConfig,
) -> Result<HermitianTensor> {
    let connected = inputs
        .iter()
        .map(|a| roots.mean_with(x, a, sigma))
        .collect::<Result<Vec<_>>>()
        .map_err(breakdown)?;
    base.eval(&connected, tol)
}

fn breakdown(e: Error) -> Error {
    match e {
        Error::NotPositiveDefinite { min_eigenvalue } => Error::NumericalBreakdown(format!(
            "iterate left the positive-definite cone (eigenvalue {min_eigenvalue:e})"
        )),
        other => other,
    }
}

/// `|X - base(X s A_1, .., X s A_k)|_spec`.
pub fn fixed_point_residual(
    base: &MeanSpec,
    sigma: &RepresentingFunction,
    x: &HermitianTensor,
    inputs: &[HermitianTensor],
    tol: &ToleranceConfig,
) -> Result<f64> {
    let roots = SqrtPair::new(x)?;
    let g = step(base, sigma, x, &roots, inputs, tol)?;
    Ok(norm(&x.sub(&g)?, GaugeNorm::Spectral))
}

/// Deformed mean of `base` by `sigma`: the unique PD fixed point of
/// `X = base(X s A_1, .., X s A_k)`.
///
/// The iteration starts at `alpha * I` with `alpha = max_i lambda_max(A_i)`,
/// which dominates every input, and stops once consecutive iterates are
/// within `fixed_point_tol` in the Thompson metric. On ill-conditioned
/// iterates the computed `d_T(X, X)` alone can exceed `fixed_point_tol`, so a
/// step within a small multiple of that rounding floor also counts as converged.
pub fn deformed_mean(
    base: &MeanSpec,
    sigma: &RepresentingFunction,
    inputs: &[HermitianTensor],
    tol: &ToleranceConfig,
) -> Result<(HermitianTensor, SolveDiagnostics)> {
    tol.validate()?;
    sigma.validate()?;
    base.weights().check_arity(inputs)?;
    let shape = inputs[0].shape().clone();
    let mut alpha: f64 = 0.0;
    for a in inputs {
        if a.shape() != &shape {
            return Err(Error::ShapeMismatch {
                left: shape.mode_dims().to_vec(),
                right: a.shape().mode_dims().to_vec(),
            });
        }
        let ev = a.eigenvalues();
        let min = ev[ev.len() - 1];
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        alpha = alpha.max(ev[0]);
    }

    let mut x = HermitianTensor::scaled_identity(shape, alpha);
    let mut last_step = f64::INFINITY;
    for iteration in 1..=tol.max_iterations {
        let roots = SqrtPair::new(&x).map_err(breakdown)?;
        let next = step(base, sigma, &x, &roots, inputs, tol)?;
        last_step = if next == x {
            0.0
        } else {
            thompson_with_inv_sqrt(&roots.inv_sqrt, &next).map_err(breakdown)?
        };
        // Below NOISE_PROBE the step is compared against the rounding noise of d_T itself.
        let threshold = if last_step <= NOISE_PROBE {
            tol.fixed_point_tol
                .max(NOISE_FACTOR * thompson_with_inv_sqrt(&roots.inv_sqrt, &x).map_err(breakdown)?)
        } else {
            tol.fixed_point_tol
        };
        x = next;
        if last_step <= threshold {
            let residual_norm = fixed_point_residual(base, sigma, &x, inputs, tol).map_err(breakdown)?;
            return Ok((
                x,
                SolveDiagnostics {
                    iterations: iteration,
                    final_step_thompson: last_step,
                    residual_norm,
                    converged: true,
                },
            ));
        }
    }
    let residual_norm = fixed_point_residual(base, sigma, &x, inputs, tol).unwrap_or(f64::NAN);
    Err(Error::NotConverged {
        diagnostics: SolveDiagnostics {
            iterations: tol.max_iterations,
            final_step_thompson: last_step,
            residual_norm,
            converged: false,
        },
    })
}

/// Weighted power mean `P_{w,q}`.
///
/// For `q > 0` this is the deformed arithmetic mean by `#_q`; for `q < 0`
/// the deformed harmonic mean by `#_{-q}`.
pub fn power_mean(
    w: &Weights,
    q: f64,
    inputs: &[HermitianTensor],
    tol: &ToleranceConfig,
) -> Result<(HermitianTensor, SolveDiagnostics)> {
    check_power_q(q)?;
    if q > 0.0 {
        deformed_mean(&MeanSpec::arithmetic(w.clone()), &RepresentingFunction::power(q), inputs, tol)
    } else {
        deformed_mean(&MeanSpec::harmonic(w.clone()), &RepresentingFunction::power(-q), inputs, tol)
    }
}
