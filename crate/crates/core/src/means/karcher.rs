use crate::error::{Error, Result};
use crate::means::binary::SqrtPair;
use crate::means::deformed::power_mean;
use crate::means::{weighted_arithmetic, SolveDiagnostics, Weights};
use crate::tensor::{norm, GaugeNorm, HermitianTensor, Spectrum, ToleranceConfig};

/// Residual tolerance of the Karcher solver, relative to `max_i |log A_i|`.
pub const KARCHER_REL_TOL: f64 = 1e-8;

/// Smallest damping factor tried before the solver gives up on decreasing the residual.
const MIN_STEP: f64 = 1e-10;

struct KarcherState {
    x: HermitianTensor,
    roots: SqrtPair,
    residual: Spectrum,
    residual_norm: f64,
}

impl KarcherState {
    fn at(x: HermitianTensor, w: &Weights, inputs: &[HermitianTensor]) -> Result<Self> {
        let roots = SqrtPair::new(&x)?;
        let residual = residual_with(&roots, w, inputs)?.eig()?;
        let residual_norm = residual.lambda_max().abs().max(residual.lambda_min().abs());
        Ok(Self {
            x,
            roots,
            residual,
            residual_norm,
        })
    }
}

fn residual_with(roots: &SqrtPair, w: &Weights, inputs: &[HermitianTensor]) -> Result<HermitianTensor> {
    let logs = inputs
        .iter()
        .map(|a| a.sandwich_hermitian(&roots.inv_sqrt).log())
        .collect::<Result<Vec<_>>>()?;
    HermitianTensor::linear_combination(w.as_slice(), &logs)
}

/// Karcher residual `R = sum_i w_i log(X^{-1/2} A_i X^{-1/2})` and `|R|_spec`.
pub fn karcher_residual(x: &HermitianTensor, w: &Weights, inputs: &[HermitianTensor]) -> Result<(HermitianTensor, f64)> {
    w.check_arity(inputs)?;
    for a in inputs {
        a.require_pd()?;
    }
    let r = residual_with(&SqrtPair::new(x)?, w, inputs)?;
    let n = norm(&r, GaugeNorm::Spectral);
    Ok((r, n))
}

/// Weighted Karcher mean: the PD solution of `sum_i w_i log(X^{-1/2} A_i X^{-1/2}) = 0`.
///
/// Damped Riemannian gradient iteration `X <- X^{1/2} exp(theta R) X^{1/2}`
/// started at the weighted arithmetic mean. `theta` starts at 1 and is halved
/// whenever a step fails to reduce `|R|`.
pub fn karcher_mean(w: &Weights, inputs: &[HermitianTensor], tol: &ToleranceConfig) -> Result<(HermitianTensor, SolveDiagnostics)> {
    tol.validate()?;
    w.check_arity(inputs)?;
    let mut scale: f64 = 0.0;
    for a in inputs {
        let s = a.eig()?;
        s.require_pd()?;
        scale = scale.max(s.lambda_max().ln().abs()).max(s.lambda_min().ln().abs());
    }
    let accept = (KARCHER_REL_TOL * scale).max(tol.fixed_point_tol);
    let polish = tol.fixed_point_tol * scale.max(1.0);

    let mut state = KarcherState::at(weighted_arithmetic(w, inputs)?, w, inputs)?;
    let mut theta = 1.0;
    let mut last_step = 0.0;
    let mut iterations = 0;
    while state.residual_norm > polish && iterations < tol.max_iterations {
        iterations += 1;
        let candidate = state
            .residual
            .map(|v| (theta * v).exp())?
            .sandwich_hermitian(&state.roots.sqrt);
        let next = KarcherState::at(candidate, w, inputs)?;
        if next.residual_norm < state.residual_norm {
            // d_T(X, X') = theta * |R| for this update
            last_step = theta * state.residual_norm;
            state = next;
        } else {
            theta *= 0.5;
            if theta < MIN_STEP {
                break;
            }
        }
    }
    let diagnostics = SolveDiagnostics {
        iterations,
        final_step_thompson: last_step,
        residual_norm: state.residual_norm,
        converged: state.residual_norm <= accept,
    };
    if !diagnostics.converged {
        return Err(Error::NotConverged { diagnostics });
    }
    Ok((state.x, diagnostics))
}

/// Power means `P_{w,q}` along `q = 2^{-1}, .., 2^{-levels}`, which decrease to the Karcher mean.
pub fn karcher_power_limit(
    w: &Weights,
    inputs: &[HermitianTensor],
    levels: u32,
    tol: &ToleranceConfig,
) -> Result<Vec<(f64, HermitianTensor)>> {
    (1..=levels)
        .map(|j| {
            let q = 0.5f64.powi(j as i32);
            power_mean(w, q, inputs, tol).map(|(x, _)| (q, x))
        })
        .collect()
}

/// Central difference of the Karcher mean in input `index` along `direction`.
pub fn karcher_sensitivity(
    w: &Weights,
    inputs: &[HermitianTensor],
    index: usize,
    direction: &HermitianTensor,
    h: f64,
    tol: &ToleranceConfig,
) -> Result<HermitianTensor> {
    w.check_arity(inputs)?;
    if index >= inputs.len() {
        return Err(Error::InvalidParameter(format!("input index {index} out of range")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let shifted = |sign: f64| -> Result<Vec<HermitianTensor>> {
        let mut v = inputs.to_vec();
        v[index] = inputs[index].add(&direction.scale(sign * h))?;
        let min = v[index].lambda_min();
        if !(min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step {h} drives input {index} out of the PD cone (eigenvalue {min:e})"
            )));
        }
        Ok(v)
    };
    let plus = karcher_mean(w, &shifted(1.0)?, tol)?.0;
    let minus = karcher_mean(w, &shifted(-1.0)?, tol)?.0;
    Ok(plus.sub(&minus)?.scale(0.5 / h))
}
