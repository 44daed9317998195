//! Kantorovich constants, Ando-Hiai type inequality checks and their reverse
//! counterparts, and Markov-type tail bounds.
//!
//! Every check evaluates both sides of a Loewner ordering `LHS <= RHS` and
//! reports `margin = lambda_min(RHS - LHS) / |RHS|_spec`; the ordering is
//! said to hold when `margin >= -loewner_tol`.

mod ando_hiai;
mod kantorovich;
mod reverse;
mod tail;

pub use ando_hiai::{check_ah_deformed, check_ah_karcher, check_ah_power};
pub use kantorovich::{kantorovich, kantorovich_f, KantorovichParams};
pub use reverse::{
    check_lemma_contraction, check_lemma_jensen, check_reverse_ah_deformed, check_reverse_ah_power,
    reverse_power_coefficient,
};
pub use tail::{markov_tail_bound, tail_bound_sweep, tail_reports, TailBoundReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{loewner_leq, GaugeNorm, HermitianTensor, ToleranceConfig};

/// Verdict on one Loewner ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub holds: bool,
    /// `lambda_min(RHS - LHS) / |RHS|_spec`.
    pub margin: f64,
    /// Seed of the instance the report was computed on.
    pub witness_seed: u64,
}

/// Tolerances plus the seed recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckContext {
    pub tol: ToleranceConfig,
    pub seed: u64,
}

impl CheckContext {
    pub fn new(tol: ToleranceConfig, seed: u64) -> Self {
        Self { tol, seed }
    }
}

/// Checks `lhs <= rhs` and reports the relative margin.
pub fn compare(name: impl Into<String>, lhs: &HermitianTensor, rhs: &HermitianTensor, ctx: &CheckContext) -> Result<InequalityReport> {
    let diff = rhs.sub(lhs)?;
    let scale = rhs.norm(GaugeNorm::Spectral);
    if !(scale > 0.0) {
        return Err(Error::NumericalBreakdown("right-hand side vanished".into()));
    }
    let margin = diff.lambda_min() / scale;
    Ok(InequalityReport {
        name: name.into(),
        holds: margin >= -ctx.tol.loewner_tol,
        margin,
        witness_seed: ctx.seed,
    })
}

/// `(min_i lambda_min(A_i), max_i lambda_max(A_i))`.
pub fn spectral_window(inputs: &[HermitianTensor]) -> Result<(f64, f64)> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("spectral window of an empty list".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in inputs {
        let ev = a.eigenvalues();
        lo = lo.min(ev[ev.len() - 1]);
        hi = hi.max(ev[0]);
    }
    Ok((lo, hi))
}

/// Verifies `m I <= A_i <= M I` for every input.
pub fn check_window(inputs: &[HermitianTensor], m: f64, big_m: f64, tol: &ToleranceConfig) -> Result<()> {
    if !(m > 0.0 && m <= big_m && big_m.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 < m <= M, got m={m}, M={big_m}")));
    }
    for (index, a) in inputs.iter().enumerate() {
        let lo = HermitianTensor::scaled_identity(a.shape().clone(), m);
        let hi = HermitianTensor::scaled_identity(a.shape().clone(), big_m);
        if !loewner_leq(&lo, a, tol)?.holds || !loewner_leq(a, &hi, tol)?.holds {
            return Err(Error::OutsideWindow { index, m, big_m });
        }
    }
    Ok(())
}

pub(crate) fn powers(inputs: &[HermitianTensor], p: f64) -> Result<Vec<HermitianTensor>> {
    inputs.iter().map(|a| a.pow(p)).collect()
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{sample, RandomPDSource};
    use crate::tensor::TensorShape;

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::from_diagonal(v).unwrap()
    }

    #[test]
    fn compare_margins() {
        let ctx = CheckContext::default();
        let r = compare("x", &diag(&[1.0, 1.0]), &diag(&[2.0, 4.0]), &ctx).unwrap();
        assert!(r.holds);
        assert_eq!(r.margin, 1.0 / 4.0);
        let r = compare("y", &diag(&[3.0, 1.0]), &diag(&[2.0, 4.0]), &ctx).unwrap();
        assert!(!r.holds);
        assert_eq!(r.margin, -1.0 / 4.0);
        let eq = compare("z", &diag(&[2.0]), &diag(&[2.0]), &ctx).unwrap();
        assert!(eq.holds && eq.margin == 0.0);
    }

    #[test]
    fn spectral_window_examples() {
        assert_eq!(spectral_window(&[diag(&[1.0, 4.0])]).unwrap(), (1.0, 4.0));
        assert_eq!(spectral_window(&[diag(&[1.0, 1.0]), diag(&[2.0, 2.0])]).unwrap(), (1.0, 2.0));
        assert!(spectral_window(&[]).is_err());

        let src = RandomPDSource::spectral_uniform(TensorShape::square(3).unwrap(), 0.5, 4.0, 8).unwrap();
        let pair = [sample(&src, 0).unwrap(), sample(&src, 1).unwrap()];
        let all: Vec<f64> = pair.iter().flat_map(|a| a.eigenvalues()).collect();
        let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(spectral_window(&pair).unwrap(), (lo, hi));
    }

    #[test]
    fn window_violation_reported() {
        let tol = ToleranceConfig::default();
        let inputs = [diag(&[1.0, 2.0]), diag(&[1.5, 3.0])];
        assert!(check_window(&inputs, 1.0, 3.0, &tol).is_ok());
        assert!(matches!(
            check_window(&inputs, 1.0, 2.0, &tol),
            Err(Error::OutsideWindow { index: 1, .. })
        ));
    }
}
