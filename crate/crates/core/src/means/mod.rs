//! Multivariate operator means on the cone of positive-definite tensors.
//!
//! Closed-form means (weighted arithmetic and harmonic) are evaluated
//! directly. Deformed means, which include the weighted power means, are the
//! unique fixed point of `X = M(X s A_1, .., X s A_k)` and are found by
//! iterating that map from a multiple of the identity that dominates every
//! input. The Karcher mean is solved from its gradient equation.

mod binary;
mod deformed;
mod karcher;
mod multivariate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{HermitianTensor, ToleranceConfig};

pub use binary::{binary_mean, geometric_power_binary, SqrtPair};
pub use deformed::{deformed_mean, fixed_point_residual, power_mean};
pub use karcher::{karcher_mean, karcher_power_limit, karcher_residual, karcher_sensitivity};
pub use multivariate::{adjoint_evaluate, weighted_arithmetic, weighted_harmonic};

/// Tolerance on `sum w_i` when validating a probability vector.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A probability vector over the `k` inputs of a mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("at least one weight is required".into()));
        }
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidWeights(format!("weights must be finite and nonnegative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidWeights("at least one weight is required".into()));
        }
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    /// Normalizes nonnegative masses into a probability vector.
    pub fn normalized(masses: &[f64]) -> Result<Self> {
        let sum: f64 = masses.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidWeights("masses must have a positive finite sum".into()));
        }
        Self::new(masses.iter().map(|m| m / sum).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn check_arity(&self, inputs: &[HermitianTensor]) -> Result<()> {
        if inputs.len() != self.0.len() {
            return Err(Error::ArityMismatch {
                expected: self.0.len(),
                found: inputs.len(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        Self::new(w)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Representing function `g` of a Kubo-Ando mean: `X s Y = X^{1/2} g(X^{-1/2} Y X^{-1/2}) X^{1/2}`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RepresentingFunction {
    /// `x^q`, the weighted geometric mean `#_q`.
    Power { q: f64 },
    /// `(1 + x) / 2`.
    ArithmeticHalf,
    #[serde(skip)]
    Custom { name: String, f: ScalarFn, pmi: bool },
    /// `x -> g(x^{1/p})` for `p >= 1`.
    RootDeform { inner: Box<RepresentingFunction>, p: f64 },
    /// `x -> g(x^p)` for `0 < p <= 1`.
    PowerDeform { inner: Box<RepresentingFunction>, p: f64 },
    /// `x -> 1 / g(1 / x)`.
    Adjoint { inner: Box<RepresentingFunction> },
}

impl fmt::Debug for RepresentingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { q } => write!(f, "Power({q})"),
            Self::ArithmeticHalf => write!(f, "ArithmeticHalf"),
            Self::Custom { name, pmi, .. } => write!(f, "Custom({name}, pmi={pmi})"),
            Self::RootDeform { inner, p } => write!(f, "RootDeform({inner:?}, {p})"),
            Self::PowerDeform { inner, p } => write!(f, "PowerDeform({inner:?}, {p})"),
            Self::Adjoint { inner } => write!(f, "Adjoint({inner:?})"),
        }
    }
}

impl RepresentingFunction {
    pub fn power(q: f64) -> Self {
        Self::Power { q }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static, pmi: bool) -> Self {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
            pmi,
        }
    }

    /// `sigma_{1/p}`: representing function `g(x^{1/p})`.
    pub fn root_deform(&self, p: f64) -> Self {
        Self::RootDeform {
            inner: Box::new(self.clone()),
            p,
        }
    }

    /// `sigma_p`: representing function `g(x^p)`.
    pub fn power_deform(&self, p: f64) -> Self {
        Self::PowerDeform {
            inner: Box::new(self.clone()),
            p,
        }
    }

    pub fn adjoint(&self) -> Self {
        match self {
            Self::Adjoint { inner } => (**inner).clone(),
            other => Self::Adjoint {
                inner: Box::new(other.clone()),
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Power { q } => x.powf(*q),
            Self::ArithmeticHalf => 0.5 * (1.0 + x),
            Self::Custom { f, .. } => f(x),
            Self::RootDeform { inner, p } => inner.eval(x.powf(p.recip())),
            Self::PowerDeform { inner, p } => inner.eval(x.powf(*p)),
            Self::Adjoint { inner } => inner.eval(x.recip()).recip(),
        }
    }

    /// Exponent `q` when the function is `x^q` after unfolding transforms.
    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            Self::Power { q } => Some(*q),
            Self::RootDeform { inner, p } => inner.power_exponent().map(|q| q / p),
            Self::PowerDeform { inner, p } => inner.power_exponent().map(|q| q * p),
            Self::Adjoint { inner } => inner.power_exponent(),
            _ => None,
        }
    }

    /// Power monotone increasing: `g(x^p) >= g(x)^p` for `x > 0`, `p >= 1`.
    pub fn is_pmi(&self) -> bool {
        match self {
            Self::Power { q } => *q > 0.0,
            Self::ArithmeticHalf => true,
            Self::Custom { pmi, .. } => *pmi,
            Self::RootDeform { inner, .. } | Self::PowerDeform { inner, .. } => inner.is_pmi(),
            Self::Adjoint { inner } => inner.power_exponent().is_some_and(|q| q > 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Power { q } => {
                if !q.is_finite() || *q == 0.0 || q.abs() > 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power representing function needs q in [-1,1]\\{{0}}, got {q}"
                    )));
                }
            }
            Self::ArithmeticHalf | Self::Custom { .. } => {}
            Self::RootDeform { inner, p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::InvalidParameter(format!("root deformation needs p >= 1, got {p}")));
                }
                inner.validate()?;
            }
            Self::PowerDeform { inner, p } => {
                if !(p.is_finite() && *p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power deformation needs p in (0,1], got {p}"
                    )));
                }
                inner.validate()?;
            }
            Self::Adjoint { inner } => inner.validate()?,
        }
        let g1 = self.eval(1.0);
        if !((g1 - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidParameter(format!("representing function has g(1) = {g1}, not 1")));
        }
        Ok(())
    }
}

/// Declarative description of a multivariate mean.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeanSpec {
    Arithmetic { weights: Weights },
    Harmonic { weights: Weights },
    /// Unique solution of `X = base(X s A_1, .., X s A_k)`.
    Deformed { base: Box<MeanSpec>, sigma: RepresentingFunction },
    Power { weights: Weights, q: f64 },
    Karcher { weights: Weights },
    /// `M*(A) = M(A_1^{-1}, .., A_k^{-1})^{-1}`.
    Adjoint { of: Box<MeanSpec> },
}

impl MeanSpec {
    pub fn arithmetic(weights: Weights) -> Self {
        Self::Arithmetic { weights }
    }

    pub fn harmonic(weights: Weights) -> Self {
        Self::Harmonic { weights }
    }

    pub fn power(weights: Weights, q: f64) -> Self {
        Self::Power { weights, q }
    }

    pub fn karcher(weights: Weights) -> Self {
        Self::Karcher { weights }
    }

    pub fn deformed(base: MeanSpec, sigma: RepresentingFunction) -> Self {
        Self::Deformed {
            base: Box::new(base),
            sigma,
        }
    }

    /// Adjoint, with `adjoint(adjoint(M))` collapsing back to `M`.
    pub fn adjoint(self) -> Self {
        match self {
            Self::Adjoint { of } => *of,
            other => Self::Adjoint { of: Box::new(other) },
        }
    }

    pub fn weights(&self) -> &Weights {
        match self {
            Self::Arithmetic { weights }
            | Self::Harmonic { weights }
            | Self::Power { weights, .. }
            | Self::Karcher { weights } => weights,
            Self::Deformed { base, .. } => base.weights(),
            Self::Adjoint { of } => of.weights(),
        }
    }

    pub fn arity(&self) -> usize {
        self.weights().len()
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Arithmetic { .. } => "arithmetic".into(),
            Self::Harmonic { .. } => "harmonic".into(),
            Self::Deformed { base, sigma } => format!("deformed({}, {sigma:?})", base.label()),
            Self::Power { q, .. } => format!("power({q})"),
            Self::Karcher { .. } => "karcher".into(),
            Self::Adjoint { of } => format!("adjoint({})", of.label()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Power { q, .. } => check_power_q(*q),
            Self::Deformed { base, sigma } => {
                sigma.validate()?;
                base.validate()
            }
            Self::Adjoint { of } => of.validate(),
            _ => Ok(()),
        }
    }

    /// Evaluates the mean; closed forms report zero iterations.
    pub fn evaluate(&self, inputs: &[HermitianTensor], tol: &ToleranceConfig) -> Result<(HermitianTensor, SolveDiagnostics)> {
        match self {
            Self::Arithmetic { weights } => Ok((weighted_arithmetic(weights, inputs)?, SolveDiagnostics::closed_form())),
            Self::Harmonic { weights } => Ok((weighted_harmonic(weights, inputs)?, SolveDiagnostics::closed_form())),
            Self::Deformed { base, sigma } => deformed_mean(base, sigma, inputs, tol),
            Self::Power { weights, q } => power_mean(weights, *q, inputs, tol),
            Self::Karcher { weights } => karcher_mean(weights, inputs, tol),
            Self::Adjoint { of } => adjoint_evaluate(of, inputs, tol),
        }
    }

    /// Evaluates and discards the diagnostics.
    pub fn eval(&self, inputs: &[HermitianTensor], tol: &ToleranceConfig) -> Result<HermitianTensor> {
        self.evaluate(inputs, tol).map(|(x, _)| x)
    }
}

pub(crate) fn check_power_q(q: f64) -> Result<()> {
    if q == 0.0 {
        return Err(Error::InvalidParameter(
            "power mean with q = 0 is the Karcher mean; use karcher_mean".into(),
        ));
    }
    if !q.is_finite() || q.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!("power mean needs q in [-1,1]\\{{0}}, got {q}")));
    }
    Ok(())
}

/// Convergence record of an iterative mean solver.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    /// Thompson distance between the last two iterates.
    pub final_step_thompson: f64,
    /// Spectral norm of the defining equation's residual at the returned point.
    pub residual_norm: f64,
    pub converged: bool,
}

impl SolveDiagnostics {
    pub fn closed_form() -> Self {
        Self {
            iterations: 0,
            final_step_thompson: 0.0,
            residual_norm: 0.0,
            converged: true,
        }
    }
}
