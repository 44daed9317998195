use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{collect_trials, reduce, sample_inputs, RandomPDSource, Reducer};
use crate::tensor::{loewner_leq, HermitianTensor, ToleranceConfig};

/// Monte Carlo estimate of `Pr(S not<= C)` next to the Markov-type bound `Tr(E[T^r] C^{-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub name: String,
    pub empirical_prob: f64,
    /// `sqrt(p (1 - p) / n)`.
    pub mc_stderr: f64,
    pub trace_bound: f64,
    pub n_samples: u64,
    pub r: f64,
}

impl TailBoundReport {
    /// `empirical_prob <= trace_bound + 3 mc_stderr`.
    pub fn within_bound(&self) -> bool {
        self.empirical_prob <= self.trace_bound + 3.0 * self.mc_stderr
    }
}

/// `Tr(S C^{-1})` from the entries of `S` and `C^{-1}`.
fn trace_product(s: &HermitianTensor, c_inv: &HermitianTensor) -> f64 {
    let (a, b) = (s.matrix(), c_inv.matrix());
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Tail reports for every threshold in `thresholds`, sharing one sample stream.
///
/// `statistic` maps the `k` inputs of a trial to `(S, T)`: the event side `S`
/// is compared against each threshold and the bound side `T` enters the
/// trace. Passing the same tensor twice gives the plain operator Markov bound.
pub fn tail_bound_sweep<F>(
    name: &str,
    source: &RandomPDSource,
    k: usize,
    n: u64,
    r: f64,
    thresholds: &[HermitianTensor],
    tol: &ToleranceConfig,
    statistic: F,
) -> Result<Vec<TailBoundReport>>
where
    F: Fn(&[HermitianTensor]) -> Result<(HermitianTensor, HermitianTensor)> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidParameter("tail bound needs at least one sample".into()));
    }
    let samples = collect_trials(n, |t| statistic(&sample_inputs(source, k, t)?))?;
    tail_reports(name, &samples, r, thresholds, tol)
}

/// Tail reports from precomputed `(S, T)` samples, one per trial in trial order.
pub fn tail_reports(
    name: &str,
    samples: &[(HermitianTensor, HermitianTensor)],
    r: f64,
    thresholds: &[HermitianTensor],
    tol: &ToleranceConfig,
) -> Result<Vec<TailBoundReport>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("tail bound needs at least one sample".into()));
    }
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r must be at least 1, got {r}")));
    }
    let inverses = thresholds.iter().map(HermitianTensor::inverse).collect::<Result<Vec<_>>>()?;
    let n = samples.len() as u64;
    let evaluated = collect_trials(n, |t| {
        let (event, bound) = &samples[t as usize];
        event.require_pd()?;
        bound.require_pd()?;
        let exceed = thresholds
            .iter()
            .map(|c| loewner_leq(event, c, tol).map(|cmp| !cmp.holds))
            .collect::<Result<Vec<bool>>>()?;
        let bound = if r == 1.0 { bound.clone() } else { bound.pow(r)? };
        Ok((exceed, bound))
    })?;

    let bounds: Vec<HermitianTensor> = evaluated.iter().map(|(_, b)| b.clone()).collect();
    let weights = vec![1.0 / n as f64; bounds.len()];
    let mean_bound = HermitianTensor::linear_combination(&weights, &bounds)?;

    Ok(inverses
        .iter()
        .enumerate()
        .map(|(i, c_inv)| {
            let events: Vec<f64> = evaluated.iter().map(|(e, _)| if e[i] { 1.0 } else { 0.0 }).collect();
            let est = reduce(&events, Reducer::ProbOfEvent);
            TailBoundReport {
                name: name.to_string(),
                empirical_prob: est.estimate,
                mc_stderr: est.stderr,
                trace_bound: trace_product(&mean_bound, c_inv),
                n_samples: n,
                r,
            }
        })
        .collect())
}

/// Operator Markov report for a single threshold `C`:
/// `Pr(S not<= C)` against `Tr(E[S^r] C^{-1})`.
pub fn markov_tail_bound<F>(
    source: &RandomPDSource,
    k: usize,
    statistic: F,
    c: &HermitianTensor,
    r: f64,
    n: u64,
    tol: &ToleranceConfig,
) -> Result<TailBoundReport>
where
    F: Fn(&[HermitianTensor]) -> Result<HermitianTensor> + Sync,
{
    let mut reports = tail_bound_sweep("markov", source, k, n, r, std::slice::from_ref(c), tol, |a| {
        let s = statistic(a)?;
        Ok((s.clone(), s))
    })?;
    Ok(reports.remove(0))
}
