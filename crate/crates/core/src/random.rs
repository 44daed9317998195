//! Seeded sampling of random PD tensors and Monte Carlo estimation.
//!
//! Every draw is a pure function of `(root_seed, trial_index)`: the root seed
//! keys a ChaCha generator and the trial index selects its stream, so trials
//! can run in any order or in parallel and still reproduce bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::means::Weights;
use crate::tensor::{HermitianTensor, TensorShape};

/// Distribution of a random PD tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdLaw {
    /// `U diag(lambda) U^H` with Haar `U` and i.i.d. uniform eigenvalues in `[m, M]`.
    SpectralUniform {
        m: f64,
        #[serde(rename = "M")]
        big_m: f64,
    },
    /// `G G^H / dof + ridge I` with `G` a `D x dof` complex standard Gaussian.
    Wishart { dof: usize, ridge: f64 },
    /// `a` with probability `prob_a`, otherwise `b`.
    TwoPoint {
        a: HermitianTensor,
        b: HermitianTensor,
        prob_a: f64,
    },
}

/// A seeded source of random PD tensors of a fixed shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPDSource {
    pub shape: TensorShape,
    pub law: PdLaw,
    pub root_seed: u64,
}

impl RandomPDSource {
    pub fn new(shape: TensorShape, law: PdLaw, root_seed: u64) -> Result<Self> {
        let source = Self { shape, law, root_seed };
        source.validate()?;
        Ok(source)
    }

    pub fn spectral_uniform(shape: TensorShape, m: f64, big_m: f64, root_seed: u64) -> Result<Self> {
        Self::new(shape, PdLaw::SpectralUniform { m, big_m }, root_seed)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.shape.flat_dim();
        match &self.law {
            PdLaw::SpectralUniform { m, big_m } => {
                if !(m.is_finite() && big_m.is_finite() && 0.0 < *m && m < big_m) {
                    return Err(Error::InvalidParameter(format!(
                        "spectral_uniform needs 0 < m < M, got m={m}, M={big_m}"
                    )));
                }
            }
            PdLaw::Wishart { dof, ridge } => {
                if *dof < d {
                    return Err(Error::InvalidParameter(format!("wishart dof {dof} below dimension {d}")));
                }
                if !(ridge.is_finite() && *ridge > 0.0) {
                    return Err(Error::InvalidParameter(format!("wishart ridge must be positive, got {ridge}")));
                }
            }
            PdLaw::TwoPoint { a, b, prob_a } => {
                for atom in [a, b] {
                    if atom.shape() != &self.shape {
                        return Err(Error::ShapeMismatch {
                            left: self.shape.mode_dims().to_vec(),
                            right: atom.shape().mode_dims().to_vec(),
                        });
                    }
                    atom.require_pd()?;
                }
                if !(0.0..=1.0).contains(prob_a) {
                    return Err(Error::InvalidParameter(format!("prob_a must lie in [0, 1], got {prob_a}")));
                }
            }
        }
        Ok(())
    }

    /// The generator for one trial index.
    pub fn rng(&self, trial_index: u64) -> ChaCha12Rng {
        trial_rng(self.root_seed, trial_index)
    }
}

/// Generator keyed by `root_seed` on stream `stream`.
pub fn trial_rng(root_seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(root_seed);
    rng.set_stream(stream);
    rng
}

/// Draws the PD tensor for `trial_index`.
pub fn sample(source: &RandomPDSource, trial_index: u64) -> Result<HermitianTensor> {
    source.validate()?;
    let mut rng = source.rng(trial_index);
    let shape = source.shape.clone();
    let d = shape.flat_dim();
    match &source.law {
        PdLaw::SpectralUniform { m, big_m } => {
            let u = haar_unitary(d, &mut rng);
            let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(*m..=*big_m)).collect();
            Ok(unitary_congruence(shape, &u, &lambda))
        }
        PdLaw::Wishart { dof, ridge } => {
            let g = complex_gaussian(d, *dof, &mut rng);
            let mut h = (&g * g.adjoint()).scale(1.0 / *dof as f64);
            for i in 0..d {
                h[(i, i)] += Complex64::new(*ridge, 0.0);
            }
            Ok(HermitianTensor::new(shape, (&h + h.adjoint()).scale(0.5))?)
        }
        PdLaw::TwoPoint { a, b, prob_a } => {
            let pick_a = rng.random::<f64>() < *prob_a;
            Ok(if pick_a { a.clone() } else { b.clone() })
        }
    }
}

/// Draws the `k` inputs of Monte Carlo trial `t`, using trial indices `t*k .. t*k + k - 1`.
pub fn sample_inputs(source: &RandomPDSource, k: usize, trial: u64) -> Result<Vec<HermitianTensor>> {
    (0..k as u64).map(|i| sample(source, trial * k as u64 + i)).collect()
}

/// `U diag(lambda) U^H` for a unitary `U`.
pub fn unitary_congruence(shape: TensorShape, u: &DMatrix<Complex64>, lambda: &[f64]) -> HermitianTensor {
    let mut scaled = u.clone();
    for (j, l) in lambda.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*l);
    }
    let h = &scaled * u.adjoint();
    HermitianTensor::new(shape, (&h + h.adjoint()).scale(0.5)).expect("unitary congruence of a real diagonal is Hermitian")
}

/// `rows x cols` matrix of i.i.d. complex standard Gaussians (`E|z|^2 = 1`).
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(s * re, s * im)
    })
}

/// Haar-distributed `d x d` unitary.
///
/// QR of a complex Gaussian matrix with the phases of `diag(R)` moved into
/// `Q`, which makes the factorization unique and the law of `Q` Haar.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let qr = complex_gaussian(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            let phase = rjj / n;
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

/// Invertible `d x d` matrix `U diag(s) V^H` with singular values spread over `[1, cond]`.
pub fn random_invertible<R: Rng + ?Sized>(d: usize, cond: f64, rng: &mut R) -> DMatrix<Complex64> {
    let u = haar_unitary(d, rng);
    let v = haar_unitary(d, rng);
    let mut s: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..=cond)).collect();
    s[0] = 1.0;
    if d > 1 {
        s[d - 1] = cond;
    }
    let mut us = u;
    for (j, sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*sj);
    }
    us * v.adjoint()
}

/// Random probability vector (flat Dirichlet) of length `k`.
pub fn random_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Weights> {
    let masses: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    Weights::normalized(&masses)
}

/// How per-trial values are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    /// Sample mean; stderr from the unbiased sample variance.
    Mean,
    /// Fraction of trials whose value is 1; stderr `sqrt(p (1 - p) / n)`.
    ProbOfEvent,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
}

/// Evaluates `statistic` on the inputs of trials `0..n` and reduces.
///
/// For [`Reducer::ProbOfEvent`] the statistic must return `0.0` or `1.0`.
/// Values are collected per trial and summed in trial order, so the result
/// does not depend on the thread count.
pub fn monte_carlo<F>(source: &RandomPDSource, k: usize, n: u64, reducer: Reducer, statistic: F) -> Result<Estimate>
where
    F: Fn(&[HermitianTensor]) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(Error::InvalidParameter("monte carlo needs at least one trial".into()));
    }
    source.validate()?;
    let values = collect_trials(n, |t| {
        let inputs = sample_inputs(source, k, t)?;
        let v = statistic(&inputs)?;
        if reducer == Reducer::ProbOfEvent && v != 0.0 && v != 1.0 {
            return Err(Error::InvalidParameter(format!("event indicator must be 0 or 1, got {v}")));
        }
        Ok(v)
    })?;
    Ok(reduce(&values, reducer))
}

/// Probability estimate of an event over trials `0..n`.
pub fn probability<F>(source: &RandomPDSource, k: usize, n: u64, event: F) -> Result<Estimate>
where
    F: Fn(&[HermitianTensor]) -> Result<bool> + Sync,
{
    monte_carlo(source, k, n, Reducer::ProbOfEvent, |a| event(a).map(|b| if b { 1.0 } else { 0.0 }))
}

/// Runs `f` on every trial index in parallel and returns the values in trial order.
///
/// When several trials fail, the error of the lowest trial index is returned.
pub fn collect_trials<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n).into_par_iter().map(&f).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(t, r)| {
            r.map_err(|e| Error::Trial {
                index: t as u64,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Reduces values in slice order.
pub fn reduce(values: &[f64], reducer: Reducer) -> Estimate {
    let n = values.len() as u64;
    let nf = values.len() as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let stderr = match reducer {
        Reducer::Mean if n > 1 => {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
            (var / nf).sqrt()
        }
        Reducer::Mean => 0.0,
        Reducer::ProbOfEvent => (mean * (1.0 - mean) / nf).sqrt(),
    };
    Estimate {
        estimate: mean,
        stderr,
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{loewner_leq, ToleranceConfig};

    fn shape(d: usize) -> TensorShape {
        TensorShape::square(d).unwrap()
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = trial_rng(7, 0);
        for d in [1, 2, 5] {
            let u = haar_unitary(d, &mut rng);
            let e = (u.adjoint() * &u - DMatrix::<Complex64>::identity(d, d)).norm();
            assert!(e < 1e-12);
        }
    }

    #[test]
    fn haar_first_entry_modulus_law() {
        // For Haar U in U(d), |U_00|^2 ~ Beta(1, d - 1), whose mean is 1/d.
        let d = 3;
        let n = 4000;
        let mean = (0..n)
            .map(|t| haar_unitary(d, &mut trial_rng(11, t)).index((0, 0)).norm_sqr())
            .sum::<f64>()
            / n as f64;
        // Beta(1, 2) variance is 1/18
        let se = (1.0f64 / 18.0 / n as f64).sqrt();
        assert!((mean - 1.0 / d as f64).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn narrow_window_forces_spectrum() {
        let eps = 1e-6;
        let src = RandomPDSource::spectral_uniform(shape(4), 1.0, 1.0 + eps, 3).unwrap();
        for t in 0..20 {
            let x = sample(&src, t).unwrap();
            let ev = x.eigenvalues();
            assert!(ev[3] >= 1.0 - 1e-12 && ev[0] <= 1.0 + eps + 1e-12);
        }
    }

    #[test]
    fn two_point_degenerate() {
        let s = shape(2);
        let law = PdLaw::TwoPoint {
            a: HermitianTensor::identity(s.clone()),
            b: HermitianTensor::scaled_identity(s.clone(), 2.0),
            prob_a: 1.0,
        };
        let src = RandomPDSource::new(s.clone(), law, 5).unwrap();
        for t in 0..50 {
            assert_eq!(sample(&src, t).unwrap(), HermitianTensor::identity(s.clone()));
        }
    }

    #[test]
    fn uniform_mean_eigenvalue() {
        let src = RandomPDSource::spectral_uniform(shape(2), 1.0, 2.0, 17).unwrap();
        let est = monte_carlo(&src, 1, 10_000, Reducer::Mean, |a| Ok(a[0].trace() / 2.0)).unwrap();
        assert!((est.estimate - 1.5).abs() <= 3.0 * est.stderr, "{est:?}");
        let tr = monte_carlo(&src, 1, 10_000, Reducer::Mean, |a| Ok(a[0].trace())).unwrap();
        assert!((tr.estimate - 3.0).abs() <= 3.0 * tr.stderr, "{tr:?}");
    }

    #[test]
    fn wishart_mean_is_identity_plus_ridge() {
        let src = RandomPDSource::new(shape(3), PdLaw::Wishart { dof: 5, ridge: 0.25 }, 9).unwrap();
        let est = monte_carlo(&src, 1, 4000, Reducer::Mean, |a| Ok(a[0].matrix()[(1, 1)].re)).unwrap();
        assert!((est.estimate - 1.25).abs() <= 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn samples_are_pd_and_windowed() {
        let tol = ToleranceConfig::default();
        let s = shape(3);
        let lo = HermitianTensor::scaled_identity(s.clone(), 0.5);
        let hi = HermitianTensor::scaled_identity(s.clone(), 4.0);
        let win = RandomPDSource::spectral_uniform(s.clone(), 0.5, 4.0, 1).unwrap();
        let wish = RandomPDSource::new(s.clone(), PdLaw::Wishart { dof: 3, ridge: 1e-3 }, 1).unwrap();
        for t in 0..2000 {
            let x = sample(&win, t).unwrap();
            assert!(x.lambda_min() > 0.0);
            assert!(loewner_leq(&lo, &x, &tol).unwrap().holds);
            assert!(loewner_leq(&x, &hi, &tol).unwrap().holds);
            assert!(sample(&wish, t).unwrap().lambda_min() > 0.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_stream_separated() {
        let src = RandomPDSource::spectral_uniform(shape(2), 1.0, 3.0, 99).unwrap();
        assert_eq!(sample(&src, 4).unwrap(), sample(&src, 4).unwrap());
        assert_ne!(sample(&src, 4).unwrap(), sample(&src, 5).unwrap());
        let inputs = sample_inputs(&src, 3, 2).unwrap();
        assert_eq!(inputs[0], sample(&src, 6).unwrap());
        assert_eq!(inputs[2], sample(&src, 8).unwrap());
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let src = RandomPDSource::spectral_uniform(shape(2), 1.0, 2.0, 5).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo(&src, 2, 500, Reducer::Mean, |a| Ok(a[0].lambda_max() * a[1].lambda_min())).unwrap())
        };
        let (a, b) = (run(1), run(3));
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn reducer_examples() {
        let src = RandomPDSource::spectral_uniform(shape(2), 1.0, 2.0, 5).unwrap();
        let c = monte_carlo(&src, 2, 100, Reducer::Mean, |_| Ok(3.5)).unwrap();
        assert_eq!((c.estimate, c.stderr), (3.5, 0.0));
        let p = probability(&src, 2, 100, |_| Ok(true)).unwrap();
        assert_eq!((p.estimate, p.stderr), (1.0, 0.0));
        let r = reduce(&[1.0, 0.0, 0.0, 1.0], Reducer::ProbOfEvent);
        assert_eq!(r.estimate, 0.5);
        assert!((r.stderr - (0.25f64 / 4.0).sqrt()).abs() < 1e-15);
        assert!(monte_carlo(&src, 1, 0, Reducer::Mean, |_| Ok(0.0)).is_err());
    }

    #[test]
    fn statistic_failure_carries_trial_index() {
        let src = RandomPDSource::spectral_uniform(shape(2), 1.0, 2.0, 5).unwrap();
        let err = monte_carlo(&src, 1, 10, Reducer::Mean, |a| {
            if a[0].lambda_max() > 1.0 {
                Err(Error::NumericalBreakdown("boom".into()))
            } else {
                Ok(0.0)
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Trial { index: 0, .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn invalid_laws_rejected() {
        let s = shape(2);
        assert!(RandomPDSource::spectral_uniform(s.clone(), 2.0, 1.0, 0).is_err());
        assert!(RandomPDSource::new(s.clone(), PdLaw::Wishart { dof: 1, ridge: 1.0 }, 0).is_err());
        assert!(RandomPDSource::new(s.clone(), PdLaw::Wishart { dof: 2, ridge: 0.0 }, 0).is_err());
        let law = PdLaw::TwoPoint {
            a: HermitianTensor::identity(s.clone()),
            b: HermitianTensor::identity(s.clone()),
            prob_a: 1.5,
        };
        assert!(RandomPDSource::new(s, law, 0).is_err());
    }

    #[test]
    fn source_json_roundtrip() {
        let src = RandomPDSource::spectral_uniform(TensorShape::new(vec![2, 2]).unwrap(), 0.5, 4.0, 42).unwrap();
        let json = serde_json::to_string(&src).unwrap();
        assert!(json.contains("\"kind\":\"spectral_uniform\"") && json.contains("\"M\":4.0"));
        let back: RandomPDSource = serde_json::from_str(&json).unwrap();
        assert_eq!(back, src);
    }

    #[test]
    fn random_helpers() {
        let mut rng = trial_rng(1, 2);
        let w = random_weights(5, &mut rng).unwrap();
        assert_eq!(w.len(), 5);
        let z = random_invertible(4, 100.0, &mut rng);
        let sv = z.singular_values();
        let cond = sv.max() / sv.min();
        assert!((cond - 100.0).abs() < 1e-8);
    }
}
