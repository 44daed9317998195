use crate::bounds::{check_window, compare, kantorovich, powers, CheckContext, InequalityReport};
use crate::error::{Error, Result};
use crate::means::{power_mean, weighted_arithmetic, MeanSpec, RepresentingFunction, Weights};
use crate::tensor::{loewner_leq, HermitianTensor};

fn check_reverse_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("reverse inequalities need p >= 1, got {p}")));
    }
    Ok(())
}

/// Scalar multiplying `X = P_{w,q}(A)` in the reverse power-mean inequality.
///
/// For `q in (0, 1]`: `lambda_min^{p-1} K_1 K_2^{1/q}` with
/// `K_2 = K(M^q / lambda_min^q, m^q / lambda_max^q, p)`.
/// For `q in [-1, 0)`: `lambda_max^{p-1} K_1^{-1} K'_2^{1/q}` with
/// `K'_2 = K(lambda_max^q / m^q, lambda_min^q / M^q, p)`.
/// In both cases `K_1 = K(M, m, p)` and the eigenvalues are those of `X`.
pub fn reverse_power_coefficient(p: f64, q: f64, m: f64, big_m: f64, x: &HermitianTensor) -> Result<f64> {
    let (l_max, l_min) = (x.lambda_max(), x.lambda_min());
    let k1 = kantorovich(big_m, m, p)?;
    if q > 0.0 {
        let k2 = kantorovich(big_m.powf(q) / l_min.powf(q), m.powf(q) / l_max.powf(q), p)?;
        Ok(l_min.powf(p - 1.0) * k1 * k2.powf(q.recip()))
    } else {
        let k2 = kantorovich(l_max.powf(q) / m.powf(q), l_min.powf(q) / big_m.powf(q), p)?;
        Ok(l_max.powf(p - 1.0) / k1 * k2.powf(q.recip()))
    }
}

/// Reverse Ando-Hiai inequality for power means on inputs in the window `[m, M]`.
///
/// For `q in (0, 1]`: `P_q(A^p) <= c P_q(A)`; for `q in [-1, 0)`:
/// `c P_q(A) <= P_q(A^p)`, with `c` from [`reverse_power_coefficient`].
pub fn check_reverse_ah_power(
    p: f64,
    q: f64,
    m: f64,
    big_m: f64,
    w: &Weights,
    inputs: &[HermitianTensor],
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    check_reverse_exponent(p)?;
    crate::means::check_power_q(q)?;
    check_window(inputs, m, big_m, &ctx.tol)?;
    let (x, _) = power_mean(w, q, inputs, &ctx.tol)?;
    let (xp, _) = power_mean(w, q, &powers(inputs, p)?, &ctx.tol)?;
    let bound = x.scale(reverse_power_coefficient(p, q, m, big_m, &x)?);
    if q > 0.0 {
        compare(format!("reverse_ah_power_p{p}_q{q}"), &xp, &bound, ctx)
    } else {
        compare(format!("reverse_ah_power_p{p}_q{q}"), &bound, &xp, ctx)
    }
}

/// Reverse Ando-Hiai chain for deformed means with `X = M_sigma(A)` and `K_1 = K(M, m, p)`:
/// `K_1^{-1} lambda_max^{p-1}(X) X <= M_{sigma_{1/p}}(A^p) <= K_1 lambda_min^{p-1}(X) X`.
pub fn check_reverse_ah_deformed(
    base: &MeanSpec,
    sigma: &RepresentingFunction,
    p: f64,
    m: f64,
    big_m: f64,
    inputs: &[HermitianTensor],
    ctx: &CheckContext,
) -> Result<[InequalityReport; 2]> {
    check_reverse_exponent(p)?;
    check_window(inputs, m, big_m, &ctx.tol)?;
    let x = MeanSpec::deformed(base.clone(), sigma.clone()).eval(inputs, &ctx.tol)?;
    let xp = MeanSpec::deformed(base.clone(), sigma.root_deform(p)).eval(&powers(inputs, p)?, &ctx.tol)?;
    let k1 = kantorovich(big_m, m, p)?;
    let lo = x.scale(x.lambda_max().powf(p - 1.0) / k1);
    let hi = x.scale(x.lambda_min().powf(p - 1.0) * k1);
    Ok([
        compare(format!("reverse_ah_deformed_p{p}_lower"), &lo, &xp, ctx)?,
        compare(format!("reverse_ah_deformed_p{p}_upper"), &xp, &hi, ctx)?,
    ])
}

/// Contraction instance `B A^p B <= K(M, m, p) (B A B)^p` for `m I <= A <= M I` and `B^2 <= I`.
pub fn check_lemma_contraction(
    a: &HermitianTensor,
    b: &HermitianTensor,
    m: f64,
    big_m: f64,
    p: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    check_reverse_exponent(p)?;
    check_window(std::slice::from_ref(a), m, big_m, &ctx.tol)?;
    let id = HermitianTensor::identity(b.shape().clone());
    if !loewner_leq(&id.sandwich_hermitian(b), &id, &ctx.tol)?.holds {
        return Err(Error::InvalidParameter("B^2 <= I is violated".into()));
    }
    let lhs = a.pow(p)?.sandwich_hermitian(b);
    let rhs = a.sandwich_hermitian(b).pow(p)?.scale(kantorovich(big_m, m, p)?);
    compare(format!("lemma_contraction_p{p}"), &lhs, &rhs, ctx)
}

/// Jensen-type instance `sum_i w_i A_i^p <= K(M, m, p) (sum_i w_i A_i)^p` on the window `[m, M]`.
pub fn check_lemma_jensen(
    w: &Weights,
    inputs: &[HermitianTensor],
    m: f64,
    big_m: f64,
    p: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    check_reverse_exponent(p)?;
    check_window(inputs, m, big_m, &ctx.tol)?;
    let lhs = weighted_arithmetic(w, &powers(inputs, p)?)?;
    let rhs = weighted_arithmetic(w, inputs)?.pow(p)?.scale(kantorovich(big_m, m, p)?);
    compare(format!("lemma_jensen_p{p}"), &lhs, &rhs, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{sample_inputs, RandomPDSource};
    use crate::tensor::{TensorShape, ToleranceConfig};

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::from_diagonal(v).unwrap()
    }

    fn ctx() -> CheckContext {
        CheckContext::new(ToleranceConfig::default(), 0)
    }

    fn diag_margin(lhs: &[f64], rhs: &[f64]) -> f64 {
        let scale = rhs.iter().cloned().fold(0.0, f64::max);
        lhs.iter().zip(rhs).map(|(l, r)| r - l).fold(f64::INFINITY, f64::min) / scale
    }

    fn scalar_power_mean(w: &[f64], a: &[f64], q: f64) -> f64 {
        w.iter().zip(a).map(|(wi, ai)| wi * ai.powf(q)).sum::<f64>().powf(q.recip())
    }

    /// `K(M, m, 2) = (M + m)^2 / (4 M m)`.
    fn k2(big_m: f64, m: f64) -> f64 {
        (big_m + m).powi(2) / (4.0 * big_m * m)
    }

    #[test]
    fn unit_exponent_is_equality() {
        let src = RandomPDSource::spectral_uniform(TensorShape::square(3).unwrap(), 1.0, 2.0, 6).unwrap();
        let inputs = sample_inputs(&src, 3, 0).unwrap();
        let w = Weights::uniform(3).unwrap();
        for q in [0.5, -0.5] {
            let r = check_reverse_ah_power(1.0, q, 1.0, 2.0, &w, &inputs, &ctx()).unwrap();
            assert!(r.holds && r.margin.abs() < 1e-9, "{r:?}");
        }
        let base = MeanSpec::arithmetic(w);
        for r in check_reverse_ah_deformed(&base, &RepresentingFunction::power(0.5), 1.0, 1.0, 2.0, &inputs, &ctx()).unwrap() {
            assert!(r.holds && r.margin.abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn scalar_inputs_hold_with_factor_at_least_one() {
        let c = 1.7;
        let a = HermitianTensor::scaled_identity(TensorShape::square(2).unwrap(), c);
        let w = Weights::uniform(2).unwrap();
        let r = check_reverse_ah_power(2.0, 0.5, c, c + 1e-3, &w, &[a.clone(), a.clone()], &ctx()).unwrap();
        assert!(r.holds && r.margin >= 0.0);
    }

    #[test]
    fn commuting_power_case_matches_scalar_oracle() {
        let w = [0.5, 0.5];
        let cols = [[1.0, 1.6, 2.0], [1.9, 1.2, 1.0]];
        let inputs: Vec<_> = cols.iter().map(|c| diag(c)).collect();
        let weights = Weights::new(w.to_vec()).unwrap();
        let (p, q, m, big_m) = (2.0, 0.5, 1.0, 2.0);
        let r = check_reverse_ah_power(p, q, m, big_m, &weights, &inputs, &ctx()).unwrap();

        let x: Vec<f64> = (0..3).map(|j| scalar_power_mean(&w, &[cols[0][j], cols[1][j]], q)).collect();
        let xp: Vec<f64> = (0..3)
            .map(|j| scalar_power_mean(&w, &[cols[0][j].powf(p), cols[1][j].powf(p)], q))
            .collect();
        let l_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let l_max = x.iter().cloned().fold(0.0, f64::max);
        let kk2 = k2(big_m.powf(q) / l_min.powf(q), m.powf(q) / l_max.powf(q));
        let c = l_min.powf(p - 1.0) * k2(big_m, m) * kk2.powf(1.0 / q);
        let rhs: Vec<f64> = x.iter().map(|v| c * v).collect();
        assert!((r.margin - diag_margin(&xp, &rhs)).abs() < 1e-10, "{} vs {}", r.margin, diag_margin(&xp, &rhs));
        assert_eq!(r.holds, diag_margin(&xp, &rhs) >= -1e-9);
    }

    #[test]
    fn negative_q_is_the_inverted_positive_case() {
        let src = RandomPDSource::spectral_uniform(TensorShape::square(3).unwrap(), 0.5, 4.0, 13).unwrap();
        let w = Weights::new(vec![0.2, 0.3, 0.5]).unwrap();
        let (m, big_m, p, q) = (0.5, 4.0, 2.0, 0.5);
        let tol = ToleranceConfig::default();
        for t in 0..5 {
            let a = sample_inputs(&src, 3, t).unwrap();
            let inv: Vec<_> = a.iter().map(|x| x.inverse().unwrap()).collect();
            let x_neg = power_mean(&w, -q, &a, &tol).unwrap().0;
            let x_pos_inv = power_mean(&w, q, &inv, &tol).unwrap().0;
            let c_neg = reverse_power_coefficient(p, -q, m, big_m, &x_neg).unwrap();
            let c_pos = reverse_power_coefficient(p, q, 1.0 / big_m, 1.0 / m, &x_pos_inv).unwrap();
            assert!((c_neg * c_pos - 1.0).abs() < 1e-7, "{c_neg} {c_pos}");
            let neg = check_reverse_ah_power(p, -q, m, big_m, &w, &a, &ctx()).unwrap();
            let pos = check_reverse_ah_power(p, q, 1.0 / big_m, 1.0 / m, &w, &inv, &ctx()).unwrap();
            assert_eq!(neg.margin >= 0.0, pos.margin >= 0.0);
        }
    }

    #[test]
    fn deformed_chain_single_input_eigenvalue_oracle() {
        // k = 1: X = A and M_{sigma_{1/p}}(A^p) = A^p, so the chain is scalar on the spectrum of A
        let a = diag(&[1.0, 2.0]);
        let w = Weights::new(vec![1.0]).unwrap();
        let (p, m, big_m) = (2.0, 1.0, 2.0);
        let [lower, upper] =
            check_reverse_ah_deformed(&MeanSpec::arithmetic(w), &RepresentingFunction::power(0.5), p, m, big_m, &[a], &ctx()).unwrap();
        let k = k2(big_m, m);
        let ev = [1.0, 2.0];
        let mid: Vec<f64> = ev.iter().map(|x: &f64| x.powf(p)).collect();
        let lo: Vec<f64> = ev.iter().map(|x| 2.0f64.powf(p - 1.0) * x / k).collect();
        let hi: Vec<f64> = ev.iter().map(|x| 1.0f64.powf(p - 1.0) * x * k).collect();
        assert!((lower.margin - diag_margin(&lo, &mid)).abs() < 1e-10);
        assert!((upper.margin - diag_margin(&mid, &hi)).abs() < 1e-10);
        // 4 > 1.125 * 2 and 2 / 1.125 > 1: both sides fail on this instance
        assert!(!upper.holds);
        assert!(!lower.holds);
    }

    #[test]
    fn deformed_chain_commuting_oracle() {
        let w = [0.5, 0.5];
        let cols = [[1.0, 1.5], [2.0, 1.2]];
        let inputs: Vec<_> = cols.iter().map(|c| diag(c)).collect();
        let weights = Weights::new(w.to_vec()).unwrap();
        let (p, q, m, big_m) = (2.0, 0.5, 1.0, 2.0);
        let [lower, upper] =
            check_reverse_ah_deformed(&MeanSpec::arithmetic(weights), &RepresentingFunction::power(q), p, m, big_m, &inputs, &ctx())
                .unwrap();
        let x: Vec<f64> = (0..2).map(|j| scalar_power_mean(&w, &[cols[0][j], cols[1][j]], q)).collect();
        let xp: Vec<f64> = (0..2)
            .map(|j| scalar_power_mean(&w, &[cols[0][j].powf(p), cols[1][j].powf(p)], q / p))
            .collect();
        let l_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let l_max = x.iter().cloned().fold(0.0, f64::max);
        let k = k2(big_m, m);
        let lo: Vec<f64> = x.iter().map(|v| l_max.powf(p - 1.0) * v / k).collect();
        let hi: Vec<f64> = x.iter().map(|v| l_min.powf(p - 1.0) * v * k).collect();
        assert!((lower.margin - diag_margin(&lo, &xp)).abs() < 1e-10);
        assert!((upper.margin - diag_margin(&xp, &hi)).abs() < 1e-10);
    }

    #[test]
    fn contraction_instance_scaled_identity() {
        // B = I / 2, A = I: LHS = I / 4, RHS = K / 16 I
        let a = diag(&[1.0, 1.0]);
        let b = diag(&[0.5, 0.5]);
        let r = check_lemma_contraction(&a, &b, 1.0, 2.0, 2.0, &ctx()).unwrap();
        let k = k2(2.0, 1.0);
        let oracle = (k / 16.0 - 0.25) / (k / 16.0);
        assert!((r.margin - oracle).abs() < 1e-12);
        assert!(!r.holds);
        // B = I is the unital case, where the inequality holds
        let r = check_lemma_contraction(&diag(&[1.0, 2.0]), &diag(&[1.0, 1.0]), 1.0, 2.0, 2.0, &ctx()).unwrap();
        assert!(r.holds);
        assert!(check_lemma_contraction(&a, &diag(&[1.5, 0.5]), 1.0, 2.0, 2.0, &ctx()).is_err());
    }

    #[test]
    fn jensen_instance_matches_scalar_oracle() {
        let w = [0.25, 0.75];
        let cols = [[1.0, 2.0], [2.0, 1.0]];
        let inputs: Vec<_> = cols.iter().map(|c| diag(c)).collect();
        let weights = Weights::new(w.to_vec()).unwrap();
        let r = check_lemma_jensen(&weights, &inputs, 1.0, 2.0, 2.0, &ctx()).unwrap();
        let k = k2(2.0, 1.0);
        let lhs: Vec<f64> = (0..2).map(|j| w[0] * cols[0][j].powi(2) + w[1] * cols[1][j].powi(2)).collect();
        let rhs: Vec<f64> = (0..2).map(|j| k * (w[0] * cols[0][j] + w[1] * cols[1][j]).powi(2)).collect();
        assert!((r.margin - diag_margin(&lhs, &rhs)).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn window_and_exponent_preconditions() {
        let inputs = [diag(&[1.0, 3.0])];
        let w = Weights::new(vec![1.0]).unwrap();
        assert!(matches!(
            check_reverse_ah_power(2.0, 0.5, 1.0, 2.0, &w, &inputs, &ctx()),
            Err(Error::OutsideWindow { .. })
        ));
        assert!(check_reverse_ah_power(0.5, 0.5, 1.0, 3.0, &w, &inputs, &ctx()).is_err());
        assert!(check_lemma_jensen(&w, &inputs, 1.0, 3.0, 0.5, &ctx()).is_err());
    }
}
