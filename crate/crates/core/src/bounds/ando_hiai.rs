use crate::bounds::{check_exponent, compare, powers, CheckContext, InequalityReport};
use crate::error::{Error, Result};
use crate::means::{karcher_mean, power_mean, MeanSpec, RepresentingFunction, Weights};
use crate::tensor::HermitianTensor;

/// `lambda^{p-1} X` for an extreme eigenvalue `lambda` of `X`.
fn scaled(x: &HermitianTensor, lambda: f64, p: f64) -> HermitianTensor {
    x.scale(lambda.powf(p - 1.0))
}

/// Power-mean Ando-Hiai pair.
///
/// For `p >= 1`: `lambda_min^{p-1}(P_q(A)) P_q(A) <= P_q(A^p)` and
/// `P_{-q}(A^p) <= lambda_max^{p-1}(P_{-q}(A)) P_{-q}(A)`.
/// For `p in (0, 1]` both orderings are reversed.
pub fn check_ah_power(p: f64, q: f64, w: &Weights, inputs: &[HermitianTensor], ctx: &CheckContext) -> Result<[InequalityReport; 2]> {
    check_exponent(p)?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1], got {q}")));
    }
    let pow = powers(inputs, p)?;
    let (x, _) = power_mean(w, q, inputs, &ctx.tol)?;
    let (xp, _) = power_mean(w, q, &pow, &ctx.tol)?;
    let (y, _) = power_mean(w, -q, inputs, &ctx.tol)?;
    let (yp, _) = power_mean(w, -q, &pow, &ctx.tol)?;
    let x_scaled = scaled(&x, x.lambda_min(), p);
    let y_scaled = scaled(&y, y.lambda_max(), p);
    if p >= 1.0 {
        Ok([
            compare(format!("ah_power_p{p}_q{q}_lower"), &x_scaled, &xp, ctx)?,
            compare(format!("ah_power_p{p}_q-{q}_upper"), &yp, &y_scaled, ctx)?,
        ])
    } else {
        Ok([
            compare(format!("ah_power_p{p}_q{q}_upper"), &xp, &x_scaled, ctx)?,
            compare(format!("ah_power_p{p}_q-{q}_lower"), &y_scaled, &yp, ctx)?,
        ])
    }
}

/// Karcher-mean Ando-Hiai chain with `G = G_w(A)`.
///
/// For `p >= 1`: `lambda_min^{p-1}(G) G <= G_w(A^p) <= lambda_max^{p-1}(G) G`;
/// for `p in (0, 1]` the roles of `lambda_min` and `lambda_max` swap.
pub fn check_ah_karcher(p: f64, w: &Weights, inputs: &[HermitianTensor], ctx: &CheckContext) -> Result<[InequalityReport; 2]> {
    check_exponent(p)?;
    let (g, _) = karcher_mean(w, inputs, &ctx.tol)?;
    let (gp, _) = karcher_mean(w, &powers(inputs, p)?, &ctx.tol)?;
    chain("ah_karcher", p, &g, &gp, ctx)
}

/// Deformed-mean Ando-Hiai chain.
///
/// For `p >= 1` with `X = M_sigma(A)`:
/// `lambda_min^{p-1}(X) X <= M_{sigma_{1/p}}(A^p) <= lambda_max^{p-1}(X) X`.
/// For `p in (0, 1]` with `X = M_{sigma_p}(A)`:
/// `lambda_max^{p-1}(X) X <= M_sigma(A^p) <= lambda_min^{p-1}(X) X`.
pub fn check_ah_deformed(
    base: &MeanSpec,
    sigma: &RepresentingFunction,
    p: f64,
    inputs: &[HermitianTensor],
    ctx: &CheckContext,
) -> Result<[InequalityReport; 2]> {
    check_exponent(p)?;
    let pow = powers(inputs, p)?;
    let (x, xp) = if p >= 1.0 {
        let x = MeanSpec::deformed(base.clone(), sigma.clone()).eval(inputs, &ctx.tol)?;
        let xp = MeanSpec::deformed(base.clone(), sigma.root_deform(p)).eval(&pow, &ctx.tol)?;
        (x, xp)
    } else {
        let x = MeanSpec::deformed(base.clone(), sigma.power_deform(p)).eval(inputs, &ctx.tol)?;
        let xp = MeanSpec::deformed(base.clone(), sigma.clone()).eval(&pow, &ctx.tol)?;
        (x, xp)
    };
    chain("ah_deformed", p, &x, &xp, ctx)
}

/// `lo <= xp <= hi` where `{lo, hi}` are `x` scaled by its extreme eigenvalues to the power `p - 1`.
fn chain(name: &str, p: f64, x: &HermitianTensor, xp: &HermitianTensor, ctx: &CheckContext) -> Result<[InequalityReport; 2]> {
    let at_min = scaled(x, x.lambda_min(), p);
    let at_max = scaled(x, x.lambda_max(), p);
    let (lo, hi) = if p >= 1.0 { (at_min, at_max) } else { (at_max, at_min) };
    Ok([
        compare(format!("{name}_p{p}_lower"), &lo, xp, ctx)?,
        compare(format!("{name}_p{p}_upper"), xp, &hi, ctx)?,
    ])
}
