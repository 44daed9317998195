use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral window `[m, M]` and exponent `p` of a Kantorovich constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KantorovichParams {
    #[serde(rename = "M")]
    pub big_m: f64,
    pub m: f64,
    pub p: f64,
}

impl KantorovichParams {
    pub fn new(big_m: f64, m: f64, p: f64) -> Result<Self> {
        if !(m.is_finite() && big_m.is_finite() && 0.0 < m && m < big_m) {
            return Err(Error::InvalidParameter(format!("need 0 < m < M, got m={m}, M={big_m}")));
        }
        if !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent must be finite, got {p}")));
        }
        Ok(Self { big_m, m, p })
    }

    pub fn value(&self) -> Result<f64> {
        kantorovich(self.big_m, self.m, self.p)
    }
}

/// Generalized Kantorovich constant `K(M, m, f, p)` for a scalar function `f` on `[m, M]`.
///
/// Fails when the closed form is undefined: `p = 1`, `p = 0`, `m = M`, or
/// `m f(M) = M f(m)` (for example `f` the identity), where the formula reads `0 * inf^p`.
pub fn kantorovich_f(big_m: f64, m: f64, f: impl Fn(f64) -> f64, p: f64) -> Result<f64> {
    if !(m.is_finite() && big_m.is_finite() && 0.0 < m && m < big_m) {
        return Err(Error::InvalidParameter(format!("need 0 < m < M, got m={m}, M={big_m}")));
    }
    if p == 1.0 || p == 0.0 || !p.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "K(M, m, f, p) is undefined at p = {p}; use kantorovich for the p = 1 limit"
        )));
    }
    let (f_big, f_small) = (f(big_m), f(m));
    let cross = m * f_big - big_m * f_small;
    if cross == 0.0 {
        return Err(Error::InvalidParameter(
            "m f(M) = M f(m): the constant degenerates to 0 * inf".into(),
        ));
    }
    let lead = cross / ((p - 1.0) * (big_m - m));
    let inner = (p - 1.0) * (f_big - f_small) / (p * cross);
    let k = lead * inner.powf(p);
    if !k.is_finite() {
        return Err(Error::NumericalBreakdown(format!("K(M, m, f, p) evaluated to {k}")));
    }
    Ok(k)
}

/// Kantorovich constant `K(M, m, p) = K(M, m, t^p, p)`.
///
/// Symmetric in `(M, m)` and a function of `M / m` only. Returns the
/// continuous extension `1` at `p = 1` and when `M = m`.
pub fn kantorovich(big_m: f64, m: f64, p: f64) -> Result<f64> {
    if !(m.is_finite() && big_m.is_finite() && m > 0.0 && big_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "window endpoints must be positive, got m={m}, M={big_m}"
        )));
    }
    if !p.is_finite() || p == 0.0 {
        return Err(Error::InvalidParameter(format!("K(M, m, p) needs finite p != 0, got {p}")));
    }
    if p == 1.0 || big_m == m {
        return Ok(1.0);
    }
    // normalize to the window [1, h]
    let h = big_m.max(m) / big_m.min(m);
    let hp = h.powf(p);
    let lead = (hp - h) / ((p - 1.0) * (h - 1.0));
    let inner = (p - 1.0) * (hp - 1.0) / (p * (hp - h));
    let k = lead * inner.powf(p);
    if !k.is_finite() {
        return Err(Error::NumericalBreakdown(format!("K({big_m}, {m}, {p}) evaluated to {k}")));
    }
    Ok(k)
}
