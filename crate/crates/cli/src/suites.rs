//! The `verify` suites: per-trial checks over seeded random instances.
//!
//! Every check produces a [`CheckRow`] with a signed margin. Loewner checks
//! carry the relative margin `lambda_min(RHS - LHS) / |RHS|` and hold when it
//! is at least `-LOEWNER_MARGIN`; scalar checks carry `tolerance - deviation`
//! and hold when it is nonnegative (or strictly positive for strict ones).

use std::collections::BTreeMap;

use opmean::bounds::{
    check_ah_deformed, check_ah_karcher, check_ah_power, check_lemma_contraction, check_lemma_jensen,
    check_reverse_ah_deformed, check_reverse_ah_power, compare, kantorovich, kantorovich_f, spectral_window,
    CheckContext, InequalityReport,
};
use opmean::means::{binary_mean, MeanSpec, RepresentingFunction, Weights};
use opmean::random::{collect_trials, random_invertible, sample, sample_inputs, trial_rng, PdLaw, RandomPDSource};
use opmean::tensor::{congruence, thompson_metric, GaugeNorm, HermitianTensor, Tensor};
use opmean::Result;
use rand::Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// Relative Loewner margin accepted as rounding noise.
pub const LOEWNER_MARGIN: f64 = 1e-8;
/// `|M(I, .., I) - I|` allowed by the normalization axiom.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Relative error allowed by the congruence axiom.
pub const CONGRUENCE_REL_TOL: f64 = 1e-7;
/// Condition number of the random congruence `Z`.
pub const CONGRUENCE_COND: f64 = 100.0;
/// Additive slack in `d_T(M(X), M(Y)) <= max_i d_T(X_i, Y_i)`.
pub const NONEXPANSIVE_SLACK: f64 = 1e-9;
/// Strict contraction is asserted only for pairs at least this far apart.
pub const CONTRACTION_MIN_DISTANCE: f64 = 0.1;
/// At `p = 1` every Ando-Hiai margin must lie within this distance of zero.
pub const P1_TIGHTNESS: f64 = 1e-9;
/// Relative agreement of Kantorovich constants computed along different paths.
pub const KANTOROVICH_REL_TOL: f64 = 1e-12;

// Seed offsets of the auxiliary draws, so they never share a stream with the inputs.
const SALT_SECOND: u64 = 0x9e37_79b9;
const SALT_THIRD: u64 = 0x7f4a_7c15;
const SALT_BUMP: u64 = 0x94d0_49bb;
const SALT_CONGRUENCE: u64 = 0xbf58_476d;
const SALT_KANTOROVICH: u64 = 0x1ce4_e5b9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Axioms,
    Contraction,
    Sandwich,
    AndoHiai,
    Reverse,
    Kantorovich,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Axioms => "axioms",
            Self::Contraction => "contraction",
            Self::Sandwich => "sandwich",
            Self::AndoHiai => "ando-hiai",
            Self::Reverse => "reverse",
            Self::Kantorovich => "kantorovich",
        }
    }
}

/// One verdict of one check on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub trial: u64,
    pub holds: bool,
    pub margin: f64,
    pub witness_seed: u64,
}

/// Aggregate of all rows sharing a check name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub check: String,
    pub count: usize,
    pub violations: usize,
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: u64,
    pub checks: usize,
    pub violations: usize,
    pub flipped: bool,
    pub summary: Vec<CheckSummary>,
    pub rows: Vec<CheckRow>,
}

impl SuiteReport {
    pub fn all_hold(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Loewner,
    Slack,
    Strict,
}

/// Everything a trial needs, built once per run.
struct Env {
    k: usize,
    seed: u64,
    flip: bool,
    ctx: CheckContext,
    weights: Weights,
    q_values: Vec<f64>,
    p_values: Vec<f64>,
    source: RandomPDSource,
    second: RandomPDSource,
    third: RandomPDSource,
    bumps: RandomPDSource,
    kinds: Vec<MeanSpec>,
}

impl Env {
    fn row(&self, check: String, trial: u64, margin: f64, rule: Rule) -> CheckRow {
        let margin = if self.flip { -margin } else { margin };
        let holds = match rule {
            Rule::Loewner => margin >= -LOEWNER_MARGIN,
            Rule::Slack => margin >= 0.0,
            Rule::Strict => margin > 0.0,
        };
        CheckRow {
            check,
            trial,
            holds,
            margin,
            witness_seed: self.seed,
        }
    }

    fn report(&self, r: InequalityReport, trial: u64) -> CheckRow {
        self.row(r.name, trial, r.margin, Rule::Loewner)
    }

    fn renamed(&self, r: InequalityReport, suffix: &str, trial: u64) -> CheckRow {
        self.row(format!("{}_{suffix}", r.name), trial, r.margin, Rule::Loewner)
    }

    fn identity(&self) -> HermitianTensor {
        HermitianTensor::identity(self.source.shape.clone())
    }
}

/// Arithmetic, harmonic, Karcher, and power means at `q` and `-q` for every configured `q`.
fn mean_kinds(w: &Weights, q_values: &[f64]) -> Vec<MeanSpec> {
    let mut kinds = vec![
        MeanSpec::arithmetic(w.clone()),
        MeanSpec::harmonic(w.clone()),
        MeanSpec::karcher(w.clone()),
    ];
    for &q in q_values {
        kinds.push(MeanSpec::power(w.clone(), q));
        kinds.push(MeanSpec::power(w.clone(), -q));
    }
    kinds
}

/// Runs `suite` over trials `0..config.trials`; rows are in trial order.
pub fn run_suite(config: &ExperimentConfig, suite: Suite) -> CliResult<SuiteReport> {
    config.validate()?;
    match suite {
        Suite::Sandwich | Suite::Axioms | Suite::Contraction => config.require("q_values", &config.q_values)?,
        Suite::AndoHiai => {
            config.require("p_values", &config.p_values)?;
            config.require("q_values", &config.q_values)?;
        }
        Suite::Reverse => {
            config.require("q_values", &config.q_values)?;
            if !config.p_values.iter().any(|p| *p >= 1.0) {
                return Err(CliError::Config("the reverse suite needs some p >= 1".into()));
            }
        }
        Suite::Kantorovich => config.require("p_values", &config.p_values)?,
    }
    let weights = config.weights()?;
    let shape = config.shape.clone();
    let env = Env {
        k: config.k,
        seed: config.seed,
        flip: config.flip,
        ctx: CheckContext::new(config.tolerances, config.seed),
        kinds: mean_kinds(&weights, &config.q_values),
        weights,
        q_values: config.q_values.clone(),
        p_values: config.p_values.clone(),
        source: config.source()?,
        second: config.aux_source(SALT_SECOND)?,
        third: config.aux_source(SALT_THIRD)?,
        bumps: RandomPDSource::spectral_uniform(shape, 0.01, 1.0, config.seed.wrapping_add(SALT_BUMP))?,
    };
    let per_trial = collect_trials(config.trials, |t| match suite {
        Suite::Axioms => axioms(&env, t),
        Suite::Contraction => contraction(&env, t),
        Suite::Sandwich => sandwich(&env, t),
        Suite::AndoHiai => ando_hiai(&env, t),
        Suite::Reverse => reverse(&env, t),
        Suite::Kantorovich => kantorovich_suite(&env, t),
    })?;
    let rows: Vec<CheckRow> = per_trial.into_iter().flatten().collect();
    Ok(assemble(suite, config, rows))
}

fn assemble(suite: Suite, config: &ExperimentConfig, rows: Vec<CheckRow>) -> SuiteReport {
    let mut groups: BTreeMap<&str, CheckSummary> = BTreeMap::new();
    for row in &rows {
        let entry = groups.entry(&row.check).or_insert_with(|| CheckSummary {
            check: row.check.clone(),
            count: 0,
            violations: 0,
            min_margin: f64::INFINITY,
        });
        entry.count += 1;
        entry.violations += usize::from(!row.holds);
        entry.min_margin = entry.min_margin.min(row.margin);
    }
    SuiteReport {
        suite,
        seed: config.seed,
        trials: config.trials,
        checks: rows.len(),
        violations: rows.iter().filter(|r| !r.holds).count(),
        flipped: config.flip,
        summary: groups.into_values().collect(),
        rows,
    }
}

/// Normalization, monotonicity and congruence invariance of every mean kind.
fn axioms(env: &Env, t: u64) -> Result<Vec<CheckRow>> {
    let tol = &env.ctx.tol;
    let a = sample_inputs(&env.source, env.k, t)?;
    let b = a
        .iter()
        .zip(sample_inputs(&env.bumps, env.k, t)?)
        .map(|(x, e)| x.add(&e))
        .collect::<Result<Vec<_>>>()?;
    let d = env.source.shape.flat_dim();
    let z = random_invertible(d, CONGRUENCE_COND, &mut trial_rng(env.seed.wrapping_add(SALT_CONGRUENCE), t));
    let z = Tensor::new(env.source.shape.clone(), z)?;
    let za = a.iter().map(|x| congruence(x, &z, tol)).collect::<Result<Vec<_>>>()?;
    let id = env.identity();
    let ones = vec![id.clone(); env.k];

    let mut rows = Vec::new();
    for spec in &env.kinds {
        let label = spec.label();
        let dev = spec.eval(&ones, tol)?.max_abs_diff(&id);
        rows.push(env.row(format!("normalization[{label}]"), t, NORMALIZATION_TOL - dev, Rule::Slack));

        let ma = spec.eval(&a, tol)?;
        let mb = spec.eval(&b, tol)?;
        rows.push(env.report(compare(format!("monotonicity[{label}]"), &ma, &mb, &env.ctx)?, t));

        let lhs = congruence(&ma, &z, tol)?;
        let rhs = spec.eval(&za, tol)?;
        let rel = lhs.sub(&rhs)?.norm(GaugeNorm::Spectral) / rhs.norm(GaugeNorm::Spectral);
        rows.push(env.row(format!("congruence[{label}]"), t, CONGRUENCE_REL_TOL - rel, Rule::Slack));
    }
    Ok(rows)
}

/// Thompson nonexpansiveness of every mean kind and strict contraction of `X #_q A`.
fn contraction(env: &Env, t: u64) -> Result<Vec<CheckRow>> {
    let tol = &env.ctx.tol;
    let x = sample_inputs(&env.source, env.k, t)?;
    let y = sample_inputs(&env.second, env.k, t)?;
    let spread = x
        .iter()
        .zip(&y)
        .map(|(a, b)| thompson_metric(a, b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut rows = Vec::new();
    for spec in &env.kinds {
        let dm = thompson_metric(&spec.eval(&x, tol)?, &spec.eval(&y, tol)?)?;
        rows.push(env.row(
            format!("nonexpansive[{}]", spec.label()),
            t,
            spread + NONEXPANSIVE_SLACK - dm,
            Rule::Slack,
        ));
    }

    let a = sample(&env.third, t)?;
    let dxy = thompson_metric(&x[0], &y[0])?;
    if dxy >= CONTRACTION_MIN_DISTANCE {
        for &q in &env.q_values {
            let sigma = RepresentingFunction::power(q);
            let after = thompson_metric(&binary_mean(&x[0], &a, &sigma)?, &binary_mean(&y[0], &a, &sigma)?)?;
            rows.push(env.row(format!("strict_contraction[q={q}]"), t, dxy - after, Rule::Strict));
        }
    }
    Ok(rows)
}

/// `P_{-q} <= G <= P_q` around the Karcher mean.
fn sandwich(env: &Env, t: u64) -> Result<Vec<CheckRow>> {
    let tol = &env.ctx.tol;
    let a = sample_inputs(&env.source, env.k, t)?;
    let g = MeanSpec::karcher(env.weights.clone()).eval(&a, tol)?;
    let mut rows = Vec::new();
    for &q in &env.q_values {
        let lo = MeanSpec::power(env.weights.clone(), -q).eval(&a, tol)?;
        let hi = MeanSpec::power(env.weights.clone(), q).eval(&a, tol)?;
        rows.push(env.report(compare(format!("sandwich_lower[q={q}]"), &lo, &g, &env.ctx)?, t));
        rows.push(env.report(compare(format!("sandwich_upper[q={q}]"), &g, &hi, &env.ctx)?, t));
    }
    Ok(rows)
}

fn base_means(w: &Weights) -> [(&'static str, MeanSpec); 2] {
    [
        ("arithmetic", MeanSpec::arithmetic(w.clone())),
        ("harmonic", MeanSpec::harmonic(w.clone())),
    ]
}

/// Power, Karcher and deformed Ando-Hiai chains; at `p = 1` also the tightness of every margin.
fn ando_hiai(env: &Env, t: u64) -> Result<Vec<CheckRow>> {
    let a = sample_inputs(&env.source, env.k, t)?;
    let mut rows = Vec::new();
    for &p in &env.p_values {
        let mut reports: Vec<(InequalityReport, String)> = Vec::new();
        for r in check_ah_karcher(p, &env.weights, &a, &env.ctx)? {
            let name = r.name.clone();
            reports.push((r, name));
        }
        for &q in &env.q_values {
            for r in check_ah_power(p, q, &env.weights, &a, &env.ctx)? {
                let name = r.name.clone();
                reports.push((r, name));
            }
            for (base_name, base) in base_means(&env.weights) {
                let sigma = RepresentingFunction::power(q);
                for r in check_ah_deformed(&base, &sigma, p, &a, &env.ctx)? {
                    let name = format!("{}_{base_name}_q{q}", r.name);
                    reports.push((r, name));
                }
            }
        }
        for (r, name) in reports {
            if p == 1.0 {
                rows.push(env.row(format!("{name}_tight"), t, P1_TIGHTNESS - r.margin.abs(), Rule::Slack));
            }
            rows.push(env.row(name, t, r.margin, Rule::Loewner));
        }
    }
    Ok(rows)
}

/// Reverse chains with Kantorovich constants on the source's spectral window.
fn reverse(env: &Env, t: u64) -> Result<Vec<CheckRow>> {
    let a = sample_inputs(&env.source, env.k, t)?;
    let (m, big_m) = match env.source.law {
        PdLaw::SpectralUniform { m, big_m } => (m, big_m),
        _ => spectral_window(&a)?,
    };
    let b_raw = &a[1 % env.k];
    let b = b_raw.scale(b_raw.lambda_max().recip());

    let mut rows = Vec::new();
    for &p in env.p_values.iter().filter(|p| **p >= 1.0) {
        for &q in &env.q_values {
            for signed_q in [q, -q] {
                let r = check_reverse_ah_power(p, signed_q, m, big_m, &env.weights, &a, &env.ctx)?;
                rows.push(env.report(r, t));
            }
            for (base_name, base) in base_means(&env.weights) {
                let sigma = RepresentingFunction::power(q);
                for r in check_reverse_ah_deformed(&base, &sigma, p, m, big_m, &a, &env.ctx)? {
                    rows.push(env.renamed(r, &format!("{base_name}_q{q}"), t));
                }
            }
        }
        rows.push(env.report(check_lemma_jensen(&env.weights, &a, m, big_m, p, &env.ctx)?, t));
        rows.push(env.report(check_lemma_contraction(&a[0], &b, m, big_m, p, &env.ctx)?, t));
    }
    Ok(rows)
}

/// Order, symmetry, scale invariance and closed-form agreement of `K(M, m, p)` on random windows.
fn kantorovich_suite(env: &Env, t: u64) -> Result<Vec<CheckRow>> {
    let mut rng = trial_rng(env.seed.wrapping_add(SALT_KANTOROVICH), t);
    let m = 10f64.powf(rng.random_range(-1.0..1.0));
    let big_m = m * 10f64.powf(rng.random_range(0.01..2.0));
    let s = 10f64.powf(rng.random_range(-2.0..2.0));
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();

    let mut rows = Vec::new();
    if t == 0 {
        for (big, small, p, expected) in [(2.0, 1.0, 2.0, 1.125), (4.0, 1.0, 2.0, 25.0 / 16.0)] {
            let k = kantorovich(big, small, p)?;
            rows.push(env.row(
                format!("kantorovich_value[M={big},m={small},p={p}]"),
                t,
                KANTOROVICH_REL_TOL - (k - expected).abs(),
                Rule::Slack,
            ));
        }
    }
    for &p in &env.p_values {
        let k = kantorovich(big_m, m, p)?;
        // K >= 1 outside [0, 1] and K <= 1 inside
        let order = if p < 1.0 { 1.0 - k } else { k - 1.0 };
        rows.push(env.row(format!("kantorovich_order[p={p}]"), t, order, Rule::Slack));
        let swapped = kantorovich(m, big_m, p)?;
        rows.push(env.row(format!("kantorovich_symmetric[p={p}]"), t, KANTOROVICH_REL_TOL - rel(swapped, k), Rule::Slack));
        let scaled = kantorovich(s * big_m, s * m, p)?;
        rows.push(env.row(format!("kantorovich_scale_free[p={p}]"), t, KANTOROVICH_REL_TOL - rel(scaled, k), Rule::Slack));
        if p != 1.0 {
            let general = kantorovich_f(big_m, m, |x| x.powf(p), p)?;
            rows.push(env.row(
                format!("kantorovich_general_form[p={p}]"),
                t,
                KANTOROVICH_REL_TOL - rel(general, k),
                Rule::Slack,
            ));
        }
    }
    Ok(rows)
}
