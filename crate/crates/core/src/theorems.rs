//! Numerical checks of the inequality chain.
//!
//! Every checker evaluates one inequality `lhs <= rhs` per item (a ball, a
//! level, an exponent) and reports the normalized gap
//! `(rhs - lhs) / max(|lhs|, |rhs|)` of the worst item as the margin. An item
//! passes when its margin is at least `-TOLERANCE`; margins within
//! `TOLERANCE` of zero are reported as [`Status::Boundary`]. An item whose
//! left-hand set is empty is vacuous, and a report is vacuous when all of
//! its items are.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::balls::{balls_within, five_r_cover, Ball, BallFamily, RadiusPolicy};
use crate::czdecomp::{cz_nested, phi_sequence, JnConstants};
use crate::numeric::{sum, Accumulator};
use crate::space::{DoublingProfile, Space};
use crate::special::{lgamma, ln_beta};
use crate::weights::{
    power_mean, rhi_constant, weak_ainfty_beta, wgr_epsilon, BallPair, RhsBall, SetStats, Weight,
};
use crate::{Error, Result};

pub use crate::numeric::TOLERANCE;
pub use crate::special::beta_fn;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Boundary,
    Fail,
}

/// What a row or a report margin refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    Ball(Ball),
    Lambda { lambda: f64 },
    Alpha { alpha: f64 },
    Exponent { p: f64 },
    Y { y: f64 },
    Point { index: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Params {
    pub c_mu: Option<f64>,
    #[serde(rename = "D")]
    pub dimension_d: Option<f64>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub eps: Option<f64>,
    pub eps_source: Option<String>,
    pub alpha: Option<f64>,
    #[serde(rename = "A")]
    pub a_const: Option<f64>,
    pub lambda0: Option<f64>,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub tolerance: f64,
    #[serde(flatten)]
    pub extra: BTreeMap<String, f64>,
}

impl Params {
    pub(crate) fn new() -> Self {
        Self {
            tolerance: TOLERANCE,
            ..Self::default()
        }
    }

    fn with_constants(k: &JnConstants, eps_source: &str) -> Self {
        Self {
            c_mu: Some(k.c_mu),
            dimension_d: Some(k.dimension_d),
            sigma: Some(k.sigma),
            eta: Some(k.eta),
            eps: Some(k.eps),
            eps_source: Some(eps_source.into()),
            alpha: Some(k.alpha),
            a_const: Some(k.a_const),
            lambda0: Some(k.lambda0),
            c0: Some(k.c0),
            c: Some(k.c_final),
            ..Self::new()
        }
    }

    pub(crate) fn set(&mut self, key: &str, v: f64) {
        self.extra.insert(key.into(), v);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Row {
    pub key: Witness,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub vacuous: bool,
}

impl Row {
    pub(crate) fn new(key: Witness, lhs: f64, rhs: f64, vacuous: bool) -> Self {
        Self {
            key,
            lhs,
            rhs,
            margin: gap(lhs, rhs),
            vacuous,
        }
    }

    /// Two-sided comparison: the margin is minus the relative difference.
    fn equality(key: Witness, lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let margin = if scale == 0.0 {
            0.0
        } else {
            -(lhs - rhs).abs() / scale
        };
        Self {
            key,
            lhs,
            rhs,
            margin,
            vacuous: false,
        }
    }
}

/// `(rhs - lhs) / max(|lhs|, |rhs|)`, and 0 when both vanish.
pub fn gap(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (rhs - lhs) / scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub vacuous: bool,
    /// Reported for information only; not a claim of the theory.
    pub observational: bool,
    pub status: Status,
    pub margin: f64,
    pub witness: Option<Witness>,
    pub params: Params,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl CheckReport {
    pub(crate) fn assemble(
        name: &str,
        params: Params,
        rows: Vec<Row>,
        notes: Vec<String>,
        equality: bool,
    ) -> Self {
        let mut worst: Option<&Row> = None;
        for r in &rows {
            if worst.is_none_or(|w| r.margin < w.margin) {
                worst = Some(r);
            }
        }
        let margin = worst.map_or(f64::INFINITY, |r| r.margin);
        let status = if margin < -TOLERANCE {
            Status::Fail
        } else if equality || margin > TOLERANCE {
            Status::Pass
        } else {
            Status::Boundary
        };
        Self {
            name: name.into(),
            passed: margin >= -TOLERANCE,
            vacuous: rows.iter().all(|r| r.vacuous),
            observational: false,
            status,
            margin,
            witness: worst.map(|r| r.key),
            params,
            notes,
            rows,
        }
    }

    pub fn non_vacuous_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.vacuous).count()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must be >= 1"
        )));
    }
    Ok(())
}

fn check_lambda(eps: f64, lambda: f64) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
    }
    if !(eps < lambda && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need eps < lambda < 1, got eps = {eps}, lambda = {lambda}"
        )));
    }
    Ok(())
}

/// Uses `supplied` if given after confirming it bounds the measured value.
fn resolve(
    measured: (f64, Option<Ball>),
    supplied: Option<f64>,
    what: &str,
) -> Result<(f64, &'static str)> {
    match supplied {
        None => Ok((measured.0, "measured")),
        Some(v) => {
            if measured.0 > v * (1.0 + TOLERANCE) {
                return Err(Error::Hypothesis {
                    detail: format!(
                        "supplied {what} = {v} is below the measured value {}",
                        measured.0
                    ),
                    witness: measured.1,
                });
            }
            Ok((v, "supplied"))
        }
    }
}

fn measured_or_zero(r: Result<crate::weights::ConditionReport>) -> Result<(f64, Option<Ball>)> {
    match r {
        Ok(rep) => Ok((rep.value, Some(rep.witness))),
        Err(Error::NoData(_)) => Ok((0.0, None)),
        Err(e) => Err(e),
    }
}

/// Per-ball check of `w(B ∩ {(1 - eps/lambda) w >= w_{sigma B}}) <= lambda w(sigma B)`.
pub fn check_thm_superlevel(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    eps: Option<f64>,
    lambda: f64,
) -> Result<CheckReport> {
    check_sigma(sigma)?;
    let measured = measured_or_zero(wgr_epsilon(space, w, balls, sigma))?;
    let (eps, source) = resolve(measured, eps, "eps")?;
    check_lambda(eps, lambda)?;
    let wv = w.values();
    let factor = 1.0 - eps / lambda;
    let rows: Vec<Option<Row>> = balls
        .par_iter()
        .map(|b| {
            let pair = BallPair::new(space, wv, b, sigma);
            let ws = pair.outer_stats.integral;
            if ws <= 0.0 {
                return None;
            }
            let a = pair.outer_stats.average().ok()?;
            // At eps = 0 the hypothesis holds for every eps' > 0 and the sets
            // increase to {w > w_{sigma B}} as eps' decreases.
            let (mu_e, w_e) =
                pair.restricted(
                    space,
                    wv,
                    |x| if eps > 0.0 { factor * x >= a } else { x > a },
                );
            Some(Row::new(Witness::Ball(*b), w_e, lambda * ws, mu_e == 0.0))
        })
        .collect();
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let mut params = Params::new();
    params.sigma = Some(sigma);
    params.eps = Some(eps);
    params.eps_source = Some(source.into());
    params.set("lambda", lambda);
    params.set("skipped_balls", skipped as f64);
    Ok(CheckReport::assemble(
        "thm_superlevel",
        params,
        rows.into_iter().flatten().collect(),
        Vec::new(),
        false,
    ))
}

/// Oscillation coefficient obtained by feeding the superlevel bound at
/// `lambda` (as `alpha = 1 - eps/lambda`, `beta = lambda`) into
/// [`check_thm_osc_from_ainfty`].
pub fn composed_oscillation_coefficient(eps: f64, lambda: f64) -> f64 {
    1.0 - (1.0 - eps / lambda) * (1.0 - lambda)
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {v} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// Per-ball check of `int_B (w - w_{sigma B})_+ <= (1 - alpha (1 - beta)) w(sigma B)`.
pub fn check_thm_osc_from_ainfty(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    alpha: f64,
    beta: Option<f64>,
) -> Result<CheckReport> {
    check_sigma(sigma)?;
    check_unit_open("alpha", alpha)?;
    let measured = measured_or_zero(weak_ainfty_beta(space, w, balls, sigma, alpha))?;
    let (beta, source) = resolve(measured, beta, "beta")?;
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "beta = {beta} must lie in [0, 1)"
        )));
    }
    let coeff = 1.0 - alpha * (1.0 - beta);
    let wv = w.values();
    let rows: Vec<Option<Row>> = balls
        .par_iter()
        .map(|b| {
            let pair = BallPair::new(space, wv, b, sigma);
            let ws = pair.outer_stats.integral;
            if ws <= 0.0 {
                return None;
            }
            let a = pair.outer_stats.average().ok()?;
            let osc = pair.positive_part(space, wv, a);
            Some(Row::new(Witness::Ball(*b), osc, coeff * ws, osc == 0.0))
        })
        .collect();
    let mut params = Params::new();
    params.sigma = Some(sigma);
    params.alpha = Some(alpha);
    params.set("beta", beta);
    params.set("coefficient", coeff);
    params.eps_source = Some(format!("beta {source}"));
    Ok(CheckReport::assemble(
        "thm_osc_from_ainfty",
        params,
        rows.into_iter().flatten().collect(),
        Vec::new(),
        false,
    ))
}

/// Per-ball check of `mu(B ∩ {w <= (1 - eps/lambda) w_{sigma B}}) <= lambda mu(B)`
/// under `avg_B (w - w_{sigma B})_- <= eps w_{sigma B}`. Balls with
/// `w_{sigma B} = 0` are skipped.
pub fn check_thm_neg_superlevel(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    eps: Option<f64>,
    lambda: f64,
) -> Result<CheckReport> {
    check_sigma(sigma)?;
    let measured = measured_or_zero(crate::weights::neg_wgr_epsilon(space, w, balls, sigma))?;
    let (eps, source) = resolve(measured, eps, "eps")?;
    check_lambda(eps, lambda)?;
    let wv = w.values();
    let factor = 1.0 - eps / lambda;
    let rows: Vec<Option<Row>> = balls
        .par_iter()
        .map(|b| {
            let pair = BallPair::new(space, wv, b, sigma);
            let a = pair.outer_stats.average().ok()?;
            if a <= 0.0 {
                return None;
            }
            let (mu_e, _) =
                pair.restricted(
                    space,
                    wv,
                    |x| if eps > 0.0 { x <= factor * a } else { x < a },
                );
            Some(Row::new(
                Witness::Ball(*b),
                mu_e,
                lambda * pair.inner_stats.measure,
                mu_e == 0.0,
            ))
        })
        .collect();
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let mut params = Params::new();
    params.sigma = Some(sigma);
    params.eps = Some(eps);
    params.eps_source = Some(source.into());
    params.set("lambda", lambda);
    params.set("skipped_balls", skipped as f64);
    Ok(CheckReport::assemble(
        "thm_neg_superlevel",
        params,
        rows.into_iter().flatten().collect(),
        Vec::new(),
        false,
    ))
}

/// Per-ball check of `avg_B (w - w_{sigma B})_- <= (1 - (1 - alpha) beta) w_{sigma B}`
/// under `mu(B ∩ {w <= beta w_{sigma B}}) <= alpha mu(B)`. Balls with
/// `w_{sigma B} = 0` are skipped.
pub fn check_thm_neg_osc(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    alpha: Option<f64>,
    beta: f64,
) -> Result<CheckReport> {
    check_sigma(sigma)?;
    check_unit_open("beta", beta)?;
    let measured = measured_or_zero(crate::weights::sublevel_alpha(space, w, balls, sigma, beta))?;
    let (alpha, source) = resolve(measured, alpha, "alpha")?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must lie in [0, 1)"
        )));
    }
    let coeff = 1.0 - (1.0 - alpha) * beta;
    let wv = w.values();
    let rows: Vec<Option<Row>> = balls
        .par_iter()
        .map(|b| {
            let pair = BallPair::new(space, wv, b, sigma);
            let a = pair.outer_stats.average().ok()?;
            if a <= 0.0 {
                return None;
            }
            let neg = pair.negative_part(space, wv, a) / pair.inner_stats.measure;
            Some(Row::new(Witness::Ball(*b), neg, coeff * a, neg == 0.0))
        })
        .collect();
    let mut params = Params::new();
    params.sigma = Some(sigma);
    params.alpha = Some(alpha);
    params.set("beta", beta);
    params.set("coefficient", coeff);
    params.eps_source = Some(format!("alpha {source}"));
    Ok(CheckReport::assemble(
        "thm_neg_osc",
        params,
        rows.into_iter().flatten().collect(),
        Vec::new(),
        false,
    ))
}

/// `C^{-floor(log2(5 sigma^2)) - 1}`.
pub fn lemma23_threshold(profile: &DoublingProfile, sigma: f64) -> f64 {
    let k = (5.0 * sigma * sigma).log2().floor() + 1.0;
    profile.c_mu.powf(-k)
}

/// Observational report: for each `alpha`, whether the superlevel bound
/// holds with some `beta` below the threshold, plus the reverse Hölder
/// ratio for each `p`. `passed` records whether some `alpha` qualifies.
pub fn check_lemma23_empirical(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    profile: &DoublingProfile,
    alphas: &[f64],
    p_grid: &[f64],
) -> Result<CheckReport> {
    check_sigma(sigma)?;
    let threshold = lemma23_threshold(profile, sigma);
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &a in alphas {
        check_unit_open("alpha", a)?;
        let beta = measured_or_zero(weak_ainfty_beta(space, w, balls, sigma, a))?.0;
        // Strict inequality: a zero gap counts against the condition.
        let mut row = Row::new(Witness::Alpha { alpha: a }, beta, threshold, false);
        if beta >= threshold {
            row.margin = row.margin.min(-2.0 * TOLERANCE);
        }
        notes.push(format!(
            "alpha = {a}: beta = {beta}, condition (ii) {}",
            if beta < threshold { "holds" } else { "fails" }
        ));
        rows.push(row);
    }
    let mut params = Params::new();
    params.c_mu = Some(profile.c_mu);
    params.dimension_d = Some(profile.dimension_d);
    params.sigma = Some(sigma);
    params.set("beta_threshold", threshold);
    for &p in p_grid {
        let v = measured_or_zero(rhi_constant(
            space,
            w,
            balls,
            sigma,
            p,
            RhsBall::SigmaDilate,
        ))?
        .0;
        params.set(&format!("rhi_p{p}"), v);
        notes.push(format!("p = {p}: rhi constant = {v}"));
    }
    // The best alpha decides.
    let best = rows.iter().copied().fold(None::<Row>, |acc, r| match acc {
        Some(b) if b.margin >= r.margin => Some(b),
        _ => Some(r),
    });
    let mut report = CheckReport::assemble(
        "lemma23_empirical",
        params,
        best.into_iter().collect(),
        notes,
        false,
    );
    report.rows = rows;
    report.observational = true;
    Ok(report)
}

/// Hypotheses and constants shared by the decay-type checks around a base
/// ball `B0`.
pub struct JnContext {
    pub base: Ball,
    pub sigma: f64,
    pub eta: f64,
    pub profile: DoublingProfile,
    pub constants: JnConstants,
    pub eps_source: &'static str,
    pub eps_witness: Option<Ball>,
    /// `w_{sigma B̂0}`.
    pub w_big: f64,
    base_pts: Vec<usize>,
    hat_pts: Vec<usize>,
}

/// Optional overrides for [`JnContext`].
#[derive(Clone, Copy, Debug, Default)]
pub struct JnOptions {
    pub eps: Option<f64>,
    pub profile: Option<DoublingProfile>,
}

impl JnContext {
    /// Measures `eps` over every ball whose `sigma`-dilate lies in
    /// `sigma B̂0`, unless supplied; the doubling constant defaults to the
    /// exact one of the space.
    pub fn new(
        space: &Space,
        w: &Weight,
        sigma: f64,
        eta: f64,
        base: Ball,
        opts: JnOptions,
    ) -> Result<Self> {
        Self::build(space, w, sigma, eta, base, opts, true)
    }

    fn build(
        space: &Space,
        w: &Weight,
        sigma: f64,
        eta: f64,
        base: Ball,
        opts: JnOptions,
        verify: bool,
    ) -> Result<Self> {
        w.check_len(space)?;
        check_sigma(sigma)?;
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta = {eta} must be positive"
            )));
        }
        let base_pts = space.members(&base);
        if base_pts.is_empty() {
            return Err(Error::EmptyBall(base));
        }
        let hat = base.scaled(1.0 + eta);
        let outer = hat.scaled(sigma);
        let w_big = SetStats::of(space, w.values(), &space.members(&outer)).average()?;
        if w_big <= 0.0 {
            return Err(Error::DegenerateWeight(format!(
                "w vanishes on sigma(1+eta)B0 = ({}, {})",
                outer.center, outer.radius
            )));
        }
        let profile = match opts.profile {
            Some(p) => p,
            None => DoublingProfile::exact(space)?,
        };
        let (eps, eps_source, eps_witness) = match (opts.eps, verify) {
            (Some(e), false) => (e, "supplied", None),
            _ => {
                let balls = balls_within(space, &outer, sigma)?;
                let m = measured_or_zero(wgr_epsilon(space, w, &balls, sigma))?;
                let (e, src) = resolve(m, opts.eps, "eps")?;
                (e, src, m.1)
            }
        };
        let constants = JnConstants::new(&profile, sigma, eta, eps)?;
        Ok(Self {
            base,
            sigma,
            eta,
            profile,
            constants,
            eps_source,
            eps_witness,
            w_big,
            base_pts,
            hat_pts: space.members(&hat),
        })
    }

    pub fn eps(&self) -> f64 {
        self.constants.eps
    }

    fn params(&self) -> Params {
        let mut p = Params::with_constants(&self.constants, self.eps_source);
        p.set("w_sigma_hat", self.w_big);
        p
    }

    /// `int_{B̂0} (w - W)_+`.
    fn hat_excess(&self, space: &Space, w: &Weight) -> f64 {
        excess_integral(space, w.values(), &self.hat_pts, self.w_big, 1.0)
    }

    /// `(w - W)_+ / W` on `B0`.
    fn relative_excess(&self, w: &Weight) -> Vec<f64> {
        self.base_pts
            .iter()
            .map(|&i| (w.values()[i] - self.w_big).max(0.0) / self.w_big)
            .collect()
    }

    /// `mu({x in B0 : (w - W)_+ > lambda W})`.
    fn superlevel_measure(&self, space: &Space, w: &Weight, lambda: f64) -> f64 {
        let wv = w.values();
        let mut acc = Accumulator::new();
        for &i in &self.base_pts {
            if (wv[i] - self.w_big).max(0.0) > lambda * self.w_big {
                acc.add(space.mass(i));
            }
        }
        acc.value()
    }

    fn require_threshold(&self) -> Result<()> {
        let threshold = self.constants.eps_threshold();
        if !(self.eps() < threshold) {
            return Err(Error::Threshold {
                eps: self.eps(),
                threshold,
            });
        }
        Ok(())
    }

    fn require_exponent(&self, p: f64) -> Result<()> {
        let cap = self.constants.exponent_cap();
        if !(p > 1.0 && p <= cap) {
            return Err(Error::InvalidExponent(
                p,
                format!("need 1 < p <= 1/(2 A eps) = {cap}"),
            ));
        }
        Ok(())
    }

    /// Right-hand side of the decay estimate at `lambda`, from logarithms.
    pub fn decay_bound(&self, integral: f64, lambda: f64) -> f64 {
        if integral == 0.0 {
            return 0.0;
        }
        let k = &self.constants;
        let ae = k.a_const * k.eps;
        (-(lambda.ln_1p()) / ae + k.ln_c_final - (k.eps * self.w_big).ln() + integral.ln()).exp()
    }

    /// Constant of the power estimate with the exact beta value, and `ln`
    /// of the beta factor (`None` in the `eps = 0` limit).
    pub fn osc_constant(&self, p: f64) -> Result<(f64, Option<f64>)> {
        let k = &self.constants;
        let first = p * (k.alpha * k.c_mu * k.sigma.powf(k.dimension_d)).powf(p - 1.0);
        if k.eps == 0.0 {
            // B(p, y - p) y^p -> Gamma(p) as y -> infinity.
            let second = (p.ln() + lgamma(p) + p * k.a_const.ln() + k.ln_c_final).exp();
            return Ok((first + second, None));
        }
        let y = 1.0 / (k.a_const * k.eps);
        let lb = ln_beta(p, y - p)?;
        let second = (p.ln() + lb + k.ln_c_final - p * k.eps.ln()).exp();
        Ok((first + second, Some(lb)))
    }

    /// `C` of the weak reverse Hölder estimate: `C^p = C_osc C ((1+eta) sigma)^D`.
    pub fn weak_rhi_constant(&self, p: f64) -> Result<f64> {
        let k = &self.constants;
        let (c_osc, _) = self.osc_constant(p)?;
        Ok((c_osc * k.c_mu * ((1.0 + k.eta) * k.sigma).powf(k.dimension_d)).powf(1.0 / p))
    }
}

fn excess_integral(space: &Space, w: &[f64], set: &[usize], level: f64, p: f64) -> f64 {
    let mut acc = Accumulator::new();
    for &i in set {
        let d = w[i] - level;
        if d > 0.0 {
            acc.add(if p == 1.0 { d } else { d.powf(p) } * space.mass(i));
        }
    }
    acc.value()
}

/// `n` points spaced evenly in `log` between `lo` and `hi`, ends included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == n - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub const DEFAULT_LAMBDA_POINTS: usize = 20;

/// Decay estimate on `B0` at each level of `lambda_grid` (all `>= lambda0`).
/// The default grid has 20 points from `lambda0` to
/// `max(2 lambda0, 2 max (w - W)_+ / W)`.
pub fn check_jn_decay(
    ctx: &JnContext,
    space: &Space,
    w: &Weight,
    lambda_grid: Option<&[f64]>,
) -> Result<CheckReport> {
    let k = ctx.constants;
    let mut params = ctx.params();
    let rel = ctx.relative_excess(w);
    let max_osc = rel.iter().copied().fold(0.0, f64::max);
    params.set("max_relative_excess", max_osc);
    if k.eps == 0.0 {
        let notes = vec![
            "eps = 0: the weight does not oscillate above its average; nothing to check".into(),
        ];
        return Ok(CheckReport::assemble(
            "jn_decay",
            params,
            Vec::new(),
            notes,
            false,
        ));
    }
    let grid: Vec<f64> = match lambda_grid {
        Some(g) => {
            if let Some(&bad) = g.iter().find(|&&l| !(l >= k.lambda0)) {
                return Err(Error::InvalidParameter(format!(
                    "lambda = {bad} is below lambda0 = {}",
                    k.lambda0
                )));
            }
            g.to_vec()
        }
        None => log_grid(
            k.lambda0,
            (2.0 * k.lambda0).max(2.0 * max_osc),
            DEFAULT_LAMBDA_POINTS,
        ),
    };
    let integral = ctx.hat_excess(space, w);
    params.set("hat_excess_integral", integral);
    let rows: Vec<Row> = grid
        .par_iter()
        .map(|&l| {
            let lhs = ctx.superlevel_measure(space, w, l);
            Row::new(
                Witness::Lambda { lambda: l },
                lhs,
                ctx.decay_bound(integral, l),
                lhs == 0.0,
            )
        })
        .collect();
    let mut notes = Vec::new();
    let nv = rows.iter().filter(|r| !r.vacuous).count();
    if nv == 0 {
        notes.push(format!(
            "all levels vacuous: lambda0 = {} exceeds the largest relative excess {max_osc}",
            k.lambda0
        ));
    }
    params.set("non_vacuous_points", nv as f64);
    Ok(CheckReport::assemble(
        "jn_decay", params, rows, notes, false,
    ))
}

/// Contraction between consecutive Calderón–Zygmund levels: along
/// `lambda_{k+1} = phi(lambda_k)` the decompositions of `(w - W)_+` at
/// `lambda_k W` satisfy `sum mu(B_{k+1}) <= C (5 sigma)^D eps (1 + lambda_k)
/// / (lambda_{k+1} - lambda_k) sum mu(B_k)`. Uses the exhaustive radius
/// family and stops at the first level whose level set is empty.
pub fn check_jn_contraction(
    ctx: &JnContext,
    space: &Space,
    w: &Weight,
    max_levels: usize,
) -> Result<CheckReport> {
    let k = ctx.constants;
    let mut params = ctx.params();
    if k.eps == 0.0 {
        let notes = vec!["eps = 0: no level set to decompose".into()];
        return Ok(CheckReport::assemble(
            "jn_contraction",
            params,
            Vec::new(),
            notes,
            false,
        ));
    }
    let family = crate::balls::build_family_with(
        space,
        ctx.base,
        ctx.eta,
        ctx.sigma,
        RadiusPolicy::Exhaustive,
    )?;
    let f = w.excess_over(ctx.w_big);
    let levels = phi_sequence(k.a_const, k.eps, k.lambda0, max_levels);
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for pair in levels.windows(2) {
        let (delta, lambda) = (pair[0], pair[1]);
        let key = Witness::Lambda { lambda };
        match nested_masses(
            space,
            &f,
            delta * ctx.w_big,
            lambda * ctx.w_big,
            &family,
            &ctx.profile,
        )? {
            None => {
                notes.push(format!(
                    "level set at lambda = {delta} is empty; chain ends"
                ));
                break;
            }
            Some((lo, hi)) => {
                let factor = k.contraction_factor(delta, lambda);
                rows.push(Row::new(key, hi, factor * lo, hi == 0.0));
                if hi == 0.0 {
                    notes.push(format!(
                        "level set at lambda = {lambda} is empty; chain ends"
                    ));
                    break;
                }
            }
        }
    }
    params.set("levels_checked", rows.len() as f64);
    Ok(CheckReport::assemble(
        "jn_contraction",
        params,
        rows,
        notes,
        false,
    ))
}

/// Total measures of the nested decompositions at `(lo, hi)`: `None` when
/// the low level set is empty, high measure 0 when only the high one is.
fn nested_masses(
    space: &Space,
    f: &Weight,
    lo: f64,
    hi: f64,
    family: &BallFamily,
    profile: &DoublingProfile,
) -> Result<Option<(f64, f64)>> {
    let mf = crate::czdecomp::maximal_function(space, f, family)?;
    let region = space.members(&family.enlarged_base());
    if crate::czdecomp::level_set(&mf, lo, &region).is_empty() {
        return Ok(None);
    }
    if crate::czdecomp::level_set(&mf, hi, &region).is_empty() {
        let low = crate::czdecomp::cz_decompose(space, f, lo, family, profile)?;
        return Ok(Some((low.total_measure(space), 0.0)));
    }
    let (low, high, _) = cz_nested(space, f, lo, hi, family, profile)?;
    Ok(Some((low.total_measure(space), high.total_measure(space))))
}

/// `int_{B0} (w - W)_+^p <= C eps^{p-1} W^{p-1} int_{B̂0} (w - W)_+` with
/// `C = p (alpha C sigma^D)^{p-1} + p B(p, 1/(A eps) - p) C_decay eps^{-p}`.
pub fn check_osc_rhi(ctx: &JnContext, space: &Space, w: &Weight, p: f64) -> Result<CheckReport> {
    ctx.require_threshold()?;
    ctx.require_exponent(p)?;
    let k = ctx.constants;
    let (c_osc, ln_b) = ctx.osc_constant(p)?;
    let integral = ctx.hat_excess(space, w);
    let lhs = excess_integral(space, w.values(), &ctx.base_pts, ctx.w_big, p);
    let rhs = if integral == 0.0 {
        0.0
    } else {
        (c_osc.ln() + (p - 1.0) * (k.eps.ln() + ctx.w_big.ln()) + integral.ln()).exp()
    };
    let mut params = ctx.params();
    params.set("p", p);
    params.set("C_osc", c_osc);
    if let Some(lb) = ln_b {
        params.set("beta", lb.exp());
    }
    params.set("exponent_cap", k.exponent_cap());
    let rows = vec![Row::new(Witness::Exponent { p }, lhs, rhs, lhs == 0.0)];
    Ok(CheckReport::assemble(
        "osc_rhi",
        params,
        rows,
        Vec::new(),
        false,
    ))
}

/// `(avg_{B0} w^p)^{1/p} <= (C eps + 1) w_{sigma B̂0}`.
pub fn check_weak_rhi(ctx: &JnContext, space: &Space, w: &Weight, p: f64) -> Result<CheckReport> {
    let (row, c) = weak_rhi_row(ctx, space, w, p)?;
    let mut params = ctx.params();
    params.set("p", p);
    params.set("C_rhi", c);
    params.set("exponent_cap", ctx.constants.exponent_cap());
    Ok(CheckReport::assemble(
        "weak_rhi",
        params,
        vec![row],
        Vec::new(),
        false,
    ))
}

fn weak_rhi_row(ctx: &JnContext, space: &Space, w: &Weight, p: f64) -> Result<(Row, f64)> {
    ctx.require_threshold()?;
    ctx.require_exponent(p)?;
    let c = ctx.weak_rhi_constant(p)?;
    let lhs = power_mean(space, w.values(), &ctx.base_pts, p)?;
    let rhs = (c * ctx.eps() + 1.0) * ctx.w_big;
    Ok((Row::new(Witness::Ball(ctx.base), lhs, rhs, false), c))
}

/// `(avg_{B0} w^p)^{1/p} <= C avg_{sigma B0} w` through the 5r cover: the
/// weak estimate is applied on each cover ball with the global `eps`, and
/// `C = (C_rhi eps + 1) C^{2 + 1/p} (sigma/(sigma - 1))^D N^{1/p}`.
pub fn check_final_rhi(ctx: &JnContext, space: &Space, w: &Weight, p: f64) -> Result<CheckReport> {
    ctx.require_threshold()?;
    ctx.require_exponent(p)?;
    let k = ctx.constants;
    let sigma = ctx.sigma;
    let cover = five_r_cover(space, ctx.base, sigma, ctx.eta, &ctx.profile)?;
    let opts = JnOptions {
        eps: Some(k.eps),
        profile: Some(ctx.profile),
    };
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for b in &cover.balls {
        match JnContext::build(space, w, sigma, ctx.eta, *b, opts, false) {
            Ok(sub) => rows.push(weak_rhi_row(&sub, space, w, p)?.0),
            // w = 0 on sigma B̂_i: both sides of the sub-estimate vanish.
            Err(Error::DegenerateWeight(_)) => {
                rows.push(Row::new(Witness::Ball(*b), 0.0, 0.0, true))
            }
            Err(e) => return Err(e),
        }
    }
    if !cover.all_ok() {
        notes.push(format!(
            "cover postconditions: fifth_disjoint = {}, covers_base = {}, contained = {}, count {} <= {} is {}",
            cover.fifth_disjoint,
            cover.covers_base,
            cover.contained.iter().all(|&c| c),
            cover.balls.len(),
            cover.count_bound,
            cover.count_ok
        ));
        rows.push(Row::new(Witness::Ball(ctx.base), 1.0, 0.0, false));
    }
    let n = cover.balls.len() as f64;
    let c_rhi = ctx.weak_rhi_constant(p)?;
    let d = k.dimension_d;
    let c_total = (c_rhi * k.eps + 1.0)
        * k.c_mu.powf(2.0 + 1.0 / p)
        * (sigma / (sigma - 1.0)).powf(d)
        * n.powf(1.0 / p);
    let lhs = power_mean(space, w.values(), &ctx.base_pts, p)?;
    let avg = SetStats::of(space, w.values(), &space.members(&ctx.base.scaled(sigma))).average()?;
    rows.push(Row::new(Witness::Exponent { p }, lhs, c_total * avg, false));
    let mut params = ctx.params();
    params.set("p", p);
    params.set("C_rhi", c_rhi);
    params.set("C_total", c_total);
    params.set("cover_size", n);
    params.set("cover_count_bound", cover.count_bound);
    Ok(CheckReport::assemble(
        "final_rhi",
        params,
        rows,
        notes,
        false,
    ))
}

/// `|B(p, y - p) y^p / Gamma(p) - 1|` along `ys`: bounded by `K / y` with a
/// fitted `K`, and nonincreasing over the entries with `y >= 10 p`.
pub fn beta_asymptotic_check(p: f64, ys: &[f64]) -> Result<CheckReport> {
    let mut ys = ys.to_vec();
    ys.sort_by(f64::total_cmp);
    let mut devs = Vec::with_capacity(ys.len());
    for &y in &ys {
        if !(y > p) {
            return Err(Error::Domain(format!("need y > p, got y = {y}, p = {p}")));
        }
        let ratio = (ln_beta(p, y - p)? + p * y.ln() - lgamma(p)).exp();
        devs.push((y, ratio, (ratio - 1.0).abs()));
    }
    let far: Vec<&(f64, f64, f64)> = devs.iter().filter(|d| d.0 >= 10.0 * p).collect();
    let k_fit = far.iter().map(|d| d.2 * d.0).fold(0.0, f64::max);
    let mut rows: Vec<Row> = far
        .iter()
        .map(|d| Row::new(Witness::Y { y: d.0 }, d.2, k_fit / d.0, false))
        .collect();
    for w in far.windows(2) {
        rows.push(Row::new(Witness::Y { y: w[1].0 }, w[1].2, w[0].2, false));
    }
    let mut params = Params::new();
    params.set("p", p);
    params.set("K", k_fit);
    let notes = devs
        .iter()
        .map(|d| format!("y = {}: ratio = {}", d.0, d.1))
        .collect();
    Ok(CheckReport::assemble(
        "beta_asymptotic",
        params,
        rows,
        notes,
        false,
    ))
}

/// `int_region f^p` against the layer-cake sum over the distinct levels of
/// `f`, which is exact for a step function:
/// `sum_k mu({f > l_k}) (l_{k+1}^p - l_k^p)` with `l_0 = 0`.
pub fn cavalieri_check(space: &Space, f: &Weight, p: f64, region: &[usize]) -> Result<CheckReport> {
    f.check_len(space)?;
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p, "need p > 0".into()));
    }
    let fv = f.values();
    let direct = sum(region.iter().map(|&i| fv[i].powf(p) * space.mass(i)));
    let mut pts: Vec<(f64, f64)> = region
        .iter()
        .map(|&i| (fv[i], space.mass(i)))
        .filter(|x| x.0 > 0.0)
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // mu({f > l}) for l just below each distinct level, descending scan.
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for (v, m) in pts {
        match levels.last_mut() {
            Some(last) if last.0 == v => last.1 += m,
            _ => levels.push((v, m)),
        }
    }
    let mut above = Accumulator::new();
    let mut tail: Vec<f64> = vec![0.0; levels.len()];
    for k in (0..levels.len()).rev() {
        above.add(levels[k].1);
        tail[k] = above.value();
    }
    let mut layered = Accumulator::new();
    let mut prev = 0.0f64;
    for (k, &(l, _)) in levels.iter().enumerate() {
        layered.add(tail[k] * (l.powf(p) - prev.powf(p)));
        prev = l;
    }
    let mut params = Params::new();
    params.set("p", p);
    let rows = vec![Row::equality(
        Witness::Exponent { p },
        direct,
        layered.value(),
    )];
    Ok(CheckReport::assemble(
        "cavalieri",
        params,
        rows,
        Vec::new(),
        true,
    ))
}
