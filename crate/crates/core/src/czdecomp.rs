//! Restricted maximal function and a discrete Calderón–Zygmund
//! decomposition over a [`BallFamily`].
//!
//! Stopping rule: every point of the level set `E` picks, among the
//! admissible family balls that contain it and have average above the
//! level, one of largest radius (ties to the lowest center index). These
//! candidates are then selected greedily by decreasing radius, keeping a
//! candidate when its point set misses every ball kept so far. All four
//! properties of the decomposition are re-verified before returning.
//!
//! Admissible radii are the family radii up to `eta r0 / (5 sigma)`. Under
//! [`RadiusPolicy::Exhaustive`] the cap itself is added for each center,
//! which makes the admissible balls realize every point set `B(x, r)` with
//! `r` at most the cap, so the maximality property holds for all real
//! dilation factors `tau >= 2` and not only the dyadic ones.

use rayon::prelude::*;
use serde::Serialize;

use crate::balls::{Ball, BallFamily, RadiusPolicy};
use crate::numeric::TOLERANCE;
use crate::space::{DoublingProfile, Space};
use crate::weights::{SetStats, Weight};
use crate::{Error, Result};

/// `M f(x)`: the largest average of `|f|` over family balls containing `x`,
/// 0 when no family ball contains `x`.
pub fn maximal_function(space: &Space, f: &Weight, family: &BallFamily) -> Result<Vec<f64>> {
    f.check_len(space)?;
    let fv = f.values();
    let n = space.len();
    Ok(family
        .members
        .par_iter()
        .fold(
            || vec![0.0f64; n],
            |mut acc, b| {
                let set = space.members(b);
                if let Ok(avg) = SetStats::of(space, fv, &set).average() {
                    for &i in &set {
                        acc[i] = acc[i].max(avg);
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0.0f64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = x.max(y);
                }
                a
            },
        ))
}

/// `{x in region : mf(x) > lambda}` in ascending index order.
pub fn level_set(mf: &[f64], lambda: f64, region: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = region.iter().copied().filter(|&i| mf[i] > lambda).collect();
    out.sort_unstable();
    out
}

/// `alpha = C^2 (5 sigma)^D (1 + 1/eta)^D`.
pub fn alpha(profile: &DoublingProfile, sigma: f64, eta: f64) -> f64 {
    let d = profile.dimension_d;
    profile.c_mu * profile.c_mu * (5.0 * sigma).powf(d) * (1.0 + 1.0 / eta).powf(d)
}

/// Constants of the decay estimate for a given `eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JnConstants {
    pub c_mu: f64,
    #[serde(rename = "D")]
    pub dimension_d: f64,
    pub sigma: f64,
    pub eta: f64,
    pub eps: f64,
    pub alpha: f64,
    /// `A = C (5 sigma)^D e`.
    pub a_const: f64,
    pub lambda0: f64,
    pub c0: f64,
    pub ln_c0: f64,
    pub c_final: f64,
    pub ln_c_final: f64,
}

impl JnConstants {
    pub fn new(profile: &DoublingProfile, sigma: f64, eta: f64, eps: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma = {sigma} must be >= 1"
            )));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta = {eta} must be positive"
            )));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} must be nonnegative"
            )));
        }
        let c = profile.c_mu;
        let d = profile.dimension_d;
        let e = std::f64::consts::E;
        let alpha = alpha(profile, sigma, eta);
        let a_const = c * (5.0 * sigma).powf(d) * e;
        let lambda0 = alpha * c * sigma.powf(d) * eps;
        let ln_c0 = 1.0 + alpha / (5f64.powf(d) * e);
        let ln_c_final = 2.0 * c.ln() + ln_c0 - alpha.ln() - d * sigma.ln();
        Ok(Self {
            c_mu: c,
            dimension_d: d,
            sigma,
            eta,
            eps,
            alpha,
            a_const,
            lambda0,
            c0: ln_c0.exp(),
            ln_c0,
            c_final: ln_c_final.exp(),
            ln_c_final,
        })
    }

    /// `1 / (2 A)`: largest `eps` for which the power estimates apply.
    pub fn eps_threshold(&self) -> f64 {
        1.0 / (2.0 * self.a_const)
    }

    /// `1 / (2 A eps)`: largest admissible exponent.
    pub fn exponent_cap(&self) -> f64 {
        1.0 / (2.0 * self.a_const * self.eps)
    }

    /// `C (5 sigma)^D eps (1 + delta) / (lambda - delta)`.
    pub fn contraction_factor(&self, delta: f64, lambda: f64) -> f64 {
        self.c_mu * (5.0 * self.sigma).powf(self.dimension_d) * self.eps * (1.0 + delta)
            / (lambda - delta)
    }
}

/// `[lambda0, phi(lambda0), ...]` with `phi(d) = (A eps + 1) d + A eps`.
pub fn phi_sequence(a_const: f64, eps: f64, lambda0: f64, m: usize) -> Vec<f64> {
    let ae = a_const * eps;
    let mut out = Vec::with_capacity(m + 1);
    out.push(lambda0);
    for k in 0..m {
        let prev = out[k];
        out.push((ae + 1.0) * prev + ae);
    }
    out
}

/// Closed form of the `m`-th term of [`phi_sequence`].
pub fn phi_closed_form(a_const: f64, eps: f64, lambda0: f64, m: usize) -> f64 {
    (1.0 + lambda0) * (1.0 + a_const * eps).powi(m as i32) - 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        if b {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CzProperties {
    pub i: Verdict,
    pub ii: Verdict,
    pub iii: Verdict,
    pub iv: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzBall {
    pub center: usize,
    pub radius: f64,
    pub avg: f64,
    /// Average over `2B` when `2B` is a family-sized ball.
    pub doubled_avg: Option<f64>,
    /// `(tau, average over tau B)` for the dyadic `tau` checked.
    #[serde(skip)]
    pub dilates: Vec<(f64, f64)>,
}

impl CzBall {
    pub fn ball(&self) -> Ball {
        Ball::unchecked(self.center, self.radius)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzDecomposition {
    pub level: f64,
    pub balls: Vec<CzBall>,
    pub properties: CzProperties,
}

impl CzDecomposition {
    pub fn ball_list(&self) -> Vec<Ball> {
        self.balls.iter().map(CzBall::ball).collect()
    }

    /// Sum of `mu(B_i)`, which is the measure of their union.
    pub fn total_measure(&self, space: &Space) -> f64 {
        crate::numeric::sum(self.balls.iter().map(|b| space.ball_measure(&b.ball())))
    }

    pub fn union(&self, space: &Space) -> Vec<usize> {
        let mut pts: Vec<usize> = self
            .balls
            .iter()
            .flat_map(|b| space.members(&b.ball()))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// Largest admissible radius `eta r0 / (5 sigma)`.
pub fn cz_radius_cap(family: &BallFamily) -> f64 {
    family.eta * family.base.radius / (5.0 * family.sigma)
}

fn admissible_balls(family: &BallFamily) -> Vec<Ball> {
    let cap = cz_radius_cap(family);
    let mut out: Vec<Ball> = family
        .members
        .iter()
        .copied()
        .filter(|b| b.radius <= cap)
        .collect();
    if family.policy == RadiusPolicy::Exhaustive {
        for c in family.centers() {
            let b = Ball::unchecked(c, cap);
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }
    out
}

struct Setup<'a> {
    space: &'a Space,
    f: &'a [f64],
    family: &'a BallFamily,
    level_set: Vec<usize>,
}

impl<'a> Setup<'a> {
    fn new(
        space: &'a Space,
        f: &'a Weight,
        lambda: f64,
        family: &'a BallFamily,
        profile: &DoublingProfile,
    ) -> Result<Self> {
        f.check_len(space)?;
        if f.values().iter().any(|v| *v < 0.0) {
            return Err(Error::CzPrecondition("f must be nonnegative".into()));
        }
        let fv = f.values();
        let enlarged = space.members(&family.enlarged_base());
        let f_hat = SetStats::of(space, fv, &enlarged).average()?;
        let a = alpha(profile, family.sigma, family.eta);
        if a * f_hat > lambda * (1.0 + TOLERANCE) {
            return Err(Error::CzPrecondition(format!(
                "level {lambda} is below alpha * f_hat = {a} * {f_hat} = {}",
                a * f_hat
            )));
        }
        let mf = maximal_function(space, f, family)?;
        let level_set = level_set(&mf, lambda, &enlarged);
        if level_set.is_empty() {
            return Err(Error::CzPrecondition(format!(
                "level set at {lambda} is empty"
            )));
        }
        Ok(Self {
            space,
            f: fv,
            family,
            level_set,
        })
    }

    fn avg(&self, b: &Ball) -> Option<f64> {
        SetStats::of(self.space, self.f, &self.space.members(b))
            .average()
            .ok()
    }

    /// Candidates at `lambda` among `pool`, in greedy order (radius
    /// descending, then center ascending), one per stopping point.
    fn candidates(&self, lambda: f64, pool: &[Ball]) -> std::result::Result<Vec<Ball>, usize> {
        let mut eligible: Vec<Ball> = pool
            .par_iter()
            .filter(|b| self.avg(b).is_some_and(|a| a > lambda))
            .copied()
            .collect();
        eligible.sort_by(|a, b| b.radius.total_cmp(&a.radius).then(a.center.cmp(&b.center)));
        let n = self.space.len();
        let mut assigned = vec![false; n];
        let mut chosen = Vec::new();
        for b in &eligible {
            let mut used = false;
            for i in self.space.members(b) {
                if !assigned[i] {
                    assigned[i] = true;
                    used = true;
                }
            }
            if used {
                chosen.push(*b);
            }
        }
        if let Some(&x) = self.level_set.iter().find(|&&x| !assigned[x]) {
            return Err(x);
        }
        Ok(chosen)
    }

    fn select(&self, candidates: &[Ball]) -> Vec<Ball> {
        let mut taken = vec![false; self.space.len()];
        let mut out = Vec::new();
        for b in candidates {
            let set = self.space.members(b);
            if set.iter().all(|&i| !taken[i]) {
                for &i in &set {
                    taken[i] = true;
                }
                out.push(*b);
            }
        }
        out
    }

    fn finish(&self, lambda: f64, balls: Vec<Ball>) -> Result<CzDecomposition> {
        let space = self.space;
        let cap = cz_radius_cap(self.family);
        let family_cap = self.family.radius_cap();
        let in_level = {
            let mut v = vec![false; space.len()];
            for &x in &self.level_set {
                v[x] = true;
            }
            v
        };
        let construction = |property: &str, detail: String| Error::CzConstruction {
            property: property.into(),
            detail,
        };

        let mut out = Vec::with_capacity(balls.len());
        let mut covered5 = vec![false; space.len()];
        for b in &balls {
            let set = space.members(b);
            if let Some(x) = set.iter().find(|&&x| !in_level[x]) {
                return Err(construction(
                    "i",
                    format!("point {x} of {b:?} is outside the level set"),
                ));
            }
            for i in space.members(&b.scaled(5.0)) {
                covered5[i] = true;
            }
            if b.radius > cap {
                return Err(construction(
                    "ii",
                    format!("{b:?} exceeds the radius cap {cap}"),
                ));
            }
            let avg = SetStats::of(space, self.f, &set).average()?;
            if !(avg > lambda) {
                return Err(construction(
                    "iii",
                    format!("{b:?} has average {avg} <= {lambda}"),
                ));
            }
            let mut dilates = Vec::new();
            let mut tau = 2.0;
            while tau * b.radius <= family_cap {
                let a = self.avg(&b.scaled(tau)).ok_or(Error::EmptyAverage)?;
                if a > lambda {
                    return Err(construction(
                        "iv",
                        format!("{tau} x {b:?} has average {a} > {lambda}"),
                    ));
                }
                dilates.push((tau, a));
                tau *= 2.0;
            }
            out.push(CzBall {
                center: b.center,
                radius: b.radius,
                avg,
                doubled_avg: dilates.first().map(|d| d.1),
                dilates,
            });
        }
        if let Some(&x) = self.level_set.iter().find(|&&x| !covered5[x]) {
            return Err(construction(
                "i",
                format!("level-set point {x} is not covered by the 5-dilates"),
            ));
        }
        Ok(CzDecomposition {
            level: lambda,
            balls: out,
            properties: CzProperties {
                i: Verdict::Pass,
                ii: Verdict::Pass,
                iii: Verdict::Pass,
                iv: Verdict::Pass,
            },
        })
    }
}

fn uncovered_error(space: &Space, family: &BallFamily, x: usize) -> Error {
    Error::CzConstruction {
        property: "ii".into(),
        detail: format!(
            "level-set point {x} lies in no admissible ball of radius <= {} with average above the level \
             (n = {})",
            cz_radius_cap(family),
            space.len()
        ),
    }
}

/// Decomposition of `f >= 0` at `lambda`.
pub fn cz_decompose(
    space: &Space,
    f: &Weight,
    lambda: f64,
    family: &BallFamily,
    profile: &DoublingProfile,
) -> Result<CzDecomposition> {
    let setup = Setup::new(space, f, lambda, family, profile)?;
    let pool = admissible_balls(family);
    let candidates = setup
        .candidates(lambda, &pool)
        .map_err(|x| uncovered_error(space, family, x))?;
    let balls = setup.select(&candidates);
    setup.finish(lambda, balls)
}

/// Decompositions at `lambda_lo <= lambda_hi` such that every high-level
/// ball lies in the 5-dilate of a low-level ball; `map[i]` is the first
/// such low-level ball for high-level ball `i`.
pub fn cz_nested(
    space: &Space,
    f: &Weight,
    lambda_lo: f64,
    lambda_hi: f64,
    family: &BallFamily,
    profile: &DoublingProfile,
) -> Result<(CzDecomposition, CzDecomposition, Vec<usize>)> {
    if !(lambda_lo <= lambda_hi) {
        return Err(Error::CzPrecondition(format!(
            "levels {lambda_lo} > {lambda_hi}"
        )));
    }
    let low = cz_decompose(space, f, lambda_lo, family, profile)?;
    let setup = Setup::new(space, f, lambda_hi, family, profile)?;
    let dilates: Vec<Vec<bool>> = low
        .balls
        .iter()
        .map(|b| {
            let mut v = vec![false; space.len()];
            for i in space.members(&b.ball().scaled(5.0)) {
                v[i] = true;
            }
            v
        })
        .collect();
    let host = |b: &Ball| {
        let set = space.members(b);
        dilates.iter().position(|d| set.iter().all(|&i| d[i]))
    };
    let pool: Vec<Ball> = admissible_balls(family)
        .into_iter()
        .filter(|b| host(b).is_some())
        .collect();
    let candidates = setup.candidates(lambda_hi, &pool).map_err(|x| {
        let witness = family
            .members
            .iter()
            .copied()
            .filter(|b| space.members(b).contains(&x))
            .find(|b| setup.avg(b).is_some_and(|a| a > lambda_hi))
            .unwrap_or(Ball::unchecked(x, cz_radius_cap(family)));
        Error::Nesting { witness }
    })?;
    let high = setup.finish(lambda_hi, setup.select(&candidates))?;
    let map = high
        .balls
        .iter()
        .map(|b| host(&b.ball()).ok_or(Error::Nesting { witness: b.ball() }))
        .collect::<Result<Vec<_>>>()?;
    Ok((low, high, map))
}
