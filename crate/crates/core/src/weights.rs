//! Weights and the condition functionals evaluated over a set of balls.
//!
//! Every functional is a supremum of a per-ball ratio. Balls whose ratio
//! has a zero denominator are recorded in [`ConditionReport::skipped`] and
//! contribute nothing to the supremum.

use rayon::prelude::*;
use serde::Serialize;

use crate::balls::Ball;
use crate::numeric::Accumulator;
use crate::space::Space;
use crate::{Error, Result};

/// Nonnegative function on the points of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight(Vec<f64>);

impl Weight {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidWeight(format!(
                "value {v} at point {i} is not finite and nonnegative"
            )));
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * c).collect())
    }

    /// `(w - level)_+` pointwise.
    pub fn excess_over(&self, level: f64) -> Self {
        Self(self.0.iter().map(|v| (v - level).max(0.0)).collect())
    }

    pub(crate) fn check_len(&self, space: &Space) -> Result<()> {
        if self.len() != space.len() {
            return Err(Error::InvalidWeight(format!(
                "weight has {} values but the space has {} points",
                self.len(),
                space.len()
            )));
        }
        Ok(())
    }
}

/// Measure and weighted integral of a point set; the average is exact when
/// the weight is constant on the set.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SetStats {
    pub measure: f64,
    pub integral: f64,
    min: f64,
    max: f64,
}

impl SetStats {
    pub fn of(space: &Space, w: &[f64], set: &[usize]) -> Self {
        let mut acc = StatsAcc::new();
        for &i in set {
            acc.add(space.mass(i), w[i]);
        }
        acc.finish()
    }

    pub fn average(&self) -> Result<f64> {
        if !(self.measure > 0.0) {
            return Err(Error::EmptyAverage);
        }
        if self.min == self.max {
            return Ok(self.min);
        }
        Ok(self.integral / self.measure)
    }
}

struct StatsAcc {
    mu: Accumulator,
    int: Accumulator,
    min: f64,
    max: f64,
}

impl StatsAcc {
    fn new() -> Self {
        Self {
            mu: Accumulator::new(),
            int: Accumulator::new(),
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    #[inline]
    fn add(&mut self, m: f64, v: f64) {
        self.mu.add(m);
        self.int.add(v * m);
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn finish(&self) -> SetStats {
        SetStats {
            measure: self.mu.value(),
            integral: self.int.value(),
            min: self.min,
            max: self.max,
        }
    }
}

/// `B` and `sigma B` as point sets with their statistics.
pub(crate) struct BallPair {
    pub inner: Vec<usize>,
    pub inner_stats: SetStats,
    pub outer_stats: SetStats,
}

impl BallPair {
    /// One scan of the space in index order for both balls.
    pub fn new(space: &Space, w: &[f64], b: &Ball, sigma: f64) -> Self {
        let outer_r = sigma * b.radius;
        let mut inner = Vec::new();
        let (mut ia, mut oa) = (StatsAcc::new(), StatsAcc::new());
        for (y, &v) in w.iter().enumerate() {
            let d = space.distance(b.center, y);
            if d < outer_r {
                let m = space.mass(y);
                oa.add(m, v);
                if d < b.radius {
                    inner.push(y);
                    ia.add(m, v);
                }
            }
        }
        Self {
            inner,
            inner_stats: ia.finish(),
            outer_stats: oa.finish(),
        }
    }

    /// `int_B (w - a)_+ dmu`.
    pub fn positive_part(&self, space: &Space, w: &[f64], a: f64) -> f64 {
        let mut acc = Accumulator::new();
        for &i in &self.inner {
            let d = w[i] - a;
            if d > 0.0 {
                acc.add(d * space.mass(i));
            }
        }
        acc.value()
    }

    /// `int_B (w - a)_- dmu`.
    pub fn negative_part(&self, space: &Space, w: &[f64], a: f64) -> f64 {
        let mut acc = Accumulator::new();
        for &i in &self.inner {
            let d = a - w[i];
            if d > 0.0 {
                acc.add(d * space.mass(i));
            }
        }
        acc.value()
    }

    /// `(mu(B ∩ pred), w(B ∩ pred))`.
    pub fn restricted(&self, space: &Space, w: &[f64], pred: impl Fn(f64) -> bool) -> (f64, f64) {
        let (mut mu, mut wm) = (Accumulator::new(), Accumulator::new());
        for &i in &self.inner {
            if pred(w[i]) {
                let m = space.mass(i);
                mu.add(m);
                wm.add(w[i] * m);
            }
        }
        (mu.value(), wm.value())
    }
}

pub fn average(space: &Space, w: &Weight, set: &[usize]) -> Result<f64> {
    w.check_len(space)?;
    SetStats::of(space, w.values(), set).average()
}

/// `int_B (w - w_{sigma B})_+ dmu`.
pub fn pos_oscillation(space: &Space, w: &Weight, b: &Ball, sigma: f64) -> Result<f64> {
    w.check_len(space)?;
    let pair = BallPair::new(space, w.values(), b, sigma);
    let a = pair.outer_stats.average()?;
    Ok(pair.positive_part(space, w.values(), a))
}

/// `(1/mu(B)) int_B (w - w_{sigma B})_- dmu`.
pub fn neg_oscillation_avg(space: &Space, w: &Weight, b: &Ball, sigma: f64) -> Result<f64> {
    w.check_len(space)?;
    let pair = BallPair::new(space, w.values(), b, sigma);
    let a = pair.outer_stats.average()?;
    if !(pair.inner_stats.measure > 0.0) {
        return Err(Error::EmptyAverage);
    }
    Ok(pair.negative_part(space, w.values(), a) / pair.inner_stats.measure)
}

/// Supremum of a per-ball ratio with its witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub value: f64,
    pub witness: Ball,
    pub per_ball: Vec<(Ball, f64)>,
    pub skipped: Vec<Ball>,
}

#[derive(Serialize)]
pub struct ConditionSummary {
    pub value: f64,
    pub witness: Ball,
    pub n_balls: usize,
    pub n_skipped: usize,
}

impl ConditionReport {
    /// First maximal ball in the given order wins.
    pub(crate) fn from_ratios(balls: &[Ball], ratios: Vec<Option<f64>>) -> Result<Self> {
        let mut per_ball = Vec::with_capacity(balls.len());
        let mut skipped = Vec::new();
        let mut best: Option<(f64, Ball)> = None;
        for (b, r) in balls.iter().zip(ratios) {
            match r {
                Some(v) => {
                    per_ball.push((*b, v));
                    if best.is_none_or(|(m, _)| v > m) {
                        best = Some((v, *b));
                    }
                }
                None => skipped.push(*b),
            }
        }
        let (value, witness) = best.ok_or(Error::NoData(balls.len()))?;
        Ok(Self {
            value,
            witness,
            per_ball,
            skipped,
        })
    }

    pub fn summary(&self) -> ConditionSummary {
        ConditionSummary {
            value: self.value,
            witness: self.witness,
            n_balls: self.per_ball.len() + self.skipped.len(),
            n_skipped: self.skipped.len(),
        }
    }

    /// `(ball, ratio, skipped)` rows in canonical ball order.
    pub fn rows(&self) -> Vec<(Ball, f64, bool)> {
        let mut rows: Vec<(Ball, f64, bool)> = self
            .per_ball
            .iter()
            .map(|(b, r)| (*b, *r, false))
            .chain(self.skipped.iter().map(|b| (*b, 0.0, true)))
            .collect();
        rows.sort_by(|a, b| {
            a.0.center
                .cmp(&b.0.center)
                .then(a.0.radius.total_cmp(&b.0.radius))
        });
        rows
    }
}

fn per_ball<F>(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    f: F,
) -> Result<ConditionReport>
where
    F: Fn(&BallPair) -> Option<f64> + Sync,
{
    w.check_len(space)?;
    if !(sigma.is_finite() && sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must be >= 1"
        )));
    }
    let ratios: Vec<Option<f64>> = balls
        .par_iter()
        .map(|b| f(&BallPair::new(space, w.values(), b, sigma)))
        .collect();
    ConditionReport::from_ratios(balls, ratios)
}

/// `sup_B int_B (w - w_{sigma B})_+ dmu / w(sigma B)`.
pub fn wgr_epsilon(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
) -> Result<ConditionReport> {
    let wv = w.values();
    per_ball(space, w, balls, sigma, |p| {
        let ws = p.outer_stats.integral;
        if ws <= 0.0 {
            return None;
        }
        let a = p.outer_stats.average().ok()?;
        Some(p.positive_part(space, wv, a) / ws)
    })
}

/// `sup_B (1/mu(B)) int_B (w - w_{sigma B})_- dmu / w_{sigma B}`, the
/// negative-part analogue of [`wgr_epsilon`].
pub fn neg_wgr_epsilon(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
) -> Result<ConditionReport> {
    let wv = w.values();
    per_ball(space, w, balls, sigma, |p| {
        let a = p.outer_stats.average().ok()?;
        if a <= 0.0 {
            return None;
        }
        Some(p.negative_part(space, wv, a) / p.inner_stats.measure / a)
    })
}

/// `sup_B int_B |w - w_B| dmu / w(B)`.
pub fn gr_epsilon(space: &Space, w: &Weight, balls: &[Ball]) -> Result<ConditionReport> {
    let wv = w.values();
    per_ball(space, w, balls, 1.0, |p| {
        let wb = p.inner_stats.integral;
        if wb <= 0.0 {
            return None;
        }
        let a = p.inner_stats.average().ok()?;
        let mut acc = Accumulator::new();
        for &i in &p.inner {
            acc.add((wv[i] - a).abs() * space.mass(i));
        }
        Some(acc.value() / wb)
    })
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {v} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `sup_B w(B ∩ {alpha w >= w_{sigma B}}) / w(sigma B)`.
pub fn weak_ainfty_beta(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    alpha: f64,
) -> Result<ConditionReport> {
    check_unit("alpha", alpha)?;
    let wv = w.values();
    per_ball(space, w, balls, sigma, |p| {
        let ws = p.outer_stats.integral;
        if ws <= 0.0 {
            return None;
        }
        let a = p.outer_stats.average().ok()?;
        Some(p.restricted(space, wv, |x| alpha * x >= a).1 / ws)
    })
}

/// `sup_B mu(B ∩ {w <= beta w_{sigma B}}) / mu(B)`.
pub fn sublevel_alpha(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    beta: f64,
) -> Result<ConditionReport> {
    check_unit("beta", beta)?;
    let wv = w.values();
    per_ball(space, w, balls, sigma, |p| {
        let a = p.outer_stats.average().ok()?;
        Some(p.restricted(space, wv, |x| x <= beta * a).0 / p.inner_stats.measure)
    })
}

/// Right-hand ball of the reverse Hölder ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsBall {
    /// `sigma B`.
    SigmaDilate,
    /// `sigma (1 + eta) B`.
    SigmaHat { eta: f64 },
}

/// `(1/mu(B) int_B w^p)^(1/p)`.
pub(crate) fn power_mean(space: &Space, w: &[f64], set: &[usize], p: f64) -> Result<f64> {
    let stats = SetStats::of(space, w, set);
    if !(stats.measure > 0.0) {
        return Err(Error::EmptyAverage);
    }
    if stats.min == stats.max {
        return Ok(stats.min);
    }
    let mut acc = Accumulator::new();
    for &i in set {
        acc.add(w[i].powf(p) * space.mass(i));
    }
    Ok((acc.value() / stats.measure).powf(1.0 / p))
}

/// `sup_B (avg_B w^p)^(1/p) / avg_{rhs(B)} w`.
pub fn rhi_constant(
    space: &Space,
    w: &Weight,
    balls: &[Ball],
    sigma: f64,
    p: f64,
    rhs: RhsBall,
) -> Result<ConditionReport> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(
            p,
            "reverse Hölder exponent must exceed 1".into(),
        ));
    }
    let factor = match rhs {
        RhsBall::SigmaDilate => 1.0,
        RhsBall::SigmaHat { eta } => {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "eta = {eta} must be positive"
                )));
            }
            1.0 + eta
        }
    };
    let wv = w.values();
    per_ball(space, w, balls, sigma * factor, |pair| {
        let den = pair.outer_stats.average().ok()?;
        if den <= 0.0 {
            return None;
        }
        Some(power_mean(space, wv, &pair.inner, p).ok()? / den)
    })
}
