//! Balls, dilation, the restricted family around a base ball, and the
//! 5r covering of a ball by small balls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::space::{DoublingProfile, Space};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: usize, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ball radius {radius} must be positive"
            )));
        }
        Ok(Self { center, radius })
    }

    /// No radius check; for internal probes such as zero-radius balls.
    pub(crate) fn unchecked(center: usize, radius: f64) -> Self {
        Self { center, radius }
    }

    /// `lambda B`: same center, radius scaled by `lambda`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidDilation(lambda));
        }
        Ok(Self {
            center: self.center,
            radius: lambda * self.radius,
        })
    }

    pub(crate) fn scaled(&self, lambda: f64) -> Self {
        Self {
            center: self.center,
            radius: lambda * self.radius,
        }
    }
}

pub fn dilate(b: &Ball, lambda: f64) -> Result<Ball> {
    b.dilate(lambda)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusPolicy {
    /// Radii `eta r0 / 2^k`, stopping at the first radius below the smallest
    /// positive distance inside the enlarged base ball.
    #[default]
    Dyadic,
    /// Every radius at which `B` or `sigma B` changes as a point set, per
    /// center, plus the cap `eta r0`.
    Exhaustive,
}

/// Balls `B(x, r)` with `x` in the base ball `B0` and `r <= eta r0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallFamily {
    pub base: Ball,
    pub eta: f64,
    pub sigma: f64,
    pub policy: RadiusPolicy,
    /// Ascending.
    pub radius_grid: Vec<f64>,
    /// Ordered by center index, then radius ascending.
    pub members: Vec<Ball>,
}

impl BallFamily {
    /// `(1 + eta) B0`.
    pub fn enlarged_base(&self) -> Ball {
        self.base.scaled(1.0 + self.eta)
    }

    pub fn radius_cap(&self) -> f64 {
        self.eta * self.base.radius
    }

    pub fn centers(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.members.iter().map(|b| b.center).collect();
        c.dedup();
        c
    }

    pub fn contains_ball(&self, b: &Ball) -> bool {
        self.members.iter().any(|m| m == b)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
}

fn check_family_params(eta: f64, sigma: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must be positive"
        )));
    }
    if !(sigma.is_finite() && sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must be >= 1"
        )));
    }
    Ok(())
}

/// Dyadic grid below `eta r0`, ascending.
fn dyadic_grid(space: &Space, base: &Ball, eta: f64) -> Vec<f64> {
    let enlarged = space.members(&base.scaled(1.0 + eta));
    let floor = space.min_positive_distance(&enlarged);
    let mut grid = vec![eta * base.radius];
    if let Some(dmin) = floor {
        while *grid.last().unwrap() >= dmin {
            let next = grid.last().unwrap() * 0.5;
            grid.push(next);
        }
    }
    grid.reverse();
    grid
}

fn breakpoint_radii(space: &Space, center: usize, sigma: f64, cap: f64) -> Vec<f64> {
    let mut radii: Vec<f64> = (0..space.len())
        .map(|y| space.distance(center, y))
        .flat_map(|d| [d, d / sigma])
        .filter(|&r| r > 0.0 && r <= cap)
        .collect();
    radii.push(cap);
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

pub fn build_family(space: &Space, base: Ball, eta: f64, sigma: f64) -> Result<BallFamily> {
    build_family_with(space, base, eta, sigma, RadiusPolicy::Dyadic)
}

pub fn build_family_with(
    space: &Space,
    base: Ball,
    eta: f64,
    sigma: f64,
    policy: RadiusPolicy,
) -> Result<BallFamily> {
    check_family_params(eta, sigma)?;
    let centers = space.members(&base);
    if centers.is_empty() {
        return Err(Error::EmptyBall(base));
    }
    let cap = eta * base.radius;
    let (radius_grid, members) = match policy {
        RadiusPolicy::Dyadic => {
            let grid = dyadic_grid(space, &base, eta);
            let members = centers
                .iter()
                .flat_map(|&c| grid.iter().map(move |&r| Ball::unchecked(c, r)))
                .collect();
            (grid, members)
        }
        RadiusPolicy::Exhaustive => {
            let per_center: Vec<Vec<Ball>> = centers
                .par_iter()
                .map(|&c| {
                    breakpoint_radii(space, c, sigma, cap)
                        .into_iter()
                        .map(|r| Ball::unchecked(c, r))
                        .collect()
                })
                .collect();
            let members: Vec<Ball> = per_center.into_iter().flatten().collect();
            let mut grid: Vec<f64> = members.iter().map(|b| b.radius).collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            (grid, members)
        }
    };
    Ok(BallFamily {
        base,
        eta,
        sigma,
        policy,
        radius_grid,
        members,
    })
}

/// Every ball `B(y, r)` whose `sigma`-dilate lies metrically inside `outer`
/// (`d(y, x_outer) + sigma r <= r_outer`), one radius per distinct pair of
/// point sets `(B, sigma B)`. Used to measure condition constants over all
/// balls of a region rather than a sampled family.
pub fn balls_within(space: &Space, outer: &Ball, sigma: f64) -> Result<Vec<Ball>> {
    if !(sigma.is_finite() && sigma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma = {sigma} must be >= 1"
        )));
    }
    let per_center: Vec<Vec<Ball>> = (0..space.len())
        .into_par_iter()
        .map(|y| {
            let d = space.distance(outer.center, y);
            let r_max = (outer.radius - d) / sigma;
            if !(r_max > 0.0) {
                return Vec::new();
            }
            breakpoint_radii(space, y, sigma, r_max)
                .into_iter()
                .map(|r| Ball::unchecked(y, r))
                .collect()
        })
        .collect();
    Ok(per_center.into_iter().flatten().collect())
}

/// Result of the 5r covering of a base ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cover {
    pub base: Ball,
    pub sigma: f64,
    pub eta: f64,
    /// `(sigma - 1) / (sigma (1 + eta))`.
    pub rho: f64,
    pub balls: Vec<Ball>,
    pub fifth_disjoint: bool,
    pub covers_base: bool,
    /// Per ball: `sigma (1 + eta) B_i` is inside `sigma B0` as point sets.
    pub contained: Vec<bool>,
    /// `C_mu^2 (10 sigma (1 + eta)/(sigma - 1) + 2)^D`.
    pub count_bound: f64,
    pub count_ok: bool,
}

impl Cover {
    pub fn all_ok(&self) -> bool {
        self.fifth_disjoint
            && self.covers_base
            && self.count_ok
            && self.contained.iter().all(|&c| c)
    }
}

/// Greedy 5r covering: centers of `B0` are scanned in ascending index order
/// and a center is kept when the ball of radius `rho r0 / 5` around it is
/// disjoint (as a point set) from those already kept. Every kept center gets
/// the ball of radius `rho r0`.
pub fn five_r_cover(
    space: &Space,
    base: Ball,
    sigma: f64,
    eta: f64,
    profile: &DoublingProfile,
) -> Result<Cover> {
    if !(sigma.is_finite() && sigma > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cover needs sigma > 1, got {sigma}"
        )));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta = {eta} must be positive"
        )));
    }
    let points = space.members(&base);
    if points.is_empty() {
        return Err(Error::EmptyBall(base));
    }
    let rho = (sigma - 1.0) / (sigma * (1.0 + eta));
    let small = rho * base.radius / 5.0;
    let mut taken = vec![false; space.len()];
    let mut centers = Vec::new();
    for &x in &points {
        let fifth = space.ball_members(x, small);
        if fifth.iter().all(|&y| !taken[y]) {
            for y in fifth {
                taken[y] = true;
            }
            centers.push(x);
        }
    }
    let balls: Vec<Ball> = centers
        .iter()
        .map(|&x| Ball::unchecked(x, rho * base.radius))
        .collect();

    // Postconditions, re-derived from scratch.
    let mut seen = vec![false; space.len()];
    let mut fifth_disjoint = true;
    for b in &balls {
        for y in space.ball_members(b.center, small) {
            fifth_disjoint &= !seen[y];
            seen[y] = true;
        }
    }
    let covers_base = points
        .iter()
        .all(|&y| balls.iter().any(|b| space.distance(b.center, y) < b.radius));
    let outer: Vec<bool> = {
        let set = space.members(&base.scaled(sigma));
        let mut mark = vec![false; space.len()];
        for y in set {
            mark[y] = true;
        }
        mark
    };
    let contained = balls
        .iter()
        .map(|b| {
            space
                .members(&b.scaled(sigma * (1.0 + eta)))
                .iter()
                .all(|&y| outer[y])
        })
        .collect();
    let count_bound = profile.c_mu.powi(2)
        * (10.0 * sigma * (1.0 + eta) / (sigma - 1.0) + 2.0).powf(profile.dimension_d);
    let count_ok = balls.len() as f64 <= count_bound;
    Ok(Cover {
        base,
        sigma,
        eta,
        rho,
        balls,
        fifth_disjoint,
        covers_base,
        contained,
        count_bound,
        count_ok,
    })
}
