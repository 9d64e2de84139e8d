//! Finite metric measure spaces.
//!
//! A [`Space`] is a finite point set with a metric and strictly positive
//! point masses. Balls are open: `B(x, r) = {y : d(x, y) < r}`, so a ball of
//! radius zero is empty and a ball whose radius equals an existing distance
//! excludes the points at exactly that distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balls::Ball;
use crate::numeric::Accumulator;
use crate::{Error, Result};

/// Largest point count the grid generators will build.
pub const GRID_POINT_CAP: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Chebyshev,
}

#[derive(Clone, Debug, PartialEq)]
enum Geometry {
    /// Cell-center lattice: point `k` sits at `origin + (index + 1/2) * cell`
    /// in every coordinate. Distances are `cell` times an integer norm, so
    /// they are exact whenever `cell` is.
    Lattice {
        dim: usize,
        cell: f64,
        origin: f64,
        index: Vec<i64>,
        metric: MetricKind,
    },
    Points {
        dim: usize,
        coords: Vec<f64>,
        metric: MetricKind,
    },
    Table {
        distances: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    geometry: Geometry,
    mass: Vec<f64>,
}

/// A failed metric axiom.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricViolation {
    Diagonal {
        point: usize,
        value: f64,
    },
    Symmetry {
        a: usize,
        b: usize,
        deficit: f64,
    },
    /// `d(a, c) > d(a, b) + d(b, c)` by `deficit`.
    Triangle {
        a: usize,
        b: usize,
        c: usize,
        deficit: f64,
    },
}

fn check_masses(mass: &[f64]) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::InvalidSpace("space has no points".into()));
    }
    if let Some((i, m)) = mass
        .iter()
        .enumerate()
        .find(|(_, m)| !(m.is_finite() && **m > 0.0))
    {
        return Err(Error::InvalidSpace(format!(
            "mass of point {i} is {m}; masses must be finite and positive"
        )));
    }
    let total: f64 = mass.iter().sum();
    if !total.is_finite() {
        return Err(Error::InvalidSpace("total mass is not finite".into()));
    }
    Ok(())
}

impl Space {
    pub fn from_points(points: Vec<Vec<f64>>, mass: Vec<f64>, metric: MetricKind) -> Result<Self> {
        check_masses(&mass)?;
        if points.len() != mass.len() {
            return Err(Error::InvalidSpace(format!(
                "{} points but {} masses",
                points.len(),
                mass.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidSpace("points have no coordinates".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidSpace(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidSpace(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self {
            geometry: Geometry::Points {
                dim,
                coords,
                metric,
            },
            mass,
        })
    }

    /// Raw distance table. Only finiteness and nonnegativity are checked
    /// here; call [`Space::validate_metric`] for the metric axioms.
    pub fn from_distance_matrix(matrix: Vec<Vec<f64>>, mass: Vec<f64>) -> Result<Self> {
        check_masses(&mass)?;
        let n = mass.len();
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpace(format!(
                "distance matrix must be {n}x{n} to match the masses"
            )));
        }
        let distances: Vec<f64> = matrix.into_iter().flatten().collect();
        if let Some(pos) = distances.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidSpace(format!(
                "distance ({}, {}) = {} is not a finite nonnegative number",
                pos / n,
                pos % n,
                distances[pos]
            )));
        }
        Ok(Self {
            geometry: Geometry::Table { distances },
            mass,
        })
    }

    /// Lattice of `side^n_dim` cells of width `cell` whose lower corner is
    /// `origin` in every coordinate. Each point carries mass `cell^n_dim`.
    pub fn lattice(
        n_dim: usize,
        side: usize,
        cell: f64,
        origin: f64,
        metric: MetricKind,
    ) -> Result<Self> {
        if n_dim == 0 || side == 0 {
            return Err(Error::InvalidGenerator(format!(
                "grid needs n_dim >= 1 and side >= 1 (got {n_dim}, {side})"
            )));
        }
        if !(cell.is_finite() && cell > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidGenerator(format!(
                "cell {cell} must be finite and positive"
            )));
        }
        let points = (side as u128)
            .checked_pow(n_dim as u32)
            .unwrap_or(u128::MAX);
        if points > GRID_POINT_CAP as u128 {
            return Err(Error::TooLarge {
                points,
                cap: GRID_POINT_CAP,
            });
        }
        let n = points as usize;
        let mut index = Vec::with_capacity(n * n_dim);
        for k in 0..n {
            // First coordinate varies slowest.
            let mut rest = k;
            let mut digits = vec![0i64; n_dim];
            for d in (0..n_dim).rev() {
                digits[d] = (rest % side) as i64;
                rest /= side;
            }
            index.extend_from_slice(&digits);
        }
        let m = cell.powi(n_dim as i32);
        Ok(Self {
            geometry: Geometry::Lattice {
                dim: n_dim,
                cell,
                origin,
                index,
                metric,
            },
            mass: vec![m; n],
        })
    }

    /// `n` cells on `[a, b]`; points at the cell centers `a + (k + 1/2)(b - a)/n`.
    pub fn grid_1d(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGenerator(format!(
                "grid_1d needs n >= 1 and a < b (got a={a}, b={b}, n={n})"
            )));
        }
        Self::lattice(1, n, (b - a) / n as f64, a, MetricKind::Euclidean)
    }

    /// `side^n_dim` cell centres on `[0, side * cell]^n_dim`.
    pub fn grid_nd(n_dim: usize, side: usize, cell: f64, metric: MetricKind) -> Result<Self> {
        Self::lattice(n_dim, side, cell, 0.0, metric)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_mass(&self) -> f64 {
        crate::numeric::sum(self.mass.iter().copied())
    }

    pub fn metric_kind(&self) -> Option<MetricKind> {
        match &self.geometry {
            Geometry::Lattice { metric, .. } | Geometry::Points { metric, .. } => Some(*metric),
            Geometry::Table { .. } => None,
        }
    }

    /// Coordinate dimension, `None` for distance-table spaces.
    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Lattice { dim, .. } | Geometry::Points { dim, .. } => Some(*dim),
            Geometry::Table { .. } => None,
        }
    }

    pub fn coords(&self, i: usize) -> Option<Vec<f64>> {
        match &self.geometry {
            Geometry::Lattice {
                dim,
                cell,
                origin,
                index,
                ..
            } => Some(
                index[i * dim..(i + 1) * dim]
                    .iter()
                    .map(|&k| origin + (k as f64 + 0.5) * cell)
                    .collect(),
            ),
            Geometry::Points { dim, coords, .. } => Some(coords[i * dim..(i + 1) * dim].to_vec()),
            Geometry::Table { .. } => None,
        }
    }

    /// Per-coordinate `(low, high)` extent of the populated region: whole
    /// cells for lattices, the coordinate range for point clouds.
    pub fn bounding_box(&self) -> Option<Vec<(f64, f64)>> {
        match &self.geometry {
            Geometry::Lattice {
                dim,
                cell,
                origin,
                index,
                ..
            } => Some(
                (0..*dim)
                    .map(|d| {
                        let (lo, hi) = index
                            .iter()
                            .skip(d)
                            .step_by(*dim)
                            .fold((i64::MAX, i64::MIN), |(lo, hi), &k| (lo.min(k), hi.max(k)));
                        (origin + lo as f64 * cell, origin + (hi + 1) as f64 * cell)
                    })
                    .collect(),
            ),
            Geometry::Points { dim, coords, .. } => Some(
                (0..*dim)
                    .map(|d| {
                        coords
                            .iter()
                            .skip(d)
                            .step_by(*dim)
                            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &c| {
                                (lo.min(c), hi.max(c))
                            })
                    })
                    .collect(),
            ),
            Geometry::Table { .. } => None,
        }
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Lattice {
                dim,
                cell,
                index,
                metric,
                ..
            } => {
                let (a, b) = (
                    &index[i * dim..(i + 1) * dim],
                    &index[j * dim..(j + 1) * dim],
                );
                match metric {
                    MetricKind::Chebyshev => {
                        let m = a
                            .iter()
                            .zip(b)
                            .map(|(x, y)| (x - y).abs())
                            .max()
                            .unwrap_or(0);
                        cell * m as f64
                    }
                    MetricKind::Euclidean => {
                        let s: i64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                        cell * (s as f64).sqrt()
                    }
                }
            }
            Geometry::Points {
                dim,
                coords,
                metric,
            } => {
                let (a, b) = (
                    &coords[i * dim..(i + 1) * dim],
                    &coords[j * dim..(j + 1) * dim],
                );
                match metric {
                    MetricKind::Chebyshev => a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0, f64::max),
                    MetricKind::Euclidean => a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt(),
                }
            }
            Geometry::Table { distances } => distances[i * self.len() + j],
        }
    }

    /// Points strictly closer than `r` to `center`, in ascending index order.
    pub fn ball_members(&self, center: usize, r: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&y| self.distance(center, y) < r)
            .collect()
    }

    pub fn members(&self, ball: &Ball) -> Vec<usize> {
        self.ball_members(ball.center, ball.radius)
    }

    pub fn set_measure(&self, set: &[usize]) -> f64 {
        let mut acc = Accumulator::new();
        for &i in set {
            acc.add(self.mass[i]);
        }
        acc.value()
    }

    pub fn ball_measure(&self, ball: &Ball) -> f64 {
        let mut acc = Accumulator::new();
        for y in 0..self.len() {
            if self.distance(ball.center, y) < ball.radius {
                acc.add(self.mass[y]);
            }
        }
        acc.value()
    }

    /// Checks the metric axioms exactly. O(n^3).
    pub fn validate_metric(&self) -> Vec<MetricViolation> {
        let n = self.len();
        let mut out = Vec::new();
        for x in 0..n {
            let v = self.distance(x, x);
            if v != 0.0 {
                out.push(MetricViolation::Diagonal { point: x, value: v });
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let (ab, ba) = (self.distance(a, b), self.distance(b, a));
                if ab != ba {
                    out.push(MetricViolation::Symmetry {
                        a,
                        b,
                        deficit: (ab - ba).abs(),
                    });
                }
            }
        }
        for a in 0..n {
            for c in a + 1..n {
                let ac = self.distance(a, c);
                for b in 0..n {
                    if b == a || b == c {
                        continue;
                    }
                    let via = self.distance(a, b) + self.distance(b, c);
                    // Collinear points meet with equality up to rounding.
                    if ac - via > 8.0 * f64::EPSILON * ac {
                        out.push(MetricViolation::Triangle {
                            a,
                            b,
                            c,
                            deficit: ac - via,
                        });
                    }
                }
            }
        }
        out
    }

    /// Smallest positive distance between two points of `set`.
    pub fn min_positive_distance(&self, set: &[usize]) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (k, &a) in set.iter().enumerate() {
            for &b in &set[k + 1..] {
                let d = self.distance(a, b);
                if d > 0.0 && best.is_none_or(|m| d < m) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// Point of minimal distance to `target` (coordinate spaces only);
    /// ties go to the lowest index.
    pub fn nearest_point(&self, target: &[f64]) -> Option<usize> {
        let metric = self.metric_kind()?;
        let dim = self.dim()?;
        if target.len() != dim {
            return None;
        }
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let c = self.coords(i)?;
            let d = match metric {
                MetricKind::Chebyshev => c
                    .iter()
                    .zip(target)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max),
                MetricKind::Euclidean => c
                    .iter()
                    .zip(target)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt(),
            };
            if d < best.0 {
                best = (d, i);
            }
        }
        Some(best.1)
    }

    /// Copy with every mass multiplied by `c`.
    pub fn with_scaled_masses(&self, c: f64) -> Result<Self> {
        let mass: Vec<f64> = self.mass.iter().map(|m| m * c).collect();
        check_masses(&mass)?;
        Ok(Self {
            geometry: self.geometry.clone(),
            mass,
        })
    }

    pub fn to_json(&self) -> SpaceJson {
        let n = self.len();
        match &self.geometry {
            Geometry::Table { distances } => SpaceJson {
                points: None,
                distance_matrix: Some(distances.chunks(n).map(<[f64]>::to_vec).collect()),
                mass: self.mass.clone(),
                metric_kind: SpaceMetric::Matrix,
            },
            _ => SpaceJson {
                points: Some((0..n).map(|i| self.coords(i).unwrap_or_default()).collect()),
                distance_matrix: None,
                mass: self.mass.clone(),
                metric_kind: match self.metric_kind() {
                    Some(MetricKind::Chebyshev) => SpaceMetric::Chebyshev,
                    _ => SpaceMetric::Euclidean,
                },
            },
        }
    }

    pub fn from_json(json: SpaceJson) -> Result<Self> {
        match (json.points, json.distance_matrix, json.metric_kind) {
            (Some(_), Some(_), _) | (None, None, _) => Err(Error::InvalidSpace(
                "exactly one of points and distance_matrix must be present".into(),
            )),
            (None, Some(m), SpaceMetric::Matrix) => Self::from_distance_matrix(m, json.mass),
            (None, Some(_), kind) => Err(Error::InvalidSpace(format!(
                "distance_matrix requires metric_kind \"matrix\", got {kind:?}"
            ))),
            (Some(p), None, SpaceMetric::Euclidean) => {
                Self::from_points(p, json.mass, MetricKind::Euclidean)
            }
            (Some(p), None, SpaceMetric::Chebyshev) => {
                Self::from_points(p, json.mass, MetricKind::Chebyshev)
            }
            (Some(_), None, SpaceMetric::Matrix) => Err(Error::InvalidSpace(
                "points require metric_kind \"euclidean\" or \"chebyshev\"".into(),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceMetric {
    Euclidean,
    Chebyshev,
    Matrix,
}

/// Serialized form of a space. Exactly one of `points` and
/// `distance_matrix` is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceJson {
    pub points: Option<Vec<Vec<f64>>>,
    pub distance_matrix: Option<Vec<Vec<f64>>>,
    pub mass: Vec<f64>,
    pub metric_kind: SpaceMetric,
}

/// Doubling constant `C_mu` and dimension `D = log2 C_mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingProfile {
    pub c_mu: f64,
    #[serde(rename = "D")]
    pub dimension_d: f64,
}

impl DoublingProfile {
    pub fn new(c_mu: f64) -> Result<Self> {
        if !(c_mu.is_finite() && c_mu >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "doubling constant {c_mu} must be >= 1"
            )));
        }
        Ok(Self {
            c_mu,
            dimension_d: c_mu.log2(),
        })
    }

    /// Maximum of `mu(2B)/mu(B)` over `balls`, floored at 1.
    pub fn over_balls(space: &Space, balls: &[Ball]) -> Result<Self> {
        let ratios = balls
            .par_iter()
            .map(|b| {
                let m = space.ball_measure(b);
                if m <= 0.0 {
                    return Err(Error::EmptyBall(*b));
                }
                Ok(space.ball_measure(&Ball::unchecked(b.center, 2.0 * b.radius)) / m)
            })
            .collect::<Result<Vec<f64>>>()?;
        Self::new(ratios.into_iter().fold(1.0, f64::max))
    }

    /// Doubling constant of the whole space: the supremum of
    /// `mu(B(x, 2s))/mu(B(x, s))` over every center and every real `s > 0`.
    ///
    /// Both measures are step functions of `s` that only change at
    /// `s = d` or `s = d/2` for distances `d` from the center, so evaluating
    /// one radius per interval between consecutive breakpoints is exact.
    /// Since the resulting constant holds for every ball of the space, the
    /// usual consequences of doubling (for instance
    /// `mu(B(x,R))/mu(B(y,r)) <= C_mu^2 (R/r)^D`) hold for it as well.
    pub fn exact(space: &Space) -> Result<Self> {
        let n = space.len();
        let per_center: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut by_dist: Vec<(f64, f64)> = (0..n)
                    .map(|y| (space.distance(c, y), space.mass(y)))
                    .collect();
                by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
                let dists: Vec<f64> = by_dist.iter().map(|p| p.0).collect();
                let mut prefix = Vec::with_capacity(n + 1);
                let mut acc = Accumulator::new();
                prefix.push(0.0);
                for &(_, m) in &by_dist {
                    acc.add(m);
                    prefix.push(acc.value());
                }
                let measure = |s: f64| prefix[dists.partition_point(|&d| d < s)];
                let mut breaks: Vec<f64> = dists
                    .iter()
                    .flat_map(|&d| [d, 0.5 * d])
                    .filter(|&t| t > 0.0)
                    .collect();
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                // On (t_{k-1}, t_k] both balls are constant; t_k represents it.
                breaks
                    .iter()
                    .map(|&s| measure(2.0 * s) / measure(s))
                    .fold(1.0, f64::max)
            })
            .collect();
        Self::new(per_center.into_iter().fold(1.0, f64::max))
    }
}

/// Free-function form of [`DoublingProfile::over_balls`].
pub fn doubling_profile(space: &Space, balls: &[Ball]) -> Result<DoublingProfile> {
    DoublingProfile::over_balls(space, balls)
}
