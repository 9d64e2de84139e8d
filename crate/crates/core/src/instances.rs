//! Canonical instances and seeded random generators.

use serde::{Deserialize, Serialize};

use crate::balls::{Ball, BallFamily};
use crate::rng::StreamRng;
use crate::space::{MetricKind, Space, SpaceJson};
use crate::theorems::{CheckReport, Params, Row, Witness};
use crate::{Error, Result};

/// Point set underlying a generated weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// `grid_1d(a, b, n)`.
    Interval {
        a: f64,
        b: f64,
        n: usize,
    },
    /// `grid_nd(n_dim, side, cell, metric)`.
    Grid {
        n_dim: usize,
        side: usize,
        cell: f64,
        metric: MetricKind,
    },
    /// `n` uniform points in the unit cube with masses in `[0.5, 1.5)`.
    RandomCloud {
        n: usize,
        dim: usize,
        seed: u64,
    },
    Space {
        space: SpaceJson,
    },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Space> {
        match self {
            GeometrySpec::Interval { a, b, n } => Space::grid_1d(*a, *b, *n),
            GeometrySpec::Grid {
                n_dim,
                side,
                cell,
                metric,
            } => Space::grid_nd(*n_dim, *side, *cell, *metric),
            GeometrySpec::RandomCloud { n, dim, seed } => random_space(*n, *dim, *seed),
            GeometrySpec::Space { space } => Space::from_json(space.clone()),
        }
    }

    fn reseed(&mut self, seed: u64) {
        if let GeometrySpec::RandomCloud { seed: s, .. } = self {
            *s = seed;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Indicator of the strip `0 <= x_n <= 1` on a Chebyshev lattice.
    SawyerStrip {
        n_dim: usize,
        side: usize,
        cell: f64,
    },
    /// `w = e^x` on `grid_1d(a, b, n)`.
    Exponential {
        a: f64,
        b: f64,
        n: usize,
    },
    /// `w = 1 + amplitude sin(frequency x_1)`, `|amplitude| <= 1`.
    Sinusoid {
        geometry: GeometrySpec,
        amplitude: f64,
        frequency: f64,
    },
    /// `w = exp(log_std Z)` with independent standard normal `Z`.
    Lognormal {
        geometry: GeometrySpec,
        log_std: f64,
        seed: u64,
    },
    /// `w = (d(x, anchor) + shift)^exponent`.
    Power {
        geometry: GeometrySpec,
        exponent: f64,
        shift: f64,
        #[serde(default)]
        anchor: usize,
    },
    /// `high` on `round(fraction n)` points chosen uniformly, `low` elsewhere.
    TwoLevel {
        geometry: GeometrySpec,
        low: f64,
        high: f64,
        fraction: f64,
        seed: u64,
    },
    Custom {
        space: SpaceJson,
        weight: Vec<f64>,
    },
}

/// A generated space and weight; `base` is set when the instance has a
/// canonical base ball.
#[derive(Clone, Debug)]
pub struct Instance {
    pub space: Space,
    pub weight: crate::Weight,
    pub base_center: Option<usize>,
}

/// Smallest exponent accepted by the power generator.
pub const POWER_EXPONENT_FLOOR: f64 = -50.0;

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        let plain = |space: Space, weight: crate::Weight| Instance {
            space,
            weight,
            base_center: None,
        };
        match self {
            InstanceSpec::SawyerStrip { n_dim, side, cell } => {
                let (space, weight, center) = sawyer_strip(*n_dim, *side, *cell)?;
                Ok(Instance {
                    space,
                    weight,
                    base_center: Some(center),
                })
            }
            InstanceSpec::Exponential { a, b, n } => {
                let (space, weight) = exponential_weight(*a, *b, *n)?;
                Ok(plain(space, weight))
            }
            InstanceSpec::Sinusoid {
                geometry,
                amplitude,
                frequency,
            } => {
                let space = geometry.build()?;
                let w = sinusoid_weight(&space, *amplitude, *frequency)?;
                Ok(plain(space, w))
            }
            InstanceSpec::Lognormal {
                geometry,
                log_std,
                seed,
            } => {
                let space = geometry.build()?;
                let w = random_weight(&space, &WeightKind::Lognormal { log_std: *log_std }, *seed)?;
                Ok(plain(space, w))
            }
            InstanceSpec::Power {
                geometry,
                exponent,
                shift,
                anchor,
            } => {
                let space = geometry.build()?;
                let w = power_weight(&space, *exponent, *shift, *anchor)?;
                Ok(plain(space, w))
            }
            InstanceSpec::TwoLevel {
                geometry,
                low,
                high,
                fraction,
                seed,
            } => {
                let space = geometry.build()?;
                let kind = WeightKind::TwoLevel {
                    low: *low,
                    high: *high,
                    fraction: *fraction,
                };
                let w = random_weight(&space, &kind, *seed)?;
                Ok(plain(space, w))
            }
            InstanceSpec::Custom { space, weight } => {
                let space = Space::from_json(space.clone())?;
                let w = crate::Weight::new(weight.clone())?;
                w.check_len(&space)?;
                Ok(plain(space, w))
            }
        }
    }

    /// Copy with every seed replaced by `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InstanceSpec::Lognormal {
                geometry, seed: s, ..
            }
            | InstanceSpec::TwoLevel {
                geometry, seed: s, ..
            } => {
                *s = seed;
                geometry.reseed(seed);
            }
            InstanceSpec::Sinusoid { geometry, .. } | InstanceSpec::Power { geometry, .. } => {
                geometry.reseed(seed)
            }
            _ => {}
        }
        out
    }

    pub fn kind(&self) -> &'static str {
        match self {
            InstanceSpec::SawyerStrip { .. } => "sawyer_strip",
            InstanceSpec::Exponential { .. } => "exponential",
            InstanceSpec::Sinusoid { .. } => "sinusoid",
            InstanceSpec::Lognormal { .. } => "lognormal",
            InstanceSpec::Power { .. } => "power",
            InstanceSpec::TwoLevel { .. } => "two_level",
            InstanceSpec::Custom { .. } => "custom",
        }
    }
}

/// Instance kinds with their parameters, for listings.
pub const KINDS: &[(&str, &[(&str, &str)])] = &[
    (
        "sawyer_strip",
        &[
            ("n_dim", "lattice dimension >= 1"),
            ("side", "cells per axis"),
            ("cell", "cell width; must divide 1"),
        ],
    ),
    (
        "exponential",
        &[
            ("a", "left end"),
            ("b", "right end"),
            ("n", "number of cells"),
        ],
    ),
    (
        "sinusoid",
        &[
            ("geometry", "geometry object"),
            ("amplitude", "|amplitude| <= 1"),
            ("frequency", "angular frequency in the first coordinate"),
        ],
    ),
    (
        "lognormal",
        &[
            ("geometry", "geometry object"),
            ("log_std", "standard deviation of log w, >= 0"),
            ("seed", "stream seed"),
        ],
    ),
    (
        "power",
        &[
            ("geometry", "geometry object"),
            ("exponent", "exponent >= -50"),
            ("shift", ">= 0, > 0 when exponent < 0"),
            ("anchor", "point index, default 0"),
        ],
    ),
    (
        "two_level",
        &[
            ("geometry", "geometry object"),
            ("low", "value off the chosen set, >= 0"),
            ("high", "value on the chosen set, >= 0"),
            ("fraction", "share of points at the high value, in [0, 1]"),
            ("seed", "stream seed"),
        ],
    ),
    (
        "custom",
        &[
            ("space", "space object"),
            ("weight", "one nonnegative value per point"),
        ],
    ),
];

/// Geometry kinds accepted wherever a `geometry` object is expected.
pub const GEOMETRY_KINDS: &[(&str, &[(&str, &str)])] = &[
    (
        "interval",
        &[("a", "left end"), ("b", "right end"), ("n", "cells")],
    ),
    (
        "grid",
        &[
            ("n_dim", "dimension"),
            ("side", "cells per axis"),
            ("cell", "cell width"),
            ("metric", "euclidean | chebyshev"),
        ],
    ),
    (
        "random_cloud",
        &[
            ("n", "points"),
            ("dim", "dimension"),
            ("seed", "stream seed"),
        ],
    ),
    ("space", &[("space", "space object")]),
];

/// Chebyshev lattice of `side^n_dim` cells with the strip `0 <= x_n <= 1`
/// made of whole cells, and `w` its indicator. The lattice spans
/// `[-floor(side/2) cell, (side - floor(side/2)) cell]` per axis. Returns the
/// point nearest `(cell/2, ..., cell/2)`, which lies on the strip.
pub fn sawyer_strip(n_dim: usize, side: usize, cell: f64) -> Result<(Space, crate::Weight, usize)> {
    if !(cell.is_finite() && cell > 0.0) {
        return Err(Error::Alignment(format!("cell {cell} must be positive")));
    }
    let per_unit = (1.0 / cell).round();
    if per_unit < 1.0 || ((1.0 / cell) - per_unit).abs() > 1e-9 * per_unit {
        return Err(Error::Alignment(format!("cell {cell} does not divide 1")));
    }
    let lower = (side / 2) as f64;
    if (side / 2) as f64 + per_unit > side as f64 {
        return Err(Error::Alignment(format!(
            "side {side} is too small to hold the strip at cell {cell}"
        )));
    }
    let space = Space::lattice(n_dim, side, cell, -lower * cell, MetricKind::Chebyshev)?;
    let values = (0..space.len())
        .map(|i| {
            let c = space.coords(i).expect("lattice has coordinates");
            let x = c[n_dim - 1];
            if x > 0.0 && x < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let center = space
        .nearest_point(&vec![0.5 * cell; n_dim])
        .expect("lattice has coordinates");
    Ok((space, crate::Weight::new(values)?, center))
}

/// Exact check of `w(Q) 2^{n-1} <= w(2Q)` for every family cube, by
/// counting strip cells (the lattice has equal masses).
pub fn sawyer_cube_check(
    space: &Space,
    w: &crate::Weight,
    family: &BallFamily,
) -> Result<CheckReport> {
    w.check_len(space)?;
    let n_dim = space
        .dim()
        .ok_or_else(|| Error::InvalidSpace("cube check needs a lattice".into()))?;
    if w.values().iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidWeight(
            "cube check needs an indicator weight".into(),
        ));
    }
    let m0 = space.mass(0);
    if space.masses().iter().any(|&m| m != m0) {
        return Err(Error::InvalidSpace("cube check needs equal masses".into()));
    }
    let factor = 1u64 << (n_dim - 1);
    let count = |b: &Ball| {
        space
            .members(b)
            .iter()
            .filter(|&&i| w.values()[i] == 1.0)
            .count() as u64
    };
    let mut rows = Vec::with_capacity(family.len());
    let mut worst = (0.0f64, None);
    for b in &family.members {
        let q = count(b);
        let q2 = count(&b.scaled(2.0));
        if q2 > 0 {
            let r = q as f64 / q2 as f64;
            if r > worst.0 {
                worst = (r, Some(*b));
            }
        }
        // Integer comparison; both sides are exact in f64 at these sizes.
        let mut row = Row::new(Witness::Ball(*b), (q * factor) as f64, q2 as f64, q == 0);
        if q * factor > q2 {
            row.margin = row.margin.min(-1.0);
        }
        rows.push(row);
    }
    let mut params = Params::new();
    params.set("n_dim", n_dim as f64);
    params.set("bound", 1.0 / factor as f64);
    params.set("max_ratio", worst.0);
    let notes = worst
        .1
        .map(|b| {
            format!(
                "largest w(Q)/w(2Q) = {} at center {} radius {}",
                worst.0, b.center, b.radius
            )
        })
        .into_iter()
        .collect();
    Ok(CheckReport::assemble(
        "sawyer_bound",
        params,
        rows,
        notes,
        false,
    ))
}

/// `grid_1d(a, b, n)` with `w(x) = e^x`.
pub fn exponential_weight(a: f64, b: f64, n: usize) -> Result<(Space, crate::Weight)> {
    let space = Space::grid_1d(a, b, n)?;
    let values = (0..n)
        .map(|i| space.coords(i).expect("grid")[0].exp())
        .collect();
    Ok((space, crate::Weight::new(values)?))
}

pub fn sinusoid_weight(space: &Space, amplitude: f64, frequency: f64) -> Result<crate::Weight> {
    if !(amplitude.abs() <= 1.0) || !frequency.is_finite() {
        return Err(Error::InvalidGenerator(format!(
            "sinusoid needs |amplitude| <= 1 and finite frequency (got {amplitude}, {frequency})"
        )));
    }
    let values = (0..space.len())
        .map(|i| {
            let x = space
                .coords(i)
                .ok_or_else(|| Error::InvalidGenerator("sinusoid needs coordinates".into()))?[0];
            Ok((1.0 + amplitude * (frequency * x).sin()).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    crate::Weight::new(values)
}

pub fn power_weight(
    space: &Space,
    exponent: f64,
    shift: f64,
    anchor: usize,
) -> Result<crate::Weight> {
    if !(exponent.is_finite() && exponent >= POWER_EXPONENT_FLOOR) {
        return Err(Error::InvalidGenerator(format!(
            "power exponent {exponent} must be finite and >= {POWER_EXPONENT_FLOOR}"
        )));
    }
    if !(shift.is_finite() && shift >= 0.0) || (exponent < 0.0 && shift == 0.0) {
        return Err(Error::InvalidGenerator(format!(
            "power shift {shift} must be >= 0, and > 0 for negative exponents"
        )));
    }
    if anchor >= space.len() {
        return Err(Error::InvalidGenerator(format!(
            "anchor {anchor} out of range"
        )));
    }
    let values = (0..space.len())
        .map(|i| (space.distance(anchor, i) + shift).powf(exponent))
        .collect();
    crate::Weight::new(values)
}

/// Random weight families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Lognormal { log_std: f64 },
    Power { exponent: f64, shift: f64 },
    TwoLevel { low: f64, high: f64, fraction: f64 },
}

/// Deterministic given `seed`. The power kind anchors at a uniformly drawn
/// point.
pub fn random_weight(space: &Space, kind: &WeightKind, seed: u64) -> Result<crate::Weight> {
    let n = space.len();
    let mut rng = StreamRng::new(seed);
    match *kind {
        WeightKind::Lognormal { log_std } => {
            if !(log_std.is_finite() && log_std >= 0.0) {
                return Err(Error::InvalidGenerator(format!(
                    "log_std {log_std} must be >= 0"
                )));
            }
            let values = (0..n).map(|_| (log_std * rng.normal()).exp()).collect();
            crate::Weight::new(values)
        }
        WeightKind::Power { exponent, shift } => {
            let anchor = rng.below(n as u64) as usize;
            power_weight(space, exponent, shift, anchor)
        }
        WeightKind::TwoLevel {
            low,
            high,
            fraction,
        } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::InvalidGenerator(format!(
                    "fraction {fraction} must lie in [0, 1]"
                )));
            }
            let k = (fraction * n as f64).round() as usize;
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            let mut values = vec![low; n];
            for &i in &idx[..k] {
                values[i] = high;
            }
            crate::Weight::new(values)
        }
    }
}

/// `n` uniform points in `[0, 1)^dim` (coordinates drawn point by point)
/// with masses `0.5 + U` drawn afterwards, Euclidean metric.
pub fn random_space(n: usize, dim: usize, seed: u64) -> Result<Space> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidGenerator(format!(
            "random space needs n, dim >= 1 (got {n}, {dim})"
        )));
    }
    let mut rng = StreamRng::new(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.uniform()).collect())
        .collect();
    let mass: Vec<f64> = (0..n).map(|_| 0.5 + rng.uniform()).collect();
    Space::from_points(points, mass, MetricKind::Euclidean)
}

/// Largest base radius with `sigma (1 + eta) B0` inside the populated
/// region around `center`: the distance to the bounding box faces for
/// coordinate spaces, the largest distance from `center` otherwise, each
/// divided by `sigma (1 + eta)`.
pub fn fit_radius(space: &Space, center: usize, sigma: f64, eta: f64) -> Result<f64> {
    let reach = match (space.bounding_box(), space.coords(center)) {
        (Some(bbox), Some(c)) => bbox
            .iter()
            .zip(&c)
            .map(|(&(lo, hi), &x)| (x - lo).min(hi - x))
            .fold(f64::INFINITY, f64::min),
        _ => (0..space.len())
            .map(|y| space.distance(center, y))
            .fold(0.0, f64::max),
    };
    let r = reach / (sigma * (1.0 + eta));
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "no room for a base ball around point {center}"
        )));
    }
    Ok(r)
}
