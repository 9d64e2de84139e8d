//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits nonzero if any criterion fails.
//!
//! Every quantity a criterion asserts is recomputed here by brute force
//! (point sets scanned directly, sums in index order) and compared with the
//! library's own report.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use wgr::balls::{balls_within, build_family, build_family_with, five_r_cover};
use wgr::czdecomp::{alpha as cz_alpha, cz_decompose, cz_nested, cz_radius_cap};
use wgr::instances::{
    fit_radius, random_space, random_weight, sawyer_cube_check, sawyer_strip, sinusoid_weight,
    WeightKind,
};
use wgr::rng::StreamRng;
use wgr::special::{beta_fn, lgamma, ln_beta};
use wgr::theorems::{
    beta_asymptotic_check, cavalieri_check, check_final_rhi, check_jn_decay, check_osc_rhi,
    check_thm_neg_osc, check_thm_neg_superlevel, check_thm_osc_from_ainfty, check_thm_superlevel,
    check_weak_rhi, JnContext, JnOptions, Witness,
};
use wgr::weights::{
    gr_epsilon, neg_wgr_epsilon, pos_oscillation, rhi_constant, sublevel_alpha, weak_ainfty_beta,
    wgr_epsilon, RhsBall,
};
use wgr::{Ball, BallFamily, CzDecomposition, DoublingProfile, Error, RadiusPolicy, Space, Weight};

type R<T> = Result<T, String>;
type Criterion = fn() -> R<String>;

fn s(e: impl Display) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> R<()> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> R<()> {
    let e = t.elapsed();
    ensure(e < limit, || {
        format!(
            "runtime {:.1} s exceeds {} s",
            e.as_secs_f64(),
            limit.as_secs()
        )
    })
}

// Brute-force primitives.

fn pts(sp: &Space, c: usize, r: f64) -> Vec<usize> {
    (0..sp.len()).filter(|&y| sp.distance(c, y) < r).collect()
}

/// Points sorted by distance from each center, so a ball is a prefix.
struct Nbhd(Vec<Vec<(f64, usize)>>);

impl Nbhd {
    fn new(sp: &Space) -> Self {
        Self(
            (0..sp.len())
                .into_par_iter()
                .map(|c| {
                    let mut v: Vec<(f64, usize)> =
                        (0..sp.len()).map(|y| (sp.distance(c, y), y)).collect();
                    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    v
                })
                .collect(),
        )
    }

    fn prefix(&self, c: usize, r: f64) -> &[(f64, usize)] {
        let row = &self.0[c];
        &row[..row.partition_point(|x| x.0 < r)]
    }

    /// Members of `B(c, r)` in ascending index order.
    fn pts(&self, c: usize, r: f64) -> Vec<usize> {
        let mut v: Vec<usize> = self.prefix(c, r).iter().map(|x| x.1).collect();
        v.sort_unstable();
        v
    }
}

fn mu(sp: &Space, set: &[usize]) -> f64 {
    set.iter().map(|&i| sp.mass(i)).sum()
}

fn wsum(sp: &Space, w: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| w[i] * sp.mass(i)).sum()
}

fn avg(sp: &Space, w: &[f64], set: &[usize]) -> f64 {
    wsum(sp, w, set) / mu(sp, set)
}

fn rel_ok(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) || a == b
}

/// `lhs <= rhs` up to relative tolerance `tol`.
fn le(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * lhs.abs().max(rhs.abs())
}

fn all_balls(sp: &Space, sigma: f64) -> R<Vec<Ball>> {
    balls_within(sp, &Ball::new(0, 1e12).map_err(s)?, sigma).map_err(s)
}

fn random_kind(rng: &mut StreamRng, k: u64) -> WeightKind {
    match k % 3 {
        0 => WeightKind::Lognormal {
            log_std: 0.2 + rng.uniform(),
        },
        1 => WeightKind::Power {
            exponent: -2.0 + 4.0 * rng.uniform(),
            shift: 0.01 + 0.2 * rng.uniform(),
        },
        _ => WeightKind::TwoLevel {
            low: 1.0,
            high: 2.0 + 48.0 * rng.uniform(),
            fraction: 0.05 + 0.45 * rng.uniform(),
        },
    }
}

fn random_instance(seed: u64, max_n: u64) -> R<(Space, Weight, f64)> {
    let mut rng = StreamRng::new(seed);
    let n = 10 + rng.below(max_n - 9) as usize;
    let dim = 1 + rng.below(3) as usize;
    let kind = random_kind(&mut rng, seed);
    let sigma = [1.0, 1.5, 2.0, 3.0][rng.below(4) as usize];
    let sp = random_space(n, dim, seed).map_err(s)?;
    let w = random_weight(&sp, &kind, seed ^ 0x5eed).map_err(s)?;
    Ok((sp, w, sigma))
}

/// Per-ball sums over `B` and `sigma B`.
struct Pair {
    inner: Vec<usize>,
    mu_b: f64,
    w_sb: f64,
    a: f64,
}

fn pair(nb: &Nbhd, sp: &Space, w: &[f64], b: &Ball, sigma: f64) -> Pair {
    let inner: Vec<usize> = nb.prefix(b.center, b.radius).iter().map(|x| x.1).collect();
    let (mut m, mut w_sb) = (0.0, 0.0);
    for &(_, i) in nb.prefix(b.center, sigma * b.radius) {
        m += sp.mass(i);
        w_sb += w[i] * sp.mass(i);
    }
    Pair {
        mu_b: mu(sp, &inner),
        inner,
        w_sb,
        a: w_sb / m,
    }
}

fn restricted(sp: &Space, w: &[f64], set: &[usize], pred: impl Fn(f64) -> bool) -> (f64, f64) {
    let sel: Vec<usize> = set.iter().copied().filter(|&i| pred(w[i])).collect();
    (mu(sp, &sel), wsum(sp, w, &sel))
}

fn pos_part(sp: &Space, w: &[f64], set: &[usize], a: f64) -> f64 {
    set.iter().map(|&i| (w[i] - a).max(0.0) * sp.mass(i)).sum()
}

fn neg_part(sp: &Space, w: &[f64], set: &[usize], a: f64) -> f64 {
    set.iter().map(|&i| (a - w[i]).max(0.0) * sp.mass(i)).sum()
}

/// Exact doubling constant over every center and every radius at which a
/// ball or its double changes.
fn brute_doubling(sp: &Space) -> f64 {
    let n = sp.len();
    let mut c: f64 = 1.0;
    for x in 0..n {
        let mut radii: Vec<f64> = (0..n)
            .map(|y| sp.distance(x, y))
            .flat_map(|d| [d, 0.5 * d])
            .collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        // Open balls change just above each breakpoint.
        for r in radii.into_iter().filter(|&r| r > 0.0) {
            let r = r * (1.0 + 1e-12);
            c = c.max(mu(sp, &pts(sp, x, 2.0 * r)) / mu(sp, &pts(sp, x, r)));
        }
    }
    c
}

// 1. Strip weight: cube ratios and the weak oscillation constant.

/// Number of strip cells (last coordinate in (0, 1)) and all cells in the
/// Chebyshev cube of radius `r` around `c`, by coordinates.
fn strip_counts(sp: &Space, c: usize, r: f64) -> (u64, u64) {
    let cc = sp.coords(c).unwrap();
    let mut q = 0;
    let mut all = 0;
    for y in 0..sp.len() {
        let yc = sp.coords(y).unwrap();
        if cc.iter().zip(&yc).all(|(a, b)| (a - b).abs() < r) {
            all += 1;
            let last = yc[yc.len() - 1];
            if last > 0.0 && last < 1.0 {
                q += 1;
            }
        }
    }
    (q, all)
}

fn strip_family(side: usize) -> R<(Space, Weight, BallFamily)> {
    let (sp, w, c) = sawyer_strip(2, side, 1.0).map_err(s)?;
    let r0 = fit_radius(&sp, c, 2.0, 1.0).map_err(s)?;
    let fam = build_family(&sp, Ball::new(c, r0).map_err(s)?, 1.0, 2.0).map_err(s)?;
    Ok((sp, w, fam))
}

fn c1_sawyer_bound() -> R<String> {
    let t = Instant::now();
    let (sp, w, fam) = strip_family(64)?;
    let mut worst = (0u64, 1u64);
    let mut checked = 0;
    for b in &fam.members {
        let (q, _) = strip_counts(&sp, b.center, b.radius);
        let (q2, _) = strip_counts(&sp, b.center, 2.0 * b.radius);
        if q2 == 0 {
            continue;
        }
        checked += 1;
        ensure(2 * q <= q2, || {
            format!("cube {b:?}: w(Q) = {q}, w(2Q) = {q2}")
        })?;
        if q * worst.1 > worst.0 * q2 {
            worst = (q, q2);
        }
    }
    let eps = wgr_epsilon(&sp, &w, &fam.members, 2.0).map_err(s)?.value;
    ensure(eps <= 0.5 + 1e-12, || format!("wgr_epsilon = {eps} > 1/2"))?;
    let rep = sawyer_cube_check(&sp, &w, &fam).map_err(s)?;
    ensure(rep.passed, || "library cube check failed".into())?;
    within(t, Duration::from_secs(30))?;
    Ok(format!(
        "{checked} cubes, max w(Q)/w(2Q) = {}/{}, wgr_epsilon = {eps:.6}",
        worst.0, worst.1
    ))
}

// 2. Strip weight: growth of the reverse Hölder ratio.

fn c2_sawyer_rhi_growth() -> R<String> {
    let mut values = Vec::new();
    for side in [16, 32, 64] {
        let (sp, w, fam) = strip_family(side)?;
        let mut oracle: f64 = 0.0;
        for b in &fam.members {
            let (q, n1) = strip_counts(&sp, b.center, b.radius);
            let (q2, n2) = strip_counts(&sp, b.center, 2.0 * b.radius);
            if q2 == 0 {
                continue;
            }
            // w is an indicator, so avg_Q w^2 = avg_Q w.
            let ratio = (q as f64 / n1 as f64).sqrt() / (q2 as f64 / n2 as f64);
            oracle = oracle.max(ratio);
        }
        let lib = rhi_constant(&sp, &w, &fam.members, 2.0, 2.0, RhsBall::SigmaDilate)
            .map_err(s)?
            .value;
        ensure(rel_ok(lib, oracle, 1e-12), || {
            format!("side {side}: library {lib} vs oracle {oracle}")
        })?;
        values.push((side, oracle));
    }
    for p in values.windows(2) {
        let f = p[1].1 / p[0].1;
        ensure(f >= 1.2, || {
            format!("side {} -> {}: factor {f:.4} < 1.2", p[0].0, p[1].0)
        })?;
    }
    let list: Vec<String> = values
        .iter()
        .map(|(sd, v)| format!("{sd}: {v:.4}"))
        .collect();
    Ok(format!("rhi_constant(p=2) {}", list.join(", ")))
}

// 3. Superlevel and sublevel implications, per ball.

const TOL: f64 = 1e-9;

/// Oracle pass over one random instance: inequalities checked, hypotheses
/// that could not be met on the positive and negative side, and the time
/// spent in the library.
fn c3_instance(k: u64) -> R<(usize, [usize; 2], Duration)> {
    let mut lib = Duration::ZERO;
    let mut rows = 0usize;
    let mut skipped = [0usize; 2];
    let seed = 3000 + k;
    let (sp, w, sigma) = random_instance(seed, 150)?;
    let wv = w.values();
    let lt = Instant::now();
    let balls = all_balls(&sp, sigma)?;
    lib += lt.elapsed();
    let nb = Nbhd::new(&sp);
    let pairs: Vec<Pair> = balls.iter().map(|b| pair(&nb, &sp, wv, b, sigma)).collect();
    let tag = |what: &str| format!("seed {seed} (n = {}, sigma = {sigma}): {what}", sp.len());

    // Positive side: eps = sup (w - w_sB)_+ integral over B / w(sB).
    let live: Vec<&Pair> = pairs.iter().filter(|p| p.w_sb > 0.0).collect();
    let eps = live
        .iter()
        .map(|p| pos_part(&sp, wv, &p.inner, p.a) / p.w_sb)
        .fold(0.0, f64::max);
    if eps < 1.0 {
        let lambda = 0.5 * (eps + 1.0);
        let factor = 1.0 - eps / lambda;
        for (b, p) in balls.iter().zip(&pairs).filter(|(_, p)| p.w_sb > 0.0) {
            let (_, lhs) = restricted(&sp, wv, &p.inner, |x| {
                if eps > 0.0 {
                    factor * x >= p.a
                } else {
                    x > p.a
                }
            });
            ensure(le(lhs, lambda * p.w_sb, TOL), || {
                tag(&format!("superlevel at {b:?}: {lhs} > {}", lambda * p.w_sb))
            })?;
            rows += 1;
        }
        let lt = Instant::now();
        let rep = check_thm_superlevel(&sp, &w, &balls, sigma, None, lambda).map_err(s)?;
        lib += lt.elapsed();
        ensure(rep.passed, || tag("library superlevel check failed"))?;
        ensure(rel_ok(rep.params.eps.unwrap(), eps, TOL), || {
            tag("measured eps differs")
        })?;
    } else {
        skipped[0] += 1;
    }
    let mut done = false;
    for alpha in [0.5, 0.9, 0.99] {
        let beta = live
            .iter()
            .map(|p| restricted(&sp, wv, &p.inner, |x| alpha * x >= p.a).1 / p.w_sb)
            .fold(0.0, f64::max);
        if beta >= 1.0 {
            continue;
        }
        let coeff = 1.0 - alpha * (1.0 - beta);
        for (b, p) in balls.iter().zip(&pairs).filter(|(_, p)| p.w_sb > 0.0) {
            let lhs = pos_part(&sp, wv, &p.inner, p.a);
            ensure(le(lhs, coeff * p.w_sb, TOL), || {
                tag(&format!("oscillation at {b:?}, alpha {alpha}"))
            })?;
            rows += 1;
        }
        let lt = Instant::now();
        let rep = check_thm_osc_from_ainfty(&sp, &w, &balls, sigma, alpha, None).map_err(s)?;
        lib += lt.elapsed();
        ensure(rep.passed, || tag("library oscillation check failed"))?;
        done = true;
        break;
    }
    skipped[0] += usize::from(!done);

    // Negative side.
    let live: Vec<&Pair> = pairs.iter().filter(|p| p.a > 0.0).collect();
    let eps = live
        .iter()
        .map(|p| neg_part(&sp, wv, &p.inner, p.a) / p.mu_b / p.a)
        .fold(0.0, f64::max);
    if eps < 1.0 {
        let lambda = 0.5 * (eps + 1.0);
        let factor = 1.0 - eps / lambda;
        for (b, p) in balls.iter().zip(&pairs).filter(|(_, p)| p.a > 0.0) {
            let (lhs, _) = restricted(&sp, wv, &p.inner, |x| {
                if eps > 0.0 {
                    x <= factor * p.a
                } else {
                    x < p.a
                }
            });
            ensure(le(lhs, lambda * p.mu_b, TOL), || {
                tag(&format!("sublevel at {b:?}"))
            })?;
            rows += 1;
        }
        let lt = Instant::now();
        let rep = check_thm_neg_superlevel(&sp, &w, &balls, sigma, None, lambda).map_err(s)?;
        lib += lt.elapsed();
        ensure(rep.passed, || tag("library sublevel check failed"))?;
    } else {
        skipped[1] += 1;
    }
    let mut done = false;
    for beta in [0.5, 0.1, 0.01] {
        let alpha = live
            .iter()
            .map(|p| restricted(&sp, wv, &p.inner, |x| x <= beta * p.a).0 / p.mu_b)
            .fold(0.0, f64::max);
        if alpha >= 1.0 {
            continue;
        }
        let coeff = 1.0 - (1.0 - alpha) * beta;
        for (b, p) in balls.iter().zip(&pairs).filter(|(_, p)| p.a > 0.0) {
            let lhs = neg_part(&sp, wv, &p.inner, p.a) / p.mu_b;
            ensure(le(lhs, coeff * p.a, TOL), || {
                tag(&format!("negative oscillation at {b:?}, beta {beta}"))
            })?;
            rows += 1;
        }
        let lt = Instant::now();
        let rep = check_thm_neg_osc(&sp, &w, &balls, sigma, None, beta).map_err(s)?;
        lib += lt.elapsed();
        ensure(rep.passed, || {
            tag("library negative oscillation check failed")
        })?;
        done = true;
        break;
    }
    skipped[1] += usize::from(!done);
    Ok((rows, skipped, lib))
}

fn c3_level_set_theorems() -> R<String> {
    let t = Instant::now();
    let per: Vec<(usize, [usize; 2], Duration)> = (0..200u64)
        .into_par_iter()
        .map(c3_instance)
        .collect::<R<_>>()?;
    let lib: Duration = per.iter().map(|p| p.2).sum();
    let rows: usize = per.iter().map(|p| p.0).sum();
    let skipped = [
        per.iter().map(|p| p.1[0]).sum::<usize>(),
        per.iter().map(|p| p.1[1]).sum(),
    ];
    within(t, Duration::from_secs(120))?;
    Ok(format!(
        "200 instances, {rows} ball inequalities, 0 violations (hypothesis unsatisfiable: {} positive, {} negative; \
         library {:.1} s)",
        skipped[0],
        skipped[1],
        lib.as_secs_f64()
    ))
}

// 4. Inclusions between the oscillation conditions.

fn c4_inclusions() -> R<String> {
    let mut balls_seen = 0usize;
    for k in 0..100u64 {
        let seed = 4000 + k;
        let (sp, w, sigma) = random_instance(seed, 60)?;
        let wv = w.values();
        let balls = all_balls(&sp, sigma)?;
        for b in &balls {
            let outer = pts(&sp, b.center, sigma * b.radius);
            let a = avg(&sp, wv, &outer);
            let full: f64 = outer.iter().map(|&i| (wv[i] - a).abs() * sp.mass(i)).sum();
            let pos = pos_oscillation(&sp, &w, b, sigma).map_err(s)?;
            // Normalized by w(sigma B), the scale of the condition.
            let w_sb = wsum(&sp, wv, &outer);
            ensure(pos / w_sb <= 0.5 * full / w_sb + 1e-12, || {
                format!("seed {seed} {b:?}: {pos} > {}", 0.5 * full)
            })?;
            balls_seen += 1;
        }
        let unit = all_balls(&sp, 1.0)?;
        let weak = wgr_epsilon(&sp, &w, &unit, 1.0).map_err(s)?;
        let gr = gr_epsilon(&sp, &w, &unit).map_err(s)?;
        ensure(rel_ok(weak.value, 0.5 * gr.value, 1e-12), || {
            format!("seed {seed}: wgr {} vs gr/2 {}", weak.value, 0.5 * gr.value)
        })?;
        let g: BTreeMap<(usize, u64), f64> = gr
            .per_ball
            .iter()
            .map(|(b, v)| ((b.center, b.radius.to_bits()), *v))
            .collect();
        for (b, v) in &weak.per_ball {
            let other = g
                .get(&(b.center, b.radius.to_bits()))
                .copied()
                .unwrap_or(f64::NAN);
            // Both ratios are at most 1 and differ by the rounding of the
            // average, so compare absolutely.
            ensure((*v - 0.5 * other).abs() <= 1e-12, || {
                format!("seed {seed} {b:?}: {v} vs {}", 0.5 * other)
            })?;
        }
    }
    Ok(format!(
        "100 instances, {balls_seen} balls, matched ball sets agree"
    ))
}

// 5. Calderón–Zygmund decompositions.

struct CzCase {
    sp: Space,
    nb: Nbhd,
    mf: Vec<f64>,
    f: Weight,
    fam: BallFamily,
    profile: DoublingProfile,
    lo: f64,
    hi: f64,
}

fn cz_case(seed: u64) -> R<CzCase> {
    let mut rng = StreamRng::new(seed);
    for _ in 0..100 {
        let n = 900 + rng.below(500) as usize;
        let sp = Space::grid_1d(0.0, n as f64, n).map_err(s)?;
        let sigma = [1.0, 1.25][rng.below(2) as usize];
        let eta = [1.0, 2.0][rng.below(2) as usize];
        let policy = if seed.is_multiple_of(10) {
            RadiusPolicy::Exhaustive
        } else {
            RadiusPolicy::Dyadic
        };
        let mut f: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        for _ in 0..1 + rng.below(3) {
            let at = n / 4 + rng.below(n as u64 / 2) as usize;
            let h = 10f64.powf(3.0 + 3.0 * rng.uniform());
            for j in 0..1 + rng.below(3) as usize {
                f[(at + j).min(n - 1)] += h;
            }
        }
        let f = Weight::new(f).map_err(s)?;
        let base = Ball::new(n / 2, n as f64 / (2.0 * (1.0 + eta))).map_err(s)?;
        let fam = build_family_with(&sp, base, eta, sigma, policy).map_err(s)?;
        let profile = DoublingProfile::exact(&sp).map_err(s)?;
        let hat: Vec<usize> = (0..n)
            .filter(|&y| sp.distance(base.center, y) < (1.0 + eta) * base.radius)
            .collect();
        let lo = cz_alpha(&profile, sigma, eta) * avg(&sp, f.values(), &hat);
        let nb = Nbhd::new(&sp);
        let mf = oracle_maximal(&nb, &sp, f.values(), &fam);
        let hi = mf.iter().copied().fold(0.0, f64::max);
        if lo < hi {
            return Ok(CzCase {
                sp,
                nb,
                mf,
                f,
                fam,
                profile,
                lo,
                hi,
            });
        }
    }
    Err(format!("seed {seed}: no admissible level range"))
}

fn oracle_maximal(nb: &Nbhd, sp: &Space, f: &[f64], fam: &BallFamily) -> Vec<f64> {
    let mut mf = vec![0.0f64; sp.len()];
    for b in &fam.members {
        let set = nb.pts(b.center, b.radius);
        let a = avg(sp, f, &set);
        for i in set {
            mf[i] = mf[i].max(a);
        }
    }
    mf
}

/// Re-scans a decomposition at `lambda`; returns the violated properties.
fn cz_rescan(c: &CzCase, lambda: f64, d: &CzDecomposition) -> Vec<String> {
    let (sp, nb, f, fam, mf) = (&c.sp, &c.nb, c.f.values(), &c.fam, &c.mf);
    let mut bad = Vec::new();
    let region = nb.pts(fam.base.center, (1.0 + fam.eta) * fam.base.radius);
    let level: Vec<usize> = region.iter().copied().filter(|&x| mf[x] > lambda).collect();
    let in_level: Vec<bool> = (0..sp.len())
        .map(|x| level.binary_search(&x).is_ok())
        .collect();
    let cap = fam.eta * fam.base.radius / (5.0 * fam.sigma);
    let mut owner = vec![usize::MAX; sp.len()];
    let mut covered5 = vec![false; sp.len()];
    for (k, b) in d.balls.iter().enumerate() {
        let set = nb.pts(b.center, b.radius);
        if set.iter().any(|&x| !in_level[x]) {
            bad.push(format!("(i) ball {k} leaves the level set"));
        }
        for &x in &set {
            if owner[x] != usize::MAX {
                bad.push(format!("balls {} and {k} overlap", owner[x]));
            }
            owner[x] = k;
        }
        for x in nb.pts(b.center, 5.0 * b.radius) {
            covered5[x] = true;
        }
        if b.radius > cap {
            bad.push(format!("(ii) ball {k} radius {} > {cap}", b.radius));
        }
        let a = avg(sp, f, &set);
        if a.is_nan() || a <= lambda {
            bad.push(format!("(iii) ball {k} average <= level"));
        }
        let mut tau = 2.0;
        while tau * b.radius <= fam.eta * fam.base.radius {
            let a = avg(sp, f, &nb.pts(b.center, tau * b.radius));
            if a > lambda {
                bad.push(format!("(iv) ball {k} dilate {tau}: {a} > {lambda}"));
            }
            tau *= 2.0;
        }
    }
    if level.iter().any(|&x| !covered5[x]) {
        bad.push("(i) level set not covered by 5-dilates".into());
    }
    if d.balls.is_empty() {
        bad.push("no balls".into());
    }
    bad
}

/// One decomposition and one nested pair, re-scanned: (balls checked,
/// whether the nested construction was built).
fn c5_instance(k: u64) -> R<(usize, bool)> {
    let seed = 5000 + k;
    let case = cz_case(seed)?;
    let mut rng = StreamRng::new(seed ^ 0xc2);
    let (l0, l1) = (case.lo.ln(), case.hi.ln());
    let lambda = (l0 + (l1 - l0) * 0.999 * rng.uniform()).exp();
    let d = cz_decompose(&case.sp, &case.f, lambda, &case.fam, &case.profile)
        .map_err(|e| format!("seed {seed}: decomposition at {lambda}: {e}"))?;
    let bad = cz_rescan(&case, lambda, &d);
    ensure(bad.is_empty(), || {
        format!("seed {seed}: {}", bad.join("; "))
    })?;
    let cap = case.fam.eta * case.fam.base.radius / (5.0 * case.fam.sigma);
    ensure(cz_radius_cap(&case.fam) == cap, || {
        format!("seed {seed}: radius cap")
    })?;

    let hi = (lambda.ln() + (l1 - lambda.ln()) * 0.999 * rng.uniform()).exp();
    match cz_nested(&case.sp, &case.f, lambda, hi, &case.fam, &case.profile) {
        Ok((low, high, map)) => {
            for (name, dd, l) in [("low", &low, lambda), ("high", &high, hi)] {
                let bad = cz_rescan(&case, l, dd);
                ensure(bad.is_empty(), || {
                    format!("seed {seed} nested {name}: {}", bad.join("; "))
                })?;
            }
            for (i, b) in high.balls.iter().enumerate() {
                let host = &low.balls[map[i]];
                let h5 = case.nb.pts(host.center, 5.0 * host.radius);
                ensure(
                    case.nb
                        .pts(b.center, b.radius)
                        .iter()
                        .all(|x| h5.binary_search(x).is_ok()),
                    || format!("seed {seed}: high ball {i} outside 5 x low ball {}", map[i]),
                )?;
            }
            Ok((d.balls.len() + low.balls.len() + high.balls.len(), true))
        }
        Err(Error::Nesting { witness }) => {
            ensure(case.fam.contains_ball(&witness), || {
                format!("seed {seed}: nesting witness {witness:?} not in the family")
            })?;
            Ok((d.balls.len(), false))
        }
        Err(e) => Err(format!("seed {seed}: nested construction: {e}")),
    }
}

fn c5_cz() -> R<String> {
    let per: Vec<(usize, bool)> = (0..50u64)
        .into_par_iter()
        .map(c5_instance)
        .collect::<R<_>>()?;
    let balls: usize = per.iter().map(|p| p.0).sum();
    let built = per.iter().filter(|p| p.1).count();
    Ok(format!(
        "50 instances, {balls} balls re-scanned, 0 violations; nested {built} built, {} failed with witness",
        50 - built
    ))
}

// 6 and 7. Near-constant instances on a 1-D grid.

struct NearConstant {
    name: &'static str,
    sp: Space,
    w: Weight,
    base: Ball,
}

const SIGMA: f64 = 1.25;
const ETA: f64 = 1.0;

fn near_constant() -> R<Vec<NearConstant>> {
    let sp = Space::grid_1d(0.0, 2.0 * std::f64::consts::PI, 512).map_err(s)?;
    let c = sp
        .nearest_point(&[std::f64::consts::PI])
        .ok_or("no center")?;
    let base = Ball::new(c, fit_radius(&sp, c, SIGMA, ETA).map_err(s)?).map_err(s)?;
    let sine = sinusoid_weight(&sp, 0.001, 1.0).map_err(s)?;
    let logn = random_weight(&sp, &WeightKind::Lognormal { log_std: 0.05 }, 1).map_err(s)?;
    Ok(vec![
        NearConstant {
            name: "sinusoid",
            sp: sp.clone(),
            w: sine,
            base,
        },
        NearConstant {
            name: "lognormal",
            sp,
            w: logn,
            base,
        },
    ])
}

/// Independent `eps`, `C_mu` and decay constants for one instance.
struct Constants {
    eps: f64,
    c: f64,
    d: f64,
    alpha: f64,
    a: f64,
    lambda0: f64,
    ln_c_thm: f64,
    w_big: f64,
}

fn constants(nc: &NearConstant, ctx: &JnContext) -> R<Constants> {
    let (sp, wv) = (&nc.sp, nc.w.values());
    let nb = Nbhd::new(sp);
    let hat_r = (1.0 + ETA) * nc.base.radius;
    let w_big = avg(sp, wv, &pts(sp, nc.base.center, SIGMA * hat_r));
    let balls = balls_within(
        sp,
        &Ball::new(nc.base.center, SIGMA * hat_r).map_err(s)?,
        SIGMA,
    )
    .map_err(s)?;
    let eps = balls
        .iter()
        .map(|b| pair(&nb, sp, wv, b, SIGMA))
        .filter(|p| p.w_sb > 0.0)
        .map(|p| pos_part(sp, wv, &p.inner, p.a) / p.w_sb)
        .fold(0.0, f64::max);
    let c = brute_doubling(sp);
    ensure(rel_ok(c, ctx.profile.c_mu, 1e-12), || {
        format!("C_mu oracle {c} vs {}", ctx.profile.c_mu)
    })?;
    ensure(rel_ok(eps, ctx.eps(), 1e-9), || {
        format!("eps oracle {eps} vs {}", ctx.eps())
    })?;
    ensure(rel_ok(w_big, ctx.w_big, 1e-12), || "W differs".into())?;
    let d = c.log2();
    let e = std::f64::consts::E;
    let alpha = c * c * (5.0 * SIGMA).powf(d) * (1.0 + 1.0 / ETA).powf(d);
    let a = c * (5.0 * SIGMA).powf(d) * e;
    let ln_c0 = 1.0 + alpha / (5f64.powf(d) * e);
    Ok(Constants {
        eps,
        c,
        d,
        alpha,
        a,
        lambda0: alpha * c * SIGMA.powf(d) * eps,
        ln_c_thm: 2.0 * c.ln() + ln_c0 - alpha.ln() - d * SIGMA.ln(),
        w_big,
    })
}

fn c6_jn_decay() -> R<String> {
    let t = Instant::now();
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for nc in near_constant()? {
        let ctx =
            JnContext::new(&nc.sp, &nc.w, SIGMA, ETA, nc.base, JnOptions::default()).map_err(s)?;
        let k = constants(&nc, &ctx)?;
        let rep = check_jn_decay(&ctx, &nc.sp, &nc.w, None).map_err(s)?;
        let (sp, wv) = (&nc.sp, nc.w.values());
        let base_pts = pts(sp, nc.base.center, nc.base.radius);
        let hat = pts(sp, nc.base.center, (1.0 + ETA) * nc.base.radius);
        let integral = pos_part(sp, wv, &hat, k.w_big);
        ensure(rep.rows.len() == 20, || {
            format!("{}: {} grid points", nc.name, rep.rows.len())
        })?;
        for row in &rep.rows {
            let Witness::Lambda { lambda } = row.key else {
                return Err(format!("{}: row without a level", nc.name));
            };
            ensure(lambda >= ctx.constants.lambda0, || {
                format!("{}: level {lambda} below lambda0", nc.name)
            })?;
            let sel: Vec<usize> = base_pts
                .iter()
                .copied()
                .filter(|&i| (wv[i] - k.w_big).max(0.0) > lambda * k.w_big)
                .collect();
            let lhs = mu(sp, &sel);
            let rhs = if integral == 0.0 {
                0.0
            } else {
                k.ln_c_thm.exp() * (1.0 + lambda).powf(-1.0 / (k.a * k.eps)) * integral
                    / (k.eps * k.w_big)
            };
            ensure(rel_ok(lhs, row.lhs, 1e-12), || {
                format!("{}: measure at {lambda}: {lhs} vs {}", nc.name, row.lhs)
            })?;
            ensure(
                rhs == 0.0 || rhs < 1e-290 || rel_ok(rhs, row.rhs, 1e-9),
                || format!("{}: bound at {lambda}: {rhs} vs {}", nc.name, row.rhs),
            )?;
            ensure(lhs <= row.rhs && row.margin >= 0.0, || {
                format!("{}: decay fails at {lambda}", nc.name)
            })?;
        }
        ensure(rel_ok(k.lambda0, ctx.constants.lambda0, 1e-9), || {
            format!("{}: lambda0 differs", nc.name)
        })?;
        let live = rep.non_vacuous_rows();
        out.push(format!(
            "{}: eps = {:.3e}, lambda0 = {:.3e}, {live}/20 non-vacuous",
            nc.name, k.eps, k.lambda0
        ));
        if nc.name == "lognormal" && live < 3 {
            let max_rel = base_pts
                .iter()
                .map(|&i| (wv[i] - k.w_big).max(0.0) / k.w_big)
                .fold(0.0, f64::max);
            failures.push(format!(
                "lognormal has {live} non-vacuous points (need 3): lambda0 = alpha C sigma^D eps = {:.3e} exceeds the \
                 largest relative excess {max_rel:.3e} (C = {}, D = {:.4}, alpha = {:.1})",
                k.lambda0, k.c, k.d, k.alpha
            ));
        }
    }
    within(t, Duration::from_secs(60))?;
    if failures.is_empty() {
        Ok(out.join("; "))
    } else {
        Err(format!("{}; {}", failures.join("; "), out.join("; ")))
    }
}

fn c7_rhi_chain() -> R<String> {
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for nc in near_constant()? {
        let ctx =
            JnContext::new(&nc.sp, &nc.w, SIGMA, ETA, nc.base, JnOptions::default()).map_err(s)?;
        let k = constants(&nc, &ctx)?;
        ensure(
            rel_ok(k.a, ctx.constants.a_const, 1e-12)
                && rel_ok(k.alpha, ctx.constants.alpha, 1e-12),
            || "constants differ".into(),
        )?;
        let cap = 1.0 / (2.0 * k.a * k.eps);
        let ps = [1.5, 2.0, cap.min(4.0)];
        let mut bad = Vec::new();
        for p in ps {
            let reports = [
                check_osc_rhi(&ctx, &nc.sp, &nc.w, p),
                check_weak_rhi(&ctx, &nc.sp, &nc.w, p),
                check_final_rhi(&ctx, &nc.sp, &nc.w, p),
            ];
            for r in reports {
                match r {
                    Ok(r) if r.passed && r.margin >= 0.0 => {}
                    Ok(r) => bad.push(format!("{} p = {p}: margin {:.3e}", r.name, r.margin)),
                    Err(e) => {
                        let msg = e.to_string();
                        if !bad.contains(&msg) {
                            bad.push(msg);
                        }
                    }
                }
            }
        }
        cover_oracle(&nc, &ctx.profile)?;
        if bad.is_empty() {
            out.push(format!(
                "{}: p in {{1.5, 2, {:.4}}} all hold",
                nc.name, ps[2]
            ));
        } else {
            failures.push(format!(
                "{}: eps = {:.3e} vs threshold 1/(2A) = {:.3e}, exponent cap {cap:.3e}: {}",
                nc.name,
                k.eps,
                1.0 / (2.0 * k.a),
                bad.join("; ")
            ));
        }
    }
    if failures.is_empty() {
        Ok(format!("{}; covers verified", out.join("; ")))
    } else {
        Err(format!("{}; {}", failures.join("; "), out.join("; ")))
    }
}

fn cover_oracle(nc: &NearConstant, profile: &DoublingProfile) -> R<()> {
    let sp = &nc.sp;
    let cover = five_r_cover(sp, nc.base, SIGMA, ETA, profile).map_err(s)?;
    let rho = (SIGMA - 1.0) / (SIGMA * (1.0 + ETA));
    let r = rho * nc.base.radius;
    let centers: Vec<usize> = cover.balls.iter().map(|b| b.center).collect();
    ensure(
        cover.balls.iter().all(|b| rel_ok(b.radius, r, 1e-12)),
        || "cover radius".into(),
    )?;
    for x in pts(sp, nc.base.center, nc.base.radius) {
        ensure(centers.iter().any(|&c| sp.distance(c, x) < r), || {
            format!("{}: point {x} uncovered", nc.name)
        })?;
    }
    let fifths: Vec<Vec<usize>> = centers.iter().map(|&c| pts(sp, c, r / 5.0)).collect();
    for i in 0..fifths.len() {
        for j in i + 1..fifths.len() {
            ensure(fifths[i].iter().all(|x| !fifths[j].contains(x)), || {
                format!("fifths {i}, {j} meet")
            })?;
        }
    }
    let outer = pts(sp, nc.base.center, SIGMA * nc.base.radius);
    for &c in &centers {
        ensure(
            pts(sp, c, SIGMA * (1.0 + ETA) * r)
                .iter()
                .all(|x| outer.contains(x)),
            || format!("{}: dilate of cover ball at {c} leaves sigma B0", nc.name),
        )?;
    }
    let c_mu = brute_doubling(sp);
    let bound = c_mu * c_mu * (10.0 * SIGMA * (1.0 + ETA) / (SIGMA - 1.0) + 2.0).powf(c_mu.log2());
    ensure(cover.balls.len() as f64 <= bound, || {
        format!("N = {} > {bound}", cover.balls.len())
    })?;
    ensure(cover.all_ok(), || "library cover flags".into())
}

// 8. Special-function and layer-cake oracles.

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // Each end is `(x, f(x))`.
    fn rec(
        f: &dyn Fn(f64) -> f64,
        (a, fa): (f64, f64),
        fm: f64,
        (b, fb): (f64, f64),
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, (a, fa), flm, (m, fm), left, 0.5 * tol, depth - 1)
            + rec(f, (m, fm), frm, (b, fb), right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(
        f,
        (a, fa),
        fm,
        (b, fb),
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        50,
    )
}

fn c8_special_oracles() -> R<String> {
    let mut notes = Vec::new();
    for (p, y) in [(2.0f64, 10.0f64), (3.0, 20.0)] {
        // lambda = t / (1 - t) maps the half line to [0, 1).
        let g = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let l = t / (1.0 - t);
            l.powf(p - 1.0) * (1.0 + l).powf(-y) / ((1.0 - t) * (1.0 - t))
        };
        let quad = simpson(&g, 0.0, 1.0, 1e-14);
        let lib = beta_fn(p, y - p).map_err(s)?;
        ensure(rel_ok(lib, quad, 1e-6), || {
            format!("B({p}, {}) = {lib}, quadrature {quad}", y - p)
        })?;
        notes.push(format!(
            "B({p},{}) rel err {:.1e}",
            y - p,
            ((lib - quad) / quad).abs()
        ));
    }

    for k in 0..50u64 {
        let seed = 8000 + k;
        let (sp, f, _) = random_instance(seed, 80)?;
        let mut rng = StreamRng::new(seed);
        let p = 1.0 + 3.0 * rng.uniform();
        let region: Vec<usize> = (0..sp.len()).collect();
        let fv = f.values();
        let direct: f64 = region.iter().map(|&i| fv[i].powf(p) * sp.mass(i)).sum();
        let mut levels: Vec<f64> = fv.iter().copied().filter(|&v| v > 0.0).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut layered = 0.0;
        let mut prev = 0.0;
        for &l in &levels {
            let above: f64 = region
                .iter()
                .filter(|&&i| fv[i] > prev)
                .map(|&i| sp.mass(i))
                .sum();
            let piece = simpson(&|x: f64| p * x.powf(p - 1.0), prev, l, 1e-13 * l.powf(p));
            layered += above * piece;
            prev = l;
        }
        ensure(rel_ok(direct, layered, 1e-9), || {
            format!("seed {seed}: direct {direct} vs layer cake {layered}")
        })?;
        let rep = cavalieri_check(&sp, &f, p, &region).map_err(s)?;
        ensure(rep.passed && rel_ok(rep.rows[0].rhs, layered, 1e-9), || {
            format!("seed {seed}: library layer cake")
        })?;
    }
    notes.push("cavalieri 50/50".into());

    for p in [1u32, 2, 3] {
        let pf = p as f64;
        let ys: Vec<f64> = (0..12).map(|j| 10.0 * pf * 2f64.powi(j)).collect();
        let rep = beta_asymptotic_check(pf, &ys).map_err(s)?;
        ensure(rep.passed, || {
            format!("p = {p}: library asymptotic check failed")
        })?;
        let mut last = f64::INFINITY;
        for &y in &ys {
            // B(p, y - p) y^p / Gamma(p) = y^p / ((y - 1) ... (y - p)) for integer p.
            let exact = (1..=p).map(|j| y / (y - j as f64)).product::<f64>();
            let lib = (ln_beta(pf, y - pf).map_err(s)? + pf * y.ln() - lgamma(pf)).exp();
            ensure(rel_ok(lib, exact, 1e-12), || {
                format!("p = {p}, y = {y}: {lib} vs {exact}")
            })?;
            let dev = (exact - 1.0).abs();
            ensure(dev < last, || {
                format!("p = {p}: deviation not decreasing at y = {y}")
            })?;
            last = dev;
        }
        ensure(last < 1e-3, || {
            format!("p = {p}: ratio {last} from 1 at the end")
        })?;
    }
    notes.push("beta ratio -> 1 for p = 1, 2, 3".into());
    Ok(notes.join(", "))
}

// 9. Homogeneity and thread-count determinism.

fn functionals(sp: &Space, w: &Weight, balls: &[Ball], sigma: f64) -> R<Vec<(&'static str, f64)>> {
    let v = |r: wgr::Result<wgr::ConditionReport>| r.map(|c| c.value).map_err(s);
    Ok(vec![
        ("wgr_epsilon", v(wgr_epsilon(sp, w, balls, sigma))?),
        ("neg_wgr_epsilon", v(neg_wgr_epsilon(sp, w, balls, sigma))?),
        ("gr_epsilon", v(gr_epsilon(sp, w, balls))?),
        (
            "weak_ainfty_beta",
            v(weak_ainfty_beta(sp, w, balls, sigma, 0.5))?,
        ),
        (
            "sublevel_alpha",
            v(sublevel_alpha(sp, w, balls, sigma, 0.5))?,
        ),
        (
            "rhi_constant",
            v(rhi_constant(sp, w, balls, sigma, 2.0, RhsBall::SigmaDilate))?,
        ),
        (
            "rhi_constant_hat",
            v(rhi_constant(
                sp,
                w,
                balls,
                sigma,
                2.0,
                RhsBall::SigmaHat { eta: 1.0 },
            ))?,
        ),
    ])
}

fn run_dir(config: &Path, out: &Path, threads: &str) -> R<(i32, BTreeMap<String, Vec<u8>>)> {
    let o = Command::new(env!("CARGO_BIN_EXE_wgr"))
        .args([
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
            "run",
        ])
        .output()
        .map_err(s)?;
    let mut files = BTreeMap::new();
    for e in fs::read_dir(out).map_err(s)? {
        let e = e.map_err(s)?;
        files.insert(
            e.file_name().to_string_lossy().into_owned(),
            fs::read(e.path()).map_err(s)?,
        );
    }
    Ok((o.status.code().unwrap_or(-1), files))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn c9_homogeneity_determinism() -> R<String> {
    let mut n = 0;
    for k in 0..30u64 {
        let seed = 9000 + k;
        let (sp, w, sigma) = random_instance(seed, 60)?;
        let balls = all_balls(&sp, sigma)?;
        let base = functionals(&sp, &w, &balls, sigma)?;
        for c in [1e-6, 1e6] {
            let scaled_w = functionals(&sp, &w.scaled(c).map_err(s)?, &balls, sigma)?;
            let scaled_mu = functionals(&sp.with_scaled_masses(c).map_err(s)?, &w, &balls, sigma)?;
            for ((name, a), ((_, b), (_, m))) in base.iter().zip(scaled_w.iter().zip(&scaled_mu)) {
                ensure(rel_ok(*a, *b, 1e-12) && rel_ok(*a, *m, 1e-12), || {
                    format!("seed {seed}, c = {c}: {name} {a} vs {b} (w) / {m} (mass)")
                })?;
                n += 1;
            }
        }
    }
    let mut runs = Vec::new();
    for cfg in ["two_level_cloud.json", "near_constant.json"] {
        let dir = tempfile::tempdir().map_err(s)?;
        let (a_code, a) = run_dir(&configs().join(cfg), &dir.path().join("t1"), "1")?;
        let (b_code, b) = run_dir(&configs().join(cfg), &dir.path().join("t8"), "8")?;
        ensure(a_code == b_code, || {
            format!("{cfg}: exit {a_code} vs {b_code}")
        })?;
        ensure(a.keys().eq(b.keys()), || format!("{cfg}: file sets differ"))?;
        for (name, bytes) in &a {
            ensure(&b[name] == bytes, || {
                format!("{cfg}: {name} differs between 1 and 8 threads")
            })?;
        }
        ensure(a.contains_key("manifest.json"), || {
            format!("{cfg}: no manifest")
        })?;
        runs.push(format!("{cfg} {} files", a.len()));
    }
    Ok(format!(
        "{n} scale comparisons; byte-identical runs: {}",
        runs.join(", ")
    ))
}

// 10. Exponent cap along eps = 2^-k.

fn c10_exponent_cap() -> R<String> {
    let cfg = configs().join("near_constant.json");
    let o = Command::new(env!("CARGO_BIN_EXE_wgr"))
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "sweep",
            "eps",
            "--from",
            "3",
            "--to",
            "20",
        ])
        .output()
        .map_err(s)?;
    ensure(o.status.success(), || {
        format!(
            "sweep exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        )
    })?;
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let header = rdr.headers().map_err(s)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or(format!("no column {name}"))
    };
    let (ck, ce, cc) = (col("k")?, col("eps")?, col("exponent_cap")?);
    let mut rows = Vec::new();
    for r in rdr.records() {
        let r = r.map_err(s)?;
        let num = |i: usize| r[i].parse::<f64>().map_err(s);
        rows.push((num(ck)?, num(ce)?, num(cc)?));
    }
    ensure(rows.len() == 18, || format!("{} rows", rows.len()))?;
    for (i, (k, eps, _)) in rows.iter().enumerate() {
        ensure(
            *k == (3 + i) as f64 && *eps == 2f64.powi(-(3 + i as i32)),
            || format!("row {i}: k {k}, eps {eps}"),
        )?;
    }
    for w in rows.windows(2) {
        ensure(w[1].2 > w[0].2 && w[1].2 == 2.0 * w[0].2, || {
            format!("k = {}: cap {} is not twice {}", w[1].0, w[1].2, w[0].2)
        })?;
    }
    Ok(format!(
        "cap {:.6e} at k = 3 to {:.6e} at k = 20, exact doubling",
        rows[0].2, rows[17].2
    ))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [(&str, Criterion); 10] = [
        ("sawyer bound", c1_sawyer_bound),
        ("sawyer reverse Hölder growth", c2_sawyer_rhi_growth),
        ("level-set implications", c3_level_set_theorems),
        ("inclusion identities", c4_inclusions),
        ("Calderón–Zygmund decomposition", c5_cz),
        ("decay estimate", c6_jn_decay),
        ("reverse Hölder chain", c7_rhi_chain),
        ("beta and layer-cake oracles", c8_special_oracles),
        ("homogeneity and determinism", c9_homogeneity_determinism),
        ("exponent cap asymptotics", c10_exponent_cap),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} ({name}): {detail} [{secs:.1} s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}): {why} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
