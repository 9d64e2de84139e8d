//! Dispatch from configured checks to the library.

use std::collections::HashMap;

use serde::Serialize;
use wgr::instances::sawyer_cube_check;
use wgr::theorems::{self, JnContext, JnOptions};
use wgr::weights::{neg_wgr_epsilon, wgr_epsilon};
use wgr::{CheckReport, Error};

use crate::config::{Check, Setup};

/// A finished check: a report, or the library error that stopped it.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Report(Box<CheckReport>),
    Error(ErrorReport),
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub name: String,
    pub passed: bool,
    pub error_kind: &'static str,
    pub error: String,
}

impl Outcome {
    /// Whether this outcome counts against the exit status.
    pub fn fails(&self) -> bool {
        match self {
            Outcome::Report(r) => !r.observational && !r.passed,
            Outcome::Error(_) => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Outcome::Report(r) => {
                let tag = if r.observational {
                    "observed"
                } else if !r.passed {
                    "FAIL"
                } else if r.vacuous {
                    "pass (vacuous)"
                } else if r.status == wgr::theorems::Status::Boundary {
                    "pass (boundary)"
                } else {
                    "pass"
                };
                format!("{tag}, margin {}", crate::output::real(r.margin))
            }
            Outcome::Error(e) => format!("FAIL, {}: {}", e.error_kind, e.error),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Threshold { .. } => "threshold",
        Error::Hypothesis { .. } => "hypothesis",
        Error::InvalidExponent(..) => "invalid_exponent",
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::DegenerateWeight(_) => "degenerate_weight",
        Error::CzPrecondition(_) => "cz_precondition",
        Error::CzConstruction { .. } => "cz_construction",
        Error::Nesting { .. } => "nesting",
        Error::Domain(_) => "domain",
        _ => "error",
    }
}

pub fn error_outcome(name: &str, e: &Error) -> Outcome {
    Outcome::Error(ErrorReport {
        name: name.into(),
        passed: false,
        error_kind: error_kind(e),
        error: e.to_string(),
    })
}

/// Runs checks against one setup, sharing the measured decay context
/// between checks that use the same `eps`.
pub struct Runner<'a> {
    setup: &'a Setup,
    contexts: HashMap<Option<u64>, JnContext>,
}

impl<'a> Runner<'a> {
    pub fn new(setup: &'a Setup) -> Self {
        Self {
            setup,
            contexts: HashMap::new(),
        }
    }

    pub fn context(&mut self, eps: Option<f64>) -> wgr::Result<&JnContext> {
        let key = eps.map(f64::to_bits);
        if !self.contexts.contains_key(&key) {
            let s = self.setup;
            let opts = JnOptions {
                eps,
                profile: s.profile_override,
            };
            let ctx = JnContext::new(
                s.space(),
                &s.instance.weight,
                s.sigma(),
                s.eta(),
                s.base,
                opts,
            )?;
            self.contexts.insert(key, ctx);
        }
        Ok(&self.contexts[&key])
    }

    pub fn run(&mut self, name: &str, check: &Check) -> Outcome {
        match self.try_run(check) {
            Ok(r) => Outcome::Report(Box::new(r)),
            Err(e) => error_outcome(name, &e),
        }
    }

    fn try_run(&mut self, check: &Check) -> wgr::Result<CheckReport> {
        let s = self.setup;
        let space = s.space();
        let w = &s.instance.weight;
        let balls = &s.family.members;
        let sigma = s.sigma();
        match check {
            Check::ThmSuperlevel(p) => {
                let lambda = match p.lambda {
                    Some(l) => l,
                    None => {
                        0.5 * (p
                            .eps
                            .map_or_else(|| measured(wgr_epsilon(space, w, balls, sigma)), Ok)?
                            + 1.0)
                    }
                };
                theorems::check_thm_superlevel(space, w, balls, sigma, p.eps, lambda)
            }
            Check::ThmOscFromAinfty(p) => theorems::check_thm_osc_from_ainfty(
                space,
                w,
                balls,
                sigma,
                p.alpha.unwrap_or(0.5),
                p.beta,
            ),
            Check::ThmNegSuperlevel(p) => {
                let lambda = match p.lambda {
                    Some(l) => l,
                    None => {
                        0.5 * (p.eps.map_or_else(
                            || measured(neg_wgr_epsilon(space, w, balls, sigma)),
                            Ok,
                        )? + 1.0)
                    }
                };
                theorems::check_thm_neg_superlevel(space, w, balls, sigma, p.eps, lambda)
            }
            Check::ThmNegOsc(p) => {
                theorems::check_thm_neg_osc(space, w, balls, sigma, p.alpha, p.beta.unwrap_or(0.5))
            }
            Check::Lemma23(p) => {
                let profile = s
                    .profile()
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                theorems::check_lemma23_empirical(
                    space, w, balls, sigma, &profile, &p.alphas, &p.p_grid,
                )
            }
            Check::JnDecay(p) => {
                let grid = p.lambda_grid.clone();
                let ctx = self.context(p.eps)?;
                theorems::check_jn_decay(ctx, space, w, grid.as_deref())
            }
            Check::JnContraction(p) => {
                let ctx = self.context(p.eps)?;
                theorems::check_jn_contraction(ctx, space, w, p.max_levels)
            }
            Check::OscRhi(p) => theorems::check_osc_rhi(self.context(p.eps)?, space, w, p.p),
            Check::WeakRhi(p) => theorems::check_weak_rhi(self.context(p.eps)?, space, w, p.p),
            Check::FinalRhi(p) => theorems::check_final_rhi(self.context(p.eps)?, space, w, p.p),
            Check::BetaAsymptotic(p) => theorems::beta_asymptotic_check(p.p, &p.ys),
            Check::Cavalieri(p) => {
                theorems::cavalieri_check(space, w, p.p, &space.members(&s.base))
            }
            Check::SawyerBound => sawyer_cube_check(space, w, &s.family),
        }
    }
}

/// Measured value of a condition, 0 when no ball qualifies.
fn measured(r: wgr::Result<wgr::ConditionReport>) -> wgr::Result<f64> {
    match r {
        Ok(c) => Ok(c.value),
        Err(Error::NoData(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}
