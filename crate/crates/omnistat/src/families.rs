//! Named statistics families, loss specifications and the builders that
//! pair them into uniform approximations.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use omnistat_core::losses::{absolute, cvx_family, glm_family, glm_loss, lp_loss, lp_monomial_in, newsvendor, CvxFamily, GlmLink, Loss};
use omnistat_core::stats::{ActionSpace, MomentFamily, StatisticsFamily, UniformApproximation};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which statistics a model predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    /// `{y, y², .., y^degree}`.
    Moments { degree: usize },
    /// The lifted convex basis at accuracy `delta`.
    Cvx { delta: f64, seed: u64 },
}

/// A built statistics family.
#[derive(Debug, Clone)]
pub enum Family {
    Moments(Arc<MomentFamily>),
    Cvx(CvxFamily),
}

impl FamilySpec {
    pub fn build(&self) -> Result<Family> {
        match *self {
            FamilySpec::Moments { degree } => {
                if !(1..=16).contains(&degree) {
                    return Err(Error::Config(format!("moment degree {degree} outside 1..=16")));
                }
                Ok(Family::Moments(Arc::new(MomentFamily::new(degree))))
            }
            FamilySpec::Cvx { delta, seed } => Ok(Family::Cvx(cvx_family(delta, seed)?)),
        }
    }
}

impl Family {
    pub fn statistics(&self) -> Arc<dyn StatisticsFamily> {
        match self {
            Family::Moments(m) => m.clone(),
            Family::Cvx(c) => c.statistics(),
        }
    }

    /// The uniform approximation of `loss` over this family and `actions`.
    pub fn approximation(&self, loss: &LossSpec, actions: &ActionSpace) -> Result<(Loss, UniformApproximation)> {
        let built = loss.build()?;
        let ua = match (self, loss) {
            (Family::Moments(m), LossSpec::Lp(p)) => lp_monomial_in(*p, m.degree(), actions)?,
            (Family::Moments(m), LossSpec::Glm(link)) if m.degree() == 1 => glm_family(*link, m.as_ref(), actions)?,
            (Family::Moments(m), _) => {
                return Err(omnistat_core::Error::FamilyMismatch(format!("{loss} has no exact expansion in {}", m.name())).into())
            }
            (Family::Cvx(c), _) => c.approximation(&built, actions)?,
        };
        Ok((built, ua))
    }
}

/// A loss by name: `l1`, `l<p>` for even `p`, `newsvendor:<c>`,
/// `glm:<quadratic|softplus|quartic>` (GLM over `S = {y}`).
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Absolute,
    Lp(u32),
    Newsvendor(f64),
    Glm(GlmLink),
}

impl LossSpec {
    pub fn build(&self) -> Result<Loss> {
        Ok(match *self {
            LossSpec::Absolute => absolute(),
            LossSpec::Lp(p) => lp_loss(p)?,
            LossSpec::Newsvendor(c) => newsvendor(c)?,
            LossSpec::Glm(link) => glm_loss(link, Arc::new(MomentFamily::new(1))),
        })
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown loss {s:?}; expected l1, l<p>, newsvendor:<c> or glm:<link>"));
        if s == "l1" {
            return Ok(LossSpec::Absolute);
        }
        if let Some(c) = s.strip_prefix("newsvendor:") {
            let c: f64 = c.parse().map_err(|_| bad())?;
            return Ok(LossSpec::Newsvendor(c));
        }
        if let Some(link) = s.strip_prefix("glm:") {
            return GlmLink::parse(link).map(LossSpec::Glm).ok_or_else(bad);
        }
        if let Some(p) = s.strip_prefix('l') {
            return p.parse().map(LossSpec::Lp).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossSpec::Absolute => write!(f, "l1"),
            LossSpec::Lp(p) => write!(f, "l{p}"),
            LossSpec::Newsvendor(c) => write!(f, "newsvendor:{c}"),
            LossSpec::Glm(link) => write!(f, "glm:{}", link.name()),
        }
    }
}

impl Serialize for LossSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LossSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
