//! Observer-based release laws.
//!
//! Both laws read only the interval estimates, never the true state. Each
//! returns the smallest release satisfying its sufficient condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{neg_part, pos_part, ControlInput, ModelParams};
use crate::observer::ObserverPair;

/// Sign convention for the `A_U^-` and `A_W^-` coefficients of the adult law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Negative coefficients on the lower estimates; this is what makes
    /// `d/dt(A_W - k_U A_U) >= -k (A_W - k_U A_U)` hold.
    #[default]
    Corrected,
    /// All six coefficients taken with the signs of the printed gain row.
    AsDisplayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdultLawParams {
    /// Contraction rate of `A_W - k_U A_U`.
    pub k: f64,
    /// Target ratio between infected and uninfected adults.
    pub k_u: f64,
    #[serde(default)]
    pub signs: SignConvention,
}

impl AdultLawParams {
    pub fn new(k: f64, k_u: f64, p: &ModelParams) -> Result<Self> {
        let lp = Self {
            k,
            k_u,
            signs: SignConvention::Corrected,
        };
        lp.validate(p)?;
        Ok(lp)
    }

    /// `k = gamma_W`, `k_U = 1.1 (R0_U - 1)`.
    pub fn reference(p: &ModelParams) -> Self {
        Self {
            k: p.gamma_w,
            k_u: 1.1 * (p.r0_u - 1.0),
            signs: SignConvention::Corrected,
        }
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::InvalidLaw(format!("k must be > 0, got {}", self.k)));
        }
        if !(self.k_u > p.r0_u - 1.0) || !self.k_u.is_finite() {
            return Err(Error::InvalidLaw(format!(
                "adult release requires k_U > R0_U - 1 = {}, got k_U = {}",
                p.r0_u - 1.0,
                self.k_u
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawTag {
    Adult,
    Larvae,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawChoice {
    pub tag: LawTag,
    #[serde(default)]
    pub adult: Option<AdultLawParams>,
    /// Releases are zero before this time.
    #[serde(default)]
    pub activation_time: f64,
}

impl LawChoice {
    pub fn none() -> Self {
        Self {
            tag: LawTag::None,
            adult: None,
            activation_time: 0.0,
        }
    }

    pub fn adult(lp: AdultLawParams) -> Self {
        Self {
            tag: LawTag::Adult,
            adult: Some(lp),
            activation_time: 0.0,
        }
    }

    pub fn larvae() -> Self {
        Self {
            tag: LawTag::Larvae,
            adult: None,
            activation_time: 0.0,
        }
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if !(self.activation_time >= 0.0) || !self.activation_time.is_finite() {
            return Err(Error::InvalidLaw(format!(
                "activation time must be >= 0, got {}",
                self.activation_time
            )));
        }
        match (self.tag, &self.adult) {
            (LawTag::Adult, Some(lp)) => lp.validate(p),
            (LawTag::Adult, None) => Err(Error::InvalidLaw(
                "adult law selected without adult parameters".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Adult release `u_A = |K · (L_U^+, A_U^+, A_U^-, L_W^-, A_W^+, A_W^-)|_+`, `u_L = 0`.
///
/// With the corrected signs, `K = (k_U, k_U|k-γ_U|_+, -k_U|k-γ_U|_-, -1,
/// |γ_W-k|_+, -|γ_W-k|_-)`.
pub fn adult_release(lp: &AdultLawParams, p: &ModelParams, obs: &ObserverPair) -> ControlInput {
    let lower_sign = match lp.signs {
        SignConvention::Corrected => -1.0,
        SignConvention::AsDisplayed => 1.0,
    };
    let du = lp.k - p.gamma_u;
    let dw = p.gamma_w - lp.k;
    let raw = lp.k_u * obs.l_u_upper()
        + lp.k_u * pos_part(du) * obs.a_u_upper()
        + lower_sign * lp.k_u * neg_part(du) * obs.a_u_lower()
        - obs.l_w_lower()
        + pos_part(dw) * obs.a_w_upper()
        + lower_sign * neg_part(dw) * obs.a_w_lower();
    ControlInput {
        u_l: 0.0,
        u_a: pos_part(raw),
    }
}

/// Adult release specialized to `k = γ_W`:
/// `u_A = |k_U L_U^+ + k_U (γ_W - γ_U) A_U^+ - L_W^-|_+`, which only needs `x_-`.
pub fn adult_release_linear(k_u: f64, p: &ModelParams, obs: &ObserverPair) -> ControlInput {
    let raw = k_u * obs.l_u_upper() + k_u * (p.gamma_w - p.gamma_u) * obs.a_u_upper() - obs.l_w_lower();
    ControlInput {
        u_l: 0.0,
        u_a: pos_part(raw),
    }
}

/// Larvae release `u_L = L_U^+ L_W^+`, `u_A = 0`.
pub fn larvae_release(obs: &ObserverPair) -> ControlInput {
    ControlInput {
        u_l: pos_part(obs.l_u_upper() * obs.l_w_upper()),
        u_a: 0.0,
    }
}

/// Dispatches on the law choice and its activation time.
pub fn control_at(choice: &LawChoice, p: &ModelParams, obs: &ObserverPair, t: f64) -> ControlInput {
    if t < choice.activation_time {
        return ControlInput::ZERO;
    }
    match (choice.tag, &choice.adult) {
        (LawTag::Adult, Some(lp)) => adult_release(lp, p, obs),
        (LawTag::Larvae, _) => larvae_release(obs),
        _ => ControlInput::ZERO,
    }
}
