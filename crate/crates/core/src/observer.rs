//! Interval observer (framers) for the population model.
//!
//! Two copies of the model run alongside the plant, each corrected by a
//! state-dependent output injection. Under the sign conditions checked by
//! [`validate_gains`] and a bracketing initialization, the pair keeps
//! enclosing the true state for all time. No convergence is implied.
//!
//! Slot convention: `x_minus = (L_U^+, A_U^+, L_W^-, A_W^-)` and
//! `x_plus = (L_U^-, A_U^-, L_W^+, A_W^+)`. The lower element in the cone
//! order carries the upper uninfected bounds and the lower infected bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_nonnegative, order_leq_slack, ControlInput, ModelParams, PopulationState, DIM};

/// Lower and upper framer states, stored in cone-order slots.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverPair {
    pub x_minus: [f64; DIM],
    pub x_plus: [f64; DIM],
}

impl ObserverPair {
    /// Builds the pair from componentwise lower and upper population bounds.
    pub fn from_bounds(lower: PopulationState, upper: PopulationState) -> Self {
        Self {
            x_minus: [upper.l_u, upper.a_u, lower.l_w, lower.a_w],
            x_plus: [lower.l_u, lower.a_u, upper.l_w, upper.a_w],
        }
    }

    pub fn exact(x: PopulationState) -> Self {
        Self {
            x_minus: x.to_array(),
            x_plus: x.to_array(),
        }
    }

    pub fn lower_bounds(&self) -> PopulationState {
        PopulationState::new(self.x_plus[0], self.x_plus[1], self.x_minus[2], self.x_minus[3])
    }

    pub fn upper_bounds(&self) -> PopulationState {
        PopulationState::new(self.x_minus[0], self.x_minus[1], self.x_plus[2], self.x_plus[3])
    }

    pub fn l_u_upper(&self) -> f64 {
        self.x_minus[0]
    }
    pub fn a_u_upper(&self) -> f64 {
        self.x_minus[1]
    }
    pub fn l_w_lower(&self) -> f64 {
        self.x_minus[2]
    }
    pub fn a_w_lower(&self) -> f64 {
        self.x_minus[3]
    }
    pub fn l_u_lower(&self) -> f64 {
        self.x_plus[0]
    }
    pub fn a_u_lower(&self) -> f64 {
        self.x_plus[1]
    }
    pub fn l_w_upper(&self) -> f64 {
        self.x_plus[2]
    }
    pub fn a_w_upper(&self) -> f64 {
        self.x_plus[3]
    }

    pub fn check_domain(&self) -> Result<()> {
        check_nonnegative(&self.x_minus, "observer x_minus")?;
        check_nonnegative(&self.x_plus, "observer x_plus")
    }
}

/// Output matrix `C` (`p x 4`), one row per measured channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutputMap {
    pub rows: Vec<[f64; DIM]>,
}

impl Default for OutputMap {
    /// Larval measurements: `y = (L_U, -L_W)`.
    fn default() -> Self {
        Self {
            rows: vec![[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0]],
        }
    }
}

impl OutputMap {
    pub fn channels(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, x: &[f64; DIM]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(c, v)| c * v).sum())
            .collect()
    }
}

/// Constant gain matrices `M_-`, `M_+` (`4 x p`) and the smoothing threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainSpec {
    pub m_minus: Vec<Vec<f64>>,
    pub m_plus: Vec<Vec<f64>>,
    pub epsilon: f64,
    /// Divide the row multiplier by `epsilon` so it ranges over `[0, 1]`.
    pub normalized: bool,
}

impl Default for GainSpec {
    fn default() -> Self {
        let m = vec![vec![-0.1, -0.1], vec![-0.1, -0.1], vec![0.1, 0.1], vec![0.1, 0.1]];
        Self {
            m_minus: m.clone(),
            m_plus: m,
            epsilon: 1e-5,
            normalized: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Minus,
    Plus,
}

impl GainSpec {
    pub fn matrix(&self, side: Side) -> &[Vec<f64>] {
        match side {
            Side::Minus => &self.m_minus,
            Side::Plus => &self.m_plus,
        }
    }

    /// Shape checks against `C`; sign conditions are left to [`validate_gains`].
    pub fn check_shape(&self, c: &OutputMap) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidGains(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        let p = c.channels();
        if p == 0 {
            return Err(Error::InvalidGains("output matrix has no rows".into()));
        }
        for (name, m) in [("m_minus", &self.m_minus), ("m_plus", &self.m_plus)] {
            if m.len() != DIM || m.iter().any(|row| row.len() != p) {
                return Err(Error::InvalidGains(format!(
                    "{name} must be {DIM} x {p} to match the output matrix"
                )));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGains(format!("{name} has non-finite entries")));
            }
        }
        if c.rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGains("output matrix has non-finite entries".into()));
        }
        Ok(())
    }

    fn row_weight(&self, xi: f64) -> f64 {
        let w = xi.min(self.epsilon).max(0.0);
        if self.normalized {
            w / self.epsilon
        } else {
            w
        }
    }
}

/// `K_side(x_side)`: row `i` of `M_side` scaled by `max(min(x_i, eps), 0)`.
///
/// Row `i` vanishes whenever `x_i = 0`.
pub fn gain_matrix(g: &GainSpec, side: Side, x_side: &[f64; DIM]) -> Result<Vec<Vec<f64>>> {
    check_nonnegative(x_side, "gain argument")?;
    Ok(gain_matrix_unchecked(g, side, x_side))
}

fn gain_matrix_unchecked(g: &GainSpec, side: Side, x_side: &[f64; DIM]) -> Vec<Vec<f64>> {
    g.matrix(side)
        .iter()
        .zip(x_side)
        .map(|(row, xi)| {
            let w = g.row_weight(*xi);
            row.iter().map(|m| w * m).collect()
        })
        .collect()
}

/// Which sign condition a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainCondition {
    /// Rows 1-2 of `M_±` nonpositive, rows 3-4 nonnegative.
    GainSign,
    /// `diag(-I2, I2) M_± C diag(-I2, I2) <= 0`.
    GainOutputCoupling,
    /// `C diag(-I2, I2) <= 0`; sufficient for the coupling condition.
    OutputSign,
}

impl GainCondition {
    pub const ALL: [GainCondition; 3] = [
        GainCondition::GainSign,
        GainCondition::GainOutputCoupling,
        GainCondition::OutputSign,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            GainCondition::GainSign => "gain-sign",
            GainCondition::GainOutputCoupling => "gain-output-coupling",
            GainCondition::OutputSign => "output-sign",
        }
    }

    pub fn statement(&self) -> &'static str {
        match self {
            GainCondition::GainSign => "diag(-I2,I2) M >= 0",
            GainCondition::GainOutputCoupling => "diag(-I2,I2) M C diag(-I2,I2) <= 0",
            GainCondition::OutputSign => "C diag(-I2,I2) <= 0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: GainCondition,
    /// `"M_-"`, `"M_+"` or `"C"`.
    pub matrix: String,
    /// Zero-based entry of the tested product.
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub violations: Vec<Violation>,
}

impl GainReport {
    pub fn passes(&self, c: GainCondition) -> bool {
        !self.violations.iter().any(|v| v.condition == c)
    }

    /// The conditions the observer actually requires.
    pub fn observer_conditions_hold(&self) -> bool {
        self.passes(GainCondition::GainSign) && self.passes(GainCondition::GainOutputCoupling)
    }

    pub fn all_pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn of(&self, c: GainCondition) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.condition == c)
    }
}

const CONE_SIGN: [f64; DIM] = [-1.0, -1.0, 1.0, 1.0];

/// Checks the sign conditions on `M_±` and `C` entry by entry.
pub fn validate_gains(g: &GainSpec, c: &OutputMap) -> Result<GainReport> {
    g.check_shape(c)?;
    let mut violations = Vec::new();
    let p = c.channels();

    for side in [Side::Minus, Side::Plus] {
        let name = match side {
            Side::Minus => "M_-",
            Side::Plus => "M_+",
        };
        let m = g.matrix(side);
        for i in 0..DIM {
            for k in 0..p {
                let v = CONE_SIGN[i] * m[i][k];
                if v < 0.0 {
                    violations.push(Violation {
                        condition: GainCondition::GainSign,
                        matrix: name.into(),
                        row: i,
                        col: k,
                        value: v,
                    });
                }
            }
        }
        for i in 0..DIM {
            for j in 0..DIM {
                let mc: f64 = (0..p).map(|k| m[i][k] * c.rows[k][j]).sum();
                let v = CONE_SIGN[i] * mc * CONE_SIGN[j];
                if v > 0.0 {
                    violations.push(Violation {
                        condition: GainCondition::GainOutputCoupling,
                        matrix: name.into(),
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
    }

    for (k, row) in c.rows.iter().enumerate() {
        for j in 0..DIM {
            let v = row[j] * CONE_SIGN[j];
            if v > 0.0 {
                violations.push(Violation {
                    condition: GainCondition::OutputSign,
                    matrix: "C".into(),
                    row: k,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(GainReport { violations })
}

/// Time derivatives of both framers.
#[allow(clippy::too_many_arguments)]
pub fn observer_field(
    p: &ModelParams,
    obs: &ObserverPair,
    u: &ControlInput,
    y_minus: &[f64],
    y_plus: &[f64],
    g: &GainSpec,
    c: &OutputMap,
) -> Result<([f64; DIM], [f64; DIM])> {
    obs.check_domain()?;
    check_nonnegative(&[u.u_l, u.u_a], "control input")?;
    g.check_shape(c)?;
    if y_minus.len() != c.channels() || y_plus.len() != c.channels() {
        return Err(Error::Domain(format!(
            "expected {} measurement channels",
            c.channels()
        )));
    }
    Ok(observer_drift(p, obs, u, y_minus, y_plus, g, c))
}

/// [`observer_field`] without validation, for use inside integrators.
pub(crate) fn observer_drift(
    p: &ModelParams,
    obs: &ObserverPair,
    u: &ControlInput,
    y_minus: &[f64],
    y_plus: &[f64],
    g: &GainSpec,
    c: &OutputMap,
) -> ([f64; DIM], [f64; DIM]) {
    let framer = |x: &[f64; DIM], y: &[f64], side: Side| {
        let mut dx = p.drift(x);
        let bu = u.as_state_increment();
        let innovation: Vec<f64> = y.iter().zip(c.apply(x)).map(|(yi, cx)| yi - cx).collect();
        let k = gain_matrix_unchecked(g, side, x);
        for i in 0..DIM {
            let correction: f64 = k[i].iter().zip(&innovation).map(|(a, b)| a * b).sum();
            dx[i] += bu[i] + correction;
        }
        dx
    };
    (
        framer(&obs.x_minus, y_minus, Side::Minus),
        framer(&obs.x_plus, y_plus, Side::Plus),
    )
}

/// True iff `x_- ⪯ x ⪯ x_+` and all three vectors are nonnegative.
pub fn encloses(obs: &ObserverPair, x: &PopulationState) -> bool {
    encloses_slack(obs, &x.to_array(), 0.0)
}

/// [`encloses`] with every inequality relaxed by `slack`.
pub fn encloses_slack(obs: &ObserverPair, x: &[f64; DIM], slack: f64) -> bool {
    let nonneg = obs
        .x_minus
        .iter()
        .chain(&obs.x_plus)
        .chain(x)
        .all(|v| *v >= -slack);
    nonneg && order_leq_slack(&obs.x_minus, x, slack) && order_leq_slack(x, &obs.x_plus, slack)
}
