//! Two-population larvae/adult model with cytoplasmic incompatibility.
//!
//! State ordering is always `(L_U, A_U, L_W, A_W)`: uninfected larvae,
//! uninfected adults, infected larvae, infected adults. Releases act on the
//! infected compartments only.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DIM: usize = 4;

/// Positive part `max(z, 0)`.
pub fn pos_part(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Negative part `-min(z, 0)`, so that `z == pos_part(z) - neg_part(z)`.
pub fn neg_part(z: f64) -> f64 {
    if z < 0.0 {
        -z
    } else {
        0.0
    }
}

/// Normalized mortality rates and basic offspring numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub gamma_u: f64,
    pub gamma_w: f64,
    pub r0_u: f64,
    pub r0_w: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelParams {
    pub fn new(gamma_u: f64, gamma_w: f64, r0_u: f64, r0_w: f64) -> Result<Self> {
        let p = Self {
            gamma_u,
            gamma_w,
            r0_u,
            r0_w,
        };
        p.validate()?;
        Ok(p)
    }

    /// Aedes constants used throughout the reference experiments.
    pub fn reference() -> Self {
        Self {
            gamma_u: 0.79365,
            gamma_w: 0.99207,
            r0_u: 45.0,
            r0_w: 34.2,
        }
    }

    /// Checks `0 < gamma_U < gamma_W` and `R0_U > R0_W > 1`.
    pub fn validate(&self) -> Result<()> {
        let all = [self.gamma_u, self.gamma_w, self.r0_u, self.r0_w];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all constants must be finite".into()));
        }
        if !(self.gamma_u > 0.0) {
            return Err(Error::InvalidParams(format!(
                "0 < gamma_U violated (gamma_U = {})",
                self.gamma_u
            )));
        }
        if !(self.gamma_u < self.gamma_w) {
            return Err(Error::InvalidParams(format!(
                "gamma_U < gamma_W violated (gamma_U = {}, gamma_W = {})",
                self.gamma_u, self.gamma_w
            )));
        }
        if !(self.r0_u > self.r0_w) {
            return Err(Error::InvalidParams(format!(
                "R0_U > R0_W violated (R0_U = {}, R0_W = {})",
                self.r0_u, self.r0_w
            )));
        }
        if !(self.r0_w > 1.0) {
            return Err(Error::InvalidParams(format!(
                "R0_W > 1 violated (R0_W = {})",
                self.r0_w
            )));
        }
        Ok(())
    }

    pub fn l_u_star(&self) -> f64 {
        self.r0_u - 1.0
    }

    pub fn a_u_star(&self) -> f64 {
        self.l_u_star() / self.gamma_u
    }

    pub fn l_w_star(&self) -> f64 {
        self.r0_w - 1.0
    }

    pub fn a_w_star(&self) -> f64 {
        self.l_w_star() / self.gamma_w
    }

    pub fn disease_free(&self) -> PopulationState {
        PopulationState::new(self.l_u_star(), self.a_u_star(), 0.0, 0.0)
    }

    pub fn complete_infestation(&self) -> PopulationState {
        PopulationState::new(0.0, 0.0, self.l_w_star(), self.a_w_star())
    }

    /// Uncontrolled field `f(x)` without domain checks.
    ///
    /// Accepts any finite input so integrators can evaluate stages that
    /// undershoot zero by rounding. The mating fraction `A_U / (A_U + A_W)`
    /// is taken as 0 when the adult total vanishes and is clamped to `[0, 1]`,
    /// which leaves it unchanged on the nonnegative orthant.
    pub fn drift(&self, x: &[f64; DIM]) -> [f64; DIM] {
        let [l_u, a_u, l_w, a_w] = *x;
        let competition = 1.0 + l_u + l_w;
        let adults = a_u + a_w;
        let fraction = if adults == 0.0 {
            0.0
        } else {
            (a_u / adults).clamp(0.0, 1.0)
        };
        [
            self.gamma_u * self.r0_u * fraction * a_u - competition * l_u,
            l_u - self.gamma_u * a_u,
            self.gamma_w * self.r0_w * a_w - competition * l_w,
            l_w - self.gamma_w * a_w,
        ]
    }

    /// Analytic Jacobian of [`drift`](Self::drift) on the interior of the orthant.
    pub fn drift_jacobian(&self, x: &[f64; DIM]) -> Matrix4<f64> {
        let [l_u, a_u, l_w, a_w] = *x;
        let gr_u = self.gamma_u * self.r0_u;
        let gr_w = self.gamma_w * self.r0_w;
        let s = a_u + a_w;
        let (d_au, d_aw) = if s == 0.0 {
            (0.0, 0.0)
        } else {
            (
                gr_u * (a_u * a_u + 2.0 * a_u * a_w) / (s * s),
                -gr_u * a_u * a_u / (s * s),
            )
        };
        Matrix4::new(
            -(1.0 + 2.0 * l_u + l_w),
            d_au,
            -l_u,
            d_aw,
            1.0,
            -self.gamma_u,
            0.0,
            0.0,
            -l_w,
            0.0,
            -(1.0 + l_u + 2.0 * l_w),
            gr_w,
            0.0,
            0.0,
            1.0,
            -self.gamma_w,
        )
    }
}

/// Population state `(L_U, A_U, L_W, A_W)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationState {
    pub l_u: f64,
    pub a_u: f64,
    pub l_w: f64,
    pub a_w: f64,
}

impl PopulationState {
    pub const fn new(l_u: f64, a_u: f64, l_w: f64, a_w: f64) -> Self {
        Self { l_u, a_u, l_w, a_w }
    }

    pub const fn to_array(self) -> [f64; DIM] {
        [self.l_u, self.a_u, self.l_w, self.a_w]
    }

    pub const fn from_array(x: [f64; DIM]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn is_nonnegative(&self) -> bool {
        self.to_array().iter().all(|v| *v >= 0.0)
    }

    pub fn check_domain(&self, what: &str) -> Result<()> {
        check_nonnegative(&self.to_array(), what)
    }
}

impl From<[f64; DIM]> for PopulationState {
    fn from(x: [f64; DIM]) -> Self {
        Self::from_array(x)
    }
}

/// Release rates of infected larvae and adults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub u_l: f64,
    pub u_a: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { u_l: 0.0, u_a: 0.0 };

    pub fn new(u_l: f64, u_a: f64) -> Result<Self> {
        let u = Self { u_l, u_a };
        check_nonnegative(&[u_l, u_a], "control input")?;
        Ok(u)
    }

    /// `B u`: larvae releases enter `L_W`, adult releases enter `A_W`.
    pub fn as_state_increment(&self) -> [f64; DIM] {
        [0.0, 0.0, self.u_l, self.u_a]
    }
}

pub(crate) fn check_nonnegative(values: &[f64], what: &str) -> Result<()> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::Domain(format!(
                "{what}: component {i} is {v}, expected a finite nonnegative value"
            )));
        }
    }
    Ok(())
}

/// Cone order: `x ⪯ y` iff the uninfected components of `x` are at least
/// those of `y` and the infected components of `x` are at most those of `y`.
///
/// Moving "up" in this order means fewer uninfected and more infected
/// mosquitoes.
pub fn order_leq(x: &PopulationState, y: &PopulationState) -> bool {
    order_leq_slack(&x.to_array(), &y.to_array(), 0.0)
}

/// [`order_leq`] on raw arrays, tolerating violations up to `slack`.
pub fn order_leq_slack(x: &[f64; DIM], y: &[f64; DIM], slack: f64) -> bool {
    x[0] >= y[0] - slack && x[1] >= y[1] - slack && x[2] <= y[2] + slack && x[3] <= y[3] + slack
}

/// `f(x) + B u` with domain checks on `x` and `u`.
pub fn vector_field(p: &ModelParams, x: &PopulationState, u: &ControlInput) -> Result<[f64; DIM]> {
    x.check_domain("state")?;
    check_nonnegative(&[u.u_l, u.u_a], "control input")?;
    let mut dx = p.drift(&x.to_array());
    let bu = u.as_state_increment();
    for (d, b) in dx.iter_mut().zip(bu) {
        *d += b;
    }
    Ok(dx)
}

/// Two-compartment comparison system
/// `(L' , A') = (gamma R A - (1 + delta + L) L, L - gamma A)`.
///
/// With `delta = 0` it is the isolated dynamics of one population; a positive
/// `delta` adds a constant extra larval competition.
pub fn auxiliary_field(gamma: f64, r: f64, delta: f64, la: [f64; 2]) -> Result<[f64; 2]> {
    if !(gamma > 0.0) || !(r > 0.0) {
        return Err(Error::Domain(format!(
            "auxiliary system needs gamma > 0 and R > 0 (got gamma = {gamma}, R = {r})"
        )));
    }
    check_nonnegative(&[delta], "competition offset")?;
    check_nonnegative(&la, "auxiliary state")?;
    Ok(auxiliary_drift(gamma, r, delta, &la))
}

pub(crate) fn auxiliary_drift(gamma: f64, r: f64, delta: f64, la: &[f64; 2]) -> [f64; 2] {
    let [l, a] = *la;
    [gamma * r * a - (1.0 + delta + l) * l, l - gamma * a]
}

/// Uninfected dynamics frozen against a fully established infected population
/// `(L_W*, A_W*)`. Every trajectory of this system tends to the origin.
pub fn infestation_pressure_field(
    p: &ModelParams,
    a_w_star: f64,
    l_w_star: f64,
    la: [f64; 2],
) -> Result<[f64; 2]> {
    if !(a_w_star > 0.0) || !(l_w_star > 0.0) {
        return Err(Error::Domain(format!(
            "infested levels must be positive (got A_W* = {a_w_star}, L_W* = {l_w_star})"
        )));
    }
    check_nonnegative(&la, "uninfected state")?;
    Ok(infestation_pressure_drift(p, a_w_star, l_w_star, &la))
}

pub(crate) fn infestation_pressure_drift(
    p: &ModelParams,
    a_w_star: f64,
    l_w_star: f64,
    la: &[f64; 2],
) -> [f64; 2] {
    let [l, a] = *la;
    let births = if a + a_w_star == 0.0 {
        0.0
    } else {
        p.gamma_u * p.r0_u * a * a / (a + a_w_star)
    };
    [births - (1.0 + l_w_star + l) * l, l - p.gamma_u * a]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// Leading eigenvalue too close to the imaginary axis to decide.
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub state: PopulationState,
    pub stability: Stability,
    /// Largest real part among the eigenvalues of the linearization.
    pub spectral_abscissa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub extinction: Equilibrium,
    pub disease_free: Equilibrium,
    pub complete_infestation: Equilibrium,
    pub coexistence: Equilibrium,
}

impl EquilibriumSet {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &Equilibrium)> {
        [
            ("extinction", &self.extinction),
            ("disease-free", &self.disease_free),
            ("complete infestation", &self.complete_infestation),
            ("coexistence", &self.coexistence),
        ]
        .into_iter()
    }
}

/// Default residual tolerance for the coexistence search.
pub const COEXISTENCE_TOL: f64 = 1e-12;

const FD_REL_STEP: f64 = 1e-6;
const STABILITY_MARGIN: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;

/// All four zero-input equilibria with stability tags.
///
/// The coexistence point has no closed form here; it is found by damped
/// Newton iteration started from the midpoint of the two stable equilibria.
pub fn equilibria(p: &ModelParams, tol: f64) -> Result<EquilibriumSet> {
    p.validate()?;
    let tag = |s: PopulationState| {
        let abscissa = spectral_abscissa(&fd_jacobian(p, &s.to_array()));
        Equilibrium {
            state: s,
            stability: classify(abscissa),
            spectral_abscissa: abscissa,
        }
    };
    let coexistence = coexistence_point(p, tol)?;
    Ok(EquilibriumSet {
        extinction: tag(PopulationState::default()),
        disease_free: tag(p.disease_free()),
        complete_infestation: tag(p.complete_infestation()),
        coexistence: tag(coexistence),
    })
}

fn classify(abscissa: f64) -> Stability {
    if abscissa < -STABILITY_MARGIN {
        Stability::Stable
    } else if abscissa > STABILITY_MARGIN {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// Central finite-difference Jacobian of the uncontrolled field.
pub fn fd_jacobian(p: &ModelParams, x: &[f64; DIM]) -> Matrix4<f64> {
    let mut jac = Matrix4::zeros();
    for j in 0..DIM {
        let h = FD_REL_STEP * x[j].abs().max(1.0);
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let fp = p.drift(&xp);
        let fm = p.drift(&xm);
        for i in 0..DIM {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

pub fn spectral_abscissa(jac: &Matrix4<f64>) -> f64 {
    jac.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn sup_norm(v: &[f64; DIM]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sq_norm(v: &[f64; DIM]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Damped Newton on `z = ln x`.
///
/// Iterating on logarithms keeps every iterate in the open orthant, so the
/// search cannot slide onto the boundary equilibria (plain Newton from the
/// same start lands on the disease-free point).
fn coexistence_point(p: &ModelParams, tol: f64) -> Result<PopulationState> {
    let a = p.disease_free().to_array();
    let b = p.complete_infestation().to_array();
    let mut z: [f64; DIM] = std::array::from_fn(|i| (0.5 * (a[i] + b[i])).ln());
    let mut x = z.map(f64::exp);
    let mut fx = p.drift(&x);

    for iteration in 0..NEWTON_MAX_ITER {
        let residual = sup_norm(&fx);
        if residual <= tol {
            return Ok(PopulationState::from_array(x));
        }
        // d F / d z_j = d F / d x_j * x_j
        let mut jac = p.drift_jacobian(&x);
        for j in 0..DIM {
            for i in 0..DIM {
                jac[(i, j)] *= x[j];
            }
        }
        let rhs = -nalgebra::Vector4::from(fx);
        let step = jac.lu().solve(&rhs).ok_or_else(|| Error::NoConvergence {
            iterations: iteration,
            residual,
            reason: "singular Jacobian".into(),
        })?;

        let merit = sq_norm(&fx);
        let mut lambda = 1.0;
        loop {
            let z_trial: [f64; DIM] = std::array::from_fn(|i| z[i] + lambda * step[i]);
            let x_trial = z_trial.map(f64::exp);
            let f_trial = p.drift(&x_trial);
            if sq_norm(&f_trial) < (1.0 - 1e-4 * lambda) * merit {
                z = z_trial;
                x = x_trial;
                fx = f_trial;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    residual,
                    reason: "line search stalled".into(),
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: sup_norm(&fx),
        reason: "iteration limit reached".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sign_parts() {
        assert_eq!((pos_part(-3.0), neg_part(-3.0)), (0.0, 3.0));
        assert_eq!((pos_part(2.0), neg_part(2.0)), (2.0, 0.0));
        assert_eq!((pos_part(0.0), neg_part(0.0)), (0.0, 0.0));
    }

    #[test]
    fn cone_order_examples() {
        let a = PopulationState::new(2.0, 2.0, 0.0, 0.0);
        let ones = PopulationState::new(1.0, 1.0, 1.0, 1.0);
        assert!(order_leq(&a, &ones));
        assert!(order_leq(&ones, &ones));
        let c = PopulationState::new(0.0, 0.0, 1.0, 1.0);
        let d = PopulationState::new(1.0, 1.0, 0.0, 0.0);
        assert!(!order_leq(&c, &d));
        assert!(order_leq(&d, &c));
    }

    #[test]
    fn params_ordering_is_enforced() {
        assert!(ModelParams::new(0.79365, 0.99207, 45.0, 34.2).is_ok());
        assert!(ModelParams::new(0.9, 0.9, 45.0, 34.2).is_err());
        assert!(ModelParams::new(0.0, 0.9, 45.0, 34.2).is_err());
        assert!(ModelParams::new(0.5, 0.9, 30.0, 34.2).is_err());
        assert!(ModelParams::new(0.5, 0.9, 45.0, 1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.9, 45.0, 2.0).is_err());
    }

    #[test]
    fn field_at_fixed_points_and_reference_point() {
        let p = ModelParams::reference();
        let zero = vector_field(&p, &PopulationState::default(), &ControlInput::ZERO).unwrap();
        assert_eq!(zero, [0.0; 4]);

        let dx = vector_field(&p, &PopulationState::new(1.0, 1.0, 1.0, 1.0), &ControlInput::ZERO).unwrap();
        // Term-by-term: births gU*R0U*(1/2)*1, competition (1+1+1)*1.
        let expected = [
            0.79365 * 45.0 * 0.5 - 3.0,
            1.0 - 0.79365,
            0.99207 * 34.2 - 3.0,
            1.0 - 0.99207,
        ];
        for i in 0..4 {
            assert_relative_eq!(dx[i], expected[i], max_relative = 1e-14);
        }
        assert_relative_eq!(dx[0], 14.857125, epsilon = 1e-9);
        assert_relative_eq!(dx[2], 30.928794, epsilon = 1e-9);
    }

    #[test]
    fn field_rejects_negative_arguments() {
        let p = ModelParams::reference();
        let x = PopulationState::new(-1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            vector_field(&p, &x, &ControlInput::ZERO),
            Err(Error::Domain(_))
        ));
        let u = ControlInput { u_l: 0.0, u_a: -1.0 };
        assert!(vector_field(&p, &PopulationState::default(), &u).is_err());
        assert!(ControlInput::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn releases_enter_infected_compartments() {
        let p = ModelParams::reference();
        let x = p.disease_free();
        let u = ControlInput::new(2.0, 3.0).unwrap();
        let dx = vector_field(&p, &x, &u).unwrap();
        assert_relative_eq!(dx[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(dx[1], 0.0, epsilon = 1e-12);
        assert_eq!(dx[2], 2.0);
        assert_eq!(dx[3], 3.0);
    }

    #[test]
    fn closed_form_equilibria_have_tiny_residuals() {
        let p = ModelParams::reference();
        for s in [
            p.disease_free(),
            p.complete_infestation(),
            PopulationState::default(),
        ] {
            let r = vector_field(&p, &s, &ControlInput::ZERO).unwrap();
            assert!(sup_norm(&r) < 1e-10, "{s:?} -> {r:?}");
        }
    }

    #[test]
    fn equilibria_of_reference_constants() {
        let p = ModelParams::reference();
        let eq = equilibria(&p, COEXISTENCE_TOL).unwrap();
        let df = eq.disease_free.state;
        assert_relative_eq!(df.l_u, 44.0, max_relative = 1e-4);
        assert_relative_eq!(df.a_u, 55.44, max_relative = 1e-4);
        let ci = eq.complete_infestation.state;
        assert_relative_eq!(ci.l_w, 33.2, max_relative = 1e-4);
        assert_relative_eq!(ci.a_w, 33.47, max_relative = 1e-3);

        assert_eq!(eq.disease_free.stability, Stability::Stable);
        assert_eq!(eq.complete_infestation.stability, Stability::Stable);
        assert_eq!(eq.extinction.stability, Stability::Unstable);
        assert_eq!(eq.coexistence.stability, Stability::Unstable);
    }

    #[test]
    fn coexistence_matches_elimination_oracle() {
        // At an interior equilibrium the infected larval balance forces
        // L_U + L_W = R0_W - 1, and the uninfected balance forces the mating
        // fraction to R0_W / R0_U. With A = L / gamma this is linear in L.
        let p = ModelParams::reference();
        let q = p.r0_w / p.r0_u;
        let ratio = p.gamma_w * (1.0 / q - 1.0) / p.gamma_u; // L_W / L_U
        let l_u = (p.r0_w - 1.0) / (1.0 + ratio);
        let l_w = ratio * l_u;
        let expected = [l_u, l_u / p.gamma_u, l_w, l_w / p.gamma_w];

        let eq = equilibria(&p, COEXISTENCE_TOL).unwrap();
        let got = eq.coexistence.state.to_array();
        for i in 0..4 {
            assert_relative_eq!(got[i], expected[i], max_relative = 1e-10);
        }
        assert!(sup_norm(&p.drift(&got)) < 1e-10);
    }

    #[test]
    fn fd_jacobian_tracks_analytic_one() {
        let p = ModelParams::reference();
        let x = [3.0, 5.0, 2.0, 7.0];
        let fd = fd_jacobian(&p, &x);
        let exact = p.drift_jacobian(&x);
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(fd[(i, j)], exact[(i, j)], epsilon = 1e-6, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn equilibria_reject_invalid_params() {
        let p = ModelParams {
            gamma_u: 0.9,
            gamma_w: 0.9,
            r0_u: 45.0,
            r0_w: 34.2,
        };
        assert!(matches!(equilibria(&p, 1e-12), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn auxiliary_field_examples() {
        let (g, r, d) = (0.99207, 34.2, 0.0);
        let eq = [r - 1.0 - d, (r - 1.0 - d) / g];
        let v = auxiliary_field(g, r, d, eq).unwrap();
        assert!(v[0].abs() < 1e-10 && v[1].abs() < 1e-12);

        let d = 0.5;
        let eq = [r - 1.0 - d, (r - 1.0 - d) / g];
        let v = auxiliary_field(g, r, d, eq).unwrap();
        assert!(v[0].abs() < 1e-10 && v[1].abs() < 1e-12);

        assert_eq!(auxiliary_field(g, r, 0.0, [0.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert!(auxiliary_field(g, r, 0.0, [-1.0, 0.0]).is_err());
        assert!(auxiliary_field(g, r, -0.1, [1.0, 0.0]).is_err());
        assert!(auxiliary_field(0.0, r, 0.0, [1.0, 0.0]).is_err());
    }

    #[test]
    fn infestation_pressure_field_examples() {
        let p = ModelParams::reference();
        let (aw, lw) = (p.a_w_star(), p.l_w_star());
        assert_eq!(
            infestation_pressure_field(&p, aw, lw, [0.0, 0.0]).unwrap(),
            [0.0, 0.0]
        );

        let v = infestation_pressure_field(&p, aw, lw, [1.0, 1.0]).unwrap();
        let expected = [p.gamma_u * p.r0_u / (1.0 + aw) - (2.0 + lw), 1.0 - p.gamma_u];
        assert_relative_eq!(v[0], expected[0], max_relative = 1e-14);
        assert_relative_eq!(v[1], expected[1], max_relative = 1e-14);
        assert!(infestation_pressure_field(&p, aw, lw, [1.0, -1.0]).is_err());
        assert!(infestation_pressure_field(&p, 0.0, lw, [1.0, 1.0]).is_err());
    }
}
