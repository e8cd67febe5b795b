//! Protocol parameters, channel scenarios, and the flattened evaluation view.
//!
//! [`ProtocolParams`] holds the device-side description (intensities, TBS
//! transmittances, detector efficiencies, per-bin dark counts, basis and
//! intensity probabilities, compatibility coefficient). [`ChannelScenario`]
//! adds the channel: transmittance, intrinsic QBERs, and optionally an
//! intercept-resend attack. [`Model`] merges both into the flat parameter
//! set that every formula in the crate consumes.

use serde::{Deserialize, Serialize};

use crate::elementary::total_dark_count;
use crate::error::{Error, Result};

/// Tolerance for floating-point drift when validating probabilities:
/// values in [-1e-12, 0) clamp to 0 and (1, 1+1e-12] clamp to 1.
pub const PROB_TOL: f64 = 1e-12;

/// The three TBS transmittance settings: eta_up, eta2 ("mid"), eta_down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tbs {
    Up,
    Mid,
    Dn,
}

impl Tbs {
    pub const ALL: [Tbs; 3] = [Tbs::Up, Tbs::Mid, Tbs::Dn];

    #[inline]
    pub fn idx(self) -> usize {
        match self {
            Tbs::Up => 0,
            Tbs::Mid => 1,
            Tbs::Dn => 2,
        }
    }
}

/// Iteration order for the TBS setting inside the detection window.
pub const ETA_I_ORDER: [Tbs; 3] = [Tbs::Up, Tbs::Mid, Tbs::Dn];
/// Iteration order for the TBS setting outside the detection window.
pub const ETA_L_ORDER: [Tbs; 2] = [Tbs::Dn, Tbs::Up];
/// The six (eta_i, eta_l) settings used by the test-round statistics.
pub const SETTING_ORDER: [(Tbs, Tbs); 6] = [
    (Tbs::Up, Tbs::Dn),
    (Tbs::Up, Tbs::Up),
    (Tbs::Mid, Tbs::Dn),
    (Tbs::Mid, Tbs::Up),
    (Tbs::Dn, Tbs::Dn),
    (Tbs::Dn, Tbs::Up),
];

/// Dense index of an (eta_i, eta_l) setting into a 6-element array,
/// consistent with [`SETTING_ORDER`]. `eta_l` must be `Up` or `Dn`.
#[inline]
pub fn setting_idx(i: Tbs, l: Tbs) -> usize {
    let li = match l {
        Tbs::Dn => 0,
        Tbs::Up => 1,
        Tbs::Mid => panic!("eta_l is restricted to the up/down settings"),
    };
    i.idx() * 2 + li
}

/// Device-side protocol parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Symbol count (number of time/frequency bins), at least 2.
    pub d: usize,
    /// Signal and decoy mean photon numbers, mu1 > mu2 + mu3, mu2 > mu3 >= 0.
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    /// Intensity choice probabilities (p_mu3 implied).
    pub p_mu1: f64,
    pub p_mu2: f64,
    /// Z-basis choice probability.
    pub p_z: f64,
    /// TBS transmittances, eta_down < eta2 < eta_up.
    pub eta_up: f64,
    pub eta_down: f64,
    pub eta2: f64,
    /// Mode-independent detector efficiencies (receiver side), eta_x <= eta_z.
    pub eta_z: f64,
    pub eta_x: f64,
    /// Per-outcome dark-count probabilities.
    pub pd_z_per_bin: f64,
    pub pd_x_per_bin: f64,
    /// Compatibility coefficient of Alice's encoding, in [1/d, 1].
    pub c: f64,
}

/// Quantities derived from [`ProtocolParams`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Efficiency ratio eta_X / eta_Z.
    pub eta_r: f64,
    /// Whole-window dark-count probabilities 1 - (1 - per_bin)^d.
    pub pd_z_total: f64,
    pub pd_x_total: f64,
    /// Click probabilities conditioned on 0 and 1 photons in the Z modes.
    pub p_click_0: f64,
    pub p_click_1: f64,
}

/// Names of the two closed-form constraints required by the security
/// analysis. `validate_constraints` reports violations with these tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    /// eta_up > eta_down / (1 - eta_down)
    Constraint1,
    /// eta_X/eta_Z > (1 - sqrt(1 - eta_down/eta_up)) / eta_down
    Constraint2,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Constraint1 => write!(f, "constraint1"),
            Constraint::Constraint2 => write!(f, "constraint2"),
        }
    }
}

/// Check the two closed-form constraints. Violations are data, not errors.
pub fn validate_constraints(
    eta_up: f64,
    eta_down: f64,
    eta_r: f64,
) -> Vec<Constraint> {
    let mut out = Vec::new();
    if !(eta_up > eta_down / (1.0 - eta_down)) {
        out.push(Constraint::Constraint1);
    }
    if !(eta_r > (1.0 - (1.0 - eta_down / eta_up).sqrt()) / eta_down) {
        out.push(Constraint::Constraint2);
    }
    out
}

/// Clamp a probability-like value: small negative drift and small excess
/// over 1 are rounded into range; anything farther out is an error.
fn checked_prob(name: &str, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::config(format!("{name} must be finite, got {x}")));
    }
    if x < 0.0 {
        if x >= -PROB_TOL {
            return Ok(0.0);
        }
        return Err(Error::config(format!("{name} = {x} out of [0, 1]")));
    }
    if x > 1.0 {
        if x <= 1.0 + PROB_TOL {
            return Ok(1.0);
        }
        return Err(Error::config(format!("{name} = {x} out of [0, 1]")));
    }
    Ok(x)
}

impl ProtocolParams {
    /// Validate ranges, orderings, and the two security constraints,
    /// clamping probability drift within `PROB_TOL`. Returns the cleaned
    /// parameter set or a configuration error.
    pub fn checked(mut self) -> Result<Self> {
        if self.d < 2 {
            return Err(Error::config(format!("d = {} must be at least 2", self.d)));
        }
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("{name} = {v} must be >= 0")));
            }
        }
        if !(self.mu1 > self.mu2 + self.mu3) {
            return Err(Error::config(format!(
                "mu1 = {} must exceed mu2 + mu3 = {}",
                self.mu1,
                self.mu2 + self.mu3
            )));
        }
        if !(self.mu2 > self.mu3) {
            return Err(Error::config(format!(
                "mu2 = {} must exceed mu3 = {}",
                self.mu2, self.mu3
            )));
        }
        self.p_mu1 = checked_prob("p_mu1", self.p_mu1)?;
        self.p_mu2 = checked_prob("p_mu2", self.p_mu2)?;
        if self.p_mu1 + self.p_mu2 > 1.0 + PROB_TOL {
            return Err(Error::config(format!(
                "p_mu1 + p_mu2 = {} exceeds 1",
                self.p_mu1 + self.p_mu2
            )));
        }
        self.p_z = checked_prob("p_z", self.p_z)?;
        self.eta_up = checked_prob("eta_up", self.eta_up)?;
        self.eta_down = checked_prob("eta_down", self.eta_down)?;
        self.eta2 = checked_prob("eta2", self.eta2)?;
        if !(self.eta_down < self.eta2 && self.eta2 < self.eta_up) {
            return Err(Error::config(format!(
                "TBS ordering violated: need eta_down < eta2 < eta_up, got {} / {} / {}",
                self.eta_down, self.eta2, self.eta_up
            )));
        }
        for (name, v) in [("eta_z", self.eta_z), ("eta_x", self.eta_x)] {
            if !(v > 0.0 && v <= 1.0 + PROB_TOL) {
                return Err(Error::config(format!("{name} = {v} out of (0, 1]")));
            }
        }
        self.eta_z = self.eta_z.min(1.0);
        self.eta_x = self.eta_x.min(1.0);
        if self.eta_x > self.eta_z {
            return Err(Error::config(format!(
                "eta_x = {} must not exceed eta_z = {}",
                self.eta_x, self.eta_z
            )));
        }
        self.pd_z_per_bin = checked_prob("pd_z_per_bin", self.pd_z_per_bin)?;
        self.pd_x_per_bin = checked_prob("pd_x_per_bin", self.pd_x_per_bin)?;
        if self.pd_z_per_bin >= 1.0 || self.pd_x_per_bin >= 1.0 {
            return Err(Error::config("per-bin dark counts must be below 1"));
        }
        if !(self.c >= 1.0 / self.d as f64 - PROB_TOL && self.c <= 1.0 + PROB_TOL) {
            return Err(Error::config(format!(
                "c = {} out of [1/d, 1] = [{}, 1]",
                self.c,
                1.0 / self.d as f64
            )));
        }
        self.c = self.c.clamp(1.0 / self.d as f64, 1.0);
        let violations = validate_constraints(self.eta_up, self.eta_down, self.eta_x / self.eta_z);
        if !violations.is_empty() {
            let names: Vec<String> = violations.iter().map(|c| c.to_string()).collect();
            return Err(Error::config(format!(
                "security constraints violated: {}",
                names.join(", ")
            )));
        }
        Ok(self)
    }

    pub fn derived(&self) -> DerivedParams {
        let pd_z_total = total_dark_count(self.pd_z_per_bin, self.d);
        let pd_x_total = total_dark_count(self.pd_x_per_bin, self.d);
        DerivedParams {
            eta_r: self.eta_x / self.eta_z,
            pd_z_total,
            pd_x_total,
            p_click_0: pd_z_total,
            p_click_1: 1.0 - (1.0 - pd_z_total) * self.eta_down,
        }
    }
}

impl Default for ProtocolParams {
    /// Fig. 3/4 device defaults: d = 4, mu = (0.5, 2e-6, 1e-6), TBS at
    /// (0.9, 0.4, 0.1), 1 dB receiver insertion loss on eta_z and one more
    /// dB on eta_x, whole-window dark counts 1e-4 / 1.2e-4.
    fn default() -> Self {
        let d = 4;
        ProtocolParams {
            d,
            mu1: 0.5,
            mu2: 2e-6,
            mu3: 1e-6,
            p_mu1: 1.0,
            p_mu2: 0.0,
            p_z: 1.0,
            eta_up: 0.9,
            eta_down: 0.1,
            eta2: 0.4,
            eta_z: 0.9 * 10f64.powf(-0.1),
            eta_x: 0.9 * 10f64.powf(-0.2),
            pd_z_per_bin: 1.0 - (1.0 - 1e-4f64).powf(1.0 / d as f64),
            pd_x_per_bin: 1.0 - (1.0 - 1.2e-4f64).powf(1.0 / d as f64),
            c: 1.0 / d as f64,
        }
    }
}

/// Timing/frequency geometry of the attack model: Z window of `d` bins of
/// width `delta_j` (total `delta_t`), X window of `d` bins of width
/// `delta_k` (total `delta_f` = d*delta_k), GDD coefficient `phi2`.
/// Units: time in ns, frequency in GHz, phi2 in ns^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Geometry {
    pub d: usize,
    pub delta_t: f64,
    pub delta_j: f64,
    pub delta_k: f64,
    pub delta_f: f64,
    pub phi2: f64,
    /// Z bin centers t_j = -delta_t/2 + (j + 1/2) delta_j.
    pub t_z: Vec<f64>,
    /// X bin centers t~_k = -delta_f/2 + (k + 1/2) delta_k.
    pub t_x: Vec<f64>,
}

impl Geometry {
    pub fn new(d: usize, delta_t: f64, delta_j: f64, delta_k: f64, phi2: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::config("geometry needs at least 2 bins"));
        }
        for (name, v) in [
            ("delta_t", delta_t),
            ("delta_j", delta_j),
            ("delta_k", delta_k),
            ("phi2", phi2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} = {v} must be positive")));
            }
        }
        if (delta_t - d as f64 * delta_j).abs() > 1e-9 * delta_t {
            return Err(Error::config(format!(
                "delta_t = {delta_t} must equal d*delta_j = {}",
                d as f64 * delta_j
            )));
        }
        let delta_f = d as f64 * delta_k;
        let t_z = (0..d)
            .map(|j| -delta_t / 2.0 + (j as f64 + 0.5) * delta_j)
            .collect();
        let t_x = (0..d)
            .map(|k| -delta_f / 2.0 + (k as f64 + 0.5) * delta_k)
            .collect();
        Ok(Geometry {
            d,
            delta_t,
            delta_j,
            delta_k,
            delta_f,
            phi2,
            t_z,
            t_x,
        })
    }

    /// Fig. 4 defaults: four bins, delta_t = 1.132 ns, delta_j = 0.283 ns,
    /// delta_k = 0.340 ns, phi2 = 0.01275 ns^2.
    pub fn fig4_default() -> Self {
        Geometry::new(4, 1.132, 0.283, 0.340, 0.01275).expect("static defaults are valid")
    }
}

/// Eve's intercept-resend attack parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackParams {
    /// Interception probabilities for Z- and X-basis measurements.
    pub w_z: f64,
    pub w_x: f64,
    /// Width of Eve's resent time pulse (ns).
    pub s: f64,
    /// Width of Eve's resent frequency pulse (GHz).
    pub sigma: f64,
    /// Eve-channel transmittances applied to the conditional click tables.
    pub xi_z: f64,
    pub xi_x: f64,
    pub geometry: Geometry,
}

impl AttackParams {
    pub fn checked(self) -> Result<Self> {
        let w_z = checked_prob("w_z", self.w_z)?;
        let w_x = checked_prob("w_x", self.w_x)?;
        if w_z + w_x > 1.0 + PROB_TOL {
            return Err(Error::config(format!(
                "w_z + w_x = {} exceeds 1",
                w_z + w_x
            )));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::config(format!("pulse width s = {} must be positive", self.s)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config(format!(
                "pulse width sigma = {} must be positive",
                self.sigma
            )));
        }
        let xi_z = checked_prob("xi_z", self.xi_z)?;
        let xi_x = checked_prob("xi_x", self.xi_x)?;
        Ok(AttackParams {
            w_z,
            w_x,
            xi_z,
            xi_x,
            ..self
        })
    }
}

/// One channel scenario: transmittance, intrinsic QBERs, optional attack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelScenario {
    /// Channel transmittance (applied on top of the receiver efficiencies).
    pub eta: f64,
    /// Intrinsic key and test QBERs.
    pub q_z: f64,
    pub q_x: f64,
    pub attack: Option<AttackParams>,
}

impl ChannelScenario {
    pub fn honest(eta: f64, q_z: f64, q_x: f64) -> Self {
        ChannelScenario {
            eta,
            q_z,
            q_x,
            attack: None,
        }
    }

    pub fn checked(mut self) -> Result<Self> {
        self.eta = checked_prob("eta", self.eta)?;
        self.q_z = checked_prob("q_z", self.q_z)?;
        self.q_x = checked_prob("q_x", self.q_x)?;
        self.attack = match self.attack {
            Some(a) => Some(a.checked()?),
            None => None,
        };
        Ok(self)
    }
}

/// Flat parameter set consumed by every formula in the crate: protocol
/// parameters merged with one channel scenario, dark counts as whole-window
/// totals. Construct via [`Model::new`] for validated inputs, or fill the
/// fields directly in controlled contexts (tests, sweeps).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub d: usize,
    pub eta: f64,
    pub q_z: f64,
    pub q_x: f64,
    /// Whole-window dark-count totals.
    pub pd_z: f64,
    pub pd_x: f64,
    pub eta_up: f64,
    pub eta_dn: f64,
    pub eta2: f64,
    pub eta_z: f64,
    pub eta_x: f64,
    pub mu: [f64; 3],
    pub c: f64,
    pub p_z: f64,
    pub p_mu: [f64; 3],
}

impl Model {
    pub fn new(params: &ProtocolParams, scenario: &ChannelScenario) -> Result<Self> {
        let params = params.clone().checked()?;
        let scenario = scenario.clone().checked()?;
        let der = params.derived();
        Ok(Model {
            d: params.d,
            eta: scenario.eta,
            q_z: scenario.q_z,
            q_x: scenario.q_x,
            pd_z: der.pd_z_total,
            pd_x: der.pd_x_total,
            eta_up: params.eta_up,
            eta_dn: params.eta_down,
            eta2: params.eta2,
            eta_z: params.eta_z,
            eta_x: params.eta_x,
            mu: [params.mu1, params.mu2, params.mu3],
            c: params.c,
            p_z: params.p_z,
            p_mu: [params.p_mu1, params.p_mu2, 1.0 - params.p_mu1 - params.p_mu2],
        })
    }

    #[inline]
    pub fn eta_r(&self) -> f64 {
        self.eta_x / self.eta_z
    }

    #[inline]
    pub fn eta_of(&self, t: Tbs) -> f64 {
        match t {
            Tbs::Up => self.eta_up,
            Tbs::Mid => self.eta2,
            Tbs::Dn => self.eta_dn,
        }
    }

    pub fn with_mu1(&self, mu1: f64) -> Model {
        Model {
            mu: [mu1, self.mu[1], self.mu[2]],
            ..self.clone()
        }
    }

    /// Derived click probabilities, matching [`ProtocolParams::derived`]
    /// but computed from the whole-window totals stored here.
    pub fn derived(&self) -> DerivedParams {
        DerivedParams {
            eta_r: self.eta_r(),
            pd_z_total: self.pd_z,
            pd_x_total: self.pd_x,
            p_click_0: self.pd_z,
            p_click_1: 1.0 - (1.0 - self.pd_z) * self.eta_dn,
        }
    }

    /// Oracle-default model for unit tests: Fig. 3 device parameters at
    /// 1 dB channel loss, q_Z = 0.02, q_X = 0.04, exact whole-window darks.
    #[cfg(test)]
    pub(crate) fn default_test() -> Model {
        Model {
            d: 4,
            eta: 10f64.powf(-0.1),
            q_z: 0.02,
            q_x: 0.04,
            pd_z: 1e-4,
            pd_x: 1.2e-4,
            eta_up: 0.9,
            eta_dn: 0.1,
            eta2: 0.4,
            eta_z: 0.9 * 10f64.powf(-0.1),
            eta_x: 0.9 * 10f64.powf(-0.2),
            mu: [0.5, 2e-6, 1e-6],
            c: 0.25,
            p_z: 1.0,
            p_mu: [1.0, 0.0, 0.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ProtocolParams::default().checked().unwrap();
    }

    #[test]
    fn constraint_list_matches_spec_examples() {
        // Fig. 3 parameters: both constraints hold.
        assert!(validate_constraints(0.9, 0.1, 10f64.powf(-0.1)).is_empty());
        // eta_up = 0.5 <= 0.4/0.6: constraint1 violated.
        let v = validate_constraints(0.5, 0.4, 1.0);
        assert!(v.contains(&Constraint::Constraint1));
        // eta_r = 0.05 below the constraint2 right side (~0.528).
        let v = validate_constraints(0.9, 0.1, 0.05);
        assert_eq!(v, vec![Constraint::Constraint2]);
    }

    #[test]
    fn clamping_rounds_drift_into_range() {
        let mut p = ProtocolParams::default();
        p.p_z = -1e-13;
        let p = p.checked().unwrap();
        assert_eq!(p.p_z, 0.0);
        let mut p = ProtocolParams::default();
        p.p_z = 1.0 + 1e-13;
        let p = p.checked().unwrap();
        assert_eq!(p.p_z, 1.0);
        let mut p = ProtocolParams::default();
        p.p_z = 1.1;
        assert!(p.checked().is_err());
    }

    #[test]
    fn ordering_violations_fail_construction() {
        let mut p = ProtocolParams::default();
        p.mu1 = 1e-6;
        assert!(p.checked().is_err());
        let mut p = ProtocolParams::default();
        p.eta2 = 0.95;
        assert!(p.checked().is_err());
    }

    #[test]
    fn setting_index_matches_order() {
        for (n, (i, l)) in SETTING_ORDER.iter().enumerate() {
            assert_eq!(setting_idx(*i, *l), n);
        }
    }
}
