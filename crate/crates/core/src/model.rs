//! Pressure laws, the perturbed pressure, characteristic speeds and Riemann
//! invariants of the flux-approximate system.
//!
//! Both pressure normalizations in use for this model are supported:
//! `P(rho) = rho^gamma / gamma` ([`PressureConvention::OneOverGamma`], the
//! default) and `P(rho) = rho^gamma` ([`PressureConvention::Plain`]). All
//! integrals of power laws are evaluated in closed form; differences of
//! powers go through `expm1` so that the isothermal limit `gamma -> 1` is
//! continuous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureConvention {
    /// `P(rho) = rho^gamma / gamma`.
    #[default]
    OneOverGamma,
    /// `P(rho) = rho^gamma`.
    Plain,
}

/// Lower limit of the sound-speed integral in the Riemann invariants.
///
/// The admissible choice is tied to the adiabatic exponent, see
/// [`GasModel::riemann_base`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiemannBase {
    /// `l = 0`, used for `1 < gamma < 3`.
    Origin,
    /// `l = 2 delta`, used for `gamma >= 3`.
    VacuumOffset,
    /// Isothermal log form `ln rho`, used for `gamma = 1`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasModel {
    gamma: f64,
    delta: f64,
    convention: PressureConvention,
}

impl GasModel {
    /// Model with vacuum offset `delta > 0`.
    pub fn new(gamma: f64, delta: f64, convention: PressureConvention) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Config(format!("gamma must be >= 1, got {gamma}")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Config(format!("delta must be > 0, got {delta}")));
        }
        Ok(Self {
            gamma,
            delta,
            convention,
        })
    }

    /// The unperturbed pressure law (`delta = 0`), as used by the
    /// homogeneous gas system and the drift-diffusion limit.
    pub fn unperturbed(gamma: f64, convention: PressureConvention) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::Config(format!("gamma must be >= 1, got {gamma}")));
        }
        Ok(Self {
            gamma,
            delta: 0.0,
            convention,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn convention(&self) -> PressureConvention {
        self.convention
    }

    /// Same pressure law with a different vacuum offset.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        if delta == 0.0 {
            Self::unperturbed(self.gamma, self.convention)
        } else {
            Self::new(self.gamma, delta, self.convention)
        }
    }

    /// `theta = (gamma - 1) / 2`.
    pub fn theta(&self) -> f64 {
        0.5 * (self.gamma - 1.0)
    }

    /// Density floor `2 delta`.
    pub fn floor(&self) -> f64 {
        2.0 * self.delta
    }

    pub fn is_isothermal(&self) -> bool {
        self.gamma == 1.0
    }

    // P = scale * rho^gamma / gamma
    fn scale(&self) -> f64 {
        match self.convention {
            PressureConvention::OneOverGamma => 1.0,
            PressureConvention::Plain => self.gamma,
        }
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::domain("pressure", format!("rho = {rho} is not positive")));
        }
        Ok(self.p(rho))
    }

    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        self.scale() * rho.powf(self.gamma) / self.gamma
    }

    /// `P'(rho)`.
    #[inline]
    pub fn dp(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            return 1.0;
        }
        self.scale() * rho.powf(self.gamma - 1.0)
    }

    /// `P''(rho)`.
    #[inline]
    pub fn d2p(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            return 0.0;
        }
        self.scale() * (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
    }

    /// `P1(rho, delta) = int_{2 delta}^{rho} (t - 2 delta)/t P'(t) dt`.
    pub fn perturbed_pressure(&self, rho: f64) -> Result<f64> {
        let floor = self.floor();
        if !(rho >= floor) || !rho.is_finite() {
            return Err(Error::domain(
                "perturbed_pressure",
                format!("rho = {rho} below floor {floor}"),
            ));
        }
        Ok(self.p1(rho))
    }

    #[inline]
    pub(crate) fn p1(&self, rho: f64) -> f64 {
        let c = self.floor();
        let k = self.scale();
        if c == 0.0 {
            return self.p(rho);
        }
        if rho <= c {
            return 0.0;
        }
        let r = rho / c - 1.0;
        if r < 1e-2 {
            // k c^gamma int_0^r v (1+v)^(gamma-2) dv, binomial series.
            let q = self.gamma - 2.0;
            let mut binom = 1.0;
            let mut rpow = r * r;
            let mut sum = 0.0;
            for n in 0..40 {
                let term = binom * rpow / (n as f64 + 2.0);
                sum += term;
                if term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
                binom *= (q - n as f64) / (n as f64 + 1.0);
                rpow *= r;
            }
            return k * c.powf(self.gamma) * sum;
        }
        let g = self.gamma;
        k * (pow_diff(g, rho, c) - c * pow_diff(g - 1.0, rho, c))
    }

    /// `e(rho) = int_{2 delta}^{rho} P(s)/s^2 ds`, the internal-energy part of the
    /// mechanical-energy entropy.
    pub fn energy_integral(&self, rho: f64) -> Result<f64> {
        let c = self.floor();
        if c == 0.0 && self.gamma == 1.0 {
            return Err(Error::domain(
                "energy_integral",
                "isothermal energy diverges at zero offset",
            ));
        }
        if !(rho >= c) || !(rho > 0.0) {
            return Err(Error::domain("energy_integral", format!("rho = {rho} below floor {c}")));
        }
        Ok(self.energy(rho))
    }

    #[inline]
    pub(crate) fn energy(&self, rho: f64) -> f64 {
        self.scale() / self.gamma * pow_diff(self.gamma - 1.0, rho, self.floor())
    }

    /// Characteristic speeds of the flux-approximate system.
    pub fn eigenvalues(&self, rho: f64, mom: f64) -> Result<(f64, f64)> {
        let floor = self.floor();
        if !(rho >= floor) || !(rho > 0.0) {
            return Err(Error::domain("eigenvalues", format!("rho = {rho} below floor {floor}")));
        }
        Ok(self.lambdas(rho, mom))
    }

    #[inline]
    pub(crate) fn lambdas(&self, rho: f64, mom: f64) -> (f64, f64) {
        let u = mom / rho;
        let c = self.sound_speed(rho);
        (u - c, u + c)
    }

    /// `((rho - 2 delta)/rho) sqrt(P'(rho))`, half the gap between the two speeds.
    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        ((rho - self.floor()) / rho).max(0.0) * self.dp(rho).sqrt()
    }

    /// The admissible lower limit for the Riemann invariants at this `gamma`.
    pub fn riemann_base(&self) -> RiemannBase {
        if self.gamma == 1.0 {
            RiemannBase::Log
        } else if self.gamma < 3.0 {
            RiemannBase::Origin
        } else {
            RiemannBase::VacuumOffset
        }
    }

    /// `int_l^rho sqrt(P'(s))/s ds`.
    pub fn sound_integral(&self, rho: f64, base: RiemannBase) -> Result<f64> {
        let expected = self.riemann_base();
        if base != expected {
            return Err(Error::Config(format!(
                "riemann base {base:?} is not admissible for gamma = {}; use {expected:?}",
                self.gamma
            )));
        }
        let floor = self.floor();
        if !(rho >= floor) || !(rho > 0.0) {
            return Err(Error::domain(
                "riemann_invariants",
                format!("rho = {rho} below floor {floor}"),
            ));
        }
        Ok(self.h(rho))
    }

    #[inline]
    pub(crate) fn h(&self, rho: f64) -> f64 {
        if self.gamma == 1.0 {
            return rho.ln();
        }
        let theta = self.theta();
        let lower = match self.riemann_base() {
            RiemannBase::VacuumOffset => self.floor(),
            _ => 0.0,
        };
        self.scale().sqrt() * pow_diff(theta, rho, lower)
    }

    /// Riemann invariants `(z, w) = (h(rho) - u, h(rho) + u)`.
    pub fn riemann_invariants(&self, rho: f64, mom: f64, base: RiemannBase) -> Result<(f64, f64)> {
        let h = self.sound_integral(rho, base)?;
        let u = mom / rho;
        Ok((h - u, h + u))
    }
}

/// `(a^p - b^p)/p`, with the `p -> 0` limit `ln(a/b)`.
pub(crate) fn pow_diff(p: f64, a: f64, b: f64) -> f64 {
    if p == 0.0 {
        return (a / b).ln();
    }
    if b == 0.0 {
        return a.powf(p) / p;
    }
    b.powf(p) * (p * (a / b).ln()).exp_m1() / p
}
