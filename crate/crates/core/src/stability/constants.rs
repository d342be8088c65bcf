//! Closed-form gain constants. Field operations only, so every function here
//! runs on floats and on exact rationals alike.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{approx, Scalar};

/// `Ψ(u, v) = (uv − 1) / ((u + 1)(v + 1))` for `u, v > −1`.
pub fn psi<T: Scalar>(u: T, v: T) -> Result<T> {
    let one = T::one();
    if !(u > -one.clone()) || !(v > -one.clone()) {
        return Err(Error::Domain(format!(
            "Ψ needs u, v > −1, got ({}, {})",
            approx(&u),
            approx(&v)
        )));
    }
    let num = u.clone() * v.clone() - one.clone();
    Ok(num / ((u + one.clone()) * (v + one)))
}

/// `𝓛(β) = (1 − β)L − β`.
pub fn script_l<T: Scalar>(l: T, beta: T) -> T {
    (T::one() - beta.clone()) * l - beta
}

/// Smallest root of `𝓛⁻(β)𝓛⁺(β) = 1`, which is `Ψ(L⁻, L⁺)`.
pub fn beta0<T: Scalar>(l_minus: T, l_plus: T) -> Result<T> {
    if l_minus.clone() * l_plus.clone() <= T::one() {
        return Err(Error::LocallyStable(format!(
            "L⁻L⁺ = {} ≤ 1",
            approx(&(l_minus * l_plus))
        )));
    }
    psi(l_minus, l_plus)
}

/// `α₀ = (L₀ − 1)/(L₀ + 1)`.
pub fn alpha0<T: Scalar>(l0: T) -> Result<T> {
    if l0 < T::one() {
        return Err(Error::LocallyStable(format!("L₀ = {} < 1", approx(&l0))));
    }
    Ok((l0.clone() - T::one()) / (l0 + T::one()))
}

/// `[(L⁻ − α(L⁻+1))² − ℓ²(L⁻+1)²]·[(L⁺ − α(L⁺+1))² − ℓ²(L⁺+1)²]`.
pub fn mathcal_v<T: Scalar>(l_minus: T, l_plus: T, alpha: T, ell: T) -> T {
    let side = |l: T| {
        let c = script_l(l.clone(), alpha.clone());
        let d = ell.clone() * (l + T::one());
        c.clone() * c - d.clone() * d
    };
    side(l_minus) * side(l_plus)
}

/// Largest admissible `α + ℓ` under the side-alternation condition.
pub fn sides_bound<T: Scalar>(a1: T, a2: T) -> T {
    let r = |a: T| a.clone() / (a + T::one());
    let (x, y) = (r(a1), r(a2));
    if x < y {
        x
    } else {
        y
    }
}

/// Three-valued outcome of a sufficient condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    /// The condition's own preconditions are violated.
    Infeasible,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::Holds
        } else {
            Self::Fails
        }
    }

    pub fn holds(self) -> bool {
        self == Self::Holds
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Fails => "fails",
            Self::Infeasible => "infeasible",
        }
    }
}

/// Mean gain `α` and noise amplitude `ℓ` of `β_n = α + ℓξ_{n+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSpec {
    pub alpha: f64,
    pub ell: f64,
}

impl ControlSpec {
    pub fn new(alpha: f64, ell: f64) -> Result<Self> {
        let c = Self { alpha, ell };
        c.validate()?;
        Ok(c)
    }

    pub fn deterministic(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0)
    }

    /// `0 ≤ α − ℓ` and `α + ℓ < 1`, so every gain lies in `[0, 1)`.
    pub fn validate(&self) -> Result<()> {
        let Self { alpha, ell } = *self;
        if !alpha.is_finite() || !ell.is_finite() || ell < 0.0 {
            return Err(Error::Infeasible(format!(
                "bad control (α, ℓ) = ({alpha}, {ell})"
            )));
        }
        if alpha - ell < 0.0 || alpha + ell >= 1.0 {
            return Err(Error::Infeasible(format!(
                "gain range [{}, {}] leaves [0, 1)",
                alpha - ell,
                alpha + ell
            )));
        }
        Ok(())
    }

    pub fn beta_lo(&self) -> f64 {
        self.alpha - self.ell
    }

    pub fn beta_hi(&self) -> f64 {
        self.alpha + self.ell
    }
}
