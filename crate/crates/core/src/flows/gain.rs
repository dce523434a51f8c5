use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the finite/fixed-time driving function `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiVariant {
    /// `a sgn^{1-p}(z) + b sgn^q(z)`, componentwise.
    PowerSign,
    /// `a z / ||z||_r^p + b z ||z||_r^{q-1}`.
    NormScaled,
}

/// Parameters of `phi` and the coupling gain `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSpec {
    pub variant: PhiVariant,
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    pub alpha: f64,
    /// Replaces `sgn(u)` in the coupling by `u / (|u| + eps)`. Off by default;
    /// only meant for chattering studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_layer: Option<f64>,
}

fn default_q() -> f64 {
    2.0
}

fn default_r() -> f64 {
    2.0
}

impl GainSpec {
    /// `phi(z) = a sgn^{1-p}(z)` with coupling gain `alpha`.
    pub fn power_sign(a: f64, p: f64, alpha: f64) -> Self {
        Self { variant: PhiVariant::PowerSign, a, b: 0.0, p, q: 2.0, r: 2.0, alpha, boundary_layer: None }
    }

    pub fn norm_scaled(a: f64, b: f64, p: f64, q: f64, r: f64, alpha: f64) -> Self {
        Self { variant: PhiVariant::NormScaled, a, b, p, q, r, alpha, boundary_layer: None }
    }

    pub fn with_fixed_time_term(mut self, b: f64, q: f64) -> Self {
        self.b = b;
        self.q = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, v: f64, rule: &str| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} violates {rule}")))
            }
        };
        check(self.a > 0.0, "a", self.a, "a > 0")?;
        check(self.b >= 0.0, "b", self.b, "b >= 0")?;
        check(self.p > 0.0 && self.p <= 1.0, "p", self.p, "0 < p <= 1")?;
        check(self.q > 1.0, "q", self.q, "q > 1")?;
        check(self.r >= 1.0, "r", self.r, "r >= 1")?;
        check(self.alpha >= 0.0, "alpha", self.alpha, "alpha >= 0")?;
        if let Some(eps) = self.boundary_layer {
            check(eps > 0.0, "boundary_layer", eps, "eps > 0")?;
        }
        Ok(())
    }

    /// Sign used in the coupling term.
    pub fn coupling_sign(&self, u: f64) -> f64 {
        match self.boundary_layer {
            Some(eps) => u / (u.abs() + eps),
            None => sign(u),
        }
    }
}

/// `sign(u)` with `sign(0) = 0`.
pub fn sign(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `sign(u) |u|^e`; zero at `u = 0` for every exponent, including `e = 0`.
pub fn sgn_pow(u: f64, e: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else if e == 0.0 {
        sign(u)
    } else {
        sign(u) * u.abs().powf(e)
    }
}

fn p_norm(z: &DVector<f64>, r: f64) -> f64 {
    if r == 1.0 {
        z.iter().map(|v| v.abs()).sum()
    } else if r == 2.0 {
        z.norm()
    } else {
        z.iter().map(|v| v.abs().powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Driving function of the auxiliary subsystem `z' = -phi(z)`.
pub fn phi(gain: &GainSpec, z: &DVector<f64>) -> DVector<f64> {
    match gain.variant {
        PhiVariant::PowerSign => z.map(|v| {
            let mut out = gain.a * sgn_pow(v, 1.0 - gain.p);
            if gain.b != 0.0 {
                out += gain.b * sgn_pow(v, gain.q);
            }
            out
        }),
        PhiVariant::NormScaled => {
            let norm = p_norm(z, gain.r);
            if norm == 0.0 {
                return DVector::zeros(z.len());
            }
            let mut scale = gain.a / norm.powf(gain.p);
            if gain.b != 0.0 {
                scale += gain.b * norm.powf(gain.q - 1.0);
            }
            z * scale
        }
    }
}
