//! Closed-form scalar time signals with exact derivatives.
//!
//! A [`Signal`] is a sum of [`Term`]s. The grammar is deliberately small so
//! that `d/dt` is always available in closed form.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    /// `c`
    Const(f64),
    /// `c * t`
    Linear(f64),
    /// `amp * sin(freq * t + phase)`
    Sin { amp: f64, freq: f64, #[serde(default)] phase: f64 },
    /// `amp * cos(freq * t + phase)`
    Cos { amp: f64, freq: f64, #[serde(default)] phase: f64 },
}

impl Term {
    fn value(&self, t: f64) -> f64 {
        match *self {
            Term::Const(c) => c,
            Term::Linear(c) => c * t,
            Term::Sin { amp, freq, phase } => amp * (freq * t + phase).sin(),
            Term::Cos { amp, freq, phase } => amp * (freq * t + phase).cos(),
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match *self {
            Term::Const(_) => 0.0,
            Term::Linear(c) => c,
            Term::Sin { amp, freq, phase } => amp * freq * (freq * t + phase).cos(),
            Term::Cos { amp, freq, phase } => -amp * freq * (freq * t + phase).sin(),
        }
    }

    fn second_derivative(&self, t: f64) -> f64 {
        match *self {
            Term::Const(_) | Term::Linear(_) => 0.0,
            Term::Sin { amp, freq, phase } => -amp * freq * freq * (freq * t + phase).sin(),
            Term::Cos { amp, freq, phase } => -amp * freq * freq * (freq * t + phase).cos(),
        }
    }

    fn derivative_bound(&self) -> f64 {
        match *self {
            Term::Const(_) => 0.0,
            Term::Linear(c) => c.abs(),
            Term::Sin { amp, freq, .. } | Term::Cos { amp, freq, .. } => (amp * freq).abs(),
        }
    }

    fn scaled(&self, k: f64) -> Term {
        match *self {
            Term::Const(c) => Term::Const(k * c),
            Term::Linear(c) => Term::Linear(k * c),
            Term::Sin { amp, freq, phase } => Term::Sin { amp: k * amp, freq, phase },
            Term::Cos { amp, freq, phase } => Term::Cos { amp: k * amp, freq, phase },
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Term::Const(c) | Term::Linear(c) => c.is_finite(),
            Term::Sin { amp, freq, phase } | Term::Cos { amp, freq, phase } => {
                amp.is_finite() && freq.is_finite() && phase.is_finite()
            }
        }
    }
}

/// Sum of closed-form terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Signal(pub Vec<Term>);

impl Signal {
    pub fn zero() -> Self {
        Signal(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Signal(vec![Term::Const(c)])
    }

    pub fn linear(slope: f64) -> Self {
        Signal(vec![Term::Linear(slope)])
    }

    pub fn sin(amp: f64, freq: f64, phase: f64) -> Self {
        Signal(vec![Term::Sin { amp, freq, phase }])
    }

    pub fn cos(amp: f64, freq: f64, phase: f64) -> Self {
        Signal(vec![Term::Cos { amp, freq, phase }])
    }

    pub fn plus(mut self, other: Signal) -> Self {
        self.0.extend(other.0);
        self
    }

    pub fn scaled(&self, k: f64) -> Self {
        Signal(self.0.iter().map(|t| t.scaled(k)).collect())
    }

    pub fn value(&self, t: f64) -> f64 {
        self.0.iter().map(|term| term.value(t)).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.0.iter().map(|term| term.derivative(t)).sum()
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.0.iter().map(|term| term.second_derivative(t)).sum()
    }

    /// Upper bound on `sup_t |d/dt signal(t)|` (triangle inequality; tight
    /// for a single term).
    pub fn derivative_bound(&self) -> f64 {
        self.0.iter().map(Term::derivative_bound).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(Term::is_finite)
    }
}
