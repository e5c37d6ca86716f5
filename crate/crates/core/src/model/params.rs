use serde::{Deserialize, Serialize};

use crate::algebra::HilbertSpace;
use crate::error::{Error, Result};
use crate::units::{ghz, mhz};

/// Fock levels kept per bosonic mode (levels `0..n`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl From<usize> for Truncation {
    fn from(n: usize) -> Self {
        Self::uniform(n)
    }
}

impl Truncation {
    pub fn uniform(n: usize) -> Self {
        Self { a: n, b: n, c: n }
    }

    pub fn is_uniform(&self) -> bool {
        self.a == self.b && self.b == self.c
    }
}

/// Physical parameters of the divider. All frequencies, couplings and rates
/// are angular frequencies in rad/s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DividerParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    pub omega_q1: f64,
    pub omega_q2: f64,
    /// Three-body coupling between resonator a and both qubits.
    pub g3: f64,
    /// Residual `σz σz` coupling between the qubits.
    pub g_e: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub drive_amp: f64,
    pub truncation: Truncation,
}

impl DividerParams {
    /// Continuous-wave parameter set used for the photon-number dynamics:
    /// `ω_a/2π = 8.2 GHz`, `ω_{1,2,b,c}/2π = 4.10 GHz`, `g3/2π = 10 MHz`,
    /// `λ/2π = 5 MHz`, `γ_a/2π = 6 MHz`, `γ_{b,c}/2π = 1 MHz`,
    /// `κ/2π = 3 MHz`, `|Ω|/2π = 4 MHz`, six Fock levels per mode.
    pub fn fig2() -> Self {
        Self {
            omega_a: ghz(8.2),
            omega_b: ghz(4.10),
            omega_c: ghz(4.10),
            omega_q1: ghz(4.10),
            omega_q2: ghz(4.10),
            g3: mhz(10.0),
            g_e: 0.0,
            lambda1: mhz(5.0),
            lambda2: mhz(5.0),
            gamma_a: mhz(6.0),
            gamma_b: mhz(1.0),
            gamma_c: mhz(1.0),
            kappa1: mhz(3.0),
            kappa2: mhz(3.0),
            drive_amp: mhz(4.0),
            truncation: Truncation::uniform(6),
        }
    }

    /// Pulse-study parameter set: as [`fig2`](Self::fig2) but with
    /// `ω_{1,2,b,c}/2π = 4.096 GHz` and `|Ω|/2π = 7 MHz`.
    pub fn fig5() -> Self {
        Self::fig2().with_qubit_frequency(ghz(4.096)).with_drive_amp(mhz(7.0))
    }

    pub fn with_truncation(mut self, t: impl Into<Truncation>) -> Self {
        self.truncation = t.into();
        self
    }

    /// Sets `ω_1 = ω_2 = ω_b = ω_c = omega`.
    pub fn with_qubit_frequency(mut self, omega: f64) -> Self {
        self.omega_q1 = omega;
        self.omega_q2 = omega;
        self.omega_b = omega;
        self.omega_c = omega;
        self
    }

    /// Moves all four low frequencies together so that `Δ^(2) = delta2`.
    pub fn with_delta2(self, delta2: f64) -> Self {
        let w = (self.omega_a - delta2) / 2.0;
        self.with_qubit_frequency(w)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda1 = lambda;
        self.lambda2 = lambda;
        self
    }

    pub fn with_drive_amp(mut self, amp: f64) -> Self {
        self.drive_amp = amp;
        self
    }

    pub fn space(&self) -> HilbertSpace {
        let t = self.truncation;
        HilbertSpace::divider(t.a, t.b, t.c).expect("validated truncation")
    }

    pub fn delta_ba(&self) -> f64 {
        self.omega_b - self.omega_a / 2.0
    }

    pub fn delta_ca(&self) -> f64 {
        self.omega_c - self.omega_a / 2.0
    }

    pub fn delta_qa1(&self) -> f64 {
        self.omega_q1 - self.omega_a / 2.0
    }

    pub fn delta_qa2(&self) -> f64 {
        self.omega_q2 - self.omega_a / 2.0
    }

    /// `Δ^(2) = ω_a − (ω_1 + ω_2)`.
    pub fn delta2(&self) -> f64 {
        self.omega_a - (self.omega_q1 + self.omega_q2)
    }

    /// Qubit/low-frequency-resonator pairs are interchangeable.
    pub fn is_symmetric(&self) -> bool {
        self.lambda1 == self.lambda2
            && self.gamma_b == self.gamma_c
            && self.kappa1 == self.kappa2
            && self.omega_q1 == self.omega_q2
            && self.omega_b == self.omega_c
            && self.truncation.b == self.truncation.c
    }

    pub(crate) fn rates(&self) -> [(&'static str, f64); 5] {
        [
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("gamma_c", self.gamma_c),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in self.rates() {
            if !rate.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
            if rate < 0.0 {
                return Err(Error::NegativeRate { channel: name.to_string(), rate });
            }
        }
        let freqs = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("omega_c", self.omega_c),
            ("omega_q1", self.omega_q1),
            ("omega_q2", self.omega_q2),
        ];
        for (name, w) in freqs {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {w}")));
            }
        }
        let couplings = [
            ("g3", self.g3),
            ("g_e", self.g_e),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("drive_amp", self.drive_amp),
        ];
        for (name, g) in couplings {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {g}")));
            }
        }
        let t = self.truncation;
        if t.a < 2 || t.b < 2 || t.c < 2 {
            return Err(Error::InvalidParams(format!("truncation must keep at least 2 levels, got {t:?}")));
        }
        Ok(())
    }
}
