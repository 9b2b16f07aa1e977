//! Physical parameters of the coupler, the derived mismatch quantities, and
//! the conversion of incident beams into initial moments.
//!
//! All couplings, dampings and wavevectors share one arbitrary inverse-length
//! unit; propagation distances are measured in the matching length unit.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::{FieldState, NoiseState};

/// The four generated modes, in the order S₁, S₂, I₁, I₂ used for all
/// four-component arrays in this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    S1,
    S2,
    I1,
    I2,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::S1, Mode::S2, Mode::I1, Mode::I2];

    pub fn index(self) -> usize {
        match self {
            Mode::S1 => 0,
            Mode::S2 => 1,
            Mode::I1 => 2,
            Mode::I2 => 3,
        }
    }

    pub fn from_index(i: usize) -> Mode {
        Mode::ALL[i]
    }

    pub fn is_signal(self) -> bool {
        matches!(self, Mode::S1 | Mode::S2)
    }

    /// Waveguide number, 1 or 2.
    pub fn guide(self) -> usize {
        match self {
            Mode::S1 | Mode::I1 => 1,
            Mode::S2 | Mode::I2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::S1 => "S1",
            Mode::S2 => "S2",
            Mode::I1 => "I1",
            Mode::I2 => "I2",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "S1" => Ok(Mode::S1),
            "S2" => Ok(Mode::S2),
            "I1" => Ok(Mode::I1),
            "I2" => Ok(Mode::I2),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

/// Raw physical parameters of the two-waveguide coupler.
///
/// The pump modes are classical: their damping and reservoir occupation play
/// no role once they are replaced by fixed amplitudes, so they are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplerConfig {
    /// Nonlinear coupling constants Γ₁, Γ₂.
    pub nonlinear: [Complex64; 2],
    /// Linear pump-pump coupling. Kept for completeness; the linearized
    /// dynamics never reads it.
    pub kappa_pump: Complex64,
    pub kappa_signal: Complex64,
    pub kappa_idler: Complex64,
    /// Wavevectors along z: `[guide 1, guide 2]`.
    pub k_pump: [f64; 2],
    pub k_signal: [f64; 2],
    pub k_idler: [f64; 2],
    /// Damping constants, ordered S₁, S₂, I₁, I₂.
    pub damping: [f64; 4],
    /// Mean reservoir photon numbers, ordered S₁, S₂, I₁, I₂.
    pub reservoir: [f64; 4],
    /// Classical pump amplitudes ξ_P1, ξ_P2.
    pub pump: [Complex64; 2],
}

impl Default for CouplerConfig {
    /// The lossy symmetric coupler used for the quadrature-switching scenario.
    fn default() -> Self {
        CouplerConfig {
            nonlinear: [Complex64::new(1.0, 0.0); 2],
            kappa_pump: Complex64::new(0.0, 0.0),
            kappa_signal: Complex64::new(2.0, 0.0),
            kappa_idler: Complex64::new(2.0, 0.0),
            k_pump: [0.0; 2],
            k_signal: [0.0; 2],
            k_idler: [0.0; 2],
            damping: [0.2; 4],
            reservoir: [1e-2; 4],
            pump: [Complex64::new(1.0, 0.0); 2],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NegativeDamping,
    NegativeReservoirOccupation,
    NonFinite,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::NegativeDamping => "negative damping",
            ViolationKind::NegativeReservoirOccupation => "negative reservoir occupation",
            ViolationKind::NonFinite => "non-finite value",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub field: String,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.kind)
    }
}

fn finite_c(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl CouplerConfig {
    /// Every violated invariant, with the offending field.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut non_finite = |field: String, ok: bool| {
            if !ok {
                out.push(Violation {
                    field,
                    kind: ViolationKind::NonFinite,
                });
            }
        };
        for (i, g) in self.nonlinear.iter().enumerate() {
            non_finite(format!("nonlinear[{}]", i + 1), finite_c(*g));
        }
        non_finite("kappa_pump".into(), finite_c(self.kappa_pump));
        non_finite("kappa_signal".into(), finite_c(self.kappa_signal));
        non_finite("kappa_idler".into(), finite_c(self.kappa_idler));
        for (name, ks) in [
            ("k_pump", &self.k_pump),
            ("k_signal", &self.k_signal),
            ("k_idler", &self.k_idler),
        ] {
            for (i, k) in ks.iter().enumerate() {
                non_finite(format!("{name}[{}]", i + 1), k.is_finite());
            }
        }
        for (i, p) in self.pump.iter().enumerate() {
            non_finite(format!("pump[{}]", i + 1), finite_c(*p));
        }
        for m in Mode::ALL {
            let g = self.damping[m.index()];
            if !g.is_finite() {
                out.push(Violation {
                    field: format!("damping[{m}]"),
                    kind: ViolationKind::NonFinite,
                });
            } else if g < 0.0 {
                out.push(Violation {
                    field: format!("damping[{m}]"),
                    kind: ViolationKind::NegativeDamping,
                });
            }
            let n = self.reservoir[m.index()];
            if !n.is_finite() {
                out.push(Violation {
                    field: format!("reservoir[{m}]"),
                    kind: ViolationKind::NonFinite,
                });
            } else if n < 0.0 {
                out.push(Violation {
                    field: format!("reservoir[{m}]"),
                    kind: ViolationKind::NegativeReservoirOccupation,
                });
            }
        }
        out
    }

    /// Global mismatch Δk = ½ Σᵢ (k_Si + k_Ii − k_Pi).
    pub fn global_mismatch(&self) -> f64 {
        0.5 * (0..2)
            .map(|i| self.k_signal[i] + self.k_idler[i] - self.k_pump[i])
            .sum::<f64>()
    }

    /// The same device with the waveguide labels 1 and 2 exchanged.
    /// The linear couplings are conjugated, which leaves the dynamics invariant.
    pub fn swap_guides(&self) -> CouplerConfig {
        let s = |a: [f64; 2]| [a[1], a[0]];
        let m = |a: [f64; 4]| [a[1], a[0], a[3], a[2]];
        CouplerConfig {
            nonlinear: [self.nonlinear[1], self.nonlinear[0]],
            kappa_pump: self.kappa_pump.conj(),
            kappa_signal: self.kappa_signal.conj(),
            kappa_idler: self.kappa_idler.conj(),
            k_pump: s(self.k_pump),
            k_signal: s(self.k_signal),
            k_idler: s(self.k_idler),
            damping: m(self.damping),
            reservoir: m(self.reservoir),
            pump: [self.pump[1], self.pump[0]],
        }
    }

    /// The same device with the roles of signal and idler exchanged.
    pub fn swap_signal_idler(&self) -> CouplerConfig {
        let m = |a: [f64; 4]| [a[2], a[3], a[0], a[1]];
        CouplerConfig {
            kappa_signal: self.kappa_idler,
            kappa_idler: self.kappa_signal,
            k_signal: self.k_idler,
            k_idler: self.k_signal,
            damping: m(self.damping),
            reservoir: m(self.reservoir),
            ..self.clone()
        }
    }
}

/// Quantities derived from a [`CouplerConfig`]: rescaled gains, linear and
/// nonlinear mismatches, the global mismatch and the auxiliary constants K.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedParams {
    /// Rescaled gains G₁ = Γ₁ξ_P1, G₂ = Γ₂ξ_P2.
    pub gain: [Complex64; 2],
    pub kappa_signal: Complex64,
    pub kappa_idler: Complex64,
    pub dk_pump: f64,
    pub dk_signal: f64,
    pub dk_idler: f64,
    /// Nonlinear mismatches Δl₁, Δl₂.
    pub dl: [f64; 2],
    /// Global mismatch Δk.
    pub dk: f64,
    /// Auxiliary mismatches ΔK_S1, ΔK_S2, ΔK_I1, ΔK_I2.
    pub dk_aux: [f64; 4],
    /// Auxiliary constants K_S1, K_S2, K_I1, K_I2.
    pub k_aux: [Complex64; 4],
    pub damping: [f64; 4],
    pub reservoir: [f64; 4],
}

impl DerivedParams {
    pub fn k(&self, m: Mode) -> Complex64 {
        self.k_aux[m.index()]
    }

    /// All four dampings vanish.
    pub fn is_lossless(&self) -> bool {
        self.damping.iter().all(|&g| g == 0.0)
    }

    /// Drift matrix of the slowly varying (rotating-frame) amplitudes
    /// (C_S1, C_S2, C_I1†, C_I2†).
    pub fn drift_matrix(&self) -> Matrix4<Complex64> {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        let [ks1, ks2, ki1, ki2] = self.k_aux;
        let [g1, g2] = self.gain;
        let (ks, ki) = (self.kappa_signal, self.kappa_idler);
        Matrix4::new(
            -ks1, i * ks.conj(), i * g1, z,
            i * ks, -ks2, z, i * g2,
            -i * g1.conj(), z, -ki1, -i * ki,
            z, -i * g2.conj(), -i * ki.conj(), -ki2,
        )
    }

    /// Phase rates of the diagonal mismatch matrix M(z): entry j of M(z) is
    /// `exp(i · rate[j] · z)`.
    pub fn frame_rates(&self) -> [f64; 4] {
        let [s1, s2, i1, i2] = self.dk_aux;
        [-s1, -s2, i1, i2]
    }

    /// Reservoir source strengths for the components of (A_S1, A_S2, A_I1†, A_I2†):
    /// 2γ⟨n_d⟩ for the signal annihilators and 2γ(⟨n_d⟩+1) for the idler creators.
    pub fn diffusion(&self) -> [f64; 4] {
        let mut q = [0.0; 4];
        for m in Mode::ALL {
            let j = m.index();
            let n = if m.is_signal() {
                self.reservoir[j]
            } else {
                self.reservoir[j] + 1.0
            };
            q[j] = 2.0 * self.damping[j] * n;
        }
        q
    }
}

pub fn derive_params(config: &CouplerConfig) -> Result<DerivedParams> {
    let bad: Vec<String> = config
        .validate()
        .into_iter()
        .map(|v| v.to_string())
        .collect();
    if !bad.is_empty() {
        return Err(Error::InvalidInput(bad.join("; ")));
    }

    let dk_pump = config.k_pump[0] - config.k_pump[1];
    let dk_signal = config.k_signal[0] - config.k_signal[1];
    let dk_idler = config.k_idler[0] - config.k_idler[1];
    let dl = [0, 1].map(|i| config.k_pump[i] - config.k_signal[i] - config.k_idler[i]);
    let dk = config.global_mismatch();
    let dk_aux = [
        0.5 * (dk + dk_signal),
        0.5 * (dk - dk_signal),
        0.5 * (dk + dk_idler),
        0.5 * (dk - dk_idler),
    ];
    let g = &config.damping;
    let k_aux = [
        Complex64::new(g[0], -dk_aux[0]),
        Complex64::new(g[1], -dk_aux[1]),
        Complex64::new(g[2], dk_aux[2]),
        Complex64::new(g[3], dk_aux[3]),
    ];

    Ok(DerivedParams {
        gain: [
            config.nonlinear[0] * config.pump[0],
            config.nonlinear[1] * config.pump[1],
        ],
        kappa_signal: config.kappa_signal,
        kappa_idler: config.kappa_idler,
        dk_pump,
        dk_signal,
        dk_idler,
        dl,
        dk,
        dk_aux,
        k_aux,
        damping: config.damping,
        reservoir: config.reservoir,
    })
}

/// One incident beam: coherent amplitude plus squeezed and chaotic noise.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct InputMode {
    pub amplitude: Complex64,
    pub squeeze: f64,
    /// Squeeze phase θ in radians.
    pub squeeze_phase: f64,
    /// Mean number of external (chaotic) noise photons.
    pub chaotic: f64,
}

impl InputMode {
    pub fn coherent(amplitude: Complex64) -> Self {
        InputMode {
            amplitude,
            ..Default::default()
        }
    }

    /// Normal-ordered ⟨ΔA†ΔA⟩ of the incident beam.
    pub fn b0(&self) -> f64 {
        self.squeeze.sinh().powi(2) + self.chaotic
    }

    /// ⟨(ΔA)²⟩ of the incident beam.
    pub fn c0(&self) -> Complex64 {
        Complex64::from_polar(0.5 * (2.0 * self.squeeze).sinh(), self.squeeze_phase)
    }

    pub fn is_coherent(&self) -> bool {
        self.squeeze == 0.0 && self.chaotic == 0.0
    }
}

/// Mutually independent incident beams, ordered S₁, S₂, I₁, I₂.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct InputField {
    pub modes: [InputMode; 4],
}

impl InputField {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn coherent(amplitudes: [Complex64; 4]) -> Self {
        InputField {
            modes: amplitudes.map(InputMode::coherent),
        }
    }

    pub fn mode(&self, m: Mode) -> &InputMode {
        &self.modes[m.index()]
    }

    pub fn swap_guides(&self) -> InputField {
        let m = &self.modes;
        InputField {
            modes: [m[1], m[0], m[3], m[2]],
        }
    }

    pub fn swap_signal_idler(&self) -> InputField {
        let m = &self.modes;
        InputField {
            modes: [m[2], m[3], m[0], m[1]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in Mode::ALL {
            let x = self.mode(m);
            if !(finite_c(x.amplitude) && x.squeeze.is_finite() && x.squeeze_phase.is_finite()) {
                return Err(Error::InvalidInput(format!("input {m}: non-finite value")));
            }
            if !(x.chaotic.is_finite() && x.chaotic >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "input {m}: chaotic photon number must be finite and nonnegative, got {}",
                    x.chaotic
                )));
            }
        }
        Ok(())
    }
}

/// Initial means and second moments of mutually independent incident beams.
///
/// B(0) = cosh²r + ⟨n_ch⟩ − 1, C(0) = ½ e^{iθ} sinh 2r; all cross moments vanish.
pub fn input_moments(input: &InputField) -> Result<FieldState> {
    input.validate()?;
    let mut normal = Matrix4::zeros();
    let mut anomalous = Matrix4::zeros();
    for m in Mode::ALL {
        let j = m.index();
        let x = input.mode(m);
        let (b, c) = (x.b0(), x.c0());
        if !(b.is_finite() && finite_c(c)) {
            return Err(Error::InvalidInput(format!(
                "input {m}: squeeze parameter {} overflows the incident moments",
                x.squeeze
            )));
        }
        normal[(j, j)] = Complex64::new(b, 0.0);
        anomalous[(j, j)] = c;
    }
    Ok(FieldState {
        means: input.modes.map(|x| x.amplitude),
        noise: NoiseState::from_matrices(0.0, normal, anomalous),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig7_config(k_p2: f64) -> CouplerConfig {
        CouplerConfig {
            k_signal: [6.0, 6.0],
            k_idler: [4.0, 4.0],
            k_pump: [10.0, k_p2],
            ..Default::default()
        }
    }

    #[test]
    fn matched_wavevectors_give_zero_mismatch() {
        let dp = derive_params(&fig7_config(10.0)).unwrap();
        assert_eq!(dp.dk, 0.0);
        assert_eq!(dp.dl, [0.0, 0.0]);
    }

    #[test]
    fn detuned_second_pump() {
        let dp = derive_params(&fig7_config(8.0)).unwrap();
        // Hand evaluation: Δk = ½[(6+4−10) + (6+4−8)] = 1, Δl₂ = 8−6−4 = −2, Δk_P = 10−8 = 2.
        assert_eq!(dp.dk, 1.0);
        assert_eq!(dp.dl[1], -2.0);
        assert_eq!(dp.dk_pump, 2.0);
        assert_eq!(dp.dl[0], 0.0);
    }

    #[test]
    fn zero_wavevectors_give_real_k() {
        let cfg = CouplerConfig {
            damping: [0.1, 0.2, 0.3, 0.4],
            ..Default::default()
        };
        let dp = derive_params(&cfg).unwrap();
        assert_eq!(dp.dk_aux, [0.0; 4]);
        for j in 0..4 {
            assert_eq!(dp.k_aux[j], Complex64::new(cfg.damping[j], 0.0));
        }
    }

    #[test]
    fn auxiliary_identities_hold() {
        let cfg = CouplerConfig {
            k_pump: [3.7, -1.2],
            k_signal: [0.3, 2.9],
            k_idler: [-4.1, 1.7],
            damping: [0.1, 0.3, 0.0, 0.7],
            ..Default::default()
        };
        let dp = derive_params(&cfg).unwrap();
        let [s1, s2, i1, i2] = dp.dk_aux;
        assert!((s1 - s2 - dp.dk_signal).abs() < 1e-14);
        assert!((i1 - i2 - dp.dk_idler).abs() < 1e-14);
        assert!((s1 + i1 - dp.dk - 0.5 * (dp.dk_signal + dp.dk_idler)).abs() < 1e-14);
        assert_eq!(dp.k_aux[0], Complex64::new(0.1, -s1));
        assert_eq!(dp.k_aux[3], Complex64::new(0.7, i2));
    }

    #[test]
    fn non_finite_parameter_is_rejected() {
        let cfg = CouplerConfig {
            k_signal: [f64::NAN, 0.0],
            ..Default::default()
        };
        assert!(matches!(derive_params(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn validate_reports_each_violation() {
        assert!(CouplerConfig::default().validate().is_empty());

        let mut cfg = CouplerConfig::default();
        cfg.damping[0] = -0.1;
        let v = cfg.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NegativeDamping);
        assert_eq!(v[0].field, "damping[S1]");
        assert_eq!(v[0].kind.to_string(), "negative damping");

        cfg.reservoir[3] = -1.0;
        let v = cfg.validate();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].kind, ViolationKind::NegativeReservoirOccupation);
        assert_eq!(v[1].kind.to_string(), "negative reservoir occupation");
    }

    #[test]
    fn input_moments_examples() {
        let vac = input_moments(&InputField::vacuum()).unwrap();
        for m in Mode::ALL {
            assert_eq!(vac.noise.b(m), 0.0);
            assert_eq!(vac.noise.c(m), Complex64::new(0.0, 0.0));
        }

        let mut input = InputField::vacuum();
        input.modes[0].squeeze = 1.0;
        input.modes[1].chaotic = 0.5;
        let st = input_moments(&input).unwrap();
        assert!((st.noise.b(Mode::S1) - 1.0f64.sinh().powi(2)).abs() < 1e-15);
        assert!((st.noise.b(Mode::S1) - 1.381_097_845_541_815_5).abs() < 1e-12);
        assert!((st.noise.c(Mode::S1).re - 1.813_430_203_923_509_5).abs() < 1e-12);
        assert_eq!(st.noise.b(Mode::S2), 0.5);
        assert_eq!(st.noise.c(Mode::S2), Complex64::new(0.0, 0.0));
        assert_eq!(st.noise.d(Mode::S1, Mode::S2), Complex64::new(0.0, 0.0));
        assert_eq!(st.noise.d_bar(Mode::S1, Mode::I1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn negative_chaotic_input_is_rejected() {
        let mut input = InputField::vacuum();
        input.modes[2].chaotic = -0.1;
        assert!(input_moments(&input).is_err());
    }

    #[test]
    fn swaps_are_involutions() {
        let cfg = CouplerConfig {
            kappa_signal: Complex64::new(1.0, 2.0),
            k_pump: [1.0, 2.0],
            damping: [0.1, 0.2, 0.3, 0.4],
            ..Default::default()
        };
        assert_eq!(cfg.swap_guides().swap_guides(), cfg);
        assert_eq!(cfg.swap_signal_idler().swap_signal_idler(), cfg);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unsqueezed_input_has_no_anomalous_moment(theta in -10.0f64..10.0, n in 0.0f64..5.0) {
                let mut input = InputField::vacuum();
                input.modes[2].squeeze_phase = theta;
                input.modes[2].chaotic = n;
                let st = input_moments(&input).unwrap();
                prop_assert_eq!(st.noise.c(Mode::I1), Complex64::new(0.0, 0.0));
            }

            #[test]
            fn incident_beams_are_physical(r in -3.0f64..3.0, theta in -7.0f64..7.0, n in 0.0f64..5.0) {
                let x = InputMode { amplitude: Complex64::new(0.0, 0.0), squeeze: r, squeeze_phase: theta, chaotic: n };
                let b = x.b0();
                let c2 = x.c0().norm_sqr();
                prop_assert!(b * (b + 1.0) - c2 >= -1e-9 * (1.0 + c2));
                if n == 0.0 {
                    prop_assert!((b * (b + 1.0) - c2).abs() <= 1e-9 * (1.0 + c2));
                }
            }
        }
    }
}
