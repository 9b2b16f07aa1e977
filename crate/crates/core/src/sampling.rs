//! Seeded random draws of devices and incident beams for property checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CouplerConfig, InputField, InputMode};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex(r: &mut impl Rng, scale: f64) -> Complex64 {
    Complex64::from_polar(r.gen_range(0.0..scale), r.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
}

/// Which parts of a random device are switched on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrawSpec {
    pub lossy: bool,
    pub thermal: bool,
    /// Upper bound on |κ|, |Γξ_P|.
    pub coupling: f64,
    /// Upper bound on |k| of each wavevector.
    pub wavevector: f64,
}

impl DrawSpec {
    pub fn generic() -> Self {
        DrawSpec {
            lossy: true,
            thermal: true,
            coupling: 2.0,
            wavevector: 3.0,
        }
    }

    pub fn lossless() -> Self {
        DrawSpec {
            lossy: false,
            thermal: false,
            ..Self::generic()
        }
    }
}

pub fn random_config(r: &mut impl Rng, spec: DrawSpec) -> CouplerConfig {
    let kw = spec.wavevector;
    let mut wave = || [r.gen_range(-kw..kw), r.gen_range(-kw..kw)];
    let (k_pump, k_signal, k_idler) = (wave(), wave(), wave());
    CouplerConfig {
        nonlinear: [Complex64::new(1.0, 0.0); 2],
        kappa_pump: Complex64::new(0.0, 0.0),
        kappa_signal: complex(r, spec.coupling),
        kappa_idler: complex(r, spec.coupling),
        k_pump,
        k_signal,
        k_idler,
        damping: if spec.lossy {
            [(); 4].map(|_| r.gen_range(0.0..0.5))
        } else {
            [0.0; 4]
        },
        reservoir: if spec.thermal {
            [(); 4].map(|_| r.gen_range(0.0..0.5))
        } else {
            [0.0; 4]
        },
        pump: [complex(r, spec.coupling), complex(r, spec.coupling)],
    }
}

/// A device satisfying the split-quartic conditions: equal signal dampings,
/// equal idler dampings, no linear signal/idler mismatch and the pump phase
/// locked to the linear couplings.
pub fn random_split_config(r: &mut impl Rng, lossy: bool) -> CouplerConfig {
    let ks = complex(r, 2.0) + Complex64::new(0.05, 0.0);
    let ki = complex(r, 2.0) + Complex64::new(0.05, 0.0);
    let g2 = complex(r, 2.0);
    let g1 = g2 * ks.conj() * ki.norm() / (ki * ks.norm());
    let (gs, gi) = if lossy {
        (r.gen_range(0.0..0.5), r.gen_range(0.0..0.5))
    } else {
        (0.0, 0.0)
    };
    let ks_common = r.gen_range(-3.0..3.0);
    let ki_common = r.gen_range(-3.0..3.0);
    CouplerConfig {
        nonlinear: [Complex64::new(1.0, 0.0); 2],
        kappa_pump: Complex64::new(0.0, 0.0),
        kappa_signal: ks,
        kappa_idler: ki,
        k_pump: [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)],
        k_signal: [ks_common; 2],
        k_idler: [ki_common; 2],
        damping: [gs, gs, gi, gi],
        reservoir: [0.0; 4],
        pump: [g1, g2],
    }
}

pub fn random_input(r: &mut impl Rng, squeezed: bool) -> InputField {
    let mut modes = [InputMode::default(); 4];
    for m in modes.iter_mut() {
        m.amplitude = complex(r, 1.0);
        if squeezed {
            m.squeeze = r.gen_range(0.0..0.6);
            m.squeeze_phase = r.gen_range(-3.0..3.0);
            m.chaotic = r.gen_range(0.0..0.3);
        }
    }
    InputField { modes }
}
