//! Named device and input parameters as they appear in scenario files.

use coupler_core::{CouplerConfig, InputField, Mode};
use num_complex::Complex64;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Section {
    Device,
    Input,
}

/// One scalar entry of a [`CouplerConfig`] or [`InputField`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Damping(Mode),
    Reservoir(Mode),
    KappaSignal,
    KappaIdler,
    KappaPump,
    Nonlinear(usize),
    Pump(usize),
    KPump(usize),
    KSignal(usize),
    KIdler(usize),
    Amplitude(Mode),
    Squeeze(Mode),
    SqueezePhase(Mode),
    Chaotic(Mode),
}

impl Field {
    /// Every field, in the order they are written out.
    pub fn all() -> Vec<Field> {
        use Field::*;
        let mut v = vec![Nonlinear(0), Nonlinear(1), Pump(0), Pump(1), KappaSignal, KappaIdler, KappaPump];
        v.extend([KPump(0), KPump(1), KSignal(0), KSignal(1), KIdler(0), KIdler(1)]);
        v.extend(Mode::ALL.map(Damping));
        v.extend(Mode::ALL.map(Reservoir));
        v.extend(Mode::ALL.map(Amplitude));
        v.extend(Mode::ALL.map(Squeeze));
        v.extend(Mode::ALL.map(SqueezePhase));
        v.extend(Mode::ALL.map(Chaotic));
        v
    }

    pub fn lookup(name: &str) -> Option<Field> {
        Field::all().into_iter().find(|f| f.name() == name)
    }

    pub fn name(&self) -> String {
        use Field::*;
        match *self {
            Damping(m) => format!("gamma_{m}"),
            Reservoir(m) => format!("n_d_{m}"),
            KappaSignal => "kappa_S".into(),
            KappaIdler => "kappa_I".into(),
            KappaPump => "kappa_P".into(),
            Nonlinear(i) => format!("Gamma_{}", i + 1),
            Pump(i) => format!("xi_P{}", i + 1),
            KPump(i) => format!("k_P{}", i + 1),
            KSignal(i) => format!("k_S{}", i + 1),
            KIdler(i) => format!("k_I{}", i + 1),
            Amplitude(m) => format!("xi_{m}"),
            Squeeze(m) => format!("r_{m}"),
            SqueezePhase(m) => format!("theta_{m}"),
            Chaotic(m) => format!("n_ch_{m}"),
        }
    }

    pub fn section(&self) -> Section {
        use Field::*;
        match self {
            Amplitude(_) | Squeeze(_) | SqueezePhase(_) | Chaotic(_) => Section::Input,
            _ => Section::Device,
        }
    }

    pub fn is_complex(&self) -> bool {
        use Field::*;
        matches!(self, KappaSignal | KappaIdler | KappaPump | Nonlinear(_) | Pump(_) | Amplitude(_))
    }

    pub fn unit(&self) -> &'static str {
        use Field::*;
        match self {
            Damping(_) | KappaSignal | KappaIdler | KappaPump | Nonlinear(_) => "1/L",
            KPump(_) | KSignal(_) | KIdler(_) => "1/L",
            SqueezePhase(_) => "rad",
            Reservoir(_) | Chaotic(_) => "photons",
            Pump(_) | Amplitude(_) | Squeeze(_) => "1",
        }
    }

    pub fn get(&self, dev: &CouplerConfig, inp: &InputField) -> Complex64 {
        use Field::*;
        let r = |x: f64| Complex64::new(x, 0.0);
        match *self {
            Damping(m) => r(dev.damping[m.index()]),
            Reservoir(m) => r(dev.reservoir[m.index()]),
            KappaSignal => dev.kappa_signal,
            KappaIdler => dev.kappa_idler,
            KappaPump => dev.kappa_pump,
            Nonlinear(i) => dev.nonlinear[i],
            Pump(i) => dev.pump[i],
            KPump(i) => r(dev.k_pump[i]),
            KSignal(i) => r(dev.k_signal[i]),
            KIdler(i) => r(dev.k_idler[i]),
            Amplitude(m) => inp.mode(m).amplitude,
            Squeeze(m) => r(inp.mode(m).squeeze),
            SqueezePhase(m) => r(inp.mode(m).squeeze_phase),
            Chaotic(m) => r(inp.mode(m).chaotic),
        }
    }

    /// Writes `v`; real fields take the real part.
    pub fn set(&self, dev: &mut CouplerConfig, inp: &mut InputField, v: Complex64) {
        use Field::*;
        match *self {
            Damping(m) => dev.damping[m.index()] = v.re,
            Reservoir(m) => dev.reservoir[m.index()] = v.re,
            KappaSignal => dev.kappa_signal = v,
            KappaIdler => dev.kappa_idler = v,
            KappaPump => dev.kappa_pump = v,
            Nonlinear(i) => dev.nonlinear[i] = v,
            Pump(i) => dev.pump[i] = v,
            KPump(i) => dev.k_pump[i] = v.re,
            KSignal(i) => dev.k_signal[i] = v.re,
            KIdler(i) => dev.k_idler[i] = v.re,
            Amplitude(m) => inp.modes[m.index()].amplitude = v,
            Squeeze(m) => inp.modes[m.index()].squeeze = v.re,
            SqueezePhase(m) => inp.modes[m.index()].squeeze_phase = v.re,
            Chaotic(m) => inp.modes[m.index()].chaotic = v.re,
        }
    }
}

/// A real quantity that a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Param {
    Real(Field),
    /// Modulus of a complex field, phase kept.
    Abs(Field),
    /// Phase of a complex field in radians, modulus kept.
    Arg(Field),
}

impl Param {
    pub fn lookup(name: &str) -> Option<Param> {
        if let Some(rest) = name.strip_prefix("abs_") {
            return Field::lookup(rest).filter(Field::is_complex).map(Param::Abs);
        }
        if let Some(rest) = name.strip_prefix("arg_") {
            return Field::lookup(rest).filter(Field::is_complex).map(Param::Arg);
        }
        Field::lookup(name).filter(|f| !f.is_complex()).map(Param::Real)
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Param::Real(f) => f.unit(),
            Param::Abs(f) => f.unit(),
            Param::Arg(_) => "rad",
        }
    }

    pub fn apply(&self, dev: &mut CouplerConfig, inp: &mut InputField, x: f64) {
        match *self {
            Param::Real(f) => f.set(dev, inp, Complex64::new(x, 0.0)),
            Param::Abs(f) => {
                let v = f.get(dev, inp);
                f.set(dev, inp, Complex64::from_polar(x, v.arg()));
            }
            Param::Arg(f) => {
                let v = f.get(dev, inp);
                f.set(dev, inp, Complex64::from_polar(v.norm(), x));
            }
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Real(x) => write!(f, "{}", x.name()),
            Param::Abs(x) => write!(f, "abs_{}", x.name()),
            Param::Arg(x) => write!(f, "arg_{}", x.name()),
        }
    }
}

/// `re+im i` with the shortest representation that reads back exactly.
pub fn format_complex(v: Complex64) -> String {
    let sign = if v.im.is_sign_negative() && v.im != 0.0 { '-' } else { '+' };
    format!("{}{}{}i", v.re, sign, v.im.abs())
}
