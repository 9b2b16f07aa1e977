//! Scenario description: what to compute, for which device, and where to write it.

use coupler_core::statistics::ModeSet;
use coupler_core::{CouplerConfig, InputField, Mode};
use num_complex::Complex64;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{CliError, Result};
use crate::fields::{format_complex, Field, Param, Section};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Sweep,
    PhaseDiagram,
    PhotonDist,
    OracleCheck,
}

impl Command {
    pub const ALL: [Command; 5] = [
        Command::Evolve,
        Command::Sweep,
        Command::PhaseDiagram,
        Command::PhotonDist,
        Command::OracleCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::PhaseDiagram => "phase-diagram",
            Command::PhotonDist => "photon-dist",
            Command::OracleCheck => "oracle-check",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s}"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `steps` equally spaced points from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.max
                } else {
                    self.min + (self.max - self.min) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::Scenario(format!("{what}: bounds must be finite")));
        }
        if self.steps < 2 {
            return Err(CliError::Scenario(format!("{what}: at least 2 steps needed, got {}", self.steps)));
        }
        if !(self.max > self.min) {
            return Err(CliError::Scenario(format!("{what}: max must exceed min")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub param: Param,
    pub range: Range,
}

/// Grid over the global mismatch Δk and the total linear coupling |κ_S| + |κ_I|.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub dk: Range,
    pub coupling: Range,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Lambda,
    VarQ,
    VarP,
    MeanW,
    VarW,
    /// ⟨ΔW_i ΔW_j⟩ of a pair.
    CrossW,
    /// Reduced factorial moment R_k, k = 2..=5.
    Reduced(usize),
}

impl Quantity {
    pub const ALL: [Quantity; 10] = [
        Quantity::Lambda,
        Quantity::VarQ,
        Quantity::VarP,
        Quantity::MeanW,
        Quantity::VarW,
        Quantity::CrossW,
        Quantity::Reduced(2),
        Quantity::Reduced(3),
        Quantity::Reduced(4),
        Quantity::Reduced(5),
    ];

    pub fn name(self) -> String {
        match self {
            Quantity::Lambda => "lambda".into(),
            Quantity::VarQ => "var_q".into(),
            Quantity::VarP => "var_p".into(),
            Quantity::MeanW => "mean_w".into(),
            Quantity::VarW => "var_w".into(),
            Quantity::CrossW => "cross_w".into(),
            Quantity::Reduced(k) => format!("r{k}"),
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Quantity::MeanW => "photons",
            Quantity::VarW | Quantity::CrossW => "photons^2",
            _ => "1",
        }
    }

    pub fn lookup(s: &str) -> Option<Quantity> {
        Quantity::ALL.into_iter().find(|q| q.name() == s)
    }
}

pub fn mode_set_name(m: &ModeSet) -> String {
    match m {
        ModeSet::Single(a) => a.name().to_string(),
        ModeSet::Pair(a, b) => format!("{}{}", a.name(), b.name()),
    }
}

pub fn parse_mode_set(s: &str) -> Result<ModeSet, String> {
    let parse = |t: &str| t.parse::<Mode>().map_err(|_| format!("unknown mode {t}"));
    match s.len() {
        2 => Ok(ModeSet::Single(parse(s)?)),
        4 => ModeSet::pair(parse(&s[..2])?, parse(&s[2..])?).map_err(|e| e.to_string()),
        _ => Err(format!("expected a mode like S1 or a pair like S1I2, got {s}")),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub command: Command,
    pub title: String,
    pub device: CouplerConfig,
    pub input: InputField,
    /// Positions for z-scans.
    pub z: Option<Range>,
    /// Interaction length for sweeps.
    pub length: Option<f64>,
    pub sweep: Option<Sweep>,
    pub phase: Option<PhaseGrid>,
    pub modes: Vec<ModeSet>,
    pub quantities: Vec<Quantity>,
    /// Fixed p(n) length; automatic when absent.
    pub n_max: Option<usize>,
    pub output: Option<String>,
}

/// A device with unit nonlinear couplings and everything else switched off.
pub fn blank_device() -> CouplerConfig {
    let zero = Complex64::new(0.0, 0.0);
    CouplerConfig {
        nonlinear: [Complex64::new(1.0, 0.0); 2],
        kappa_pump: zero,
        kappa_signal: zero,
        kappa_idler: zero,
        k_pump: [0.0; 2],
        k_signal: [0.0; 2],
        k_idler: [0.0; 2],
        damping: [0.0; 4],
        reservoir: [0.0; 4],
        pump: [zero; 2],
    }
}

impl Scenario {
    pub fn new(command: Command) -> Self {
        Scenario {
            command,
            title: String::new(),
            device: blank_device(),
            input: InputField::vacuum(),
            z: None,
            length: None,
            sweep: None,
            phase: None,
            modes: Vec::new(),
            quantities: Vec::new(),
            n_max: None,
            output: None,
        }
    }

    /// Checks that everything the command needs is present and consistent.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Scenario(format!("{} needs {what}", self.command)))
            }
        };
        let bad: Vec<String> = self.device.validate().iter().map(|v| v.to_string()).collect();
        if !bad.is_empty() {
            return Err(CliError::Scenario(bad.join("; ")));
        }
        self.input.validate()?;
        if let Some(z) = &self.z {
            z.check("z grid")?;
            if z.min < 0.0 {
                return Err(CliError::Scenario("z grid must start at z >= 0".into()));
            }
        }
        match self.command {
            Command::Evolve | Command::OracleCheck => need(self.z.is_some(), "a z grid")?,
            Command::PhotonDist => {
                need(self.z.is_some(), "a z grid")?;
                need(self.modes.len() == 1, "exactly one mode set")?;
            }
            Command::Sweep => {
                need(self.sweep.is_some(), "a [sweep] section")?;
                need(self.length.is_some_and(|l| l >= 0.0 && l.is_finite()), "a nonnegative length")?;
                self.sweep.unwrap().range.check("sweep")?;
            }
            Command::PhaseDiagram => {
                need(self.phase.is_some(), "a [phase] section")?;
                let p = self.phase.unwrap();
                p.dk.check("dk")?;
                p.coupling.check("coupling")?;
                if p.coupling.min < 0.0 {
                    return Err(CliError::Scenario("coupling range must be nonnegative".into()));
                }
            }
        }
        if matches!(self.command, Command::Evolve | Command::Sweep) {
            need(!self.modes.is_empty(), "at least one mode set")?;
            need(!self.quantities.is_empty(), "at least one quantity")?;
            for m in &self.modes {
                if matches!(m, ModeSet::Single(_)) && self.quantities.contains(&Quantity::CrossW) {
                    return Err(CliError::Scenario(format!(
                        "cross_w needs a mode pair, got {}",
                        mode_set_name(m)
                    )));
                }
            }
        }
        Ok(())
    }

    /// The scenario as a configuration file; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        s.push_str("[scenario]\n");
        kv(&mut s, "command", self.command.to_string());
        if !self.title.is_empty() {
            kv(&mut s, "title", self.title.clone());
        }
        if let Some(o) = &self.output {
            kv(&mut s, "output", o.clone());
        }
        for (section, header) in [(Section::Device, "[device]"), (Section::Input, "[input]")] {
            s.push('\n');
            s.push_str(header);
            s.push('\n');
            for f in Field::all().into_iter().filter(|f| f.section() == section) {
                let v = f.get(&self.device, &self.input);
                let text = if f.is_complex() { format_complex(v) } else { v.re.to_string() };
                kv(&mut s, &f.name(), text);
            }
        }
        if self.z.is_some() || self.length.is_some() {
            s.push_str("\n[grid]\n");
            if let Some(z) = &self.z {
                kv(&mut s, "z_min", z.min.to_string());
                kv(&mut s, "z_max", z.max.to_string());
                kv(&mut s, "z_steps", z.steps.to_string());
            }
            if let Some(l) = self.length {
                kv(&mut s, "length", l.to_string());
            }
        }
        if let Some(sw) = &self.sweep {
            s.push_str("\n[sweep]\n");
            kv(&mut s, "parameter", sw.param.to_string());
            kv(&mut s, "min", sw.range.min.to_string());
            kv(&mut s, "max", sw.range.max.to_string());
            kv(&mut s, "steps", sw.range.steps.to_string());
        }
        if let Some(p) = &self.phase {
            s.push_str("\n[phase]\n");
            kv(&mut s, "dk_min", p.dk.min.to_string());
            kv(&mut s, "dk_max", p.dk.max.to_string());
            kv(&mut s, "dk_steps", p.dk.steps.to_string());
            kv(&mut s, "coupling_min", p.coupling.min.to_string());
            kv(&mut s, "coupling_max", p.coupling.max.to_string());
            kv(&mut s, "coupling_steps", p.coupling.steps.to_string());
        }
        if !self.modes.is_empty() || !self.quantities.is_empty() || self.n_max.is_some() {
            s.push_str("\n[observe]\n");
            if !self.modes.is_empty() {
                kv(&mut s, "modes", self.modes.iter().map(mode_set_name).collect::<Vec<_>>().join(", "));
            }
            if !self.quantities.is_empty() {
                kv(&mut s, "quantities", self.quantities.iter().map(|q| q.name()).collect::<Vec<_>>().join(", "));
            }
            if let Some(n) = self.n_max {
                kv(&mut s, "n_max", n.to_string());
            }
        }
        s
    }
}
