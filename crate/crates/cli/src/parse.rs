//! Line-oriented `key = value` scenario files with `[section]` headers.
//!
//! `#` starts a comment. Keys appearing before any header are accepted if
//! they are known at all; after a header they must belong to it.

use num_complex::Complex64;

use crate::error::{CliError, Result};
use crate::fields::{Field, Param, Section};
use crate::scenario::{parse_mode_set, Command, PhaseGrid, Quantity, Range, Scenario, Sweep};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    Scenario,
    Field(Section),
    Grid,
    Sweep,
    Phase,
    Observe,
}

impl Block {
    fn from_header(s: &str) -> Option<Block> {
        Some(match s {
            "scenario" => Block::Scenario,
            "device" => Block::Field(Section::Device),
            "input" => Block::Field(Section::Input),
            "grid" => Block::Grid,
            "sweep" => Block::Sweep,
            "phase" => Block::Phase,
            "observe" => Block::Observe,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Block::Scenario => "scenario",
            Block::Field(Section::Device) => "device",
            Block::Field(Section::Input) => "input",
            Block::Grid => "grid",
            Block::Sweep => "sweep",
            Block::Phase => "phase",
            Block::Observe => "observe",
        }
    }

    fn of_key(key: &str) -> Option<Block> {
        if let Some(f) = Field::lookup(key) {
            return Some(Block::Field(f.section()));
        }
        Some(match key {
            "command" | "title" | "output" => Block::Scenario,
            "z_min" | "z_max" | "z_steps" | "length" => Block::Grid,
            "parameter" | "min" | "max" | "steps" => Block::Sweep,
            "dk_min" | "dk_max" | "dk_steps" | "coupling_min" | "coupling_max" | "coupling_steps" => Block::Phase,
            "modes" | "quantities" | "n_max" => Block::Observe,
            _ => return None,
        })
    }
}

/// Partially filled ranges, completed once the whole file is read.
#[derive(Default)]
struct Partial {
    command: Option<Command>,
    z: [Option<f64>; 2],
    z_steps: Option<usize>,
    sweep_param: Option<Param>,
    sweep: [Option<f64>; 2],
    sweep_steps: Option<usize>,
    dk: [Option<f64>; 2],
    dk_steps: Option<usize>,
    coupling: [Option<f64>; 2],
    coupling_steps: Option<usize>,
}

fn range(lo: Option<f64>, hi: Option<f64>, steps: Option<usize>, what: &str) -> Result<Option<Range>> {
    match (lo, hi, steps) {
        (None, None, None) => Ok(None),
        (Some(min), Some(max), Some(steps)) => Ok(Some(Range { min, max, steps })),
        _ => Err(CliError::Scenario(format!("{what}: min, max and steps must all be given"))),
    }
}

pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut sc = Scenario::new(Command::Evolve);
    let mut part = Partial::default();
    let mut block: Option<Block> = None;

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let indent = content.len() - content.trim_start().len();
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |col: usize, msg: String| CliError::Parse {
            line: line_no,
            column: col + 1,
            message: msg,
        };

        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(indent, "unterminated section header".into()))?
                .trim();
            block = Some(Block::from_header(name).ok_or_else(|| err(indent + 1, format!("unknown section [{name}]")))?);
            continue;
        }

        let eq = trimmed
            .find('=')
            .ok_or_else(|| err(indent, "expected key = value".into()))?;
        let key = trimmed[..eq].trim();
        let value_start = indent + eq + 1 + (trimmed[eq + 1..].len() - trimmed[eq + 1..].trim_start().len());
        let value = trimmed[eq + 1..].trim();
        let verr = |msg: String| err(value_start, msg);

        let home = Block::of_key(key).ok_or_else(|| err(indent, format!("unknown key {key}")))?;
        if let Some(b) = block {
            if b != home {
                return Err(err(indent, format!("key {key} belongs to [{}], not [{}]", home.name(), b.name())));
            }
        }
        if value.is_empty() {
            return Err(verr(format!("missing value for {key}")));
        }

        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| verr(format!("{key}: expected a real number, got {value}")))
        };
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| verr(format!("{key}: expected a nonnegative integer, got {value}")))
        };

        if let Some(f) = Field::lookup(key) {
            let v = if f.is_complex() {
                let compact: String = value.chars().filter(|c| !c.is_whitespace()).collect();
                compact
                    .parse::<Complex64>()
                    .map_err(|_| verr(format!("{key}: expected a complex number like 1.5-2i, got {value}")))?
            } else {
                Complex64::new(real()?, 0.0)
            };
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(verr(format!("{key}: value must be finite")));
            }
            f.set(&mut sc.device, &mut sc.input, v);
            continue;
        }

        match key {
            "command" => part.command = Some(value.parse().map_err(verr)?),
            "title" => sc.title = value.to_string(),
            "output" => sc.output = Some(value.to_string()),
            "z_min" => part.z[0] = Some(real()?),
            "z_max" => part.z[1] = Some(real()?),
            "z_steps" => part.z_steps = Some(count()?),
            "length" => sc.length = Some(real()?),
            "parameter" => {
                part.sweep_param =
                    Some(Param::lookup(value).ok_or_else(|| verr(format!("unknown sweep parameter {value}")))?)
            }
            "min" => part.sweep[0] = Some(real()?),
            "max" => part.sweep[1] = Some(real()?),
            "steps" => part.sweep_steps = Some(count()?),
            "dk_min" => part.dk[0] = Some(real()?),
            "dk_max" => part.dk[1] = Some(real()?),
            "dk_steps" => part.dk_steps = Some(count()?),
            "coupling_min" => part.coupling[0] = Some(real()?),
            "coupling_max" => part.coupling[1] = Some(real()?),
            "coupling_steps" => part.coupling_steps = Some(count()?),
            "modes" => {
                sc.modes = value
                    .split(',')
                    .map(|t| parse_mode_set(t.trim()).map_err(verr))
                    .collect::<Result<_>>()?
            }
            "quantities" => {
                sc.quantities = value
                    .split(',')
                    .map(|t| {
                        let t = t.trim();
                        Quantity::lookup(t).ok_or_else(|| verr(format!("unknown quantity {t}")))
                    })
                    .collect::<Result<_>>()?
            }
            "n_max" => sc.n_max = Some(count()?),
            _ => unreachable!("key {key} has a home block but no handler"),
        }
    }

    sc.command = part
        .command
        .ok_or_else(|| CliError::Scenario("missing command".into()))?;
    sc.z = range(part.z[0], part.z[1], part.z_steps, "z grid")?;
    sc.sweep = match (part.sweep_param, range(part.sweep[0], part.sweep[1], part.sweep_steps, "sweep")?) {
        (None, None) => None,
        (Some(param), Some(range)) => Some(Sweep { param, range }),
        _ => return Err(CliError::Scenario("sweep: parameter, min, max and steps must all be given".into())),
    };
    sc.phase = match (
        range(part.dk[0], part.dk[1], part.dk_steps, "dk")?,
        range(part.coupling[0], part.coupling[1], part.coupling_steps, "coupling")?,
    ) {
        (None, None) => None,
        (Some(dk), Some(coupling)) => Some(PhaseGrid { dk, coupling }),
        _ => return Err(CliError::Scenario("phase: both dk and coupling ranges are needed".into())),
    };
    Ok(sc)
}
