//! Executes scenarios and renders their results as delimited text.

use coupler_core::dynamics::classify_regime;
use coupler_core::oracle::{integrate_moments, max_moment_step};
use coupler_core::statistics::{
    intensity_correlation, intensity_moments, photon_number_distribution, principal_squeeze_pair,
    principal_squeeze_single, quadrature_variances, quadrature_variances_single, reduced_factorial_moments, ModeSet,
};
use coupler_core::{derive_params, Error, Evolution, FieldState, Mode};
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt::Write as _;

use crate::error::Result;
use crate::scenario::{mode_set_name, Command, Quantity, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(&'static str),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => format!("{x:.12e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.to_string(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(n) => Some(n as f64),
            Cell::Text(_) => None,
        }
    }
}

/// Column names (with units) and rows in output order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c == name || c.split('[').next() == Some(name))
    }

    /// Numeric values of one column.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let k = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect()
    }
}

fn stat_columns(sc: &Scenario) -> Vec<String> {
    let mut cols = Vec::new();
    for m in &sc.modes {
        for q in &sc.quantities {
            cols.push(format!("{}_{}[{}]", q.name(), mode_set_name(m), q.unit()));
        }
    }
    cols
}

/// The requested quantities of every mode set, in column order.
fn observe(sc: &Scenario, st: &FieldState) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for &set in &sc.modes {
        let reduced = if sc.quantities.iter().any(|q| matches!(q, Quantity::Reduced(_))) {
            match reduced_factorial_moments(st, set, 5) {
                Ok(r) => Some(r),
                Err(Error::UndefinedMoment(_)) => None,
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        let (quad, lambda) = match set {
            ModeSet::Single(m) => (quadrature_variances_single(&st.noise, m), principal_squeeze_single(&st.noise, m)),
            ModeSet::Pair(i, j) => (quadrature_variances(&st.noise, i, j)?, principal_squeeze_pair(&st.noise, i, j)?),
        };
        for q in &sc.quantities {
            let v = match *q {
                Quantity::Lambda => lambda,
                Quantity::VarQ => quad.0,
                Quantity::VarP => quad.1,
                Quantity::MeanW => intensity_moments(st, set)?.mean,
                Quantity::VarW => intensity_moments(st, set)?.variance,
                Quantity::CrossW => match set {
                    ModeSet::Pair(i, j) => intensity_correlation(st, i, j)?,
                    ModeSet::Single(_) => f64::NAN,
                },
                Quantity::Reduced(k) => reduced.as_ref().map_or(f64::NAN, |r| r[k - 2]),
            };
            out.push(Cell::Num(v));
        }
    }
    Ok(out)
}

fn evolve_table(sc: &Scenario) -> Result<Table> {
    let ev = Evolution::new(&sc.device, &sc.input)?;
    let zs = sc.z.expect("validated").points();
    let rows = zs
        .par_iter()
        .map(|&z| {
            let st = ev.at(z)?;
            let mut row = vec![Cell::Num(z)];
            row.extend(observe(sc, &st)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec!["z[L]".to_string()];
    columns.extend(stat_columns(sc));
    Ok(Table { columns, rows })
}

fn sweep_table(sc: &Scenario) -> Result<Table> {
    let sw = sc.sweep.expect("validated");
    let length = sc.length.expect("validated");
    let rows = sw
        .range
        .points()
        .par_iter()
        .map(|&x| {
            let (mut dev, mut inp) = (sc.device.clone(), sc.input);
            sw.param.apply(&mut dev, &mut inp, x);
            let st = Evolution::new(&dev, &inp)?.at(length)?;
            let mut row = vec![Cell::Num(x)];
            row.extend(observe(sc, &st)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut columns = vec![format!("{}[{}]", sw.param, sw.param.unit())];
    columns.extend(stat_columns(sc));
    Ok(Table { columns, rows })
}

/// Sets κ_S = κ_I = s/2 (keeping their phases) and shifts both pump
/// wavevectors so that the global mismatch equals `dk`.
pub fn phase_point(base: &coupler_core::CouplerConfig, dk: f64, s: f64) -> coupler_core::CouplerConfig {
    let mut dev = base.clone();
    let half = |k: Complex64| {
        let phase = if k.norm() > 0.0 { k.arg() } else { 0.0 };
        Complex64::from_polar(0.5 * s, phase)
    };
    dev.kappa_signal = half(base.kappa_signal);
    dev.kappa_idler = half(base.kappa_idler);
    let shift = dk - base.global_mismatch();
    dev.k_pump = [base.k_pump[0] - shift, base.k_pump[1] - shift];
    dev
}

fn phase_table(sc: &Scenario) -> Result<Table> {
    let grid = sc.phase.expect("validated");
    let points: Vec<(f64, f64)> = grid
        .dk
        .points()
        .into_iter()
        .flat_map(|dk| grid.coupling.points().into_iter().map(move |s| (dk, s)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(dk, s)| {
            let dp = derive_params(&phase_point(&sc.device, dk, s))?;
            let rep = classify_regime(&dp)?;
            Ok(vec![
                Cell::Num(dk),
                Cell::Num(s),
                Cell::Text(rep.regime.map_or("none", |r| r.label())),
                Cell::Num(rep.max_real),
                Cell::Num(rep.governing_real),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: ["dk[1/L]", "coupling[1/L]", "regime[-]", "max_re_lambda[1/L]", "governing_re_lambda[1/L]"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

fn photon_table(sc: &Scenario) -> Result<Table> {
    let ev = Evolution::new(&sc.device, &sc.input)?;
    let set = sc.modes[0];
    let blocks = sc
        .z
        .expect("validated")
        .points()
        .par_iter()
        .map(|&z| {
            let d = photon_number_distribution(&ev.at(z)?, set, sc.n_max)?;
            Ok(d
                .p
                .iter()
                .enumerate()
                .map(|(n, &p)| vec![Cell::Num(z), Cell::Int(n), Cell::Num(p), Cell::Num(d.tail)])
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let name = mode_set_name(&set);
    Ok(Table {
        columns: vec![
            "z[L]".into(),
            "n[photons]".into(),
            format!("p_{name}[1]"),
            format!("tail_{name}[1]"),
        ],
        rows: blocks.into_iter().flatten().collect(),
    })
}

fn oracle_table(sc: &Scenario) -> Result<Table> {
    let ev = Evolution::new(&sc.device, &sc.input)?;
    let step = max_moment_step(&sc.device);
    let rows = sc
        .z
        .expect("validated")
        .points()
        .par_iter()
        .map(|&z| {
            let a = ev.at(z)?;
            let o = integrate_moments(&sc.device, &sc.input, z, step)?.field();
            let dm = Mode::ALL
                .iter()
                .map(|&m| (a.mean(m) - o.mean(m)).norm())
                .fold(0.0, f64::max);
            Ok(vec![Cell::Num(z), Cell::Num(dm), Cell::Num(a.noise.max_abs_diff(&o.noise))])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        columns: ["z[L]", "mean_deviation[1]", "moment_deviation[photons]"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

pub fn run(sc: &Scenario) -> Result<Table> {
    sc.validate()?;
    match sc.command {
        Command::Evolve => evolve_table(sc),
        Command::Sweep => sweep_table(sc),
        Command::PhaseDiagram => phase_table(sc),
        Command::PhotonDist => photon_table(sc),
        Command::OracleCheck => oracle_table(sc),
    }
}

/// Metadata block echoing the scenario, a header line and comma-separated rows.
pub fn render(sc: &Scenario, table: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# coupler {}", env!("CARGO_PKG_VERSION"));
    for line in sc.to_text().lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            let _ = writeln!(s, "# {line}");
        }
    }
    s.push_str(&table.columns.join(","));
    s.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
