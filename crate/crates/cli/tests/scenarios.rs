use coupler_cli::scenario::{blank_device, PhaseGrid, Quantity, Range, Sweep};
use coupler_cli::fields::Param;
use coupler_cli::{execute, load, parse_config, run, Command, Scenario};
use coupler_core::statistics::ModeSet;
use coupler_core::{InputField, InputMode, Mode};
use num_complex::Complex64 as C64;
use std::path::PathBuf;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.conf"))
}

const FIGURES: [&str; 6] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

#[test]
fn bundled_scenarios_round_trip() {
    for name in FIGURES {
        let sc = load(&bundled(name)).unwrap();
        let again = parse_config(&sc.to_text()).unwrap();
        assert_eq!(sc, again, "{name}");
    }
}

#[test]
fn awkward_values_round_trip() {
    let mut sc = Scenario::new(Command::Sweep);
    sc.title = "odd numbers".into();
    sc.device = blank_device();
    sc.device.kappa_signal = C64::new(0.1 + 0.2, -1e-17);
    sc.device.pump = [C64::new(-0.0, 1.0 / 3.0), C64::new(1e300, -2.5e-300)];
    sc.device.k_pump = [std::f64::consts::PI, -7.0];
    sc.device.damping = [0.2, 0.0, 1e-9, 3.0];
    let mut modes = [InputMode::default(); 4];
    modes[0] = InputMode { amplitude: C64::new(1.0, -1.0), squeeze: 0.3, squeeze_phase: -2.0, chaotic: 0.01 };
    sc.input = InputField { modes };
    sc.length = Some(1.2);
    sc.sweep = Some(Sweep {
        param: Param::lookup("abs_kappa_I").unwrap(),
        range: Range { min: 0.0, max: 2.0, steps: 7 },
    });
    sc.modes = vec![ModeSet::Single(Mode::I2), ModeSet::pair(Mode::S1, Mode::I2).unwrap()];
    sc.quantities = vec![Quantity::Lambda, Quantity::Reduced(5)];
    sc.n_max = Some(40);
    assert_eq!(parse_config(&sc.to_text()).unwrap(), sc);

    let mut ph = Scenario::new(Command::PhaseDiagram);
    ph.phase = Some(PhaseGrid {
        dk: Range { min: -1.0, max: 1.0, steps: 3 },
        coupling: Range { min: 0.0, max: 0.5, steps: 2 },
    });
    ph.output = Some("map.csv".into());
    assert_eq!(parse_config(&ph.to_text()).unwrap(), ph);
}

#[test]
fn output_is_deterministic() {
    for name in ["fig3", "fig5", "fig7"] {
        let sc = load(&bundled(name)).unwrap();
        let a = execute(&sc).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| execute(&sc).unwrap());
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn every_bundled_scenario_runs() {
    for name in FIGURES {
        let sc = load(&bundled(name)).unwrap();
        let table = run(&sc).unwrap();
        assert!(!table.rows.is_empty(), "{name}");
        assert!(table.rows.iter().all(|r| r.len() == table.columns.len()), "{name}");
    }
}

#[test]
fn rendered_output_layout() {
    let sc = load(&bundled("fig7")).unwrap();
    let text = execute(&sc).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# coupler "));
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "k_P2[1/L],mean_w_S1I1[photons],mean_w_S2I2[photons]");
    assert_eq!(body.len(), 1 + 201);
    // the metadata block is itself a loadable scenario
    let meta: String = text
        .lines()
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{}\n", l.trim_start_matches('#').trim_start()))
        .collect();
    assert_eq!(parse_config(&meta).unwrap(), sc);
}

#[test]
fn undefined_moments_render_as_nan() {
    let sc = load(&bundled("fig4")).unwrap();
    let text = execute(&sc).unwrap();
    let first = text.lines().find(|l| l.starts_with("0.0")).unwrap();
    assert!(first.ends_with("nan,nan,nan,nan"), "{first}");
}
