use coupler_core::noise::{anchored_images, evolve, symmetry_complete};
use coupler_core::oracle::{integrate_moments, max_moment_step};
use coupler_core::sampling::{random_config, random_input, rng, DrawSpec};
use coupler_core::Mode;

#[test]
fn analytic_path_matches_moment_ode() {
    let mut r = rng(7);
    let mut worst = (0.0f64, 0.0f64);
    for case in 0..12 {
        let cfg = random_config(&mut r, DrawSpec::generic());
        let input = random_input(&mut r, true);
        let z = 0.8;
        let a = evolve(&cfg, &input, z).unwrap();
        let o = integrate_moments(&cfg, &input, z, max_moment_step(&cfg)).unwrap().field();
        let dm = Mode::ALL.iter().map(|&m| (a.mean(m) - o.mean(m)).norm()).fold(0.0, f64::max);
        let dn = a.noise.max_abs_diff(&o.noise);
        worst = (worst.0.max(dm), worst.1.max(dn));
        assert!(dm < 1e-8, "case {case}: means differ by {dm:e}");
        assert!(dn < 1e-6, "case {case}: noise differs by {dn:e}");
    }
    eprintln!("worst mean/noise deviation {:e} {:e}", worst.0, worst.1);
}

#[test]
fn anchored_formulas_match_general_path() {
    let mut r = rng(11);
    for case in 0..20 {
        let cfg = random_config(&mut r, DrawSpec::generic());
        let input = random_input(&mut r, true);
        let z = 0.9;
        let a = evolve(&cfg, &input, z).unwrap();
        let images = anchored_images(&cfg, &input, z).unwrap();
        let b = symmetry_complete(z, &images);
        let scale = 1.0 + a.noise.normal().camax();
        let d = a.noise.max_abs_diff(&b);
        assert!(d < 1e-9 * scale, "case {case}: {d:e}");
    }
}
