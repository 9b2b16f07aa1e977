use coupler_core::dynamics::{adjugate_coefficients, char_poly, find_roots, residue_matrices, Propagator};
use coupler_core::model::{derive_params, CouplerConfig, DerivedParams};
use coupler_core::sampling::{random_config, rng, DrawSpec};
use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

type Mat = Matrix4<C64>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// exp(Az) by scaling and squaring of a long Taylor series.
fn expm(a: &Mat, z: f64) -> Mat {
    let norm = (a * C64::from(z)).norm();
    let squarings = (norm.max(1e-300).log2().ceil().max(0.0) as u32) + 4;
    let b = a * C64::from(z / 2f64.powi(squarings as i32));
    let mut term = Mat::identity();
    let mut acc = Mat::identity();
    for k in 1..30 {
        term = term * b / C64::from(k as f64);
        acc += term;
    }
    for _ in 0..squarings {
        acc = acc * acc;
    }
    acc
}

/// Coefficients of det(x − A) by Faddeev–LeVerrier: [1, c₁, c₂, c₃, c₄].
fn faddeev_leverrier(a: &Mat) -> [C64; 5] {
    let mut coeffs = [C64::from(1.0); 5];
    let mut m = Mat::zeros();
    for k in 1..=4 {
        m = a * m + Mat::identity() * coeffs[k - 1];
        coeffs[k] = -(a * m).trace() / C64::from(k as f64);
    }
    coeffs
}

fn max_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn generic(seed: u64) -> DerivedParams {
    let mut r = rng(seed);
    derive_params(&random_config(&mut r, DrawSpec::generic())).unwrap()
}

#[test]
fn char_poly_matches_faddeev_leverrier() {
    for seed in 0..50 {
        let dp = generic(seed);
        let p = char_poly(&dp).coefficients();
        let q = faddeev_leverrier(&dp.drift_matrix());
        for k in 0..5 {
            assert!((p[k] - q[k]).norm() < 1e-10 * (1.0 + q[k].norm()), "seed {seed} k {k}");
        }
    }
}

#[test]
fn adjugate_matches_matrix_identities() {
    for seed in 0..50 {
        let dp = generic(seed);
        let n = dp.drift_matrix();
        let p = char_poly(&dp);
        let id = Mat::identity();
        let b = n + id * p.a;
        let cm = n * n + n * p.a + id * p.b;
        let d = n * n * n + n * n * p.a + n * p.b + id * p.c;
        let adj = adjugate_coefficients(&dp);
        let scale = 1.0 + d.norm();
        assert!(max_diff(&adj.b, &b) < 1e-12 * scale, "seed {seed}");
        assert!(max_diff(&adj.c, &cm) < 1e-12 * scale, "seed {seed}");
        assert!(max_diff(&adj.d, &d) < 1e-12 * scale, "seed {seed}");
    }
}

#[test]
fn derivatives_at_origin_are_drift_powers() {
    for seed in 0..50 {
        let dp = generic(seed);
        let n = dp.drift_matrix();
        let prop = Propagator::new(&dp).unwrap();
        let mut power = Mat::identity();
        for k in 1..=3 {
            power *= n;
            let d = prop.x_derivative_at_zero(k);
            assert!(max_diff(&d, &power) < 1e-9 * (1.0 + power.norm()), "seed {seed} k {k}");
        }
    }
}

#[test]
fn vieta_sum() {
    for seed in 0..100 {
        let p = char_poly(&generic(seed));
        let roots = find_roots(&p).unwrap();
        let s: C64 = roots.values.iter().sum();
        assert!((s + p.a).norm() < 1e-10 * (1.0 + p.a.norm()));
    }
}

#[test]
fn residues_reproduce_matrix_exponential() {
    for seed in 0..30 {
        let dp = generic(seed);
        let prop = Propagator::new(&dp).unwrap();
        let roots = prop.roots();
        if !roots.is_simple() {
            continue;
        }
        let res = residue_matrices(&roots.values, prop.adjugate()).unwrap();
        for z in [0.3, 1.7] {
            let mut x = Mat::zeros();
            for (a, l) in res.iter().zip(roots.values) {
                x += a * (l * z).exp();
            }
            let e = expm(&dp.drift_matrix(), z);
            assert!(max_diff(&x, &e) < 1e-9 * (1.0 + e.norm()), "seed {seed}");
        }
    }
}

/// Two identical uncoupled guides: each gain root is double.
fn double_root_config() -> CouplerConfig {
    CouplerConfig {
        kappa_signal: c(0.0, 0.0),
        kappa_idler: c(0.0, 0.0),
        damping: [0.1; 4],
        reservoir: [0.0; 4],
        pump: [c(0.7, 0.2); 2],
        ..Default::default()
    }
}

/// κ = |G| in the symmetric coupler: the drift is nilpotent up to the damping shift.
fn quadruple_root_config() -> CouplerConfig {
    CouplerConfig {
        kappa_signal: c(1.0, 0.0),
        kappa_idler: c(1.0, 0.0),
        damping: [0.25; 4],
        reservoir: [0.0; 4],
        pump: [c(0.6, 0.8); 2],
        ..Default::default()
    }
}

#[test]
fn confluent_propagators_match_matrix_exponential() {
    for (cfg, mult) in [(double_root_config(), 2), (quadruple_root_config(), 4)] {
        let dp = derive_params(&cfg).unwrap();
        let prop = Propagator::new(&dp).unwrap();
        assert!(prop.is_confluent());
        let max_mult = prop.roots().clusters.iter().map(|c| c.multiplicity()).max().unwrap();
        assert_eq!(max_mult, mult);
        for z in [0.1, 0.9, 2.4] {
            let e = expm(&dp.drift_matrix(), z);
            assert!(max_diff(&prop.x(z), &e) < 1e-9 * (1.0 + e.norm()), "mult {mult} z {z}");
        }
    }
}

#[test]
fn semigroup_property() {
    for seed in 0..40 {
        let dp = generic(seed);
        let prop = Propagator::new(&dp).unwrap();
        let (z1, z2) = (0.4, 0.75);
        let lhs = prop.x(z1 + z2);
        let rhs = prop.x(z2) * prop.x(z1);
        assert!(max_diff(&lhs, &rhs) < 1e-9 * (1.0 + lhs.norm()), "seed {seed}");
    }
}

#[test]
fn lossless_propagator_preserves_commutators() {
    let j = Mat::from_diagonal(&nalgebra::Vector4::new(c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0)));
    let mut r = rng(3);
    for set in 0..100 {
        let dp = derive_params(&random_config(&mut r, DrawSpec::lossless())).unwrap();
        let prop = Propagator::new(&dp).unwrap();
        for z in [0.1, 0.5, 1.0, 2.0] {
            let phi = prop.phi(z);
            let lhs = phi * j * phi.adjoint();
            let scale = 1.0 + phi.norm_squared();
            assert!(max_diff(&lhs, &j) < 1e-9 * scale, "set {set} z {z}");
        }
    }
}

#[test]
fn frame_factor_is_diagonal_phase() {
    let dp = generic(5);
    let prop = Propagator::new(&dp).unwrap();
    let m = prop.m(1.3);
    let mm = m * m.adjoint();
    assert!(max_diff(&mm, &Mat::identity()) < 1e-15);
    assert_eq!(prop.m(0.0), Mat::identity());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_is_matrix_exponential(seed in any::<u64>(), z in 0.0f64..2.0) {
        let dp = generic(seed);
        let prop = Propagator::new(&dp).unwrap();
        let e = expm(&dp.drift_matrix(), z);
        prop_assert!(max_diff(&prop.x(z), &e) < 1e-9 * (1.0 + e.norm()));
    }

    #[test]
    fn roots_are_roots(seed in any::<u64>()) {
        let p = char_poly(&generic(seed));
        let roots = find_roots(&p).unwrap();
        for l in roots.values {
            prop_assert!(p.eval(l).norm() <= 1e-9 * 1f64.max(p.d.norm()).max(l.norm().powi(4)));
        }
    }
}
