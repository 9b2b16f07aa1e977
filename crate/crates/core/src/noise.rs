//! Normal-ordered second moments (noise functions) and their propagation.
//!
//! The fluctuation vector v = (ΔA_S1, ΔA_S2, ΔA_I1†, ΔA_I2†) evolves as
//! v(z) = Φ(z)v(0) + reservoir term. Its moments ⟨v_a†v_b⟩ and ⟨v_a v_b⟩ are
//! propagated by congruence with Φ, the reservoir adding integrals of products
//! of propagator entries. Physical moments are stored in the mode basis:
//! `normal[j][k] = ⟨ΔA_j†ΔA_k⟩` and `anomalous[j][k] = ⟨ΔA_jΔA_k⟩`.

use nalgebra::{Matrix4, SMatrix};
use num_complex::Complex64;

use crate::dynamics::{propagate_mean, to_frame_vector, Propagator};
use crate::error::{Error, Result};
use crate::model::{derive_params, input_moments, CouplerConfig, InputField, Mode};

type C64 = Complex64;
type Mat = Matrix4<C64>;
pub type Mat8 = SMatrix<C64, 8, 8>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Eigenvalue tolerance for the positive-semidefiniteness check, relative to
/// the largest covariance entry when that exceeds one.
pub const PSD_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseState {
    z: f64,
    normal: Mat,
    anomalous: Mat,
}

impl NoiseState {
    /// Builds a state from ⟨ΔA_j†ΔA_k⟩ and ⟨ΔA_jΔA_k⟩. The inputs are
    /// symmetrized (Hermitian and symmetric parts respectively).
    pub fn from_matrices(z: f64, normal: Mat, anomalous: Mat) -> Self {
        NoiseState {
            z,
            normal: (normal + normal.adjoint()) * C64::new(0.5, 0.0),
            anomalous: (anomalous + anomalous.transpose()) * C64::new(0.5, 0.0),
        }
    }

    pub fn vacuum(z: f64) -> Self {
        NoiseState::from_matrices(z, Mat::zeros(), Mat::zeros())
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn normal(&self) -> &Mat {
        &self.normal
    }

    pub fn anomalous(&self) -> &Mat {
        &self.anomalous
    }

    /// B_j = ⟨ΔA_j†ΔA_j⟩.
    pub fn b(&self, m: Mode) -> f64 {
        let j = m.index();
        self.normal[(j, j)].re
    }

    /// C_j = ⟨(ΔA_j)²⟩.
    pub fn c(&self, m: Mode) -> C64 {
        let j = m.index();
        self.anomalous[(j, j)]
    }

    /// D_jk = ⟨ΔA_jΔA_k⟩.
    pub fn d(&self, j: Mode, k: Mode) -> C64 {
        self.anomalous[(j.index(), k.index())]
    }

    /// D̄_jk = −⟨ΔA_j†ΔA_k⟩.
    pub fn d_bar(&self, j: Mode, k: Mode) -> C64 {
        -self.normal[(j.index(), k.index())]
    }

    /// Moments of the frame vector v = (ΔA_S1, ΔA_S2, ΔA_I1†, ΔA_I2†):
    /// `(⟨v_a†v_b⟩, ⟨v_a v_b⟩)`. Idler rows of the first matrix are
    /// anti-normally ordered and therefore carry the vacuum unit.
    pub fn to_frame(&self) -> (Mat, Mat) {
        let (n, a) = (&self.normal, &self.anomalous);
        let sig = |j: usize| j < 2;
        let mut nv = Mat::zeros();
        let mut av = Mat::zeros();
        for p in 0..4 {
            for q in 0..4 {
                nv[(p, q)] = match (sig(p), sig(q)) {
                    (true, true) => n[(p, q)],
                    (false, false) => n[(q, p)] + if p == q { ONE } else { ZERO },
                    (true, false) => a[(p, q)].conj(),
                    (false, true) => a[(p, q)],
                };
                av[(p, q)] = match (sig(p), sig(q)) {
                    (true, true) => a[(p, q)],
                    (false, false) => a[(p, q)].conj(),
                    (true, false) => n[(q, p)],
                    (false, true) => n[(p, q)],
                };
            }
        }
        (nv, av)
    }

    /// Inverse of [`NoiseState::to_frame`].
    pub fn from_frame(z: f64, nv: &Mat, av: &Mat) -> Self {
        let sig = |j: usize| j < 2;
        let mut n = Mat::zeros();
        let mut a = Mat::zeros();
        for p in 0..4 {
            for q in 0..4 {
                n[(p, q)] = match (sig(p), sig(q)) {
                    (true, true) => nv[(p, q)],
                    (false, false) => nv[(q, p)] - if p == q { ONE } else { ZERO },
                    (true, false) => av[(p, q)].conj(),
                    (false, true) => av[(p, q)],
                };
                a[(p, q)] = match (sig(p), sig(q)) {
                    (true, true) => av[(p, q)],
                    (false, false) => av[(p, q)].conj(),
                    (true, false) => nv[(p, q)].conj(),
                    (false, true) => nv[(p, q)],
                };
            }
        }
        NoiseState::from_matrices(z, n, a)
    }

    /// The 8×8 matrix ⟨ΔR_a ΔR_b†⟩ with R = (A₁..A₄, A₁†..A₄†):
    /// `[[1 + Nᵀ, M], [M*, N]]`. Positive semidefinite for every quantum state.
    pub fn covariance(&self) -> Mat8 {
        let mut v = Mat8::zeros();
        for j in 0..4 {
            for k in 0..4 {
                v[(j, k)] = self.normal[(k, j)] + if j == k { ONE } else { ZERO };
                v[(j, k + 4)] = self.anomalous[(j, k)];
                v[(j + 4, k)] = self.anomalous[(j, k)].conj();
                v[(j + 4, k + 4)] = self.normal[(j, k)];
            }
        }
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.covariance()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn is_finite(&self) -> bool {
        self.normal.iter().chain(self.anomalous.iter()).all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Fails with [`Error::UnphysicalState`] when the covariance has an
    /// eigenvalue below −[`PSD_TOLERANCE`]·max(1, max entry), and with
    /// [`Error::NumericalFailure`] when some moment is not finite.
    pub fn check_physical(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NumericalFailure {
                what: "non-finite second moments".into(),
                residual: f64::INFINITY,
                bound: f64::MAX,
            });
        }
        let scale = self.normal.camax().max(self.anomalous.camax()).max(1.0);
        let min = self.min_eigenvalue();
        if min < -PSD_TOLERANCE * scale {
            return Err(Error::UnphysicalState { min_eigenvalue: min });
        }
        Ok(())
    }

    /// Largest entrywise deviation from another state.
    pub fn max_abs_diff(&self, other: &NoiseState) -> f64 {
        (self.normal - other.normal)
            .camax()
            .max((self.anomalous - other.anomalous).camax())
    }

    /// Relabels the modes: entry j of the result is entry `perm[j]` of `self`.
    pub fn permuted(&self, perm: [usize; 4]) -> NoiseState {
        let n = Mat::from_fn(|j, k| self.normal[(perm[j], perm[k])]);
        let a = Mat::from_fn(|j, k| self.anomalous[(perm[j], perm[k])]);
        NoiseState::from_matrices(self.z, n, a)
    }
}

/// Mean amplitudes (ordered S₁, S₂, I₁, I₂) and noise at one position.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub means: [C64; 4],
    pub noise: NoiseState,
}

impl FieldState {
    pub fn z(&self) -> f64 {
        self.noise.z()
    }

    pub fn mean(&self, m: Mode) -> C64 {
        self.means[m.index()]
    }

    /// Normal-ordered photon number ⟨A_j†A_j⟩ = B_j + |ξ_j|².
    pub fn photon_number(&self, m: Mode) -> f64 {
        self.noise.b(m) + self.mean(m).norm_sqr()
    }
}

/// ∫₀ᶻ sʳ e^{σs} ds. The upward recursion in r loses accuracy when |σ|z is
/// small compared with r, so the power series is used there instead.
fn power_exp_integral(r: usize, sigma: C64, z: f64) -> C64 {
    if z == 0.0 {
        return ZERO;
    }
    if (sigma * z).norm() < 1.0 + r as f64 {
        power_exp_series(r, sigma, z)
    } else {
        power_exp_recursion(r, sigma, z)
    }
}

/// Σₙ σⁿ z^{n+r+1} / (n! (n+r+1)).
fn power_exp_series(r: usize, sigma: C64, z: f64) -> C64 {
    let x = sigma * z;
    let mut term = C64::new(z.powi(r as i32 + 1), 0.0);
    let mut acc = term / (r as f64 + 1.0);
    for n in 1..400 {
        term *= x / n as f64;
        let add = term / (n + r + 1) as f64;
        acc += add;
        if add.norm() <= 1e-17 * acc.norm() {
            break;
        }
    }
    acc
}

fn power_exp_recursion(r: usize, sigma: C64, z: f64) -> C64 {
    let e = (sigma * z).exp();
    let mut acc = (e - ONE) / sigma;
    let mut zp = 1.0;
    for p in 1..=r {
        zp *= z;
        acc = (e * zp - acc * p as f64) / sigma;
    }
    acc
}

/// Reservoir integrals χ^{ik}_{jl}(z) = ∫₀ᶻ X_ij(s) X*_kl(s) ds.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiTable {
    z: f64,
    entries: Box<[[[[C64; 4]; 4]; 4]; 4]>,
}

impl ChiTable {
    pub fn z(&self) -> f64 {
        self.z
    }

    /// χ^{ik}_{jl}.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.entries[i][j][k][l]
    }

    /// χ_ij = ∫₀ᶻ |X_ij|² ds.
    pub fn diag(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j][i][j].re
    }
}

pub fn chi(prop: &Propagator, z: f64) -> Result<ChiTable> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::InvalidInput(format!("z must be finite and nonnegative, got {z}")));
    }
    let mut entries = Box::new([[[[ZERO; 4]; 4]; 4]; 4]);
    for t in prop.terms() {
        for u in prop.terms() {
            let sigma = t.rate + u.rate.conj();
            for (p, bp) in t.coeffs.iter().enumerate() {
                for (q, bq) in u.coeffs.iter().enumerate() {
                    let w = power_exp_integral(p + q, sigma, z);
                    for i in 0..4 {
                        for j in 0..4 {
                            let x = bp[(i, j)] * w;
                            if x == ZERO {
                                continue;
                            }
                            for k in 0..4 {
                                for l in 0..4 {
                                    entries[i][j][k][l] += x * bq[(k, l)].conj();
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ChiTable { z, entries })
}

/// All second moments at z from the moments at 0.
pub fn propagate_noise(prop: &Propagator, initial: &NoiseState, z: f64) -> Result<NoiseState> {
    let table = chi(prop, z)?;
    Ok(propagate_noise_with(prop, initial, z, &table))
}

fn propagate_noise_with(prop: &Propagator, initial: &NoiseState, z: f64, table: &ChiTable) -> NoiseState {
    let phi = prop.phi(z);
    let m = prop.m(z);
    let q = prop.params().diffusion();
    let (nv0, av0) = initial.to_frame();

    let mut nv = phi.conjugate() * nv0 * phi.transpose();
    let av = phi * av0 * phi.transpose();
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = ZERO;
            for (c, &qc) in q.iter().enumerate() {
                if qc != 0.0 {
                    acc += table.get(b, c, a, c) * qc;
                }
            }
            nv[(a, b)] += m[(a, a)].conj() * m[(b, b)] * acc;
        }
    }
    NoiseState::from_frame(z, &nv, &av)
}

/// Initial state plus the propagator; evaluates the field at any z.
#[derive(Clone, Debug)]
pub struct Evolution {
    prop: Propagator,
    initial: FieldState,
}

impl Evolution {
    pub fn new(config: &CouplerConfig, input: &InputField) -> Result<Self> {
        let dp = derive_params(config)?;
        Ok(Evolution {
            prop: Propagator::new(&dp)?,
            initial: input_moments(input)?,
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    pub fn initial(&self) -> &FieldState {
        &self.initial
    }

    /// Fails with [`Error::NumericalFailure`] when the moments overflow.
    pub fn at(&self, z: f64) -> Result<FieldState> {
        let noise = propagate_noise(&self.prop, &self.initial.noise, z)?;
        let xi = propagate_mean(&self.prop, &to_frame_vector(&self.initial.means), z);
        if !(noise.is_finite() && xi.iter().all(|x| x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::NumericalFailure {
                what: format!("moments overflow at z = {z}"),
                residual: f64::INFINITY,
                bound: f64::MAX,
            });
        }
        Ok(FieldState {
            means: to_frame_vector(&xi),
            noise,
        })
    }
}

pub fn evolve(config: &CouplerConfig, input: &InputField, z: f64) -> Result<FieldState> {
    Evolution::new(config, input)?.at(z)
}

/// The explicitly written S₁-anchored noise functions.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchoredMoments {
    pub b_s1: f64,
    pub c_s1: C64,
    pub d_s1s2: C64,
    pub d_s1i1: C64,
    pub d_s1i2: C64,
    pub d_bar_s1s2: C64,
    pub d_bar_s1i1: C64,
    pub d_bar_s1i2: C64,
}

/// Term-by-term evaluation of the written S₁ noise functions, in terms of X(z),
/// the reservoir integrals and the incident moments (B_j here is B_j(0) + 1).
///
/// Three phase factors are taken as e^{−iΔk z} for D_S1S2 and e^{+iΔk_S z} for
/// D̄_S1S2, and the idler term of D̄_S1I1, D̄_S1I2 carries C_{j+2} unconjugated;
/// these follow from the mode definitions and are pinned by tests against the
/// general path.
pub fn anchored_formulas(prop: &Propagator, input: &InputField, z: f64) -> Result<AnchoredMoments> {
    input.validate()?;
    let x = prop.x(z);
    let t = chi(prop, z)?;
    let dp = prop.params();
    let g = dp.damping;
    let n = dp.reservoir;
    let big_b: Vec<f64> = input.modes.iter().map(|m| m.b0() + 1.0).collect();
    let big_c: Vec<C64> = input.modes.iter().map(|m| m.c0()).collect();
    let [dks1, dks2, dki1, dki2] = dp.dk_aux;
    let ph = |theta: f64| C64::from_polar(1.0, theta * z);

    let mut b_s1 = 0.0;
    for j in 0..4 {
        b_s1 += x[(0, j)].norm_sqr() * big_b[j] + 2.0 * g[j] * n[j] * t.diag(0, j);
    }
    for j in 0..2 {
        b_s1 += 2.0 * g[j + 2] * t.diag(0, j + 2) - x[(0, j)].norm_sqr();
    }

    let mut c_s1 = ZERO;
    let mut d_s1s2 = ZERO;
    let mut d_bar_s1i1 = ZERO;
    let mut d_bar_s1i2 = ZERO;
    for j in 0..2 {
        c_s1 += x[(0, j)].powi(2) * big_c[j] + x[(0, j + 2)].powi(2) * big_c[j + 2].conj();
        d_s1s2 += x[(0, j)] * x[(1, j)] * big_c[j] + x[(0, j + 2)] * x[(1, j + 2)] * big_c[j + 2].conj();
        d_bar_s1i1 += x[(0, j)].conj() * x[(2, j)].conj() * big_c[j].conj()
            + x[(0, j + 2)].conj() * x[(2, j + 2)].conj() * big_c[j + 2];
        d_bar_s1i2 += x[(0, j)].conj() * x[(3, j)].conj() * big_c[j].conj()
            + x[(0, j + 2)].conj() * x[(3, j + 2)].conj() * big_c[j + 2];
    }
    c_s1 *= ph(-2.0 * dks1);
    d_s1s2 *= ph(-dp.dk);
    d_bar_s1i1 *= -ph(dks1 - dki1);
    d_bar_s1i2 *= -ph(dks1 - dki2);

    let cross = |row: usize, phase: C64| {
        let mut acc = ZERO;
        for j in 0..4 {
            acc += x[(0, j)] * x[(row, j)].conj() * big_b[j] + t.get(0, j, row, j) * (2.0 * g[j] * n[j]);
        }
        for j in 0..2 {
            acc += t.get(0, j, row, j) * (2.0 * g[j]) - x[(0, j + 2)] * x[(row, j + 2)].conj();
        }
        acc * phase
    };
    let d_s1i1 = cross(2, ph(-(dks1 + dki1)));
    let d_s1i2 = cross(3, ph(-(dks1 + dki2)));

    let mut d_bar_s1s2 = ZERO;
    for j in 0..4 {
        d_bar_s1s2 += x[(0, j)].conj() * x[(1, j)] * big_b[j] + t.get(1, j, 0, j) * (2.0 * g[j] * n[j]);
    }
    for j in 0..2 {
        d_bar_s1s2 += t.get(1, j + 2, 0, j + 2) * (2.0 * g[j + 2]) - x[(0, j)].conj() * x[(1, j)];
    }
    d_bar_s1s2 *= -ph(dks1 - dks2);

    Ok(AnchoredMoments {
        b_s1,
        c_s1,
        d_s1s2,
        d_s1i1,
        d_s1i2,
        d_bar_s1s2,
        d_bar_s1i1,
        d_bar_s1i2,
    })
}

/// S₁-anchored moments of the four mirror images of one device, in the order
/// identity, guides exchanged, signal and idler exchanged, both exchanged.
pub fn anchored_images(config: &CouplerConfig, input: &InputField, z: f64) -> Result<[AnchoredMoments; 4]> {
    let images = [
        (config.clone(), *input),
        (config.swap_guides(), input.swap_guides()),
        (config.swap_signal_idler(), input.swap_signal_idler()),
        (
            config.swap_guides().swap_signal_idler(),
            input.swap_guides().swap_signal_idler(),
        ),
    ];
    let mut out = Vec::with_capacity(4);
    for (cfg, inp) in &images {
        let prop = Propagator::new(&derive_params(cfg)?)?;
        out.push(anchored_formulas(&prop, inp, z)?);
    }
    Ok(out.try_into().expect("four images"))
}

/// Assembles every noise function from the S₁-anchored sets of the four
/// mirror images (see [`anchored_images`]).
pub fn symmetry_complete(z: f64, images: &[AnchoredMoments; 4]) -> NoiseState {
    let [id, g, si, both] = images;
    let (s1, s2, i1, i2) = (0, 1, 2, 3);
    let mut n = Mat::zeros();
    let mut a = Mat::zeros();

    for (j, img) in [(s1, id), (s2, g), (i1, si), (i2, both)] {
        n[(j, j)] = C64::new(img.b_s1, 0.0);
        a[(j, j)] = img.c_s1;
    }
    // (j, k, image, which anchored pair)
    let pairs: [(usize, usize, &AnchoredMoments, usize); 6] = [
        (s1, s2, id, 0),
        (s1, i1, id, 1),
        (s1, i2, id, 2),
        (s2, i2, g, 1),
        (s2, i1, g, 2),
        (i1, i2, si, 0),
    ];
    for (j, k, img, which) in pairs {
        let (d, d_bar) = match which {
            0 => (img.d_s1s2, img.d_bar_s1s2),
            1 => (img.d_s1i1, img.d_bar_s1i1),
            _ => (img.d_s1i2, img.d_bar_s1i2),
        };
        a[(j, k)] = d;
        a[(k, j)] = d;
        n[(j, k)] = -d_bar;
        n[(k, j)] = -d_bar.conj();
    }
    NoiseState::from_matrices(z, n, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InputMode;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn generic_state() -> NoiseState {
        let n = Mat::from_fn(|j, k| c(0.1 * (j + k) as f64 + if j == k { 0.5 } else { 0.0 }, 0.03 * (j as f64 - k as f64)));
        let a = Mat::from_fn(|j, k| c(0.2 + 0.01 * (j * k) as f64, -0.05 * (j + k) as f64));
        NoiseState::from_matrices(0.4, n, a)
    }

    #[test]
    fn frame_conversion_round_trips() {
        let st = generic_state();
        let (nv, av) = st.to_frame();
        let back = NoiseState::from_frame(st.z(), &nv, &av);
        assert!(back.max_abs_diff(&st) < 1e-15);
    }

    #[test]
    fn vacuum_frame_has_idler_unit() {
        let (nv, av) = NoiseState::vacuum(0.0).to_frame();
        assert_eq!(nv, Mat::from_diagonal(&nalgebra::Vector4::new(ZERO, ZERO, ONE, ONE)));
        assert_eq!(av, Mat::zeros());
    }

    #[test]
    fn vacuum_covariance_is_psd_with_zero_eigenvalue() {
        let v = NoiseState::vacuum(0.0);
        assert!(v.min_eigenvalue().abs() < 1e-15);
        assert!(v.check_physical().is_ok());
    }

    #[test]
    fn overly_squeezed_moments_are_unphysical() {
        let mut a = Mat::zeros();
        a[(0, 0)] = c(2.0, 0.0);
        let st = NoiseState::from_matrices(0.0, Mat::zeros(), a);
        assert!(matches!(st.check_physical(), Err(Error::UnphysicalState { .. })));
    }

    #[test]
    fn power_exp_integral_branches_agree() {
        for r in 0..6 {
            for &s in &[c(0.3, 0.2), c(-1.0, 2.0), c(1e-8, 0.0), c(0.0, 0.0)] {
                for &z in &[0.5, 2.0] {
                    let got = power_exp_integral(r, s, z);
                    // midpoint-free check by high-resolution Simpson rule
                    let m = 4000;
                    let h = z / m as f64;
                    let f = |x: f64| (s * x).exp() * x.powi(r as i32);
                    let mut acc = f(0.0) + f(z);
                    for i in 1..m {
                        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                        acc += f(i as f64 * h) * w;
                    }
                    let simpson = acc * h / 3.0;
                    assert!((got - simpson).norm() < 1e-9 * (1.0 + simpson.norm()), "r={r} s={s} z={z}");
                }
            }
        }
    }

    #[test]
    fn crossover_continuity() {
        // Both branches at the switching point |σ|z = 1 + r.
        for r in 0..6 {
            for dir in [c(0.0, 1.0), c(-1.0, 0.0), c(0.6, -0.8)] {
                let s = dir * (1.0 + r as f64);
                let a = power_exp_series(r, s, 1.0);
                let b = power_exp_recursion(r, s, 1.0);
                assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()), "r={r} {a} {b}");
            }
        }
    }

    #[test]
    fn chi_of_single_decaying_mode() {
        let cfg = CouplerConfig {
            pump: [ZERO; 2],
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            damping: [0.3; 4],
            ..Default::default()
        };
        let prop = Propagator::new(&derive_params(&cfg).unwrap()).unwrap();
        let z = 1.7;
        let t = chi(&prop, z).unwrap();
        let expect = (1.0 - (-0.6 * z).exp()) / 0.6;
        assert!((t.diag(0, 0) - expect).abs() < 1e-14);
        assert_eq!(t.diag(0, 1), 0.0);
        let t0 = chi(&prop, 0.0).unwrap();
        assert_eq!(t0.diag(0, 0), 0.0);
        assert!(chi(&prop, -1.0).is_err());
    }

    #[test]
    fn thermal_relaxation_without_couplings() {
        let cfg = CouplerConfig {
            pump: [ZERO; 2],
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            damping: [0.25; 4],
            reservoir: [0.7; 4],
            ..Default::default()
        };
        let mut input = InputField::vacuum();
        input.modes[0].chaotic = 2.0;
        input.modes[3].chaotic = 1.0;
        let z = 1.3;
        let st = evolve(&cfg, &input, z).unwrap();
        let e = (-0.5 * z).exp();
        assert!((st.noise.b(Mode::S1) - (2.0 * e + 0.7 * (1.0 - e))).abs() < 1e-13);
        assert!((st.noise.b(Mode::I2) - (1.0 * e + 0.7 * (1.0 - e))).abs() < 1e-13);
        assert!((st.noise.b(Mode::S2) - 0.7 * (1.0 - e)).abs() < 1e-13);
    }

    #[test]
    fn spontaneous_single_guide_amplifier() {
        let g = 0.6;
        let cfg = CouplerConfig {
            pump: [c(g, 0.0), ZERO],
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            damping: [0.0; 4],
            reservoir: [0.0; 4],
            ..Default::default()
        };
        let z = 1.1;
        let st = evolve(&cfg, &InputField::vacuum(), z).unwrap();
        let sh = (g * z).sinh();
        assert!((st.noise.b(Mode::S1) - sh * sh).abs() < 1e-12);
        assert!((st.noise.b(Mode::I1) - sh * sh).abs() < 1e-12);
        // ⟨A_S A_I⟩ = i sinh cosh for real gain.
        let d = st.noise.d(Mode::S1, Mode::I1);
        assert!((d - c(0.0, sh * (g * z).cosh())).norm() < 1e-12);
        assert!(st.noise.check_physical().is_ok());
    }

    #[test]
    fn zero_length_reproduces_input() {
        let mut input = InputField::vacuum();
        input.modes[1] = InputMode {
            amplitude: c(0.3, -0.2),
            squeeze: 0.4,
            squeeze_phase: 1.1,
            chaotic: 0.2,
        };
        let ev = Evolution::new(&CouplerConfig::default(), &input).unwrap();
        let st = ev.at(0.0).unwrap();
        assert!(st.noise.max_abs_diff(&ev.initial().noise) < 1e-15);
        assert_eq!(st.means, ev.initial().means);
    }

    #[test]
    fn permutation_relabels() {
        let st = generic_state();
        let p = st.permuted([1, 0, 3, 2]);
        assert_eq!(p.b(Mode::S1), st.b(Mode::S2));
        assert_eq!(p.d(Mode::S1, Mode::I1), st.d(Mode::S2, Mode::I2));
    }
}
