//! Observables of single and compound modes built from means and noise functions.
//!
//! Quadratures are q = A + A†, p = −i(A − A†); compound quadratures are sums of
//! single-mode ones, so the vacuum level is 1 for a single mode and 2 for a
//! pair. W is the normally ordered photon number of the selected modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{derive_params, CouplerConfig, InputField, Mode};
use crate::noise::{FieldState, NoiseState};

type C64 = Complex64;

/// One mode or two distinct modes treated jointly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSet {
    Single(Mode),
    Pair(Mode, Mode),
}

impl ModeSet {
    pub fn pair(i: Mode, j: Mode) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidInput(format!("compound mode needs two distinct modes, got {i} twice")));
        }
        Ok(ModeSet::Pair(i, j))
    }

    pub fn modes(&self) -> Vec<Mode> {
        match *self {
            ModeSet::Single(m) => vec![m],
            ModeSet::Pair(i, j) => vec![i, j],
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModeSet::Single(m) => m.name().to_string(),
            ModeSet::Pair(i, j) => format!("({},{})", i.name(), j.name()),
        }
    }
}

fn distinct(i: Mode, j: Mode) -> Result<()> {
    ModeSet::pair(i, j).map(|_| ())
}

/// Quadrature variance of the compound mode rotated by φ:
/// 2{1 + B_i + B_j − 2Re D̄_ij + Re[e^{−2iφ}(C_i + C_j + 2D_ij)]}.
pub fn rotated_quadrature_variance(state: &NoiseState, i: Mode, j: Mode, phi: f64) -> Result<f64> {
    distinct(i, j)?;
    let (base, s) = pair_terms(state, i, j);
    Ok(2.0 * (base + (C64::from_polar(1.0, -2.0 * phi) * s).re))
}

fn pair_terms(state: &NoiseState, i: Mode, j: Mode) -> (f64, C64) {
    let base = 1.0 + state.b(i) + state.b(j) - 2.0 * state.d_bar(i, j).re;
    let s = state.c(i) + state.c(j) + 2.0 * state.d(i, j);
    (base, s)
}

/// λ_ij = 2{1 + B_i + B_j − 2Re D̄_ij − |C_i + C_j + 2D_ij|}; squeezing iff λ < 2.
pub fn principal_squeeze_pair(state: &NoiseState, i: Mode, j: Mode) -> Result<f64> {
    distinct(i, j)?;
    let (base, s) = pair_terms(state, i, j);
    Ok(2.0 * (base - s.norm()))
}

/// λ_i = 1 + 2B_i − 2|C_i|; squeezing iff λ < 1.
pub fn principal_squeeze_single(state: &NoiseState, i: Mode) -> f64 {
    1.0 + 2.0 * state.b(i) - 2.0 * state.c(i).norm()
}

/// (⟨(Δq)²⟩, ⟨(Δp)²⟩) of the compound mode.
pub fn quadrature_variances(state: &NoiseState, i: Mode, j: Mode) -> Result<(f64, f64)> {
    distinct(i, j)?;
    let (base, s) = pair_terms(state, i, j);
    Ok((2.0 * (base + s.re), 2.0 * (base - s.re)))
}

/// (⟨(Δq)²⟩, ⟨(Δp)²⟩) = 1 + 2B_i ± 2Re C_i of a single mode.
pub fn quadrature_variances_single(state: &NoiseState, i: Mode) -> (f64, f64) {
    let (b, c) = (state.b(i), state.c(i));
    (1.0 + 2.0 * b + 2.0 * c.re, 1.0 + 2.0 * b - 2.0 * c.re)
}

/// Normally ordered intensity mean and fluctuations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensityMoments {
    /// ⟨W⟩ = Σ (B_m + |ξ_m|²).
    pub mean: f64,
    /// ⟨(ΔW)²⟩ of the whole set.
    pub variance: f64,
    /// ⟨ΔW_i ΔW_j⟩ for a pair.
    pub cross: Option<f64>,
}

/// ⟨(ΔW_j)²⟩ = B_j² + |C_j|² + 2Re[C_j* ξ_j²] + 2B_j|ξ_j|².
pub fn single_intensity_variance(state: &FieldState, m: Mode) -> f64 {
    let (b, c, x) = (state.noise.b(m), state.noise.c(m), state.mean(m));
    b * b + c.norm_sqr() + 2.0 * (c.conj() * x * x).re + 2.0 * b * x.norm_sqr()
}

/// ⟨ΔW_i ΔW_j⟩ = |D_ij|² + |D̄_ij|² + 2Re[D_ij ξ_i* ξ_j* − D̄_ij ξ_i ξ_j*].
pub fn intensity_correlation(state: &FieldState, i: Mode, j: Mode) -> Result<f64> {
    distinct(i, j)?;
    let (d, db) = (state.noise.d(i, j), state.noise.d_bar(i, j));
    let (xi, xj) = (state.mean(i), state.mean(j));
    Ok(d.norm_sqr() + db.norm_sqr() + 2.0 * (d * xi.conj() * xj.conj() - db * xi * xj.conj()).re)
}

pub fn intensity_moments(state: &FieldState, set: ModeSet) -> Result<IntensityMoments> {
    match set {
        ModeSet::Single(m) => Ok(IntensityMoments {
            mean: state.photon_number(m),
            variance: single_intensity_variance(state, m),
            cross: None,
        }),
        ModeSet::Pair(i, j) => {
            let cross = intensity_correlation(state, i, j)?;
            Ok(IntensityMoments {
                mean: state.photon_number(i) + state.photon_number(j),
                variance: single_intensity_variance(state, i) + single_intensity_variance(state, j) + 2.0 * cross,
                cross: Some(cross),
            })
        }
    }
}

/// Normal generating function ⟨:exp(−λW):⟩ of a Gaussian state,
/// G(λ) = det(I + λK)^{−1/2} exp(−(λ/2) ζ†(I + λK)^{−1} ζ),
/// with ζ = (ξ, ξ*) and K = [[Nᵀ, M], [M*, N]] the normally ordered
/// covariance of (A, A†) restricted to the selected modes.
#[derive(Clone, Debug)]
pub struct GeneratingFunction {
    k: DMatrix<C64>,
    zeta: DVector<C64>,
}

/// Largest photon number for which p(n) is produced automatically.
pub const N_MAX_CAP: usize = 512;

/// Target for the probability mass beyond the returned distribution.
pub const TAIL_TARGET: f64 = 1e-10;

impl GeneratingFunction {
    pub fn new(state: &FieldState, set: ModeSet) -> Self {
        let modes = set.modes();
        let m = modes.len();
        let nrm = state.noise.normal();
        let anm = state.noise.anomalous();
        let mut k = DMatrix::zeros(2 * m, 2 * m);
        let mut zeta = DVector::zeros(2 * m);
        for (p, &a) in modes.iter().enumerate() {
            zeta[p] = state.mean(a);
            zeta[p + m] = state.mean(a).conj();
            for (q, &b) in modes.iter().enumerate() {
                let (ia, ib) = (a.index(), b.index());
                k[(p, q)] = nrm[(ib, ia)];
                k[(p, q + m)] = anm[(ia, ib)];
                k[(p + m, q)] = anm[(ia, ib)].conj();
                k[(p + m, q + m)] = nrm[(ia, ib)];
            }
        }
        GeneratingFunction { k, zeta }
    }

    fn dim(&self) -> usize {
        self.k.nrows()
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        let a = DMatrix::identity(self.dim(), self.dim()) + &self.k * C64::from(lambda);
        let det = a.determinant();
        let inv = a
            .try_inverse()
            .ok_or_else(|| Error::UndefinedMoment(format!("I + λK is singular at λ = {lambda}")))?;
        let quad = (self.zeta.adjoint() * inv * &self.zeta)[(0, 0)];
        Ok(det.re.powf(-0.5) * (-0.5 * lambda * quad.re).exp())
    }

    /// Normally ordered moments ⟨W^k⟩ = ⟨n!/(n−k)!⟩ for k = 0..=k_max.
    pub fn factorial_moments(&self, k_max: usize) -> Vec<f64> {
        // log G(λ) = −½ Σ (−1)^{m+1} λ^m tr(K^m)/m − ½ Σ_m (−1)^m λ^{m+1} ζ†K^mζ
        let mut f = vec![0.0; k_max + 1];
        let mut km = DMatrix::identity(self.dim(), self.dim());
        for m in 0..=k_max {
            if m >= 1 {
                km = &km * &self.k;
                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                f[m] += -0.5 * sign * km.trace().re / m as f64;
            }
            if m < k_max {
                let q = (self.zeta.adjoint() * &km * &self.zeta)[(0, 0)].re;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                f[m + 1] += -0.5 * sign * q;
            }
        }
        let g = exp_series(0.0, &f);
        let mut fact = 1.0;
        g.iter()
            .enumerate()
            .map(|(k, &gk)| {
                if k > 0 {
                    fact *= k as f64;
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * fact * gk
            })
            .collect()
    }

    /// p(n) = (−1)ⁿ/n! G⁽ⁿ⁾(1), read off as the Taylor coefficients of G(1 − s).
    /// With `n_max = None` the series is extended until the remaining mass
    /// drops below [`TAIL_TARGET`] and the fifth moment has converged, or
    /// [`N_MAX_CAP`] is reached.
    pub fn distribution(&self, n_max: Option<usize>) -> Result<PhotonDistribution> {
        let dim = self.dim();
        let a0 = DMatrix::identity(dim, dim) + &self.k;
        let det = a0.determinant().re;
        let a0_inv = a0
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::UndefinedMoment("I + K is singular".into()))?;
        let r = &a0_inv * &self.k;
        let w = &a0_inv * &self.zeta;
        // E(s) = −(1 − s)/2 Σ s^m ζ†R^m A0⁻¹ζ; −½ log det(I − sR) = ½ Σ s^m tr R^m / m.
        let q0 = (self.zeta.adjoint() * &w)[(0, 0)].re;
        let f0 = -0.5 * det.ln() - 0.5 * q0;
        let cap = n_max.unwrap_or(N_MAX_CAP);

        let mut f = vec![0.0; cap + 1];
        let mut q_prev = q0;
        let mut rm = DMatrix::identity(dim, dim);
        let mut rw = w.clone();
        let mut g = vec![f0.exp()];
        let mut total = g[0];
        let mut high = 0.0;
        for n in 1..=cap {
            rm = &rm * &r;
            rw = &r * &rw;
            let qn = (self.zeta.adjoint() * &rw)[(0, 0)].re;
            f[n] = 0.5 * rm.trace().re / n as f64 - 0.5 * (qn - q_prev);
            q_prev = qn;
            let gn = (1..=n).map(|k| k as f64 * f[k] * g[n - k]).sum::<f64>() / n as f64;
            g.push(gn);
            total += gn;
            // Also resolve the fifth factorial moment, which weighs the tail by n⁵.
            let w5 = (n as f64).powi(5);
            high += w5 * gn;
            if n_max.is_none() && 1.0 - total < TAIL_TARGET && w5 * gn.abs() <= 1e-12 * high {
                break;
            }
        }
        Ok(PhotonDistribution {
            tail: 1.0 - total,
            p: g,
        })
    }
}

/// Coefficients of exp(Σ f_k s^k) given f₀ and f (f[0] ignored).
fn exp_series(f0: f64, f: &[f64]) -> Vec<f64> {
    let mut g = vec![f0.exp()];
    for n in 1..f.len() {
        let gn = (1..=n).map(|k| k as f64 * f[k] * g[n - k]).sum::<f64>() / n as f64;
        g.push(gn);
    }
    g
}

/// Photon-number distribution p(0..=n_max) and the mass beyond it.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    pub p: Vec<f64>,
    pub tail: f64,
}

impl PhotonDistribution {
    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    /// Σ n!/(n−k)! p(n).
    pub fn factorial_moment(&self, k: usize) -> f64 {
        self.p
            .iter()
            .enumerate()
            .skip(k)
            .map(|(n, &pn)| ((n - k + 1)..=n).map(|x| x as f64).product::<f64>() * pn)
            .sum()
    }
}

/// Sum photon-number distribution of the mode set. The full state must be
/// physical; an indefinite covariance is reported, not clipped.
pub fn photon_number_distribution(state: &FieldState, set: ModeSet, n_max: Option<usize>) -> Result<PhotonDistribution> {
    state.noise.check_physical()?;
    GeneratingFunction::new(state, set).distribution(n_max)
}

/// R_k = ⟨W^k⟩/⟨W⟩^k − 1 for k = 2..=k_max (index 0 holds R₂).
pub fn reduced_factorial_moments(state: &FieldState, set: ModeSet, k_max: usize) -> Result<Vec<f64>> {
    let mom = GeneratingFunction::new(state, set).factorial_moments(k_max.max(1));
    let mean = mom[1];
    if !(mean > 1e-14) {
        return Err(Error::UndefinedMoment(format!(
            "reduced factorial moments of {} need <W> > 0, got {mean:.3e}",
            set.label()
        )));
    }
    Ok((2..=k_max).map(|k| mom[k] / mean.powi(k as i32) - 1.0).collect())
}

/// All statistics of one compound mode at one position.
#[derive(Clone, Debug, PartialEq)]
pub struct PairStats {
    pub modes: (Mode, Mode),
    pub lambda: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub mean_w: f64,
    pub var_w: f64,
    /// R_k for k = 2..=5; `None` when ⟨W⟩ = 0.
    pub reduced_moments: Option<[f64; 4]>,
    pub distribution: PhotonDistribution,
}

pub fn pair_stats(state: &FieldState, i: Mode, j: Mode, n_max: Option<usize>) -> Result<PairStats> {
    let set = ModeSet::pair(i, j)?;
    let (var_q, var_p) = quadrature_variances(&state.noise, i, j)?;
    let w = intensity_moments(state, set)?;
    let reduced_moments = match reduced_factorial_moments(state, set, 5) {
        Ok(r) => Some([r[0], r[1], r[2], r[3]]),
        Err(Error::UndefinedMoment(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(PairStats {
        modes: (i, j),
        lambda: principal_squeeze_pair(&state.noise, i, j)?,
        var_q,
        var_p,
        mean_w: w.mean,
        var_w: w.variance,
        reduced_moments,
        distribution: photon_number_distribution(state, set, n_max)?,
    })
}

/// Lossless symmetric coupler: κ_S = κ_I = κ real, G₁ = G₂ = G, no
/// mismatch, κ > |G|, coherent light in guide 1 and vacuum in guide 2.
/// u = cos ωz and v = sin(ωz)/ω with ω = √(κ² − |G|²).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedFormCorrelations {
    pub u: f64,
    pub v: f64,
    /// ⟨ΔW_S2 ΔW_I2⟩ = |G|²u²v² + 2κ²|G||ξ_S1||ξ_I1| u v³ sin φ.
    pub w_s2i2: f64,
    /// ⟨ΔW_S1 ΔW_I1⟩ = |G|²[2(|ξ_S1|² + |ξ_I1|²) + 1]u²v² − 2|G||ξ_S1||ξ_I1| sin φ · uv(u² + |G|²v²).
    pub w_s1i1: f64,
    /// ⟨ΔW_S1 ΔW_I2⟩ = κ²|G|²v⁴(1 + 2|ξ_I1|²) − 2κ²|G||ξ_S1||ξ_I1| u v³ sin φ.
    pub w_s1i2: f64,
    /// D_S1I2 = −κGv².
    pub d_s1i2: C64,
    /// Leading small-z form |G|²z² + 2κ²|G||ξ_S1||ξ_I1|z³ sin φ.
    pub w_s2i2_small: f64,
    /// Leading small-z form −2κ²|G||ξ_S1||ξ_I1|z³ sin φ.
    pub w_s1i2_small: f64,
}

/// Parameters of the symmetric regime, checked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricRegime {
    pub kappa: f64,
    pub gain: C64,
    pub xi_s1: C64,
    pub xi_i1: C64,
}

impl SymmetricRegime {
    pub fn check(config: &CouplerConfig, input: &InputField) -> Result<Self> {
        let dp = derive_params(config)?;
        let tol = 1e-12;
        let fail = |what: &str| Err(Error::Precondition(format!("symmetric closed forms need {what}")));
        if !dp.is_lossless() {
            return fail("zero damping");
        }
        if [dp.dk_pump, dp.dk_signal, dp.dk_idler, dp.dl[0], dp.dl[1]]
            .iter()
            .any(|x| x.abs() > tol)
        {
            return fail("all phase mismatches zero");
        }
        let (ks, ki) = (dp.kappa_signal, dp.kappa_idler);
        if ks.im.abs() > tol || (ks - ki).norm() > tol * (1.0 + ks.norm()) {
            return fail("kappa_S = kappa_I real");
        }
        let (g1, g2) = (dp.gain[0], dp.gain[1]);
        if (g1 - g2).norm() > tol * (1.0 + g1.norm()) {
            return fail("G1 = G2");
        }
        if !(ks.re > g1.norm()) {
            return fail("kappa > |G|");
        }
        for m in Mode::ALL {
            if !input.mode(m).is_coherent() {
                return fail("coherent inputs");
            }
        }
        if input.mode(Mode::S2).amplitude.norm() > 0.0 || input.mode(Mode::I2).amplitude.norm() > 0.0 {
            return fail("vacuum inputs in guide 2");
        }
        Ok(SymmetricRegime {
            kappa: ks.re,
            gain: g1,
            xi_s1: input.mode(Mode::S1).amplitude,
            xi_i1: input.mode(Mode::I1).amplitude,
        })
    }

    /// φ = arg G − arg ξ_S1 − arg ξ_I1.
    pub fn phase(&self) -> f64 {
        self.gain.arg() - self.xi_s1.arg() - self.xi_i1.arg()
    }

    pub fn omega(&self) -> f64 {
        (self.kappa * self.kappa - self.gain.norm_sqr()).sqrt()
    }
}

pub fn closed_form_correlations(config: &CouplerConfig, input: &InputField, z: f64) -> Result<ClosedFormCorrelations> {
    let r = SymmetricRegime::check(config, input)?;
    let w = r.omega();
    let (u, v) = ((w * z).cos(), (w * z).sin() / w);
    let (k, g) = (r.kappa, r.gain.norm());
    let (xs, xi) = (r.xi_s1.norm(), r.xi_i1.norm());
    let sin = r.phase().sin();
    let k2 = k * k;
    Ok(ClosedFormCorrelations {
        u,
        v,
        w_s2i2: g * g * u * u * v * v + 2.0 * k2 * g * xs * xi * u * v.powi(3) * sin,
        w_s1i1: g * g * (2.0 * (xs * xs + xi * xi) + 1.0) * u * u * v * v
            - 2.0 * g * xs * xi * sin * u * v * (u * u + g * g * v * v),
        w_s1i2: k2 * g * g * v.powi(4) * (1.0 + 2.0 * xi * xi) - 2.0 * k2 * g * xs * xi * u * v.powi(3) * sin,
        d_s1i2: -r.gain * k * v * v,
        w_s2i2_small: g * g * z * z + 2.0 * k2 * g * xs * xi * z.powi(3) * sin,
        w_s1i2_small: -2.0 * k2 * g * xs * xi * z.powi(3) * sin,
    })
}
