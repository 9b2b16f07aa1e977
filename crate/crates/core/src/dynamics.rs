//! Analytic propagator of the linearized coupler.
//!
//! The rotating-frame amplitudes (C_S1, C_S2, C_I1†, C_I2†) obey a linear system
//! with constant drift N. Its propagator X(z) = exp(Nz) is written as a sum of
//! exponentials over the roots of the quartic characteristic polynomial, with
//! matrix coefficients built from the adjugate of (x − N). Multiple roots are
//! handled by the confluent (higher-order pole) form of the same expansion.

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::DerivedParams;

type C64 = Complex64;
type Mat = Matrix4<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Monic quartic x⁴ + ax³ + bx² + cx + d together with its intermediates.
#[derive(Clone, Debug, PartialEq)]
pub struct CharPoly {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub l_s: C64,
    pub l_i: C64,
    pub l_bar: [C64; 2],
}

impl CharPoly {
    /// Coefficients of x⁴, x³, x², x, 1.
    pub fn coefficients(&self) -> [C64; 5] {
        [ONE, self.a, self.b, self.c, self.d]
    }

    pub fn eval(&self, x: C64) -> C64 {
        (((x + self.a) * x + self.b) * x + self.c) * x + self.d
    }

    /// n-th derivative at x.
    pub fn derivative(&self, x: C64, n: usize) -> C64 {
        let coeffs = self.coefficients();
        let mut acc = ZERO;
        // coefficient of x^k sits at index 4-k
        for k in (n..=4).rev() {
            let falling: f64 = ((k - n + 1)..=k).map(|v| v as f64).product();
            acc = acc * x + coeffs[4 - k] * falling;
        }
        acc
    }
}

pub fn char_poly(dp: &DerivedParams) -> CharPoly {
    let [ks1, ks2, ki1, ki2] = dp.k_aux;
    let [g1, g2] = dp.gain;
    let (kap_s, kap_i) = (dp.kappa_signal, dp.kappa_idler);
    let (ks2n, ki2n) = (kap_s.norm_sqr(), kap_i.norm_sqr());
    let (g1n, g2n) = (g1.norm_sqr(), g2.norm_sqr());

    let l_s = ks1 * ks2 + ks2n;
    let l_i = ki1 * ki2 + ki2n;
    let l1 = ks1 * ki1 - g1n;
    let l2 = ks2 * ki2 - g2n;

    let a = C64::new(dp.damping.iter().sum(), 0.0);
    let b = l_s + l_i + l1 + l2 + ks1 * ki2 + ki1 * ks2;
    let c = l_s * ki2 + l_i * ks1 + l1 * ks2 + l2 * ki1 + ki1 * ks2n + ks2 * ki2n
        - ki2 * g1n
        - ks1 * g2n;
    let d = ks1 * ki1 * ks2 * ki2 + ki1 * ki2 * ks2n + ks1 * ks2 * ki2n
        - ks2 * ki2 * g1n
        - ks1 * ki1 * g2n
        + (kap_s * kap_i - g1.conj() * g2).norm_sqr();

    CharPoly {
        a,
        b,
        c,
        d,
        l_s,
        l_i,
        l_bar: [l1, l2],
    }
}

/// Roots that coincide within the degeneracy tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct RootCluster {
    pub center: C64,
    /// Indices into [`Roots::values`].
    pub members: Vec<usize>,
}

impl RootCluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Roots {
    /// Sorted by real part, then imaginary part, both descending. Members of a
    /// cluster carry the refined cluster center.
    pub values: [C64; 4],
    /// Every distinct root with its multiplicity (simple roots included).
    pub clusters: Vec<RootCluster>,
}

impl Roots {
    pub fn is_simple(&self) -> bool {
        self.clusters.len() == 4
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_real(&self) -> f64 {
        self.values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Degeneracy tolerance 1e-7·(1 + max|λ|).
    pub fn degeneracy_tolerance(&self) -> f64 {
        degeneracy_tolerance(&self.values)
    }
}

fn degeneracy_tolerance(values: &[C64]) -> f64 {
    let m = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    1e-7 * (1.0 + m)
}

/// Residual bound used to accept a root: 1e-9·max(1, |d|, |λ|⁴).
fn residual_bound(p: &CharPoly, x: C64) -> f64 {
    1e-9 * 1f64.max(p.d.norm()).max(x.norm().powi(4))
}

/// Real part descending, then imaginary part descending. Runs of real parts
/// closer than rounding level count as equal so that conjugate-like pairs
/// order by their imaginary parts.
fn sort_roots(values: &mut [C64]) {
    let scale = 1.0 + values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let eps = 1e-12 * scale;
    values.sort_by(|x, y| y.re.total_cmp(&x.re));
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end - 1].re - values[end].re <= eps {
            end += 1;
        }
        values[start..end].sort_by(|x, y| y.im.total_cmp(&x.im));
        start = end;
    }
}

fn companion(p: &CharPoly) -> Mat {
    Mat::new(
        -p.a, -p.b, -p.c, -p.d,
        ONE, ZERO, ZERO, ZERO,
        ZERO, ONE, ZERO, ZERO,
        ZERO, ZERO, ONE, ZERO,
    )
}

/// A fixed complex Householder reflection. Conjugating the companion matrix
/// with it breaks the exact symmetries (e.g. real coefficients with purely
/// imaginary multiple roots) on which the unshifted-exceptional QR can cycle.
fn scrambler() -> Mat {
    let v = nalgebra::Vector4::new(
        C64::new(0.3, 0.1),
        C64::new(-0.5, 0.2),
        C64::new(0.7, -0.4),
        C64::new(0.2, 0.6),
    );
    let v = v / C64::new(v.norm(), 0.0);
    Mat::identity() - v * v.adjoint() * C64::new(2.0, 0.0)
}

fn companion_eigenvalues(p: &CharPoly) -> Option<[C64; 4]> {
    let c = companion(p);
    let q = scrambler();
    for m in [c, q * c * q.adjoint()] {
        if let Some(s) = Schur::try_new(m, f64::EPSILON, 10_000) {
            let (_, t) = s.unpack();
            return Some([t[(0, 0)], t[(1, 1)], t[(2, 2)], t[(3, 3)]]);
        }
    }
    None
}

/// Taylor coefficients p^{(k)}(x)/k! for k < m, each with the magnitude of
/// the terms it sums (a rounding-error scale).
fn taylor_with_scale(p: &CharPoly, x: C64, m: usize) -> Vec<(C64, f64)> {
    let coeffs = p.coefficients();
    (0..m)
        .map(|k| {
            let mut val = ZERO;
            let mut scale = 0.0;
            for j in k..=4 {
                let binom: f64 = ((j - k + 1)..=j).map(|v| v as f64).product::<f64>()
                    / (1..=k).map(|v| v as f64).product::<f64>();
                let term = coeffs[4 - j] * binom * x.powu((j - k) as u32);
                val += term;
                scale += term.norm();
            }
            (val, scale)
        })
        .collect()
}

/// Backward-error test: p is within relative 1e-11 (coefficientwise, around
/// x) of a polynomial with an m-fold root at x.
fn is_multiple_root(p: &CharPoly, x: C64, m: usize) -> bool {
    taylor_with_scale(p, x, m)
        .iter()
        .all(|(v, s)| v.norm() <= 1e-11 * s.max(f64::MIN_POSITIVE))
}

/// Refines the center of an m-fold cluster with Newton steps on p^{(m−1)},
/// which has a simple zero there.
fn cluster_center(p: &CharPoly, mean: C64, m: usize, radius: f64) -> C64 {
    let mut x = mean;
    for _ in 0..4 {
        let den = p.derivative(x, m);
        if den == ZERO {
            break;
        }
        let cand = x - p.derivative(x, m - 1) / den;
        if (cand - mean).norm() > radius {
            break;
        }
        x = cand;
    }
    x
}

/// Single-linkage groups of `idx` at the given radius.
fn link(raw: &[C64; 4], idx: &[usize], radius: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in idx {
        let hits: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.iter().any(|&j| (raw[i] - raw[j]).norm() <= radius))
            .map(|(n, _)| n)
            .collect();
        let mut merged = vec![i];
        for &n in hits.iter().rev() {
            merged.extend(groups.remove(n));
        }
        groups.push(merged);
    }
    groups
}

/// Splits roots into clusters. Groups formed at a coarse radius are kept when
/// their mean is a multiple root in the backward sense; otherwise they are
/// re-linked at a ten times finer radius. Anything still together at the
/// degeneracy tolerance is a cluster by definition.
fn cluster(p: &CharPoly, raw: &[C64; 4], idx: &[usize], radius: f64, tol: f64) -> Vec<(C64, Vec<usize>)> {
    let mut out = Vec::new();
    for g in link(raw, idx, radius) {
        let m = g.len();
        if m == 1 {
            out.push((raw[g[0]], g));
            continue;
        }
        let mean = g.iter().map(|&i| raw[i]).sum::<C64>() / m as f64;
        let center = cluster_center(p, mean, m, radius);
        if radius <= tol * (1.0 + 1e-9) || is_multiple_root(p, center, m) {
            out.push((center, g));
        } else {
            out.extend(cluster(p, raw, &g, radius / 10.0, tol));
        }
    }
    out
}

/// Eigenvalues of the companion matrix, polished with Newton steps, grouped
/// into clusters of (numerically) multiple roots.
pub fn find_roots(p: &CharPoly) -> Result<Roots> {
    for (i, c) in p.coefficients().iter().enumerate() {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coefficient of x^{}",
                4 - i
            )));
        }
    }

    let mut raw = companion_eigenvalues(p).ok_or_else(|| Error::NumericalFailure {
        what: "companion-matrix Schur iteration did not converge".into(),
        residual: f64::NAN,
        bound: f64::NAN,
    })?;

    for x in raw.iter_mut() {
        for _ in 0..2 {
            let fx = p.eval(*x);
            let dfx = p.derivative(*x, 1);
            if dfx == ZERO {
                break;
            }
            let cand = *x - fx / dfx;
            if p.eval(cand).norm() < fx.norm() {
                *x = cand;
            } else {
                break;
            }
        }
    }

    let tol = degeneracy_tolerance(&raw);
    let scale = 1.0 + raw.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let groups = cluster(p, &raw, &[0, 1, 2, 3], 1e-2 * scale, tol);

    let mut values = [ZERO; 4];
    for (center, members) in &groups {
        for &i in members {
            values[i] = *center;
        }
    }

    for &x in &values {
        let r = p.eval(x).norm();
        let bound = residual_bound(p, x);
        if !(r <= bound) {
            return Err(Error::NumericalFailure {
                what: format!("root {x} failed the residual check after polishing"),
                residual: r,
                bound,
            });
        }
    }

    sort_roots(&mut values);
    let mut clusters: Vec<RootCluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if c.center == v => c.members.push(i),
            _ => clusters.push(RootCluster {
                center: v,
                members: vec![i],
            }),
        }
    }
    Ok(Roots { values, clusters })
}

const EQ19_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ19_TOL * 1f64.max(a.abs()).max(b.abs())
}

/// Checks the conditions under which the quartic splits into two quadratics:
/// equal signal dampings, equal idler dampings, Δk_S = Δk_I = 0 and
/// G₁ = G₂ κ_S*|κ_I| / (κ_I|κ_S|). When either linear coupling vanishes the
/// phase relation is undefined and only |G₁| = |G₂| is required.
pub fn closed_form_conditions(dp: &DerivedParams) -> Result<()> {
    let g = &dp.damping;
    if !close(g[0], g[1]) {
        return Err(Error::Precondition("gamma_S1 = gamma_S2 violated".into()));
    }
    if !close(g[2], g[3]) {
        return Err(Error::Precondition("gamma_I1 = gamma_I2 violated".into()));
    }
    if !close(dp.dk_signal, 0.0) {
        return Err(Error::Precondition("dk_S = 0 violated".into()));
    }
    if !close(dp.dk_idler, 0.0) {
        return Err(Error::Precondition("dk_I = 0 violated".into()));
    }
    let [g1, g2] = dp.gain;
    let (ks, ki) = (dp.kappa_signal, dp.kappa_idler);
    let ok = if ks.norm() == 0.0 || ki.norm() == 0.0 {
        close(g1.norm(), g2.norm())
    } else {
        let rhs = g2 * ks.conj() * ki.norm() / (ki * ks.norm());
        (g1 - rhs).norm() <= EQ19_TOL * 1f64.max(g1.norm()).max(rhs.norm())
    };
    if !ok {
        return Err(Error::Precondition(
            "G1 = G2 conj(kappa_S)|kappa_I|/(kappa_I|kappa_S|) violated".into(),
        ));
    }
    Ok(())
}

/// The two quadratic-factor discriminants of the split quartic.
///
/// For the first factor the damping difference enters with the sign opposite
/// to the often-quoted symmetric form [γ_S − γ_I + i(|κ_S| + |κ_I| ± Δk)]²;
/// the two agree whenever γ_S = γ_I.
fn closed_form_discriminants(dp: &DerivedParams) -> [C64; 2] {
    let gs = dp.damping[0];
    let gi = dp.damping[2];
    let (s, i) = (dp.kappa_signal.norm(), dp.kappa_idler.norm());
    let g = dp.gain[0].norm_sqr();
    let w12 = C64::new(gs - gi, -(s + i + dp.dk));
    let w34 = C64::new(gs - gi, s + i - dp.dk);
    [w12 * w12 + 4.0 * g, w34 * w34 + 4.0 * g]
}

/// Roots of the split quartic, valid only under [`closed_form_conditions`].
pub fn closed_form_roots(dp: &DerivedParams) -> Result<[C64; 4]> {
    closed_form_conditions(dp)?;
    let gs = dp.damping[0];
    let gi = dp.damping[2];
    let (s, i) = (dp.kappa_signal.norm(), dp.kappa_idler.norm());
    let [d12, d34] = closed_form_discriminants(dp);
    let lead12 = C64::new(gs + gi, i - s);
    let lead34 = C64::new(gs + gi, s - i);
    let (r12, r34) = (d12.sqrt(), d34.sqrt());
    Ok([
        (-lead12 + r12) * 0.5,
        (-lead12 - r12) * 0.5,
        (-lead34 + r34) * 0.5,
        (-lead34 - r34) * 0.5,
    ])
}

/// Matrix coefficients of the adjugate of (x − N):
/// adj(x − N) = x³·1 + x²·b + x·c + d.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjugateCoefficients {
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl AdjugateCoefficients {
    pub fn eval(&self, x: C64) -> Mat {
        ((Mat::identity() * x + self.b) * x + self.c) * x + self.d
    }

    /// Taylor coefficients of P(x + t) in t, up to and including t^order.
    fn taylor(&self, x: C64, order: usize) -> Vec<Mat> {
        let id = Mat::identity();
        let all = [
            self.eval(x),
            id * (x * x * 3.0) + self.b * (x * 2.0) + self.c,
            id * (x * 3.0) + self.b,
            id,
        ];
        (0..=order)
            .map(|r| if r < 4 { all[r] } else { Mat::zeros() })
            .collect()
    }
}

/// The matrices b, c, d entering the residue formula, written out entry by entry.
pub fn adjugate_coefficients(dp: &DerivedParams) -> AdjugateCoefficients {
    let i = C64::i();
    let [ks1, ks2, ki1, ki2] = dp.k_aux;
    let [g1, g2] = dp.gain;
    let (k_s, k_i) = (dp.kappa_signal, dp.kappa_idler);
    let (ksc, kic, g1c, g2c) = (k_s.conj(), k_i.conj(), g1.conj(), g2.conj());
    let (ks_n, ki_n) = (k_s.norm_sqr(), k_i.norm_sqr());
    let l_s = ks1 * ks2 + ks_n;
    let l_i = ki1 * ki2 + ki_n;
    let l1 = ks1 * ki1 - g1.norm_sqr();
    let l2 = ks2 * ki2 - g2.norm_sqr();

    let b = Mat::new(
        ki1 + ks2 + ki2, i * ksc, i * g1, ZERO,
        i * k_s, ks1 + ki1 + ki2, ZERO, i * g2,
        -i * g1c, ZERO, ks1 + ks2 + ki2, -i * k_i,
        ZERO, -i * g2c, -i * kic, ks1 + ks2 + ki1,
    );
    let c = Mat::new(
        ki1 * ks2 + l_i + l2, i * ksc * (ki1 + ki2), i * g1 * (ks2 + ki2), k_i * g1 - ksc * g2,
        i * k_s * (ki1 + ki2), ks1 * ki2 + l_i + l1, kic * g2 - k_s * g1, i * g2 * (ks1 + ki1),
        -i * g1c * (ks2 + ki2), ksc * g1c - k_i * g2c, ks1 * ki2 + l_s + l2, -i * k_i * (ks1 + ks2),
        k_s * g2c - kic * g1c, -i * g2c * (ks1 + ki1), -i * kic * (ks1 + ks2), ki1 * ks2 + l_s + l1,
    );
    let d = Mat::new(
        l2 * ki1 + ki_n * ks2,
        i * ksc * l_i - i * k_i * g1 * g2c,
        i * g1 * l2 + i * ksc * kic * g2,
        -ksc * g2 * ki1 + k_i * g1 * ks2,
        //
        i * k_s * l_i - i * kic * g1c * g2,
        l1 * ki2 + ki_n * ks1,
        kic * g2 * ks1 - k_s * g1 * ki2,
        i * g2 * l1 + i * k_s * k_i * g1,
        //
        -i * g1c * l2 - i * k_s * k_i * g2c,
        ksc * g1c * ki2 - k_i * g2c * ks1,
        l2 * ks1 + ks_n * ki2,
        -i * k_i * l_s + i * ksc * g1c * g2,
        //
        k_s * g2c * ki1 - kic * g1c * ks2,
        -i * g2c * l1 - i * ksc * kic * g1c,
        -i * kic * l_s + i * k_s * g1 * g2c,
        l1 * ks2 + ks_n * ki1,
    );
    AdjugateCoefficients { b, c, d }
}

/// Residue matrices 𝐀ₖ = P(λₖ) / Πᵢ≠ₖ(λₖ − λᵢ) for four simple roots.
pub fn residue_matrices(roots: &[C64; 4], adj: &AdjugateCoefficients) -> Result<[Mat; 4]> {
    let tol = degeneracy_tolerance(roots);
    let mut out = [Mat::zeros(); 4];
    for k in 0..4 {
        let mut denom = ONE;
        for i in 0..4 {
            if i != k {
                let diff = roots[k] - roots[i];
                if diff.norm() <= tol {
                    return Err(Error::Precondition(format!(
                        "roots {} and {} coincide; the simple-pole residue formula does not apply",
                        roots[k], roots[i]
                    )));
                }
                denom *= diff;
            }
        }
        out[k] = adj.eval(roots[k]) / denom;
    }
    Ok(out)
}

/// One exponential component of X(z): `exp(rate·z) · Σₚ zᵖ coeffs[p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpTerm {
    pub rate: C64,
    pub coeffs: Vec<Mat>,
}

/// Analytic propagator of the rotating-frame amplitudes plus the mismatch
/// phase matrix M(z) returning to the slowly varying operators.
#[derive(Clone, Debug)]
pub struct Propagator {
    params: DerivedParams,
    poly: CharPoly,
    roots: Roots,
    adjugate: AdjugateCoefficients,
    terms: Vec<ExpTerm>,
}

impl Propagator {
    pub fn new(dp: &DerivedParams) -> Result<Self> {
        let poly = char_poly(dp);
        let roots = find_roots(&poly)?;
        let adjugate = adjugate_coefficients(dp);
        let terms = if roots.is_simple() {
            let residues = residue_matrices(&roots.values, &adjugate)?;
            roots
                .values
                .iter()
                .zip(residues)
                .map(|(&rate, a)| ExpTerm {
                    rate,
                    coeffs: vec![a],
                })
                .collect()
        } else {
            confluent_terms(&roots, &adjugate)
        };
        Ok(Propagator {
            params: dp.clone(),
            poly,
            roots,
            adjugate,
            terms,
        })
    }

    pub fn params(&self) -> &DerivedParams {
        &self.params
    }

    pub fn poly(&self) -> &CharPoly {
        &self.poly
    }

    pub fn roots(&self) -> &Roots {
        &self.roots
    }

    pub fn adjugate(&self) -> &AdjugateCoefficients {
        &self.adjugate
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Whether multiple roots forced the confluent expansion.
    pub fn is_confluent(&self) -> bool {
        !self.roots.is_simple()
    }

    /// Residue matrices in root order, when all roots are simple.
    pub fn residues(&self) -> Option<[Mat; 4]> {
        if self.is_confluent() {
            return None;
        }
        let mut out = [Mat::zeros(); 4];
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.coeffs[0];
        }
        Some(out)
    }

    pub fn x(&self, z: f64) -> Mat {
        if z == 0.0 {
            return Mat::identity();
        }
        let mut acc = Mat::zeros();
        for t in &self.terms {
            let e = (t.rate * z).exp();
            let mut zp = 1.0;
            for c in &t.coeffs {
                acc += c * (e * zp);
                zp *= z;
            }
        }
        acc
    }

    /// n-th derivative of X at z = 0.
    pub fn x_derivative_at_zero(&self, n: u32) -> Mat {
        let mut acc = Mat::zeros();
        for t in &self.terms {
            for (p, c) in t.coeffs.iter().enumerate() {
                let p = p as u32;
                if p > n {
                    break;
                }
                // d^n/dz^n [z^p e^{μz}] at 0 = n!/(n-p)! μ^{n-p}
                let falling: f64 = ((n - p + 1)..=n).map(f64::from).product();
                acc += c * (t.rate.powu(n - p) * falling);
            }
        }
        acc
    }

    /// The diagonal mismatch matrix M(z).
    pub fn m(&self, z: f64) -> Mat {
        let r = self.params.frame_rates();
        Mat::from_diagonal(&nalgebra::Vector4::from_fn(|j, _| {
            C64::from_polar(1.0, r[j] * z)
        }))
    }

    /// Φ(z) = M(z)X(z), the propagator of (A_S1, A_S2, A_I1†, A_I2†).
    pub fn phi(&self, z: f64) -> Mat {
        self.m(z) * self.x(z)
    }
}

/// Power series of (delta + t)^(-m) up to t^order.
fn inverse_power_series(delta: C64, m: usize, order: usize) -> Vec<C64> {
    let base = delta.powi(-(m as i32));
    let mut out = Vec::with_capacity(order + 1);
    let mut coef = ONE;
    for r in 0..=order {
        out.push(base * coef);
        // next: coef *= -(m + r)/(r + 1) / delta
        coef *= -((m + r) as f64) / ((r + 1) as f64) / delta;
    }
    out
}

fn series_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum())
        .collect()
}

/// Confluent expansion: for a root μ of multiplicity m, the residue of
/// P(x)e^{xz}/Δ(x) at μ is e^{μz} Σₚ zᵖ/p! · g^{[m−1−p]}, where g is P divided by
/// the remaining factors of Δ and g^{[r]} its r-th Taylor coefficient at μ.
fn confluent_terms(roots: &Roots, adj: &AdjugateCoefficients) -> Vec<ExpTerm> {
    roots
        .clusters
        .iter()
        .map(|cl| {
            let mu = cl.center;
            let m = cl.multiplicity();
            let order = m - 1;
            let mut scalar = vec![ZERO; order + 1];
            scalar[0] = ONE;
            for other in &roots.clusters {
                if other.center == mu {
                    continue;
                }
                let s = inverse_power_series(mu - other.center, other.multiplicity(), order);
                scalar = series_mul(&scalar, &s);
            }
            let p_series = adj.taylor(mu, order);
            let g: Vec<Mat> = (0..=order)
                .map(|k| {
                    (0..=k).fold(Mat::zeros(), |acc, i| acc + p_series[i] * scalar[k - i])
                })
                .collect();
            let mut factorial = 1.0;
            let coeffs = (0..m)
                .map(|p| {
                    if p > 0 {
                        factorial *= p as f64;
                    }
                    g[order - p] / C64::new(factorial, 0.0)
                })
                .collect();
            ExpTerm { rate: mu, coeffs }
        })
        .collect()
}

/// Mean amplitudes in the ordering (ξ_S1, ξ_S2, ξ*_I1, ξ*_I2).
pub fn to_frame_vector(means: &[C64; 4]) -> [C64; 4] {
    [means[0], means[1], means[2].conj(), means[3].conj()]
}

pub fn from_frame_vector(v: &[C64; 4]) -> [C64; 4] {
    to_frame_vector(v)
}

/// ξ(z) = M(z)X(z)ξ(0) for a frame-ordered vector; the reservoir term has zero mean.
pub fn propagate_mean(prop: &Propagator, xi0: &[C64; 4], z: f64) -> [C64; 4] {
    let v = nalgebra::Vector4::from_column_slice(xi0);
    let out = prop.phi(z) * v;
    [out[0], out[1], out[2], out[3]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Some root has a nonzero real part: exponential amplification dominates.
    Hyperbolic,
    /// All roots purely imaginary: oscillatory exchange dominates.
    Elliptic,
    /// Root collision on the border between the two.
    Boundary,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Hyperbolic => "hyperbolic",
            Regime::Elliptic => "elliptic",
            Regime::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// No damping: the real parts of the roots decide directly.
    Lossless,
    /// Split quartic with damping: real parts shifted by (γ_S + γ_I)/2.
    DampingCompensated,
    /// Damping without the split form; no regime label is assigned.
    NoClosedFormCriterion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    /// `None` when [`Criterion::NoClosedFormCriterion`] applies.
    pub regime: Option<Regime>,
    /// max Re λ over the numeric roots, without any compensation.
    pub max_real: f64,
    /// max |Re λ| used for the decision (damping-compensated when applicable).
    pub governing_real: f64,
    pub criterion: Criterion,
}

pub fn classify_regime(dp: &DerivedParams) -> Result<RegimeReport> {
    let roots = find_roots(&char_poly(dp))?;
    let max_real = roots.max_real();
    let split = closed_form_conditions(dp).is_ok();
    let lossless = dp.is_lossless();

    if !split {
        let governing_real = roots.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        if !lossless {
            return Ok(RegimeReport {
                regime: None,
                max_real,
                governing_real,
                criterion: Criterion::NoClosedFormCriterion,
            });
        }
        let tol = 1e-8 * (1.0 + roots.max_abs());
        let regime = if governing_real > tol {
            Regime::Hyperbolic
        } else {
            Regime::Elliptic
        };
        return Ok(RegimeReport {
            regime: Some(regime),
            max_real,
            governing_real,
            criterion: Criterion::Lossless,
        });
    }

    let closed = closed_form_roots(dp)?;
    let shift = 0.5 * (dp.damping[0] + dp.damping[2]);
    let governing_real = closed
        .iter()
        .map(|v| (v.re + shift).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 + closed.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = 1e-8 * scale;

    let equal_damping = dp.damping[0] == dp.damping[2];
    let regime = if equal_damping {
        // The discriminants are real; their sign decides, zero marks a collision.
        let discs = closed_form_discriminants(dp);
        let dtol = 1e-9 * scale * scale;
        if discs.iter().any(|d| d.re > dtol) {
            Regime::Hyperbolic
        } else if discs.iter().any(|d| d.re.abs() <= dtol) {
            Regime::Boundary
        } else {
            Regime::Elliptic
        }
    } else if governing_real > tol {
        Regime::Hyperbolic
    } else {
        Regime::Elliptic
    };

    Ok(RegimeReport {
        regime: Some(regime),
        max_real,
        governing_real,
        criterion: if lossless {
            Criterion::Lossless
        } else {
            Criterion::DampingCompensated
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{derive_params, CouplerConfig};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lossless(kappa: f64, gain: f64, dk: f64) -> DerivedParams {
        let cfg = CouplerConfig {
            nonlinear: [c(1.0, 0.0); 2],
            pump: [c(gain, 0.0); 2],
            kappa_signal: c(kappa, 0.0),
            kappa_idler: c(kappa, 0.0),
            // Δk = ½ Σ (k_S + k_I − k_P) with only the signal wavevectors set.
            k_signal: [dk, dk],
            damping: [0.0; 4],
            reservoir: [0.0; 4],
            ..Default::default()
        };
        derive_params(&cfg).unwrap()
    }

    #[test]
    fn free_propagation_polynomial_vanishes() {
        let p = char_poly(&lossless(0.0, 0.0, 0.0));
        for x in p.coefficients().iter().skip(1) {
            assert_eq!(*x, ZERO);
        }
        let prop = Propagator::new(&lossless(0.0, 0.0, 0.0)).unwrap();
        for z in [0.0, 0.7, 3.0] {
            assert!((prop.x(z) - Mat::identity()).norm() < 1e-15);
        }
    }

    #[test]
    fn bare_gain_polynomial() {
        // K = 0, κ = 0, G₁ = G₂ = G: a = 0, b = −2G², c = 0, d = G⁴.
        let g = 1.3;
        let p = char_poly(&lossless(0.0, g, 0.0));
        assert_eq!(p.a, ZERO);
        assert!((p.b - c(-2.0 * g * g, 0.0)).norm() < 1e-14);
        assert_eq!(p.c, ZERO);
        assert!((p.d - c(g.powi(4), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn damping_sum_is_leading_coefficient() {
        let dp = derive_params(&CouplerConfig::default()).unwrap();
        assert!((char_poly(&dp).a - c(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn double_roots_of_square() {
        let roots = find_roots(&char_poly(&lossless(0.0, 1.0, 0.0))).unwrap();
        assert_eq!(roots.clusters.len(), 2);
        assert!((roots.values[0] - ONE).norm() < 1e-12);
        assert!((roots.values[1] - ONE).norm() < 1e-12);
        assert!((roots.values[2] + ONE).norm() < 1e-12);
        assert!((roots.values[3] + ONE).norm() < 1e-12);
    }

    #[test]
    fn symmetric_lossless_has_two_double_imaginary_roots() {
        let dp = lossless(2.0, 1.0, 0.0);
        let roots = find_roots(&char_poly(&dp)).unwrap();
        assert_eq!(roots.clusters.len(), 2);
        let w = 3f64.sqrt();
        assert!((roots.values[0] - c(0.0, w)).norm() < 1e-12);
        assert!((roots.values[3] - c(0.0, -w)).norm() < 1e-12);
        let closed = closed_form_roots(&dp).unwrap();
        for r in closed {
            assert!(roots.values.iter().any(|v| (v - r).norm() < 1e-10));
        }
    }

    #[test]
    fn derivative_matches_expansion() {
        let p = CharPoly {
            a: c(0.3, -1.0),
            b: c(2.0, 0.5),
            c: c(-1.0, 0.2),
            d: c(0.7, 0.0),
            l_s: ZERO,
            l_i: ZERO,
            l_bar: [ZERO; 2],
        };
        let x = c(0.4, 1.1);
        let d1 = ((x * 4.0 + p.a * 3.0) * x + p.b * 2.0) * x + p.c;
        assert!((p.derivative(x, 1) - d1).norm() < 1e-13);
        assert!((p.derivative(x, 4) - c(24.0, 0.0)).norm() < 1e-13);
        assert_eq!(p.derivative(x, 0), p.eval(x));
    }

    #[test]
    fn closed_form_single_guide_gain() {
        let g = 0.8;
        let cfg = CouplerConfig {
            pump: [c(g, 0.0); 2],
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            damping: [0.3; 4],
            ..Default::default()
        };
        let dp = derive_params(&cfg).unwrap();
        let r = closed_form_roots(&dp).unwrap();
        assert!((r[0] - c(-0.3 + g, 0.0)).norm() < 1e-14);
        assert!((r[1] - c(-0.3 - g, 0.0)).norm() < 1e-14);
        assert!((r[2] - c(-0.3 + g, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn closed_form_with_unequal_signal_and_idler_damping() {
        let cfg = CouplerConfig {
            pump: [c(0.5, 0.0); 2],
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            k_pump: [1.0, 1.0],
            damping: [0.3, 0.3, 0.1, 0.1],
            ..Default::default()
        };
        let dp = derive_params(&cfg).unwrap();
        let closed = closed_form_roots(&dp).unwrap();
        // uncoupled identical guides: each root is double
        assert!((closed[0] - closed[2]).norm() < 1e-14 && (closed[1] - closed[3]).norm() < 1e-14);
        let p = char_poly(&dp);
        for r in closed {
            assert!(p.eval(r).norm() < 1e-12, "{r}");
        }
    }

    #[test]
    fn closed_form_rejects_unequal_damping() {
        let mut cfg = CouplerConfig::default();
        cfg.damping[1] = 0.5;
        let err = closed_form_roots(&derive_params(&cfg).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref s) if s.contains("gamma_S1")));
    }

    #[test]
    fn closed_form_rejects_wrong_pump_phase() {
        let mut cfg = CouplerConfig::default();
        cfg.pump[1] = C64::from_polar(1.0, 0.4);
        let err = closed_form_roots(&derive_params(&cfg).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref s) if s.contains("G1")));
    }

    #[test]
    fn no_gain_closed_form_matches_numeric() {
        let dp = lossless(1.5, 0.0, 0.0);
        let closed = closed_form_roots(&dp).unwrap();
        let numeric = find_roots(&char_poly(&dp)).unwrap();
        // compared as multisets
        for r in closed {
            assert!(numeric.values.iter().any(|v| (v - r).norm() < 1e-10), "{r}");
        }
    }

    #[test]
    fn residues_sum_to_identity() {
        let cfg = CouplerConfig {
            pump: [c(0.7, 0.2), c(-0.3, 0.9)],
            kappa_signal: c(1.1, -0.4),
            kappa_idler: c(0.5, 0.6),
            k_pump: [0.3, -0.2],
            k_signal: [0.9, 0.1],
            ..Default::default()
        };
        let prop = Propagator::new(&derive_params(&cfg).unwrap()).unwrap();
        let a = prop.residues().expect("generic parameters have simple roots");
        let sum: Mat = a.iter().sum();
        assert!((sum - Mat::identity()).camax() < 1e-10);
    }

    #[test]
    fn residue_formula_refuses_multiple_roots() {
        let dp = lossless(2.0, 1.0, 0.0);
        let roots = find_roots(&char_poly(&dp)).unwrap();
        assert!(residue_matrices(&roots.values, &adjugate_coefficients(&dp)).is_err());
    }

    #[test]
    fn frame_matrix_is_unimodular() {
        let cfg = CouplerConfig {
            k_pump: [1.0, 3.0],
            k_signal: [0.5, -2.0],
            k_idler: [4.0, 1.0],
            ..Default::default()
        };
        let prop = Propagator::new(&derive_params(&cfg).unwrap()).unwrap();
        assert_eq!(prop.m(0.0), Mat::identity());
        for z in [0.3, 1.7, 9.0] {
            assert!((prop.m(z).determinant().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_guide_amplifier_mean() {
        let g = 0.9;
        let cfg = CouplerConfig {
            pump: [c(g, 0.0), ZERO],
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            damping: [0.0; 4],
            ..Default::default()
        };
        let prop = Propagator::new(&derive_params(&cfg).unwrap()).unwrap();
        for z in [0.1, 0.5, 1.3] {
            let xi = propagate_mean(&prop, &[ONE, ZERO, ZERO, ZERO], z);
            assert!((xi[0].norm() - (g * z).cosh()).abs() < 1e-12);
        }
        let zero = propagate_mean(&prop, &[ZERO; 4], 1.0);
        assert_eq!(zero, [ZERO; 4]);
    }

    #[test]
    fn regime_examples() {
        let r = classify_regime(&lossless(2.0, 1.0, 0.0)).unwrap();
        assert_eq!(r.regime, Some(Regime::Elliptic));

        let r = classify_regime(&lossless(2.0, 1.0, 5.0)).unwrap();
        assert_eq!(r.regime, Some(Regime::Hyperbolic));

        let r = classify_regime(&lossless(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(r.regime, Some(Regime::Hyperbolic));
        assert!((r.governing_real - 1.0).abs() < 1e-12);
        assert!((r.max_real - 1.0).abs() < 1e-12);

        // s = |Δk| + 2|G| exactly: root collision.
        let r = classify_regime(&lossless(1.5, 1.0, 1.0)).unwrap();
        assert_eq!(r.regime, Some(Regime::Boundary));
    }

    #[test]
    fn lossy_generic_gets_no_label() {
        let cfg = CouplerConfig {
            damping: [0.1, 0.2, 0.3, 0.4],
            ..Default::default()
        };
        let r = classify_regime(&derive_params(&cfg).unwrap()).unwrap();
        assert_eq!(r.regime, None);
        assert_eq!(r.criterion, Criterion::NoClosedFormCriterion);
    }

    #[test]
    fn lossy_split_form_is_compensated() {
        let cfg = CouplerConfig {
            kappa_signal: ZERO,
            kappa_idler: ZERO,
            ..Default::default()
        };
        let r = classify_regime(&derive_params(&cfg).unwrap()).unwrap();
        assert_eq!(r.criterion, Criterion::DampingCompensated);
        assert_eq!(r.regime, Some(Regime::Hyperbolic));
        assert!((r.governing_real - 1.0).abs() < 1e-12);
        assert!((r.max_real - 0.8).abs() < 1e-12);
    }
}
