//! Operators on the truncated Fock space `span{|0⟩, …, |N⟩}`.
//!
//! Displacement matrix elements are evaluated from the associated-Laguerre
//! closed form, so any rectangular block of the infinite unitary `D(x, y)` is
//! exact up to rounding. Truncation enters only through the states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::OneModeCovariance;

pub type C64 = Complex64;

/// Default truncation level `N`.
pub const DEFAULT_TRUNCATION: usize = 60;
/// Largest accepted `1 − Tr ρ` for a truncated state.
pub const TRUNCATION_TOLERANCE: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense complex matrix on the Fock basis of dimension `N + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    mat: DMatrix<C64>,
}

impl FockOperator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        assert!(mat.is_square(), "Fock operators are square");
        FockOperator { mat }
    }

    pub fn from_real(mat: &DMatrix<f64>) -> Self {
        Self::from_matrix(mat.map(|v| C64::new(v, 0.0)))
    }

    /// `|ψ⟩⟨ψ|` for an amplitude vector (not renormalized).
    pub fn pure(psi: &DVector<C64>) -> Self {
        Self::from_matrix(psi * psi.adjoint())
    }

    pub fn identity(truncation: usize) -> Self {
        Self::from_matrix(DMatrix::identity(truncation + 1, truncation + 1))
    }

    pub fn vacuum(truncation: usize) -> Self {
        Self::number_state(0, truncation)
    }

    /// `|k⟩⟨k|`.
    pub fn number_state(k: usize, truncation: usize) -> Self {
        assert!(k <= truncation, "number state beyond truncation");
        let mut m = DMatrix::from_element(truncation + 1, truncation + 1, ZERO);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn truncation(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_mn|² for Hermitian ρ
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `Tr[ρ A]` for an operator given on the same basis.
    pub fn expectation(&self, a: &DMatrix<C64>) -> C64 {
        let n = self.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.mat[(i, j)] * a[(j, i)];
            }
        }
        acc
    }

    /// Smallest `M` with `Σ_{n > M} ρ_nn` below `tol`; the operator is
    /// numerically supported on `span{|0⟩, …, |M⟩}`.
    pub fn effective_truncation(&self, tol: f64) -> usize {
        let n = self.dim();
        let mut tail = 0.0;
        for m in (0..n).rev() {
            tail += self.mat[(m, m)].re.abs();
            if tail > tol {
                return m;
            }
        }
        0
    }

    /// Raw first and second moments of `q` and `p`.
    pub fn moments(&self) -> Moments {
        let ops = QuadratureOps::new(self.dim());
        Moments {
            mean_q: self.expectation(&ops.q).re,
            mean_p: self.expectation(&ops.p).re,
            qq: self.expectation(&ops.qq).re,
            pp: self.expectation(&ops.pp).re,
            qp: self.expectation(&ops.qp_sym).re,
        }
    }

    /// Restriction to the leading `truncation + 1` basis states.
    pub fn truncated(&self, truncation: usize) -> Self {
        let d = (truncation + 1).min(self.dim());
        Self::from_matrix(self.mat.view((0, 0), (d, d)).into_owned())
    }

    /// `Tr[ρ D(x, y)]`, the quantum characteristic function at `(x, y)`.
    pub fn charfn(&self, x: f64, y: f64) -> C64 {
        let m = self.effective_truncation(1e-20);
        charfn_block(&self.mat, m + 1, x, y)
    }
}

/// Raw moments `⟨q⟩, ⟨p⟩, ⟨q²⟩, ⟨p²⟩, ⟨(qp + pq)/2⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub mean_q: f64,
    pub mean_p: f64,
    pub qq: f64,
    pub pp: f64,
    pub qp: f64,
}

impl Moments {
    pub fn var_q(&self) -> f64 {
        self.qq - self.mean_q * self.mean_q
    }

    pub fn var_p(&self) -> f64 {
        self.pp - self.mean_p * self.mean_p
    }

    pub fn cov_qp(&self) -> f64 {
        self.qp - self.mean_q * self.mean_p
    }

    /// Moments after the displacement `D(a, b)`.
    pub fn displaced(&self, a: f64, b: f64) -> Moments {
        Moments {
            mean_q: self.mean_q + a,
            mean_p: self.mean_p + b,
            qq: self.qq + 2.0 * a * self.mean_q + a * a,
            pp: self.pp + 2.0 * b * self.mean_p + b * b,
            qp: self.qp + a * self.mean_p + b * self.mean_q + a * b,
        }
    }

    /// Weighted mixture of raw moments.
    pub fn mix<'a>(parts: impl IntoIterator<Item = (f64, &'a Moments)>) -> Moments {
        let mut out = Moments::default();
        for (w, m) in parts {
            out.mean_q += w * m.mean_q;
            out.mean_p += w * m.mean_p;
            out.qq += w * m.qq;
            out.pp += w * m.pp;
            out.qp += w * m.qp;
        }
        out
    }
}

/// Quadrature operators with exact matrix elements on a truncated basis.
pub struct QuadratureOps {
    pub q: DMatrix<C64>,
    pub p: DMatrix<C64>,
    pub qq: DMatrix<C64>,
    pub pp: DMatrix<C64>,
    pub qp_sym: DMatrix<C64>,
}

impl QuadratureOps {
    pub fn new(dim: usize) -> Self {
        let z = || DMatrix::from_element(dim, dim, ZERO);
        let (mut q, mut p, mut qq, mut pp, mut qp) = (z(), z(), z(), z(), z());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for n in 0..dim {
            let d = (2 * n + 1) as f64 / 2.0;
            qq[(n, n)] = C64::new(d, 0.0);
            pp[(n, n)] = C64::new(d, 0.0);
            if n + 1 < dim {
                let a = s * ((n + 1) as f64).sqrt();
                q[(n, n + 1)] = C64::new(a, 0.0);
                q[(n + 1, n)] = C64::new(a, 0.0);
                p[(n, n + 1)] = C64::new(0.0, -a);
                p[(n + 1, n)] = C64::new(0.0, a);
            }
            if n + 2 < dim {
                let b = 0.5 * (((n + 1) * (n + 2)) as f64).sqrt();
                qq[(n, n + 2)] = C64::new(b, 0.0);
                qq[(n + 2, n)] = C64::new(b, 0.0);
                pp[(n, n + 2)] = C64::new(-b, 0.0);
                pp[(n + 2, n)] = C64::new(-b, 0.0);
                qp[(n, n + 2)] = C64::new(0.0, -b);
                qp[(n + 2, n)] = C64::new(0.0, b);
            }
        }
        QuadratureOps {
            q,
            p,
            qq,
            pp,
            qp_sym: qp,
        }
    }
}

/// Annihilation operator on `dim` basis states.
pub fn annihilation(dim: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// `ln k!` for `k = 0..len`.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for k in 0..len {
        if k > 0 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Walks the diagonals of `D(x, y)`. For each offset `k ≥ 0` the callback
/// receives `k`, the phase-free prefactor `|α|^k e^{−|α|²/2}/√k!`, the unit
/// phase `e^{ikθ}`, and `h_n = √(n! k!/(n+k)!) L_n^{(k)}(|α|²)` for
/// `n = 0..len`. Then `⟨n+k|D|n⟩ = pre·phase·h_n` and
/// `⟨n|D|n+k⟩ = pre·(−1)^k·conj(phase)·h_n`.
fn for_each_diagonal(
    x: f64,
    y: f64,
    rows: usize,
    cols: usize,
    mut f: impl FnMut(usize, f64, C64, &[f64]),
) {
    let alpha = C64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2;
    let big_x = alpha.norm_sqr();
    let r = alpha.norm();
    let unit = if r > 0.0 { alpha / r } else { C64::new(1.0, 0.0) };
    let ln_r = if r > 0.0 { r.ln() } else { f64::NEG_INFINITY };
    let kmax = rows.max(cols);
    let lnf = ln_factorials(kmax);
    let mut phase = C64::new(1.0, 0.0);
    let mut h = vec![0.0; kmax];
    for k in 0..kmax {
        let len = rows.max(cols).saturating_sub(k);
        let pre = if k == 0 {
            (-0.5 * big_x).exp()
        } else {
            (k as f64 * ln_r - 0.5 * big_x - 0.5 * lnf[k]).exp()
        };
        let kf = k as f64;
        if len > 0 {
            h[0] = 1.0;
        }
        if len > 1 {
            h[1] = (1.0 + kf - big_x) / (1.0 + kf).sqrt();
        }
        for n in 1..len.saturating_sub(1) {
            let nf = n as f64;
            h[n + 1] = ((2.0 * nf + 1.0 + kf - big_x) * h[n] - (nf * (nf + kf)).sqrt() * h[n - 1])
                / ((nf + 1.0) * (nf + kf + 1.0)).sqrt();
        }
        f(k, pre, phase, &h[..len]);
        phase *= unit;
    }
}

/// Exact block `⟨m|D(x, y)|n⟩` for `m < rows`, `n < cols`.
pub fn displacement_elements(x: f64, y: f64, rows: usize, cols: usize) -> DMatrix<C64> {
    let mut d = DMatrix::from_element(rows, cols, ZERO);
    for_each_diagonal(x, y, rows, cols, |k, pre, phase, h| {
        if pre == 0.0 {
            return;
        }
        let lower = phase * pre;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let upper = phase.conj() * (pre * sign);
        for (n, &hn) in h.iter().enumerate() {
            if n + k < rows && n < cols {
                d[(n + k, n)] = lower * hn;
            }
            if k > 0 && n < rows && n + k < cols {
                d[(n, n + k)] = upper * hn;
            }
        }
    });
    d
}

/// Truncated displacement operator `D(x, y) = exp i(yq − xp)`.
///
/// Columns `n` with `(√n + |α| + 2)² ≤ N`, `|α|² = (x² + y²)/2`, are mapped
/// inside the retained space up to a negligible tail; see
/// [`displacement_valid_columns`].
pub fn displacement_fock(x: f64, y: f64, truncation: usize) -> FockOperator {
    let d = truncation + 1;
    FockOperator::from_matrix(displacement_elements(x, y, d, d))
}

/// Number of leading columns of the truncated `D(x, y)` that are unitary to
/// truncation accuracy.
pub fn displacement_valid_columns(x: f64, y: f64, truncation: usize) -> usize {
    let a = (0.5 * (x * x + y * y)).sqrt();
    let room = (truncation as f64).sqrt() - a - 2.0;
    if room < 0.0 {
        0
    } else {
        ((room * room).floor() as usize + 1).min(truncation + 1)
    }
}

/// `Tr[ρ D(x, y)]` using the leading `m × m` block of `rho`.
pub fn charfn_block(rho: &DMatrix<C64>, m: usize, x: f64, y: f64) -> C64 {
    let m = m.min(rho.nrows());
    let mut acc = ZERO;
    for_each_diagonal(x, y, m, m, |k, pre, phase, h| {
        if pre == 0.0 {
            return;
        }
        // ⟨n+k|D|n⟩ pairs with ρ_{n, n+k}; ⟨n|D|n+k⟩ with ρ_{n+k, n}
        let mut lo = ZERO;
        let mut up = ZERO;
        for (n, &hn) in h.iter().enumerate() {
            lo += rho[(n, n + k)] * hn;
            if k > 0 {
                up += rho[(n + k, n)] * hn;
            }
        }
        acc += phase * lo * pre;
        if k > 0 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += phase.conj() * up * (pre * sign);
        }
    });
    acc
}

/// `D(x, y) ρ D(x, y)*` on `truncation_out + 1` basis states, computed with the
/// exact rectangular block of `D`.
pub fn displace_state(rho: &FockOperator, x: f64, y: f64, truncation_out: usize) -> Result<FockOperator> {
    let d = displacement_elements(x, y, truncation_out + 1, rho.dim());
    let out = FockOperator::from_matrix(&d * rho.matrix() * d.adjoint());
    let deficit = rho.trace().re - out.trace().re;
    if deficit > TRUNCATION_TOLERANCE {
        return Err(Error::TruncationInsufficient {
            truncation: truncation_out,
            deficit,
            tolerance: TRUNCATION_TOLERANCE,
        });
    }
    Ok(out)
}

/// Centered Gaussian state with covariance `diag(α_q, α_p)`.
pub fn gaussian_state_fock(alpha: &OneModeCovariance, truncation: usize) -> Result<FockOperator> {
    gaussian_state_fock_tol(alpha, truncation, TRUNCATION_TOLERANCE)
}

/// [`gaussian_state_fock`] at the smallest truncation from `min_truncation`
/// upward (in steps of 1.5×, at most 400) that meets the trace tolerance.
pub fn gaussian_state_fock_auto(alpha: &OneModeCovariance, min_truncation: usize) -> Result<FockOperator> {
    let mut n = min_truncation.max(1);
    loop {
        match gaussian_state_fock(alpha, n) {
            Err(Error::TruncationInsufficient { .. }) if n < 400 => n = (n * 3 / 2).min(400),
            other => return other,
        }
    }
}

/// [`gaussian_state_fock`] with an explicit trace-deficit tolerance.
///
/// The state is `S(r) τ S(r)*` with `τ` thermal of mean photon number
/// `√(α_qα_p) − ½` and `r = ¼ ln(α_q/α_p)`. The squeeze operator is the
/// exponential of the generator `(r/2)(a*² − a²)` truncated on a padded space
/// large enough that the leading block is unaffected.
pub fn gaussian_state_fock_tol(
    alpha: &OneModeCovariance,
    truncation: usize,
    tolerance: f64,
) -> Result<FockOperator> {
    if truncation < 1 {
        return Err(Error::InvalidArgument("truncation N must be at least 1".into()));
    }
    let nbar = ((alpha.q() * alpha.p()).sqrt() - 0.5).max(0.0);
    let r = 0.25 * (alpha.q() / alpha.p()).ln();
    let dim = truncation + 1;
    let ratio = nbar / (nbar + 1.0);

    let pad = if r.abs() < 1e-15 {
        0
    } else {
        // amplitudes leak across the padding like tanh(r)^(distance/2)
        let t = r.abs().tanh();
        ((2.0 * (-37.0) / t.ln()).ceil() as usize + 20).min(400)
    };
    let full = dim + pad;

    let thermal: Vec<f64> = (0..full)
        .map(|n| (1.0 - ratio) * ratio.powi(n as i32))
        .collect();

    let rho = if pad == 0 {
        let mut m = DMatrix::zeros(dim, dim);
        for n in 0..dim {
            m[(n, n)] = thermal[n];
        }
        m
    } else {
        let a = annihilation(full);
        let ad = a.transpose();
        let gen = (&ad * &ad - &a * &a) * (0.5 * r);
        let u = gen.exp();
        let unitarity = (u.transpose() * &u - DMatrix::<f64>::identity(full, full)).amax();
        if unitarity > 1e-10 {
            return Err(Error::Inconsistent {
                what: "squeeze operator unitarity",
                deviation: unitarity,
            });
        }
        let lead = u.rows(0, dim);
        let mut scaled = lead.clone_owned();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= thermal[j];
        }
        scaled * lead.transpose()
    };

    let out = FockOperator::from_real(&rho);
    let deficit = out.trace_deficit();
    if deficit > tolerance {
        return Err(Error::TruncationInsufficient {
            truncation,
            deficit,
            tolerance,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::make_covariance;

    fn cov(q: f64, p: f64) -> OneModeCovariance {
        make_covariance(q, p).unwrap()
    }

    #[test]
    fn vacuum_is_exact() {
        let rho = gaussian_state_fock(&cov(0.5, 0.5), 20).unwrap();
        assert_eq!(rho.dim(), 21);
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(rho.trace_deficit().abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_diagonal() {
        let rho = gaussian_state_fock(&cov(1.0, 1.0), 40).unwrap();
        let nbar: f64 = 0.5;
        for n in 0..=40 {
            let want = (1.0 / (nbar + 1.0)) * (nbar / (nbar + 1.0)).powi(n);
            assert!((rho.matrix()[(n as usize, n as usize)].re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn squeezed_pure_state() {
        let rho = gaussian_state_fock(&cov(2.0, 0.125), 60).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
        let m = rho.moments();
        assert!((m.var_q() - 2.0).abs() < 1e-9);
        assert!((m.var_p() - 0.125).abs() < 1e-9);
        assert!(m.cov_qp().abs() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-14);
    }

    #[test]
    fn squeezed_thermal_moments() {
        let rho = gaussian_state_fock(&cov(1.5, 0.4), 60).unwrap();
        let m = rho.moments();
        assert!((m.var_q() - 1.5).abs() < 1e-9);
        assert!((m.var_p() - 0.4).abs() < 1e-9);
        assert!(m.mean_q.abs() < 1e-14 && m.mean_p.abs() < 1e-14);
    }

    #[test]
    fn truncation_failure_reported() {
        let err = gaussian_state_fock(&cov(6.0, 6.0), 20).unwrap_err();
        assert!(matches!(err, Error::TruncationInsufficient { .. }));
    }

    #[test]
    fn displacement_identity_and_vacuum_overlap() {
        let d = displacement_fock(0.0, 0.0, 10);
        assert_eq!(d, FockOperator::identity(10));
        for (x, y) in [(0.3, -1.2), (2.0, 1.5), (-3.0, 0.1)] {
            let d = displacement_elements(x, y, 1, 1);
            let want = (-(x * x + y * y) / 4.0f64).exp();
            assert!((d[(0, 0)] - C64::new(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn displacement_inverse() {
        let n = 60;
        for (x, y) in [(3.0, 3.0), (-2.5, 1.0), (0.7, -3.0)] {
            let d = displacement_fock(x, y, n);
            let dinv = displacement_fock(-x, -y, n);
            let prod = d.matrix() * dinv.matrix();
            let valid = displacement_valid_columns(x, y, n);
            assert!(valid > 5);
            for i in 0..valid {
                for j in 0..valid {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)].re - want).abs() < 1e-8 && prod[(i, j)].im.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn displacement_matches_generator_exponential() {
        // D = exp(αa* − α*a) on a padded space, compared on the leading block
        let (x, y) = (0.8, -0.6);
        let full = 80;
        let a = annihilation(full).map(|v| C64::new(v, 0.0));
        let alpha = C64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2;
        let gen = a.adjoint() * alpha - &a * alpha.conj();
        let d_exp = gen.exp();
        let d = displacement_elements(x, y, 20, 20);
        for i in 0..20 {
            for j in 0..20 {
                assert!((d[(i, j)] - d_exp[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displaced_coherent_state_moments() {
        let rho = displace_state(&FockOperator::vacuum(0), 1.2, -0.7, 60).unwrap();
        let m = rho.moments();
        assert!((m.mean_q - 1.2).abs() < 1e-12);
        assert!((m.mean_p + 0.7).abs() < 1e-12);
        assert!((m.var_q() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn charfn_of_vacuum_and_fock_one() {
        let vac = FockOperator::vacuum(5);
        let one = FockOperator::number_state(1, 5);
        for (x, y) in [(0.0, 0.0), (1.0, 0.5), (-2.0, 3.0)] {
            let big = (x * x + y * y) / 2.0;
            let g = (-big / 2.0f64).exp();
            assert!((vac.charfn(x, y) - C64::new(g, 0.0)).norm() < 1e-15);
            assert!((one.charfn(x, y) - C64::new(g * (1.0 - big), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn charfn_of_gaussian_state() {
        let a = cov(1.3, 0.6);
        let rho = gaussian_state_fock(&a, 60).unwrap();
        for (x, y) in [(0.4, 0.2), (1.5, -1.0), (-3.0, 2.5)] {
            let want = (-0.5 * (a.q() * y * y + a.p() * x * x)).exp();
            assert!((rho.charfn(x, y) - C64::new(want, 0.0)).norm() < 1e-9);
        }
    }
}
