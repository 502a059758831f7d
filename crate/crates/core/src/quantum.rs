//! Measurement-optimized bounds for quantum state families: the Ω
//! superoperator on full-rank density operators, the quantum analogue of
//! the derivative-constraint matrix, and pure-state Fisher information on
//! a truncated Fock basis.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues below this are treated as a rank deficiency: Ω divides by
/// eigenvalue pair sums, so near-singular densities must be regularized.
pub const DENSITY_RANK_TOL: f64 = 1e-10;

/// Fock-space truncation sufficient for the coherent-state family at
/// θ ≥ 0.1 (leakage far below 1e−10).
pub const DEFAULT_FOCK_TRUNCATION: usize = 60;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.norm()))
}

fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    Ok(())
}

/// A density operator held in eigendecomposed form: ρ = Σ pᵢ|i⟩⟨i|.
#[derive(Clone, Debug)]
pub struct DensityEigen {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl DensityEigen {
    /// Diagonalizes a Hermitian, unit-trace, PSD matrix.
    pub fn from_density(rho: &CMatrix) -> Result<Self> {
        check_hermitian(rho, "density operator")?;
        let eig = rho.clone().symmetric_eigen();
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        Self::from_parts(eigenvalues, eig.eigenvectors)
    }

    /// Builds from a prepared spectrum and orthonormal eigenvector columns.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{d} eigenvalues with a {}x{} eigenvector matrix",
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        if let Some(&p) = eigenvalues.iter().find(|&&p| p < -1e-12) {
            return Err(Error::NotPositiveSemidefinite(p));
        }
        let trace: f64 = eigenvalues.iter().sum();
        if (trace - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density trace is {trace}, expected 1"
            )));
        }
        let gram = eigenvectors.adjoint() * &eigenvectors;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - Complex64::new(expect, 0.0)).norm() > 1e-10 {
                    return Err(Error::InvalidParameter(
                        "eigenvectors are not orthonormal".into(),
                    ));
                }
            }
        }
        let eigenvalues = eigenvalues.iter().map(|&p| p.max(0.0)).collect();
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// Reassembles ρ = U diag(p) U†.
    pub fn density(&self) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &p) in self.eigenvalues.iter().enumerate() {
            for i in 0..d {
                scaled[(i, j)] *= p;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Applies Ω_ρ(X) = Σᵢⱼ 2/(pᵢ+pⱼ) |i⟩⟨i|X|j⟩⟨j| to a Hermitian X.
/// Requires a full-rank density (all pᵢ above [`DENSITY_RANK_TOL`]).
pub fn omega_apply(rho: &DensityEigen, x: &CMatrix) -> Result<CMatrix> {
    check_hermitian(x, "superoperator argument")?;
    if x.nrows() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, density has dimension {}",
            x.nrows(),
            x.ncols(),
            rho.dim()
        )));
    }
    let min = rho
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min <= DENSITY_RANK_TOL {
        return Err(Error::RankDeficientDensity(min));
    }
    let u = &rho.eigenvectors;
    let mut y = u.adjoint() * x * u;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            y[(i, j)] *= 2.0 / (rho.eigenvalues[i] + rho.eigenvalues[j]);
        }
    }
    Ok(u * y * u.adjoint())
}

/// A differentiable family of density operators θ ↦ ρ(θ).
pub trait DensityFamily {
    fn dim(&self) -> usize;
    fn density(&self, theta: f64) -> Result<CMatrix>;
    fn density_derivative(&self, theta: f64) -> Result<CMatrix>;
}

/// Quantum derivative-constraint matrix
/// Q_kl = Tr{(∂_θρ|_{θ_k}) Ω_{ρ(θ)} (∂_θρ|_{θ_l})}.
/// Feeding Q and a bias vector to the bound engine gives the
/// measurement-optimized analogue of the classical bound.
pub fn q_ecrb_matrix(
    family: &dyn DensityFamily,
    test_points: &[f64],
    theta: f64,
) -> Result<DMatrix<f64>> {
    if test_points.is_empty() {
        return Err(Error::InvalidParameter("no test points given".into()));
    }
    let rho = DensityEigen::from_density(&family.density(theta)?)?;
    let derivs: Vec<CMatrix> = test_points
        .iter()
        .map(|&tk| family.density_derivative(tk))
        .collect::<Result<_>>()?;
    let n = derivs.len();
    let mut q = DMatrix::zeros(n, n);
    for l in 0..n {
        let omega_dl = omega_apply(&rho, &derivs[l])?;
        for k in 0..=l {
            // Tr{AB} for Hermitian A, B is real; sum A_ij B_ji directly.
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..rho.dim() {
                for j in 0..rho.dim() {
                    tr += derivs[k][(i, j)] * omega_dl[(j, i)];
                }
            }
            q[(k, l)] = tr.re;
            q[(l, k)] = tr.re;
        }
    }
    Ok(q)
}

/// A pure state and its θ-derivative on a truncated basis.
#[derive(Clone, Debug)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    damplitudes: Vec<Complex64>,
}

impl PureState {
    /// Checks the truncated norm: a deficit beyond 1e−10 means the basis
    /// cut is eating state mass and derived quantities are unreliable.
    pub fn new(amplitudes: Vec<Complex64>, damplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != damplitudes.len() || amplitudes.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes vs {} derivatives",
                amplitudes.len(),
                damplitudes.len()
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let leakage = (1.0 - norm2).abs();
        if leakage > 1e-10 {
            return Err(Error::TruncationLeakage(leakage));
        }
        Ok(Self {
            amplitudes,
            damplitudes,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn damplitudes(&self) -> &[Complex64] {
        &self.damplitudes
    }

    /// |ψ⟩⟨ψ|.
    pub fn density(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj())
    }

    /// |∂ψ⟩⟨ψ| + |ψ⟩⟨∂ψ|.
    pub fn density_derivative(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |i, j| {
            self.damplitudes[i] * self.amplitudes[j].conj()
                + self.amplitudes[i] * self.damplitudes[j].conj()
        })
    }
}

/// Fisher information of a pure-state family:
/// 4(⟨∂ψ|∂ψ⟩ − |⟨∂ψ|ψ⟩|²).
pub fn qfi_pure(psi: &PureState) -> Result<f64> {
    let dd: f64 = psi.damplitudes.iter().map(|a| a.norm_sqr()).sum();
    let mut dpsi_psi = Complex64::new(0.0, 0.0);
    for (da, a) in psi.damplitudes.iter().zip(&psi.amplitudes) {
        dpsi_psi += da.conj() * a;
    }
    Ok(4.0 * (dd - dpsi_psi.norm_sqr()))
}

/// Coherent state |ψ_θ⟩ = Σₙ e^{−μ/2} μ^{n/2}/√(n!) |n⟩ with μ = −lnθ,
/// whose photon-number distribution is the single-draw count model
/// p(n|θ) = (−lnθ)ⁿθ/n!.
pub fn coherent_state(theta: f64, truncation: usize) -> Result<PureState> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    if truncation == 0 {
        return Err(Error::InvalidParameter("empty truncation".into()));
    }
    let mu = -theta.ln();
    let mut amplitudes = Vec::with_capacity(truncation);
    let mut damplitudes = Vec::with_capacity(truncation);
    let mut c = (-mu / 2.0).exp();
    for n in 0..truncation {
        if n > 0 {
            c *= (mu / n as f64).sqrt();
        }
        // d/dθ of ln c_n = (−1/θ)(n/(2μ) − 1/2) = (μ − n)/(2μθ)
        let dc = c * (mu - n as f64) / (2.0 * mu * theta);
        amplitudes.push(Complex64::new(c, 0.0));
        damplitudes.push(Complex64::new(dc, 0.0));
    }
    PureState::new(amplitudes, damplitudes)
}

/// Qubit family ρ(θ) = (I + r cosθ σ_z)/2 with 0 < r < 1: full rank,
/// diagonal, classical in the σ_z basis.
#[derive(Clone, Copy, Debug)]
pub struct BlochZFamily {
    pub r: f64,
}

impl DensityFamily for BlochZFamily {
    fn dim(&self) -> usize {
        2
    }

    fn density(&self, theta: f64) -> Result<CMatrix> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "r must lie in (0, 1) for a full-rank state, got {}",
                self.r
            )));
        }
        let z = self.r * theta.cos();
        Ok(CMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(vec![
                Complex64::new((1.0 + z) / 2.0, 0.0),
                Complex64::new((1.0 - z) / 2.0, 0.0),
            ]),
        ))
    }

    fn density_derivative(&self, theta: f64) -> Result<CMatrix> {
        let dz = -self.r * theta.sin();
        Ok(CMatrix::from_diagonal(
            &nalgebra::DVector::from_vec(vec![
                Complex64::new(dz / 2.0, 0.0),
                Complex64::new(-dz / 2.0, 0.0),
            ]),
        ))
    }
}

/// Pure coherent state mixed toward the maximally mixed state:
/// ρ_ε(θ) = (1−ε)|ψ_θ⟩⟨ψ_θ| + ε I/d.  The ε → 0 limit recovers the
/// pure-state quantities that Ω cannot act on directly.
#[derive(Clone, Copy, Debug)]
pub struct CoherentEpsilonFamily {
    pub epsilon: f64,
    pub truncation: usize,
}

impl DensityFamily for CoherentEpsilonFamily {
    fn dim(&self) -> usize {
        self.truncation
    }

    fn density(&self, theta: f64) -> Result<CMatrix> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        let psi = coherent_state(theta, self.truncation)?;
        let d = self.truncation as f64;
        let mut rho = psi.density() * Complex64::new(1.0 - self.epsilon, 0.0);
        for i in 0..self.truncation {
            rho[(i, i)] += Complex64::new(self.epsilon / d, 0.0);
        }
        Ok(rho)
    }

    fn density_derivative(&self, theta: f64) -> Result<CMatrix> {
        let psi = coherent_state(theta, self.truncation)?;
        Ok(psi.density_derivative() * Complex64::new(1.0 - self.epsilon, 0.0))
    }
}

/// Linear extrapolation of (ε, value) samples to ε = 0 using the two
/// smallest ε; removes the leading regularization error.
pub fn richardson_limit(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "extrapolation needs at least two samples".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (e1, v1) = sorted[1];
    let (e0, v0) = sorted[0];
    if e0 <= 0.0 || e1 <= e0 {
        return Err(Error::InvalidParameter(
            "extrapolation needs distinct positive epsilons".into(),
        ));
    }
    Ok(v0 + (v0 - v1) * e0 / (e1 - e0))
}
