//! Truncated number-basis numerics for coherent-state discrimination.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;
pub const DEFAULT_MAX_DIM: usize = 4096;

const SAFETY_MARGIN: usize = 10;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const KEPT_MASS_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;
const FLUSH_RATIO: f64 = 1e-40;

/// Hermitian operator on the span of `|0⟩ … |dim-1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::param("Fock operator must be square"));
        }
        let op = FockOperator { matrix };
        let dev = op.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::Numeric(format!(
                "operator is not Hermitian (max deviation {dev:.3e})"
            )));
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(self · other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &FockOperator) -> f64 {
        // Tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij) for Hermitian B.
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.clone().symmetric_eigenvalues().iter().copied().collect()
    }

    /// Hermitian, unit trace and positive semidefinite within tolerance.
    pub fn is_density(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
            && (self.trace() - 1.0).abs() <= TRACE_TOL
            && self.eigenvalues().iter().all(|&l| l >= -TRACE_TOL)
    }

    /// Debug dump: `row,col,re,im` per entry.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "col", "re", "im"])?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.matrix[(i, j)];
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    format!("{:.11e}", z.re),
                    format!("{:.11e}", z.im),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `⟨β|γ⟩ = exp(-|β|²/2 - |γ|²/2 + β* γ)`.
pub fn coherent_overlap(beta: Complex64, gamma: Complex64) -> Complex64 {
    (beta.conj() * gamma - 0.5 * beta.norm_sqr() - 0.5 * gamma.norm_sqr()).exp()
}

/// Cutoff dimension for a coherent state of `mean_photons` with the default
/// 4096 ceiling.
pub fn truncation_dim(mean_photons: f64, tail_bound: f64) -> Result<usize> {
    truncation_dim_with_max(mean_photons, tail_bound, DEFAULT_MAX_DIM)
}

/// Smallest `d` with `P(N ≥ d) < tail_bound` for `N ~ Poisson(mean_photons)`,
/// plus a margin of ten levels.
pub fn truncation_dim_with_max(mean_photons: f64, tail_bound: f64, max_dim: usize) -> Result<usize> {
    if !(mean_photons.is_finite() && mean_photons >= 0.0) {
        return Err(Error::param(format!("<n> = {mean_photons} must be >= 0")));
    }
    if !(tail_bound > 0.0 && tail_bound < 1.0) {
        return Err(Error::param(format!("tail bound {tail_bound} outside (0, 1)")));
    }
    // Poisson tails fall off far faster than 60 standard deviations.
    let horizon = (mean_photons + 60.0 * mean_photons.sqrt() + 200.0).ceil() as usize;
    let ln_pmf: Vec<f64> = (0..horizon)
        .scan(0.0f64, |ln_fact, k| {
            if k > 0 {
                *ln_fact += (k as f64).ln();
            }
            let lp = if mean_photons == 0.0 {
                if k == 0 { 0.0 } else { f64::NEG_INFINITY }
            } else {
                k as f64 * mean_photons.ln() - mean_photons - *ln_fact
            };
            Some(lp)
        })
        .collect();
    // Suffix sums from the top avoid cancellation in 1 - cdf.
    let mut tail = 0.0;
    let mut cutoff = horizon;
    for d in (1..horizon).rev() {
        tail += ln_pmf[d].exp();
        if tail < tail_bound {
            cutoff = d;
        } else {
            break;
        }
    }
    let dim = cutoff + SAFETY_MARGIN;
    if dim > max_dim {
        return Err(Error::Capacity(format!(
            "<n> = {mean_photons} needs Fock dimension {dim}, above the limit {max_dim}"
        )));
    }
    Ok(dim)
}

/// Number-basis amplitudes `e^{-|α|²/2} αⁿ/√n!`, computed in log space so
/// large amplitudes do not underflow.
fn coherent_amplitudes(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let r = alpha.norm();
    let arg = alpha.arg();
    if r == 0.0 {
        let mut v = DVector::zeros(dim);
        v[0] = Complex64::new(1.0, 0.0);
        return v;
    }
    let ln_r = r.ln();
    let mut ln_fact = 0.0;
    DVector::from_iterator(
        dim,
        (0..dim).map(|n| {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let ln_mag = -0.5 * r * r + n as f64 * ln_r - 0.5 * ln_fact;
            Complex64::from_polar(ln_mag.exp(), n as f64 * arg)
        }),
    )
}

fn normalized_state(alpha: Complex64, dim: usize) -> Result<DVector<Complex64>> {
    if dim == 0 {
        return Err(Error::param("Fock dimension must be positive"));
    }
    let v = coherent_amplitudes(alpha, dim);
    let kept = v.norm_squared();
    if kept < 1.0 - KEPT_MASS_TOL {
        return Err(Error::Truncation { dim, kept });
    }
    Ok(v.unscale(kept.sqrt()))
}

/// `|α⟩⟨α|` in the first `dim` number states, renormalized to unit trace.
pub fn fock_density(alpha: Complex64, dim: usize) -> Result<FockOperator> {
    let v = normalized_state(alpha, dim)?;
    Ok(FockOperator {
        matrix: &v * v.adjoint(),
    })
}

/// How the `M` points are split between bit 0 and bit 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitAssignment {
    /// Bit of point `p` is `p mod 2`: neighbours carry opposite bits.
    Interleaved,
    /// Bit 0 on `p < M/2`, bit 1 on the antipodes.
    Contiguous,
}

impl BitAssignment {
    pub fn bit_of(self, p: u32, m: u32) -> u8 {
        match self {
            BitAssignment::Interleaved => (p % 2) as u8,
            BitAssignment::Contiguous => (p >= m / 2) as u8,
        }
    }
}

/// Key-averaged state Eve sees for data bit `bit`: the uniform mixture of the
/// `M/2` coherent states `|α₀ e^{iθ_p}⟩` that carry that bit.
pub fn mixture_density(bit: u8, m: u32, alpha0: f64, dim: usize) -> Result<FockOperator> {
    mixture_density_with(bit, m, alpha0, dim, BitAssignment::Interleaved)
}

pub fn mixture_density_with(
    bit: u8,
    m: u32,
    alpha0: f64,
    dim: usize,
    assignment: BitAssignment,
) -> Result<FockOperator> {
    if bit > 1 {
        return Err(Error::param(format!("bit {bit} is not 0 or 1")));
    }
    crate::keystream::check_alphabet(m)?;
    if assignment == BitAssignment::Interleaved && m % 4 != 2 {
        return Err(Error::param(format!(
            "M = {m} violates M ≡ 2 (mod 4), required by the bit-to-point mapping"
        )));
    }
    let points: Vec<u32> = (0..m).filter(|&p| assignment.bit_of(p, m) == bit).collect();
    let mut states = DMatrix::<Complex64>::zeros(dim, points.len());
    for (col, &p) in points.iter().enumerate() {
        let theta = 2.0 * PI * p as f64 / m as f64;
        let v = normalized_state(Complex64::from_polar(alpha0, theta), dim)?;
        states.set_column(col, &v);
    }
    let mut rho = &states * states.adjoint();
    rho.unscale_mut(points.len() as f64);
    // Exact Hermitian symmetry.
    let rho = (&rho + rho.adjoint()).scale(0.5);
    Ok(FockOperator { matrix: rho })
}

/// `½ Σ|λᵢ|` over the eigenvalues of `a - b`.
pub fn trace_distance(a: &FockOperator, b: &FockOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::param(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    for op in [a, b] {
        let dev = op.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::Numeric(format!(
                "operator is not Hermitian (max deviation {dev:.3e})"
            )));
        }
        if (op.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::Numeric(format!(
                "operator trace {} is not 1",
                op.trace()
            )));
        }
    }
    let diff = &a.matrix - &b.matrix;
    let mut diff = (&diff + diff.adjoint()).scale(0.5);
    // Entries far below the working precision underflow inside the Jacobi
    // rotations and poison the eigenvalues with NaN.
    let scale = diff.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for x in diff.iter_mut() {
        if x.norm() < FLUSH_RATIO * scale {
            *x = Complex64::new(0.0, 0.0);
        }
    }
    let eig = diff.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric("eigensolver returned a non-finite eigenvalue".into()));
    }
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let residual = (&diff * v - v.scale(lambda)).norm();
        if residual.is_nan() || residual >= RESIDUAL_TOL {
            return Err(Error::Numeric(format!(
                "eigenpair {i} residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"
            )));
        }
    }
    let d = 0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

/// Minimum error probability for telling `rho0` from `rho1` with equal priors.
pub fn helstrom_error(rho0: &FockOperator, rho1: &FockOperator) -> Result<f64> {
    Ok(0.5 * (1.0 - trace_distance(rho0, rho1)?))
}
