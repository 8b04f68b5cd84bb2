//! Collective dephasing of `N` qubits coupled to one fluctuating field.
//!
//! The evolved state is `ρ(t) = Σ_{jk} φ((j−k)t) Θ_j ρ(0) Θ_k`, where the `Θ_j`
//! project onto the sectors with `j` qubits anti-aligned to the field and `φ`
//! is the characteristic function of the field-strength distribution. Time is
//! dimensionless (`Γt`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, DensityMatrix};
use crate::tolerance;

/// Unit vector `n̂` of the field direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldOrientation {
    x: f64,
    y: f64,
    z: f64,
}

impl FieldOrientation {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > tolerance::UNIT_VECTOR {
            return Err(Error::NotUnitVector(x, y, z));
        }
        Ok(Self { x, y, z })
    }

    /// Normalizes an arbitrary nonzero direction.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotUnitVector(x, y, z));
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn z_axis() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_z_axis(&self) -> bool {
        self.x == 0.0 && self.y == 0.0 && self.z == 1.0
    }

    /// `n̂·σ`.
    pub fn dot_sigma(&self) -> CMatrix {
        linalg::pauli_x() * c(self.x, 0.0) + linalg::pauli_y() * c(self.y, 0.0) + linalg::pauli_z() * c(self.z, 0.0)
    }
}

/// Distribution of the field strength, represented through its characteristic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDistribution {
    /// `φ(t) = e^{−|t|}`.
    StandardCauchy,
    /// Lorentzian centred at `center` with half-width `scale`: `φ(t) = e^{i x₀ t − scale·|t|}`.
    Cauchy { center: f64, scale: f64 },
    /// Samples `(t, φ(t))` on an ascending grid starting at `t = 0`; linear
    /// interpolation inside, `φ(−t) = conj φ(t)` for negative arguments.
    Tabulated { samples: Vec<(f64, Complex64)> },
}

impl SpectralDistribution {
    pub fn cauchy(center: f64, scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 || !center.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "Cauchy scale must be positive and finite (center {center}, scale {scale})"
            )));
        }
        Ok(Self::Cauchy { center, scale })
    }

    pub fn tabulated(samples: Vec<(f64, Complex64)>) -> Result<Self> {
        let spectrum = Self::Tabulated { samples };
        spectrum.validate()?;
        Ok(spectrum)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::StandardCauchy => Ok(()),
            Self::Cauchy { center, scale } => Self::cauchy(*center, *scale).map(|_| ()),
            Self::Tabulated { samples } => {
                let Some(&(t0, phi0)) = samples.first() else {
                    return Err(Error::InvalidSpectrum("empty table".into()));
                };
                if t0 != 0.0 || phi0 != linalg::ONE {
                    return Err(Error::InvalidSpectrum("table must start with φ(0) = 1".into()));
                }
                if samples.windows(2).any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater)) {
                    return Err(Error::InvalidSpectrum("grid must be strictly ascending".into()));
                }
                if let Some((t, phi)) = samples.iter().find(|(_, phi)| phi.norm() > 1.0 + 1e-12) {
                    return Err(Error::InvalidSpectrum(format!("|φ({t})| = {} exceeds 1", phi.norm())));
                }
                Ok(())
            }
        }
    }

    /// `φ(t)`.
    pub fn characteristic_function(&self, t: f64) -> Result<Complex64> {
        match self {
            Self::StandardCauchy => Ok(c((-t.abs()).exp(), 0.0)),
            Self::Cauchy { center, scale } => Ok(Complex64::from_polar((-scale * t.abs()).exp(), center * t)),
            Self::Tabulated { samples } => {
                let tau = t.abs();
                let last = samples.last().map_or(0.0, |s| s.0);
                if tau > last {
                    return Err(Error::OutOfGrid { t, max: last });
                }
                let k = samples.partition_point(|s| s.0 <= tau);
                let value = if k >= samples.len() {
                    samples[samples.len() - 1].1
                } else {
                    let (ta, pa) = samples[k - 1];
                    let (tb, pb) = samples[k];
                    let w = (tau - ta) / (tb - ta);
                    pa * c(1.0 - w, 0.0) + pb * c(w, 0.0)
                };
                Ok(if t < 0.0 { value.conj() } else { value })
            }
        }
    }
}

/// `Λ± = (I ± n̂·σ)/2`.
pub fn projectors(orientation: &FieldOrientation) -> Result<(CMatrix, CMatrix)> {
    let [x, y, z] = orientation.components();
    let orientation = FieldOrientation::new(x, y, z)?;
    let half = c(0.5, 0.0);
    let ns = orientation.dot_sigma();
    let id = linalg::identity(2);
    Ok(((&id + &ns) * half, (&id - &ns) * half))
}

pub const MAX_CHANNEL_QUBITS: usize = 6;

/// `Θ_j`: sum over the `C(N, j)` placements of `j` factors `Λ₋` among `N − j` factors `Λ₊`.
pub fn theta_operators(n_qubits: usize, orientation: &FieldOrientation) -> Result<Vec<CMatrix>> {
    if !(1..=MAX_CHANNEL_QUBITS).contains(&n_qubits) {
        return Err(Error::Unsupported(format!(
            "channel defined for 1..={MAX_CHANNEL_QUBITS} qubits, got {n_qubits}"
        )));
    }
    let (plus, minus) = projectors(orientation)?;
    let dim = 1usize << n_qubits;
    let mut thetas = vec![CMatrix::zeros(dim, dim); n_qubits + 1];
    // Bit k of `placement` (most significant first) marks qubit k+1 as carrying Λ₋.
    for placement in 0u32..(1u32 << n_qubits) {
        let factors: Vec<&CMatrix> = (0..n_qubits)
            .map(|k| {
                if placement & (1 << (n_qubits - 1 - k)) != 0 {
                    &minus
                } else {
                    &plus
                }
            })
            .collect();
        thetas[placement.count_ones() as usize] += linalg::kron_all(factors);
    }
    Ok(thetas)
}

/// `M_{jk}(t) = φ((j−k)t)` for `j, k = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCoefficients {
    n_qubits: usize,
    t: f64,
    entries: CMatrix,
}

impl ToeplitzCoefficients {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[(j, k)]
    }
}

/// Builds `M(t)` and rejects it when it is not positive semidefinite.
pub fn toeplitz_matrix(spectrum: &SpectralDistribution, n_qubits: usize, t: f64) -> Result<ToeplitzCoefficients> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let size = n_qubits + 1;
    // φ on the 2N+1 distinct diagonals.
    let mut diagonals = Vec::with_capacity(2 * size - 1);
    for offset in -(n_qubits as i64)..=(n_qubits as i64) {
        diagonals.push(spectrum.characteristic_function(offset as f64 * t)?);
    }
    let entries = CMatrix::from_fn(size, size, |j, k| diagonals[j + n_qubits - k]);
    let min_eigenvalue = linalg::hermitian_eigenvalues(&entries)?[0];
    if min_eigenvalue < -tolerance::TOEPLITZ_PSD {
        return Err(Error::ToeplitzNotPositive { min_eigenvalue });
    }
    Ok(ToeplitzCoefficients { n_qubits, t, entries })
}

/// Collective dephasing channel with cached sector projectors.
#[derive(Debug, Clone)]
pub struct DephasingChannel {
    n_qubits: usize,
    orientation: FieldOrientation,
    spectrum: SpectralDistribution,
    theta: Vec<CMatrix>,
}

impl DephasingChannel {
    pub fn new(n_qubits: usize, orientation: FieldOrientation, spectrum: SpectralDistribution) -> Result<Self> {
        spectrum.validate()?;
        let theta = theta_operators(n_qubits, &orientation)?;
        Ok(Self {
            n_qubits,
            orientation,
            spectrum,
            theta,
        })
    }

    /// z-axis field with the standard Cauchy spectrum.
    pub fn standard(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, FieldOrientation::z_axis(), SpectralDistribution::StandardCauchy)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn orientation(&self) -> &FieldOrientation {
        &self.orientation
    }

    pub fn spectrum(&self) -> &SpectralDistribution {
        &self.spectrum
    }

    pub fn theta_operators(&self) -> &[CMatrix] {
        &self.theta
    }

    /// `ρ(t) = Σ_{jk} M_{jk}(t) Θ_j ρ(0) Θ_k`.
    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if rho0.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: rho0.n_qubits(),
            });
        }
        let m = toeplitz_matrix(&self.spectrum, self.n_qubits, t)?;
        let dim = rho0.dim();
        let left: Vec<CMatrix> = self.theta.iter().map(|th| th * rho0.matrix()).collect();
        let mut out = CMatrix::zeros(dim, dim);
        for (j, lj) in left.iter().enumerate() {
            for (k, thk) in self.theta.iter().enumerate() {
                let w = m.get(j, k);
                if w != linalg::ZERO {
                    out += lj * thk * w;
                }
            }
        }
        DensityMatrix::from_matrix_unchecked(out)
    }

    /// Frobenius distance `‖ρ(t) − ρ(0)‖` at each sample time.
    pub fn state_changes(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<f64>> {
        times
            .iter()
            .map(|&t| Ok(self.evolve(rho0, t)?.frobenius_distance(rho0)))
            .collect()
    }
}

/// z-axis evolution: entry `(x, y)` is multiplied by `φ((w(x) − w(y)) t)` with `w` the Hamming weight.
pub fn evolve_z_fastpath(rho0: &DensityMatrix, t: f64, spectrum: &SpectralDistribution) -> Result<DensityMatrix> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    toeplitz_matrix(spectrum, rho0.n_qubits(), t)?;
    let n = rho0.n_qubits() as i64;
    let mut factors = Vec::with_capacity(2 * n as usize + 1);
    for offset in -n..=n {
        factors.push(spectrum.characteristic_function(offset as f64 * t)?);
    }
    let m = rho0.matrix();
    let out = CMatrix::from_fn(m.nrows(), m.ncols(), |x, y| {
        let delta = x.count_ones() as i64 - y.count_ones() as i64;
        m[(x, y)] * factors[(delta + n) as usize]
    });
    DensityMatrix::from_matrix_unchecked(out)
}

/// True when `‖ρ(t) − ρ(0)‖_F ≤ 1e−9` at every sample time.
pub fn is_dfs_state(channel: &DephasingChannel, rho0: &DensityMatrix, sample_times: &[f64]) -> Result<bool> {
    if sample_times.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(channel
        .state_changes(rho0, sample_times)?
        .into_iter()
        .all(|d| d <= tolerance::DFS_STATE_CHANGE))
}
