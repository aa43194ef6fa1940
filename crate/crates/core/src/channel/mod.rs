//! One-sphere channel model.
//!
//! A point `x` seen from the array produces the steering vector
//! `a(x)[n] = exp(−j·2π·‖p_n − x‖/λ)`. Zone covariances average `a(x)a(x)ᴴ`
//! over points drawn from a spherical zone; channels are either synthesized
//! from a covariance eigenbasis (Karhunen-Loève) or built geometrically from
//! discrete scatterers around a position.

pub mod cache;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{scatterer_position, ArrayGeometry, SphericalZone, UserKinematics, Vec3};
use crate::numerics::{hermitian_deviation, hermitian_eig, orthonormal_basis, CMatrix, CVector};
use crate::{Error, Result};

/// Downlink channel `h` of one user, length N.
pub type ChannelVector = CVector;

/// Relative Hermitian tolerance accepted for covariance inputs.
pub const COVARIANCE_HERMITIAN_TOL: f64 = 1e-12;

/// Law used to draw points inside a zone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMeasure {
    /// Uniform over the `(r, θ, φ)` parameter box `[0, R] × [0, 2π) × [0, π]`.
    #[default]
    Parametric,
    /// Uniform over the ball volume.
    Volume,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneSampling {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub measure: SamplingMeasure,
}

impl ZoneSampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            measure: SamplingMeasure::Parametric,
        }
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter(
                "zone sampling needs at least one sample".into(),
            ));
        }
        Ok(())
    }
}

/// Spatial covariance estimate. Hermitian by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix(CMatrix);

impl CovarianceMatrix {
    /// Wraps a matrix after checking it is square, finite and Hermitian
    /// within [`COVARIANCE_HERMITIAN_TOL`].
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                context: "covariance (square matrix)",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        crate::numerics::check_finite(&m, "covariance")?;
        let deviation = hermitian_deviation(&m);
        if deviation > COVARIANCE_HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(m))
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// `fᴴ R f`.
    pub fn quadratic_form(&self, f: &CVector) -> f64 {
        f.dotc(&(&self.0 * f)).re
    }
}

/// Truncated eigenstructure `R ≈ U Λ Uᴴ`.
#[derive(Clone, Debug)]
pub struct KLBasis {
    /// N × r, orthonormal columns.
    pub basis: CMatrix,
    /// r positive weights, non-increasing.
    pub weights: Vec<f64>,
    pub rank: usize,
    /// `trace(R) − Σ weights`.
    pub residual_energy: f64,
    /// Largest discarded eigenvalue (0 when nothing was discarded).
    pub next_weight: f64,
}

impl KLBasis {
    pub fn dimension(&self) -> usize {
        self.basis.nrows()
    }

    /// `U Λ Uᴴ`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut scaled = self.basis.clone();
        for (j, w) in self.weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*w);
        }
        scaled * self.basis.adjoint()
    }

    /// Orthogonal projector onto the basis span.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn largest_weight(&self) -> f64 {
        self.weights.first().copied().unwrap_or(0.0)
    }
}

/// Spherical-wavefront steering vector for a point.
pub fn steering_vector(geom: &ArrayGeometry, point: Vec3, wavelength: f64) -> ChannelVector {
    let k = TAU / wavelength;
    CVector::from_iterator(
        geom.element_count(),
        (0..geom.element_count()).map(|i| {
            let d = geom.position_unchecked(i).distance(point);
            Complex64::from_polar(1.0, -k * d)
        }),
    )
}

/// Draws one point from `zone` under `measure`.
pub fn sample_zone_point<R: Rng + ?Sized>(
    zone: &SphericalZone,
    measure: SamplingMeasure,
    rng: &mut R,
) -> Vec3 {
    let (r, theta, phi) = match measure {
        SamplingMeasure::Parametric => (
            zone.radius * rng.random::<f64>(),
            TAU * rng.random::<f64>(),
            PI * rng.random::<f64>(),
        ),
        SamplingMeasure::Volume => {
            let r = zone.radius * rng.random::<f64>().cbrt();
            let theta = TAU * rng.random::<f64>();
            let cos_phi = 1.0 - 2.0 * rng.random::<f64>();
            (r, theta, cos_phi.clamp(-1.0, 1.0).acos())
        }
    };
    scatterer_position(zone.center, r, theta, phi)
}

/// Steering vectors of a set of sample points, one column per point.
#[derive(Clone, Debug)]
pub struct ZoneSamples {
    pub steering: CMatrix,
}

impl ZoneSamples {
    /// Steering matrix for explicit points. Columns are computed in parallel;
    /// each column depends only on its own point.
    pub fn from_points(geom: &ArrayGeometry, points: &[Vec3], wavelength: f64) -> Self {
        let columns: Vec<CVector> = points
            .par_iter()
            .map(|&p| steering_vector(geom, p, wavelength))
            .collect();
        let steering = if columns.is_empty() {
            CMatrix::zeros(geom.element_count(), 0)
        } else {
            CMatrix::from_columns(&columns)
        };
        Self { steering }
    }

    pub fn count(&self) -> usize {
        self.steering.ncols()
    }

    /// Sample covariance `(1/M) Σ a_i a_iᴴ`, exactly Hermitian with unit
    /// diagonal.
    ///
    /// Rows of the upper triangle are accumulated in parallel, each entry
    /// summed over samples in index order, so the result does not depend on
    /// the worker count.
    pub fn covariance(&self) -> CovarianceMatrix {
        let n = self.steering.nrows();
        let m = self.steering.ncols();
        let a = &self.steering;
        let rows: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![Complex64::new(0.0, 0.0); n - i];
                for k in 0..m {
                    let col = a.column(k);
                    let ai = col[i];
                    for (slot, aj) in row.iter_mut().zip(col.iter().skip(i)) {
                        *slot += ai * aj.conj();
                    }
                }
                row
            })
            .collect();
        let inv = 1.0 / m as f64;
        let mut r = CMatrix::zeros(n, n);
        for (i, row) in rows.into_iter().enumerate() {
            r[(i, i)] = Complex64::new(1.0, 0.0);
            for (off, v) in row.into_iter().enumerate().skip(1) {
                let v = v * inv;
                r[(i, i + off)] = v;
                r[(i + off, i)] = v.conj();
            }
        }
        CovarianceMatrix(r)
    }

    /// Eigenstructure of [`Self::covariance`] through the `M × M` Gram matrix
    /// `AᴴA/M`, which shares its non-zero eigenvalues. Cheaper than the full
    /// decomposition when `M < N`.
    pub fn kl_basis(&self, truncation: f64) -> Result<KLBasis> {
        check_truncation(truncation)?;
        let n = self.steering.nrows();
        let m = self.count();
        if m == 0 {
            return Err(Error::Empty("zone samples"));
        }
        if m >= n {
            return kl_decompose(&self.covariance(), truncation);
        }
        let scale = 1.0 / m as f64;
        let gram = (self.steering.adjoint() * &self.steering).scale(scale);
        let eig = hermitian_eig(&gram)?;
        // Unit-modulus samples: trace(R) = N exactly.
        let trace = n as f64;
        let rank = select_rank(&eig.values, trace, truncation);
        let mut columns = Vec::with_capacity(rank);
        for (j, &mu) in eig.values.iter().take(rank).enumerate() {
            let v = &self.steering * eig.vectors.column(j);
            columns.push(v.unscale((mu * m as f64).sqrt()));
        }
        let raw = CMatrix::from_columns(&columns);
        let basis = orthonormal_basis(&raw, 1e-9);
        if basis.ncols() != rank {
            return kl_decompose(&self.covariance(), truncation);
        }
        let weights: Vec<f64> = eig.values[..rank].to_vec();
        let captured: f64 = weights.iter().sum();
        Ok(KLBasis {
            basis,
            rank,
            residual_energy: trace - captured,
            next_weight: eig.values.get(rank).copied().unwrap_or(0.0).max(0.0),
            weights,
        })
    }
}

/// Steering samples over a zone under `sampling`.
pub fn zone_samples(
    geom: &ArrayGeometry,
    zone: &SphericalZone,
    wavelength: f64,
    sampling: &ZoneSampling,
) -> Result<ZoneSamples> {
    sampling.check()?;
    let mut rng = crate::simulation::seeds::rng(sampling.seed);
    let points: Vec<Vec3> = (0..sampling.samples)
        .map(|_| sample_zone_point(zone, sampling.measure, &mut rng))
        .collect();
    Ok(ZoneSamples::from_points(geom, &points, wavelength))
}

/// Monte-Carlo covariance over a spherical zone.
///
/// A zone of radius 0 returns the outer product of the center steering
/// vector directly.
pub fn covariance_zone(
    geom: &ArrayGeometry,
    zone: &SphericalZone,
    wavelength: f64,
    sampling: &ZoneSampling,
) -> Result<CovarianceMatrix> {
    sampling.check()?;
    if zone.radius == 0.0 {
        let a = steering_vector(geom, zone.center, wavelength);
        let mut r = &a * a.adjoint();
        for i in 0..r.nrows() {
            r[(i, i)] = Complex64::new(1.0, 0.0);
        }
        return Ok(CovarianceMatrix(r));
    }
    Ok(zone_samples(geom, zone, wavelength, sampling)?.covariance())
}

/// Samples of the mobile-user covariance: the user moves `x ∈ [0, Δx]` along
/// `(θ_k, φ_k)` and the scatterer sits at `r ∈ [0, R_s]` along `(θ_s, φ_s)`,
/// all six parameters uniform over their ranges.
pub fn mobile_samples(
    geom: &ArrayGeometry,
    kin: &UserKinematics,
    scatter_radius: f64,
    wavelength: f64,
    sampling: &ZoneSampling,
) -> Result<ZoneSamples> {
    sampling.check()?;
    let dx = kin.move_distance();
    let mut rng = crate::simulation::seeds::rng(sampling.seed);
    let points: Vec<Vec3> = (0..sampling.samples)
        .map(|_| {
            let user = kin.displaced_position(
                dx * rng.random::<f64>(),
                TAU * rng.random::<f64>(),
                PI * rng.random::<f64>(),
            );
            scatterer_position(
                user,
                scatter_radius * rng.random::<f64>(),
                TAU * rng.random::<f64>(),
                PI * rng.random::<f64>(),
            )
        })
        .collect();
    Ok(ZoneSamples::from_points(geom, &points, wavelength))
}

/// Covariance of a mobile user by direct integration over motion and
/// scattering parameters. Reference for the single-zone approximation.
pub fn covariance_mobile_exact(
    geom: &ArrayGeometry,
    kin: &UserKinematics,
    scatter_radius: f64,
    wavelength: f64,
    sampling: &ZoneSampling,
) -> Result<CovarianceMatrix> {
    Ok(mobile_samples(geom, kin, scatter_radius, wavelength, sampling)?.covariance())
}

fn check_truncation(truncation: f64) -> Result<()> {
    if !(truncation > 0.0 && truncation <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation must lie in (0, 1], got {truncation}"
        )));
    }
    Ok(())
}

/// Smallest count of leading (positive) eigenvalues whose sum reaches
/// `truncation · trace`.
fn select_rank(values: &[f64], trace: f64, truncation: f64) -> usize {
    let target = truncation * trace - 1e-12 * trace.abs();
    let positive = values.iter().take_while(|&&v| v > 0.0).count();
    let mut sum = 0.0;
    for (i, v) in values.iter().take(positive).enumerate() {
        sum += v;
        if sum >= target {
            return i + 1;
        }
    }
    positive
}

/// Truncated eigendecomposition keeping the leading eigenvectors that capture
/// a `truncation` fraction of the trace.
pub fn kl_decompose(r: &CovarianceMatrix, truncation: f64) -> Result<KLBasis> {
    check_truncation(truncation)?;
    let eig = hermitian_eig(r.matrix())?;
    let trace = r.trace();
    let rank = select_rank(&eig.values, trace, truncation);
    if rank == 0 {
        return Err(Error::InvalidParameter(
            "covariance has no positive eigenvalue".into(),
        ));
    }
    let basis = eig.vectors.columns(0, rank).into_owned();
    let weights = eig.values[..rank].to_vec();
    let captured: f64 = weights.iter().sum();
    Ok(KLBasis {
        basis,
        rank,
        residual_energy: trace - captured,
        next_weight: eig.values.get(rank).copied().unwrap_or(0.0).max(0.0),
        weights,
    })
}

/// Circularly-symmetric standard complex Gaussian entry.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Karhunen-Loève draw `h = U Λ^{1/2} w`.
pub fn kl_sample<R: Rng + ?Sized>(basis: &KLBasis, rng: &mut R) -> ChannelVector {
    let mut h = CVector::zeros(basis.dimension());
    for (j, w) in basis.weights.iter().enumerate() {
        let coef = complex_gaussian(rng) * w.sqrt();
        h.axpy(coef, &basis.basis.column(j), Complex64::new(1.0, 0.0));
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RealizationMode {
    ScattererOnly,
    /// Adds the line-of-sight steering vector with amplitude `los_weight`
    /// relative to the scattered part, renormalized so `E‖h‖² = N`.
    LosPlusScatterers { los_weight: f64 },
}

/// Discrete local-scattering channel model around a position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationModel {
    pub scatter_radius: f64,
    pub scatterer_count: usize,
    pub measure: SamplingMeasure,
    pub mode: RealizationMode,
}

/// One scatterer: offset from the user and its random phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scatterer {
    pub offset: Vec3,
    pub phase: f64,
}

impl RealizationModel {
    pub fn draw_scatterers<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Scatterer> {
        let local = SphericalZone {
            center: Vec3::ZERO,
            radius: self.scatter_radius,
        };
        (0..self.scatterer_count)
            .map(|_| {
                let offset = sample_zone_point(&local, self.measure, rng);
                Scatterer {
                    offset,
                    phase: TAU * rng.random::<f64>(),
                }
            })
            .collect()
    }

    /// Channel at `position` from an explicit scatterer set.
    pub fn channel_from(
        &self,
        geom: &ArrayGeometry,
        position: Vec3,
        scatterers: &[Scatterer],
        wavelength: f64,
    ) -> ChannelVector {
        let mut h = CVector::zeros(geom.element_count());
        if !scatterers.is_empty() {
            let amp = 1.0 / (scatterers.len() as f64).sqrt();
            for s in scatterers {
                let a = steering_vector(geom, position + s.offset, wavelength);
                h.axpy(Complex64::from_polar(amp, s.phase), &a, Complex64::new(1.0, 0.0));
            }
        }
        if let RealizationMode::LosPlusScatterers { los_weight } = self.mode {
            let a = steering_vector(geom, position, wavelength);
            h.axpy(Complex64::new(los_weight, 0.0), &a, Complex64::new(1.0, 0.0));
            h.unscale_mut((1.0 + los_weight * los_weight).sqrt());
        }
        h
    }
}

/// Random multi-scatterer channel around `position`:
/// `h = (1/√S) Σ_s exp(jψ_s) a(g_s)`, optionally with a LoS term.
pub fn geometric_realization<R: Rng + ?Sized>(
    geom: &ArrayGeometry,
    position: Vec3,
    model: &RealizationModel,
    wavelength: f64,
    rng: &mut R,
) -> Result<ChannelVector> {
    if model.scatterer_count == 0 {
        return Err(Error::InvalidParameter(
            "geometric realization needs at least one scatterer".into(),
        ));
    }
    let scatterers = model.draw_scatterers(rng);
    Ok(model.channel_from(geom, position, &scatterers, wavelength))
}
