//! Sphere precoding, the baseline precoders and beampattern evaluation.
//!
//! The received signal of user `k` through channel `h` is `hᴴ f_k`, so a
//! precoder combines coherently with `h` when `f ∝ h`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_vector, KLBasis};
use crate::geometry::{ArrayGeometry, Vec3};
use crate::numerics::{
    cone_solve, pseudo_inverse, CMatrix, CVector, ConeProblem, ConeStatus, InterferenceBlock,
    SolverTolerances,
};
use crate::{Error, Result};

/// Slack allowed on the unit column-norm constraint.
pub const NORM_SLACK: f64 = 1e-9;

/// One precoding vector per user, stored as the columns of an `N × K` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecodingMatrix(CMatrix);

impl PrecodingMatrix {
    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Empty("precoding matrix needs at least one column"));
        }
        let n = columns[0].len();
        for (k, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "precoding column length",
                    expected: n,
                    found: c.len(),
                });
            }
            let norm = c.norm();
            if !(norm <= 1.0 + NORM_SLACK) {
                return Err(Error::InvalidParameter(format!(
                    "precoding column {} has norm {norm}",
                    k + 1
                )));
            }
        }
        Ok(Self(CMatrix::from_columns(columns)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn user_count(&self) -> usize {
        self.0.ncols()
    }

    pub fn dimension(&self) -> usize {
        self.0.nrows()
    }

    pub fn column(&self, k: usize) -> CVector {
        self.0.column(k).into_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecoderConfig {
    /// Normalization constant C of the equal-projection target.
    pub target_level: f64,
    /// Interference tolerance ε.
    pub interference_cap: f64,
    /// Fraction of covariance trace kept in each user's basis.
    pub truncation: f64,
}

impl Default for PrecoderConfig {
    fn default() -> Self {
        Self {
            target_level: 1.0,
            interference_cap: 1e-3,
            truncation: 0.99,
        }
    }
}

impl PrecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_level >= 0.0 && self.target_level.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "target level must be non-negative, got {}",
                self.target_level
            )));
        }
        if !(self.interference_cap > 0.0 && self.interference_cap.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "interference cap must be positive, got {}",
                self.interference_cap
            )));
        }
        if !(self.truncation > 0.0 && self.truncation <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation must lie in (0, 1], got {}",
                self.truncation
            )));
        }
        Ok(())
    }
}

/// Cone program for user `k`: equal projection onto its own basis, capped
/// projection onto every other user's basis, unit power.
pub fn sphere_problem(bases: &[KLBasis], k: usize, config: &PrecoderConfig) -> ConeProblem {
    ConeProblem {
        objective_basis: bases[k].basis.adjoint(),
        target_level: config.target_level,
        interference_blocks: bases
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, b)| InterferenceBlock {
                rows: b.basis.adjoint(),
                cap: config.interference_cap,
            })
            .collect(),
        power_cap: 1.0,
    }
}

/// Sphere precoding: one cone solve per user, run in parallel.
///
/// With a single user there are no interference constraints and the
/// closed-form [`equal_projection`] solution is returned.
pub fn sphere_precode(
    bases: &[KLBasis],
    config: &PrecoderConfig,
    tol: &SolverTolerances,
) -> Result<PrecodingMatrix> {
    config.validate()?;
    if bases.is_empty() {
        return Err(Error::Empty("sphere precoding needs at least one user"));
    }
    let n = bases[0].dimension();
    if let Some(bad) = bases.iter().find(|b| b.dimension() != n) {
        return Err(Error::DimensionMismatch {
            context: "sphere precoding bases",
            expected: n,
            found: bad.dimension(),
        });
    }
    if bases.len() == 1 {
        return PrecodingMatrix::from_columns(&[equal_projection(&bases[0], config.target_level)]);
    }
    let columns: Vec<Result<CVector>> = (0..bases.len())
        .into_par_iter()
        .map(|k| {
            let sol = cone_solve(&sphere_problem(bases, k, config), tol)?;
            match sol.status {
                ConeStatus::Optimal => Ok(sol.vector),
                status => Err(Error::Solver {
                    user: k + 1,
                    status: status.to_string(),
                }),
            }
        })
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    PrecodingMatrix::from_columns(&columns)
}

/// Closed-form single-user solution `f = U a`: `a = C·1` when `C√r ≤ 1`,
/// otherwise `a = 1/√r` (the target rescaled onto the unit ball).
pub fn equal_projection(basis: &KLBasis, target_level: f64) -> CVector {
    let r = basis.rank as f64;
    let level = if target_level * r.sqrt() <= 1.0 {
        target_level
    } else {
        1.0 / r.sqrt()
    };
    let mut f = CVector::zeros(basis.dimension());
    for j in 0..basis.rank {
        f.axpy(Complex64::new(level, 0.0), &basis.basis.column(j), Complex64::new(1.0, 0.0));
    }
    f
}

/// Unit-norm matched beam toward the line-of-sight channel at `position`.
pub fn conjugate_beamforming(geom: &ArrayGeometry, position: Vec3, wavelength: f64) -> CVector {
    let a = steering_vector(geom, position, wavelength);
    let norm = a.norm();
    a.unscale(norm)
}

/// Leading basis column.
pub fn dominant_eigenvector(basis: &KLBasis) -> Result<CVector> {
    if basis.rank == 0 {
        return Err(Error::Empty("dominant eigenvector of an empty basis"));
    }
    Ok(basis.basis.column(0).into_owned())
}

/// Zero-forcing on known channels: columns of `H(HᴴH)⁻¹`, each scaled to
/// unit norm.
pub fn zero_forcing(channels: &CMatrix) -> Result<PrecodingMatrix> {
    let pinv = pseudo_inverse(channels)?;
    let columns: Vec<CVector> = pinv
        .adjoint()
        .column_iter()
        .map(|c| {
            let norm = c.norm();
            c.unscale(norm)
        })
        .collect();
    PrecodingMatrix::from_columns(&columns)
}

/// Power `|a(x)ᴴ f|²` delivered to a point.
pub fn beam_gain(geom: &ArrayGeometry, f: &CVector, point: Vec3, wavelength: f64) -> f64 {
    steering_vector(geom, point, wavelength).dotc(f).norm_sqr()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlicePlane {
    /// Constant z.
    Horizontal,
    /// Constant y.
    Vertical,
}

impl std::str::FromStr for SlicePlane {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(Self::Horizontal),
            "vertical" => Ok(Self::Vertical),
            other => Err(Error::InvalidParameter(format!("unknown slice plane {other:?}"))),
        }
    }
}

/// Axis-aligned box sampled on a regular grid. An axis with `min == max`
/// takes a single sample; every other axis needs at least two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamRegion {
    pub min: Vec3,
    pub max: Vec3,
    pub steps: [usize; 3],
}

impl BeamRegion {
    /// Square slice through `center` in `plane`, `half_width` meters either
    /// side, with `steps` points per in-plane axis.
    pub fn slice(plane: SlicePlane, center: Vec3, half_width: f64, steps: usize) -> Self {
        let d = half_width;
        match plane {
            SlicePlane::Horizontal => Self {
                min: Vec3::new(center.x - d, center.y - d, center.z),
                max: Vec3::new(center.x + d, center.y + d, center.z),
                steps: [steps, steps, 1],
            },
            SlicePlane::Vertical => Self {
                min: Vec3::new(center.x - d, center.y, center.z - d),
                max: Vec3::new(center.x + d, center.y, center.z + d),
                steps: [steps, 1, steps],
            },
        }
    }

    fn axes(&self) -> [(f64, f64, usize); 3] {
        [
            (self.min.x, self.max.x, self.steps[0]),
            (self.min.y, self.max.y, self.steps[1]),
            (self.min.z, self.max.z, self.steps[2]),
        ]
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi, n) in self.axes() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::NonFinite("beam region bounds"));
            }
            if hi < lo || n == 0 {
                return Err(Error::Empty("beam region"));
            }
            if hi > lo && n < 2 {
                return Err(Error::InvalidParameter(
                    "beam region needs at least two samples along each extended axis".into(),
                ));
            }
            if hi == lo && n != 1 {
                return Err(Error::InvalidParameter(
                    "a flat beam region axis takes exactly one sample".into(),
                ));
            }
        }
        Ok(())
    }

    /// Grid points in row-major order (x fastest, then y, then z).
    pub fn points(&self) -> Vec<Vec3> {
        let coord = |(lo, hi, n): (f64, f64, usize), i: usize| {
            if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let [ax, ay, az] = self.axes();
        let mut out = Vec::with_capacity(ax.2 * ay.2 * az.2);
        for iz in 0..az.2 {
            for iy in 0..ay.2 {
                for ix in 0..ax.2 {
                    out.push(Vec3::new(coord(ax, ix), coord(ay, iy), coord(az, iz)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct BeamGrid {
    pub region: BeamRegion,
    pub points: Vec<Vec3>,
    pub gains: Vec<f64>,
}

impl BeamGrid {
    pub fn max_gain(&self) -> f64 {
        self.gains.iter().cloned().fold(0.0, f64::max)
    }
}

/// Beam gain over every grid point of `region`, cells evaluated in parallel.
pub fn beampattern_grid(
    geom: &ArrayGeometry,
    f: &CVector,
    region: &BeamRegion,
    wavelength: f64,
) -> Result<BeamGrid> {
    region.validate()?;
    if f.len() != geom.element_count() {
        return Err(Error::DimensionMismatch {
            context: "beampattern precoder length",
            expected: geom.element_count(),
            found: f.len(),
        });
    }
    let points = region.points();
    let gains = points
        .par_iter()
        .map(|&p| beam_gain(geom, f, p, wavelength))
        .collect();
    Ok(BeamGrid {
        region: *region,
        points,
        gains,
    })
}
