//! Coordinate algebra for the base-station array, mobile users, local
//! scatterers and spherical transmission zones.
//!
//! The array lies on the y-z plane and faces +x. Element `n` (1-based) sits
//! in row `v_n` and column `h_n` with `n = h_n + N_H * v_n + 1`.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Offset of length `radius` along azimuth `theta` and polar angle `phi`
    /// (measured from +z).
    pub fn from_spherical(radius: f64, theta: f64, phi: f64) -> Self {
        let theta = theta.rem_euclid(TAU);
        let phi = phi.rem_euclid(TAU);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::new(radius * sp * ct, radius * sp * st, radius * cp)
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

/// Uniform planar array mounted on the y-z plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Elements along z (rows).
    pub n_v: usize,
    /// Elements along y (columns).
    pub n_h: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Height of the array center in meters.
    pub height: f64,
}

impl ArrayGeometry {
    pub fn new(n_v: usize, n_h: usize, spacing: f64, height: f64) -> Result<Self> {
        let geom = Self {
            n_v,
            n_h,
            spacing,
            height,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(n_v: usize, n_h: usize, wavelength: f64, height: f64) -> Result<Self> {
        Self::new(n_v, n_h, wavelength / 2.0, height)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_v == 0 || self.n_h == 0 {
            return Err(Error::InvalidGeometry(format!(
                "array needs at least one element per axis, got {}x{}",
                self.n_v, self.n_h
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !(self.height >= 0.0 && self.height.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "mount height must be non-negative, got {}",
                self.height
            )));
        }
        Ok(())
    }

    /// Total element count N.
    pub fn element_count(&self) -> usize {
        self.n_v * self.n_h
    }

    /// Position of the 1-based element `n`.
    pub fn antenna_position(&self, n: usize) -> Result<Vec3> {
        let count = self.element_count();
        if n == 0 || n > count {
            return Err(Error::IndexOutOfRange { index: n, count });
        }
        Ok(self.position_unchecked(n - 1))
    }

    /// Position of the 0-based element `idx`; callers guarantee `idx < N`.
    pub(crate) fn position_unchecked(&self, idx: usize) -> Vec3 {
        let h = (idx % self.n_h) as f64;
        let v = (idx / self.n_h) as f64;
        let y = (h - (self.n_h as f64 - 1.0) / 2.0) * self.spacing;
        let z = self.height + (v - (self.n_v as f64 - 1.0) / 2.0) * self.spacing;
        Vec3::new(0.0, y, z)
    }

    /// All element positions in index order.
    pub fn positions(&self) -> Vec<Vec3> {
        (0..self.element_count())
            .map(|i| self.position_unchecked(i))
            .collect()
    }

    /// Geometric center of the panel.
    pub fn center(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.height)
    }

    pub fn element_point_distance(&self, n: usize, point: Vec3) -> Result<f64> {
        Ok(self.antenna_position(n)?.distance(point))
    }

    /// Panel diagonal `sqrt(((N_H-1)d)^2 + ((N_V-1)d)^2)`.
    pub fn aperture(&self) -> f64 {
        let wy = (self.n_h as f64 - 1.0) * self.spacing;
        let wz = (self.n_v as f64 - 1.0) * self.spacing;
        wy.hypot(wz)
    }

    /// Fresnel and Fraunhofer distances of the panel.
    pub fn near_field_bounds(&self, wavelength: f64) -> Result<NearFieldBounds> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        let aperture = self.aperture();
        if self.element_count() == 1 {
            return Ok(NearFieldBounds {
                aperture,
                fresnel: 0.0,
                fraunhofer: 0.0,
                degenerate: true,
            });
        }
        Ok(NearFieldBounds {
            aperture,
            fresnel: 0.62 * (aperture.powi(3) / wavelength).sqrt(),
            fraunhofer: 2.0 * aperture * aperture / wavelength,
            degenerate: false,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NearFieldBounds {
    pub aperture: f64,
    pub fresnel: f64,
    pub fraunhofer: f64,
    /// Set for a single-element array, where both bounds are reported as 0.
    pub degenerate: bool,
}

impl NearFieldBounds {
    pub fn contains(&self, distance: f64) -> bool {
        distance >= self.fresnel && distance <= self.fraunhofer
    }
}

/// Initial position and straight-line motion of a user over a horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserKinematics {
    pub initial: Vec3,
    /// m/s
    pub speed: f64,
    /// Azimuth of motion, radians.
    pub heading: f64,
    /// Polar angle of motion from +z, radians.
    pub elevation: f64,
    /// Seconds.
    pub horizon: f64,
}

impl UserKinematics {
    /// Static user at `initial`.
    pub fn stationary(initial: Vec3) -> Self {
        Self {
            initial,
            speed: 0.0,
            heading: 0.0,
            elevation: 0.0,
            horizon: 0.0,
        }
    }

    /// Distance covered over the horizon, `speed * horizon`.
    pub fn move_distance(&self) -> f64 {
        self.speed * self.horizon
    }

    /// Position after moving `distance` along azimuth `theta` and polar
    /// angle `phi` from the initial position.
    pub fn displaced_position(&self, distance: f64, theta: f64, phi: f64) -> Vec3 {
        self.initial + Vec3::from_spherical(distance, theta, phi)
    }

    /// Position at the end of the horizon along the user's own heading.
    pub fn final_position(&self) -> Vec3 {
        self.displaced_position(self.move_distance(), self.heading, self.elevation)
    }
}

/// Scatterer at distance `radius` from `center` in direction `(theta, phi)`.
pub fn scatterer_position(center: Vec3, radius: f64, theta: f64, phi: f64) -> Vec3 {
    center + Vec3::from_spherical(radius, theta, phi)
}

/// Solid sphere of potential user and scatterer locations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalZone {
    pub center: Vec3,
    pub radius: f64,
}

impl SphericalZone {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "zone radius must be non-negative, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, point: Vec3) -> bool {
        point.distance(self.center) <= self.radius * (1.0 + 1e-12) + 1e-15
    }
}

/// Transmission zone of a user: centered on its initial position with radius
/// `move_distance + scatter_radius`.
pub fn transmission_zone(kin: &UserKinematics, scatter_radius: f64) -> SphericalZone {
    SphericalZone {
        center: kin.initial,
        radius: kin.move_distance() + scatter_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn single_element_sits_at_mount_height() {
        let geom = ArrayGeometry::new(1, 1, 0.0107 / 2.0, 3.0).unwrap();
        assert_eq!(geom.antenna_position(1).unwrap(), Vec3::new(0.0, 0.0, 3.0));
    }

    #[test]
    fn two_elements_are_symmetric() {
        let geom = ArrayGeometry::new(1, 2, 0.005, 0.0).unwrap();
        assert!(close(geom.antenna_position(1).unwrap(), Vec3::new(0.0, -0.0025, 0.0), 1e-15));
        assert!(close(geom.antenna_position(2).unwrap(), Vec3::new(0.0, 0.0025, 0.0), 1e-15));
    }

    #[test]
    fn first_element_of_full_panel() {
        // (0 - 31.5) * d and 3 + (0 - 7.5) * d evaluated exactly.
        let geom = ArrayGeometry::new(16, 64, 0.00535344, 3.0).unwrap();
        let p = geom.antenna_position(1).unwrap();
        assert_eq!(p.x, 0.0);
        assert!((p.y - (-0.16863336)).abs() < 1e-12);
        assert!((p.z - 2.9598492).abs() < 1e-12);
    }

    #[test]
    fn index_out_of_range() {
        let geom = ArrayGeometry::new(2, 3, 0.01, 1.0).unwrap();
        assert!(matches!(
            geom.antenna_position(0),
            Err(Error::IndexOutOfRange { index: 0, count: 6 })
        ));
        assert!(geom.antenna_position(7).is_err());
        assert!(geom.element_point_distance(7, Vec3::ZERO).is_err());
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(ArrayGeometry::new(0, 4, 0.01, 0.0).is_err());
        assert!(ArrayGeometry::new(4, 4, 0.0, 0.0).is_err());
        assert!(ArrayGeometry::new(4, 4, 0.01, -1.0).is_err());
    }

    #[test]
    fn displacement_examples() {
        let kin = UserKinematics::stationary(Vec3::new(5.0, 0.0, 1.5));
        assert_eq!(kin.displaced_position(0.0, 1.3, 2.1), kin.initial);
        assert!(close(kin.displaced_position(1.0, 0.0, FRAC_PI_2), Vec3::new(6.0, 0.0, 1.5), 1e-15));
        assert!(close(
            kin.displaced_position(2f64.sqrt(), FRAC_PI_2, FRAC_PI_4),
            Vec3::new(5.0, 1.0, 2.5),
            1e-14
        ));
    }

    #[test]
    fn scatterer_examples() {
        let q = Vec3::new(2.0, 3.0, 1.0);
        assert_eq!(scatterer_position(q, 0.0, 0.4, 0.9), q);
        assert!(close(scatterer_position(Vec3::ZERO, 1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), 1e-15));
        assert!(close(scatterer_position(q, 0.05, PI, FRAC_PI_2), Vec3::new(1.95, 3.0, 1.0), 1e-15));
    }

    #[test]
    fn distance_examples() {
        let geom = ArrayGeometry::new(1, 1, 0.01, 0.0).unwrap();
        assert_eq!(geom.element_point_distance(1, Vec3::new(3.0, 4.0, 0.0)).unwrap(), 5.0);
        let geom = ArrayGeometry::new(1, 1, 0.01, 3.0).unwrap();
        assert_eq!(geom.element_point_distance(1, Vec3::ZERO).unwrap(), 3.0);
        let geom = ArrayGeometry::new(4, 4, 0.01, 3.0).unwrap();
        let p = geom.antenna_position(6).unwrap();
        assert_eq!(geom.element_point_distance(6, p).unwrap(), 0.0);
    }

    #[test]
    fn transmission_zone_radius() {
        let mut kin = UserKinematics::stationary(Vec3::new(4.0, 1.0, 1.5));
        let zone = transmission_zone(&kin, 0.0);
        assert_eq!(zone.radius, 0.0);
        assert_eq!(zone.center, kin.initial);
        kin.speed = 0.139;
        kin.horizon = 1.0;
        assert!((transmission_zone(&kin, 0.05).radius - 0.189).abs() < 1e-15);
        kin.speed = 0.056;
        assert!((transmission_zone(&kin, 0.05).radius - 0.106).abs() < 1e-15);
    }

    #[test]
    fn near_field_bounds_of_default_panel() {
        let lambda = 0.0107069;
        let geom = ArrayGeometry::half_wavelength(16, 64, lambda, 3.0).unwrap();
        let b = geom.near_field_bounds(lambda).unwrap();
        assert!(!b.degenerate);
        assert!((b.aperture - 0.34670).abs() < 5e-5);
        assert!((b.fraunhofer - 22.45).abs() < 5e-3);
        assert!((b.fresnel - 1.223).abs() < 5e-4);
    }

    #[test]
    fn near_field_bounds_small_cases() {
        let lambda = 0.01;
        let geom = ArrayGeometry::half_wavelength(1, 2, lambda, 0.0).unwrap();
        let b = geom.near_field_bounds(lambda).unwrap();
        assert!((b.aperture - lambda / 2.0).abs() < 1e-15);
        assert!((b.fraunhofer - lambda / 2.0).abs() < 1e-15);

        let geom = ArrayGeometry::new(1, 1, 0.3, 0.0).unwrap();
        let b = geom.near_field_bounds(lambda).unwrap();
        assert!(b.degenerate);
        assert_eq!((b.fresnel, b.fraunhofer), (0.0, 0.0));
        assert!(geom.near_field_bounds(0.0).is_err());
    }

    #[test]
    fn enumerates_distinct_grid_points() {
        let geom = ArrayGeometry::new(3, 5, 0.02, 1.0).unwrap();
        let pts = geom.positions();
        assert_eq!(pts.len(), 15);
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let dy = (a.y - b.y) / geom.spacing;
                let dz = (a.z - b.z) / geom.spacing;
                assert!((dy - dy.round()).abs() < 1e-9 && (dz - dz.round()).abs() < 1e-9);
                assert!(a.distance(*b) > 0.5 * geom.spacing);
            }
        }
        let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
        let zs: Vec<f64> = pts.iter().map(|p| p.z).collect();
        let span = |v: &[f64]| {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!((span(&ys) - 4.0 * 0.02).abs() < 1e-12);
        assert!((span(&zs) - 2.0 * 0.02).abs() < 1e-12);
        // Mirror symmetry y -> -y.
        for p in &pts {
            assert!(pts.iter().any(|q| close(*q, Vec3::new(p.x, -p.y, p.z), 1e-12)));
        }
    }

    proptest! {
        #[test]
        fn displaced_positions_stay_in_zone(
            qx in 0.5f64..20.0, qy in -10.0f64..10.0, qz in 0.0f64..3.0,
            speed in 0.0f64..0.5, horizon in 0.0f64..2.0,
            frac in 0.0f64..=1.0, theta in -10.0f64..10.0, phi in -10.0f64..10.0,
            rs in 0.0f64..0.2,
        ) {
            let kin = UserKinematics { initial: Vec3::new(qx, qy, qz), speed, heading: 0.0, elevation: 0.0, horizon };
            let zone = transmission_zone(&kin, rs);
            let p = kin.displaced_position(frac * kin.move_distance(), theta, phi);
            prop_assert!(zone.contains(p));
        }

        #[test]
        fn distance_triangle_inequality(
            n in 1usize..=12,
            a in prop::array::uniform3(-5.0f64..5.0),
            b in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let geom = ArrayGeometry::new(3, 4, 0.05, 2.0).unwrap();
            let p = Vec3::new(a[0], a[1], a[2]);
            let mid = Vec3::new(b[0], b[1], b[2]);
            let direct = geom.element_point_distance(n, p).unwrap();
            let via = geom.element_point_distance(n, mid).unwrap() + mid.distance(p);
            prop_assert!(direct <= via + 1e-12);
            prop_assert!(direct >= 0.0);
        }
    }
}
