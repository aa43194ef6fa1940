//! Scenario configuration. Key names carry their units.

use serde::{Deserialize, Serialize};

use crate::channel::{RealizationMode, RealizationModel, SamplingMeasure};
use crate::geometry::ArrayGeometry;
use crate::precoding::{PrecoderConfig, SlicePlane};
use crate::{from_db, wavelength, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of users K.
    pub users: usize,
    #[serde(default = "defaults::experiments")]
    pub experiments: usize,
    #[serde(default = "defaults::master_seed")]
    pub master_seed: u64,
    #[serde(default = "defaults::noise_power")]
    pub noise_power_linear: f64,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub carrier: CarrierConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub drop: DropRegion,
    #[serde(default)]
    pub precoder: PrecoderConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub beampattern: BeampatternConfig,
}

mod defaults {
    pub fn experiments() -> usize {
        100
    }
    pub fn master_seed() -> u64 {
        1
    }
    pub fn noise_power() -> f64 {
        1e-2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub vertical: usize,
    pub horizontal: usize,
    /// Spacing in wavelengths; ignored when `spacing_m` is set.
    pub spacing_wavelengths: Option<f64>,
    pub spacing_m: Option<f64>,
    pub height_m: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            vertical: 16,
            horizontal: 64,
            spacing_wavelengths: Some(0.5),
            spacing_m: None,
            height_m: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierConfig {
    pub frequency_hz: f64,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 28e9,
        }
    }
}

/// Channel used to score precoders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationChannel {
    /// Discrete scatterers around the displaced position.
    #[default]
    Scatterers,
    /// Scatterers plus a line-of-sight term.
    LosPlusScatterers,
    /// Karhunen-Loève draws from the user's zone basis.
    Kl,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScattererMode {
    /// Scatterers re-drawn for every evaluation sample.
    #[default]
    Fresh,
    /// One scatterer set per user and experiment, carried along with the
    /// user as it moves.
    Persistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub scatter_radius_m: f64,
    /// Zone samples per covariance estimate (M).
    pub covariance_samples: usize,
    /// Scatterers per channel realization (S).
    pub scatterer_count: usize,
    pub sampling: SamplingMeasure,
    pub evaluation: EvaluationChannel,
    pub los_weight: f64,
    pub scatterers: ScattererMode,
    /// Evaluation channel draws per user and experiment.
    pub evaluation_samples: usize,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            scatter_radius_m: 0.05,
            covariance_samples: 100,
            scatterer_count: 10,
            sampling: SamplingMeasure::Parametric,
            evaluation: EvaluationChannel::Scatterers,
            los_weight: 1.0,
            scatterers: ScattererMode::Fresh,
            evaluation_samples: 100,
        }
    }
}

/// Where evaluation positions fall along the motion segment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionLaw {
    /// Displacement uniform on `[0, Δx]`, direction uniform.
    #[default]
    Uniform,
    /// Displacement exactly `Δx`, direction uniform.
    Endpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    /// Moving distance Δx for single runs.
    pub move_distance_m: f64,
    /// Δx values for sweeps.
    pub sweep_m: Vec<f64>,
    pub horizon_s: f64,
    pub position_law: PositionLaw,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            move_distance_m: 0.139,
            sweep_m: vec![0.0, 0.056, 0.139],
            horizon_s: 1.0,
            position_law: PositionLaw::Uniform,
        }
    }
}

/// Annular sector in front of the array: users sit at `user_height_m` with
/// distance to the array center in `[min_distance_m, max_distance_m]` and
/// azimuth within `±sector_deg/2` of broadside (+x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropRegion {
    pub min_distance_m: f64,
    pub max_distance_m: f64,
    pub sector_deg: f64,
    pub user_height_m: f64,
}

impl Default for DropRegion {
    fn default() -> Self {
        Self {
            min_distance_m: 2.0,
            max_distance_m: 20.0,
            sector_deg: 120.0,
            user_height_m: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub sinr_target_db: f64,
    /// Optional per-user targets overriding `sinr_target_db`.
    pub per_user_sinr_target_db: Option<Vec<f64>>,
    /// Spacing of the CDF evaluation grid.
    pub cdf_step_db: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            sinr_target_db: 20.0,
            per_user_sinr_target_db: None,
            cdf_step_db: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workers: Option<usize>,
    /// Seeds averaged per sweep point.
    pub sweep_seeds: usize,
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: None,
            sweep_seeds: 1,
            output_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeampatternConfig {
    /// 1-based target user.
    pub user: usize,
    pub method: String,
    pub plane: SlicePlane,
    /// Grid points per in-plane axis (odd values put the target on a cell).
    pub steps: usize,
    /// Margin added around the outermost user, meters.
    pub margin_m: f64,
}

impl Default for BeampatternConfig {
    fn default() -> Self {
        Self {
            user: 1,
            method: "sphere".into(),
            plane: SlicePlane::Horizontal,
            steps: 201,
            margin_m: 1.0,
        }
    }
}

impl ScenarioConfig {
    /// Defaults for every optional section with `users` users.
    pub fn with_users(users: usize) -> Self {
        Self {
            users,
            experiments: defaults::experiments(),
            master_seed: defaults::master_seed(),
            noise_power_linear: defaults::noise_power(),
            array: Default::default(),
            carrier: Default::default(),
            channel: Default::default(),
            mobility: Default::default(),
            drop: Default::default(),
            precoder: Default::default(),
            metrics: Default::default(),
            run: Default::default(),
            beampattern: Default::default(),
        }
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier.frequency_hz)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let spacing = match (self.array.spacing_m, self.array.spacing_wavelengths) {
            (Some(m), _) => m,
            (None, Some(w)) => w * self.wavelength(),
            (None, None) => {
                return Err(Error::InvalidParameter(
                    "array spacing: set spacing_m or spacing_wavelengths".into(),
                ))
            }
        };
        ArrayGeometry::new(self.array.vertical, self.array.horizontal, spacing, self.array.height_m)
    }

    pub fn realization_model(&self) -> RealizationModel {
        RealizationModel {
            scatter_radius: self.channel.scatter_radius_m,
            scatterer_count: self.channel.scatterer_count,
            measure: self.channel.sampling,
            mode: match self.channel.evaluation {
                EvaluationChannel::LosPlusScatterers => RealizationMode::LosPlusScatterers {
                    los_weight: self.channel.los_weight,
                },
                _ => RealizationMode::ScattererOnly,
            },
        }
    }

    /// Linear SINR target of user `k` (0-based).
    pub fn sinr_target(&self, k: usize) -> f64 {
        let db = self
            .metrics
            .per_user_sinr_target_db
            .as_ref()
            .and_then(|v| v.get(k).copied())
            .unwrap_or(self.metrics.sinr_target_db);
        from_db(db)
    }

    /// Checks hard constraints; returns soft warnings (such as a drop region
    /// reaching outside the radiative near field).
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.users == 0 {
            return bad("users must be at least 1".into());
        }
        if self.experiments == 0 {
            return bad("experiments must be at least 1".into());
        }
        if !(self.noise_power_linear > 0.0 && self.noise_power_linear.is_finite()) {
            return bad(format!("noise_power_linear must be positive, got {}", self.noise_power_linear));
        }
        if !(self.carrier.frequency_hz > 0.0 && self.carrier.frequency_hz.is_finite()) {
            return bad(format!("carrier.frequency_hz must be positive, got {}", self.carrier.frequency_hz));
        }
        let geom = self.geometry()?;
        let ch = &self.channel;
        if !(ch.scatter_radius_m >= 0.0) {
            return bad(format!("channel.scatter_radius_m must be non-negative, got {}", ch.scatter_radius_m));
        }
        if ch.covariance_samples == 0 {
            return bad("channel.covariance_samples must be at least 1".into());
        }
        if ch.scatterer_count == 0 {
            return bad("channel.scatterer_count must be at least 1".into());
        }
        if ch.evaluation_samples == 0 {
            return bad("channel.evaluation_samples must be at least 1".into());
        }
        if !(ch.los_weight >= 0.0) {
            return bad(format!("channel.los_weight must be non-negative, got {}", ch.los_weight));
        }
        let mob = &self.mobility;
        if !(mob.move_distance_m >= 0.0) {
            return bad(format!("mobility.move_distance_m must be non-negative, got {}", mob.move_distance_m));
        }
        if let Some(dx) = mob.sweep_m.iter().find(|d| !(**d >= 0.0)) {
            return bad(format!("mobility.sweep_m entries must be non-negative, got {dx}"));
        }
        if !(mob.horizon_s > 0.0) {
            return bad(format!("mobility.horizon_s must be positive, got {}", mob.horizon_s));
        }
        self.precoder.validate()?;
        if let Some(v) = &self.metrics.per_user_sinr_target_db {
            if v.len() != self.users {
                return bad(format!(
                    "metrics.per_user_sinr_target_db has {} entries for {} users",
                    v.len(),
                    self.users
                ));
            }
        }
        if !(self.metrics.cdf_step_db > 0.0) {
            return bad("metrics.cdf_step_db must be positive".into());
        }
        if self.run.workers == Some(0) {
            return bad("run.workers must be at least 1".into());
        }
        if self.run.sweep_seeds == 0 {
            return bad("run.sweep_seeds must be at least 1".into());
        }

        let d = &self.drop;
        let rise = (geom.height - d.user_height_m).abs();
        if !(d.min_distance_m <= d.max_distance_m) || !(d.min_distance_m >= rise) {
            return bad(format!(
                "drop region is empty: distances [{}, {}] m at user height {} m (array at {} m)",
                d.min_distance_m, d.max_distance_m, d.user_height_m, geom.height
            ));
        }
        if !(0.0..=360.0).contains(&d.sector_deg) {
            return bad(format!("drop.sector_deg must lie in [0, 360], got {}", d.sector_deg));
        }

        let mut warnings = Vec::new();
        let bounds = geom.near_field_bounds(self.wavelength())?;
        if d.min_distance_m < bounds.fresnel || d.max_distance_m > bounds.fraunhofer {
            warnings.push(format!(
                "drop distances [{}, {}] m leave the radiative near field [{:.3}, {:.3}] m",
                d.min_distance_m, d.max_distance_m, bounds.fresnel, bounds.fraunhofer
            ));
        }
        Ok(warnings)
    }
}
