//! Scenario generation, Monte-Carlo SINR evaluation and metric aggregation.
//!
//! One *trial* is a single user drop: zones, covariances, bases and every
//! precoder are computed from the users' initial positions, then each user is
//! scored on channels drawn around displaced positions. An *experiment run*
//! aggregates `experiments` independent trials; a *sweep* repeats the run for
//! several moving distances (and optionally several seeds).

pub mod config;
pub mod seeds;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    DropRegion, EvaluationChannel, PositionLaw, ScattererMode, ScenarioConfig,
};

use crate::channel::{kl_sample, zone_samples, ChannelVector, KLBasis, ZoneSampling};
use crate::geometry::{transmission_zone, SphericalZone, UserKinematics, Vec3};
use crate::numerics::{CMatrix, SolverTolerances};
use crate::precoding::{
    conjugate_beamforming, dominant_eigenvector, equal_projection, sphere_precode, zero_forcing,
    PrecodingMatrix,
};
use crate::{to_db, Error, Result};

/// Precoders and the interference-free upper bound, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    Sphere,
    ZeroForcing,
    Conjugate,
    DominantEigenvector,
    EqualProjection,
    UpperBound,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Sphere,
        Method::ZeroForcing,
        Method::Conjugate,
        Method::DominantEigenvector,
        Method::EqualProjection,
        Method::UpperBound,
    ];

    /// The implemented precoders (everything but the upper bound).
    pub const PRECODERS: [Method; 5] = [
        Method::Sphere,
        Method::ZeroForcing,
        Method::Conjugate,
        Method::DominantEigenvector,
        Method::EqualProjection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sphere => "sphere",
            Method::ZeroForcing => "zf",
            Method::Conjugate => "conj",
            Method::DominantEigenvector => "eig",
            Method::EqualProjection => "eqproj",
            Method::UpperBound => "upper",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Places `users` users in the drop region with random motion directions.
/// Speeds are set so that each user covers `move_distance_m` over the
/// horizon.
///
/// Positions are drawn before any motion parameter so that the same stream
/// yields the same placement for every moving distance.
pub fn drop_users<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<UserKinematics>> {
    let geom = config.geometry()?;
    let d = &config.drop;
    let rise = geom.height - d.user_height_m;
    if !(d.min_distance_m <= d.max_distance_m) || !(d.min_distance_m >= rise.abs()) {
        return Err(Error::InvalidParameter("drop region is empty".into()));
    }
    let half_sector = d.sector_deg.to_radians() / 2.0;
    let positions: Vec<Vec3> = (0..config.users)
        .map(|_| {
            let dist = d.min_distance_m + (d.max_distance_m - d.min_distance_m) * rng.random::<f64>();
            let azimuth = half_sector * (2.0 * rng.random::<f64>() - 1.0);
            let ground = (dist * dist - rise * rise).max(0.0).sqrt();
            Vec3::new(ground * azimuth.cos(), ground * azimuth.sin(), d.user_height_m)
        })
        .collect();
    let speed = config.mobility.move_distance_m / config.mobility.horizon_s;
    Ok(positions
        .into_iter()
        .map(|initial| UserKinematics {
            initial,
            speed,
            heading: TAU * rng.random::<f64>(),
            elevation: PI * rng.random::<f64>(),
            horizon: config.mobility.horizon_s,
        })
        .collect())
}

/// SINR of user `k` through channel `h`:
/// `|hᴴf_k|² / (Σ_{l≠k} |hᴴf_l|² + σ²)`.
pub fn evaluate_sinr(f: &PrecodingMatrix, h: &ChannelVector, k: usize, noise_power: f64) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (l, col) in f.matrix().column_iter().enumerate() {
        let g = h.dotc(&col).norm_sqr();
        if l == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    signal / (interference + noise_power)
}

/// Fraction of samples at or above `target`.
pub fn satisfaction_probability(samples: &[f64], target: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("satisfaction probability of no samples"));
    }
    Ok(samples.iter().filter(|&&s| s >= target).count() as f64 / samples.len() as f64)
}

/// Matched-filter SINR without interference, `‖h‖²/σ²`.
pub fn upper_bound_sinr(h: &ChannelVector, noise_power: f64) -> f64 {
    h.norm_squared() / noise_power
}

/// Everything computed from one user drop before evaluation.
#[derive(Clone, Debug)]
pub struct Trial {
    pub users: Vec<UserKinematics>,
    pub zones: Vec<SphericalZone>,
    pub bases: Vec<KLBasis>,
    /// Line-of-sight channels at the initial positions, one column per user.
    pub los: CMatrix,
    /// Precoding matrices indexed like [`Method::PRECODERS`].
    pub precoders: Vec<PrecodingMatrix>,
}

impl Trial {
    pub fn precoder(&self, method: Method) -> Option<&PrecodingMatrix> {
        Method::PRECODERS
            .iter()
            .position(|m| *m == method)
            .map(|i| &self.precoders[i])
    }
}

/// Users and transmission zones of experiment `experiment`.
pub fn trial_zones(
    config: &ScenarioConfig,
    seed: u64,
    experiment: usize,
) -> Result<(Vec<UserKinematics>, Vec<SphericalZone>)> {
    let mut rng = seeds::rng(seeds::derive(seed, &[experiment as u64, seeds::DROP]));
    let users = drop_users(config, &mut rng)?;
    let zones = users
        .iter()
        .map(|u| transmission_zone(u, config.channel.scatter_radius_m))
        .collect();
    Ok((users, zones))
}

/// Zone sampling behind user `user`'s covariance in experiment `experiment`.
pub fn covariance_sampling(config: &ScenarioConfig, seed: u64, experiment: usize, user: usize) -> ZoneSampling {
    ZoneSampling {
        samples: config.channel.covariance_samples,
        seed: seeds::derive(seed, &[experiment as u64, seeds::COVARIANCE, user as u64]),
        measure: config.channel.sampling,
    }
}

/// Builds zones, bases and all precoders for experiment `experiment`.
pub fn prepare_trial(config: &ScenarioConfig, seed: u64, experiment: usize) -> Result<Trial> {
    let geom = config.geometry()?;
    let lambda = config.wavelength();
    let (users, zones) = trial_zones(config, seed, experiment)?;
    let bases = zones
        .iter()
        .enumerate()
        .map(|(k, zone)| {
            zone_samples(&geom, zone, lambda, &covariance_sampling(config, seed, experiment, k))?
                .kl_basis(config.precoder.truncation)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut los = CMatrix::zeros(geom.element_count(), users.len());
    for (k, u) in users.iter().enumerate() {
        los.set_column(k, &crate::channel::steering_vector(&geom, u.initial, lambda));
    }

    let precoders = Method::PRECODERS
        .iter()
        .map(|&m| match m {
            Method::Sphere => sphere_precode(&bases, &config.precoder, &SolverTolerances::default()),
            Method::ZeroForcing => zero_forcing(&los),
            Method::Conjugate => PrecodingMatrix::from_columns(
                &users
                    .iter()
                    .map(|u| conjugate_beamforming(&geom, u.initial, lambda))
                    .collect::<Vec<_>>(),
            ),
            Method::DominantEigenvector => PrecodingMatrix::from_columns(
                &bases
                    .iter()
                    .map(dominant_eigenvector)
                    .collect::<Result<Vec<_>>>()?,
            ),
            Method::EqualProjection => PrecodingMatrix::from_columns(
                &bases
                    .iter()
                    .map(|b| equal_projection(b, config.precoder.target_level))
                    .collect::<Vec<_>>(),
            ),
            Method::UpperBound => unreachable!("not a precoder"),
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Trial {
        users,
        zones,
        bases,
        los,
        precoders,
    })
}

/// One evaluation draw: where the user was and the SINR of every method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SinrSample {
    /// Trial index within the sample set.
    pub trial: usize,
    /// 0-based user index.
    pub user: usize,
    pub displacement: f64,
    pub heading: f64,
    pub elevation: f64,
    /// Linear SINR indexed like [`Method::ALL`].
    pub sinr: [f64; 6],
}

impl SinrSample {
    pub fn get(&self, method: Method) -> f64 {
        self.sinr[method.index()]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SinrSampleSet {
    pub samples: Vec<SinrSample>,
}

impl SinrSampleSet {
    pub fn values(&self, method: Method) -> Vec<f64> {
        self.samples.iter().map(|s| s.get(method)).collect()
    }

    pub fn extend(&mut self, other: SinrSampleSet, trial_offset: usize) {
        self.samples.extend(other.samples.into_iter().map(|mut s| {
            s.trial += trial_offset;
            s
        }));
    }

    fn trial_count(&self) -> usize {
        self.samples.iter().map(|s| s.trial + 1).max().unwrap_or(0)
    }
}

/// Scores every method of `trial` on channels drawn around displaced user
/// positions.
pub fn evaluate_trial(
    config: &ScenarioConfig,
    trial: &Trial,
    seed: u64,
    experiment: usize,
) -> Result<SinrSampleSet> {
    let geom = config.geometry()?;
    let lambda = config.wavelength();
    let model = config.realization_model();
    let sigma2 = config.noise_power_linear;
    let e = experiment as u64;
    let mut samples = Vec::with_capacity(trial.users.len() * config.channel.evaluation_samples);

    for (k, user) in trial.users.iter().enumerate() {
        let mut rng = seeds::rng(seeds::derive(seed, &[e, seeds::EVALUATION, k as u64]));
        let persistent = match config.channel.scatterers {
            ScattererMode::Persistent => Some(model.draw_scatterers(&mut rng)),
            ScattererMode::Fresh => None,
        };
        let dx = user.move_distance();
        for _ in 0..config.channel.evaluation_samples {
            let u: f64 = rng.random();
            let heading = TAU * rng.random::<f64>();
            let elevation = PI * rng.random::<f64>();
            let displacement = match config.mobility.position_law {
                PositionLaw::Uniform => dx * u,
                PositionLaw::Endpoint => dx,
            };
            let position = user.displaced_position(displacement, heading, elevation);
            let h = match (config.channel.evaluation, &persistent) {
                (EvaluationChannel::Kl, _) => kl_sample(&trial.bases[k], &mut rng),
                (_, Some(set)) => model.channel_from(&geom, position, set, lambda),
                (_, None) => {
                    let set = model.draw_scatterers(&mut rng);
                    model.channel_from(&geom, position, &set, lambda)
                }
            };
            let mut sinr = [0.0; 6];
            for (m, f) in Method::PRECODERS.iter().zip(&trial.precoders) {
                sinr[m.index()] = evaluate_sinr(f, &h, k, sigma2);
            }
            sinr[Method::UpperBound.index()] = upper_bound_sinr(&h, sigma2);
            samples.push(SinrSample {
                trial: 0,
                user: k,
                displacement,
                heading,
                elevation,
                sinr,
            });
        }
    }
    Ok(SinrSampleSet { samples })
}

/// Aggregates for one method.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub avg_sinr_linear: f64,
    /// `10·log10(avg_sinr_linear)`.
    pub avg_sinr_db: f64,
    /// Mean over trials of the minimum over users of the per-user
    /// satisfaction probability.
    pub satisfaction: f64,
    /// Pooled fraction of samples meeting their user's target.
    pub fraction_above_target: f64,
    pub n_samples: usize,
    /// Empirical CDF `(sinr_db, P[SINR ≤ sinr_db])` on the report grid.
    pub cdf: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub move_distance_m: f64,
    pub methods: Vec<MethodMetrics>,
}

impl MetricsReport {
    pub fn method(&self, method: Method) -> &MethodMetrics {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .expect("every method is reported")
    }
}

/// Summarizes a sample set. All methods share one CDF grid spanning the
/// finite dB values in steps of `metrics.cdf_step_db`.
pub fn aggregate(config: &ScenarioConfig, move_distance_m: f64, set: &SinrSampleSet) -> Result<MetricsReport> {
    if set.samples.is_empty() {
        return Err(Error::Empty("no SINR samples to aggregate"));
    }
    let step = config.metrics.cdf_step_db;
    let finite_db = set
        .samples
        .iter()
        .flat_map(|s| s.sinr.iter().map(|&v| to_db(v)))
        .filter(|v| v.is_finite());
    let (lo, hi) = finite_db.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let grid: Vec<f64> = if lo.is_finite() {
        let first = (lo / step).floor() as i64;
        let last = (hi / step).ceil() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    } else {
        vec![0.0]
    };

    let trials = set.trial_count();
    let users = set.samples.iter().map(|s| s.user + 1).max().unwrap_or(0);

    let methods = Method::ALL
        .iter()
        .map(|&method| {
            let mut values = set.values(method);
            let n = values.len();
            let avg = values.iter().sum::<f64>() / n as f64;
            let met = set
                .samples
                .iter()
                .filter(|s| s.get(method) >= config.sinr_target(s.user))
                .count();

            // Per (trial, user) satisfaction, min over users, mean over trials.
            let mut hits = vec![0usize; trials * users];
            let mut counts = vec![0usize; trials * users];
            for s in &set.samples {
                let slot = s.trial * users + s.user;
                counts[slot] += 1;
                if s.get(method) >= config.sinr_target(s.user) {
                    hits[slot] += 1;
                }
            }
            let mut per_trial = Vec::new();
            for t in 0..trials {
                let worst = (0..users)
                    .filter(|&u| counts[t * users + u] > 0)
                    .map(|u| hits[t * users + u] as f64 / counts[t * users + u] as f64)
                    .fold(f64::INFINITY, f64::min);
                if worst.is_finite() {
                    per_trial.push(worst);
                }
            }
            let satisfaction = per_trial.iter().sum::<f64>() / per_trial.len().max(1) as f64;

            values.sort_by(f64::total_cmp);
            let mut idx = 0;
            let cdf = grid
                .iter()
                .map(|&x| {
                    while idx < n && to_db(values[idx]) <= x {
                        idx += 1;
                    }
                    (x, idx as f64 / n as f64)
                })
                .collect();

            MethodMetrics {
                method,
                avg_sinr_linear: avg,
                avg_sinr_db: to_db(avg),
                satisfaction,
                fraction_above_target: met as f64 / n as f64,
                n_samples: n,
                cdf,
            }
        })
        .collect();
    Ok(MetricsReport {
        move_distance_m,
        methods,
    })
}

/// Samples and metrics of one run.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub samples: SinrSampleSet,
    pub report: MetricsReport,
}

/// Runs every trial of the sample set for `seed`, trials in parallel and
/// merged in trial order.
pub fn run_samples(config: &ScenarioConfig, seed: u64) -> Result<SinrSampleSet> {
    config.validate()?;
    let sets: Vec<Result<SinrSampleSet>> = (0..config.experiments)
        .into_par_iter()
        .map(|e| {
            prepare_trial(config, seed, e)
                .and_then(|trial| evaluate_trial(config, &trial, seed, e))
                .map_err(|source| Error::Experiment {
                    experiment: e,
                    source: Box::new(source),
                })
        })
        .collect();
    let mut out = SinrSampleSet::default();
    for (e, set) in sets.into_iter().enumerate() {
        out.extend(set?, e);
    }
    Ok(out)
}

/// One experiment run at the configured moving distance.
pub fn run_experiment(config: &ScenarioConfig, seed: u64) -> Result<ExperimentOutput> {
    let samples = run_samples(config, seed)?;
    let report = aggregate(config, config.mobility.move_distance_m, &samples)?;
    Ok(ExperimentOutput { samples, report })
}

/// Per-Δx reports of a sweep.
#[derive(Clone, Debug)]
pub struct SweepTable {
    pub rows: Vec<MetricsReport>,
}

/// Seeds used by a sweep with `count` seeds: the master seed itself for a
/// single seed, derived seeds otherwise.
pub fn sweep_seeds(master: u64, count: usize) -> Vec<u64> {
    if count == 1 {
        vec![master]
    } else {
        (0..count as u64)
            .map(|i| seeds::derive(master, &[seeds::SWEEP, i]))
            .collect()
    }
}

/// Runs the experiment for every moving distance and pools samples across
/// seeds (equal sample counts per seed, so pooled averages equal seed
/// averages).
pub fn mobility_sweep(config: &ScenarioConfig, move_distances: &[f64], seeds_list: &[u64]) -> Result<SweepTable> {
    if move_distances.is_empty() {
        return Err(Error::Empty("sweep needs at least one moving distance"));
    }
    if seeds_list.is_empty() {
        return Err(Error::Empty("sweep needs at least one seed"));
    }
    let mut rows = Vec::with_capacity(move_distances.len());
    for &dx in move_distances {
        let mut cfg = config.clone();
        cfg.mobility.move_distance_m = dx;
        let mut pooled = SinrSampleSet::default();
        for (i, &seed) in seeds_list.iter().enumerate() {
            pooled.extend(run_samples(&cfg, seed)?, i * cfg.experiments);
        }
        rows.push(aggregate(&cfg, dx, &pooled)?);
    }
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::steering_vector;
    use num_complex::Complex64;

    fn small_config(users: usize) -> ScenarioConfig {
        let mut c = ScenarioConfig::with_users(users);
        c.array.vertical = 4;
        c.array.horizontal = 8;
        c.experiments = 3;
        c.channel.evaluation_samples = 20;
        c.drop.min_distance_m = 1.6;
        c.drop.max_distance_m = 4.0;
        c
    }

    #[test]
    fn drop_is_deterministic_and_inside_region() {
        let c = small_config(4);
        let a = drop_users(&c, &mut seeds::rng(5)).unwrap();
        let b = drop_users(&c, &mut seeds::rng(5)).unwrap();
        assert_eq!(a, b);
        let center = c.geometry().unwrap().center();
        for u in &a {
            let d = u.initial.distance(center);
            assert!(d >= c.drop.min_distance_m - 1e-9 && d <= c.drop.max_distance_m + 1e-9);
            assert!((u.move_distance() - c.mobility.move_distance_m).abs() < 1e-15);
            assert_eq!(u.initial.z, c.drop.user_height_m);
            assert!(u.initial.y.atan2(u.initial.x).abs() <= 60f64.to_radians() + 1e-12);
        }
    }

    #[test]
    fn degenerate_drop_region() {
        let mut c = small_config(1);
        c.drop.min_distance_m = 5.0;
        c.drop.max_distance_m = 5.0;
        c.drop.sector_deg = 0.0;
        let a = drop_users(&c, &mut seeds::rng(1)).unwrap();
        let b = drop_users(&c, &mut seeds::rng(2)).unwrap();
        assert_eq!(a[0].initial, b[0].initial);
        let ground = (25.0f64 - 1.5 * 1.5).sqrt();
        assert!((a[0].initial.x - ground).abs() < 1e-12 && a[0].initial.y == 0.0);
        c.drop.min_distance_m = 1.0;
        assert!(drop_users(&c, &mut seeds::rng(1)).is_err());
    }

    fn matrix(cols: &[Vec<Complex64>]) -> PrecodingMatrix {
        let cols: Vec<_> = cols.iter().map(|c| crate::numerics::CVector::from_vec(c.clone())).collect();
        PrecodingMatrix::from_columns(&cols).unwrap()
    }

    #[test]
    fn sinr_arithmetic() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let h = crate::numerics::CVector::from_vec(vec![one, zero]);
        let f = matrix(&[vec![one, zero]]);
        assert!((evaluate_sinr(&f, &h, 0, 1e-2) - 100.0).abs() < 1e-9);
        let f = matrix(&[vec![one, zero], vec![Complex64::new(0.1, 0.0), zero]]);
        assert!((evaluate_sinr(&f, &h, 0, 1e-2) - 50.0).abs() < 1e-9);
        let f = matrix(&[vec![zero, zero], vec![one, zero]]);
        assert_eq!(evaluate_sinr(&f, &h, 0, 1e-2), 0.0);
    }

    #[test]
    fn satisfaction_examples() {
        assert_eq!(satisfaction_probability(&[5.0, 6.0], 1.0).unwrap(), 1.0);
        assert_eq!(satisfaction_probability(&[10.0, 30.0, 50.0, 70.0], 40.0).unwrap(), 0.5);
        assert_eq!(satisfaction_probability(&[0.0, 3.0], 0.0).unwrap(), 1.0);
        assert!(satisfaction_probability(&[], 1.0).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let h = crate::numerics::CVector::from_element(16, Complex64::new(0.0, 1.0));
        assert!((upper_bound_sinr(&h, 1e-2) - 1600.0).abs() < 1e-9);
        assert!((to_db(1600.0) - 32.0412).abs() < 1e-4);
        assert_eq!(upper_bound_sinr(&crate::numerics::CVector::zeros(4), 1e-2), 0.0);
    }

    #[test]
    fn upper_bound_dominates() {
        use crate::numerics::testutil::{random_matrix, rng};
        let mut g = rng(17);
        for _ in 0..100 {
            let h = random_matrix(&mut g, 8, 1).column(0).into_owned();
            let raw = random_matrix(&mut g, 8, 3);
            let cols: Vec<_> = raw
                .column_iter()
                .map(|c| {
                    let s: f64 = g.random::<f64>();
                    c.unscale(c.norm()) * Complex64::new(s, 0.0)
                })
                .collect();
            let f = PrecodingMatrix::from_columns(&cols).unwrap();
            for k in 0..3 {
                assert!(evaluate_sinr(&f, &h, k, 1e-2) <= upper_bound_sinr(&h, 1e-2) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn run_is_deterministic() {
        let c = small_config(2);
        let a = run_experiment(&c, 7).unwrap();
        let b = run_experiment(&c, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.report, b.report);
        assert_eq!(a.samples.samples.len(), 3 * 2 * 20);
    }

    #[test]
    fn single_user_sphere_equals_equal_projection() {
        let c = small_config(1);
        let out = run_experiment(&c, 3).unwrap();
        for s in &out.samples.samples {
            assert_eq!(s.get(Method::Sphere), s.get(Method::EqualProjection));
        }
        assert_eq!(
            out.report.method(Method::Sphere).avg_sinr_db,
            out.report.method(Method::EqualProjection).avg_sinr_db
        );
    }

    #[test]
    fn report_invariants() {
        let c = small_config(3);
        let out = run_experiment(&c, 11).unwrap();
        for s in &out.samples.samples {
            let ub = s.get(Method::UpperBound);
            for m in Method::PRECODERS {
                let v = s.get(m);
                assert!(v >= 0.0 && v <= ub * (1.0 + 1e-9), "{m}: {v} > {ub}");
            }
        }
        for m in &out.report.methods {
            assert!((0.0..=1.0).contains(&m.satisfaction));
            assert_eq!(m.avg_sinr_db, to_db(m.avg_sinr_linear));
            assert!(m.cdf.windows(2).all(|w| w[0].1 <= w[1].1));
            assert_eq!(m.cdf.last().unwrap().1, 1.0);
        }
        // Satisfaction is non-increasing in the target.
        let values = out.samples.values(Method::Sphere);
        let mut last = 1.0;
        for db in [0.0, 10.0, 20.0, 30.0, 40.0] {
            let p = satisfaction_probability(&values, crate::from_db(db)).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn point_zones_null_interference() {
        // No mobility, near-point scattering, LoS-only evaluation geometry.
        let mut c = small_config(3);
        c.channel.scatter_radius_m = 1e-4;
        c.mobility.move_distance_m = 0.0;
        c.channel.evaluation_samples = 5;
        let geom = c.geometry().unwrap();
        let lambda = c.wavelength();
        let n = geom.element_count() as f64;
        for e in 0..3 {
            let trial = prepare_trial(&c, 21, e).unwrap();
            let zf = trial.precoder(Method::ZeroForcing).unwrap();
            let sphere = trial.precoder(Method::Sphere).unwrap();
            for (k, u) in trial.users.iter().enumerate() {
                let h = steering_vector(&geom, u.initial, lambda);
                for l in 0..trial.users.len() {
                    if l == k {
                        continue;
                    }
                    assert!(h.dotc(&zf.column(l)).norm_sqr() < 1e-16 * n);
                    let eps = c.precoder.interference_cap;
                    // The truncated basis misses a sliver of h; that part is
                    // not capped, so the exact bound carries its norm.
                    let basis = &trial.bases[k].basis;
                    let leak = (&h - basis * basis.adjoint() * &h).norm();
                    let bound = (eps * n.sqrt() + leak).powi(2);
                    let v = h.dotc(&sphere.column(l)).norm_sqr();
                    assert!(v <= bound * (1.0 + 1e-6), "{v} > {bound}");
                    assert!(v <= 1.05 * eps * eps * n, "{v}");
                }
            }
        }
    }

    #[test]
    fn sweep_single_point() {
        let c = small_config(2);
        let t = mobility_sweep(&c, &[0.0], &[4]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].methods.len(), 6);
        assert!(mobility_sweep(&c, &[], &[4]).is_err());
        assert!(mobility_sweep(&c, &[0.0], &[]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("fp".parse::<Method>().is_err());
    }
}
