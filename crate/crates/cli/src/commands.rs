use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sphere_precoding::channel::{cache, covariance_zone};
use sphere_precoding::export::{write_beampattern, write_cdf, write_metrics, write_zones};
use sphere_precoding::precoding::{beampattern_grid, BeamRegion, SlicePlane};
use sphere_precoding::simulation::{
    covariance_sampling, mobility_sweep, prepare_trial, run_experiment, sweep_seeds, trial_zones, Method,
    ScenarioConfig,
};

use crate::manifest::RunManifest;
use crate::{Command, Common, OUT_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: &'static str,
        #[source]
        source: sphere_precoding::Error,
    },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Config { .. } => 2,
            Self::Numerical { .. } => 3,
            Self::Write { .. } => 4,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn numerical(context: &'static str) -> impl FnOnce(sphere_precoding::Error) -> CliError {
    move |source| CliError::Numerical { context, source }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate { common, dx } => simulate(common, dx),
        Command::Sweep { common, dx, seeds } => sweep(common, dx, seeds),
        Command::Beampattern {
            common,
            user,
            method,
            plane,
            steps,
            dx,
        } => beampattern(common, user, method, plane, steps, dx),
        Command::Covariance {
            config,
            seed,
            user,
            dx,
            out,
        } => covariance(&config, seed, user, dx, out),
    }
}

fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let config_error = |message: String| CliError::Config {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| config_error(e.to_string()))?;
    toml::from_str(&text).map_err(|e| config_error(e.to_string().trim_end().to_string()))
}

/// Validates the resolved configuration, printing soft warnings.
fn check(path: &Path, config: &ScenarioConfig) -> CliResult<()> {
    let warnings = config.validate().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn snapshot(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("configuration serializes")
}

/// Folds the shared flags into `config` and resolves the output directory:
/// flag, then `run.output_dir`, then the environment, then `./out`.
fn resolve_common(common: &Common, config: &mut ScenarioConfig) -> PathBuf {
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(w) = common.workers {
        config.run.workers = Some(w);
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.run.output_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    config.run.output_dir = Some(out.to_string_lossy().into_owned());
    out
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> CliResult<T> {
    match workers {
        None => Ok(job()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}"))),
    }
}

fn write_file(path: &Path, render: impl FnOnce(&mut BufWriter<File>) -> sphere_precoding::Result<()>) -> CliResult<()> {
    let write_error = |message: String| CliError::Write {
        path: path.to_path_buf(),
        message,
    };
    let file = File::create(path).map_err(|e| write_error(e.to_string()))?;
    let mut out = BufWriter::new(file);
    render(&mut out).map_err(|e| write_error(e.to_string()))?;
    out.flush().map_err(|e| write_error(e.to_string()))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Write {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })
}

fn finish(mut manifest: RunManifest, files: Vec<PathBuf>) -> CliResult<()> {
    let path = manifest.output_dir.join("manifest.json");
    manifest.outputs = files;
    manifest.outputs.push(path.clone());
    let json = manifest.to_json();
    write_file(&path, |out| Ok(writeln!(out, "{json}")?))
}

fn simulate(common: Common, dx: Option<f64>) -> CliResult<()> {
    let mut config = load_config(&common.config)?;
    let out_dir = resolve_common(&common, &mut config);
    if let Some(dx) = dx {
        config.mobility.move_distance_m = dx;
    }
    check(&common.config, &config)?;

    let seed = config.master_seed;
    let output = with_workers(config.run.workers, || run_experiment(&config, seed))?
        .map_err(numerical("simulation"))?;

    create_dir(&out_dir)?;
    let metrics = out_dir.join("metrics.csv");
    let cdf = out_dir.join("cdf.csv");
    let reports = std::slice::from_ref(&output.report);
    write_file(&metrics, |out| write_metrics(out, reports))?;
    write_file(&cdf, |out| write_cdf(out, reports))?;
    let manifest = RunManifest::new("simulate", &common.config, snapshot(&config), seed, &out_dir);
    finish(manifest, vec![metrics, cdf])
}

/// Parses a comma-separated list of non-negative distances.
pub fn parse_dx_list(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--dx expects comma-separated non-negative meters, got {text:?}"));
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<CliResult<Vec<_>>>()?;
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(bad());
    }
    Ok(values)
}

fn sweep(common: Common, dx: Option<String>, seeds: Option<usize>) -> CliResult<()> {
    let mut config = load_config(&common.config)?;
    let out_dir = resolve_common(&common, &mut config);
    if let Some(text) = dx {
        config.mobility.sweep_m = parse_dx_list(&text)?;
    }
    if let Some(n) = seeds {
        config.run.sweep_seeds = n;
    }
    check(&common.config, &config)?;
    if config.mobility.sweep_m.is_empty() {
        return Err(CliError::Usage("no moving distances to sweep".into()));
    }

    let seed = config.master_seed;
    let seed_list = sweep_seeds(seed, config.run.sweep_seeds);
    let table = with_workers(config.run.workers, || {
        mobility_sweep(&config, &config.mobility.sweep_m, &seed_list)
    })?
    .map_err(numerical("sweep"))?;

    create_dir(&out_dir)?;
    let sweep = out_dir.join("sweep.csv");
    let cdf = out_dir.join("cdf.csv");
    write_file(&sweep, |out| write_metrics(out, &table.rows))?;
    write_file(&cdf, |out| write_cdf(out, &table.rows))?;
    let manifest = RunManifest::new("sweep", &common.config, snapshot(&config), seed, &out_dir);
    finish(manifest, vec![sweep, cdf])
}

fn beampattern(
    common: Common,
    user: Option<usize>,
    method: Option<String>,
    plane: Option<String>,
    steps: Option<usize>,
    dx: Option<f64>,
) -> CliResult<()> {
    let mut config = load_config(&common.config)?;
    let out_dir = resolve_common(&common, &mut config);
    let bp = &mut config.beampattern;
    if let Some(u) = user {
        bp.user = u;
    }
    if let Some(m) = method {
        bp.method = m;
    }
    if let Some(p) = plane {
        bp.plane = p.parse::<SlicePlane>().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(s) = steps {
        bp.steps = s;
    }
    if let Some(dx) = dx {
        config.mobility.move_distance_m = dx;
    }
    check(&common.config, &config)?;

    let bp = &config.beampattern;
    let method: Method = bp.method.parse().map_err(|_| {
        CliError::Usage(format!(
            "unknown beampattern method {:?}; expected sphere, zf, conj, eig or eqproj",
            bp.method
        ))
    })?;
    if method == Method::UpperBound {
        return Err(CliError::Usage("the upper bound has no precoder to plot".into()));
    }
    if bp.user == 0 || bp.user > config.users {
        return Err(CliError::Usage(format!("--user must lie in 1..={}, got {}", config.users, bp.user)));
    }
    if bp.steps < 2 {
        return Err(CliError::Usage(format!("beampattern.steps must be at least 2, got {}", bp.steps)));
    }
    if !(bp.margin_m >= 0.0) {
        return Err(CliError::Usage(format!("beampattern.margin_m must be non-negative, got {}", bp.margin_m)));
    }

    let seed = config.master_seed;
    let k = bp.user - 1;
    let geom = config.geometry().map_err(numerical("geometry"))?;
    let grid = with_workers(config.run.workers, || {
        let trial = prepare_trial(&config, seed, 0)?;
        let f = trial.precoder(method).expect("precoder method").column(k);
        let center = trial.users[k].initial;
        let reach = trial
            .users
            .iter()
            .map(|u| u.initial.distance(center))
            .fold(0.0, f64::max);
        let region = BeamRegion::slice(bp.plane, center, reach + bp.margin_m, bp.steps);
        Ok::<_, sphere_precoding::Error>((beampattern_grid(&geom, &f, &region, config.wavelength())?, trial.zones))
    })?;
    let (grid, zones) = grid.map_err(numerical("beampattern"))?;

    create_dir(&out_dir)?;
    let pattern = out_dir.join("beampattern.csv");
    let zone_file = out_dir.join("zones.csv");
    write_file(&pattern, |out| write_beampattern(out, &grid))?;
    write_file(&zone_file, |out| write_zones(out, &zones, bp.user))?;
    let manifest = RunManifest::new("beampattern", &common.config, snapshot(&config), seed, &out_dir);
    finish(manifest, vec![pattern, zone_file])
}

/// Writes the zone covariance of `user` (1-based) in experiment 0 and prints
/// the manifest to stdout, so nothing lands beside the cache file.
fn covariance(config_path: &Path, seed: Option<u64>, user: usize, dx: Option<f64>, out: PathBuf) -> CliResult<()> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    if let Some(dx) = dx {
        config.mobility.move_distance_m = dx;
    }
    check(config_path, &config)?;
    if user == 0 || user > config.users {
        return Err(CliError::Usage(format!("--user must lie in 1..={}, got {user}", config.users)));
    }

    let seed = config.master_seed;
    let geom = config.geometry().map_err(numerical("geometry"))?;
    let (_, zones) = trial_zones(&config, seed, 0).map_err(numerical("user drop"))?;
    let sampling = covariance_sampling(&config, seed, 0, user - 1);
    let r = covariance_zone(&geom, &zones[user - 1], config.wavelength(), &sampling)
        .map_err(numerical("covariance"))?;
    cache::save(&out, &r).map_err(|e| CliError::Write {
        path: out.clone(),
        message: e.to_string(),
    })?;

    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut manifest = RunManifest::new("covariance", config_path, snapshot(&config), seed, &dir);
    manifest.outputs.push(out);
    println!("{}", manifest.to_json());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dx_lists() {
        assert_eq!(parse_dx_list("0,0.056, 0.139").unwrap(), vec![0.0, 0.056, 0.139]);
        assert_eq!(parse_dx_list("0").unwrap(), vec![0.0]);
        for bad in ["", "0,,1", "a", "0.1;0.2", "-0.1", "nan", "inf"] {
            assert_eq!(parse_dx_list(bad).unwrap_err().exit_code(), 2, "{bad:?}");
        }
    }

    #[test]
    fn exit_codes() {
        let num = CliError::Numerical {
            context: "sweep",
            source: sphere_precoding::Error::Empty("x"),
        };
        assert_eq!(num.exit_code(), 3);
        let w = CliError::Write {
            path: "x".into(),
            message: String::new(),
        };
        assert_eq!(w.exit_code(), 4);
    }
}
