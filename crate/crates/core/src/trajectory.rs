//! Ground-truth joint-angle trajectories on the 1 kHz tick grid.
//!
//! Generators are registered by name in a [`GeneratorRegistry`]; the run
//! configuration selects one through [`TrajectoryParams::kind`].

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const TICK_RATE_HZ: u32 = 1000;
/// Physical bound on a joint angle, degrees.
pub const MAX_ABS_ANGLE_DEG: f64 = 360.0;
pub const MIN_DURATION_MS: u64 = 1000;
pub const MAX_FREQUENCY_HZ: f64 = 10.0;

/// A joint-angle signal; `samples[i]` is the angle at tick `i` (milliseconds).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<f64>,
}

impl Trajectory {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("trajectory must contain at least one sample"));
        }
        if let Some((i, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > MAX_ABS_ANGLE_DEG)
        {
            return Err(Error::domain(format!(
                "sample {i} = {v} is not a valid angle"
            )));
        }
        Ok(Self { samples })
    }

    pub fn tick_rate_hz(&self) -> u32 {
        TICK_RATE_HZ
    }

    pub fn len(&self) -> u64 {
        self.samples.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at(&self, tick: u64) -> f64 {
        self.samples[tick as usize]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn window(&self, start: u64, end: u64) -> &[f64] {
        &self.samples[start as usize..end as usize]
    }
}

/// Generator selection and knobs as they appear in the `[trajectory]` table.
/// Each generator reads only the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryParams {
    pub kind: String,
    /// sinusoid_mix: number of summed components.
    pub components: u32,
    /// sinusoid_mix: per-component amplitude range, degrees.
    pub amplitude_deg: [f64; 2],
    /// sinusoid_mix: per-component frequency range, Hz.
    pub frequency_hz: [f64; 2],
    /// sinusoid_mix: per-component phase range, radians.
    pub phase_rad: [f64; 2],
    /// min_jerk_waypoints: number of waypoints.
    pub waypoints: u32,
    /// min_jerk_waypoints: hold time at each waypoint, ms.
    pub dwell_ms: u64,
    /// min_jerk_waypoints: waypoint values are drawn from [-a, a].
    pub waypoint_amplitude_deg: f64,
    /// csv_replay: file to replay.
    pub path: Option<PathBuf>,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            kind: "sinusoid_mix".into(),
            components: 3,
            amplitude_deg: [5.0, 15.0],
            frequency_hz: [0.05, 0.3],
            phase_rad: [0.0, TAU],
            waypoints: 16,
            dwell_ms: 250,
            waypoint_amplitude_deg: 60.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub params: TrajectoryParams,
    pub duration_ms: u64,
    pub seed: u64,
}

pub trait TrajectoryGenerator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Checks the generator-specific fields of `params`.
    fn validate(&self, params: &TrajectoryParams) -> Result<()>;

    fn generate(&self, config: &TrajectoryConfig) -> Result<Trajectory>;
}

/// Name-keyed table of trajectory generators.
pub struct GeneratorRegistry {
    generators: BTreeMap<&'static str, Box<dyn TrajectoryGenerator>>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self {
            generators: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(SinusoidMix));
        reg.register(Box::new(MinJerkWaypoints));
        reg.register(Box::new(CsvReplay));
        reg
    }

    /// Registers a generator, replacing any previous one with the same name.
    pub fn register(&mut self, generator: Box<dyn TrajectoryGenerator>) {
        self.generators.insert(generator.name(), generator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn TrajectoryGenerator> {
        self.generators
            .get(name)
            .map(|g| g.as_ref())
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown trajectory kind `{name}` (known: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.generators.keys().copied().collect()
    }
}

pub fn validate(config: &TrajectoryConfig) -> Result<()> {
    if config.duration_ms < MIN_DURATION_MS {
        return Err(Error::config(format!(
            "trajectory duration_ms must be >= {MIN_DURATION_MS}, got {}",
            config.duration_ms
        )));
    }
    GeneratorRegistry::with_builtins()
        .get(&config.params.kind)?
        .validate(&config.params)
}

/// Generates the trajectory selected by `config.params.kind` using the
/// built-in generators.
pub fn generate(config: &TrajectoryConfig) -> Result<Trajectory> {
    generate_with(&GeneratorRegistry::with_builtins(), config)
}

pub fn generate_with(
    registry: &GeneratorRegistry,
    config: &TrajectoryConfig,
) -> Result<Trajectory> {
    if config.duration_ms < MIN_DURATION_MS {
        return Err(Error::config(format!(
            "trajectory duration_ms must be >= {MIN_DURATION_MS}, got {}",
            config.duration_ms
        )));
    }
    let generator = registry.get(&config.params.kind)?;
    generator.validate(&config.params)?;
    let traj = generator.generate(config)?;
    debug_assert_eq!(traj.len(), config.duration_ms);
    Ok(traj)
}

fn check_range(name: &str, range: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    let [a, b] = range;
    if !(a.is_finite() && b.is_finite() && lo <= a && a <= b && b <= hi) {
        return Err(Error::config(format!(
            "{name} must satisfy {lo} <= lo <= hi <= {hi}, got [{a}, {b}]"
        )));
    }
    Ok(())
}

fn draw(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// Sum of `components` sinusoids with seeded amplitude, frequency and phase.
pub struct SinusoidMix;

impl TrajectoryGenerator for SinusoidMix {
    fn name(&self) -> &'static str {
        "sinusoid_mix"
    }

    fn validate(&self, p: &TrajectoryParams) -> Result<()> {
        if p.components == 0 {
            return Err(Error::config("sinusoid_mix needs at least one component"));
        }
        check_range("amplitude_deg", p.amplitude_deg, 0.0, MAX_ABS_ANGLE_DEG)?;
        check_range("frequency_hz", p.frequency_hz, 0.0, MAX_FREQUENCY_HZ)?;
        check_range("phase_rad", p.phase_rad, -TAU, TAU)?;
        if p.components as f64 * p.amplitude_deg[1] > MAX_ABS_ANGLE_DEG {
            return Err(Error::config(format!(
                "sinusoid_mix peak {} deg exceeds {MAX_ABS_ANGLE_DEG}",
                p.components as f64 * p.amplitude_deg[1]
            )));
        }
        Ok(())
    }

    fn generate(&self, config: &TrajectoryConfig) -> Result<Trajectory> {
        let p = &config.params;
        let mut rng = rng::stream(config.seed, Purpose::Trajectory, 0);
        let parts: Vec<(f64, f64, f64)> = (0..p.components)
            .map(|_| {
                let amp = draw(&mut rng, p.amplitude_deg);
                let freq = draw(&mut rng, p.frequency_hz);
                let phase = draw(&mut rng, p.phase_rad);
                (amp, TAU * freq, phase)
            })
            .collect();
        let samples = (0..config.duration_ms)
            .map(|tick| {
                let t = tick as f64 / TICK_RATE_HZ as f64;
                parts
                    .iter()
                    .map(|&(amp, omega, phase)| amp * (omega * t + phase).sin())
                    .sum()
            })
            .collect();
        Trajectory::new(samples)
    }
}

/// Piecewise minimum-jerk moves between seeded waypoints, holding `dwell_ms`
/// at each waypoint. Waypoint `i` is reached at tick `i * (dwell + move)`.
pub struct MinJerkWaypoints;

impl MinJerkWaypoints {
    /// Tick at which each waypoint is reached, and the length of one move.
    pub fn layout(waypoints: u32, dwell_ms: u64, duration_ms: u64) -> Result<(Vec<u64>, u64)> {
        let n = waypoints as u64;
        if n == 0 {
            return Err(Error::config(
                "min_jerk_waypoints needs at least one waypoint",
            ));
        }
        if n == 1 {
            return Ok((vec![0], 0));
        }
        let busy = n * dwell_ms;
        let move_ms = duration_ms.saturating_sub(busy) / (n - 1);
        if busy >= duration_ms || move_ms == 0 {
            return Err(Error::config(format!(
                "{n} waypoints with dwell {dwell_ms} ms do not fit in {duration_ms} ms"
            )));
        }
        Ok(((0..n).map(|i| i * (dwell_ms + move_ms)).collect(), move_ms))
    }

    /// Normalized minimum-jerk position profile on [0, 1].
    pub fn profile(tau: f64) -> f64 {
        let t3 = tau * tau * tau;
        t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)
    }
}

impl TrajectoryGenerator for MinJerkWaypoints {
    fn name(&self) -> &'static str {
        "min_jerk_waypoints"
    }

    fn validate(&self, p: &TrajectoryParams) -> Result<()> {
        if p.waypoints == 0 {
            return Err(Error::config(
                "min_jerk_waypoints needs at least one waypoint",
            ));
        }
        check_range(
            "waypoint_amplitude_deg",
            [0.0, p.waypoint_amplitude_deg],
            0.0,
            MAX_ABS_ANGLE_DEG,
        )
    }

    fn generate(&self, config: &TrajectoryConfig) -> Result<Trajectory> {
        let p = &config.params;
        let (ticks, move_ms) = Self::layout(p.waypoints, p.dwell_ms, config.duration_ms)?;
        let amp = p.waypoint_amplitude_deg;
        let mut rng = rng::stream(config.seed, Purpose::Trajectory, 1);
        let values: Vec<f64> = ticks.iter().map(|_| draw(&mut rng, [-amp, amp])).collect();

        let mut samples = Vec::with_capacity(config.duration_ms as usize);
        let mut seg = 0usize;
        for tick in 0..config.duration_ms {
            while seg + 1 < ticks.len() && tick >= ticks[seg + 1] {
                seg += 1;
            }
            let hold_end = ticks[seg] + p.dwell_ms;
            let value = if seg + 1 == ticks.len() || tick < hold_end {
                values[seg]
            } else {
                let tau = (tick - hold_end) as f64 / move_ms as f64;
                values[seg] + (values[seg + 1] - values[seg]) * Self::profile(tau)
            };
            samples.push(value);
        }
        Trajectory::new(samples)
    }
}

/// Replays a recorded trajectory from CSV, truncated to the configured
/// duration.
pub struct CsvReplay;

impl TrajectoryGenerator for CsvReplay {
    fn name(&self) -> &'static str {
        "csv_replay"
    }

    fn validate(&self, p: &TrajectoryParams) -> Result<()> {
        match &p.path {
            Some(_) => Ok(()),
            None => Err(Error::config("csv_replay requires `path`")),
        }
    }

    fn generate(&self, config: &TrajectoryConfig) -> Result<Trajectory> {
        let path = config
            .params
            .path
            .as_deref()
            .ok_or_else(|| Error::config("csv_replay requires `path`"))?;
        let traj = load_csv(path)?;
        if traj.len() < config.duration_ms {
            return Err(Error::config(format!(
                "{} holds {} ms of data, {} ms requested",
                path.display(),
                traj.len(),
                config.duration_ms
            )));
        }
        let mut samples = traj.samples;
        samples.truncate(config.duration_ms as usize);
        Trajectory::new(samples)
    }
}

/// Reads one angle (degrees) per line; line `i` is tick `i`.
pub fn load_csv(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, path)
}

fn parse_csv(text: &str, path: &Path) -> Result<Trajectory> {
    let load_err = |line: usize, msg: String| Error::Load {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.trim();
        let value: f64 = field
            .parse()
            .map_err(|_| load_err(i + 1, format!("cannot parse `{field}` as an angle")))?;
        if !value.is_finite() || value.abs() > MAX_ABS_ANGLE_DEG {
            return Err(load_err(i + 1, format!("angle {value} out of range")));
        }
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(load_err(0, "empty trajectory file".into()));
    }
    Trajectory::new(samples)
}

pub fn write_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(traj.samples.len() * 12);
    for v in &traj.samples {
        writeln!(out, "{v}").expect("writing to a String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}
