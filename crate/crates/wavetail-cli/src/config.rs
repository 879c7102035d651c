//! Experiment configuration: TOML sections with defaults that reproduce the
//! reference setup (square barrier of height 16 and range 1, unit-width
//! packet launched from x0 = -20 with momentum 1, observation window
//! [-22, -18]). All quantities are in natural units (hbar = 1, 2M = 1).

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wavetail::numerics::{linspace, log_spaced};
use wavetail::{GridParams, PacketSpec, PotentialSpec, Segment};

/// Note written into every artifact header.
pub const UNITS_NOTE: &str = "units: hbar = 1, 2M = 1";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialConfig,
    pub packet: PacketConfig,
    pub interval: IntervalConfig,
    pub schedule: ScheduleConfig,
    pub comparison: ComparisonConfig,
    pub grid: GridConfig,
    pub fit: FitConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub height: f64,
    pub range: f64,
    /// Optional piecewise-constant segments inside [-range, range]; when
    /// absent the potential is the single barrier of `height`.
    pub segments: Option<Vec<SegmentConfig>>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            height: 16.0,
            range: 1.0,
            segments: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketConfig {
    /// Number of momentum-space nodes at k = 0 (the family parameter m).
    pub m: u32,
    pub a0: f64,
    pub k0: f64,
    pub x0: f64,
}

impl Default for PacketConfig {
    fn default() -> Self {
        Self {
            m: 0,
            a0: 1.0,
            k0: 1.0,
            x0: -20.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalConfig {
    pub left: f64,
    pub right: f64,
    pub points: usize,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self {
            left: -22.0,
            right: -18.0,
            points: 101,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Boundary between the densely sampled rebound region and the sparser
    /// algebraic tail.
    pub t_dense_max: f64,
    pub t_max: f64,
    pub dense_per_decade: usize,
    pub sparse_per_decade: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            t_dense_max: 60.0,
            t_max: 6000.0,
            dense_per_decade: 24,
            sparse_per_decade: 16,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    /// Snapshot times at which the grid and spectral propagators are
    /// compared; empty disables the comparison.
    pub times: Vec<f64>,
    pub tolerance: f64,
    /// Position window of the comparison and of the snapshot files.
    pub x_left: f64,
    pub x_right: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            times: vec![5.0],
            tolerance: 1e-3,
            x_left: -40.0,
            x_right: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 80.0,
            dx: 1.0 / 240.0,
            dt: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Explicit fit window [t_lo, t_hi]; auto-detected when absent.
    pub window: Option<[f64; 2]>,
    /// Allowed distance between the fitted exponent and the one predicted
    /// by the tail expansion (checked under --check).
    pub exponent_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            window: None,
            exponent_tolerance: 0.3,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "wavetail-out".into(),
        }
    }
}

impl ExperimentConfig {
    /// Load from a TOML file, or fall back to the built-in defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("cannot parse config {}", p.display()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(self.potential.range > 0.0) {
            bail!("potential.range must be positive, got {}", self.potential.range);
        }
        if self.potential.height < 0.0 {
            bail!(
                "potential.height must be nonnegative (bound states are out of scope), got {}",
                self.potential.height
            );
        }
        if let Some(segments) = &self.potential.segments {
            for s in segments {
                if s.value < 0.0 {
                    bail!(
                        "potential.segments values must be nonnegative, got {} on [{}, {}]",
                        s.value,
                        s.left,
                        s.right
                    );
                }
            }
        }
        if !(self.packet.a0 > 0.0) {
            bail!("packet.a0 must be positive, got {}", self.packet.a0);
        }
        if self.packet.k0 == 0.0 {
            bail!("packet.k0 must be nonzero");
        }
        if !(self.interval.left < self.interval.right) {
            bail!(
                "interval must satisfy left < right, got [{}, {}]",
                self.interval.left,
                self.interval.right
            );
        }
        if self.interval.points < 3 {
            bail!("interval.points must be at least 3, got {}", self.interval.points);
        }
        if !(self.schedule.t_dense_max > 1.0) {
            bail!(
                "schedule.t_dense_max must exceed 1, got {}",
                self.schedule.t_dense_max
            );
        }
        if !(self.schedule.t_max >= self.schedule.t_dense_max) {
            bail!(
                "schedule.t_max must be at least t_dense_max, got {} < {}",
                self.schedule.t_max,
                self.schedule.t_dense_max
            );
        }
        if self.schedule.dense_per_decade == 0 || self.schedule.sparse_per_decade == 0 {
            bail!("schedule sampling densities must be positive");
        }
        if !(self.comparison.tolerance > 0.0) {
            bail!(
                "comparison.tolerance must be positive, got {}",
                self.comparison.tolerance
            );
        }
        if !(self.comparison.x_left < self.comparison.x_right) {
            bail!(
                "comparison window must satisfy x_left < x_right, got [{}, {}]",
                self.comparison.x_left,
                self.comparison.x_right
            );
        }
        if !(self.grid.half_width > 0.0) || !(self.grid.dx > 0.0) || !(self.grid.dt > 0.0) {
            bail!("grid.half_width, grid.dx and grid.dt must all be positive");
        }
        if let Some([lo, hi]) = self.fit.window {
            if !(0.0 < lo && lo < hi) {
                bail!("fit.window must satisfy 0 < t_lo < t_hi, got [{lo}, {hi}]");
            }
        }
        if !(self.fit.exponent_tolerance > 0.0) {
            bail!(
                "fit.exponent_tolerance must be positive, got {}",
                self.fit.exponent_tolerance
            );
        }
        Ok(())
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let spec = match &self.potential.segments {
            None if self.potential.height == 0.0 => PotentialSpec::free(self.potential.range),
            None => PotentialSpec::square_barrier(self.potential.height, self.potential.range)
                .context("invalid [potential]")?,
            Some(segments) => PotentialSpec::piecewise(
                self.potential.range,
                segments
                    .iter()
                    .map(|s| Segment {
                        left: s.left,
                        right: s.right,
                        value: s.value,
                    })
                    .collect(),
            )
            .context("invalid [potential] segments")?,
        };
        Ok(spec)
    }

    pub fn packet_spec(&self) -> Result<PacketSpec> {
        PacketSpec::new(self.packet.m, self.packet.a0, self.packet.k0, self.packet.x0)
            .context("invalid [packet]")
    }

    pub fn grid_params(&self) -> GridParams {
        GridParams {
            half_width: self.grid.half_width,
            dx: self.grid.dx,
            dt: self.grid.dt,
        }
    }

    /// The observation-window grid used for P(t) quadrature and the initial
    /// packet artifact.
    pub fn interval_grid(&self) -> Vec<f64> {
        linspace(self.interval.left, self.interval.right, self.interval.points)
    }

    /// The nonescape sampling times: t = 0, then log-spaced samples dense
    /// through the rebound and sparser across the algebraic tail.
    pub fn schedule_times(&self) -> Vec<f64> {
        let s = &self.schedule;
        let mut ts = vec![0.0];
        let dense_n = (s.t_dense_max.log10() * s.dense_per_decade as f64).ceil() as usize + 1;
        let mut dense = log_spaced(1.0, s.t_dense_max, dense_n.max(2));
        *dense.last_mut().unwrap() = s.t_dense_max; // exp(ln t) lands an ulp off t
        ts.extend(dense);
        if s.t_max > s.t_dense_max {
            let decades = (s.t_max / s.t_dense_max).log10();
            let sparse_n = (decades * s.sparse_per_decade as f64).ceil() as usize + 1;
            let mut sparse = log_spaced(s.t_dense_max, s.t_max, sparse_n.max(2));
            *sparse.last_mut().unwrap() = s.t_max;
            ts.extend(sparse.into_iter().skip(1));
        }
        ts
    }
}
