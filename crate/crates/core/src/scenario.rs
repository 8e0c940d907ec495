//! Declarative search problems and their tabulation.

use serde::{Deserialize, Serialize};

use crate::dist1d::{self, IntervalScenario, SeriesConfig};
use crate::error::{invalid, Error, Result};
use crate::geo::{self, GeodesicScene, Target};
use crate::pdesolve::{self, ConcentricProblem, PdeConfig, RobinIntervalProblem};
use crate::tabulation::{TabulatedDistribution, TimeGrid};

/// Serde helpers for trapping rates: a number, or the string `"inf"` for a
/// perfectly absorbing target.
pub mod rate {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            "inf".serialize(s)
        } else {
            v.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

/// One small spherical target of the narrow-capture problem; its radius is
/// `epsilon * radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallTarget {
    pub center: [f64; 3],
    #[serde(rename = "r")]
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    IntervalPure {
        #[serde(rename = "l")]
        length: f64,
        #[serde(rename = "D")]
        diffusivity: f64,
        #[serde(rename = "x0")]
        start: f64,
    },
    IntervalDrift {
        #[serde(rename = "l")]
        length: f64,
        #[serde(rename = "D")]
        diffusivity: f64,
        #[serde(rename = "mu")]
        drift: f64,
        #[serde(rename = "x0")]
        start: f64,
    },
    IntervalRobin {
        #[serde(rename = "l")]
        length: f64,
        #[serde(rename = "D")]
        diffusivity: f64,
        #[serde(rename = "x0")]
        start: f64,
        #[serde(rename = "gamma0", with = "rate")]
        gamma_left: f64,
        #[serde(rename = "gamma1", with = "rate")]
        gamma_right: f64,
    },
    #[serde(rename = "concentric3d")]
    Concentric {
        #[serde(rename = "R0")]
        inner: f64,
        #[serde(rename = "R1")]
        outer: f64,
        #[serde(rename = "r0")]
        start: f64,
        #[serde(rename = "D")]
        diffusivity: f64,
    },
    NarrowCapture {
        #[serde(rename = "D")]
        diffusivity: f64,
        #[serde(rename = "x0")]
        start: [f64; 3],
        epsilon: f64,
        targets: Vec<SmallTarget>,
    },
    GeodesicScene {
        scene: GeodesicScene,
    },
}

/// Grid and solver controls for tabulating a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridControl {
    /// Number of grid times.
    pub points: usize,
    /// Largest searcher count the grid must serve; sets `t_min`.
    pub n_max: f64,
    pub series: SeriesConfig,
    pub pde: PdeConfig,
}

impl Default for GridControl {
    fn default() -> Self {
        Self {
            points: 4000,
            n_max: 1e8,
            series: SeriesConfig::default(),
            pde: PdeConfig::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioSpec::IntervalPure { .. } => "interval_pure",
            ScenarioSpec::IntervalDrift { .. } => "interval_drift",
            ScenarioSpec::IntervalRobin { .. } => "interval_robin",
            ScenarioSpec::Concentric { .. } => "concentric3d",
            ScenarioSpec::NarrowCapture { .. } => "narrow_capture",
            ScenarioSpec::GeodesicScene { .. } => "geodesic_scene",
        }
    }

    pub fn diffusivity(&self) -> f64 {
        match self {
            ScenarioSpec::IntervalPure { diffusivity, .. }
            | ScenarioSpec::IntervalDrift { diffusivity, .. }
            | ScenarioSpec::IntervalRobin { diffusivity, .. }
            | ScenarioSpec::Concentric { diffusivity, .. }
            | ScenarioSpec::NarrowCapture { diffusivity, .. } => *diffusivity,
            ScenarioSpec::GeodesicScene { scene } => scene.diffusivity,
        }
    }

    /// The interval problem, for the pure and drift kinds.
    pub fn interval(&self) -> Option<IntervalScenario> {
        match *self {
            ScenarioSpec::IntervalPure {
                length,
                diffusivity,
                start,
            } => Some(IntervalScenario {
                length,
                diffusivity,
                drift: 0.0,
                start,
            }),
            ScenarioSpec::IntervalDrift {
                length,
                diffusivity,
                drift,
                start,
            } => Some(IntervalScenario {
                length,
                diffusivity,
                drift,
                start,
            }),
            _ => None,
        }
    }

    pub fn robin(&self) -> Option<RobinIntervalProblem> {
        match *self {
            ScenarioSpec::IntervalRobin {
                length,
                diffusivity,
                start,
                gamma_left,
                gamma_right,
            } => Some(RobinIntervalProblem {
                length,
                diffusivity,
                start,
                gamma_left,
                gamma_right,
            }),
            _ => None,
        }
    }

    pub fn concentric(&self) -> Option<ConcentricProblem> {
        match *self {
            ScenarioSpec::Concentric {
                inner,
                outer,
                start,
                diffusivity,
            } => Some(ConcentricProblem {
                inner,
                outer,
                start,
                diffusivity,
            }),
            _ => None,
        }
    }

    /// The geometry as a scene of start point and targets.
    pub fn scene(&self) -> GeodesicScene {
        let ball = |center: Vec<f64>, radius: f64| Target::Ball { center, radius };
        let mut scene = match self {
            ScenarioSpec::IntervalPure { length, start, .. }
            | ScenarioSpec::IntervalDrift { length, start, .. }
            | ScenarioSpec::IntervalRobin { length, start, .. } => GeodesicScene::euclidean(
                vec![vec![*start, 0.0]],
                vec![
                    Target::Polygon {
                        vertices: vec![[-1.0, -1.0], [0.0, -1.0], [0.0, 1.0], [-1.0, 1.0]],
                    },
                    Target::Polygon {
                        vertices: vec![[*length, -1.0], [length + 1.0, -1.0], [length + 1.0, 1.0], [*length, 1.0]],
                    },
                ],
            ),
            ScenarioSpec::Concentric { inner, outer, start, .. } => GeodesicScene::euclidean(
                vec![vec![*start, 0.0, 0.0]],
                vec![
                    ball(vec![0.0; 3], *inner),
                    Target::Exterior {
                        center: vec![0.0; 3],
                        radius: *outer,
                    },
                ],
            ),
            ScenarioSpec::NarrowCapture {
                start,
                epsilon,
                targets,
                ..
            } => GeodesicScene::euclidean(
                vec![start.to_vec()],
                targets
                    .iter()
                    .map(|t| ball(t.center.to_vec(), epsilon * t.radius))
                    .collect(),
            ),
            ScenarioSpec::GeodesicScene { scene } => return scene.clone(),
        };
        scene.diffusivity = self.diffusivity();
        scene
    }

    /// Shortest distance from the start to each target.
    pub fn distances(&self) -> Result<Vec<f64>> {
        match self {
            ScenarioSpec::IntervalPure { .. } | ScenarioSpec::IntervalDrift { .. } => {
                let i = self.interval().unwrap();
                i.validate()?;
                Ok(i.distances().to_vec())
            }
            ScenarioSpec::IntervalRobin { .. } => {
                let r = self.robin().unwrap();
                r.validate()?;
                Ok(r.distances().to_vec())
            }
            ScenarioSpec::Concentric { .. } => {
                let c = self.concentric().unwrap();
                c.validate()?;
                Ok(c.distances().to_vec())
            }
            _ => geo::geodesic_lengths(&self.scene()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ScenarioSpec::NarrowCapture {
            diffusivity,
            epsilon,
            targets,
            ..
        } = self
        {
            if !(*diffusivity > 0.0) || !(*epsilon > 0.0) {
                return Err(invalid("D", "diffusivity and epsilon must be positive"));
            }
            if targets.len() < 2 {
                return Err(invalid("targets", "narrow capture needs at least two targets"));
            }
        }
        self.distances().map(|_| ())
    }

    /// Default grid for this scenario: `C_0 / (ln n_max + 40)` up to a time
    /// by which essentially all mass has been absorbed.
    pub fn default_grid(&self, ctl: &GridControl) -> Result<TimeGrid> {
        if let Some(i) = self.interval() {
            return dist1d::default_grid(&i, ctl.n_max, ctl.points, &ctl.series);
        }
        let d = self.diffusivity();
        let near = self.distances()?.into_iter().fold(f64::INFINITY, f64::min);
        let relax = if let Some(r) = self.robin() {
            r.relaxation_time()
        } else if let Some(c) = self.concentric() {
            c.relaxation_time()
        } else {
            return Err(Error::Unsupported(format!("no tabulation for {}", self.kind())));
        };
        pdesolve::default_grid(near, d, relax, ctl.n_max, ctl.points)
    }

    /// Tabulates `F_k` on `grid` by series (intervals with absorbing ends) or
    /// by the finite-difference solver (Robin ends, concentric spheres).
    pub fn tabulate(&self, grid: &TimeGrid, ctl: &GridControl) -> Result<TabulatedDistribution> {
        if let Some(i) = self.interval() {
            return dist1d::interval_distribution(&i, grid, &ctl.series);
        }
        if let Some(r) = self.robin() {
            return pdesolve::solve_robin_interval(&r, grid, &ctl.pde);
        }
        if let Some(c) = self.concentric() {
            return pdesolve::solve_concentric(&c, grid, &ctl.pde);
        }
        Err(Error::Unsupported(format!(
            "{} has no hitting-time tabulation; only its asymptotic law and distances are available",
            self.kind()
        )))
    }
}
