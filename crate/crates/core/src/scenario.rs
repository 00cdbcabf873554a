//! Initial-condition generators.
//!
//! Random draws come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`; every uniform real uses the top 53 bits of one
//! `next_u64` call. Agents are drawn in index order as `x, y, heading`.

use std::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{default_radius, default_speed, AgentState, SwarmState};

/// Identity of the scenario sampler, recorded in run summaries.
pub const RNG_IDENTITY: &str = "ChaCha8Rng(rand_chacha 0.9, seed_from_u64); uniform = (next_u64 >> 11) * 2^-53";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Uniform positions in a box, headings uniform in `heading_interval`.
    RandomSection3,
    /// Six agents on a circle of radius `r`, heading `kπ/3` at vertex `k`.
    Hexagon,
    /// States supplied verbatim in `explicit_states`.
    Explicit,
}

fn default_box() -> [[f64; 2]; 2] {
    [[0.0, 5.0], [0.0, 5.0]]
}

fn default_heading_interval() -> [f64; 2] {
    [0.0, PI]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    /// `[[x_min, x_max], [y_min, y_max]]`.
    #[serde(default = "default_box")]
    pub position_box: [[f64; 2]; 2],
    /// Half-open `[lo, hi)`.
    #[serde(default = "default_heading_interval")]
    pub heading_interval: [f64; 2],
    #[serde(default = "default_radius")]
    pub r: f64,
    #[serde(default = "default_speed")]
    pub v: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_states: Option<Vec<AgentState>>,
}

impl ScenarioSpec {
    pub fn random(n: usize, seed: u64) -> Self {
        Self {
            kind: ScenarioKind::RandomSection3,
            n,
            position_box: default_box(),
            heading_interval: default_heading_interval(),
            r: default_radius(),
            v: default_speed(),
            seed,
            explicit_states: None,
        }
    }

    pub fn hexagon(r: f64) -> Self {
        Self { kind: ScenarioKind::Hexagon, n: 6, r, v: 0.0, ..Self::random(6, 0) }
    }

    pub fn explicit(states: Vec<AgentState>) -> Self {
        Self { kind: ScenarioKind::Explicit, n: states.len(), explicit_states: Some(states), ..Self::random(0, 0) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScenarioKind::RandomSection3 => {
                if self.n == 0 {
                    return Err(Error::Config("scenario needs n >= 1".into()));
                }
                for [lo, hi] in self.position_box {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(Error::Config(format!("bad position interval [{lo}, {hi}]")));
                    }
                }
                let [lo, hi] = self.heading_interval;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Config(format!("bad heading interval [{lo}, {hi})")));
                }
            }
            ScenarioKind::Hexagon => {
                if self.n != 6 || self.v != 0.0 {
                    return Err(Error::Config("hexagon scenario fixes n = 6 and v = 0".into()));
                }
                if !(self.r.is_finite() && self.r >= 0.0) {
                    return Err(Error::Config(format!("bad hexagon radius {}", self.r)));
                }
            }
            ScenarioKind::Explicit => {
                let got = self.explicit_states.as_ref().map_or(0, Vec::len);
                if got != self.n || got == 0 {
                    return Err(Error::Config(format!("explicit scenario lists {got} states, n = {}", self.n)));
                }
            }
        }
        Ok(())
    }
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn closed(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Draw in `[lo, hi)`, redrawing the rare sample that rounds up to `hi`.
    fn half_open(&mut self, lo: f64, hi: f64) -> f64 {
        loop {
            let x = lo + (hi - lo) * self.unit();
            if x < hi {
                return x;
            }
        }
    }
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<SwarmState> {
    spec.validate()?;
    let agents = match spec.kind {
        ScenarioKind::RandomSection3 => {
            let mut rng = Uniform(ChaCha8Rng::seed_from_u64(spec.seed));
            let [[x0, x1], [y0, y1]] = spec.position_box;
            let [h0, h1] = spec.heading_interval;
            (0..spec.n)
                .map(|_| {
                    let x = rng.closed(x0, x1);
                    let y = rng.closed(y0, y1);
                    AgentState::new(x, y, rng.half_open(h0, h1))
                })
                .collect()
        }
        ScenarioKind::Hexagon => hexagon(spec.r),
        ScenarioKind::Explicit => spec.explicit_states.clone().unwrap_or_default(),
    };
    Ok(SwarmState::new(agents))
}

/// Regular hexagon of circumradius `r`, so adjacent vertices sit exactly `r`
/// apart. Vertex coordinates come from the exact table `(±1, 0)`,
/// `(±1/2, ±√3/2)` rather than `cos`/`sin`, which keeps every adjacent pair
/// inside the inclusive radius test.
fn hexagon(r: f64) -> Vec<AgentState> {
    let h = 3f64.sqrt() / 2.0;
    let unit = [(1.0, 0.0), (0.5, h), (-0.5, h), (-1.0, 0.0), (-0.5, -h), (0.5, -h)];
    unit.iter()
        .enumerate()
        .map(|(k, &(x, y))| AgentState::new(r * x, r * y, k as f64 * PI / 3.0))
        .collect()
}
