//! Bounded global-best particle swarm minimizer.
//!
//! Each particle carries its own ChaCha8 stream: the master seed is expanded
//! with `ChaCha8Rng::seed_from_u64(seed)` and particle `i` reads stream `i`
//! (`set_stream(i)`). Draw order inside a stream is fixed (initial position
//! then initial velocity per dimension; afterwards `r1`, `r2` per dimension per
//! step), so the result does not depend on how evaluations are scheduled
//! across threads.
//!
//! Per step, for every particle and dimension:
//!
//! ```text
//! v <- w*v + c1*r1*(p - x) + c2*r2*(g - x)      clamped to +-cap*(upper-lower)
//! x <- x + v                                     clamped to bounds, v <- 0 on clamp
//! ```
//!
//! Personal and global bests move only on strict improvement.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwarmError {
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid swarm configuration: {0}")]
    InvalidConfig(String),
    #[error("objective returned no finite value for any particle at iteration {iteration}")]
    DegenerateObjective { iteration: usize },
}

/// Axis-aligned box the swarm is confined to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SwarmError> {
        if lower.is_empty() {
            return Err(SwarmError::InvalidBounds(
                "dimension must be at least 1".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(SwarmError::InvalidBounds(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(SwarmError::InvalidBounds(format!(
                    "dimension {d} is not finite"
                )));
            }
            if lo >= hi {
                return Err(SwarmError::InvalidBounds(format!(
                    "dimension {d}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Same interval in every dimension.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, SwarmError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    fn span(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }
}

/// Swarm tunables. Defaults: 50 particles, 500 iterations, w = 0.7,
/// c1 = c2 = 1.5, velocity cap 0.2 of each dimension's span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub particle_count: usize,
    pub iteration_count: usize,
    pub inertia_weight: f64,
    pub cognitive_coeff: f64,
    pub social_coeff: f64,
    pub seed: u64,
    pub velocity_cap_fraction: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particle_count: 50,
            iteration_count: 500,
            inertia_weight: 0.7,
            cognitive_coeff: 1.5,
            social_coeff: 1.5,
            seed: 0,
            velocity_cap_fraction: 0.2,
        }
    }
}

impl SwarmConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SwarmError> {
        let bad = |msg: String| Err(SwarmError::InvalidConfig(msg));
        if self.particle_count < 2 {
            return bad(format!(
                "particle_count must be >= 2, got {}",
                self.particle_count
            ));
        }
        if self.iteration_count < 1 {
            return bad("iteration_count must be >= 1".into());
        }
        for (name, v) in [
            ("inertia_weight", self.inertia_weight),
            ("cognitive_coeff", self.cognitive_coeff),
            ("social_coeff", self.social_coeff),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        let cap = self.velocity_cap_fraction;
        if !(cap > 0.0 && cap <= 1.0) {
            return bad(format!(
                "velocity_cap_fraction must lie in (0, 1], got {cap}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_value: f64,
    /// Objective at `position`, +inf when the objective was not finite there.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_position: Vec<f64>,
    pub best_value: f64,
    /// Global best after each step; one entry per iteration.
    pub best_value_trace: Vec<f64>,
    pub evaluations: usize,
}

impl OptimizationResult {
    /// Writes the trace as `iteration,best_value` CSV, iterations counted from 1.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,best_value")?;
        for (i, v) in self.best_value_trace.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, v)?;
        }
        Ok(())
    }
}

/// Derives the random stream of particle `index` from the master seed.
pub fn particle_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    bounds: SearchBounds,
    config: SwarmConfig,
    particles: Vec<Particle>,
    rngs: Vec<ChaCha8Rng>,
    best_position: Vec<f64>,
    best_value: f64,
    trace: Vec<f64>,
    evaluations: usize,
}

impl SwarmState {
    /// Draws positions uniformly in the box and velocities uniformly in
    /// `+-cap*span`, then evaluates every particle once.
    pub fn initialize<F>(
        bounds: &SearchBounds,
        config: &SwarmConfig,
        objective: &F,
    ) -> Result<Self, SwarmError>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        config.validate()?;
        let dim = bounds.dim();
        let mut rngs: Vec<ChaCha8Rng> = (0..config.particle_count)
            .map(|i| particle_rng(config.seed, i))
            .collect();

        let particles: Vec<Particle> = rngs
            .par_iter_mut()
            .map(|rng| {
                let position: Vec<f64> = (0..dim)
                    .map(|d| rng.gen_range(bounds.lower[d]..=bounds.upper[d]))
                    .collect();
                let velocity: Vec<f64> = (0..dim)
                    .map(|d| {
                        let vmax = config.velocity_cap_fraction * bounds.span(d);
                        rng.gen_range(-vmax..=vmax)
                    })
                    .collect();
                let value = sanitize(objective(&position));
                Particle {
                    best_position: position.clone(),
                    best_value: value,
                    position,
                    velocity,
                    value,
                }
            })
            .collect();

        let mut state = Self {
            bounds: bounds.clone(),
            config: config.clone(),
            best_position: particles[0].position.clone(),
            best_value: f64::INFINITY,
            particles,
            rngs,
            trace: Vec::with_capacity(config.iteration_count),
            evaluations: config.particle_count,
        };
        if state.particles.iter().all(|p| p.value == f64::INFINITY) {
            return Err(SwarmError::DegenerateObjective { iteration: 0 });
        }
        state.reduce_global_best();
        Ok(state)
    }

    /// One synchronous update of every particle followed by a single
    /// best-update reduction in particle-index order.
    #[allow(clippy::needless_range_loop)]
    pub fn step<F>(&mut self, objective: &F) -> Result<(), SwarmError>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let cfg = &self.config;
        let bounds = &self.bounds;
        let global = &self.best_position;

        self.particles
            .par_iter_mut()
            .zip(self.rngs.par_iter_mut())
            .for_each(|(p, rng)| {
                for d in 0..bounds.dim() {
                    let r1: f64 = rng.gen();
                    let r2: f64 = rng.gen();
                    let x = p.position[d];
                    let vmax = cfg.velocity_cap_fraction * bounds.span(d);
                    let v = cfg.inertia_weight * p.velocity[d]
                        + cfg.cognitive_coeff * r1 * (p.best_position[d] - x)
                        + cfg.social_coeff * r2 * (global[d] - x);
                    let v = v.clamp(-vmax, vmax);
                    let moved = x + v;
                    if moved < bounds.lower[d] {
                        p.position[d] = bounds.lower[d];
                        p.velocity[d] = 0.0;
                    } else if moved > bounds.upper[d] {
                        p.position[d] = bounds.upper[d];
                        p.velocity[d] = 0.0;
                    } else {
                        p.position[d] = moved;
                        p.velocity[d] = v;
                    }
                }
                p.value = sanitize(objective(&p.position));
                if p.value < p.best_value {
                    p.best_value = p.value;
                    p.best_position.clone_from(&p.position);
                }
            });

        self.evaluations += self.particles.len();
        if self.particles.iter().all(|p| p.value == f64::INFINITY) {
            return Err(SwarmError::DegenerateObjective {
                iteration: self.trace.len() + 1,
            });
        }
        self.reduce_global_best();
        self.trace.push(self.best_value);
        Ok(())
    }

    fn reduce_global_best(&mut self) {
        for p in &self.particles {
            if p.best_value < self.best_value {
                self.best_value = p.best_value;
                self.best_position.clone_from(&p.best_position);
            }
        }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn best_position(&self) -> &[f64] {
        &self.best_position
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn bounds(&self) -> &SearchBounds {
        &self.bounds
    }

    pub fn into_result(self) -> OptimizationResult {
        OptimizationResult {
            best_position: self.best_position,
            best_value: self.best_value,
            best_value_trace: self.trace,
            evaluations: self.evaluations,
        }
    }
}

/// Minimizes `objective` over `bounds` with a fixed iteration budget.
///
/// Evaluations inside one iteration run on the current rayon pool; the
/// outcome is identical for any pool size.
pub fn optimize<F>(
    objective: &F,
    bounds: &SearchBounds,
    config: &SwarmConfig,
) -> Result<OptimizationResult, SwarmError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut state = SwarmState::initialize(bounds, config, objective)?;
    for _ in 0..config.iteration_count {
        state.step(objective)?;
    }
    Ok(state.into_result())
}
