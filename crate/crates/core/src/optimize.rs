//! Search over measurement directions for the largest quantum value.
//!
//! Every (party, setting) gets a Bloch direction `(θ, φ)`; the state stays
//! fixed. Each start runs Nelder–Mead on the angles. Start 0 is the σ_X/σ_Y
//! configuration (when enabled), starts `1..=restarts` are uniform random
//! directions drawn from a ChaCha stream selected by the start index, so the
//! result depends only on `(seed, restarts)` and not on scheduling.
//!
//! The best value found is a lower bound on the quantum supremum of the
//! expression for this state, nothing more.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::builtins::ValueMode;
use crate::error::{Error, Result};
use crate::quantum::model_file::{MeasurementSpec, ModelFile, StateSpec};
use crate::quantum::{expression_value, BlochVector, CMatrix, MeasurementModel, QuantumState};
use crate::rational::to_f64;
use crate::scenario::{Expression, Scenario};

/// `angles[party][setting] = (θ, φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleParameterization {
    angles: Vec<Vec<(f64, f64)>>,
}

impl AngleParameterization {
    pub fn new(angles: Vec<Vec<(f64, f64)>>) -> Self {
        Self { angles }
    }

    /// Setting `s` at `θ = π/2, φ = s·π/2`: σ_X for setting 0, σ_Y for setting 1.
    pub fn fixed_xy(scenario: &Scenario) -> Self {
        Self {
            angles: (0..scenario.parties())
                .map(|p| {
                    (0..scenario.settings(p))
                        .map(|s| (FRAC_PI_2, (s as f64 * FRAC_PI_2) % TAU))
                        .collect()
                })
                .collect(),
        }
    }

    fn random(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Self {
        Self {
            angles: (0..scenario.parties())
                .map(|p| {
                    (0..scenario.settings(p))
                        .map(|_| {
                            let cos_theta: f64 = rng.random_range(-1.0..=1.0);
                            (cos_theta.acos(), rng.random_range(0.0..TAU))
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn angles(&self) -> &[Vec<(f64, f64)>] {
        &self.angles
    }

    fn flatten(&self) -> Vec<f64> {
        self.angles
            .iter()
            .flatten()
            .flat_map(|&(t, p)| [t, p])
            .collect()
    }

    fn unflatten(&self, x: &[f64]) -> Self {
        let mut it = x.chunks_exact(2);
        Self {
            angles: self
                .angles
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|_| {
                            let c = it.next().expect("length matches");
                            (c[0], c[1])
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Folds angles into `θ ∈ [0, π]`, `φ ∈ [0, 2π)` without changing directions.
    pub fn canonical(&self) -> Self {
        Self {
            angles: self
                .angles
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&(theta, phi)| {
                            let mut t = theta.rem_euclid(TAU);
                            let mut p = phi;
                            if t > PI {
                                t = TAU - t;
                                p += PI;
                            }
                            let p = p.rem_euclid(TAU);
                            (t, if p >= TAU { 0.0 } else { p })
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> MeasurementModel {
        MeasurementModel::new(
            self.angles
                .iter()
                .map(|row| row.iter().map(|&(t, p)| BlochVector::from_angles(t, p)).collect())
                .collect(),
        )
        .expect("angles always give unit vectors")
    }

    /// Model-file form, so the angles can be fed back to the quantum engine.
    pub fn to_model_file(&self, state: StateSpec) -> ModelFile {
        ModelFile {
            state,
            measurements: self
                .angles
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&(t, p)| MeasurementSpec::Angles { angles: [t, p] })
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Random starts in addition to the fixed start.
    pub restarts: usize,
    pub seed: u64,
    /// Convergence tolerance on the objective value.
    pub tolerance: f64,
    /// Evaluation budget per start.
    pub max_evals: usize,
    /// Whether start 0 is the σ_X/σ_Y configuration.
    pub include_fixed_start: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            seed: 0,
            tolerance: 1e-9,
            max_evals: 20_000,
            include_fixed_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct StartOutcome {
    pub index: usize,
    pub kind: &'static str,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// Objective at `best_angles` (magnitude in magnitude mode).
    pub best_value: f64,
    pub best_angles: AngleParameterization,
    /// Index of the winning start (0 = fixed start when enabled).
    pub best_start: usize,
    pub restarts: usize,
    pub evaluations: usize,
    pub seed: u64,
    pub starts: Vec<StartOutcome>,
}

fn objective(
    expr: &Expression,
    mode: ValueMode,
    state: &QuantumState,
    angles: &AngleParameterization,
) -> Result<f64> {
    let v = expression_value(expr, state, &angles.to_model())?.value;
    Ok(apply_mode(mode, v))
}

fn apply_mode(mode: ValueMode, v: f64) -> f64 {
    match mode {
        ValueMode::Signed => v,
        ValueMode::Magnitude => v.abs(),
    }
}

/// Probability-form terms with float coefficients, evaluated against
/// projectors built once per angle vector.
struct CompiledObjective<'a> {
    terms: Vec<(f64, Vec<usize>, Vec<usize>)>,
    mode: ValueMode,
    state: &'a QuantumState,
}

impl<'a> CompiledObjective<'a> {
    fn new(expr: &Expression, mode: ValueMode, state: &'a QuantumState) -> Self {
        let terms = expr
            .to_probability()
            .terms()
            .map(|(k, c)| (to_f64(c), k.settings.clone(), k.outcomes.clone()))
            .collect();
        Self { terms, mode, state }
    }

    fn eval(&self, angles: &AngleParameterization) -> f64 {
        let projectors: Vec<Vec<[CMatrix; 2]>> = angles
            .angles
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(t, p)| {
                        let v = BlochVector::from_angles(t, p);
                        [v.projector(0), v.projector(1)]
                    })
                    .collect()
            })
            .collect();
        let mut factors: Vec<&CMatrix> = Vec::with_capacity(projectors.len());
        let mut total = 0.0;
        for (c, settings, outcomes) in &self.terms {
            factors.clear();
            factors.extend(
                settings
                    .iter()
                    .zip(outcomes)
                    .enumerate()
                    .map(|(p, (&s, &o))| &projectors[p][s][o]),
            );
            total += c * self.state.product_expectation(&factors);
        }
        apply_mode(self.mode, total)
    }
}

pub fn optimize_measurements(
    expr: &Expression,
    mode: ValueMode,
    state: &QuantumState,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    if config.restarts == 0 && !config.include_fixed_start {
        return Err(Error::InvalidConfig("no starts: restarts = 0 and the fixed start is disabled".into()));
    }
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(Error::InvalidConfig(format!("tolerance {} must be positive", config.tolerance)));
    }
    if config.max_evals == 0 {
        return Err(Error::InvalidConfig("max_evals must be positive".into()));
    }
    let scenario = expr.scenario();
    if !scenario.is_binary() {
        return Err(Error::UnsupportedScenario("measurement search needs binary outcomes".into()));
    }
    if state.parties() != scenario.parties() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits, expression has {} parties",
            state.parties(),
            scenario.parties()
        )));
    }
    let template = AngleParameterization::fixed_xy(scenario);
    // Surface evaluation errors before spawning work.
    objective(expr, mode, state, &template)?;

    let compiled = CompiledObjective::new(expr, mode, state);
    let first = usize::from(!config.include_fixed_start);
    let indices: Vec<usize> = (first..=config.restarts).collect();
    let runs: Vec<(usize, f64, AngleParameterization, usize)> = indices
        .par_iter()
        .map(|&index| {
            let start = if index == 0 {
                template.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(index as u64);
                AngleParameterization::random(scenario, &mut rng)
            };
            let f = |x: &[f64]| -> f64 { -compiled.eval(&template.unflatten(x)) };
            let (x, fx, evals) = nelder_mead(f, &start.flatten(), 0.4, config.tolerance, config.max_evals);
            (index, -fx, template.unflatten(&x), evals)
        })
        .collect();

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = i;
        }
    }
    let best_angles = runs[best].2.canonical();
    let best_value = objective(expr, mode, state, &best_angles)?;
    Ok(OptimizationResult {
        best_value,
        best_start: runs[best].0,
        best_angles,
        restarts: config.restarts,
        evaluations: runs.iter().map(|r| r.3).sum(),
        seed: config.seed,
        starts: runs
            .iter()
            .map(|r| StartOutcome {
                index: r.0,
                kind: if r.0 == 0 { "fixed" } else { "random" },
                value: r.1,
                evaluations: r.3,
            })
            .collect(),
    })
}

/// Minimizes `f` from `x0`, re-seeding the simplex around the incumbent
/// until a full run no longer improves it by more than `tol`.
///
/// Returns `(argmin, min, evaluations)`. The returned value is never worse
/// than `f(x0)`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: f64, tol: f64, max_evals: usize) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let mut evals = 1;
    let mut best_x = x0.to_vec();
    let mut best_f = f(x0);
    let mut step = step;
    while evals < max_evals {
        let (x, fx, used) = nelder_mead_once(&f, &best_x, best_f, step, tol, max_evals - evals);
        evals += used;
        let improved = best_f - fx > tol;
        if fx < best_f {
            best_x = x;
            best_f = fx;
        }
        if !improved {
            if step < 1e-3 {
                break;
            }
            step *= 0.1;
        }
    }
    (best_x, best_f, evals)
}

fn nelder_mead_once<F>(f: &F, x0: &[f64], f0: f64, step: f64, tol: f64, budget: usize) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut evals = 0;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        if evals >= budget {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        evals += 1;
        simplex.push((x, fx));
    }
    if simplex.len() < n + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, fx) = simplex.swap_remove(0);
        return (x, fx, evals);
    }

    let point = |centroid: &[f64], worst: &[f64], coef: f64| -> Vec<f64> {
        centroid
            .iter()
            .zip(worst)
            .map(|(c, w)| c + coef * (c - w))
            .collect()
    };

    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= tol {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let xr = point(&centroid, &worst, REFLECT);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst, EXPAND);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = point(&centroid, &worst, CONTRACT * REFLECT);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst, -CONTRACT);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    if evals >= budget {
                        break;
                    }
                    for (xi, bi) in x.iter_mut().zip(&best) {
                        *xi = bi + SHRINK * (*xi - bi);
                    }
                    *fx = f(x);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, evals)
}
