//! Discrete-event interpreter and seeded Monte Carlo runner.
//!
//! Randomness is counter-based: every uniform draw is a pure function of
//! `(master_seed, iteration_index, event id, occurrence index)`, so results
//! are identical across platforms and worker counts, and a baseline run and
//! a transformed run under the same seed reuse the same draws for shared
//! events (common random numbers). A sequential stream would desynchronize
//! the pair after the first structural edit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
    validate_model, Diagnostic, DurationDistribution, ProcessModel, Step, TaskCategory,
};

/// Per-category accumulated work, in days, indexed by [`TaskCategory::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CategoryWork(pub [f64; 5]);

impl CategoryWork {
    pub fn get(&self, category: TaskCategory) -> f64 {
        self.0[category.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    fn add(&mut self, category_index: usize, days: f64) {
        self.0[category_index] += days;
    }
}

/// Outcome of one simulated execution of the process.
///
/// `total` is the makespan: parallel branches contribute the longest branch.
/// `category_work` sums the sampled durations of every executed task
/// instance (repeats included), so with parallel blocks the category values
/// can sum above `total`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    pub total: f64,
    pub category_work: CategoryWork,
    /// Fired backward jumps, per decision id.
    pub loop_firings: BTreeMap<String, u64>,
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub iterations: u64,
    pub master_seed: u64,
    /// Safety valve against pathological models; decision probabilities
    /// below 1 already guarantee almost-sure termination.
    pub execution_cap: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            iterations: 10_000,
            master_seed: 0,
            execution_cap: DEFAULT_EXECUTION_CAP,
        }
    }
}

pub const DEFAULT_EXECUTION_CAP: u64 = 1_000_000;

/// All per-iteration outcomes of one Monte Carlo run, in iteration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub model_name: String,
    pub config: SimulationConfig,
    pub outcomes: Vec<IterationOutcome>,
}

impl ResultSet {
    pub fn totals(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.total).collect()
    }

    pub fn category_samples(&self, category: TaskCategory) -> Vec<f64> {
        self.outcomes
            .iter()
            .map(|o| o.category_work.get(category))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("model failed validation with {} diagnostic(s); run validate first", .0.len())]
    InvalidModel(Vec<Diagnostic>),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("execution cap {cap} exceeded in iteration {iteration}")]
    ExecutionCapExceeded { iteration: u64, cap: u64 },
}

// ---------------------------------------------------------------------------
// Counter-based uniforms

/// 64-bit finalizer with full avalanche (splitmix64).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// FNV-1a over the id bytes; stable across platforms and runs, unlike the
/// standard library's default hasher.
#[inline]
pub fn stable_event_hash(event_id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in event_id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[inline]
fn uniform_from_parts(master_seed: u64, iteration: u64, id_hash: u64, occurrence: u64) -> f64 {
    let mut x = mix64(master_seed ^ 0x6a09e667f3bcc909);
    x = mix64(x ^ iteration);
    x = mix64(x ^ id_hash);
    x = mix64(x ^ occurrence);
    // Top 53 bits -> [0, 1) at full f64 resolution.
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw on `[0, 1)` keyed by seed, iteration, event id, and the
/// occurrence index of that event within the iteration.
pub fn event_uniform(
    master_seed: u64,
    iteration_index: u64,
    event_id: &str,
    occurrence_index: u64,
) -> f64 {
    uniform_from_parts(
        master_seed,
        iteration_index,
        stable_event_hash(event_id),
        occurrence_index,
    )
}

/// Supplier of per-event uniforms; the production source is counter-based,
/// test doubles can script exact sequences.
pub trait UniformSource {
    fn draw(&mut self, event_id: &str, occurrence_index: u64) -> f64;
}

struct CounterSource {
    master_seed: u64,
    iteration: u64,
}

impl CounterSource {
    #[inline]
    fn draw_hashed(&mut self, id_hash: u64, occurrence: u64) -> f64 {
        uniform_from_parts(self.master_seed, self.iteration, id_hash, occurrence)
    }
}

// ---------------------------------------------------------------------------
// Sampling

/// Inverse CDF of a duration distribution; monotone nondecreasing in `u`,
/// result always within `[min, max]`. `Deterministic` ignores `u`.
pub fn inverse_cdf(dist: &DurationDistribution, u: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&u), "u out of [0,1): {u}");
    match *dist {
        DurationDistribution::Deterministic { value } => value,
        DurationDistribution::Triangular { min, mode, max } => {
            let range = max - min;
            if range == 0.0 {
                return min;
            }
            let mode_cdf = (mode - min) / range;
            if u <= mode_cdf {
                min + (u * range * (mode - min)).sqrt()
            } else {
                max - ((1.0 - u) * range * (max - mode)).sqrt()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled interpreter

struct CompiledTask {
    id_hash: u64,
    /// Per-model task slot for the occurrence counter.
    slot: usize,
    category: usize,
    duration: DurationDistribution,
    needs_draw: bool,
}

enum CompiledStep {
    Task(CompiledTask),
    Parallel(Vec<Vec<CompiledTask>>),
    Decision {
        id_hash: u64,
        /// Per-model decision slot for visit/firing counters.
        slot: usize,
        probability: f64,
        target_pc: usize,
    },
}

struct CompiledModel {
    steps: Vec<CompiledStep>,
    task_count: usize,
    decision_ids: Vec<String>,
}

fn compile(model: &ProcessModel) -> CompiledModel {
    let mut steps = Vec::with_capacity(model.steps.len());
    let mut task_count = 0usize;
    let mut decision_ids = Vec::new();

    let mut compile_task = |task: &crate::model::Task| {
        let slot = task_count;
        task_count += 1;
        CompiledTask {
            id_hash: stable_event_hash(&task.id),
            slot,
            category: task.category.index(),
            duration: task.duration,
            needs_draw: !matches!(task.duration, DurationDistribution::Deterministic { .. }),
        }
    };

    for step in &model.steps {
        match step {
            Step::Task(t) => steps.push(CompiledStep::Task(compile_task(t))),
            Step::Parallel(p) => {
                let branches = p
                    .branches
                    .iter()
                    .map(|branch| branch.iter().map(&mut compile_task).collect())
                    .collect();
                steps.push(CompiledStep::Parallel(branches));
            }
            Step::Decision(d) => {
                let slot = decision_ids.len();
                decision_ids.push(d.id.clone());
                let target_pc = model
                    .top_level_index(&d.target)
                    .expect("validated model has resolvable targets");
                steps.push(CompiledStep::Decision {
                    id_hash: stable_event_hash(&d.id),
                    slot,
                    probability: d.probability,
                    target_pc,
                });
            }
        }
    }

    CompiledModel {
        steps,
        task_count,
        decision_ids,
    }
}

struct IterationState {
    task_occurrences: Vec<u64>,
    decision_visits: Vec<u64>,
    firings: Vec<u64>,
    executed: u64,
    total: f64,
    work: CategoryWork,
}

enum Draws<'a> {
    Counter(CounterSource),
    External(&'a mut dyn UniformSource),
}

fn run_iteration(
    compiled: &CompiledModel,
    model: &ProcessModel,
    draws: &mut Draws<'_>,
    cap: u64,
) -> Result<IterationOutcome, ()> {
    let mut state = IterationState {
        task_occurrences: vec![0; compiled.task_count],
        decision_visits: vec![0; compiled.decision_ids.len()],
        firings: vec![0; compiled.decision_ids.len()],
        executed: 0,
        total: 0.0,
        work: CategoryWork::default(),
    };

    // External sources are keyed by id string; look the ids up lazily from
    // the model so the hot counter path never touches them.
    let task_id_at = |slot: usize| -> &str {
        model
            .tasks()
            .nth(slot)
            .map(|t| t.id.as_str())
            .expect("slot within task count")
    };

    let exec_task = |task: &CompiledTask,
                     state: &mut IterationState,
                     draws: &mut Draws<'_>|
     -> Result<f64, ()> {
        state.executed += 1;
        if state.executed > cap {
            return Err(());
        }
        let occurrence = state.task_occurrences[task.slot];
        state.task_occurrences[task.slot] += 1;
        let days = if task.needs_draw {
            let u = match draws {
                Draws::Counter(src) => src.draw_hashed(task.id_hash, occurrence),
                Draws::External(src) => src.draw(task_id_at(task.slot), occurrence),
            };
            inverse_cdf(&task.duration, u)
        } else {
            inverse_cdf(&task.duration, 0.0)
        };
        state.work.add(task.category, days);
        Ok(days)
    };

    let mut pc = 0usize;
    while pc < compiled.steps.len() {
        match &compiled.steps[pc] {
            CompiledStep::Task(task) => {
                let days = exec_task(task, &mut state, draws)?;
                state.total += days;
                pc += 1;
            }
            CompiledStep::Parallel(branches) => {
                let mut longest = 0.0f64;
                for branch in branches {
                    let mut branch_sum = 0.0;
                    for task in branch {
                        branch_sum += exec_task(task, &mut state, draws)?;
                    }
                    longest = longest.max(branch_sum);
                }
                state.total += longest;
                pc += 1;
            }
            CompiledStep::Decision {
                id_hash,
                slot,
                probability,
                target_pc,
            } => {
                state.executed += 1;
                if state.executed > cap {
                    return Err(());
                }
                let visit = state.decision_visits[*slot];
                state.decision_visits[*slot] += 1;
                let u = match draws {
                    Draws::Counter(src) => src.draw_hashed(*id_hash, visit),
                    Draws::External(src) => src.draw(&compiled.decision_ids[*slot], visit),
                };
                if u < *probability {
                    state.firings[*slot] += 1;
                    pc = *target_pc;
                } else {
                    pc += 1;
                }
            }
        }
    }

    let loop_firings = compiled
        .decision_ids
        .iter()
        .cloned()
        .zip(state.firings.iter().copied())
        .collect();
    Ok(IterationOutcome {
        total: state.total,
        category_work: state.work,
        loop_firings,
    })
}

fn require_valid(model: &ProcessModel) -> Result<(), SimError> {
    let diags = validate_model(model);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(SimError::InvalidModel(diags))
    }
}

/// Execute one iteration with counter-based draws and the default cap.
pub fn simulate_once(
    model: &ProcessModel,
    master_seed: u64,
    iteration_index: u64,
) -> Result<IterationOutcome, SimError> {
    require_valid(model)?;
    let compiled = compile(model);
    let mut draws = Draws::Counter(CounterSource {
        master_seed,
        iteration: iteration_index,
    });
    run_iteration(&compiled, model, &mut draws, DEFAULT_EXECUTION_CAP).map_err(|()| {
        SimError::ExecutionCapExceeded {
            iteration: iteration_index,
            cap: DEFAULT_EXECUTION_CAP,
        }
    })
}

/// Execute one iteration with a caller-supplied uniform source.
pub fn simulate_once_with_source(
    model: &ProcessModel,
    source: &mut dyn UniformSource,
) -> Result<IterationOutcome, SimError> {
    require_valid(model)?;
    let compiled = compile(model);
    let mut draws = Draws::External(source);
    run_iteration(&compiled, model, &mut draws, DEFAULT_EXECUTION_CAP).map_err(|()| {
        SimError::ExecutionCapExceeded {
            iteration: 0,
            cap: DEFAULT_EXECUTION_CAP,
        }
    })
}

/// Run the full seeded Monte Carlo batch. Iterations are independent and
/// evaluated in parallel; the result is identical for any worker count.
pub fn run_monte_carlo(
    model: &ProcessModel,
    config: &SimulationConfig,
) -> Result<ResultSet, SimError> {
    require_valid(model)?;
    if config.iterations == 0 {
        return Err(SimError::InvalidConfig(
            "iterations must be at least 1".into(),
        ));
    }
    if config.execution_cap < model.steps.len() as u64 {
        return Err(SimError::InvalidConfig(format!(
            "execution cap {} is below the model's step count {}",
            config.execution_cap,
            model.steps.len()
        )));
    }

    let compiled = compile(model);
    let results: Vec<Result<IterationOutcome, ()>> = (0..config.iterations)
        .into_par_iter()
        .map(|iteration| {
            let mut draws = Draws::Counter(CounterSource {
                master_seed: config.master_seed,
                iteration,
            });
            run_iteration(&compiled, model, &mut draws, config.execution_cap)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(results.len());
    for (iteration, result) in results.into_iter().enumerate() {
        match result {
            Ok(outcome) => outcomes.push(outcome),
            Err(()) => {
                return Err(SimError::ExecutionCapExceeded {
                    iteration: iteration as u64,
                    cap: config.execution_cap,
                })
            }
        }
    }

    Ok(ResultSet {
        model_name: model.name.clone(),
        config: *config,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Decision, ParallelBlock, Task};
    use std::collections::VecDeque;

    fn det(value: f64) -> DurationDistribution {
        DurationDistribution::Deterministic { value }
    }

    fn tri(min: f64, mode: f64, max: f64) -> DurationDistribution {
        DurationDistribution::Triangular { min, mode, max }
    }

    fn task(id: &str, category: TaskCategory, duration: DurationDistribution) -> Task {
        Task {
            id: id.to_owned(),
            label: id.to_owned(),
            stakeholder: "IDT".to_owned(),
            category,
            duration,
            provenance: None,
        }
    }

    fn model(steps: Vec<Step>) -> ProcessModel {
        ProcessModel {
            name: "test".to_owned(),
            stakeholders: vec!["IDT".to_owned()],
            steps,
        }
    }

    struct Scripted(VecDeque<f64>);

    impl UniformSource for Scripted {
        fn draw(&mut self, _event_id: &str, _occurrence_index: u64) -> f64 {
            self.0.pop_front().expect("script exhausted")
        }
    }

    #[test]
    fn inverse_cdf_closed_form_points() {
        assert_eq!(inverse_cdf(&tri(0.0, 1.0, 2.0), 0.5), 1.0);
        assert_eq!(inverse_cdf(&tri(5.0, 5.0, 5.0), 0.99), 5.0);
        assert_eq!(inverse_cdf(&tri(0.0, 1.0, 2.0), 0.125), 0.5);
        assert_eq!(inverse_cdf(&tri(0.0, 0.0, 1.0), 0.75), 0.5);
        assert_eq!(inverse_cdf(&det(7.0), 0.123), 7.0);
    }

    #[test]
    fn inverse_cdf_is_monotone_and_in_range() {
        let d = tri(3.0, 4.0, 10.0);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=1000 {
            let u = k as f64 / 1001.0;
            let x = inverse_cdf(&d, u);
            assert!((3.0..=10.0).contains(&x));
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn event_uniform_is_pure_and_separates_events() {
        let a = event_uniform(42, 7, "F2.4", 3);
        let b = event_uniform(42, 7, "F2.4", 3);
        assert_eq!(a, b);
        assert_ne!(event_uniform(1, 0, "A", 0), event_uniform(1, 0, "B", 0));
        assert_ne!(event_uniform(1, 0, "A", 0), event_uniform(1, 0, "A", 1));
        assert_ne!(event_uniform(1, 0, "A", 0), event_uniform(1, 1, "A", 0));
        assert_ne!(event_uniform(1, 0, "A", 0), event_uniform(2, 0, "A", 0));
    }

    #[test]
    fn sequential_tasks_sum() {
        let m = model(vec![
            Step::Task(task("a", TaskCategory::InformationExchange, det(3.0))),
            Step::Task(task("b", TaskCategory::ReviewMeetings, det(4.0))),
        ]);
        let out = simulate_once(&m, 0, 0).unwrap();
        assert_eq!(out.total, 7.0);
        assert_eq!(
            out.category_work.get(TaskCategory::InformationExchange),
            3.0
        );
        assert_eq!(out.category_work.get(TaskCategory::ReviewMeetings), 4.0);
    }

    #[test]
    fn parallel_takes_longest_branch_but_sums_work() {
        let m = model(vec![Step::Parallel(ParallelBlock {
            id: "p".to_owned(),
            branches: vec![
                vec![task("a", TaskCategory::SystemLevelModeling, det(3.0))],
                vec![task("b", TaskCategory::SystemLevelModeling, det(5.0))],
            ],
        })]);
        let out = simulate_once(&m, 0, 0).unwrap();
        assert_eq!(out.total, 5.0);
        assert_eq!(out.category_work.total(), 8.0);
    }

    #[test]
    fn scripted_loop_trace_executes_task_twice() {
        let m = model(vec![
            Step::Task(task("t", TaskCategory::DisciplinaryModeling, det(2.0))),
            Step::Decision(Decision {
                id: "d".to_owned(),
                label: "rework".to_owned(),
                probability: 0.05,
                target: "t".to_owned(),
                provenance: None,
            }),
        ]);
        // Deterministic task draws nothing; the decision draws 0.04 (fires)
        // then 0.50 (passes).
        let mut script = Scripted(VecDeque::from(vec![0.04, 0.50]));
        let out = simulate_once_with_source(&m, &mut script).unwrap();
        assert_eq!(out.total, 4.0);
        assert_eq!(out.loop_firings["d"], 1);
        assert!(script.0.is_empty());
    }

    #[test]
    fn all_deterministic_model_yields_identical_outcomes() {
        let m = model(vec![
            Step::Task(task("a", TaskCategory::InformationExchange, det(1.5))),
            Step::Task(task("b", TaskCategory::ReviewMeetings, det(2.5))),
        ]);
        let rs = run_monte_carlo(
            &m,
            &SimulationConfig {
                iterations: 100,
                master_seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(rs.outcomes.len(), 100);
        assert!(rs.outcomes.iter().all(|o| *o == rs.outcomes[0]));
    }

    #[test]
    fn geometric_loop_mean_matches_expectation() {
        let m = model(vec![
            Step::Task(task("t", TaskCategory::InformationExchange, det(2.0))),
            Step::Decision(Decision {
                id: "d".to_owned(),
                label: "retry".to_owned(),
                probability: 0.5,
                target: "t".to_owned(),
                provenance: None,
            }),
        ]);
        let rs = run_monte_carlo(
            &m,
            &SimulationConfig {
                iterations: 10_000,
                master_seed: 123,
                ..Default::default()
            },
        )
        .unwrap();
        let mean_total: f64 = rs.totals().iter().sum::<f64>() / rs.outcomes.len() as f64;
        assert!((mean_total - 4.0).abs() < 0.1, "mean total {mean_total}");
    }

    #[test]
    fn triangular_sampling_matches_closed_form_moments() {
        let m = model(vec![Step::Task(task(
            "t",
            TaskCategory::InformationExchange,
            tri(0.0, 1.0, 2.0),
        ))]);
        let rs = run_monte_carlo(
            &m,
            &SimulationConfig {
                iterations: 100_000,
                master_seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        let totals = rs.totals();
        let n = totals.len() as f64;
        let mean = totals.iter().sum::<f64>() / n;
        let var = totals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var - 1.0 / 6.0).abs() < 0.005, "var {var}");
    }

    #[test]
    fn same_seed_reruns_are_identical() {
        let m = model(vec![
            Step::Task(task(
                "a",
                TaskCategory::InformationExchange,
                tri(1.0, 2.0, 5.0),
            )),
            Step::Task(task("b", TaskCategory::ReviewMeetings, tri(0.0, 3.0, 9.0))),
            Step::Decision(Decision {
                id: "d".to_owned(),
                label: "loop".to_owned(),
                probability: 0.2,
                target: "a".to_owned(),
                provenance: None,
            }),
        ]);
        let config = SimulationConfig {
            iterations: 500,
            master_seed: 42,
            ..Default::default()
        };
        let first = run_monte_carlo(&m, &config).unwrap();
        let second = run_monte_carlo(&m, &config).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn execution_cap_is_reported_with_iteration() {
        let m = model(vec![
            Step::Task(task("t", TaskCategory::InformationExchange, det(1.0))),
            Step::Decision(Decision {
                id: "d".to_owned(),
                label: "almost always".to_owned(),
                probability: 0.999999,
                target: "t".to_owned(),
                provenance: None,
            }),
        ]);
        let err = run_monte_carlo(
            &m,
            &SimulationConfig {
                iterations: 3,
                master_seed: 0,
                execution_cap: 10,
            },
        )
        .unwrap_err();
        match err {
            SimError::ExecutionCapExceeded { iteration, cap } => {
                assert_eq!(iteration, 0);
                assert_eq!(cap, 10);
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn invalid_model_is_rejected_up_front() {
        let m = model(vec![Step::Task(task(
            "t",
            TaskCategory::InformationExchange,
            tri(5.0, 3.0, 10.0),
        ))]);
        assert!(matches!(
            simulate_once(&m, 0, 0),
            Err(SimError::InvalidModel(_))
        ));
    }

    #[test]
    fn work_equals_total_without_parallel_blocks() {
        let m = model(vec![
            Step::Task(task(
                "a",
                TaskCategory::InformationExchange,
                tri(1.0, 2.0, 4.0),
            )),
            Step::Task(task(
                "b",
                TaskCategory::DisciplinaryModeling,
                tri(2.0, 5.0, 11.0),
            )),
            Step::Decision(Decision {
                id: "d".to_owned(),
                label: "loop".to_owned(),
                probability: 0.3,
                target: "b".to_owned(),
                provenance: None,
            }),
        ]);
        for iteration in 0..200 {
            let out = simulate_once(&m, 5, iteration).unwrap();
            assert!((out.total - out.category_work.total()).abs() < 1e-9);
        }
    }
}
