//! Shared helpers for integration tests: bundled-fixture loading and
//! seeded random generation of models and reduce-only scenarios.

#![allow(dead_code)]

use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;

use rand::Rng;

use schedrisk::model::{
    Decision, DurationDistribution, ParallelBlock, ProcessModel, Step, Task, TaskCategory,
};
use schedrisk::scenario::{DurationSelector, Scenario, ScenarioOp, TransformOp};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn load_fixture_model() -> ProcessModel {
    let text = fs::read_to_string(fixture_path("asis_model.json")).expect("fixture readable");
    schedrisk::parse_model(&text).expect("fixture parses")
}

pub fn load_fixture_scenario() -> Scenario {
    let text = fs::read_to_string(fixture_path("de_scenario.json")).expect("fixture readable");
    schedrisk::parse_scenario(&text).expect("fixture parses")
}

pub fn random_category(rng: &mut impl Rng) -> TaskCategory {
    TaskCategory::ALL[rng.random_range(0..TaskCategory::ALL.len())]
}

pub fn random_duration(rng: &mut impl Rng) -> DurationDistribution {
    if rng.random_bool(0.85) {
        let min = rng.random_range(0.0..20.0);
        let mode = min + rng.random_range(0.0..15.0);
        let max = mode + rng.random_range(0.0..25.0);
        DurationDistribution::Triangular { min, mode, max }
    } else {
        DurationDistribution::Deterministic {
            value: rng.random_range(0.0..30.0),
        }
    }
}

fn random_task(rng: &mut impl Rng, id: String) -> Task {
    Task {
        label: format!("work {id}"),
        stakeholder: "A".to_owned(),
        category: random_category(rng),
        duration: random_duration(rng),
        provenance: None,
        id,
    }
}

/// A random valid model: tasks, occasional parallel blocks, and decisions
/// that always jump backward with probability below 0.5.
pub fn random_model(rng: &mut impl Rng, max_steps: usize) -> ProcessModel {
    let mut steps: Vec<Step> = Vec::new();
    let mut serial = 0usize;
    let n = rng.random_range(1..=max_steps.max(1));
    for _ in 0..n {
        serial += 1;
        let id = format!("s{serial}");
        let roll = rng.random_range(0..10);
        if roll < 6 || steps.is_empty() {
            steps.push(Step::Task(random_task(rng, id)));
        } else if roll < 8 {
            let branch_count = rng.random_range(1..=3);
            let branches = (0..branch_count)
                .map(|_| {
                    (0..rng.random_range(0..=3))
                        .map(|_| {
                            serial += 1;
                            random_task(rng, format!("s{serial}"))
                        })
                        .collect()
                })
                .collect();
            steps.push(Step::Parallel(ParallelBlock { id, branches }));
        } else {
            let target = steps[rng.random_range(0..steps.len())].id().to_owned();
            steps.push(Step::Decision(Decision {
                id,
                label: "loop back".to_owned(),
                probability: rng.random_range(0.0..0.5),
                target,
                provenance: None,
            }));
        }
    }
    let mut model = ProcessModel {
        name: "generated".to_owned(),
        stakeholders: vec!["A".to_owned()],
        steps,
    };
    if model.tasks().next().is_none() {
        serial += 1;
        model
            .steps
            .push(Step::Task(random_task(rng, format!("s{serial}"))));
    }
    model
}

/// A random scenario that can only shrink the process: removals of
/// non-target tasks, scale factors at most 1, and probability decreases.
/// Always applicable to `model` without referential errors.
pub fn random_reduce_only_scenario(rng: &mut impl Rng, model: &ProcessModel) -> Scenario {
    let protected: HashSet<&str> = model
        .steps
        .iter()
        .filter_map(|s| match s {
            Step::Decision(d) => Some(d.target.as_str()),
            _ => None,
        })
        .collect();
    let task_ids: Vec<String> = model.tasks().map(|t| t.id.clone()).collect();
    let candidates: Vec<String> = task_ids
        .iter()
        .filter(|id| !protected.contains(id.as_str()))
        .cloned()
        .collect();

    let mut ops = Vec::new();

    // Remove a strict subset so at least one task always survives.
    let max_removals = candidates.len().min(task_ids.len().saturating_sub(1));
    let remove_count = if max_removals == 0 {
        0
    } else {
        rng.random_range(0..=max_removals.min(3))
    };
    let mut removed: HashSet<String> = HashSet::new();
    if remove_count > 0 {
        let mut pool = candidates.clone();
        let mut ids = Vec::new();
        for _ in 0..remove_count {
            let pick = pool.remove(rng.random_range(0..pool.len()));
            removed.insert(pick.clone());
            ids.push(pick);
        }
        ops.push(ScenarioOp {
            op: TransformOp::RemoveTasks { ids },
            provenance: None,
        });
    }

    for _ in 0..rng.random_range(0..=2) {
        let factor = rng.random_range(0.1..=1.0);
        let selector = if rng.random_bool(0.5) {
            DurationSelector::Category(random_category(rng))
        } else {
            let survivors: Vec<String> = task_ids
                .iter()
                .filter(|id| !removed.contains(*id))
                .cloned()
                .collect();
            if survivors.is_empty() {
                continue;
            }
            DurationSelector::Ids(vec![survivors[rng.random_range(0..survivors.len())].clone()])
        };
        ops.push(ScenarioOp {
            op: TransformOp::ScaleDuration { selector, factor },
            provenance: None,
        });
    }

    for step in &model.steps {
        if let Step::Decision(d) = step {
            if d.probability > 0.0 && rng.random_bool(0.7) {
                ops.push(ScenarioOp {
                    op: TransformOp::SetProbability {
                        id: d.id.clone(),
                        value: d.probability * rng.random::<f64>(),
                    },
                    provenance: None,
                });
            }
        }
    }

    Scenario {
        name: "reduce-only".to_owned(),
        ops,
    }
}
