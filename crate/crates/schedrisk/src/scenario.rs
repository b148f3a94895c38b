//! Declarative what-if transformations of a process model.
//!
//! A [`Scenario`] is an ordered list of edits — task removals, duration
//! scaling or replacement, and decision-probability changes — applied to a
//! copy of the model. Ops apply strictly in document order; the empty
//! scenario is the identity transform.

use thiserror::Error;

use crate::model::{
    validate_model, Diagnostic, DurationDistribution, ProcessModel, Step, TaskCategory,
};

/// Task selector for duration scaling: explicit ids or a whole category.
#[derive(Debug, Clone, PartialEq)]
pub enum DurationSelector {
    Ids(Vec<String>),
    Category(TaskCategory),
}

/// One model edit.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformOp {
    /// Remove the named steps wherever they appear. Ids share one namespace:
    /// a task (top level or inside a branch), a decision, or a whole
    /// parallel block may be removed. Emptied branches and blocks are
    /// retained and contribute zero.
    RemoveTasks { ids: Vec<String> },
    /// Multiply the selected tasks' duration parameters by `factor`.
    ScaleDuration {
        selector: DurationSelector,
        factor: f64,
    },
    /// Replace one task's duration outright.
    ReplaceDuration {
        id: String,
        duration: DurationDistribution,
    },
    /// Rewrite one decision's loop probability.
    SetProbability { id: String, value: f64 },
}

/// An op plus its optional provenance tag from the document.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOp {
    pub op: TransformOp,
    pub provenance: Option<String>,
}

/// Named, ordered list of transformation ops.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub ops: Vec<ScenarioOp>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("op {index}: error[UNKNOWN_ID]: no step with id \"{id}\" at the time the op applies")]
    UnknownId { index: usize, id: String },
    #[error("op {index}: error[NOT_A_TASK]: \"{id}\" does not name a task")]
    NotATask { index: usize, id: String },
    #[error("op {index}: error[NOT_A_DECISION]: \"{id}\" does not name a decision")]
    NotADecision { index: usize, id: String },
    #[error("error[DANGLING_TARGET]: decision \"{decision}\" targets removed step \"{target}\"; remove the decision in the same scenario")]
    DanglingTarget { decision: String, target: String },
    #[error("error[INVALID_RESULT]: transformed model fails validation with {} diagnostic(s)", .0.len())]
    InvalidResult(Vec<Diagnostic>),
}

fn id_exists(model: &ProcessModel, id: &str) -> bool {
    model.steps.iter().any(|s| s.id() == id) || model.tasks().any(|t| t.id == id)
}

fn remove_id(model: &mut ProcessModel, id: &str) -> bool {
    if let Some(pos) = model.steps.iter().position(|s| s.id() == id) {
        model.steps.remove(pos);
        return true;
    }
    for step in &mut model.steps {
        if let Step::Parallel(p) = step {
            for branch in &mut p.branches {
                if let Some(pos) = branch.iter().position(|t| t.id == id) {
                    branch.remove(pos);
                    return true;
                }
            }
        }
    }
    false
}

fn scale_task(model: &mut ProcessModel, id: &str, factor: f64) -> Result<(), bool> {
    // Err(false): id absent; Err(true): id names a non-task step.
    for step in &mut model.steps {
        match step {
            Step::Task(t) if t.id == id => {
                t.duration = t.duration.scaled(factor);
                return Ok(());
            }
            Step::Parallel(p) => {
                if p.id == id {
                    return Err(true);
                }
                for task in p.branches.iter_mut().flatten() {
                    if task.id == id {
                        task.duration = task.duration.scaled(factor);
                        return Ok(());
                    }
                }
            }
            Step::Decision(d) if d.id == id => return Err(true),
            _ => {}
        }
    }
    Err(false)
}

fn replace_task_duration(
    model: &mut ProcessModel,
    id: &str,
    duration: DurationDistribution,
) -> Result<(), bool> {
    for step in &mut model.steps {
        match step {
            Step::Task(t) if t.id == id => {
                t.duration = duration;
                return Ok(());
            }
            Step::Parallel(p) => {
                if p.id == id {
                    return Err(true);
                }
                for task in p.branches.iter_mut().flatten() {
                    if task.id == id {
                        task.duration = duration;
                        return Ok(());
                    }
                }
            }
            Step::Decision(d) if d.id == id => return Err(true),
            _ => {}
        }
    }
    Err(false)
}

fn apply_op(
    model: &mut ProcessModel,
    index: usize,
    op: &TransformOp,
) -> Result<(), TransformError> {
    match op {
        TransformOp::RemoveTasks { ids } => {
            for id in ids {
                if !remove_id(model, id) {
                    return Err(TransformError::UnknownId {
                        index,
                        id: id.clone(),
                    });
                }
            }
            Ok(())
        }
        TransformOp::ScaleDuration { selector, factor } => match selector {
            DurationSelector::Ids(ids) => {
                for id in ids {
                    match scale_task(model, id, *factor) {
                        Ok(()) => {}
                        Err(true) => {
                            return Err(TransformError::NotATask {
                                index,
                                id: id.clone(),
                            })
                        }
                        Err(false) => {
                            return Err(TransformError::UnknownId {
                                index,
                                id: id.clone(),
                            })
                        }
                    }
                }
                Ok(())
            }
            DurationSelector::Category(category) => {
                for step in &mut model.steps {
                    match step {
                        Step::Task(t) if t.category == *category => {
                            t.duration = t.duration.scaled(*factor);
                        }
                        Step::Parallel(p) => {
                            for task in p.branches.iter_mut().flatten() {
                                if task.category == *category {
                                    task.duration = task.duration.scaled(*factor);
                                }
                            }
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
        },
        TransformOp::ReplaceDuration { id, duration } => {
            match replace_task_duration(model, id, *duration) {
                Ok(()) => Ok(()),
                Err(true) => Err(TransformError::NotATask {
                    index,
                    id: id.clone(),
                }),
                Err(false) => Err(TransformError::UnknownId {
                    index,
                    id: id.clone(),
                }),
            }
        }
        TransformOp::SetProbability { id, value } => {
            if !id_exists(model, id) {
                return Err(TransformError::UnknownId {
                    index,
                    id: id.clone(),
                });
            }
            for step in &mut model.steps {
                if let Step::Decision(d) = step {
                    if d.id == *id {
                        d.probability = *value;
                        return Ok(());
                    }
                }
            }
            Err(TransformError::NotADecision {
                index,
                id: id.clone(),
            })
        }
    }
}

/// Apply every op of `scenario` in order to a copy of `model`.
///
/// The input is never mutated. Referential integrity is enforced: an op
/// naming a missing id fails, and after all ops every surviving decision
/// must still have its target. The returned model is re-validated and
/// guaranteed valid.
pub fn apply_scenario(
    model: &ProcessModel,
    scenario: &Scenario,
) -> Result<ProcessModel, TransformError> {
    let mut result = model.clone();
    for (index, entry) in scenario.ops.iter().enumerate() {
        apply_op(&mut result, index, &entry.op)?;
    }

    for step in &result.steps {
        if let Step::Decision(d) = step {
            if result.top_level_index(&d.target).is_none() {
                return Err(TransformError::DanglingTarget {
                    decision: d.id.clone(),
                    target: d.target.clone(),
                });
            }
        }
    }

    let diags = validate_model(&result);
    if !diags.is_empty() {
        return Err(TransformError::InvalidResult(diags));
    }
    Ok(result)
}
