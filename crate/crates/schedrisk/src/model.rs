//! Process-model domain types and semantic validation.
//!
//! A [`ProcessModel`] is an ordered list of steps: tasks with stochastic
//! durations, parallel fan-out blocks, and probabilistic backward-jump
//! decisions (rework loops). Validation is a separate pass from parsing:
//! [`validate_model`] reports every semantic violation as a [`Diagnostic`]
//! instead of failing on the first one.

use std::collections::HashSet;
use std::fmt;

/// Stochastic task duration, in days.
///
/// Triangular distributions encode expert beliefs as minimum, mode, and
/// maximum values; `Deterministic` is a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DurationDistribution {
    Triangular { min: f64, mode: f64, max: f64 },
    Deterministic { value: f64 },
}

impl DurationDistribution {
    /// Closed-form mean and variance, in days and days².
    ///
    /// For `Triangular{a, m, b}`: mean `(a+m+b)/3`, variance
    /// `(a²+m²+b²−am−ab−mb)/18`. A point mass has variance 0.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            DurationDistribution::Triangular { min, mode, max } => {
                let mean = (min + mode + max) / 3.0;
                let var =
                    (min * min + mode * mode + max * max - min * mode - min * max - mode * max)
                        / 18.0;
                (mean, var)
            }
            DurationDistribution::Deterministic { value } => (value, 0.0),
        }
    }

    /// Multiply every parameter by `factor`, preserving the variant.
    pub fn scaled(&self, factor: f64) -> DurationDistribution {
        match *self {
            DurationDistribution::Triangular { min, mode, max } => {
                DurationDistribution::Triangular {
                    min: factor * min,
                    mode: factor * mode,
                    max: factor * max,
                }
            }
            DurationDistribution::Deterministic { value } => DurationDistribution::Deterministic {
                value: factor * value,
            },
        }
    }
}

/// Closed-form mean and variance of a duration distribution.
pub fn triangular_moments(dist: &DurationDistribution) -> (f64, f64) {
    dist.moments()
}

/// The five task categories every task is labeled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskCategory {
    ElicitingRequirements,
    InformationExchange,
    SystemLevelModeling,
    DisciplinaryModeling,
    ReviewMeetings,
}

impl TaskCategory {
    /// All categories, in canonical (wire/report) order.
    pub const ALL: [TaskCategory; 5] = [
        TaskCategory::ElicitingRequirements,
        TaskCategory::InformationExchange,
        TaskCategory::SystemLevelModeling,
        TaskCategory::DisciplinaryModeling,
        TaskCategory::ReviewMeetings,
    ];

    /// Name used in documents, CSV headers, and reports.
    pub fn wire_name(self) -> &'static str {
        match self {
            TaskCategory::ElicitingRequirements => "eliciting_requirements",
            TaskCategory::InformationExchange => "information_exchange",
            TaskCategory::SystemLevelModeling => "system_modeling",
            TaskCategory::DisciplinaryModeling => "disciplinary_modeling",
            TaskCategory::ReviewMeetings => "review_meetings",
        }
    }

    pub fn from_wire_name(name: &str) -> Option<TaskCategory> {
        TaskCategory::ALL
            .iter()
            .copied()
            .find(|c| c.wire_name() == name)
    }

    /// Position in [`TaskCategory::ALL`]; used to index per-category arrays.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.wire_name())
    }
}

/// A unit of work performed by one stakeholder.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: String,
    pub label: String,
    pub stakeholder: String,
    pub category: TaskCategory,
    pub duration: DurationDistribution,
    /// Optional data-provenance tag carried through from the document
    /// (e.g. `"calibrated"` for tuned fixture values).
    pub provenance: Option<String>,
}

/// Fan-out block: branches run concurrently, each branch is a task sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelBlock {
    pub id: String,
    pub branches: Vec<Vec<Task>>,
}

/// Probabilistic backward jump: with `probability`, execution resumes from
/// the earlier top-level step named by `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub id: String,
    pub label: String,
    pub probability: f64,
    pub target: String,
    pub provenance: Option<String>,
}

/// One element of the executable step sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Task(Task),
    Parallel(ParallelBlock),
    Decision(Decision),
}

impl Step {
    pub fn id(&self) -> &str {
        match self {
            Step::Task(t) => &t.id,
            Step::Parallel(p) => &p.id,
            Step::Decision(d) => &d.id,
        }
    }
}

/// An executable process: named step sequence plus the stakeholder roster.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    pub name: String,
    pub stakeholders: Vec<String>,
    pub steps: Vec<Step>,
}

impl ProcessModel {
    /// Iterate over every task, including tasks nested in parallel branches.
    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.steps.iter().flat_map(|step| match step {
            Step::Task(t) => vec![t],
            Step::Parallel(p) => p.branches.iter().flatten().collect(),
            Step::Decision(_) => vec![],
        })
    }

    /// Index of the top-level step with the given id, if any.
    pub fn top_level_index(&self, id: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.id() == id)
    }
}

/// Rule codes attached to validation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    EmptyModel,
    NoTasks,
    DupId,
    UnknownStakeholder,
    NegDuration,
    NotFinite,
    TriOrder,
    ProbRange,
    TargetMissing,
    TargetNotTopLevel,
    ForwardJump,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::EmptyModel => "EMPTY_MODEL",
            Rule::NoTasks => "NO_TASKS",
            Rule::DupId => "DUP_ID",
            Rule::UnknownStakeholder => "UNKNOWN_STAKEHOLDER",
            Rule::NegDuration => "NEG_DURATION",
            Rule::NotFinite => "NOT_FINITE",
            Rule::TriOrder => "TRI_ORDER",
            Rule::ProbRange => "PROB_RANGE",
            Rule::TargetMissing => "TARGET_MISSING",
            Rule::TargetNotTopLevel => "TARGET_NOT_TOP_LEVEL",
            Rule::ForwardJump => "FORWARD_JUMP",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One semantic violation. Violations are data, not failures: validation
/// always returns the full list.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    /// Offending step id; `None` for model-level rules.
    pub step_id: Option<String>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.step_id {
            Some(id) => write!(f, "error[{}]: step {}: {}", self.rule, id, self.message),
            None => write!(f, "error[{}]: {}", self.rule, self.message),
        }
    }
}

fn diag(step_id: Option<&str>, rule: Rule, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        step_id: step_id.map(str::to_owned),
        rule,
        message: message.into(),
    }
}

fn check_duration(id: &str, dur: &DurationDistribution, out: &mut Vec<Diagnostic>) {
    match *dur {
        DurationDistribution::Triangular { min, mode, max } => {
            if !(min.is_finite() && mode.is_finite() && max.is_finite()) {
                out.push(diag(
                    Some(id),
                    Rule::NotFinite,
                    "duration parameters must be finite",
                ));
                return;
            }
            if min < 0.0 {
                out.push(diag(
                    Some(id),
                    Rule::NegDuration,
                    format!("min is {min}, durations must be nonnegative"),
                ));
            }
            if min > mode {
                out.push(diag(
                    Some(id),
                    Rule::TriOrder,
                    format!("min exceeds mode ({min} > {mode})"),
                ));
            }
            if mode > max {
                out.push(diag(
                    Some(id),
                    Rule::TriOrder,
                    format!("mode exceeds max ({mode} > {max})"),
                ));
            }
        }
        DurationDistribution::Deterministic { value } => {
            if !value.is_finite() {
                out.push(diag(
                    Some(id),
                    Rule::NotFinite,
                    "duration value must be finite",
                ));
            } else if value < 0.0 {
                out.push(diag(
                    Some(id),
                    Rule::NegDuration,
                    format!("value is {value}, durations must be nonnegative"),
                ));
            }
        }
    }
}

fn check_task(task: &Task, stakeholders: &HashSet<&str>, out: &mut Vec<Diagnostic>) {
    if !stakeholders.contains(task.stakeholder.as_str()) {
        out.push(diag(
            Some(&task.id),
            Rule::UnknownStakeholder,
            format!(
                "stakeholder \"{}\" is not in the model's stakeholder list",
                task.stakeholder
            ),
        ));
    }
    check_duration(&task.id, &task.duration, out);
}

/// Check every semantic invariant of `model` and return one diagnostic per
/// violation. An empty list means the model is valid. The model is never
/// mutated; two calls return identical lists.
pub fn validate_model(model: &ProcessModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if model.steps.is_empty() {
        out.push(diag(None, Rule::EmptyModel, "model has no steps"));
    }
    if model.tasks().next().is_none() && !model.steps.is_empty() {
        out.push(diag(None, Rule::NoTasks, "model contains no tasks"));
    }

    // Id uniqueness spans every step and every branch task.
    let mut all_ids: Vec<&str> = Vec::new();
    for step in &model.steps {
        all_ids.push(step.id());
        if let Step::Parallel(p) = step {
            for task in p.branches.iter().flatten() {
                all_ids.push(&task.id);
            }
        }
    }
    let mut seen: HashSet<&str> = HashSet::new();
    for id in all_ids {
        if !seen.insert(id) {
            out.push(diag(
                Some(id),
                Rule::DupId,
                format!("id \"{id}\" is declared more than once"),
            ));
        }
    }

    let stakeholders: HashSet<&str> = model.stakeholders.iter().map(String::as_str).collect();

    for (index, step) in model.steps.iter().enumerate() {
        match step {
            Step::Task(task) => check_task(task, &stakeholders, &mut out),
            Step::Parallel(p) => {
                for task in p.branches.iter().flatten() {
                    check_task(task, &stakeholders, &mut out);
                }
            }
            Step::Decision(d) => {
                if !(d.probability.is_finite() && (0.0..1.0).contains(&d.probability)) {
                    out.push(diag(
                        Some(&d.id),
                        Rule::ProbRange,
                        format!("probability {} is outside [0, 1)", d.probability),
                    ));
                }
                match model.top_level_index(&d.target) {
                    None => {
                        let nested = model.tasks().any(|t| t.id == d.target);
                        if nested {
                            out.push(diag(
                                Some(&d.id),
                                Rule::TargetNotTopLevel,
                                format!(
                                    "target \"{}\" is nested inside a parallel block",
                                    d.target
                                ),
                            ));
                        } else {
                            out.push(diag(
                                Some(&d.id),
                                Rule::TargetMissing,
                                format!("target \"{}\" does not exist", d.target),
                            ));
                        }
                    }
                    Some(t) if t >= index => {
                        out.push(diag(
                            Some(&d.id),
                            Rule::ForwardJump,
                            format!("target \"{}\" does not appear strictly earlier; jumps are backward only", d.target),
                        ));
                    }
                    Some(_) => {}
                }
            }
        }
    }

    out
}
