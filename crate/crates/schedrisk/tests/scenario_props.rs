//! Scenario algebra on the bundled fixtures: identity, composition, scale
//! composition, and every referential-integrity error path driven by a
//! dedicated broken scenario file.

mod common;

use std::fs;
use std::path::PathBuf;

use schedrisk::model::DurationDistribution;
use schedrisk::scenario::{apply_scenario, Scenario, TransformError};

fn broken_scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/scenarios")
        .join(name);
    let text = fs::read_to_string(&path).expect("scenario fixture readable");
    schedrisk::parse_scenario(&text).expect("scenario fixture parses")
}

#[test]
fn identity_scenario_returns_structurally_equal_model() {
    let model = common::load_fixture_model();
    let identity = Scenario {
        name: "identity".to_owned(),
        ops: vec![],
    };
    assert_eq!(apply_scenario(&model, &identity).unwrap(), model);
}

#[test]
fn bundled_scenario_removes_the_named_tasks() {
    let model = common::load_fixture_model();
    let scenario = common::load_fixture_scenario();
    let out = apply_scenario(&model, &scenario).unwrap();
    for gone in ["F2.2", "F2.3", "F2.4", "F2.8"] {
        assert!(
            out.tasks().all(|t| t.id != gone),
            "{gone} should be removed"
        );
    }
    assert!(schedrisk::validate_model(&out).is_empty());
}

#[test]
fn op_by_op_equals_whole_scenario_on_fixture() {
    let model = common::load_fixture_model();
    let scenario = common::load_fixture_scenario();
    let whole = apply_scenario(&model, &scenario).unwrap();
    let mut stepwise = model;
    for entry in &scenario.ops {
        let single = Scenario {
            name: "one".to_owned(),
            ops: vec![entry.clone()],
        };
        stepwise = apply_scenario(&stepwise, &single).unwrap();
    }
    assert_eq!(whole, stepwise);
}

#[test]
fn successive_scales_compose_multiplicatively() {
    use schedrisk::scenario::{DurationSelector, ScenarioOp, TransformOp};
    use schedrisk::TaskCategory;
    let model = common::load_fixture_model();
    let scale = |factor: f64| ScenarioOp {
        op: TransformOp::ScaleDuration {
            selector: DurationSelector::Category(TaskCategory::DisciplinaryModeling),
            factor,
        },
        provenance: None,
    };
    let twice = apply_scenario(
        &model,
        &Scenario {
            name: "two".to_owned(),
            ops: vec![scale(0.9), scale(0.6)],
        },
    )
    .unwrap();
    let once = apply_scenario(
        &model,
        &Scenario {
            name: "one".to_owned(),
            ops: vec![scale(0.9 * 0.6)],
        },
    )
    .unwrap();
    for (a, b) in twice.tasks().zip(once.tasks()) {
        match (a.duration, b.duration) {
            (
                DurationDistribution::Triangular {
                    min: a1,
                    mode: a2,
                    max: a3,
                },
                DurationDistribution::Triangular {
                    min: b1,
                    mode: b2,
                    max: b3,
                },
            ) => {
                assert!((a1 - b1).abs() <= 1e-12);
                assert!((a2 - b2).abs() <= 1e-12);
                assert!((a3 - b3).abs() <= 1e-12);
            }
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn unknown_id_fixture_fails_with_unknown_id() {
    let model = common::load_fixture_model();
    match apply_scenario(&model, &broken_scenario("unknown_id.json")) {
        Err(TransformError::UnknownId { id, .. }) => assert_eq!(id, "F9.99"),
        other => panic!("unexpected result: {other:?}"),
    }
}

#[test]
fn dangling_target_fixture_fails_with_dangling_target() {
    let model = common::load_fixture_model();
    match apply_scenario(&model, &broken_scenario("dangling_target.json")) {
        Err(TransformError::DanglingTarget { decision, target }) => {
            assert_eq!(decision, "F3.35");
            assert_eq!(target, "F2.P1");
        }
        other => panic!("unexpected result: {other:?}"),
    }
}

#[test]
fn not_a_decision_fixture_fails_with_not_a_decision() {
    let model = common::load_fixture_model();
    match apply_scenario(&model, &broken_scenario("not_a_decision.json")) {
        Err(TransformError::NotADecision { id, .. }) => assert_eq!(id, "F2.1"),
        other => panic!("unexpected result: {other:?}"),
    }
}

#[test]
fn not_a_task_fixture_fails_with_not_a_task() {
    let model = common::load_fixture_model();
    match apply_scenario(&model, &broken_scenario("not_a_task.json")) {
        Err(TransformError::NotATask { id, .. }) => assert_eq!(id, "F3.34"),
        other => panic!("unexpected result: {other:?}"),
    }
}
