use std::time::Duration;

use graphwalk::agent::mock::{completion, MockReply, MockServer};
use graphwalk::agent::{
    build_prompt_with_tools, run_episode, EpisodeHeader, EpisodeStatus, Event, LlmBackend, LlmConfig, RunConfig,
    ScriptedSolver, Setting, Task,
};
use graphwalk::benchmark::{gold_answer, instantiate, QueryTemplate, TemplateConfig};
use graphwalk::generator::{generate_graph, Preset};
use graphwalk::seed::stage_rng;
use graphwalk::tools::kg_registry;
use graphwalk::PropertyGraph;

fn graph() -> PropertyGraph {
    generate_graph(&Preset::Paper100.config(5)).unwrap().graph
}

fn backend(server: &MockServer) -> LlmBackend {
    LlmBackend::new(LlmConfig {
        base_url: server.base_url(),
        api_key: Some("test-key".into()),
        backoff_ms: 1,
        timeout_secs: 5.0,
        ..LlmConfig::default()
    })
}

fn header() -> EpisodeHeader {
    EpisodeHeader::new("wire", "mock", Setting::WithTools, Task::Other)
}

#[test]
fn three_tool_calls_then_answer() {
    let g = graph();
    let label = g.labels()[0].clone();
    let key = g.nodes_with_label(&label).next().unwrap().key().to_owned();
    let server = MockServer::sequence(vec![
        MockReply::json(&completion(
            None,
            &[
                ("c1", "think", r#"{"thought": "look up keys"}"#),
                (
                    "c2",
                    "get_unique_property_values",
                    &format!(r#"{{"property_name": "key", "entity_name": "{label}", "entity_type": "node"}}"#),
                ),
                (
                    "c3",
                    "get_node_by_property",
                    &format!(r#"{{"label": "{label}", "property_name": "key", "property_value": "{key}"}}"#),
                ),
            ],
        )),
        MockReply::json(&completion(Some(&format!(r#"[{{"node_key": "{key}"}}]"#)), &[])),
    ])
    .unwrap();
    let mut tools = kg_registry(&g);
    let prompt = build_prompt_with_tools(&g.schema().render().to_text(), "t");
    let t = run_episode(&mut backend(&server), Some(&mut tools), header(), &prompt, "q", &RunConfig::default());

    assert_eq!(t.status(), EpisodeStatus::Completed);
    assert_eq!(t.tool_call_count(), 3);
    assert!(t.tool_results().iter().all(|r| !r.is_error));
    assert_eq!(t.final_answer(), Some(format!(r#"[{{"node_key": "{key}"}}]"#).as_str()));

    let requests = server.requests();
    assert_eq!(requests.len(), 2);
    assert_eq!(requests[0]["tools"].as_array().unwrap().len(), 4);
    assert_eq!(requests[0]["messages"][0]["role"], "system");
    let second = requests[1]["messages"].as_array().unwrap();
    assert_eq!(second.len(), 6);
    assert_eq!(second[2]["tool_calls"].as_array().unwrap().len(), 3);
    assert_eq!(second[5]["role"], "tool");
    assert_eq!(second[5]["tool_call_id"], "c3");
}

#[test]
fn malformed_tool_calls_become_error_results() {
    let g = graph();
    let server = MockServer::sequence(vec![
        MockReply::json(&completion(
            None,
            &[
                ("a", "get_node_by_property", "{not json"),
                ("b", "delete_everything", "{}"),
                ("c", "get_all_nearest_neighbors", r#"{"label": "X"}"#),
            ],
        )),
        MockReply::json(&completion(Some("[]"), &[])),
    ])
    .unwrap();
    let mut tools = kg_registry(&g);
    let t = run_episode(&mut backend(&server), Some(&mut tools), header(), "sys", "q", &RunConfig::default());
    assert_eq!(t.status(), EpisodeStatus::Completed);
    let results = t.tool_results();
    assert_eq!(results.len(), 3);
    assert!(results.iter().all(|r| r.is_error));
    assert!(results[1].content.contains("unknown tool"));
    // the error text reached the model
    let fed_back = &server.requests()[1]["messages"];
    assert!(fed_back[3]["content"].as_str().unwrap().contains("malformed arguments"));
}

#[test]
fn never_finalizing_hits_the_cap() {
    let server =
        MockServer::sequence(vec![MockReply::json(&completion(None, &[("t", "think", r#"{"thought": "again"}"#)]))])
            .unwrap();
    let g = graph();
    let mut tools = kg_registry(&g);
    let t = run_episode(&mut backend(&server), Some(&mut tools), header(), "sys", "q", &RunConfig::default());
    assert_eq!(t.status(), EpisodeStatus::IterationCap);
    assert_eq!(t.turns(), 30);
    assert_eq!(server.requests().len(), 30);
    assert!(t.final_answer().is_none());
}

#[test]
fn transient_errors_are_retried() {
    let server = MockServer::sequence(vec![
        MockReply::status(503, "busy"),
        MockReply::status(429, "slow down"),
        MockReply::json(&completion(Some("[]"), &[])),
    ])
    .unwrap();
    let config = RunConfig { with_tools: false, ..RunConfig::default() };
    let t = run_episode(&mut backend(&server), None, header(), "sys", "q", &config);
    assert_eq!(t.status(), EpisodeStatus::Completed);
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn auth_failures_and_timeouts_end_the_episode() {
    let server = MockServer::sequence(vec![MockReply::status(401, "bad key")]).unwrap();
    let config = RunConfig { with_tools: false, ..RunConfig::default() };
    let t = run_episode(&mut backend(&server), None, header(), "sys", "q", &config);
    assert_eq!(t.status(), EpisodeStatus::BackendError);
    assert_eq!(server.requests().len(), 1);

    let slow =
        MockServer::sequence(vec![MockReply::json(&completion(Some("[]"), &[])).delayed(Duration::from_millis(800))])
            .unwrap();
    let mut b = LlmBackend::new(LlmConfig {
        base_url: slow.base_url(),
        timeout_secs: 0.2,
        backoff_ms: 1,
        ..LlmConfig::default()
    });
    let t = run_episode(&mut b, None, header(), "sys", "q", &config);
    assert_eq!(t.status(), EpisodeStatus::BackendError);
    let detail = t.events.iter().find_map(|e| match e {
        Event::Status { detail, .. } => detail.clone(),
        _ => None,
    });
    assert!(detail.unwrap().contains("3 attempt"));
}

#[test]
fn scripted_solver_behind_http_matches_gold() {
    let g = graph();
    let instance =
        instantiate(QueryTemplate::PathFinding, &g, &mut stage_rng(5, "q"), &TemplateConfig::default()).unwrap();
    let gold = gold_answer(&instance.query, &g);
    let server = MockServer::backed_by(ScriptedSolver::new(instance.query.clone())).unwrap();
    let mut tools = kg_registry(&g);
    let prompt = build_prompt_with_tools(&g.schema().render().to_text(), "t");
    let t = run_episode(
        &mut backend(&server),
        Some(&mut tools),
        header(),
        &prompt,
        &instance.question_text,
        &RunConfig::default(),
    );
    assert_eq!(t.status(), EpisodeStatus::Completed);
    let answer: serde_json::Value = serde_json::from_str(t.final_answer().unwrap()).unwrap();
    assert_eq!(answer, gold.to_json());
}
