//! Pipeline invariants under randomly scripted, often hostile backends.

use std::sync::Arc;

use proptest::prelude::*;
use refiner_core::agents::AgentBackend;
use refiner_core::domain::{AgentRole, Atom, RoundRecord, UserPrompt};
use refiner_core::gateway::{CharFrequencyEmbedder, Gateway, RetryPolicy, ScriptStep, ScriptedBackend};
use refiner_core::orchestrator::{run_pipeline, trace_json, PipelineConfig, TraceVerbosity};

const WORDS: [&str; 12] = [
    "cat", "dog", "red", "kite", "runs", "under", "bridge", "at", "night", "glowing", "old", "tower",
];

#[derive(Debug, Clone)]
struct Scenario {
    prompt: String,
    max_rounds: u32,
    parallelism: usize,
    router: Vec<String>,
    policy: Vec<String>,
    refiner: Vec<String>,
    atomizer: Vec<String>,
    validator: Vec<String>,
    reviser: Vec<String>,
}

fn garbage() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("not json at all".to_string()),
        Just("   ".to_string()),
        Just("{\"characters\": 7}".to_string()),
    ]
}

fn reply(valid: impl Strategy<Value = String>) -> impl Strategy<Value = String> {
    prop_oneof![6 => valid, 3 => garbage()]
}

/// A few unusable replies, then usually a good one.
fn queue(valid: impl Strategy<Value = String>) -> impl Strategy<Value = Vec<String>> {
    (prop::collection::vec(garbage(), 0..3), prop::bool::weighted(0.9), valid).prop_map(|(mut q, ok, v)| {
        if ok {
            q.push(v);
        }
        q
    })
}

fn atomizer_reply() -> impl Strategy<Value = String> {
    let atoms = prop::collection::vec(
        (0..5usize, prop::sample::select(WORDS.to_vec()), prop::bool::weighted(0.2)),
        1..6,
    )
    .prop_map(|items| {
        let keys = ["characters", "objects", "actions", "locations", "scenery"];
        let mut fields: Vec<Vec<String>> = vec![Vec::new(); 5];
        for (field, word, injected) in items {
            let text = if injected { format!("{word} invented") } else { word.to_string() };
            fields[field].push(text);
        }
        let body: Vec<String> = keys
            .iter()
            .zip(&fields)
            .map(|(k, v)| format!("\"{k}\": {}", serde_json::to_string(v).unwrap()))
            .collect();
        format!("{{{}}}", body.join(", "))
    });
    atoms
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let sentence = prop::collection::vec(prop::sample::select(WORDS.to_vec()), 3..9).prop_map(|w| w.join(" ") + ".");
    let prompt = Just(WORDS.to_vec()).prop_shuffle().prop_map(|w| w.join(" ") + ".");
    let label = prop::sample::select(vec!["ET", "ET", "ET", "MS", "MS", "CT"])
        .prop_map(|l| format!("{{\"label\": \"{l}\", \"reason\": \"r\"}}"));
    (
        prompt,
        1..=5u32,
        1..=4usize,
        queue(Just("{\"label\": \"Non-difficult\", \"reason\": \"plain\"}".to_string())),
        queue(Just("{\"policy\": {\"intent\": \"i\", \"principles\": \"p\", \"rules\": \"r\"}}".to_string())),
        (prop::bool::weighted(0.9), sentence.clone()).prop_map(|(ok, v)| if ok { vec![v] } else { Vec::new() }),
        queue(atomizer_reply()),
        prop::collection::vec(reply(label), 0..40),
        prop::collection::vec(reply(sentence), 0..6),
    )
        .prop_map(
            |(prompt, max_rounds, parallelism, router, policy, refiner, atomizer, validator, reviser)| Scenario {
                prompt,
                max_rounds,
                parallelism,
                router,
                policy,
                refiner,
                atomizer,
                validator,
                reviser,
            },
        )
}

fn backend(s: &Scenario) -> AgentBackend {
    let mut steps = Vec::new();
    for (role, replies) in [
        (AgentRole::Router, &s.router),
        (AgentRole::PolicyGenerator, &s.policy),
        (AgentRole::Refiner, &s.refiner),
        (AgentRole::Atomizer, &s.atomizer),
        (AgentRole::Validator, &s.validator),
        (AgentRole::Reviser, &s.reviser),
    ] {
        steps.extend(replies.iter().map(|r| ScriptStep::content(r.clone()).for_role(role)));
    }
    // A script needs at least one step; this one is never matched.
    steps.push(ScriptStep::content("unused").when_contains("\u{0}"));
    let chat = Arc::new(ScriptedBackend::new(steps).unwrap());
    let gateway = Gateway::new(chat, Arc::new(CharFrequencyEmbedder), RetryPolicy::immediate(0));
    AgentBackend::new(gateway, "fuzz")
}

fn config(s: &Scenario) -> PipelineConfig {
    PipelineConfig {
        max_rounds: s.max_rounds,
        validator_parallelism: s.parallelism,
        ..PipelineConfig::default()
    }
}

fn round_atoms(round: &RoundRecord) -> Vec<Atom> {
    round.report.atoms().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pipeline_invariants(s in scenario()) {
        let prompt = UserPrompt::new(s.prompt.clone()).unwrap();
        match run_pipeline(&prompt, &config(&s), &backend(&s)) {
            Ok(trace) => {
                prop_assert_eq!(trace.validate(), Ok(()));
                prop_assert!(trace.rounds_used >= 1 && trace.rounds_used <= s.max_rounds as usize);
                prop_assert_eq!(trace.rounds.len(), trace.rounds_used);
                let revisions = trace.exchanges.iter().filter(|e| e.role == AgentRole::Reviser).count();
                prop_assert_eq!(revisions, trace.rounds_used - 1);
                let fixed = trace.atoms.flatten();
                for (k, round) in trace.rounds.iter().enumerate() {
                    prop_assert_eq!(round.prompt.round() as usize, k + 1);
                    prop_assert_eq!(&round_atoms(round), &fixed);
                }
                for atom in &fixed {
                    prop_assert!(prompt.text().contains(atom.text.as_str()));
                }
                let last = &trace.rounds.last().unwrap().report.metrics;
                let strict = last.is_degenerate() || (last.coverage() == 1.0 && last.contradiction() == 0.0);
                prop_assert_eq!(trace.accepted, strict);
                if !trace.accepted {
                    prop_assert_eq!(trace.rounds_used, s.max_rounds as usize);
                }
                prop_assert_eq!(&trace.final_prompt, &trace.rounds.last().unwrap().prompt);
            }
            Err(failure) => {
                let partial = failure.partial;
                prop_assert!(partial.rounds.len() <= s.max_rounds as usize);
                if let Some(first) = partial.rounds.first() {
                    let fixed = round_atoms(first);
                    for round in &partial.rounds {
                        prop_assert_eq!(&round_atoms(round), &fixed);
                    }
                }
            }
        }
    }

    #[test]
    fn replays_are_deterministic(s in scenario()) {
        let prompt = UserPrompt::new(s.prompt.clone()).unwrap();
        let mut serial = s.clone();
        serial.parallelism = 1;
        let once = |s: &Scenario| match run_pipeline(&prompt, &config(s), &backend(s)) {
            Ok(trace) => serde_json::to_string(&trace_json(&trace, TraceVerbosity::Full)).unwrap(),
            Err(failure) => format!("{}", failure.error),
        };
        prop_assert_eq!(once(&serial), once(&serial));
    }
}
