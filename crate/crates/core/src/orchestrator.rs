//! The refinement pipeline: route, synthesize a policy, refine, then verify
//! and revise until the refined prompt is accepted or the round budget is
//! spent.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::agents::{
    atomize, refine_prompt, revise, route_scenario, synthesize_policy, taxonomy_entry, validate_entailment,
    AgentBackend, AgentError, AgentOutput, VerificationIssues,
};
use crate::domain::{
    AgentExchange, AgentRole, Atom, AtomDictionary, DroppedAtom, EntailmentJudgment, Policy, RefinedPrompt,
    RefinementTrace, RoundRecord, RoutingDecision, UserPrompt, VerificationReport,
};
use crate::verification::{check_acceptance, chunk, compute_metrics, match_atoms, ChunkerConfig, VerificationError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceVerbosity {
    #[default]
    Summary,
    Full,
}

impl std::str::FromStr for TraceVerbosity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "summary" => Ok(TraceVerbosity::Summary),
            "full" => Ok(TraceVerbosity::Full),
            other => Err(format!("unknown verbosity {other:?} (expected summary or full)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Verification rounds, the first included; revisions are one fewer.
    pub max_rounds: u32,
    pub chunker: ChunkerConfig,
    pub validator_parallelism: usize,
    pub trace_verbosity: TraceVerbosity,
    /// Append the whole refined prompt to each validator request.
    pub validator_includes_refined: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_rounds: 5,
            chunker: ChunkerConfig::default(),
            validator_parallelism: 4,
            trace_verbosity: TraceVerbosity::Summary,
            validator_includes_refined: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_rounds == 0 {
            return Err(PipelineError::Config("max_rounds must be at least 1".into()));
        }
        if self.validator_parallelism == 0 {
            return Err(PipelineError::Config("validator_parallelism must be at least 1".into()));
        }
        if self.chunker.min_words_per_chunk == 0 {
            return Err(PipelineError::Config("min_words_per_chunk must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Routing,
    Policy,
    Refinement,
    Atomization,
    Verification,
    Revision,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Routing => "routing",
            Stage::Policy => "policy",
            Stage::Refinement => "refinement",
            Stage::Atomization => "atomization",
            Stage::Verification => "verification",
            Stage::Revision => "revision",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("{stage} failed: {cause}")]
    Agent { stage: Stage, cause: AgentError },
    #[error("verification failed: {0}")]
    Verification(#[from] VerificationError),
}

/// Whatever a failed run produced before the error.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartialTrace {
    pub user_prompt: Option<UserPrompt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routing: Option<RoutingDecision>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<AtomDictionary>,
    pub rounds: Vec<RoundRecord>,
    /// The prompt awaiting verification when the run stopped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pending_prompt: Option<RefinedPrompt>,
    pub exchanges: Vec<AgentExchange>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct PipelineFailure {
    pub error: PipelineError,
    pub partial: Box<PartialTrace>,
}

/// One verification round's report plus the validator responses, in atom
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub report: VerificationReport,
    pub validator_responses: Vec<Vec<String>>,
}

type Judged = Result<AgentOutput<EntailmentJudgment>, AgentError>;

fn validate_all(
    pairs: &[crate::domain::EvidencePair],
    refined: Option<&RefinedPrompt>,
    parallelism: usize,
    backend: &AgentBackend,
) -> Result<Vec<AgentOutput<EntailmentJudgment>>, AgentError> {
    let workers = parallelism.clamp(1, pairs.len().max(1));
    if workers == 1 {
        return pairs.iter().map(|p| validate_entailment(p, refined, backend)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Judged>>> = Mutex::new(vec![None; pairs.len()]);
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(pair) = pairs.get(i) else { break };
                let result = validate_entailment(pair, refined, backend);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|slot| slot.expect("every pair validated"))
        .collect()
}

/// chunk → match → validate → metrics → acceptance for one refined prompt.
/// Judgments come back in atom order whatever the validator concurrency.
pub fn run_verification_round(
    atoms: &[Atom],
    refined: &RefinedPrompt,
    config: &PipelineConfig,
    backend: &AgentBackend,
) -> Result<RoundOutcome, PipelineError> {
    let chunks = chunk(refined.text(), &config.chunker)?;
    if atoms.is_empty() {
        let metrics = compute_metrics(&[]);
        return Ok(RoundOutcome {
            report: VerificationReport {
                chunks,
                judgments: Vec::new(),
                accepted: check_acceptance(&metrics),
                metrics,
                similarity: None,
            },
            validator_responses: Vec::new(),
        });
    }
    let matching = match_atoms(atoms, &chunks, backend.gateway())?;
    let context = config.validator_includes_refined.then_some(refined);
    let outputs = validate_all(&matching.pairs, context, config.validator_parallelism, backend)
        .map_err(agent_err(Stage::Verification))?;
    let (judgments, validator_responses): (Vec<_>, Vec<_>) =
        outputs.into_iter().map(|o| (o.value, o.responses)).unzip();
    let metrics = compute_metrics(&judgments);
    Ok(RoundOutcome {
        report: VerificationReport {
            chunks,
            judgments,
            accepted: check_acceptance(&metrics),
            metrics,
            similarity: Some(matching.similarity),
        },
        validator_responses,
    })
}

struct Run<'a> {
    config: &'a PipelineConfig,
    backend: &'a AgentBackend,
    partial: PartialTrace,
}

impl Run<'_> {
    fn record(&mut self, role: AgentRole, round: Option<u32>, responses: Vec<String>) {
        self.partial.exchanges.extend(responses.into_iter().map(|raw_response| AgentExchange {
            role,
            round,
            raw_response,
        }));
    }

    fn fail(self, error: PipelineError) -> PipelineFailure {
        PipelineFailure {
            error,
            partial: Box::new(self.partial),
        }
    }
}

fn agent_err(stage: Stage) -> impl FnOnce(AgentError) -> PipelineError {
    move |cause| PipelineError::Agent { stage, cause }
}

/// Executes the full pipeline for one prompt.
///
/// Exhausting the round budget is not an error: the trace comes back with
/// `accepted == false` and the last revision as its final prompt.
pub fn run_pipeline(
    prompt: &UserPrompt,
    config: &PipelineConfig,
    backend: &AgentBackend,
) -> Result<RefinementTrace, PipelineFailure> {
    let mut run = Run {
        config,
        backend,
        partial: PartialTrace {
            user_prompt: Some(prompt.clone()),
            ..PartialTrace::default()
        },
    };
    if let Err(e) = config.validate() {
        return Err(run.fail(e));
    }
    match execute(prompt, &mut run) {
        Ok(parts) => Ok(assemble(prompt, run.partial, parts)),
        Err(e) => Err(run.fail(e)),
    }
}

struct Parts {
    routing: RoutingDecision,
    policy: Policy,
    atoms: AtomDictionary,
    dropped: Vec<DroppedAtom>,
    atomizer_retried: bool,
}

fn execute(prompt: &UserPrompt, run: &mut Run<'_>) -> Result<Parts, PipelineError> {
    let backend = run.backend;
    let config = run.config;

    let routed = route_scenario(prompt, backend).map_err(agent_err(Stage::Routing))?;
    run.record(AgentRole::Router, None, routed.responses);
    let routing = routed.value;
    run.partial.routing = Some(routing.clone());
    log::info!("routed to {}", routing.tag);

    let policy = synthesize_policy(prompt, &routing, taxonomy_entry(routing.tag), backend)
        .map_err(agent_err(Stage::Policy))?;
    run.record(AgentRole::PolicyGenerator, None, policy.responses);
    let policy = policy.value;
    run.partial.policy = Some(policy.clone());

    let refined = refine_prompt(prompt, &policy, backend).map_err(agent_err(Stage::Refinement))?;
    run.record(AgentRole::Refiner, Some(1), refined.responses);
    let mut current = refined.value;
    run.partial.pending_prompt = Some(current.clone());

    let atomization = atomize(prompt, backend).map_err(agent_err(Stage::Atomization))?;
    run.record(AgentRole::Atomizer, None, atomization.responses);
    let atomization = atomization.value;
    run.partial.atoms = Some(atomization.dictionary.clone());
    let atoms = atomization.dictionary.flatten();

    loop {
        let round = current.round();
        let outcome = run_verification_round(&atoms, &current, config, backend)?;
        for responses in outcome.validator_responses {
            run.record(AgentRole::Validator, Some(round), responses);
        }
        let report = outcome.report;
        log::info!(
            "round {round}: coverage {:.3}, contradiction {:.3}",
            report.metrics.coverage(),
            report.metrics.contradiction()
        );
        let accepted = report.accepted;
        let issues = VerificationIssues::from_judgments(&report.judgments);
        run.partial.pending_prompt = None;
        run.partial.rounds.push(RoundRecord {
            prompt: current.clone(),
            report,
        });
        if accepted || round >= config.max_rounds {
            break;
        }
        let revised = revise(prompt, &current, &issues, backend).map_err(agent_err(Stage::Revision))?;
        run.record(AgentRole::Reviser, Some(round + 1), revised.responses);
        current = revised.value;
        run.partial.pending_prompt = Some(current.clone());
    }

    Ok(Parts {
        routing,
        policy,
        atoms: atomization.dictionary,
        dropped: atomization.dropped,
        atomizer_retried: atomization.retried,
    })
}

fn assemble(prompt: &UserPrompt, partial: PartialTrace, parts: Parts) -> RefinementTrace {
    let last = partial.rounds.last().expect("at least one round ran");
    let trace = RefinementTrace {
        user_prompt: prompt.clone(),
        routing: parts.routing,
        policy: parts.policy,
        atoms: parts.atoms,
        dropped_atoms: parts.dropped,
        atomizer_retried: parts.atomizer_retried,
        final_prompt: last.prompt.clone(),
        accepted: last.report.accepted,
        rounds_used: partial.rounds.len(),
        rounds: partial.rounds,
        exchanges: partial.exchanges,
    };
    debug_assert_eq!(trace.validate(), Ok(()));
    trace
}

/// Trace JSON at the requested verbosity: `full` is the whole trace with
/// similarity matrices and raw responses, `summary` the compact form.
pub fn trace_json(trace: &RefinementTrace, verbosity: TraceVerbosity) -> Value {
    let value = match verbosity {
        TraceVerbosity::Full => serde_json::to_value(trace),
        TraceVerbosity::Summary => serde_json::to_value(trace.summary()),
    };
    value.expect("traces serialize")
}
