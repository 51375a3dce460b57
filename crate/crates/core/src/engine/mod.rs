//! The influence game.
//!
//! Each round a uniformly random speaker picks a uniformly random listener
//! from its influence ball. The speaker offers its opinion's fixed offer
//! amount only if converting the listener would flip the speaker's own
//! forecast of the local majority in its favor. The listener accepts with
//! logistic probability in the forecast gain [`delta_i`](GameState::delta_i).
//! At the end of the game holders of the global majority opinion are paid
//! the reward.

mod run;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NeighborhoodTable, NodeId};

pub use run::{check_radii, play, run, run_with_rng, RunOptions, RunOutput, Snapshot};

/// Largest supported number of competing opinions.
pub const MAX_OPINIONS: usize = 26;

/// Opinion label. Opinion `A` is id 0, `B` is id 1, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OpinionId(pub u8);

impl OpinionId {
    pub const A: OpinionId = OpinionId(0);
    pub const B: OpinionId = OpinionId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Single-letter label, `A` through `Z`.
    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }

    /// Parses a letter (`A`, `b`, ...) or a decimal id.
    pub fn parse(label: &str) -> Option<OpinionId> {
        let bytes = label.as_bytes();
        if bytes.len() == 1 && bytes[0].is_ascii_alphabetic() {
            return Some(OpinionId(bytes[0].to_ascii_uppercase() - b'A'));
        }
        label
            .parse::<u8>()
            .ok()
            .filter(|&id| (id as usize) < MAX_OPINIONS)
            .map(OpinionId)
    }
}

impl fmt::Display for OpinionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub opinion: OpinionId,
    pub budget: f64,
    pub change_cost: f64,
    /// Committed agents never accept an offer.
    pub committed: bool,
}

/// Which status-quo forecast the listener subtracts in its gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineVariant {
    /// `E(O_s, M_l, I_l)`: the forecast of the speaker's opinion under the
    /// listener's current majority.
    AsWritten,
    /// `E(O_l, M_l, I_l)`: the listener's own current forecast.
    #[default]
    ListenerOwnOpinion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameParams {
    /// End-of-game reward paid to holders of the global majority opinion.
    pub reward: f64,
    pub default_change_cost: f64,
    pub knowledge_radius: usize,
    pub influence_radius: usize,
    /// Offer made by a speaker of each opinion, indexed by opinion id.
    pub offer_amounts: Vec<f64>,
    pub initial_budget: f64,
    pub num_opinions: usize,
    pub rounds: u64,
    pub debit_speaker: bool,
    pub baseline: BaselineVariant,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            reward: 10.0,
            default_change_cost: 1.0,
            knowledge_radius: 1,
            influence_radius: 1,
            offer_amounts: vec![1.0; 2],
            initial_budget: 0.0,
            num_opinions: 2,
            rounds: 50_000,
            debit_speaker: false,
            baseline: BaselineVariant::ListenerOwnOpinion,
        }
    }
}

impl GameParams {
    /// Defaults with `k` opinions, all offering one unit.
    pub fn with_opinions(k: usize) -> Self {
        GameParams {
            num_opinions: k,
            offer_amounts: vec![1.0; k],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |field: &str, msg: String| {
            Err(EngineError::InvalidParam {
                field: field.into(),
                msg,
            })
        };
        if !(self.reward >= 0.0 && self.reward.is_finite()) {
            return bad("reward", format!("must be finite and >= 0 (got {})", self.reward));
        }
        if !self.default_change_cost.is_finite() {
            return bad("change_cost", "must be finite; use committed agents instead".into());
        }
        if !self.initial_budget.is_finite() {
            return bad("initial_budget", "must be finite".into());
        }
        if self.knowledge_radius < 1 {
            return bad("r_k", "must be >= 1".into());
        }
        if self.influence_radius < 1 {
            return bad("r_i", "must be >= 1".into());
        }
        if self.rounds < 1 {
            return bad("rounds", "must be >= 1".into());
        }
        if !(2..=MAX_OPINIONS).contains(&self.num_opinions) {
            return bad(
                "num_opinions",
                format!("must be in 2..={MAX_OPINIONS} (got {})", self.num_opinions),
            );
        }
        if self.offer_amounts.len() != self.num_opinions {
            return bad(
                "offer_amount",
                format!(
                    "expected {} entries, got {}",
                    self.num_opinions,
                    self.offer_amounts.len()
                ),
            );
        }
        if let Some(x) = self.offer_amounts.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return bad("offer_amount", format!("offers must be finite and >= 0 (got {x})"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid game parameter {field}: {msg}")]
    InvalidParam { field: String, msg: String },
    #[error("{name} radius {radius} exceeds the graph diameter {diameter}")]
    RadiusExceedsDiameter {
        name: &'static str,
        radius: usize,
        diameter: usize,
    },
    #[error("expected {expected} agents, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("agent {node} holds opinion {opinion} but only {k} opinions are configured")]
    OpinionOutOfRange { node: NodeId, opinion: OpinionId, k: usize },
    #[error("neighborhood table has radius {got}, expected {expected}")]
    TableMismatch { expected: usize, got: usize },
    #[error("the game is over after {0} rounds")]
    GameOver(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Why an interaction ended the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attribution {
    /// Speaker and listener already agreed.
    SameOpinion,
    /// Listener switched without being paid.
    Homophily,
    /// Listener switched after a positive offer.
    Influence,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    /// 1-based round number of this interaction.
    pub round: u64,
    pub speaker: NodeId,
    pub listener: NodeId,
    pub speaker_opinion: OpinionId,
    pub listener_opinion_before: OpinionId,
    pub offer: f64,
    pub delta_i: f64,
    pub p_accept: f64,
    pub accepted: bool,
    pub attribution: Attribution,
}

impl InteractionRecord {
    /// The listener actually changed opinion.
    pub fn is_flip(&self) -> bool {
        self.accepted && self.speaker_opinion != self.listener_opinion_before
    }
}

/// Forecast of end-of-game winnings: the reward if `opinion` is the
/// perceived majority, plus the current budget.
pub fn forecast(opinion: OpinionId, majority: OpinionId, budget: f64, reward: f64) -> f64 {
    let delta = if opinion == majority { 1.0 } else { 0.0 };
    reward * delta + budget
}

/// Logistic acceptance; committed agents never accept.
pub fn acceptance_probability(delta: f64, committed: bool) -> f64 {
    if committed {
        0.0
    } else {
        1.0 / (1.0 + (-delta).exp())
    }
}

/// Plurality over `counts`; `own` wins any tie it is part of, otherwise the
/// lowest id among the tied opinions wins.
pub(crate) fn plurality(counts: &[u32], own: OpinionId) -> OpinionId {
    let best = counts.iter().copied().max().unwrap_or(0);
    if counts[own.index()] == best {
        return own;
    }
    let idx = counts.iter().position(|&c| c == best).unwrap_or(0);
    OpinionId(idx as u8)
}

/// Full mutable state of one game.
#[derive(Debug, Clone)]
pub struct GameState {
    graph: Arc<Graph>,
    knowledge: Arc<NeighborhoodTable>,
    influence: Arc<NeighborhoodTable>,
    params: GameParams,
    agents: Vec<AgentState>,
    counts: Vec<usize>,
    round: u64,
    minted: f64,
    settled: bool,
}

impl GameState {
    /// Assembles a game from prebuilt neighborhood tables, which can be shared
    /// between runs on the same graph.
    pub fn new(
        graph: Arc<Graph>,
        knowledge: Arc<NeighborhoodTable>,
        influence: Arc<NeighborhoodTable>,
        params: GameParams,
        agents: Vec<AgentState>,
    ) -> Result<GameState, EngineError> {
        params.validate()?;
        if knowledge.radius() != params.knowledge_radius {
            return Err(EngineError::TableMismatch {
                expected: params.knowledge_radius,
                got: knowledge.radius(),
            });
        }
        if influence.radius() != params.influence_radius {
            return Err(EngineError::TableMismatch {
                expected: params.influence_radius,
                got: influence.radius(),
            });
        }
        if agents.len() != graph.len() || knowledge.len() != graph.len() || influence.len() != graph.len() {
            return Err(EngineError::AgentCount {
                expected: graph.len(),
                got: agents.len(),
            });
        }
        let mut counts = vec![0; params.num_opinions];
        for (node, agent) in agents.iter().enumerate() {
            if agent.opinion.index() >= params.num_opinions {
                return Err(EngineError::OpinionOutOfRange {
                    node,
                    opinion: agent.opinion,
                    k: params.num_opinions,
                });
            }
            counts[agent.opinion.index()] += 1;
        }
        Ok(GameState {
            graph,
            knowledge,
            influence,
            params,
            agents,
            counts,
            round: 0,
            minted: 0.0,
            settled: false,
        })
    }

    /// Builds the neighborhood tables for `params` and assembles the game.
    pub fn prepare(graph: Arc<Graph>, params: GameParams, agents: Vec<AgentState>) -> Result<GameState, EngineError> {
        params.validate()?;
        let knowledge = Arc::new(NeighborhoodTable::build(&graph, params.knowledge_radius)?);
        let influence = if params.influence_radius == params.knowledge_radius {
            Arc::clone(&knowledge)
        } else {
            Arc::new(NeighborhoodTable::build(&graph, params.influence_radius)?)
        };
        GameState::new(graph, knowledge, influence, params, agents)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn opinion(&self, node: NodeId) -> OpinionId {
        self.agents[node].opinion
    }

    pub fn opinions(&self) -> Vec<OpinionId> {
        self.agents.iter().map(|a| a.opinion).collect()
    }

    /// Holders per opinion, maintained incrementally.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Number of interactions played so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.settled || self.round >= self.params.rounds
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    /// Total currency paid out through accepted offers (net of speaker
    /// debits).
    pub fn minted(&self) -> f64 {
        self.minted
    }

    pub fn knowledge_ball(&self, node: NodeId) -> &[NodeId] {
        self.knowledge.ball(node)
    }

    pub fn influence_ball(&self, node: NodeId) -> &[NodeId] {
        self.influence.ball(node)
    }

    /// Plurality opinion over `agent`'s knowledge ball plus the agent itself.
    ///
    /// `hypothetical` pretends one node holds a different opinion; it only
    /// matters when that node is the agent or lies inside its knowledge
    /// ball.
    pub fn local_majority(&self, agent: NodeId, hypothetical: Option<(NodeId, OpinionId)>) -> OpinionId {
        let opinion_of = |node: NodeId| match hypothetical {
            Some((h, o)) if h == node => o,
            _ => self.agents[node].opinion,
        };
        let mut counts = [0u32; MAX_OPINIONS];
        let counts = &mut counts[..self.params.num_opinions];
        let own = opinion_of(agent);
        counts[own.index()] += 1;
        for &v in self.knowledge.ball(agent) {
            counts[opinion_of(v).index()] += 1;
        }
        plurality(counts, own)
    }

    /// Offer the speaker makes to the listener.
    pub fn speaker_offer(&self, speaker: NodeId, listener: NodeId) -> f64 {
        let s = &self.agents[speaker];
        if s.opinion == self.agents[listener].opinion {
            return 0.0;
        }
        let now = self.local_majority(speaker, None);
        let converted = self.local_majority(speaker, Some((listener, s.opinion)));
        let reward = self.params.reward;
        if forecast(s.opinion, converted, s.budget, reward) > forecast(s.opinion, now, s.budget, reward) {
            self.params.offer_amounts[s.opinion.index()]
        } else {
            0.0
        }
    }

    /// The listener's expected gain from accepting `offer` and adopting the
    /// speaker's opinion.
    pub fn delta_i(&self, speaker: NodeId, listener: NodeId, offer: f64) -> f64 {
        let speaker_opinion = self.agents[speaker].opinion;
        let l = &self.agents[listener];
        let reward = self.params.reward;
        let now = self.local_majority(listener, None);
        let converted = self.local_majority(listener, Some((listener, speaker_opinion)));
        let status_quo = match self.params.baseline {
            BaselineVariant::AsWritten => forecast(speaker_opinion, now, l.budget, reward),
            BaselineVariant::ListenerOwnOpinion => forecast(l.opinion, now, l.budget, reward),
        };
        forecast(speaker_opinion, converted, l.budget, reward) - l.change_cost + offer - status_quo
    }

    /// Plays one round.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<InteractionRecord, EngineError> {
        if self.is_finished() {
            return Err(EngineError::GameOver(self.round));
        }
        let n = self.agents.len();
        let speaker = rng.gen_range(0..n);
        let ball = self.influence.ball(speaker);
        let listener = ball[rng.gen_range(0..ball.len())];
        let u: f64 = rng.gen();
        Ok(self.interact(speaker, listener, u))
    }

    /// Resolves one interaction with an externally supplied uniform draw
    /// `u` in `[0, 1)`. The listener accepts iff `u < p_accept`.
    pub fn interact(&mut self, speaker: NodeId, listener: NodeId, u: f64) -> InteractionRecord {
        let speaker_opinion = self.agents[speaker].opinion;
        let listener_opinion_before = self.agents[listener].opinion;
        let offer = self.speaker_offer(speaker, listener);
        let delta_i = self.delta_i(speaker, listener, offer);
        let p_accept = acceptance_probability(delta_i, self.agents[listener].committed);
        let accepted = u < p_accept;
        if accepted {
            let l = &mut self.agents[listener];
            l.budget += offer;
            self.minted += offer;
            if l.opinion != speaker_opinion {
                self.counts[l.opinion.index()] -= 1;
                self.counts[speaker_opinion.index()] += 1;
                l.opinion = speaker_opinion;
            }
            if self.params.debit_speaker {
                self.agents[speaker].budget -= offer;
                self.minted -= offer;
            }
        }
        self.round += 1;
        let attribution = if speaker_opinion == listener_opinion_before {
            Attribution::SameOpinion
        } else if !accepted {
            Attribution::Rejected
        } else if offer > 0.0 {
            Attribution::Influence
        } else {
            Attribution::Homophily
        };
        InteractionRecord {
            round: self.round,
            speaker,
            listener,
            speaker_opinion,
            listener_opinion_before,
            offer,
            delta_i,
            p_accept,
            accepted,
            attribution,
        }
    }

    /// The opinion held by every agent, if there is one.
    pub fn absorbed(&self) -> Option<OpinionId> {
        let n = self.agents.len();
        self.counts.iter().position(|&c| c == n).map(|i| OpinionId(i as u8))
    }

    /// The opinion with strictly more holders than any other.
    pub fn global_majority(&self) -> Option<OpinionId> {
        let best = *self.counts.iter().max()?;
        let mut winners = self.counts.iter().enumerate().filter(|(_, &c)| c == best);
        match (winners.next(), winners.next()) {
            (Some((i, _)), None) => Some(OpinionId(i as u8)),
            _ => None,
        }
    }

    /// Pays the reward to every holder of the strict global majority and
    /// closes the game. Calling it again changes nothing.
    pub fn settle_rewards(&mut self) -> Vec<f64> {
        if !self.settled {
            self.settled = true;
            if let Some(winner) = self.global_majority() {
                let reward = self.params.reward;
                for agent in self.agents.iter_mut().filter(|a| a.opinion == winner) {
                    agent.budget += reward;
                }
            }
        }
        self.agents.iter().map(|a| a.budget).collect()
    }

    /// Checks the bookkeeping invariants: incremental counts equal a recount
    /// and, before settlement, total budget equals the initial endowment
    /// plus everything minted.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut recount = vec![0; self.params.num_opinions];
        for a in &self.agents {
            recount[a.opinion.index()] += 1;
        }
        if recount != self.counts {
            return Err(format!("counts {:?} differ from recount {:?}", self.counts, recount));
        }
        if !self.settled {
            let total: f64 = self.agents.iter().map(|a| a.budget).sum();
            let expected = self.agents.len() as f64 * self.params.initial_budget + self.minted;
            if (total - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return Err(format!("budget sum {total} differs from expected {expected}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
