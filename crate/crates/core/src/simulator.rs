//! Synchronous two-agent scheduler.
//!
//! Rounds are global and 1-indexed. In each round every awake agent observes
//! the label under it and its local clock, then both moves apply at once.
//! The agents meet when their positions are equal at the end of a round;
//! swapping places across an edge goes unnoticed.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::agents::{Agent, AgentError, AgentMove, Algorithm, CanonKnowledge, Direction, Observation, Side, Stage};
use crate::line::{LineInstance, Orientation, Position};
use crate::numerics::Natural;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Canon,
    KnownD,
    UnknownD,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Canon => "canon",
            AlgorithmKind::KnownD => "knownD",
            AlgorithmKind::UnknownD => "noD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canon" | "canonical" => Some(AlgorithmKind::Canon),
            "knownd" | "known-d" | "known" => Some(AlgorithmKind::KnownD),
            "nod" | "unknownd" | "unknown-d" | "unknown" => Some(AlgorithmKind::UnknownD),
            _ => None,
        }
    }
}

/// Both agents run the same program (`algorithm`); what differs is where
/// and when they start, and how their local frames are oriented.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub line: LineInstance,
    pub start_a: Position,
    pub start_b: Position,
    pub wake_a: u64,
    pub wake_b: u64,
    pub algorithm: AlgorithmKind,
    pub kappa: u64,
    /// Rounds simulated, counted from the earlier wake-up.
    pub max_rounds: u64,
}

impl Scenario {
    pub fn distance(&self) -> u64 {
        self.start_a.abs_diff(self.start_b)
    }

    pub fn delay(&self) -> u64 {
        self.wake_a.abs_diff(self.wake_b)
    }

    /// The same scenario with the roles of the two agents exchanged.
    pub fn swapped(&self) -> Scenario {
        let mut s = self.clone();
        std::mem::swap(&mut s.start_a, &mut s.start_b);
        std::mem::swap(&mut s.wake_a, &mut s.wake_b);
        std::mem::swap(&mut s.line.orientation_a, &mut s.line.orientation_b);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Met { global_round: u64, node: Position, elapsed: u64 },
    Timeout { limit: u64 },
}

impl Outcome {
    pub fn elapsed(&self) -> Option<u64> {
        match self {
            Outcome::Met { elapsed, .. } => Some(*elapsed),
            Outcome::Timeout { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub global_round: u64,
    pub pos_a: Position,
    pub pos_b: Position,
    /// `None` while asleep.
    pub move_a: Option<AgentMove>,
    pub move_b: Option<AgentMove>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("global_round,pos_a,pos_b,move_a,move_b\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.global_round,
                r.pos_a,
                r.pos_b,
                r.move_a.map_or("", AgentMove::as_str),
                r.move_b.map_or("", AgentMove::as_str)
            );
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("agent {agent}: {source}")]
    Agent {
        agent: char,
        #[source]
        source: AgentError,
    },
}

/// Memory cap for the per-agent label windows. Tower-sized labels are
/// recomputed on demand once this is reached.
const CACHE_BYTES: u64 = 64 << 20;

/// Labels around one agent. Agents move one step at a time, so the window
/// only ever grows by one position at either end.
struct LabelCache<'l> {
    line: &'l LineInstance,
    lo: Position,
    labels: VecDeque<Natural>,
    bytes: u64,
    scratch: Natural,
}

impl<'l> LabelCache<'l> {
    fn new(line: &'l LineInstance, at: Position) -> Self {
        let first = line.label_at(at);
        let bytes = first.bits() / 8 + 8;
        LabelCache { line, lo: at, labels: VecDeque::from([first]), bytes, scratch: Natural::default() }
    }

    fn get(&mut self, pos: Position) -> &Natural {
        let hi = self.lo + self.labels.len() as i64;
        if (self.lo..hi).contains(&pos) {
            return &self.labels[(pos - self.lo) as usize];
        }
        let label = self.line.label_at(pos);
        if self.bytes < CACHE_BYTES && (pos == self.lo - 1 || pos == hi) {
            self.bytes += label.bits() / 8 + 8;
            if pos == hi {
                self.labels.push_back(label);
                return self.labels.back().expect("just pushed");
            }
            self.labels.push_front(label);
            self.lo -= 1;
            return self.labels.front().expect("just pushed");
        }
        self.scratch = label;
        &self.scratch
    }
}

/// What a canonical agent starting at `start` with the given frame knows.
pub fn canon_knowledge(start: Position, orientation: Orientation) -> CanonKnowledge {
    let side = if start >= 0 { Side::AtOrRightOfO } else { Side::LeftOfO };
    // On O itself, "towards O" means towards the label-2 node at -1.
    let global = if start < 0 { 1 } else { -1 };
    let direction_to_o = if global * orientation.sign() > 0 { Direction::Right } else { Direction::Left };
    CanonKnowledge { dist_to_o: start.unsigned_abs(), side, direction_to_o }
}

fn agent_algorithm(kind: AlgorithmKind, start: Position, orientation: Orientation, d: u64) -> Algorithm {
    match kind {
        AlgorithmKind::Canon => Algorithm::Canon(canon_knowledge(start, orientation)),
        AlgorithmKind::KnownD => Algorithm::KnownD { distance: d },
        AlgorithmKind::UnknownD => Algorithm::UnknownD,
    }
}

pub fn validate(s: &Scenario) -> Result<(), SimError> {
    if s.start_a == s.start_b {
        return Err(SimError::Config("agents must start on different nodes (D >= 1)".into()));
    }
    if s.wake_a == 0 || s.wake_b == 0 {
        return Err(SimError::Config("wake rounds are 1-indexed".into()));
    }
    if s.kappa == 0 {
        return Err(SimError::Config("kappa must be at least 1".into()));
    }
    match (s.algorithm, s.line.is_canonical()) {
        (AlgorithmKind::Canon, false) => {
            Err(SimError::Config("the canonical algorithm needs the canonical line".into()))
        }
        (AlgorithmKind::KnownD | AlgorithmKind::UnknownD, true) => Err(SimError::Config(
            "the canonical line has label 1; use a generator with labels >= 2".into(),
        )),
        _ => Ok(()),
    }
}

struct Runner<'l> {
    s: &'l Scenario,
    agents: [Agent; 2],
    caches: [LabelCache<'l>; 2],
    pos: [Position; 2],
    wake: [u64; 2],
    sign: [i64; 2],
    round: u64,
    first: u64,
}

impl<'l> Runner<'l> {
    fn new(s: &'l Scenario) -> Result<Self, SimError> {
        validate(s)?;
        let d = s.distance();
        let mk = |start, orientation, tag| {
            Agent::new(agent_algorithm(s.algorithm, start, orientation, d), s.kappa)
                .map_err(|source| SimError::Agent { agent: tag, source })
        };
        let agents = [mk(s.start_a, s.line.orientation_a, 'a')?, mk(s.start_b, s.line.orientation_b, 'b')?];
        let first = s.wake_a.min(s.wake_b);
        Ok(Runner {
            s,
            agents,
            caches: [LabelCache::new(&s.line, s.start_a), LabelCache::new(&s.line, s.start_b)],
            pos: [s.start_a, s.start_b],
            wake: [s.wake_a, s.wake_b],
            sign: [s.line.orientation_a.sign(), s.line.orientation_b.sign()],
            round: first - 1,
            first,
        })
    }

    /// Rounds simulated so far.
    fn rounds_done(&self) -> u64 {
        self.round + 1 - self.first
    }

    fn done(&self) -> bool {
        self.rounds_done() >= self.s.max_rounds
    }

    fn step(&mut self) -> Result<[Option<AgentMove>; 2], SimError> {
        self.round += 1;
        let mut moves = [None, None];
        for i in 0..2 {
            if self.round < self.wake[i] {
                continue;
            }
            let label = self.caches[i].get(self.pos[i]);
            let obs = Observation { current_label: label, local_clock: self.round - self.wake[i] + 1 };
            let mv = self.agents[i]
                .step(obs)
                .map_err(|source| SimError::Agent { agent: if i == 0 { 'a' } else { 'b' }, source })?;
            moves[i] = Some(mv);
        }
        for i in 0..2 {
            if let Some(mv) = moves[i] {
                self.pos[i] += mv.delta() * self.sign[i];
            }
        }
        Ok(moves)
    }

    fn met(&self) -> Option<Outcome> {
        (self.pos[0] == self.pos[1]).then(|| Outcome::Met {
            global_round: self.round,
            node: self.pos[0],
            elapsed: self.round - self.first + 1,
        })
    }

    /// Rounds from the next one on during which neither agent moves.
    fn idle_window(&self) -> u64 {
        let next = self.round + 1;
        let idle = |i: usize| {
            if next < self.wake[i] {
                self.wake[i] - next
            } else {
                self.agents[i].idle_rounds()
            }
        };
        let left = self.s.max_rounds - self.rounds_done().min(self.s.max_rounds);
        idle(0).min(idle(1)).min(left)
    }

    fn skip(&mut self, k: u64) -> Result<(), SimError> {
        let next = self.round + 1;
        for i in 0..2 {
            if next >= self.wake[i] {
                self.agents[i]
                    .skip_idle(k)
                    .map_err(|source| SimError::Agent { agent: if i == 0 { 'a' } else { 'b' }, source })?;
            }
        }
        self.round += k;
        Ok(())
    }
}

/// Runs round by round and records every round.
pub fn run_rendezvous(s: &Scenario) -> Result<(Outcome, Trace), SimError> {
    let mut r = Runner::new(s)?;
    let mut trace = Trace::default();
    if s.max_rounds == 0 {
        return Ok((Outcome::Timeout { limit: 0 }, trace));
    }
    loop {
        let [move_a, move_b] = r.step()?;
        trace.rows.push(TraceRow { global_round: r.round, pos_a: r.pos[0], pos_b: r.pos[1], move_a, move_b });
        if let Some(o) = r.met() {
            return Ok((o, trace));
        }
        if r.done() {
            return Ok((Outcome::Timeout { limit: s.max_rounds }, trace));
        }
    }
}

/// Same outcome as [`run_rendezvous`], without a trace, skipping stretches
/// where neither agent moves.
pub fn run_outcome(s: &Scenario) -> Result<Outcome, SimError> {
    let mut r = Runner::new(s)?;
    if s.max_rounds == 0 {
        return Ok(Outcome::Timeout { limit: 0 });
    }
    loop {
        let k = r.idle_window();
        if k > 0 {
            // Nobody moves, and the positions already differ.
            r.skip(k)?;
        } else {
            r.step()?;
            if let Some(o) = r.met() {
                return Ok(o);
            }
        }
        if r.done() {
            return Ok(Outcome::Timeout { limit: s.max_rounds });
        }
    }
}

/// Colour a Known-D agent starting at `start` computes in Stage 1, obtained
/// by actually walking the agent through its exploration sweep.
pub fn known_d_stage1_colour(
    line: &LineInstance,
    start: Position,
    orientation: Orientation,
    distance: u64,
    kappa: u64,
) -> Result<u8, SimError> {
    let tag = |source| SimError::Agent { agent: 'x', source };
    let mut agent = Agent::new(Algorithm::KnownD { distance }, kappa).map_err(tag)?;
    let mut cache = LabelCache::new(line, start);
    let mut pos = start;
    while !matches!(agent.stage(), Stage::KnownSearch { .. }) {
        let clock = agent.clock() + 1;
        let mv = agent.step(Observation { current_label: cache.get(pos), local_clock: clock }).map_err(tag)?;
        pos += mv.delta() * orientation.sign();
    }
    Ok(agent.computed_colour().expect("set when Stage 1 ends"))
}

/// Steps a lone Unknown-D agent from `start` and reports the round count at
/// the end of each phase `1..=phases`, without fast-forwarding.
pub fn unknown_d_phase_ends(
    line: &LineInstance,
    start: Position,
    kappa: u64,
    phases: u64,
) -> Result<Vec<u64>, SimError> {
    let tag = |source| SimError::Agent { agent: 'x', source };
    let mut agent = Agent::new(Algorithm::UnknownD, kappa).map_err(tag)?;
    let mut cache = LabelCache::new(line, start);
    let mut pos = start;
    let mut ends = Vec::with_capacity(phases as usize);
    while (ends.len() as u64) < phases {
        let clock = agent.clock() + 1;
        let mv = agent.step(Observation { current_label: cache.get(pos), local_clock: clock }).map_err(tag)?;
        pos += mv.delta();
        if agent.stage() == (Stage::Wait { phase: ends.len() as u64 + 2 }) {
            ends.push(agent.clock());
        }
    }
    Ok(ends)
}
