//! Early-terminating 3-colouring of paths and cycles in the LOCAL model.
//!
//! Each node first runs a Cole–Vishkin style reduction on its "phase 1"
//! colour until it or a neighbour lands in `0..=51` (or is a local extremum),
//! then waits for its token slot in a 56-round cycle and picks the smallest
//! of `{0,1,2}` not already taken by a neighbour.

use std::fmt;

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::numerics::{cv_choice, log_star, Natural, NumericsError};

/// Largest phase-1 colour that counts as settled.
pub const SETTLED_MAX: u32 = 51;
/// Length of the token cycle in the final phase.
pub const TOKEN_CYCLE: u64 = 56;
/// Proven per-node bound: a node terminates within `log*(id) + TERMINATION_SLACK` rounds.
pub const TERMINATION_SLACK: u64 = 59;
/// Default `run_local` budget is `log*(max label) + DEFAULT_BUDGET_SLACK`.
pub const DEFAULT_BUDGET_SLACK: u64 = 70;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Phase1Colour {
    Int(Natural),
    Lmin,
    Lmax,
    Pdone,
    Cdone,
}

impl Phase1Colour {
    /// Integer encoding: sentinels map to `-4..=-1`.
    pub fn code(&self) -> Option<i64> {
        match self {
            Phase1Colour::Lmin => Some(-4),
            Phase1Colour::Lmax => Some(-3),
            Phase1Colour::Pdone => Some(-2),
            Phase1Colour::Cdone => Some(-1),
            Phase1Colour::Int(n) => n.to_i64(),
        }
    }

    pub fn is_sentinel(&self) -> bool {
        !matches!(self, Phase1Colour::Int(_))
    }

    /// Integer colour in `0..=51`.
    pub fn is_settled_int(&self) -> bool {
        match self {
            Phase1Colour::Int(n) => n <= &Natural::from(SETTLED_MAX),
            _ => false,
        }
    }

    /// Token value at which a node holding this colour picks its final colour.
    /// `None` for integers above 51, which never reach the final phase.
    pub fn token(&self) -> Option<u64> {
        match self {
            Phase1Colour::Int(n) => n.to_u64().filter(|&v| v <= u64::from(SETTLED_MAX)),
            Phase1Colour::Lmin => Some(52),
            Phase1Colour::Lmax => Some(53),
            Phase1Colour::Pdone => Some(54),
            Phase1Colour::Cdone => Some(55),
        }
    }
}

impl fmt::Display for Phase1Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase1Colour::Int(n) => write!(f, "{n}"),
            Phase1Colour::Lmin => f.write_str("Lmin"),
            Phase1Colour::Lmax => f.write_str("Lmax"),
            Phase1Colour::Pdone => f.write_str("Pdone"),
            Phase1Colour::Cdone => f.write_str("Cdone"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Id(Natural),
    P1(Phase1Colour),
    Final(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Error)]
pub enum ColouringError {
    #[error("a path needs at least 2 nodes and a cycle at least 3, got {0}")]
    TooFewNodes(usize),
    #[error("label {0} is below 2")]
    LabelTooSmall(Natural),
    #[error("label {0} appears more than once")]
    DuplicateLabel(Natural),
    #[error("node {node} did not terminate within {limit} rounds")]
    NonTermination { node: usize, limit: u64 },
    #[error("adjacent nodes {left} and {right} hold the same phase-1 colour in round {round}")]
    NeighbourClash { left: usize, right: usize, round: u64 },
    #[error("adjacent nodes {left} and {right} chose the same final colour")]
    ImproperColouring { left: usize, right: usize },
    #[error("window of {len} labels leaves fewer than {need} nodes on a side of index {centre}")]
    WindowTooSmall { len: usize, centre: usize, need: u64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// State of one node running the algorithm. Messages are ingested with
/// [`NodeState::deliver`] before the next [`NodeState::act`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub my_id: Natural,
    pub id_a: Option<Natural>,
    pub id_b: Option<Natural>,
    has_a: bool,
    has_b: bool,
    pub my_phase1_col: Option<Phase1Colour>,
    pub parent: Option<Side>,
    pub a_col_p1: Option<Phase1Colour>,
    pub b_col_p1: Option<Phase1Colour>,
    pub a_col_final: Option<u8>,
    pub b_col_final: Option<u8>,
    pub do_phase1: bool,
    pub my_final_col: Option<u8>,
    pub terminated: bool,
    token: Option<u64>,
}

impl NodeState {
    /// `has_a` / `has_b` say whether the node has a neighbour on that side.
    pub fn new(id: Natural, has_a: bool, has_b: bool) -> Self {
        NodeState {
            my_id: id,
            id_a: None,
            id_b: None,
            has_a,
            has_b,
            my_phase1_col: None,
            parent: None,
            a_col_p1: None,
            b_col_p1: None,
            a_col_final: None,
            b_col_final: None,
            do_phase1: false,
            my_final_col: None,
            terminated: false,
            token: None,
        }
    }

    pub fn child(&self) -> Option<Side> {
        self.parent.map(|p| match p {
            Side::A => Side::B,
            Side::B => Side::A,
        })
    }

    /// Stores a message received from the neighbour on `from`.
    pub fn deliver(&mut self, from: Side, msg: &Message) {
        match (from, msg) {
            (Side::A, Message::Id(id)) => self.id_a = Some(id.clone()),
            (Side::B, Message::Id(id)) => self.id_b = Some(id.clone()),
            (Side::A, Message::P1(c)) => self.a_col_p1 = Some(c.clone()),
            (Side::B, Message::P1(c)) => self.b_col_p1 = Some(c.clone()),
            (Side::A, Message::Final(c)) => self.a_col_final = Some(*c),
            (Side::B, Message::Final(c)) => self.b_col_final = Some(*c),
        }
    }

    /// Runs one round at local clock `clock` and returns the message broadcast
    /// to both neighbours, if any.
    pub fn act(&mut self, clock: u64) -> Result<Option<Message>, NumericsError> {
        debug_assert!(!self.terminated);
        if clock == 1 {
            return Ok(Some(Message::Id(self.my_id.clone())));
        }
        if clock == 2 {
            return Ok(Some(Message::P1(self.phase0())));
        }
        if self.do_phase1 {
            let current = match &self.my_phase1_col {
                Some(Phase1Colour::Int(n)) => n.clone(),
                _ => unreachable!("phase 1 only runs on integer colours"),
            };
            let (parent_col, child_col) = match self.parent {
                Some(Side::A) => (&self.a_col_p1, &self.b_col_p1),
                _ => (&self.b_col_p1, &self.a_col_p1),
            };
            let parent_col = parent_col.as_ref().expect("parent sent a phase-1 colour in round 2");
            let child_col = child_col.as_ref().expect("child sent a phase-1 colour in round 2");
            let next = choose_new_phase1_colour(&current, parent_col, child_col)?;
            self.do_phase1 = !(next.is_settled_int() || next == Phase1Colour::Pdone || next == Phase1Colour::Cdone);
            if !self.do_phase1 {
                self.token = next.token();
            }
            self.my_phase1_col = Some(next.clone());
            return Ok(Some(Message::P1(next)));
        }
        if Some(clock % TOKEN_CYCLE) == self.token {
            let taken = [self.a_col_final, self.b_col_final];
            let colour = (0u8..3).find(|c| !taken.contains(&Some(*c))).expect("two neighbours leave a free colour");
            self.my_final_col = Some(colour);
            self.terminated = true;
            return Ok(Some(Message::Final(colour)));
        }
        Ok(None)
    }

    fn phase0(&mut self) -> Phase1Colour {
        let me = &self.my_id;
        // A missing neighbour satisfies both comparisons, so endpoints are
        // always local extrema.
        let lt = |other: &Option<Natural>, present: bool| !present || other.as_ref().is_some_and(|o| me < o);
        let gt = |other: &Option<Natural>, present: bool| !present || other.as_ref().is_some_and(|o| me > o);
        let colour = if lt(&self.id_a, self.has_a) && lt(&self.id_b, self.has_b) {
            Phase1Colour::Lmin
        } else if gt(&self.id_a, self.has_a) && gt(&self.id_b, self.has_b) {
            Phase1Colour::Lmax
        } else {
            // Neither extremum: IDs increase towards the child.
            let a_smaller = self.id_a.as_ref().is_some_and(|a| a < me);
            self.parent = Some(if a_smaller { Side::A } else { Side::B });
            Phase1Colour::Int(me.clone())
        };
        self.do_phase1 = !(colour.is_settled_int() || colour == Phase1Colour::Lmin || colour == Phase1Colour::Lmax);
        if !self.do_phase1 {
            self.token = colour.token();
        }
        self.my_phase1_col = Some(colour.clone());
        colour
    }
}

/// One synchronous transition with explicit inboxes (messages sent by the
/// neighbours in the previous round). Returns the new state and the messages
/// for side A and side B.
pub fn node_step(
    state: &NodeState,
    inbox_a: Option<&Message>,
    inbox_b: Option<&Message>,
    clock: u64,
) -> Result<(NodeState, Option<Message>, Option<Message>), NumericsError> {
    let mut next = state.clone();
    if let Some(m) = inbox_a {
        next.deliver(Side::A, m);
    }
    if let Some(m) = inbox_b {
        next.deliver(Side::B, m);
    }
    let out = next.act(clock)?;
    Ok((next, out.clone(), out))
}

pub fn choose_new_phase1_colour(
    my: &Natural,
    parent_col: &Phase1Colour,
    child_col: &Phase1Colour,
) -> Result<Phase1Colour, NumericsError> {
    if parent_col.is_settled_int() {
        return Ok(Phase1Colour::Pdone);
    }
    if child_col.is_settled_int() {
        return Ok(Phase1Colour::Cdone);
    }
    let other = match parent_col {
        Phase1Colour::Int(p) => p.clone(),
        _ => Natural::zero(),
    };
    Ok(Phase1Colour::Int(cv_choice(my, &other)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Path,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColouringResult {
    pub colours: Vec<u8>,
    pub termination_rounds: Vec<u64>,
}

fn validate(labels: &[Natural], topology: Topology) -> Result<(), ColouringError> {
    let min_nodes = match topology {
        Topology::Path => 2,
        Topology::Cycle => 3,
    };
    if labels.len() < min_nodes {
        return Err(ColouringError::TooFewNodes(labels.len()));
    }
    let two = Natural::from(2u32);
    if let Some(l) = labels.iter().find(|l| **l < two) {
        return Err(ColouringError::LabelTooSmall(l.clone()));
    }
    let mut sorted: Vec<&Natural> = labels.iter().collect();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(ColouringError::DuplicateLabel(w[0].clone()));
    }
    Ok(())
}

pub fn default_max_rounds(labels: &[Natural]) -> u64 {
    let top = labels.iter().map(log_star).max().unwrap_or(0);
    u64::from(top) + DEFAULT_BUDGET_SLACK
}

struct Network {
    nodes: Vec<NodeState>,
    cycle: bool,
    terminated_at: Vec<u64>,
}

impl Network {
    fn new(labels: &[Natural], topology: Topology) -> Self {
        let n = labels.len();
        let cycle = topology == Topology::Cycle;
        let nodes = labels
            .iter()
            .enumerate()
            .map(|(i, l)| NodeState::new(l.clone(), cycle || i > 0, cycle || i + 1 < n))
            .collect();
        Network { nodes, cycle, terminated_at: vec![0; n] }
    }

    // Side A of node i is i-1, side B is i+1.
    fn neighbour(&self, i: usize, side: Side) -> Option<usize> {
        let n = self.nodes.len();
        match side {
            Side::A if i > 0 => Some(i - 1),
            Side::A if self.cycle => Some(n - 1),
            Side::B if i + 1 < n => Some(i + 1),
            Side::B if self.cycle => Some(0),
            _ => None,
        }
    }

    /// Runs round `clock`; returns whether any phase-1 colour changed.
    fn round(&mut self, clock: u64, outbox: &mut [Option<Message>]) -> Result<bool, ColouringError> {
        let mut changed = false;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            outbox[i] = None;
            if node.terminated {
                continue;
            }
            let msg = node.act(clock)?;
            if node.terminated {
                self.terminated_at[i] = clock;
            }
            changed |= matches!(msg, Some(Message::P1(_)));
            outbox[i] = msg;
        }
        for i in 0..self.nodes.len() {
            let Some(msg) = outbox[i].as_ref() else { continue };
            // The neighbour on my B side sees me on its A side and vice versa.
            for (side, their_side) in [(Side::A, Side::B), (Side::B, Side::A)] {
                if let Some(j) = self.neighbour(i, side) {
                    if !self.nodes[j].terminated {
                        self.nodes[j].deliver(their_side, msg);
                    }
                }
            }
        }
        Ok(changed)
    }

    fn check_phase1_distinct(&self, round: u64) -> Result<(), ColouringError> {
        let n = self.nodes.len();
        let edges = if self.cycle { n } else { n - 1 };
        for left in 0..edges {
            let right = (left + 1) % n;
            if self.nodes[left].my_phase1_col == self.nodes[right].my_phase1_col {
                return Err(ColouringError::NeighbourClash { left, right, round });
            }
        }
        Ok(())
    }
}

/// Runs the algorithm in lockstep on a path or cycle of the given labels.
///
/// Besides the final result this checks, every round from round 2 on, that
/// adjacent phase-1 colours differ, and at the end that the colouring is
/// proper.
pub fn run_local(labels: &[Natural], topology: Topology, max_rounds: u64) -> Result<ColouringResult, ColouringError> {
    validate(labels, topology)?;
    let mut net = Network::new(labels, topology);
    let mut outbox = vec![None; labels.len()];
    let mut remaining = labels.len();
    let mut clock = 0;
    while remaining > 0 {
        clock += 1;
        if clock > max_rounds {
            let node = net.nodes.iter().position(|s| !s.terminated).expect("some node is live");
            return Err(ColouringError::NonTermination { node, limit: max_rounds });
        }
        let changed = net.round(clock, &mut outbox)?;
        if changed {
            net.check_phase1_distinct(clock)?;
        }
        remaining = net.nodes.iter().filter(|s| !s.terminated).count();
    }
    let colours: Vec<u8> = net.nodes.iter().map(|s| s.my_final_col.expect("terminated")).collect();
    let n = colours.len();
    let edges = if net.cycle { n } else { n - 1 };
    for left in 0..edges {
        let right = (left + 1) % n;
        if colours[left] == colours[right] {
            return Err(ColouringError::ImproperColouring { left, right });
        }
    }
    Ok(ColouringResult { colours, termination_rounds: net.terminated_at })
}

/// Colour of `window[centre]` when the algorithm runs on the window as a
/// path. The centre needs at least `kappa * log*(label)` nodes on each side.
pub fn colour_in_window(window: &[Natural], centre: usize, kappa: u64) -> Result<u8, ColouringError> {
    validate(window, Topology::Path)?;
    let need = kappa * u64::from(log_star(&window[centre.min(window.len() - 1)]));
    if centre >= window.len() || (centre as u64) < need || ((window.len() - 1 - centre) as u64) < need {
        return Err(ColouringError::WindowTooSmall { len: window.len(), centre, need });
    }
    let max_rounds = default_max_rounds(window);
    let mut net = Network::new(window, Topology::Path);
    let mut outbox = vec![None; window.len()];
    for clock in 1..=max_rounds {
        net.round(clock, &mut outbox)?;
        if let Some(c) = net.nodes[centre].my_final_col {
            return Ok(c);
        }
    }
    Err(ColouringError::NonTermination { node: centre, limit: max_rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tower;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nats(v: &[u64]) -> Vec<Natural> {
        v.iter().map(|&x| Natural::from(x)).collect()
    }

    fn int(v: u64) -> Phase1Colour {
        Phase1Colour::Int(Natural::from(v))
    }

    #[test]
    fn sentinel_codes() {
        let codes: Vec<_> = [Phase1Colour::Lmin, Phase1Colour::Lmax, Phase1Colour::Pdone, Phase1Colour::Cdone]
            .iter()
            .map(|c| c.code().unwrap())
            .collect();
        assert_eq!(codes, vec![-4, -3, -2, -1]);
        assert!(Phase1Colour::Lmin.is_sentinel());
        assert!(!int(7).is_sentinel());
    }

    #[test]
    fn choose_examples() {
        let my = Natural::from(100u32);
        assert_eq!(choose_new_phase1_colour(&my, &int(7), &int(200)).unwrap(), Phase1Colour::Pdone);
        assert_eq!(choose_new_phase1_colour(&my, &int(200), &int(51)).unwrap(), Phase1Colour::Cdone);
        let with_zero = choose_new_phase1_colour(&my, &Phase1Colour::Lmin, &int(200)).unwrap();
        assert_eq!(with_zero, Phase1Colour::Int(cv_choice(&my, &Natural::zero()).unwrap()));
        assert!(with_zero.is_settled_int() && with_zero.token().unwrap() <= 11);
        let plain = choose_new_phase1_colour(&my, &int(200), &int(300)).unwrap();
        assert_eq!(plain, Phase1Colour::Int(cv_choice(&my, &Natural::from(200u32)).unwrap()));
    }

    #[test]
    fn two_node_path_trace() {
        let labels = nats(&[2, 3]);
        let mut a = NodeState::new(labels[0].clone(), false, true);
        let mut b = NodeState::new(labels[1].clone(), true, false);
        let (na, _, ma) = node_step(&a, None, None, 1).unwrap();
        let (nb, mb, _) = node_step(&b, None, None, 1).unwrap();
        a = na;
        b = nb;
        let (na, _, ma2) = node_step(&a, None, mb.as_ref(), 2).unwrap();
        let (nb, mb2, _) = node_step(&b, ma.as_ref(), None, 2).unwrap();
        assert_eq!(na.my_phase1_col, Some(Phase1Colour::Lmin));
        assert_eq!(nb.my_phase1_col, Some(Phase1Colour::Lmax));
        assert!(!na.do_phase1 && !nb.do_phase1);
        assert_eq!(ma2, Some(Message::P1(Phase1Colour::Lmin)));
        assert_eq!(mb2, Some(Message::P1(Phase1Colour::Lmax)));

        let res = run_local(&labels, Topology::Path, 100).unwrap();
        assert_eq!(res.colours, vec![0, 1]);
        assert_eq!(res.termination_rounds, vec![52, 53]);
    }

    #[test]
    fn monotone_interior_node_adopts_pdone() {
        // Parent already settled in 0..=51.
        let mut s = NodeState::new(Natural::from(500u32), true, true);
        s.deliver(Side::A, &Message::Id(Natural::from(40u32)));
        s.deliver(Side::B, &Message::Id(Natural::from(900u32)));
        s.act(1).unwrap();
        s.act(2).unwrap();
        assert_eq!(s.parent, Some(Side::A));
        assert_eq!(s.child(), Some(Side::B));
        assert!(s.do_phase1);
        s.deliver(Side::A, &Message::P1(int(40)));
        s.deliver(Side::B, &Message::P1(int(900)));
        assert_eq!(s.act(3).unwrap(), Some(Message::P1(Phase1Colour::Pdone)));
        assert!(!s.do_phase1);
    }

    #[test]
    fn random_cycle_is_properly_coloured() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut labels: Vec<u64> = Vec::new();
        while labels.len() < 100 {
            let l = rng.gen_range(2..u64::MAX);
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        let labels = nats(&labels);
        let res = run_local(&labels, Topology::Cycle, default_max_rounds(&labels)).unwrap();
        for i in 0..100 {
            assert_ne!(res.colours[i], res.colours[(i + 1) % 100]);
            assert!(res.termination_rounds[i] <= u64::from(log_star(&labels[i])) + TERMINATION_SLACK);
        }
    }

    #[test]
    fn big_labels_finish_within_64_rounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let top = Natural::from(1u32) << 64u32;
        let mut labels: Vec<Natural> = (0..300).map(|_| Natural::from(rng.gen::<u64>()) + 2u32).collect();
        labels.push(top);
        labels.sort();
        labels.dedup();
        let res = run_local(&labels, Topology::Path, 200).unwrap();
        assert!(res.termination_rounds.iter().all(|&r| r <= 64));
    }

    #[test]
    fn sorted_path_exercises_all_phases() {
        let labels: Vec<Natural> = (0..400u64).map(|i| Natural::from(1000 + 7 * i)).collect();
        let res = run_local(&labels, Topology::Path, default_max_rounds(&labels)).unwrap();
        assert_eq!(res.colours.len(), 400);
        // A descending neighbourhood takes the other parent direction.
        let rev: Vec<Natural> = labels.iter().rev().cloned().collect();
        let res_rev = run_local(&rev, Topology::Path, default_max_rounds(&rev)).unwrap();
        assert_eq!(res_rev.colours.len(), 400);
    }

    #[test]
    fn tower_sized_labels() {
        let base = tower(5).unwrap();
        let labels: Vec<Natural> = (0..30u64).map(|i| &base + (i * 7919) % 1000).collect();
        let res = run_local(&labels, Topology::Cycle, default_max_rounds(&labels)).unwrap();
        for (l, r) in labels.iter().zip(&res.termination_rounds) {
            assert!(*r <= u64::from(log_star(l)) + TERMINATION_SLACK);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(run_local(&nats(&[5]), Topology::Path, 10), Err(ColouringError::TooFewNodes(1))));
        assert!(matches!(run_local(&nats(&[5, 6]), Topology::Cycle, 10), Err(ColouringError::TooFewNodes(2))));
        assert!(matches!(run_local(&nats(&[5, 1]), Topology::Path, 10), Err(ColouringError::LabelTooSmall(_))));
        assert!(matches!(run_local(&nats(&[5, 6, 5]), Topology::Path, 90), Err(ColouringError::DuplicateLabel(_))));
        assert!(matches!(
            run_local(&nats(&[2, 3]), Topology::Path, 52),
            Err(ColouringError::NonTermination { node: 1, limit: 52 })
        ));
    }

    #[test]
    fn window_matches_run_local() {
        assert_eq!(colour_in_window(&nats(&[2, 3]), 0, 0).unwrap(), 0);
        let labels: Vec<Natural> = (0..25u64).map(|i| Natural::from(3 + (i * 37) % 101)).collect();
        let full = run_local(&labels, Topology::Path, 200).unwrap();
        for c in 0..labels.len() {
            assert_eq!(colour_in_window(&labels, c, 0).unwrap(), full.colours[c]);
        }
        assert!(matches!(colour_in_window(&labels, 3, 2), Err(ColouringError::WindowTooSmall { .. })));
    }

    #[test]
    fn deterministic() {
        let labels: Vec<Natural> = (0..200u64).map(|i| Natural::from(2 + (i * 7_777_777) % 1_000_003)).collect();
        let a = run_local(&labels, Topology::Cycle, 200).unwrap();
        let b = run_local(&labels, Topology::Cycle, 200).unwrap();
        assert_eq!(a, b);
    }
}
