//! The three rendezvous programs as online state machines.
//!
//! An agent sees one [`Observation`] per round (the label under it and its
//! local clock) and answers with an [`AgentMove`] in its own frame. Every
//! schedule is a sequence of segments: a wait of some length, or a sweep of
//! radius `r` (right `r`, left `2r`, right `r`) that ends where it started.

use std::fmt;

use thiserror::Error;

use crate::colouring::{colour_in_window, ColouringError};
use crate::numerics::{log_star, Natural};

/// Canonical-line phase layout: blocks per phase.
pub const CANON_BLOCKS: u64 = 11;
/// The Unknown-D schedule has this many blocks per period.
pub const SCHEDULE_BITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentMove {
    Stay,
    Right,
    Left,
}

impl AgentMove {
    /// Signed displacement in the agent's local frame.
    pub fn delta(self) -> i64 {
        match self {
            AgentMove::Stay => 0,
            AgentMove::Right => 1,
            AgentMove::Left => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentMove::Stay => "S",
            AgentMove::Right => "R",
            AgentMove::Left => "L",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    fn as_move(self) -> AgentMove {
        match self {
            Direction::Right => AgentMove::Right,
            Direction::Left => AgentMove::Left,
        }
    }

    fn flip(self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    AtOrRightOfO,
    LeftOfO,
}

/// What a canonical-line agent knows about the label-1 node `O`.
///
/// `direction_to_o` is in the agent's local frame. An agent sitting on `O`
/// reads it as the direction of the label-2 neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonKnowledge {
    pub dist_to_o: u64,
    pub side: Side,
    pub direction_to_o: Direction,
}

impl CanonKnowledge {
    /// Local direction of increasing labels on the odd side.
    fn canonical_right(&self) -> Direction {
        match self.side {
            Side::AtOrRightOfO => self.direction_to_o.flip(),
            Side::LeftOfO => self.direction_to_o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Canon(CanonKnowledge),
    KnownD { distance: u64 },
    UnknownD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation<'a> {
    pub current_label: &'a Natural,
    pub local_clock: u64,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("known distance must be at least 1")]
    ZeroDistance,
    #[error("kappa must be at least 1")]
    ZeroKappa,
    #[error("canonical knowledge at distance 0 must say AtOrRightOfO")]
    BadCanonKnowledge,
    #[error("starting label {0} is below 2")]
    StartLabelTooSmall(Natural),
    #[error("expected local clock {expected}, got {got}")]
    ClockSkew { expected: u64, got: u64 },
    #[error("internal desync at relative position {pos}: {reason}")]
    InternalDesync { pos: i64, reason: String },
    #[error("colour computation failed: {0}")]
    Colouring(#[from] ColouringError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CanonColour {
    Red,
    Blue,
}

/// Colour of the starting node in canonical phase `phase`: segments of
/// `2^phase` nodes, the one holding `O` starts at `O` and is red.
pub fn canon_colour(dist: u64, side: Side, phase: u32) -> CanonColour {
    let width = 1u64.checked_shl(phase).unwrap_or(0);
    let index_mag = match (side, width) {
        (_, 0) => u64::from(side == Side::LeftOfO && dist > 0),
        (Side::AtOrRightOfO, w) => dist / w,
        (Side::LeftOfO, w) => dist.div_ceil(w),
    };
    if index_mag % 2 == 0 {
        CanonColour::Red
    } else {
        CanonColour::Blue
    }
}

/// The 9-bit search schedule for a colour, leftmost bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Schedule(pub [bool; SCHEDULE_BITS]);

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Two-bit MSB-first colour, each 0 written as `0011` and each 1 as `1100`,
/// followed by a final 1.
///
/// # Panics
/// If `c > 2`.
pub fn s_string(c: u8) -> Schedule {
    assert!(c <= 2, "colour {c} is outside 0..=2");
    let mut bits = [true; SCHEDULE_BITS];
    for (k, bit) in [c & 2 != 0, c & 1 != 0].into_iter().enumerate() {
        let pattern = if bit { [true, true, false, false] } else { [false, false, true, true] };
        bits[4 * k..4 * k + 4].copy_from_slice(&pattern);
    }
    Schedule(bits)
}

/// Rounds in Unknown-D phase `g`: `(72 * 2^d + 4g) * kappa * L`, `d = 1 + floor(log2 g)`.
pub fn phase_length(g: u64, ell: u64, kappa: u64) -> u128 {
    let d = u64::BITS - g.leading_zeros();
    let two_d = 1u128 << d;
    (72 * two_d + 4 * u128::from(g)) * u128::from(kappa) * u128::from(ell)
}

/// Rounds in epoch `j` (phases `2^(j-1) ..= 2^j - 1`): `2^(j-1) * (75 * 2^j - 2) * kappa * L`.
/// Saturates at `u128::MAX`.
pub fn epoch_length(j: u32, ell: u64, kappa: u64) -> u128 {
    let exact = || {
        let half = 1u128.checked_shl(j.checked_sub(1)?)?;
        let inner = half.checked_mul(150)?.checked_sub(2)?;
        half.checked_mul(inner)?.checked_mul(u128::from(kappa))?.checked_mul(u128::from(ell))
    };
    exact().unwrap_or(u128::MAX)
}

/// Rounds in the first `m` epochs: `2 * kappa * L * (25 * 4^m - 2^m - 24)`.
/// Saturates at `u128::MAX`.
pub fn first_epochs(m: u32, ell: u64, kappa: u64) -> u128 {
    let exact = || {
        let two_m = 1u128.checked_shl(m)?;
        let inner = two_m.checked_mul(two_m)?.checked_mul(25)?.checked_sub(two_m + 24)?;
        inner.checked_mul(2)?.checked_mul(u128::from(kappa))?.checked_mul(u128::from(ell))
    };
    exact().unwrap_or(u128::MAX)
}

/// Least `i >= 0` with `2^(i+1) >= d`.
pub fn i_crit(d: u64) -> u32 {
    let bits = u64::BITS - d.saturating_sub(1).leading_zeros();
    bits.max(1) - 1
}

/// `1 + floor(log2 d)`, the bit length of `d`.
pub fn d_crit(d: u64) -> u32 {
    u64::BITS - d.leading_zeros()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Segment {
    Wait { remaining: u64 },
    Sweep { radius: u64, step: u64, record: bool },
}

impl Segment {
    fn sweep(radius: u64, record: bool) -> Self {
        Segment::Sweep { radius, step: 0, record }
    }

    fn block(search: bool, radius: u64) -> Self {
        if search {
            Segment::sweep(radius, false)
        } else {
            Segment::Wait { remaining: 4 * radius }
        }
    }
}

/// Where the program is, coarsely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    NotStarted,
    CanonBlock { phase: u32, block: u64 },
    KnownSweep,
    KnownSearch { block: u64 },
    Wait { phase: u64 },
    Sweep { phase: u64 },
    Search { phase: u64, period: u64, block: usize },
}

#[derive(Debug, Clone)]
struct Recording {
    stride: u64,
    half: u64,
    slots: Vec<Option<Natural>>,
}

impl Recording {
    fn new(stride: u64, half: u64) -> Self {
        Recording { stride, half, slots: vec![None; (2 * half + 1) as usize] }
    }

    fn slot(&self, pos: i64) -> Option<usize> {
        let s = self.stride as i64;
        if pos % s != 0 {
            return None;
        }
        let k = pos / s + self.half as i64;
        (0..self.slots.len() as i64).contains(&k).then_some(k as usize)
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    algorithm: Algorithm,
    kappa: u64,
    clock: u64,
    rel_pos: i64,
    start_label: Option<Natural>,
    ell: u64,
    stage: Stage,
    segment: Segment,
    recording: Option<Recording>,
    computed_colour: Option<u8>,
    canon_colour: Option<CanonColour>,
    schedule: Option<Schedule>,
}

impl Agent {
    pub fn new(algorithm: Algorithm, kappa: u64) -> Result<Self, AgentError> {
        if kappa == 0 {
            return Err(AgentError::ZeroKappa);
        }
        match algorithm {
            Algorithm::KnownD { distance: 0 } => return Err(AgentError::ZeroDistance),
            Algorithm::Canon(k) if k.dist_to_o == 0 && k.side == Side::LeftOfO => {
                return Err(AgentError::BadCanonKnowledge)
            }
            _ => {}
        }
        Ok(Agent {
            algorithm,
            kappa,
            clock: 0,
            rel_pos: 0,
            start_label: None,
            ell: 0,
            stage: Stage::NotStarted,
            segment: Segment::Wait { remaining: 0 },
            recording: None,
            computed_colour: None,
            canon_colour: None,
            schedule: None,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn kappa(&self) -> u64 {
        self.kappa
    }

    /// Rounds taken so far.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Offset from the starting node in the local frame.
    pub fn rel_pos(&self) -> i64 {
        self.rel_pos
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    /// `log*` of the starting label, once seen.
    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn start_label(&self) -> Option<&Natural> {
        self.start_label.as_ref()
    }

    pub fn computed_colour(&self) -> Option<u8> {
        self.computed_colour
    }

    pub fn canon_phase_colour(&self) -> Option<CanonColour> {
        self.canon_colour
    }

    pub fn schedule(&self) -> Option<Schedule> {
        self.schedule
    }

    /// Current Unknown-D guess `g` or canonical phase index.
    pub fn phase_index(&self) -> Option<u64> {
        match self.stage {
            Stage::CanonBlock { phase, .. } => Some(u64::from(phase)),
            Stage::Wait { phase } | Stage::Sweep { phase } | Stage::Search { phase, .. } => Some(phase),
            _ => None,
        }
    }

    /// Labels recorded during the current (or last) exploration sweep, at
    /// multiples of the stride, leftmost first.
    pub fn recorded_labels(&self) -> Option<&[Option<Natural>]> {
        self.recording.as_ref().map(|r| r.slots.as_slice())
    }

    /// Rounds left in the current wait. Zero when the next move may not be
    /// `Stay` or the agent has not started yet.
    pub fn idle_rounds(&self) -> u64 {
        match (self.stage, self.segment) {
            (Stage::NotStarted, _) => 0,
            (_, Segment::Wait { remaining }) => remaining,
            _ => 0,
        }
    }

    /// Consumes `n` waiting rounds without observations. `n` must not exceed
    /// [`Agent::idle_rounds`].
    pub fn skip_idle(&mut self, n: u64) -> Result<(), AgentError> {
        if n == 0 {
            return Ok(());
        }
        let Segment::Wait { remaining } = &mut self.segment else {
            panic!("skip_idle outside a wait");
        };
        assert!(n <= *remaining, "skip_idle({n}) past the end of a {remaining}-round wait");
        *remaining -= n;
        self.clock += n;
        if *remaining == 0 {
            self.next_segment()?;
        }
        Ok(())
    }

    /// One round: observe, then move.
    pub fn step(&mut self, obs: Observation<'_>) -> Result<AgentMove, AgentError> {
        if obs.local_clock != self.clock + 1 {
            return Err(AgentError::ClockSkew { expected: self.clock + 1, got: obs.local_clock });
        }
        if self.stage == Stage::NotStarted {
            self.begin(obs.current_label)?;
        }
        if let Segment::Sweep { record: true, .. } = self.segment {
            self.record(obs.current_label)?;
        }
        let mv = match &mut self.segment {
            Segment::Wait { remaining } => {
                *remaining -= 1;
                AgentMove::Stay
            }
            Segment::Sweep { radius, step, .. } => {
                let r = *radius;
                let outward = *step < r || *step >= 3 * r;
                *step += 1;
                let right = match self.algorithm {
                    Algorithm::Canon(k) => k.canonical_right(),
                    _ => Direction::Right,
                };
                if outward { right.as_move() } else { right.flip().as_move() }
            }
        };
        self.rel_pos += mv.delta();
        self.clock += 1;
        let done = match self.segment {
            Segment::Wait { remaining } => remaining == 0,
            Segment::Sweep { radius, step, .. } => step == 4 * radius,
        };
        if done {
            if self.rel_pos != 0 {
                return Err(AgentError::InternalDesync {
                    pos: self.rel_pos,
                    reason: "segment did not end at the starting node".into(),
                });
            }
            self.next_segment()?;
        }
        Ok(mv)
    }

    fn begin(&mut self, label: &Natural) -> Result<(), AgentError> {
        if !matches!(self.algorithm, Algorithm::Canon(_)) && label < &Natural::from(2u32) {
            return Err(AgentError::StartLabelTooSmall(label.clone()));
        }
        self.start_label = Some(label.clone());
        self.ell = u64::from(log_star(label));
        match self.algorithm {
            Algorithm::Canon(_) => self.enter_canon(0, 1),
            Algorithm::KnownD { distance } => {
                let half = self.kappa * self.ell;
                self.recording = Some(Recording::new(distance, half));
                self.stage = Stage::KnownSweep;
                self.segment = Segment::sweep(distance * half, true);
            }
            Algorithm::UnknownD => self.enter_wait(1),
        }
        Ok(())
    }

    fn enter_canon(&mut self, phase: u32, block: u64) {
        let Algorithm::Canon(k) = self.algorithm else { unreachable!() };
        if block == 1 {
            self.canon_colour = Some(canon_colour(k.dist_to_o, k.side, phase));
        }
        let search = match self.canon_colour.expect("set at block 1") {
            CanonColour::Red => [1, 8, 9].contains(&block),
            CanonColour::Blue => [1, 10, 11].contains(&block),
        };
        self.stage = Stage::CanonBlock { phase, block };
        self.segment = Segment::block(search, 2u64 << phase);
    }

    fn enter_wait(&mut self, g: u64) {
        let d = d_crit(g);
        self.stage = Stage::Wait { phase: g };
        self.segment = Segment::Wait { remaining: 36 * (1u64 << d) * self.kappa * self.ell };
    }

    fn enter_search(&mut self, g: u64, period: u64, block: usize) {
        let schedule = self.schedule.expect("set after the sweep");
        self.stage = Stage::Search { phase: g, period, block };
        self.segment = Segment::block(schedule.0[block], 1u64 << d_crit(g));
    }

    fn known_block(&mut self, block: u64) {
        let d = match self.algorithm {
            Algorithm::KnownD { distance } => distance,
            _ => unreachable!(),
        };
        let search = match self.computed_colour.expect("set after the sweep") {
            0 => false,
            1 => block == 0,
            _ => true,
        };
        self.stage = Stage::KnownSearch { block };
        self.segment = Segment::block(search, d);
    }

    fn next_segment(&mut self) -> Result<(), AgentError> {
        match self.stage {
            Stage::NotStarted => unreachable!("no segment before the first observation"),
            Stage::CanonBlock { phase, block } => {
                if block == CANON_BLOCKS {
                    self.enter_canon(phase + 1, 1);
                } else {
                    self.enter_canon(phase, block + 1);
                }
            }
            Stage::KnownSweep => {
                self.computed_colour = Some(self.colour_from_recording()?);
                self.known_block(0);
            }
            Stage::KnownSearch { block } => self.known_block(1 - block),
            Stage::Wait { phase } => {
                let half = self.kappa * self.ell;
                self.recording = Some(Recording::new(phase, half));
                self.stage = Stage::Sweep { phase };
                self.segment = Segment::sweep(phase * half, true);
            }
            Stage::Sweep { phase } => {
                let c = self.colour_from_recording()?;
                self.computed_colour = Some(c);
                self.schedule = Some(s_string(c));
                self.enter_search(phase, 0, 0);
            }
            Stage::Search { phase, period, block } => {
                if block + 1 < SCHEDULE_BITS {
                    self.enter_search(phase, period, block + 1);
                } else if period + 1 < self.kappa * self.ell {
                    self.enter_search(phase, period + 1, 0);
                } else {
                    self.enter_wait(phase + 1);
                }
            }
        }
        Ok(())
    }

    fn record(&mut self, label: &Natural) -> Result<(), AgentError> {
        let pos = self.rel_pos;
        let rec = self.recording.as_mut().expect("recording sweep");
        let Some(k) = rec.slot(pos) else { return Ok(()) };
        match &rec.slots[k] {
            None => rec.slots[k] = Some(label.clone()),
            Some(prev) if prev == label => {}
            Some(prev) => {
                return Err(AgentError::InternalDesync {
                    pos,
                    reason: format!("recorded label {prev}, now observed {label}"),
                })
            }
        }
        Ok(())
    }

    fn colour_from_recording(&self) -> Result<u8, AgentError> {
        let rec = self.recording.as_ref().expect("recording sweep");
        let mut window = Vec::with_capacity(rec.slots.len());
        for (k, slot) in rec.slots.iter().enumerate() {
            match slot {
                Some(l) => window.push(l.clone()),
                None => {
                    return Err(AgentError::InternalDesync {
                        pos: (k as i64 - rec.half as i64) * rec.stride as i64,
                        reason: "sweep left a contracted-path slot unrecorded".into(),
                    })
                }
            }
        }
        Ok(colour_in_window(&window, rec.half as usize, self.kappa)?)
    }
}

/// Length of one Unknown-D Stage 0 wait, used by tests and fast paths.
pub fn stage0_length(g: u64, ell: u64, kappa: u64) -> u64 {
    36 * (1u64 << d_crit(g)) * kappa * ell
}

/// `log*` of a label as a `u64`, for bound formulas.
pub fn ell_of(label: &Natural) -> u64 {
    u64::from(log_star(label))
}
