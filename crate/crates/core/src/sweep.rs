//! Reproducible scenario descriptions and parameter sweeps over them.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{bound_for, default_max_rounds};
use crate::exec::par_map;
use crate::line::{make_line, LabelGenSpec, LineError, LineInstance, Orientation, Position};
use crate::numerics::{log_star, Natural};
use crate::simulator::{run_outcome, AlgorithmKind, Outcome, Scenario, SimError};

/// Label generator as named on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenParam {
    Canonical,
    Random { bits: u32 },
    Huge { tier: u32 },
    Explicit { labels: Vec<Natural>, origin_offset: Position },
}

impl GenParam {
    pub fn name(&self) -> String {
        match self {
            GenParam::Canonical => "canonical".into(),
            GenParam::Random { bits: 64 } => "random".into(),
            GenParam::Random { bits } => format!("random:{bits}"),
            GenParam::Huge { tier } => format!("huge{tier}"),
            GenParam::Explicit { .. } => "explicit".into(),
        }
    }

    /// Parses `canonical`, `random`, `random:<bits>`, `huge4`, `huge5`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "canonical" | "canon" => Some(GenParam::Canonical),
            "random" => Some(GenParam::Random { bits: 64 }),
            "huge4" => Some(GenParam::Huge { tier: 4 }),
            "huge5" => Some(GenParam::Huge { tier: 5 }),
            _ => s.strip_prefix("random:")?.parse().ok().map(|bits| GenParam::Random { bits }),
        }
    }

    pub fn is_huge(&self) -> bool {
        matches!(self, GenParam::Huge { .. })
    }
}

fn sign_str(o: Orientation) -> &'static str {
    match o {
        Orientation::Agree => "+1",
        Orientation::Flip => "-1",
    }
}

/// Everything needed to rebuild one rendezvous run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioParams {
    pub algorithm: AlgorithmKind,
    pub generator: GenParam,
    pub seed: u64,
    pub start_a: Position,
    pub start_b: Position,
    pub wake_a: u64,
    pub wake_b: u64,
    pub orient_a: Orientation,
    pub orient_b: Orientation,
    pub kappa: u64,
    /// `None` means four times the applicable bound.
    pub max_rounds: Option<u64>,
}

impl ScenarioParams {
    pub fn distance(&self) -> u64 {
        self.start_a.abs_diff(self.start_b)
    }

    pub fn delay(&self) -> u64 {
        self.wake_a.abs_diff(self.wake_b)
    }

    pub fn line(&self) -> Result<LineInstance, LineError> {
        let spec = match &self.generator {
            GenParam::Canonical => LabelGenSpec::Canonical,
            GenParam::Random { bits } => LabelGenSpec::RandomWindow { bits: *bits },
            GenParam::Huge { tier } => LabelGenSpec::HugeNeighbours { tier: *tier, starts: [self.start_a, self.start_b] },
            GenParam::Explicit { labels, origin_offset } => {
                LabelGenSpec::Explicit { labels: labels.clone(), origin_offset: *origin_offset }
            }
        };
        make_line(spec, self.seed, (self.orient_a, self.orient_b))
    }

    /// The larger of the two starting labels.
    pub fn ell_label(&self, line: &LineInstance) -> Natural {
        line.label_at(self.start_a).max(line.label_at(self.start_b))
    }

    pub fn bound(&self, line: &LineInstance) -> u128 {
        let ell = u64::from(log_star(&self.ell_label(line)));
        bound_for(self.algorithm, self.distance(), ell, self.kappa)
    }

    pub fn scenario(&self) -> Result<Scenario, String> {
        let line = self.line().map_err(|e| e.to_string())?;
        let ell = u64::from(log_star(&self.ell_label(&line)));
        let max_rounds = self
            .max_rounds
            .unwrap_or_else(|| default_max_rounds(self.algorithm, self.distance(), ell, self.kappa));
        Ok(Scenario {
            line,
            start_a: self.start_a,
            start_b: self.start_b,
            wake_a: self.wake_a,
            wake_b: self.wake_b,
            algorithm: self.algorithm,
            kappa: self.kappa,
            max_rounds,
        })
    }

    /// A command line that reruns exactly this scenario.
    pub fn repro(&self) -> String {
        let mut cmd = format!(
            "rlab rendezvous --algorithm {} --generator {} --seed {} --start-a {} --start-b {} \
             --wake-a {} --wake-b {} --orient-a {} --orient-b {} --kappa {}",
            self.algorithm.name(),
            self.generator.name(),
            self.seed,
            self.start_a,
            self.start_b,
            self.wake_a,
            self.wake_b,
            sign_str(self.orient_a),
            sign_str(self.orient_b),
            self.kappa
        );
        if let GenParam::Explicit { labels, origin_offset } = &self.generator {
            let list: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
            cmd.push_str(&format!(" --labels {} --origin-offset {}", list.join(","), origin_offset));
        }
        if let Some(m) = self.max_rounds {
            cmd.push_str(&format!(" --max-rounds {m}"));
        }
        cmd
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub params: ScenarioParams,
    pub ell: Natural,
    pub outcome: Outcome,
    pub bound: u128,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        matches!(self.outcome, Outcome::Met { elapsed, .. } if u128::from(elapsed) <= self.bound)
    }

    pub fn csv_header() -> &'static str {
        "algorithm,D,delay,ell,elapsed,bound,ok"
    }

    pub fn csv_row(&self) -> String {
        let elapsed = match self.outcome {
            Outcome::Met { elapsed, .. } => elapsed.to_string(),
            Outcome::Timeout { limit } => format!("timeout>{limit}"),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.params.algorithm.name(),
            self.params.distance(),
            self.params.delay(),
            self.ell,
            elapsed,
            self.bound,
            self.ok()
        )
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Sim(SimError),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid scenario: {m}"),
            RunError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

pub fn run_params(p: &ScenarioParams) -> Result<RunReport, RunError> {
    let scenario = p.scenario().map_err(RunError::Config)?;
    let outcome = run_outcome(&scenario).map_err(|e| match e {
        SimError::Config(m) => RunError::Config(m),
        other => RunError::Sim(other),
    })?;
    Ok(RunReport {
        ell: p.ell_label(&scenario.line),
        bound: p.bound(&scenario.line),
        params: p.clone(),
        outcome,
    })
}

/// Where the pair starts relative to the global origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Placement {
    RightOfOrigin,
    LeftOfOrigin,
    Straddling,
}

impl Placement {
    pub const ALL: [Placement; 3] = [Placement::RightOfOrigin, Placement::LeftOfOrigin, Placement::Straddling];

    /// `start_a` for a pair at distance `d` (`start_b = start_a + d`).
    pub fn start(self, d: u64, rng: &mut impl Rng) -> Position {
        let d = d as i64;
        match self {
            Placement::RightOfOrigin => rng.gen_range(0..=50),
            Placement::LeftOfOrigin => -d - rng.gen_range(1..=50),
            Placement::Straddling => -rng.gen_range(1..=d),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub algorithm: AlgorithmKind,
    pub d_values: Vec<u64>,
    pub delays: Vec<u64>,
    pub generators: Vec<GenParam>,
    pub orientations: Vec<(Orientation, Orientation)>,
    /// Trials per cell. Trial `t` uses placement `t % 3`, makes agent b the
    /// late one when `t / 3` is even, and derives its seed from `seed` and `t`.
    pub trials: u32,
    pub seed: u64,
    pub kappa: u64,
    pub max_rounds: Option<u64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.d_values.is_empty() || self.delays.is_empty() || self.generators.is_empty() || self.orientations.is_empty() {
            return Err("sweep ranges must be non-empty".into());
        }
        if self.d_values.contains(&0) {
            return Err("D must be at least 1".into());
        }
        if self.trials == 0 {
            return Err("trials must be at least 1".into());
        }
        Ok(())
    }

    pub fn scenarios(&self) -> Vec<(CellKey, ScenarioParams)> {
        let mut out = Vec::new();
        for &d in &self.d_values {
            for &delay in &self.delays {
                for generator in &self.generators {
                    for &(oa, ob) in &self.orientations {
                        for t in 0..self.trials {
                            let key = CellKey { d, delay, generator: generator.name(), orient: (oa, ob) };
                            let seed = self.seed ^ (u64::from(t) << 32) ^ d.wrapping_mul(0x9e37_79b9) ^ delay.rotate_left(17);
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            let start_a = Placement::ALL[t as usize % 3].start(d, &mut rng);
                            let (wake_a, wake_b) = if (t / 3) % 2 == 0 { (1, 1 + delay) } else { (1 + delay, 1) };
                            out.push((
                                key,
                                ScenarioParams {
                                    algorithm: self.algorithm,
                                    generator: generator.clone(),
                                    seed,
                                    start_a,
                                    start_b: start_a + d as i64,
                                    wake_a,
                                    wake_b,
                                    orient_a: oa,
                                    orient_b: ob,
                                    kappa: self.kappa,
                                    max_rounds: self.max_rounds,
                                },
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub d: u64,
    pub delay: u64,
    pub generator: String,
    pub orient: (Orientation, Orientation),
}

#[derive(Debug, Clone)]
pub struct CellRow {
    pub key: CellKey,
    pub algorithm: AlgorithmKind,
    pub trials: u32,
    /// `None` if some trial timed out.
    pub max_elapsed: Option<u64>,
    pub bound: u128,
    pub ok: bool,
    pub first_failure: Option<String>,
}

impl CellRow {
    pub fn csv_header() -> &'static str {
        "algorithm,D,delay,generator,orient_a,orient_b,trials,max_elapsed,bound,ok"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.algorithm.name(),
            self.key.d,
            self.key.delay,
            self.key.generator,
            sign_str(self.key.orient.0),
            sign_str(self.key.orient.1),
            self.trials,
            self.max_elapsed.map_or_else(|| "timeout".to_string(), |e| e.to_string()),
            self.bound,
            self.ok
        )
    }
}

/// Runs every trial and folds them into one row per cell, sorted by key.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CellRow>, String> {
    spec.validate()?;
    let jobs = spec.scenarios();
    let results = par_map(&jobs, |(_, p)| run_params(p));
    let mut rows: BTreeMap<CellKey, CellRow> = BTreeMap::new();
    for ((key, p), res) in jobs.into_iter().zip(results) {
        let report = res.map_err(|e| format!("{e}\n  reproduce: {}", p.repro()))?;
        let row = rows.entry(key.clone()).or_insert_with(|| CellRow {
            key,
            algorithm: spec.algorithm,
            trials: 0,
            max_elapsed: Some(0),
            bound: 0,
            ok: true,
            first_failure: None,
        });
        row.trials += 1;
        row.bound = row.bound.max(report.bound);
        row.max_elapsed = match (row.max_elapsed, report.outcome.elapsed()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        if !report.ok() {
            row.ok = false;
            row.first_failure.get_or_insert_with(|| p.repro());
        }
    }
    Ok(rows.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_names_round_trip() {
        for g in [GenParam::Canonical, GenParam::Random { bits: 64 }, GenParam::Random { bits: 20 }, GenParam::Huge { tier: 4 }, GenParam::Huge { tier: 5 }] {
            assert_eq!(GenParam::parse(&g.name()), Some(g));
        }
        assert_eq!(GenParam::parse("bogus"), None);
    }

    #[test]
    fn placements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..40u64 {
            for _ in 0..20 {
                let r = Placement::RightOfOrigin.start(d, &mut rng);
                assert!(r >= 0);
                let l = Placement::LeftOfOrigin.start(d, &mut rng);
                assert!(l + (d as i64) < 0);
                let s = Placement::Straddling.start(d, &mut rng);
                assert!(s < 0 && s + d as i64 >= 0, "d={d} s={s}");
            }
        }
    }

    #[test]
    fn repro_mentions_every_field() {
        let p = ScenarioParams {
            algorithm: AlgorithmKind::KnownD,
            generator: GenParam::Explicit { labels: vec![Natural::from(4u32), Natural::from(9u32)], origin_offset: -1 },
            seed: 9,
            start_a: -1,
            start_b: 0,
            wake_a: 1,
            wake_b: 5,
            orient_a: Orientation::Agree,
            orient_b: Orientation::Flip,
            kappa: 60,
            max_rounds: Some(77),
        };
        assert_eq!(
            p.repro(),
            "rlab rendezvous --algorithm knownD --generator explicit --seed 9 --start-a -1 --start-b 0 \
             --wake-a 1 --wake-b 5 --orient-a +1 --orient-b -1 --kappa 60 --labels 4,9 --origin-offset -1 --max-rounds 77"
        );
    }

    #[test]
    fn small_canon_sweep() {
        let spec = SweepSpec {
            algorithm: AlgorithmKind::Canon,
            d_values: vec![1, 2, 5],
            delays: vec![0, 3],
            generators: vec![GenParam::Canonical],
            orientations: vec![(Orientation::Agree, Orientation::Agree), (Orientation::Agree, Orientation::Flip)],
            trials: 6,
            seed: 1,
            kappa: 60,
            max_rounds: None,
        };
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(|r| r.ok && r.trials == 6));
        assert!(rows.windows(2).all(|w| w[0].key < w[1].key));
        let again = run_sweep(&spec).unwrap();
        let a: Vec<String> = rows.iter().map(CellRow::csv_row).collect();
        let b: Vec<String> = again.iter().map(CellRow::csv_row).collect();
        assert_eq!(a, b);
    }
}
