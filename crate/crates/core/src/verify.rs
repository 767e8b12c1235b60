//! The acceptance checks, shared by `rlab verify` and the `acceptance` test.
//!
//! Every check is deterministic: seeds are fixed constants, and batches go
//! through [`par_map`], which keeps input order.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use num_bigint::RandBigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{d_crit, first_epochs, i_crit, phase_length};
use crate::bounds::{canon_bound, known_d_bound, no_d_envelope};
use crate::colouring::{colour_in_window, default_max_rounds, run_local, Topology, TERMINATION_SLACK};
use crate::exec::par_map;
use crate::line::{make_line, LabelGenSpec, Orientation, Position};
use crate::numerics::{binary_rep, bit_len, cv_choice, encode_sf, first_encoded_difference, log_star, Natural};
use crate::simulator::{known_d_stage1_colour, unknown_d_phase_ends, AlgorithmKind, Outcome};
use crate::sweep::{run_params, GenParam, Placement, RunReport, ScenarioParams};

pub const DEFAULT_KAPPA: u64 = 60;
pub const KAPPA_ENV: &str = "RLAB_KAPPA";
/// Base seed for every randomized check.
pub const VERIFY_SEED: u64 = 0x5eed_2024;
pub const CRITERIA: u32 = 9;

/// Reads κ from `RLAB_KAPPA`, defaulting to 60.
pub fn kappa_from_env() -> Result<u64, String> {
    match std::env::var(KAPPA_ENV) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(format!("{KAPPA_ENV} must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(DEFAULT_KAPPA),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// The grids and counts the acceptance criteria name.
    Full,
    /// A small slice of each grid, for smoke tests.
    Quick,
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub kappa: u64,
    /// Replaces the default budget (four times the bound) in every run.
    pub max_rounds: Option<u64>,
    pub scale: Scale,
    /// Criteria to run; `None` runs all of them.
    pub only: Option<Vec<u32>>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { kappa: DEFAULT_KAPPA, max_rounds: None, scale: Scale::Full, only: None }
    }
}

impl VerifyConfig {
    fn wants(&self, id: u32) -> bool {
        self.only.as_ref().is_none_or(|v| v.contains(&id))
    }

    fn full(&self) -> bool {
        self.scale == Scale::Full
    }

    fn flags(&self) -> String {
        let mut s = String::new();
        if self.kappa != DEFAULT_KAPPA {
            s = format!("{KAPPA_ENV}={} ", self.kappa);
        }
        s.push_str("rlab verify");
        if let Some(m) = self.max_rounds {
            s.push_str(&format!(" --max-rounds {m}"));
        }
        if self.scale == Scale::Quick {
            s.push_str(" --quick");
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    /// Up to [`MAX_LISTED`] failing cases, each with a reproduction command.
    pub failures: Vec<String>,
    pub failure_count: usize,
    pub seconds: f64,
}

pub const MAX_LISTED: usize = 5;

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {} ({}): {} - {} [{:.1}s]",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.summary,
            self.seconds
        )
    }
}

struct Tally {
    failures: Vec<String>,
    count: usize,
}

impl Tally {
    fn new() -> Self {
        Tally { failures: Vec::new(), count: 0 }
    }

    fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.count += 1;
        if self.failures.len() < MAX_LISTED {
            self.failures.push(msg());
        }
    }
}

fn report(id: u32, name: &'static str, start: Instant, tally: Tally, summary: String) -> CriterionReport {
    CriterionReport {
        id,
        name,
        passed: tally.count == 0,
        summary: if tally.count == 0 { summary } else { format!("{} failing case(s); {summary}", tally.count) },
        failures: tally.failures,
        failure_count: tally.count,
        seconds: start.elapsed().as_secs_f64(),
    }
}

const AGREE: Orientation = Orientation::Agree;
const FLIP: Orientation = Orientation::Flip;
const ORIENTATION_PAIRS: [(Orientation, Orientation); 2] = [(AGREE, AGREE), (AGREE, FLIP)];

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(VERIFY_SEED, |h, &p| {
        // splitmix64 finalizer over the running state
        let mut z = (h ^ p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

/// Labels of a random colouring instance: `n` distinct values, uniform in
/// `[2, 2^64]`, or with bit lengths 65536/65537 when `tower` is set.
pub fn colouring_instance(n: usize, seed: u64, tower: bool) -> Vec<Natural> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let label = if tower {
            let bits = rng.gen_range(65536..=65537u64);
            let mut v = rng.gen_biguint(bits);
            v.set_bit(bits - 1, true);
            v
        } else {
            Natural::from(rng.gen_range(2u128..=1u128 << 64))
        };
        if seen.insert(label.clone()) {
            out.push(label);
        }
    }
    out
}

fn c1_colouring(cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let (n_random, n_tower) = if cfg.full() { (1000, 50) } else { (40, 4) };
    let jobs: Vec<(u64, usize, Topology, bool)> = (0..n_random + n_tower)
        .map(|i| {
            let tower = i >= n_random;
            let seed = mix(&[1, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xff);
            let n = if tower { rng.gen_range(2..=64) } else { rng.gen_range(2..=5000) };
            let topology = if n >= 3 && rng.gen_bool(0.5) { Topology::Cycle } else { Topology::Path };
            (seed, n, topology, tower)
        })
        .collect();
    let results = par_map(&jobs, |&(seed, n, topology, tower)| {
        let labels = colouring_instance(n, seed, tower);
        let res = run_local(&labels, topology, default_max_rounds(&labels));
        let worst_slack = res.as_ref().ok().map(|r| {
            labels
                .iter()
                .zip(&r.termination_rounds)
                .map(|(l, &t)| (u64::from(log_star(l)) + TERMINATION_SLACK) as i64 - t as i64)
                .min()
                .unwrap_or(0)
        });
        (res.map(|_| ()).map_err(|e| e.to_string()), worst_slack)
    });
    let mut tally = Tally::new();
    let mut nodes = 0usize;
    let mut min_slack = i64::MAX;
    for (&(seed, n, topology, tower), (res, slack)) in jobs.iter().zip(results) {
        nodes += n;
        let topo = if topology == Topology::Cycle { "cycle" } else { "path" };
        let repro = format!(
            "rlab colour --random {n} --seed {seed} --topology {topo}{}",
            if tower { " --tower-labels" } else { "" }
        );
        match (res, slack) {
            (Err(e), _) => tally.fail(|| format!("{e}; reproduce: {repro}")),
            (Ok(()), Some(s)) if s < 0 => tally.fail(|| format!("termination {} rounds past bound; reproduce: {repro}", -s)),
            (Ok(()), Some(s)) => min_slack = min_slack.min(s),
            _ => {}
        }
    }
    let summary = format!(
        "{} instances ({n_tower} tower-sized), {nodes} nodes, proper 3-colourings, tightest termination slack {} rounds",
        jobs.len(),
        if min_slack == i64::MAX { 0 } else { min_slack }
    );
    report(1, "EarlyStopCV correctness", start, tally, summary)
}

fn random_natural(rng: &mut impl Rng) -> Natural {
    match rng.gen_range(0..10) {
        0 => Natural::from(rng.gen_range(0u32..64)),
        1..=6 => {
            let bits = rng.gen_range(1..=64);
            rng.gen_biguint(bits)
        }
        _ => {
            let bits = rng.gen_range(65..=700);
            rng.gen_biguint(bits)
        }
    }
}

fn near(rng: &mut impl Rng, x: &Natural) -> Natural {
    let k = rng.gen_range(0..bit_len(x) + 3);
    let mut y = x.clone();
    y.set_bit(k, !x.bit(k));
    y
}

fn materialized_difference(a: &Natural, b: &Natural) -> Option<u64> {
    let ea = encode_sf(&binary_rep(a));
    let eb = encode_sf(&binary_rep(b));
    (0..ea.len().min(eb.len())).find(|&i| ea.get(i) != eb.get(i)).map(|i| i as u64)
}

fn c2_numerics(cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let count = if cfg.full() { 10_000 } else { 500 };
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[2]));
    let mut tally = Tally::new();
    let mut triples = 0;
    for _ in 0..count {
        let a = random_natural(&mut rng);
        let b = if rng.gen_bool(0.4) { near(&mut rng, &a) } else { random_natural(&mut rng) };
        if a == b {
            continue;
        }
        let bound = 2 * bit_len(&a).min(bit_len(&b)) + 1;
        match materialized_difference(&a, &b) {
            Some(i) if i <= bound && first_encoded_difference(&a, &b) == Some(i) => {}
            other => tally.fail(|| format!("suffix-free: ({a}, {b}) first difference {other:?}, limit {bound}")),
        }
        let ell = bit_len(&a.clone().min(b.clone()));
        let ab = cv_choice(&a, &b).expect("distinct");
        if ab > Natural::from(8 * ell + 3) {
            tally.fail(|| format!("range: cv_choice({a}, {b}) = {ab} > 8*{ell}+3"));
        }
        let c = match rng.gen_range(0..3) {
            0 => a.clone(),
            1 => near(&mut rng, &b),
            _ => random_natural(&mut rng),
        };
        if c != b {
            triples += 1;
            let bc = cv_choice(&b, &c).expect("distinct");
            if ab == bc {
                tally.fail(|| format!("difference: cv_choice({a}, {b}) = cv_choice({b}, {c}) = {ab}"));
            }
        }
    }
    let summary = format!("{count} pairs, {triples} triples: suffix-free bound, output range, neighbour difference");
    report(2, "numerics properties", start, tally, summary)
}

fn canon_delays(d: u64) -> Vec<u64> {
    let mut v: Vec<u64> = vec![0, 1, 2, 3];
    v.extend((0..=12).map(|i| 5u64 << i));
    v.push(48 * (2u64 << i_crit(d)) + 1);
    v.sort_unstable();
    v.dedup();
    v
}

fn with_delay(mut p: ScenarioParams, delay: u64, b_late: bool) -> ScenarioParams {
    (p.wake_a, p.wake_b) = if b_late { (1, 1 + delay) } else { (1 + delay, 1) };
    p
}

fn canon_jobs(cfg: &VerifyConfig) -> Vec<ScenarioParams> {
    let d_max = if cfg.full() { 256 } else { 12 };
    let mut jobs = Vec::new();
    for d in 1..=d_max {
        for delay in canon_delays(d) {
            for (oa, ob) in ORIENTATION_PAIRS {
                for (pi, placement) in Placement::ALL.into_iter().enumerate() {
                    let seed = mix(&[3, d, delay, pi as u64]);
                    let start_a = placement.start(d, &mut ChaCha8Rng::seed_from_u64(seed));
                    let base = ScenarioParams {
                        algorithm: AlgorithmKind::Canon,
                        generator: GenParam::Canonical,
                        seed,
                        start_a,
                        start_b: start_a + d as i64,
                        wake_a: 1,
                        wake_b: 1,
                        orient_a: oa,
                        orient_b: ob,
                        kappa: cfg.kappa,
                        max_rounds: cfg.max_rounds,
                    };
                    for b_late in [true, false] {
                        if delay == 0 && !b_late {
                            continue;
                        }
                        jobs.push(with_delay(base.clone(), delay, b_late));
                    }
                }
            }
        }
    }
    jobs
}

fn run_batch(jobs: &[ScenarioParams]) -> Vec<Result<RunReport, String>> {
    par_map(jobs, |p| run_params(p).map_err(|e| format!("{e}; reproduce: {}", p.repro())))
}

fn judge(id: u32, name: &'static str, start: Instant, runs: &[Result<RunReport, String>], what: &str) -> CriterionReport {
    let mut tally = Tally::new();
    let mut worst = 0f64;
    let mut met = 0usize;
    for r in runs {
        match r {
            Err(e) => tally.fail(|| e.clone()),
            Ok(rep) if !rep.ok() => tally.fail(|| {
                let what = match rep.outcome {
                    Outcome::Timeout { limit } => format!("no meeting within {limit} rounds"),
                    Outcome::Met { elapsed, .. } => format!("met after {elapsed} rounds"),
                };
                format!("{what}, bound {}; reproduce: {}", rep.bound, rep.params.repro())
            }),
            Ok(rep) => {
                met += 1;
                let e = rep.outcome.elapsed().unwrap_or(0) as f64;
                worst = worst.max(e / rep.bound as f64);
            }
        }
    }
    let summary = format!("{met}/{} runs met within {what}; worst elapsed/bound {:.4}", runs.len(), worst);
    report(id, name, start, tally, summary)
}

fn known_jobs(cfg: &VerifyConfig) -> Vec<ScenarioParams> {
    let d_max = if cfg.full() { 64 } else { 6 };
    let generators = [GenParam::Random { bits: 64 }, GenParam::Huge { tier: 4 }, GenParam::Huge { tier: 5 }];
    let mut jobs = Vec::new();
    for d in 1..=d_max {
        for (gi, generator) in generators.iter().enumerate() {
            let seed = mix(&[4, d, gi as u64]);
            let start_a = ChaCha8Rng::seed_from_u64(seed).gen_range(-1000..=1000);
            let base = ScenarioParams {
                algorithm: AlgorithmKind::KnownD,
                generator: generator.clone(),
                seed,
                start_a,
                start_b: start_a + d as i64,
                wake_a: 1,
                wake_b: 1,
                orient_a: AGREE,
                orient_b: AGREE,
                kappa: cfg.kappa,
                max_rounds: cfg.max_rounds,
            };
            let line = base.line().expect("valid generator");
            let ell = u64::from(log_star(&base.ell_label(&line)));
            let mut delays = vec![0, 1, 2, 3, 7, 4 * d - 1, 4 * d + 1, 8 * d + 1, 4 * d * cfg.kappa * ell + 1];
            delays.sort_unstable();
            delays.dedup();
            for delay in delays {
                for (oa, ob) in ORIENTATION_PAIRS {
                    for b_late in [true, false] {
                        if delay == 0 && !b_late {
                            continue;
                        }
                        let p = ScenarioParams { orient_a: oa, orient_b: ob, ..base.clone() };
                        jobs.push(with_delay(p, delay, b_late));
                    }
                }
            }
        }
    }
    jobs
}

fn c5_colour_oracle(cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let count = if cfg.full() { 500 } else { 30 };
    let generators = [GenParam::Random { bits: 64 }, GenParam::Random { bits: 16 }, GenParam::Huge { tier: 4 }];
    let jobs: Vec<ScenarioParams> = (0..count)
        .map(|i| {
            let seed = mix(&[5, i]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(1..=64u64);
            let x: Position = rng.gen_range(-100_000..=100_000);
            let flip = |b: bool| if b { FLIP } else { AGREE };
            ScenarioParams {
                algorithm: AlgorithmKind::KnownD,
                generator: generators[i as usize % generators.len()].clone(),
                seed,
                start_a: x,
                start_b: x + d as i64,
                wake_a: 1,
                wake_b: 1,
                orient_a: flip(rng.gen_bool(0.5)),
                orient_b: flip(rng.gen_bool(0.5)),
                kappa: cfg.kappa,
                max_rounds: cfg.max_rounds,
            }
        })
        .collect();
    let results = par_map(&jobs, |p| -> Result<(u8, u8), String> {
        let line = p.line().map_err(|e| e.to_string())?;
        let d = p.distance();
        let ca = known_d_stage1_colour(&line, p.start_a, p.orient_a, d, p.kappa).map_err(|e| e.to_string())?;
        let cb = known_d_stage1_colour(&line, p.start_b, p.orient_b, d, p.kappa).map_err(|e| e.to_string())?;
        Ok((ca, cb))
    });
    let mut tally = Tally::new();
    let mut hist = [0usize; 3];
    for (p, r) in jobs.iter().zip(results) {
        match r {
            Ok((ca, cb)) if ca != cb => {
                hist[ca as usize] += 1;
                hist[cb as usize] += 1;
            }
            Ok((c, _)) => tally.fail(|| {
                format!("both agents at distance {} chose colour {c}; reproduce: {}", p.distance(), p.repro())
            }),
            Err(e) => tally.fail(|| format!("{e}; reproduce: {}", p.repro())),
        }
    }
    let distinct = hist.iter().sum::<usize>() / 2;
    let summary = format!("{distinct}/{count} (line, position, D) triples gave distinct colours; colour use {hist:?}");
    report(5, "known-D colour oracle", start, tally, summary)
}

/// Small start labels with `log*` 1, 2, 3 and 4.
const SMALL_STARTS: [u64; 4] = [2, 3, 5, 17];

/// A line with a small label on one start and 64-bit-plus labels elsewhere,
/// so the two agents see different `log*` values.
fn mixed_line(d: u64, seed: u64, small: u64, small_on_a: bool) -> GenParam {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut labels: Vec<Natural> = Vec::with_capacity(d as usize + 1);
    while labels.len() < d as usize + 1 {
        let v = Natural::from(rng.gen_range(1u128 << 32..=1u128 << 64));
        if seen.insert(v.clone()) {
            labels.push(v);
        }
    }
    let (small_idx, big_idx) = if small_on_a { (0, d as usize) } else { (d as usize, 0) };
    labels[small_idx] = Natural::from(small);
    labels[big_idx] = (Natural::from(1u32) << 64u32) + rng.gen_range(0u64..1 << 40);
    GenParam::Explicit { labels, origin_offset: 0 }
}

fn unknown_jobs(cfg: &VerifyConfig) -> Vec<ScenarioParams> {
    let d_max = if cfg.full() { 16 } else { 3 };
    let mut jobs = Vec::new();
    for d in 1..=d_max {
        let mut generators = vec![GenParam::Random { bits: 64 }, GenParam::Huge { tier: 4 }];
        let variants = if cfg.full() { SMALL_STARTS.len() } else { 2 };
        for (k, &small) in SMALL_STARTS.iter().take(variants).enumerate() {
            for small_on_a in [true, false] {
                generators.push(mixed_line(d, mix(&[6, d, k as u64, u64::from(small_on_a)]), small, small_on_a));
            }
        }
        for (gi, generator) in generators.into_iter().enumerate() {
            let seed = mix(&[6, d, gi as u64, 99]);
            let start_a = match generator {
                GenParam::Explicit { .. } => 0,
                _ => ChaCha8Rng::seed_from_u64(seed).gen_range(-1000..=1000),
            };
            let base = ScenarioParams {
                algorithm: AlgorithmKind::UnknownD,
                generator,
                seed,
                start_a,
                start_b: start_a + d as i64,
                wake_a: 1,
                wake_b: 1,
                orient_a: AGREE,
                orient_b: AGREE,
                kappa: cfg.kappa,
                max_rounds: cfg.max_rounds,
            };
            let line = base.line().expect("valid generator");
            let ell = u64::from(log_star(&base.ell_label(&line)));
            let dc = d_crit(d);
            let edge = 4u64 << dc;
            let epochs = u64::try_from(first_epochs(dc, ell, cfg.kappa)).unwrap_or(u64::MAX - 1);
            let mut delays = vec![0, edge - 1, edge + 1, epochs + 1];
            delays.sort_unstable();
            delays.dedup();
            for delay in delays {
                for (oa, ob) in ORIENTATION_PAIRS {
                    for b_late in [true, false] {
                        if delay == 0 && !b_late {
                            continue;
                        }
                        let p = ScenarioParams { orient_a: oa, orient_b: ob, ..base.clone() };
                        jobs.push(with_delay(p, delay, b_late));
                    }
                }
            }
        }
    }
    jobs
}

fn c7_phase_arithmetic(cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let phases = if cfg.full() { 64 } else { 8 };
    let line = make_line(
        LabelGenSpec::Explicit { labels: vec![Natural::from(2u32)], origin_offset: 0 },
        0,
        (AGREE, AGREE),
    )
    .expect("valid line");
    let mut tally = Tally::new();
    let mut checked_epochs = 0;
    match unknown_d_phase_ends(&line, 0, cfg.kappa, phases) {
        Err(e) => tally.fail(|| e.to_string()),
        Ok(ends) => {
            let mut total = 0u128;
            let mut prev = 0u64;
            for (g, &end) in (1u64..).zip(&ends) {
                let len = phase_length(g, 1, cfg.kappa);
                if u128::from(end - prev) != len {
                    tally.fail(|| format!("phase {g}: stepped {} rounds, formula {len}", end - prev));
                }
                total += len;
                prev = end;
                if (g + 1).is_power_of_two() {
                    let j = (g + 1).trailing_zeros();
                    checked_epochs += 1;
                    let expect = first_epochs(j, 1, cfg.kappa);
                    if u128::from(end) != expect || total != expect {
                        tally.fail(|| format!("epochs 1..={j}: stepped {end}, formula {expect}"));
                    }
                }
            }
        }
    }
    let summary = format!(
        "{phases} phases step-counted against the phase formula, {checked_epochs} epoch ends against the epoch-sum formula (L = 1)"
    );
    report(7, "phase/epoch arithmetic", start, tally, summary)
}

fn centre_label(rng: &mut impl Rng, ell: u32) -> Natural {
    match ell {
        1 => Natural::from(2u32),
        2 => Natural::from(rng.gen_range(3u32..=4)),
        3 => Natural::from(rng.gen_range(5u32..=16)),
        4 => Natural::from(rng.gen_range(17u32..=65536)),
        _ => Natural::from(rng.gen_range(65537u128..=1u128 << 64)),
    }
}

fn c8_window_stability(cfg: &VerifyConfig) -> CriterionReport {
    let start = Instant::now();
    let count = if cfg.full() { 200 } else { 20 };
    let kappa = cfg.kappa;
    let seeds: Vec<u64> = (0..count).map(|i| mix(&[8, i])).collect();
    let results = par_map(&seeds, |&seed| -> Result<(u32, u8, u8), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ell = rng.gen_range(1..=5u32);
        let centre = centre_label(&mut rng, ell);
        let radius = (kappa * u64::from(log_star(&centre))) as usize;
        let mut seen: HashSet<Natural> = HashSet::from([centre.clone()]);
        let mut fresh = |rng: &mut ChaCha8Rng| loop {
            let v = Natural::from(rng.gen_range(2u128..=1u128 << 64));
            if seen.insert(v.clone()) {
                return v;
            }
        };
        let inner_left: Vec<Natural> = (0..radius).map(|_| fresh(&mut rng)).collect();
        let inner_right: Vec<Natural> = (0..radius).map(|_| fresh(&mut rng)).collect();
        let outer_left: Vec<Natural> = (0..radius).map(|_| fresh(&mut rng)).collect();
        let outer_right: Vec<Natural> = (0..radius).map(|_| fresh(&mut rng)).collect();
        let small: Vec<Natural> =
            inner_left.iter().chain([&centre]).chain(&inner_right).cloned().collect();
        let big: Vec<Natural> = outer_left.iter().chain(&small).chain(&outer_right).cloned().collect();
        let a = colour_in_window(&small, radius, kappa).map_err(|e| e.to_string())?;
        let b = colour_in_window(&big, 2 * radius, kappa).map_err(|e| e.to_string())?;
        Ok((ell, a, b))
    });
    let mut tally = Tally::new();
    let mut per_ell = [0usize; 6];
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok((ell, a, b)) if a == b => per_ell[ell as usize] += 1,
            Ok((ell, a, b)) => tally.fail(|| format!("seed {seed:#x} (log* {ell}): colour {a} became {b} with the radius doubled")),
            Err(e) => tally.fail(|| format!("seed {seed:#x}: {e}")),
        }
    }
    let summary = format!(
        "{}/{count} contracted paths stable under radius doubling (by centre log* 1..5: {:?}); rerun with {}",
        per_ell.iter().sum::<usize>(),
        &per_ell[1..],
        cfg.flags()
    );
    report(8, "window stability", start, tally, summary)
}

fn c9_growth(
    cfg: &VerifyConfig,
    canon: &[Result<RunReport, String>],
    known: &[Result<RunReport, String>],
) -> CriterionReport {
    let start = Instant::now();
    let mut tally = Tally::new();

    // Canonical: running-maximum envelope of elapsed over D stays under a
    // single linear function.
    let mut worst_by_d: BTreeMap<u64, u64> = BTreeMap::new();
    for r in canon.iter().flatten() {
        if let Some(e) = r.outcome.elapsed() {
            let w = worst_by_d.entry(r.params.distance()).or_default();
            *w = (*w).max(e);
        } else {
            tally.fail(|| format!("canon timeout; reproduce: {}", r.params.repro()));
        }
    }
    let mut envelope = 0u64;
    let mut worst_ratio = 0f64;
    let mut upper_ratio = 0f64;
    let d_top = worst_by_d.keys().next_back().copied().unwrap_or(1);
    for (&d, &e) in &worst_by_d {
        envelope = envelope.max(e);
        let ratio = envelope as f64 / d as f64;
        worst_ratio = worst_ratio.max(ratio);
        if d > d_top / 2 {
            upper_ratio = upper_ratio.max(ratio);
        }
        if u128::from(envelope) > canon_bound(d) {
            tally.fail(|| format!("canon envelope {envelope} at D={d} exceeds 704*D"));
        }
    }

    // Known-D with tower-tier neighbourhoods: the time is governed by the
    // start labels' log*, which stay small even though every other label on
    // the line is tower-sized.
    let mut by_start_ell: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    let mut neighbourhood_ell = 0u64;
    for r in known.iter().flatten() {
        let GenParam::Huge { tier } = r.params.generator else { continue };
        let ell = u64::from(log_star(&r.ell));
        let line = r.params.line().expect("valid generator");
        let far = line.label_at(r.params.start_a.min(r.params.start_b) - 5);
        neighbourhood_ell = neighbourhood_ell.max(u64::from(log_star(&far)));
        let Some(e) = r.outcome.elapsed() else {
            tally.fail(|| format!("known-D timeout; reproduce: {}", r.params.repro()));
            continue;
        };
        let d = r.params.distance();
        let scaled = e as f64 / (d * cfg.kappa * ell) as f64;
        let slot = by_start_ell.entry(ell).or_insert((0.0, 0));
        slot.0 = slot.0.max(scaled);
        slot.1 += 1;
        if u128::from(e) > known_d_bound(d, ell, cfg.kappa) {
            tally.fail(|| format!("tier-{tier} run exceeds the start-label bound; reproduce: {}", r.params.repro()));
        }
    }
    let groups: Vec<String> =
        by_start_ell.iter().map(|(l, (s, n))| format!("L={l}: {s:.2} over {n} runs")).collect();
    let summary = format!(
        "canon envelope/D max {worst_ratio:.1} (top half of D {upper_ratio:.1}) <= 704; \
         known-D elapsed/(D*kappa*L_start) {} <= 8+12/(kappa*L) with neighbourhood log* {neighbourhood_ell}",
        groups.join(", ")
    );
    report(9, "growth sanity", start, tally, summary)
}

/// Runs the selected criteria in order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CriterionReport> {
    run_with(cfg, |_| {})
}

/// Like [`run_all`], calling `on_report` as each criterion finishes.
pub fn run_with(cfg: &VerifyConfig, mut on_report: impl FnMut(&CriterionReport)) -> Vec<CriterionReport> {
    let mut out = Vec::new();
    let mut push = |r: CriterionReport| {
        on_report(&r);
        out.push(r);
    };
    if cfg.wants(1) {
        push(c1_colouring(cfg));
    }
    if cfg.wants(2) {
        push(c2_numerics(cfg));
    }
    let t = Instant::now();
    let canon = if cfg.wants(3) || cfg.wants(9) { run_batch(&canon_jobs(cfg)) } else { Vec::new() };
    if cfg.wants(3) {
        push(judge(3, "canonical rendezvous", t, &canon, "704*D"));
    }
    let t = Instant::now();
    let known = if cfg.wants(4) || cfg.wants(9) { run_batch(&known_jobs(cfg)) } else { Vec::new() };
    if cfg.wants(4) {
        push(judge(4, "known-D rendezvous", t, &known, "8*D*kappa*log*(l)+12*D"));
    }
    if cfg.wants(5) {
        push(c5_colour_oracle(cfg));
    }
    if cfg.wants(6) {
        let t = Instant::now();
        let unknown = run_batch(&unknown_jobs(cfg));
        push(judge(6, "unknown-D rendezvous", t, &unknown, "the unknown-D envelope"));
    }
    if cfg.wants(7) {
        push(c7_phase_arithmetic(cfg));
    }
    if cfg.wants(8) {
        push(c8_window_stability(cfg));
    }
    if cfg.wants(9) {
        push(c9_growth(cfg, &canon, &known));
    }
    out
}

/// Envelope used by criterion 6, exposed for the CLI.
pub fn unknown_envelope(d: u64, ell: u64, kappa: u64) -> u128 {
    no_d_envelope(d, ell, kappa)
}
