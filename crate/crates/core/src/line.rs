//! Labelled lines. Lines are conceptually infinite: labels are produced on
//! demand from a generator and a seed, never stored wholesale.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_traits::One;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numerics::{tower, Natural};

/// Global coordinate on the line. Only the simulator sees it.
pub type Position = i64;

/// Upper bound (exclusive) for the small labels placed around the start
/// positions of a [`LabelGenSpec::HugeNeighbours`] line.
pub const SMALL_LABEL_LIMIT: u64 = 100;

#[derive(Debug, Error)]
pub enum LineError {
    #[error("explicit label list is empty")]
    EmptyExplicit,
    #[error("explicit label {0} appears more than once")]
    DuplicateLabel(Natural),
    #[error("explicit label {0} is below 2")]
    LabelTooSmall(Natural),
    #[error("RandomWindow bit width must be in 2..=64, got {0}")]
    BadWidth(u32),
    #[error("HugeNeighbours tier must be 4 or 5, got {0}")]
    BadTier(u32),
    #[error("label file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("i/o error reading label file: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-agent orientation of the local frame relative to the global one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Agree,
    Flip,
}

impl Orientation {
    pub fn sign(self) -> i64 {
        match self {
            Orientation::Agree => 1,
            Orientation::Flip => -1,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Agree => "+1",
            Orientation::Flip => "-1",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelGenSpec {
    /// `…8,6,4,2,1,3,5,7,…` with the label-1 node at position 0.
    Canonical,
    /// Seeded bijective scramble of a `bits`-wide index space, shifted by 2.
    /// Injective on every window of fewer than `2^bits` positions centred on
    /// the origin; `bits = 64` is injective everywhere.
    RandomWindow { bits: u32 },
    /// Small labels (< [`SMALL_LABEL_LIMIT`]) on the two start positions and
    /// their neighbours, labels `>= tower(tier)` everywhere else.
    HugeNeighbours { tier: u32, starts: [Position; 2] },
    /// `labels[k]` sits at position `k + origin_offset`. Positions outside the
    /// list get `max(labels) + 1 + zigzag(position)`.
    Explicit { labels: Vec<Natural>, origin_offset: Position },
}

impl LabelGenSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LabelGenSpec::Canonical => "canonical",
            LabelGenSpec::RandomWindow { .. } => "random",
            LabelGenSpec::HugeNeighbours { .. } => "huge",
            LabelGenSpec::Explicit { .. } => "explicit",
        }
    }
}

#[derive(Debug, Clone)]
enum Materialized {
    Canonical,
    Random { bits: u32, key: u64 },
    Huge { small: Vec<(Position, Natural)>, base: Natural, key: u64 },
    Explicit { labels: Vec<Natural>, origin_offset: Position, fallback_base: Natural },
}

/// An immutable labelled line plus the two agents' orientations.
#[derive(Debug, Clone)]
pub struct LineInstance {
    spec: LabelGenSpec,
    seed: u64,
    pub orientation_a: Orientation,
    pub orientation_b: Orientation,
    inner: Materialized,
}

/// Interleaves `0, -1, 1, -2, 2, …` onto `0, 1, 2, 3, 4, …`.
pub fn zigzag(p: Position) -> u64 {
    ((p << 1) ^ (p >> 63)) as u64
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bijection on `[0, 2^bits)`: key xor, then xorshift/odd-multiply rounds
/// reduced modulo `2^bits`. Each step is invertible on that domain.
fn mix_bits(x: u64, bits: u32, key: u64) -> u64 {
    let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let shift_a = (bits / 2).max(1);
    let shift_b = (bits / 3).max(1);
    let mut z = (x ^ key) & mask;
    z = (z ^ (z >> shift_a)).wrapping_mul(0xbf58_476d_1ce4_e5b9) & mask;
    z = (z ^ (z >> shift_b)).wrapping_mul(0x94d0_49bb_1331_11eb) & mask;
    (z ^ (z >> shift_a)) & mask
}

/// Builds a line, validating the generator parameters.
pub fn make_line(
    spec: LabelGenSpec,
    seed: u64,
    orientations: (Orientation, Orientation),
) -> Result<LineInstance, LineError> {
    let key = splitmix(seed);
    let inner = match &spec {
        LabelGenSpec::Canonical => Materialized::Canonical,
        LabelGenSpec::RandomWindow { bits } => {
            if !(2..=64).contains(bits) {
                return Err(LineError::BadWidth(*bits));
            }
            Materialized::Random { bits: *bits, key }
        }
        LabelGenSpec::HugeNeighbours { tier, starts } => {
            if !(4..=5).contains(tier) {
                return Err(LineError::BadTier(*tier));
            }
            let mut positions: Vec<Position> =
                starts.iter().flat_map(|&s| [s - 1, s, s + 1]).collect();
            positions.sort_unstable();
            positions.dedup();
            let mut pool: Vec<u64> = (2..SMALL_LABEL_LIMIT).collect();
            pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let small = positions
                .into_iter()
                .zip(pool)
                .map(|(p, l)| (p, Natural::from(l)))
                .collect();
            let base = tower(*tier).expect("tier validated");
            Materialized::Huge { small, base, key }
        }
        LabelGenSpec::Explicit { labels, origin_offset } => {
            if labels.is_empty() {
                return Err(LineError::EmptyExplicit);
            }
            let mut seen = HashSet::with_capacity(labels.len());
            for l in labels {
                if l < &Natural::from(2u32) {
                    return Err(LineError::LabelTooSmall(l.clone()));
                }
                if !seen.insert(l) {
                    return Err(LineError::DuplicateLabel(l.clone()));
                }
            }
            let max = labels.iter().max().expect("non-empty");
            Materialized::Explicit {
                labels: labels.clone(),
                origin_offset: *origin_offset,
                fallback_base: max + Natural::one(),
            }
        }
    };
    Ok(LineInstance {
        spec,
        seed,
        orientation_a: orientations.0,
        orientation_b: orientations.1,
        inner,
    })
}

impl LineInstance {
    pub fn spec(&self) -> &LabelGenSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self.spec, LabelGenSpec::Canonical)
    }

    /// Label of the node at `pos`.
    pub fn label_at(&self, pos: Position) -> Natural {
        match &self.inner {
            Materialized::Canonical => {
                if pos >= 0 {
                    Natural::from(2 * pos.unsigned_abs() + 1)
                } else {
                    Natural::from(2 * pos.unsigned_abs())
                }
            }
            Materialized::Random { bits, key } => {
                Natural::from(mix_bits(zigzag(pos), *bits, *key)) + 2u32
            }
            Materialized::Huge { small, base, key } => {
                match small.iter().find(|(p, _)| *p == pos) {
                    Some((_, l)) => l.clone(),
                    None => base + mix_bits(zigzag(pos), 64, *key),
                }
            }
            Materialized::Explicit { labels, origin_offset, fallback_base } => {
                let idx = pos - origin_offset;
                if idx >= 0 && (idx as usize) < labels.len() {
                    labels[idx as usize].clone()
                } else {
                    fallback_base + zigzag(pos)
                }
            }
        }
    }

    /// Labels of `lo..=hi`, left to right.
    pub fn window(&self, lo: Position, hi: Position) -> Vec<Natural> {
        (lo..=hi).map(|p| self.label_at(p)).collect()
    }
}

/// Parses the explicit-label text format: a header `origin_offset=<int>`
/// followed by one decimal label per line. Blank lines and `#` comments are
/// skipped.
pub fn parse_label_file(text: &str) -> Result<LabelGenSpec, LineError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_no, header) = lines.next().ok_or(LineError::EmptyExplicit)?;
    let offset = header
        .strip_prefix("origin_offset=")
        .ok_or_else(|| LineError::Parse {
            line: header_no,
            reason: "expected header `origin_offset=<int>`".into(),
        })?
        .trim()
        .parse::<Position>()
        .map_err(|e| LineError::Parse { line: header_no, reason: e.to_string() })?;
    let labels = lines
        .map(|(no, l)| {
            l.parse::<Natural>()
                .map_err(|e| LineError::Parse { line: no, reason: format!("bad label {l:?}: {e}") })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabelGenSpec::Explicit { labels, origin_offset: offset })
}

pub fn load_label_file(path: &Path) -> Result<LabelGenSpec, LineError> {
    parse_label_file(&std::fs::read_to_string(path)?)
}

/// Renders an explicit spec back into the text format.
pub fn format_label_file(labels: &[Natural], origin_offset: Position) -> String {
    let mut out = format!("origin_offset={origin_offset}\n");
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const AGREE: (Orientation, Orientation) = (Orientation::Agree, Orientation::Agree);

    fn nat(v: u64) -> Natural {
        Natural::from(v)
    }

    #[test]
    fn canonical_pattern() {
        let line = make_line(LabelGenSpec::Canonical, 0, AGREE).unwrap();
        assert_eq!(line.label_at(0), nat(1));
        assert_eq!(line.label_at(-3), nat(6));
        let w: Vec<u64> = line.window(-4, 3).iter().map(|l| l.to_string().parse().unwrap()).collect();
        assert_eq!(w, vec![8, 6, 4, 2, 1, 3, 5, 7]);
    }

    #[test]
    fn random_window_is_deterministic_and_at_least_two() {
        let line = make_line(LabelGenSpec::RandomWindow { bits: 64 }, 99, AGREE).unwrap();
        let again = make_line(LabelGenSpec::RandomWindow { bits: 64 }, 99, AGREE).unwrap();
        for p in -50..50 {
            assert_eq!(line.label_at(p), line.label_at(p));
            assert_eq!(line.label_at(p), again.label_at(p));
            assert!(line.label_at(p) >= nat(2));
        }
        let other = make_line(LabelGenSpec::RandomWindow { bits: 64 }, 100, AGREE).unwrap();
        assert_ne!(line.window(-5, 5), other.window(-5, 5));
    }

    #[test]
    fn narrow_random_window_is_injective_on_its_domain() {
        let line = make_line(LabelGenSpec::RandomWindow { bits: 12 }, 7, AGREE).unwrap();
        let labels: HashSet<Natural> = line.window(-2048, 2047).into_iter().collect();
        assert_eq!(labels.len(), 4096);
        assert!(labels.iter().all(|l| l < &nat(4096 + 2)));
    }

    #[test]
    fn random_window_injective_on_a_million_positions() {
        let line = make_line(LabelGenSpec::RandomWindow { bits: 64 }, 3, AGREE).unwrap();
        let LabelGenSpec::RandomWindow { bits } = *line.spec() else { unreachable!() };
        let key = splitmix(3);
        let raw: HashSet<u64> =
            (-500_000..500_000).map(|p| mix_bits(zigzag(p), bits, key)).collect();
        assert_eq!(raw.len(), 1_000_000);
    }

    #[test]
    fn explicit_line_indexing() {
        let spec = LabelGenSpec::Explicit {
            labels: [4u64, 9, 2, 7, 3].into_iter().map(nat).collect(),
            origin_offset: -2,
        };
        let line = make_line(spec, 0, AGREE).unwrap();
        assert_eq!(line.label_at(0), nat(2));
        assert_eq!(line.label_at(-2), nat(4));
        assert_eq!(line.label_at(2), nat(3));
        // Outside the list: beyond the maximum, still distinct.
        let outside: HashSet<Natural> = (3..200).chain(-200..-2).map(|p| line.label_at(p)).collect();
        assert_eq!(outside.len(), 197 + 198);
        assert!(outside.iter().all(|l| l > &nat(9)));
    }

    #[test]
    fn explicit_rejects_duplicates_and_small_labels() {
        let dup = LabelGenSpec::Explicit { labels: vec![nat(3), nat(5), nat(3)], origin_offset: 0 };
        assert!(matches!(make_line(dup, 0, AGREE), Err(LineError::DuplicateLabel(_))));
        let small = LabelGenSpec::Explicit { labels: vec![nat(3), nat(1)], origin_offset: 0 };
        assert!(matches!(make_line(small, 0, AGREE), Err(LineError::LabelTooSmall(_))));
    }

    #[test]
    fn huge_neighbours_contract() {
        let tower4 = tower(4).unwrap();
        for seed in 0..20 {
            let spec = LabelGenSpec::HugeNeighbours { tier: 4, starts: [0, 5] };
            let line = make_line(spec, seed, AGREE).unwrap();
            for p in -30..40 {
                let l = line.label_at(p);
                let near = [-1, 0, 1, 4, 5, 6].contains(&p);
                if near {
                    assert!(l < nat(SMALL_LABEL_LIMIT) && l >= nat(2), "pos {p}: {l}");
                } else {
                    assert!(l >= tower4, "pos {p}: {l}");
                }
            }
            let all: HashSet<Natural> = line.window(-30, 40).into_iter().collect();
            assert_eq!(all.len(), 71);
        }
        assert!(matches!(
            make_line(LabelGenSpec::HugeNeighbours { tier: 3, starts: [0, 1] }, 0, AGREE),
            Err(LineError::BadTier(3))
        ));
    }

    #[test]
    fn label_file_round_trip() {
        let labels: Vec<Natural> = [4u64, 9, 2].into_iter().map(nat).collect();
        let text = format_label_file(&labels, -1);
        assert_eq!(text, "origin_offset=-1\n4\n9\n2\n");
        assert_eq!(parse_label_file(&text).unwrap(), LabelGenSpec::Explicit { labels, origin_offset: -1 });
        assert!(matches!(parse_label_file("4\n5\n"), Err(LineError::Parse { line: 1, .. })));
        assert!(matches!(parse_label_file("origin_offset=0\n4\nxx\n"), Err(LineError::Parse { line: 3, .. })));
    }

    #[test]
    fn zigzag_interleaves() {
        let z: Vec<u64> = [0, -1, 1, -2, 2].into_iter().map(zigzag).collect();
        assert_eq!(z, vec![0, 1, 2, 3, 4]);
    }
}
