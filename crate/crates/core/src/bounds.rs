//! Round bounds each algorithm is checked against.

use crate::agents::{d_crit, first_epochs};
use crate::simulator::AlgorithmKind;

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: u128) -> u32 {
    u128::BITS - x.saturating_sub(1).leading_zeros()
}

pub fn canon_bound(d: u64) -> u128 {
    704 * u128::from(d)
}

/// `8 * D * kappa * L + 12 * D`, `L` being `log*` of the larger start label.
pub fn known_d_bound(d: u64, ell: u64, kappa: u64) -> u128 {
    let d = u128::from(d);
    8 * d * u128::from(kappa) * u128::from(ell) + 12 * d
}

/// Epoch index after which the Unknown-D algorithm must have met.
pub fn no_d_epoch(d: u64, ell: u64) -> u32 {
    let d128 = u128::from(d);
    let by_ell = ceil_log2(u128::from(ell.max(1))) + 2;
    let by_ratio = ceil_log2(12 * d128 * d128) + 1;
    d_crit(d) + 2u32.max(by_ell).max(by_ratio)
}

/// Rounds in the first [`no_d_epoch`] epochs.
pub fn no_d_envelope(d: u64, ell: u64, kappa: u64) -> u128 {
    first_epochs(no_d_epoch(d, ell), ell, kappa)
}

pub fn bound_for(kind: AlgorithmKind, d: u64, ell: u64, kappa: u64) -> u128 {
    match kind {
        AlgorithmKind::Canon => canon_bound(d),
        AlgorithmKind::KnownD => known_d_bound(d, ell, kappa),
        AlgorithmKind::UnknownD => no_d_envelope(d, ell, kappa),
    }
}

/// Default simulation budget: four times the bound, capped to `u64`.
pub fn default_max_rounds(kind: AlgorithmKind, d: u64, ell: u64, kappa: u64) -> u64 {
    let b = bound_for(kind, d, ell, kappa).saturating_mul(4);
    u64::try_from(b).unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(canon_bound(7), 4928);
        assert_eq!(known_d_bound(1, 1, 60), 492);
        assert_eq!(known_d_bound(3, 2, 60), 8 * 3 * 60 * 2 + 36);
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(12), 4);
        assert_eq!(ceil_log2(16), 4);
        // D = 1, L = 1: d_crit 1 + max(2, 2, 5).
        assert_eq!(no_d_epoch(1, 1), 6);
        assert_eq!(no_d_envelope(1, 1, 60), first_epochs(6, 1, 60));
    }

    #[test]
    fn envelope_is_monotone() {
        for kappa in [1, 60] {
            for ell in 1..=5 {
                let mut prev = 0;
                for d in 1..=300 {
                    let e = no_d_envelope(d, ell, kappa);
                    assert!(e >= prev && e > 0);
                    prev = e;
                    if ell > 1 {
                        assert!(e >= no_d_envelope(d, ell - 1, kappa));
                    }
                }
            }
        }
    }
}
