//! Channel arbitration among backlogged transmitters.
//!
//! Each transmission opportunity goes to one backlogged contender chosen
//! uniformly at random, which gives every contender an equal long-run share
//! of transmissions. Backoff slots and collisions are not modelled.

use super::rng::SimRng;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Station {
    AccessPoint,
    Uplink(usize),
}

pub fn mac_grant(contenders: &[Station], rng: &mut SimRng) -> Result<Station, SimError> {
    match contenders.len() {
        0 => Err(SimError::IdleGrant),
        1 => Ok(contenders[0]),
        n => Ok(contenders[rng.below(n)]),
    }
}

/// Grant counts for `stations` permanently backlogged contenders over
/// `rounds` transmission opportunities. Index 0 is the access point.
pub fn saturated_grant_counts(
    stations: usize,
    rounds: usize,
    seed: u64,
) -> Result<Vec<u64>, SimError> {
    let contenders: Vec<Station> = std::iter::once(Station::AccessPoint)
        .chain((0..stations.saturating_sub(1)).map(Station::Uplink))
        .take(stations)
        .collect();
    let mut rng = SimRng::new(seed);
    let mut counts = vec![0u64; contenders.len()];
    for _ in 0..rounds {
        let pick = match mac_grant(&contenders, &mut rng)? {
            Station::AccessPoint => 0,
            Station::Uplink(i) => i + 1,
        };
        counts[pick] += 1;
    }
    Ok(counts)
}
