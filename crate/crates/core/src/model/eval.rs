//! Exact evaluation of strategies against an activation distribution.

use super::{move_count, success_codes, ActivationPmf, DeterministicStrategy, MixedStrategy};
use crate::error::{Error, Result};

fn check_sensors(strategy_n: usize, pmf: &ActivationPmf) -> Result<()> {
    if strategy_n != pmf.n_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "strategy covers {strategy_n} sensor(s), pmf has N={}",
            pmf.n_sensors()
        )));
    }
    Ok(())
}

/// Success probability of a deterministic strategy: the mass of the support
/// sets on which the predicate holds.
pub fn expected_success_deterministic(
    strategy: &DeterministicStrategy,
    pmf: &ActivationPmf,
) -> Result<f64> {
    check_sensors(strategy.n_sensors(), pmf)?;
    Ok(value_of_codes(&strategy.codes(), pmf))
}

/// Same sum as [`expected_success_deterministic`] over raw move codes,
/// visiting the support in its stored order.
pub(crate) fn value_of_codes(codes: &[u32], pmf: &ActivationPmf) -> f64 {
    let mut total = 0.0;
    for (set, p) in pmf.support() {
        if success_codes(set.members().iter().map(|&s| codes[s])) {
            total += p;
        }
    }
    total
}

/// Success probability of a mixed strategy.
///
/// For every support set the joint moves of the active sensors are
/// enumerated (`(2^M)^A` combinations); inactive sensors stay silent and do
/// not enter the product.
pub fn expected_success_mixed(phi: &MixedStrategy, pmf: &ActivationPmf) -> Result<f64> {
    check_sensors(phi.n_sensors(), pmf)?;
    let arms = move_count(phi.channels());
    let mut total = 0.0;
    let mut codes = Vec::new();
    for (set, p) in pmf.support() {
        let members = set.members();
        // Only moves with positive probability can contribute.
        let choices: Vec<Vec<(u32, f64)>> = members
            .iter()
            .map(|&s| {
                phi.row(s)
                    .iter()
                    .enumerate()
                    .filter(|(_, &q)| q > 0.0)
                    .map(|(c, &q)| (c as u32, q))
                    .collect()
            })
            .collect();
        debug_assert!(choices.iter().all(|c| !c.is_empty() && c.len() <= arms));

        let mut idx = vec![0usize; members.len()];
        let mut inner = 0.0;
        'outer: loop {
            codes.clear();
            let mut weight = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                let (c, q) = choices[k][i];
                codes.push(c);
                weight *= q;
            }
            if success_codes(codes.iter().copied()) {
                inner += weight;
            }
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        total += p * inner;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActiveSet, ChannelMove};

    fn set(m: &[usize]) -> ActiveSet {
        ActiveSet::new(m.to_vec()).unwrap()
    }

    fn uniform_pairs_3() -> ActivationPmf {
        ActivationPmf::new(
            3,
            vec![
                (set(&[0, 1]), 1.0 / 3.0),
                (set(&[0, 2]), 1.0 / 3.0),
                (set(&[1, 2]), 1.0 / 3.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn one_transmitter_among_pairs() {
        let s = DeterministicStrategy::from_codes(&[1, 0, 0], 1).unwrap();
        let v = expected_success_deterministic(&s, &uniform_pairs_3()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn silent_strategy_never_succeeds() {
        let s = DeterministicStrategy::silent(3, 2).unwrap();
        assert_eq!(
            expected_success_deterministic(&s, &uniform_pairs_3()).unwrap(),
            0.0
        );
    }

    #[test]
    fn dimension_mismatch() {
        let s = DeterministicStrategy::silent(4, 2).unwrap();
        assert!(matches!(
            expected_success_deterministic(&s, &uniform_pairs_3()),
            Err(Error::DimensionMismatch(_))
        ));
        let phi = MixedStrategy::from_deterministic(&s);
        assert!(expected_success_mixed(&phi, &uniform_pairs_3()).is_err());
    }

    #[test]
    fn mixed_uniform_single_channel() {
        let pmf = ActivationPmf::new(2, vec![(set(&[0, 1]), 1.0)]).unwrap();
        let phi = MixedStrategy::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], 1).unwrap();
        assert_eq!(expected_success_mixed(&phi, &pmf).unwrap(), 0.5);
    }

    #[test]
    fn mixed_point_mass_matches_deterministic() {
        let pmf = uniform_pairs_3();
        for codes in [[0u32, 1, 2], [3, 3, 1], [1, 2, 3], [0, 0, 0]] {
            let s = DeterministicStrategy::from_codes(&codes, 2).unwrap();
            let phi = MixedStrategy::from_deterministic(&s);
            assert_eq!(
                expected_success_mixed(&phi, &pmf).unwrap(),
                expected_success_deterministic(&s, &pmf).unwrap()
            );
        }
    }

    #[test]
    fn lone_sensor_support() {
        let pmf = ActivationPmf::new(1, vec![(set(&[0]), 1.0)]).unwrap();
        let s = DeterministicStrategy::new(vec![ChannelMove::new(1, 1).unwrap()]).unwrap();
        assert_eq!(expected_success_deterministic(&s, &pmf).unwrap(), 1.0);
    }
}
