//! Ground-truth convergence checking by exhaustive or sampled enumeration of
//! the configuration space.
//!
//! A dynamics converges within k steps iff F^(k+1)(x) = F^k(x) for every
//! configuration x.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{apply_global_unchecked, Configuration, Dynamics};
use crate::error::{FsdError, Result};

pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConvergenceVerdict {
    /// Every checked configuration reached a fixed point within k steps.
    Converges,
    /// Lexicographically smallest witness x with F^(k+1)(x) != F^k(x)
    /// (smallest under exhaustive search; first found under sampling).
    Diverges { witness: Configuration },
}

fn settles_within(dynamics: &Dynamics, x: &Configuration, k: usize) -> bool {
    let mut cur = x.clone();
    for _ in 0..k {
        let next = apply_global_unchecked(dynamics, &cur);
        if next == cur {
            return true;
        }
        cur = next;
    }
    apply_global_unchecked(dynamics, &cur) == cur
}

/// Exact number of steps until a fixed point, or None if the orbit cycles.
pub fn settle_time(dynamics: &Dynamics, x: &Configuration, cap: usize) -> Option<usize> {
    let mut cur = x.clone();
    for t in 0..=cap {
        let next = apply_global_unchecked(dynamics, &cur);
        if next == cur {
            return Some(t);
        }
        cur = next;
    }
    None
}

/// Exhaustive convergence oracle over all q^n configurations. Fails with
/// `BudgetExceeded` when q^n > cap (`DEFAULT_EXHAUSTIVE_CAP` if None).
pub fn converges_within(
    dynamics: &Dynamics,
    k: usize,
    cap: Option<u128>,
) -> Result<ConvergenceVerdict> {
    let cap = cap.unwrap_or(DEFAULT_EXHAUSTIVE_CAP);
    let total = dynamics
        .configuration_count()
        .filter(|&t| t <= cap)
        .ok_or(FsdError::BudgetExceeded {
            total: dynamics.configuration_count().unwrap_or(u128::MAX),
            cap,
        })?;
    let q = dynamics.q();
    let n = dynamics.n();
    let witness = (0..total as u64)
        .into_par_iter()
        .filter(|&idx| {
            let x = Configuration::from_index(idx as u128, q, n);
            !settles_within(dynamics, &x, k)
        })
        .min();
    Ok(match witness {
        None => ConvergenceVerdict::Converges,
        Some(idx) => {
            ConvergenceVerdict::Diverges { witness: Configuration::from_index(idx as u128, q, n) }
        }
    })
}

/// Sampled convergence check: `targeted` configurations first, then uniformly
/// random ones. Absence of a witness is evidence, not proof.
pub fn converges_within_sampled(
    dynamics: &Dynamics,
    k: usize,
    samples: usize,
    seed: u64,
    targeted: &[Configuration],
) -> Result<ConvergenceVerdict> {
    for x in targeted {
        dynamics.validate_configuration(x)?;
        if !settles_within(dynamics, x, k) {
            return Ok(ConvergenceVerdict::Diverges { witness: x.clone() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = dynamics.q();
    let n = dynamics.n();
    for _ in 0..samples {
        let x = Configuration::new((0..n).map(|_| rng.gen_range(0..q)).collect());
        if !settles_within(dynamics, &x, k) {
            return Ok(ConvergenceVerdict::Diverges { witness: x });
        }
    }
    Ok(ConvergenceVerdict::Converges)
}

/// Maximum settle time over all configurations (exhaustive); None when some
/// orbit never reaches a fixed point within `step_cap` steps.
pub fn max_settle_time(
    dynamics: &Dynamics,
    step_cap: usize,
    cap: Option<u128>,
) -> Result<Option<usize>> {
    let cap = cap.unwrap_or(DEFAULT_EXHAUSTIVE_CAP);
    let total = dynamics
        .configuration_count()
        .filter(|&t| t <= cap)
        .ok_or(FsdError::BudgetExceeded {
            total: dynamics.configuration_count().unwrap_or(u128::MAX),
            cap,
        })?;
    let q = dynamics.q();
    let n = dynamics.n();
    let times: Vec<Option<usize>> = (0..total as u64)
        .into_par_iter()
        .map(|idx| settle_time(dynamics, &Configuration::from_index(idx as u128, q, n), step_cap))
        .collect();
    let mut max = 0;
    for t in times {
        match t {
            None => return Ok(None),
            Some(t) => max = max.max(t),
        }
    }
    Ok(Some(max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{LocalFunction, StateAlphabet};
    use crate::graph::{Graph, NodeId};

    fn id(v: u32) -> NodeId {
        NodeId(v)
    }

    fn majority_path3() -> Dynamics {
        // endpoints copy the middle; middle holds its own state
        let g = Graph::new(vec![id(1), id(2), id(3)], &[(id(1), id(2)), (id(2), id(3))]).unwrap();
        let copy_nbr = || LocalFunction::table(1, vec![0, 1, 0, 1], 2).unwrap();
        let hold = LocalFunction::table(2, vec![0, 0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        Dynamics::new(
            g,
            StateAlphabet::new(2).unwrap(),
            [(id(1), copy_nbr()), (id(2), hold), (id(3), copy_nbr())].into(),
        )
        .unwrap()
    }

    #[test]
    fn path_copy_converges_in_one_step() {
        let dynamics = majority_path3();
        assert_eq!(converges_within(&dynamics, 1, None).unwrap(), ConvergenceVerdict::Converges);
        // but not in zero steps: x = (0,1,0) is not fixed
        match converges_within(&dynamics, 0, None).unwrap() {
            ConvergenceVerdict::Diverges { witness } => {
                // smallest non-fixed configuration: index 1 = (1,0,0)
                assert_eq!(witness, Configuration::new(vec![1, 0, 0]));
            }
            v => panic!("expected divergence, got {v:?}"),
        }
        assert_eq!(max_settle_time(&dynamics, 10, None).unwrap(), Some(1));
    }

    #[test]
    fn negation_never_converges() {
        let g = Graph::new(vec![id(1)], &[]).unwrap();
        let f = LocalFunction::table(0, vec![1, 0], 2).unwrap();
        let dynamics =
            Dynamics::new(g, StateAlphabet::new(2).unwrap(), [(id(1), f)].into()).unwrap();
        for k in 0..4 {
            assert!(matches!(
                converges_within(&dynamics, k, None).unwrap(),
                ConvergenceVerdict::Diverges { .. }
            ));
        }
        assert_eq!(max_settle_time(&dynamics, 10, None).unwrap(), None);
        assert!(matches!(
            converges_within_sampled(&dynamics, 3, 10, 7, &[]).unwrap(),
            ConvergenceVerdict::Diverges { .. }
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let dynamics = majority_path3();
        assert!(matches!(
            converges_within(&dynamics, 1, Some(7)),
            Err(FsdError::BudgetExceeded { total: 8, cap: 7 })
        ));
    }
}
