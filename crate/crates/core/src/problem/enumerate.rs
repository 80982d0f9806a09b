use std::fmt::Debug;
use std::hash::Hash;

use super::DiscreteDistribution;
use crate::error::{Error, Result};

/// Every `count`-tuple of support values with its product mass.
///
/// Materializes the whole outcome set, so it is meant for small spaces;
/// the engine uses [`for_each_tuple`] directly.
pub fn enumerate_outcomes<T: Clone + Eq + Hash + Debug>(
    dist: &DiscreteDistribution<T>,
    count: usize,
    budget: f64,
) -> Result<Vec<(Vec<T>, f64)>> {
    let required = (dist.len() as f64).powi(count as i32);
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: format!("{count}-fold product of a {}-point support", dist.len()),
            required,
            budget,
        });
    }
    let mut out = Vec::with_capacity(required as usize);
    for_each_tuple(dist.len(), count, |idx| {
        let mass = idx.iter().map(|&j| dist.mass(j)).product();
        let items = idx.iter().map(|&j| dist.support()[j].clone()).collect();
        out.push((items, mass));
    });
    Ok(out)
}

/// Odometer over `{0..k}^count` in lexicographic order.
pub fn for_each_tuple(k: usize, count: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 {
        return;
    }
    let mut idx = vec![0usize; count];
    loop {
        f(&idx);
        let mut pos = count;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Number of size-`count` multisets over `k` symbols.
pub fn multiset_count(k: usize, count: usize) -> f64 {
    // C(k + count - 1, count)
    let mut c = 1.0f64;
    for j in 0..count {
        c = c * (k + j) as f64 / (j + 1) as f64;
    }
    c.round()
}

/// Nondecreasing index sequences of length `count` over `{0..k}`, each with
/// the probability of drawing that multiset i.i.d. from `probs`.
pub fn for_each_multiset(probs: &[f64], count: usize, mut f: impl FnMut(&[usize], f64)) {
    let k = probs.len();
    if k == 0 {
        return;
    }
    let mut fact = vec![1.0f64; count + 1];
    for j in 1..=count {
        fact[j] = fact[j - 1] * j as f64;
    }
    let mut idx = vec![0usize; count];
    loop {
        // multinomial coefficient times product of masses
        let mut weight = fact[count];
        let mut run = 0usize;
        for p in 0..count {
            weight *= probs[idx[p]];
            run += 1;
            if p + 1 == count || idx[p + 1] != idx[p] {
                weight /= fact[run];
                run = 0;
            }
        }
        f(&idx, weight);

        let mut pos = count;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] + 1 < k {
                idx[pos] += 1;
                let v = idx[pos];
                for later in idx.iter_mut().skip(pos + 1) {
                    *later = v;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::compensated_sum;

    #[test]
    fn uniform_pair_single_draw() {
        let d = DiscreteDistribution::uniform(vec!['a', 'b']).unwrap();
        let out = enumerate_outcomes(&d, 1, 1e8).unwrap();
        assert_eq!(out, vec![(vec!['a'], 0.5), (vec!['b'], 0.5)]);
    }

    #[test]
    fn point_mass_triple() {
        let d = DiscreteDistribution::uniform(vec!['a']).unwrap();
        let out = enumerate_outcomes(&d, 3, 1e8).unwrap();
        assert_eq!(out, vec![(vec!['a', 'a', 'a'], 1.0)]);
    }

    #[test]
    fn uniform_pair_two_draws() {
        let d = DiscreteDistribution::uniform(vec!['a', 'b']).unwrap();
        let out = enumerate_outcomes(&d, 2, 1e8).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|(_, m)| *m == 0.25));
        let distinct: std::collections::HashSet<_> = out.iter().map(|o| o.0.clone()).collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn budget_is_enforced() {
        let d = DiscreteDistribution::uniform((0..10).collect()).unwrap();
        match enumerate_outcomes(&d, 9, 1e8) {
            Err(Error::BudgetExceeded { required, .. }) => assert_eq!(required, 1e9),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn multisets_match_ordered_tuples() {
        let probs = [0.5, 0.3, 0.2];
        for count in 0..5 {
            let mut ordered = std::collections::BTreeMap::<Vec<usize>, f64>::new();
            for_each_tuple(3, count, |idx| {
                let mut key = idx.to_vec();
                key.sort();
                *ordered.entry(key).or_default() += idx.iter().map(|&j| probs[j]).product::<f64>();
            });
            let mut multi = std::collections::BTreeMap::new();
            for_each_multiset(&probs, count, |idx, w| {
                multi.insert(idx.to_vec(), w);
            });
            assert_eq!(multi.len() as f64, multiset_count(3, count));
            assert_eq!(ordered.len(), multi.len());
            for (k, v) in &ordered {
                assert!((multi[k] - v).abs() < 1e-15, "{k:?}");
            }
            assert!((compensated_sum(multi.values().copied()) - 1.0).abs() < 1e-12);
        }
    }
}
