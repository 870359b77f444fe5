//! Exact solvers and counting functions for checking heuristics on small
//! instances.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::problem::{Partition, ProblemInstance, SatSet, Vertex};

/// Largest number of partitions [`exact_best_partition`] will enumerate.
pub const PARTITION_GUARD: u64 = 100_000_000;

pub const STIRLING_MAX_N: usize = 200;

/// Stirling number of the second kind, `S(n, k)`.
pub fn stirling2(n: usize, k: usize) -> Result<BigUint> {
    if k > n || n > STIRLING_MAX_N {
        return Err(Error::domain(format!(
            "stirling2 needs 0 <= k <= n <= {STIRLING_MAX_N}, got n={n} k={k}"
        )));
    }
    // row[j] = S(i, j), updated in place right to left
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            let prev = std::mem::take(&mut row[j]);
            row[j] = prev * BigUint::from(j) + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    Ok(std::mem::take(&mut row[k]))
}

pub fn binomial(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(Error::domain(format!("binomial needs k <= n, got n={n} k={k}")));
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    Ok(acc)
}

/// `C(n, k)` for the small arguments used in enumeration sizing; 0 when
/// `k > n`.
pub(crate) fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc
}

/// Calls `visit` with the blocks of every partition of `{1..=n}` into
/// exactly `k` nonempty blocks, in lexicographic restricted-growth-string
/// order. Blocks are listed in order of their smallest element.
pub fn for_each_partition(n: usize, k: usize, mut visit: impl FnMut(&[SatSet])) {
    if k == 0 || k > n {
        if n == 0 && k == 0 {
            visit(&[]);
        }
        return;
    }
    let mut blocks = vec![SatSet::EMPTY; k];
    rgs(0, n, k, 0, &mut blocks, &mut visit);
}

fn rgs(
    elem: usize,
    n: usize,
    k: usize,
    used: usize,
    blocks: &mut [SatSet],
    visit: &mut impl FnMut(&[SatSet]),
) {
    if elem == n {
        if used == k {
            visit(blocks);
        }
        return;
    }
    // not enough elements left to open the missing blocks
    if k - used > n - elem {
        return;
    }
    let sat = elem + 1;
    let top = if used < k { used + 1 } else { used };
    for b in 0..top {
        blocks[b] = blocks[b].with(sat);
        rgs(elem + 1, n, k, used.max(b + 1), blocks, visit);
        blocks[b] = blocks[b].without(sat);
    }
}

/// Best admissible partition of the instance into `k_groups` groups by mean
/// coverage. Partitions with a group outside `min_group..=max_group` are
/// skipped. Ties keep the lexicographically first restricted-growth string.
pub fn exact_best_partition(inst: &ProblemInstance) -> Result<(Partition, f64)> {
    let (n, k) = (inst.n_sats, inst.k_groups);
    let count = stirling2(n, k)?;
    if count > BigUint::from(PARTITION_GUARD) {
        return Err(Error::GuardExceeded {
            n,
            k,
            count,
            limit: PARTITION_GUARD,
        });
    }
    let sizes = inst.min_group..=inst.max_group;
    let mut best: Option<(Vec<SatSet>, f64)> = None;
    let mut failure = None;
    for_each_partition(n, k, |blocks| {
        if failure.is_some() || !blocks.iter().all(|b| sizes.contains(&b.len())) {
            return;
        }
        let mut sum = 0.0;
        for &b in blocks {
            match inst.coverage(b) {
                Ok(w) => sum += w,
                Err(e) => {
                    failure = Some(e);
                    return;
                }
            }
        }
        let score = sum / k as f64;
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((blocks.to_vec(), score));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (groups, score) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no partition of {n} satellites into {k} groups of size {}..={}",
            inst.min_group, inst.max_group
        ))
    })?;
    Ok((Partition::new(groups), score))
}

/// Best set of `k` pairwise disjoint vertices by mean weight, searching only
/// the given vertex list. Ties keep the first index combination.
pub fn exact_best_clique(vertices: &[Vertex], k: usize) -> Option<(Vec<usize>, f64)> {
    fn extend(
        vertices: &[Vertex],
        k: usize,
        start: usize,
        used: SatSet,
        chosen: &mut Vec<usize>,
        sum: f64,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if chosen.len() == k {
            let mean = sum / k as f64;
            if best.as_ref().is_none_or(|(_, b)| mean > *b) {
                *best = Some((chosen.clone(), mean));
            }
            return;
        }
        for i in start..vertices.len() {
            let v = vertices[i];
            if v.sats.is_disjoint(used) {
                chosen.push(i);
                extend(vertices, k, i + 1, used.union(v.sats), chosen, sum + v.weight, best);
                chosen.pop();
            }
        }
    }
    if k == 0 {
        return None;
    }
    let mut best = None;
    extend(vertices, k, 0, SatSet::EMPTY, &mut Vec::new(), 0.0, &mut best);
    best
}

/// Approximate magnitude of a big count, for messages.
pub fn approx_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
