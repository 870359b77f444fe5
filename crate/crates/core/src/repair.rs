//! Greedy conversion of an arbitrary selection of groups into a legal
//! partition: drop surplus groups, add missing ones, resolve satellites used
//! twice, then place unused satellites.

use crate::error::{Error, Result};
use crate::problem::{Partition, ProblemInstance, SatSet};
use crate::qubo::QuboInstance;

/// Size of the groups added when a selection has too few.
pub const FILL_GROUP_SIZE: usize = 3;

/// Repairs the groups selected by an annealer sample.
pub fn repair(sample: &[bool], q: &QuboInstance, inst: &ProblemInstance) -> Result<Partition> {
    if sample.len() != q.n_vars() {
        return Err(Error::domain(format!(
            "sample has {} bits but the QUBO has {} variables",
            sample.len(),
            q.n_vars()
        )));
    }
    repair_groups(q.decode(sample), inst)
}

/// Repairs an arbitrary list of groups. The result has exactly `k_groups`
/// disjoint groups covering every satellite, sorted by mask.
pub fn repair_groups(groups: Vec<SatSet>, inst: &ProblemInstance) -> Result<Partition> {
    let (n, k) = (inst.n_sats, inst.k_groups);
    let all = inst.all_sats();
    let mut groups: Vec<SatSet> = groups
        .into_iter()
        .map(|g| g.intersection(all))
        .filter(|g| !g.is_empty())
        .collect();
    groups.sort_unstable();
    groups.dedup();

    // steps 1-3 run at most twice: the second pass only happens when
    // deduplication had to discard a group, and then starts disjoint
    for _ in 0..2 {
        drop_weakest(&mut groups, k, inst)?;
        if groups.len() < k {
            if n < FILL_GROUP_SIZE * k {
                return Err(Error::Infeasible(format!(
                    "{n} satellites cannot form {k} groups of {FILL_GROUP_SIZE}"
                )));
            }
            while groups.len() < k {
                let g = fill_group(&mut groups, all, inst)?;
                groups.push(g);
            }
        }
        resolve_overlaps(&mut groups, inst)?;
        if groups.len() == k {
            break;
        }
    }
    place_unused(&mut groups, all, inst)?;

    let p = Partition::new(groups).canonical();
    p.check(n, k)
        .map_err(|d| Error::Infeasible(format!("repair produced an illegal partition: {d:?}")))?;
    Ok(p)
}

/// Step 1: remove the lowest-coverage group until at most `k` remain.
fn drop_weakest(groups: &mut Vec<SatSet>, k: usize, inst: &ProblemInstance) -> Result<()> {
    while groups.len() > k {
        let mut worst = 0;
        let mut worst_cov = f64::INFINITY;
        for (i, &g) in groups.iter().enumerate() {
            let c = inst.coverage(g)?;
            if c < worst_cov || (c == worst_cov && g < groups[worst]) {
                worst = i;
                worst_cov = c;
            }
        }
        groups.remove(worst);
    }
    Ok(())
}

/// Step 2: a new group of three, preferably the best triple of unused
/// satellites. With fewer than three unused, satellites are taken from the
/// groups where they are cheapest to lose.
fn fill_group(groups: &mut [SatSet], all: SatSet, inst: &ProblemInstance) -> Result<SatSet> {
    let used = groups.iter().fold(SatSet::EMPTY, |acc, &g| acc.union(g));
    let unused = all.difference(used);
    if unused.len() >= FILL_GROUP_SIZE {
        return best_triple(unused, inst);
    }
    let mut new = unused;
    while new.len() < FILL_GROUP_SIZE {
        let mut pick: Option<(usize, f64)> = None;
        for s in all.difference(new).sats() {
            let holders = groups.iter().filter(|g| g.contains(s));
            if holders.clone().any(|g| g.len() < 2) {
                continue;
            }
            let mut cost = 0.0;
            for &g in holders {
                cost += inst.coverage(g)? - inst.coverage(g.without(s))?;
            }
            if pick.is_none_or(|(_, c)| cost < c) {
                pick = Some((s, cost));
            }
        }
        let Some((s, _)) = pick else { break };
        for g in groups.iter_mut().filter(|g| g.contains(s)) {
            *g = g.without(s);
        }
        new = new.with(s);
    }
    if new.is_empty() {
        return Err(Error::Infeasible("no satellite available for a new group".into()));
    }
    Ok(new)
}

fn best_triple(pool: SatSet, inst: &ProblemInstance) -> Result<SatSet> {
    let sats: Vec<usize> = pool.sats().collect();
    let mut best: Option<(SatSet, f64)> = None;
    for a in 0..sats.len() {
        for b in a + 1..sats.len() {
            for c in b + 1..sats.len() {
                let t = SatSet::from_sats([sats[a], sats[b], sats[c]]);
                let cov = inst.coverage(t)?;
                let better = match best {
                    None => true,
                    Some((bt, bc)) => cov > bc || (cov == bc && t < bt),
                };
                if better {
                    best = Some((t, cov));
                }
            }
        }
    }
    best.map(|(t, _)| t)
        .ok_or_else(|| Error::Infeasible("fewer than three unused satellites".into()))
}

/// Step 3: a satellite held by several groups is removed from the holder
/// whose coverage drops least, until one holder remains. Satellites are
/// processed in ascending order.
fn resolve_overlaps(groups: &mut Vec<SatSet>, inst: &ProblemInstance) -> Result<()> {
    let overlapped = {
        let mut seen = SatSet::EMPTY;
        let mut twice = SatSet::EMPTY;
        for &g in groups.iter() {
            twice = twice.union(seen.intersection(g));
            seen = seen.union(g);
        }
        twice
    };
    for s in overlapped.sats() {
        loop {
            let holders: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].contains(s)).collect();
            if holders.len() < 2 {
                break;
            }
            let mut pick: Option<(usize, f64)> = None;
            for &i in &holders {
                let g = groups[i];
                if g.len() < 2 {
                    continue;
                }
                let loss = inst.coverage(g)? - inst.coverage(g.without(s))?;
                let better = match pick {
                    None => true,
                    Some((j, l)) => loss < l || (loss == l && g < groups[j]),
                };
                if better {
                    pick = Some((i, loss));
                }
            }
            match pick {
                Some((i, _)) => groups[i] = groups[i].without(s),
                // every holder is exactly {s}: keep one
                None => {
                    groups.remove(holders[1]);
                }
            }
        }
    }
    Ok(())
}

/// Step 4: each unused satellite joins the group it improves most.
fn place_unused(groups: &mut [SatSet], all: SatSet, inst: &ProblemInstance) -> Result<()> {
    let used = groups.iter().fold(SatSet::EMPTY, |acc, &g| acc.union(g));
    for s in all.difference(used).sats() {
        let mut pick: Option<(usize, f64)> = None;
        for (i, &g) in groups.iter().enumerate() {
            let gain = inst.coverage(g.with(s))? - inst.coverage(g)?;
            let better = match pick {
                None => true,
                Some((j, best)) => gain > best || (gain == best && g < groups[j]),
            };
            if better {
                pick = Some((i, gain));
            }
        }
        let (i, _) = pick.ok_or_else(|| Error::Infeasible("no group to place satellites in".into()))?;
        groups[i] = groups[i].with(s);
    }
    Ok(())
}
