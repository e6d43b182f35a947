//! Greedy matching for pairs and exact branch-and-bound enumeration of
//! stable matchings for small instances.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Coalition, Instance, Matching};
use crate::stability::{verify_stable, RadiusSearch};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("greedy pairing needs d = 2, got d = {0}")]
    NotPairs(usize),
}

/// Repeatedly matches the closest remaining pair; ties go to the
/// lexicographically smallest `(id, id)`.
pub fn greedy_match_2(inst: &Instance) -> Result<Matching, SolverError> {
    if inst.d() != 2 {
        return Err(SolverError::NotPairs(inst.d()));
    }
    let n = inst.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let (lo, hi) = if inst.id(a) <= inst.id(b) { (a, b) } else { (b, a) };
            pairs.push((inst.dist(a, b), lo, hi));
        }
    }
    pairs.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then_with(|| inst.id(x.1).cmp(inst.id(y.1)))
            .then_with(|| inst.id(x.2).cmp(inst.id(y.2)))
    });
    let mut used = vec![false; n];
    let mut out = Vec::with_capacity(n / 2);
    for (_, a, b) in pairs {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            let mut m = vec![a, b];
            m.sort_unstable();
            out.push(Coalition::from_sorted(m));
        }
    }
    Ok(Matching::new(inst, out).expect("greedy pairing covers every agent"))
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub matchings: Vec<Matching>,
    /// True iff the node budget was never hit.
    pub exhaustive: bool,
    /// True iff the search stopped because `limit` matchings were found.
    pub hit_limit: bool,
    pub nodes: u64,
}

impl Enumeration {
    /// The list is exactly the set of stable matchings.
    pub fn complete(&self) -> bool {
        self.exhaustive && !self.hit_limit
    }
}

#[derive(Debug, Clone)]
pub enum Existence {
    Yes(Matching),
    No,
    Unknown,
}

/// Calls `f` on every partition of the agents into size-d coalitions, in
/// the order produced by always extending the lowest unmatched index.
pub fn for_each_partition(inst: &Instance, mut f: impl FnMut(&[Coalition])) {
    let mut used = vec![false; inst.len()];
    let mut acc = Vec::new();
    partition_rec(inst, &mut used, &mut acc, &mut f);
}

fn partition_rec(
    inst: &Instance,
    used: &mut [bool],
    acc: &mut Vec<Coalition>,
    f: &mut dyn FnMut(&[Coalition]),
) {
    let Some(first) = used.iter().position(|u| !u) else {
        f(acc);
        return;
    };
    used[first] = true;
    let rest: Vec<usize> = (first + 1..inst.len()).filter(|&k| !used[k]).collect();
    for_each_subset(&rest, inst.d() - 1, &mut |sub| {
        let mut members = vec![first];
        members.extend_from_slice(sub);
        for &m in sub {
            used[m] = true;
        }
        acc.push(Coalition::from_sorted(members));
        partition_rec(inst, used, acc, f);
        acc.pop();
        for &m in sub {
            used[m] = false;
        }
    });
    used[first] = false;
}

fn for_each_subset(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in start..items.len() {
            if items.len() - i < need {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

/// Number of partitions visited and the stable ones, without any pruning.
pub fn enumerate_stable_reference(inst: &Instance) -> (u64, Vec<Matching>) {
    let mut count = 0u64;
    let mut stable = Vec::new();
    for_each_partition(inst, |cs| {
        count += 1;
        let m = Matching::new(inst, cs.to_vec()).expect("partition is a matching");
        if verify_stable(&m, inst).is_stable() {
            stable.push(m);
        }
    });
    (count, stable)
}

/// Per-agent radius for the pruning test: the actual distance sum for
/// matched agents, and for unmatched agents the smallest sum they could
/// still reach (their d-1 nearest unmatched agents).
fn node_radii(inst: &Instance, owner: &[Option<usize>], coalitions: &[Vec<usize>]) -> Vec<f64> {
    let n = inst.len();
    let free: Vec<usize> = (0..n).filter(|&k| owner[k].is_none()).collect();
    let mut radii = vec![0.0; n];
    let mut buf = Vec::with_capacity(free.len());
    for x in 0..n {
        radii[x] = match owner[x] {
            Some(c) => inst.sum_dist(x, &coalitions[c]),
            None => {
                buf.clear();
                buf.extend(free.iter().filter(|&&y| y != x).map(|&y| inst.dist(x, y)));
                let k = inst.d() - 1;
                if buf.len() > k {
                    buf.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
                }
                buf[..k].iter().sum()
            }
        };
    }
    radii
}

/// True if some coalition beats every member's radius; then no completion
/// of this partial assignment can be stable.
fn node_is_dead(inst: &Instance, owner: &[Option<usize>], coalitions: &[Vec<usize>]) -> bool {
    let radii = node_radii(inst, owner, coalitions);
    RadiusSearch::with_grid(inst, &radii, None).any().is_some()
}

/// A coalition that blocks every completion of the partial assignment
/// `partial`, if the search would prune this node.
pub fn pruning_witness(inst: &Instance, partial: &[Coalition]) -> Option<Coalition> {
    let mut owner = vec![None; inst.len()];
    let coalitions: Vec<Vec<usize>> = partial.iter().map(|c| c.members().to_vec()).collect();
    for (ci, c) in coalitions.iter().enumerate() {
        for &m in c {
            owner[m] = Some(ci);
        }
    }
    let radii = node_radii(inst, &owner, &coalitions);
    RadiusSearch::with_grid(inst, &radii, None).any().map(Coalition::from_sorted)
}

struct Search<'a> {
    inst: &'a Instance,
    limit: usize,
    budget: u64,
    nodes: AtomicU64,
    found: AtomicU64,
    budget_hit: AtomicBool,
}

impl<'a> Search<'a> {
    fn stop(&self) -> bool {
        self.budget_hit.load(Ordering::Relaxed) || self.found.load(Ordering::Relaxed) >= self.limit as u64
    }

    fn tick(&self) -> bool {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.budget {
            self.budget_hit.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    fn rec(&self, owner: &mut Vec<Option<usize>>, coalitions: &mut Vec<Vec<usize>>, out: &mut Vec<Matching>) {
        if self.stop() {
            return;
        }
        let Some(first) = owner.iter().position(|o| o.is_none()) else {
            let cs = coalitions.iter().map(|c| Coalition::from_sorted(c.clone())).collect();
            let m = Matching::new(self.inst, cs).expect("complete assignment is a matching");
            debug_assert!(verify_stable(&m, self.inst).is_stable());
            if self.found.fetch_add(1, Ordering::Relaxed) < self.limit as u64 {
                out.push(m);
            }
            return;
        };
        let rest: Vec<usize> = (first + 1..self.inst.len()).filter(|&k| owner[k].is_none()).collect();
        for_each_subset(&rest, self.inst.d() - 1, &mut |sub| {
            if self.stop() || !self.tick() {
                return;
            }
            let mut members = vec![first];
            members.extend_from_slice(sub);
            self.assign(owner, coalitions, members);
            if !node_is_dead(self.inst, owner, coalitions) {
                self.rec(owner, coalitions, out);
            }
            self.unassign(owner, coalitions);
        });
    }

    fn assign(&self, owner: &mut [Option<usize>], coalitions: &mut Vec<Vec<usize>>, members: Vec<usize>) {
        for &m in &members {
            owner[m] = Some(coalitions.len());
        }
        coalitions.push(members);
    }

    fn unassign(&self, owner: &mut [Option<usize>], coalitions: &mut Vec<Vec<usize>>) {
        if let Some(c) = coalitions.pop() {
            for m in c {
                owner[m] = None;
            }
        }
    }
}

/// Branch and bound over partitions. Every emitted matching is stable;
/// when [`Enumeration::complete`] holds the list contains all of them.
pub fn enumerate_stable(inst: &Instance, limit: Option<usize>, budget: Option<u64>) -> Enumeration {
    let search = Search {
        inst,
        limit: limit.unwrap_or(usize::MAX),
        budget: budget.unwrap_or(u64::MAX),
        nodes: AtomicU64::new(0),
        found: AtomicU64::new(0),
        budget_hit: AtomicBool::new(false),
    };
    let n = inst.len();
    let mut matchings = Vec::new();
    if n > 0 && search.limit > 0 {
        let rest: Vec<usize> = (1..n).collect();
        let mut roots = Vec::new();
        for_each_subset(&rest, inst.d() - 1, &mut |sub| {
            let mut m = vec![0];
            m.extend_from_slice(sub);
            roots.push(m);
        });
        let per_root: Vec<Vec<Matching>> = roots
            .into_par_iter()
            .map(|members| {
                let mut out = Vec::new();
                if search.stop() || !search.tick() {
                    return out;
                }
                let mut owner = vec![None; n];
                let mut coalitions = Vec::new();
                search.assign(&mut owner, &mut coalitions, members);
                if !node_is_dead(inst, &owner, &coalitions) {
                    search.rec(&mut owner, &mut coalitions, &mut out);
                }
                out
            })
            .collect();
        matchings = per_root.into_iter().flatten().collect();
    }
    let hit_limit = matchings.len() >= search.limit;
    matchings.truncate(search.limit);
    Enumeration {
        matchings,
        exhaustive: !search.budget_hit.load(Ordering::Relaxed),
        hit_limit,
        nodes: search.nodes.load(Ordering::Relaxed),
    }
}

pub fn exists_stable(inst: &Instance, budget: Option<u64>) -> Existence {
    if inst.d() == 2 {
        return Existence::Yes(greedy_match_2(inst).expect("d = 2"));
    }
    let e = enumerate_stable(inst, Some(1), budget);
    match e.matchings.into_iter().next() {
        Some(m) => Existence::Yes(m),
        None if e.exhaustive => Existence::No,
        None => Existence::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, Point};

    fn inst(pts: &[(f64, f64)], d: usize) -> Instance {
        let agents = pts
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| Agent::new(k.to_string(), Point::new(x, y)))
            .collect();
        Instance::new(d, agents, None).unwrap()
    }

    #[test]
    fn greedy_collinear() {
        let i = inst(&[(0.0, 0.0), (1.0, 0.0), (10.0, 0.0), (11.0, 0.0)], 2);
        let m = greedy_match_2(&i).unwrap();
        assert_eq!(m.to_ids(&i), vec![vec!["0", "1"], vec!["2", "3"]]);
    }

    #[test]
    fn greedy_two_agents_and_wrong_d() {
        let i = inst(&[(3.0, -1.0), (-7.0, 2.0)], 2);
        assert_eq!(greedy_match_2(&i).unwrap().coalitions().len(), 1);
        let j = inst(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], 3);
        assert_eq!(greedy_match_2(&j), Err(SolverError::NotPairs(3)));
    }

    #[test]
    fn greedy_tie_break_is_lexicographic() {
        // Unit square: four closest pairs of equal length.
        let i = inst(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], 2);
        let m = greedy_match_2(&i).unwrap();
        assert_eq!(m.to_ids(&i), vec![vec!["0", "1"], vec!["2", "3"]]);
    }

    #[test]
    fn three_agents_single_partition() {
        let i = inst(&[(0.0, 0.0), (5.0, 1.0), (2.0, 7.0)], 3);
        let e = enumerate_stable(&i, None, None);
        assert!(e.complete());
        assert_eq!(e.matchings.len(), 1);
    }

    #[test]
    fn two_triangles() {
        let i = inst(
            &[(0.0, 0.0), (100.0, 0.0), (1.0, 0.0), (100.5, 1.0), (0.5, 1.0), (101.0, 0.0)],
            3,
        );
        let mut count = 0;
        for_each_partition(&i, |_| count += 1);
        assert_eq!(count, 10);
        let e = enumerate_stable(&i, None, None);
        assert!(e.complete());
        assert_eq!(e.matchings.len(), 1);
        assert_eq!(e.matchings[0].to_ids(&i), vec![vec!["0", "2", "4"], vec!["1", "3", "5"]]);
        assert!(matches!(exists_stable(&i, None), Existence::Yes(_)));
    }

    #[test]
    fn budget_cut_reports_non_exhaustive() {
        let pts: Vec<(f64, f64)> = (0..9).map(|k| ((k * 7 % 5) as f64, (k * 3 % 4) as f64)).collect();
        let i = inst(&pts, 3);
        let e = enumerate_stable(&i, None, Some(3));
        assert!(!e.exhaustive);
        assert!(matches!(exists_stable(&i, Some(0)), Existence::Unknown));
    }
}
