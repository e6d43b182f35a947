//! Blocking-coalition tests and searches.
//!
//! The pruned search rests on one observation: if `W` blocks, every member
//! `w` satisfies `dist(w, v) <= sum_dist(w, W) < r(w)` for all `v` in `W`,
//! where `r(w)` is the distance sum `w` currently has. Candidates are
//! therefore generated from the member with the smallest radius and every
//! further member must lie inside the radius of everyone chosen so far.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::model::{Coalition, Instance, Matching, ModelError, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct BlockingWitness {
    pub coalition: Coalition,
    /// `(agent, old sum, new sum)` for every member.
    pub improvements: Vec<(usize, f64, f64)>,
}

impl BlockingWitness {
    pub fn ids<'a>(&self, inst: &'a Instance) -> Vec<&'a str> {
        self.coalition.ids(inst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Naive,
    Pruned,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Stable,
    Unstable(BlockingWitness),
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }
}

/// Returns a witness iff every member of `w` strictly prefers `w` to its
/// coalition in `matching`.
pub fn is_blocking(
    w: &Coalition,
    matching: &Matching,
    inst: &Instance,
) -> Result<Option<BlockingWitness>, ModelError> {
    if w.members().len() != inst.d() {
        return Err(ModelError::WrongSize { got: w.members().len(), expected: inst.d() });
    }
    let mut improvements = Vec::with_capacity(inst.d());
    for &x in w.members() {
        let old = inst.sum_dist(x, matching.of(x).members());
        let new = inst.sum_dist(x, w.members());
        if !inst.improves(new, old) {
            return Ok(None);
        }
        improvements.push((x, old, new));
    }
    Ok(Some(BlockingWitness { coalition: w.clone(), improvements }))
}

pub fn find_blocking(matching: &Matching, inst: &Instance, mode: SearchMode) -> Option<BlockingWitness> {
    let radii = matching.current_sums(inst);
    let found = match mode {
        SearchMode::Naive => naive_search(inst, &radii),
        SearchMode::Pruned => RadiusSearch::new(inst, &radii).lex_min(),
    }?;
    let c = Coalition::from_sorted(found);
    is_blocking(&c, matching, inst).expect("coalition has size d")
}

/// Lexicographically first blocking coalition that contains every agent in
/// `fixed`. Candidates are limited to agents strictly inside the current
/// distance-sum radius of each fixed agent.
pub fn find_blocking_containing(matching: &Matching, inst: &Instance, fixed: &[usize]) -> Option<BlockingWitness> {
    let d = inst.d();
    let mut fixed = fixed.to_vec();
    fixed.sort_unstable();
    fixed.dedup();
    if fixed.len() > d {
        return None;
    }
    let radii = matching.current_sums(inst);
    let cands: Vec<usize> = (0..inst.len())
        .filter(|k| !fixed.contains(k))
        .filter(|&k| fixed.iter().all(|&f| inst.dist(f, k) < radii[f]))
        .collect();
    let need = d - fixed.len();
    if need > cands.len() {
        return None;
    }
    let mut pick: Vec<usize> = (0..need).collect();
    loop {
        let mut members: Vec<usize> = fixed.iter().copied().chain(pick.iter().map(|&i| cands[i])).collect();
        members.sort_unstable();
        if improves_all(inst, &radii, &members) {
            return is_blocking(&Coalition::from_sorted(members), matching, inst).expect("coalition has size d");
        }
        // Next combination of `need` candidate positions.
        let mut i = need;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if pick[i] < cands.len() - need + i {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..need {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

pub fn verify_stable(matching: &Matching, inst: &Instance) -> Verdict {
    match find_blocking(matching, inst, SearchMode::Pruned) {
        None => Verdict::Stable,
        Some(w) => Verdict::Unstable(w),
    }
}

/// True iff `members` (sorted) improves on `radii` for every member.
fn improves_all(inst: &Instance, radii: &[f64], members: &[usize]) -> bool {
    members.iter().all(|&x| inst.improves(inst.sum_dist(x, members), radii[x]))
}

/// Lexicographically first d-subset (by index) that beats every member's radius.
pub(crate) fn naive_search(inst: &Instance, radii: &[f64]) -> Option<Vec<usize>> {
    let n = inst.len();
    let d = inst.d();
    let mut idx: Vec<usize> = (0..d).collect();
    if d > n {
        return None;
    }
    loop {
        if improves_all(inst, radii, &idx) {
            return Some(idx);
        }
        // Advance to the next combination in lexicographic order.
        let mut i = d;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if idx[i] < n - d + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Uniform-grid bucket index over agent positions.
pub struct SpatialGrid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    keys: Vec<(i64, i64)>,
    positions: Vec<Point>,
}

impl SpatialGrid {
    pub fn new(positions: Vec<Point>, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, p) in positions.iter().enumerate() {
            buckets.entry(Self::key_of(cell, *p)).or_default().push(k);
        }
        let mut keys: Vec<_> = buckets.keys().copied().collect();
        keys.sort_unstable();
        Self { cell, buckets, keys, positions }
    }

    /// Grid with cell size equal to the median nearest-neighbour distance.
    pub fn for_instance(inst: &Instance) -> Self {
        let positions: Vec<Point> = inst.agents().iter().map(|a| a.pos).collect();
        let diam = inst.diameter();
        let floor = if diam > 0.0 { diam * 1e-9 } else { 1.0 };
        let rough = if diam > 0.0 { diam / (positions.len() as f64).sqrt() } else { 1.0 };
        let probe = SpatialGrid::new(positions.clone(), rough.max(floor));
        let mut nn: Vec<f64> = (0..positions.len()).filter_map(|k| probe.nearest_other(k)).collect();
        let cell = if nn.is_empty() {
            1.0
        } else {
            let mid = nn.len() / 2;
            let (_, m, _) = nn.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
            m.max(floor)
        };
        SpatialGrid::new(positions, cell)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn key_of(cell: f64, p: Point) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    fn nearest_other(&self, k: usize) -> Option<f64> {
        if self.positions.len() < 2 {
            return None;
        }
        let p = self.positions[k];
        let mut r = self.cell;
        loop {
            let mut best = f64::INFINITY;
            self.for_each_within(p, r, |j| {
                if j != k {
                    best = best.min(crate::model::dist(p, self.positions[j]));
                }
            });
            if best <= r {
                return Some(best);
            }
            r *= 2.0;
        }
    }

    /// Calls `f` on every point with distance at most `r` from `p`.
    pub fn for_each_within(&self, p: Point, r: f64, mut f: impl FnMut(usize)) {
        let lo = Self::key_of(self.cell, Point::new(p.x - r, p.y - r));
        let hi = Self::key_of(self.cell, Point::new(p.x + r, p.y + r));
        let span = (hi.0 - lo.0 + 1) as f64 * (hi.1 - lo.1 + 1) as f64;
        let mut visit = |bucket: &Vec<usize>| {
            for &j in bucket {
                if crate::model::dist(p, self.positions[j]) <= r {
                    f(j);
                }
            }
        };
        if span > self.keys.len() as f64 {
            for key in &self.keys {
                if key.0 >= lo.0 && key.0 <= hi.0 && key.1 >= lo.1 && key.1 <= hi.1 {
                    visit(&self.buckets[key]);
                }
            }
        } else {
            for gx in lo.0..=hi.0 {
                for gy in lo.1..=hi.1 {
                    if let Some(b) = self.buckets.get(&(gx, gy)) {
                        visit(b);
                    }
                }
            }
        }
    }

    /// Sorted indices of points with distance strictly below `r` from `p`.
    pub fn within(&self, p: Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(p, r, |j| {
            if crate::model::dist(p, self.positions[j]) < r {
                out.push(j);
            }
        });
        out.sort_unstable();
        out
    }
}

/// Radius-pruned search for a coalition improving every member's radius.
pub(crate) struct RadiusSearch<'a> {
    inst: &'a Instance,
    radii: &'a [f64],
    grid: Option<SpatialGrid>,
    /// `rank[k]` = position of agent `k` when sorted by (radius, index).
    rank: Vec<usize>,
}

impl<'a> RadiusSearch<'a> {
    pub fn new(inst: &'a Instance, radii: &'a [f64]) -> Self {
        let grid = if inst.len() > 64 { Some(SpatialGrid::for_instance(inst)) } else { None };
        Self::with_grid(inst, radii, grid)
    }

    pub fn with_grid(inst: &'a Instance, radii: &'a [f64], grid: Option<SpatialGrid>) -> Self {
        let mut order: Vec<usize> = (0..inst.len()).collect();
        order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
        let mut rank = vec![0; inst.len()];
        for (r, &k) in order.iter().enumerate() {
            rank[k] = r;
        }
        Self { inst, radii, grid, rank }
    }

    fn candidates(&self, p: usize) -> Vec<usize> {
        let tau = self.inst.tolerance();
        let r = self.radii[p] - tau;
        if r <= 0.0 {
            return Vec::new();
        }
        let pos = self.inst.pos(p);
        let mut out = match &self.grid {
            Some(g) => g.within(pos, r),
            None => (0..self.inst.len()).filter(|&q| self.inst.dist(p, q) < r).collect(),
        };
        out.retain(|&q| q != p && self.rank[q] > self.rank[p]);
        out
    }

    /// Enumerates improving coalitions whose smallest-radius member is `p`.
    /// `visit` returns `true` to stop early.
    fn search_from(&self, p: usize, visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let cands = self.candidates(p);
        let d = self.inst.d();
        if cands.len() + 1 < d {
            return false;
        }
        let mut chosen = vec![p];
        let mut partial = vec![0.0f64];
        self.extend(&cands, 0, &mut chosen, &mut partial, visit)
    }

    fn extend(
        &self,
        cands: &[usize],
        start: usize,
        chosen: &mut Vec<usize>,
        partial: &mut Vec<f64>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        let d = self.inst.d();
        let tau = self.inst.tolerance();
        if chosen.len() == d {
            let mut sorted = chosen.clone();
            sorted.sort_unstable();
            return visit(&sorted);
        }
        let need = d - chosen.len();
        for ci in start..cands.len() {
            if cands.len() - ci < need {
                break;
            }
            let q = cands[ci];
            let rq = self.radii[q] - tau;
            let mut sum_q = 0.0;
            let mut ok = true;
            for (k, &c) in chosen.iter().enumerate() {
                let dqc = self.inst.dist(q, c);
                sum_q += dqc;
                if partial[k] + dqc >= self.radii[c] - tau || sum_q >= rq {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            for (k, &c) in chosen.iter().enumerate() {
                partial[k] += self.inst.dist(q, c);
            }
            chosen.push(q);
            partial.push(sum_q);
            let stop = self.extend(cands, ci + 1, chosen, partial, visit);
            chosen.pop();
            partial.pop();
            for (k, &c) in chosen.iter().enumerate() {
                partial[k] -= self.inst.dist(q, c);
            }
            if stop {
                return true;
            }
        }
        false
    }

    fn min_from(&self, p: usize) -> Option<Vec<usize>> {
        let mut best: Option<Vec<usize>> = None;
        self.search_from(p, &mut |w| {
            if best.as_deref().map_or(true, |b| w < b) {
                best = Some(w.to_vec());
            }
            false
        });
        best
    }

    /// The lexicographically smallest improving coalition, independent of
    /// evaluation order.
    pub fn lex_min(&self) -> Option<Vec<usize>> {
        let n = self.inst.len();
        if n >= 256 {
            (0..n).into_par_iter().filter_map(|p| self.min_from(p)).min()
        } else {
            (0..n).filter_map(|p| self.min_from(p)).min()
        }
    }

    /// Any improving coalition (first found in radius order).
    pub fn any(&self) -> Option<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.inst.len()).collect();
        order.sort_by_key(|&k| self.rank[k]);
        for p in order {
            let mut found = None;
            self.search_from(p, &mut |w| {
                found = Some(w.to_vec());
                true
            });
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Agent, Point};

    fn line(xs: &[f64], d: usize) -> Instance {
        let agents = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| Agent::new(k.to_string(), Point::new(x, 0.0)))
            .collect();
        Instance::new(d, agents, None).unwrap()
    }

    #[test]
    fn own_coalition_never_blocks() {
        let i = line(&[0.0, 1.0, 10.0, 11.0], 2);
        let m = Matching::from_ids(&i, &[vec!["0", "2"], vec!["1", "3"]]).unwrap();
        for c in m.coalitions() {
            assert!(is_blocking(c, &m, &i).unwrap().is_none());
        }
        let w = Coalition::from_ids(&i, &["0", "1"]).unwrap();
        let wit = is_blocking(&w, &m, &i).unwrap().unwrap();
        assert_eq!(wit.improvements.len(), 2);
        assert!(wit.improvements.iter().all(|&(_, old, new)| new < old));
    }

    #[test]
    fn wrong_size_is_rejected() {
        let i = line(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 3);
        let m = Matching::from_ids(&i, &[vec!["0", "1", "2"], vec!["3", "4", "5"]]).unwrap();
        let c = Coalition::from_sorted(vec![0, 1]);
        assert!(matches!(is_blocking(&c, &m, &i), Err(ModelError::WrongSize { .. })));
    }

    #[test]
    fn naive_and_pruned_agree_on_line() {
        let i = line(&[0.0, 1.0, 10.0, 11.0], 2);
        let bad = Matching::from_ids(&i, &[vec!["0", "2"], vec!["1", "3"]]).unwrap();
        let good = Matching::from_ids(&i, &[vec!["0", "1"], vec!["2", "3"]]).unwrap();
        for m in [&bad, &good] {
            let a = find_blocking(m, &i, SearchMode::Naive);
            let b = find_blocking(m, &i, SearchMode::Pruned);
            assert_eq!(a, b);
        }
        assert!(verify_stable(&good, &i).is_stable());
        let w = find_blocking(&bad, &i, SearchMode::Pruned).unwrap();
        assert_eq!(w.ids(&i), vec!["0", "1"]);
    }

    #[test]
    fn grid_query_matches_brute_force() {
        let pts: Vec<Point> = (0..200)
            .map(|k| Point::new(((k * 37) % 101) as f64 * 0.7, ((k * 53) % 89) as f64 * 1.3))
            .collect();
        let g = SpatialGrid::new(pts.clone(), 2.5);
        for &(k, r) in &[(0usize, 5.0), (17, 30.0), (99, 0.5), (150, 500.0)] {
            let want: Vec<usize> =
                (0..pts.len()).filter(|&j| crate::model::dist(pts[k], pts[j]) < r).collect();
            assert_eq!(g.within(pts[k], r), want);
        }
    }

    mod props {
        use super::*;
        use crate::checks::{random_instance, random_matching, stream};
        use proptest::prelude::*;

        /// All sorted d-subsets of `0..n`.
        fn subsets(n: usize, d: usize) -> Vec<Vec<usize>> {
            if d == 0 {
                return vec![vec![]];
            }
            (0..n)
                .flat_map(|last| {
                    subsets(last, d - 1).into_iter().map(move |mut s| {
                        s.push(last);
                        s
                    })
                })
                .collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn restricted_search_is_lex_min_among_blockers(seed in any::<u64>(), k in 0usize..3, f in 0usize..9) {
                let inst = random_instance(9, 3, 50.0, seed, 0);
                let m = random_matching(&inst, &mut stream(seed, 1));
                let fixed: Vec<usize> = (0..=k.min(1)).map(|j| (f + 4 * j) % 9).collect();
                let mut want: Vec<Vec<usize>> = subsets(9, 3)
                    .into_iter()
                    .filter(|s| fixed.iter().all(|x| s.contains(x)))
                    .filter(|s| is_blocking(&Coalition::from_sorted(s.clone()), &m, &inst).unwrap().is_some())
                    .collect();
                want.sort();
                let got = find_blocking_containing(&m, &inst, &fixed).map(|w| w.coalition.members().to_vec());
                prop_assert_eq!(got, want.first().cloned());
            }

            #[test]
            fn pruned_and_naive_agree(seed in any::<u64>(), d in 2usize..4) {
                let inst = random_instance(6 * d, d, 30.0, seed, 0);
                let m = random_matching(&inst, &mut stream(seed, 1));
                prop_assert_eq!(
                    find_blocking(&m, &inst, SearchMode::Naive),
                    find_blocking(&m, &inst, SearchMode::Pruned)
                );
            }
        }
    }
}
