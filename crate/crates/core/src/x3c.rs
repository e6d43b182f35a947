//! Exact cover by 3-sets where every element occurs in exactly three sets.

use serde::{Deserialize, Serialize};

use crate::report::Report;

/// Elements are `1..=3n`; `sets` holds `m = 3n` triples, indexed from 1 in
/// ids and messages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct X3CInstance {
    pub n: usize,
    pub sets: Vec<[usize; 3]>,
}

/// Zero-based indices into `sets`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover(pub Vec<usize>);

/// Bipartite graph with element vertices `u_1..u_3n` and set vertices
/// `w_1..w_m`. Edges are `(element, set)` pairs, one-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociatedGraph {
    pub elements: usize,
    pub sets: usize,
    pub edges: Vec<(usize, usize)>,
}

impl AssociatedGraph {
    pub fn degree_element(&self, i: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == i).count()
    }

    pub fn degree_set(&self, j: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == j).count()
    }
}

impl X3CInstance {
    pub fn new(n: usize, sets: Vec<[usize; 3]>) -> Self {
        Self { n, sets }
    }

    /// The hexagonal-prism instance on six elements. Its associated graph
    /// is planar and it has exactly three exact covers:
    /// `{S1, S6}`, `{S2, S4}` and `{S3, S5}`.
    pub fn prism() -> Self {
        Self::new(2, vec![[1, 2, 4], [2, 3, 5], [1, 3, 6], [1, 4, 6], [2, 4, 5], [3, 5, 6]])
    }

    pub fn elements(&self) -> std::ops::RangeInclusive<usize> {
        1..=3 * self.n
    }

    /// Sets containing element `i`, zero-based, in order.
    pub fn sets_of(&self, i: usize) -> Vec<usize> {
        (0..self.sets.len()).filter(|&j| self.sets[j].contains(&i)).collect()
    }

    pub fn is_cover(&self, cover: &Cover) -> bool {
        let mut seen = vec![false; 3 * self.n + 1];
        if cover.0.len() != self.n {
            return false;
        }
        for &j in &cover.0 {
            let Some(s) = self.sets.get(j) else { return false };
            for &e in s {
                if e == 0 || e > 3 * self.n || seen[e] {
                    return false;
                }
                seen[e] = true;
            }
        }
        true
    }
}

pub fn validate_x3c(inst: &X3CInstance) -> Report {
    let mut r = Report::new();
    r.check("n >= 1", inst.n >= 1, format!("n = {}", inst.n));
    r.check(
        "m = 3n",
        inst.sets.len() == 3 * inst.n,
        format!("m = {}, 3n = {}", inst.sets.len(), 3 * inst.n),
    );
    for (j, s) in inst.sets.iter().enumerate() {
        let in_range = s.iter().all(|&e| e >= 1 && e <= 3 * inst.n);
        r.check(format!("S{} elements in range", j + 1), in_range, format!("{s:?}"));
        let distinct = s[0] != s[1] && s[1] != s[2] && s[0] != s[2];
        r.check(format!("S{} has 3 distinct elements", j + 1), distinct, format!("{s:?}"));
    }
    for i in inst.elements() {
        let k = inst.sets_of(i).len();
        r.check(format!("element {i} occurs in 3 sets"), k == 3, format!("{k} occurrences"));
    }
    r
}

pub fn associated_graph(inst: &X3CInstance) -> AssociatedGraph {
    let mut edges = Vec::new();
    for i in inst.elements() {
        for j in inst.sets_of(i) {
            edges.push((i, j + 1));
        }
    }
    AssociatedGraph { elements: 3 * inst.n, sets: inst.sets.len(), edges }
}

/// Backtracking over the sets containing the smallest uncovered element.
/// Returns the lexicographically first cover in set order.
pub fn solve_x3c_bruteforce(inst: &X3CInstance) -> Option<Cover> {
    fn go(inst: &X3CInstance, covered: &mut Vec<bool>, chosen: &mut Vec<usize>) -> bool {
        let Some(first) = (1..covered.len()).find(|&e| !covered[e]) else {
            return true;
        };
        for j in 0..inst.sets.len() {
            let s = inst.sets[j];
            if !s.contains(&first) || s.iter().any(|&e| e == 0 || e >= covered.len() || covered[e]) {
                continue;
            }
            if s[0] == s[1] || s[1] == s[2] || s[0] == s[2] {
                continue;
            }
            for &e in &s {
                covered[e] = true;
            }
            chosen.push(j);
            if go(inst, covered, chosen) {
                return true;
            }
            chosen.pop();
            for &e in &s {
                covered[e] = false;
            }
        }
        false
    }
    let mut covered = vec![false; 3 * inst.n + 1];
    let mut chosen = Vec::new();
    if go(inst, &mut covered, &mut chosen) {
        chosen.sort_unstable();
        Some(Cover(chosen))
    } else {
        None
    }
}

/// Every exact cover, by enumerating all n-subsets of sets.
pub fn all_covers(inst: &X3CInstance) -> Vec<Cover> {
    fn go(inst: &X3CInstance, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Cover>) {
        if cur.len() == inst.n {
            let c = Cover(cur.clone());
            if inst.is_cover(&c) {
                out.push(c);
            }
            return;
        }
        for j in start..inst.sets.len() {
            cur.push(j);
            go(inst, j + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(inst, 0, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prism_is_valid_with_three_covers() {
        let inst = X3CInstance::prism();
        assert!(validate_x3c(&inst).passed());
        let covers = all_covers(&inst);
        assert_eq!(covers, vec![Cover(vec![0, 5]), Cover(vec![1, 3]), Cover(vec![2, 4])]);
        let c = solve_x3c_bruteforce(&inst).unwrap();
        assert_eq!(c, Cover(vec![0, 5]));
        assert!(inst.is_cover(&c));
    }

    #[test]
    fn structural_failures() {
        let mut inst = X3CInstance::prism();
        inst.sets[1] = [1, 3, 5];
        let rep = validate_x3c(&inst);
        assert!(rep.failures().iter().any(|c| c.name == "element 1 occurs in 3 sets"));
        let mut inst = X3CInstance::prism();
        inst.sets.pop();
        let rep = validate_x3c(&inst);
        assert!(rep.failures().iter().any(|c| c.name == "m = 3n"));
        let inst = X3CInstance::new(1, vec![[1, 1, 2], [1, 2, 3], [1, 2, 3]]);
        assert!(validate_x3c(&inst).failures().iter().any(|c| c.name.contains("distinct")));
    }

    #[test]
    fn prism_graph_is_cubic() {
        let g = associated_graph(&X3CInstance::prism());
        assert_eq!(g.edges.len(), 18);
        assert!((1..=6).all(|i| g.degree_element(i) == 3 && g.degree_set(i) == 3));
        let inst = X3CInstance::prism();
        for i in 1..=6 {
            for j in 1..=6 {
                assert_eq!(g.edges.contains(&(i, j)), inst.sets[j - 1].contains(&i));
            }
        }
    }

    #[test]
    fn no_cover_without_one_set_of_each_disjoint_pair() {
        let mut only = X3CInstance::prism();
        only.sets = vec![only.sets[3], only.sets[4], only.sets[5]];
        assert_eq!(solve_x3c_bruteforce(&only), None);
        assert!(all_covers(&only).is_empty());
    }
}
