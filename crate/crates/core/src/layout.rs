//! Orthogonal grid drawings of the associated graph with at most one bend
//! per edge.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::report::Report;
use crate::x3c::AssociatedGraph;

pub type GridPoint = (i64, i64);

/// Default minimum segment length of the full construction.
pub const FULL_SCALE_L: i64 = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("route {0} has a zero-length segment")]
    Degenerate(String),
    #[error("layout has no segments")]
    Empty,
    #[error("target length must be positive")]
    BadTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    /// Element vertex `u_i`, one-based.
    U(usize),
    /// Set vertex `w_j`, one-based.
    W(usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::U(i) => write!(f, "u{i}"),
            Vertex::W(j) => write!(f, "w{j}"),
        }
    }
}

impl FromStr for Vertex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad vertex name {s:?}, expected u<i> or w<j>");
        let (kind, num) = s.split_at(1.min(s.len()));
        let k: usize = num.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match kind {
            "u" => Ok(Vertex::U(k)),
            "w" => Ok(Vertex::W(k)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Route of edge `{u_element, w_set}`, from the element to the set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub element: usize,
    pub set: usize,
    #[serde(default)]
    pub bends: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalLayout {
    pub positions: BTreeMap<Vertex, GridPoint>,
    pub routes: Vec<Route>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutScaleReport {
    pub target: i64,
    pub factor: i64,
    pub min_segment_before: i64,
    pub min_parallel_gap_before: i64,
    pub min_segment: i64,
    pub min_parallel_gap: i64,
    /// Set when `target` is below the full-scale value.
    pub reduced_separation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Seg {
    a: GridPoint,
    b: GridPoint,
}

impl Seg {
    fn horizontal(&self) -> bool {
        self.a.1 == self.b.1
    }

    fn len(&self) -> i64 {
        (self.a.0 - self.b.0).abs() + (self.a.1 - self.b.1).abs()
    }

    fn xr(&self) -> (i64, i64) {
        (self.a.0.min(self.b.0), self.a.0.max(self.b.0))
    }

    fn yr(&self) -> (i64, i64) {
        (self.a.1.min(self.b.1), self.a.1.max(self.b.1))
    }

    fn contains(&self, p: GridPoint) -> bool {
        let (x0, x1) = self.xr();
        let (y0, y1) = self.yr();
        p.0 >= x0 && p.0 <= x1 && p.1 >= y0 && p.1 <= y1
    }

    /// Intersection box, if any.
    fn meet(&self, o: &Seg) -> Option<(GridPoint, GridPoint)> {
        let (ax0, ax1) = self.xr();
        let (ay0, ay1) = self.yr();
        let (bx0, bx1) = o.xr();
        let (by0, by1) = o.yr();
        let (x0, x1) = (ax0.max(bx0), ax1.min(bx1));
        let (y0, y1) = (ay0.max(by0), ay1.min(by1));
        (x0 <= x1 && y0 <= y1).then_some(((x0, y0), (x1, y1)))
    }

    /// Euclidean distance between disjoint segments.
    fn gap(&self, o: &Seg) -> f64 {
        let axis = |a: (i64, i64), b: (i64, i64)| -> i64 { (b.0 - a.1).max(a.0 - b.1).max(0) };
        let dx = axis(self.xr(), o.xr()) as f64;
        let dy = axis(self.yr(), o.yr()) as f64;
        dx.hypot(dy)
    }
}

impl OrthogonalLayout {
    pub fn route(&self, element: usize, set: usize) -> Option<&Route> {
        self.routes.iter().find(|r| r.element == element && r.set == set)
    }

    /// Grid points from the element through the bends to the set.
    pub fn route_points(&self, r: &Route) -> Option<Vec<GridPoint>> {
        let a = *self.positions.get(&Vertex::U(r.element))?;
        let b = *self.positions.get(&Vertex::W(r.set))?;
        let mut v = vec![a];
        v.extend(r.bends.iter().copied());
        v.push(b);
        Some(v)
    }

    fn segments(&self, r: &Route) -> Vec<Seg> {
        self.route_points(r)
            .map(|p| p.windows(2).map(|w| Seg { a: w[0], b: w[1] }).collect())
            .unwrap_or_default()
    }

    /// Unit grid direction in which the route leaves vertex `v`.
    pub fn leaving_direction(&self, r: &Route, v: Vertex) -> Option<GridPoint> {
        let pts = self.route_points(r)?;
        let (p, q) = match v {
            Vertex::U(_) => (pts[0], pts[1]),
            Vertex::W(_) => (pts[pts.len() - 1], pts[pts.len() - 2]),
        };
        Some(((q.0 - p.0).signum(), (q.1 - p.1).signum()))
    }

    /// Routes incident to `v`.
    pub fn incident(&self, v: Vertex) -> Vec<&Route> {
        self.routes
            .iter()
            .filter(|r| match v {
                Vertex::U(i) => r.element == i,
                Vertex::W(j) => r.set == j,
            })
            .collect()
    }

    /// A hand-made layout of the hexagonal-prism instance.
    pub fn prism_fixture() -> Self {
        let positions: BTreeMap<Vertex, GridPoint> = [
            (Vertex::U(1), (2, 0)),
            (Vertex::W(1), (6, 0)),
            (Vertex::U(2), (8, 3)),
            (Vertex::W(2), (6, 6)),
            (Vertex::U(3), (2, 6)),
            (Vertex::W(3), (0, 3)),
            (Vertex::W(4), (2, 2)),
            (Vertex::U(4), (6, 2)),
            (Vertex::W(5), (6, 3)),
            (Vertex::U(5), (6, 4)),
            (Vertex::W(6), (2, 4)),
            (Vertex::U(6), (2, 3)),
        ]
        .into_iter()
        .collect();
        let r = |element, set, bends: &[GridPoint]| Route { element, set, bends: bends.to_vec() };
        let routes = vec![
            r(1, 1, &[]),
            r(2, 1, &[(8, 0)]),
            r(2, 2, &[(8, 6)]),
            r(3, 2, &[]),
            r(3, 3, &[(0, 6)]),
            r(1, 3, &[(0, 0)]),
            r(1, 4, &[]),
            r(4, 1, &[]),
            r(2, 5, &[]),
            r(5, 2, &[]),
            r(3, 6, &[]),
            r(6, 3, &[]),
            r(4, 4, &[]),
            r(4, 5, &[]),
            r(5, 5, &[]),
            r(5, 6, &[]),
            r(6, 6, &[]),
            r(6, 4, &[]),
        ];
        Self { positions, routes }
    }
}

/// Checks positions, route shapes and crossings.
pub fn validate_layout(graph: &AssociatedGraph, layout: &OrthogonalLayout) -> Report {
    let mut rep = Report::new();
    let mut verts: Vec<Vertex> = (1..=graph.elements).map(Vertex::U).collect();
    verts.extend((1..=graph.sets).map(Vertex::W));
    for v in &verts {
        rep.check(format!("{v} placed"), layout.positions.contains_key(v), "");
    }
    let mut seen = BTreeMap::new();
    for (v, p) in &layout.positions {
        if let Some(o) = seen.insert(*p, *v) {
            rep.check(format!("{v} and {o} at distinct points"), false, format!("{p:?}"));
        }
    }
    let want: BTreeSet<(usize, usize)> = graph.edges.iter().copied().collect();
    let mut have = BTreeSet::new();
    for r in &layout.routes {
        let e = (r.element, r.set);
        if !have.insert(e) {
            rep.check(format!("edge u{}-w{} routed once", e.0, e.1), false, "duplicate route");
        }
        if !want.contains(&e) {
            rep.check(format!("route u{}-w{} is an edge", e.0, e.1), false, "not in graph");
        }
    }
    for e in &want {
        rep.check(format!("edge u{}-w{} routed", e.0, e.1), have.contains(e), "");
    }
    if !rep.passed() {
        return rep;
    }
    let segs: Vec<Vec<Seg>> = layout.routes.iter().map(|r| layout.segments(r)).collect();
    for (k, r) in layout.routes.iter().enumerate() {
        let name = format!("u{}-w{}", r.element, r.set);
        rep.check(format!("{name} has at most one bend"), r.bends.len() <= 1, format!("{} bends", r.bends.len()));
        let axis = segs[k].iter().all(|s| (s.a.0 == s.b.0) != (s.a.1 == s.b.1));
        rep.check(format!("{name} is axis-aligned and non-degenerate"), axis, "");
        let turns = segs[k].windows(2).all(|w| w[0].horizontal() != w[1].horizontal());
        rep.check(format!("{name} turns at each bend"), turns, "");
        let ends = [Vertex::U(r.element), Vertex::W(r.set)];
        for (v, p) in &layout.positions {
            if ends.contains(v) {
                continue;
            }
            if segs[k].iter().any(|s| s.contains(*p)) {
                rep.check(format!("{name} avoids {v}"), false, format!("passes {p:?}"));
            }
        }
    }
    for i in 0..layout.routes.len() {
        for j in i + 1..layout.routes.len() {
            let (ri, rj) = (&layout.routes[i], &layout.routes[j]);
            let shared: Vec<GridPoint> = [Vertex::U(ri.element), Vertex::W(ri.set)]
                .into_iter()
                .filter(|v| *v == Vertex::U(rj.element) || *v == Vertex::W(rj.set))
                .filter_map(|v| layout.positions.get(&v).copied())
                .collect();
            for a in &segs[i] {
                for b in &segs[j] {
                    if let Some((lo, hi)) = a.meet(b) {
                        let ok = lo == hi && shared.contains(&lo);
                        if !ok {
                            rep.check(
                                format!("u{}-w{} and u{}-w{} do not overlap", ri.element, ri.set, rj.element, rj.set),
                                false,
                                format!("meet at {lo:?}..{hi:?}"),
                            );
                        }
                    }
                }
            }
        }
    }
    rep
}

fn minima(layout: &OrthogonalLayout) -> Result<(i64, i64), LayoutError> {
    let segs: Vec<Vec<Seg>> = layout.routes.iter().map(|r| layout.segments(r)).collect();
    let mut min_seg = i64::MAX;
    for (k, ss) in segs.iter().enumerate() {
        for s in ss {
            if s.len() == 0 {
                let r = &layout.routes[k];
                return Err(LayoutError::Degenerate(format!("u{}-w{}", r.element, r.set)));
            }
            min_seg = min_seg.min(s.len());
        }
    }
    if min_seg == i64::MAX {
        return Err(LayoutError::Empty);
    }
    let mut gap = f64::INFINITY;
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            for a in &segs[i] {
                for b in &segs[j] {
                    if a.horizontal() == b.horizontal() && a.meet(b).is_none() {
                        gap = gap.min(a.gap(b));
                    }
                }
            }
        }
    }
    let gap = if gap.is_finite() { gap.floor() as i64 } else { i64::MAX };
    Ok((min_seg, gap))
}

/// Multiplies all coordinates by the least integer factor giving segments
/// of length at least `target` and parallel segments at least `4 target`
/// apart.
pub fn scale_layout(layout: &OrthogonalLayout, target: i64) -> Result<(OrthogonalLayout, LayoutScaleReport), LayoutError> {
    if target <= 0 {
        return Err(LayoutError::BadTarget);
    }
    let (seg, gap) = minima(layout)?;
    let need_seg = (target + seg - 1) / seg;
    let need_gap = if gap == i64::MAX { 1 } else { (4 * target + gap - 1) / gap };
    let factor = need_seg.max(need_gap).max(1);
    let out = scaled(layout, factor);
    let (seg2, gap2) = minima(&out)?;
    Ok((
        out,
        LayoutScaleReport {
            target,
            factor,
            min_segment_before: seg,
            min_parallel_gap_before: gap,
            min_segment: seg2,
            min_parallel_gap: gap2,
            reduced_separation: target < FULL_SCALE_L,
        },
    ))
}

pub fn scaled(layout: &OrthogonalLayout, factor: i64) -> OrthogonalLayout {
    let f = |p: &GridPoint| (p.0 * factor, p.1 * factor);
    OrthogonalLayout {
        positions: layout.positions.iter().map(|(v, p)| (*v, f(p))).collect(),
        routes: layout
            .routes
            .iter()
            .map(|r| Route { element: r.element, set: r.set, bends: r.bends.iter().map(f).collect() })
            .collect(),
    }
}

/// One of the eight axis symmetries: `rot` quarter turns counterclockwise
/// after an optional mirror in the x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symmetry {
    pub rot: u8,
    pub mirror: bool,
}

impl Symmetry {
    pub fn all() -> impl Iterator<Item = Symmetry> {
        (0..8u8).map(|k| Symmetry { rot: k % 4, mirror: k >= 4 })
    }

    pub fn apply(&self, p: GridPoint) -> GridPoint {
        let (mut x, mut y) = if self.mirror { (p.0, -p.1) } else { p };
        for _ in 0..self.rot {
            (x, y) = (-y, x);
        }
        (x, y)
    }

    /// Rotation angle in radians and mirror flag, for geometric poses.
    pub fn angle(&self) -> f64 {
        self.rot as f64 * std::f64::consts::FRAC_PI_2
    }
}

/// Symmetry mapping the canonical degree-3 arrangement (right, up, down)
/// onto the three given distinct unit directions.
pub fn canonical_symmetry(dirs: &[GridPoint]) -> Option<Symmetry> {
    let want: BTreeSet<GridPoint> = dirs.iter().copied().collect();
    if want.len() != 3 {
        return None;
    }
    Symmetry::all().find(|s| {
        let got: BTreeSet<GridPoint> = [(1, 0), (0, 1), (0, -1)].iter().map(|&d| s.apply(d)).collect();
        got == want
    })
}

const DEFAULT_BUDGET: u64 = 2_000_000;

/// Backtracking placement on small square grids with every edge routed
/// straight or with one bend. Returns `None` when the search space (or the
/// node budget) is exhausted.
pub fn naive_layout(graph: &AssociatedGraph) -> Option<OrthogonalLayout> {
    naive_layout_budget(graph, DEFAULT_BUDGET)
}

pub fn naive_layout_budget(graph: &AssociatedGraph, budget: u64) -> Option<OrthogonalLayout> {
    let mut verts: Vec<Vertex> = (1..=graph.elements).map(Vertex::U).collect();
    verts.extend((1..=graph.sets).map(Vertex::W));
    if verts.len() > 14 {
        return None;
    }
    let adj = |v: Vertex| -> Vec<Vertex> {
        graph
            .edges
            .iter()
            .filter_map(|&(i, j)| match v {
                Vertex::U(k) if k == i => Some(Vertex::W(j)),
                Vertex::W(k) if k == j => Some(Vertex::U(i)),
                _ => None,
            })
            .collect()
    };
    if verts.iter().any(|&v| adj(v).len() > 4) {
        return None;
    }
    // Breadth-first order so each new vertex has placed neighbours.
    let mut order = Vec::new();
    let mut seen = BTreeSet::new();
    for &s in &verts {
        if seen.insert(s) {
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                order.push(v);
                for w in adj(v) {
                    if seen.insert(w) {
                        q.push_back(w);
                    }
                }
            }
        }
    }
    let mut nodes = 0u64;
    let min_side = (verts.len() as f64).sqrt().ceil() as i64;
    for side in min_side.max(2)..=min_side + 2 {
        let mut st = NaiveState { pos: BTreeMap::new(), routes: Vec::new(), side };
        if st.place(&order, 0, graph, &mut nodes, budget) {
            let layout = OrthogonalLayout { positions: st.pos, routes: st.routes.into_iter().map(|(r, _)| r).collect() };
            return Some(layout);
        }
        if nodes >= budget {
            return None;
        }
    }
    None
}

struct NaiveState {
    pos: BTreeMap<Vertex, GridPoint>,
    routes: Vec<(Route, Vec<Seg>)>,
    side: i64,
}

impl NaiveState {
    fn free_point(&self, p: GridPoint) -> bool {
        !self.pos.values().any(|&q| q == p) && !self.routes.iter().any(|(_, ss)| ss.iter().any(|s| s.contains(p)))
    }

    fn route_ok(&self, segs: &[Seg], ends: [Vertex; 2]) -> bool {
        for (v, &p) in &self.pos {
            if !ends.contains(v) && segs.iter().any(|s| s.contains(p)) {
                return false;
            }
        }
        for (r, ss) in &self.routes {
            let shared: Vec<GridPoint> = [Vertex::U(r.element), Vertex::W(r.set)]
                .into_iter()
                .filter(|v| ends.contains(v))
                .map(|v| self.pos[&v])
                .collect();
            for a in segs {
                for b in ss {
                    if let Some((lo, hi)) = a.meet(b) {
                        if !(lo == hi && shared.contains(&lo)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn place(&mut self, order: &[Vertex], k: usize, g: &AssociatedGraph, nodes: &mut u64, budget: u64) -> bool {
        if k == order.len() {
            return true;
        }
        let v = order[k];
        let placed: Vec<GridPoint> = g
            .edges
            .iter()
            .filter_map(|&(i, j)| match v {
                Vertex::U(u) if u == i => self.pos.get(&Vertex::W(j)).copied(),
                Vertex::W(w) if w == j => self.pos.get(&Vertex::U(i)).copied(),
                _ => None,
            })
            .collect();
        let mut cells: Vec<GridPoint> = (0..self.side).flat_map(|x| (0..self.side).map(move |y| (x, y))).collect();
        // Cells close to placed neighbours first.
        cells.sort_by_key(|&(x, y)| placed.iter().map(|p| (p.0 - x).abs() + (p.1 - y).abs()).sum::<i64>());
        for (x, y) in cells {
            {
                *nodes += 1;
                if *nodes >= budget {
                    return false;
                }
                if k == 0 && (2 * x > self.side - 1 || y > x) {
                    continue;
                }
                if !self.free_point((x, y)) {
                    continue;
                }
                self.pos.insert(v, (x, y));
                let edges: Vec<(usize, usize)> = g
                    .edges
                    .iter()
                    .copied()
                    .filter(|&(i, j)| {
                        let (a, b) = (Vertex::U(i), Vertex::W(j));
                        (a == v && self.pos.contains_key(&b)) || (b == v && self.pos.contains_key(&a))
                    })
                    .collect();
                let mark = self.routes.len();
                if self.route_all(&edges, 0, order, k, g, nodes, budget) {
                    return true;
                }
                self.routes.truncate(mark);
                self.pos.remove(&v);
            }
        }
        false
    }

    /// Every placed vertex keeps a free unit step for each unplaced
    /// neighbour.
    fn exits_ok(&self, order: &[Vertex], k: usize, g: &AssociatedGraph) -> bool {
        let later: BTreeSet<Vertex> = order[k + 1..].iter().copied().collect();
        for (&v, &p) in &self.pos {
            let need = g
                .edges
                .iter()
                .filter(|&&(i, j)| match v {
                    Vertex::U(u) => u == i && later.contains(&Vertex::W(j)),
                    Vertex::W(w) => w == j && later.contains(&Vertex::U(i)),
                })
                .count();
            if need == 0 {
                continue;
            }
            let free = [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .filter(|d| {
                    let q = (p.0 + d.0, p.1 + d.1);
                    if q.0 < 0 || q.1 < 0 || q.0 >= self.side || q.1 >= self.side {
                        return false;
                    }
                    if self.pos.values().any(|&o| o == q) {
                        return false;
                    }
                    let step = Seg { a: p, b: q };
                    !self.routes.iter().any(|(_, ss)| ss.iter().any(|s| s.meet(&step).is_some_and(|(lo, hi)| lo != p || hi != p)))
                })
                .count();
            if free < need {
                return false;
            }
        }
        true
    }

    #[allow(clippy::too_many_arguments)]
    fn route_all(
        &mut self,
        edges: &[(usize, usize)],
        e: usize,
        order: &[Vertex],
        k: usize,
        g: &AssociatedGraph,
        nodes: &mut u64,
        budget: u64,
    ) -> bool {
        if e == edges.len() {
            if !self.exits_ok(order, k, g) {
                return false;
            }
            return self.place(order, k + 1, g, nodes, budget);
        }
        let (i, j) = edges[e];
        let (a, b) = (self.pos[&Vertex::U(i)], self.pos[&Vertex::W(j)]);
        let mut options: Vec<Vec<GridPoint>> = Vec::new();
        if a.0 == b.0 || a.1 == b.1 {
            options.push(vec![]);
        } else {
            options.push(vec![(b.0, a.1)]);
            options.push(vec![(a.0, b.1)]);
        }
        for bends in options {
            let mut pts = vec![a];
            pts.extend(bends.iter().copied());
            pts.push(b);
            let segs: Vec<Seg> = pts.windows(2).map(|w| Seg { a: w[0], b: w[1] }).collect();
            if !self.route_ok(&segs, [Vertex::U(i), Vertex::W(j)]) {
                continue;
            }
            self.routes.push((Route { element: i, set: j, bends }, segs));
            if self.route_all(edges, e + 1, order, k, g, nodes, budget) {
                return true;
            }
            self.routes.pop();
            if *nodes >= budget {
                return false;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::x3c::{associated_graph, X3CInstance};

    fn prism_graph() -> AssociatedGraph {
        associated_graph(&X3CInstance::prism())
    }

    #[test]
    fn fixture_is_valid() {
        let rep = validate_layout(&prism_graph(), &OrthogonalLayout::prism_fixture());
        assert!(rep.passed(), "{rep}");
    }

    #[test]
    fn overlap_and_bend_failures() {
        let g = prism_graph();
        let mut l = OrthogonalLayout::prism_fixture();
        // Route u1-w1 through (4,0) and up, crossing into u1-w4's column.
        let r = l.routes.iter_mut().find(|r| r.element == 1 && r.set == 4).unwrap();
        r.bends = vec![(6, 0)];
        let rep = validate_layout(&g, &l);
        assert!(rep.failures().iter().any(|c| c.name.contains("do not overlap") || c.name.contains("avoids")));
        let mut l = OrthogonalLayout::prism_fixture();
        let r = l.routes.iter_mut().find(|r| r.element == 2 && r.set == 1).unwrap();
        r.bends = vec![(9, 3), (9, 0)];
        let rep = validate_layout(&g, &l);
        assert!(rep.failures().iter().any(|c| c.name.contains("at most one bend")));
    }

    #[test]
    fn scaling_fixture() {
        let (l, rep) = scale_layout(&OrthogonalLayout::prism_fixture(), 200).unwrap();
        assert_eq!((rep.min_segment_before, rep.min_parallel_gap_before), (1, 1));
        assert_eq!(rep.factor, 800);
        assert!(rep.min_segment >= 200 && rep.min_parallel_gap >= 800);
        assert!(!rep.reduced_separation);
        assert!(validate_layout(&prism_graph(), &l).passed());
        let (_, rep) = scale_layout(&OrthogonalLayout::prism_fixture(), 40).unwrap();
        assert_eq!(rep.factor, 160);
        assert!(rep.reduced_separation);
    }

    #[test]
    fn compliant_layout_keeps_factor_one() {
        let l = scaled(&OrthogonalLayout::prism_fixture(), 100);
        let (_, rep) = scale_layout(&l, 25).unwrap();
        assert_eq!(rep.factor, 1);
    }

    #[test]
    fn zero_length_segment_is_an_error() {
        let mut l = OrthogonalLayout::prism_fixture();
        l.routes[0].bends = vec![(2, 0)];
        assert!(matches!(scale_layout(&l, 10), Err(LayoutError::Degenerate(_))));
    }

    #[test]
    fn symmetries_are_distinct_and_canonical_found() {
        let imgs: BTreeSet<(GridPoint, GridPoint)> = Symmetry::all().map(|s| (s.apply((1, 0)), s.apply((0, 1)))).collect();
        assert_eq!(imgs.len(), 8);
        let s = canonical_symmetry(&[(-1, 0), (1, 0), (0, 1)]).unwrap();
        assert_eq!(s.apply((1, 0)), (0, 1));
        assert!(canonical_symmetry(&[(1, 0), (1, 0), (0, 1)]).is_none());
    }

    #[test]
    fn naive_square_and_k33() {
        let c4 = AssociatedGraph { elements: 2, sets: 2, edges: vec![(1, 1), (1, 2), (2, 1), (2, 2)] };
        let l = naive_layout(&c4).unwrap();
        assert!(validate_layout(&c4, &l).passed());
        let xs: BTreeSet<i64> = l.positions.values().map(|p| p.0).collect();
        let ys: BTreeSet<i64> = l.positions.values().map(|p| p.1).collect();
        assert_eq!((xs.len(), ys.len()), (2, 2));
        assert!(l.routes.iter().all(|r| r.bends.is_empty()));
        let k33 = AssociatedGraph {
            elements: 3,
            sets: 3,
            edges: (1..=3).flat_map(|i| (1..=3).map(move |j| (i, j))).collect(),
        };
        assert!(naive_layout(&k33).is_none());
    }

    #[test]
    fn naive_prism() {
        let g = prism_graph();
        let l = naive_layout(&g).expect("prism layout");
        assert!(validate_layout(&g, &l).passed());
    }
}
