//! Points, agents, instances, coalitions and matchings, plus the
//! distance-sum preference comparison every other module builds on.
//!
//! Agents are addressed by their position in [`Instance::agents`]
//! (`usize`) on hot paths and by string id at API and file boundaries.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown agent id `{0}`")]
    UnknownId(String),
    #[error("agent id must be non-empty (agent #{0})")]
    EmptyId(usize),
    #[error("duplicate agent id `{0}`")]
    DuplicateId(String),
    #[error("agent `{0}` has a non-finite coordinate")]
    NonFinite(String),
    #[error("coalition size d must be at least 2, got {0}")]
    BadD(usize),
    #[error("agent count {count} is not divisible by d = {d}")]
    NotDivisible { count: usize, d: usize },
    #[error("tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
    #[error("coalition has {got} members, expected {expected}")]
    WrongSize { got: usize, expected: usize },
    #[error("agent `{0}` appears in more than one coalition")]
    Overlap(String),
    #[error("agent `{0}` is not covered by the matching")]
    Missing(String),
    #[error("agent `{agent}` is not a member of the {which} coalition")]
    NotMember { agent: String, which: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Unit vector at angle `theta` (radians).
    pub fn polar(r: f64, theta: f64) -> Point {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    /// Counter-clockwise rotation by `theta` about the origin.
    pub fn rotate(self, theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn unit(self) -> Point {
        self.scale(1.0 / self.norm())
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

/// Euclidean distance. `hypot` is symmetric in its arguments' signs, so
/// `dist(p, q) == dist(q, p)` holds bit-for-bit.
pub fn dist(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// Angle at `b` in the triangle `a`, `b`, `c`, in degrees.
pub fn angle_deg(a: Point, b: Point, c: Point) -> f64 {
    let u = a.sub(b);
    let v = c.sub(b);
    let cos = (u.x * v.x + u.y * v.y) / (u.norm() * v.norm());
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Intersections of the circles `(c1, r1)` and `(c2, r2)`; the first point
/// lies to the left of the direction `c1 -> c2`.
pub fn circle_intersections(c1: Point, r1: f64, c2: Point, r2: f64) -> Option<(Point, Point)> {
    let dv = c2.sub(c1);
    let d = dv.norm();
    if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
        return None;
    }
    let x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h = (r1 * r1 - x * x).max(0.0).sqrt();
    let u = dv.scale(1.0 / d);
    let base = c1.add(u.scale(x));
    Some((base.add(u.perp().scale(h)), base.sub(u.perp().scale(h))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub pos: Point,
    pub tag: Option<String>,
}

impl Agent {
    pub fn new(id: impl Into<String>, pos: Point) -> Self {
        Self { id: id.into(), pos, tag: None }
    }

    pub fn tagged(id: impl Into<String>, pos: Point, tag: impl Into<String>) -> Self {
        Self { id: id.into(), pos, tag: Some(tag.into()) }
    }
}

/// Outcome of comparing two coalitions from one agent's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pref {
    PrefersS,
    Indifferent,
    PrefersT,
}

#[derive(Debug, Clone)]
pub struct Instance {
    d: usize,
    agents: Vec<Agent>,
    tolerance: f64,
    index: HashMap<String, usize>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d
            && self.tolerance.to_bits() == other.tolerance.to_bits()
            && self.agents == other.agents
    }
}

/// Relative factor for the default tolerance: τ = factor · diameter.
pub const DEFAULT_TOLERANCE_FACTOR: f64 = 1e-9;

impl Instance {
    /// Builds an instance; `tolerance = None` selects the default τ derived
    /// from the instance diameter.
    pub fn new(d: usize, agents: Vec<Agent>, tolerance: Option<f64>) -> Result<Self, ModelError> {
        if d < 2 {
            return Err(ModelError::BadD(d));
        }
        if agents.len() % d != 0 {
            return Err(ModelError::NotDivisible { count: agents.len(), d });
        }
        let mut index = HashMap::with_capacity(agents.len());
        for (k, a) in agents.iter().enumerate() {
            if a.id.is_empty() {
                return Err(ModelError::EmptyId(k));
            }
            if !a.pos.is_finite() {
                return Err(ModelError::NonFinite(a.id.clone()));
            }
            if index.insert(a.id.clone(), k).is_some() {
                return Err(ModelError::DuplicateId(a.id.clone()));
            }
        }
        let tolerance = match tolerance {
            Some(t) if t.is_finite() && t >= 0.0 => t,
            Some(t) => return Err(ModelError::BadTolerance(t)),
            None => DEFAULT_TOLERANCE_FACTOR * diameter(&agents),
        };
        Ok(Self { d, agents, tolerance, index })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, k: usize) -> &Agent {
        &self.agents[k]
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn pos(&self, k: usize) -> Point {
        self.agents[k].pos
    }

    pub fn id(&self, k: usize) -> &str {
        &self.agents[k].id
    }

    pub fn lookup(&self, id: &str) -> Result<usize, ModelError> {
        self.index.get(id).copied().ok_or_else(|| ModelError::UnknownId(id.to_string()))
    }

    pub fn lookup_all<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>, ModelError> {
        ids.iter().map(|s| self.lookup(s.as_ref())).collect()
    }

    pub fn dist(&self, a: usize, b: usize) -> f64 {
        dist(self.agents[a].pos, self.agents[b].pos)
    }

    pub fn dist_ids(&self, a: &str, b: &str) -> Result<f64, ModelError> {
        Ok(self.dist(self.lookup(a)?, self.lookup(b)?))
    }

    /// Sum of distances from `x` to every member of `members`.
    pub fn sum_dist(&self, x: usize, members: &[usize]) -> f64 {
        let p = self.agents[x].pos;
        members.iter().map(|&m| dist(p, self.agents[m].pos)).sum()
    }

    pub fn sum_dist_ids<S: AsRef<str>>(&self, x: &str, members: &[S]) -> Result<f64, ModelError> {
        let x = self.lookup(x)?;
        let ms = self.lookup_all(members)?;
        Ok(self.sum_dist(x, &ms))
    }

    /// Compares coalitions `s` and `t` for agent `x`, which must belong to both.
    pub fn compare_pref(&self, x: usize, s: &[usize], t: &[usize]) -> Result<Pref, ModelError> {
        if !s.contains(&x) {
            return Err(ModelError::NotMember { agent: self.id(x).to_string(), which: "first" });
        }
        if !t.contains(&x) {
            return Err(ModelError::NotMember { agent: self.id(x).to_string(), which: "second" });
        }
        Ok(self.compare_sums(self.sum_dist(x, s), self.sum_dist(x, t)))
    }

    /// The τ-banded comparison of two distance sums (smaller is better).
    pub fn compare_sums(&self, s: f64, t: f64) -> Pref {
        if s < t - self.tolerance {
            Pref::PrefersS
        } else if t < s - self.tolerance {
            Pref::PrefersT
        } else {
            Pref::Indifferent
        }
    }

    /// True iff a distance sum `new` is a strict improvement over `old`.
    pub fn improves(&self, new: f64, old: f64) -> bool {
        new < old - self.tolerance
    }

    /// Same agents with a different tolerance.
    pub fn with_tolerance(&self, tolerance: f64) -> Result<Self, ModelError> {
        Instance::new(self.d, self.agents.clone(), Some(tolerance))
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.agents)
    }
}

fn diameter(agents: &[Agent]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in agents.iter().enumerate() {
        for b in &agents[i + 1..] {
            best = best.max(dist(a.pos, b.pos));
        }
    }
    best
}

/// A size-d coalition as a sorted list of agent indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(Vec<usize>);

impl Coalition {
    pub fn new(inst: &Instance, mut members: Vec<usize>) -> Result<Self, ModelError> {
        if members.len() != inst.d() {
            return Err(ModelError::WrongSize { got: members.len(), expected: inst.d() });
        }
        members.sort_unstable();
        for w in members.windows(2) {
            if w[0] == w[1] {
                return Err(ModelError::Overlap(inst.id(w[0]).to_string()));
            }
        }
        if let Some(&m) = members.iter().find(|&&m| m >= inst.len()) {
            return Err(ModelError::UnknownId(format!("#{m}")));
        }
        Ok(Self(members))
    }

    pub fn from_ids<S: AsRef<str>>(inst: &Instance, ids: &[S]) -> Result<Self, ModelError> {
        Coalition::new(inst, inst.lookup_all(ids)?)
    }

    /// Wraps an already sorted, duplicate-free index list.
    pub(crate) fn from_sorted(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self(members)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn ids<'a>(&self, inst: &'a Instance) -> Vec<&'a str> {
        self.0.iter().map(|&k| inst.id(k)).collect()
    }
}

/// A partition of all agents into size-d coalitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    coalitions: Vec<Coalition>,
    owner: Vec<usize>,
}

impl Matching {
    /// Validates that `coalitions` partitions the agents of `inst`.
    pub fn new(inst: &Instance, coalitions: Vec<Coalition>) -> Result<Self, ModelError> {
        let mut owner = vec![usize::MAX; inst.len()];
        for (ci, c) in coalitions.iter().enumerate() {
            if c.members().len() != inst.d() {
                return Err(ModelError::WrongSize { got: c.members().len(), expected: inst.d() });
            }
            for &m in c.members() {
                if m >= inst.len() {
                    return Err(ModelError::UnknownId(format!("#{m}")));
                }
                if owner[m] != usize::MAX {
                    return Err(ModelError::Overlap(inst.id(m).to_string()));
                }
                owner[m] = ci;
            }
        }
        if let Some(k) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(ModelError::Missing(inst.id(k).to_string()));
        }
        let mut coalitions = coalitions;
        coalitions.sort();
        for (ci, c) in coalitions.iter().enumerate() {
            for &m in c.members() {
                owner[m] = ci;
            }
        }
        Ok(Self { coalitions, owner })
    }

    pub fn from_ids<S: AsRef<str>>(inst: &Instance, groups: &[Vec<S>]) -> Result<Self, ModelError> {
        let cs = groups
            .iter()
            .map(|g| Coalition::from_ids(inst, g))
            .collect::<Result<Vec<_>, _>>()?;
        Matching::new(inst, cs)
    }

    /// Coalitions in sorted order (by smallest member index first).
    pub fn coalitions(&self) -> &[Coalition] {
        &self.coalitions
    }

    /// Π(x): the coalition containing agent `x`.
    pub fn of(&self, x: usize) -> &Coalition {
        &self.coalitions[self.owner[x]]
    }

    pub fn contains(&self, c: &Coalition) -> bool {
        self.coalitions.binary_search(c).is_ok()
    }

    pub fn contains_ids<S: AsRef<str>>(&self, inst: &Instance, ids: &[S]) -> bool {
        match Coalition::from_ids(inst, ids) {
            Ok(c) => self.contains(&c),
            Err(_) => false,
        }
    }

    /// Current distance sum of every agent.
    pub fn current_sums(&self, inst: &Instance) -> Vec<f64> {
        (0..inst.len()).map(|x| inst.sum_dist(x, self.of(x).members())).collect()
    }

    pub fn to_ids(&self, inst: &Instance) -> Vec<Vec<String>> {
        self.coalitions
            .iter()
            .map(|c| c.members().iter().map(|&k| inst.id(k).to_string()).collect())
            .collect()
    }
}

impl fmt::Display for Pref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pref::PrefersS => "PREFERS_S",
            Pref::Indifferent => "INDIFFERENT",
            Pref::PrefersT => "PREFERS_T",
        };
        f.write_str(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(pts: &[(f64, f64)], d: usize) -> Instance {
        let agents = pts
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| Agent::new(k.to_string(), Point::new(x, y)))
            .collect();
        Instance::new(d, agents, None).unwrap()
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist(Point::new(0.0, 0.0), Point::new(0.0, 0.0)), 0.0);
        assert_eq!(dist(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        let a = 6.6;
        assert!((dist(Point::new(1.0, 1.0), Point::new(1.0, 1.0 + a)) - a).abs() < 1e-12);
    }

    #[test]
    fn sum_dist_examples() {
        let i = inst(&[(0.0, 0.0), (3.0, 4.0), (0.0, 5.0)], 3);
        assert_eq!(i.sum_dist(0, &[0, 1, 2]), 10.0);
        assert_eq!(i.sum_dist(0, &[0]), 0.0);
        assert!(matches!(i.sum_dist_ids("9", &["0"]), Err(ModelError::UnknownId(_))));
    }

    #[test]
    fn compare_pref_reflexive_and_contract() {
        let i = inst(&[(0.0, 0.0), (1.0, 0.0), (5.0, 0.0)], 3);
        assert_eq!(i.compare_pref(0, &[0, 1, 2], &[0, 1, 2]).unwrap(), Pref::Indifferent);
        assert!(matches!(i.compare_pref(0, &[1, 2], &[0, 1]), Err(ModelError::NotMember { .. })));
    }

    #[test]
    fn instance_rejects_bad_input() {
        let a = |id: &str| Agent::new(id, Point::new(0.0, 0.0));
        assert!(matches!(Instance::new(1, vec![a("x")], None), Err(ModelError::BadD(1))));
        assert!(matches!(Instance::new(2, vec![a("x")], None), Err(ModelError::NotDivisible { .. })));
        assert!(matches!(Instance::new(2, vec![a("x"), a("x")], None), Err(ModelError::DuplicateId(_))));
        assert!(matches!(Instance::new(2, vec![a(""), a("x")], None), Err(ModelError::EmptyId(0))));
        let nan = Agent::new("n", Point::new(f64::NAN, 0.0));
        assert!(matches!(Instance::new(2, vec![nan, a("x")], None), Err(ModelError::NonFinite(_))));
    }

    #[test]
    fn matching_rejects_each_violation_distinctly() {
        let i = inst(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], 2);
        let c = |v: Vec<usize>| Coalition::from_sorted(v);
        assert!(matches!(Matching::new(&i, vec![c(vec![0, 1]), c(vec![1, 2])]), Err(ModelError::Overlap(_))));
        assert!(matches!(Matching::new(&i, vec![c(vec![0, 1])]), Err(ModelError::Missing(_))));
        assert!(matches!(Matching::new(&i, vec![c(vec![0, 1, 2]), c(vec![3])]), Err(ModelError::WrongSize { .. })));
        assert!(Matching::new(&i, vec![c(vec![2, 3]), c(vec![0, 1])]).is_ok());
    }
}
