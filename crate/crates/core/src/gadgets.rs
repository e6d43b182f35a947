//! Star gadgets: the twelve-point pentagon star for d = 3 and the
//! clustered pentagon stars for d >= 4, with numeric validators.
//!
//! Stars are built in a local frame and then mapped by a [`Pose`]. The
//! reduction attaches its enforcement tail along [`StarInstance::axis`],
//! the ray from the star's anchor point (agent `5` for d = 3, agent `0` or
//! the midpoint of `0` and `1` for d >= 4) through the forced cluster.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{angle_deg, circle_intersections, dist, Agent, Point};
use crate::report::Report;

/// Tolerance for distances that are designed to be exact.
pub const EXACT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GadgetError {
    #[error("infeasible star parameters:\n{0}")]
    Infeasible(String),
    #[error("d must be at least 4 for clustered stars, got {0}")]
    BadD(usize),
    #[error("no placement satisfies: {0}")]
    NoPlacement(String),
}

/// Rigid motion applied to a locally built gadget: optional mirror in the
/// local x-axis, rotation by `angle`, then translation to `origin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub origin: Point,
    pub angle: f64,
    pub mirror: bool,
}

impl Default for Pose {
    fn default() -> Self {
        Self { origin: Point::new(0.0, 0.0), angle: 0.0, mirror: false }
    }
}

impl Pose {
    pub fn apply(&self, p: Point) -> Point {
        self.origin.add(self.apply_dir(p))
    }

    pub fn apply_dir(&self, v: Point) -> Point {
        let v = if self.mirror { Point::new(v.x, -v.y) } else { v };
        v.rotate(self.angle)
    }

    /// Pose mapping local `anchor` to `target` and local direction `from`
    /// onto global direction `to`.
    pub fn aligning(anchor: Point, from: Point, target: Point, to: Point, mirror: bool) -> Pose {
        let f = if mirror { Point::new(from.x, -from.y) } else { from };
        let angle = to.y.atan2(to.x) - f.y.atan2(f.x);
        let mut pose = Pose { origin: Point::new(0.0, 0.0), angle, mirror };
        pose.origin = target.sub(pose.apply_dir(anchor));
        pose
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Star3Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub dist_5_to_1011: f64,
    pub near_zero: f64,
    pub epsilon: f64,
}

impl Default for Star3Params {
    fn default() -> Self {
        Self { a: 6.6, b: 10.1, c: 10.2, dist_5_to_1011: 9.95, near_zero: 1e-4, epsilon: 5e-4 }
    }
}

/// Radius of the circles carrying star cluster members.
pub const CLUSTER_RADIUS: f64 = 2e-7;

/// Golden ratio; the diagonal of a regular pentagon is `PHI * edge`.
pub const PHI: f64 = 1.618_033_988_749_895;

impl Star3Params {
    pub fn ell(&self) -> f64 {
        PHI * self.a
    }

    /// Angle at the pentagon vertex of the (a, b, c) triangle, in degrees.
    pub fn theta_deg(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        ((a * a + b * b - c * c) / (2.0 * a * b)).clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// Distance from agents 10 and 11 to the tail agent `h`.
    pub fn tail_dist(&self) -> f64 {
        10.0 + 3.0 * self.epsilon
    }

    /// Parameters used inside the reduction: agents 10 and 11 sit at
    /// `10 + 4 eps` from agent 5.
    pub fn attached(self) -> Self {
        Self { dist_5_to_1011: 10.0 + 4.0 * self.epsilon, ..self }
    }

    pub fn validate(&self) -> Report {
        let mut r = Report::new();
        let ell = self.ell();
        r.less("a < b", self.a, self.b);
        r.less("b < c", self.b, self.c);
        r.less("c < ell", self.c, ell);
        r.less("a < dist(5,10)", self.a, self.dist_5_to_1011);
        r.less("dist(5,10) < b", self.dist_5_to_1011, self.b);
        r.check("0 < epsilon < 0.001", self.epsilon > 0.0 && self.epsilon < 1e-3, format!("{}", self.epsilon));
        r.check(
            "0 < near_zero < epsilon",
            self.near_zero > 0.0 && self.near_zero < self.epsilon,
            format!("{}", self.near_zero),
        );
        let th = self.theta_deg();
        r.check("theta <= 90", th <= 90.0, format!("theta = {th:.4} deg"));
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarDParams {
    pub d: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Even d only.
    pub b_prime: f64,
    /// Even d only.
    pub c_prime: f64,
    pub epsilon_d: f64,
    pub epsilon: f64,
    pub near_zero: f64,
    /// Exact distance from `Y` to its partner point(s). `None` places `Y`
    /// inside the standalone band just below `b`.
    pub y_dist: Option<f64>,
    /// When set, `Y` members lie on an arc of this radius centred on the
    /// axis beyond `Y`, where the reduction puts agent `h`.
    pub y_arc: Option<f64>,
}

impl StarDParams {
    pub fn kappa(&self) -> usize {
        (self.d - 1) / 2
    }

    pub fn even(&self) -> bool {
        self.d % 2 == 0
    }

    pub fn ell(&self) -> f64 {
        PHI * self.a
    }

    pub fn y_len(&self) -> usize {
        if self.even() {
            2 * self.kappa() + 1
        } else {
            2 * self.kappa()
        }
    }

    pub fn n_points(&self) -> usize {
        if self.even() {
            10
        } else {
            5
        }
    }

    /// Total agent count: `7 kappa + 11` (even) or `7 kappa + 5` (odd).
    pub fn n_agents(&self) -> usize {
        5 * self.kappa() + self.n_points() + self.y_len()
    }

    /// Standalone defaults.
    pub fn standalone(d: usize) -> Self {
        let even = d % 2 == 0;
        Self {
            d,
            a: if even { 9.0 } else { 6.6 },
            b: 10.1,
            c: 10.2,
            b_prime: if even { 10.3 } else { 0.0 },
            c_prime: if even { 10.4 } else { 0.0 },
            epsilon_d: 1.0 / (2000.0 * d as f64),
            epsilon: 5e-4,
            near_zero: 1e-4,
            y_dist: None,
            y_arc: None,
        }
    }

    /// Parameters of the stars attached inside the reduction.
    pub fn attached(d: usize) -> Self {
        let even = d % 2 == 0;
        let eps = 5e-4;
        Self {
            d,
            a: if even { 18.0 } else { 15.0 },
            b: 22.6,
            c: 22.7,
            b_prime: if even { 22.8 } else { 0.0 },
            c_prime: if even { 22.9 } else { 0.0 },
            epsilon_d: 1.0 / (2000.0 * d as f64),
            epsilon: eps,
            near_zero: 1e-4,
            y_dist: Some(15.0 + 4.0 * eps),
            y_arc: Some(15.0 + 3.0 * eps),
        }
    }

    /// Radius of the circles carrying cluster members (`X_i`, `Y`).
    pub fn cluster_radius(&self) -> f64 {
        CLUSTER_RADIUS.min(self.near_zero / 2.0)
    }

    pub fn validate(&self) -> Report {
        let mut r = Report::new();
        let ell = self.ell();
        r.check("d >= 4", self.d >= 4, format!("d = {}", self.d));
        r.less("a < b", self.a, self.b);
        r.less("b < c", self.b, self.c);
        r.less("c < ell", self.c, ell);
        if self.even() {
            let (a, b, c, bp, cp) = (self.a, self.b, self.c, self.b_prime, self.c_prime);
            r.less("b < b'", b, bp);
            r.less("b' < ell", bp, ell);
            r.less("c < c'", c, cp);
            r.less("c' < ell", cp, ell);
            r.less("b + b' < 3a", b + bp, 3.0 * a);
            r.less("c + c' < 3a", c + cp, 3.0 * a);
            r.less("b + b' < a + ell", b + bp, a + ell);
            r.less("c + c' < b + ell", c + cp, b + ell);
        } else {
            r.less("b < 2a", self.b, 2.0 * self.a);
        }
        let bound = 1.0 / (1000.0 * self.d as f64);
        r.check(
            "0 < epsilon_d < 1/(1000 d)",
            self.epsilon_d > 0.0 && self.epsilon_d < bound,
            format!("{} (bound {bound})", self.epsilon_d),
        );
        r.check(
            "0 < near_zero < epsilon",
            self.near_zero > 0.0 && self.near_zero < self.epsilon,
            format!("{}", self.near_zero),
        );
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StarKind {
    Star3(Star3Params),
    StarD(StarDParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarInstance {
    /// Agents with local ids (`"0"`..`"11"`, or `"X2[1]"`, `"7"`, `"Y[0]"`).
    pub agents: Vec<Agent>,
    pub kind: StarKind,
    pub pose: Pose,
    /// Global anchor point and unit direction of the tail axis.
    pub axis: (Point, Point),
    /// Where the reduction puts agent `h`, for attached stars.
    pub tail: Option<Point>,
}

impl StarInstance {
    pub fn index(&self, id: &str) -> usize {
        self.agents.iter().position(|a| a.id == id).unwrap_or_else(|| panic!("no star agent {id}"))
    }

    pub fn pos(&self, id: &str) -> Point {
        self.agents[self.index(id)].pos
    }

    /// Indices of the cluster `X_i` (d >= 4).
    pub fn cluster(&self, i: usize) -> Vec<usize> {
        let pre = format!("X{i}[");
        (0..self.agents.len()).filter(|&k| self.agents[k].id.starts_with(&pre)).collect()
    }

    /// Indices of `Y` (d >= 4).
    pub fn y(&self) -> Vec<usize> {
        (0..self.agents.len()).filter(|&k| self.agents[k].id.starts_with("Y[")).collect()
    }

    /// Applies a further rigid motion.
    pub fn transformed(&self, pose: &Pose) -> StarInstance {
        let mut out = self.clone();
        for a in &mut out.agents {
            a.pos = pose.apply(a.pos);
        }
        out.axis = (pose.apply(self.axis.0), pose.apply_dir(self.axis.1));
        out.tail = self.tail.map(|t| pose.apply(t));
        out
    }
}

fn pentagon(edge: f64) -> [Point; 5] {
    let r = edge / (2.0 * (PI / 5.0).sin());
    std::array::from_fn(|k| Point::polar(r, PI / 2.0 + 2.0 * PI * k as f64 / 5.0))
}

/// The intersection of the two circles farther from the origin.
fn outer_point(c1: Point, r1: f64, c2: Point, r2: f64) -> Result<Point, GadgetError> {
    let (p, q) = circle_intersections(c1, r1, c2, r2)
        .ok_or_else(|| GadgetError::NoPlacement(format!("circles r={r1} and r={r2} are disjoint")))?;
    Ok(if p.norm() >= q.norm() { p } else { q })
}

/// Two points at distance `r` from `centre`, symmetric about direction
/// `dir`, separated by `gap`.
fn symmetric_pair(centre: Point, dir: Point, r: f64, gap: f64) -> (Point, Point) {
    let half = (gap / (2.0 * r)).asin();
    let base = dir.y.atan2(dir.x);
    (centre.add(Point::polar(r, base + half)), centre.add(Point::polar(r, base - half)))
}

/// Picks the direction (0.5 degree grid) maximising `score`, among those
/// accepted by `feasible`. Ties keep the smallest angle.
fn best_direction(
    feasible: impl Fn(Point) -> bool,
    score: impl Fn(Point) -> f64,
) -> Option<Point> {
    let mut best: Option<(f64, Point)> = None;
    for step in 0..720 {
        let u = Point::polar(1.0, step as f64 * PI / 360.0);
        if !feasible(u) {
            continue;
        }
        let s = score(u);
        if best.map_or(true, |(bs, _)| s > bs) {
            best = Some((s, u));
        }
    }
    best.map(|(_, u)| u)
}

/// Builds the twelve-agent star. With `standalone = false` agents 10 and
/// 11 are placed at the reduction distance `10 + 4 eps` from agent 5.
pub fn build_star3(pose: Pose, params: Star3Params, standalone: bool) -> Result<StarInstance, GadgetError> {
    let params = if standalone { params } else { params.attached() };
    let pv = params.validate();
    if !pv.passed() {
        return Err(GadgetError::Infeasible(pv.to_string()));
    }
    let pent = pentagon(params.a);
    let mut pts: Vec<Point> = pent.to_vec();
    for i in 0..5 {
        pts.push(outer_point(pent[i], params.b, pent[(i + 1) % 5], params.c)?);
    }
    let p5 = pts[5];
    let s = params.dist_5_to_1011;
    let others: Vec<Point> = (0..10).filter(|&k| k != 5).map(|k| pts[k]).collect();
    let u = best_direction(
        |u| {
            let q = p5.add(u.scale(s));
            angle_deg(pts[0], p5, q) > 91.0
        },
        |u| {
            let q = p5.add(u.scale(s));
            others.iter().map(|&o| dist(o, q)).fold(f64::INFINITY, f64::min)
        },
    )
    .ok_or_else(|| GadgetError::NoPlacement("direction for agents 10 and 11".into()))?;
    let (p10, p11) = symmetric_pair(p5, u, s, params.near_zero);
    let tail = (!standalone).then(|| {
        let half = params.near_zero / 2.0;
        let along = (s * s - half * half).sqrt() + (params.tail_dist().powi(2) - half * half).sqrt();
        p5.add(u.scale(along))
    });
    pts.push(p10);
    pts.push(p11);
    let agents = pts
        .iter()
        .enumerate()
        .map(|(k, &p)| Agent::tagged(k.to_string(), pose.apply(p), format!("star:{k}")))
        .collect();
    Ok(StarInstance {
        agents,
        kind: StarKind::Star3(params),
        pose,
        axis: (pose.apply(p5), pose.apply_dir(u)),
        tail: tail.map(|t| pose.apply(t)),
    })
}

fn ids_of<'a>(s: &'a StarInstance, ks: &[usize]) -> Vec<&'a str> {
    ks.iter().map(|&k| s.agents[k].id.as_str()).collect()
}

/// Checks every distance and angle condition of the twelve-point star.
/// `context` holds the surrounding agents that are not part of the star.
pub fn validate_star3(s: &StarInstance, context: &[Agent]) -> Report {
    let StarKind::Star3(params) = s.kind else {
        let mut r = Report::new();
        r.check("kind", false, "not a d = 3 star");
        return r;
    };
    let mut r = params.validate();
    if s.agents.len() != 12 {
        r.check("agent count", false, format!("{} agents, expected 12", s.agents.len()));
        return r;
    }
    let p = |k: usize| s.agents[k].pos;
    let d = |i: usize, j: usize| dist(p(i), p(j));
    let (a, b, c, ell, sd) = (params.a, params.b, params.c, params.ell(), params.dist_5_to_1011);
    for i in 0..5 {
        let j = (i + 1) % 5;
        r.approx(format!("edge {i}-{j} = a"), d(i, j), a, EXACT_TOL);
        r.approx(format!("diagonal {i}-{} = ell", (i + 2) % 5), d(i, (i + 2) % 5), ell, EXACT_TOL);
        r.approx(format!("dist({},{i}) = b", i + 5), d(i + 5, i), b, EXACT_TOL);
        r.approx(format!("dist({},{j}) = c", i + 5), d(i + 5, j), c, EXACT_TOL);
        r.less(format!("dist({},{i}) > ell", j + 5), ell, d(j + 5, i));
        let th = angle_deg(p(j), p(i), p(i + 5));
        r.check(format!("angle({j},{i},{}) <= 90", i + 5), th <= 90.0 + 1e-9, format!("{th:.4} deg"));
    }
    // Nearest-neighbour order among all agents (star and context).
    let all: Vec<Point> = s.agents.iter().chain(context.iter()).map(|a| a.pos).collect();
    let order = |k: usize| -> Vec<usize> {
        let mut o: Vec<usize> = (0..all.len()).filter(|&m| m != k).collect();
        o.sort_by(|&x, &y| dist(all[k], all[x]).total_cmp(&dist(all[k], all[y])));
        o
    };
    for i in 1..5 {
        let o = order(i + 5);
        r.check(
            format!("nearest of {} are {i} then {}", i + 5, (i + 1) % 5),
            o[0] == i && o[1] == (i + 1) % 5,
            format!("nearest {:?}", &o[..2]),
        );
    }
    let o5 = order(5);
    let first: Vec<usize> = {
        let mut v = o5[..2].to_vec();
        v.sort_unstable();
        v
    };
    let next: Vec<usize> = {
        let mut v = o5[2..4].to_vec();
        v.sort_unstable();
        v
    };
    r.check("nearest of 5 are 10, 11", first == [10, 11], format!("{first:?}"));
    r.check("then 0, 1", next == [0, 1], format!("{next:?}"));
    r.approx("dist(5,10)", d(5, 10), sd, EXACT_TOL);
    r.approx("dist(5,11)", d(5, 11), sd, EXACT_TOL);
    r.approx("dist(10,11) = near_zero", d(10, 11), params.near_zero, EXACT_TOL * 1e-2);
    let rest: Vec<usize> = (0..10).filter(|&k| k != 5).collect();
    for &t in &[10usize, 11] {
        let m = rest.iter().map(|&k| d(t, k)).fold(f64::INFINITY, f64::min);
        r.less(format!("dist({t}, W minus 5,10,11) > ell"), ell, m);
        let ang = angle_deg(p(0), p(5), p(t));
        r.check(format!("angle(0,5,{t}) > 90"), ang > 90.0, format!("{ang:.4} deg"));
    }
    if !context.is_empty() {
        for &t in &[10usize, 11] {
            let m = context.iter().map(|a| dist(a.pos, p(t))).fold(f64::INFINITY, f64::min);
            let bound = sd - params.epsilon;
            if (m - bound).abs() <= EXACT_TOL {
                r.boundary(format!("dist({t}, outside) >= dist(5,10) - eps"), true, format!("{m:.9} = {bound:.9}"));
            } else {
                r.check(format!("dist({t}, outside) > dist(5,10) - eps"), m > bound, format!("{m:.9} vs {bound:.9}"));
            }
        }
        let core: Vec<usize> = (0..10).collect();
        let m = context
            .iter()
            .flat_map(|a| core.iter().map(move |&k| dist(a.pos, p(k))))
            .fold(f64::INFINITY, f64::min);
        r.less("dist(W minus 10,11, outside) > ell", ell, m);
    }
    let _ = ids_of;
    r
}

/// Builds the clustered star for d >= 4.
pub fn build_star_d(pose: Pose, params: StarDParams) -> Result<StarInstance, GadgetError> {
    if params.d < 4 {
        return Err(GadgetError::BadD(params.d));
    }
    let pv = params.validate();
    if !pv.passed() {
        return Err(GadgetError::Infeasible(pv.to_string()));
    }
    let k = params.kappa();
    let ed = params.epsilon_d;
    let rx = params.cluster_radius();
    // Ranged distances sit just above their lower end, within 1e-6.
    let off = 2.5 * rx;
    let centres = pentagon(params.a + off);
    let mut agents: Vec<(String, Point)> = Vec::new();
    for (i, &cen) in centres.iter().enumerate() {
        for m in 0..k {
            let p = if k == 1 { cen } else { cen.add(Point::polar(rx, 2.0 * PI * m as f64 / k as f64)) };
            agents.push((format!("X{i}[{m}]"), p));
        }
    }
    let mut points = Vec::new();
    for i in 0..5 {
        let (ci, cj) = (centres[i], centres[(i + 1) % 5]);
        if params.even() {
            points.push(outer_point(ci, params.c + off, cj, params.b_prime + off)?);
            points.push(outer_point(ci, params.c_prime + off, cj, params.b + off)?);
        } else {
            points.push(outer_point(ci, params.b + off, cj, params.c + off)?);
        }
    }
    for (j, &p) in points.iter().enumerate() {
        agents.push((j.to_string(), p));
    }
    // Axis for Y.
    let y_dist = params.y_dist.unwrap_or(params.b - ed / 2.0);
    let (anchor, axis, y_centre) = if params.even() {
        let (p0, p1) = (points[0], points[1]);
        let mid = p0.add(p1).scale(0.5);
        let half = dist(p0, p1) / 2.0;
        if y_dist <= half {
            return Err(GadgetError::NoPlacement("Y distance below half the 0-1 separation".into()));
        }
        let mut n = p1.sub(p0).perp().unit();
        if n.dot(mid) < 0.0 {
            n = n.scale(-1.0);
        }
        let h = (y_dist * y_dist - half * half).sqrt();
        (mid, n, mid.add(n.scale(h)))
    } else {
        let p0 = points[0];
        let x0 = centres[0];
        let ell = params.ell();
        let fixed: Vec<Point> = agents.iter().filter(|(id, _)| id != "0").map(|(_, p)| *p).collect();
        let u = best_direction(
            |u| angle_deg(x0, p0, p0.add(u.scale(y_dist))) > 91.0,
            |u| {
                let q = p0.add(u.scale(y_dist));
                fixed.iter().map(|&o| dist(o, q)).fold(f64::INFINITY, f64::min).min(ell * 3.0)
            },
        )
        .ok_or_else(|| GadgetError::NoPlacement("direction for Y".into()))?;
        (p0, u, p0.add(u.scale(y_dist)))
    };
    let ny = params.y_len();
    let ry = rx;
    for m in 0..ny {
        let t = if ny == 1 { 0.0 } else { -1.0 + 2.0 * m as f64 / (ny - 1) as f64 };
        let off = t * ry;
        let p = match params.y_arc {
            Some(r) => {
                let centre = y_centre.add(axis.scale(r));
                let phi = off / r;
                centre.add(axis.scale(-1.0).rotate(phi).scale(r))
            }
            None => y_centre.add(axis.perp().scale(off)),
        };
        agents.push((format!("Y[{m}]"), p));
    }
    let agents = agents
        .into_iter()
        .map(|(id, p)| {
            let tag = format!("star:{id}");
            Agent::tagged(id, pose.apply(p), tag)
        })
        .collect();
    Ok(StarInstance {
        agents,
        kind: StarKind::StarD(params),
        pose,
        axis: (pose.apply(anchor), pose.apply_dir(axis)),
        tail: params.y_arc.map(|r| pose.apply(y_centre.add(axis.scale(r)))),
    })
}

/// Checks the clustered-star conditions. `context` holds surrounding agents
/// outside the star; `tail` (agent `h` in the reduction) is exempt from
/// the clearance requirement towards `Y`.
pub fn validate_star_d(s: &StarInstance, context: &[Agent], tail: Option<Point>) -> Report {
    let StarKind::StarD(params) = s.kind else {
        let mut r = Report::new();
        r.check("kind", false, "not a clustered star");
        return r;
    };
    let mut r = params.validate();
    if s.agents.len() != params.n_agents() {
        r.check("agent count", false, format!("{} agents, expected {}", s.agents.len(), params.n_agents()));
        return r;
    }
    let ed = params.epsilon_d;
    let ell = params.ell();
    let pos = |k: usize| s.agents[k].pos;
    let x: Vec<Vec<usize>> = (0..5).map(|i| s.cluster(i)).collect();
    let y = s.y();
    let pt = |j: usize| s.index(&j.to_string());
    let diam = |ks: &[usize]| -> f64 {
        let mut m = 0.0f64;
        for &p in ks {
            for &q in ks {
                m = m.max(dist(pos(p), pos(q)));
            }
        }
        m
    };
    let span = |ks: &[usize], o: usize| -> (f64, f64) {
        ks.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &k| {
            let v = dist(pos(k), pos(o));
            (lo.min(v), hi.max(v))
        })
    };
    let cross = |ps: &[usize], qs: &[usize]| -> (f64, f64) {
        ps.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| {
            let (l, h) = span(qs, p);
            (lo.min(l), hi.max(h))
        })
    };
    for i in 0..5 {
        r.check(format!("|X{i}| = kappa"), x[i].len() == params.kappa(), format!("{}", x[i].len()));
        r.check(format!("diam X{i} <= near_zero"), diam(&x[i]) <= params.near_zero, format!("{:e}", diam(&x[i])));
        let j = (i + 1) % 5;
        let (lo, hi) = cross(&x[i], &x[j]);
        r.range(format!("dist(X{i},X{j}) min"), lo, params.a, params.a + ed, true);
        r.range(format!("dist(X{i},X{j}) max"), hi, params.a, params.a + ed, true);
        let j2 = (i + 2) % 5;
        let (lo, hi) = cross(&x[i], &x[j2]);
        r.range(format!("dist(X{i},X{j2}) min"), lo, ell, ell + ed, true);
        r.range(format!("dist(X{i},X{j2}) max"), hi, ell, ell + ed, true);
    }
    let both = |r: &mut Report, name: String, (lo, hi): (f64, f64), want: f64| {
        r.range(format!("{name} min"), lo, want, want + ed, true);
        r.range(format!("{name} max"), hi, want, want + ed, true);
    };
    for i in 0..5 {
        let j = (i + 1) % 5;
        if params.even() {
            let (e, o) = (pt(2 * i), pt(2 * i + 1));
            both(&mut r, format!("dist({},X{i}) = c", 2 * i), span(&x[i], e), params.c);
            both(&mut r, format!("dist({},X{j}) = b'", 2 * i), span(&x[j], e), params.b_prime);
            both(&mut r, format!("dist({},X{i}) = c'", 2 * i + 1), span(&x[i], o), params.c_prime);
            both(&mut r, format!("dist({},X{j}) = b", 2 * i + 1), span(&x[j], o), params.b);
            let sep = dist(pos(e), pos(o));
            r.check(
                format!("dist({},{}) small (relaxed near-zero)", 2 * i, 2 * i + 1),
                sep < params.a / 10.0,
                format!("{sep:.6}"),
            );
            for &xa in &x[i] {
                for &xb in &x[j] {
                    let t1 = angle_deg(pos(e), pos(xa), pos(xb));
                    let t2 = angle_deg(pos(o), pos(xb), pos(xa));
                    r.check(format!("angle({},X{i},X{j}) < 90", 2 * i), t1 < 90.0, format!("{t1:.4}"));
                    r.check(format!("angle({},X{j},X{i}) < 90", 2 * i + 1), t2 < 90.0, format!("{t2:.4}"));
                }
            }
        } else {
            let p = pt(i);
            both(&mut r, format!("dist({i},X{i}) = b"), span(&x[i], p), params.b);
            both(&mut r, format!("dist({i},X{j}) = c"), span(&x[j], p), params.c);
            for &xa in &x[i] {
                for &xb in &x[j] {
                    let th = angle_deg(pos(xb), pos(xa), pos(p));
                    r.check(format!("angle(X{j},X{i},{i}) <= 90"), th <= 90.0, format!("{th:.4}"));
                }
            }
        }
    }
    r.check("|Y|", y.len() == params.y_len(), format!("{}", y.len()));
    r.check("diam Y <= near_zero", diam(&y) <= params.near_zero, format!("{:e}", diam(&y)));
    let partners: Vec<usize> = if params.even() { vec![pt(0), pt(1)] } else { vec![pt(0)] };
    for &p in &partners {
        let (lo, hi) = span(&y, p);
        let name = format!("dist(Y,{})", s.agents[p].id);
        match params.y_dist {
            Some(t) => {
                r.approx(format!("{name} min"), lo, t, EXACT_TOL);
                r.approx(format!("{name} max"), hi, t, EXACT_TOL);
            }
            None => {
                let band = if params.even() { ed } else { params.epsilon };
                r.range(format!("{name} min"), lo, params.b - band, params.b, false);
                r.range(format!("{name} max"), hi, params.b - band, params.b, false);
            }
        }
    }
    let rest: Vec<usize> = (0..s.agents.len()).filter(|k| !partners.contains(k) && !y.contains(k)).collect();
    let (lo_rest, _) = cross(&y, &rest);
    r.less("dist(Y, rest of star) > ell", ell, lo_rest);
    let (_, hi_partner) = cross(&y, &partners);
    r.less("partners are the closest to Y", hi_partner, lo_rest);
    if params.even() {
        for (j, other) in [(0usize, 1usize), (1, 0)] {
            for &yy in &y {
                for &xx in &x[other] {
                    let th = angle_deg(pos(yy), pos(pt(j)), pos(xx));
                    r.check(format!("angle(y,{j},X{other}) > 90"), th > 90.0, format!("{th:.4}"));
                }
            }
        }
    } else {
        for &yy in &y {
            for &xx in &x[0] {
                let th = angle_deg(pos(xx), pos(pt(0)), pos(yy));
                r.check("angle(X0,0,y) > 90", th > 90.0, format!("{th:.4}"));
            }
        }
        r.check("others at least b/2 from Y", lo_rest >= params.b / 2.0, format!("{lo_rest:.6}"));
    }
    if !context.is_empty() {
        let nony: Vec<usize> = (0..s.agents.len()).filter(|k| !y.contains(k)).collect();
        let m = context
            .iter()
            .flat_map(|a| nony.iter().map(move |&k| dist(a.pos, pos(k))))
            .fold(f64::INFINITY, f64::min);
        r.less("dist(star minus Y, outside) > ell", ell, m);
        let m = context
            .iter()
            .filter(|a| tail.map_or(true, |t| dist(t, a.pos) > 0.0))
            .flat_map(|a| y.iter().map(move |&k| dist(a.pos, pos(k))))
            .fold(f64::INFINITY, f64::min);
        r.less("dist(Y, outside except h) > ell", ell, m);
    }
    r
}

/// Places `count` garbage agents as a near-zero cluster more than `ell`
/// from every star agent and more than `clearance` from every point in
/// `avoid`, minimising the largest distance to the star agents in
/// `partners`. The report states whether that distance is below `2 ell`.
pub fn place_garbage(
    star: &StarInstance,
    partners: &[usize],
    count: usize,
    ell: f64,
    avoid: &[Point],
    clearance: f64,
    near_zero: f64,
) -> Result<(Vec<Point>, Report), GadgetError> {
    let pts: Vec<Point> = star.agents.iter().map(|a| a.pos).collect();
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in &pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let pad = 2.0 * ell;
    let step = ell / 40.0;
    let margin = ell * 1e-3 + near_zero;
    let nx = ((hi.x - lo.x + 2.0 * pad) / step).ceil() as usize;
    let ny = ((hi.y - lo.y + 2.0 * pad) / step).ceil() as usize;
    let mut best: Option<(f64, Point)> = None;
    for i in 0..=nx {
        for j in 0..=ny {
            let q = Point::new(lo.x - pad + i as f64 * step, lo.y - pad + j as f64 * step);
            if pts.iter().any(|&p| dist(p, q) <= ell + margin) {
                continue;
            }
            if avoid.iter().any(|&p| dist(p, q) <= clearance + margin) {
                continue;
            }
            let score = partners.iter().map(|&k| dist(pts[k], q)).fold(0.0, f64::max);
            if best.map_or(true, |(s, _)| score < s) {
                best = Some((score, q));
            }
        }
    }
    let (score, centre) = best.ok_or_else(|| GadgetError::NoPlacement("garbage cluster".into()))?;
    let r = near_zero / 4.0;
    let out: Vec<Point> = (0..count)
        .map(|m| {
            if count == 1 {
                centre
            } else {
                centre.add(Point::polar(r, 2.0 * PI * m as f64 / count as f64))
            }
        })
        .collect();
    let mut rep = Report::new();
    let m = out
        .iter()
        .flat_map(|&g| pts.iter().map(move |&p| dist(p, g)))
        .fold(f64::INFINITY, f64::min);
    rep.less("dist(R, star) > ell", ell, m);
    rep.check(
        "dist(R, partners) < 2 ell",
        score + r < 2.0 * ell,
        format!("{:.6} vs {:.6}", score + r, 2.0 * ell),
    );
    Ok((out, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star3_default_geometry() {
        let p = Star3Params::default();
        let oracle = (1.0 + 5f64.sqrt()) / 2.0 * 6.6;
        assert!((p.ell() - oracle).abs() < 1e-12);
        assert!((p.ell() - 10.679_024).abs() < 1e-6);
        assert!((p.theta_deg() - 71.8).abs() < 0.1);
        let s = build_star3(Pose::default(), p, true).unwrap();
        let rep = validate_star3(&s, &[]);
        assert!(rep.passed(), "{rep}");
        assert!((dist(s.pos("0"), s.pos("5")) + dist(s.pos("0"), s.pos("1")) - 16.7).abs() < 1e-9);
    }

    #[test]
    fn star3_pose_invariance() {
        let a = build_star3(Pose::default(), Star3Params::default(), true).unwrap();
        let pose = Pose { origin: Point::new(123.0, -45.5), angle: 1.234, mirror: true };
        let b = build_star3(pose, Star3Params::default(), true).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let da = dist(a.agents[i].pos, a.agents[j].pos);
                let db = dist(b.agents[i].pos, b.agents[j].pos);
                assert!((da - db).abs() < 1e-9);
            }
        }
        assert_eq!(validate_star3(&a, &[]).passed(), validate_star3(&b, &[]).passed());
    }

    #[test]
    fn star3_designed_violations() {
        let mut s = build_star3(Pose::default(), Star3Params::default(), true).unwrap();
        s.agents[10].pos = Point::new(s.agents[0].pos.x + 0.1, s.agents[0].pos.y);
        let rep = validate_star3(&s, &[]);
        assert!(rep.failures().iter().any(|c| c.name.contains("W minus 5,10,11")));
        let bad = Star3Params { c: 10.1, ..Star3Params::default() };
        let err = build_star3(Pose::default(), bad, true).unwrap_err();
        assert!(matches!(err, GadgetError::Infeasible(ref m) if m.contains("b < c")));
    }

    #[test]
    fn star_d_counts_and_defaults() {
        for d in [4usize, 5, 6, 7] {
            let p = StarDParams::standalone(d);
            let s = build_star_d(Pose::default(), p).unwrap();
            let k = (d - 1) / 2;
            let want = if d % 2 == 0 { 7 * k + 11 } else { 7 * k + 5 };
            assert_eq!(s.agents.len(), want);
            let rep = validate_star_d(&s, &[], None);
            assert!(rep.passed(), "d={d}\n{rep}");
        }
        let p = StarDParams::standalone(4);
        assert!((p.ell() - 14.562_306).abs() < 1e-5);
        assert!(p.b + p.b_prime < p.a + p.ell());
        assert!(p.c + p.c_prime < p.b + p.ell());
    }

    #[test]
    fn star_d_attached_params_valid() {
        for d in 4..=7 {
            let s = build_star_d(Pose::default(), StarDParams::attached(d)).unwrap();
            let rep = validate_star_d(&s, &[], None);
            assert!(rep.passed(), "d={d}\n{rep}");
        }
    }

    #[test]
    fn star_d_designed_violations() {
        let mut s = build_star_d(Pose::default(), StarDParams::standalone(5)).unwrap();
        let y0 = s.y()[0];
        s.agents[y0].pos = s.pos("2");
        let rep = validate_star_d(&s, &[], None);
        assert!(rep.failures().iter().any(|c| c.name.contains("rest of star")));
        let bad = StarDParams { b: 13.3, ..StarDParams::standalone(5) };
        assert!(matches!(build_star_d(Pose::default(), bad), Err(GadgetError::Infeasible(m)) if m.contains("b < 2a")));
        let bad = StarDParams { c_prime: 10.2, ..StarDParams::standalone(4) };
        assert!(matches!(build_star_d(Pose::default(), bad), Err(GadgetError::Infeasible(m)) if m.contains("c < c'")));
        assert_eq!(build_star_d(Pose::default(), StarDParams::standalone(3)), Err(GadgetError::BadD(3)));
    }

    #[test]
    fn star_d_pose_invariance() {
        let pose = Pose { origin: Point::new(-40.0, 7.0), angle: 2.5, mirror: true };
        for d in [4, 5] {
            let a = build_star_d(Pose::default(), StarDParams::standalone(d)).unwrap();
            let b = build_star_d(pose, StarDParams::standalone(d)).unwrap();
            let ra = validate_star_d(&a, &[], None);
            let rb = validate_star_d(&b, &[], None);
            let oks = |r: &Report| r.checks.iter().map(|c| c.ok).collect::<Vec<_>>();
            assert_eq!(oks(&ra), oks(&rb));
        }
    }
}
