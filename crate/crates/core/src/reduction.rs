//! Reduction from planar cubic exact cover by 3-sets to the existence of a
//! stable matching.
//!
//! Every element `u_i` and set `w_j` becomes a small gadget of three leaves
//! around the scaled layout position. Every edge `{u_i, w_j}` becomes a
//! chain of near-zero groups running along its route from the element leaf
//! `u_i/S_j` to the set leaf `w_j/e_i`, followed by a tail and a star at the
//! set end. A cover `K` corresponds to the stable matching in which chains
//! of the chosen sets are shifted towards the element.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{arc_cluster, check_epsilons, link_length, plan_chain, span_range, ChainError, LINK_BASE};
use crate::gadgets::{
    build_star3, build_star_d, place_garbage, validate_star3, validate_star_d, GadgetError, Pose, Star3Params,
    StarDParams, StarInstance, CLUSTER_RADIUS, EXACT_TOL,
};
use crate::layout::{
    canonical_symmetry, scale_layout, validate_layout, GridPoint, LayoutError, LayoutScaleReport, OrthogonalLayout,
    Symmetry, Vertex,
};
use crate::model::{circle_intersections, dist, Agent, Instance, Matching, ModelError, Point};
use crate::report::Report;
use crate::stability::SpatialGrid;
use crate::x3c::{associated_graph, validate_x3c, Cover, X3CInstance};

pub const DEFAULT_SCALE: i64 = 40;
pub const EPSILON: f64 = 5e-4;
pub const NEAR_ZERO: f64 = 1e-4;

/// Distance between element leaves.
pub const ELEMENT_SIDE: f64 = 8.0;
/// Set leaf distance for d = 3.
pub const SET_SIDE_3: f64 = 10.0;
/// Literal set leaf distance quoted for d >= 4; see [`literal_audit`].
pub const SET_SIDE_LITERAL: f64 = 17.5;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("invalid exact cover instance:\n{0}")]
    BadInstance(String),
    #[error("invalid layout:\n{0}")]
    BadLayout(String),
    #[error("coalition size d must be at least 3, got {0}")]
    BadD(usize),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("edge e{element}-S{set}: {source}")]
    Chain {
        element: usize,
        set: usize,
        #[source]
        source: ChainError,
    },
    #[error("edge e{element}-S{set}: {msg}")]
    Placement { element: usize, set: usize, msg: String },
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("constructed instance fails validation:\n{0}")]
    Validation(String),
    #[error("certificate does not fit: {0}")]
    Certificate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionParams {
    pub d: usize,
    /// Minimum route segment length after scaling.
    pub scale: i64,
    pub epsilon: f64,
    pub near_zero: f64,
}

impl ReductionParams {
    pub fn new(d: usize) -> Self {
        Self { d, scale: DEFAULT_SCALE, epsilon: EPSILON, near_zero: NEAR_ZERO }
    }

    /// Leaf distance in set gadgets. For d >= 4 the cluster `W_j` at the
    /// centroid must stay within 10 of every leaf.
    pub fn set_side(&self) -> f64 {
        if self.d == 3 {
            SET_SIDE_3
        } else {
            3f64.sqrt() * (10.0 - CLUSTER_RADIUS)
        }
    }

    pub fn star3(&self) -> Star3Params {
        Star3Params { epsilon: self.epsilon, near_zero: self.near_zero, ..Star3Params::default() }
    }

    pub fn star_d(&self) -> StarDParams {
        let e = self.epsilon;
        StarDParams {
            epsilon: e,
            near_zero: self.near_zero,
            y_dist: Some(15.0 + 4.0 * e),
            y_arc: Some(15.0 + 3.0 * e),
            ..StarDParams::attached(self.d)
        }
    }

    pub fn ell(&self) -> f64 {
        if self.d == 3 {
            self.star3().ell()
        } else {
            self.star_d().ell()
        }
    }

    /// Size of the per-edge garbage cluster `R` (d >= 4).
    pub fn garbage_size(&self) -> usize {
        let d = self.d;
        if d == 3 {
            return 0;
        }
        let k = (d - 1) / 2;
        if d % 2 == 1 {
            d - k - 2
        } else if d <= 6 {
            2 * d - k - 5
        } else {
            d - k - 5
        }
    }

    /// Distance from the tail agents (`f`, `g` or `F`) to the set leaf.
    pub fn tail_radius(&self) -> f64 {
        if self.d == 3 {
            10.0 + 1.5 * self.epsilon
        } else {
            10.0 + 15.0 / (self.d - 1) as f64
        }
    }

    /// Distance from the tail agents to `h`.
    pub fn h_offset(&self) -> f64 {
        if self.d == 3 {
            10.0 + 2.0 * self.epsilon
        } else {
            15.0 + 2.0 * self.epsilon
        }
    }

    fn h_clearance(&self) -> f64 {
        self.h_offset() + 2.0 * self.epsilon
    }

    fn centre_size(&self) -> usize {
        if self.d == 3 {
            1
        } else {
            self.d - 2
        }
    }

    fn group_size(&self) -> usize {
        self.d - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementCert {
    pub centre: Vec<String>,
    /// Leaf id per incident set (one-based).
    pub leaves: BTreeMap<usize, String>,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCert {
    /// Leaf id per incident element.
    pub leaves: BTreeMap<usize, String>,
    /// `W_j` (d >= 4).
    pub cluster: Vec<String>,
    pub symmetry: Symmetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCert {
    pub element: usize,
    pub set: usize,
    pub n_hat: usize,
    /// `eps_1 .. eps_{2 n_hat}`.
    pub epsilons: Vec<f64>,
    /// Index of the gamma agent where the chain turns.
    pub bend: Option<usize>,
    /// `gamma[0..=n_hat]`; the ends are the element and set leaves.
    pub gammas: Vec<String>,
    /// Group `z` at index `z - 1`: `alpha[z], beta[z]` or `A[z]`.
    pub groups: Vec<Vec<String>>,
    /// `f, g` or `F`.
    pub tail: Vec<String>,
    pub h: String,
    pub star: Vec<String>,
    /// `R` (d >= 4).
    pub garbage: Vec<String>,
}

impl EdgeCert {
    pub fn prefix(&self) -> String {
        edge_prefix(self.element, self.set)
    }

    /// Global id of a star agent from its local id.
    pub fn star_id(&self, local: &str) -> String {
        format!("{}/star/{local}", self.prefix())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionCertificate {
    pub params: ReductionParams,
    pub ell: f64,
    pub set_side: f64,
    pub scale_factor: i64,
    pub reduced_separation: bool,
    pub x3c: X3CInstance,
    /// Input layout before scaling; with `params` and `x3c` it determines
    /// the instance.
    pub layout: OrthogonalLayout,
    pub elements: BTreeMap<usize, ElementCert>,
    pub sets: BTreeMap<usize, SetCert>,
    pub edges: Vec<EdgeCert>,
    /// Triples completing unchosen `W_j` (d >= 4).
    pub garbage_triples: Vec<Vec<String>>,
    /// Set whose cluster `W_j` each triple sits next to.
    pub garbage_hosts: Vec<usize>,
}

impl ReductionCertificate {
    pub fn edge(&self, element: usize, set: usize) -> Option<&EdgeCert> {
        self.edges.iter().find(|e| e.element == element && e.set == set)
    }
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub instance: Instance,
    pub certificate: ReductionCertificate,
    pub scale: LayoutScaleReport,
}

/// Rebuilds the reduced instance recorded by `cert` and checks that the
/// rebuilt certificate matches.
pub fn rebuild(cert: &ReductionCertificate) -> Result<Reduction, ReductionError> {
    let red = reduce(&cert.x3c, &cert.layout, cert.params)?;
    if red.certificate != *cert {
        return Err(ReductionError::Certificate("certificate does not match the instance rebuilt from it".into()));
    }
    Ok(red)
}

pub fn edge_prefix(element: usize, set: usize) -> String {
    format!("e{element}/S{set}")
}

#[derive(Default)]
struct Placed {
    agents: Vec<Agent>,
    /// Clearance every later agent must keep from this one.
    rho: Vec<f64>,
    index: HashMap<String, usize>,
}

impl Placed {
    fn push(&mut self, id: String, pos: Point, tag: &str, rho: f64) -> String {
        self.index.insert(id.clone(), self.agents.len());
        self.agents.push(Agent::tagged(id.clone(), pos, tag));
        self.rho.push(rho);
        id
    }

    fn pos(&self, id: &str) -> Point {
        self.agents[self.index[id]].pos
    }
}

fn gp(p: GridPoint) -> Point {
    Point::new(p.0 as f64, p.1 as f64)
}

fn centroid(pts: &[Point]) -> Point {
    let s = pts.iter().fold(Point::new(0.0, 0.0), |a, &p| a.add(p));
    s.scale(1.0 / pts.len() as f64)
}

/// Three leaves around `centre` on the given route directions, pairwise
/// `side` apart: the opposite pair at `side / 2`, the third at
/// `side * sqrt(3) / 2`.
fn leaf_positions(centre: Point, dirs: &[GridPoint], side: f64) -> Vec<Point> {
    dirs.iter()
        .map(|&dir| {
            let opposite = dirs.contains(&(-dir.0, -dir.1));
            let off = if opposite { side / 2.0 } else { side * 3f64.sqrt() / 2.0 };
            centre.add(gp(dir).scale(off))
        })
        .collect()
}

struct TailPlacement {
    tail: Vec<Point>,
    h: Point,
    star: StarInstance,
    score: f64,
}

/// Searches the side of the tail apex, the turn of the star axis and the
/// mirror image, maximising the worst clearance slack against `obstacles`.
/// `exempt` lists obstacle indices the tail agents may approach.
fn place_tail(
    params: &ReductionParams,
    w: Point,
    group: &[Point],
    obstacles: &[(Point, f64)],
    exempt: &HashSet<usize>,
) -> Result<TailPlacement, String> {
    let d = params.d;
    let eps = params.epsilon;
    let ell = params.ell();
    let base = if d == 3 {
        build_star3(Pose::default(), params.star3(), false).map_err(|e| e.to_string())?
    } else {
        build_star_d(Pose::default(), params.star_d()).map_err(|e| e.to_string())?
    };
    let local_tail = base.tail.ok_or("star without tail point")?;
    let local_dir = base.axis.1;
    let c = centroid(group);
    let rw = params.tail_radius();
    let (q1, q2) = circle_intersections(w, rw, c, 10.0 + 1.5 * eps).ok_or("tail apex circles are disjoint")?;
    let tail_rho = params.h_offset();
    let mut best: Option<TailPlacement> = None;
    for q in [q1, q2] {
        let u = q.sub(w).unit();
        let (tail, h) = if d == 3 {
            let h = q.add(u.scale(params.h_offset()));
            (arc_cluster(h, q, params.h_offset(), 2, params.near_zero / 2.0), h)
        } else {
            let h = w.add(u.scale(rw + params.h_offset()));
            (arc_cluster(w, q, rw, d - 1, CLUSTER_RADIUS), h)
        };
        for turn in -6i32..=6 {
            let v = u.rotate(turn as f64 * PI / 18.0);
            for mirror in [false, true] {
                let pose = Pose::aligning(local_tail, local_dir, h, v.scale(-1.0), mirror);
                let star = base.transformed(&pose);
                let mut cand: Vec<(Point, f64)> = tail.iter().map(|&p| (p, tail_rho)).collect();
                cand.push((h, params.h_clearance()));
                cand.extend(star.agents.iter().map(|a| (a.pos, ell)));
                let mut score = f64::INFINITY;
                for a in &star.agents {
                    for &t in &tail {
                        score = score.min(dist(a.pos, t) - ell);
                    }
                }
                for &(p, rp) in &cand {
                    for (k, &(o, ro)) in obstacles.iter().enumerate() {
                        if rp == tail_rho && exempt.contains(&k) {
                            continue;
                        }
                        score = score.min(dist(p, o) - rp.max(ro));
                    }
                }
                if best.as_ref().map_or(true, |b| score > b.score) {
                    best = Some(TailPlacement { tail: tail.clone(), h, star, score });
                }
            }
        }
    }
    let best = best.ok_or("no tail candidate")?;
    if best.score <= 0.0 {
        return Err(format!("no tail placement keeps its clearances (best slack {:.4})", best.score));
    }
    Ok(best)
}

/// Local ids of the star points the garbage cluster `R` joins.
pub fn garbage_partners(d: usize) -> Vec<String> {
    let k = (d - 1) / 2;
    let xs = |i: usize| (0..k).map(move |m| format!("X{i}[{m}]"));
    let pts = |v: &[usize]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>();
    if d % 2 == 1 {
        xs(1).chain(pts(&[1, 3])).collect()
    } else if d == 4 {
        pts(&[4, 5])
    } else if d == 6 {
        pts(&[5])
    } else {
        xs(0).chain(pts(&[1, 4, 5, 8, 9])).collect()
    }
}

/// Builds the reduction instance for `x3c` drawn with `layout`.
pub fn reduce(x3c: &X3CInstance, layout: &OrthogonalLayout, params: ReductionParams) -> Result<Reduction, ReductionError> {
    let d = params.d;
    if d < 3 {
        return Err(ReductionError::BadD(d));
    }
    let xr = validate_x3c(x3c);
    if !xr.passed() {
        return Err(ReductionError::BadInstance(failures_text(&xr)));
    }
    let graph = associated_graph(x3c);
    let lr = validate_layout(&graph, layout);
    if !lr.passed() {
        return Err(ReductionError::BadLayout(failures_text(&lr)));
    }
    let (lay, scale) = scale_layout(layout, params.scale)?;
    let eps = params.epsilon;
    let nz = params.near_zero;
    let mut placed = Placed::default();
    let mut elements = BTreeMap::new();
    let mut sets = BTreeMap::new();

    for i in x3c.elements() {
        let v = Vertex::U(i);
        let routes = lay.incident(v);
        let dirs: Vec<GridPoint> = routes.iter().map(|r| lay.leaving_direction(r, v).unwrap()).collect();
        let symmetry = canonical_symmetry(&dirs)
            .ok_or_else(|| ReductionError::BadLayout(format!("u{i} needs three distinct route directions")))?;
        let pts = leaf_positions(gp(lay.positions[&v]), &dirs, ELEMENT_SIDE);
        let mut leaves = BTreeMap::new();
        for (r, &p) in routes.iter().zip(&pts) {
            leaves.insert(r.set, placed.push(format!("u{i}/S{}", r.set), p, "element", 0.0));
        }
        let c = centroid(&pts);
        let centre = if d == 3 {
            vec![placed.push(format!("u{i}"), c, "element", 0.0)]
        } else {
            (0..params.centre_size()).map(|k| placed.push(format!("U{i}[{k}]"), c, "element", 0.0)).collect()
        };
        elements.insert(i, ElementCert { centre, leaves, symmetry });
    }
    for j in 1..=x3c.sets.len() {
        let v = Vertex::W(j);
        let routes = lay.incident(v);
        let dirs: Vec<GridPoint> = routes.iter().map(|r| lay.leaving_direction(r, v).unwrap()).collect();
        let symmetry = canonical_symmetry(&dirs)
            .ok_or_else(|| ReductionError::BadLayout(format!("w{j} needs three distinct route directions")))?;
        let pts = leaf_positions(gp(lay.positions[&v]), &dirs, params.set_side());
        let mut leaves = BTreeMap::new();
        for (r, &p) in routes.iter().zip(&pts) {
            leaves.insert(r.element, placed.push(format!("w{j}/e{}", r.element), p, "set", 0.0));
        }
        let c = centroid(&pts);
        let cluster = (0..d - 3).map(|k| placed.push(format!("W{j}[{k}]"), c, "set", 0.0)).collect();
        sets.insert(j, SetCert { leaves, cluster, symmetry });
    }

    let mut routes: Vec<_> = lay.routes.iter().collect();
    routes.sort_by_key(|r| (r.element, r.set));
    let mut edges = Vec::new();
    for r in &routes {
        let (i, j) = (r.element, r.set);
        let pre = edge_prefix(i, j);
        let start_id = elements[&i].leaves[&j].clone();
        let end_id = sets[&j].leaves[&i].clone();
        let mut poly = vec![placed.pos(&start_id)];
        poly.extend(r.bends.iter().map(|&b| gp(b)));
        poly.push(placed.pos(&end_id));
        let plan = plan_chain(&poly, eps, nz / 2.0, 1.0)
            .map_err(|source| ReductionError::Chain { element: i, set: j, source })?;
        let n = plan.n_hat;
        let mut gammas = vec![start_id];
        for z in 1..n {
            gammas.push(placed.push(format!("{pre}/gamma[{z}]"), plan.gammas[z], "chain", 0.0));
        }
        gammas.push(end_id);
        let mut groups = Vec::new();
        for z in 1..=n {
            let r1 = LINK_BASE + plan.epsilons[2 * z - 2];
            let pts = arc_cluster(plan.gammas[z - 1], plan.gammas[z], r1, params.group_size(), nz / 2.0);
            let ids: Vec<String> = if d == 3 {
                vec![format!("{pre}/alpha[{z}]"), format!("{pre}/beta[{z}]")]
            } else {
                (0..d - 1).map(|k| format!("{pre}/A[{z}][{k}]")).collect()
            };
            groups.push(ids.into_iter().zip(pts).map(|(id, p)| placed.push(id, p, "chain", 0.0)).collect());
        }
        edges.push(EdgeCert {
            element: i,
            set: j,
            n_hat: n,
            epsilons: plan.epsilons,
            bend: plan.bend,
            gammas,
            groups,
            tail: Vec::new(),
            h: String::new(),
            star: Vec::new(),
            garbage: Vec::new(),
        });
    }

    let ell = params.ell();
    for e in &mut edges {
        let pre = e.prefix();
        let w = placed.pos(&e.gammas[e.n_hat]);
        let group: Vec<Point> = e.groups[e.n_hat - 1].iter().map(|id| placed.pos(id)).collect();
        let reach = 200.0 + 8.0 * ell;
        let mut obstacles = Vec::new();
        let mut exempt = HashSet::new();
        let own: HashSet<&String> =
            e.groups[e.n_hat - 1].iter().chain([&e.gammas[e.n_hat], &e.gammas[e.n_hat - 1]]).collect();
        for (k, a) in placed.agents.iter().enumerate() {
            if dist(a.pos, w) < reach {
                if own.contains(&a.id) {
                    exempt.insert(obstacles.len());
                }
                obstacles.push((a.pos, placed.rho[k]));
            }
        }
        let tp = place_tail(&params, w, &group, &obstacles, &exempt)
            .map_err(|msg| ReductionError::Placement { element: e.element, set: e.set, msg })?;
        let tail_rho = params.h_offset();
        e.tail = tp
            .tail
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let id = match (d, k) {
                    (3, 0) => format!("{pre}/f"),
                    (3, _) => format!("{pre}/g"),
                    _ => format!("{pre}/F[{k}]"),
                };
                placed.push(id, p, "tail", tail_rho)
            })
            .collect();
        e.h = placed.push(format!("{pre}/h"), tp.h, "tail", params.h_clearance());
        e.star = tp
            .star
            .agents
            .iter()
            .map(|a| placed.push(format!("{pre}/star/{}", a.id), a.pos, "star", ell))
            .collect();
    }

    if params.garbage_size() > 0 {
        let partners = garbage_partners(d);
        for e in &mut edges {
            let star_ids: HashSet<&String> = e.star.iter().collect();
            let agents: Vec<Agent> = e
                .star
                .iter()
                .map(|id| {
                    let local = id.rsplit('/').next().unwrap();
                    Agent::new(local, placed.pos(id))
                })
                .collect();
            let centre = centroid(&agents.iter().map(|a| a.pos).collect::<Vec<_>>());
            let star = StarInstance {
                agents,
                kind: crate::gadgets::StarKind::StarD(params.star_d()),
                pose: Pose::default(),
                axis: (centre, Point::new(1.0, 0.0)),
                tail: None,
            };
            let idx: Vec<usize> = partners.iter().map(|p| star.index(p)).collect();
            let avoid: Vec<Point> = placed
                .agents
                .iter()
                .filter(|a| !star_ids.contains(&a.id) && dist(a.pos, centre) < 12.0 * ell)
                .map(|a| a.pos)
                .collect();
            let (pts, _) = place_garbage(&star, &idx, params.garbage_size(), ell, &avoid, 2.0 * ell, nz)
                .map_err(|err| ReductionError::Placement { element: e.element, set: e.set, msg: err.to_string() })?;
            let pre = e.prefix();
            e.garbage = pts
                .into_iter()
                .enumerate()
                .map(|(k, p)| placed.push(format!("{pre}/R[{k}]"), p, "garbage", 2.0 * ell))
                .collect();
        }
    }

    let (garbage_triples, garbage_hosts) = if d >= 4 {
        let hosts: Vec<usize> = (1..=x3c.sets.len() - x3c.n).collect();
        let mut triples = Vec::new();
        for (t, &j) in hosts.iter().enumerate() {
            let at = placed.pos(&sets[&j].cluster[0]);
            let p = place_set_garbage(&placed, at, 2.0 * ell)
                .ok_or_else(|| ReductionError::Placement { element: 0, set: j, msg: "no room for the garbage triple".into() })?;
            triples.push((0..3).map(|k| placed.push(format!("G{t}[{k}]"), p, "garbage", 0.0)).collect());
        }
        (triples, hosts)
    } else {
        (Vec::new(), Vec::new())
    };

    let instance = Instance::new(d, placed.agents, None)?;
    let certificate = ReductionCertificate {
        params,
        ell,
        set_side: params.set_side(),
        scale_factor: scale.factor,
        reduced_separation: scale.reduced_separation,
        x3c: x3c.clone(),
        layout: layout.clone(),
        elements,
        sets,
        edges,
        garbage_triples,
        garbage_hosts,
    };
    let rep = validate_reduction(&instance, &certificate);
    if !rep.passed() {
        return Err(ReductionError::Validation(failures_text(&rep)));
    }
    Ok(Reduction { instance, certificate, scale })
}

fn failures_text(r: &Report) -> String {
    r.failures().iter().map(|c| format!("FAIL {}: {}", c.name, c.detail)).collect::<Vec<_>>().join("\n")
}

/// Point nearest to `at` (radius steps of 5, angle steps of 5 degrees)
/// keeping more than `clearance` from every placed agent not at `at`.
fn place_set_garbage(placed: &Placed, at: Point, clearance: f64) -> Option<Point> {
    let near: Vec<Point> = placed
        .agents
        .iter()
        .map(|a| a.pos)
        .filter(|&p| dist(p, at) > 1e-9 && dist(p, at) < 400.0 + clearance)
        .collect();
    for step in 1..=80 {
        let r = 5.0 * step as f64;
        let mut best: Option<(f64, Point)> = None;
        for k in 0..72 {
            let q = at.add(Point::polar(r, k as f64 * PI / 36.0));
            let m = near.iter().map(|&p| dist(p, q)).fold(f64::INFINITY, f64::min);
            if m > clearance + 1.0 && best.map_or(true, |(b, _)| m > b) {
                best = Some((m, q));
            }
        }
        if let Some((_, q)) = best {
            return Some(q);
        }
    }
    None
}

struct Rule {
    label: String,
    members: Vec<usize>,
    rho: f64,
    exempt: HashSet<usize>,
}

fn ids_to_idx(inst: &Instance, ids: &[String]) -> Result<Vec<usize>, ModelError> {
    inst.lookup_all(ids)
}

fn merge_prefixed(r: &mut Report, sub: Report, prefix: &str) {
    for mut c in sub.checks {
        c.name = format!("{prefix}: {}", c.name);
        r.checks.push(c);
    }
}

/// Agent count implied by the certificate's structure.
pub fn expected_agent_count(cert: &ReductionCertificate) -> usize {
    let p = &cert.params;
    let d = p.d;
    let m = cert.x3c.sets.len();
    let elements = 3 * cert.x3c.n * (3 + p.centre_size());
    let sets = m * (3 + d - 3);
    let star = if d == 3 { 12 } else { p.star_d().n_agents() };
    let edges: usize =
        cert.edges.iter().map(|e| (e.n_hat - 1) + e.n_hat * (d - 1) + (d - 1) + 1 + star + p.garbage_size()).sum();
    let garbage = if d >= 4 { 3 * (m - cert.x3c.n) } else { 0 };
    elements + sets + edges + garbage
}

/// Checks every realised distance, range and clearance of a reduction
/// instance against its certificate.
pub fn validate_reduction(inst: &Instance, cert: &ReductionCertificate) -> Report {
    let mut r = Report::new();
    let p = &cert.params;
    let d = p.d;
    let eps = p.epsilon;
    let nz = p.near_zero;
    let ell = cert.ell;
    let want = expected_agent_count(cert);
    r.check("agent count", inst.len() == want, format!("{} agents, expected {want}", inst.len()));
    r.check("d divides agent count", inst.len() % d == 0, format!("{} mod {d}", inst.len()));
    match validate_inner(inst, cert, &mut r) {
        Ok(()) => {}
        Err(e) => r.check("certificate ids resolve", false, e.to_string()),
    }
    let _ = (eps, nz, ell);
    r
}

fn span_to(inst: &Instance, xs: &[usize], y: usize) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| {
        let v = inst.dist(x, y);
        (lo.min(v), hi.max(v))
    })
}

fn diam(inst: &Instance, xs: &[usize]) -> f64 {
    let mut m = 0.0f64;
    for &a in xs {
        for &b in xs {
            m = m.max(inst.dist(a, b));
        }
    }
    m
}

fn validate_inner(inst: &Instance, cert: &ReductionCertificate, r: &mut Report) -> Result<(), ModelError> {
    let p = &cert.params;
    let d = p.d;
    let eps = p.epsilon;
    let nz = p.near_zero;
    let ell = cert.ell;
    let mut rules: Vec<Rule> = Vec::new();

    for (i, el) in &cert.elements {
        let centre = ids_to_idx(inst, &el.centre)?;
        let leaves: Vec<usize> = ids_to_idx(inst, &el.leaves.values().cloned().collect::<Vec<_>>())?;
        let gadget: HashSet<usize> = centre.iter().chain(&leaves).copied().collect();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for a in 0..3 {
            for b in a + 1..3 {
                let v = inst.dist(leaves[a], leaves[b]);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        r.approx(format!("u{i} leaf distance min"), lo, ELEMENT_SIDE, EXACT_TOL);
        r.approx(format!("u{i} leaf distance max"), hi, ELEMENT_SIDE, EXACT_TOL);
        let spans: Vec<(f64, f64)> = leaves.iter().map(|&l| span_to(inst, &centre, l)).collect();
        let want = ELEMENT_SIDE / 3f64.sqrt();
        for (k, (a, b)) in spans.iter().enumerate() {
            r.approx(format!("u{i} centre to leaf {k} min"), *a, want, EXACT_TOL);
            r.approx(format!("u{i} centre to leaf {k} max"), *b, want, EXACT_TOL);
        }
        rules.push(Rule { label: format!("u{i} centre"), members: centre.clone(), rho: ELEMENT_SIDE, exempt: gadget.clone() });
        for (j, id) in &el.leaves {
            let Some(e) = cert.edge(*i, *j) else {
                r.check(format!("edge e{i}-S{j} present"), false, "missing from certificate");
                continue;
            };
            let mut ex = gadget.clone();
            ex.extend(ids_to_idx(inst, &e.groups[0])?);
            let rho = LINK_BASE + e.epsilons[0];
            rules.push(Rule { label: format!("leaf {id}"), members: vec![inst.lookup(id)?], rho, exempt: ex });
        }
    }

    for (j, s) in &cert.sets {
        let cluster = ids_to_idx(inst, &s.cluster)?;
        let leaves: Vec<usize> = ids_to_idx(inst, &s.leaves.values().cloned().collect::<Vec<_>>())?;
        let gadget: HashSet<usize> = cluster.iter().chain(&leaves).copied().collect();
        for a in 0..3 {
            for b in a + 1..3 {
                r.approx(format!("w{j} leaves {a}-{b} = side"), inst.dist(leaves[a], leaves[b]), cert.set_side, EXACT_TOL);
            }
        }
        r.check(format!("|W{j}| = d - 3"), cluster.len() == d - 3, format!("{}", cluster.len()));
        if !cluster.is_empty() {
            let hi = leaves.iter().map(|&l| span_to(inst, &cluster, l).1).fold(0.0, f64::max);
            r.check(format!("dist(W{j}, leaves) <= 10"), hi <= 10.0, format!("{hi:.9}"));
            r.check(format!("diam W{j} <= near_zero"), diam(inst, &cluster) <= nz, format!("{:e}", diam(inst, &cluster)));
            rules.push(Rule { label: format!("W{j}"), members: cluster.clone(), rho: 10.0, exempt: gadget.clone() });
        }
        for (i, id) in &s.leaves {
            let Some(e) = cert.edge(*i, *j) else { continue };
            let mut ex = gadget.clone();
            ex.extend(ids_to_idx(inst, &e.groups[e.n_hat - 1])?);
            rules.push(Rule { label: format!("leaf {id}"), members: vec![inst.lookup(id)?], rho: 10.0, exempt: ex });
        }
    }

    let star_size = if d == 3 { 12 } else { p.star_d().n_agents() };
    let mut star_members: HashSet<usize> = HashSet::new();
    for e in &cert.edges {
        let pre = e.prefix();
        let n = e.n_hat;
        r.check(format!("{pre}: n_hat >= 1"), n >= 1, format!("{n}"));
        if n == 0 {
            continue;
        }
        r.check(
            format!("{pre}: epsilon sequence"),
            check_epsilons(&e.epsilons, eps).is_ok(),
            check_epsilons(&e.epsilons, eps).err().unwrap_or_default(),
        );
        let gam = ids_to_idx(inst, &e.gammas)?;
        let groups: Vec<Vec<usize>> = e.groups.iter().map(|g| ids_to_idx(inst, g)).collect::<Result<_, _>>()?;
        r.check(format!("{pre}: chain shape"), gam.len() == n + 1 && groups.len() == n, format!("{} gammas, {} groups", gam.len(), groups.len()));
        if gam.len() != n + 1 || groups.len() != n || e.epsilons.len() != 2 * n {
            continue;
        }
        let mut worst_first = 0.0f64;
        let mut worst_second = 0.0f64;
        let mut worst_diam = 0.0f64;
        for z in 1..=n {
            let g = &groups[z - 1];
            let r1 = LINK_BASE + e.epsilons[2 * z - 2];
            let r2 = LINK_BASE + e.epsilons[2 * z - 1];
            let (a, b) = span_to(inst, g, gam[z - 1]);
            worst_first = worst_first.max((a - r1).abs()).max((b - r1).abs());
            let (a, b) = span_to(inst, g, gam[z]);
            worst_second = worst_second.max((a - r2).abs()).max((b - r2).abs());
            worst_diam = worst_diam.max(diam(inst, g));
            let mut ex: HashSet<usize> = g.iter().copied().collect();
            ex.insert(gam[z - 1]);
            ex.insert(gam[z]);
            rules.push(Rule { label: format!("{pre}: group {z}"), members: g.clone(), rho: r2, exempt: ex });
            if z < n {
                let mut ex: HashSet<usize> = g.iter().chain(&groups[z]).copied().collect();
                ex.insert(gam[z]);
                let rho = LINK_BASE + e.epsilons[2 * z];
                rules.push(Rule { label: format!("{pre}: gamma[{z}]"), members: vec![gam[z]], rho, exempt: ex });
            }
        }
        r.approx(format!("{pre}: group to previous gamma = 8 + eps"), worst_first, 0.0, EXACT_TOL);
        r.approx(format!("{pre}: group to next gamma = 8 + eps"), worst_second, 0.0, EXACT_TOL);
        r.check(format!("{pre}: group diameter <= near_zero"), worst_diam <= nz + 1e-12, format!("{worst_diam:e}"));

        let tail = ids_to_idx(inst, &e.tail)?;
        let h = inst.lookup(&e.h)?;
        let w = gam[n];
        let last = &groups[n - 1];
        r.check(format!("{pre}: tail size"), tail.len() == d - 1, format!("{}", tail.len()));
        let (a, b) = span_to(inst, &tail, h);
        r.approx(format!("{pre}: dist(tail, h) min"), a, p.h_offset(), EXACT_TOL);
        r.approx(format!("{pre}: dist(tail, h) max"), b, p.h_offset(), EXACT_TOL);
        let (a, b) = span_to(inst, &tail, w);
        r.approx(format!("{pre}: dist(tail, w) min"), a, p.tail_radius(), EXACT_TOL);
        r.approx(format!("{pre}: dist(tail, w) max"), b, p.tail_radius(), EXACT_TOL);
        let (mut a, mut b) = (f64::INFINITY, 0.0f64);
        for &x in last {
            let (lo, hi) = span_to(inst, &tail, x);
            a = a.min(lo);
            b = b.max(hi);
        }
        r.range(format!("{pre}: dist(tail, last group) min"), a, 10.0 + eps, 10.0 + 2.0 * eps, false);
        r.range(format!("{pre}: dist(tail, last group) max"), b, 10.0 + eps, 10.0 + 2.0 * eps, false);
        if d == 3 {
            r.approx(format!("{pre}: dist(f, g) = near_zero"), diam(inst, &tail), nz, EXACT_TOL * 1e-2);
        } else {
            r.check(format!("{pre}: diam F <= near_zero"), diam(inst, &tail) <= nz, format!("{:e}", diam(inst, &tail)));
        }
        let mut ex: HashSet<usize> = tail.iter().chain(last).copied().collect();
        ex.insert(h);
        ex.insert(w);
        ex.insert(gam[n - 1]);
        rules.push(Rule { label: format!("{pre}: tail"), members: tail.clone(), rho: p.h_offset(), exempt: ex });

        let star = ids_to_idx(inst, &e.star)?;
        r.check(format!("{pre}: star size"), star.len() == star_size, format!("{}", star.len()));
        if star.len() != star_size {
            continue;
        }
        star_members.extend(&star);
        let star_set: HashSet<usize> = star.iter().copied().collect();
        let local = |k: usize| e.star[k].rsplit('/').next().unwrap().to_string();
        let agents: Vec<Agent> = star.iter().enumerate().map(|(k, &x)| Agent::new(local(k), inst.pos(x))).collect();
        let near_h: Vec<usize> = star
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let l = local(*k);
                if d == 3 {
                    l == "10" || l == "11"
                } else {
                    l.starts_with("Y[")
                }
            })
            .map(|(_, &x)| x)
            .collect();
        let mut ex: HashSet<usize> = tail.iter().chain(&near_h).copied().collect();
        ex.insert(h);
        rules.push(Rule { label: format!("{pre}: h"), members: vec![h], rho: p.h_clearance(), exempt: ex });
        let mut ex = star_set.clone();
        ex.insert(h);
        rules.push(Rule { label: format!("{pre}: star near h"), members: near_h.clone(), rho: ell, exempt: ex });
        let far: Vec<usize> = star.iter().copied().filter(|x| !near_h.contains(x)).collect();
        rules.push(Rule { label: format!("{pre}: star"), members: far, rho: ell, exempt: star_set.clone() });

        let centre = centroid(&agents.iter().map(|a| a.pos).collect::<Vec<_>>());
        let context: Vec<Agent> = (0..inst.len())
            .filter(|k| !star_set.contains(k) && dist(inst.pos(*k), centre) < 4.0 * ell + 60.0)
            .map(|k| inst.agent(k).clone())
            .collect();
        let sub = if d == 3 {
            let mut s = build_star3(Pose::default(), p.star3(), false).expect("default star");
            s.agents = agents;
            validate_star3(&s, &context)
        } else {
            let mut s = build_star_d(Pose::default(), p.star_d()).expect("default star");
            s.agents = agents;
            validate_star_d(&s, &context, Some(inst.pos(h)))
        };
        merge_prefixed(r, sub, &format!("{pre}: star"));
        let tail_star = if d == 3 {
            let (a, b) = span_to(inst, &near_h, h);
            (a, b, 10.0 + 3.0 * eps)
        } else {
            let (a, b) = span_to(inst, &near_h, h);
            (a, b, 15.0 + 3.0 * eps)
        };
        r.approx(format!("{pre}: dist(h, star) min"), tail_star.0, tail_star.2, EXACT_TOL);
        r.approx(format!("{pre}: dist(h, star) max"), tail_star.1, tail_star.2, EXACT_TOL);

        if p.garbage_size() > 0 {
            let g = ids_to_idx(inst, &e.garbage)?;
            r.check(format!("{pre}: |R|"), g.len() == p.garbage_size(), format!("{}", g.len()));
            let gs: HashSet<usize> = g.iter().copied().collect();
            rules.push(Rule { label: format!("{pre}: R to star"), members: g.clone(), rho: ell, exempt: gs.clone() });
            let mut ex = gs;
            ex.extend(&star_set);
            rules.push(Rule { label: format!("{pre}: R to others"), members: g, rho: 2.0 * ell, exempt: ex });
        }
    }

    r.check(
        "garbage triples have hosts",
        cert.garbage_hosts.len() == cert.garbage_triples.len(),
        format!("{} hosts, {} triples", cert.garbage_hosts.len(), cert.garbage_triples.len()),
    );
    for (t, (triple, host)) in cert.garbage_triples.iter().zip(&cert.garbage_hosts).enumerate() {
        let g = ids_to_idx(inst, triple)?;
        r.check(format!("G{t} size 3"), g.len() == 3, format!("{}", g.len()));
        let mut ex: HashSet<usize> = g.iter().copied().collect();
        if let Some(s) = cert.sets.get(host) {
            ex.extend(ids_to_idx(inst, &s.cluster)?);
        }
        rules.push(Rule { label: format!("G{t}"), members: g, rho: 2.0 * ell, exempt: ex });
    }

    let grid = SpatialGrid::new(inst.agents().iter().map(|a| a.pos).collect(), 16.0);
    for rule in &rules {
        let mut worst: Option<(f64, usize, usize)> = None;
        for &x in &rule.members {
            grid.for_each_within(inst.pos(x), rule.rho, |y| {
                if y != x && !rule.exempt.contains(&y) {
                    let v = inst.dist(x, y);
                    if worst.map_or(true, |w| v < w.0) {
                        worst = Some((v, x, y));
                    }
                }
            });
        }
        let detail = match worst {
            None => format!("nothing within {:.6}", rule.rho),
            Some((v, x, y)) => format!("{} at {v:.9} from {}, need > {:.6}", inst.id(y), inst.id(x), rule.rho),
        };
        r.check(format!("clearance {}", rule.label), worst.is_none(), detail);
    }
    let _ = star_members;
    Ok(())
}

/// The distances and bands quoted for the construction, checked literally
/// on a built instance. Some of them cannot hold together with the rest of
/// the construction; those report FAIL.
pub fn literal_audit(inst: &Instance, cert: &ReductionCertificate) -> Report {
    let mut r = Report::new();
    let p = &cert.params;
    let d = p.d;
    let eps = p.epsilon;
    let look = |id: &str| inst.lookup(id).ok();
    let mut elem = (f64::INFINITY, 0.0f64);
    for el in cert.elements.values() {
        let l: Vec<usize> = el.leaves.values().filter_map(|id| look(id)).collect();
        for a in 0..l.len() {
            for b in a + 1..l.len() {
                let v = inst.dist(l[a], l[b]);
                elem = (elem.0.min(v), elem.1.max(v));
            }
        }
    }
    r.approx("element leaves 8 apart (min)", elem.0, 8.0, EXACT_TOL);
    r.approx("element leaves 8 apart (max)", elem.1, 8.0, EXACT_TOL);
    let mut set = (f64::INFINITY, 0.0f64);
    let mut wmax = 0.0f64;
    for s in cert.sets.values() {
        let l: Vec<usize> = s.leaves.values().filter_map(|id| look(id)).collect();
        for a in 0..l.len() {
            for b in a + 1..l.len() {
                let v = inst.dist(l[a], l[b]);
                set = (set.0.min(v), set.1.max(v));
            }
        }
        for id in &s.cluster {
            if let Some(x) = look(id) {
                for &y in &l {
                    wmax = wmax.max(inst.dist(x, y));
                }
            }
        }
    }
    let want = if d == 3 { SET_SIDE_3 } else { SET_SIDE_LITERAL };
    r.approx(format!("set leaves {want} apart (min)"), set.0, want, EXACT_TOL);
    r.approx(format!("set leaves {want} apart (max)"), set.1, want, EXACT_TOL);
    if d >= 4 {
        r.check("W_j within 10 of its leaves", wmax <= 10.0, format!("{wmax:.9}"));
    }
    let mut eps_ok = true;
    let mut detail = String::from("all sequences valid");
    for e in &cert.edges {
        if let Err(m) = check_epsilons(&e.epsilons, eps) {
            eps_ok = false;
            detail = format!("{}: {m}", e.prefix());
        }
    }
    r.check("eps_{2n-1} in [2(2n-1)/(2n+1), 2(2n-1)/2n], eps_{2n} = 2 - eps", eps_ok, detail);
    let mut tail_band = (f64::INFINITY, 0.0f64);
    let mut partner = 0.0f64;
    let mut h_star = (f64::INFINITY, 0.0f64);
    for e in &cert.edges {
        let tail: Vec<usize> = e.tail.iter().filter_map(|id| look(id)).collect();
        if let Some(last) = e.groups.last() {
            for id in last {
                if let Some(x) = look(id) {
                    for &t in &tail {
                        let v = inst.dist(x, t);
                        tail_band = (tail_band.0.min(v), tail_band.1.max(v));
                    }
                }
            }
        }
        let Some(h) = look(&e.h) else { continue };
        for id in &e.star {
            let l = id.rsplit('/').next().unwrap();
            let near = if d == 3 { l == "10" || l == "11" } else { l.starts_with("Y[") };
            if near {
                if let Some(x) = look(id) {
                    let v = inst.dist(x, h);
                    h_star = (h_star.0.min(v), h_star.1.max(v));
                }
            }
        }
        if !e.garbage.is_empty() {
            let partners: Vec<usize> = garbage_partners(d).iter().filter_map(|l| look(&e.star_id(l))).collect();
            for id in &e.garbage {
                if let Some(g) = look(id) {
                    for &q in &partners {
                        partner = partner.max(inst.dist(g, q));
                    }
                }
            }
        }
    }
    r.range("tail to last group in [10 + eps, 10 + 2 eps) (min)", tail_band.0, 10.0 + eps, 10.0 + 2.0 * eps, false);
    r.range("tail to last group in [10 + eps, 10 + 2 eps) (max)", tail_band.1, 10.0 + eps, 10.0 + 2.0 * eps, false);
    let hs = if d == 3 { 10.0 + 3.0 * eps } else { 15.0 + 3.0 * eps };
    r.approx(format!("h to its star at {hs} (min)"), h_star.0, hs, EXACT_TOL);
    r.approx(format!("h to its star at {hs} (max)"), h_star.1, hs, EXACT_TOL);
    let mut pairs: Vec<(String, f64, Vec<(usize, usize)>)> = Vec::new();
    let mut push = |name: String, want: f64, xs: Vec<usize>, ys: Vec<usize>| {
        let v: Vec<(usize, usize)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
        match pairs.iter_mut().find(|(n, _, _)| *n == name) {
            Some(entry) => entry.2.extend(v),
            None => pairs.push((name, want, v)),
        }
    };
    for e in &cert.edges {
        let ids = |v: &[String]| v.iter().filter_map(|id| look(id)).collect::<Vec<_>>();
        let star = |l: &str| look(&e.star_id(l)).into_iter().collect::<Vec<_>>();
        let tail = ids(&e.tail);
        let h: Vec<usize> = look(&e.h).into_iter().collect();
        let w: Vec<usize> = look(&e.gammas[e.n_hat]).into_iter().collect();
        push(format!("tail to h = {}", p.h_offset()), p.h_offset(), tail.clone(), h.clone());
        push(format!("tail to set leaf = {}", p.tail_radius()), p.tail_radius(), tail.clone(), w);
        if d == 3 {
            push(format!("5 to 10, 11 = {}", 10.0 + 4.0 * eps), 10.0 + 4.0 * eps, star("5"), [star("10"), star("11")].concat());
        } else {
            let k = (d - 1) / 2;
            let y: Vec<usize> = e.star.iter().filter(|id| id.contains("/star/Y[")).filter_map(|id| look(id)).collect();
            let yp = if d % 2 == 0 { [star("0"), star("1")].concat() } else { star("0") };
            push(format!("Y to its partners = {}", 15.0 + 4.0 * eps), 15.0 + 4.0 * eps, y, yp);
            let x = |i: usize| (0..k).filter_map(|m| look(&e.star_id(&format!("X{i}[{m}]")))).collect::<Vec<_>>();
            if d % 2 == 1 {
                for i in 0..5 {
                    push("star b = 22.6".into(), 22.6, star(&i.to_string()), x(i));
                    push("star c = 22.7".into(), 22.7, star(&i.to_string()), x((i + 1) % 5));
                }
            } else {
                for i in 0..5 {
                    push("star b = 22.6".into(), 22.6, star(&(2 * i + 1).to_string()), x((i + 1) % 5));
                    push("star c = 22.7".into(), 22.7, star(&(2 * i).to_string()), x(i));
                }
            }
        }
    }
    for (name, want, v) in pairs {
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(x, y)| {
            let t = inst.dist(x, y);
            (lo.min(t), hi.max(t))
        });
        r.approx(format!("{name} (min)"), lo, want, EXACT_TOL);
        r.approx(format!("{name} (max)"), hi, want, EXACT_TOL);
    }
    if d >= 4 {
        let ell = cert.ell;
        let mut to_star = f64::INFINITY;
        let mut star_far = 0.0f64;
        let mut to_other = f64::INFINITY;
        for e in &cert.edges {
            let star: HashSet<usize> = e.star.iter().filter_map(|id| look(id)).collect();
            let own: HashSet<usize> = e.garbage.iter().filter_map(|id| look(id)).collect();
            for &g in &own {
                for k in 0..inst.len() {
                    if own.contains(&k) {
                        continue;
                    }
                    let t = inst.dist(g, k);
                    if star.contains(&k) {
                        to_star = to_star.min(t);
                        star_far = star_far.max(t);
                    } else {
                        to_other = to_other.min(t);
                    }
                }
            }
        }
        let two = 2.0 * ell;
        r.check("R more than ell from its star", to_star > ell, format!("{to_star:.6} vs {ell:.6}"));
        r.check("R within 2 ell of its partners", partner < two, format!("{partner:.6} vs {two:.6}"));
        r.check("R within 2 ell of every agent of its star", star_far < two, format!("{star_far:.6} vs {two:.6}"));
        r.check("R more than 2 ell from other agents", to_other > two, format!("{to_other:.6} vs {two:.6}"));
    }
    r
}

fn coverage(cert: &ReductionCertificate, cover: &Cover) -> Result<BTreeMap<usize, usize>, ReductionError> {
    if !cert.x3c.is_cover(cover) {
        return Err(ReductionError::Certificate(format!("{:?} is not an exact cover", cover.0)));
    }
    let mut by = BTreeMap::new();
    for &j in &cover.0 {
        for &i in &cert.x3c.sets[j] {
            by.insert(i, j + 1);
        }
    }
    Ok(by)
}

/// Local star coalitions of the forward matching.
pub fn star_coalitions(d: usize) -> Vec<Vec<String>> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    if d == 3 {
        return vec![s(&["5", "10", "11"]), s(&["1", "6", "8"]), s(&["2", "3", "7"]), s(&["0", "4", "9"])];
    }
    let k = (d - 1) / 2;
    let x = |i: usize| (0..k).map(move |m| format!("X{i}[{m}]"));
    let pts = |v: &[usize]| v.iter().map(|p| p.to_string()).collect::<Vec<_>>();
    let y_len = if d % 2 == 0 { 2 * k + 1 } else { 2 * k };
    let mut out = vec![(0..y_len).map(|m| format!("Y[{m}]")).chain(pts(&[0])).collect::<Vec<_>>()];
    if d % 2 == 1 {
        out.push(x(2).chain(x(3)).chain(pts(&[2])).collect());
        out.push(x(4).chain(x(0)).chain(pts(&[4])).collect());
        out.push(x(1).chain(pts(&[1, 3])).collect());
    } else {
        out.push(x(1).chain(x(2)).chain(pts(&[2, 3])).collect());
        out.push(x(3).chain(x(4)).chain(pts(&[6, 7])).collect());
        if d <= 6 {
            let order = [1usize, 8, 9, 4];
            let take = d - k;
            out.push(x(0).chain(pts(&order[..take])).collect());
            let mut rest: Vec<usize> = order[take..].to_vec();
            rest.push(5);
            out.push(pts(&rest));
        } else {
            out.push(x(0).chain(pts(&[1, 4, 5, 8, 9])).collect());
        }
    }
    out
}

/// The matching associated with an exact cover.
pub fn build_solution(inst: &Instance, cert: &ReductionCertificate, cover: &Cover) -> Result<Matching, ReductionError> {
    let d = cert.params.d;
    let by = coverage(cert, cover)?;
    let chosen: BTreeSet<usize> = cover.0.iter().map(|j| j + 1).collect();
    let mut groups: Vec<Vec<String>> = Vec::new();
    for (i, el) in &cert.elements {
        let mut g = el.centre.clone();
        g.extend(el.leaves.iter().filter(|(j, _)| Some(*j) != by.get(i)).map(|(_, id)| id.clone()));
        groups.push(g);
    }
    let mut unchosen = Vec::new();
    for (j, s) in &cert.sets {
        if chosen.contains(j) {
            let mut g: Vec<String> = s.leaves.values().cloned().collect();
            g.extend(s.cluster.iter().cloned());
            groups.push(g);
        } else if !s.cluster.is_empty() {
            unchosen.push(s.cluster.clone());
        }
    }
    if unchosen.len() != cert.garbage_triples.len() {
        return Err(ReductionError::Certificate(format!(
            "{} unchosen set clusters but {} garbage triples",
            unchosen.len(),
            cert.garbage_triples.len()
        )));
    }
    let pos = |ids: &[String]| -> Result<Point, ReductionError> { Ok(inst.pos(inst.lookup(&ids[0])?)) };
    let mut pairs = Vec::new();
    for (a, w) in unchosen.iter().enumerate() {
        for (b, t) in cert.garbage_triples.iter().enumerate() {
            pairs.push((dist(pos(w)?, pos(t)?), a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let (mut used_w, mut used_t) = (HashSet::new(), HashSet::new());
    for (_, a, b) in pairs {
        if used_w.contains(&a) || used_t.contains(&b) {
            continue;
        }
        used_w.insert(a);
        used_t.insert(b);
        let mut g = unchosen[a].clone();
        g.extend(cert.garbage_triples[b].iter().cloned());
        groups.push(g);
    }
    let stars = star_coalitions(d);
    for e in &cert.edges {
        let shifted = by.get(&e.element) == Some(&e.set);
        for z in 1..=e.n_hat {
            let mut g = e.groups[z - 1].clone();
            g.push(e.gammas[if shifted { z - 1 } else { z }].clone());
            groups.push(g);
        }
        let mut t = e.tail.clone();
        t.push(e.h.clone());
        groups.push(t);
        let n_star = stars.len();
        for (k, local) in stars.iter().enumerate() {
            let mut g: Vec<String> = local.iter().map(|l| e.star_id(l)).collect();
            if d >= 4 && k == n_star - 1 {
                g.extend(e.garbage.iter().cloned());
            }
            groups.push(g);
        }
    }
    Ok(Matching::from_ids(inst, &groups)?)
}

/// Sets whose chain is shifted towards the element in `m`.
pub fn extract_cover(inst: &Instance, cert: &ReductionCertificate, m: &Matching) -> Cover {
    let mut chosen = BTreeSet::new();
    for e in &cert.edges {
        let mut g = e.groups[0].clone();
        g.push(e.gammas[0].clone());
        if m.contains_ids(inst, &g) {
            chosen.insert(e.set - 1);
        }
    }
    Cover(chosen.into_iter().collect())
}

/// Agents of the closed chain used to exercise the chain dichotomy: an
/// element leaf `gamma[0]` with its element partners `u` and `uk`, two
/// chain links ending at the set leaf `gamma[2]`, the tail `f, g, h` and a
/// d = 3 star with ids `star/0` .. `star/11`.
pub fn chain_miniature(params: &ReductionParams) -> Result<Instance, ReductionError> {
    let eps = params.epsilon;
    let nz = params.near_zero;
    let s3 = 3f64.sqrt();
    let mut placed = Placed::default();
    let g0 = Point::new(0.0, 0.0);
    let vertex = Point::new(-4.0 * s3, 0.0);
    placed.push("gamma[0]".into(), g0, "element", 0.0);
    placed.push("uk".into(), vertex.add(Point::new(0.0, 4.0)), "element", 0.0);
    placed.push("u".into(), Point::new(-4.0 * s3 + 4.0 * s3 / 3.0, 0.0), "element", 0.0);
    let (lo, hi) = span_range(2, eps, nz / 2.0);
    let w = Point::new(0.5 * (lo + hi), 0.0);
    let plan = plan_chain(&[g0, w], eps, nz / 2.0, 1.0).map_err(|source| ReductionError::Chain { element: 0, set: 0, source })?;
    if plan.n_hat != 2 {
        return Err(ReductionError::Certificate(format!("miniature chain has {} links", plan.n_hat)));
    }
    placed.push("gamma[1]".into(), plan.gammas[1], "chain", 0.0);
    placed.push("gamma[2]".into(), w, "set", 0.0);
    let mut last = Vec::new();
    for z in 1..=2 {
        let r1 = LINK_BASE + plan.epsilons[2 * z - 2];
        let pts = arc_cluster(plan.gammas[z - 1], plan.gammas[z], r1, 2, nz / 2.0);
        placed.push(format!("alpha[{z}]"), pts[0], "chain", 0.0);
        placed.push(format!("beta[{z}]"), pts[1], "chain", 0.0);
        last = pts;
    }
    let p3 = ReductionParams { d: 3, ..*params };
    let obstacles: Vec<(Point, f64)> = placed.agents.iter().map(|a| (a.pos, 0.0)).collect();
    let exempt: HashSet<usize> = ["alpha[2]", "beta[2]", "gamma[2]", "gamma[1]"].iter().map(|id| placed.index[*id]).collect();
    let tp = place_tail(&p3, w, &last, &obstacles, &exempt).map_err(|msg| ReductionError::Placement { element: 0, set: 0, msg })?;
    placed.push("f".into(), tp.tail[0], "tail", 0.0);
    placed.push("g".into(), tp.tail[1], "tail", 0.0);
    placed.push("h".into(), tp.h, "tail", 0.0);
    for a in &tp.star.agents {
        placed.push(format!("star/{}", a.id), a.pos, "star", 0.0);
    }
    Ok(Instance::new(3, placed.agents, None)?)
}

/// Link length used by the chain planner; exposed for audits.
pub fn planned_link(eps_prev: f64, eps_next: f64, near_zero: f64) -> f64 {
    link_length(eps_prev, eps_next, near_zero / 2.0)
}
