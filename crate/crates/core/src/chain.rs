//! Chains of agent groups along an edge route.
//!
//! Link `z` consists of a near-zero group (`alpha[z]`, `beta[z]`, or the
//! coalition `A[z]`) at distance `8 + eps_{2z-1}` from `gamma[z-1]` and
//! `8 + eps_{2z}` from `gamma[z]`. The group sits on an arc around
//! `gamma[z-1]`, so the first distance is exact for every member and the
//! second is exact for the outermost members.

use thiserror::Error;

use crate::model::{circle_intersections, dist, Point};

/// Base distance between a group and its neighbouring `gamma` agents.
pub const LINK_BASE: f64 = 8.0;

/// Exponent range of the interpolated epsilon profile.
const P_STEEP: f64 = 3.0;
const P_FLAT: f64 = 0.2;
/// Fraction of the allowed window used for the second-to-last epsilon.
const TOP_FRACTION: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("route of length {0} is too short for a chain")]
    TooShort(f64),
    #[error("no epsilon sequence of length {len} spans {target} (range {lo}..{hi})")]
    NoFit { len: usize, target: f64, lo: f64, hi: f64 },
    #[error("chain polyline must have 2 or 3 points, got {0}")]
    BadPolyline(usize),
    #[error("no bend position fits the route")]
    NoBend,
}

/// Largest `n` with `sum_{z=1}^{2n} (8 + 0.01 z) <= total`.
pub fn chain_length(total: f64) -> Result<usize, ChainError> {
    let mut n = 0usize;
    loop {
        let k = 2 * (n + 1);
        let sum = LINK_BASE * k as f64 + 0.01 * (k * (k + 1) / 2) as f64;
        if sum > total + 1e-9 {
            break;
        }
        n += 1;
    }
    if n == 0 {
        Err(ChainError::TooShort(total))
    } else {
        Ok(n)
    }
}

/// Closed window for `eps_{2n-1}`: `[2(2n-1)/(2n+1), 2(2n-1)/(2n)]`.
pub fn epsilon_window(n_hat: usize) -> (f64, f64) {
    let k = (2 * n_hat - 1) as f64;
    (2.0 * k / (k + 2.0), 2.0 * k / (k + 1.0))
}

/// The epsilon profile at interpolation parameter `lambda` in `[0, 1]`.
/// Index `k - 1` holds `eps_k`; the last entry is `2 - eps`.
pub fn epsilons_at(n_hat: usize, lambda: f64, eps: f64) -> Vec<f64> {
    let (lo, hi) = epsilon_window(n_hat);
    let top = lo + lambda * TOP_FRACTION * (hi - lo);
    let p = P_STEEP + (P_FLAT - P_STEEP) * lambda;
    let k = (2 * n_hat - 1) as f64;
    let mut out: Vec<f64> = (1..2 * n_hat).map(|i| top * (i as f64 / k).powf(p)).collect();
    out.push(2.0 - eps);
    out
}

/// Distance from `gamma[z-1]` to `gamma[z]` when the group's outermost
/// members are `spread` off the axis.
pub fn link_length(eps_prev: f64, eps_next: f64, spread: f64) -> f64 {
    let r1 = LINK_BASE + eps_prev;
    let r2 = LINK_BASE + eps_next;
    (r1 * r1 - spread * spread).sqrt() + (r2 * r2 - spread * spread).sqrt()
}

pub fn links(epsilons: &[f64], spread: f64) -> Vec<f64> {
    epsilons.chunks(2).map(|c| link_length(c[0], c[1], spread)).collect()
}

pub fn chain_span(n_hat: usize, lambda: f64, eps: f64, spread: f64) -> f64 {
    links(&epsilons_at(n_hat, lambda, eps), spread).iter().sum()
}

/// Span range reachable with `n_hat` links.
pub fn span_range(n_hat: usize, eps: f64, spread: f64) -> (f64, f64) {
    (chain_span(n_hat, 0.0, eps, spread), chain_span(n_hat, 1.0, eps, spread))
}

/// Epsilon sequence whose links sum to `target`, by bisection on the
/// interpolation parameter.
pub fn build_epsilons(n_hat: usize, target: f64, eps: f64, spread: f64) -> Result<Vec<f64>, ChainError> {
    let (lo, hi) = span_range(n_hat, eps, spread);
    if n_hat == 0 || target < lo - 1e-12 || target > hi + 1e-12 {
        return Err(ChainError::NoFit { len: n_hat, target, lo, hi });
    }
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if chain_span(n_hat, m, eps, spread) < target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(epsilons_at(n_hat, 0.5 * (a + b), eps))
}

/// Checks the sequence constraints; returns the first violation.
pub fn check_epsilons(epsilons: &[f64], eps: f64) -> Result<(), String> {
    let n2 = epsilons.len();
    if n2 < 2 || n2 % 2 == 1 {
        return Err(format!("length {n2} is not a positive even number"));
    }
    if epsilons[0] <= 0.0 {
        return Err("eps_1 is not positive".into());
    }
    if let Some(k) = (1..n2).find(|&k| epsilons[k] <= epsilons[k - 1]) {
        return Err(format!("eps_{} <= eps_{}", k + 1, k));
    }
    let (lo, hi) = epsilon_window(n2 / 2);
    let e = epsilons[n2 - 2];
    if e < lo || e > hi {
        return Err(format!("eps_{} = {e} outside [{lo}, {hi}]", n2 - 1));
    }
    if (epsilons[n2 - 1] - (2.0 - eps)).abs() > 1e-12 {
        return Err(format!("last epsilon {} is not 2 - eps", epsilons[n2 - 1]));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainPlan {
    pub n_hat: usize,
    pub epsilons: Vec<f64>,
    /// `gamma[0..=n_hat]`; the ends equal the polyline ends.
    pub gammas: Vec<Point>,
    /// Index of the `gamma` agent where the chain turns, if any.
    pub bend: Option<usize>,
}

fn cumulative(links: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0];
    for l in links {
        c.push(c.last().unwrap() + l);
    }
    c
}

fn place_along(p0: Point, p1: Point, p2: Point, cum: &[f64], bend: usize) -> Vec<Point> {
    let u1 = p1.sub(p0).unit();
    let u2 = p2.sub(p1).unit();
    let mut out: Vec<Point> = cum
        .iter()
        .enumerate()
        .map(|(z, &c)| if z <= bend { p0.add(u1.scale(c)) } else { p1.add(u2.scale(c - cum[bend])) })
        .collect();
    *out.last_mut().unwrap() = p2;
    out[bend] = p1;
    out
}

/// Plans a chain from `polyline[0]` (element leaf) to its last point (set
/// leaf). A three-point polyline has its corner as the preferred bend.
/// `bump_side` picks the side of a detour on a straight route that is
/// shorter than every feasible chain.
pub fn plan_chain(polyline: &[Point], eps: f64, spread: f64, bump_side: f64) -> Result<ChainPlan, ChainError> {
    let max_n = |len: f64| (len / (2.0 * LINK_BASE)).floor() as usize + 2;
    match polyline.len() {
        2 => {
            let (p0, p2) = (polyline[0], polyline[1]);
            let lp = dist(p0, p2);
            let ranges: Vec<(usize, f64, f64)> =
                (1..=max_n(lp)).map(|n| { let (a, b) = span_range(n, eps, spread); (n, a, b) }).collect();
            if let Some(&(n, _, _)) = ranges.iter().rev().find(|(_, a, b)| *a <= lp && lp <= *b) {
                let e = build_epsilons(n, lp, eps, spread)?;
                let cum = cumulative(&links(&e, spread));
                let u = p2.sub(p0).unit();
                let mut g: Vec<Point> = cum.iter().map(|&c| p0.add(u.scale(c))).collect();
                *g.last_mut().unwrap() = p2;
                return Ok(ChainPlan { n_hat: n, epsilons: e, gammas: g, bend: None });
            }
            // Shortest chain longer than the route, with a detour.
            let &(n, s, _) = ranges
                .iter()
                .filter(|(n, a, _)| *n >= 2 && *a > lp)
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .ok_or(ChainError::TooShort(lp))?;
            let e = build_epsilons(n, s, eps, spread)?;
            let cum = cumulative(&links(&e, spread));
            let bend = (1..n).min_by(|&a, &b| (cum[a] - s / 2.0).abs().total_cmp(&(cum[b] - s / 2.0).abs())).unwrap();
            let (l, r) = circle_intersections(p0, cum[bend], p2, s - cum[bend]).ok_or(ChainError::NoBend)?;
            let side = p2.sub(p0).cross(l.sub(p0));
            let p1 = if (side >= 0.0) == (bump_side >= 0.0) { l } else { r };
            Ok(ChainPlan { n_hat: n, epsilons: e, gammas: place_along(p0, p1, p2, &cum, bend), bend: Some(bend) })
        }
        3 => {
            let (p0, corner, p2) = (polyline[0], polyline[1], polyline[2]);
            let (l1, l2) = (dist(p0, corner), dist(corner, p2));
            let route = l1 + l2;
            let hyp = dist(p0, p2);
            let floor = hyp * (1.0 + 1e-6);
            let (n, lo, hi) = (2..=max_n(route))
                .rev()
                .map(|n| { let (a, b) = span_range(n, eps, spread); (n, a, b) })
                .find(|(_, a, b)| *a <= route && *b >= floor)
                .ok_or(ChainError::TooShort(route))?;
            let target = route.clamp(lo.max(floor), hi);
            let e = build_epsilons(n, target, eps, spread)?;
            let cum = cumulative(&links(&e, spread));
            let s = cum[n];
            let bend = (1..n)
                .filter(|&z| (2.0 * cum[z] - s).abs() < hyp * (1.0 - 1e-9))
                .min_by(|&a, &b| (cum[a] - l1).abs().total_cmp(&(cum[b] - l1).abs()))
                .ok_or(ChainError::NoBend)?;
            let (x, y) = circle_intersections(p0, cum[bend], p2, s - cum[bend]).ok_or(ChainError::NoBend)?;
            let p1 = if dist(x, corner) <= dist(y, corner) { x } else { y };
            Ok(ChainPlan { n_hat: n, epsilons: e, gammas: place_along(p0, p1, p2, &cum, bend), bend: Some(bend) })
        }
        k => Err(ChainError::BadPolyline(k)),
    }
}

/// `count` points on the arc of radius `radius` around `centre`, spread
/// symmetrically about the direction towards `toward`; the outermost pair
/// is `2 spread` apart.
pub fn arc_cluster(centre: Point, toward: Point, radius: f64, count: usize, spread: f64) -> Vec<Point> {
    let u = toward.sub(centre).unit();
    let base = u.y.atan2(u.x);
    let phi = (spread / radius).asin();
    (0..count)
        .map(|k| {
            let t = if count == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (count - 1) as f64 };
            centre.add(Point::polar(radius, base + t * phi))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_length_examples() {
        assert_eq!(chain_length(40.0).unwrap(), 2);
        assert_eq!(chain_length(16.03).unwrap(), 1);
        assert_eq!(chain_length(200.0).unwrap(), 12);
        assert!(chain_length(16.0).is_err());
        // Independent evaluation of the defining sum.
        let sum = |k: usize| (1..=k).map(|z| 8.0 + 0.01 * z as f64).sum::<f64>();
        assert!((sum(4) - 32.10).abs() < 1e-9 && (sum(6) - 48.21).abs() < 1e-9);
        assert!((sum(24) - 195.0).abs() < 1e-9);
    }

    #[test]
    fn epsilon_windows() {
        let (lo, hi) = epsilon_window(2);
        assert!((lo - 1.2).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
        let (lo, hi) = epsilon_window(12);
        assert!((lo - 1.84).abs() < 1e-12 && (hi - 46.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn build_epsilons_exact_fit() {
        let (lo, hi) = span_range(2, 5e-4, 5e-5);
        let target = 0.5 * (lo + hi);
        let e = build_epsilons(2, target, 5e-4, 5e-5).unwrap();
        check_epsilons(&e, 5e-4).unwrap();
        assert!(e[2] >= 1.2 && e[2] <= 1.5);
        assert_eq!(e[3], 2.0 - 5e-4);
        let s: f64 = links(&e, 5e-5).iter().sum();
        assert!((s - target).abs() < 1e-9);
        let (lo, hi) = span_range(12, 5e-4, 5e-5);
        let e = build_epsilons(12, 0.3 * lo + 0.7 * hi, 5e-4, 5e-5).unwrap();
        check_epsilons(&e, 5e-4).unwrap();
        assert!(e[22] >= 1.84 && e[22] <= 46.0 / 24.0);
        assert!(build_epsilons(2, hi + 100.0, 5e-4, 5e-5).is_err());
    }

    #[test]
    fn straight_and_bent_chains_hit_endpoints() {
        let eps = 5e-4;
        let p0 = Point::new(0.0, 0.0);
        let p2 = Point::new(150.0, 0.0);
        let plan = plan_chain(&[p0, p2], eps, 5e-5, 1.0).unwrap();
        assert_eq!(plan.bend, None);
        let l = links(&plan.epsilons, 5e-5);
        for z in 1..=plan.n_hat {
            assert!((dist(plan.gammas[z - 1], plan.gammas[z]) - l[z - 1]).abs() < 1e-9);
        }
        let corner = Point::new(150.0, 0.0);
        let p3 = Point::new(150.0, 120.0);
        let plan = plan_chain(&[p0, corner, p3], eps, 5e-5, 1.0).unwrap();
        let l = links(&plan.epsilons, 5e-5);
        for z in 1..=plan.n_hat {
            assert!((dist(plan.gammas[z - 1], plan.gammas[z]) - l[z - 1]).abs() < 1e-9, "link {z}");
        }
        assert!(dist(plan.gammas[plan.bend.unwrap()], corner) < 20.0);
    }

    #[test]
    fn short_straight_route_detours() {
        // Between the one- and two-link windows.
        let (_, hi1) = span_range(1, 5e-4, 5e-5);
        let (lo2, _) = span_range(2, 5e-4, 5e-5);
        assert!(hi1 < lo2);
        let lp = 0.5 * (hi1 + lo2);
        let plan = plan_chain(&[Point::new(0.0, 0.0), Point::new(lp, 0.0)], 5e-4, 5e-5, 1.0).unwrap();
        assert_eq!(plan.n_hat, 2);
        assert!(plan.gammas[1].y > 0.0);
    }

    #[test]
    fn arc_cluster_is_exact_to_centre() {
        let c = Point::new(1.0, 2.0);
        let pts = arc_cluster(c, Point::new(10.0, 2.0), 8.3, 4, 5e-5);
        for p in &pts {
            assert!((dist(*p, c) - 8.3).abs() < 1e-12);
        }
        assert!((dist(pts[0], pts[3]) - 1e-4).abs() < 1e-9);
    }
}
