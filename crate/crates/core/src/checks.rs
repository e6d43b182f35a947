//! Drivers for the exhaustive and sampled gadget checks, and seeded
//! random instances.
//!
//! Every random draw comes from a ChaCha stream selected by `(seed, index)`,
//! so results do not depend on thread count or evaluation order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::gadgets::{
    build_star3, build_star_d, place_garbage, validate_star3, validate_star_d, GadgetError, Pose, StarInstance, Star3Params,
    StarDParams,
};
use crate::model::{dist, Agent, Coalition, Instance, Matching, Point};
use crate::reduction::{chain_miniature, garbage_partners, ReductionError, ReductionParams};
use crate::solvers::{enumerate_stable, enumerate_stable_reference};
use crate::stability::{find_blocking, SearchMode};

/// Generator for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` agents with coordinates uniform in `[0, side)^2`.
pub fn random_instance(n: usize, d: usize, side: f64, seed: u64, index: u64) -> Instance {
    let mut rng = stream(seed, index);
    let agents = (0..n)
        .map(|k| Agent::new(k.to_string(), Point::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side))))
        .collect();
    Instance::new(d, agents, None).expect("n divisible by d")
}

/// A uniformly random partition of the agents into coalitions of size d.
pub fn random_matching<R: Rng>(inst: &Instance, rng: &mut R) -> Matching {
    let mut idx: Vec<usize> = (0..inst.len()).collect();
    idx.shuffle(rng);
    let groups = idx.chunks(inst.d()).map(|c| Coalition::new(inst, c.to_vec()).expect("valid coalition")).collect();
    Matching::new(inst, groups).expect("partition")
}

#[derive(Debug, Clone, Serialize)]
pub struct Star3Check {
    pub partitions: u64,
    pub stable: Vec<Vec<Vec<String>>>,
    /// Stable matchings missing {5, 10, 11}.
    pub violations: Vec<Vec<Vec<String>>>,
}

impl Star3Check {
    pub fn passed(&self) -> bool {
        self.partitions == 15_400 && !self.stable.is_empty() && self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.violations.is_empty() {
            format!("{} partitions, all stable matchings contain {{5,10,11}}", self.partitions)
        } else {
            format!("{} partitions, {} stable matchings miss {{5,10,11}}", self.partitions, self.violations.len())
        }
    }
}

pub fn star3_instance() -> Instance {
    let s = build_star3(Pose::default(), Star3Params::default(), true).expect("default star3 parameters");
    Instance::new(3, s.agents, None).expect("12 agents")
}

/// Checks every partition of the standalone 12-agent star.
pub fn check_star3() -> Star3Check {
    let inst = star3_instance();
    let (partitions, stable) = enumerate_stable_reference(&inst);
    let violations = stable
        .iter()
        .filter(|m| !m.contains_ids(&inst, &["5", "10", "11"]))
        .map(|m| m.to_ids(&inst))
        .collect();
    Star3Check { partitions, stable: stable.iter().map(|m| m.to_ids(&inst)).collect(), violations }
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyCheck {
    pub n_hat: usize,
    pub stable: usize,
    pub exhaustive: bool,
    pub nodes: u64,
    pub unshifted: usize,
    pub shifted: usize,
    /// Stable matchings that mix phases or miss `{f, g, h}`.
    pub violations: Vec<Vec<Vec<String>>>,
}

impl DichotomyCheck {
    pub fn passed(&self) -> bool {
        self.exhaustive && self.stable > 0 && self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} stable matchings ({} unshifted, {} shifted, {} violations), exhaustive={}, {} nodes",
            self.stable,
            self.unshifted,
            self.shifted,
            self.violations.len(),
            self.exhaustive,
            self.nodes
        )
    }
}

/// Enumerates the closed chain miniature and classifies every stable
/// matching by chain phase.
pub fn check_chain_dichotomy(params: &ReductionParams, budget: Option<u64>) -> Result<DichotomyCheck, ReductionError> {
    let inst = chain_miniature(params)?;
    let n_hat = inst.agents().iter().filter(|a| a.id.starts_with("alpha[")).count();
    let e = enumerate_stable(&inst, None, budget);
    let triple = |z: usize, g: usize| [format!("alpha[{z}]"), format!("beta[{z}]"), format!("gamma[{g}]")];
    let (mut unshifted, mut shifted, mut violations) = (0, 0, Vec::new());
    for m in &e.matchings {
        let plain = (1..=n_hat).all(|z| m.contains_ids(&inst, &triple(z, z)));
        let shift = (1..=n_hat).all(|z| m.contains_ids(&inst, &triple(z, z - 1)));
        let h = m.contains_ids(&inst, &["f", "g", "h"]);
        match (plain, shift, h) {
            (true, _, true) => unshifted += 1,
            (false, true, true) => shifted += 1,
            _ => violations.push(m.to_ids(&inst)),
        }
    }
    Ok(DichotomyCheck {
        n_hat,
        stable: e.matchings.len(),
        exhaustive: e.exhaustive,
        nodes: e.nodes,
        unshifted,
        shifted,
        violations,
    })
}

/// The standalone d-star closed by its garbage agents, if any.
pub fn star_d_closed_instance(d: usize) -> Result<Instance, GadgetError> {
    let p = StarDParams::standalone(d);
    let s = build_star_d(Pose::default(), p)?;
    let mut agents = s.agents.clone();
    let count = ReductionParams::new(d).garbage_size();
    if count > 0 {
        let partners: Vec<usize> = garbage_partners(d).iter().map(|id| s.index(id)).collect();
        let (r, _) = place_garbage(&s, &partners, count, p.ell(), &[], 0.0, p.near_zero)?;
        agents.extend(r.iter().enumerate().map(|(k, &q)| Agent::tagged(format!("R[{k}]"), q, "garbage")));
    }
    Instance::new(d, agents, None).map_err(|e| GadgetError::Infeasible(e.to_string()))
}

/// One constrained distance pushed past its slack.
#[derive(Debug, Clone, Serialize)]
pub struct Perturbation {
    pub star: String,
    pub pair: (String, String),
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityCheck {
    /// Stars whose default build fails validation.
    pub baseline_failures: Vec<String>,
    pub perturbations: Vec<Perturbation>,
}

impl SensitivityCheck {
    pub fn missed(&self) -> Vec<&Perturbation> {
        self.perturbations.iter().filter(|p| p.failures.is_empty()).collect()
    }

    pub fn passed(&self) -> bool {
        self.baseline_failures.is_empty() && !self.perturbations.is_empty() && self.missed().is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} baseline failures, {}/{} perturbations detected",
            self.baseline_failures.len(),
            self.perturbations.len() - self.missed().len(),
            self.perturbations.len()
        )
    }
}

/// Pairs whose distance is fixed exactly or to a band in the d = 3 star.
fn star3_constrained_pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..5 {
        v.push((i, (i + 1) % 5));
        v.push((i, (i + 2) % 5));
        v.push((i, i + 5));
        v.push(((i + 1) % 5, i + 5));
    }
    v.extend([(5, 10), (5, 11), (10, 11)]);
    v
}

/// Pairs whose distance is fixed to a band in the clustered star; the
/// second agent is the one moved.
fn star_d_constrained_pairs(s: &StarInstance, p: &StarDParams) -> Vec<(usize, usize)> {
    let pt = |j: usize| s.index(&j.to_string());
    let x: Vec<Vec<usize>> = (0..5).map(|i| s.cluster(i)).collect();
    let mut v = Vec::new();
    for i in 0..5 {
        let j = (i + 1) % 5;
        for &xa in &x[i] {
            for &xb in x[j].iter().chain(&x[(i + 2) % 5]) {
                v.push((xa, xb));
            }
        }
        let points: Vec<usize> = if p.even() { vec![pt(2 * i), pt(2 * i + 1)] } else { vec![pt(i)] };
        for &q in &points {
            for &xa in x[i].iter().chain(&x[j]) {
                v.push((xa, q));
            }
        }
    }
    let partners: Vec<usize> = if p.even() { vec![pt(0), pt(1)] } else { vec![pt(0)] };
    for &q in &partners {
        for y in s.y() {
            v.push((q, y));
        }
    }
    v
}

fn perturbed(s: &StarInstance, (i, j): (usize, usize), by: f64) -> StarInstance {
    let mut t = s.clone();
    let (pi, pj) = (s.agents[i].pos, s.agents[j].pos);
    let len = dist(pi, pj);
    let dir = Point::new((pj.x - pi.x) / len, (pj.y - pi.y) / len);
    t.agents[j].pos = Point::new(pj.x + by * dir.x, pj.y + by * dir.y);
    t
}

/// Validates the default standalone stars (d = 3 and each `d` in
/// `star_ds`), then lengthens every constrained distance by `2 epsilon`
/// and records what the validator reports.
pub fn check_validator_sensitivity(star_ds: &[usize]) -> Result<SensitivityCheck, GadgetError> {
    let mut baseline_failures = Vec::new();
    let mut perturbations = Vec::new();
    let names = |r: &crate::report::Report| r.failures().iter().map(|c| c.name.clone()).collect::<Vec<_>>();

    let p3 = Star3Params::default();
    let s3 = build_star3(Pose::default(), p3, true)?;
    if !validate_star3(&s3, &[]).passed() {
        baseline_failures.push("star3".to_string());
    }
    for pair in star3_constrained_pairs() {
        let t = perturbed(&s3, pair, 2.0 * p3.epsilon);
        perturbations.push(Perturbation {
            star: "star3".into(),
            pair: (s3.agents[pair.0].id.clone(), s3.agents[pair.1].id.clone()),
            failures: names(&validate_star3(&t, &[])),
        });
    }
    for &d in star_ds {
        let p = StarDParams::standalone(d);
        let s = build_star_d(Pose::default(), p)?;
        let label = format!("star{d}");
        if !validate_star_d(&s, &[], None).passed() {
            baseline_failures.push(label.clone());
        }
        for pair in star_d_constrained_pairs(&s, &p) {
            let t = perturbed(&s, pair, 2.0 * p.epsilon);
            perturbations.push(Perturbation {
                star: label.clone(),
                pair: (s.agents[pair.0].id.clone(), s.agents[pair.1].id.clone()),
                failures: names(&validate_star_d(&t, &[], None)),
            });
        }
    }
    Ok(SensitivityCheck { baseline_failures, perturbations })
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleCheck {
    pub d: usize,
    pub seed: u64,
    pub samples: usize,
    pub blocked: usize,
    /// Up to ten sampled matchings with no blocking coalition.
    pub unblocked: Vec<Vec<Vec<String>>>,
}

impl SampleCheck {
    pub fn passed(&self) -> bool {
        self.blocked == self.samples
    }

    pub fn summary(&self) -> String {
        format!("d={} seed={}: {}/{} sampled matchings without Y+0 blocked", self.d, self.seed, self.blocked, self.samples)
    }
}

/// Samples matchings of the closed d-star in which agent 0 is not with
/// exactly `Y`, and checks each has a blocking coalition.
pub fn sample_star_d(d: usize, samples: usize, seed: u64) -> Result<SampleCheck, GadgetError> {
    let inst = star_d_closed_instance(d)?;
    let zero = inst.lookup("0").expect("agent 0");
    let mut y: Vec<usize> = (0..inst.len()).filter(|&k| inst.id(k).starts_with("Y[")).collect();
    y.push(zero);
    y.sort_unstable();
    let results: Vec<Option<Vec<Vec<String>>>> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let m = loop {
                let m = random_matching(&inst, &mut rng);
                if m.of(zero).members() != y.as_slice() {
                    break m;
                }
            };
            match find_blocking(&m, &inst, SearchMode::Pruned) {
                Some(_) => None,
                None => Some(m.to_ids(&inst)),
            }
        })
        .collect();
    let blocked = results.iter().filter(|r| r.is_none()).count();
    let unblocked = results.into_iter().flatten().take(10).collect();
    Ok(SampleCheck { d, seed, samples, blocked, unblocked })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_order() {
        let a: Vec<f64> = (0..4).map(|k| stream(7, k).gen()).collect();
        let b: Vec<f64> = (0..4).rev().map(|k| stream(7, k).gen()).collect();
        assert_eq!(a, b.into_iter().rev().collect::<Vec<_>>());
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn random_instance_is_reproducible() {
        assert_eq!(random_instance(12, 3, 100.0, 1, 5), random_instance(12, 3, 100.0, 1, 5));
        assert_ne!(random_instance(12, 3, 100.0, 1, 5), random_instance(12, 3, 100.0, 1, 6));
    }

    #[test]
    fn star_d_closed_sizes() {
        for d in 4..=7 {
            let inst = star_d_closed_instance(d).unwrap();
            assert_eq!(inst.len() % d, 0);
        }
    }

    #[test]
    fn validator_sensitivity() {
        let r = check_validator_sensitivity(&[4, 5]).unwrap();
        assert!(r.passed(), "{} {:?}", r.summary(), r.missed());
    }

    #[test]
    fn small_sample_run() {
        let r = sample_star_d(5, 50, 3).unwrap();
        assert!(r.passed(), "{}", r.summary());
        let again = sample_star_d(5, 50, 3).unwrap();
        assert_eq!(r.blocked, again.blocked);
    }
}
