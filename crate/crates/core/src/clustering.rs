//! k-medoids (PAM) and the two-stage grasp reduction.
//!
//! Candidates are first clustered by the position of their contact midpoint,
//! then each spatial cluster is clustered again by the direction of its
//! closing axis. The rotational medoids are the grasps that survive. Medoids
//! are always input elements, never averages.

use rayon::prelude::*;

use crate::error::ClusterError;
use crate::geometry::axial_distance;
use crate::synthesis::GraspCandidate;

/// Stages with at most this many items get a precomputed distance matrix.
pub const MATRIX_LIMIT: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Item indices of the medoids, strictly ascending.
    pub medoid_indices: Vec<usize>,
    /// For every item, the item index of its medoid.
    pub assignment: Vec<usize>,
    /// Sum of item-to-medoid distances.
    pub total_cost: f64,
    /// Cost after BUILD and after every accepted swap.
    pub cost_trace: Vec<f64>,
    /// Improving swaps applied.
    pub swaps: usize,
    /// False if the swap budget ran out before a local optimum was reached.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusteringConfig {
    pub k_translational: usize,
    pub k_rotational: usize,
    pub max_swap_iterations: usize,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            k_translational: 10,
            k_rotational: 3,
            max_swap_iterations: 200,
        }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.k_translational == 0 || self.k_rotational == 0 {
            return Err(ClusterError::InvalidK);
        }
        Ok(())
    }
}

/// Condensed symmetric distance matrix (strict upper triangle).
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn build(n: usize, dist: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let dist = &dist;
                (i + 1..n).map(move |j| dist(i, j))
            })
            .collect();
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[a * self.n - a * (a + 1) / 2 + (b - a - 1)]
    }
}

/// Nearest and second-nearest medoid bookkeeping for every item.
struct Assignment {
    /// Slot in the medoid list of the nearest medoid.
    nearest: Vec<usize>,
    near_d: Vec<f64>,
    second_d: Vec<f64>,
}

impl Assignment {
    fn compute<D: Fn(usize, usize) -> f64>(n: usize, medoids: &[usize], dist: &D) -> Self {
        let mut nearest = vec![0; n];
        let mut near_d = vec![f64::INFINITY; n];
        let mut second_d = vec![f64::INFINITY; n];
        for o in 0..n {
            for (slot, &m) in medoids.iter().enumerate() {
                let d = if o == m { 0.0 } else { dist(m, o) };
                // Medoids are kept ascending, so strict comparison resolves
                // ties to the lowest medoid index.
                if d < near_d[o] {
                    second_d[o] = near_d[o];
                    near_d[o] = d;
                    nearest[o] = slot;
                } else if d < second_d[o] {
                    second_d[o] = d;
                }
            }
        }
        Self {
            nearest,
            near_d,
            second_d,
        }
    }

    fn cost(&self) -> f64 {
        self.near_d.iter().sum()
    }
}

fn build_phase<D: Fn(usize, usize) -> f64 + Sync>(n: usize, k: usize, dist: &D) -> Vec<usize> {
    let d = |a: usize, b: usize| if a == b { 0.0 } else { dist(a, b) };
    let totals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| d(i, j)).sum())
        .collect();
    let mut first = 0;
    for i in 1..n {
        if totals[i] < totals[first] {
            first = i;
        }
    }
    let mut medoids = vec![first];
    let mut is_medoid = vec![false; n];
    is_medoid[first] = true;
    let mut near: Vec<f64> = (0..n).map(|j| d(first, j)).collect();
    while medoids.len() < k {
        let gains: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|c| {
                if is_medoid[c] {
                    return f64::NEG_INFINITY;
                }
                (0..n).map(|j| (near[j] - d(c, j)).max(0.0)).sum()
            })
            .collect();
        let mut best = usize::MAX;
        for c in 0..n {
            if !is_medoid[c] && (best == usize::MAX || gains[c] > gains[best]) {
                best = c;
            }
        }
        medoids.push(best);
        is_medoid[best] = true;
        for j in 0..n {
            near[j] = near[j].min(d(best, j));
        }
    }
    medoids.sort_unstable();
    medoids
}

/// Cost change of replacing each medoid slot by non-medoid `h`.
fn swap_deltas<D: Fn(usize, usize) -> f64>(
    n: usize,
    k: usize,
    h: usize,
    assign: &Assignment,
    dist: &D,
) -> Vec<f64> {
    let mut shared = 0.0;
    let mut extra = vec![0.0; k];
    for o in 0..n {
        let doh = if o == h { 0.0 } else { dist(o, h) };
        let dn = assign.near_d[o];
        let keep = (doh - dn).min(0.0);
        shared += keep;
        extra[assign.nearest[o]] += doh.min(assign.second_d[o]) - dn - keep;
    }
    extra.iter().map(|e| shared + e).collect()
}

#[derive(Debug, Clone, Copy)]
struct Swap {
    delta: f64,
    medoid: usize,
    slot: usize,
    h: usize,
}

/// Steepest improving swap, ties (within `tie`) to the smallest
/// `(medoid, h)`.
fn best_swap<D: Fn(usize, usize) -> f64 + Sync>(
    n: usize,
    medoids: &[usize],
    assign: &Assignment,
    dist: &D,
    tie: f64,
) -> Option<Swap> {
    let mut is_medoid = vec![false; n];
    for &m in medoids {
        is_medoid[m] = true;
    }
    let per_h: Vec<Option<Swap>> = (0..n)
        .into_par_iter()
        .map(|h| {
            if is_medoid[h] {
                return None;
            }
            let deltas = swap_deltas(n, medoids.len(), h, assign, dist);
            let mut best: Option<Swap> = None;
            for (slot, &delta) in deltas.iter().enumerate() {
                let cand = Swap {
                    delta,
                    medoid: medoids[slot],
                    slot,
                    h,
                };
                if best.is_none_or(|b| better(&cand, &b, tie)) {
                    best = Some(cand);
                }
            }
            best
        })
        .collect();
    per_h
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<Swap>, s| match acc {
            Some(b) if !better(&s, &b, tie) => Some(b),
            _ => Some(s),
        })
}

fn better(a: &Swap, b: &Swap, tie: f64) -> bool {
    if a.delta < b.delta - tie {
        return true;
    }
    if a.delta > b.delta + tie {
        return false;
    }
    (a.medoid, a.h) < (b.medoid, b.h)
}

/// Among zero-cost swaps that replace a medoid with a lower-indexed item,
/// the one producing the lexicographically smallest medoid set.
fn canonical_swap<D: Fn(usize, usize) -> f64 + Sync>(
    n: usize,
    medoids: &[usize],
    assign: &Assignment,
    dist: &D,
    tol: f64,
) -> Option<(usize, usize)> {
    let mut is_medoid = vec![false; n];
    for &m in medoids {
        is_medoid[m] = true;
    }
    let max_medoid = *medoids.last()?;
    let mut best: Option<Vec<usize>> = None;
    let mut best_swap = None;
    for h in (0..max_medoid).filter(|&h| !is_medoid[h]) {
        let deltas = swap_deltas(n, medoids.len(), h, assign, dist);
        for (slot, &delta) in deltas.iter().enumerate() {
            if medoids[slot] <= h || delta > tol {
                continue;
            }
            let mut set = medoids.to_vec();
            set[slot] = h;
            set.sort_unstable();
            if best.as_ref().is_none_or(|b| set < *b) {
                best = Some(set);
                best_swap = Some((slot, h));
            }
        }
    }
    best_swap
}

/// Partitioning Around Medoids: greedy BUILD, then steepest-descent SWAP.
///
/// `dist` must be symmetric and non-negative; `dist(i, i)` is never called.
/// When SWAP reaches a local optimum, equal-cost swaps toward lower item
/// indices are applied so that among tied solutions reachable by single
/// swaps the lexicographically smallest medoid set is returned.
pub fn pam<D>(n: usize, dist: D, k: usize, max_iter: usize) -> Result<ClusterResult, ClusterError>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    if k == 0 {
        return Err(ClusterError::InvalidK);
    }
    if k >= n {
        return Ok(ClusterResult {
            medoid_indices: (0..n).collect(),
            assignment: (0..n).collect(),
            total_cost: 0.0,
            cost_trace: vec![0.0],
            swaps: 0,
            converged: true,
        });
    }
    let mut medoids = build_phase(n, k, &dist);
    let mut assign = Assignment::compute(n, &medoids, &dist);
    let mut cost = assign.cost();
    let mut cost_trace = vec![cost];
    let mut swaps = 0;
    let tolerance = |c: f64| 1e-12 * (1.0 + c.abs());
    let mut converged = false;
    let mut canonical_budget = max_iter.max(n);
    'search: loop {
        while swaps < max_iter {
            let tol = tolerance(cost);
            match best_swap(n, &medoids, &assign, &dist, tol) {
                Some(s) if s.delta < -tol => {
                    medoids[s.slot] = s.h;
                    medoids.sort_unstable();
                    assign = Assignment::compute(n, &medoids, &dist);
                    cost = assign.cost();
                    cost_trace.push(cost);
                    swaps += 1;
                }
                _ => {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            // The last accepted swap may have reached the optimum exactly.
            let tol = tolerance(cost);
            converged = best_swap(n, &medoids, &assign, &dist, tol).is_none_or(|s| s.delta >= -tol);
            if !converged {
                break;
            }
        }
        // A tied set can still have an improving neighbour, in which case
        // SWAP resumes from there.
        while canonical_budget > 0 {
            let Some((slot, h)) = canonical_swap(n, &medoids, &assign, &dist, tolerance(cost)) else {
                break 'search;
            };
            medoids[slot] = h;
            medoids.sort_unstable();
            assign = Assignment::compute(n, &medoids, &dist);
            cost = assign.cost();
            canonical_budget -= 1;
            let tol = tolerance(cost);
            if best_swap(n, &medoids, &assign, &dist, tol).is_some_and(|s| s.delta < -tol) {
                converged = false;
                continue 'search;
            }
        }
        break;
    }
    let assignment = assign.nearest.iter().map(|&slot| medoids[slot]).collect();
    Ok(ClusterResult {
        medoid_indices: medoids,
        assignment,
        total_cost: cost,
        cost_trace,
        swaps,
        converged,
    })
}

/// [`pam`] over a precomputed matrix when `n <= MATRIX_LIMIT`, otherwise
/// with distances evaluated on demand.
pub fn pam_auto<D>(n: usize, dist: D, k: usize, max_iter: usize) -> Result<ClusterResult, ClusterError>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    if n <= MATRIX_LIMIT && k < n {
        let matrix = DistanceMatrix::build(n, dist);
        pam(n, |i, j| matrix.get(i, j), k, max_iter)
    } else {
        pam(n, dist, k, max_iter)
    }
}

/// Full output of the two-stage reduction. Indices refer to the input list.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageClustering {
    pub translational: ClusterResult,
    /// One entry per translational medoid: its members (ascending input
    /// indices) and the rotational clustering over them, in member indices.
    pub rotational: Vec<(Vec<usize>, ClusterResult)>,
    /// Input indices of the retained grasps, sorted by `(i, j)`.
    pub selected: Vec<usize>,
}

pub fn cluster_grasps_detailed(
    candidates: &[GraspCandidate],
    config: &ClusteringConfig,
) -> Result<TwoStageClustering, ClusterError> {
    if candidates.is_empty() {
        return Err(ClusterError::EmptyInput);
    }
    config.validate()?;
    let n = candidates.len();
    let translational = pam_auto(
        n,
        |a, b| candidates[a].pair.midpoint.distance(candidates[b].pair.midpoint),
        config.k_translational.min(n),
        config.max_swap_iterations,
    )?;
    let groups: Vec<Vec<usize>> = translational
        .medoid_indices
        .iter()
        .map(|&m| (0..n).filter(|&o| translational.assignment[o] == m).collect())
        .collect();
    let rotational: Vec<(Vec<usize>, ClusterResult)> = groups
        .into_par_iter()
        .map(|members| {
            let result = pam_auto(
                members.len(),
                |a, b| axial_distance(candidates[members[a]].pair.axis, candidates[members[b]].pair.axis),
                config.k_rotational.min(members.len()),
                config.max_swap_iterations,
            )?;
            Ok((members, result))
        })
        .collect::<Result<_, ClusterError>>()?;
    let mut selected: Vec<usize> = rotational
        .iter()
        .flat_map(|(members, r)| r.medoid_indices.iter().map(|&m| members[m]))
        .collect();
    selected.sort_by_key(|&s| (candidates[s].pair.i, candidates[s].pair.j, s));
    Ok(TwoStageClustering {
        translational,
        rotational,
        selected,
    })
}

/// Reduces `candidates` to at most `k_translational × k_rotational` diverse
/// grasps, sorted by `(i, j)`.
pub fn cluster_grasps(
    candidates: &[GraspCandidate],
    config: &ClusteringConfig,
) -> Result<Vec<GraspCandidate>, ClusterError> {
    let detail = cluster_grasps_detailed(candidates, config)?;
    Ok(detail.selected.iter().map(|&s| candidates[s].clone()).collect())
}
