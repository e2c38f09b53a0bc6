use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const MAX_LLOYD_ITERS: usize = 100;
/// k-means++ restarts; the lowest-inertia run wins.
pub const DEFAULT_RESTARTS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn seed_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.below(n as u64) as usize];
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| d2[i] > 0.0).expect("positive mass"))
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.below(free.len() as u64) as usize]
        };
        chosen.push(pick);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &points[pick]));
        }
    }
    chosen.iter().map(|&i| points[i].clone()).collect()
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // An empty cluster takes over the point farthest from its centroid.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .filter(|&i| counts[assignment[i]] > 1)
                    .max_by(|&i, &j| {
                        dist2(&points[i], &centroids[assignment[i]])
                            .total_cmp(&dist2(&points[j], &centroids[assignment[j]]))
                            .then(j.cmp(&i))
                    });
                if let Some(i) = far {
                    counts[assignment[i]] -= 1;
                    counts[c] = 1;
                    assignment[i] = c;
                    centroids[c] = points[i].clone();
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignment || iterations >= MAX_LLOYD_ITERS {
            assignment = next;
            break;
        }
        assignment = next;
    }
    let inertia = points.iter().zip(&assignment).map(|(p, &a)| dist2(p, &centroids[a])).sum();
    KMeansResult { centroids, assignment, inertia, iterations }
}

/// Single-point transfers (Hartigan): move a point to another cluster while
/// that strictly lowers the inertia. Lloyd fixpoints that are not optimal
/// under such moves get unstuck; the result is still a Lloyd fixpoint.
fn transfer_refine(points: &[Vec<f64>], mut run: KMeansResult) -> KMeansResult {
    let k = run.centroids.len();
    let mut counts = vec![0usize; k];
    for &a in &run.assignment {
        counts[a] += 1;
    }
    for _ in 0..MAX_LLOYD_ITERS {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let a = run.assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let leave = na / (na - 1.0) * dist2(p, &run.centroids[a]);
            let mut best = (a, 0.0);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let gain = nb / (nb + 1.0) * dist2(p, &run.centroids[b]) - leave;
                if gain < best.1 - 1e-12 * leave.max(1e-300) {
                    best = (b, gain);
                }
            }
            let b = best.0;
            if b == a {
                continue;
            }
            let nb = counts[b] as f64;
            for (d, x) in p.iter().enumerate() {
                run.centroids[a][d] = (na * run.centroids[a][d] - x) / (na - 1.0);
                run.centroids[b][d] = (nb * run.centroids[b][d] + x) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            run.assignment[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
    }
    // Recompute centroids exactly rather than trusting the running updates.
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    for (p, &a) in points.iter().zip(&run.assignment) {
        sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    for c in 0..k {
        run.centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
    }
    run.inertia = points.iter().zip(&run.assignment).map(|(p, &a)| dist2(p, &run.centroids[a])).sum();
    run
}

/// k-means++ seeding followed by Lloyd iterations to an assignment fixpoint
/// (at most 100 iterations) and single-point transfer refinement, repeated
/// `restarts` times; the run with the lowest inertia is returned.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(Error::Selection("k-means on an empty point set".into()));
    }
    if k == 0 || k > points.len() {
        return Err(Error::Selection(format!("cannot form {k} clusters from {} points", points.len())));
    }
    let mut rng = SplitMix64::derive(seed, 0xC1);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = transfer_refine(points, lloyd(points, seed_plus_plus(points, k, &mut rng)));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Diverse representative query: one sample per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySelection {
    pub centroids: Vec<Vec<f64>>,
    /// `selected_ids[c]` represents cluster `c`.
    pub selected_ids: Vec<usize>,
    /// Member ids of every cluster, parallel to `centroids`.
    pub clusters: Vec<Vec<usize>>,
}

/// Cluster the candidate embeddings into `budget` groups and return, for each
/// group, the member closest to its centroid (ties go to the smaller id).
/// When the budget covers every candidate, all candidates are returned.
pub fn drqs_select(candidates: &[(usize, Vec<f64>)], budget: usize, seed: u64) -> Result<QuerySelection> {
    if candidates.is_empty() {
        return Err(Error::Selection("no candidates to select from".into()));
    }
    if budget == 0 {
        return Err(Error::Selection("query budget must be at least 1".into()));
    }
    if candidates.len() <= budget {
        return Ok(QuerySelection {
            centroids: candidates.iter().map(|(_, e)| e.clone()).collect(),
            selected_ids: candidates.iter().map(|(id, _)| *id).collect(),
            clusters: candidates.iter().map(|(id, _)| vec![*id]).collect(),
        });
    }
    let points: Vec<Vec<f64>> = candidates.iter().map(|(_, e)| e.clone()).collect();
    let km = kmeans(&points, budget, seed, DEFAULT_RESTARTS)?;
    let mut clusters = vec![Vec::new(); budget];
    for ((id, _), &a) in candidates.iter().zip(&km.assignment) {
        clusters[a].push(*id);
    }
    let mut taken = std::collections::BTreeSet::new();
    let mut selected = Vec::with_capacity(budget);
    for (c, centroid) in km.centroids.iter().enumerate() {
        let pool: Vec<&(usize, Vec<f64>)> = if clusters[c].is_empty() {
            candidates.iter().filter(|(id, _)| !taken.contains(id)).collect()
        } else {
            candidates.iter().zip(&km.assignment).filter(|(_, &a)| a == c).map(|(x, _)| x).collect()
        };
        let rep = pool
            .iter()
            .map(|(id, e)| (dist2(e, centroid), *id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
            .expect("non-empty pool");
        taken.insert(rep);
        selected.push(rep);
    }
    Ok(QuerySelection { centroids: km.centroids, selected_ids: selected, clusters })
}
