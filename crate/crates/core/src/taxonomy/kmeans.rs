//! Lloyd's algorithm with k-means++ seeding, multi-restart selection, and
//! mean-silhouette scoring for subcluster counts.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone)]
pub struct KmeansRun {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia measured after each assignment step; non-increasing.
    pub inertia_trace: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Centroids as per-cluster means plus total within-cluster sum of squares,
/// accumulated cluster-by-cluster in ascending point order.
pub fn centroids_and_inertia(points: &[Vec<f64>], assignment: &[usize], k: usize) -> (Vec<Vec<f64>>, f64) {
    let dim = points[0].len();
    let mut centroids = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (acc, v) in centroids[c].iter_mut().zip(p) {
            *acc += v;
        }
    }
    for (centroid, &count) in centroids.iter_mut().zip(&counts) {
        if count > 0 {
            for v in centroid.iter_mut() {
                *v /= count as f64;
            }
        }
    }
    let mut inertia = 0.0;
    for c in 0..k {
        for (p, &a) in points.iter().zip(assignment) {
            if a == c {
                inertia += squared_distance(p, &centroids[c]);
            }
        }
    }
    (centroids, inertia)
}

/// k-means++ seeding. When all remaining distances are zero (duplicate
/// points), falls back to the first point so seeding stays deterministic.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())].clone());
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut x = rng.gen::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if x < d {
                    pick = i;
                    break;
                }
                x -= d;
            }
            pick
        } else {
            0
        };
        centroids.push(points[next].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            let nd = squared_distance(p, centroids.last().unwrap());
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// One seeded Lloyd run. Ties in the assignment step break to the lowest
/// centroid index; empty clusters keep their previous centroid.
pub fn lloyd(points: &[Vec<f64>], k: usize, seed: u64) -> KmeansRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignment = vec![0usize; points.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut step_inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = squared_distance(p, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = squared_distance(p, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            step_inertia += best_d;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        trace.push(step_inertia);
        if !changed && trace.len() > 1 {
            break;
        }
        let (new_centroids, _) = centroids_and_inertia(points, &assignment, k);
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for (c, count) in counts.iter().enumerate() {
            if *count > 0 {
                centroids[c] = new_centroids[c].clone();
            }
        }
    }
    let (centroids, inertia) = centroids_and_inertia(points, &assignment, k);
    KmeansRun {
        assignment,
        centroids,
        inertia,
        inertia_trace: trace,
    }
}

/// Best of `restarts` seeded runs by final inertia; ties keep the earliest
/// restart.
pub fn kmeans_best(points: &[Vec<f64>], k: usize, restarts: u32, base_seed: u64) -> KmeansRun {
    let mut best: Option<KmeansRun> = None;
    for r in 0..restarts {
        let run = lloyd(points, k, base_seed.wrapping_add(r as u64));
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

/// Mean silhouette over all points. Singleton-cluster points and degenerate
/// zero-distance cases score 0; a single effective cluster scores 0.
pub fn mean_silhouette(points: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let n = points.len();
    let mut counts = vec![0usize; k];
    for &a in assignment {
        counts[a] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let own = assignment[i];
        if counts[own] <= 1 {
            continue; // silhouette of a singleton is 0
        }
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[assignment[j]] += squared_distance(&points[i], &points[j]).sqrt();
            }
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_balls() -> (Vec<Vec<f64>>, Vec<usize>) {
        // Two well-separated clouds of five points each.
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for i in 0..5 {
            points.push(vec![0.0 + 0.01 * i as f64, 0.02 * i as f64]);
            labels.push(0);
        }
        for i in 0..5 {
            points.push(vec![10.0 + 0.01 * i as f64, 10.0 - 0.02 * i as f64]);
            labels.push(1);
        }
        (points, labels)
    }

    /// Independent exhaustive minimum over all k-labelings.
    fn brute_force_optimum(points: &[Vec<f64>], k: usize) -> f64 {
        let n = points.len();
        let mut best = f64::INFINITY;
        let total = (k as u64).pow(n as u32);
        for code in 0..total {
            let mut assignment = Vec::with_capacity(n);
            let mut c = code;
            for _ in 0..n {
                assignment.push((c % k as u64) as usize);
                c /= k as u64;
            }
            let mut used = vec![false; k];
            for &a in &assignment {
                used[a] = true;
            }
            if !used.iter().all(|&u| u) {
                continue;
            }
            let dim = points[0].len();
            let mut means = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &a) in points.iter().zip(&assignment) {
                counts[a] += 1;
                for (m, v) in means[a].iter_mut().zip(p) {
                    *m += v;
                }
            }
            for (m, &cnt) in means.iter_mut().zip(&counts) {
                for v in m.iter_mut() {
                    *v /= cnt as f64;
                }
            }
            let mut sse = 0.0;
            for cluster in 0..k {
                for (p, &a) in points.iter().zip(&assignment) {
                    if a == cluster {
                        sse += squared_distance(p, &means[cluster]);
                    }
                }
            }
            if sse < best {
                best = sse;
            }
        }
        best
    }

    #[test]
    fn planted_two_balls_hits_brute_force_optimum() {
        let (points, labels) = two_balls();
        let run = kmeans_best(&points, 2, 100, 7);
        let optimum = brute_force_optimum(&points, 2);
        assert_eq!(run.inertia, optimum);
        // partition matches planted labels up to relabeling
        let flip = run.assignment[0] != labels[0];
        for (got, want) in run.assignment.iter().zip(&labels) {
            let got = if flip { 1 - got } else { *got };
            assert_eq!(got, *want);
        }
    }

    #[test]
    fn identical_points_give_zero_inertia_and_silhouette() {
        let points = vec![vec![1.0, 2.0]; 6];
        let run = kmeans_best(&points, 2, 10, 3);
        assert_eq!(run.inertia, 0.0);
        assert_eq!(mean_silhouette(&points, &run.assignment, 2), 0.0);
    }

    #[test]
    fn inertia_trace_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for instance in 0..100u64 {
            let points: Vec<Vec<f64>> = (0..12)
                .map(|_| (0..3).map(|_| rng.gen::<f64>() * 10.0).collect())
                .collect();
            let run = lloyd(&points, 3, instance);
            for w in run.inertia_trace.windows(2) {
                assert!(w[1] <= w[0], "trace increased: {:?}", run.inertia_trace);
            }
        }
    }

    #[test]
    fn final_assignment_maps_points_to_nearest_centroid() {
        let (points, _) = two_balls();
        let run = kmeans_best(&points, 2, 20, 11);
        for (p, &a) in points.iter().zip(&run.assignment) {
            let own = squared_distance(p, &run.centroids[a]);
            for c in &run.centroids {
                assert!(own <= squared_distance(p, c) + 1e-12);
            }
        }
    }

    #[test]
    fn silhouette_prefers_true_k_on_separated_data() {
        let (points, _) = two_balls();
        let s1 = 0.0; // k = 1 by definition
        let run2 = kmeans_best(&points, 2, 50, 5);
        let s2 = mean_silhouette(&points, &run2.assignment, 2);
        let run3 = kmeans_best(&points, 3, 50, 5);
        let s3 = mean_silhouette(&points, &run3.assignment, 3);
        assert!(s2 > s1);
        assert!(s2 > s3);
    }
}
