//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use cabin::evidential::MlpParams;
use cabin::rng::SplitMix64;

/// Random MLP with non-zero biases.
pub fn random_params(dims: &[usize], seed: u64) -> MlpParams {
    let mut p = MlpParams::init(dims, seed).unwrap();
    let mut rng = SplitMix64::derive(seed, 99);
    for layer in &mut p.layers {
        for b in &mut layer.bias {
            *b = 0.3 * rng.normal();
        }
    }
    p
}

pub fn random_vec(rng: &mut SplitMix64, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.normal()).collect()
}

/// Largest `|a - n| / max(|a|, |n|, floor)` between an analytic gradient and
/// central differences of `f` with step `eps`.
pub fn max_relative_error(
    params: &MlpParams,
    analytic: &MlpParams,
    eps: f64,
    floor: f64,
    f: impl Fn(&MlpParams) -> f64,
) -> f64 {
    let flat: Vec<f64> = analytic.iter().copied().collect();
    let mut worst: f64 = 0.0;
    for (i, &a) in flat.iter().enumerate() {
        let mut up = params.clone();
        let mut dn = params.clone();
        *up.iter_mut().nth(i).unwrap() += eps;
        *dn.iter_mut().nth(i).unwrap() -= eps;
        let n = (f(&up) - f(&dn)) / (2.0 * eps);
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}

/// OA, AA over non-empty rows, and kappa, from the textbook definitions.
pub fn metrics_oracle(cm: &[Vec<u64>]) -> (f64, f64, f64) {
    let k = cm.len();
    let mut n = 0.0;
    for i in 0..k {
        for j in 0..k {
            n += cm[i][j] as f64;
        }
    }
    let mut agree = 0.0;
    let mut chance = 0.0;
    let mut accs = Vec::new();
    for c in 0..k {
        agree += cm[c][c] as f64 / n;
        let mut row = 0.0;
        let mut col = 0.0;
        for j in 0..k {
            row += cm[c][j] as f64;
            col += cm[j][c] as f64;
        }
        chance += (row / n) * (col / n);
        if row > 0.0 {
            accs.push(cm[c][c] as f64 / row);
        }
    }
    let aa = accs.iter().sum::<f64>() / accs.len() as f64;
    let kappa = if chance == 1.0 {
        if agree == 1.0 { 1.0 } else { 0.0 }
    } else {
        (agree - chance) / (1.0 - chance)
    };
    (agree, aa, kappa)
}

/// Literal reading of the histogram scan, with integer arithmetic.
pub fn scan_oracle(h: &[usize], delta: f64) -> Option<usize> {
    let h: Vec<i64> = h.iter().map(|&c| c as i64).collect();
    let mut n = 0;
    while n + 2 < h.len() {
        let d1 = h[n + 1] - h[n];
        let d1_next = h[n + 2] - h[n + 1];
        let d2 = d1_next - d1;
        if (d1 as f64) < delta && d2 < 0 {
            return Some(n);
        }
        n += 1;
    }
    None
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Best `m`-clustering of `points` by enumerating every assignment, and the
/// member nearest each centroid (smallest id on ties). Returns
/// `(inertia, sorted representative ids)`.
pub fn exhaustive_clustering(ids: &[usize], points: &[Vec<f64>], m: usize) -> (f64, Vec<usize>) {
    let n = points.len();
    let dim = points[0].len();
    let total = m.pow(n as u32);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for code in 0..total {
        let mut assign = vec![0; n];
        let mut c = code;
        for a in assign.iter_mut() {
            *a = c % m;
            c /= m;
        }
        if (0..m).any(|k| !assign.contains(&k)) {
            continue;
        }
        let mut inertia = 0.0;
        let mut reps = Vec::new();
        for k in 0..m {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == k).collect();
            let mut centroid = vec![0.0; dim];
            for &i in &members {
                for d in 0..dim {
                    centroid[d] += points[i][d] / members.len() as f64;
                }
            }
            let mut rep = members[0];
            for &i in &members {
                inertia += sq(&points[i], &centroid);
                let (di, dr) = (sq(&points[i], &centroid), sq(&points[rep], &centroid));
                if di < dr || (di == dr && ids[i] < ids[rep]) {
                    rep = i;
                }
            }
            reps.push(ids[rep]);
        }
        if best.as_ref().map_or(true, |b| inertia < b.0 - 1e-12) {
            reps.sort_unstable();
            best = Some((inertia, reps));
        }
    }
    best.unwrap()
}

/// The four cases of the triage rule written out by hand.
pub fn triage_oracle(c: f64, gap: f64, tau_c: f64, tau_e: f64) -> &'static str {
    let confident = !(c < tau_c);
    let separated = !(gap < tau_e);
    if confident && separated {
        "reliable"
    } else if !confident && !separated {
        "noisy"
    } else {
        "ambiguous"
    }
}
