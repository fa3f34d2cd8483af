//! Test-only oracles. Everything here works on plain `Vec<Vec<f64>>` with
//! naive loops so that it shares no code path with the library.

#![allow(dead_code)]

use nalgebra::DMatrix;
use netenergy::Network;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<f64>>;

pub fn to_vec(net: &Network) -> Mat {
    let a = net.adj();
    (0..a.nrows()).map(|j| (0..a.ncols()).map(|i| a[(j, i)]).collect()).collect()
}

pub fn identity(n: usize) -> Mat {
    (0..n).map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for r in 0..n {
        for c in 0..m {
            let mut s = 0.0;
            for x in 0..k {
                s += a[r][x] * b[x][c];
            }
            out[r][c] = s;
        }
    }
    out
}

/// `[A^0, A^1, …, A^{T-1}]`.
pub fn powers(a: &Mat, t: usize) -> Vec<Mat> {
    let mut out = vec![identity(a.len())];
    while out.len() < t {
        let next = matmul(a, out.last().unwrap());
        out.push(next);
    }
    out
}

/// Brute-force `(p, q, q_tilde)` by direct summation of squared power entries.
pub fn brute_centralities(a: &Mat, t: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut qt = vec![0.0; n];
    for pw in powers(a, t) {
        for j in 0..n {
            for i in 0..n {
                let v = pw[j][i] * pw[j][i];
                p[i] += v; // energy leaving i
                q[j] += v; // energy reaching j
                if i != j {
                    qt[j] += v;
                }
            }
        }
    }
    (p, q, qt)
}

/// Brute-force `W_K = Σ_t A^t B Bᵀ (Aᵀ)^t`.
pub fn brute_gramian(a: &Mat, drivers: &[usize], t: usize) -> Mat {
    let n = a.len();
    let mut w = vec![vec![0.0; n]; n];
    for pw in powers(a, t) {
        for &k in drivers {
            for r in 0..n {
                for c in 0..n {
                    w[r][c] += pw[r][k] * pw[c][k];
                }
            }
        }
    }
    w
}

/// Sum of edge-weight products over all walks of length `t` from `i` to `j`.
pub fn walk_weight(a: &Mat, from: usize, to: usize, t: usize) -> f64 {
    if t == 0 {
        return if from == to { 1.0 } else { 0.0 };
    }
    let n = a.len();
    (0..n)
        .filter(|&k| a[k][from] != 0.0)
        .map(|k| a[k][from] * walk_weight(a, k, to, t - 1))
        .sum()
}

/// Least-norm input energy for `C u = x` via the SVD pseudo-inverse of `C`.
pub fn least_norm_energy(c: &DMatrix<f64>, x: &[f64]) -> f64 {
    let svd = c.clone().svd(true, true);
    let pinv = svd.pseudo_inverse(1e-13).unwrap();
    let u = pinv * nalgebra::DVector::from_column_slice(x);
    u.norm_squared()
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for k in start..n {
            cur.push(k);
            rec(k + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::new(), &mut out);
    out
}

/// Number of strongly connected components by mutual reachability (Floyd–Warshall closure).
pub fn scc_count(net: &Network) -> usize {
    let n = net.n();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if net.has_edge(i, j) {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut assigned = vec![false; n];
    let mut count = 0;
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        count += 1;
        for j in 0..n {
            if reach[i][j] && reach[j][i] {
                assigned[j] = true;
            }
        }
    }
    count
}

/// Random small network: either a DAG (weights N(0,1)/2, left unscaled) or a
/// cyclic graph with optional self-loops rescaled to spectral radius 0.9.
pub fn random_small(seed: u64, max_n: usize) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let density: f64 = rng.random_range(0.2..0.7);
    let dag = rng.random_bool(0.3);
    let perm = {
        let mut p: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            p.swap(k, rng.random_range(0..=k));
        }
        p
    };
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let allowed = if dag { perm[i] < perm[j] } else { i != j || rng.random_bool(0.3) };
            if allowed && rng.random_bool(density) {
                let w: f64 = rng.sample(StandardNormal);
                adj[(j, i)] = if dag { 0.5 * w } else { w };
            }
        }
    }
    let net = Network::from_matrix(adj).unwrap();
    if net.spectral_radius() > 0.0 {
        net.rescale_to_radius(0.9).unwrap()
    } else {
        net
    }
}

pub fn rel_close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.abs().max(f64::MIN_POSITIVE)
}
