//! Reference implementations used as test oracles. Written from the model
//! equations without going through the library's internals.

#![allow(dead_code)]

use cellload::NetworkScenario;
use rand::Rng;

/// Load map computed directly from the scenario's public data.
pub fn load_map_oracle(s: &NetworkScenario, load: &[f64], rates: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; s.num_bs()];
    for (j, &i) in s.assignment().iter().enumerate() {
        let mut interference = s.noise_power();
        for k in 0..s.num_bs() {
            if k != i {
                interference += s.power()[k] * s.gain()[k][j] * load[k];
            }
        }
        let sinr = s.power()[i] * s.gain()[i][j] / interference;
        q[i] += rates[j] / (1.0 + sinr).log2();
    }
    q.iter().map(|v| v / s.resources()).collect()
}

pub fn sup_residual(s: &NetworkScenario, load: &[f64], rates: &[f64]) -> f64 {
    load_map_oracle(s, load, rates)
        .iter()
        .zip(load)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Symmetric two-cell instance: one TP per cell, direct gain `g`, cross gain
/// `c`, unit power. Returns the scenario and the scalar fixed point found by
/// bisection on `phi(x) = x - rate / (R B log2(1 + g / (c x + noise)))`.
pub fn symmetric_pair(g: f64, c: f64, noise: f64, resources: f64, rate: f64) -> (NetworkScenario, Option<f64>) {
    let s = NetworkScenario::new(
        vec![1.0, 1.0],
        vec![vec![g, c], vec![c, g]],
        vec![0, 1],
        resources,
        noise,
    )
    .unwrap();
    let phi = |x: f64| x - rate / (resources * (1.0 + g / (c * x + noise)).log2());
    // phi(0) < 0; the fixed point, if feasible, lies in (0, 1]
    if phi(1.0) < 0.0 {
        return (s, None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (s, Some(0.5 * (lo + hi)))
}

/// Brute-force solution of
/// `min sum |q_k|  s.t.  q_k - q_j <= c[k][j]` (k != j).
///
/// The objective is linear on every orthant, so an optimum sits at a vertex
/// of the arrangement of constraint hyperplanes and coordinate hyperplanes;
/// all `K`-subsets of those hyperplanes are enumerated.
pub fn brute_force_smoothing(c: &[Vec<f64>]) -> f64 {
    let k = c.len();
    // rows of (coefficients, rhs)
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let mut row = vec![0.0; k];
                row[a] = 1.0;
                row[b] = -1.0;
                planes.push((row, c[a][b]));
            }
        }
    }
    for a in 0..k {
        let mut row = vec![0.0; k];
        row[a] = 1.0;
        planes.push((row, 0.0));
    }

    let feasible = |q: &[f64]| {
        (0..k).all(|a| (0..k).all(|b| a == b || q[a] - q[b] <= c[a][b] + 1e-9))
    };
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    combinations(planes.len(), k, 0, &mut chosen, &mut |idx| {
        let rows: Vec<&(Vec<f64>, f64)> = idx.iter().map(|&i| &planes[i]).collect();
        if let Some(q) = solve_square(&rows) {
            if feasible(&q) {
                best = best.min(q.iter().map(|v| v.abs()).sum());
            }
        }
    });
    best
}

fn combinations(n: usize, k: usize, start: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    for i in start..n {
        if n - i < k - chosen.len() {
            break;
        }
        chosen.push(i);
        combinations(n, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(*b);
            v
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for cc in col..=n {
                        a[r][cc] -= f * a[col][cc];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Monotone, `l`-Lipschitz (w.r.t. the cone distance) function
/// `x -> clamp(max_p (l <u_p, x> + b_p), 0, 1)` with `u_p >= 0`, `||u_p|| <= 1`.
pub struct MonotoneOracle {
    pub l: f64,
    pieces: Vec<(Vec<f64>, f64)>,
}

impl MonotoneOracle {
    pub fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let l = rng.random_range(0.1..3.0);
        let pieces = (0..rng.random_range(1..5))
            .map(|_| {
                let mut u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                let scale = rng.random_range(0.2..1.0) / norm;
                u.iter_mut().for_each(|v| *v *= scale);
                (u, rng.random_range(-1.0..0.5))
            })
            .collect();
        Self { l, pieces }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(u, b)| self.l * u.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b)
            .fold(f64::NEG_INFINITY, f64::max)
            .clamp(0.0, 1.0)
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn cone(x: &[f64], a: &[f64]) -> f64 {
    x.iter().zip(a).map(|(p, q)| (p - q).max(0.0).powi(2)).sum::<f64>().sqrt()
}
