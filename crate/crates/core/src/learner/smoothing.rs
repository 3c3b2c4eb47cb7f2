//! Minimal L1 perturbation subject to difference constraints.
//!
//! Solves, for one output column,
//!
//! ```text
//! minimize   sum_k |q_k|
//! subject to q_k - q_j <= c_kj,   c_kj = y_j - y_k + L * ||(r_k - r_j)_+||
//! ```
//!
//! The LP dual is a min-cost flow: arcs `k -> j` with cost `c_kj` and
//! unbounded capacity, plus unit-capacity zero-cost arcs from a source to
//! every node and from every node to a sink. The flow is computed with
//! successive shortest paths (dense Dijkstra on reduced costs) and the primal
//! `q` is read off as node potentials of the final residual network. The
//! gap between the primal objective and the flow cost is checked before
//! returning, so every solution carries an optimality certificate.

use std::collections::VecDeque;

use crate::error::{Error, Result};

// Paths whose true cost is above this are not augmented.
const AUGMENT_TOL: f64 = 1e-12;
// Slack used while repairing potentials; bounds the final constraint violation.
const LABEL_SLACK: f64 = 1e-11;
const GAP_TOL: f64 = 1e-8;

/// Solution of the smoothing LP for one output column.
#[derive(Debug, Clone)]
pub(crate) struct SmoothingSolution {
    pub q: Vec<f64>,
    pub objective: f64,
    #[allow(dead_code)] // inspected by tests
    pub dual_objective: f64,
}

/// Solves the smoothing LP for observations `y`, cone distances
/// `dist[k * K + j] = ||(r_k - r_j)_+||` and Lipschitz constant `lipschitz`.
pub(crate) fn solve(y: &[f64], dist: &[f64], lipschitz: f64) -> Result<SmoothingSolution> {
    let k = y.len();
    debug_assert_eq!(dist.len(), k * k);
    if k == 0 {
        return Ok(SmoothingSolution { q: vec![], objective: 0.0, dual_objective: 0.0 });
    }

    let mut cost = vec![0.0; k * k];
    let mut cost_t = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let c = y[b] - y[a] + lipschitz * dist[a * k + b];
                cost[a * k + b] = c;
                cost_t[b * k + a] = c;
            }
        }
    }

    let mut net = Network::new(y, cost, cost_t);
    net.run_successive_shortest_paths()?;
    let q = net.primal_from_potentials()?;

    let objective: f64 = q.iter().map(|v| v.abs()).sum();
    let dual_objective = net.dual_objective();
    if objective - dual_objective > GAP_TOL * (1.0 + objective.abs()) {
        return Err(Error::Solver(format!(
            "duality gap {:e} after smoothing (primal {objective}, dual {dual_objective})",
            objective - dual_objective
        )));
    }
    Ok(SmoothingSolution { q, objective, dual_objective })
}

#[derive(Clone, Copy)]
enum Via {
    None,
    Source,
    // arc u -> v with original orientation
    Forward(usize),
    // residual of arc v -> u
    Backward(usize),
}

struct Network {
    k: usize,
    cost: Vec<f64>,
    cost_t: Vec<f64>,
    // inflow[v * k + u]: flow on arc u -> v
    inflow: Vec<u32>,
    from_source: Vec<bool>,
    to_sink: Vec<bool>,
    // potentials for data nodes, source, sink
    h: Vec<f64>,
    h_source: f64,
    h_sink: f64,
}

impl Network {
    fn new(y: &[f64], cost: Vec<f64>, cost_t: Vec<f64>) -> Self {
        let k = y.len();
        // h = y makes every data arc reduced cost L * dist >= 0
        let h_source = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let h_sink = y.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            k,
            cost,
            cost_t,
            inflow: vec![0; k * k],
            from_source: vec![false; k],
            to_sink: vec![false; k],
            h: y.to_vec(),
            h_source,
            h_sink,
        }
    }

    fn run_successive_shortest_paths(&mut self) -> Result<()> {
        let k = self.k;
        let mut dist = vec![f64::INFINITY; k];
        let mut via = vec![Via::None; k];
        let mut settled = vec![false; k];

        // each augmentation saturates one source arc
        for _ in 0..=k {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
            via.iter_mut().for_each(|v| *v = Via::None);
            settled.iter_mut().for_each(|s| *s = false);
            let mut dist_sink = f64::INFINITY;
            let mut sink_via: Option<usize> = None;

            for v in 0..k {
                if !self.from_source[v] {
                    let rc = (self.h_source - self.h[v]).max(0.0);
                    if rc < dist[v] {
                        dist[v] = rc;
                        via[v] = Via::Source;
                    }
                }
            }

            loop {
                // closest unsettled data node, or the sink
                let mut u = usize::MAX;
                let mut du = f64::INFINITY;
                for v in 0..k {
                    if !settled[v] && dist[v] < du {
                        du = dist[v];
                        u = v;
                    }
                }
                if dist_sink <= du {
                    break;
                }
                if u == usize::MAX {
                    break;
                }
                settled[u] = true;
                let hu = self.h[u];

                if !self.to_sink[u] {
                    let nd = du + (hu - self.h_sink).max(0.0);
                    if nd < dist_sink {
                        dist_sink = nd;
                        sink_via = Some(u);
                    }
                }
                let row = &self.cost[u * k..(u + 1) * k];
                let row_t = &self.cost_t[u * k..(u + 1) * k];
                let inflow = &self.inflow[u * k..(u + 1) * k];
                for v in 0..k {
                    if settled[v] || v == u {
                        continue;
                    }
                    let base = hu - self.h[v];
                    let mut rc = row[v] + base;
                    let mut step = Via::Forward(u);
                    if inflow[v] > 0 {
                        let back = base - row_t[v];
                        if back < rc {
                            rc = back;
                            step = Via::Backward(u);
                        }
                    }
                    let nd = du + rc.max(0.0);
                    if nd < dist[v] {
                        dist[v] = nd;
                        via[v] = step;
                    }
                }
            }

            // nodes left unsettled get dist_sink in the potential update
            let Some(last) = sink_via else {
                return Ok(());
            };
            let true_cost = dist_sink - self.h_source + self.h_sink;
            if true_cost >= -AUGMENT_TOL {
                return Ok(());
            }

            for v in 0..k {
                self.h[v] += dist[v].min(dist_sink);
            }
            self.h_sink += dist_sink;
            // h_source gets dist 0

            self.to_sink[last] = true;
            let mut v = last;
            loop {
                match via[v] {
                    Via::Source => {
                        self.from_source[v] = true;
                        break;
                    }
                    Via::Forward(u) => {
                        self.inflow[v * k + u] += 1;
                        v = u;
                    }
                    Via::Backward(u) => {
                        self.inflow[u * k + v] -= 1;
                        v = u;
                    }
                    Via::None => {
                        return Err(Error::Solver("broken augmenting path".into()));
                    }
                }
            }
        }
        Err(Error::Solver(format!(
            "successive shortest paths exceeded {} augmentations",
            k + 1
        )))
    }

    /// Residual arc cost `u -> v` in the network with source and sink merged
    /// into a hub node `k`.
    #[inline]
    fn arc(&self, u: usize, v: usize) -> Option<f64> {
        let k = self.k;
        if u == v {
            None
        } else if u == k {
            // unused source arc, or reverse of a used sink arc
            (!self.from_source[v] || self.to_sink[v]).then_some(0.0)
        } else if v == k {
            // unused sink arc, or reverse of a used source arc
            (!self.to_sink[u] || self.from_source[u]).then_some(0.0)
        } else {
            let c = self.cost[u * k + v];
            if self.inflow[u * k + v] > 0 {
                Some(c.min(-self.cost_t[u * k + v]))
            } else {
                Some(c)
            }
        }
    }

    /// Feasible potentials of the merged residual network, repaired by label
    /// correction starting from the Dijkstra potentials.
    fn feasible_potentials(&self) -> Result<Vec<f64>> {
        let k = self.k;
        let mut p: Vec<f64> = self.h.clone();
        p.push(self.h_source);

        let mut queued = vec![true; k + 1];
        let mut queue: VecDeque<usize> = (0..=k).collect();
        let budget = 4 * (k + 1) * (k + 1) + 16;
        let mut pops = 0usize;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            pops += 1;
            if pops > budget {
                return Err(Error::Solver(
                    "potential repair did not settle (negative residual cycle)".into(),
                ));
            }
            for v in 0..=k {
                if let Some(c) = self.arc(u, v) {
                    if p[u] + c < p[v] - LABEL_SLACK {
                        p[v] = p[u] + c;
                        if !queued[v] {
                            queued[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
            }
        }
        Ok(p)
    }

    /// Shortest residual distances from the hub (`forward`) or to the hub,
    /// via dense Dijkstra on costs reduced by the potentials `p`.
    fn hub_distances(&self, p: &[f64], forward: bool) -> Vec<f64> {
        let n = self.k + 1;
        let hub = self.k;
        let mut dist = vec![f64::INFINITY; n];
        let mut settled = vec![false; n];
        dist[hub] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut du = f64::INFINITY;
            for v in 0..n {
                if !settled[v] && dist[v] < du {
                    du = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            settled[u] = true;
            for v in 0..n {
                if settled[v] {
                    continue;
                }
                let reduced = if forward {
                    self.arc(u, v).map(|c| c + p[u] - p[v])
                } else {
                    self.arc(v, u).map(|c| c + p[v] - p[u])
                };
                if let Some(rc) = reduced {
                    let nd = du + rc.max(0.0);
                    if nd < dist[v] {
                        dist[v] = nd;
                    }
                }
            }
        }
        // undo the reduction
        (0..n)
            .map(|v| if forward { dist[v] - p[hub] + p[v] } else { dist[v] - p[v] + p[hub] })
            .collect()
    }

    /// Primal perturbation `q` from the optimal flow.
    ///
    /// Optimal `q` (with the hub pinned at 0) are exactly the potentials of
    /// the final residual network, a lattice whose least element is
    /// `-dist(hub -> k)` and greatest element `dist(k -> hub)`. Returning
    /// their midpoint makes ties in the L1 objective resolve symmetrically.
    fn primal_from_potentials(&self) -> Result<Vec<f64>> {
        let p = self.feasible_potentials()?;
        let from_hub = self.hub_distances(&p, true);
        let to_hub = self.hub_distances(&p, false);
        let k = self.k;
        if from_hub[..k].iter().chain(&to_hub[..k]).any(|d| !d.is_finite()) {
            return Err(Error::Solver("residual network is not strongly connected".into()));
        }
        Ok((0..k).map(|v| 0.5 * (to_hub[v] - from_hub[v])).collect())
    }

    fn dual_objective(&self) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for v in 0..k {
            for u in 0..k {
                let f = self.inflow[v * k + u];
                if f > 0 {
                    total += f as f64 * self.cost[u * k + v];
                }
            }
        }
        -total
    }
}
