//! Edmonds-Karp maximum flow on arbitrary-precision integer capacities.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: BigInt,
    rev: usize,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
    // (node, slot) of every forward edge in insertion order, with its original capacity
    forward: Vec<(usize, usize, BigInt)>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self { graph: vec![Vec::new(); nodes], forward: Vec::new() }
    }

    /// Adds a directed edge and returns its id.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: BigInt) -> usize {
        debug_assert!(!cap.is_negative());
        let rev_from = self.graph[to].len() + usize::from(from == to);
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge { to, cap: cap.clone(), rev: rev_from });
        self.graph[to].push(Edge { to: from, cap: BigInt::zero(), rev: rev_to });
        self.forward.push((from, rev_to, cap));
        self.forward.len() - 1
    }

    /// Flow currently carried by edge `id`.
    pub fn flow(&self, id: usize) -> BigInt {
        let (node, slot, ref orig) = self.forward[id];
        orig - &self.graph[node][slot].cap
    }

    /// Augments along breadth-first shortest paths until none remain.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> BigInt {
        let mut total = BigInt::zero();
        loop {
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; self.graph.len()];
            let mut seen = vec![false; self.graph.len()];
            seen[source] = true;
            let mut queue = VecDeque::from([source]);
            while let Some(v) = queue.pop_front() {
                if v == sink {
                    break;
                }
                for (i, e) in self.graph[v].iter().enumerate() {
                    if !seen[e.to] && e.cap.is_positive() {
                        seen[e.to] = true;
                        prev[e.to] = Some((v, i));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }

            let mut bottleneck: Option<BigInt> = None;
            let mut v = sink;
            while let Some((u, i)) = prev[v] {
                let cap = &self.graph[u][i].cap;
                if bottleneck.as_ref().is_none_or(|b| cap < b) {
                    bottleneck = Some(cap.clone());
                }
                v = u;
            }
            let push = bottleneck.expect("augmenting path has at least one edge");
            let mut v = sink;
            while let Some((u, i)) = prev[v] {
                self.graph[u][i].cap -= &push;
                let (to, rev) = (self.graph[u][i].to, self.graph[u][i].rev);
                self.graph[to][rev].cap += &push;
                v = u;
            }
            total += push;
        }
    }

    /// Nodes reachable from `source` in the residual graph.
    pub fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if !seen[e.to] && e.cap.is_positive() {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        seen
    }
}
