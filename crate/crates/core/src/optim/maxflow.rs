//! Max-flow / min-cut with the two-tree augmenting-path scheme
//! (growth, augmentation and adoption stages).

use std::collections::VecDeque;

use crate::error::{GalError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
}

/// Directed network with non-negative finite capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork {
    n_nodes: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= n_nodes || sink >= n_nodes {
            return Err(GalError::Parameter("terminal out of range".into()));
        }
        if source == sink {
            return Err(GalError::Parameter("source and sink must differ".into()));
        }
        Ok(FlowNetwork {
            n_nodes,
            source,
            sink,
            arcs: Vec::new(),
        })
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: f64) -> Result<()> {
        if from >= self.n_nodes || to >= self.n_nodes {
            return Err(GalError::Parameter(format!(
                "arc {from}->{to} out of range"
            )));
        }
        if !capacity.is_finite() || capacity < 0.0 {
            return Err(GalError::Parameter(format!("bad capacity {capacity}")));
        }
        self.arcs.push(Arc { from, to, capacity });
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Total capacity of arcs leaving the source side.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        self.arcs
            .iter()
            .filter(|a| source_side[a.from] && !source_side[a.to])
            .map(|a| a.capacity)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinCut {
    pub flow: f64,
    /// `true` for nodes on the source side of the minimum cut. Exactly the
    /// nodes that cannot reach the sink in the final residual graph.
    pub source_side: Vec<bool>,
}

const NONE: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

struct Solver {
    head: Vec<usize>,
    residual: Vec<f64>,
    out: Vec<Vec<usize>>,
    tree: Vec<Tree>,
    parent: Vec<usize>,
    active: VecDeque<usize>,
    in_active: Vec<bool>,
    orphans: VecDeque<usize>,
}

#[inline]
fn sister(a: usize) -> usize {
    a ^ 1
}

impl Solver {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.n_nodes;
        let mut head = Vec::with_capacity(2 * net.arcs.len());
        let mut residual = Vec::with_capacity(2 * net.arcs.len());
        let mut out = vec![Vec::new(); n];
        for arc in &net.arcs {
            let id = head.len();
            head.push(arc.to);
            residual.push(arc.capacity);
            head.push(arc.from);
            residual.push(0.0);
            out[arc.from].push(id);
            out[arc.to].push(id + 1);
        }
        Solver {
            head,
            residual,
            out,
            tree: vec![Tree::Free; n],
            parent: vec![NONE; n],
            active: VecDeque::new(),
            in_active: vec![false; n],
            orphans: VecDeque::new(),
        }
    }

    #[inline]
    fn tail(&self, a: usize) -> usize {
        self.head[sister(a)]
    }

    fn activate(&mut self, v: usize) {
        if !self.in_active[v] {
            self.in_active[v] = true;
            self.active.push_back(v);
        }
    }

    /// Residual capacity of the edge `a` in the direction trees grow.
    #[inline]
    fn grow_capacity(&self, tree: Tree, a: usize) -> f64 {
        match tree {
            Tree::Source => self.residual[a],
            _ => self.residual[sister(a)],
        }
    }

    /// Grow until an arc joins the two trees; returns that arc oriented
    /// from the source tree to the sink tree.
    fn grow(&mut self) -> Option<usize> {
        while let Some(&p) = self.active.front() {
            if self.tree[p] == Tree::Free {
                self.active.pop_front();
                self.in_active[p] = false;
                continue;
            }
            let tp = self.tree[p];
            for i in 0..self.out[p].len() {
                let a = self.out[p][i];
                if self.grow_capacity(tp, a) <= 0.0 {
                    continue;
                }
                let q = self.head[a];
                match self.tree[q] {
                    Tree::Free => {
                        self.tree[q] = tp;
                        // parent arc always points from parent to child in the
                        // source tree and from child to parent in the sink tree
                        self.parent[q] = if tp == Tree::Source { a } else { sister(a) };
                        self.activate(q);
                    }
                    tq if tq != tp => {
                        return Some(if tp == Tree::Source { a } else { sister(a) });
                    }
                    _ => {}
                }
            }
            self.active.pop_front();
            self.in_active[p] = false;
        }
        None
    }

    fn augment(&mut self, bridge: usize) -> f64 {
        let mut bottleneck = self.residual[bridge];
        let mut v = self.tail(bridge);
        while self.parent[v] != TERMINAL {
            let a = self.parent[v];
            bottleneck = bottleneck.min(self.residual[a]);
            v = self.tail(a);
        }
        let mut v = self.head[bridge];
        while self.parent[v] != TERMINAL {
            let a = self.parent[v];
            bottleneck = bottleneck.min(self.residual[a]);
            v = self.head[a];
        }

        self.residual[bridge] -= bottleneck;
        self.residual[sister(bridge)] += bottleneck;
        let mut v = self.tail(bridge);
        while self.parent[v] != TERMINAL {
            let a = self.parent[v];
            self.residual[a] -= bottleneck;
            self.residual[sister(a)] += bottleneck;
            if self.residual[a] <= 0.0 {
                self.parent[v] = NONE;
                self.orphans.push_back(v);
            }
            v = self.tail(a);
        }
        let mut v = self.head[bridge];
        while self.parent[v] != TERMINAL {
            let a = self.parent[v];
            self.residual[a] -= bottleneck;
            self.residual[sister(a)] += bottleneck;
            if self.residual[a] <= 0.0 {
                self.parent[v] = NONE;
                self.orphans.push_back(v);
            }
            v = self.head[a];
        }
        bottleneck
    }

    /// Whether `v` is still connected to its tree's terminal.
    fn rooted(&self, mut v: usize) -> bool {
        loop {
            match self.parent[v] {
                TERMINAL => return true,
                NONE => return false,
                a => {
                    v = if self.tree[v] == Tree::Source {
                        self.tail(a)
                    } else {
                        self.head[a]
                    }
                }
            }
        }
    }

    fn adopt(&mut self) {
        while let Some(p) = self.orphans.pop_front() {
            let tp = self.tree[p];
            let mut found = NONE;
            for i in 0..self.out[p].len() {
                let a = self.out[p][i];
                let q = self.head[a];
                if self.tree[q] != tp {
                    continue;
                }
                // candidate parent arc into p (source tree) or out of p (sink tree)
                let parent_arc = if tp == Tree::Source { sister(a) } else { a };
                if self.residual[parent_arc] > 0.0 && self.rooted(q) {
                    found = parent_arc;
                    break;
                }
            }
            if found != NONE {
                self.parent[p] = found;
                continue;
            }
            for i in 0..self.out[p].len() {
                let a = self.out[p][i];
                let q = self.head[a];
                if self.tree[q] != tp {
                    continue;
                }
                let toward_p = if tp == Tree::Source { sister(a) } else { a };
                if self.residual[toward_p] > 0.0 {
                    self.activate(q);
                }
                let pa = self.parent[q];
                if pa != NONE && pa != TERMINAL {
                    let parent_node = if tp == Tree::Source {
                        self.tail(pa)
                    } else {
                        self.head[pa]
                    };
                    if parent_node == p {
                        self.parent[q] = NONE;
                        self.orphans.push_back(q);
                    }
                }
            }
            self.tree[p] = Tree::Free;
            self.parent[p] = NONE;
        }
    }
}

/// Maximum flow value and the corresponding minimum cut.
pub fn max_flow(net: &FlowNetwork) -> MinCut {
    let mut s = Solver::new(net);
    s.tree[net.source] = Tree::Source;
    s.parent[net.source] = TERMINAL;
    s.tree[net.sink] = Tree::Sink;
    s.parent[net.sink] = TERMINAL;
    s.activate(net.source);
    s.activate(net.sink);

    let mut flow = 0.0;
    while let Some(bridge) = s.grow() {
        flow += s.augment(bridge);
        s.adopt();
    }
    let source_side = s.tree.iter().map(|t| *t != Tree::Sink).collect();
    MinCut { flow, source_side }
}
