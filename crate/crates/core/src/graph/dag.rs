//! Directed acyclic graphs over node indices.

use super::{check_node, GraphError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    n: usize,
    /// `adj[a * n + b]` iff `a -> b`.
    adj: Vec<bool>,
}

impl CausalDag {
    /// Builds a DAG from a directed edge list. Duplicate edges collapse;
    /// self-loops and cycles are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = vec![false; n * n];
        for &(a, b) in edges {
            check_node(a, n)?;
            check_node(b, n)?;
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            adj[a * n + b] = true;
        }
        let dag = Self { n, adj };
        dag.topological_order().ok_or(GraphError::DirectedCycle)?;
        Ok(dag)
    }

    pub fn empty(n: usize) -> Result<Self, GraphError> {
        Self::new(n, &[])
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.n + b]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |a| (0..self.n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.has_edge(a, b))
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.has_edge(u, v)).collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&w| self.has_edge(v, w)).collect()
    }

    /// Kahn's algorithm; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.n];
        for (_, b) in self.edges() {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        ready.reverse();
        let mut order = Vec::with_capacity(self.n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for w in self.children(v) {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    ready.push(w);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// Nodes with a directed path into `targets`, targets included.
    pub fn ancestors_of_set(&self, targets: &[usize]) -> Vec<bool> {
        let mut reached = vec![false; self.n];
        let mut stack: Vec<usize> = Vec::new();
        for &t in targets {
            if !reached[t] {
                reached[t] = true;
                stack.push(t);
            }
        }
        while let Some(v) = stack.pop() {
            for u in self.parents(v) {
                if !reached[u] {
                    reached[u] = true;
                    stack.push(u);
                }
            }
        }
        reached
    }

    pub fn is_ancestor_of(&self, a: usize, b: usize) -> bool {
        self.ancestors_of_set(&[b])[a]
    }

    /// Unshielded colliders `x -> z <- y` (x < y, x and y nonadjacent).
    pub fn v_structures(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for z in 0..self.n {
            let pa = self.parents(z);
            for (i, &x) in pa.iter().enumerate() {
                for &y in &pa[i + 1..] {
                    if !self.adjacent(x, y) {
                        out.push((x, z, y));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cycles_and_self_loops() {
        assert!(matches!(CausalDag::new(2, &[(0, 0)]), Err(GraphError::SelfLoop(0))));
        assert!(matches!(
            CausalDag::new(2, &[(0, 1), (1, 0)]),
            Err(GraphError::DirectedCycle)
        ));
        assert!(matches!(
            CausalDag::new(3, &[(0, 1), (1, 2), (2, 0)]),
            Err(GraphError::DirectedCycle)
        ));
        assert!(matches!(CausalDag::new(0, &[]), Err(GraphError::Empty)));
    }

    #[test]
    fn topological_order_respects_edges() {
        let g = CausalDag::new(4, &[(0, 1), (1, 2), (0, 3), (3, 2)]).unwrap();
        let order = g.topological_order().unwrap();
        let pos: Vec<usize> = (0..4).map(|v| order.iter().position(|&o| o == v).unwrap()).collect();
        for (a, b) in g.edges() {
            assert!(pos[a] < pos[b]);
        }
    }

    #[test]
    fn ancestors_and_v_structures() {
        // 0 -> 2 <- 1, 2 -> 3
        let g = CausalDag::new(4, &[(0, 2), (1, 2), (2, 3)]).unwrap();
        let anc = g.ancestors_of_set(&[3]);
        assert_eq!(anc, vec![true, true, true, true]);
        assert!(g.is_ancestor_of(0, 3));
        assert!(!g.is_ancestor_of(3, 0));
        assert_eq!(g.v_structures(), vec![(0, 2, 1)]);
    }
}
