//! Undirected spatial graphs for stem skeletons.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

/// A skeleton: vertices in millimetres connected by undirected edges.
///
/// Invariants enforced at construction: edge indices in range, no self-loops,
/// no duplicate edges (edges are stored with the smaller index first).
#[derive(Clone, PartialEq, Debug, Default)]
pub struct Skeleton<T = f64> {
    vertices: Vec<Vec3<T>>,
    edges: Vec<(u32, u32)>,
}

impl<T: Real> Skeleton<T> {
    /// Builds a skeleton, rejecting dangling indices and self-loops and
    /// silently deduplicating repeated edges. Use [`Skeleton::new_counting`]
    /// when the duplicate count matters.
    pub fn new(vertices: Vec<Vec3<T>>, edges: Vec<(u32, u32)>) -> Result<Self> {
        Self::new_counting(vertices, edges).map(|(s, _)| s)
    }

    /// Like [`Skeleton::new`] but also reports how many duplicate edges were
    /// dropped.
    pub fn new_counting(vertices: Vec<Vec3<T>>, edges: Vec<(u32, u32)>) -> Result<(Self, usize)> {
        let n = vertices.len();
        let mut normalized = Vec::with_capacity(edges.len());
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a as usize >= n || b as usize >= n {
                return Err(Error::DanglingEdgeIndex {
                    edge: i,
                    index: a.max(b) as usize,
                    vertex_count: n,
                });
            }
            if a == b {
                return Err(Error::InvalidParams(format!("edge {i} is a self-loop on vertex {a}")));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        let before = normalized.len();
        normalized.sort_unstable();
        normalized.dedup();
        let duplicates = before - normalized.len();
        Ok((Self { vertices, edges: normalized }, duplicates))
    }

    /// A chain skeleton through `vertices` in order.
    pub fn chain(vertices: Vec<Vec3<T>>) -> Result<Self> {
        let edges = (1..vertices.len() as u32).map(|i| (i - 1, i)).collect();
        Self::new(vertices, edges)
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_length(&self, edge: (u32, u32)) -> T {
        self.vertices[edge.0 as usize].distance(self.vertices[edge.1 as usize])
    }

    /// Sum of Euclidean edge lengths.
    pub fn total_length(&self) -> T {
        let mut sum = T::zero();
        for &e in &self.edges {
            sum += self.edge_length(e);
        }
        sum
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.vertices.len()];
        for &(a, b) in &self.edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    /// Vertices of degree 1 (isolated vertices have degree 0 and do not
    /// count).
    pub fn endpoints(&self) -> Vec<u32> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d == 1)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Connected-component label per vertex; isolated vertices form their own
    /// components. Labels are assigned in order of lowest contained vertex.
    pub fn component_labels(&self) -> Vec<u32> {
        let adj = self.adjacency();
        let mut label = vec![u32::MAX; self.vertices.len()];
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..self.vertices.len() {
            if label[start] != u32::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start as u32);
            while let Some(v) = stack.pop() {
                for &w in &adj[v as usize] {
                    if label[w as usize] == u32::MAX {
                        label[w as usize] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Number of fragmented segments (connected components).
    pub fn segment_count(&self) -> usize {
        if self.vertices.is_empty() {
            return 0;
        }
        *self.component_labels().iter().max().unwrap() as usize + 1
    }

    /// The weighted graph diameter: the longest shortest path between any
    /// vertex pair, maximised over connected components. Ties break towards
    /// the lexicographically smallest `(min, max)` endpoint index pair.
    pub fn longest_path(&self) -> Result<(T, Vec<u32>)> {
        if self.edges.is_empty() {
            return Err(Error::NoEdges);
        }
        let adj = self.weighted_adjacency();
        let mut best: Option<(T, (u32, u32), Vec<u32>)> = None;
        for source in 0..self.vertices.len() as u32 {
            let (dist, pred) = self.dijkstra_adj(&adj, source);
            for target in 0..self.vertices.len() as u32 {
                let d = dist[target as usize];
                if !d.is_finite() {
                    continue;
                }
                let pair = (source.min(target), source.max(target));
                let better = match &best {
                    None => true,
                    Some((bd, bp, _)) => d > *bd || (d == *bd && pair < *bp),
                };
                if better {
                    let mut path = vec![target];
                    let mut v = target;
                    while v != source {
                        v = pred[v as usize];
                        path.push(v);
                    }
                    path.reverse();
                    best = Some((d, pair, path));
                }
            }
        }
        let (length, _, path) = best.expect("graph has edges");
        Ok((length, path))
    }

    fn weighted_adjacency(&self) -> Vec<Vec<(u32, T)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            let w = self.edge_length((a, b));
            adj[a as usize].push((b, w));
            adj[b as usize].push((a, w));
        }
        adj
    }

    fn dijkstra_adj(&self, adj: &[Vec<(u32, T)>], source: u32) -> (Vec<T>, Vec<u32>) {
        use std::cmp::Ordering;
        use std::collections::BinaryHeap;

        struct Entry<T>(T, u32);
        impl<T: Real> PartialEq for Entry<T> {
            fn eq(&self, o: &Self) -> bool {
                self.0 == o.0 && self.1 == o.1
            }
        }
        impl<T: Real> Eq for Entry<T> {}
        impl<T: Real> PartialOrd for Entry<T> {
            fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
                Some(self.cmp(o))
            }
        }
        impl<T: Real> Ord for Entry<T> {
            fn cmp(&self, o: &Self) -> Ordering {
                // Min-heap on distance, tie-break on vertex index for
                // determinism.
                o.0.partial_cmp(&self.0)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| o.1.cmp(&self.1))
            }
        }

        let n = self.vertices.len();
        let mut dist = vec![T::infinity(); n];
        let mut pred = vec![u32::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = T::zero();
        heap.push(Entry(T::zero(), source));
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            for &(w, len) in &adj[v as usize] {
                let nd = d + len;
                if nd < dist[w as usize] {
                    dist[w as usize] = nd;
                    pred[w as usize] = v;
                    heap.push(Entry(nd, w));
                }
            }
        }
        (dist, pred)
    }

    /// Shortest-path distances from `source` over edge lengths.
    pub fn geodesic_distances(&self, source: u32) -> (Vec<T>, Vec<u32>) {
        let adj = self.weighted_adjacency();
        self.dijkstra_adj(&adj, source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain_along_x(xs: &[f64]) -> Skeleton {
        Skeleton::chain(xs.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect()).unwrap()
    }

    #[test]
    fn rejects_dangling_edges() {
        let vertices = vec![Vec3::<f64>::zero(); 3];
        let err = Skeleton::new(vertices, vec![(0, 5)]).unwrap_err();
        assert!(matches!(err, Error::DanglingEdgeIndex { index: 5, vertex_count: 3, .. }));
    }

    #[test]
    fn rejects_self_loops() {
        let vertices = vec![Vec3::<f64>::zero(); 2];
        assert!(Skeleton::new(vertices, vec![(1, 1)]).is_err());
    }

    #[test]
    fn deduplicates_edges_with_count() {
        let vertices = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let (skel, dups) = Skeleton::new_counting(vertices, vec![(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(skel.edge_count(), 1);
        assert_eq!(dups, 2);
    }

    #[test]
    fn chain_endpoints_and_segments() {
        let skel = chain_along_x(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(skel.endpoints(), vec![0, 4]);
        assert_eq!(skel.segment_count(), 1);
    }

    #[test]
    fn y_shape_has_three_endpoints() {
        let vertices = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 3.0),
            Vec3::new(0.0, 5.0, 3.0),
            Vec3::new(4.0, 0.0, 3.0),
        ];
        let skel = Skeleton::new(vertices, vec![(0, 1), (1, 2), (1, 3)]).unwrap();
        assert_eq!(skel.endpoints(), vec![0, 2, 3]);
        // Enumerating endpoint pairs: 3+5, 3+4, 5+4; the diameter joins the
        // two branches through the junction.
        let (len, _) = skel.longest_path().unwrap();
        assert_relative_eq!(len, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn isolated_vertex_is_not_an_endpoint_but_is_a_segment() {
        let vertices = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(9.0, 9.0, 9.0)];
        let skel = Skeleton::new(vertices, vec![(0, 1)]).unwrap();
        assert_eq!(skel.endpoints(), vec![0, 1]);
        assert_eq!(skel.segment_count(), 2);
    }

    #[test]
    fn longest_path_picks_larger_component() {
        // Two chains: lengths 7 and 9.
        let mut vertices = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(7.0, 0.0, 0.0)];
        vertices.push(Vec3::new(0.0, 10.0, 0.0));
        vertices.push(Vec3::new(4.0, 10.0, 0.0));
        vertices.push(Vec3::new(9.0, 10.0, 0.0));
        let skel = Skeleton::new(vertices, vec![(0, 1), (2, 3), (3, 4)]).unwrap();
        let (len, path) = skel.longest_path().unwrap();
        assert_relative_eq!(len, 9.0, epsilon = 1e-12);
        assert_eq!(path, vec![2, 3, 4]);
    }

    #[test]
    fn longest_path_never_exceeds_total_length() {
        let skel = chain_along_x(&[0.0, 2.5, 4.0, 10.0]);
        let (len, _) = skel.longest_path().unwrap();
        assert!(len <= skel.total_length() + 1e-12);
        assert_relative_eq!(len, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn no_edges_error() {
        let skel = Skeleton::<f64>::new(vec![Vec3::zero()], vec![]).unwrap();
        assert!(matches!(skel.longest_path(), Err(Error::NoEdges)));
    }
}
