//! Union-find decoder.
//!
//! Each plane is decoded independently: vertex defects on the primal graph
//! produce the Z part of the correction, plaquette defects on the dual graph
//! produce the X part.
//!
//! Clustering runs in synchronous rounds. In every round each odd cluster
//! grows by half an edge on every edge incident to its boundary vertices;
//! edges that reach two half-edges in the round are collected and their
//! endpoints merged once the round is over. Growth stops when no odd
//! cluster is left. A BFS spanning forest over the fully grown edges is then
//! peeled leaf-first to produce the correction.

use std::mem;

use crate::bits::BitPlane;
use crate::error::{check_len, Error, Result};
use crate::lattice::{PauliFrame, Plane, Syndrome, ToricLattice};

const NONE: u32 = u32::MAX;

/// Adjacency tables of one matching graph (primal or dual).
#[derive(Debug, Clone)]
pub struct PlaneGraph {
    node_edges: Vec<[u32; 4]>,
    edge_nodes: Vec<[u32; 2]>,
}

impl PlaneGraph {
    pub fn new(lat: &ToricLattice, plane: Plane) -> Self {
        let node_edges = (0..lat.n_vertices())
            .map(|v| lat.node_edges(plane, v).map(|e| e as u32))
            .collect();
        let edge_nodes = (0..lat.n_qubits())
            .map(|e| lat.edge_nodes(plane, e).map(|v| v as u32))
            .collect();
        Self {
            node_edges,
            edge_nodes,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.node_edges.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_nodes.len()
    }

    #[inline]
    pub fn node_edges(&self, node: usize) -> [u32; 4] {
        self.node_edges[node]
    }

    #[inline]
    pub fn edge_nodes(&self, edge: usize) -> [u32; 2] {
        self.edge_nodes[edge]
    }
}

/// Cluster bookkeeping for one plane: a weighted DSU over nodes plus
/// per-root parity and boundary lists, and half-edge growth per edge.
///
/// Boundary lists may hold interior nodes until the next purge.
#[derive(Debug, Clone)]
pub struct ClusterForest {
    parent: Vec<u32>,
    rank: Vec<u8>,
    parity: Vec<bool>,
    boundary: Vec<Vec<u32>>,
    in_cluster: Vec<bool>,
    edge_growth: Vec<u8>,
    touched_nodes: Vec<u32>,
    touched_edges: Vec<u32>,
}

impl ClusterForest {
    pub fn new(n_nodes: usize, n_edges: usize) -> Self {
        Self {
            parent: (0..n_nodes as u32).collect(),
            rank: vec![0; n_nodes],
            parity: vec![false; n_nodes],
            boundary: vec![Vec::new(); n_nodes],
            in_cluster: vec![false; n_nodes],
            edge_growth: vec![0; n_edges],
            touched_nodes: Vec::new(),
            touched_edges: Vec::new(),
        }
    }

    /// Restores the freshly constructed state, touching only what was used.
    pub fn reset(&mut self) {
        for &v in &self.touched_nodes {
            let v = v as usize;
            self.parent[v] = v as u32;
            self.rank[v] = 0;
            self.parity[v] = false;
            self.boundary[v].clear();
            self.in_cluster[v] = false;
        }
        for &e in &self.touched_edges {
            self.edge_growth[e as usize] = 0;
        }
        self.touched_nodes.clear();
        self.touched_edges.clear();
    }

    /// Makes `node` a singleton cluster (no-op if it already belongs to one).
    pub fn add_node(&mut self, node: usize, defect: bool) {
        if self.in_cluster[node] {
            return;
        }
        self.in_cluster[node] = true;
        self.parity[node] = defect;
        self.boundary[node].push(node as u32);
        self.touched_nodes.push(node as u32);
    }

    pub fn contains(&self, node: usize) -> bool {
        self.in_cluster[node]
    }

    /// Root of `node`'s cluster, with path halving.
    #[inline]
    pub fn find(&mut self, node: usize) -> usize {
        let mut x = node;
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    /// Merges the clusters of `a` and `b` by rank. Returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.rank[ra] < self.rank[rb] {
            mem::swap(&mut ra, &mut rb);
        } else if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
        self.parent[rb] = ra as u32;
        self.parity[ra] ^= self.parity[rb];
        let mut moved = mem::take(&mut self.boundary[rb]);
        if moved.len() > self.boundary[ra].len() {
            mem::swap(&mut moved, &mut self.boundary[ra]);
        }
        self.boundary[ra].extend_from_slice(&moved);
        ra
    }

    /// Defect parity of the cluster rooted at `root` (true = odd).
    pub fn parity(&self, root: usize) -> bool {
        self.parity[root]
    }

    pub fn boundary(&self, root: usize) -> &[u32] {
        &self.boundary[root]
    }

    /// Half-edges grown on `edge`: 0, 1 or 2 (fully grown).
    pub fn growth(&self, edge: usize) -> u8 {
        self.edge_growth[edge]
    }

    /// Adds half an edge; returns true when this completes the edge.
    #[inline]
    fn grow_edge(&mut self, edge: usize) -> bool {
        let g = &mut self.edge_growth[edge];
        match *g {
            0 => {
                *g = 1;
                self.touched_edges.push(edge as u32);
                false
            }
            1 => {
                *g = 2;
                true
            }
            _ => false,
        }
    }

    fn purge_boundary(&mut self, root: usize, graph: &PlaneGraph) {
        let growth = &self.edge_growth;
        self.boundary[root].retain(|&v| {
            graph.node_edges[v as usize]
                .iter()
                .any(|&e| growth[e as usize] < 2)
        });
    }
}

/// Counters from the last plane decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrowthStats {
    pub rounds: usize,
    pub grown_edges: usize,
}

/// Reusable single-plane decoder; owns its scratch state.
#[derive(Debug, Clone)]
pub struct PlaneDecoder {
    graph: PlaneGraph,
    forest: ClusterForest,
    active: Vec<u32>,
    next_active: Vec<u32>,
    fusion: Vec<u32>,
    seen: Vec<bool>,
    defect: Vec<bool>,
    visited: Vec<bool>,
    parent_edge: Vec<u32>,
    order: Vec<u32>,
    stats: GrowthStats,
}

impl PlaneDecoder {
    pub fn new(lat: &ToricLattice, plane: Plane) -> Self {
        let graph = PlaneGraph::new(lat, plane);
        let (n, m) = (graph.n_nodes(), graph.n_edges());
        Self {
            graph,
            forest: ClusterForest::new(n, m),
            active: Vec::new(),
            next_active: Vec::new(),
            fusion: Vec::new(),
            seen: vec![false; n],
            defect: vec![false; n],
            visited: vec![false; n],
            parent_edge: vec![NONE; n],
            order: Vec::new(),
            stats: GrowthStats::default(),
        }
    }

    pub fn stats(&self) -> GrowthStats {
        self.stats
    }

    pub fn forest(&self) -> &ClusterForest {
        &self.forest
    }

    /// Correction support on edges whose boundary is exactly `defects`.
    pub fn decode(&mut self, defects: &BitPlane) -> Result<BitPlane> {
        check_len("defect plane", self.graph.n_nodes(), defects.len())?;
        let count = defects.count_ones();
        if count % 2 == 1 {
            return Err(Error::OddDefectCount(count));
        }
        self.forest.reset();
        self.grow(defects);
        Ok(self.peel(defects))
    }

    fn grow(&mut self, defects: &BitPlane) {
        let Self {
            graph,
            forest,
            active,
            next_active,
            fusion,
            seen,
            stats,
            ..
        } = self;
        *stats = GrowthStats::default();
        active.clear();
        for v in defects.iter_ones() {
            forest.add_node(v, true);
            active.push(v as u32);
        }

        while !active.is_empty() {
            stats.rounds += 1;
            // Smallest clusters first; within a synchronous round the order
            // only fixes which roots the DSU ends up with.
            active.sort_unstable_by_key(|&r| (forest.boundary[r as usize].len(), r));

            fusion.clear();
            for &r in active.iter() {
                let r = r as usize;
                for i in 0..forest.boundary[r].len() {
                    let v = forest.boundary[r][i] as usize;
                    for e in graph.node_edges[v] {
                        if forest.grow_edge(e as usize) {
                            fusion.push(e);
                        }
                    }
                }
            }
            stats.grown_edges += fusion.len();

            for &e in fusion.iter() {
                let [a, b] = graph.edge_nodes[e as usize];
                forest.add_node(a as usize, false);
                forest.add_node(b as usize, false);
                forest.union(a as usize, b as usize);
            }

            next_active.clear();
            for &r in active.iter() {
                let root = forest.find(r as usize);
                if !seen[root] {
                    seen[root] = true;
                    if forest.parity[root] {
                        forest.purge_boundary(root, graph);
                        next_active.push(root as u32);
                    }
                }
            }
            for &r in active.iter() {
                let root = forest.find(r as usize);
                seen[root] = false;
            }
            mem::swap(active, next_active);
        }
    }

    fn peel(&mut self, defects: &BitPlane) -> BitPlane {
        let Self {
            graph,
            forest,
            defect,
            visited,
            parent_edge,
            order,
            ..
        } = self;
        let mut correction = BitPlane::zeros(graph.n_edges());

        let mut nodes = forest.touched_nodes.clone();
        nodes.sort_unstable();
        for &v in &nodes {
            defect[v as usize] = defects.get(v as usize);
        }

        for &start in &nodes {
            if visited[start as usize] {
                continue;
            }
            order.clear();
            visited[start as usize] = true;
            parent_edge[start as usize] = NONE;
            order.push(start);
            let mut head = 0;
            while head < order.len() {
                let v = order[head] as usize;
                head += 1;
                for e in graph.node_edges[v] {
                    if forest.edge_growth[e as usize] < 2 {
                        continue;
                    }
                    let [a, b] = graph.edge_nodes[e as usize];
                    let u = if a as usize == v { b } else { a };
                    if !visited[u as usize] {
                        visited[u as usize] = true;
                        parent_edge[u as usize] = e;
                        order.push(u);
                    }
                }
            }
            // Leaves first: reverse BFS order never visits a node before its children.
            for &v in order.iter().rev() {
                let v = v as usize;
                let pe = parent_edge[v];
                if pe == NONE {
                    debug_assert!(!defect[v], "odd cluster survived growth");
                    continue;
                }
                if defect[v] {
                    correction.flip(pe as usize);
                    defect[v] = false;
                    let [a, b] = graph.edge_nodes[pe as usize];
                    let up = if a as usize == v { b } else { a };
                    defect[up as usize] ^= true;
                }
            }
        }

        for &v in &nodes {
            let v = v as usize;
            visited[v] = false;
            defect[v] = false;
            parent_edge[v] = NONE;
        }
        correction
    }
}

/// Reusable two-plane decoder.
#[derive(Debug, Clone)]
pub struct UnionFindDecoder {
    lat: ToricLattice,
    primal: PlaneDecoder,
    dual: PlaneDecoder,
}

impl UnionFindDecoder {
    pub fn new(lat: &ToricLattice) -> Self {
        Self {
            lat: *lat,
            primal: PlaneDecoder::new(lat, Plane::Primal),
            dual: PlaneDecoder::new(lat, Plane::Dual),
        }
    }

    pub fn lattice(&self) -> &ToricLattice {
        &self.lat
    }

    pub fn plane(&mut self, plane: Plane) -> &mut PlaneDecoder {
        match plane {
            Plane::Primal => &mut self.primal,
            Plane::Dual => &mut self.dual,
        }
    }

    pub fn decode(&mut self, syn: &Syndrome) -> Result<PauliFrame> {
        syn.check_lattice(&self.lat)?;
        let z = self.primal.decode(&syn.vertex)?;
        let x = self.dual.decode(&syn.plaquette)?;
        Ok(PauliFrame { x, z })
    }
}

pub fn uf_decode_plane(defects: &BitPlane, lat: &ToricLattice, plane: Plane) -> Result<BitPlane> {
    PlaneDecoder::new(lat, plane).decode(defects)
}

pub fn uf_decode(syn: &Syndrome, lat: &ToricLattice) -> Result<PauliFrame> {
    UnionFindDecoder::new(lat).decode(syn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{compute_syndrome, decode_succeeded, Orientation, Pauli};
    use crate::noise::{enumerate_errors, sample_depolarizing, NoiseSpec};

    fn lat(l: usize) -> ToricLattice {
        ToricLattice::new(l).unwrap()
    }

    #[test]
    fn no_defects_no_correction() {
        let lat = lat(5);
        let c = uf_decode_plane(&BitPlane::zeros(25), &lat, Plane::Primal).unwrap();
        assert!(c.is_zero());
        assert!(uf_decode(&Syndrome::trivial(&lat), &lat).unwrap().is_identity());
    }

    #[test]
    fn adjacent_defects_joined_by_their_edge() {
        let lat = lat(5);
        for plane in [Plane::Primal, Plane::Dual] {
            for e in 0..lat.n_qubits() {
                let ends = lat.edge_nodes(plane, e);
                let defects = BitPlane::from_indices(25, ends);
                let c = uf_decode_plane(&defects, &lat, plane).unwrap();
                assert_eq!(c.iter_ones().collect::<Vec<_>>(), vec![e]);
            }
        }
    }

    #[test]
    fn odd_defects_rejected() {
        let lat = lat(5);
        let d = BitPlane::from_indices(25, [3]);
        assert!(matches!(
            uf_decode_plane(&d, &lat, Plane::Primal),
            Err(Error::OddDefectCount(1))
        ));
    }

    #[test]
    fn wrong_length_rejected() {
        let lat = lat(5);
        assert!(uf_decode_plane(&BitPlane::zeros(24), &lat, Plane::Primal).is_err());
    }

    #[test]
    fn single_y_corrected_with_one_edge_per_plane() {
        let lat = lat(7);
        let mut err = PauliFrame::identity(&lat);
        let q = lat.edge(Orientation::Vertical, 2, 5);
        err.set(q, Pauli::Y);
        let syn = compute_syndrome(&err, &lat).unwrap();
        let c = uf_decode(&syn, &lat).unwrap();
        assert_eq!(c.x.count_ones(), 1);
        assert_eq!(c.z.count_ones(), 1);
        assert_eq!(compute_syndrome(&c, &lat).unwrap(), syn);
    }

    #[test]
    fn all_weight_one_z_errors_corrected() {
        let lat = lat(5);
        for q in 0..lat.n_qubits() {
            let mut err = PauliFrame::identity(&lat);
            err.set(q, Pauli::Z);
            let syn = compute_syndrome(&err, &lat).unwrap();
            let c = uf_decode(&syn, &lat).unwrap();
            assert!(decode_succeeded(&err, &c, &lat).unwrap());
        }
    }

    #[test]
    fn weight_two_errors_corrected_at_distance_five() {
        let lat = lat(5);
        let mut dec = UnionFindDecoder::new(&lat);
        let mut failures = 0;
        for err in enumerate_errors(&lat, 2).unwrap() {
            let syn = compute_syndrome(&err, &lat).unwrap();
            let c = dec.decode(&syn).unwrap();
            assert_eq!(compute_syndrome(&c, &lat).unwrap(), syn);
            failures += !decode_succeeded(&err, &c, &lat).unwrap() as usize;
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn reused_decoder_matches_fresh() {
        let lat = lat(9);
        let spec = NoiseSpec::new(0.12, 77).unwrap();
        let mut dec = UnionFindDecoder::new(&lat);
        for s in 0..200 {
            let syn = compute_syndrome(&sample_depolarizing(&spec, &lat, s), &lat).unwrap();
            assert_eq!(dec.decode(&syn).unwrap(), uf_decode(&syn, &lat).unwrap());
        }
    }

    #[test]
    fn random_instances_are_syndrome_consistent_and_terminate() {
        for l in [3, 4, 7, 15] {
            let lat = lat(l);
            let mut dec = UnionFindDecoder::new(&lat);
            for p in [0.02, 0.1, 0.2, 0.4] {
                let spec = NoiseSpec::new(p, 5).unwrap();
                for s in 0..300 {
                    let syn = compute_syndrome(&sample_depolarizing(&spec, &lat, s), &lat).unwrap();
                    let c = dec.decode(&syn).unwrap();
                    assert_eq!(compute_syndrome(&c, &lat).unwrap(), syn);
                    for plane in [Plane::Primal, Plane::Dual] {
                        dec.plane(plane).decode(syn.defects(plane)).unwrap();
                        assert!(dec.plane(plane).stats().rounds <= 2 * l);
                    }
                }
            }
        }
    }

    #[test]
    fn dsu_union_tracks_root_and_parity() {
        let mut f = ClusterForest::new(10, 0);
        for v in 0..10 {
            f.add_node(v, v % 3 == 0);
        }
        f.union(0, 1);
        f.union(2, 3);
        let r = f.union(1, 3);
        assert_eq!(f.find(0), r);
        assert_eq!(f.find(2), r);
        // defects at 0 and 3 -> even
        assert!(!f.parity(r));
        let r2 = f.union(6, 7);
        assert!(f.parity(r2));
        assert_eq!(f.boundary(r).len(), 4);
    }
}
