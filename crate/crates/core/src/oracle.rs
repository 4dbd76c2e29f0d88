//! Brute-force reference decoders for small instances. Slow on purpose;
//! they serve as ground truth in tests.

use std::collections::HashMap;

use crate::bits::BitPlane;
use crate::error::{Error, Result};
use crate::lattice::{logical_operators, Plane, PauliFrame, Syndrome, ToricLattice};

/// Largest defect count accepted by [`exact_mwpm`] (10 395 pairings).
pub const MAX_MWPM_DEFECTS: usize = 12;

/// Largest lattice accepted by the exhaustive maximum-likelihood decoder.
pub const MAX_ML_SIZE: usize = 3;

/// Defects of one plane with their pairwise torus distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectGraph {
    pub plane: Plane,
    pub defects: Vec<usize>,
    dist: Vec<usize>,
}

impl DefectGraph {
    pub fn new(defects: &BitPlane, lat: &ToricLattice, plane: Plane) -> Self {
        let defects: Vec<usize> = defects.iter_ones().collect();
        let k = defects.len();
        let mut dist = vec![0; k * k];
        for i in 0..k {
            for j in 0..k {
                dist[i * k + j] = lat.torus_distance(defects[i], defects[j]);
            }
        }
        Self { plane, defects, dist }
    }

    pub fn len(&self) -> usize {
        self.defects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> usize {
        self.dist[i * self.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// Pairs of defect sites, each pair ascending, listed by first element.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of pair distances.
    pub weight: usize,
    pub correction: BitPlane,
}

/// Minimum-weight perfect matching by enumerating every pairing. Ties go to
/// the lexicographically first pairing.
pub fn exact_mwpm(defects: &BitPlane, lat: &ToricLattice, plane: Plane) -> Result<Matching> {
    let expected = match plane {
        Plane::Primal => lat.n_vertices(),
        Plane::Dual => lat.n_plaquettes(),
    };
    crate::error::check_len("defects", expected, defects.len())?;
    let graph = DefectGraph::new(defects, lat, plane);
    let k = graph.len();
    if k % 2 == 1 {
        return Err(Error::OddDefectCount(k));
    }
    if k > MAX_MWPM_DEFECTS {
        return Err(Error::InvalidArgument(format!(
            "exact matching enumerates at most {MAX_MWPM_DEFECTS} defects, got {k}"
        )));
    }

    let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
    let mut used = vec![false; k];
    let mut current = Vec::with_capacity(k / 2);
    search(&graph, &mut used, &mut current, 0, &mut best);
    let (weight, index_pairs) = best.unwrap_or_default();

    let mut correction = BitPlane::zeros(lat.n_qubits());
    let pairs = index_pairs
        .into_iter()
        .map(|(i, j)| {
            let (a, b) = (graph.defects[i], graph.defects[j]);
            for e in shortest_path(lat, plane, a, b) {
                correction.flip(e);
            }
            (a, b)
        })
        .collect();
    Ok(Matching { pairs, weight, correction })
}

fn search(
    g: &DefectGraph,
    used: &mut [bool],
    current: &mut Vec<(usize, usize)>,
    weight: usize,
    best: &mut Option<(usize, Vec<(usize, usize)>)>,
) {
    let Some(i) = used.iter().position(|u| !u) else {
        if best.as_ref().is_none_or(|(w, _)| weight < *w) {
            *best = Some((weight, current.clone()));
        }
        return;
    };
    used[i] = true;
    for j in i + 1..g.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        current.push((i, j));
        search(g, used, current, weight + g.distance(i, j), best);
        current.pop();
        used[j] = false;
    }
    used[i] = false;
}

/// Edges of a shortest path from `a` to `b`: columns first, then rows.
pub fn shortest_path(lat: &ToricLattice, plane: Plane, a: usize, b: usize) -> Vec<usize> {
    let l = lat.size() as isize;
    let (ra, ca) = lat.site_coords(a);
    let (rb, cb) = lat.site_coords(b);
    let signed = |from: usize, to: usize| {
        let d = (to as isize - from as isize).rem_euclid(l);
        if d <= l - d {
            d
        } else {
            d - l
        }
    };
    let (dr, dc) = (signed(ra, rb), signed(ca, cb));
    let (mut r, mut c) = (ra as isize, ca as isize);
    let mut path = Vec::with_capacity((dr.abs() + dc.abs()) as usize);
    for _ in 0..dc.abs() {
        if dc > 0 {
            path.push(lat.step_edge(plane, lat.site(r, c), true));
            c += 1;
        } else {
            c -= 1;
            path.push(lat.step_edge(plane, lat.site(r, c), true));
        }
    }
    for _ in 0..dr.abs() {
        if dr > 0 {
            path.push(lat.step_edge(plane, lat.site(r, c), false));
            r += 1;
        } else {
            r -= 1;
            path.push(lat.step_edge(plane, lat.site(r, c), false));
        }
    }
    path
}

/// Per-plane tables for coset enumeration.
#[derive(Debug, Clone)]
struct PlaneTables {
    /// Syndrome bits caused by a flip on each qubit.
    #[cfg_attr(not(test), allow(dead_code))]
    edge_syndrome: Vec<u32>,
    /// Smallest qubit mask producing each syndrome (`u32::MAX` when none).
    representative: Vec<u32>,
    /// Every stabilizer of this plane as a qubit mask.
    group: Vec<u32>,
    /// The two logical operators acting on this plane.
    logicals: [u32; 2],
}

impl PlaneTables {
    fn new(lat: &ToricLattice, plane: Plane, generators: Vec<u32>, logicals: [u32; 2]) -> Self {
        let n = lat.n_qubits();
        let edge_syndrome: Vec<u32> = (0..n)
            .map(|e| lat.edge_nodes(plane, e).iter().fold(0u32, |m, &v| m ^ (1 << v)))
            .collect();
        let n_nodes = lat.size() * lat.size();
        let mut representative = vec![u32::MAX; 1 << n_nodes];
        for mask in 0u32..(1 << n) {
            let s = syndrome_of(&edge_syndrome, mask) as usize;
            if representative[s] == u32::MAX {
                representative[s] = mask;
            }
        }
        Self {
            edge_syndrome,
            representative,
            group: span(&generators),
            logicals,
        }
    }
}

fn syndrome_of(edge_syndrome: &[u32], mut mask: u32) -> u32 {
    let mut s = 0;
    while mask != 0 {
        s ^= edge_syndrome[mask.trailing_zeros() as usize];
        mask &= mask - 1;
    }
    s
}

/// All XOR combinations of `generators`, deduplicated.
fn span(generators: &[u32]) -> Vec<u32> {
    let mut basis: Vec<u32> = Vec::new();
    for &g in generators {
        let mut v = g;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
        }
    }
    let mut out = vec![0u32];
    for b in basis {
        let extra: Vec<u32> = out.iter().map(|&x| x ^ b).collect();
        out.extend(extra);
    }
    out
}

fn mask_of(plane: &BitPlane) -> u32 {
    plane.iter_ones().fold(0, |m, e| m | (1 << e))
}

fn plane_of(mask: u32, n: usize) -> BitPlane {
    BitPlane::from_indices(n, (0..n).filter(|&e| mask >> e & 1 == 1))
}

/// Probability of each logical class consistent with a syndrome.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities {
    /// Indexed by `LogicalClass::bits()` of the class representative relative
    /// to [`ClassProbabilities::representatives`]`[0]`.
    pub probabilities: [f64; 16],
    pub representatives: Vec<PauliFrame>,
}

impl ClassProbabilities {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Most probable class; ties go to the lowest index.
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// Maximum-likelihood decoder that enumerates every frame in each logical
/// class of the syndrome. Weight histograms are cached per syndrome.
#[derive(Debug, Clone)]
pub struct MlOracle {
    lat: ToricLattice,
    /// Acts on the z bits, detected by vertices.
    z_tables: PlaneTables,
    /// Acts on the x bits, detected by plaquettes.
    x_tables: PlaneTables,
    cache: HashMap<(u32, u32), Vec<u64>>,
}

impl MlOracle {
    pub fn new(lat: &ToricLattice) -> Result<Self> {
        if lat.size() > MAX_ML_SIZE {
            return Err(Error::InvalidArgument(format!(
                "exhaustive maximum-likelihood decoding supports L <= {MAX_ML_SIZE}, got {}",
                lat.size()
            )));
        }
        let n_sites = lat.size() * lat.size();
        let z_gens = (0..n_sites)
            .map(|p| lat.plaquette_edges(p).iter().fold(0u32, |m, &e| m ^ (1 << e)))
            .collect();
        let x_gens = (0..n_sites)
            .map(|v| lat.vertex_edges(v).iter().fold(0u32, |m, &e| m ^ (1 << e)))
            .collect();
        let [z_row, z_col, x_col, x_row] = logical_operators(lat);
        Ok(Self {
            lat: *lat,
            z_tables: PlaneTables::new(lat, Plane::Primal, z_gens, [mask_of(&z_row.z), mask_of(&z_col.z)]),
            x_tables: PlaneTables::new(lat, Plane::Dual, x_gens, [mask_of(&x_col.x), mask_of(&x_row.x)]),
            cache: HashMap::new(),
        })
    }

    fn class_masks(&self, class: usize, x0: u32, z0: u32) -> (u32, u32) {
        let pick = |t: &PlaneTables, bits: usize| {
            (0..2).filter(|i| bits >> i & 1 == 1).fold(0, |m, i| m ^ t.logicals[i])
        };
        (x0 ^ pick(&self.x_tables, class >> 2), z0 ^ pick(&self.z_tables, class & 3))
    }

    /// Probabilities of all 16 classes under depolarizing noise `p_err`.
    pub fn class_probabilities(&mut self, syn: &Syndrome, p_err: f64) -> Result<ClassProbabilities> {
        syn.check_lattice(&self.lat)?;
        if !(0.0..1.0).contains(&p_err) {
            return Err(Error::InvalidArgument(format!("error rate must lie in [0, 1), got {p_err}")));
        }
        let n = self.lat.n_qubits();
        let sv = mask_of(&syn.vertex);
        let sp = mask_of(&syn.plaquette);
        let z0 = self.z_tables.representative[sv as usize];
        let x0 = self.x_tables.representative[sp as usize];
        let representatives = |o: &Self| -> Vec<PauliFrame> {
            (0..16)
                .map(|c| {
                    let (x, z) = o.class_masks(c, x0, z0);
                    PauliFrame {
                        x: plane_of(x, n),
                        z: plane_of(z, n),
                    }
                })
                .collect()
        };
        if z0 == u32::MAX || x0 == u32::MAX {
            // No frame produces this syndrome (odd parity).
            return Ok(ClassProbabilities {
                probabilities: [0.0; 16],
                representatives: Vec::new(),
            });
        }
        if !self.cache.contains_key(&(sv, sp)) {
            let hist = self.histograms(x0, z0);
            self.cache.insert((sv, sp), hist);
        }
        let hist = &self.cache[&(sv, sp)];
        let w = p_err / 3.0 / (1.0 - p_err);
        let base = (1.0 - p_err).powi(n as i32);
        let mut probabilities = [0.0; 16];
        for (c, prob) in probabilities.iter_mut().enumerate() {
            *prob = hist[c * (n + 1)..(c + 1) * (n + 1)]
                .iter()
                .enumerate()
                .map(|(k, &count)| count as f64 * base * w.powi(k as i32))
                .sum();
        }
        Ok(ClassProbabilities {
            probabilities,
            representatives: representatives(self),
        })
    }

    /// `hist[class * (n + 1) + k]` counts frames of weight `k` in `class`.
    fn histograms(&self, x0: u32, z0: u32) -> Vec<u64> {
        let n = self.lat.n_qubits();
        let mut hist = vec![0u64; 16 * (n + 1)];
        for class in 0..16 {
            let (xc, zc) = self.class_masks(class, x0, z0);
            let row = &mut hist[class * (n + 1)..(class + 1) * (n + 1)];
            for &s in &self.x_tables.group {
                let x = xc ^ s;
                for &t in &self.z_tables.group {
                    row[((zc ^ t) | x).count_ones() as usize] += 1;
                }
            }
        }
        hist
    }

    pub fn decode(&mut self, syn: &Syndrome, p_err: f64) -> Result<PauliFrame> {
        let probs = self.class_probabilities(syn, p_err)?;
        if probs.representatives.is_empty() {
            return Err(Error::NontrivialSyndrome {
                defects: syn.defect_count(),
            });
        }
        let best = probs.best();
        Ok(probs.representatives.into_iter().nth(best).expect("16 classes"))
    }

    pub fn lattice(&self) -> &ToricLattice {
        &self.lat
    }

    #[cfg(test)]
    fn syndrome_tables_consistent(&self) -> bool {
        let ok = |t: &PlaneTables| {
            t.representative
                .iter()
                .enumerate()
                .all(|(s, &m)| m == u32::MAX || syndrome_of(&t.edge_syndrome, m) == s as u32)
                && t.group.iter().all(|&g| syndrome_of(&t.edge_syndrome, g) == 0)
        };
        ok(&self.z_tables) && ok(&self.x_tables)
    }
}

/// Representative of the most probable logical class consistent with `syn`.
pub fn exhaustive_ml_decode(syn: &Syndrome, lat: &ToricLattice, p_err: f64) -> Result<PauliFrame> {
    MlOracle::new(lat)?.decode(syn, p_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{compute_syndrome, decode_succeeded, logical_class, Orientation, Pauli};

    fn lat(l: usize) -> ToricLattice {
        ToricLattice::new(l).unwrap()
    }

    #[test]
    fn no_defects_gives_empty_matching() {
        let lat = lat(5);
        let m = exact_mwpm(&BitPlane::zeros(25), &lat, Plane::Primal).unwrap();
        assert_eq!(m.weight, 0);
        assert!(m.correction.is_zero());
    }

    #[test]
    fn adjacent_defects_joined_by_single_edge() {
        let lat = lat(5);
        for plane in [Plane::Primal, Plane::Dual] {
            for e in 0..lat.n_qubits() {
                let [a, b] = lat.edge_nodes(plane, e);
                let d = BitPlane::from_indices(25, [a, b]);
                let m = exact_mwpm(&d, &lat, plane).unwrap();
                assert_eq!(m.weight, 1);
                assert_eq!(m.correction, BitPlane::from_indices(50, [e]), "{plane:?} {e}");
            }
        }
    }

    #[test]
    fn unit_square_has_weight_two() {
        let lat = lat(5);
        let d = BitPlane::from_indices(25, [lat.site(1, 1), lat.site(1, 2), lat.site(2, 1), lat.site(2, 2)]);
        let m = exact_mwpm(&d, &lat, Plane::Primal).unwrap();
        assert_eq!(m.weight, 2);
        assert_eq!(m.correction.count_ones(), 2);
    }

    #[test]
    fn paths_connect_their_endpoints() {
        let lat = lat(6);
        for plane in [Plane::Primal, Plane::Dual] {
            for a in 0..36 {
                for b in 0..36 {
                    let path = shortest_path(&lat, plane, a, b);
                    assert_eq!(path.len(), lat.torus_distance(a, b));
                    let mut ends = BitPlane::zeros(36);
                    for e in path {
                        for v in lat.edge_nodes(plane, e) {
                            ends.flip(v);
                        }
                    }
                    let expect = if a == b { BitPlane::zeros(36) } else { BitPlane::from_indices(36, [a, b]) };
                    assert_eq!(ends, expect);
                }
            }
        }
    }

    #[test]
    fn defect_graph_is_a_metric() {
        let lat = lat(7);
        let d = BitPlane::from_indices(49, [0, 5, 13, 22, 30, 48]);
        let g = DefectGraph::new(&d, &lat, Plane::Primal);
        for i in 0..g.len() {
            assert_eq!(g.distance(i, i), 0);
            for j in 0..g.len() {
                assert_eq!(g.distance(i, j), g.distance(j, i));
                for k in 0..g.len() {
                    assert!(g.distance(i, k) <= g.distance(i, j) + g.distance(j, k));
                }
            }
        }
    }

    #[test]
    fn mwpm_rejects_odd_and_oversized() {
        let lat = lat(7);
        assert!(matches!(
            exact_mwpm(&BitPlane::from_indices(49, [1, 2, 3]), &lat, Plane::Primal),
            Err(Error::OddDefectCount(3))
        ));
        assert!(exact_mwpm(&BitPlane::from_indices(49, 0..14), &lat, Plane::Primal).is_err());
    }

    #[test]
    fn ml_rejects_large_lattice() {
        assert!(MlOracle::new(&lat(4)).is_err());
    }

    #[test]
    fn ml_tables_consistent() {
        for l in [2, 3] {
            let o = MlOracle::new(&lat(l)).unwrap();
            assert!(o.syndrome_tables_consistent());
            let n_sites = l * l;
            assert_eq!(o.z_tables.group.len(), 1 << (n_sites - 1));
            assert_eq!(o.x_tables.group.len(), 1 << (n_sites - 1));
        }
    }

    #[test]
    fn ml_trivial_syndrome_is_identity_class() {
        let lat = lat(3);
        let c = exhaustive_ml_decode(&Syndrome::trivial(&lat), &lat, 0.05).unwrap();
        assert!(logical_class(&c, &lat).unwrap().is_trivial());
        assert!(compute_syndrome(&c, &lat).unwrap().is_trivial());
    }

    #[test]
    fn ml_single_z_recovers_its_class() {
        let lat = lat(3);
        let mut o = MlOracle::new(&lat).unwrap();
        for q in 0..lat.n_qubits() {
            let mut err = PauliFrame::identity(&lat);
            err.set(q, Pauli::Z);
            let syn = compute_syndrome(&err, &lat).unwrap();
            let c = o.decode(&syn, 0.05).unwrap();
            assert!(decode_succeeded(&err, &c, &lat).unwrap(), "qubit {q}");
        }
    }

    #[test]
    fn class_probabilities_partition_syndrome_probability() {
        // Brute force over all 4^8 frames at L = 2.
        let lat = lat(2);
        let p: f64 = 0.13;
        let n = lat.n_qubits();
        let mut by_syndrome: HashMap<(u32, u32), f64> = HashMap::new();
        for code in 0u32..(1 << (2 * n)) {
            let x = plane_of(code & 0xff, n);
            let z = plane_of(code >> 8, n);
            let frame = PauliFrame { x, z };
            let w = frame.weight() as i32;
            let prob = (p / 3.0).powi(w) * (1.0 - p).powi(n as i32 - w);
            let syn = compute_syndrome(&frame, &lat).unwrap();
            *by_syndrome.entry((mask_of(&syn.vertex), mask_of(&syn.plaquette))).or_default() += prob;
        }
        let mut o = MlOracle::new(&lat).unwrap();
        let mut grand = 0.0;
        for ((v, pl), total) in by_syndrome {
            let syn = Syndrome {
                vertex: plane_of(v, 4),
                plaquette: plane_of(pl, 4),
            };
            let probs = o.class_probabilities(&syn, p).unwrap();
            assert!((probs.total() - total).abs() < 1e-12, "{} vs {total}", probs.total());
            grand += total;
        }
        assert!((grand - 1.0).abs() < 1e-12);
    }

    #[test]
    fn class_index_matches_logical_class() {
        let lat = lat(3);
        let mut o = MlOracle::new(&lat).unwrap();
        let mut err = PauliFrame::identity(&lat);
        err.set(lat.edge(Orientation::Vertical, 1, 2), Pauli::Y);
        let syn = compute_syndrome(&err, &lat).unwrap();
        let probs = o.class_probabilities(&syn, 0.1).unwrap();
        let r0 = &probs.representatives[0];
        for (c, r) in probs.representatives.iter().enumerate() {
            assert_eq!(compute_syndrome(r, &lat).unwrap(), syn);
            assert_eq!(logical_class(&r.compose(r0), &lat).unwrap().bits() as usize, c);
        }
    }
}
