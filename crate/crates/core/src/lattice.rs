//! Toric-code geometry, Pauli frames, syndromes and logical classes.
//!
//! Qubits live on the edges of an `L x L` periodic square lattice. Edge
//! indices are orientation-major, then row-major:
//!
//! ```text
//! index = orientation * L^2 + row * L + col     (horizontal = 0, vertical = 1)
//! ```
//!
//! Horizontal edge `h(r, c)` joins vertices `(r, c)` and `(r, c+1)` and
//! borders plaquettes `(r, c)` and `(r-1, c)`. Vertical edge `v(r, c)` joins
//! vertices `(r, c)` and `(r+1, c)` and borders plaquettes `(r, c)` and
//! `(r, c-1)`. Plaquette `(r, c)` is the face whose top-left corner is vertex
//! `(r, c)`. All coordinates wrap modulo `L`.
//!
//! Vertex stabilizers are X-type, so they detect Z components; plaquette
//! stabilizers are Z-type and detect X components.

use crate::bits::BitPlane;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Orientation {
    Horizontal = 0,
    Vertical = 1,
}

/// Single-qubit Pauli operator, phases discarded. The discriminant is the
/// class index used by the neural classifier: I, X, Y, Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: usize) -> Option<Pauli> {
        Self::ALL.get(i).copied()
    }

    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    #[inline]
    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

/// Which of the two matching graphs a single-type decoder works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    /// Nodes are vertices; carries Z components and vertex defects.
    Primal,
    /// Nodes are plaquettes; carries X components and plaquette defects.
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToricLattice {
    size: usize,
}

impl ToricLattice {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidLatticeSize(size));
        }
        Ok(Self { size })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        2 * self.size * self.size
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn n_plaquettes(&self) -> usize {
        self.size * self.size
    }

    #[inline]
    pub fn wrap(&self, x: isize) -> usize {
        x.rem_euclid(self.size as isize) as usize
    }

    /// Index of the site (vertex or plaquette) at wrapped coordinates.
    #[inline]
    pub fn site(&self, row: isize, col: isize) -> usize {
        self.wrap(row) * self.size + self.wrap(col)
    }

    #[inline]
    pub fn site_coords(&self, site: usize) -> (usize, usize) {
        (site / self.size, site % self.size)
    }

    #[inline]
    pub fn edge(&self, orientation: Orientation, row: isize, col: isize) -> usize {
        orientation as usize * self.size * self.size + self.site(row, col)
    }

    #[inline]
    pub fn edge_coords(&self, edge: usize) -> (Orientation, usize, usize) {
        let l2 = self.size * self.size;
        let orientation = if edge < l2 {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        };
        let (r, c) = self.site_coords(edge % l2);
        (orientation, r, c)
    }

    pub fn vertex_edges(&self, vertex: usize) -> [usize; 4] {
        let (r, c) = self.site_coords(vertex);
        let (r, c) = (r as isize, c as isize);
        [
            self.edge(Orientation::Horizontal, r, c),
            self.edge(Orientation::Horizontal, r, c - 1),
            self.edge(Orientation::Vertical, r, c),
            self.edge(Orientation::Vertical, r - 1, c),
        ]
    }

    pub fn plaquette_edges(&self, plaquette: usize) -> [usize; 4] {
        let (r, c) = self.site_coords(plaquette);
        let (r, c) = (r as isize, c as isize);
        [
            self.edge(Orientation::Horizontal, r, c),
            self.edge(Orientation::Horizontal, r + 1, c),
            self.edge(Orientation::Vertical, r, c),
            self.edge(Orientation::Vertical, r, c + 1),
        ]
    }

    #[inline]
    pub fn edge_vertices(&self, edge: usize) -> [usize; 2] {
        let (o, r, c) = self.edge_coords(edge);
        let (r, c) = (r as isize, c as isize);
        match o {
            Orientation::Horizontal => [self.site(r, c), self.site(r, c + 1)],
            Orientation::Vertical => [self.site(r, c), self.site(r + 1, c)],
        }
    }

    #[inline]
    pub fn edge_plaquettes(&self, edge: usize) -> [usize; 2] {
        let (o, r, c) = self.edge_coords(edge);
        let (r, c) = (r as isize, c as isize);
        match o {
            Orientation::Horizontal => [self.site(r, c), self.site(r - 1, c)],
            Orientation::Vertical => [self.site(r, c), self.site(r, c - 1)],
        }
    }

    pub fn node_edges(&self, plane: Plane, node: usize) -> [usize; 4] {
        match plane {
            Plane::Primal => self.vertex_edges(node),
            Plane::Dual => self.plaquette_edges(node),
        }
    }

    pub fn edge_nodes(&self, plane: Plane, edge: usize) -> [usize; 2] {
        match plane {
            Plane::Primal => self.edge_vertices(edge),
            Plane::Dual => self.edge_plaquettes(edge),
        }
    }

    /// Edge crossed when stepping from `node` one unit in `+col` (`along_row`)
    /// or `+row` direction, in the given plane.
    pub fn step_edge(&self, plane: Plane, node: usize, along_row: bool) -> usize {
        let (r, c) = self.site_coords(node);
        let (r, c) = (r as isize, c as isize);
        match (plane, along_row) {
            (Plane::Primal, true) => self.edge(Orientation::Horizontal, r, c),
            (Plane::Primal, false) => self.edge(Orientation::Vertical, r, c),
            (Plane::Dual, true) => self.edge(Orientation::Vertical, r, c + 1),
            (Plane::Dual, false) => self.edge(Orientation::Horizontal, r + 1, c),
        }
    }

    /// Manhattan distance between two sites with wraparound.
    pub fn torus_distance(&self, a: usize, b: usize) -> usize {
        let (ra, ca) = self.site_coords(a);
        let (rb, cb) = self.site_coords(b);
        let d = |x: usize, y: usize| {
            let diff = x.abs_diff(y);
            diff.min(self.size - diff)
        };
        d(ra, rb) + d(ca, cb)
    }
}

/// Pauli operator on every qubit, stored as an X bit-plane and a Z bit-plane.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliFrame {
    pub x: BitPlane,
    pub z: BitPlane,
}

impl PauliFrame {
    pub fn identity(lat: &ToricLattice) -> Self {
        Self::identity_len(lat.n_qubits())
    }

    pub fn identity_len(n: usize) -> Self {
        Self {
            x: BitPlane::zeros(n),
            z: BitPlane::zeros(n),
        }
    }

    pub fn from_planes(x: BitPlane, z: BitPlane) -> Result<Self> {
        check_len("z-part", x.len(), z.len())?;
        Ok(Self { x, z })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x.get(qubit), self.z.get(qubit))
    }

    #[inline]
    pub fn set(&mut self, qubit: usize, pauli: Pauli) {
        self.x.set(qubit, pauli.has_x());
        self.z.set(qubit, pauli.has_z());
    }

    /// Multiplies the qubit's Pauli by `pauli` (up to phase).
    #[inline]
    pub fn apply(&mut self, qubit: usize, pauli: Pauli) {
        if pauli.has_x() {
            self.x.flip(qubit);
        }
        if pauli.has_z() {
            self.z.flip(qubit);
        }
    }

    /// Number of non-identity qubits.
    pub fn weight(&self) -> usize {
        self.x.count_union(&self.z)
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn compose(&self, other: &PauliFrame) -> PauliFrame {
        PauliFrame {
            x: &self.x ^ &other.x,
            z: &self.z ^ &other.z,
        }
    }

    pub fn compose_assign(&mut self, other: &PauliFrame) {
        self.x ^= &other.x;
        self.z ^= &other.z;
    }

    pub fn check_lattice(&self, lat: &ToricLattice) -> Result<()> {
        check_len("pauli frame", lat.n_qubits(), self.x.len())?;
        check_len("pauli frame", lat.n_qubits(), self.z.len())
    }
}

/// Stabilizer outcomes stored as defect bits (1 = outcome -1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub vertex: BitPlane,
    pub plaquette: BitPlane,
}

impl Syndrome {
    pub fn trivial(lat: &ToricLattice) -> Self {
        Self {
            vertex: BitPlane::zeros(lat.n_vertices()),
            plaquette: BitPlane::zeros(lat.n_plaquettes()),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.vertex.is_zero() && self.plaquette.is_zero()
    }

    pub fn defect_count(&self) -> usize {
        self.vertex.count_ones() + self.plaquette.count_ones()
    }

    pub fn defects(&self, plane: Plane) -> &BitPlane {
        match plane {
            Plane::Primal => &self.vertex,
            Plane::Dual => &self.plaquette,
        }
    }

    pub fn xor(&self, other: &Syndrome) -> Syndrome {
        Syndrome {
            vertex: &self.vertex ^ &other.vertex,
            plaquette: &self.plaquette ^ &other.plaquette,
        }
    }

    pub fn check_lattice(&self, lat: &ToricLattice) -> Result<()> {
        check_len("vertex syndrome", lat.n_vertices(), self.vertex.len())?;
        check_len("plaquette syndrome", lat.n_plaquettes(), self.plaquette.len())
    }

    /// Both defect planes have even weight, as any error on the torus produces.
    pub fn has_even_parity(&self) -> bool {
        self.vertex.count_ones() % 2 == 0 && self.plaquette.count_ones() % 2 == 0
    }
}

pub fn compute_syndrome(frame: &PauliFrame, lat: &ToricLattice) -> Result<Syndrome> {
    frame.check_lattice(lat)?;
    let mut syn = Syndrome::trivial(lat);
    for e in frame.z.iter_ones() {
        for v in lat.edge_vertices(e) {
            syn.vertex.flip(v);
        }
    }
    for e in frame.x.iter_ones() {
        for p in lat.edge_plaquettes(e) {
            syn.plaquette.flip(p);
        }
    }
    Ok(syn)
}

/// Homology class of a syndrome-free frame.
///
/// `z_horizontal` flags a Z string winding along rows (measured on a column
/// of horizontal edges), `z_vertical` one winding along columns (a row of
/// vertical edges). `x_horizontal` is the X parity across a row of horizontal
/// edges, `x_vertical` across a column of vertical edges; they flag dual X
/// strings winding vertically and horizontally respectively.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LogicalClass {
    pub z_horizontal: bool,
    pub z_vertical: bool,
    pub x_horizontal: bool,
    pub x_vertical: bool,
}

impl LogicalClass {
    pub fn is_trivial(&self) -> bool {
        !(self.z_horizontal || self.z_vertical || self.x_horizontal || self.x_vertical)
    }

    /// Packs the four parities as bits 0..4 in field order.
    pub fn bits(&self) -> u8 {
        self.z_horizontal as u8
            | (self.z_vertical as u8) << 1
            | (self.x_horizontal as u8) << 2
            | (self.x_vertical as u8) << 3
    }
}

pub fn logical_class(frame: &PauliFrame, lat: &ToricLattice) -> Result<LogicalClass> {
    logical_class_at(frame, lat, 0)
}

/// Logical class measured on cuts translated by `offset`. Any offset gives
/// the same answer for syndrome-free frames.
pub fn logical_class_at(frame: &PauliFrame, lat: &ToricLattice, offset: usize) -> Result<LogicalClass> {
    let syn = compute_syndrome(frame, lat)?;
    if !syn.is_trivial() {
        return Err(Error::NontrivialSyndrome {
            defects: syn.defect_count(),
        });
    }
    let l = lat.size() as isize;
    let k = (offset % lat.size()) as isize;
    let parity = |plane: &BitPlane, edges: &mut dyn Iterator<Item = usize>| {
        edges.fold(false, |acc, e| acc ^ plane.get(e))
    };
    use Orientation::{Horizontal as H, Vertical as V};
    Ok(LogicalClass {
        // A horizontal Z loop crosses the column of horizontal edges h(*, k) once.
        z_horizontal: parity(&frame.z, &mut (0..l).map(|r| lat.edge(H, r, k))),
        z_vertical: parity(&frame.z, &mut (0..l).map(|c| lat.edge(V, k, c))),
        x_horizontal: parity(&frame.x, &mut (0..l).map(|c| lat.edge(H, k, c))),
        x_vertical: parity(&frame.x, &mut (0..l).map(|r| lat.edge(V, r, k))),
    })
}

/// True when `correction` undoes `error` up to a stabilizer.
pub fn decode_succeeded(error: &PauliFrame, correction: &PauliFrame, lat: &ToricLattice) -> Result<bool> {
    correction.check_lattice(lat)?;
    let residual = error.compose(correction);
    Ok(logical_class(&residual, lat)?.is_trivial())
}

/// The four canonical logical operators, one per class bit, in
/// [`LogicalClass::bits`] order.
pub fn logical_operators(lat: &ToricLattice) -> [PauliFrame; 4] {
    let l = lat.size() as isize;
    let n = lat.n_qubits();
    use Orientation::{Horizontal as H, Vertical as V};
    let z_row = BitPlane::from_indices(n, (0..l).map(|c| lat.edge(H, 0, c)));
    let z_col = BitPlane::from_indices(n, (0..l).map(|r| lat.edge(V, r, 0)));
    let x_row = BitPlane::from_indices(n, (0..l).map(|c| lat.edge(V, 0, c)));
    let x_col = BitPlane::from_indices(n, (0..l).map(|r| lat.edge(H, r, 0)));
    let zeros = BitPlane::zeros(n);
    [
        PauliFrame { x: zeros.clone(), z: z_row },
        PauliFrame { x: zeros.clone(), z: z_col },
        PauliFrame { x: x_col, z: zeros.clone() },
        PauliFrame { x: x_row, z: zeros },
    ]
}

/// Generator of the stabilizer group: X on the four edges of a vertex or Z
/// on the four edges of a plaquette.
pub fn stabilizer_generator(lat: &ToricLattice, plane: Plane, site: usize) -> PauliFrame {
    let mut frame = PauliFrame::identity(lat);
    match plane {
        Plane::Primal => lat.vertex_edges(site).into_iter().for_each(|e| frame.x.flip(e)),
        Plane::Dual => lat.plaquette_edges(site).into_iter().for_each(|e| frame.z.flip(e)),
    }
    frame
}
