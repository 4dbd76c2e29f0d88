//! Syndrome windows around an examination qubit.
//!
//! With `k = l_input / 2`, a horizontal edge `h(r, c)` sees
//!
//! ```text
//! vertex[i][j]    = vertex    (r + i - k, c + j - k)
//! plaquette[i][j] = plaquette (r + i - k, c + j - k)
//! ```
//!
//! so its endpoints land at window cells `(k, k)` and `(k, k+1)` and its two
//! plaquettes at `(k, k)` and `(k-1, k)`. A vertical edge `v(r, c)` uses the
//! transposed window (`i` and `j` swapped in the site offsets), which is the
//! diagonal reflection of the lattice; that maps vertical edges onto
//! horizontal ones with the same local picture, so one network serves both.
//!
//! Entries are +1 for a satisfied stabilizer and -1 for a defect. The value 0
//! marks a stabilizer that does not exist; it never occurs on the torus.

use ndarray::NdFloat;

use crate::error::{Error, Result};
use crate::lattice::{Orientation, Syndrome, ToricLattice};

/// Tag stored in model files so a network is only paired with the window
/// layout it was trained on.
pub const MASK_CONVENTION: &str = "edge-anchored-transpose-v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskInput {
    l_input: usize,
    values: Vec<i8>,
}

impl MaskInput {
    pub fn new(l_input: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != 2 * l_input * l_input {
            return Err(Error::SizeMismatch {
                what: "mask input",
                expected: 2 * l_input * l_input,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::InvalidArgument("mask entries must be -1, 0 or +1".into()));
        }
        Ok(Self { l_input, values })
    }

    pub fn l_input(&self) -> usize {
        self.l_input
    }

    /// Vertex channel (row-major) followed by the plaquette channel.
    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vertex_channel(&self) -> &[i8] {
        &self.values[..self.l_input * self.l_input]
    }

    pub fn plaquette_channel(&self) -> &[i8] {
        &self.values[self.l_input * self.l_input..]
    }
}

pub(crate) fn check_window(lat: &ToricLattice, l_input: usize) -> Result<()> {
    if l_input == 0 || l_input % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "mask size must be odd and positive, got {l_input}"
        )));
    }
    if l_input > lat.size() {
        return Err(Error::InvalidArgument(format!(
            "mask size {l_input} exceeds lattice size {}",
            lat.size()
        )));
    }
    Ok(())
}

pub fn extract_mask(syn: &Syndrome, lat: &ToricLattice, qubit: usize, l_input: usize) -> Result<MaskInput> {
    check_window(lat, l_input)?;
    syn.check_lattice(lat)?;
    if qubit >= lat.n_qubits() {
        return Err(Error::InvalidArgument(format!("qubit {qubit} out of range")));
    }
    let mut values = vec![0i8; 2 * l_input * l_input];
    write_window(syn, lat, qubit, l_input, &mut values, |defect| if defect { -1 } else { 1 });
    Ok(MaskInput { l_input, values })
}

/// Writes the window for `qubit` as floats into `out` (length `2 * l_input^2`).
/// Callers have already validated the window size.
pub(crate) fn write_mask_row<T: NdFloat>(
    syn: &Syndrome,
    lat: &ToricLattice,
    qubit: usize,
    l_input: usize,
    out: &mut [T],
) {
    write_window(syn, lat, qubit, l_input, out, |defect| {
        if defect {
            -T::one()
        } else {
            T::one()
        }
    });
}

#[inline]
fn write_window<V>(
    syn: &Syndrome,
    lat: &ToricLattice,
    qubit: usize,
    l_input: usize,
    out: &mut [V],
    encode: impl Fn(bool) -> V,
) {
    let (orientation, r, c) = lat.edge_coords(qubit);
    let k = (l_input / 2) as isize;
    let (r, c) = (r as isize, c as isize);
    let area = l_input * l_input;
    for i in 0..l_input as isize {
        for j in 0..l_input as isize {
            let (dr, dc) = match orientation {
                Orientation::Horizontal => (i - k, j - k),
                Orientation::Vertical => (j - k, i - k),
            };
            let site = lat.site(r + dr, c + dc);
            let cell = (i * l_input as isize + j) as usize;
            out[cell] = encode(syn.vertex.get(site));
            out[area + cell] = encode(syn.plaquette.get(site));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{compute_syndrome, Pauli, PauliFrame};

    #[test]
    fn trivial_syndrome_all_plus_one() {
        let lat = ToricLattice::new(7).unwrap();
        let syn = Syndrome::trivial(&lat);
        for q in [0, 20, 97] {
            let m = extract_mask(&syn, &lat, q, 5).unwrap();
            assert!(m.values().iter().all(|&v| v == 1));
        }
    }

    #[test]
    fn single_z_lights_centre_pair() {
        let lat = ToricLattice::new(9).unwrap();
        let l = 5;
        let k = l / 2;
        for q in [lat.edge(Orientation::Horizontal, 4, 6), lat.edge(Orientation::Vertical, 0, 8)] {
            let mut err = PauliFrame::identity(&lat);
            err.set(q, Pauli::Z);
            let syn = compute_syndrome(&err, &lat).unwrap();
            let m = extract_mask(&syn, &lat, q, l).unwrap();
            let lit: Vec<usize> = m
                .values()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == -1)
                .map(|(i, _)| i)
                .collect();
            assert_eq!(lit, vec![k * l + k, k * l + k + 1]);
        }
    }

    #[test]
    fn single_x_lights_plaquette_pair_identically_for_both_orientations() {
        let lat = ToricLattice::new(9).unwrap();
        let l = 5;
        let k = l / 2;
        for q in [lat.edge(Orientation::Horizontal, 4, 6), lat.edge(Orientation::Vertical, 3, 2)] {
            let mut err = PauliFrame::identity(&lat);
            err.set(q, Pauli::X);
            let syn = compute_syndrome(&err, &lat).unwrap();
            let m = extract_mask(&syn, &lat, q, l).unwrap();
            let lit: Vec<usize> = m.plaquette_channel().iter().enumerate().filter(|(_, &v)| v == -1).map(|(i, _)| i).collect();
            assert_eq!(lit, vec![(k - 1) * l + k, k * l + k]);
            assert!(m.vertex_channel().iter().all(|&v| v == 1));
        }
    }

    #[test]
    fn rejects_bad_window() {
        let lat = ToricLattice::new(5).unwrap();
        let syn = Syndrome::trivial(&lat);
        assert!(extract_mask(&syn, &lat, 0, 4).is_err());
        assert!(extract_mask(&syn, &lat, 0, 7).is_err());
        assert!(extract_mask(&syn, &lat, 50, 3).is_err());
        assert!(extract_mask(&syn, &lat, 0, 5).is_ok());
    }
}
