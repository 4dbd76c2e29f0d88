//! Depolarizing noise and exhaustive low-weight error enumeration.
//!
//! Every sample is drawn from its own ChaCha8 stream: the 64-bit seed keys
//! the cipher and `stream_index` selects the stream, so instance `k` of a run
//! is the same frame no matter which worker draws it or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Pauli, PauliFrame, ToricLattice};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub p_err: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_err: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_err) {
            return Err(Error::InvalidArgument(format!(
                "error rate must lie in [0, 1], got {p_err}"
            )));
        }
        Ok(Self { p_err, seed })
    }
}

/// Generator for stream `stream_index` under `seed`.
pub fn stream_rng(seed: u64, stream_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_index);
    rng
}

/// Mixes several words into one seed (splitmix64 finalizer chain).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Noise for one (seed, L, p) point of a sweep. Different decoders at the
/// same point see identical instances.
pub fn instance_noise(seed: u64, lat: &ToricLattice, p_err: f64) -> Result<NoiseSpec> {
    NoiseSpec::new(p_err, derive_seed(&[seed, lat.size() as u64, p_err.to_bits()]))
}

/// Each qubit independently suffers X, Y or Z with probability `p_err / 3` each.
pub fn sample_depolarizing(spec: &NoiseSpec, lat: &ToricLattice, stream_index: u64) -> PauliFrame {
    let mut rng = stream_rng(spec.seed, stream_index);
    sample_depolarizing_with(spec.p_err, lat, &mut rng)
}

pub fn sample_depolarizing_with<R: Rng>(p_err: f64, lat: &ToricLattice, rng: &mut R) -> PauliFrame {
    let mut frame = PauliFrame::identity(lat);
    if p_err <= 0.0 {
        return frame;
    }
    let third = p_err / 3.0;
    for q in 0..lat.n_qubits() {
        let u: f64 = rng.random();
        if u < p_err {
            let pauli = if u < third {
                Pauli::X
            } else if u < 2.0 * third {
                Pauli::Y
            } else {
                Pauli::Z
            };
            frame.set(q, pauli);
        }
    }
    frame
}

/// Default guard for [`enumerate_errors`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 50_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of frames with support size at most `max_weight`.
pub fn count_errors(n_qubits: usize, max_weight: usize) -> u128 {
    (0..=max_weight as u128)
        .map(|w| 3u128.saturating_pow(w as u32).saturating_mul(binomial(n_qubits as u128, w)))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// Every frame of support size at most `max_weight`, each exactly once,
/// ordered by weight, then support (lexicographic), then Pauli labels.
pub fn enumerate_errors(lat: &ToricLattice, max_weight: usize) -> Result<ErrorEnumerator> {
    enumerate_errors_capped(lat, max_weight, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_errors_capped(lat: &ToricLattice, max_weight: usize, cap: u128) -> Result<ErrorEnumerator> {
    let requested = count_errors(lat.n_qubits(), max_weight);
    if requested > cap {
        return Err(Error::CapExceeded { requested, cap });
    }
    Ok(ErrorEnumerator {
        lat: *lat,
        max_weight: max_weight.min(lat.n_qubits()),
        support: Vec::new(),
        labels: Vec::new(),
        started: false,
        done: false,
    })
}

pub struct ErrorEnumerator {
    lat: ToricLattice,
    max_weight: usize,
    support: Vec<usize>,
    // 0..3 -> X, Y, Z
    labels: Vec<u8>,
    started: bool,
    done: bool,
}

impl ErrorEnumerator {
    fn frame(&self) -> PauliFrame {
        let mut f = PauliFrame::identity(&self.lat);
        for (&q, &l) in self.support.iter().zip(&self.labels) {
            f.set(q, [Pauli::X, Pauli::Y, Pauli::Z][l as usize]);
        }
        f
    }

    fn advance_labels(&mut self) -> bool {
        for l in self.labels.iter_mut().rev() {
            if *l < 2 {
                *l += 1;
                return true;
            }
            *l = 0;
        }
        false
    }

    fn advance_support(&mut self) -> bool {
        let n = self.lat.n_qubits();
        let w = self.support.len();
        for i in (0..w).rev() {
            if self.support[i] < n - (w - i) {
                self.support[i] += 1;
                for j in i + 1..w {
                    self.support[j] = self.support[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for ErrorEnumerator {
    type Item = PauliFrame;

    fn next(&mut self) -> Option<PauliFrame> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.frame());
        }
        if self.advance_labels() {
            return Some(self.frame());
        }
        if self.advance_support() {
            self.labels.iter_mut().for_each(|l| *l = 0);
            return Some(self.frame());
        }
        let w = self.support.len() + 1;
        if w > self.max_weight {
            self.done = true;
            return None;
        }
        self.support = (0..w).collect();
        self.labels = vec![0; w];
        Some(self.frame())
    }
}
