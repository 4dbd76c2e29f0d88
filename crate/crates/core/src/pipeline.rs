//! Two-stage decoding: the classifier corrects qubits next to defects, the
//! union-find decoder handles the remaining syndrome.

use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array2, NdFloat};
use rayon::prelude::*;

use crate::bits::BitPlane;
use crate::error::Result;
use crate::lattice::{compute_syndrome, decode_succeeded, Pauli, PauliFrame, Syndrome, ToricLattice};
use crate::neural::{check_window, write_mask_row, MlpModel};
use crate::noise::{instance_noise, sample_depolarizing};
use crate::uf::UnionFindDecoder;

/// Rows per network call when classifying many candidates.
const CLASSIFY_CHUNK: usize = 4096;

/// Anything that maps examination qubits of a syndrome to a Pauli guess.
///
/// Every guess must depend only on the syndrome passed in, never on the
/// order of `qubits` or on earlier guesses.
pub trait QubitClassifier: Sync {
    fn l_input(&self) -> usize;

    fn classify(&self, syn: &Syndrome, lat: &ToricLattice, qubits: &[usize]) -> Result<Vec<Pauli>>;
}

impl<T: NdFloat> QubitClassifier for MlpModel<T> {
    fn l_input(&self) -> usize {
        self.config().l_input
    }

    fn classify(&self, syn: &Syndrome, lat: &ToricLattice, qubits: &[usize]) -> Result<Vec<Pauli>> {
        check_window(lat, self.l_input())?;
        syn.check_lattice(lat)?;
        let dim = self.config().input_dim();
        let mut out = Vec::with_capacity(qubits.len());
        for chunk in qubits.chunks(CLASSIFY_CHUNK) {
            let mut x = Array2::<T>::zeros((chunk.len(), dim));
            for (mut row, &q) in x.rows_mut().into_iter().zip(chunk) {
                let row = row.as_slice_mut().expect("standard layout");
                write_mask_row(syn, lat, q, self.l_input(), row);
            }
            out.extend(self.classify_matrix(x.view())?);
        }
        Ok(out)
    }
}

/// Edges incident to at least one defective vertex or plaquette, ascending.
pub fn candidate_qubits(syn: &Syndrome, lat: &ToricLattice) -> Vec<usize> {
    let mut marked = BitPlane::zeros(lat.n_qubits());
    for v in syn.vertex.iter_ones() {
        lat.vertex_edges(v).into_iter().for_each(|e| marked.set(e, true));
    }
    for p in syn.plaquette.iter_ones() {
        lat.plaquette_edges(p).into_iter().for_each(|e| marked.set(e, true));
    }
    marked.iter_ones().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    pub partial_correction: PauliFrame,
    pub residual_syndrome: Syndrome,
    pub candidates: usize,
    pub applied: usize,
}

/// One pass of the classifier over every candidate qubit. All decisions read
/// the input syndrome; corrections are applied together afterwards.
pub fn ml_preprocess<C: QubitClassifier + ?Sized>(
    syn: &Syndrome,
    model: &C,
    lat: &ToricLattice,
) -> Result<Preprocessed> {
    syn.check_lattice(lat)?;
    let qubits = candidate_qubits(syn, lat);
    let guesses = if qubits.is_empty() {
        Vec::new()
    } else {
        model.classify(syn, lat, &qubits)?
    };
    let mut partial = PauliFrame::identity(lat);
    let mut applied = 0;
    for (&q, &pauli) in qubits.iter().zip(&guesses) {
        if pauli != Pauli::I {
            partial.set(q, pauli);
            applied += 1;
        }
    }
    let residual = if applied == 0 {
        syn.clone()
    } else {
        syn.xor(&compute_syndrome(&partial, lat)?)
    };
    Ok(Preprocessed {
        partial_correction: partial,
        residual_syndrome: residual,
        candidates: qubits.len(),
        applied,
    })
}

/// Wall-clock durations in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub ml_us: f64,
    pub uf_us: f64,
    pub total_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub correction: PauliFrame,
    /// Set once the true error is known (see [`DecodeOutcome::judge`]).
    pub succeeded: Option<bool>,
    pub ml_corrections_applied: usize,
    pub defects_before: usize,
    pub defects_after: usize,
    pub timings: StageTimings,
}

impl DecodeOutcome {
    pub fn judge(&mut self, error: &PauliFrame, lat: &ToricLattice) -> Result<bool> {
        let ok = decode_succeeded(error, &self.correction, lat)?;
        self.succeeded = Some(ok);
        Ok(ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DecoderKind {
    #[serde(rename = "uf")]
    Uf,
    #[serde(rename = "ml+uf")]
    MlUf,
}

impl DecoderKind {
    pub fn tag(self) -> &'static str {
        match self {
            DecoderKind::Uf => "uf",
            DecoderKind::MlUf => "ml+uf",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uf" => Ok(DecoderKind::Uf),
            "ml+uf" | "mluf" | "ml-uf" => Ok(DecoderKind::MlUf),
            other => Err(format!("unknown decoder {other:?} (expected uf or ml+uf)")),
        }
    }
}

enum ModelRef<'m> {
    Borrowed(&'m dyn QubitClassifier),
    Shared(Arc<dyn QubitClassifier + Send>),
}

impl ModelRef<'_> {
    fn get(&self) -> &dyn QubitClassifier {
        match self {
            ModelRef::Borrowed(m) => *m,
            ModelRef::Shared(m) => m.as_ref(),
        }
    }
}

/// Decoder with reusable scratch space. Without a classifier it is the bare
/// union-find decoder.
pub struct Decoder<'m> {
    uf: UnionFindDecoder,
    model: Option<ModelRef<'m>>,
}

impl<'m> Decoder<'m> {
    pub fn uf(lat: &ToricLattice) -> Self {
        Self {
            uf: UnionFindDecoder::new(lat),
            model: None,
        }
    }

    pub fn two_stage(lat: &ToricLattice, model: &'m dyn QubitClassifier) -> Result<Self> {
        check_window(lat, model.l_input())?;
        Ok(Self {
            uf: UnionFindDecoder::new(lat),
            model: Some(ModelRef::Borrowed(model)),
        })
    }

    /// Like [`Decoder::two_stage`] but keeps the classifier alive itself.
    pub fn two_stage_shared(lat: &ToricLattice, model: Arc<dyn QubitClassifier + Send>) -> Result<Decoder<'static>> {
        check_window(lat, model.l_input())?;
        Ok(Decoder {
            uf: UnionFindDecoder::new(lat),
            model: Some(ModelRef::Shared(model)),
        })
    }

    pub fn kind(&self) -> DecoderKind {
        if self.model.is_some() {
            DecoderKind::MlUf
        } else {
            DecoderKind::Uf
        }
    }

    pub fn lattice(&self) -> ToricLattice {
        *self.uf.lattice()
    }

    pub fn decode(&mut self, syn: &Syndrome) -> Result<DecodeOutcome> {
        let lat = self.lattice();
        let start = Instant::now();
        let defects_before = syn.defect_count();
        let (partial, residual, applied) = match &self.model {
            Some(model) => {
                let pre = ml_preprocess(syn, model.get(), &lat)?;
                (Some(pre.partial_correction), pre.residual_syndrome, pre.applied)
            }
            None => (None, syn.clone(), 0),
        };
        let ml_done = Instant::now();
        let mut correction = self.uf.decode(&residual)?;
        let end = Instant::now();
        if let Some(partial) = &partial {
            correction.compose_assign(partial);
        }
        debug_assert_eq!(compute_syndrome(&correction, &lat).ok().as_ref(), Some(syn));
        Ok(DecodeOutcome {
            correction,
            succeeded: None,
            ml_corrections_applied: applied,
            defects_before,
            defects_after: residual.defect_count(),
            timings: StageTimings {
                ml_us: (ml_done - start).as_secs_f64() * 1e6,
                uf_us: (end - ml_done).as_secs_f64() * 1e6,
                total_us: (end - start).as_secs_f64() * 1e6,
            },
        })
    }
}

pub fn decode_two_stage<C: QubitClassifier>(syn: &Syndrome, model: &C, lat: &ToricLattice) -> Result<DecodeOutcome> {
    Decoder::two_stage(lat, model)?.decode(syn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRatePoint {
    pub p_err: f64,
    pub p_eff: f64,
    pub trials: u64,
}

impl EffectiveRatePoint {
    /// `p_err / p_eff`, undefined when nothing is left to correct.
    pub fn ratio(&self) -> Option<f64> {
        (self.p_eff > 0.0).then(|| self.p_err / self.p_eff)
    }
}

/// Residual per-qubit error rate after the classifier stage alone.
pub fn measure_effective_rate<C: QubitClassifier>(
    p_err: f64,
    model: &C,
    lat: &ToricLattice,
    trials: u64,
    seed: u64,
) -> Result<EffectiveRatePoint> {
    let noise = instance_noise(seed, lat, p_err)?;
    let residual_weight: u64 = (0..trials)
        .into_par_iter()
        .map(|s| -> Result<u64> {
            let error = sample_depolarizing(&noise, lat, s);
            let syn = compute_syndrome(&error, lat)?;
            let pre = ml_preprocess(&syn, model, lat)?;
            Ok(error.compose(&pre.partial_correction).weight() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p_eff = if trials == 0 {
        0.0
    } else {
        residual_weight as f64 / (trials as f64 * lat.n_qubits() as f64)
    };
    Ok(EffectiveRatePoint { p_err, p_eff, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Orientation;
    use crate::neural::{extract_mask, MlpConfig};

    /// Recognises the window of an isolated single-qubit error at the centre.
    struct SingleErrorOracle {
        l_input: usize,
    }

    impl QubitClassifier for SingleErrorOracle {
        fn l_input(&self) -> usize {
            self.l_input
        }

        fn classify(&self, syn: &Syndrome, lat: &ToricLattice, qubits: &[usize]) -> Result<Vec<Pauli>> {
            let l = self.l_input;
            let k = l / 2;
            let z_pattern = [k * l + k, k * l + k + 1];
            let x_pattern = [(k - 1) * l + k, k * l + k];
            qubits
                .iter()
                .map(|&q| {
                    let m = extract_mask(syn, lat, q, l)?;
                    let lit = |ch: &[i8]| ch.iter().enumerate().filter(|(_, &v)| v == -1).map(|(i, _)| i).collect::<Vec<_>>();
                    let (v, p) = (lit(m.vertex_channel()), lit(m.plaquette_channel()));
                    let z = v == z_pattern;
                    let x = p == x_pattern;
                    let z_ok = z || v.is_empty();
                    let x_ok = x || p.is_empty();
                    Ok(if z_ok && x_ok { Pauli::from_bits(x, z) } else { Pauli::I })
                })
                .collect()
        }
    }

    fn lat(l: usize) -> ToricLattice {
        ToricLattice::new(l).unwrap()
    }

    #[test]
    fn candidates_of_trivial_syndrome_empty() {
        assert!(candidate_qubits(&Syndrome::trivial(&lat(5)), &lat(5)).is_empty());
    }

    #[test]
    fn single_z_has_seven_candidates() {
        let lat = lat(7);
        let mut err = PauliFrame::identity(&lat);
        let q = lat.edge(Orientation::Horizontal, 3, 3);
        err.set(q, Pauli::Z);
        let syn = compute_syndrome(&err, &lat).unwrap();
        let c = candidate_qubits(&syn, &lat);
        assert_eq!(c.len(), 7);
        assert!(c.contains(&q));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn candidate_count_bounded_by_defects() {
        let lat = lat(9);
        let noise = crate::noise::NoiseSpec::new(0.2, 3).unwrap();
        for s in 0..100 {
            let syn = compute_syndrome(&sample_depolarizing(&noise, &lat, s), &lat).unwrap();
            assert!(candidate_qubits(&syn, &lat).len() <= 4 * syn.defect_count());
        }
    }

    #[test]
    fn trivial_syndrome_passes_through() {
        let lat = lat(7);
        let model = MlpModel::<f32>::random(MlpConfig::new(5, 1, 8).unwrap(), 1).unwrap();
        let syn = Syndrome::trivial(&lat);
        let pre = ml_preprocess(&syn, &model, &lat).unwrap();
        assert!(pre.partial_correction.is_identity());
        assert!(pre.residual_syndrome.is_trivial());
        let out = decode_two_stage(&syn, &model, &lat).unwrap();
        assert!(out.correction.is_identity());
    }

    #[test]
    fn oracle_resolves_every_single_error() {
        let lat = lat(7);
        let oracle = SingleErrorOracle { l_input: 5 };
        for q in 0..lat.n_qubits() {
            for pauli in [Pauli::X, Pauli::Y, Pauli::Z] {
                let mut err = PauliFrame::identity(&lat);
                err.set(q, pauli);
                let syn = compute_syndrome(&err, &lat).unwrap();
                let pre = ml_preprocess(&syn, &oracle, &lat).unwrap();
                assert!(pre.residual_syndrome.is_trivial(), "q={q} {pauli:?}");
                assert_eq!(pre.partial_correction, err);
            }
        }
    }

    #[test]
    fn oracle_leaves_zero_effective_rate_on_single_errors() {
        let lat = lat(7);
        let oracle = SingleErrorOracle { l_input: 5 };
        let mut residual = 0;
        for q in (0..lat.n_qubits()).step_by(5) {
            let mut err = PauliFrame::identity(&lat);
            err.set(q, Pauli::Y);
            let syn = compute_syndrome(&err, &lat).unwrap();
            let pre = ml_preprocess(&syn, &oracle, &lat).unwrap();
            residual += err.compose(&pre.partial_correction).weight();
        }
        assert_eq!(residual, 0);
    }

    #[test]
    fn zero_rate_has_zero_effective_rate() {
        let lat = lat(7);
        let model = MlpModel::<f32>::random(MlpConfig::new(3, 1, 8).unwrap(), 1).unwrap();
        let pt = measure_effective_rate(0.0, &model, &lat, 50, 1).unwrap();
        assert_eq!(pt.p_eff, 0.0);
        assert_eq!(pt.ratio(), None);
    }

    #[test]
    fn two_stage_is_syndrome_consistent_with_random_network() {
        let lat = lat(9);
        let model = MlpModel::<f32>::random(MlpConfig::new(5, 2, 16).unwrap(), 7).unwrap();
        let mut dec = Decoder::two_stage(&lat, &model).unwrap();
        let noise = crate::noise::NoiseSpec::new(0.1, 8).unwrap();
        for s in 0..300 {
            let syn = compute_syndrome(&sample_depolarizing(&noise, &lat, s), &lat).unwrap();
            let out = dec.decode(&syn).unwrap();
            assert_eq!(compute_syndrome(&out.correction, &lat).unwrap(), syn);
            assert_eq!(out.defects_after % 2, 0);
        }
    }

    #[test]
    fn identity_stub_matches_bare_uf() {
        let lat = lat(9);
        let stub = MlpModel::<f32>::identity_stub(MlpConfig::new(5, 1, 4).unwrap()).unwrap();
        let mut two = Decoder::two_stage(&lat, &stub).unwrap();
        let mut bare = Decoder::uf(&lat);
        let noise = crate::noise::NoiseSpec::new(0.12, 2).unwrap();
        for s in 0..200 {
            let syn = compute_syndrome(&sample_depolarizing(&noise, &lat, s), &lat).unwrap();
            assert_eq!(two.decode(&syn).unwrap().correction, bare.decode(&syn).unwrap().correction);
        }
    }

    #[test]
    fn window_larger_than_lattice_rejected() {
        let lat = lat(3);
        let model = MlpModel::<f32>::zeros(MlpConfig::new(5, 1, 4).unwrap()).unwrap();
        assert!(Decoder::two_stage(&lat, &model).is_err());
    }

    #[test]
    fn decoder_kind_parses() {
        assert_eq!("uf".parse::<DecoderKind>().unwrap(), DecoderKind::Uf);
        assert_eq!("ml+uf".parse::<DecoderKind>().unwrap(), DecoderKind::MlUf);
        assert!("mwpm".parse::<DecoderKind>().is_err());
    }
}
