//! C interface to the dcqec decoders.
//!
//! Objects are opaque handles created by `*_new`/`*_load` functions and
//! released by the matching `*_free`. Every fallible function returns a
//! `DcqecStatus`; on failure, `dcqec_last_error` describes the problem
//! (per thread, valid until the next failing call on that thread).
//!
//! Pauli frames cross the boundary as one byte per qubit: 0 = I, 1 = X,
//! 2 = Y, 3 = Z, qubits in edge order (`orientation * L^2 + row * L + col`,
//! horizontal edges first). Syndromes are one byte per vertex or plaquette,
//! nonzero meaning a defect.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;
use std::sync::Arc;

use dcqec::neural::load_model;
use dcqec::pipeline::QubitClassifier;
use dcqec::{
    compute_syndrome, decode_succeeded, sample_depolarizing, BitPlane, Decoder, Error, MlpModel, NoiseSpec, Pauli,
    PauliFrame, Syndrome, ToricLattice,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcqecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SizeMismatch = 3,
    /// The syndrome has no consistent correction (odd defect count).
    InvalidSyndrome = 4,
    ModelFormat = 5,
    Io = 6,
    /// A bug inside the library; the handle involved should be freed.
    Internal = 7,
}

/// Periodic L x L lattice.
pub struct DcqecLattice {
    lat: ToricLattice,
}

/// Trained classifier loaded from a model file.
pub struct DcqecModel {
    model: Arc<MlpModel<f32>>,
}

/// Decoder with its scratch space. Not safe to use from two threads at once.
pub struct DcqecDecoder {
    inner: Decoder<'static>,
}

/// Per-call diagnostics filled by `dcqec_decode`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DcqecDecodeInfo {
    pub ml_corrections_applied: usize,
    pub defects_before: usize,
    pub defects_after: usize,
    pub ml_us: f64,
    pub uf_us: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> DcqecStatus {
    match e {
        Error::InvalidLatticeSize(_) | Error::InvalidArgument(_) | Error::CapExceeded { .. } => {
            DcqecStatus::InvalidArgument
        }
        Error::SizeMismatch { .. } => DcqecStatus::SizeMismatch,
        Error::NontrivialSyndrome { .. } | Error::OddDefectCount(_) => DcqecStatus::InvalidSyndrome,
        Error::ModelFormat(_) => DcqecStatus::ModelFormat,
        Error::Io(_) => DcqecStatus::Io,
        Error::NonFiniteLoss { .. } | Error::DegenerateFit(_) => DcqecStatus::Internal,
    }
}

struct Fail(DcqecStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DcqecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DcqecStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DcqecStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(DcqecStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const u8, len: usize, expected: usize, what: &'static str) -> Result<&'a [u8], Fail> {
    if len != expected {
        return Err(Error::SizeMismatch {
            what,
            expected,
            actual: len,
        }
        .into());
    }
    if p.is_null() {
        return if len == 0 { Ok(&[]) } else { Err(null(what)) };
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut u8, len: usize, expected: usize, what: &'static str) -> Result<&'a mut [u8], Fail> {
    if len != expected {
        return Err(Error::SizeMismatch {
            what,
            expected,
            actual: len,
        }
        .into());
    }
    if p.is_null() {
        return if len == 0 { Ok(&mut []) } else { Err(null(what)) };
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

fn frame_from_bytes(bytes: &[u8]) -> Result<PauliFrame, Fail> {
    let mut f = PauliFrame::identity_len(bytes.len());
    for (q, &b) in bytes.iter().enumerate() {
        let p = Pauli::from_index(b as usize)
            .ok_or_else(|| Fail(DcqecStatus::InvalidArgument, format!("qubit {q}: Pauli code {b} is not 0..=3")))?;
        f.set(q, p);
    }
    Ok(f)
}

fn frame_to_bytes(f: &PauliFrame, out: &mut [u8]) {
    for (q, o) in out.iter_mut().enumerate() {
        *o = f.get(q).index() as u8;
    }
}

fn plane_from_bytes(bytes: &[u8]) -> BitPlane {
    BitPlane::from_indices(bytes.len(), bytes.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i))
}

fn plane_to_bytes(p: &BitPlane, out: &mut [u8]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from(p.get(i));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dcqec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread ("" if none).
#[no_mangle]
pub extern "C" fn dcqec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn dcqec_lattice_new(size: usize, out: *mut *mut DcqecLattice) -> DcqecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let lat = ToricLattice::new(size)?;
        *out = Box::into_raw(Box::new(DcqecLattice { lat }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcqec_lattice_free(lat: *mut DcqecLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

/// Number of qubits (edges), 2 L^2; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn dcqec_lattice_n_qubits(lat: *const DcqecLattice) -> usize {
    lat.as_ref().map_or(0, |l| l.lat.n_qubits())
}

/// Number of vertices, equal to the number of plaquettes (L^2).
#[no_mangle]
pub unsafe extern "C" fn dcqec_lattice_n_sites(lat: *const DcqecLattice) -> usize {
    lat.as_ref().map_or(0, |l| l.lat.n_vertices())
}

/// Depolarizing sample: stream `stream` of generator `seed`. Writes
/// `n_qubits` Pauli codes to `paulis`.
#[no_mangle]
pub unsafe extern "C" fn dcqec_sample_depolarizing(
    lat: *const DcqecLattice,
    p_err: f64,
    seed: u64,
    stream: u64,
    paulis: *mut u8,
    n_qubits: usize,
) -> DcqecStatus {
    guard(|| {
        let lat = &handle(lat, "lattice")?.lat;
        let out = output(paulis, n_qubits, lat.n_qubits(), "paulis")?;
        let noise = NoiseSpec::new(p_err, seed)?;
        frame_to_bytes(&sample_depolarizing(&noise, lat, stream), out);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcqec_compute_syndrome(
    lat: *const DcqecLattice,
    paulis: *const u8,
    n_qubits: usize,
    vertex_out: *mut u8,
    plaquette_out: *mut u8,
    n_sites: usize,
) -> DcqecStatus {
    guard(|| {
        let lat = &handle(lat, "lattice")?.lat;
        let frame = frame_from_bytes(input(paulis, n_qubits, lat.n_qubits(), "paulis")?)?;
        let v = output(vertex_out, n_sites, lat.n_vertices(), "vertex_out")?;
        let p = output(plaquette_out, n_sites, lat.n_plaquettes(), "plaquette_out")?;
        let syn = compute_syndrome(&frame, lat)?;
        plane_to_bytes(&syn.vertex, v);
        plane_to_bytes(&syn.plaquette, p);
        Ok(())
    })
}

/// Writes 1 to `*ok` if `correction` undoes `error` up to stabilizers, else 0.
#[no_mangle]
pub unsafe extern "C" fn dcqec_decode_succeeded(
    lat: *const DcqecLattice,
    error: *const u8,
    correction: *const u8,
    n_qubits: usize,
    ok: *mut i32,
) -> DcqecStatus {
    guard(|| {
        let lat = &handle(lat, "lattice")?.lat;
        let e = frame_from_bytes(input(error, n_qubits, lat.n_qubits(), "error")?)?;
        let c = frame_from_bytes(input(correction, n_qubits, lat.n_qubits(), "correction")?)?;
        if ok.is_null() {
            return Err(null("ok"));
        }
        *ok = i32::from(decode_succeeded(&e, &c, lat)?);
        Ok(())
    })
}

/// Loads a model file (UTF-8 path).
#[no_mangle]
pub unsafe extern "C" fn dcqec_model_load(path: *const c_char, out: *mut *mut DcqecModel) -> DcqecStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(DcqecStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let model = load_model::<f32>(path)?;
        *out = Box::into_raw(Box::new(DcqecModel { model: Arc::new(model) }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcqec_model_free(model: *mut DcqecModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Window side the model reads; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn dcqec_model_l_input(model: *const DcqecModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.l_input())
}

/// Bare union-find decoder.
#[no_mangle]
pub unsafe extern "C" fn dcqec_decoder_new_uf(lat: *const DcqecLattice, out: *mut *mut DcqecDecoder) -> DcqecStatus {
    guard(|| {
        let lat = &handle(lat, "lattice")?.lat;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(DcqecDecoder {
            inner: Decoder::uf(lat),
        }));
        Ok(())
    })
}

/// Classifier followed by union-find. The decoder keeps its own reference
/// to the model, so the model handle may be freed first.
#[no_mangle]
pub unsafe extern "C" fn dcqec_decoder_new_two_stage(
    lat: *const DcqecLattice,
    model: *const DcqecModel,
    out: *mut *mut DcqecDecoder,
) -> DcqecStatus {
    guard(|| {
        let lat = &handle(lat, "lattice")?.lat;
        let model = handle(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let shared: Arc<dyn QubitClassifier + Send> = model.model.clone();
        *out = Box::into_raw(Box::new(DcqecDecoder {
            inner: Decoder::two_stage_shared(lat, shared)?,
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dcqec_decoder_free(dec: *mut DcqecDecoder) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Decodes a syndrome into `correction_out` (`n_qubits` Pauli codes).
/// `info` may be null.
#[no_mangle]
pub unsafe extern "C" fn dcqec_decode(
    dec: *mut DcqecDecoder,
    vertex: *const u8,
    plaquette: *const u8,
    n_sites: usize,
    correction_out: *mut u8,
    n_qubits: usize,
    info: *mut DcqecDecodeInfo,
) -> DcqecStatus {
    guard(|| {
        let dec = dec.as_mut().ok_or_else(|| null("decoder"))?;
        let lat = dec.inner.lattice();
        let syn = Syndrome {
            vertex: plane_from_bytes(input(vertex, n_sites, lat.n_vertices(), "vertex")?),
            plaquette: plane_from_bytes(input(plaquette, n_sites, lat.n_plaquettes(), "plaquette")?),
        };
        let out = output(correction_out, n_qubits, lat.n_qubits(), "correction_out")?;
        let result = dec.inner.decode(&syn)?;
        frame_to_bytes(&result.correction, out);
        if let Some(info) = info.as_mut() {
            *info = DcqecDecodeInfo {
                ml_corrections_applied: result.ml_corrections_applied,
                defects_before: result.defects_before,
                defects_after: result.defects_after,
                ml_us: result.timings.ml_us,
                uf_us: result.timings.uf_us,
            };
        }
        Ok(())
    })
}
