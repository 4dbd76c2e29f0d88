#ifndef DCQEC_H
#define DCQEC_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum DcqecStatus {
  DCQEC_STATUS_OK = 0,
  DCQEC_STATUS_NULL_POINTER = 1,
  DCQEC_STATUS_INVALID_ARGUMENT = 2,
  DCQEC_STATUS_SIZE_MISMATCH = 3,
  /*
   The syndrome has no consistent correction (odd defect count).
   */
  DCQEC_STATUS_INVALID_SYNDROME = 4,
  DCQEC_STATUS_MODEL_FORMAT = 5,
  DCQEC_STATUS_IO = 6,
  /*
   A bug inside the library; the handle involved should be freed.
   */
  DCQEC_STATUS_INTERNAL = 7,
} DcqecStatus;

/*
 Decoder with its scratch space. Not safe to use from two threads at once.
 */
typedef struct DcqecDecoder DcqecDecoder;

/*
 Periodic L x L lattice.
 */
typedef struct DcqecLattice DcqecLattice;

/*
 Trained classifier loaded from a model file.
 */
typedef struct DcqecModel DcqecModel;

/*
 Per-call diagnostics filled by `dcqec_decode`.
 */
typedef struct DcqecDecodeInfo {
  size_t ml_corrections_applied;
  size_t defects_before;
  size_t defects_after;
  double ml_us;
  double uf_us;
} DcqecDecodeInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *dcqec_version(void);

/*
 Message for the most recent failure on this thread ("" if none).
 */
const char *dcqec_last_error(void);

enum DcqecStatus dcqec_lattice_new(size_t size, struct DcqecLattice **out);

void dcqec_lattice_free(struct DcqecLattice *lat);

/*
 Number of qubits (edges), 2 L^2; 0 for a null handle.
 */
size_t dcqec_lattice_n_qubits(const struct DcqecLattice *lat);

/*
 Number of vertices, equal to the number of plaquettes (L^2).
 */
size_t dcqec_lattice_n_sites(const struct DcqecLattice *lat);

/*
 Depolarizing sample: stream `stream` of generator `seed`. Writes
 `n_qubits` Pauli codes to `paulis`.
 */
enum DcqecStatus dcqec_sample_depolarizing(const struct DcqecLattice *lat,
                                           double p_err,
                                           uint64_t seed,
                                           uint64_t stream,
                                           uint8_t *paulis,
                                           size_t n_qubits);

enum DcqecStatus dcqec_compute_syndrome(const struct DcqecLattice *lat,
                                        const uint8_t *paulis,
                                        size_t n_qubits,
                                        uint8_t *vertex_out,
                                        uint8_t *plaquette_out,
                                        size_t n_sites);

/*
 Writes 1 to `*ok` if `correction` undoes `error` up to stabilizers, else 0.
 */
enum DcqecStatus dcqec_decode_succeeded(const struct DcqecLattice *lat,
                                        const uint8_t *error,
                                        const uint8_t *correction,
                                        size_t n_qubits,
                                        int32_t *ok);

/*
 Loads a model file (UTF-8 path).
 */
enum DcqecStatus dcqec_model_load(const char *path, struct DcqecModel **out);

void dcqec_model_free(struct DcqecModel *model);

/*
 Window side the model reads; 0 for a null handle.
 */
size_t dcqec_model_l_input(const struct DcqecModel *model);

/*
 Bare union-find decoder.
 */
enum DcqecStatus dcqec_decoder_new_uf(const struct DcqecLattice *lat, struct DcqecDecoder **out);

/*
 Classifier followed by union-find. The decoder keeps its own reference
 to the model, so the model handle may be freed first.
 */
enum DcqecStatus dcqec_decoder_new_two_stage(const struct DcqecLattice *lat,
                                             const struct DcqecModel *model,
                                             struct DcqecDecoder **out);

void dcqec_decoder_free(struct DcqecDecoder *dec);

/*
 Decodes a syndrome into `correction_out` (`n_qubits` Pauli codes).
 `info` may be null.
 */
enum DcqecStatus dcqec_decode(struct DcqecDecoder *dec,
                              const uint8_t *vertex,
                              const uint8_t *plaquette,
                              size_t n_sites,
                              uint8_t *correction_out,
                              size_t n_qubits,
                              struct DcqecDecodeInfo *info);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCQEC_H */
