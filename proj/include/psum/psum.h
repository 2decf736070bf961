#ifndef PSUM_H
#define PSUM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(PSUM_BUILDING_LIBRARY)
#define PSUM_API __attribute__((visibility("default")))
#else
#define PSUM_API
#endif

typedef enum psum_status {
  PSUM_OK = 0,
  PSUM_E_INVALID_ARGUMENT = 1,
  PSUM_E_LENGTH_MISMATCH = 2,
  PSUM_E_IO = 3,
  PSUM_E_FORMAT = 4,
  PSUM_E_AUTH = 5,
  PSUM_E_OVERSIZE = 6,
  PSUM_E_NONCE_REUSE = 7,
  PSUM_E_PROTOCOL_ABORT = 8,
  PSUM_E_CONFIG = 9,
  PSUM_E_BUFFER_TOO_SMALL = 10,
  PSUM_E_INTERNAL = 99
} psum_status;

typedef struct psum_codebook psum_codebook;
typedef struct psum_content psum_content;
typedef struct psum_report psum_report;

/* Message of the last failed call on this thread; never NULL. */
PSUM_API const char* psum_last_error(void);
PSUM_API const char* psum_status_string(psum_status s);
PSUM_API const char* psum_version(void);

/* ---- codes ---- */

PSUM_API psum_status psum_code_length(uint64_t num_users, double error_prob, size_t* out_length);

/* bias_path may be NULL for the default arcsine bias. */
PSUM_API psum_status psum_codebook_generate(uint32_t num_users, uint16_t coalition_bound, double error_prob,
                                            uint64_t seed, const char* bias_path, psum_codebook** out);
PSUM_API psum_status psum_codebook_load(const char* path, psum_codebook** out);
PSUM_API psum_status psum_codebook_save(const psum_codebook* book, const char* path);
PSUM_API void psum_codebook_free(psum_codebook* book);
PSUM_API size_t psum_codebook_users(const psum_codebook* book);
PSUM_API size_t psum_codebook_length(const psum_codebook* book);
/* Copies row `user` (length psum_codebook_length) into bits. */
PSUM_API psum_status psum_codebook_row(const psum_codebook* book, size_t user, uint8_t* bits, size_t capacity);

/* pc entries are 0, 1 or -1 (erased). threshold <= 0 selects calibration.
   accused receives 0-based user indices; *count is set even when capacity is short. */
PSUM_API psum_status psum_trace(const psum_codebook* book, const int8_t* pc, size_t length, double threshold,
                                size_t* accused, size_t capacity, size_t* count, double* used_threshold);

/* ---- content ---- */

PSUM_API psum_status psum_content_synthetic_audio(uint64_t seed, double seconds, uint32_t sample_rate,
                                                  uint32_t channels, psum_content** out);
PSUM_API psum_status psum_content_synthetic_frames(uint64_t seed, uint32_t frames, uint32_t width, uint32_t height,
                                                   psum_content** out);
/* WAV file or frame directory. */
PSUM_API psum_status psum_content_load(const char* path, psum_content** out);
PSUM_API psum_status psum_content_save(const psum_content* content, const char* path);
PSUM_API void psum_content_free(psum_content* content);
PSUM_API int psum_content_is_audio(const psum_content* content);
PSUM_API psum_status psum_content_psnr(const psum_content* a, const psum_content* b, double* out);

/* ---- partition / embed / extract ---- */

/* Writes the base file and the supplementary file (WAV for audio, ZIP for frames). */
PSUM_API psum_status psum_partition(const psum_content* content, int levels, double delta, size_t code_length,
                                    const char* base_path, const char* sf_path);
/* Fingerprinted content from the two files and a bit string. */
PSUM_API psum_status psum_embed(const char* base_path, const char* sf_path, const uint8_t* bits, size_t length,
                                psum_content** out);
PSUM_API psum_status psum_extract(const psum_content* content, const char* base_path, int normalize_gain,
                                  uint8_t* bits, size_t capacity, size_t* length);

/* ---- attacks ---- */

/* spec as in "awgn:30", "scale:1.1", "requantize:16", "lowpass:0.45". */
PSUM_API psum_status psum_attack(const psum_content* content, const char* spec, uint64_t seed, psum_content** out);

/* ---- scenario ---- */

/* seed_override / attacks_override are ignored when has_seed is 0 / attacks is NULL.
   attacks is a comma-separated list. */
PSUM_API psum_status psum_scenario_run(const char* config_path, int has_seed, uint64_t seed_override,
                                       const char* attacks, int verbose, int deterministic, psum_report** out);
PSUM_API int psum_report_passed(const psum_report* report);
PSUM_API psum_status psum_report_write(const psum_report* report, const char* out_dir);
/* Summary lines "PASS name" / "FAIL name: detail"; valid until the report is freed. */
PSUM_API const char* psum_report_summary(const psum_report* report);
PSUM_API void psum_report_free(psum_report* report);
/* Metrics CSV rebuilt from a run directory; free with psum_string_free. */
PSUM_API psum_status psum_report_csv(const char* run_dir, char** out);
PSUM_API void psum_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
