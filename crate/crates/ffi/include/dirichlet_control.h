#ifndef DIRICHLET_CONTROL_H
#define DIRICHLET_CONTROL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DcStatus {
  DC_STATUS_OK = 0,
  DC_STATUS_NULL_POINTER = 1,
  DC_STATUS_INVALID_ARGUMENT = 2,
  DC_STATUS_INVALID_CONFIG = 3,
  DC_STATUS_SOLVER_FAILURE = 4,
  DC_STATUS_IO = 5,
  DC_STATUS_PANIC = 6,
} DcStatus;

typedef enum DcFamily {
  DC_FAMILY_GENERIC = 0,
  DC_FAMILY_SUPERCONVERGENT = 1,
} DcFamily;

typedef enum DcRateSource {
  DC_RATE_SOURCE_UNCONSTRAINED = 0,
  DC_RATE_SOURCE_UNCONSTRAINED_SPECIAL = 1,
  DC_RATE_SOURCE_CONSTRAINED = 2,
  DC_RATE_SOURCE_CONSTRAINED_FLOOR = 3,
} DcRateSource;

typedef enum DcLambdaChoice {
  DC_LAMBDA_CHOICE_LEADING = 0,
  DC_LAMBDA_CHOICE_SPECIAL = 1,
} DcLambdaChoice;

/**
 * Opaque study report.
 */
typedef struct DcReport DcReport;

/**
 * Opaque study configuration.
 */
typedef struct DcStudyConfig DcStudyConfig;

/**
 * Predicted rate `h^s |log h|^r`, or `h^s |log h|^(1/4)` when `log_quarter` is set.
 */
typedef struct DcRate {
  double s;
  uint8_t r;
  bool log_quarter;
  enum DcRateSource source;
  double lambda;
} DcRate;

/**
 * One row of a convergence study.
 */
typedef struct DcLevel {
  size_t level;
  double h;
  size_t dofs;
  size_t boundary_dofs;
  double error;
  /**
   * NaN on the first level.
   */
  double eoc;
  size_t iterations;
} DcLevel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *dc_last_error_message(void);

/**
 * Parses an angle such as `"3pi/2"` or `"4.71"`.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DcStatus dc_parse_angle(const char *text, double *out);

/**
 * Predicted control error rate for the sector with opening angle `omega1`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DcStatus dc_theoretical_rate(double omega1,
                                  bool constrained,
                                  bool special,
                                  enum DcFamily family_kind,
                                  bool assumption,
                                  struct DcRate *out);

/**
 * Creates a study configuration with default solver settings.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`dc_config_free`].
 */
enum DcStatus dc_config_new(double omega1,
                            enum DcLambdaChoice choice,
                            bool constrained,
                            enum DcFamily family_kind,
                            size_t levels,
                            struct DcStudyConfig **out);

/**
 * Parses a JSON study configuration.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DcStatus dc_config_from_json(const char *json, struct DcStudyConfig **out);

/**
 * Sets the accepted EOC interval of a configuration.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum DcStatus dc_config_set_band(struct DcStudyConfig *cfg, double lo, double hi);

/**
 * # Safety
 * `cfg` must be null or a handle from this library that has not been freed.
 */
void dc_config_free(struct DcStudyConfig *cfg);

/**
 * Runs a convergence study.
 *
 * # Safety
 * `cfg` must be a live handle and `out` a valid pointer; the report is
 * released with [`dc_report_free`].
 */
enum DcStatus dc_study_run(const struct DcStudyConfig *cfg, struct DcReport **out);

/**
 * EOC between the two finest levels, or NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double dc_report_headline_eoc(const struct DcReport *report);

/**
 * Whether the headline EOC lies in the accepted band.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
bool dc_report_verdict(const struct DcReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t dc_report_num_levels(const struct DcReport *report);

/**
 * Copies level `index` (zero-based) into `out`.
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum DcStatus dc_report_level(const struct DcReport *report, size_t index, struct DcLevel *out);

/**
 * Serialises the report as JSON (`csv = false`) or CSV (`csv = true`).
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer; the string is
 * released with [`dc_string_free`].
 */
enum DcStatus dc_report_serialize(const struct DcReport *report, bool csv, char **out);

/**
 * # Safety
 * `report` must be null or a handle from this library that has not been freed.
 */
void dc_report_free(struct DcReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void dc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIRICHLET_CONTROL_H */
