#ifndef MIAI_H
#define MIAI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MiaiStatus {
  MIAI_STATUS_OK = 0,
  MIAI_STATUS_NULL_POINTER = 1,
  MIAI_STATUS_INVALID_ARGUMENT = 2,
  MIAI_STATUS_IO = 3,
  MIAI_STATUS_PARSE = 4,
  MIAI_STATUS_SCHEMA = 5,
  MIAI_STATUS_CAPABILITY = 6,
  MIAI_STATUS_UNSUPPORTED = 7,
  MIAI_STATUS_FORMAT = 8,
  MIAI_STATUS_TRAINING = 9,
  MIAI_STATUS_EMPTY_ATTACK_DATASET = 10,
  MIAI_STATUS_CONFIG = 11,
  MIAI_STATUS_PANIC = 12,
} MiaiStatus;

typedef struct MiaiDataset MiaiDataset;

typedef struct MiaiReport MiaiReport;

typedef struct MiaiTarget MiaiTarget;

/*
 Scores of an attack (or of raw outcome counts) with a binary positive class.
 Rates are fractions in [0, 1].
 */
typedef struct MiaiMetrics {
  uint64_t tp;
  uint64_t tn;
  uint64_t fp;
  uint64_t fn_;
  double precision;
  double recall;
  double accuracy;
  double f1;
  double fpr;
  double g_mean;
  double mcc;
  /*
   Target queries spent by the attack.
   */
  uint64_t queries;
  /*
   Records per CSMIA case; zero for attacks without cases.
   */
  uint64_t case1;
  uint64_t case2;
  uint64_t case3;
} MiaiMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *miai_last_error(void);

/*
 Releases a string returned by this library.

 # Safety
 `s` must be NULL or a string returned by this library that was not yet freed.
 */
void miai_string_free(char *s);

/*
 Loads a CSV file validated against a TOML attribute schema.

 # Safety
 Paths must be NUL-terminated strings; `out` must be writable.
 */
enum MiaiStatus miai_dataset_load(const char *csv_path,
                                  const char *schema_path,
                                  struct MiaiDataset **out);

/*
 # Safety
 `ds` must be a live dataset handle; `out` must be writable.
 */
enum MiaiStatus miai_dataset_len(const struct MiaiDataset *ds, size_t *out);

/*
 Shuffles with `seed` and splits into training and holdout sets.

 # Safety
 `ds` must be a live dataset handle; both outputs must be writable.
 */
enum MiaiStatus miai_dataset_split(const struct MiaiDataset *ds,
                                   double train_fraction,
                                   uint64_t seed,
                                   struct MiaiDataset **out_train,
                                   struct MiaiDataset **out_holdout);

/*
 # Safety
 `ds` must be NULL or a dataset handle that was not yet freed.
 */
void miai_dataset_free(struct MiaiDataset *ds);

/*
 Trains a target model of `kind` (`decision_tree`, `random_forest` or `mlp`)
 with default hyperparameters on `train`.

 # Safety
 `train` must be a live dataset handle, `kind` a NUL-terminated string and `out` writable.
 */
enum MiaiStatus miai_target_train(const struct MiaiDataset *train,
                                  const char *kind,
                                  uint64_t seed,
                                  bool exposes_confidence,
                                  struct MiaiTarget **out);

/*
 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum MiaiStatus miai_target_load(const char *path, struct MiaiTarget **out);

/*
 # Safety
 `target` must be a live target handle and `path` a NUL-terminated string.
 */
enum MiaiStatus miai_target_save(const struct MiaiTarget *target, const char *path);

/*
 Total queries that attacks have made against this target handle.

 # Safety
 `target` must be a live target handle; `out` must be writable.
 */
enum MiaiStatus miai_target_query_count(const struct MiaiTarget *target, uint64_t *out);

/*
 # Safety
 `target` must be NULL or a target handle that was not yet freed.
 */
void miai_target_free(struct MiaiTarget *target);

/*
 Runs one attack against `target` over the records of `ds`.

 `attack` is one of `naive`, `random_guess`, `fjrmia`, `csmia`,
 `csmia_partial` or `lomia`. `unknown` is a comma-separated list of
 nonsensitive attributes the adversary lacks, or NULL. `positive` names the
 positive sensitive value, or NULL for the first domain value. The marginal
 prior and the target's confusion matrix are estimated on `reference`
 (NULL means `ds`).

 # Safety
 Handles must be live (`reference` may be NULL), strings NUL-terminated
 (optional ones may be NULL) and `out` writable.
 */
enum MiaiStatus miai_attack_run(struct MiaiTarget *target,
                                const struct MiaiDataset *ds,
                                const struct MiaiDataset *reference,
                                const char *attack,
                                const char *sensitive,
                                const char *unknown,
                                const char *positive,
                                uint64_t seed,
                                struct MiaiReport **out);

/*
 # Safety
 `report` must be a live report handle; `out` must be writable.
 */
enum MiaiStatus miai_report_metrics(const struct MiaiReport *report, struct MiaiMetrics *out);

/*
 Number of per-record predictions in the report.

 # Safety
 `report` must be a live report handle; `out` must be writable.
 */
enum MiaiStatus miai_report_len(const struct MiaiReport *report, size_t *out);

/*
 Predicted domain index of the sensitive attribute for record `index`.

 # Safety
 `report` must be a live report handle; `out` must be writable.
 */
enum MiaiStatus miai_report_prediction(const struct MiaiReport *report,
                                       size_t index,
                                       uint32_t *out);

/*
 The full evaluation and predictions as JSON. Free with [`miai_string_free`].

 # Safety
 `report` must be a live report handle; `out` must be writable.
 */
enum MiaiStatus miai_report_to_json(const struct MiaiReport *report, char **out);

/*
 # Safety
 `report` must be NULL or a report handle that was not yet freed.
 */
void miai_report_free(struct MiaiReport *report);

/*
 Metrics from raw outcome counts; `queries` and the case counts are zero.

 # Safety
 `out` must be writable.
 */
enum MiaiStatus miai_metrics_from_counts(uint64_t tp,
                                         uint64_t tn,
                                         uint64_t fp,
                                         uint64_t fn_,
                                         struct MiaiMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIAI_H */
