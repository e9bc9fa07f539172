#ifndef COLLABDYN_H
#define COLLABDYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_ARGUMENT = 1,
  CD_STATUS_INVALID_ARGUMENT = 2,
  CD_STATUS_IO = 3,
  CD_STATUS_OUT_OF_RANGE = 4,
  CD_STATUS_NOT_FOUND = 5,
  CD_STATUS_UNDEFINED = 6,
  CD_STATUS_UNFITTABLE = 7,
  CD_STATUS_CORRUPT = 8,
  CD_STATUS_EMPTY_CORPUS = 9,
  CD_STATUS_BUFFER_TOO_SMALL = 10,
  CD_STATUS_PANIC = 11,
} CdStatus;

typedef enum CdBinScheme {
  CD_BIN_SCHEME_QUARTER = 0,
  CD_BIN_SCHEME_MONTH = 1,
  CD_BIN_SCHEME_YEAR = 2,
} CdBinScheme;

typedef enum CdCohortSide {
  CD_COHORT_SIDE_TOP = 0,
  CD_COHORT_SIDE_TAIL = 1,
} CdCohortSide;

typedef enum CdCollabMean {
  CD_COLLAB_MEAN_PER_MEMBER = 0,
  CD_COLLAB_MEAN_POOLED = 1,
} CdCollabMean;

typedef enum CdNewcomerCount {
  CD_NEWCOMER_COUNT_EDGES = 0,
  CD_NEWCOMER_COUNT_DISTINCT = 1,
} CdNewcomerCount;

typedef enum CdPairCount {
  CD_PAIR_COUNT_COMBINATIONS = 0,
  CD_PAIR_COUNT_LITERAL = 1,
} CdPairCount;

/**
 * Newcomer attachment table for one bin pair.
 */
typedef struct CdAttachmentTable CdAttachmentTable;

/**
 * Internal link table for one bin pair, with its degree-product collapse.
 */
typedef struct CdPairTable CdPairTable;

/**
 * Cumulative snapshot series.
 */
typedef struct CdSeries CdSeries;

typedef struct CdCohortStats {
  size_t size;
  double mean_centrality;
  /**
   * Meaningful only when `has_collab_mean` is true.
   */
  double collab_mean_centrality;
  bool has_collab_mean;
} CdCohortStats;

typedef struct CdSlopeFit {
  double slope;
  double intercept;
  double r_squared;
  size_t n_points;
} CdSlopeFit;

typedef struct CdAttachmentRow {
  uint64_t k;
  uint64_t events;
  uint64_t population;
  double probability;
} CdAttachmentRow;

typedef struct CdPairRow {
  uint64_t ki;
  uint64_t kj;
  uint64_t links;
  uint64_t pairs;
  double probability;
} CdPairRow;

typedef struct CdCollapsedRow {
  uint64_t x;
  uint64_t links;
  uint64_t pairs;
  double probability;
} CdCollapsedRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next library call on the same thread.
 */
const char *cd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cd_version(void);

/**
 * Ingests a publications file (and optional id map, may be null) and builds the series.
 */
enum CdStatus cd_series_from_publications(const char *pubs_path,
                                          const char *idmap_path,
                                          enum CdBinScheme scheme,
                                          bool drop_unlinked,
                                          struct CdSeries **series_out);

/**
 * Loads a series written by `cd_series_save` or `collabdyn snapshots`.
 */
enum CdStatus cd_series_load(const char *path, struct CdSeries **series_out);

enum CdStatus cd_series_save(const struct CdSeries *series, const char *path);

/**
 * Releases a series. Null is ignored.
 */
void cd_series_free(struct CdSeries *series);

enum CdStatus cd_series_bin_count(const struct CdSeries *series, size_t *count);

enum CdStatus cd_series_author_count(const struct CdSeries *series, size_t *count);

enum CdStatus cd_series_edge_count(const struct CdSeries *series, size_t *count);

/**
 * Copies the label of `bin` into `buf` as a NUL-terminated string. `needed`
 * (may be null) receives the buffer size required, terminator included.
 */
enum CdStatus cd_series_bin_label(const struct CdSeries *series,
                                  size_t bin,
                                  char *buf,
                                  size_t capacity,
                                  size_t *needed);

/**
 * Cumulative node and link counts at `bin`.
 */
enum CdStatus cd_series_counts_at(const struct CdSeries *series,
                                  size_t bin,
                                  uint64_t *nodes,
                                  uint64_t *links);

enum CdStatus cd_series_degree_at(const struct CdSeries *series,
                                  size_t bin,
                                  const char *author,
                                  uint32_t *degree);

/**
 * Degree centrality `k/(n-1)` of `author` at `bin`.
 */
enum CdStatus cd_series_centrality_at(const struct CdSeries *series,
                                      size_t bin,
                                      const char *author,
                                      double *centrality);

enum CdStatus cd_series_cohort_stats(const struct CdSeries *series,
                                     size_t bin,
                                     double fraction,
                                     enum CdCohortSide side,
                                     bool exclude_isolated,
                                     enum CdCollabMean mode,
                                     struct CdCohortStats *stats);

/**
 * Log-binned degree-distribution exponent at `bin`.
 */
enum CdStatus cd_series_fit_degree_exponent(const struct CdSeries *series,
                                            size_t bin,
                                            double base,
                                            uint64_t min_count,
                                            struct CdSlopeFit *fit);

/**
 * Newcomer attachment table over the half-open interval `(t1, t2]`.
 */
enum CdStatus cd_attachment_table_new(const struct CdSeries *series,
                                      size_t t1,
                                      size_t t2,
                                      enum CdNewcomerCount mode,
                                      struct CdAttachmentTable **table_out);

void cd_attachment_table_free(struct CdAttachmentTable *table);

enum CdStatus cd_attachment_table_len(const struct CdAttachmentTable *table, size_t *len);

enum CdStatus cd_attachment_table_row(const struct CdAttachmentTable *table,
                                      size_t index,
                                      struct CdAttachmentRow *row);

enum CdStatus cd_attachment_table_fit(const struct CdAttachmentTable *table,
                                      double base,
                                      uint64_t min_count,
                                      struct CdSlopeFit *fit);

/**
 * Internal link table over `(t1, t2]`.
 */
enum CdStatus cd_pair_table_new(const struct CdSeries *series,
                                size_t t1,
                                size_t t2,
                                enum CdPairCount count,
                                bool exclude_existing,
                                struct CdPairTable **table_out);

void cd_pair_table_free(struct CdPairTable *table);

enum CdStatus cd_pair_table_len(const struct CdPairTable *table, size_t *len);

enum CdStatus cd_pair_table_row(const struct CdPairTable *table,
                                size_t index,
                                struct CdPairRow *row);

enum CdStatus cd_pair_table_collapsed_len(const struct CdPairTable *table, size_t *len);

enum CdStatus cd_pair_table_collapsed_row(const struct CdPairTable *table,
                                          size_t index,
                                          struct CdCollapsedRow *row);

/**
 * Slope of the collapsed table, `P` against the degree product.
 */
enum CdStatus cd_pair_table_fit(const struct CdPairTable *table,
                                double base,
                                uint64_t min_count,
                                struct CdSlopeFit *fit);

/**
 * Least-squares fit of `log10 y` on `log10 x` over `n` already binned points.
 */
enum CdStatus cd_fit_slope(const double *xs, const double *ys, size_t n, struct CdSlopeFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLABDYN_H */
