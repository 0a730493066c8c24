#ifndef GEODEX_H
#define GEODEX_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GeodexMetric {
  GEODEX_METRIC_COSINE = 0,
  GEODEX_METRIC_L2 = 1,
} GeodexMetric;

typedef enum GeodexStatus {
  GEODEX_STATUS_OK = 0,
  GEODEX_STATUS_NULL_POINTER = 1,
  GEODEX_STATUS_INVALID_ARGUMENT = 2,
  GEODEX_STATUS_BUFFER_TOO_SMALL = 3,
  GEODEX_STATUS_GEO = 10,
  GEODEX_STATUS_FORMAT = 11,
  GEODEX_STATUS_REGISTRY = 12,
  GEODEX_STATUS_INDEX = 13,
  GEODEX_STATUS_EMBED = 14,
  GEODEX_STATUS_IO = 15,
  GEODEX_STATUS_PANIC = 99,
} GeodexStatus;

/**
 * Dense vector collection for exact top-k search.
 */
typedef struct GeodexCorpus GeodexCorpus;

/**
 * Static spatiotemporal R-tree.
 */
typedef struct GeodexIndex GeodexIndex;

/**
 * Decoded raster tile.
 */
typedef struct GeodexTile GeodexTile;

/**
 * Plain-data view of a tile header.
 */
typedef struct GeodexTileInfo {
  uint32_t width;
  uint32_t height;
  uint16_t dims;
  /**
   * 1 = int8, 2 = uint16, 3 = float32.
   */
  uint8_t dtype;
  /**
   * `a, b, c, d, e, f` with `x = a·col + b·row + c`, `y = d·col + e·row + f`.
   */
  double transform[6];
  uint32_t epsg;
  int64_t t_start;
  int64_t t_end;
  double bbox[4];
  /**
   * False for identity dequantization, in which case scale and zero point are 1 and 0.
   */
  bool quant_affine;
  double quant_scale;
  double quant_zero_point;
} GeodexTileInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread; do not free.
 */
const char *geodex_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *geodex_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GeodexStatus geodex_tile_read_store(const char *path, struct GeodexTile **out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
enum GeodexStatus geodex_tile_decode_store(const uint8_t *bytes,
                                           size_t len,
                                           struct GeodexTile **out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
enum GeodexStatus geodex_tile_parse_geotiff(const uint8_t *bytes,
                                            size_t len,
                                            struct GeodexTile **out);

/**
 * # Safety
 * `tile` must be a live handle; `path` a NUL-terminated string.
 */
enum GeodexStatus geodex_tile_write_store(const struct GeodexTile *tile, const char *path);

/**
 * North-up copy of `tile` in a new handle.
 *
 * # Safety
 * `tile` must be a live handle; `out` must be writable.
 */
enum GeodexStatus geodex_tile_normalize_orientation(const struct GeodexTile *tile,
                                                    struct GeodexTile **out);

/**
 * # Safety
 * `tile` must be a live handle; `info` must be writable.
 */
enum GeodexStatus geodex_tile_info(const struct GeodexTile *tile, struct GeodexTileInfo *info);

/**
 * Dequantized embedding of the pixel containing world point `(x, y)`.
 *
 * # Safety
 * `tile` must be a live handle; `out` must have room for `cap` floats.
 */
enum GeodexStatus geodex_tile_pixel_vector(const struct GeodexTile *tile,
                                           double x,
                                           double y,
                                           float *out,
                                           size_t cap,
                                           size_t *len_out);

/**
 * # Safety
 * `tile` must be null or a handle not yet freed.
 */
void geodex_tile_free(struct GeodexTile *tile);

/**
 * # Safety
 * `transform` must point to 6 doubles; `x` and `y` must be writable.
 */
enum GeodexStatus geodex_pixel_to_world(const double *transform,
                                        double row,
                                        double col,
                                        double *x,
                                        double *y);

/**
 * # Safety
 * `transform` must point to 6 doubles; `row` and `col` must be writable.
 */
enum GeodexStatus geodex_world_to_pixel(const double *transform,
                                        double x,
                                        double y,
                                        double *row,
                                        double *col);

/**
 * # Safety
 * `x` and `y` must be writable.
 */
enum GeodexStatus geodex_project_4326_to_3857(double lon, double lat, double *x, double *y);

/**
 * # Safety
 * `lon` and `lat` must be writable.
 */
enum GeodexStatus geodex_project_3857_to_4326(double x, double y, double *lon, double *lat);

/**
 * Builds an index over `n` entries: `bboxes` holds `4n` doubles
 * (`minx, miny, maxx, maxy`), `times` holds `2n` `[start, end)` pairs.
 *
 * # Safety
 * Arrays must hold `n` ids, `4n` doubles and `2n` times; `out` must be writable.
 */
enum GeodexStatus geodex_index_build(const uint64_t *ids,
                                     const double *bboxes,
                                     const int64_t *times,
                                     size_t n,
                                     struct GeodexIndex **out);

/**
 * Ids of entries intersecting the query, ascending.
 *
 * # Safety
 * `index` must be a live handle, `bbox` 4 doubles, `out` room for `cap` ids.
 */
enum GeodexStatus geodex_index_query(const struct GeodexIndex *index,
                                     const double *bbox,
                                     int64_t t_start,
                                     int64_t t_end,
                                     uint64_t *out,
                                     size_t cap,
                                     size_t *len_out);

/**
 * # Safety
 * `index` must be null or a handle not yet freed.
 */
void geodex_index_free(struct GeodexIndex *index);

/**
 * # Safety
 * `out` must be writable.
 */
enum GeodexStatus geodex_corpus_new(size_t dims, struct GeodexCorpus **out);

/**
 * # Safety
 * `corpus` must be a live handle; `vector` must hold `dims` floats.
 */
enum GeodexStatus geodex_corpus_push(struct GeodexCorpus *corpus,
                                     uint64_t id,
                                     const float *vector,
                                     size_t dims);

/**
 * Number of stored vectors; 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t geodex_corpus_len(const struct GeodexCorpus *corpus);

/**
 * Exact top-k. Cosine scores are similarities (best first), L2 scores are
 * distances (smallest first). Writes `min(k, len)` results.
 *
 * # Safety
 * `corpus` must be a live handle; `query` must hold `dims` floats;
 * `ids_out` and `scores_out` must have room for `k` values.
 */
enum GeodexStatus geodex_corpus_topk(const struct GeodexCorpus *corpus,
                                     const float *query,
                                     size_t dims,
                                     size_t k,
                                     enum GeodexMetric metric,
                                     uint64_t *ids_out,
                                     double *scores_out,
                                     size_t *len_out);

/**
 * # Safety
 * `corpus` must be null or a handle not yet freed.
 */
void geodex_corpus_free(struct GeodexCorpus *corpus);

/**
 * Grid patches over `bounds`, row-major from the lower-left corner, as
 * `4 × count` doubles. `cap` counts doubles.
 *
 * # Safety
 * `bounds` must hold 4 doubles; `out` room for `cap` doubles.
 */
enum GeodexStatus geodex_grid_samples(const double *bounds,
                                      double resolution,
                                      uint32_t size_px,
                                      uint32_t stride_px,
                                      double *out,
                                      size_t cap,
                                      size_t *len_out);

/**
 * Built-in product table as a JSON array. Free with [`geodex_string_free`].
 */
char *geodex_products_json(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void geodex_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEODEX_H */
