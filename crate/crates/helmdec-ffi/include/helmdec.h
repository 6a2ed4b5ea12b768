#ifndef HELMDEC_H
#define HELMDEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HdStatus {
  HD_STATUS_OK = 0,
  HD_STATUS_NULL_POINTER = 1,
  HD_STATUS_INVALID_ARGUMENT = 2,
  HD_STATUS_PRECONDITION = 3,
  HD_STATUS_INCOMPATIBLE = 4,
  HD_STATUS_UNSUPPORTED = 5,
  HD_STATUS_INTERNAL = 6,
  HD_STATUS_PANIC = 7,
} HdStatus;

/**
 * Which coefficient vector of a split to read.
 */
typedef enum HdComponent {
  /**
   * Nodal potential, one value per vertex.
   */
  HD_COMPONENT_P = 0,
  /**
   * Nodal vector field, three values per vertex.
   */
  HD_COMPONENT_W = 1,
  /**
   * Edge remainder, one moment per edge.
   */
  HD_COMPONENT_R = 2,
} HdComponent;

/**
 * Opaque mesh handle.
 */
typedef struct HdMesh HdMesh;

/**
 * Opaque split handle.
 */
typedef struct HdSplit HdSplit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after success).
 * The pointer stays valid until the next call on this thread.
 */
const char *hd_last_error(void);

/**
 * Build a catalog mesh, e.g. `geometry = "unit_cube"`, `h = 0.25`.
 *
 * # Safety
 * `geometry` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HdStatus hd_mesh_new(const char *geometry, double h, struct HdMesh **out);

/**
 * # Safety
 * `mesh` must come from [`hd_mesh_new`] and not be used afterwards.
 */
void hd_mesh_free(struct HdMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle; the out pointers must be valid.
 */
enum HdStatus hd_mesh_counts(const struct HdMesh *mesh,
                             size_t *vertices,
                             size_t *edges,
                             size_t *tets);

/**
 * Split the edge field `v` (`n` moments) keeping zero tangential data on
 * `gamma`: a catalog trace name or a comma-separated entity list.
 *
 * # Safety
 * `mesh` must be live, `gamma` NUL-terminated, `v` valid for `n` reads and
 * `out` a valid pointer.
 */
enum HdStatus hd_decompose(const struct HdMesh *mesh,
                           const char *gamma,
                           const double *v,
                           size_t n,
                           struct HdSplit **out);

/**
 * # Safety
 * `split` must come from [`hd_decompose`] and not be used afterwards.
 */
void hd_split_free(struct HdSplit *split);

/**
 * # Safety
 * `split` must be live and `len` a valid pointer.
 */
enum HdStatus hd_split_len(const struct HdSplit *split, enum HdComponent which, size_t *len);

/**
 * Copy a component into `buf`, which must hold exactly its length.
 *
 * # Safety
 * `split` must be live and `buf` valid for `len` writes.
 */
enum HdStatus hd_split_copy(const struct HdSplit *split,
                            enum HdComponent which,
                            double *buf,
                            size_t len);

/**
 * Route name, valid while the split lives; null for a null handle.
 *
 * # Safety
 * `split` must be live or null.
 */
const char *hd_split_route(const struct HdSplit *split);

/**
 * Claim id such as `semi-nolog`, valid while the split lives.
 *
 * # Safety
 * `split` must be live or null.
 */
const char *hd_split_claim(const struct HdSplit *split);

/**
 * Relative identity residual of the split against `v`.
 *
 * # Safety
 * Handles must be live, `v` valid for `n` reads, `out` valid.
 */
enum HdStatus hd_split_identity_residual(const struct HdMesh *mesh,
                                         const struct HdSplit *split,
                                         const double *v,
                                         size_t n,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HELMDEC_H */
