/*
 * C interface for the spectral-iso graph isomorphism engine.
 *
 * Conventions:
 *  - Graphs are opaque handles; create them with one of the constructors
 *    and release them with spectral_iso_graph_free().
 *  - Every fallible function returns an int32_t status code; 0 is success.
 *    After a failure, spectral_iso_last_error() returns a thread-local
 *    message that stays valid until the next failing call on that thread.
 *  - Result payloads are UTF-8 JSON strings allocated by the library
 *    (top-level object always carries "schema": 1). Release them with
 *    spectral_iso_string_free().
 *  - Vertices are 0-based in the edge-list constructor; JSON payloads
 *    report vertices 1-based.
 */

#ifndef SPECTRAL_ISO_H
#define SPECTRAL_ISO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
#define SPECTRAL_ISO_OK 0
#define SPECTRAL_ISO_ERR_NULL_ARGUMENT 1
#define SPECTRAL_ISO_ERR_INVALID_INPUT 2
#define SPECTRAL_ISO_ERR_NUMERIC 3
#define SPECTRAL_ISO_ERR_CAP_EXCEEDED 4
#define SPECTRAL_ISO_ERR_INTERNAL 5

/* Opaque graph handle. */
typedef struct SpectralIsoGraph SpectralIsoGraph;

/*
 * Thread-local message for the most recent failure on this thread.
 * Never NULL; do not free the returned pointer.
 */
const char *spectral_iso_last_error(void);

/*
 * Parse a graph6-encoded graph (n <= 62). On success *out_graph owns a
 * new handle.
 */
int32_t spectral_iso_graph_from_graph6(const char *text,
                                       SpectralIsoGraph **out_graph);

/*
 * Build a graph from an undirected edge list. `edges` holds 2 * edge_count
 * vertex indices laid out as (u0, v0, u1, v1, ...), each < num_vertices.
 * Self-loops and duplicate edges are rejected.
 */
int32_t spectral_iso_graph_from_edges(uint32_t num_vertices,
                                      const uint32_t *edges,
                                      size_t edge_count,
                                      SpectralIsoGraph **out_graph);

/* Release a graph handle. NULL is a no-op. */
void spectral_iso_graph_free(SpectralIsoGraph *graph);

/* Release a string returned by this library. NULL is a no-op. */
void spectral_iso_string_free(char *s);

/*
 * Eigenvalues, multiplicities, and reconstruction error of the adjacency
 * matrix, as JSON.
 */
int32_t spectral_iso_spectrum_json(const SpectralIsoGraph *graph,
                                   char **out_json);

/* Anchor-free vertex partition (orbit approximation), as JSON. */
int32_t spectral_iso_uniform_partition_json(const SpectralIsoGraph *graph,
                                            char **out_json);

/*
 * Orbit report: spectral orbit approximation plus a brute-force
 * cross-check when the graph is under the enumeration cap, as JSON.
 */
int32_t spectral_iso_orbits_json(const SpectralIsoGraph *graph,
                                 char **out_json);

/*
 * Brute-force automorphism group (order, generators, orbits), as JSON.
 * Fails with SPECTRAL_ISO_ERR_CAP_EXCEEDED above the enumeration cap.
 */
int32_t spectral_iso_automorphism_group_json(const SpectralIsoGraph *graph,
                                             char **out_json);

/*
 * Decide isomorphism. *out_verdict becomes 1 when the graphs are
 * isomorphic and 0 otherwise; *out_json receives the full certificate
 * (verdict, mapping when found, search statistics).
 */
int32_t spectral_iso_are_isomorphic(const SpectralIsoGraph *g,
                                    const SpectralIsoGraph *h,
                                    int32_t *out_verdict,
                                    char **out_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SPECTRAL_ISO_H */
