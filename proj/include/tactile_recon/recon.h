/*
 * C interface to the tactile reconstruction engine.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * call that can fail returns a recon_status; on failure a message describing
 * the most recent error on the calling thread is available from
 * recon_last_error().
 */
#ifndef TACTILE_RECON_RECON_H
#define TACTILE_RECON_RECON_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RECON_API __declspec(dllexport)
#else
#define RECON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recon_status {
  RECON_OK = 0,
  /* add_contact only: the contact duplicated a stored one and was ignored. */
  RECON_REJECTED = 1,
  RECON_ERR_INVALID_ARGUMENT = -1,
  RECON_ERR_CONFIG = -2,
  RECON_ERR_IO = -3,
  RECON_ERR_NUMERICAL = -4,
  RECON_ERR_EMPTY = -5,
  RECON_ERR_PROTOCOL = -6,
  RECON_ERR_INTERNAL = -7
} recon_status;

typedef enum recon_mesh_format { RECON_FORMAT_PLY = 0, RECON_FORMAT_OBJ = 1 } recon_mesh_format;

typedef struct recon_model recon_model;
typedef struct recon_mesh recon_mesh;

RECON_API const char* recon_version(void);
/* Message for the last failing call on this thread; "" if none. */
RECON_API const char* recon_last_error(void);
RECON_API const char* recon_status_name(recon_status status);

/* ---- GP surface model ---------------------------------------------------- */

/* kernel_scale <= 0 selects the diagonal of the default 60x60x40 cm fixture.
 * noise_var < 0 selects the default (1e-6 * kernel_scale^3). */
RECON_API recon_status recon_model_create(double kernel_scale, const double prior_center[3], double prior_radius,
                                          double noise_var, recon_model** out);
RECON_API void recon_model_destroy(recon_model* model);

RECON_API recon_status recon_model_add_contact(recon_model* model, int64_t timestamp_ms, int sensor_id,
                                               const double position[3]);
RECON_API size_t recon_model_size(const recon_model* model);
RECON_API recon_status recon_model_refit(recon_model* model);

/* xyz holds n packed points; mean and/or variance may be NULL. */
RECON_API recon_status recon_model_query(const recon_model* model, const double* xyz, size_t n, double* mean,
                                         double* variance);

/* ---- meshes --------------------------------------------------------------- */

/* Samples the model on a lattice with the given cells per axis and extracts
 * the colored zero level set. */
RECON_API recon_status recon_mesh_extract(const recon_model* model, const double bounds_min[3],
                                          const double bounds_max[3], const int cells[3], recon_mesh** out);
RECON_API recon_status recon_mesh_read_ply(const char* path, recon_mesh** out);
RECON_API void recon_mesh_destroy(recon_mesh* mesh);

RECON_API size_t recon_mesh_vertex_count(const recon_mesh* mesh);
RECON_API size_t recon_mesh_triangle_count(const recon_mesh* mesh);
/* Copies 3*vertex_count doubles / 3*triangle_count indices / 3*vertex_count bytes. */
RECON_API recon_status recon_mesh_vertices(const recon_mesh* mesh, double* xyz);
RECON_API recon_status recon_mesh_triangles(const recon_mesh* mesh, uint32_t* indices);
RECON_API recon_status recon_mesh_colors(const recon_mesh* mesh, uint8_t* rgb);

/* *lossy is set to 1 when the format dropped per-vertex color or variance. */
RECON_API recon_status recon_mesh_export(const recon_mesh* mesh, recon_mesh_format format, const char* path,
                                         int* lossy);

/* ---- scenarios -------------------------------------------------------------- */

typedef struct recon_run_options {
  const char* output_dir; /* NULL: use the config's output_dir */
  int has_seed;
  uint64_t seed;
  int deterministic; /* non-zero: omit wall-clock fields from artifacts */
} recon_run_options;

RECON_API recon_status recon_validate_config(const char* config_path);
RECON_API recon_status recon_run(const char* config_path, const recon_run_options* options);
RECON_API recon_status recon_replay(const char* contact_log_path, const char* config_path,
                                    const recon_run_options* options);

/* Scores a mesh file against the config's ground-truth object. The returned
 * JSON string must be released with recon_string_free. contacts_path may be
 * NULL. */
RECON_API recon_status recon_metrics(const char* mesh_path, const char* config_path, const char* contacts_path,
                                     char** report_json);
RECON_API void recon_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* TACTILE_RECON_RECON_H */
