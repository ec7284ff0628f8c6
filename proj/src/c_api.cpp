#include "tactile_recon/recon.h"

#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "tactile_recon/error.hpp"
#include "tactile_recon/gp_surface.hpp"
#include "tactile_recon/io.hpp"
#include "tactile_recon/isosurface.hpp"
#include "tactile_recon/metrics.hpp"
#include "tactile_recon/scenario.hpp"

struct recon_model {
  tactile::GpModel model;
};

struct recon_mesh {
  tactile::ColoredMesh mesh;
};

namespace {

thread_local std::string g_last_error;

recon_status status_for(tactile::ErrorKind kind) {
  using tactile::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return RECON_ERR_INVALID_ARGUMENT;
    case ErrorKind::Config:
      return RECON_ERR_CONFIG;
    case ErrorKind::Io:
      return RECON_ERR_IO;
    case ErrorKind::Numerical:
      return RECON_ERR_NUMERICAL;
    case ErrorKind::EmptyReconstruction:
      return RECON_ERR_EMPTY;
    case ErrorKind::Protocol:
      return RECON_ERR_PROTOCOL;
  }
  return RECON_ERR_INTERNAL;
}

template <typename F>
recon_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const tactile::Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RECON_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RECON_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RECON_ERR_INTERNAL;
  }
}

recon_status null_argument(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return RECON_ERR_INVALID_ARGUMENT;
}

tactile::Point3 point(const double p[3]) { return {p[0], p[1], p[2]}; }

tactile::RunOptions run_options(const recon_run_options* o) {
  tactile::RunOptions r;
  if (o == nullptr) return r;
  if (o->output_dir) r.output_dir = o->output_dir;
  if (o->has_seed) r.seed = o->seed;
  r.deterministic = o->deterministic != 0;
  return r;
}

}  // namespace

extern "C" {

const char* recon_version(void) { return "0.1.0"; }

const char* recon_last_error(void) { return g_last_error.c_str(); }

const char* recon_status_name(recon_status status) {
  switch (status) {
    case RECON_OK:
      return "ok";
    case RECON_REJECTED:
      return "rejected";
    case RECON_ERR_INVALID_ARGUMENT:
      return "invalid-argument";
    case RECON_ERR_CONFIG:
      return "config";
    case RECON_ERR_IO:
      return "io";
    case RECON_ERR_NUMERICAL:
      return "numerical";
    case RECON_ERR_EMPTY:
      return "empty-reconstruction";
    case RECON_ERR_PROTOCOL:
      return "protocol";
    case RECON_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

recon_status recon_model_create(double kernel_scale, const double prior_center[3], double prior_radius,
                                double noise_var, recon_model** out) {
  if (!prior_center) return null_argument("prior_center");
  if (!out) return null_argument("out");
  return guarded([&] {
    const tactile::SphericalPrior prior{point(prior_center), prior_radius};
    tactile::GpParams params =
        kernel_scale > 0.0 ? tactile::GpParams::for_scale(kernel_scale, prior)
                           : tactile::GpParams::for_workspace(tactile::WorkspaceFixture::default_box().region(), prior);
    if (noise_var >= 0.0) params.noise_var = noise_var;
    *out = new recon_model{tactile::GpModel(params)};
    return RECON_OK;
  });
}

void recon_model_destroy(recon_model* model) { delete model; }

recon_status recon_model_add_contact(recon_model* model, int64_t timestamp_ms, int sensor_id, const double position[3]) {
  if (!model) return null_argument("model");
  if (!position) return null_argument("position");
  return guarded([&] {
    const auto r = model->model.add_contact({point(position), timestamp_ms, sensor_id});
    return r == tactile::AddResult::Accepted ? RECON_OK : RECON_REJECTED;
  });
}

size_t recon_model_size(const recon_model* model) { return model ? model->model.size() : 0; }

recon_status recon_model_refit(recon_model* model) {
  if (!model) return null_argument("model");
  return guarded([&] {
    model->model.batch_refit();
    return RECON_OK;
  });
}

recon_status recon_model_query(const recon_model* model, const double* xyz, size_t n, double* mean, double* variance) {
  if (!model) return null_argument("model");
  if (!xyz && n > 0) return null_argument("xyz");
  return guarded([&] {
    std::vector<tactile::Point3> q(n);
    for (size_t i = 0; i < n; ++i) q[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
    const auto post = model->model.posterior(q);
    for (size_t i = 0; i < n; ++i) {
      if (mean) mean[i] = post[i].mean;
      if (variance) variance[i] = post[i].variance;
    }
    return RECON_OK;
  });
}

recon_status recon_mesh_extract(const recon_model* model, const double bounds_min[3], const double bounds_max[3],
                                const int cells[3], recon_mesh** out) {
  if (!model) return null_argument("model");
  if (!bounds_min || !bounds_max || !cells) return null_argument("grid");
  if (!out) return null_argument("out");
  return guarded([&] {
    const tactile::GridSpec spec(tactile::Aabb(point(bounds_min), point(bounds_max)), {cells[0], cells[1], cells[2]});
    auto mesh = std::make_unique<recon_mesh>();
    mesh->mesh = tactile::marching_cubes(tactile::sample_grid(model->model, spec));
    tactile::colorize(mesh->mesh);
    *out = mesh.release();
    return RECON_OK;
  });
}

recon_status recon_mesh_read_ply(const char* path, recon_mesh** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    auto mesh = std::make_unique<recon_mesh>();
    mesh->mesh = tactile::read_ply(std::filesystem::path(path));
    *out = mesh.release();
    return RECON_OK;
  });
}

void recon_mesh_destroy(recon_mesh* mesh) { delete mesh; }

size_t recon_mesh_vertex_count(const recon_mesh* mesh) { return mesh ? mesh->mesh.vertices.size() : 0; }

size_t recon_mesh_triangle_count(const recon_mesh* mesh) { return mesh ? mesh->mesh.triangles.size() : 0; }

recon_status recon_mesh_vertices(const recon_mesh* mesh, double* xyz) {
  if (!mesh) return null_argument("mesh");
  if (!xyz && !mesh->mesh.vertices.empty()) return null_argument("xyz");
  for (size_t i = 0; i < mesh->mesh.vertices.size(); ++i) {
    xyz[3 * i] = mesh->mesh.vertices[i].x;
    xyz[3 * i + 1] = mesh->mesh.vertices[i].y;
    xyz[3 * i + 2] = mesh->mesh.vertices[i].z;
  }
  return RECON_OK;
}

recon_status recon_mesh_triangles(const recon_mesh* mesh, uint32_t* indices) {
  if (!mesh) return null_argument("mesh");
  if (!indices && !mesh->mesh.triangles.empty()) return null_argument("indices");
  for (size_t i = 0; i < mesh->mesh.triangles.size(); ++i) {
    std::memcpy(indices + 3 * i, mesh->mesh.triangles[i].data(), 3 * sizeof(uint32_t));
  }
  return RECON_OK;
}

recon_status recon_mesh_colors(const recon_mesh* mesh, uint8_t* rgb) {
  if (!mesh) return null_argument("mesh");
  if (!rgb && !mesh->mesh.vertices.empty()) return null_argument("rgb");
  return guarded([&] {
    tactile::ColoredMesh colored = mesh->mesh;
    if (colored.colors.empty()) tactile::colorize(colored);
    for (size_t i = 0; i < colored.colors.size(); ++i) {
      rgb[3 * i] = colored.colors[i].r;
      rgb[3 * i + 1] = colored.colors[i].g;
      rgb[3 * i + 2] = colored.colors[i].b;
    }
    return RECON_OK;
  });
}

recon_status recon_mesh_export(const recon_mesh* mesh, recon_mesh_format format, const char* path, int* lossy) {
  if (!mesh) return null_argument("mesh");
  if (!path) return null_argument("path");
  return guarded([&] {
    if (format != RECON_FORMAT_PLY && format != RECON_FORMAT_OBJ) {
      throw tactile::Error(tactile::ErrorKind::InvalidArgument, "unknown mesh format");
    }
    const auto f = format == RECON_FORMAT_PLY ? tactile::MeshFormat::Ply : tactile::MeshFormat::Obj;
    const bool dropped = tactile::export_mesh(mesh->mesh, f, path);
    if (lossy) *lossy = dropped ? 1 : 0;
    return RECON_OK;
  });
}

recon_status recon_validate_config(const char* config_path) {
  if (!config_path) return null_argument("config_path");
  return guarded([&] {
    tactile::load_scenario(config_path);
    return RECON_OK;
  });
}

recon_status recon_run(const char* config_path, const recon_run_options* options) {
  if (!config_path) return null_argument("config_path");
  return guarded([&] {
    tactile::run_scenario(tactile::load_scenario(config_path), run_options(options));
    return RECON_OK;
  });
}

recon_status recon_replay(const char* contact_log_path, const char* config_path, const recon_run_options* options) {
  if (!contact_log_path) return null_argument("contact_log_path");
  if (!config_path) return null_argument("config_path");
  return guarded([&] {
    const auto cfg = tactile::load_scenario(config_path);
    const auto contacts = tactile::read_contact_log(std::filesystem::path(contact_log_path));
    tactile::replay_scenario(contacts, cfg, run_options(options));
    return RECON_OK;
  });
}

recon_status recon_metrics(const char* mesh_path, const char* config_path, const char* contacts_path,
                           char** report_json) {
  if (!mesh_path) return null_argument("mesh_path");
  if (!config_path) return null_argument("config_path");
  if (!report_json) return null_argument("report_json");
  return guarded([&] {
    const auto cfg = tactile::load_scenario(config_path);
    const auto mesh = tactile::read_ply(std::filesystem::path(mesh_path));
    tactile::ContactDataset contacts(cfg.dedup_radius);
    if (contacts_path) {
      for (const auto& c : tactile::read_contact_log(std::filesystem::path(contacts_path))) contacts.insert(c);
    }
    const auto report = tactile::recon_report(mesh, cfg.object.build(), contacts, cfg.report);
    const std::string text = tactile::report_to_json(report);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *report_json = buf;
    return RECON_OK;
  });
}

void recon_string_free(char* s) { std::free(s); }

}  // extern "C"
