#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "tactile_recon/recon.h"

namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(__FILE__).parent_path() / "data";

recon_model* sphere_model() {
  const double center[3] = {0.0, 0.0, 0.0};
  recon_model* m = nullptr;
  REQUIRE(recon_model_create(0.5, center, 0.05, 1e-4, &m) == RECON_OK);
  // Contacts on a 4 cm sphere, spread by a golden-angle spiral.
  for (int i = 0; i < 60; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / 60.0;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = i * 2.399963229728653;
    const double p[3] = {0.04 * r * std::cos(phi), 0.04 * r * std::sin(phi), 0.04 * z};
    REQUIRE(recon_model_add_contact(m, i, i % 4, p) == RECON_OK);
  }
  return m;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(recon_status_name(RECON_ERR_CONFIG)) == "config");
  CHECK(std::strlen(recon_version()) > 0);
}

TEST_CASE("model lifecycle and queries") {
  recon_model* m = sphere_model();
  CHECK(recon_model_size(m) == 60);

  // Same point as the first spiral contact.
  const double first[3] = {0.04 * std::sqrt(1.0 - std::pow(1.0 - 1.0 / 60.0, 2)), 0.0, 0.04 * (1.0 - 1.0 / 60.0)};
  CHECK(recon_model_add_contact(m, 100, 0, first) == RECON_REJECTED);
  CHECK(recon_model_size(m) == 60);

  const double q[6] = {0.0, 0.0, 0.0, 0.2, 0.0, 0.0};
  double mean[2], var[2];
  REQUIRE(recon_model_query(m, q, 2, mean, var) == RECON_OK);
  CHECK(mean[0] < 0.0);
  CHECK(mean[1] > 0.0);
  CHECK(var[0] >= 0.0);
  REQUIRE(recon_model_query(m, q, 2, mean, nullptr) == RECON_OK);

  double before[2];
  recon_model_query(m, q, 2, before, nullptr);
  REQUIRE(recon_model_refit(m) == RECON_OK);
  recon_model_query(m, q, 2, mean, nullptr);
  CHECK(mean[0] == doctest::Approx(before[0]).epsilon(1e-8));

  recon_model_destroy(m);
}

TEST_CASE("errors come back as codes with a message") {
  const double center[3] = {0, 0, 0};
  recon_model* m = nullptr;
  CHECK(recon_model_create(-1.0, center, -0.5, -1.0, &m) == RECON_ERR_INVALID_ARGUMENT);
  CHECK(m == nullptr);
  CHECK(std::strlen(recon_last_error()) > 0);
  CHECK(recon_model_create(0.5, nullptr, 0.05, -1.0, &m) == RECON_ERR_INVALID_ARGUMENT);
  CHECK(recon_model_add_contact(nullptr, 0, 0, center) == RECON_ERR_INVALID_ARGUMENT);

  REQUIRE(recon_model_create(0.5, center, 0.05, -1.0, &m) == RECON_OK);
  CHECK(std::string(recon_last_error()).empty());
  const double bad[3] = {NAN, 0, 0};
  CHECK(recon_model_add_contact(m, 0, 0, bad) == RECON_ERR_INVALID_ARGUMENT);
  const double p[3] = {0.01, 0, 0};
  CHECK(recon_model_add_contact(m, 10, 0, p) == RECON_OK);
  const double p2[3] = {0.03, 0, 0};
  CHECK(recon_model_add_contact(m, 5, 0, p2) == RECON_ERR_INVALID_ARGUMENT);
  recon_model_destroy(m);
  recon_model_destroy(nullptr);

  CHECK(recon_validate_config((kData / "zero_probes.json").c_str()) == RECON_ERR_CONFIG);
  CHECK(std::string(recon_last_error()).find("exploration.probes") != std::string::npos);
  CHECK(recon_validate_config((kData / "small_sphere.json").c_str()) == RECON_OK);
}

TEST_CASE("mesh extraction, copy out and export") {
  recon_model* m = sphere_model();
  const double lo[3] = {-0.08, -0.08, -0.08}, hi[3] = {0.08, 0.08, 0.08};
  const int cells[3] = {24, 24, 24};
  recon_mesh* mesh = nullptr;
  REQUIRE(recon_mesh_extract(m, lo, hi, cells, &mesh) == RECON_OK);
  const size_t nv = recon_mesh_vertex_count(mesh);
  const size_t nt = recon_mesh_triangle_count(mesh);
  REQUIRE(nv > 0);
  REQUIRE(nt > 0);
  std::vector<double> xyz(3 * nv);
  std::vector<uint32_t> idx(3 * nt);
  std::vector<uint8_t> rgb(3 * nv);
  REQUIRE(recon_mesh_vertices(mesh, xyz.data()) == RECON_OK);
  REQUIRE(recon_mesh_triangles(mesh, idx.data()) == RECON_OK);
  REQUIRE(recon_mesh_colors(mesh, rgb.data()) == RECON_OK);
  for (size_t i = 0; i < nv; ++i) {
    const double r = std::sqrt(xyz[3 * i] * xyz[3 * i] + xyz[3 * i + 1] * xyz[3 * i + 1] + xyz[3 * i + 2] * xyz[3 * i + 2]);
    REQUIRE(std::abs(r - 0.04) < 0.005);
    REQUIRE(rgb[3 * i + 1] == 0);
  }
  for (auto v : idx) REQUIRE(v < nv);

  const auto dir = fs::temp_directory_path() / "tactile_recon_test_c_api";
  fs::create_directories(dir);
  int lossy = -1;
  REQUIRE(recon_mesh_export(mesh, RECON_FORMAT_PLY, (dir / "m.ply").c_str(), &lossy) == RECON_OK);
  CHECK(lossy == 0);
  REQUIRE(recon_mesh_export(mesh, RECON_FORMAT_OBJ, (dir / "m.obj").c_str(), &lossy) == RECON_OK);
  CHECK(lossy == 1);
  CHECK(recon_mesh_export(mesh, RECON_FORMAT_PLY, "/nonexistent-dir/m.ply", nullptr) == RECON_ERR_IO);
  CHECK(recon_mesh_export(mesh, static_cast<recon_mesh_format>(7), (dir / "m.x").c_str(), nullptr) ==
        RECON_ERR_INVALID_ARGUMENT);

  recon_mesh* back = nullptr;
  REQUIRE(recon_mesh_read_ply((dir / "m.ply").c_str(), &back) == RECON_OK);
  CHECK(recon_mesh_vertex_count(back) == nv);
  CHECK(recon_mesh_triangle_count(back) == nt);
  std::vector<uint8_t> rgb2(3 * nv);
  recon_mesh_colors(back, rgb2.data());
  CHECK(rgb2 == rgb);
  CHECK(recon_mesh_read_ply((dir / "missing.ply").c_str(), &back) == RECON_ERR_INVALID_ARGUMENT);

  recon_mesh_destroy(back);
  recon_mesh_destroy(mesh);
  recon_model_destroy(m);
}

TEST_CASE("scenario entry points") {
  const auto dir = fs::temp_directory_path() / "tactile_recon_test_c_api" / "run";
  fs::remove_all(dir);
  const std::string out = dir.string();
  recon_run_options opts{out.c_str(), 0, 0, 1};
  REQUIRE(recon_run((kData / "small_sphere.json").c_str(), &opts) == RECON_OK);
  CHECK(fs::exists(dir / "final_mesh.ply"));

  char* json = nullptr;
  REQUIRE(recon_metrics((dir / "final_mesh.ply").c_str(), (kData / "small_sphere.json").c_str(),
                        (dir / "contacts.csv").c_str(), &json) == RECON_OK);
  const std::string report(json);
  recon_string_free(json);
  CHECK(report.find("\"mean_abs_sdf_m\"") != std::string::npos);
  CHECK(report.find("\"probed_fraction\": 0.0,") == std::string::npos);

  const std::string replay_out = (dir.parent_path() / "replay").string();
  recon_run_options ropts{replay_out.c_str(), 0, 0, 1};
  CHECK(recon_replay((dir / "contacts.csv").c_str(), (kData / "small_sphere.json").c_str(), &ropts) == RECON_OK);
  CHECK(recon_replay((kData / "bad_contacts.csv").c_str(), (kData / "small_sphere.json").c_str(), &ropts) ==
        RECON_ERR_INVALID_ARGUMENT);
  CHECK(std::string(recon_last_error()).find("line 3") != std::string::npos);

  const std::string empty_out = (dir.parent_path() / "empty").string();
  recon_run_options eopts{empty_out.c_str(), 0, 0, 1};
  CHECK(recon_run((kData / "no_contacts.json").c_str(), &eopts) == RECON_ERR_EMPTY);
}
