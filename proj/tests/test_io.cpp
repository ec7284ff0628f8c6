#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tactile_recon/error.hpp"
#include "tactile_recon/io.hpp"
#include "tactile_recon/isosurface.hpp"
#include "test_support.hpp"

using namespace tactile;
namespace fs = std::filesystem;

namespace {

ColoredMesh one_triangle() {
  ColoredMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  m.variance = {0.1, 0.2, 0.3};
  colorize(m);
  return m;
}

ColoredMesh sphere_mesh() {
  auto g = sample_function(GridSpec(Aabb({-0.1, -0.1, -0.1}, {0.1, 0.1, 0.1}), {20, 20, 20}),
                           [](const Point3& p) { return norm(p) - 0.06; }, [](const Point3& p) { return 1e-4 * (p.z + 0.1); });
  auto m = marching_cubes(g);
  colorize(m);
  return m;
}

std::string header_of(const std::string& ply) { return ply.substr(0, ply.find("end_header\n")); }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "tactile_recon_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("ply header for a single triangle") {
  std::ostringstream out;
  write_ply(one_triangle(), out);
  const auto h = header_of(out.str());
  CHECK(h.rfind("ply\nformat binary_little_endian 1.0\n", 0) == 0);
  CHECK(h.find("element vertex 3\n") != std::string::npos);
  CHECK(h.find("element face 1\n") != std::string::npos);
  CHECK(h.find("property uchar red\nproperty uchar green\nproperty uchar blue\n") != std::string::npos);
  // 3 vertices of 4 floats + 3 bytes, one face of 1 + 3 ints.
  CHECK(out.str().size() == h.size() + std::string("end_header\n").size() + 3 * 19 + 13);
}

TEST_CASE("ply round trip keeps vertices, faces, colors and variance") {
  const auto m = sphere_mesh();
  std::stringstream buf;
  write_ply(m, buf);
  const auto back = read_ply(buf);
  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.triangles == m.triangles);
  REQUIRE(back.colors == m.colors);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    REQUIRE(back.vertices[i].x == static_cast<float>(m.vertices[i].x));
    REQUIRE(back.vertices[i].y == static_cast<float>(m.vertices[i].y));
    REQUIRE(back.vertices[i].z == static_cast<float>(m.vertices[i].z));
    REQUIRE(back.variance[i] == static_cast<float>(m.variance[i]));
  }
  REQUIRE(back.variance_range.has_value());
  CHECK(back.variance_range->min == m.variance_range->min);
  CHECK(back.variance_range->max == m.variance_range->max);

  // Writing what was read gives the same bytes.
  std::stringstream again;
  write_ply(back, again);
  CHECK(again.str() == buf.str());
}

TEST_CASE("ply reader rejects foreign input") {
  std::istringstream not_ply("solid x\n");
  CHECK_THROWS_AS(read_ply(not_ply), Error);
  std::istringstream ascii("ply\nformat ascii 1.0\nelement vertex 0\nend_header\n");
  CHECK_THROWS_AS(read_ply(ascii), Error);
  std::ostringstream out;
  write_ply(one_triangle(), out);
  std::istringstream truncated(out.str().substr(0, out.str().size() - 5));
  CHECK_THROWS_AS(read_ply(truncated), Error);
}

TEST_CASE("obj export keeps geometry and drops color") {
  const auto m = one_triangle();
  std::ostringstream out;
  CHECK(write_obj(m, out));
  const std::string s = out.str();
  CHECK(s.find("v 0 0 0\n") != std::string::npos);
  CHECK(s.find("v 1 0 0\n") != std::string::npos);
  CHECK(s.find("f 1 2 3\n") != std::string::npos);
  CHECK(s.find("vc") == std::string::npos);

  ColoredMesh bare;
  bare.vertices = m.vertices;
  bare.triangles = m.triangles;
  bare.variance = {0, 0, 0};
  std::ostringstream out2;
  CHECK_FALSE(write_obj(bare, out2));
}

TEST_CASE("export to files by format") {
  const auto m = sphere_mesh();
  CHECK_FALSE(export_mesh(m, MeshFormat::Ply, scratch("m.ply")));
  CHECK(read_ply(scratch("m.ply")).triangles.size() == m.triangles.size());
  CHECK(export_mesh(m, MeshFormat::Obj, scratch("m.obj")));
  CHECK(parse_mesh_format("obj") == MeshFormat::Obj);
  CHECK_THROWS_AS(parse_mesh_format("stl"), Error);
  try {
    export_mesh(m, MeshFormat::Ply, "/nonexistent-dir/x/m.ply");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("contact log round trip is exact") {
  std::mt19937_64 rng(17);
  std::vector<ContactPoint> contacts;
  for (int i = 0; i < 200; ++i) {
    contacts.push_back({testing::uniform_point(rng, {-0.3, -0.3, 0}, {0.3, 0.3, 0.4}), 1000 + 50 * i, i % 4});
  }
  contacts.push_back({{1e-300, -0.1 / 3.0, 0.4}, 99999, 2});
  std::stringstream buf;
  write_contact_log(contacts, buf);
  CHECK(buf.str().rfind("timestamp_ms,sensor_id,x_m,y_m,z_m\n", 0) == 0);
  const auto back = read_contact_log(buf);
  REQUIRE(back.size() == contacts.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].position == contacts[i].position);
    REQUIRE(back[i].timestamp_ms == contacts[i].timestamp_ms);
    REQUIRE(back[i].sensor_id == contacts[i].sensor_id);
  }
}

TEST_CASE("contact log errors name the line") {
  std::istringstream bad_header("t,s,x,y,z\n");
  CHECK_THROWS_AS(read_contact_log(bad_header), Error);
  std::istringstream short_row("timestamp_ms,sensor_id,x_m,y_m,z_m\n1,0,0.1,0.2,0.3\n2,0,0.1,0.2\n");
  try {
    read_contact_log(short_row);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream nan_row("timestamp_ms,sensor_id,x_m,y_m,z_m\n1,0,nan,0.2,0.3\n");
  CHECK_THROWS_AS(read_contact_log(nan_row), Error);
  std::istringstream backwards("timestamp_ms,sensor_id,x_m,y_m,z_m\n5,0,0,0,0\n4,0,0,0,0\n");
  CHECK_THROWS_AS(read_contact_log(backwards), Error);
}

TEST_CASE("update stream with no updates is one terminal record") {
  std::stringstream s;
  emit_update_stream(s, {});
  CHECK(s.str() == "{\"seq\":0,\"terminal\":true,\"updates\":0}\n");
}

TEST_CASE("update stream framing and parse back") {
  std::vector<UpdateMessage> msgs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    msgs[i].sequence = i;
    msgs[i].timestamp_ms = 1000 + 250 * static_cast<std::int64_t>(i);
    msgs[i].contacts = 5 * (i + 1);
    msgs[i].vertices = 100 + i;
    msgs[i].triangles = 196 + 2 * i;
    msgs[i].variance_range = VarianceRange{1e-7 * static_cast<double>(i), 0.1 / 3.0};
    msgs[i].mesh_ref = "snapshots/mesh_000" + std::to_string(i) + ".ply";
  }
  msgs[1].variance_range.reset();
  msgs[2].mesh_ref.reset();
  msgs[2].compute_ms = 12.25;
  std::stringstream s;
  emit_update_stream(s, msgs);

  std::size_t lines = 0;
  for (char c : s.str()) lines += c == '\n';
  CHECK(lines == 4);

  const auto recs = parse_update_stream(s);
  REQUIRE(recs.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& u = recs[i].update;
    CHECK_FALSE(recs[i].terminal);
    CHECK(u.sequence == i);
    CHECK(u.timestamp_ms == msgs[i].timestamp_ms);
    CHECK(u.contacts == msgs[i].contacts);
    CHECK(u.vertices == msgs[i].vertices);
    CHECK(u.triangles == msgs[i].triangles);
    CHECK(u.variance_range.has_value() == msgs[i].variance_range.has_value());
    if (u.variance_range) {
      CHECK(u.variance_range->min == msgs[i].variance_range->min);
      CHECK(u.variance_range->max == msgs[i].variance_range->max);
    }
    CHECK(u.mesh_ref == msgs[i].mesh_ref);
    CHECK(u.compute_ms == msgs[i].compute_ms);
  }
  CHECK(recs[3].terminal);
  CHECK(recs[3].update.sequence == 3);
}

TEST_CASE("stream writer enforces ordering") {
  std::stringstream s;
  UpdateStreamWriter w(s);
  UpdateMessage m;
  m.sequence = 1;
  CHECK_THROWS_AS(w.emit(m), Error);
  m.sequence = 0;
  m.contacts = 10;
  w.emit(m);
  m.sequence = 1;
  m.contacts = 9;
  CHECK_THROWS_AS(w.emit(m), Error);
  w.finish();
  m.contacts = 11;
  CHECK_THROWS_AS(w.emit(m), Error);
}

TEST_CASE("every stream prefix parses") {
  std::vector<UpdateMessage> msgs(4);
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    msgs[i].sequence = i;
    msgs[i].contacts = i;
  }
  std::stringstream s;
  emit_update_stream(s, msgs);
  const std::string all = s.str();
  std::size_t pos = 0;
  std::size_t expected = 0;
  while ((pos = all.find('\n', pos)) != std::string::npos) {
    ++pos;
    ++expected;
    std::istringstream prefix(all.substr(0, pos));
    REQUIRE(parse_update_stream(prefix).size() == expected);
  }
}

TEST_CASE("sha256 of a known file") {
  {
    std::ofstream f(scratch("abc.txt"), std::ios::binary);
    f << "abc";
  }
  CHECK(sha256_file(scratch("abc.txt")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
