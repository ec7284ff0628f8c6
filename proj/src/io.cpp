#include "tactile_recon/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tactile_recon/error.hpp"

namespace tactile {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

namespace {

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path.string() + "' for reading");
  return in;
}

void check_written(std::ostream& out, const std::string& what) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + what);
}

std::string round_trip(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error(ErrorKind::InvalidArgument, "ply: truncated binary body");
  return v;
}

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::Int8;
  if (s == "uchar" || s == "uint8") return PlyType::UInt8;
  if (s == "short" || s == "int16") return PlyType::Int16;
  if (s == "ushort" || s == "uint16") return PlyType::UInt16;
  if (s == "int" || s == "int32") return PlyType::Int32;
  if (s == "uint" || s == "uint32") return PlyType::UInt32;
  if (s == "float" || s == "float32") return PlyType::Float32;
  if (s == "double" || s == "float64") return PlyType::Float64;
  throw Error(ErrorKind::InvalidArgument, "ply: unsupported property type '" + s + "'");
}

double read_scalar(std::istream& in, PlyType t) {
  switch (t) {
    case PlyType::Int8:
      return get<std::int8_t>(in);
    case PlyType::UInt8:
      return get<std::uint8_t>(in);
    case PlyType::Int16:
      return get<std::int16_t>(in);
    case PlyType::UInt16:
      return get<std::uint16_t>(in);
    case PlyType::Int32:
      return get<std::int32_t>(in);
    case PlyType::UInt32:
      return get<std::uint32_t>(in);
    case PlyType::Float32:
      return get<float>(in);
    case PlyType::Float64:
      return get<double>(in);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

}  // namespace

MeshFormat parse_mesh_format(const std::string& name) {
  if (name == "ply" || name == "PLY") return MeshFormat::Ply;
  if (name == "obj" || name == "OBJ") return MeshFormat::Obj;
  throw Error(ErrorKind::InvalidArgument, "unknown mesh format '" + name + "' (expected ply or obj)");
}

void write_ply(const ColoredMesh& source, std::ostream& out) {
  source.validate();
  ColoredMesh colored;
  const ColoredMesh* mesh = &source;
  if (source.colors.empty()) {
    colored = source;
    colorize(colored);
    mesh = &colored;
  }
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "comment generated by tactile_recon\n";
  if (mesh->variance_range) {
    out << "comment variance_range " << round_trip(mesh->variance_range->min) << ' '
        << round_trip(mesh->variance_range->max) << '\n';
  }
  out << "element vertex " << mesh->vertices.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float variance\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << mesh->triangles.size() << '\n'
      << "property list uchar int vertex_indices\n"
      << "end_header\n";
  for (std::size_t i = 0; i < mesh->vertices.size(); ++i) {
    const Point3& v = mesh->vertices[i];
    put(out, static_cast<float>(v.x));
    put(out, static_cast<float>(v.y));
    put(out, static_cast<float>(v.z));
    put(out, static_cast<float>(mesh->variance[i]));
    put(out, mesh->colors[i].r);
    put(out, mesh->colors[i].g);
    put(out, mesh->colors[i].b);
  }
  for (const auto& t : mesh->triangles) {
    put(out, std::uint8_t{3});
    for (auto idx : t) put(out, static_cast<std::int32_t>(idx));
  }
  check_written(out, "ply body");
}

void write_ply(const ColoredMesh& mesh, const std::filesystem::path& path) {
  auto out = open_out(path, true);
  write_ply(mesh, out);
}

ColoredMesh read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw Error(ErrorKind::InvalidArgument, "ply: missing magic");
  std::vector<PlyElement> elements;
  std::optional<VarianceRange> range;
  bool binary_le = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = fmt == "binary_little_endian";
    } else if (word == "comment") {
      std::string tag;
      ls >> tag;
      if (tag == "variance_range") {
        VarianceRange r;
        if (ls >> r.min >> r.max) range = r;
      }
    } else if (word == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) throw Error(ErrorKind::InvalidArgument, "ply: property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(count_type);
        p.type = parse_ply_type(item_type);
      } else {
        p.type = parse_ply_type(type);
        ls >> p.name;
      }
      elements.back().properties.push_back(p);
    }
  }
  if (!binary_le) throw Error(ErrorKind::InvalidArgument, "ply: only binary_little_endian is supported");

  ColoredMesh mesh;
  bool has_color = false;
  for (const auto& e : elements) {
    if (e.name == "vertex") {
      mesh.vertices.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        Point3 p;
        double var = 0.0;
        Rgb c;
        for (const auto& prop : e.properties) {
          if (prop.is_list) throw Error(ErrorKind::InvalidArgument, "ply: list property on vertex");
          const double v = read_scalar(in, prop.type);
          if (prop.name == "x") p.x = v;
          else if (prop.name == "y") p.y = v;
          else if (prop.name == "z") p.z = v;
          else if (prop.name == "variance") var = v;
          else if (prop.name == "red") c.r = static_cast<std::uint8_t>(v), has_color = true;
          else if (prop.name == "green") c.g = static_cast<std::uint8_t>(v);
          else if (prop.name == "blue") c.b = static_cast<std::uint8_t>(v);
        }
        mesh.vertices.push_back(p);
        mesh.variance.push_back(var);
        mesh.colors.push_back(c);
      }
    } else if (e.name == "face") {
      mesh.triangles.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& prop : e.properties) {
          if (!prop.is_list) {
            read_scalar(in, prop.type);
            continue;
          }
          const auto n = static_cast<std::size_t>(read_scalar(in, prop.count_type));
          std::vector<std::uint32_t> idx(n);
          for (auto& v : idx) v = static_cast<std::uint32_t>(read_scalar(in, prop.type));
          if (prop.name != "vertex_indices" && prop.name != "vertex_index") continue;
          // Fan-triangulate polygons.
          for (std::size_t k = 1; k + 1 < n; ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
        }
      }
    } else {
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& prop : e.properties) {
          const std::size_t n = prop.is_list ? static_cast<std::size_t>(read_scalar(in, prop.count_type)) : 1;
          for (std::size_t k = 0; k < n; ++k) read_scalar(in, prop.type);
        }
      }
    }
  }
  if (!has_color) mesh.colors.clear();
  mesh.variance_range = range;
  mesh.validate();
  return mesh;
}

ColoredMesh read_ply(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return read_ply(in);
}

bool write_obj(const ColoredMesh& mesh, std::ostream& out) {
  mesh.validate();
  out << "# tactile_recon mesh: geometry only, per-vertex variance and color are not stored\n";
  char buf[96];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  check_written(out, "obj");
  return !mesh.colors.empty() || std::any_of(mesh.variance.begin(), mesh.variance.end(), [](double v) { return v != 0.0; });
}

bool write_obj(const ColoredMesh& mesh, const std::filesystem::path& path) {
  auto out = open_out(path, false);
  return write_obj(mesh, out);
}

bool export_mesh(const ColoredMesh& mesh, MeshFormat format, const std::filesystem::path& path) {
  if (format == MeshFormat::Ply) {
    write_ply(mesh, path);
    return false;
  }
  return write_obj(mesh, path);
}

void write_contact_log(const std::vector<ContactPoint>& contacts, std::ostream& out) {
  out << kContactLogHeader << '\n';
  for (const auto& c : contacts) {
    out << c.timestamp_ms << ',' << c.sensor_id << ',' << round_trip(c.position.x) << ','
        << round_trip(c.position.y) << ',' << round_trip(c.position.z) << '\n';
  }
  check_written(out, "contact log");
}

void write_contact_log(const std::vector<ContactPoint>& contacts, const std::filesystem::path& path) {
  auto out = open_out(path, false);
  write_contact_log(contacts, out);
}

namespace {

template <typename T>
T parse_field(const std::string& s, std::size_t line_no, const char* name) {
  T v{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    // strtod: libstdc++ 11 lacks floating-point from_chars.
    char* end = nullptr;
    v = std::strtod(first, &end);
    if (s.empty() || end != last) {
      throw Error(ErrorKind::InvalidArgument,
                  "contact log line " + std::to_string(line_no) + ": bad " + name + " '" + s + "'");
    }
  } else {
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw Error(ErrorKind::InvalidArgument,
                  "contact log line " + std::to_string(line_no) + ": bad " + name + " '" + s + "'");
    }
  }
  return v;
}

}  // namespace

std::vector<ContactPoint> read_contact_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidArgument, "contact log: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kContactLogHeader) {
    throw Error(ErrorKind::InvalidArgument, "contact log: expected header '" + std::string(kContactLogHeader) + "'");
  }
  std::vector<ContactPoint> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5) {
      throw Error(ErrorKind::InvalidArgument, "contact log line " + std::to_string(line_no) + ": expected 5 fields");
    }
    ContactPoint c;
    c.timestamp_ms = parse_field<std::int64_t>(fields[0], line_no, "timestamp_ms");
    c.sensor_id = parse_field<int>(fields[1], line_no, "sensor_id");
    c.position = {parse_field<double>(fields[2], line_no, "x_m"), parse_field<double>(fields[3], line_no, "y_m"),
                  parse_field<double>(fields[4], line_no, "z_m")};
    if (!c.position.finite()) {
      throw Error(ErrorKind::InvalidArgument, "contact log line " + std::to_string(line_no) + ": non-finite position");
    }
    if (!out.empty() && c.timestamp_ms < out.back().timestamp_ms) {
      throw Error(ErrorKind::InvalidArgument, "contact log line " + std::to_string(line_no) + ": timestamp regresses");
    }
    out.push_back(c);
  }
  return out;
}

std::vector<ContactPoint> read_contact_log(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  return read_contact_log(in);
}

void UpdateStreamWriter::emit(const UpdateMessage& m) {
  if (finished_) throw Error(ErrorKind::InvalidArgument, "stream: emit after terminal record");
  if (m.sequence != next_) {
    throw Error(ErrorKind::InvalidArgument, "stream: expected sequence " + std::to_string(next_));
  }
  if (m.contacts < last_contacts_) throw Error(ErrorKind::InvalidArgument, "stream: contact count decreased");
  nlohmann::ordered_json j;
  j["seq"] = m.sequence;
  j["terminal"] = false;
  j["timestamp_ms"] = m.timestamp_ms;
  j["contacts"] = m.contacts;
  j["vertices"] = m.vertices;
  j["triangles"] = m.triangles;
  if (m.variance_range) {
    j["variance_min"] = m.variance_range->min;
    j["variance_max"] = m.variance_range->max;
  } else {
    j["variance_min"] = nullptr;
    j["variance_max"] = nullptr;
  }
  j["mesh"] = m.mesh_ref ? nlohmann::ordered_json(*m.mesh_ref) : nlohmann::ordered_json(nullptr);
  if (m.compute_ms) j["compute_ms"] = *m.compute_ms;
  sink_ << j.dump() << '\n';
  sink_.flush();
  if (!sink_) throw Error(ErrorKind::Io, "stream: sink write failed");
  ++next_;
  last_contacts_ = m.contacts;
}

void UpdateStreamWriter::finish() {
  if (finished_) return;
  nlohmann::ordered_json j;
  j["seq"] = next_;
  j["terminal"] = true;
  j["updates"] = next_;
  sink_ << j.dump() << '\n';
  sink_.flush();
  if (!sink_) throw Error(ErrorKind::Io, "stream: sink write failed");
  finished_ = true;
}

void emit_update_stream(std::ostream& sink, const std::vector<UpdateMessage>& messages) {
  UpdateStreamWriter w(sink);
  for (const auto& m : messages) w.emit(m);
  w.finish();
}

std::vector<StreamRecord> parse_update_stream(std::istream& in) {
  std::vector<StreamRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      StreamRecord r;
      r.terminal = j.at("terminal").get<bool>();
      r.update.sequence = j.at("seq").get<std::uint64_t>();
      if (!r.terminal) {
        r.update.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
        r.update.contacts = j.at("contacts").get<std::size_t>();
        r.update.vertices = j.at("vertices").get<std::size_t>();
        r.update.triangles = j.at("triangles").get<std::size_t>();
        if (!j.at("variance_min").is_null()) {
          r.update.variance_range = VarianceRange{j.at("variance_min").get<double>(), j.at("variance_max").get<double>()};
        }
        if (!j.at("mesh").is_null()) r.update.mesh_ref = j.at("mesh").get<std::string>();
        if (j.contains("compute_ms")) r.update.compute_ms = j.at("compute_ms").get<double>();
      }
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidArgument, "stream line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256: digest init failed");
  }
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

}  // namespace tactile
