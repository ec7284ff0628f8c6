#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tactile_recon/gp_surface.hpp"
#include "tactile_recon/isosurface.hpp"

namespace tactile {

enum class MeshFormat { Ply, Obj };

MeshFormat parse_mesh_format(const std::string& name);

/// Binary little-endian PLY: float x/y/z, float variance, uchar red/green/blue,
/// and int triangle lists. The variance range travels in a header comment.
/// Colors are computed first if the mesh has none.
void write_ply(const ColoredMesh& mesh, std::ostream& out);
void write_ply(const ColoredMesh& mesh, const std::filesystem::path& path);
ColoredMesh read_ply(std::istream& in);
ColoredMesh read_ply(const std::filesystem::path& path);

/// Geometry only. Returns true when color or variance data was dropped.
bool write_obj(const ColoredMesh& mesh, std::ostream& out);
bool write_obj(const ColoredMesh& mesh, const std::filesystem::path& path);

/// Writes `mesh` in `format`; returns true when the format dropped data.
bool export_mesh(const ColoredMesh& mesh, MeshFormat format, const std::filesystem::path& path);

inline constexpr const char* kContactLogHeader = "timestamp_ms,sensor_id,x_m,y_m,z_m";

/// CSV with the header above; coordinates printed with round-trip precision.
void write_contact_log(const std::vector<ContactPoint>& contacts, std::ostream& out);
void write_contact_log(const std::vector<ContactPoint>& contacts, const std::filesystem::path& path);
std::vector<ContactPoint> read_contact_log(std::istream& in);
std::vector<ContactPoint> read_contact_log(const std::filesystem::path& path);

/// One reconstruction update as published on the stream.
struct UpdateMessage {
  std::uint64_t sequence = 0;
  std::int64_t timestamp_ms = 0;
  std::size_t contacts = 0;
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  std::optional<VarianceRange> variance_range;
  std::optional<std::string> mesh_ref;
  std::optional<double> compute_ms;  // wall-clock, omitted in deterministic runs
};

struct StreamRecord {
  bool terminal = false;
  UpdateMessage update;  // for the terminal record only `sequence` is meaningful
};

/// Newline-delimited JSON writer. Each record is flushed as a whole line;
/// `finish` appends the terminal record. Throws Io on sink failure.
class UpdateStreamWriter {
 public:
  explicit UpdateStreamWriter(std::ostream& sink) : sink_(sink) {}

  /// Throws InvalidArgument if sequence numbers or contact counts regress.
  void emit(const UpdateMessage& m);
  void finish();
  std::uint64_t next_sequence() const { return next_; }

 private:
  std::ostream& sink_;
  std::uint64_t next_ = 0;
  std::size_t last_contacts_ = 0;
  bool finished_ = false;
};

void emit_update_stream(std::ostream& sink, const std::vector<UpdateMessage>& messages);
std::vector<StreamRecord> parse_update_stream(std::istream& in);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace tactile
