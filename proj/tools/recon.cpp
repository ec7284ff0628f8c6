// Command-line front end. Talks to the engine only through the C API.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tactile_recon/recon.h"

namespace {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,     // bad config or input
  kExitWrite = 3,     // could not write an artifact
  kExitPipeline = 4,  // numerical or reconstruction failure
};

int exit_code_for(recon_status s) {
  switch (s) {
    case RECON_OK:
    case RECON_REJECTED:
      return kExitOk;
    case RECON_ERR_CONFIG:
    case RECON_ERR_INVALID_ARGUMENT:
    case RECON_ERR_PROTOCOL:
      return kExitUsage;
    case RECON_ERR_IO:
      return kExitWrite;
    case RECON_ERR_NUMERICAL:
    case RECON_ERR_EMPTY:
    case RECON_ERR_INTERNAL:
      return kExitPipeline;
  }
  return kExitPipeline;
}

int report(recon_status s) {
  if (s != RECON_OK) std::fprintf(stderr, "recon: %s error: %s\n", recon_status_name(s), recon_last_error());
  return exit_code_for(s);
}

struct RunFlags {
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;

  recon_run_options options() const {
    recon_run_options o{};
    o.output_dir = out_dir.empty() ? nullptr : out_dir.c_str();
    o.has_seed = seed.has_value() ? 1 : 0;
    o.seed = seed.value_or(0);
    o.deterministic = deterministic ? 1 : 0;
    return o;
  }
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--out", flags.out_dir, "Output directory (overrides the config)");
  cmd->add_option("--seed", flags.seed, "RNG seed (overrides the config)");
  cmd->add_flag("--deterministic", flags.deterministic, "Omit wall-clock fields from artifacts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile shape reconstruction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", recon_version());

  std::string config_path;
  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Simulate exploration of the configured object and reconstruct it");
  run->add_option("config", config_path, "Scenario config (JSON)")->required();
  add_run_flags(run, run_flags);

  std::string log_path;
  RunFlags replay_flags;
  auto* replay = app.add_subcommand("replay", "Rebuild the reconstruction from a saved contact log");
  replay->add_option("contact-log", log_path, "Contact log CSV")->required();
  replay->add_option("config", config_path, "Scenario config (JSON)")->required();
  add_run_flags(replay, replay_flags);

  std::string mesh_path;
  std::string format = "ply";
  std::string export_out;
  auto* exp = app.add_subcommand("export", "Convert a PLY mesh to PLY or OBJ");
  exp->add_option("mesh", mesh_path, "Input mesh (binary PLY)")->required();
  exp->add_option("--format", format, "ply or obj")->check(CLI::IsMember({"ply", "obj"}));
  exp->add_option("--out", export_out, "Output path (default: input with the new extension)");

  std::string contacts_path;
  auto* metrics = app.add_subcommand("metrics", "Score a mesh against the config's ground-truth object");
  metrics->add_option("mesh", mesh_path, "Mesh (binary PLY)")->required();
  metrics->add_option("config", config_path, "Scenario config (JSON)")->required();
  metrics->add_option("--contacts", contacts_path, "Contact log used for probed-region statistics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (run->parsed()) {
    const auto opts = run_flags.options();
    return report(recon_run(config_path.c_str(), &opts));
  }

  if (replay->parsed()) {
    const auto opts = replay_flags.options();
    return report(recon_replay(log_path.c_str(), config_path.c_str(), &opts));
  }

  if (exp->parsed()) {
    recon_mesh* mesh = nullptr;
    if (auto s = recon_mesh_read_ply(mesh_path.c_str(), &mesh); s != RECON_OK) return report(s);
    std::string out = export_out;
    if (out.empty()) {
      const auto dot = mesh_path.find_last_of('.');
      out = (dot == std::string::npos ? mesh_path : mesh_path.substr(0, dot)) + "." + format;
    }
    int lossy = 0;
    const auto s = recon_mesh_export(mesh, format == "obj" ? RECON_FORMAT_OBJ : RECON_FORMAT_PLY, out.c_str(), &lossy);
    recon_mesh_destroy(mesh);
    if (s == RECON_OK && lossy) {
      std::fprintf(stderr, "recon: warning: OBJ output keeps geometry only; vertex colors and variance dropped\n");
    }
    return report(s);
  }

  if (metrics->parsed()) {
    char* json = nullptr;
    const auto s = recon_metrics(mesh_path.c_str(), config_path.c_str(),
                                 contacts_path.empty() ? nullptr : contacts_path.c_str(), &json);
    if (s == RECON_OK) {
      std::printf("%s\n", json);
      recon_string_free(json);
    }
    return report(s);
  }
  return kExitUsage;
}
