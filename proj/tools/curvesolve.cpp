// Scenario-driven front end: run | diagnose | suite | export | resume.
// Progress goes to stdout, structured errors to stderr; exit codes are
// 2 (parse/config), 3 (barriers), 4 (path/monitor), 1 (internal).

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "curvesolve/runner.hpp"
#include "curvesolve/version.hpp"

namespace fs = std::filesystem;
using namespace curvesolve;

namespace {

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.kind_name(), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
}

Scenario load_scenario(const std::string& path) {
  return Scenario::parse(read_file(path));
}

struct SuiteResult {
  std::string name;
  int code = 0;
  std::string message;
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - prescribed-curvature graphs by homotopy continuation"};
  app.require_subcommand(1);

  std::string path, out, what = "solution";
  uint64_t seed = 0;
  bool seed_set = false;
  int grid_n = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "output path");
    sub->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--grid-n", grid_n, "override grid.n_theta");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run one scenario to t=1");
  run_cmd->add_option("scenario", path, "scenario file")->required();
  add_common(run_cmd);

  CLI::App* diag_cmd = app.add_subcommand("diagnose", "validation and structural experiments");
  diag_cmd->add_option("scenario", path, "scenario file")->required();
  add_common(diag_cmd);

  CLI::App* suite_cmd = app.add_subcommand("suite", "run every *.scenario in a directory");
  suite_cmd->add_option("dir", path, "scenario directory")->required();
  add_common(suite_cmd);

  CLI::App* export_cmd = app.add_subcommand("export", "plot-ready columns from an artifact");
  export_cmd->add_option("artifact", path, "artifact file")->required();
  export_cmd->add_option("--what", what, "solution | residual_history | curvature_profile");
  export_cmd->add_option("--out", out, "output path (default: stdout)");

  CLI::App* resume_cmd = app.add_subcommand("resume", "continue from a checkpoint");
  resume_cmd->add_option("checkpoint", path, "checkpoint file")->required();
  add_common(resume_cmd);

  CLI11_PARSE(app, argc, argv);

  RunOptions opts;
  opts.log = log_level_from_env();
  if (seed_set) opts.seed_override = seed;
  if (grid_n > 0) opts.grid_n_override = grid_n;
  opts.out_path = out;

  if (run_cmd->parsed()) {
    return guarded([&] { run_scenario(load_scenario(path), opts, path); });
  }

  if (diag_cmd->parsed()) {
    return guarded([&] {
      const std::string report = diagnose_scenario(load_scenario(path), opts);
      std::fputs(report.c_str(), stdout);
    });
  }

  if (export_cmd->parsed()) {
    return guarded([&] {
      const RunArtifact art = RunArtifact::from_text(read_file(path));
      const std::string content = export_plotdata(art, what);
      if (out.empty()) std::fputs(content.c_str(), stdout);
      else atomic_write(out, content);
    });
  }

  if (resume_cmd->parsed()) {
    return guarded([&] { resume_run(path, opts); });
  }

  if (suite_cmd->parsed()) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.path().extension() == ".scenario") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::fprintf(stderr, "error: config: no *.scenario files in '%s'\n", path.c_str());
      return 2;
    }
    std::vector<SuiteResult> results(files.size());
    std::atomic<size_t> next{0};
    const unsigned workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(files.size()));
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= files.size()) return;
        SuiteResult& r = results[i];
        r.name = fs::path(files[i]).filename().string();
        RunOptions o = opts;
        o.log = LogLevel::quiet;
        o.out_path = out.empty() ? default_out_path(files[i])
                                 : (fs::path(out) / (fs::path(files[i]).stem().string() + ".artifact")).string();
        try {
          run_scenario(load_scenario(files[i]), o, files[i]);
          r.code = 0;
        } catch (const SolverError& e) {
          r.code = e.exit_code();
          r.message = e.what();
        } catch (const std::exception& e) {
          r.code = 1;
          r.message = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    int rc = 0;
    for (const auto& r : results) {
      if (r.code == 0) {
        std::printf("[ ok ] %s\n", r.name.c_str());
      } else {
        std::printf("[fail] %s (exit %d)\n", r.name.c_str(), r.code);
        std::fprintf(stderr, "error in %s: %s\n", r.name.c_str(), r.message.c_str());
        rc = r.code;
      }
    }
    return rc;
  }

  return 1;
}
