// Command-line front end: run, compose, check-gradients.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "wordasimage/compose.hpp"
#include "wordasimage/gradcheck.hpp"
#include "wordasimage/svg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitLetterFailure = 2;
constexpr int kExitService = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace wordasimage;

  CLI::App app{"Semantic typography: deform letters toward a concept"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Optimize the letters of a word");
  std::string word, concept_word, font, letters, config_path, backend, endpoint, out_dir;
  std::uint64_t seed = 0;
  int jobs = 0;
  run->add_option("--word", word, "Word to typeset")->required();
  run->add_option("--concept", concept_word, "Concept driving the deformation (default: the word)");
  run->add_option("--font", font, "TrueType font file")->required()->check(CLI::ExistingFile);
  run->add_option("--letters", letters, "Comma-separated letter indices (default: all)");
  run->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  run->add_option("--backend", backend, "Guidance backend")->check(CLI::IsMember({"oracle", "remote", "none"}));
  run->add_option("--endpoint", endpoint, "Gradient service URL");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed");
  run->add_option("--jobs", jobs, "Parallel letter jobs")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* compose = app.add_subcommand("compose", "Assemble a word from a run manifest");
  std::string manifest, choose, compose_out;
  compose->add_option("--manifest", manifest, "manifest.json from a run")->required();
  compose->add_option("--choose", choose, "Indices of letters to take in deformed form");
  compose->add_option("--out", compose_out, "Output SVG")->required();

  auto* check = app.add_subcommand("check-gradients", "Run the finite-difference gradient suites");
  std::uint64_t check_seed = 7;
  int raster_paths = 100;
  check->add_option("--seed", check_seed, "Random seed");
  check->add_option("--paths", raster_paths, "Random paths for the rasterizer suite")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      WordJob job;
      job.word = word;
      job.concept_word = concept_word;
      job.font = font;
      job.out_dir = out_dir;
      job.jobs = jobs;
      if (!letters.empty()) job.letters = parse_index_list(letters);
      if (!config_path.empty()) {
        apply_config_json(job.config, nlohmann::json::parse(read_text_file(config_path)));
      }
      if (!backend.empty()) {
        job.config.guidance.backend = backend == "remote" ? BackendKind::Remote
                                      : backend == "none" ? BackendKind::None
                                                          : BackendKind::Oracle;
      }
      if (!endpoint.empty()) job.config.guidance.endpoint = endpoint;
      if (*seed_opt) job.config.seed = seed;

      const WordResult result = run_word(job);
      for (const auto& entry : result.manifest.at("letters")) {
        std::printf("%zu %s %s\n", entry.at("index").get<std::size_t>(),
                    entry.at("letter").get<std::string>().c_str(), entry.at("status").get<std::string>().c_str());
      }
      if (result.service_failure) return kExitService;
      return result.failed_letters > 0 ? kExitLetterFailure : kExitOk;
    }
    if (*compose) {
      const auto chosen = choose.empty() ? std::vector<std::size_t>{} : parse_index_list(choose);
      write_text_file(compose_out, compose_word(manifest, chosen));
      return kExitOk;
    }
    if (*check) {
      bool all = true;
      for (const GradCheckReport& r : run_gradient_checks(check_seed, raster_paths)) {
        std::printf("%s %s: %zu/%zu within %.0e, worst %.3e\n", r.ok() ? "PASS" : "FAIL", r.name.c_str(),
                    r.within_tolerance, r.probed, r.tolerance, r.worst);
        all = all && r.ok();
      }
      return all ? kExitOk : kExitLetterFailure;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.code()), e.what());
    switch (e.code()) {
      case ErrorCode::ServiceUnavailable:
      case ErrorCode::ProtocolError: return kExitService;
      case ErrorCode::InvalidArgument:
      case ErrorCode::EmptyWord: return kExitUsage;
      default: return kExitLetterFailure;
    }
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: malformed config: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
