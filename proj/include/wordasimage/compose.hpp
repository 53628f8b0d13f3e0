#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordasimage/engine.hpp"
#include "wordasimage/glyph_path.hpp"

namespace wordasimage {

struct WordJob {
  std::string word;
  std::string concept_word;  // empty: use `word`
  std::filesystem::path font;
  std::optional<std::vector<std::size_t>> letters;  // empty: every letter with an outline
  std::filesystem::path out_dir;
  RunConfig config;
  int jobs = 0;  // 0: one per selected letter, capped at the CPU count
};

struct WordResult {
  nlohmann::json manifest;
  int failed_letters = 0;
  bool service_failure = false;  // some letter stopped on ServiceUnavailable
};

/// Optimizes the selected letters independently and writes original.svg,
/// original_<i>.json, deformed_<i>.{svg,json}, trace_<i>.csv and
/// manifest.json into `out_dir`. Letter failures are recorded in the
/// manifest. Throws for argument errors before any work starts.
WordResult run_word(const WordJob& job);

/// One entry per letter: its outline (possibly with no subpaths, for blank
/// glyphs) and its advance in em units.
std::string compose_svg(const std::vector<GlyphPath>& letters);

/// Lays out the word from a manifest, using the deformed outline for each
/// index in `deformed`. Throws MissingArtifact.
std::string compose_word(const std::filesystem::path& manifest_path, const std::vector<std::size_t>& deformed);

/// Every original/deformed selection for an n-letter word, as bit masks
/// (bit i set = letter i deformed).
std::vector<std::vector<bool>> enumerate_choices(std::size_t n);

/// Parses "0,2,5". Throws InvalidArgument.
std::vector<std::size_t> parse_index_list(const std::string& text);

}  // namespace wordasimage
