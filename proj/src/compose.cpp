#include "wordasimage/compose.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "wordasimage/font.hpp"
#include "wordasimage/svg.hpp"
#include "wordasimage/utf8.hpp"

namespace wordasimage {

namespace {

struct LetterSlot {
  std::string text;  // UTF-8
  char32_t code = 0;
  GlyphPath original;  // no subpaths for blank glyphs
  bool selected = false;
  std::optional<LetterResult> result;
  std::string ingest_error;
  std::optional<ErrorCode> ingest_code;
};

std::string letter_file(const char* stem, std::size_t i, const char* ext) {
  return std::string(stem) + "_" + std::to_string(i) + ext;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "bad index list '" + text + "'");
    }
    out.push_back(std::stoul(item));
    pos = comma + 1;
  }
  return out;
}

std::vector<std::vector<bool>> enumerate_choices(std::size_t n) {
  if (n >= 8 * sizeof(std::size_t) - 1) throw Error(ErrorCode::InvalidArgument, "word too long to enumerate");
  std::vector<std::vector<bool>> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<bool> choice(n);
    for (std::size_t i = 0; i < n; ++i) choice[i] = (mask >> i) & 1U;
    out.push_back(std::move(choice));
  }
  return out;
}

std::string compose_svg(const std::vector<GlyphPath>& letters) {
  double width = 0.0;
  for (const GlyphPath& g : letters) width += g.advance;
  std::string svg = svg_header(std::max(width, 1e-9), 1.0);
  double x = 0.0;
  for (const GlyphPath& g : letters) {
    for (std::size_t s = 0; s < g.subpaths.size(); ++s) {
      svg += "<path d=\"" + svg_subpath_data(g, s, {x, 0.0}) + "\" fill=\"black\" fill-rule=\"nonzero\"/>\n";
    }
    x += g.advance;
  }
  svg += "</svg>\n";
  return svg;
}

WordResult run_word(const WordJob& job) {
  if (job.word.empty()) throw Error(ErrorCode::EmptyWord, "word is empty");
  job.config.validate();
  const std::vector<char32_t> codes = decode_utf8(job.word);
  const std::string concept_word = job.concept_word.empty() ? job.word : job.concept_word;
  if (job.config.guidance.backend == BackendKind::Remote) {
    build_prompt(concept_word, job.config.guidance.prompt_template);
  }

  const FontFace font = FontFace::from_file(job.font);
  const std::string font_id = job.font.filename().string();

  std::vector<LetterSlot> slots(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    LetterSlot& slot = slots[i];
    slot.code = codes[i];
    slot.text = encode_utf8(codes[i]);
    slot.original.letter = slot.text;
    slot.original.font_id = font_id;
    slot.original.advance = font.advance_width(codes[i]) / font.units_per_em();
  }

  std::vector<std::size_t> selected;
  if (job.letters) {
    selected = *job.letters;
    for (std::size_t i : selected) {
      if (i >= codes.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "letter index " + std::to_string(i) + " out of range for a " + std::to_string(codes.size()) +
                        "-letter word");
      }
    }
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  }

  for (std::size_t i = 0; i < codes.size(); ++i) {
    LetterSlot& slot = slots[i];
    try {
      const GlyphPath cubic = to_cubics(font.outline(slot.code), slot.text, font_id);
      slot.original = subdivide_to_target(cubic, job.config.subdivision.target_for(slot.text)).path;
      if (!job.letters) selected.push_back(i);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyGlyph && !job.letters) continue;
      slot.ingest_code = e.code();
      slot.ingest_error = e.what();
    }
  }
  for (std::size_t i : selected) slots[i].selected = true;

  std::filesystem::create_directories(job.out_dir);

  std::size_t workers = job.jobs > 0 ? static_cast<std::size_t>(job.jobs)
                                     : std::min<std::size_t>(selected.size(),
                                                             std::max(1U, std::thread::hardware_concurrency()));
  workers = std::max<std::size_t>(1, std::min(workers, selected.size()));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < selected.size(); k = next++) {
      LetterSlot& slot = slots[selected[k]];
      if (slot.ingest_code) continue;
      LetterResult result;
      try {
        auto backend = make_backend(slot.original, job.config, concept_word);
        result = optimize_letter(slot.original, job.config, *backend, mix_seed(job.config.seed, selected[k]));
      } catch (const Error& e) {
        result.final_path = slot.original;
        result.failure = e.code();
        result.failure_message = e.what();
      }
      slot.result = std::move(result);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  WordResult out;
  nlohmann::json artifacts = nlohmann::json::array();
  nlohmann::json letters = nlohmann::json::array();
  std::vector<GlyphPath> originals;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const LetterSlot& slot = slots[i];
    originals.push_back(slot.original);
    nlohmann::json entry = {{"index", i}, {"letter", slot.text}, {"advance", slot.original.advance},
                            {"selected", slot.selected}, {"original", nullptr}};
    if (!slot.original.subpaths.empty()) {
      const std::string name = letter_file("original", i, ".json");
      write_json(job.out_dir / name, to_json(slot.original));
      artifacts.push_back(name);
      entry["original"] = name;
    }

    if (!slot.selected) {
      entry["status"] = "untouched";
    } else if (slot.ingest_code) {
      entry["status"] = "failed";
      entry["error"] = {{"code", to_string(*slot.ingest_code)}, {"message", slot.ingest_error}, {"iteration", -1}};
      ++out.failed_letters;
    } else {
      const LetterResult& r = *slot.result;
      const std::string trace = letter_file("trace", i, ".csv");
      write_text_file(job.out_dir / trace, trace_csv(r.trace));
      artifacts.push_back(trace);
      entry["trace"] = trace;
      if (r.ok()) {
        const std::string svg = letter_file("deformed", i, ".svg");
        const std::string json = letter_file("deformed", i, ".json");
        write_svg(r.final_path, job.out_dir / svg);
        write_json(job.out_dir / json, to_json(r.final_path));
        artifacts.push_back(svg);
        artifacts.push_back(json);
        entry["status"] = "ok";
        entry["deformed_svg"] = svg;
        entry["deformed"] = json;
        if (!r.trace.empty()) {
          const TraceRow& last = r.trace.back();
          entry["final_losses"] = {{"guidance_proxy", last.loss_guidance_proxy},
                                   {"acap", last.loss_acap},
                                   {"tone", last.loss_tone}};
        }
      } else {
        entry["status"] = "failed";
        entry["error"] = {{"code", to_string(*r.failure)},
                          {"message", r.failure_message},
                          {"iteration", r.failed_iteration}};
        ++out.failed_letters;
        if (*r.failure == ErrorCode::ServiceUnavailable) out.service_failure = true;
      }
    }
    letters.push_back(std::move(entry));
  }

  write_text_file(job.out_dir / "original.svg", compose_svg(originals));
  artifacts.insert(artifacts.begin(), "original.svg");
  artifacts.push_back("manifest.json");

  out.manifest = {{"word", job.word},
                  {"concept", concept_word},
                  {"font", job.font.string()},
                  {"font_id", font_id},
                  {"units_per_em", font.units_per_em()},
                  {"config", to_json(job.config)},
                  {"config_hash", config_hash(job.config)},
                  {"letters", std::move(letters)},
                  {"artifacts", std::move(artifacts)}};
  write_json(job.out_dir / "manifest.json", out.manifest);
  return out;
}

std::string compose_word(const std::filesystem::path& manifest_path, const std::vector<std::size_t>& deformed) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MissingArtifact, std::string("unreadable manifest: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::MissingArtifact, e.what());
  }
  const std::filesystem::path dir = manifest_path.parent_path();
  const std::set<std::size_t> chosen(deformed.begin(), deformed.end());

  std::vector<GlyphPath> letters;
  try {
    const auto& entries = manifest.at("letters");
    for (std::size_t i : chosen) {
      if (i >= entries.size()) throw Error(ErrorCode::InvalidArgument, "choice index " + std::to_string(i) + " out of range");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& entry = entries[i];
      const double advance = entry.at("advance").get<double>();
      std::string file;
      if (chosen.count(i)) {
        if (!entry.contains("deformed")) {
          throw Error(ErrorCode::MissingArtifact, "letter " + std::to_string(i) + " has no deformed outline");
        }
        file = entry.at("deformed").get<std::string>();
      } else if (!entry.at("original").is_null()) {
        file = entry.at("original").get<std::string>();
      }
      GlyphPath g;
      if (!file.empty()) {
        const std::filesystem::path p = dir / file;
        if (!std::filesystem::exists(p)) throw Error(ErrorCode::MissingArtifact, "missing artifact " + p.string());
        g = glyph_path_from_json(nlohmann::json::parse(read_text_file(p)));
      }
      // Deformed letters keep the original advance.
      g.advance = advance;
      letters.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MissingArtifact, std::string("malformed manifest: ") + e.what());
  }
  return compose_svg(letters);
}

}  // namespace wordasimage
