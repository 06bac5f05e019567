#include "abon/dataset.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "abon/errors.hpp"
#include "abon/parallel.hpp"
#include "abon/scoring.hpp"

namespace abon::dataset {

using nlohmann::json;

int label_pair(double r1, double r2, double eps) {
  if (eps < 0.0) throw MisuseError("label_pair: eps must be >= 0");
  const double diff = r1 - r2;
  if (diff > eps) return 1;
  if (diff < -eps) return -1;
  return 0;
}

std::string SelfEvalRecord::input_text() const {
  std::string out = prompt;
  out += response;
  out += "\n";
  out += kSelfEvalPrompt;
  return out;
}

namespace {

const char* unit_name(TruncationUnit unit) {
  return unit == TruncationUnit::chars ? "chars" : "tokens";
}

// Whitespace-delimited word count; synthetic responses use one word per
// token, so this is their exact token length.
std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

int response_length(const std::string& response, TruncationUnit unit) {
  if (unit == TruncationUnit::chars) {
    return static_cast<int>(response.size());
  }
  return static_cast<int>(split_tokens(response).size());
}

std::string truncate_response(const std::string& response, TruncationUnit unit,
                              int point) {
  if (unit == TruncationUnit::chars) {
    return response.substr(0, static_cast<std::size_t>(point));
  }
  const auto tokens = split_tokens(response);
  std::string out;
  for (int i = 0; i < point; ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

void emit_for_response(const PreferencePair& pair, const std::string& response,
                       bool is_good, rng::Stream& stream, bool truncate,
                       TruncationUnit unit,
                       std::vector<SelfEvalRecord>& out) {
  const std::string target{is_good ? kGoodToken : kBadToken};

  SelfEvalRecord full;
  full.prompt = pair.prompt_text;
  full.response = response;
  full.target = target;
  full.unit = unit;
  out.push_back(full);

  if (!truncate) return;
  const int length = response_length(response, unit);
  if (length < 2) return;  // nothing strictly between 1 and T-1 to cut at

  const int point =
      1 + static_cast<int>(stream.uniform_int(
              static_cast<std::uint64_t>(length - 1)));  // uniform in [1, T-1]
  SelfEvalRecord trunc;
  trunc.prompt = pair.prompt_text;
  trunc.response = truncate_response(response, unit, point);
  trunc.target = target;
  trunc.truncated = true;
  trunc.truncation_point = point;
  trunc.unit = unit;
  out.push_back(trunc);
}

json record_to_json(const SelfEvalRecord& r) {
  json j;
  j["prompt"] = r.prompt;
  j["response"] = r.response;
  j["eval_prompt"] = std::string(kSelfEvalPrompt);
  j["target"] = r.target;
  j["truncated"] = r.truncated;
  if (r.truncation_point.has_value()) {
    j["truncation_point"] = *r.truncation_point;
  } else {
    j["truncation_point"] = nullptr;
  }
  j["truncation_unit"] = unit_name(r.unit);
  return j;
}

}  // namespace

std::vector<SelfEvalRecord> pair_to_records(const PreferencePair& pair,
                                            rng::Stream& stream, bool truncate,
                                            TruncationUnit unit) {
  if (pair.response_1.empty() || pair.response_2.empty()) {
    throw MisuseError("pair_to_records: responses must be non-empty");
  }
  // Win or Tie sources train the good token; Loss sources the bad one.
  const bool good_1 = pair.label >= 0;
  const bool good_2 = pair.label <= 0;

  std::vector<SelfEvalRecord> records;
  records.reserve(truncate ? 4 : 2);
  emit_for_response(pair, pair.response_1, good_1, stream, truncate, unit,
                    records);
  emit_for_response(pair, pair.response_2, good_2, stream, truncate, unit,
                    records);
  return records;
}

double tie_rate(std::span<const PreferencePair> pairs) {
  if (pairs.empty()) throw MisuseError("tie_rate: empty pair list");
  std::size_t ties = 0;
  for (const auto& p : pairs) {
    if (p.label == 0) ++ties;
  }
  return static_cast<double>(ties) / static_cast<double>(pairs.size());
}

BuildStats build_dataset(std::span<const PreferencePair> pairs,
                         const BuildOptions& options, std::ostream& out) {
  // Pairs expand independently on per-pair streams keyed by (seed, index);
  // only the writer below is serialized, in input order, so output bytes
  // never depend on the worker count.
  std::vector<std::string> chunks(pairs.size());
  std::vector<std::uint8_t> record_counts(pairs.size());
  parallel_for(pairs.size(), options.jobs, [&](std::size_t i) {
    rng::Stream stream{options.seed, static_cast<std::uint64_t>(i),
                       rng::purpose::kTruncationPoint};
    const auto records =
        pair_to_records(pairs[i], stream, options.truncate, options.unit);
    std::string chunk;
    for (const auto& r : records) {
      chunk += record_to_json(r).dump();
      chunk += '\n';
    }
    chunks[i] = std::move(chunk);
    record_counts[i] = static_cast<std::uint8_t>(records.size());
  });

  BuildStats stats;
  stats.pairs = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].label == 0) ++stats.ties;
    if (options.truncate) {
      stats.skipped_truncations += 4 - record_counts[i];
    }
    stats.records += record_counts[i];
    out << chunks[i];
  }
  if (!out) throw IoError("build_dataset: write failed");
  return stats;
}

namespace {

// Small fixed vocabulary for synthetic responses; one word is one token.
constexpr std::array<std::string_view, 24> kWords = {
    "alpha", "bravo", "cedar", "delta",  "ember", "fjord", "gamma", "harbor",
    "inlet", "joule", "krill", "lumen",  "maple", "nadir", "ochre", "prism",
    "quill", "raven", "sable", "tundra", "umber", "vapor", "wharf", "zephyr"};

std::string synthetic_response(rng::Stream& stream) {
  const int n_tokens = 8 + static_cast<int>(stream.uniform_int(33));  // 8..40
  std::string text;
  for (int t = 0; t < n_tokens; ++t) {
    if (!text.empty()) text += ' ';
    text += kWords[stream.uniform_int(kWords.size())];
  }
  return text;
}

}  // namespace

std::vector<PreferencePair> generate_synthetic_pairs(std::size_t n,
                                                     std::uint64_t seed,
                                                     double mu, double sigma,
                                                     double eps) {
  std::vector<PreferencePair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    rng::Stream stream{seed, static_cast<std::uint64_t>(i),
                       rng::purpose::kSyntheticPair};
    PreferencePair p;
    p.prompt_text = "prompt-" + std::to_string(i);
    p.reward_1 = stream.normal(mu, sigma);
    p.reward_2 = stream.normal(mu, sigma);
    p.response_1 = synthetic_response(stream);
    p.response_2 = synthetic_response(stream);
    p.label = label_pair(p.reward_1, p.reward_2, eps);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void score_pairs(std::span<PreferencePair> pairs, Generator& scorer,
                 int jobs) {
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    PreferencePair& p = pairs[i];
    auto score_one = [&](const std::string& response) {
      Sample s;
      s.prompt_id = static_cast<PromptId>(i);
      s.prompt_text = p.prompt_text;
      s.text = response;
      s.finished = true;
      return scoring::normalize(scorer.self_evaluate(s));
    };
    p.reward_1 = score_one(p.response_1);
    p.reward_2 = score_one(p.response_2);
  });
}

std::vector<PreferencePair> load_pairs_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_pairs_jsonl: cannot open " + path.string());
  std::vector<PreferencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw IoError("load_pairs_jsonl: invalid JSON at line " +
                    std::to_string(line_no));
    }
    PreferencePair p;
    p.prompt_text = j.at("prompt").get<std::string>();
    p.response_1 = j.at("response_1").get<std::string>();
    p.response_2 = j.at("response_2").get<std::string>();
    p.reward_1 = j.at("reward_1").get<double>();
    p.reward_2 = j.at("reward_2").get<double>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_pairs_jsonl(std::span<const PreferencePair> pairs,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_pairs_jsonl: cannot open " + path.string());
  for (const auto& p : pairs) {
    json j;
    j["prompt"] = p.prompt_text;
    j["response_1"] = p.response_1;
    j["response_2"] = p.response_2;
    j["reward_1"] = p.reward_1;
    j["reward_2"] = p.reward_2;
    j["label"] = p.label;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("save_pairs_jsonl: write failed");
}

}  // namespace abon::dataset
