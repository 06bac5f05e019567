#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abon/generator.hpp"
#include "abon/rng.hpp"
#include "abon/types.hpp"

namespace abon::dataset {

/// Two on-policy responses to the same prompt, labeled by reward difference:
/// 1 when reward_1 - reward_2 > epsilon, 0 on a tie (|diff| <= epsilon),
/// -1 otherwise.
struct PreferencePair {
  std::string prompt_text;
  std::string response_1;
  std::string response_2;
  double reward_1 = 0.0;
  double reward_2 = 0.0;
  int label = 0;
};

/// Win/Tie/Loss label from raw rewards. Antisymmetric in (r1, r2).
int label_pair(double r1, double r2, double eps);

/// Truncation granularity. Synthetic responses truncate at token (word)
/// boundaries; raw text pairs truncate at characters. The unit is recorded
/// on each emitted record.
enum class TruncationUnit { chars, tokens };

/// One supervised example: the response (full or truncated) plus the
/// target token the evaluator should predict after the self-eval prompt.
struct SelfEvalRecord {
  std::string prompt;
  std::string response;
  std::string target;  // kGoodToken for Win/Tie sources, kBadToken for Loss
  bool truncated = false;
  std::optional<int> truncation_point;
  TruncationUnit unit = TruncationUnit::chars;

  /// Full model input: prompt, response, then the self-eval prompt.
  std::string input_text() const;
};

/// Expands one pair into records: one per response (a Tie yields the good
/// target for both; a Win/Loss pair yields one of each), plus, when
/// `truncate` is set, one truncated variant per response at a uniform cut
/// in [1, T-1]. Responses of length 1 cannot be truncated; their variant
/// is skipped and the caller's stats count it.
std::vector<SelfEvalRecord> pair_to_records(const PreferencePair& pair,
                                            rng::Stream& stream, bool truncate,
                                            TruncationUnit unit);

/// Fraction of tie-labeled pairs. Throws MisuseError on an empty list.
double tie_rate(std::span<const PreferencePair> pairs);

struct BuildOptions {
  bool truncate = true;
  TruncationUnit unit = TruncationUnit::chars;
  std::uint64_t seed = 0;
  int jobs = 1;  // pairs expand in parallel; the writer stays ordered
};

struct BuildStats {
  std::size_t pairs = 0;
  std::size_t records = 0;
  std::size_t ties = 0;
  std::size_t skipped_truncations = 0;
};

/// Writes one JSON object per record, ordered by input pair index.
/// Truncation points come from per-pair streams keyed by (seed, index),
/// so output bytes depend only on (pairs, options).
BuildStats build_dataset(std::span<const PreferencePair> pairs,
                         const BuildOptions& options, std::ostream& out);

/// Synthetic on-policy pairs: both rewards drawn iid Normal(mu, sigma) per
/// pair, word-list responses of 8..40 tokens, labeled with `eps`.
std::vector<PreferencePair> generate_synthetic_pairs(std::size_t n,
                                                     std::uint64_t seed,
                                                     double mu, double sigma,
                                                     double eps);

/// Remote reward source: overwrites pair rewards with the normalized
/// self-evaluation score of each response, using the same scoring call
/// shape the generation backends expose. Labels are untouched; relabel
/// with label_pair afterwards.
void score_pairs(std::span<PreferencePair> pairs, Generator& scorer,
                 int jobs = 1);

std::vector<PreferencePair> load_pairs_jsonl(const std::filesystem::path& path);
void save_pairs_jsonl(std::span<const PreferencePair> pairs,
                      const std::filesystem::path& path);

}  // namespace abon::dataset
