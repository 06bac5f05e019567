#include "abon/workload.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "abon/errors.hpp"
#include "abon/rng.hpp"

namespace abon {

using nlohmann::json;

Workload generate_workload(const WorkloadConfig& config) {
  if (config.n_prompts < 1) {
    throw MisuseError("WorkloadConfig: n_prompts must be >= 1");
  }

  Workload workload;
  workload.config = config;
  workload.worlds.reserve(config.n_prompts);
  for (std::size_t i = 0; i < config.n_prompts; ++i) {
    rng::Stream stream{config.seed, static_cast<std::uint64_t>(i),
                       rng::purpose::kWorkload};
    SimWorld w;
    w.prompt_id = i;
    w.mu = stream.normal(0.0, config.mu_spread);
    w.sigma = config.sigma_lo +
              (config.sigma_hi - config.sigma_lo) * stream.uniform();

    const bool saturated = stream.uniform() < config.saturated_fraction;
    const double gap_lo =
        saturated ? config.saturated_gap_lo : config.improvable_gap_lo;
    const double gap_hi =
        saturated ? config.saturated_gap_hi : config.improvable_gap_hi;
    w.greedy_reward =
        w.mu + (gap_lo + (gap_hi - gap_lo) * stream.uniform()) * w.sigma;

    w.full_length = config.full_length;
    w.length_sigma = config.length_sigma;
    w.epsilon = config.epsilon;
    w.mid_noise_sigma0 = config.mid_noise_scale * w.sigma;
    w.calibration_mode = config.mode;
    w.eval_noise_sigma = config.eval_noise_sigma;
    validate_world(w);
    workload.worlds.push_back(w);
  }
  return workload;
}

void save_workload_jsonl(const Workload& workload,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_workload_jsonl: cannot open " + path.string());
  for (const SimWorld& w : workload.worlds) {
    json j;
    j["prompt_id"] = w.prompt_id;
    j["mu"] = w.mu;
    j["sigma"] = w.sigma;
    j["greedy_reward"] = w.greedy_reward;
    j["full_length"] = w.full_length;
    j["epsilon"] = w.epsilon;
    j["mid_noise_sigma0"] = w.mid_noise_sigma0;
    j["length_sigma"] = w.length_sigma;
    j["calibration_mode"] =
        w.calibration_mode == CalibrationMode::exact ? "exact" : "noisy";
    j["eval_noise_sigma"] = w.eval_noise_sigma;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("save_workload_jsonl: write failed");
}

std::vector<SimWorld> load_workload_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_workload_jsonl: cannot open " + path.string());
  std::vector<SimWorld> worlds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw IoError("load_workload_jsonl: invalid JSON at line " +
                    std::to_string(line_no));
    }
    SimWorld w;
    w.prompt_id = j.at("prompt_id").get<PromptId>();
    w.mu = j.at("mu").get<double>();
    w.sigma = j.at("sigma").get<double>();
    w.greedy_reward = j.at("greedy_reward").get<double>();
    w.full_length = j.at("full_length").get<int>();
    w.epsilon = j.at("epsilon").get<double>();
    w.mid_noise_sigma0 = j.at("mid_noise_sigma0").get<double>();
    w.length_sigma = j.value("length_sigma", 0.0);
    w.calibration_mode = j.value("calibration_mode", "exact") == "noisy"
                             ? CalibrationMode::noisy
                             : CalibrationMode::exact;
    w.eval_noise_sigma = j.value("eval_noise_sigma", 0.0);
    validate_world(w);
    worlds.push_back(w);
  }
  return worlds;
}

}  // namespace abon
