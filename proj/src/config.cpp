#include "fogperc/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ConfigError(field, message);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

// Typed parse of one INI value. Whole-string consumption is required so
// "10GHz" or "1.5x" are rejected rather than silently truncated.
template <typename T>
T parse_value(const std::string& field, const std::string& raw) {
  const std::string text = trim(raw);
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(field, "expected a boolean, got '" + text + "'");
  } else if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else {
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw ConfigError(field, "cannot parse '" + text + "'");
    return v;
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& field, const std::string& raw) {
  std::vector<T> out;
  std::istringstream in(raw);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_value<T>(field, item));
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& field, const std::string& raw)>;

template <typename T>
Setter bind(T ExperimentConfig::*section, auto member) {
  return [section, member](ExperimentConfig& cfg, const std::string& field, const std::string& raw) {
    auto& target = (cfg.*section).*member;
    target = parse_value<std::decay_t<decltype(target)>>(field, raw);
  };
}

const std::map<std::string, Setter>& setters() {
  using E = ExperimentConfig;
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // scenario
    t["scenario.road_length"] = bind(&E::scenario, &ScenarioConfig::road_length);
    t["scenario.num_blocks"] = bind(&E::scenario, &ScenarioConfig::num_blocks);
    t["scenario.num_vues"] = bind(&E::scenario, &ScenarioConfig::num_vues);
    t["scenario.num_faps"] = bind(&E::scenario, &ScenarioConfig::num_faps);
    t["scenario.num_rrhs"] = bind(&E::scenario, &ScenarioConfig::num_rrhs);
    t["scenario.d_exp"] = bind(&E::scenario, &ScenarioConfig::d_exp);
    t["scenario.block_bits"] = bind(&E::scenario, &ScenarioConfig::block_bits);
    t["scenario.cycles_per_bit"] = bind(&E::scenario, &ScenarioConfig::cycles_per_bit);
    t["scenario.tau_max_min"] = bind(&E::scenario, &ScenarioConfig::tau_max_min);
    t["scenario.tau_max_max"] = bind(&E::scenario, &ScenarioConfig::tau_max_max);
    t["scenario.tau_dll"] = bind(&E::scenario, &ScenarioConfig::tau_dll);
    t["scenario.value_levels"] = bind(&E::scenario, &ScenarioConfig::value_levels);
    t["scenario.steps_per_episode"] = bind(&E::scenario, &ScenarioConfig::steps_per_episode);
    t["scenario.dt"] = bind(&E::scenario, &ScenarioConfig::dt);
    t["scenario.speed_min"] = bind(&E::scenario, &ScenarioConfig::speed_min);
    t["scenario.speed_max"] = bind(&E::scenario, &ScenarioConfig::speed_max);
    t["scenario.bidirectional"] = bind(&E::scenario, &ScenarioConfig::bidirectional);
    t["scenario.sensing_radius"] = bind(&E::scenario, &ScenarioConfig::sensing_radius);
    t["scenario.tx_power"] = bind(&E::scenario, &ScenarioConfig::tx_power);
    t["scenario.fap_y"] = bind(&E::scenario, &ScenarioConfig::fap_y);
    t["scenario.fap_coverage"] = bind(&E::scenario, &ScenarioConfig::fap_coverage);
    t["scenario.fap_f_max"] = bind(&E::scenario, &ScenarioConfig::fap_f_max);
    t["scenario.rrh_y"] = bind(&E::scenario, &ScenarioConfig::rrh_y);
    t["scenario.cloud_f_max"] = bind(&E::scenario, &ScenarioConfig::cloud_f_max);
    t["scenario.p_down"] = bind(&E::scenario, &ScenarioConfig::p_down);
    t["scenario.p_up"] = bind(&E::scenario, &ScenarioConfig::p_up);
    t["scenario.p_regen"] = bind(&E::scenario, &ScenarioConfig::p_regen);
    t["scenario.initial_value"] = [](E& c, const std::string& f, const std::string& raw) {
      const auto v = parse_value<std::string>(f, raw);
      if (v == "uniform") c.scenario.initial_value = InitialValue::kUniform;
      else if (v == "top") c.scenario.initial_value = InitialValue::kTop;
      else throw ConfigError(f, "expected 'uniform' or 'top'");
    };
    // radio
    t["radio.num_rbs"] = bind(&E::radio, &RadioConfig::num_rbs);
    t["radio.total_bandwidth"] = bind(&E::radio, &RadioConfig::total_bandwidth);
    t["radio.rb_bandwidth"] = bind(&E::radio, &RadioConfig::rb_bandwidth);
    t["radio.noise_power"] = bind(&E::radio, &RadioConfig::noise_power);
    t["radio.fronthaul_delay"] = bind(&E::radio, &RadioConfig::fronthaul_delay);
    t["radio.pathloss_exponent"] = bind(&E::radio, &RadioConfig::pathloss_exponent);
    t["radio.pathloss_ref_db"] = bind(&E::radio, &RadioConfig::pathloss_ref_db);
    t["radio.rrh_cluster_size"] = bind(&E::radio, &RadioConfig::rrh_cluster_size);
    t["radio.fading_variance"] = bind(&E::radio, &RadioConfig::fading_variance);
    // satisfaction
    t["satisfaction.eps1"] = bind(&E::weights, &SatisfactionWeights::eps1);
    t["satisfaction.eps2"] = bind(&E::weights, &SatisfactionWeights::eps2);
    // matching
    t["matching.rule"] = [](E& c, const std::string& f, const std::string& raw) {
      const auto v = parse_value<std::string>(f, raw);
      if (v == "hold-first") c.matching.rule = ProposalRule::kHoldFirst;
      else if (v == "displace") c.matching.rule = ProposalRule::kDisplace;
      else throw ConfigError(f, "expected 'hold-first' or 'displace'");
    };
    t["matching.exhaustive_cap"] = bind(&E::matching, &MatchingConfig::exhaustive_cap);
    t["matching.max_swaps"] = bind(&E::matching, &MatchingConfig::max_swaps);
    t["matching.debug_trace"] = bind(&E::matching, &MatchingConfig::debug_trace);
    // training
    t["training.episodes"] = bind(&E::training, &TrainingConfig::episodes);
    t["training.gamma"] = bind(&E::training, &TrainingConfig::gamma);
    t["training.buffer_capacity"] = bind(&E::training, &TrainingConfig::buffer_capacity);
    t["training.batch_size"] = bind(&E::training, &TrainingConfig::batch_size);
    t["training.soft_update"] = bind(&E::training, &TrainingConfig::soft_update);
    t["training.lr_critic"] = bind(&E::training, &TrainingConfig::lr_critic);
    t["training.lr_actor"] = bind(&E::training, &TrainingConfig::lr_actor);
    t["training.actor_hidden"] = bind(&E::training, &TrainingConfig::actor_hidden);
    t["training.critic_hidden"] = bind(&E::training, &TrainingConfig::critic_hidden);
    t["training.embed_dim"] = bind(&E::training, &TrainingConfig::embed_dim);
    t["training.attention_dim"] = bind(&E::training, &TrainingConfig::attention_dim);
    t["training.noise_start"] = bind(&E::training, &TrainingConfig::noise_start);
    t["training.noise_end"] = bind(&E::training, &TrainingConfig::noise_end);
    t["training.penalty"] = bind(&E::training, &TrainingConfig::penalty);
    t["training.action_reg"] = bind(&E::training, &TrainingConfig::action_reg);
    t["training.noise_correlation"] = bind(&E::training, &TrainingConfig::noise_correlation);
    t["training.reward_scale"] = bind(&E::training, &TrainingConfig::reward_scale);
    t["training.warmup"] = bind(&E::training, &TrainingConfig::warmup);
    t["training.update_every"] = bind(&E::training, &TrainingConfig::update_every);
    t["training.shared_embedding"] = bind(&E::training, &TrainingConfig::shared_embedding);
    t["training.target_policy"] = [](E& c, const std::string& f, const std::string& raw) {
      const auto v = parse_value<std::string>(f, raw);
      if (v == "target-actors") c.training.target_policy = TargetPolicy::kTargetActors;
      else if (v == "stored-next-actions") c.training.target_policy = TargetPolicy::kStoredNextActions;
      else throw ConfigError(f, "expected 'target-actors' or 'stored-next-actions'");
    };
    // sweep
    t["sweep.vues"] = [](E& c, const std::string& f, const std::string& raw) { c.sweep.vues = parse_list<int>(f, raw); };
    t["sweep.d_exp"] = [](E& c, const std::string& f, const std::string& raw) { c.sweep.d_exp = parse_list<double>(f, raw); };
    t["sweep.seeds"] = bind(&E::sweep, &SweepConfig::seeds);
    t["sweep.policy"] = bind(&E::sweep, &SweepConfig::policy);
    t["sweep.episodes"] = bind(&E::sweep, &SweepConfig::episodes);
    // oracle
    t["oracle.instances"] = bind(&E::oracle, &OracleConfig::instances);
    t["oracle.max_size"] = bind(&E::oracle, &OracleConfig::max_size);
    t["oracle.freq_instances"] = bind(&E::oracle, &OracleConfig::freq_instances);
    t["oracle.freq_resolution"] = bind(&E::oracle, &OracleConfig::freq_resolution);
    // experiment
    t["experiment.seed"] = [](E& c, const std::string& f, const std::string& raw) { c.seed = parse_value<std::uint64_t>(f, raw); };
    t["experiment.run_id"] = [](E& c, const std::string& f, const std::string& raw) { c.run_id = parse_value<std::string>(f, raw); };
    t["experiment.baseline"] = [](E& c, const std::string& f, const std::string& raw) { c.baseline = parse_value<std::string>(f, raw); };
    t["experiment.eval_episodes"] = [](E& c, const std::string& f, const std::string& raw) { c.eval_episodes = parse_value<int>(f, raw); };
    return t;
  }();
  return table;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(road_length > 0, "scenario.road_length", "must be > 0");
  require(num_blocks >= 1, "scenario.num_blocks", "must be >= 1");
  require(num_vues >= 1, "scenario.num_vues", "must be >= 1");
  require(num_faps >= 0, "scenario.num_faps", "must be >= 0");
  require(num_rrhs >= 1, "scenario.num_rrhs", "must be >= 1");
  require(d_exp > 0 && d_exp <= road_length, "scenario.d_exp", "must lie in (0, road_length]");
  require(block_bits > 0, "scenario.block_bits", "must be > 0");
  require(cycles_per_bit > 0, "scenario.cycles_per_bit", "must be > 0");
  require(tau_max_min > 0, "scenario.tau_max_min", "must be > 0");
  require(tau_max_max >= tau_max_min, "scenario.tau_max_max", "must be >= tau_max_min");
  require(tau_dll > 0, "scenario.tau_dll", "must be > 0");
  require(value_levels >= 2, "scenario.value_levels", "must be >= 2");
  require(steps_per_episode >= 1, "scenario.steps_per_episode", "must be >= 1");
  require(dt > 0, "scenario.dt", "must be > 0");
  require(speed_min >= 0, "scenario.speed_min", "must be >= 0");
  require(speed_max >= speed_min, "scenario.speed_max", "must be >= speed_min");
  require(sensing_radius > 0, "scenario.sensing_radius", "must be > 0");
  require(tx_power > 0, "scenario.tx_power", "must be > 0");
  require(fap_coverage > 0, "scenario.fap_coverage", "must be > 0");
  require(fap_f_max > 0, "scenario.fap_f_max", "must be > 0");
  require(cloud_f_max > 0, "scenario.cloud_f_max", "must be > 0");
  require(p_down >= 0 && p_up >= 0 && p_regen >= 0, "scenario.p_down", "chain probabilities must be >= 0");
  require(p_down + p_up + p_regen <= 1.0, "scenario.p_regen", "p_down + p_up + p_regen must be <= 1");
}

int RadioConfig::rb_count() const {
  if (num_rbs > 0) return num_rbs;
  return static_cast<int>(std::floor(total_bandwidth / rb_bandwidth + 1e-9));
}

void RadioConfig::validate(int num_rrhs) const {
  require(num_rbs >= 0, "radio.num_rbs", "must be >= 0");
  require(rb_bandwidth > 0, "radio.rb_bandwidth", "must be > 0");
  require(total_bandwidth > 0, "radio.total_bandwidth", "must be > 0");
  require(rb_count() >= 1, "radio.num_rbs", "at least one RB required");
  require(noise_power > 0, "radio.noise_power", "must be > 0");
  require(fronthaul_delay >= 0, "radio.fronthaul_delay", "must be >= 0");
  require(pathloss_exponent > 0, "radio.pathloss_exponent", "must be > 0");
  require(rrh_cluster_size >= 1 && rrh_cluster_size <= num_rrhs, "radio.rrh_cluster_size",
          "must lie in [1, num_rrhs]");
  require(fading_variance >= 0, "radio.fading_variance", "must be >= 0");
}

void SatisfactionWeights::validate() const {
  require(eps1 >= 0, "satisfaction.eps1", "must be >= 0");
  require(eps2 >= 0, "satisfaction.eps2", "must be >= 0");
}

void TrainingConfig::validate() const {
  require(episodes >= 1, "training.episodes", "must be >= 1");
  require(gamma >= 0 && gamma < 1, "training.gamma", "must lie in [0, 1)");
  require(buffer_capacity >= 1, "training.buffer_capacity", "must be >= 1");
  require(batch_size >= 1, "training.batch_size", "must be >= 1");
  require(soft_update >= 0 && soft_update <= 1, "training.soft_update", "must lie in [0, 1]");
  require(lr_critic > 0, "training.lr_critic", "must be > 0");
  require(lr_actor > 0, "training.lr_actor", "must be > 0");
  require(actor_hidden >= 1, "training.actor_hidden", "must be >= 1");
  require(critic_hidden >= 1, "training.critic_hidden", "must be >= 1");
  require(embed_dim >= 1, "training.embed_dim", "must be >= 1");
  require(attention_dim >= 1, "training.attention_dim", "must be >= 1");
  require(noise_start >= 0 && noise_end >= 0, "training.noise_start", "noise scales must be >= 0");
  require(reward_scale > 0, "training.reward_scale", "must be > 0");
  require(action_reg >= 0, "training.action_reg", "must be >= 0");
  require(noise_correlation >= 0 && noise_correlation <= 1, "training.noise_correlation", "must be in [0, 1]");
  require(warmup >= 0, "training.warmup", "must be >= 0");
  require(update_every >= 1, "training.update_every", "must be >= 1");
}

void SweepConfig::validate() const {
  for (int k : vues) require(k >= 1, "sweep.vues", "entries must be >= 1");
  for (double d : d_exp) require(d > 0, "sweep.d_exp", "entries must be > 0");
  require(seeds >= 1, "sweep.seeds", "must be >= 1");
  require(episodes >= 1, "sweep.episodes", "must be >= 1");
  require(policy == "distance-full" || policy == "max-sum-rate" || policy == "random" || policy == "proposed",
          "sweep.policy", "expected distance-full, max-sum-rate, random or proposed");
}

void ExperimentConfig::validate() const {
  scenario.validate();
  radio.validate(scenario.num_rrhs);
  weights.validate();
  training.validate();
  sweep.validate();
  require(matching.exhaustive_cap >= 1, "matching.exhaustive_cap", "must be >= 1");
  require(matching.max_swaps >= 0, "matching.max_swaps", "must be >= 0");
  require(baseline == "distance-full" || baseline == "max-sum-rate", "experiment.baseline",
          "expected distance-full or max-sum-rate");
  require(radio.rb_count() >= scenario.num_vues, "radio.num_rbs", "need at least one RB per VUE");
  require(eval_episodes >= 1, "experiment.eval_episodes", "must be >= 1");
  require(oracle.instances >= 1, "oracle.instances", "must be >= 1");
  require(oracle.max_size >= 1, "oracle.max_size", "must be >= 1");
  require(oracle.freq_resolution > 0 && oracle.freq_resolution < 1, "oracle.freq_resolution", "must lie in (0, 1)");
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  ExperimentConfig cfg;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(section, "keys must live inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      const auto it = table.find(field);
      if (it == table.end()) throw ConfigError(field, "unknown key");
      std::string raw = value.data();
      // Strip trailing inline comments.
      if (const auto pos = raw.find_first_of("#;"); pos != std::string::npos) raw = raw.substr(0, pos);
      it->second(cfg, field, raw);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  const auto& s = c.scenario;
  const auto& r = c.radio;
  const auto& t = c.training;
  json j;
  j["scenario"] = {
      {"road_length_m", s.road_length}, {"num_blocks", s.num_blocks}, {"num_vues", s.num_vues},
      {"num_faps", s.num_faps}, {"num_rrhs", s.num_rrhs}, {"d_exp_m", s.d_exp},
      {"block_bits", s.block_bits}, {"cycles_per_bit", s.cycles_per_bit},
      {"tau_max_min_s", s.tau_max_min}, {"tau_max_max_s", s.tau_max_max}, {"tau_dll_s", s.tau_dll},
      {"value_levels", s.value_levels}, {"steps_per_episode", s.steps_per_episode}, {"dt_s", s.dt},
      {"speed_min_mps", s.speed_min}, {"speed_max_mps", s.speed_max}, {"bidirectional", s.bidirectional},
      {"sensing_radius_m", s.sensing_radius}, {"tx_power_w", s.tx_power}, {"fap_y_m", s.fap_y},
      {"fap_coverage_m", s.fap_coverage}, {"fap_f_max_hz", s.fap_f_max}, {"rrh_y_m", s.rrh_y},
      {"cloud_f_max_hz", s.cloud_f_max}, {"p_down", s.p_down}, {"p_up", s.p_up}, {"p_regen", s.p_regen},
      {"initial_value", s.initial_value == InitialValue::kUniform ? "uniform" : "top"}};
  j["radio"] = {{"num_rbs", r.rb_count()}, {"total_bandwidth_hz", r.total_bandwidth},
                {"rb_bandwidth_hz", r.rb_bandwidth}, {"noise_power_w", r.noise_power},
                {"fronthaul_delay_s", r.fronthaul_delay}, {"pathloss_exponent", r.pathloss_exponent},
                {"pathloss_ref_db", r.pathloss_ref_db}, {"rrh_cluster_size", r.rrh_cluster_size},
                {"fading_variance", r.fading_variance}};
  j["satisfaction"] = {{"eps1", c.weights.eps1}, {"eps2_per_s", c.weights.eps2}};
  j["matching"] = {{"rule", c.matching.rule == ProposalRule::kHoldFirst ? "hold-first" : "displace"},
                   {"exhaustive_cap", c.matching.exhaustive_cap}, {"max_swaps", c.matching.max_swaps}};
  j["training"] = {{"episodes", t.episodes}, {"gamma", t.gamma}, {"buffer_capacity", t.buffer_capacity},
                   {"batch_size", t.batch_size}, {"soft_update", t.soft_update}, {"lr_critic", t.lr_critic},
                   {"lr_actor", t.lr_actor}, {"actor_hidden", t.actor_hidden}, {"critic_hidden", t.critic_hidden},
                   {"embed_dim", t.embed_dim}, {"attention_dim", t.attention_dim},
                   {"noise_start", t.noise_start}, {"noise_end", t.noise_end}, {"penalty", t.penalty},
                   {"reward_scale", t.reward_scale}, {"action_reg", t.action_reg}, {"noise_correlation", t.noise_correlation}, {"warmup", t.warmup}, {"update_every", t.update_every},
                   {"shared_embedding", t.shared_embedding},
                   {"target_policy", t.target_policy == TargetPolicy::kTargetActors ? "target-actors"
                                                                                    : "stored-next-actions"}};
  j["sweep"] = {{"vues", c.sweep.vues}, {"d_exp_m", c.sweep.d_exp}, {"seeds", c.sweep.seeds},
                {"policy", c.sweep.policy}, {"episodes", c.sweep.episodes}};
  j["oracle"] = {{"instances", c.oracle.instances}, {"max_size", c.oracle.max_size},
                 {"freq_instances", c.oracle.freq_instances}, {"freq_resolution", c.oracle.freq_resolution}};
  j["experiment"] = {{"seed", c.seed}, {"run_id", c.run_id}, {"baseline", c.baseline},
                     {"eval_episodes", c.eval_episodes}};
  return j;
}

}  // namespace fogperc
