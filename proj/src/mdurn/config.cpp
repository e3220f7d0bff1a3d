#include "mdurn/config.hpp"

#include <fstream>
#include <set>

#include "mdurn/errors.hpp"

namespace mdurn {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void require_object(const json& node, const std::string& where,
                    std::initializer_list<const char*> known) {
  if (!node.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : node.items()) {
    (void)value;
    bool found = false;
    for (const char* k : known)
      if (key == k) {
        found = true;
        break;
      }
    if (!found) fail(where, "unknown key \"" + key + "\"");
  }
}

std::int64_t get_int(const json& node, const std::string& where,
                     const char* key, std::optional<std::int64_t> fallback = {}) {
  if (!node.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing required key \"") + key + "\"");
  }
  const json& v = node.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    fail(where, std::string("\"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

double get_real(const json& node, const std::string& where, const char* key,
                std::optional<double> fallback = {}) {
  if (!node.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing required key \"") + key + "\"");
  }
  const json& v = node.at(key);
  if (!v.is_number()) fail(where, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

std::string get_string(const json& node, const std::string& where,
                       const char* key, std::optional<std::string> fallback = {}) {
  if (!node.contains(key)) {
    if (fallback) return *fallback;
    fail(where, std::string("missing required key \"") + key + "\"");
  }
  const json& v = node.at(key);
  if (!v.is_string()) fail(where, std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::vector<double> get_pmf(const json& node, const std::string& where,
                            const char* key) {
  if (!node.contains(key) || !node.at(key).is_array())
    fail(where, std::string("\"") + key + "\" must be an array of numbers");
  std::vector<double> pmf;
  for (const json& v : node.at(key)) {
    if (!v.is_number()) fail(where, std::string("\"") + key + "\" must contain numbers");
    pmf.push_back(v.get<double>());
  }
  return pmf;
}

SampleSizeModel parse_sample_size(const json& node, const std::string& where) {
  require_object(node, where,
                 {"kind", "value", "max", "pmf", "lo", "hi", "threshold",
                  "limits"});
  const std::string kind = get_string(node, where, "kind");
  if (kind == "constant")
    return SampleSizeModel::constant(get_int(node, where, "value"));
  if (kind == "uniform")
    return SampleSizeModel::uniform(get_int(node, where, "max"));
  if (kind == "table") return SampleSizeModel::table(get_pmf(node, where, "pmf"));
  if (kind == "z_threshold") {
    std::optional<SampleSizeMoments> limits;
    if (node.contains("limits")) {
      const json& l = node.at("limits");
      require_object(l, where + ".limits", {"mean", "second"});
      limits = SampleSizeMoments{get_real(l, where + ".limits", "mean"),
                                 get_real(l, where + ".limits", "second")};
    }
    return SampleSizeModel::z_threshold(get_int(node, where, "lo"),
                                        get_int(node, where, "hi"),
                                        get_real(node, where, "threshold"),
                                        limits);
  }
  fail(where, "unknown sample-size kind \"" + kind + "\"");
}

ReinforcementModel parse_reinforcement(const json& node,
                                       const std::string& where,
                                       bool allow_sequence = true) {
  require_object(node, where,
                 {"kind", "a", "b", "pmf_a", "pmf_b", "size", "p_a", "p_b",
                  "entries", "segments", "envelope"});
  const std::string kind = get_string(node, where, "kind");
  if (kind == "constant")
    return ReinforcementModel::constant_pair(get_int(node, where, "a"),
                                             get_int(node, where, "b"));
  if (kind == "product")
    return ReinforcementModel::product(get_pmf(node, where, "pmf_a"),
                                       get_pmf(node, where, "pmf_b"));
  if (kind == "shifted_multinomial")
    return ReinforcementModel::shifted_multinomial(
        get_int(node, where, "size"), get_real(node, where, "p_a"),
        get_real(node, where, "p_b"));
  if (kind == "joint_table") {
    if (!node.contains("entries") || !node.at("entries").is_array())
      fail(where, "\"entries\" must be an array of [a, b, prob] triples");
    std::vector<JointEntry> entries;
    for (const json& e : node.at("entries")) {
      if (!e.is_array() || e.size() != 3)
        fail(where, "each entry must be an [a, b, prob] triple");
      entries.push_back(JointEntry{e.at(0).get<std::int64_t>(),
                                   e.at(1).get<std::int64_t>(),
                                   e.at(2).get<double>()});
    }
    return ReinforcementModel::joint_table(std::move(entries));
  }
  if (kind == "sequence") {
    if (!allow_sequence) fail(where, "sequences cannot nest");
    if (!node.contains("segments") || !node.at("segments").is_array())
      fail(where, "\"segments\" must be an array");
    std::vector<ReinforcementModel::Segment> segments;
    std::size_t index = 0;
    for (const json& s : node.at("segments")) {
      const std::string seg_where =
          where + ".segments[" + std::to_string(index++) + "]";
      require_object(s, seg_where, {"until", "model"});
      ReinforcementModel::Segment segment{
          std::nullopt,
          parse_reinforcement(s.at("model"), seg_where + ".model",
                              /*allow_sequence=*/false)};
      if (s.contains("until"))
        segment.until = get_int(s, seg_where, "until");
      segments.push_back(std::move(segment));
    }
    if (!node.contains("envelope"))
      fail(where, "sequence models must declare an \"envelope\"");
    const json& env = node.at("envelope");
    require_object(env, where + ".envelope", {"scale", "rate"});
    return ReinforcementModel::sequence(
        std::move(segments),
        MeanEnvelope{get_real(env, where + ".envelope", "scale"),
                     get_real(env, where + ".envelope", "rate")});
  }
  fail(where, "unknown reinforcement kind \"" + kind + "\"");
}

json sample_size_to_json(const SampleSizeModel& model) {
  json node;
  switch (model.kind()) {
    case SampleSizeModel::Kind::Constant:
      node["kind"] = "constant";
      node["value"] = model.constant_value();
      break;
    case SampleSizeModel::Kind::Uniform:
      node["kind"] = "uniform";
      node["max"] = model.uniform_max();
      break;
    case SampleSizeModel::Kind::Table:
      node["kind"] = "table";
      node["pmf"] = model.table_pmf();
      break;
    case SampleSizeModel::Kind::ZThreshold:
      node["kind"] = "z_threshold";
      node["lo"] = model.threshold_lo();
      node["hi"] = model.threshold_hi();
      node["threshold"] = model.threshold();
      if (model.declared_limits())
        node["limits"] = {{"mean", model.declared_limits()->mean},
                          {"second", model.declared_limits()->second_moment}};
      break;
  }
  return node;
}

json reinforcement_to_json(const ReinforcementModel& model) {
  json node;
  switch (model.kind()) {
    case ReinforcementModel::Kind::ConstantPair:
      node["kind"] = "constant";
      node["a"] = model.constant_a();
      node["b"] = model.constant_b();
      break;
    case ReinforcementModel::Kind::Product:
      node["kind"] = "product";
      node["pmf_a"] = model.product_pmf_a();
      node["pmf_b"] = model.product_pmf_b();
      break;
    case ReinforcementModel::Kind::ShiftedMultinomial:
      node["kind"] = "shifted_multinomial";
      node["size"] = model.multinomial_size();
      node["p_a"] = model.multinomial_p_a();
      node["p_b"] = model.multinomial_p_b();
      break;
    case ReinforcementModel::Kind::JointTable: {
      node["kind"] = "joint_table";
      json entries = json::array();
      for (const auto& e : model.joint_entries())
        entries.push_back({e.a, e.b, e.weight});
      node["entries"] = std::move(entries);
      break;
    }
    case ReinforcementModel::Kind::Sequence: {
      node["kind"] = "sequence";
      json segments = json::array();
      for (const auto& seg : model.segments()) {
        json s;
        if (seg.until) s["until"] = *seg.until;
        s["model"] = reinforcement_to_json(seg.model);
        segments.push_back(std::move(s));
      }
      node["segments"] = std::move(segments);
      node["envelope"] = {{"scale", model.envelope().scale},
                          {"rate", model.envelope().rate}};
      break;
    }
  }
  return node;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "top level",
                 {"urn", "sample_size", "reinforcement", "run", "test",
                  "diagnostics"});
  ExperimentConfig config;

  if (!doc.contains("urn")) fail("top level", "missing \"urn\" section");
  const json& urn = doc.at("urn");
  require_object(urn, "urn", {"a", "b"});
  config.initial_a = get_int(urn, "urn", "a");
  config.initial_b = get_int(urn, "urn", "b");
  if (config.initial_a < 1 || config.initial_b < 1)
    fail("urn", "both initial counts must be >= 1");

  if (!doc.contains("sample_size"))
    fail("top level", "missing \"sample_size\" section");
  config.models.sample_size =
      parse_sample_size(doc.at("sample_size"), "sample_size");

  if (!doc.contains("reinforcement"))
    fail("top level", "missing \"reinforcement\" section");
  config.models.reinforcement =
      parse_reinforcement(doc.at("reinforcement"), "reinforcement");

  const json run = doc.contains("run") ? doc.at("run") : json::object();
  require_object(run, "run",
                 {"horizon", "replications", "seed", "stride", "theta",
                  "jobs"});
  config.run.horizon = get_int(run, "run", "horizon", 10000);
  config.run.replications = get_int(run, "run", "replications", 100);
  config.run.master_seed =
      static_cast<std::uint64_t>(get_int(run, "run", "seed", 1));
  config.run.stride = get_int(run, "run", "stride", 1);
  config.run.theta = get_real(run, "run", "theta", 0.05);
  config.run.jobs = static_cast<int>(get_int(run, "run", "jobs", 1));
  config.test.theta = config.run.theta;

  const json test = doc.contains("test") ? doc.at("test") : json::object();
  require_object(test, "test",
                 {"min_count_a", "min_count_b", "gamma_floor", "on_floor",
                  "z_plugin", "known_size_moments"});
  config.test.min_count_a = get_int(test, "test", "min_count_a", 30);
  config.test.min_count_b = get_int(test, "test", "min_count_b", 30);
  config.test.gamma_floor = get_real(test, "test", "gamma_floor", 1e-3);
  const std::string on_floor = get_string(test, "test", "on_floor", "flag");
  if (on_floor == "flag")
    config.test.error_on_floor = false;
  else if (on_floor == "error")
    config.test.error_on_floor = true;
  else
    fail("test", "\"on_floor\" must be \"flag\" or \"error\"");
  const std::string plugin =
      get_string(test, "test", "z_plugin", "proportion_mean");
  if (plugin == "proportion_mean")
    config.test.z_plugin = ZPlugin::ProportionMean;
  else if (plugin == "allocation")
    config.test.z_plugin = ZPlugin::Allocation;
  else
    fail("test", "\"z_plugin\" must be \"proportion_mean\" or \"allocation\"");
  if (test.contains("known_size_moments")) {
    const json& known = test.at("known_size_moments");
    require_object(known, "test.known_size_moments", {"mean", "second"});
    config.test.known_size_moments =
        SampleSizeMoments{get_real(known, "test.known_size_moments", "mean"),
                          get_real(known, "test.known_size_moments", "second")};
    if (!(config.test.known_size_moments->mean >= 1.0) ||
        config.test.known_size_moments->second_moment <
            config.test.known_size_moments->mean)
      fail("test.known_size_moments", "need mean >= 1 and second >= mean");
  }

  const json diag =
      doc.contains("diagnostics") ? doc.at("diagnostics") : json::object();
  require_object(diag, "diagnostics", {"snapshot_growth", "slope_window"});
  config.diagnostics.snapshot_growth =
      get_real(diag, "diagnostics", "snapshot_growth", 1.1);
  config.diagnostics.slope_window =
      get_real(diag, "diagnostics", "slope_window", 0.5);
  if (!(config.diagnostics.snapshot_growth > 1.0))
    fail("diagnostics", "snapshot_growth must be > 1");
  if (!(config.diagnostics.slope_window > 0.0 &&
        config.diagnostics.slope_window < 1.0))
    fail("diagnostics", "slope_window must lie in (0, 1)");

  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["urn"] = {{"a", config.initial_a}, {"b", config.initial_b}};
  doc["sample_size"] = sample_size_to_json(config.models.sample_size);
  doc["reinforcement"] = reinforcement_to_json(config.models.reinforcement);
  doc["run"] = {{"horizon", config.run.horizon},
                {"replications", config.run.replications},
                {"seed", config.run.master_seed},
                {"stride", config.run.stride},
                {"theta", config.run.theta},
                {"jobs", config.run.jobs}};
  json test = {{"min_count_a", config.test.min_count_a},
               {"min_count_b", config.test.min_count_b},
               {"gamma_floor", config.test.gamma_floor},
               {"on_floor", config.test.error_on_floor ? "error" : "flag"},
               {"z_plugin", config.test.z_plugin == ZPlugin::ProportionMean
                                ? "proportion_mean"
                                : "allocation"}};
  if (config.test.known_size_moments)
    test["known_size_moments"] = {
        {"mean", config.test.known_size_moments->mean},
        {"second", config.test.known_size_moments->second_moment}};
  doc["test"] = std::move(test);
  doc["diagnostics"] = {{"snapshot_growth", config.diagnostics.snapshot_growth},
                        {"slope_window", config.diagnostics.slope_window}};
  return doc;
}

}  // namespace mdurn
