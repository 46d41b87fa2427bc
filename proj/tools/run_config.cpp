#include "run_config.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "delaysynth/config.hpp"

namespace delaysynth::cli {
namespace {

using nlohmann::json;

// Reads keys out of one config table and complains about leftovers.
class Table {
 public:
  Table(const json& j, std::string name) : name_(std::move(name)) {
    if (j.is_null()) return;
    if (!j.is_object()) throw UsageError("config: '" + name_ + "' must be a table");
    j_ = &j;
  }

  ~Table() noexcept(false) {
    if (!j_ || std::uncaught_exceptions()) return;
    for (const auto& [key, value] : j_->items())
      if (!seen_.contains(key)) throw UsageError("config: unknown key '" + qualified(key) + "'");
  }

  const json& sub(const std::string& key) {
    seen_.insert(key);
    static const json null;
    return j_ && j_->contains(key) ? j_->at(key) : null;
  }

  std::string child_name(const std::string& key) const { return qualified(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    const json& v = sub(key);
    if (v.is_null()) return;
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw UsageError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) {
            out = v.get<T>();
          } else {
            if (v.get<std::int64_t>() < 0) throw UsageError("");
            out = static_cast<T>(v.get<std::int64_t>());
          }
        } else {
          out = v.get<T>();
        }
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception&) {
      throw UsageError("config: bad value for '" + qualified(key) + "': " + v.dump());
    }
  }

 private:
  std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const json* j_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

template <class F>
auto parse_or_usage(F&& f) {
  try {
    return f();
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const FormatError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

void read_discriminator(Table& parent, const std::string& key, DiscriminatorConfig& cfg) {
  Table t(parent.sub(key), parent.child_name(key));
  t.get("n_blocks", cfg.n_blocks);
  t.get("layers_per_block", cfg.layers_per_block);
  t.get("filters", cfg.filters);
  t.get("kernel_size", cfg.kernel_size);
  t.get("epochs", cfg.epochs);
  t.get("learning_rate", cfg.learning_rate);
  t.get("l2_rate", cfg.l2_rate);
  t.get("batch_size", cfg.batch_size);
}

}  // namespace

void RunConfig::apply_profile(std::string_view profile) {
  if (profile.empty() || profile == "full") return;
  if (profile != "desk") throw UsageError("unknown profile '" + std::string(profile) + "' (expected desk or full)");
  refinery.iterations = 50;
  n_realisations = 5;
  evaluation.n_repeats = 10;
}

void RunConfig::validate() const {
  try {
    sampler.validate();
    refinery.validate();
    discriminator_eval.validate();
    gc.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (n_realisations < 1) throw UsageError("config: n_realisations must be >= 1");
  if (threads < 1) throw UsageError("config: threads must be >= 1");
  if (evaluation.n_datasets < 1) throw UsageError("config: evaluation.n_datasets must be >= 1");
  if (evaluation.n_repeats < 1) throw UsageError("config: evaluation.n_repeats must be >= 1");
  if (ingest.top_n < 1) throw UsageError("config: ingest.top_n must be >= 1");
  if (kinds.empty()) throw UsageError("config: kinds must not be empty");
  std::set<std::string> unique(airports.begin(), airports.end());
  if (unique.size() != airports.size()) throw UsageError("config: airports must be unique");
  if (ingest.first_day && ingest.last_day && *ingest.last_day < *ingest.first_day)
    throw UsageError("config: ingest.last_day precedes ingest.first_day");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  {
    Table top(j, "");
    std::string region = "EU";
    top.get("region", region);
    cfg.region = parse_or_usage([&] { return Region::parse(region); });
    top.get("airports", cfg.airports);
    std::vector<std::string> kinds;
    top.get("kinds", kinds);
    if (!kinds.empty()) {
      cfg.kinds.clear();
      for (const auto& k : kinds) cfg.kinds.push_back(parse_or_usage([&] { return parse_kind(k); }));
    }
    top.get("n_realisations", cfg.n_realisations);
    std::size_t days = 0;
    top.get("days", days);
    if (days > 0) cfg.days = days;
    top.get("master_seed", cfg.master_seed);
    const json& tj = top.sub("threads");
    if (tj.is_string() && tj.get<std::string>() == "auto") {
      cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    } else if (!tj.is_null()) {
      if (!tj.is_number_integer()) throw UsageError("config: threads must be an integer or \"auto\"");
      cfg.threads = tj.get<int>();
    }

    {
      Table s(top.sub("sampler"), "sampler");
      s.get("night_hours", cfg.sampler.night_hours);
      s.get("n_quantiles", cfg.sampler.n_quantiles);
      std::string variant(to_string(cfg.sampler.variant));
      s.get("variant", variant);
      cfg.sampler.variant = parse_or_usage([&] { return parse_variant(variant); });
    }
    {
      Table r(top.sub("refinery"), "refinery");
      r.get("iterations", cfg.refinery.iterations);
      r.get("flag_threshold", cfg.refinery.flag_threshold);
      r.get("skip_refinement", cfg.refinery.skip_refinement);
      read_discriminator(r, "discriminator", cfg.refinery.disc_cfg);
    }
    read_discriminator(top, "discriminator", cfg.discriminator_eval);
    {
      Table e(top.sub("evaluation"), "evaluation");
      e.get("n_datasets", cfg.evaluation.n_datasets);
      e.get("n_repeats", cfg.evaluation.n_repeats);
      e.get("cross_classification", cfg.evaluation.cross_classification);
    }
    {
      Table p(top.sub("propagation"), "propagation");
      p.get("max_lag", cfg.gc.max_lag);
      std::string mode(to_string(cfg.gc.concat_mode));
      p.get("concat_mode", mode);
      cfg.gc.concat_mode = parse_or_usage([&] { return parse_concat_mode(mode); });
      p.get("select_lag_bic", cfg.gc.select_lag_bic);
      p.get("max_bic_lag", cfg.gc.max_bic_lag);
      p.get("first_difference", cfg.gc.first_difference);
      p.get("standardize_hours", cfg.gc.standardize_hours);
      std::uint64_t seed = 0;
      p.get("rng_seed", seed);
      if (!p.sub("rng_seed").is_null()) cfg.gc_seed = seed;
    }
    {
      Table in(top.sub("ingest"), "ingest");
      in.get("top_n", cfg.ingest.top_n);
      std::string day;
      in.get("first_day", day);
      if (!day.empty()) cfg.ingest.first_day = parse_or_usage([&] { return parse_date(day); });
      day.clear();
      in.get("last_day", day);
      if (!day.empty()) cfg.ingest.last_day = parse_or_usage([&] { return parse_date(day); });
      in.get("timezone", cfg.ingest.default_timezone);
      in.get("timestamp_format", cfg.ingest.schema.timestamp_format);
      {
        Table c(in.sub("columns"), "ingest.columns");
        auto& s = cfg.ingest.schema;
        c.get("flight_id", s.flight_id);
        c.get("origin", s.origin);
        c.get("destination", s.destination);
        c.get("sched_dep", s.sched_dep);
        c.get("act_dep", s.act_dep);
        c.get("sched_arr", s.sched_arr);
        c.get("act_arr", s.act_arr);
      }
      const json& tz = in.sub("timezones");
      if (!tz.is_null()) {
        if (!tz.is_object()) throw UsageError("config: ingest.timezones must be a table");
        for (const auto& [airport, zone] : tz.items()) {
          if (!zone.is_string()) throw UsageError("config: ingest.timezones." + airport + " must be a string");
          cfg.ingest.timezones[airport] = zone.get<std::string>();
        }
      }
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
  if (!path) return {};
  try {
    return run_config_from_json(load_config(*path));
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
}

json to_json(const RunConfig& cfg) {
  json kinds = json::array();
  for (auto k : cfg.kinds) kinds.push_back(std::string(short_tag(k)));
  json j = {{"region", std::string(to_string(cfg.region.name))},
            {"unit", std::string(to_string(cfg.region.unit))},
            {"airports", cfg.airports},
            {"kinds", kinds},
            {"n_realisations", cfg.n_realisations},
            {"master_seed", cfg.master_seed},
            {"sampler", delaysynth::to_json(cfg.sampler)},
            {"refinery", delaysynth::to_json(cfg.refinery)},
            {"discriminator", delaysynth::to_json(cfg.discriminator_eval)},
            {"evaluation",
             {{"n_datasets", cfg.evaluation.n_datasets},
              {"n_repeats", cfg.evaluation.n_repeats},
              {"cross_classification", cfg.evaluation.cross_classification}}},
            {"propagation",
             {{"max_lag", cfg.gc.max_lag},
              {"concat_mode", std::string(to_string(cfg.gc.concat_mode))},
              {"select_lag_bic", cfg.gc.select_lag_bic},
              {"max_bic_lag", cfg.gc.max_bic_lag},
              {"first_difference", cfg.gc.first_difference},
              {"standardize_hours", cfg.gc.standardize_hours}}}};
  j["days"] = cfg.days ? json(*cfg.days) : json();
  return j;
}

std::string tensor_stem(const Region& region, DelayKind kind) {
  return std::string(to_string(region.name)) + std::string(short_tag(kind));
}

std::string matrix_file_name(const std::string& airport, DelayKind kind) {
  return airport + "_" + std::string(short_tag(kind)) + ".npy";
}

}  // namespace delaysynth::cli
