#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "delaysynth/csv.hpp"
#include "delaysynth/evaluation.hpp"
#include "delaysynth/ingest.hpp"
#include "delaysynth/npy.hpp"
#include "delaysynth/propagation.hpp"
#include "delaysynth/refinery.hpp"
#include "delaysynth/toy.hpp"
#include "run_config.hpp"

namespace delaysynth::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Stream tags for derive_seed(master_seed, ...).
constexpr std::uint64_t kGenerateTag = 1;
constexpr std::uint64_t kEvaluateTag = 2;
constexpr std::uint64_t kShuffleTag = 3;
constexpr std::uint64_t kCrossTag = 4;

struct CommonOptions {
  std::string config;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::vector<std::string> kinds;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_profile) {
  cmd->add_option("-c,--config", o.config, "TOML-style run configuration")->check(CLI::ExistingFile);
  if (with_profile) cmd->add_option("--profile", o.profile, "desk: 50 rounds, 5 realisations, 10 repeats");
  cmd->add_option("--seed", o.seed, "Override master_seed");
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_option("--kind", o.kinds, "Arr and/or Dep (default: config kinds)");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = load_run_config(o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config));
  cfg.apply_profile(o.profile);
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.kinds.empty()) {
    cfg.kinds.clear();
    for (const auto& k : o.kinds) {
      try {
        cfg.kinds.push_back(parse_kind(k));
      } catch (const ArgumentError& e) {
        throw UsageError(e.what());
      }
    }
  }
  cfg.validate();
  return cfg;
}

std::size_t kind_index(DelayKind k) { return k == DelayKind::Arrival ? 0 : 1; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// Airports for one kind: the configured list, else every "<AP>_<Kind>.npy" in `dir`.
std::vector<std::string> airports_for(const RunConfig& cfg, const fs::path& dir, DelayKind kind) {
  if (!cfg.airports.empty()) return cfg.airports;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  const std::string suffix = "_" + std::string(short_tag(kind)) + ".npy";
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) out.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no *" + suffix + " matrices in " + dir.string());
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

struct Tensor {
  std::vector<std::string> airports;
  NpyArray array;

  std::size_t realisations() const { return array.shape[1]; }
  std::size_t days() const { return array.shape[2]; }

  Matrix slice(std::size_t airport, std::size_t realisation) const {
    const std::size_t block = days() * kHours;
    const auto begin = array.data.begin() + static_cast<std::ptrdiff_t>((airport * realisations() + realisation) * block);
    return Matrix(days(), kHours, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(block)));
  }
};

Tensor load_tensor(const fs::path& dir, const Region& region, DelayKind kind) {
  const std::string stem = tensor_stem(region, kind);
  Tensor t;
  t.airports = read_lines(dir / (stem + ".airports.txt"));
  t.array = read_npy(dir / (stem + ".npy"));
  const auto& s = t.array.shape;
  if (s.size() != 4 || s[3] != kHours) throw FormatError(stem + ".npy: expected shape (airports, realisations, days, 24)");
  if (s[0] != t.airports.size())
    throw FormatError(stem + ".npy: " + std::to_string(s[0]) + " airports in tensor, " +
                      std::to_string(t.airports.size()) + " in airport list");
  if (s[1] == 0 || s[2] == 0) throw FormatError(stem + ".npy: empty tensor");
  return t;
}

std::string write_csv_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ostringstream ss;
  body(ss);
  write_file_atomic(path, ss.str());
  return path.filename().string();
}

// ---------------------------------------------------------------- ingest

json cmd_ingest(const RunConfig& cfg, const fs::path& input, const fs::path& output) {
  if (!fs::is_directory(input)) throw IoError("not a directory: " + input.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .csv files in " + input.string());

  ParsedFlights all;
  for (const auto& f : files) {
    auto parsed = parse_flight_csv(f, cfg.ingest.schema);
    all.records.insert(all.records.end(), std::make_move_iterator(parsed.records.begin()),
                       std::make_move_iterator(parsed.records.end()));
    all.rejects.insert(all.rejects.end(), parsed.rejects.begin(), parsed.rejects.end());
  }
  if (all.records.empty()) throw FormatError("no parseable flight records in " + input.string());

  const std::vector<std::string> airports =
      cfg.airports.empty() ? busiest_airports(all.records, DelayKind::Arrival, cfg.ingest.top_n) : cfg.airports;

  std::map<std::string, TimeZone> zones;
  for (const auto& ap : airports) {
    const auto it = cfg.ingest.timezones.find(ap);
    zones.emplace(ap, TimeZone::load(it == cfg.ingest.timezones.end() ? cfg.ingest.default_timezone : it->second));
  }

  Date first = cfg.ingest.first_day.value_or(Date{});
  Date last = cfg.ingest.last_day.value_or(Date{});
  if (!cfg.ingest.first_day || !cfg.ingest.last_day) {
    std::optional<std::chrono::sys_days> lo, hi;
    for (const auto& r : all.records) {
      for (const auto& [ap, when] : {std::pair{&r.origin, r.sched_dep}, std::pair{&r.destination, r.sched_arr}}) {
        const auto z = zones.find(*ap);
        if (z == zones.end()) continue;
        const auto day = std::chrono::floor<std::chrono::days>(z->second.to_local(when));
        if (!lo || day < *lo) lo = day;
        if (!hi || day > *hi) hi = day;
      }
    }
    if (!lo) throw FormatError("no operations at the selected airports");
    if (!cfg.ingest.first_day) first = Date{*lo};
    if (!cfg.ingest.last_day) last = Date{*hi};
  }
  const auto calendar = date_range(first, last);

  ensure_dir(output);
  json written = json::array();
  for (const auto& ap : airports) {
    for (const auto kind : cfg.kinds) {
      const DelayMatrix m = aggregate_hourly(all.records, ap, kind, cfg.region.unit, calendar, zones.at(ap));
      const auto name = matrix_file_name(ap, kind);
      save_matrix(m, output / name);
      written.push_back(name);
    }
  }
  write_csv_file(output / "rejects.csv", [&](std::ostream& out) {
    write_csv_row(out, {"file", "line", "reason"});
    for (const auto& r : all.rejects)
      write_csv_row(out, {fs::path(r.source).filename().string(), std::to_string(r.line), r.reason});
  });
  return {{"command", "ingest"},        {"records", all.records.size()}, {"rejects", all.rejects.size()},
          {"airports", airports},       {"first_day", format_date(first)}, {"last_day", format_date(last)},
          {"files", written}};
}

// -------------------------------------------------------------- generate

json cmd_generate(const RunConfig& cfg, const fs::path& input, const fs::path& output) {
  json summary = {{"command", "generate"}, {"tensors", json::array()}};
  for (const auto kind : cfg.kinds) {
    const auto airports = airports_for(cfg, input, kind);
    std::vector<DelayMatrix> reals;
    for (const auto& ap : airports) reals.push_back(load_matrix(input / matrix_file_name(ap, kind), cfg.region));
    const std::size_t days = reals.front().days();
    for (const auto& m : reals) {
      if (m.kind != kind) throw FormatError(m.airport + ": matrix kind does not match its file name");
      if (m.days() != days)
        throw FormatError("day counts differ between airports (" + reals.front().airport + ": " +
                          std::to_string(days) + ", " + m.airport + ": " + std::to_string(m.days()) + ")");
    }
    if (cfg.days && *cfg.days != days)
      throw FormatError("matrices have " + std::to_string(days) + " days, config expects " + std::to_string(*cfg.days));

    ensure_dir(output);
    const std::string stem = tensor_stem(cfg.region, kind);
    const std::vector<std::size_t> shape{airports.size(), cfg.n_realisations, days, kHours};
    NpyWriter writer(output / (stem + ".npy"), shape);
    json per_airport = json::array();
    std::string round_log;
    for (std::size_t a = 0; a < reals.size(); ++a) {
      const std::uint64_t seed = derive_seed(cfg.master_seed, {kGenerateTag, kind_index(kind), a});
      std::vector<std::vector<RoundRecord>> rounds(cfg.n_realisations);
      const auto sets = batch_generate(reals[a], cfg.sampler, cfg.refinery, cfg.n_realisations, seed, cfg.threads,
                                       [&rounds](std::size_t i, const RoundRecord& r) { rounds[i].push_back(r); });
      for (std::size_t i = 0; i < rounds.size(); ++i) {
        for (const auto& r : rounds[i]) {
          json line = to_json(r);
          line["airport"] = airports[a];
          line["realisation"] = i;
          round_log += line.dump() + "\n";
        }
      }
      json prov = json::array();
      for (const auto& s : sets) {
        writer.write(s.values.data());
        prov.push_back(to_json(s.provenance));
      }
      per_airport.push_back({{"airport", airports[a]}, {"seed", seed}, {"realisations", std::move(prov)}});
    }
    writer.finish();

    std::string list;
    for (const auto& ap : airports) list += ap + "\n";
    write_file_atomic(output / (stem + ".airports.txt"), list);
    write_file_atomic(output / (stem + ".rounds.jsonl"), round_log);
    const json provenance = {{"tensor", stem + ".npy"},
                             {"shape", shape},
                             {"dtype", "<f8"},
                             {"unit", std::string(to_string(cfg.region.unit))},
                             {"kind", std::string(to_string(kind))},
                             {"first_day", format_date(reals.front().day_labels.front())},
                             {"last_day", format_date(reals.front().day_labels.back())},
                             {"config", to_json(cfg)},
                             {"airports", std::move(per_airport)}};
    write_file_atomic(output / (stem + ".provenance.json"), provenance.dump(1) + "\n");
    summary["tensors"].push_back({{"file", stem + ".npy"}, {"shape", shape}});
  }
  return summary;
}

// -------------------------------------------------------------- evaluate

json cmd_evaluate(const RunConfig& cfg, const fs::path& real_dir, const fs::path& synth_dir, const fs::path& output) {
  json summary = {{"command", "evaluate"}, {"reports", json::array()}};
  ensure_dir(output);
  for (const auto kind : cfg.kinds) {
    const std::string stem = tensor_stem(cfg.region, kind);
    const Tensor tensor = load_tensor(synth_dir, cfg.region, kind);
    const std::size_t n_sets = std::min(cfg.evaluation.n_datasets, tensor.realisations());

    std::vector<ScoreDistribution> scores;
    std::vector<CorrelationReport> correlations;
    std::map<std::string, Matrix> real_by_airport, synth_by_airport;
    json pca_files = json::array();
    for (std::size_t a = 0; a < tensor.airports.size(); ++a) {
      const auto& ap = tensor.airports[a];
      const DelayMatrix real = load_matrix(real_dir / matrix_file_name(ap, kind), cfg.region);
      if (real.days() != tensor.days())
        throw FormatError(ap + ": real matrix has " + std::to_string(real.days()) + " days, tensor has " +
                          std::to_string(tensor.days()));
      std::vector<double> all_scores;
      Matrix pooled;
      for (std::size_t j = 0; j < n_sets; ++j) {
        const Matrix synth = tensor.slice(a, j);
        DiscriminatorConfig dc = cfg.discriminator_eval;
        dc.rng_seed = derive_seed(cfg.master_seed, {kEvaluateTag, kind_index(kind), a, j});
        const auto s = discriminative_score(real.values, synth, dc, cfg.evaluation.n_repeats, cfg.threads);
        all_scores.insert(all_scores.end(), s.scores.begin(), s.scores.end());
        pooled = j == 0 ? synth : vstack(pooled, synth);
      }
      scores.push_back(summarize_scores(all_scores));
      correlations.push_back(correlation_score(real.values, pooled));
      const Matrix first = tensor.slice(a, 0);
      const auto pca = pca_project(real.values, first);
      pca_files.push_back(write_csv_file(output / (stem + "_pca_" + ap + ".csv"),
                                         [&](std::ostream& out) { write_projection_csv(out, pca); }));
      real_by_airport.emplace(ap, real.values);
      synth_by_airport.emplace(ap, first);
    }

    json report = {{"kind", std::string(to_string(kind))}, {"datasets_per_airport", n_sets}};
    report["scores"] = write_csv_file(output / (stem + "_scores.csv"), [&](std::ostream& out) {
      write_csv_row(out, {"airport", "n_scores", "min", "median", "max"});
      for (std::size_t a = 0; a < scores.size(); ++a)
        write_csv_row(out, {tensor.airports[a], std::to_string(scores[a].scores.size()), format_double(scores[a].min),
                            format_double(scores[a].median), format_double(scores[a].max)});
    });
    report["correlation"] = write_csv_file(output / (stem + "_correlation.csv"), [&](std::ostream& out) {
      write_csv_row(out, {"airport", "n_vectors", "min", "median", "max"});
      for (std::size_t a = 0; a < correlations.size(); ++a)
        write_csv_row(out, {tensor.airports[a], std::to_string(correlations[a].per_synthetic_max.size()),
                            format_double(correlations[a].min), format_double(correlations[a].median),
                            format_double(correlations[a].max)});
    });
    report["pca"] = pca_files;
    if (cfg.evaluation.cross_classification && tensor.airports.size() >= 2) {
      DiscriminatorConfig dc = cfg.discriminator_eval;
      dc.rng_seed = derive_seed(cfg.master_seed, {kCrossTag, kind_index(kind)});
      const auto cross =
          cross_classification(real_by_airport, synth_by_airport, dc, cfg.evaluation.n_repeats, cfg.threads);
      report["cross_classification"] = write_csv_file(
          output / (stem + "_cross.csv"), [&](std::ostream& out) { write_cross_class_csv(out, cross); });
    }
    summary["reports"].push_back(report);
  }
  return summary;
}

// ----------------------------------------------------------- propagation

json cmd_propagation(const RunConfig& cfg, const fs::path& real_dir, const std::optional<fs::path>& synth_dir,
                     const fs::path& output, bool shuffled, std::size_t realisation) {
  json summary = {{"command", "propagation"}, {"outputs", json::array()}};
  ensure_dir(output);
  for (const auto kind : cfg.kinds) {
    const std::string stem = tensor_stem(cfg.region, kind);
    std::optional<Tensor> tensor;
    if (synth_dir) {
      tensor = load_tensor(*synth_dir, cfg.region, kind);
      if (realisation >= tensor->realisations())
        throw ArgumentError("realisation " + std::to_string(realisation) + " not in tensor (" +
                            std::to_string(tensor->realisations()) + " realisations)");
    }
    const auto airports = tensor ? tensor->airports : airports_for(cfg, real_dir, kind);

    std::map<std::string, Matrix> real, synth, shuf;
    const std::uint64_t shuffle_seed = cfg.gc_seed.value_or(derive_seed(cfg.master_seed, {kShuffleTag}));
    for (std::size_t a = 0; a < airports.size(); ++a) {
      const DelayMatrix m = load_matrix(real_dir / matrix_file_name(airports[a], kind), cfg.region);
      if (tensor) {
        if (m.days() != tensor->days()) throw FormatError(airports[a] + ": real and synthetic day counts differ");
        synth.emplace(airports[a], tensor->slice(a, realisation));
      }
      if (shuffled) {
        Rng rng(derive_seed(shuffle_seed, {kind_index(kind), a}));
        shuf.emplace(airports[a], shuffle_surrogate(m.values, rng));
      }
      real.emplace(airports[a], m.values);
    }

    std::vector<GcResult> results = gc_matrix(real, cfg.gc, SeriesKind::Real, cfg.threads);
    if (tensor) {
      auto s = gc_matrix(synth, cfg.gc, SeriesKind::Synthetic, cfg.threads);
      results.insert(results.end(), s.begin(), s.end());
    }
    if (shuffled) {
      auto s = gc_matrix(shuf, cfg.gc, SeriesKind::Shuffled, cfg.threads);
      results.insert(results.end(), s.begin(), s.end());
    }
    const auto csv = write_csv_file(output / (stem + "_gc.csv"), [&](std::ostream& out) { write_gc_csv(out, results); });
    const auto hist_name = stem + "_gc_histogram.json";
    write_file_atomic(output / hist_name, to_json(log10p_histogram(results)).dump(1) + "\n");
    summary["outputs"].push_back({{"csv", csv}, {"histogram", hist_name}, {"rows", results.size()}});
  }
  return summary;
}

// ------------------------------------------------------------------- toy

json cmd_toy(const RunConfig& cfg, const fs::path& output, std::size_t n_airports, std::size_t days, double coupling) {
  toy::ProcessParams params;
  params.days = days;
  ensure_dir(output);
  json files = json::array();
  for (const auto kind : cfg.kinds) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, {kind_index(kind)});
    auto family = coupling > 0.0 ? toy::coupled_family(n_airports, params, coupling, seed)
                                 : toy::shifted_family(std::vector<double>(n_airports, 0.0), params, seed);
    for (auto& m : family) {
      m.kind = kind;
      if (cfg.region.unit == DelayUnit::Seconds) {
        for (double& v : m.values.data()) v *= 60.0;
        m.unit = DelayUnit::Seconds;
      }
      const auto name = matrix_file_name(m.airport, kind);
      save_matrix(m, output / name);
      files.push_back(name);
    }
  }
  return {{"command", "toy"}, {"files", files}};
}

std::string error_line(std::string_view category, std::string_view message) {
  return json{{"error", category}, {"message", message}}.dump();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic hourly airport delay series: ingest, generate, evaluate, propagation", "delaysynth"};
  app.require_subcommand(1);

  CommonOptions ingest_o, gen_o, eval_o, prop_o, toy_o;
  std::string in_dir, out_dir, real_dir, synth_dir;

  auto* ingest = app.add_subcommand("ingest", "Aggregate raw flight CSVs into per-airport hourly matrices");
  add_common(ingest, ingest_o, false);
  ingest->add_option("-i,--input", in_dir, "Directory of flight CSV files")->required();
  ingest->add_option("-o,--output", out_dir, "Directory for <AIRPORT>_<Arr|Dep>.npy matrices")->required();

  auto* generate = app.add_subcommand("generate", "Write <REGION><Kind>.npy tensors of synthetic datasets");
  add_common(generate, gen_o, true);
  generate->add_option("-i,--input", in_dir, "Directory of real matrices")->required();
  generate->add_option("-o,--output", out_dir, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Discriminative, correlation and PCA reports");
  add_common(evaluate, eval_o, true);
  evaluate->add_option("-r,--real", real_dir, "Directory of real matrices")->required();
  evaluate->add_option("-s,--synthetic", synth_dir, "Directory holding generate output")->required();
  evaluate->add_option("-o,--output", out_dir, "Report directory")->required();

  bool shuffled = false;
  std::size_t realisation = 0;
  auto* propagation = app.add_subcommand("propagation", "Granger-causality tests between airport pairs");
  add_common(propagation, prop_o, false);
  propagation->add_option("-r,--real", real_dir, "Directory of real matrices")->required();
  propagation->add_option("-s,--synthetic", synth_dir, "Directory holding generate output");
  propagation->add_option("-o,--output", out_dir, "Report directory")->required();
  propagation->add_flag("--shuffled", shuffled, "Also test shuffled surrogates of the real matrices");
  propagation->add_option("--realisation", realisation, "Synthetic realisation to test");

  std::size_t toy_airports = 4, toy_days = 600;
  double coupling = 0.0;
  auto* toy_cmd = app.add_subcommand("toy", "Write matrices from the built-in toy delay process");
  add_common(toy_cmd, toy_o, false);
  toy_cmd->add_option("-o,--output", out_dir, "Output directory")->required();
  toy_cmd->add_option("--airports", toy_airports, "Number of airports")->check(CLI::Range(2, 1000));
  toy_cmd->add_option("--days", toy_days, "Days per matrix")->check(CLI::PositiveNumber);
  toy_cmd->add_option("--coupling", coupling, "Shared-factor coupling (0: independent airports)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }

    json result;
    if (ingest->parsed()) {
      result = cmd_ingest(resolve(ingest_o), in_dir, out_dir);
    } else if (generate->parsed()) {
      result = cmd_generate(resolve(gen_o), in_dir, out_dir);
    } else if (evaluate->parsed()) {
      result = cmd_evaluate(resolve(eval_o), real_dir, synth_dir, out_dir);
    } else if (propagation->parsed()) {
      result = cmd_propagation(resolve(prop_o), real_dir,
                               synth_dir.empty() ? std::nullopt : std::optional<fs::path>(synth_dir), out_dir,
                               shuffled, realisation);
    } else if (toy_cmd->parsed()) {
      result = cmd_toy(resolve(toy_o), out_dir, toy_airports, toy_days, coupling);
    }
    out << result.dump() << "\n";
    return kOk;
  } catch (const UsageError& e) {
    err << error_line("usage", e.what()) << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    err << error_line("data", e.what()) << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << error_line("data", e.what()) << "\n";
    return kDataError;
  } catch (const ArgumentError& e) {
    err << error_line("data", e.what()) << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << error_line("internal", e.what()) << "\n";
    return kInternal;
  }
}

}  // namespace delaysynth::cli
