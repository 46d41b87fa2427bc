#include "delaysynth/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "delaysynth/csv.hpp"
#include "delaysynth/npy.hpp"
#include "json.hpp"

namespace delaysynth {
namespace {

using namespace std::chrono;

bool valid_airport_code(std::string_view code) {
  return !code.empty() && std::all_of(code.begin(), code.end(), [](unsigned char c) {
    return std::isdigit(c) || std::isupper(c);
  });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name, const std::string& source) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError(source + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::optional<seconds> FlightRecord::delay(DelayKind kind) const {
  if (kind == DelayKind::Departure) {
    if (!act_dep) return std::nullopt;
    return *act_dep - sched_dep;
  }
  if (!act_arr) return std::nullopt;
  return *act_arr - sched_arr;
}

Timestamp parse_timestamp(std::string_view text, std::string_view format) {
  const std::string s = trim(text);
  auto bad = [&] { return FormatError("malformed timestamp '" + std::string(text) + "'"); };
  if (s.empty()) throw bad();
  if (format == "epoch") {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw bad();
    return Timestamp{seconds{v}};
  }
  std::tm tm{};
  tm.tm_mday = 1;
  std::istringstream in(s);
  in >> std::get_time(&tm, std::string(format).c_str());
  if (in.fail()) throw bad();
  in >> std::ws;
  if (!in.eof()) throw bad();
  const year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                           day{static_cast<unsigned>(tm.tm_mday)}};
  if (!ymd.ok() || tm.tm_hour > 23 || tm.tm_min > 59 || tm.tm_sec > 60) throw bad();
  return sys_days{ymd} + hours{tm.tm_hour} + minutes{tm.tm_min} + seconds{tm.tm_sec};
}

ParsedFlights parse_flight_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_flight_csv(in, schema, path.string());
}

ParsedFlights parse_flight_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw FormatError(source + ": empty file");
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  const std::size_t c_id = column_index(header, schema.flight_id, source);
  const std::size_t c_origin = column_index(header, schema.origin, source);
  const std::size_t c_dest = column_index(header, schema.destination, source);
  const std::size_t c_sdep = column_index(header, schema.sched_dep, source);
  const std::size_t c_adep = column_index(header, schema.act_dep, source);
  const std::size_t c_sarr = column_index(header, schema.sched_arr, source);
  const std::size_t c_aarr = column_index(header, schema.act_arr, source);

  ParsedFlights out;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    const std::size_t line = reader.line();
    auto reject = [&](std::string reason) { out.rejects.push_back({source, line, std::move(reason)}); };
    if (row.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
      continue;
    }
    try {
      FlightRecord rec;
      rec.flight_id = trim(row[c_id]);
      rec.origin = trim(row[c_origin]);
      rec.destination = trim(row[c_dest]);
      if (!valid_airport_code(rec.origin)) throw FormatError("bad origin code '" + rec.origin + "'");
      if (!valid_airport_code(rec.destination)) throw FormatError("bad destination code '" + rec.destination + "'");
      rec.sched_dep = parse_timestamp(row[c_sdep], schema.timestamp_format);
      rec.sched_arr = parse_timestamp(row[c_sarr], schema.timestamp_format);
      if (!trim(row[c_adep]).empty()) rec.act_dep = parse_timestamp(row[c_adep], schema.timestamp_format);
      if (!trim(row[c_aarr]).empty()) rec.act_arr = parse_timestamp(row[c_aarr], schema.timestamp_format);
      if (!(rec.sched_arr > rec.sched_dep)) throw FormatError("scheduled arrival not after scheduled departure");
      out.records.push_back(std::move(rec));
    } catch (const FormatError& e) {
      reject(e.what());
    }
  }
  return out;
}

std::vector<std::string> busiest_airports(const std::vector<FlightRecord>& records, DelayKind kind, std::size_t n) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) ++counts[kind == DelayKind::Departure ? r.origin : r.destination];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) out.push_back(ranked[i].first);
  return out;
}

std::vector<Date> date_range(Date first, Date last) {
  if (!first.ok() || !last.ok()) throw ArgumentError("date_range: invalid date");
  std::vector<Date> out;
  for (sys_days d{first}; d <= sys_days{last}; d += days{1}) out.emplace_back(d);
  return out;
}

HourlyAggregate aggregate_hourly_counted(const std::vector<FlightRecord>& records, const std::string& airport,
                                         DelayKind kind, DelayUnit unit, const std::vector<Date>& calendar,
                                         const TimeZone& tz) {
  if (calendar.empty()) throw ArgumentError("aggregate_hourly: empty calendar");
  if (records.empty()) throw ArgumentError("aggregate_hourly: no records");
  std::unordered_map<long, std::size_t> day_index;
  for (std::size_t i = 0; i < calendar.size(); ++i) {
    if (i > 0 && !(calendar[i - 1] < calendar[i]))
      throw ArgumentError("aggregate_hourly: calendar must be strictly increasing");
    day_index.emplace(sys_days{calendar[i]}.time_since_epoch().count(), i);
  }

  const std::size_t n_days = calendar.size();
  std::vector<double> sums(n_days * kHours, 0.0);
  HourlyAggregate out;
  out.counts.assign(n_days * kHours, 0);
  for (const auto& rec : records) {
    const std::string& at = kind == DelayKind::Departure ? rec.origin : rec.destination;
    if (at != airport) continue;
    const auto delay = rec.delay(kind);
    if (!delay) continue;
    const Timestamp sched = kind == DelayKind::Departure ? rec.sched_dep : rec.sched_arr;
    const auto local = tz.to_local(sched);
    const auto local_day = floor<days>(local);
    const auto it = day_index.find(local_day.time_since_epoch().count());
    if (it == day_index.end()) continue;
    const auto hour = static_cast<std::size_t>(floor<hours>(local - local_day).count());
    const std::size_t cell = it->second * kHours + hour;
    sums[cell] += static_cast<double>(delay->count());
    ++out.counts[cell];
  }

  const double scale = unit == DelayUnit::Minutes ? 1.0 / 60.0 : 1.0;
  DelayMatrix& m = out.matrix;
  m.airport = airport;
  m.kind = kind;
  m.unit = unit;
  m.values = Matrix(n_days, kHours);
  m.mask.assign(n_days * kHours, false);
  m.day_labels = calendar;
  for (std::size_t cell = 0; cell < sums.size(); ++cell) {
    if (out.counts[cell] == 0) continue;
    m.mask[cell] = true;
    m.values.data()[cell] = sums[cell] / static_cast<double>(out.counts[cell]) * scale;
  }
  return out;
}

DelayMatrix aggregate_hourly(const std::vector<FlightRecord>& records, const std::string& airport, DelayKind kind,
                             DelayUnit unit, const std::vector<Date>& calendar, const TimeZone& tz) {
  return aggregate_hourly_counted(records, airport, kind, unit, calendar, tz).matrix;
}

std::filesystem::path meta_path(const std::filesystem::path& npy_path) {
  auto p = npy_path;
  p.replace_extension(".meta.json");
  return p;
}

void save_matrix(const DelayMatrix& m, const std::filesystem::path& path) {
  m.validate();
  nlohmann::json meta;
  meta["airport"] = m.airport;
  meta["kind"] = to_string(m.kind);
  meta["unit"] = to_string(m.unit);
  meta["days"] = m.days();
  meta["hours"] = kHours;
  auto& labels = meta["day_labels"] = nlohmann::json::array();
  for (const auto& d : m.day_labels) labels.push_back(format_date(d));
  auto& mask = meta["mask"] = nlohmann::json::array();
  for (std::size_t r = 0; r < m.days(); ++r) {
    auto row = nlohmann::json::array();
    for (std::size_t h = 0; h < kHours; ++h) row.push_back(m.observed(r, h) ? 1 : 0);
    mask.push_back(std::move(row));
  }
  const std::size_t shape[] = {m.days(), kHours};
  write_npy(path, shape, m.values.data());
  write_file_atomic(meta_path(path), meta.dump(1) + "\n");
}

DelayMatrix load_matrix(const std::filesystem::path& path, const std::optional<Region>& region) {
  const NpyArray arr = read_npy(path);
  if (arr.shape.size() != 2) throw FormatError(path.string() + ": expected a 2-D array");
  if (arr.shape[1] != kHours)
    throw FormatError(path.string() + ": expected 24 columns, got " + std::to_string(arr.shape[1]));

  const auto mpath = meta_path(path);
  std::ifstream in(mpath);
  if (!in) throw IoError("cannot open " + mpath.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }

  DelayMatrix m;
  try {
    m.airport = meta.at("airport").get<std::string>();
    m.kind = parse_kind(meta.at("kind").get<std::string>());
    m.unit = parse_unit(meta.at("unit").get<std::string>());
    if (meta.at("days").get<std::size_t>() != arr.shape[0] || meta.at("hours").get<std::size_t>() != kHours)
      throw FormatError(mpath.string() + ": shape does not match " + path.string());
    for (const auto& d : meta.at("day_labels")) m.day_labels.push_back(parse_date(d.get<std::string>()));
    const auto& mask = meta.at("mask");
    if (mask.size() != arr.shape[0]) throw FormatError(mpath.string() + ": mask row count mismatch");
    m.mask.reserve(arr.shape[0] * kHours);
    for (const auto& row : mask) {
      if (row.size() != kHours) throw FormatError(mpath.string() + ": mask row must have 24 entries");
      for (const auto& v : row) {
        const int bit = v.get<int>();
        if (bit != 0 && bit != 1) throw FormatError(mpath.string() + ": mask entries must be 0 or 1");
        m.mask.push_back(bit == 1);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
  if (region && region->unit != m.unit)
    throw FormatError(path.string() + ": unit " + std::string(to_string(m.unit)) + " does not match region " +
                      std::string(to_string(region->name)) + " (" + std::string(to_string(region->unit)) + ")");
  m.values = Matrix(arr.shape[0], kHours, arr.data);
  m.validate();
  return m;
}

}  // namespace delaysynth
