#include "deal/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "deal/errors.hpp"

namespace deal {
namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("cannot parse " + what + " '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("cannot parse " + what + " '" + s + "'");
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_trace_csv(std::ostream& out, const IterateTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_double(r.f) << ',' << format_double(r.grad_norm) << ','
        << format_double(r.step) << ',' << r.inner_count << ',';
    if (r.displacement) out << format_double(*r.displacement);
    out << '\n';
  }
}

IterateTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kTraceCsvHeader) {
    throw DataError(std::string("trace CSV must start with the header '") + kTraceCsvHeader + "'");
  }
  IterateTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 6) throw DataError("trace CSV line " + std::to_string(lineno) + ": expected 6 columns");
    IterateRecord r;
    r.k = parse_int(cells[0], "k");
    r.f = parse_double(cells[1], "f");
    r.grad_norm = parse_double(cells[2], "grad_norm");
    r.step = parse_double(cells[3], "step");
    r.inner_count = static_cast<int>(parse_int(cells[4], "inner_count"));
    if (!cells[5].empty()) r.displacement = parse_double(cells[5], "displacement");
    if (!trace.records.empty() && r.k <= trace.records.back().k) {
      throw DataError("trace CSV line " + std::to_string(lineno) + ": k must be strictly increasing");
    }
    trace.records.push_back(std::move(r));
  }
  return trace;
}

std::string trace_sidecar_json(const IterateTrace& trace) {
  json j;
  j["seed"] = trace.seed;
  j["config_digest"] = trace.config_digest;
  j["solver_id"] = trace.solver_id;
  j["rho"] = trace.rho;
  j["theta"] = trace.theta;
  j["displacement_c"] = trace.displacement_c ? json(*trace.displacement_c) : json(nullptr);
  j["heuristic"] = trace.heuristic;
  j["constants_estimated"] = trace.constants_estimated;
  j["termination"] = trace.termination;
  j["fallbacks"] = trace.fallbacks;
  j["records"] = trace.records.size();
  json params = json::object();
  for (const auto& [k, v] : trace.params) params[k] = v;
  j["params"] = params;
  return j.dump(2);
}

void apply_trace_sidecar(IterateTrace& trace, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("trace sidecar is not valid JSON: ") + e.what());
  }
  try {
    trace.seed = j.value("seed", std::uint64_t{0});
    trace.config_digest = j.value("config_digest", std::string{});
    trace.solver_id = j.value("solver_id", std::string{});
    trace.rho = j.at("rho").get<double>();
    trace.theta = j.at("theta").get<double>();
    if (j.contains("displacement_c") && !j["displacement_c"].is_null()) {
      trace.displacement_c = j["displacement_c"].get<double>();
    }
    trace.heuristic = j.value("heuristic", false);
    trace.constants_estimated = j.value("constants_estimated", false);
    trace.termination = j.value("termination", std::string{});
    trace.fallbacks = j.value("fallbacks", 0);
    if (j.contains("params")) {
      for (const auto& [k, v] : j["params"].items()) trace.params[k] = v.get<double>();
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("trace sidecar has a malformed field: ") + e.what());
  }
}

void write_iterates_csv(std::ostream& out, const IterateTrace& trace) {
  Eigen::Index n = 0;
  for (const auto& r : trace.records)
    if (r.x) n = r.x->size();
  out << 'k';
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& r : trace.records) {
    if (!r.x) continue;
    out << r.k;
    for (Eigen::Index i = 0; i < r.x->size(); ++i) out << ',' << format_double((*r.x)(i));
    out << '\n';
  }
}

void read_iterates_csv(std::istream& in, IterateTrace& trace) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("iterates CSV is empty");
  const auto header = split_csv_line(strip_cr(line));
  if (header.empty() || header[0] != "k") throw DataError("iterates CSV must start with column k");
  const std::size_t n = header.size() - 1;
  std::size_t next = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n + 1) throw DataError("iterates CSV row has the wrong width");
    const long long k = parse_int(cells[0], "k");
    Vector x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = parse_double(cells[i + 1], "x");
    while (next < trace.records.size() && trace.records[next].k < k) ++next;
    if (next == trace.records.size() || trace.records[next].k != k) {
      throw DataError("iterates CSV has k = " + std::to_string(k) + " not present in the trace");
    }
    trace.records[next].x = std::move(x);
  }
}

namespace {
std::filesystem::path with_suffix(const std::filesystem::path& csv, const std::string& suffix) {
  auto p = csv;
  p.replace_extension();
  return p.string() + suffix;
}
}  // namespace

void save_trace(const std::filesystem::path& csv_path, const IterateTrace& trace) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + csv_path.string());
    write_trace_csv(out, trace);
  }
  {
    std::ofstream out(with_suffix(csv_path, ".json"), std::ios::binary);
    out << trace_sidecar_json(trace) << '\n';
  }
  const bool has_x = std::any_of(trace.records.begin(), trace.records.end(),
                                 [](const IterateRecord& r) { return r.x.has_value(); });
  if (has_x) {
    std::ofstream out(with_suffix(csv_path, ".iterates.csv"), std::ios::binary);
    write_iterates_csv(out, trace);
  }
}

IterateTrace load_trace(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw DataError("cannot read " + csv_path.string());
  IterateTrace trace = read_trace_csv(in);
  const auto sidecar = with_suffix(csv_path, ".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream s(sidecar, std::ios::binary);
    std::stringstream buf;
    buf << s.rdbuf();
    apply_trace_sidecar(trace, buf.str());
  }
  const auto iterates = with_suffix(csv_path, ".iterates.csv");
  if (std::filesystem::exists(iterates)) {
    std::ifstream s(iterates, std::ios::binary);
    read_iterates_csv(s, trace);
  }
  return trace;
}

}  // namespace deal
