#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgn/errors.hpp"
#include "sgn/harness.hpp"

namespace sgn {

namespace {

constexpr const char* kHeader =
    "k,t_k,success,f,grad_norm,residual_norm,sample_size,inner_iterations,cost_increment,cumulative_cost";

template <typename T>
T parse_field(const std::string& text, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw IoError("trace line " + std::to_string(line) + ": cannot parse '" + text + "'");
  return value;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<std::size_t> hitting_time(const Trace& trace, double epsilon, NormSelector selector) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("hitting_time: epsilon must be positive");
  for (const auto& rec : trace.records) {
    const double v = selector == NormSelector::gradient ? rec.grad_norm : rec.residual_norm;
    if (v <= epsilon) return rec.k;
  }
  if (selector == NormSelector::residual && !trace.x_final.empty() && trace.residual_norm_final <= epsilon)
    return trace.records.size();
  return std::nullopt;
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& r : trace.records) {
    out << r.k << ',' << format_real(r.t) << ',' << (r.successful ? 1 : 0) << ',' << format_real(r.f) << ','
        << format_real(r.grad_norm) << ',' << format_real(r.residual_norm) << ',' << r.sample_size << ','
        << r.inner_iterations << ',' << format_real(r.cost_increment) << ',' << format_real(r.cumulative_cost)
        << '\n';
  }
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_trace_csv(trace, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw IoError("trace: missing or unexpected header");
  Trace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw IoError("trace line " + std::to_string(line_no) + ": expected 10 fields, got " + std::to_string(fields.size()));
    IterationRecord r;
    r.k = parse_field<std::size_t>(fields[0], line_no);
    r.t = parse_field<double>(fields[1], line_no);
    const int success = parse_field<int>(fields[2], line_no);
    if (success != 0 && success != 1) throw IoError("trace line " + std::to_string(line_no) + ": success must be 0 or 1");
    r.successful = success == 1;
    r.f = parse_field<double>(fields[3], line_no);
    r.grad_norm = parse_field<double>(fields[4], line_no);
    r.residual_norm = parse_field<double>(fields[5], line_no);
    r.sample_size = parse_field<std::size_t>(fields[6], line_no);
    r.inner_iterations = parse_field<int>(fields[7], line_no);
    r.cost_increment = parse_field<double>(fields[8], line_no);
    r.cumulative_cost = parse_field<double>(fields[9], line_no);
    trace.records.push_back(r);
  }
  trace.total_cost = trace.records.empty() ? 0.0 : trace.records.back().cumulative_cost;
  return trace;
}

Trace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_trace_csv(in);
}

}  // namespace sgn
