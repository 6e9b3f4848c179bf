#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "sgn/errors.hpp"
#include "sgn/problems.hpp"

namespace sgn {

void Dataset::validate() const {
  if (labels.size() != features.rows())
    throw ConfigError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                      std::to_string(labels.size()) + " labels");
  for (int b : labels)
    if (b != 0 && b != 1) throw ConfigError("dataset labels must be 0 or 1");
  if (validation) {
    validation->validate();
    if (validation->feature_count() != feature_count())
      throw ConfigError("validation split has a different feature count");
  }
}

namespace {

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_index(std::string_view text, std::size_t& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line, const std::string& why) {
  throw IoError(path.string() + ": line " + std::to_string(line) + ": " + why);
}

}  // namespace

Dataset libsvm_load(const std::filesystem::path& path, std::optional<std::size_t> feature_count) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::vector<Triplet> triplets;
  std::vector<double> raw_labels;
  std::size_t max_index = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string_view rest(line);
    auto next_token = [&rest]() {
      const auto start = rest.find_first_not_of(" \t\r");
      if (start == std::string_view::npos) {
        rest = {};
        return std::string_view{};
      }
      rest.remove_prefix(start);
      const auto end = std::min(rest.find_first_of(" \t\r"), rest.size());
      std::string_view tok = rest.substr(0, end);
      rest.remove_prefix(end);
      return tok;
    };
    std::string_view tok = next_token();
    if (tok.empty()) continue;
    double label;
    if (!parse_double(tok, label)) malformed(path, line_no, "bad label '" + std::string(tok) + "'");
    const std::size_t row = raw_labels.size();
    raw_labels.push_back(label);
    while (!(tok = next_token()).empty()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) malformed(path, line_no, "expected index:value, got '" + std::string(tok) + "'");
      std::size_t index;
      double value;
      if (!parse_index(tok.substr(0, colon), index) || index == 0)
        malformed(path, line_no, "bad feature index '" + std::string(tok.substr(0, colon)) + "'");
      if (!parse_double(tok.substr(colon + 1), value))
        malformed(path, line_no, "non-numeric value '" + std::string(tok.substr(colon + 1)) + "'");
      max_index = std::max(max_index, index);
      triplets.push_back({row, index - 1, value});
    }
  }

  const std::size_t n = feature_count.value_or(max_index);
  if (max_index > n)
    throw IoError(path.string() + ": feature index " + std::to_string(max_index) + " exceeds feature count " +
                  std::to_string(n));

  std::set<double> distinct(raw_labels.begin(), raw_labels.end());
  auto subset_of = [&distinct](std::initializer_list<double> allowed) {
    return std::all_of(distinct.begin(), distinct.end(),
                       [&](double v) { return std::find(allowed.begin(), allowed.end(), v) != allowed.end(); });
  };
  Dataset data;
  data.labels.reserve(raw_labels.size());
  if (subset_of({0.0, 1.0})) {
    for (double v : raw_labels) data.labels.push_back(static_cast<int>(v));
  } else if (subset_of({-1.0, 1.0})) {
    for (double v : raw_labels) data.labels.push_back(v > 0 ? 1 : 0);
  } else if (subset_of({1.0, 2.0})) {
    for (double v : raw_labels) data.labels.push_back(v == 2.0 ? 1 : 0);
  } else {
    throw IoError(path.string() + ": labels are not binary");
  }
  data.features = assemble_sparse(triplets, raw_labels.size(), n);
  return data;
}

void libsvm_save(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < data.examples(); ++i) {
    out << (data.labels[i] == 1 ? "+1" : "-1");
    auto c = data.features.row_columns(i);
    auto v = data.features.row_values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (v[k] == 0.0) continue;
      std::snprintf(buf, sizeof buf, " %zu:%.17g", c[k] + 1, v[k]);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

Vector random_direction(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector w(n);
  for (double& v : w) v = normal(rng);
  scale(1.0 / norm2(w), w);
  return w;
}

}  // namespace

Dataset make_separable_dataset(std::size_t m, std::size_t n, double margin, Rng& rng) {
  if (m == 0 || n == 0) throw ConfigError("make_separable_dataset: empty shape");
  std::normal_distribution<double> normal;
  const Vector w = random_direction(n, rng);
  std::vector<Triplet> triplets;
  triplets.reserve(m * n);
  Dataset data;
  Vector a(n);
  for (std::size_t i = 0; i < m;) {
    for (double& v : a) v = normal(rng);
    const double side = dot(a, w);
    if (std::abs(side) < margin) continue;
    for (std::size_t j = 0; j < n; ++j) triplets.push_back({i, j, a[j]});
    data.labels.push_back(side > 0.0 ? 1 : 0);
    ++i;
  }
  data.features = assemble_sparse(triplets, m, n);
  return data;
}

Dataset make_logistic_dataset(std::size_t m, std::size_t n, Rng& rng) {
  if (m == 0 || n == 0) throw ConfigError("make_logistic_dataset: empty shape");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Vector w = random_direction(n, rng);
  scale(2.0, w);
  std::vector<Triplet> triplets;
  triplets.reserve(m * n);
  Dataset data;
  Vector a(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (double& v : a) v = normal(rng);
    for (std::size_t j = 0; j < n; ++j) triplets.push_back({i, j, a[j]});
    data.labels.push_back(unit(rng) < sigmoid(dot(a, w)) ? 1 : 0);
  }
  data.features = assemble_sparse(triplets, m, n);
  return data;
}

}  // namespace sgn
