#include "lder/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lder/rng.hpp"
#include "lder/sgd.hpp"

namespace lder {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t line_no, std::size_t col_no) {
  const std::string cell = trim(raw);
  if (cell.empty()) return kNaN;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    std::ostringstream os;
    os << "non-numeric cell at line " << line_no << ", column " << col_no << ": '"
       << cell << "'";
    throw LoadError(os.str());
  }
  return value;
}

// Round-trip exact formatting for doubles.
std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

bool Dataset::has_missing() const {
  return X.hasNaN();
}

std::vector<Index> FoldPlan::test_indices(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> FoldPlan::train_indices(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(static_cast<Index>(i));
  return out;
}

Dataset load_csv(const std::string& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty dataset file: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 2)
    throw LoadError("dataset needs at least one feature and a target column: " + path);

  Index target = -1;
  if (target_column.empty()) {
    target = static_cast<Index>(header.size()) - 1;
  } else {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (trim(header[c]) == target_column) target = static_cast<Index>(c);
    if (target < 0)
      throw LoadError("target column '" + target_column + "' not found in " + path);
  }

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << "line " << line_no << " has " << cells.size() << " cells, expected "
         << header.size();
      throw LoadError(os.str());
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_cell(cells[c], line_no, c + 1);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw LoadError("dataset has a header but no data rows: " + path);

  const Index m = static_cast<Index>(rows.size());
  const Index n = static_cast<Index>(header.size()) - 1;
  Dataset d;
  d.name = path;
  d.X.resize(m, n);
  d.y.resize(m);
  for (Index i = 0; i < m; ++i) {
    Index at = 0;
    for (Index c = 0; c < static_cast<Index>(header.size()); ++c) {
      if (c == target) {
        if (std::isnan(rows[i][c])) {
          std::ostringstream os;
          os << "missing target value at data row " << i + 1;
          throw LoadError(os.str());
        }
        d.y(i) = rows[i][c];
      } else {
        d.X(i, at++) = rows[i][c];
      }
    }
  }
  for (Index c = 0; c < static_cast<Index>(header.size()); ++c)
    if (c != target) d.feature_names.push_back(trim(header[c]));
  return d;
}

void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open dataset file for writing: " + path);
  for (Index c = 0; c < d.cols(); ++c) {
    const std::string name = c < static_cast<Index>(d.feature_names.size())
                                 ? d.feature_names[c]
                                 : "x" + std::to_string(c + 1);
    out << name << ',';
  }
  out << "y\n";
  for (Index i = 0; i < d.rows(); ++i) {
    for (Index c = 0; c < d.cols(); ++c) {
      if (!std::isnan(d.X(i, c))) out << format_double(d.X(i, c));
      out << ',';
    }
    out << format_double(d.y(i)) << '\n';
  }
}

Dataset impute_mean(const Dataset& d) {
  Dataset out = d;
  for (Index c = 0; c < d.cols(); ++c) {
    double sum = 0.0;
    Index observed = 0;
    for (Index i = 0; i < d.rows(); ++i) {
      if (!std::isnan(d.X(i, c))) {
        sum += d.X(i, c);
        ++observed;
      }
    }
    if (observed == 0) {
      const std::string name = c < static_cast<Index>(d.feature_names.size())
                                   ? d.feature_names[c]
                                   : std::to_string(c);
      throw LoadError("imputation failed: column '" + name + "' has no observed values");
    }
    if (observed == d.rows()) continue;
    const double mean = sum / static_cast<double>(observed);
    for (Index i = 0; i < d.rows(); ++i)
      if (std::isnan(out.X(i, c))) out.X(i, c) = mean;
  }
  return out;
}

std::pair<Mat, StandardizeStats> standardize(const Mat& X) {
  if (X.rows() < 1) throw DomainError("standardize: empty matrix");
  StandardizeStats stats;
  stats.mean = X.colwise().mean();
  stats.std.resize(X.cols());
  for (Index c = 0; c < X.cols(); ++c) {
    const double var =
        (X.col(c).array() - stats.mean(c)).square().sum() / static_cast<double>(X.rows());
    stats.std(c) = std::max(std::sqrt(var), 1e-12);
  }
  return {apply_standardize(stats, X), stats};
}

Mat apply_standardize(const StandardizeStats& stats, const Mat& X) {
  if (X.cols() != stats.mean.size())
    throw DimensionError("apply_standardize: column count does not match stats");
  Mat out = X;
  for (Index c = 0; c < X.cols(); ++c)
    out.col(c) = (X.col(c).array() - stats.mean(c)) / stats.std(c);
  return out;
}

Mat invert_standardize(const StandardizeStats& stats, const Mat& X) {
  if (X.cols() != stats.mean.size())
    throw DimensionError("invert_standardize: column count does not match stats");
  Mat out = X;
  for (Index c = 0; c < X.cols(); ++c)
    out.col(c) = X.col(c).array() * stats.std(c) + stats.mean(c);
  return out;
}

LDerParams absorb_standardization(const LDerParams& p, const StandardizeStats& stats) {
  check_params(p);
  if (p.W.cols() != stats.mean.size())
    throw DimensionError("absorb_standardization: feature count mismatch");
  LDerParams out = p;
  for (Index c = 0; c < p.W.cols(); ++c) {
    out.W.col(c) = p.W.col(c) / stats.std(c);
    out.M.col(c) = p.M.col(c) / stats.std(c);
  }
  out.a -= out.W * stats.mean;
  out.b -= out.M * stats.mean;
  return out;
}

FoldPlan kfold_split(Index m, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<Index>(k) > m)
    throw DomainError("kfold_split: need 2 <= k <= m");
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 gen(rng::splitmix64(seed ^ 0xf01dULL));
  for (Index i = m - 1; i > 0; --i) {
    const Index j = static_cast<Index>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(m, 0);
  // first (m % k) folds get the extra sample
  const Index base = m / k;
  const Index extra = m % k;
  Index at = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    for (Index i = 0; i < size; ++i) plan.assignments[order[at++]] = f;
  }
  return plan;
}

SynthInstance synth_pwl(const ModelDims& dims, Index m, double noise_std,
                        std::uint64_t seed) {
  if (m < 1) throw DomainError("synth_pwl: need m >= 1");
  if (noise_std < 0.0) throw DomainError("synth_pwl: negative noise level");
  SynthInstance inst;
  inst.truth = init_params(dims, rng::splitmix64(seed ^ 0x7247ULL), 1.0);
  std::mt19937_64 xgen(rng::splitmix64(seed ^ 0xda7aULL));
  inst.data.X.resize(m, dims.n);
  for (Index i = 0; i < m; ++i)
    for (Index c = 0; c < dims.n; ++c) inst.data.X(i, c) = rng::uniform(xgen, -1.0, 1.0);
  inst.data.y = predict_batch(inst.truth, inst.data.X);
  if (noise_std > 0.0) {
    std::mt19937_64 ngen(rng::splitmix64(seed ^ 0x401feULL));
    for (Index i = 0; i < m; ++i) inst.data.y(i) += noise_std * rng::normal(ngen);
  }
  return inst;
}

std::string dataset_to_json(const Dataset& d) {
  using nlohmann::json;
  json doc;
  doc["name"] = d.name;
  doc["rows"] = d.rows();
  doc["cols"] = d.cols();
  doc["feature_names"] = d.feature_names;
  json rows = json::array();
  for (Index i = 0; i < d.rows(); ++i) {
    json row = json::array();
    for (Index c = 0; c < d.cols(); ++c) {
      if (std::isnan(d.X(i, c)))
        row.push_back(nullptr);
      else
        row.push_back(d.X(i, c));
    }
    row.push_back(d.y(i));
    rows.push_back(row);
  }
  doc["data"] = rows;
  return doc.dump();
}

std::string foldplan_to_json(const FoldPlan& f) {
  using nlohmann::json;
  json doc;
  doc["k"] = f.k;
  doc["seed"] = f.seed;
  doc["assignments"] = f.assignments;
  return doc.dump();
}

}  // namespace lder
