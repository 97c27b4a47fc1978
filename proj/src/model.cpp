#include "lder/model.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lder/kernels.hpp"

namespace lder {

using nlohmann::json;

LDerParams LDerParams::zeros(const ModelDims& d) {
  LDerParams p;
  p.W = Mat::Zero(d.r1, d.n);
  p.a = Vec::Zero(d.r1);
  p.M = Mat::Zero(d.r2, d.n);
  p.b = Vec::Zero(d.r2);
  return p;
}

void check_params(const LDerParams& p) {
  if (p.W.rows() < 1 || p.M.rows() < 1 || p.W.cols() < 1)
    throw DimensionError("LDerParams: r1, r2 and n must all be >= 1");
  if (p.W.cols() != p.M.cols())
    throw DimensionError("LDerParams: W and M must have the same column count");
  if (p.a.size() != p.W.rows() || p.b.size() != p.M.rows())
    throw DimensionError("LDerParams: bias lengths must match weight row counts");
}

double dilation(const Vec& offsets, const Vec& x) {
  if (offsets.size() != x.size())
    throw DimensionError("dilation: offset and input lengths differ");
  if (offsets.size() == 0) throw DimensionError("dilation: empty input");
  double best = offsets(0) + x(0);
  for (Index j = 1; j < offsets.size(); ++j) {
    const double v = offsets(j) + x(j);
    if (v > best) best = v;
  }
  return best;
}

double erosion(const Vec& offsets, const Vec& x) {
  if (offsets.size() != x.size())
    throw DimensionError("erosion: offset and input lengths differ");
  if (offsets.size() == 0) throw DimensionError("erosion: empty input");
  double best = offsets(0) + x(0);
  for (Index j = 1; j < offsets.size(); ++j) {
    const double v = offsets(j) + x(j);
    if (v < best) best = v;
  }
  return best;
}

namespace {

// Max over rows of weights*x + biases; lowest maximizing row wins.
inline double branch_max(const Mat& weights, const Vec& biases, const Vec& x,
                         Index* arg = nullptr) {
  double best = weights.row(0).dot(x) + biases(0);
  Index best_j = 0;
  for (Index j = 1; j < weights.rows(); ++j) {
    const double v = weights.row(j).dot(x) + biases(j);
    if (v > best) {
      best = v;
      best_j = j;
    }
  }
  if (arg) *arg = best_j;
  return best;
}

}  // namespace

double predict(const LDerParams& p, const Vec& x) {
  if (x.size() != p.W.cols())
    throw DimensionError("predict: input length does not match model dimension");
  return branch_max(p.W, p.a, x) - branch_max(p.M, p.b, x);
}

Vec predict_batch(const LDerParams& p, const Mat& X) {
  if (X.cols() != p.W.cols())
    throw DimensionError("predict_batch: column count does not match model dimension");
  Vec out(X.rows());
  kernels::parallel_for(X.rows(), [&](std::ptrdiff_t i) {
    const Vec xi = X.row(i);
    out(i) = branch_max(p.W, p.a, xi) - branch_max(p.M, p.b, xi);
  });
  return out;
}

std::pair<Index, Index> active_indices(const LDerParams& p, const Vec& x) {
  if (x.size() != p.W.cols())
    throw DimensionError("active_indices: input length does not match model dimension");
  Index j1 = 0, j2 = 0;
  branch_max(p.W, p.a, x, &j1);
  branch_max(p.M, p.b, x, &j2);
  return {j1, j2};
}

Vec flatten(const LDerParams& p) {
  check_params(p);
  const ModelDims d = p.dims();
  Vec alpha(d.flat_size());
  Index at = 0;
  for (Index i = 0; i < d.r1; ++i) {
    alpha.segment(at, d.n) = p.W.row(i);
    alpha(at + d.n) = p.a(i);
    at += d.n + 1;
  }
  for (Index j = 0; j < d.r2; ++j) {
    alpha.segment(at, d.n) = p.M.row(j);
    alpha(at + d.n) = p.b(j);
    at += d.n + 1;
  }
  return alpha;
}

LDerParams unflatten(const Vec& alpha, const ModelDims& dims) {
  if (!dims.valid()) throw DimensionError("unflatten: invalid model dimensions");
  if (alpha.size() != dims.flat_size()) {
    std::ostringstream os;
    os << "unflatten: flat vector has length " << alpha.size() << ", expected "
       << dims.flat_size();
    throw DimensionError(os.str());
  }
  LDerParams p = LDerParams::zeros(dims);
  Index at = 0;
  for (Index i = 0; i < dims.r1; ++i) {
    p.W.row(i) = alpha.segment(at, dims.n);
    p.a(i) = alpha(at + dims.n);
    at += dims.n + 1;
  }
  for (Index j = 0; j < dims.r2; ++j) {
    p.M.row(j) = alpha.segment(at, dims.n);
    p.b(j) = alpha(at + dims.n);
    at += dims.n + 1;
  }
  return p;
}

std::string model_to_json(const LDerParams& p) {
  const ModelDims d = p.dims();
  const Vec alpha = flatten(p);
  json doc;
  doc["n"] = d.n;
  doc["r1"] = d.r1;
  doc["r2"] = d.r2;
  doc["alpha"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
  return doc.dump(2);
}

LDerParams model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("model JSON parse error: ") + e.what());
  }
  if (!doc.contains("n") || !doc.contains("r1") || !doc.contains("r2") ||
      !doc.contains("alpha"))
    throw LoadError("model JSON must contain n, r1, r2 and alpha");
  ModelDims dims{doc["n"].get<Index>(), doc["r1"].get<Index>(),
                 doc["r2"].get<Index>()};
  if (!dims.valid()) throw LoadError("model JSON: dimensions must be positive");
  const auto values = doc["alpha"].get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != dims.flat_size()) {
    std::ostringstream os;
    os << "model JSON: alpha has length " << values.size() << ", expected "
       << dims.flat_size();
    throw LoadError(os.str());
  }
  Vec alpha = Eigen::Map<const Vec>(values.data(), static_cast<Index>(values.size()));
  return unflatten(alpha, dims);
}

void save_model(const LDerParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open model file for writing: " + path);
  out << model_to_json(p) << '\n';
}

LDerParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace lder
