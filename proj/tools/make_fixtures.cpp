// Regenerates the bundled datasets under data/: five synthetic
// piecewise-linear regression tasks plus two small hand-shaped tables with a
// few missing cells, and the manifest tying them together. Everything is
// seeded, so the checked-in files are reproducible byte for byte.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "lder/data.hpp"
#include "lder/rng.hpp"
#include "lder/sgd.hpp"

using namespace lder;
namespace fs = std::filesystem;

namespace {

// Shift targets so they stay well away from zero; a constant target offset
// keeps the task representable by the model family (it folds into the
// first-branch biases).
Dataset synth_fixture(const std::string& name, const ModelDims& dims, Index m,
                      double noise, std::uint64_t seed) {
  const auto inst = synth_pwl(dims, m, noise, seed);
  Dataset d;
  d.name = name;
  d.X = inst.data.X;
  d.y = inst.data.y;
  d.y.array() += 5.0 - d.y.minCoeff();
  for (Index c = 0; c < dims.n; ++c) d.feature_names.push_back("x" + std::to_string(c + 1));
  return d;
}

Dataset vehicle_table(std::uint64_t seed) {
  std::mt19937_64 gen(rng::splitmix64(seed));
  const Index m = 48;
  Dataset d;
  d.name = "vehicle_small";
  d.feature_names = {"weight_kg", "engine_cc", "age_years", "mileage_kkm"};
  d.X.resize(m, 4);
  d.y.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double weight = rng::uniform(gen, 850, 2200);
    const double engine = rng::uniform(gen, 900, 3200);
    const double age = rng::uniform(gen, 0, 15);
    const double mileage = rng::uniform(gen, 5, 260);
    d.X(i, 0) = std::round(weight);
    d.X(i, 1) = std::round(engine);
    d.X(i, 2) = std::round(age * 10) / 10;
    d.X(i, 3) = std::round(mileage);
    const double base = 4.0 + 0.004 * engine + 0.002 * weight;
    const double wear = 0.55 * age + 0.012 * mileage + 0.018 * std::max(0.0, age - 8) * age;
    const double price = std::max(1.5, base - wear + 0.6 * rng::normal(gen));
    d.y(i) = std::round(price * 100) / 100;
  }
  d.X(7, 1) = std::numeric_limits<double>::quiet_NaN();
  d.X(19, 3) = std::numeric_limits<double>::quiet_NaN();
  d.X(33, 2) = std::numeric_limits<double>::quiet_NaN();
  return d;
}

Dataset usage_table(std::uint64_t seed) {
  std::mt19937_64 gen(rng::splitmix64(seed));
  const Index m = 55;
  Dataset d;
  d.name = "usage_small";
  d.feature_names = {"temperature_c", "household_size"};
  d.X.resize(m, 2);
  d.y.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double temp = std::round(rng::uniform(gen, -6, 31) * 10) / 10;
    const double household = 1 + static_cast<double>(gen() % 6);
    d.X(i, 0) = temp;
    d.X(i, 1) = household;
    // heating below ~14C, cooling above ~24C, plus per-person load
    const double heating = std::max(0.0, 14.0 - temp) * 0.9;
    const double cooling = std::max(0.0, temp - 24.0) * 0.7;
    const double kwh = 3.5 + 1.8 * household + heating + cooling + 0.8 * rng::normal(gen);
    d.y(i) = std::round(std::max(0.8, kwh) * 100) / 100;
  }
  d.X(11, 0) = std::numeric_limits<double>::quiet_NaN();
  d.X(40, 1) = std::numeric_limits<double>::quiet_NaN();
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "data";
  fs::create_directories(dir);

  struct SynthSpec {
    const char* name;
    ModelDims dims;
    Index m;
    double noise;
    std::uint64_t seed;
  };
  const SynthSpec synths[] = {
      {"synth_pwl_a", {2, 2, 2}, 80, 0.0, 1001},
      {"synth_pwl_b", {2, 3, 3}, 100, 0.01, 1002},
      {"synth_pwl_c", {3, 2, 2}, 120, 0.0, 1003},
      {"synth_pwl_d", {3, 3, 2}, 90, 0.02, 1004},
      {"synth_pwl_e", {2, 2, 3}, 150, 0.05, 1005},
  };

  std::string manifest = "[\n";
  for (const auto& s : synths) {
    const Dataset d = synth_fixture(s.name, s.dims, s.m, s.noise, s.seed);
    write_csv(d, (dir / (std::string(s.name) + ".csv")).string());
    manifest += "  {\"path\": \"" + std::string(s.name) + ".csv\", \"target_column\": \"y\", \"name\": \"" +
                s.name + "\"},\n";
    std::printf("wrote %s.csv (%lldx%lld)\n", s.name, static_cast<long long>(s.m),
                static_cast<long long>(s.dims.n));
  }

  const Dataset vehicle = vehicle_table(2020);
  write_csv(vehicle, (dir / "vehicle_small.csv").string());
  manifest += "  {\"path\": \"vehicle_small.csv\", \"target_column\": \"y\", \"name\": \"vehicle_small\"},\n";
  std::printf("wrote vehicle_small.csv (48x4, 3 missing cells)\n");

  const Dataset usage = usage_table(2021);
  write_csv(usage, (dir / "usage_small.csv").string());
  manifest += "  {\"path\": \"usage_small.csv\", \"target_column\": \"y\", \"name\": \"usage_small\"}\n]\n";
  std::printf("wrote usage_small.csv (55x2, 2 missing cells)\n");

  std::ofstream mf(dir / "bench_manifest.json");
  mf << manifest;
  std::printf("wrote bench_manifest.json\n");
  return 0;
}
