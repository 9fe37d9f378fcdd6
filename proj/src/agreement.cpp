#include <cmath>
#include <stdexcept>

#include "sketchvlm/judge.hpp"

namespace sketchvlm {

std::optional<double> quadratic_kappa(const std::vector<int>& a, const std::vector<int>& b, int levels) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("quadratic_kappa: bad lengths");
  const auto k = static_cast<std::size_t>(levels);
  std::vector<double> observed(k * k, 0), row(k, 0), col(k, 0);
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 1 || a[i] > levels || b[i] < 1 || b[i] > levels)
      throw std::invalid_argument("quadratic_kappa: rating out of range");
    const auto x = static_cast<std::size_t>(a[i] - 1), y = static_cast<std::size_t>(b[i] - 1);
    observed[x * k + y] += 1 / n;
    row[x] += 1 / n;
    col[y] += 1 / n;
  }
  double po = 0, pe = 0;
  const double span = static_cast<double>((levels - 1) * (levels - 1));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = static_cast<double>(i) - static_cast<double>(j);
      const double w = 1 - d * d / span;
      po += w * observed[i * k + j];
      pe += w * row[i] * col[j];
    }
  }
  if (std::abs(1 - pe) < 1e-12) return std::nullopt;
  return (po - pe) / (1 - pe);
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson: bad lengths");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

AgreementStats agreement_stats(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("agreement_stats: rating vectors differ in length");
  if (a.size() < 2) throw std::invalid_argument("agreement_stats: need at least 2 ratings");
  AgreementStats s;
  s.n = a.size();
  s.kappa_quadratic = quadratic_kappa(a, b, kRatingLevels);
  s.pearson = pearson(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
  return s;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  r.count = values.size();
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

}  // namespace sketchvlm
