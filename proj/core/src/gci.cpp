#include "mfdb/gci.hpp"

#include <cmath>

#include "mfdb/error.hpp"

namespace mfdb::gci {

namespace {

constexpr double kTolerance = 1e-12;
constexpr int kMaxIterations = 100;
constexpr double kDamping = 0.5;

struct Differences {
  std::array<double, 3> h;
  double r21, r32, eps21, eps32;
};

Differences differences(const Study& lv) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (lv[i].dim_exponent != lv[0].dim_exponent) {
      throw UsageError("all grids of a study must share the dimension exponent");
    }
    if (!std::isfinite(lv[i].phi)) throw DataError("grid solutions must be finite");
  }
  if (!(lv[0].nodes > lv[1].nodes && lv[1].nodes > lv[2].nodes)) {
    throw DataError("node counts must strictly decrease from the finest to the coarsest grid");
  }
  Differences d{};
  for (std::size_t i = 0; i < 3; ++i) d.h[i] = representative_size(lv[i].nodes, lv[i].dim_exponent);
  d.r21 = d.h[1] / d.h[0];
  d.r32 = d.h[2] / d.h[1];
  d.eps21 = lv[1].phi - lv[0].phi;
  d.eps32 = lv[2].phi - lv[1].phi;
  if (d.eps21 == 0.0) throw DataError("identical fine solutions");
  if (d.eps32 == 0.0) throw DataError("identical coarse solutions: eps32/eps21 is zero");
  return d;
}

}  // namespace

double representative_size(long long nodes, double a) {
  if (nodes < 1) throw UsageError("node count must be >= 1");
  if (std::abs(a - 0.5) > 1e-12 && std::abs(a - 1.0 / 3.0) > 1e-12) {
    throw UsageError("dimension exponent must be 1/2 (2-D) or 1/3 (3-D)");
  }
  return std::pow(1.0 / static_cast<double>(nodes), a);
}

OrderResult observed_order(const Study& levels) {
  const auto d = differences(levels);
  OrderResult out;
  const double ratio = d.eps32 / d.eps21;
  out.s = ratio > 0.0 ? 1.0 : -1.0;
  if (out.s < 0.0) {
    out.status = OrderStatus::kOscillatory;
    return out;
  }
  const double ln_ratio = std::log(std::abs(ratio));
  const double ln_r21 = std::log(d.r21);
  auto q_of = [&](double p) {
    return std::log((std::pow(d.r21, p) - out.s) / (std::pow(d.r32, p) - out.s));
  };

  double p = ln_ratio / ln_r21;
  out.status = OrderStatus::kNotConverged;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double q = q_of(p);
    const double next = (ln_ratio + q) / ln_r21;
    out.iterations = it;
    if (!std::isfinite(next)) break;
    if (std::abs(next - p) <= kTolerance * std::max(1.0, std::abs(p))) {
      p = next;
      out.status = OrderStatus::kConverged;
      break;
    }
    p += kDamping * (next - p);
  }
  out.p = p;
  out.q = std::isfinite(p) ? q_of(p) : NAN;
  if (out.status == OrderStatus::kConverged && !(p > 0.0)) out.status = OrderStatus::kNegativeOrder;
  return out;
}

Outcome gci_report(const Study& levels) {
  const auto order = observed_order(levels);
  if (order.status != OrderStatus::kConverged) {
    return InvalidReport{order.status, order,
                         "study is not in the asymptotic range: " + to_string(order.status)};
  }
  const auto d = differences(levels);
  const double phi1 = levels[0].phi;
  const double phi2 = levels[1].phi;
  if (phi1 == 0.0) throw DataError("fine-grid solution is zero; the relative error is undefined");

  GCIReport r;
  r.h = d.h;
  r.r21 = d.r21;
  r.r32 = d.r32;
  r.eps21 = d.eps21;
  r.eps32 = d.eps32;
  r.p = order.p;
  r.s = order.s;
  r.phi1 = phi1;
  const double rp = std::pow(d.r21, order.p);
  r.phi_ext = (rp * phi1 - phi2) / (rp - 1.0);
  r.e_a = std::abs(phi1 - phi2) / std::abs(phi1);
  r.gci_fine = r.fos * r.e_a / (rp - 1.0);
  r.error_bar = r.gci_fine * std::abs(phi1);
  return r;
}

std::string to_string(OrderStatus status) {
  switch (status) {
    case OrderStatus::kConverged: return "converged";
    case OrderStatus::kOscillatory: return "oscillatory";
    case OrderStatus::kNegativeOrder: return "negative-order";
    case OrderStatus::kNotConverged: return "not-converged";
  }
  return "unknown";
}

}  // namespace mfdb::gci
