#pragma once

#include <array>
#include <string>
#include <variant>

namespace mfdb::gci {

/// One grid of a three-grid study. Level 1 is the finest.
struct GridLevel {
  long long nodes = 1;
  double phi = 0.0;
  double dim_exponent = 0.5;  // 1/2 for 2-D grids, 1/3 for 3-D grids
};

using Study = std::array<GridLevel, 3>;

/// (1/N)^A. A must be 1/2 or 1/3.
double representative_size(long long nodes, double dim_exponent);

enum class OrderStatus { kConverged, kOscillatory, kNegativeOrder, kNotConverged };

struct OrderResult {
  double p = 0.0;
  double s = 1.0;
  double q = 0.0;
  int iterations = 0;
  OrderStatus status = OrderStatus::kConverged;
};

struct GCIReport {
  std::array<double, 3> h{};
  double r21 = 0.0;
  double r32 = 0.0;
  double eps21 = 0.0;
  double eps32 = 0.0;
  double p = 0.0;
  double s = 1.0;
  double phi1 = 0.0;
  double phi_ext = 0.0;
  double e_a = 0.0;
  double gci_fine = 0.0;
  double error_bar = 0.0;
  double fos = 1.25;

  double lower() const { return phi1 - error_bar; }
  double upper() const { return phi1 + error_bar; }
};

/// Returned instead of numbers when the study is not in the asymptotic range.
struct InvalidReport {
  OrderStatus reason = OrderStatus::kNotConverged;
  OrderResult order;
  std::string message;
};

using Outcome = std::variant<GCIReport, InvalidReport>;

/// Damped fixed-point iteration for the observed order. Throws DataError for
/// identical fine solutions, a zero coarse difference or a bad grid sequence.
OrderResult observed_order(const Study& levels);

Outcome gci_report(const Study& levels);

std::string to_string(OrderStatus status);

}  // namespace mfdb::gci
