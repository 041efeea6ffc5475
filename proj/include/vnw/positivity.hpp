#pragma once

// Certificate that Q < 0 on the whole plane.
//
// Outside the box [-R0, R0]^2 the bound
//     Q <= -s^4 + envelope(Q + x^4 + y^4 - kappa)(s, s) + kappa,   s = max(|x|, |y|)
// is negative. Inside, a quadtree of cells is checked with
//     Q(center) + L_cell * side * sqrt(2)/2 + rounding < 0
// where L_cell bounds |grad Q| on the cell through the envelopes of Q_x, Q_y.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "vnw/trigring.hpp"

namespace vnw {

struct OuterBound {
  double radius = 0.0;  // R0
  double margin = 0.0;  // certified upper bound for Q outside the box
};

/// Throws LeadingPartError unless Q = -x^4 - y^4 + (terms of lower total degree).
OuterBound outer_bound(const RingElement& Q, const Rational& C);

struct CertifyOptions {
  double min_spacing = 1e-4;
  double top_spacing = 0.25;
  double rounding_margin = 1e-9;
  int threads = 0;  // 0: hardware concurrency
  bool keep_cells = true;
};

struct CertifiedCell {
  double x = 0.0;
  double y = 0.0;
  double side = 0.0;
  double lipschitz = 0.0;
};

struct PositivityCertificate {
  Rational C;
  double outer_radius = 0.0;
  double outer_margin = 0.0;
  double grid_spacing = 0.0;  // smallest cell side used
  double top_spacing = 0.0;
  double lipschitz_bound = 0.0;  // |grad Q| bound over the whole inner box
  double inner_margin = 0.0;  // max over cells of the cell bound, or Q(witness) on failure
  bool certified = false;
  std::optional<std::pair<double, double>> witness;
  double witness_value = 0.0;
  std::size_t cell_count = 0;
  std::vector<CertifiedCell> cells;
};

struct InnerResult {
  bool certified = false;
  double grid_spacing = 0.0;
  double top_spacing = 0.0;
  double lipschitz_bound = 0.0;
  double inner_margin = 0.0;
  std::optional<std::pair<double, double>> witness;
  double witness_value = 0.0;
  std::size_t cell_count = 0;
  std::vector<CertifiedCell> cells;
};

/// Throws InconclusiveError when a cell below options.min_spacing is still undecided.
InnerResult inner_certificate(const RingElement& Q, const Rational& C, double R0,
                              const CertifyOptions& options = {});

PositivityCertificate certify(const RingElement& Q, const Rational& C,
                              const CertifyOptions& options = {});

/// Re-evaluates every stored cell and checks that the cells tile the inner box.
bool revalidate(const RingElement& Q, const PositivityCertificate& cert,
                const CertifyOptions& options = {});

using QFamily = std::function<RingElement(const Rational& C)>;

/// Q(C) of the explicit double potential.
QFamily builtin_q_family();

struct SearchStep {
  Rational C;
  std::string verdict;  // "certified", "failed" or "inconclusive"
};

struct ThresholdResult {
  Rational C_star;
  PositivityCertificate at_threshold;
  PositivityCertificate above;  // C* + 1, not certified
  PositivityCertificate below;  // C* - 1
  std::vector<SearchStep> path;
  bool monotone = false;  // certified steps all lie below the failed ones, and C* - 1 certifies
};

/// Largest integer C < 0 whose certificate succeeds: doubling descent from 0, then bisection.
ThresholdResult threshold_C(const QFamily& family, const CertifyOptions& options = {},
                            long max_magnitude = 1L << 20);

void to_json(nlohmann::json& j, const PositivityCertificate& cert);

}  // namespace vnw
