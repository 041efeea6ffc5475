#include "vnw/positivity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "vnw/errors.hpp"
#include "vnw/helmholtz.hpp"
#include "vnw/moutard.hpp"

namespace vnw {

namespace {

constexpr double kSqrtHalf = 0.70710678118654757;  // rounded up
constexpr double kScanStep = 1.0 / 64;

double diagonal_eval(const std::vector<double>& c, double s) {
  double sum = 0.0;
  for (std::size_t d = c.size(); d-- > 0;) sum = sum * s + c[d];
  return sum * (1.0 + 1e-12);
}

struct CellJob {
  double x0, y0, side;
};

struct TopResult {
  bool done = false;
  double max_bound = -std::numeric_limits<double>::infinity();
  double min_side = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  std::optional<std::pair<double, double>> witness;
  double witness_value = 0.0;
  std::optional<std::pair<double, double>> undecided;
  std::vector<CertifiedCell> cells;
};

struct Bounds {
  CompiledElement q;
  Envelope env_q;
  Envelope env_qx;
  Envelope env_qy;
  double rounding;

  explicit Bounds(const RingElement& Q, double rounding_margin)
      : q(Q),
        env_q(envelope(Q)),
        env_qx(envelope(diff_x(Q))),
        env_qy(envelope(diff_y(Q))),
        rounding(rounding_margin) {}

  double lipschitz(double x0, double y0, double side) const {
    const double ax = std::max(std::fabs(x0), std::fabs(x0 + side));
    const double ay = std::max(std::fabs(y0), std::fabs(y0 + side));
    return env_qx.eval(ax, ay) + env_qy.eval(ax, ay);
  }

  // Returns Q(center) and the upper bound of Q over the cell.
  std::pair<double, double> cell_bound(double x0, double y0, double side, double* L) const {
    const double cx = x0 + side / 2;
    const double cy = y0 + side / 2;
    const double value = q(cx, cy);
    *L = lipschitz(x0, y0, side);
    const double bound = value + *L * side * kSqrtHalf + rounding + 1e-12 * env_q.eval(cx, cy);
    return {value, bound};
  }
};

TopResult refine(const Bounds& b, CellJob top, const CertifyOptions& options) {
  TopResult r;
  std::vector<CellJob> stack{top};
  while (!stack.empty()) {
    const CellJob cell = stack.back();
    stack.pop_back();
    double L = 0.0;
    const auto [value, bound] = b.cell_bound(cell.x0, cell.y0, cell.side, &L);
    const double cx = cell.x0 + cell.side / 2;
    const double cy = cell.y0 + cell.side / 2;
    if (value >= 0) {
      r.witness = std::make_pair(cx, cy);
      r.witness_value = value;
      break;
    }
    if (bound < 0) {
      ++r.count;
      r.max_bound = std::max(r.max_bound, bound);
      r.min_side = std::min(r.min_side, cell.side);
      if (options.keep_cells) r.cells.push_back({cx, cy, cell.side, L});
      continue;
    }
    const double half = cell.side / 2;
    if (half < options.min_spacing) {
      r.undecided = std::make_pair(cx, cy);
      break;
    }
    // Pushed in reverse so the lower-left child is processed first.
    stack.push_back({cell.x0 + half, cell.y0 + half, half});
    stack.push_back({cell.x0, cell.y0 + half, half});
    stack.push_back({cell.x0 + half, cell.y0, half});
    stack.push_back({cell.x0, cell.y0, half});
  }
  r.done = true;
  return r;
}

int thread_count(const CertifyOptions& options) {
  if (options.threads > 0) return options.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

OuterBound outer_bound(const RingElement& Q, const Rational& C) {
  const RingElement quartic = -pow(RingElement::x(), 4) - pow(RingElement::y(), 4);
  if (Q.max_total_degree() != 4 || Q.homogeneous_part(4) != quartic) {
    throw LeadingPartError("the quartic part of Q must be -x^4 - y^4 with nothing of higher degree");
  }
  const Rational kappa = kappa_from_C(C);
  const Envelope rest = envelope(Q - quartic - RingElement::constant(kappa));
  std::vector<double> c;
  for (const Rational& v : rest.diagonal()) c.push_back(v.get_d());
  const double k = kappa.get_d();

  // For s >= s_top: g(s) <= -s^4 + (sum c + max(k, 0)) s^3 <= -s^4 / 2.
  double sum = std::max(k, 0.0);
  for (double v : c) sum += v;
  const double s_top = std::max(1.0, 2.0 * sum * (1.0 + 1e-12));
  double margin = -std::pow(s_top, 4) / 2 * (1.0 - 1e-12);

  // Walk down a fixed grid (spacing 2^e/64 on [2^e, 2^(e+1)), at least 1/64) so that
  // every scan visits the same points below its start. On [a, b] the bound
  // -a^4 + env(b) + kappa holds since env is monotone.
  auto step_at = [](double v) {
    return v <= 1.0 ? kScanStep : std::exp2(std::floor(std::log2(v))) * kScanStep;
  };
  double b = std::ceil(s_top / step_at(s_top)) * step_at(s_top);
  while (b > kScanStep) {
    const double a = b - step_at(b - kScanStep * 0.5);
    const double bound = -a * a * a * a * (1.0 - 1e-12) + diagonal_eval(c, b) + k + 1e-9;
    if (!(bound < 0)) break;
    margin = std::max(margin, bound);
    b = a;
  }
  return {b, margin};
}

InnerResult inner_certificate(const RingElement& Q, const Rational& C, double R0,
                              const CertifyOptions& options) {
  (void)C;
  if (!(options.min_spacing > 0) || !(options.top_spacing > 0)) {
    throw ParameterError("grid spacings must be positive");
  }
  const Bounds b(Q, options.rounding_margin);
  InnerResult out;
  out.lipschitz_bound = b.env_qx.eval(R0, R0) + b.env_qy.eval(R0, R0);

  const int n = std::max(1, static_cast<int>(std::ceil(2 * R0 / options.top_spacing)));
  const double side = 2 * R0 / n;
  out.top_spacing = side;
  const std::size_t total = static_cast<std::size_t>(n) * n;
  auto job = [&](std::size_t i) {
    return CellJob{-R0 + side * static_cast<double>(i % n), -R0 + side * static_cast<double>(i / n),
                   side};
  };

  // A nonnegative sample among the top-level centers settles the question at once.
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < total; ++i) {
    const CellJob cell = job(i);
    const double v = b.q(cell.x0 + side / 2, cell.y0 + side / 2);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  if (best_value >= 0) {
    const CellJob cell = job(best);
    out.witness = std::make_pair(cell.x0 + side / 2, cell.y0 + side / 2);
    out.witness_value = best_value;
    out.inner_margin = best_value;
    out.grid_spacing = side;
    return out;
  }

  std::vector<TopResult> results(total);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> first_bad{total};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      // Cells after a known failure cannot change the outcome.
      if (i > first_bad.load()) continue;
      results[i] = refine(b, job(i), options);
      if (results[i].witness || results[i].undecided) {
        std::size_t cur = first_bad.load();
        while (i < cur && !first_bad.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };
  const int nthreads = std::min<int>(thread_count(options), static_cast<int>(total));
  std::vector<std::thread> pool;
  for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  out.inner_margin = -std::numeric_limits<double>::infinity();
  out.grid_spacing = side;
  for (std::size_t i = 0; i < total; ++i) {
    TopResult& r = results[i];
    if (r.witness) {
      out.witness = r.witness;
      out.witness_value = r.witness_value;
      out.inner_margin = r.witness_value;
      return out;
    }
    if (r.undecided) {
      throw InconclusiveError("cell size fell below the minimum spacing", r.undecided->first,
                              r.undecided->second);
    }
    out.inner_margin = std::max(out.inner_margin, r.max_bound);
    out.grid_spacing = std::min(out.grid_spacing, r.min_side);
    out.cell_count += r.count;
    out.cells.insert(out.cells.end(), r.cells.begin(), r.cells.end());
  }
  out.certified = out.inner_margin < 0;
  return out;
}

PositivityCertificate certify(const RingElement& Q, const Rational& C,
                              const CertifyOptions& options) {
  const OuterBound outer = outer_bound(Q, C);
  InnerResult inner = inner_certificate(Q, C, outer.radius, options);
  PositivityCertificate cert;
  cert.C = C;
  cert.outer_radius = outer.radius;
  cert.outer_margin = outer.margin;
  cert.grid_spacing = inner.grid_spacing;
  cert.top_spacing = inner.top_spacing;
  cert.lipschitz_bound = inner.lipschitz_bound;
  cert.inner_margin = inner.inner_margin;
  cert.certified = inner.certified && outer.margin < 0;
  cert.witness = inner.witness;
  cert.witness_value = inner.witness_value;
  cert.cell_count = inner.cell_count;
  cert.cells = std::move(inner.cells);
  return cert;
}

bool revalidate(const RingElement& Q, const PositivityCertificate& cert,
                const CertifyOptions& options) {
  if (!cert.certified) return false;
  const OuterBound outer = outer_bound(Q, cert.C);
  if (outer.radius != cert.outer_radius || !(outer.margin < 0)) return false;
  if (cert.cells.size() != cert.cell_count) return false;
  const Bounds b(Q, options.rounding_margin);
  const double R0 = cert.outer_radius;
  double worst = -std::numeric_limits<double>::infinity();
  double area = 0.0;
  for (const CertifiedCell& cell : cert.cells) {
    const double x0 = cell.x - cell.side / 2;
    const double y0 = cell.y - cell.side / 2;
    if (x0 < -R0 * (1 + 1e-12) || y0 < -R0 * (1 + 1e-12) || x0 + cell.side > R0 * (1 + 1e-12) ||
        y0 + cell.side > R0 * (1 + 1e-12)) {
      return false;
    }
    double L = 0.0;
    const double bound = b.cell_bound(x0, y0, cell.side, &L).second;
    if (!(bound < 0)) return false;
    worst = std::max(worst, bound);
    area += cell.side * cell.side;
  }
  const double box = 4 * R0 * R0;
  return std::fabs(area - box) <= 1e-9 * box && worst == cert.inner_margin;
}

QFamily builtin_q_family() {
  const RingElement w1 = builtin_omega1();
  const RingElement w2 = builtin_omega2();
  return [w1, w2](const Rational& C) { return theta_exact(w1, w2, kappa_from_C(C)).Q; };
}

ThresholdResult threshold_C(const QFamily& family, const CertifyOptions& options,
                            long max_magnitude) {
  ThresholdResult result;
  std::map<long, PositivityCertificate> cache;
  auto run = [&](long C) -> const PositivityCertificate& {
    auto it = cache.find(C);
    if (it != cache.end()) return it->second;
    PositivityCertificate cert;
    std::string verdict;
    try {
      cert = certify(family(Rational(C)), Rational(C), options);
      verdict = cert.certified ? "certified" : "failed";
    } catch (const InconclusiveError& e) {
      cert.C = C;
      cert.witness = e.point();
      verdict = "inconclusive";
    }
    result.path.push_back({Rational(C), verdict});
    return cache.emplace(C, std::move(cert)).first->second;
  };

  long failed = 0;
  long ok = 0;
  if (run(0).certified) {
    failed = 1;
    ok = 0;
  } else {
    long c = -1;
    while (!run(c).certified) {
      failed = c;
      if (-c >= max_magnitude) throw InconclusiveError("no certified C within the search range", 0, 0);
      c *= 2;
    }
    ok = c;
  }
  while (failed - ok > 1) {
    const long mid = ok + (failed - ok) / 2;
    if (run(mid).certified) {
      ok = mid;
    } else {
      failed = mid;
    }
  }
  result.C_star = ok;
  result.at_threshold = run(ok);
  result.above = failed <= 0 ? run(failed) : PositivityCertificate{};
  result.below = run(ok - 1);

  bool monotone = result.below.certified;
  for (const SearchStep& a : result.path) {
    for (const SearchStep& b : result.path) {
      if (a.verdict == "certified" && b.verdict != "certified" && a.C >= b.C) monotone = false;
    }
  }
  result.monotone = monotone;
  return result;
}

void to_json(nlohmann::json& j, const PositivityCertificate& cert) {
  j = nlohmann::json{{"C", rational_to_string(cert.C)},
                     {"outer_radius", cert.outer_radius},
                     {"outer_margin", cert.outer_margin},
                     {"grid_spacing", cert.grid_spacing},
                     {"top_spacing", cert.top_spacing},
                     {"lipschitz_bound", cert.lipschitz_bound},
                     {"inner_margin", cert.inner_margin},
                     {"verdict", cert.certified ? "certified" : "failed"},
                     {"cell_count", cert.cell_count}};
  if (cert.witness) {
    j["witness"] = {cert.witness->first, cert.witness->second};
    j["witness_value"] = cert.witness_value;
  } else {
    j["witness"] = nullptr;
  }
}

}  // namespace vnw
