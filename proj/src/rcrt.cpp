#include "wusn/rcrt.hpp"

#include "wusn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

namespace wusn {

namespace {

// Signed representative of x modulo period in (-period/2, period/2].
double wrap_signed(double x, double period) {
  double y = std::fmod(x, period);
  if (y > 0.5 * period) y -= period;
  if (y <= -0.5 * period) y += period;
  return y;
}

double wrap_unsigned(double x, double period) {
  double y = std::fmod(x, period);
  if (y < 0.0) y += period;
  if (y >= period) y -= period;
  return y;
}

std::int64_t mod_floor(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

void check_remainders(const RemainderVector& v, const WavelengthSet& ws) {
  if (v.remainders.size() != ws.size()) {
    throw DomainError("remainder vector has " + std::to_string(v.remainders.size()) + " entries, expected " +
                      std::to_string(ws.size()));
  }
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const double r = v.remainders[k];
    if (!(r >= 0.0 && r < ws.lambdas[k])) {
      std::ostringstream msg;
      msg << "remainder " << k << " = " << r << " outside [0, " << ws.lambdas[k] << ")";
      throw DomainError(msg.str());
    }
  }
}

} // namespace

std::int64_t WavelengthSet::gamma_product() const {
  return std::accumulate(gammas.begin(), gammas.end(), std::int64_t{1}, std::multiplies<>());
}

std::int64_t WavelengthSet::quotient_range(std::size_t k) const { return gamma_product() / gammas.at(k); }

WavelengthSet make_wavelength_set(double B, std::vector<std::int64_t> gammas) {
  if (!(B > 0.0) || !std::isfinite(B)) throw ConfigError("wavelength set: B must be positive and finite");
  if (gammas.size() < 2) throw ConfigError("wavelength set: at least two moduli are required");
  for (auto g : gammas) {
    if (g < 2) throw ConfigError("wavelength set: every Gamma_k must be >= 2, got " + std::to_string(g));
  }
  for (std::size_t m = 0; m < gammas.size(); ++m) {
    for (std::size_t n = m + 1; n < gammas.size(); ++n) {
      if (std::gcd(gammas[m], gammas[n]) != 1) {
        throw ConfigError("wavelength set: Gamma pair (" + std::to_string(gammas[m]) + ", " +
                          std::to_string(gammas[n]) + ") is not co-prime");
      }
    }
  }
  WavelengthSet ws;
  ws.B = B;
  ws.gammas = std::move(gammas);
  ws.lambdas.reserve(ws.gammas.size());
  for (auto g : ws.gammas) ws.lambdas.push_back(B * static_cast<double>(g));
  ws.d_max = B * static_cast<double>(ws.gamma_product());
  return ws;
}

RemainderVector remainders_of(double r, const WavelengthSet& ws) {
  if (!(r >= 0.0 && r < ws.d_max)) {
    std::ostringstream msg;
    msg << "dividend " << r << " outside [0, " << ws.d_max << ")";
    throw DomainError(msg.str());
  }
  RemainderVector out;
  std::vector<std::int64_t> quotients;
  for (const double lambda : ws.lambdas) {
    auto q = static_cast<std::int64_t>(std::floor(r / lambda));
    double rem = r - static_cast<double>(q) * lambda;
    if (rem < 0.0) {
      --q;
      rem += lambda;
    } else if (rem >= lambda) {
      ++q;
      rem -= lambda;
    }
    out.remainders.push_back(rem);
    quotients.push_back(q);
  }
  out.quotients = std::move(quotients);
  return out;
}

double phase_to_remainder(double phi, double lambda) {
  if (!(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
    throw DomainError("phase " + std::to_string(phi) + " outside [0, 2pi)");
  }
  const double r = phi / (2.0 * std::numbers::pi) * lambda;
  return r >= lambda ? 0.0 : r;
}

double cyclic_distance(double a, double b, double period) { return std::abs(wrap_signed(a - b, period)); }

double candidate_objective(std::size_t k, const QuotientPair& pair, const RemainderVector& noisy,
                           const WavelengthSet& ws) {
  const double xk = static_cast<double>(pair.bk) * ws.lambdas[k] + noisy.remainders[k];
  const double x1 = static_cast<double>(pair.b1) * ws.lambdas[0] + noisy.remainders[0];
  return cyclic_distance(xk, x1, ws.d_max);
}

CandidateSet build_candidate_set(std::size_t k, const RemainderVector& noisy, const WavelengthSet& ws) {
  if (k == 0 || k >= ws.size()) throw DomainError("candidate set index must be in [1, K)");
  check_remainders(noisy, ws);

  const std::int64_t range1 = ws.quotient_range(0);
  const std::int64_t rangek = ws.quotient_range(k);
  const double lambdak = ws.lambdas[k];

  // For a fixed b1 the best bk puts bk*lambda_k next to the target on the circle; the
  // multiples of lambda_k tile [0, d_max) exactly, so only the neighbors of floor(t/lambda_k)
  // need to be examined.
  std::vector<std::pair<QuotientPair, double>> best;
  best.reserve(static_cast<std::size_t>(range1) * 2);
  double global_min = std::numeric_limits<double>::infinity();
  for (std::int64_t b1 = 0; b1 < range1; ++b1) {
    const double x1 = static_cast<double>(b1) * ws.lambdas[0] + noisy.remainders[0];
    const double target = wrap_unsigned(x1 - noisy.remainders[k], ws.d_max);
    const auto q = static_cast<std::int64_t>(std::floor(target / lambdak));
    std::int64_t tried[3];
    std::size_t n_tried = 0;
    for (std::int64_t dq = -1; dq <= 1; ++dq) {
      const std::int64_t bk = mod_floor(q + dq, rangek);
      if (std::find(tried, tried + n_tried, bk) != tried + n_tried) continue;
      tried[n_tried++] = bk;
      const QuotientPair pair{b1, bk};
      const double obj = candidate_objective(k, pair, noisy, ws);
      global_min = std::min(global_min, obj);
      best.emplace_back(pair, obj);
    }
  }

  const double tie = 1e-9 * ws.lambdas[0];
  CandidateSet set;
  set.k = k;
  set.objective = global_min;
  for (const auto& [pair, obj] : best) {
    if (obj <= global_min + tie) set.pairs.push_back(pair);
  }
  std::sort(set.pairs.begin(), set.pairs.end(),
            [](const QuotientPair& a, const QuotientPair& b) { return a.b1 != b.b1 ? a.b1 < b.b1 : a.bk < b.bk; });
  return set;
}

Reconstruction robust_crt_reconstruct(const RemainderVector& noisy, const WavelengthSet& ws) {
  check_remainders(noisy, ws);

  QuotientSearchSpace search;
  search.gamma_product = ws.gamma_product();
  for (std::size_t k = 0; k < ws.size(); ++k) search.quotient_ranges.push_back(ws.quotient_range(k));

  std::vector<std::int64_t> common;
  for (std::size_t k = 1; k < ws.size(); ++k) {
    CandidateSet set = build_candidate_set(k, noisy, ws);
    std::vector<std::int64_t> firsts;
    for (const auto& p : set.pairs) firsts.push_back(p.b1);
    firsts.erase(std::unique(firsts.begin(), firsts.end()), firsts.end());
    if (k == 1) {
      common = std::move(firsts);
    } else {
      std::vector<std::int64_t> merged;
      std::set_intersection(common.begin(), common.end(), firsts.begin(), firsts.end(), std::back_inserter(merged));
      common = std::move(merged);
    }
    search.candidates.push_back(std::move(set));
  }
  search.intersection = common;

  if (common.size() != 1) {
    const std::string what = "robust CRT: first-quotient intersection has " + std::to_string(common.size()) +
                             " elements (remainder errors exceed the tolerance)";
    throw AmbiguityError(what, std::move(search));
  }

  Reconstruction out;
  const std::int64_t b1 = common.front();
  out.quotients.push_back(b1);
  for (const auto& set : search.candidates) {
    auto it = std::find_if(set.pairs.begin(), set.pairs.end(), [b1](const QuotientPair& p) { return p.b1 == b1; });
    out.quotients.push_back(it->bk);
  }

  // Average the per-modulus dividends; each is taken on the branch nearest the first one,
  // which leaves the plain arithmetic mean unchanged unless a value folds across d_max.
  const double x1 = static_cast<double>(b1) * ws.lambdas[0] + noisy.remainders[0];
  double sum = 0.0;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    double xk = static_cast<double>(out.quotients[k]) * ws.lambdas[k] + noisy.remainders[k];
    if (xk - x1 > 0.5 * ws.d_max) xk -= ws.d_max;
    if (xk - x1 < -0.5 * ws.d_max) xk += ws.d_max;
    sum += xk;
  }
  out.r_hat = wrap_unsigned(sum / static_cast<double>(ws.size()), ws.d_max);
  out.search = std::move(search);
  return out;
}

} // namespace wusn
