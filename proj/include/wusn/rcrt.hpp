#pragma once

// Robust Chinese-remainder reconstruction of a real dividend from noisy remainders
// modulo wavelengths that share a real common factor B.
//
// Dividends live on the circle [0, d_max): quotients are searched over the full
// period and candidate dividends are compared by cyclic distance, so a remainder
// error that folds a value across 0 or d_max is handled the same way as any other.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wusn {

/// lambda_k = B * Gamma_k with pairwise co-prime Gamma_k; d_max = B * prod(Gamma_k).
struct WavelengthSet {
  double B = 0.0;
  std::vector<std::int64_t> gammas;
  std::vector<double> lambdas;
  double d_max = 0.0;

  std::size_t size() const { return gammas.size(); }
  /// Product of all Gamma_k.
  std::int64_t gamma_product() const;
  /// gamma_k = prod(Gamma) / Gamma_k, the number of admissible quotients for modulus k.
  std::int64_t quotient_range(std::size_t k) const;
};

/// Throws ConfigError for B <= 0, K < 2, Gamma_k < 2 or a non-coprime pair.
WavelengthSet make_wavelength_set(double B, std::vector<std::int64_t> gammas);

struct RemainderVector {
  std::vector<double> remainders;
  /// Folding integers, known only when the remainders came from an exact division.
  std::optional<std::vector<std::int64_t>> quotients;
};

/// Exact folding of r in [0, d_max): r = quotients[k] * lambda_k + remainders[k].
RemainderVector remainders_of(double r, const WavelengthSet& ws);

/// (phi / 2pi) * lambda for phi in [0, 2pi). Throws DomainError otherwise.
double phase_to_remainder(double phi, double lambda);

/// Length of the shorter arc between a and b on a circle of the given circumference.
double cyclic_distance(double a, double b, double period);

struct QuotientPair {
  std::int64_t b1 = 0;
  std::int64_t bk = 0;
  friend bool operator==(const QuotientPair&, const QuotientPair&) = default;
};

/// Minimizing quotient pairs for the first modulus paired with modulus k.
struct CandidateSet {
  std::size_t k = 0;
  std::vector<QuotientPair> pairs; ///< sorted by (b1, bk)
  double objective = 0.0;          ///< minimal |bk*lambda_k + rk - b1*lambda_1 - r1| (cyclic)
};

struct QuotientSearchSpace {
  std::int64_t gamma_product = 0;
  std::vector<std::int64_t> quotient_ranges;
  std::vector<CandidateSet> candidates;  ///< one per k = 1..K-1 (0-based)
  std::vector<std::int64_t> intersection;
};

/// Thrown when the candidate sets do not pin down a single first quotient.
class AmbiguityError : public std::runtime_error {
public:
  AmbiguityError(const std::string& what, QuotientSearchSpace search)
      : std::runtime_error(what), search_(std::move(search)) {}
  const QuotientSearchSpace& search() const { return search_; }

private:
  QuotientSearchSpace search_;
};

/// Objective of a single quotient pair for modulus k (0-based, k >= 1).
double candidate_objective(std::size_t k, const QuotientPair& pair, const RemainderVector& noisy,
                           const WavelengthSet& ws);

/// All minimizers of candidate_objective over 0 <= b1 < gamma_1, 0 <= bk < gamma_k.
/// Pairs within 1e-9 * lambda_1 of the minimum are treated as ties.
CandidateSet build_candidate_set(std::size_t k, const RemainderVector& noisy, const WavelengthSet& ws);

struct Reconstruction {
  double r_hat = 0.0;
  std::vector<std::int64_t> quotients;
  QuotientSearchSpace search;
};

/// Robust reconstruction. Remainder errors below B/4 give exact quotients and
/// |r_hat - r| <= max error (cyclically). Throws AmbiguityError when the
/// intersection of first-quotient candidates is not a singleton.
Reconstruction robust_crt_reconstruct(const RemainderVector& noisy, const WavelengthSet& ws);

} // namespace wusn
