#pragma once

#include <cstdint>

#include "omdcurl/estimation.hpp"

namespace omdcurl {

/// b_n(x,a) = L (N - n) C / sqrt(max(1, N_n(x,a))) for n = 0..N; b_N = 0.
Field full_info_bonus(const VisitCounts& counts, double L, double C_delta);

/// C'_delta = sqrt(322 S + 12 sqrt(S) log^{5/2}(S^2 A N T^2 / (4 delta)) + 620)
double c_prime_delta(Dims d, std::int64_t T, double delta);

/// Bonus with the bandit constant C'_{1/T}.
Field bandit_curl_bonus(const VisitCounts& counts, double L, std::int64_t T);

}  // namespace omdcurl
