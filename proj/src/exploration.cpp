#include "omdcurl/exploration.hpp"

#include <algorithm>
#include <cmath>

namespace omdcurl {

Field full_info_bonus(const VisitCounts& counts, double L, double C_delta) {
    if (!(L >= 0.0) || !(C_delta >= 0.0)) throw ModelError("bonus constants must be nonnegative");
    const Dims d = counts.dims();
    Field b(d);
    for (int n = 0; n < d.N; ++n) {
        const double scale = L * (d.N - n) * C_delta;
        for (int x = 0; x < d.S; ++x)
            for (int a = 0; a < d.A; ++a) {
                const double cnt = std::max<double>(1.0, static_cast<double>(counts.visits(n, x, a)));
                b(n, x, a) = scale / std::sqrt(cnt);
            }
    }
    return b;
}

double c_prime_delta(Dims d, std::int64_t T, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ModelError("delta must lie in (0,1)");
    const double t = static_cast<double>(T);
    const double lg = std::log(static_cast<double>(d.S) * d.S * d.A * d.N * t * t / (4.0 * delta));
    return std::sqrt(322.0 * d.S + 12.0 * std::sqrt(static_cast<double>(d.S)) * std::pow(std::max(lg, 0.0), 2.5) + 620.0);
}

Field bandit_curl_bonus(const VisitCounts& counts, double L, std::int64_t T) {
    if (T < 2) throw ModelError("bandit bonus needs T >= 2 so that delta = 1/T < 1");
    return full_info_bonus(counts, L, c_prime_delta(counts.dims(), T, 1.0 / static_cast<double>(T)));
}

}  // namespace omdcurl
