#include "dualgen/stable.hpp"

#include <cmath>

#include <boost/math/constants/constants.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "dualgen/error.hpp"

namespace dualgen {

namespace {
constexpr double kPi = boost::math::constants::pi<double>();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng path_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double uniform01(Rng& rng) {
    boost::random::uniform_01<double> u;
    double v = u(rng);
    while (v <= 0.0) v = u(rng);
    return v;
}

double std_normal(Rng& rng) {
    boost::random::normal_distribution<double> n;
    return n(rng);
}

double std_exponential(Rng& rng) {
    boost::random::exponential_distribution<double> e;
    return e(rng);
}

double symmetric_stable(double alpha, Rng& rng) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw Error(ErrorCode::InvalidArgument, "stable index must lie in (0, 2]");
    if (alpha == 2.0) return std::sqrt(2.0) * std_normal(rng);
    const double u = kPi * (uniform01(rng) - 0.5);
    const double w = std_exponential(rng);
    if (alpha == 1.0) return std::tan(u);
    return std::sin(alpha * u) / std::pow(std::cos(u), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha);
}

double positive_stable(double beta, Rng& rng) {
    if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidArgument, "positive stable index must lie in (0, 1)");
    const double u = kPi * uniform01(rng);
    const double e = std_exponential(rng);
    return std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta) *
           std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
}

Vec isotropic_stable(double alpha, std::size_t d, Rng& rng) {
    Vec v(static_cast<Eigen::Index>(d));
    if (d == 1) {
        v[0] = symmetric_stable(alpha, rng);
        return v;
    }
    const double scale = alpha == 2.0 ? 1.0 : std::sqrt(positive_stable(0.5 * alpha, rng));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * std::sqrt(2.0) * std_normal(rng);
    return v;
}

}  // namespace dualgen
