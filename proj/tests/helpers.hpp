#pragma once

#include "dualgen/generator.hpp"

#include <string>
#include <vector>

namespace testing_helpers {

using namespace dualgen;

inline ProcessSpec diffusion_spec(const std::vector<std::string>& drift,
                                  const std::vector<std::vector<std::string>>& diffusion) {
    ProcessSpec s;
    s.dim = drift.empty() ? diffusion.size() : drift.size();
    if (!drift.empty()) {
        std::vector<Expr> b;
        for (const auto& t : drift) b.push_back(Expr::parse(t, s.dim));
        s.drift = b;
    }
    if (!diffusion.empty()) {
        std::vector<std::vector<Expr>> a;
        for (const auto& row : diffusion) {
            a.emplace_back();
            for (const auto& t : row) a.back().push_back(Expr::parse(t, s.dim));
        }
        s.diffusion = a;
    }
    return s;
}

inline ProcessSpec spec1d(const std::string& a, const std::string& b) { return diffusion_spec({b}, {{a}}); }

inline JumpAtom atom(std::vector<double> displacement, const std::string& rate, std::size_t dim) {
    JumpAtom j;
    j.displacement = Eigen::Map<const Vec>(displacement.data(), static_cast<Eigen::Index>(displacement.size()));
    j.rate = Expr::parse(rate, dim);
    return j;
}

inline Vec pt(std::initializer_list<double> v) {
    Vec x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double a : v) x[i++] = a;
    return x;
}

}  // namespace testing_helpers
