#pragma once

// Nelder-Mead downhill simplex on an unconstrained vector space.
// Constraints are the caller's business (project inside the objective).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace fastgate {

struct NelderMeadOptions {
    int max_evaluations = 4000;
    double f_tolerance = 1e-16;  // absolute spread of simplex values
    double x_tolerance = 1e-12;  // max simplex edge
    int restarts = 3;            // rebuild the simplex around the best point
    double restart_scale = 0.1;  // restart simplex size relative to the first step
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

template <class F>
NelderMeadResult nelder_mead(F &&f, std::vector<double> x0, const std::vector<double> &step,
                             const NelderMeadOptions &opt = {}) {
    const std::size_t n = x0.size();
    NelderMeadResult best;
    best.x = x0;
    best.value = f(x0);
    best.evaluations = 1;

    std::vector<double> scale = step;
    for (int round = 0; round <= opt.restarts; ++round) {
        std::vector<std::vector<double>> pts(n + 1, best.x);
        std::vector<double> vals(n + 1, best.value);
        for (std::size_t i = 0; i < n; ++i) {
            pts[i + 1][i] += scale[i];
            vals[i + 1] = f(pts[i + 1]);
            ++best.evaluations;
        }

        std::vector<std::size_t> order(n + 1);
        std::vector<double> centroid(n), trial(n), trial2(n);
        bool converged = false;
        while (best.evaluations < opt.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            // Ties broken by index keep the run deterministic.
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
            const std::size_t lo = order.front(), hi = order.back(), second = order[n - 1];

            double edge = 0.0;
            for (std::size_t i = 0; i <= n; ++i) {
                for (std::size_t d = 0; d < n; ++d) {
                    edge = std::max(edge, std::abs(pts[i][d] - pts[lo][d]));
                }
            }
            if (vals[hi] - vals[lo] <= opt.f_tolerance || edge <= opt.x_tolerance) {
                converged = true;
                break;
            }

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t i = 0; i <= n; ++i) {
                if (i == hi) continue;
                for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
            }
            auto along = [&](double coef, std::vector<double> &out) {
                for (std::size_t d = 0; d < n; ++d) out[d] = centroid[d] + coef * (pts[hi][d] - centroid[d]);
                ++best.evaluations;
                return f(out);
            };

            const double fr = along(-1.0, trial);
            if (fr < vals[lo]) {
                const double fe = along(-2.0, trial2);
                if (fe < fr) {
                    pts[hi] = trial2;
                    vals[hi] = fe;
                } else {
                    pts[hi] = trial;
                    vals[hi] = fr;
                }
            } else if (fr < vals[second]) {
                pts[hi] = trial;
                vals[hi] = fr;
            } else {
                const bool outside = fr < vals[hi];
                const double fc = along(outside ? -0.5 : 0.5, trial2);
                if (fc < (outside ? fr : vals[hi])) {
                    pts[hi] = trial2;
                    vals[hi] = fc;
                } else {
                    for (std::size_t i = 0; i <= n; ++i) {
                        if (i == lo) continue;
                        for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[lo][d] + 0.5 * (pts[i][d] - pts[lo][d]);
                        vals[i] = f(pts[i]);
                        ++best.evaluations;
                    }
                }
            }
        }
        const auto it = std::min_element(vals.begin(), vals.end());
        const auto idx = static_cast<std::size_t>(it - vals.begin());
        if (vals[idx] <= best.value) {
            best.value = vals[idx];
            best.x = pts[idx];
        }
        best.converged = converged;
        if (best.evaluations >= opt.max_evaluations) break;
        for (auto &s : scale) s *= opt.restart_scale;
    }
    return best;
}

}  // namespace fastgate
