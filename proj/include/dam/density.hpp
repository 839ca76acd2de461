// density.hpp - a probability density sampled on a uniform grid.
#pragma once

#include <vector>

namespace dam {

struct Density1D {
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> values;  // values[i] at x(i); trapezoid-normalized
    int type_id = 0;

    int n_points() const { return static_cast<int>(values.size()); }
    double step() const { return (hi - lo) / (n_points() - 1); }
    double x(int i) const { return lo + step() * i; }
    double integral() const;
    // Trapezoid expectation of f(x) under the density.
    template <class F>
    double expect(F&& f) const {
        const double h = step();
        double acc = 0.0;
        for (int i = 0; i < n_points(); ++i) {
            const double w = (i == 0 || i + 1 == n_points()) ? 0.5 : 1.0;
            acc += w * values[i] * f(x(i));
        }
        return acc * h;
    }
};

}  // namespace dam
