#include "dam/learning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dam {

void LearningParams::validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("learning.beta must be >= 0");
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("learning.r must lie in (0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("learning.alpha must lie in [0, 1]");
}

PerAction<double> choice_probs(const AttractionVector& a, double beta) {
    const double top = *std::max_element(a.begin(), a.end());
    PerAction<double> p{};
    double sum = 0.0;
    for (int g = 0; g < kActions; ++g) {
        p[g] = std::exp(beta * (a[g] - top));
        sum += p[g];
    }
    for (double& x : p) x /= sum;
    return p;
}

AttractionVector update_attractions(const AttractionVector& a, Action chosen, double score,
                                    const LearningParams& p) {
    AttractionVector out{};
    for (int g = 0; g < kActions; ++g) {
        if (g == index(chosen)) {
            out[g] = (1.0 - p.r) * a[g] + p.r * score;
        } else {
            out[g] = (1.0 - p.alpha * p.r) * a[g];
        }
    }
    return out;
}

double choice_prob_market1(double delta, double beta) {
    const double x = beta * delta;
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double update_delta(double delta, int market, double score, double r) {
    return (1.0 - r) * delta + (market == 0 ? r * score : -r * score);
}

}  // namespace dam
