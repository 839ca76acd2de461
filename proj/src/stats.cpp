#include "dam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dam {

double Density1D::integral() const {
    return expect([](double) { return 1.0; });
}

ProjectedAttractions project(const AttractionVector& a) {
    const double b1 = a[index(Action::B1)], s1 = a[index(Action::S1)];
    const double b2 = a[index(Action::B2)], s2 = a[index(Action::S2)];
    return {(b1 + b2) - (s1 + s2), (b1 + s1) - (b2 + s2)};
}

namespace {
double binder_from_moments(double m2, double m4) {
    if (!(m2 > 0.0)) throw std::domain_error("binder cumulant undefined: second moment is zero");
    return 1.0 - m4 / (3.0 * m2 * m2);
}
}  // namespace

double binder(std::span<const double> samples) {
    if (samples.empty()) throw std::domain_error("binder cumulant undefined: no samples");
    // Kahan-free but in long double; 1e6-sample sums stay well inside tolerance.
    long double m2 = 0.0L, m4 = 0.0L;
    for (double x : samples) {
        const long double x2 = static_cast<long double>(x) * x;
        m2 += x2;
        m4 += x2 * x2;
    }
    const auto n = static_cast<long double>(samples.size());
    return binder_from_moments(static_cast<double>(m2 / n), static_cast<double>(m4 / n));
}

double binder(const Density1D& density) {
    const double mass = density.integral();
    const double m2 = density.expect([](double x) { return x * x; }) / mass;
    const double m4 = density.expect([](double x) { return x * x * x * x; }) / mass;
    return binder_from_moments(m2, m4);
}

double binder_by_type(std::span<const double> samples, std::span<const int> types) {
    if (samples.size() != types.size()) throw std::invalid_argument("samples and types differ in length");
    std::map<int, std::vector<double>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) groups[types[i]].push_back(samples[i]);
    if (groups.empty()) throw std::domain_error("binder cumulant undefined: no samples");
    double acc = 0.0;
    for (const auto& [type, xs] : groups) acc += binder(xs);
    return acc / static_cast<double>(groups.size());
}

std::vector<int> log_lags(int max_lag, int count) {
    std::vector<int> lags{0};
    if (max_lag < 1) return lags;
    const double step = count > 1 ? std::log(static_cast<double>(max_lag)) / (count - 1) : 0.0;
    for (int k = 0; k < count; ++k) {
        const int lag = static_cast<int>(std::lround(std::exp(step * k)));
        if (lag > lags.back() && lag <= max_lag) lags.push_back(lag);
    }
    return lags;
}

AutocovCurve autocovariance(const Trajectory& traj, std::span<const int> lag_periods, AutocovMode mode) {
    const auto n_snap = traj.snapshots.size();
    if (n_snap == 0) throw std::invalid_argument("trajectory has no snapshots");
    const int stride = traj.config.snapshot_stride();
    const int dim = traj.state_dim;
    const int n = traj.n_agents;

    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
    if (mode == AutocovMode::central) {
        for (const auto& s : traj.snapshots)
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < dim; ++c) mean[c] += s.state[static_cast<std::size_t>(i) * dim + c];
        for (double& m : mean) m /= static_cast<double>(n_snap) * n;
    }

    AutocovCurve curve;
    curve.mode = mode;
    for (int lag : lag_periods) {
        if (lag < 0 || lag % stride != 0)
            throw std::invalid_argument("lags must be non-negative multiples of the snapshot stride");
        const std::size_t k = static_cast<std::size_t>(lag / stride);
        if (k >= n_snap) throw std::invalid_argument("lag exceeds the recorded segment");
        long double acc = 0.0L;
        for (std::size_t t0 = 0; t0 + k < n_snap; ++t0) {
            const auto& a = traj.snapshots[t0].state;
            const auto& b = traj.snapshots[t0 + k].state;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const int c = static_cast<int>(j % dim);
                if (mode == AutocovMode::central) {
                    acc += (a[j] - mean[c]) * (b[j] - mean[c]);
                } else {
                    const double d = b[j] - a[j];
                    acc += d * d;
                }
            }
        }
        const long double count = static_cast<long double>(n_snap - k) * n;
        curve.lag_periods.push_back(lag);
        curve.lags.push_back(lag * traj.config.learning.r);
        curve.values.push_back(static_cast<double>(acc / count));
    }
    return curve;
}

PlateauInfo find_plateau(const AutocovCurve& curve, double rel_slope, double min_level) {
    PlateauInfo info;
    // Slopes against log tau between consecutive positive lags.
    std::vector<double> slope, mid;
    std::vector<std::size_t> right;
    for (std::size_t k = 1; k < curve.lags.size(); ++k) {
        if (curve.lags[k - 1] <= 0.0) continue;
        const double dl = std::log(curve.lags[k]) - std::log(curve.lags[k - 1]);
        slope.push_back((curve.values[k] - curve.values[k - 1]) / dl);
        mid.push_back(std::sqrt(curve.lags[k] * curve.lags[k - 1]));
        right.push_back(k);
    }
    if (slope.size() < 3 || curve.values.empty()) return info;
    const double c0 = curve.values.front();

    // First local maximum of the decay rate.
    std::size_t peak = 0;
    while (peak + 1 < slope.size() && -slope[peak + 1] >= -slope[peak]) ++peak;
    info.initial_slope = -slope[peak];
    if (!(info.initial_slope > 0.0)) return info;

    double best = info.initial_slope;
    for (std::size_t k = peak + 1; k < slope.size(); ++k) {
        const double level = std::min(curve.values[right[k] - 1], curve.values[right[k]]);
        if (level < min_level * c0) break;
        if (std::abs(slope[k]) < rel_slope * info.initial_slope) {
            if (!info.found) info.tau_begin = curve.lags[right[k] - 1];
            info.found = true;
            info.tau_end = curve.lags[right[k]];
            if (std::abs(slope[k]) < best) {
                best = std::abs(slope[k]);
                info.value = 0.5 * (curve.values[right[k] - 1] + curve.values[right[k]]);
            }
        } else if (info.found) {
            break;
        }
    }
    return info;
}

PersistenceClassifier default_classifier(ModelKind kind) {
    return kind == ModelKind::reduced ? PersistenceClassifier::sign_delta
                                      : PersistenceClassifier::argmax_attraction;
}

std::vector<int> persistence_times(const Trajectory& traj, PersistenceClassifier classifier) {
    if (traj.config.snapshot_stride() != 1) throw std::invalid_argument("persistence needs snapshot stride 1");
    if (classifier == PersistenceClassifier::sign_delta && traj.state_dim != 1)
        throw std::invalid_argument("sign_delta classifier needs the reduced model");
    if (classifier == PersistenceClassifier::argmax_attraction && traj.state_dim != kActions)
        throw std::invalid_argument("argmax_attraction classifier needs the full model");

    auto label = [&](const Snapshot& s, int i) -> int {
        switch (classifier) {
            case PersistenceClassifier::sign_delta: return s.state[i] >= 0.0 ? 1 : 0;
            case PersistenceClassifier::argmax_attraction: {
                const auto* a = &s.state[static_cast<std::size_t>(i) * kActions];
                return static_cast<int>(std::max_element(a, a + kActions) - a);
            }
            case PersistenceClassifier::chosen_market: return market_of(static_cast<Action>(s.actions[i]));
        }
        return 0;
    };

    std::vector<int> dwell;
    if (traj.snapshots.empty()) return dwell;
    for (int i = 0; i < traj.n_agents; ++i) {
        int current = label(traj.snapshots.front(), i);
        int run = 1;
        for (std::size_t t = 1; t < traj.snapshots.size(); ++t) {
            const int l = label(traj.snapshots[t], i);
            if (l == current) {
                ++run;
            } else {
                dwell.push_back(run);
                current = l;
                run = 1;
            }
        }
        dwell.push_back(run);
    }
    return dwell;
}

double average_return(const Trajectory& traj) {
    const int from = traj.config.burn_in;
    if (!traj.mean_return.empty()) {
        double acc = 0.0;
        int count = 0;
        for (int p = from; p < static_cast<int>(traj.mean_return.size()); ++p, ++count) acc += traj.mean_return[p];
        if (count == 0) throw std::invalid_argument("no post burn-in periods recorded");
        return acc / count;
    }
    if (traj.snapshots.empty()) throw std::invalid_argument("trajectory recorded neither returns nor snapshots");
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& s : traj.snapshots) {
        for (double x : s.scores) acc += x;
        count += s.scores.size();
    }
    return acc / static_cast<double>(count);
}

Histogram2D histogram2d(std::span<const ProjectedAttractions> samples, int bins_x, int bins_y) {
    if (bins_x < 2 || bins_y < 2) throw std::invalid_argument("histogram needs at least 2 bins per axis");
    if (samples.empty()) throw std::invalid_argument("histogram needs samples");
    Histogram2D h;
    h.nx = bins_x;
    h.ny = bins_y;
    h.x_lo = h.x_hi = samples.front().delta_bs;
    h.y_lo = h.y_hi = samples.front().delta_12;
    for (const auto& s : samples) {
        h.x_lo = std::min(h.x_lo, s.delta_bs);
        h.x_hi = std::max(h.x_hi, s.delta_bs);
        h.y_lo = std::min(h.y_lo, s.delta_12);
        h.y_hi = std::max(h.y_hi, s.delta_12);
    }
    if (h.x_hi - h.x_lo <= 0.0) {
        h.x_lo -= 0.5;
        h.x_hi += 0.5;
    }
    if (h.y_hi - h.y_lo <= 0.0) {
        h.y_lo -= 0.5;
        h.y_hi += 0.5;
    }
    h.mass.assign(static_cast<std::size_t>(bins_x) * bins_y, 0.0);
    h.marginal_x.assign(static_cast<std::size_t>(bins_x), 0.0);
    h.marginal_y.assign(static_cast<std::size_t>(bins_y), 0.0);
    auto bin = [](double v, double lo, double hi, int n) {
        return std::clamp(static_cast<int>((v - lo) / (hi - lo) * n), 0, n - 1);
    };
    const double w = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
        const int ix = bin(s.delta_bs, h.x_lo, h.x_hi, bins_x);
        const int iy = bin(s.delta_12, h.y_lo, h.y_hi, bins_y);
        h.mass[static_cast<std::size_t>(ix) * bins_y + iy] += w;
        h.marginal_x[ix] += w;
        h.marginal_y[iy] += w;
    }
    return h;
}

int sturges_bins(std::size_t n) {
    if (n < 2) return 2;
    return std::max(2, static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1);
}

std::vector<Peak> find_peaks(const Histogram2D& h, double min_mass) {
    const int nx = h.nx, ny = h.ny;
    // Steepest-ascent successor of each cell (itself at a local maximum).
    std::vector<int> next(static_cast<std::size_t>(nx) * ny);
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            int best = ix * ny + iy;
            double best_v = h.at(ix, iy);
            for (int dx = -1; dx <= 1; ++dx) {
                for (int dy = -1; dy <= 1; ++dy) {
                    const int jx = ix + dx, jy = iy + dy;
                    if ((dx == 0 && dy == 0) || jx < 0 || jy < 0 || jx >= nx || jy >= ny) continue;
                    const double v = h.at(jx, jy);
                    // Ties resolve to the lower index so plateaus drain to one cell.
                    if (v > best_v || (v == best_v && jx * ny + jy < best)) {
                        best_v = v;
                        best = jx * ny + jy;
                    }
                }
            }
            next[static_cast<std::size_t>(ix) * ny + iy] = best;
        }
    }
    std::map<int, double> basin;
    for (int c = 0; c < nx * ny; ++c) {
        if (h.mass[c] <= 0.0) continue;
        int root = c;
        while (next[root] != root) root = next[root];
        basin[root] += h.mass[c];
    }
    std::vector<Peak> peaks;
    for (const auto& [cell, mass] : basin)
        if (mass >= min_mass) peaks.push_back({cell / ny, cell % ny, mass});
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.mass > b.mass; });
    return peaks;
}

std::vector<double> peak_masses(const Density1D& density, double min_mass) {
    const auto& v = density.values;
    const int n = density.n_points();
    const double h = density.step();
    // Split points at strict local minima.
    std::vector<double> masses;
    double acc = 0.0;
    bool has_max = false;
    for (int i = 0; i + 1 < n; ++i) {
        acc += 0.5 * (v[i] + v[i + 1]) * h;
        if (i > 0 && v[i] > v[i - 1] && v[i] >= v[i + 1]) has_max = true;
        const bool is_min = i + 1 < n - 1 && v[i + 1] < v[i] && v[i + 1] <= v[i + 2];
        if (is_min && has_max) {
            masses.push_back(acc);
            acc = 0.0;
            has_max = false;
        }
    }
    if (!masses.empty() && !has_max && !(n >= 2 && v[n - 1] > v[n - 2])) {
        masses.back() += acc;
    } else {
        masses.push_back(acc);
    }
    // Merge negligible basins into their neighbour.
    std::vector<double> kept;
    double carry = 0.0;
    for (double m : masses) {
        if (m < min_mass) {
            if (kept.empty()) carry += m;
            else kept.back() += m;
        } else {
            kept.push_back(m + carry);
            carry = 0.0;
        }
    }
    if (kept.empty()) kept.push_back(carry);
    return kept;
}

int count_modes(const Density1D& density, double min_mass) {
    return static_cast<int>(peak_masses(density, min_mass).size());
}

double l1_distance(const Density1D& density, std::span<const double> samples, int bins) {
    if (bins < 1) throw std::invalid_argument("bins must be positive");
    if (samples.empty()) throw std::invalid_argument("no samples");
    const double lo = density.lo, hi = density.hi, width = (hi - lo) / bins;
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    double outside = 0.0;
    const double w = 1.0 / static_cast<double>(samples.size());
    for (double x : samples) {
        if (x < lo || x > hi) {
            outside += w;
            continue;
        }
        hist[std::min(bins - 1, static_cast<int>((x - lo) / width))] += w;
    }
    // Density mass per bin by trapezoid on the grid, with linear interpolation at bin edges.
    auto value_at = [&](double x) {
        const double t = (x - lo) / density.step();
        const int i = std::clamp(static_cast<int>(t), 0, density.n_points() - 2);
        const double f = t - i;
        return density.values[i] * (1.0 - f) + density.values[i + 1] * f;
    };
    double dist = outside;
    for (int b = 0; b < bins; ++b) {
        const double a = lo + b * width;
        const int sub = std::max(4, 2 * (density.n_points() / bins));
        double m = 0.0;
        for (int k = 0; k < sub; ++k) {
            const double x0 = a + width * k / sub, x1 = a + width * (k + 1) / sub;
            m += 0.5 * (value_at(x0) + value_at(x1)) * (x1 - x0);
        }
        dist += std::abs(m - hist[b]);
    }
    return dist;
}

}  // namespace dam
