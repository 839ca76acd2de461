#include "dam/bifurcation.hpp"

#include <boost/math/special_functions/lambert_w.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dam/parallel.hpp"
#include "dam/stats.hpp"
#include "newton.hpp"

namespace dam {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> fractions_at(const std::vector<double>& delta, double beta) {
    std::vector<double> f(delta.size());
    for (std::size_t g = 0; g < delta.size(); ++g) f[g] = choice_prob_market1(delta[g], beta);
    return f;
}

// Walks beta from 0 to `target`, re-solving at each step from the last
// solution and halving the step when Newton fails.
template <class Solve>
bool continue_in_beta(double target, Solve&& solve) {
    double beta = 0.0;
    double step = std::min(0.1, target);
    while (beta < target) {
        const double next = std::min(target, beta + step);
        if (solve(next)) {
            beta = next;
            step = std::min(step * 1.5, 0.25);
        } else {
            step *= 0.5;
            if (step < 1e-6) return false;
        }
    }
    return true;
}

}  // namespace

int FixedPointSet::n_stable() const {
    return static_cast<int>(std::count_if(points.begin(), points.end(), [](const FixedPoint& p) { return p.stable; }));
}

HomogeneousState homogeneous_state_r0(const ReducedParams& params) {
    params.validate();
    const auto model = make_market_model(params.markets, params.bidask);
    const auto q = model.validity();
    const std::size_t n = params.types.size();

    auto t_of = [&](const std::vector<double>& delta, double beta) {
        return trading_probs_from_ratios(demand_ratios_from_fractions(fractions_at(delta, beta), params.types), q);
    };
    auto drift = [&](const Eigen::VectorXd& x, double beta) {
        std::vector<double> delta(x.data(), x.data() + x.size());
        const auto t = t_of(delta, beta);
        Eigen::VectorXd out(static_cast<Eigen::Index>(n));
        for (std::size_t g = 0; g < n; ++g)
            out[g] = jump_moments(delta[g], beta, type_returns(model, params.types[g].p_buy, t)).m1;
        return out;
    };

    // beta = 0: every type picks each market with probability 1/2.
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    {
        const auto t = t_of(std::vector<double>(n, 0.0), 0.0);
        for (std::size_t g = 0; g < n; ++g) {
            const auto ret = type_returns(model, params.types[g].p_buy, t);
            x[g] = 0.5 * (ret.e1[0] - ret.e1[1]);
        }
    }
    HomogeneousState out;
    const bool ok = continue_in_beta(params.beta, [&](double beta) {
        const auto res = detail::newton_solve([&](const Eigen::VectorXd& v) { return drift(v, beta); }, x, 1e-13, 50);
        if (!res.converged) return false;
        x = res.x;
        return true;
    });
    out.delta.assign(x.data(), x.data() + x.size());
    out.d = demand_ratios_from_fractions(fractions_at(out.delta, params.beta), params.types);
    out.t = trading_probs_from_ratios(out.d, q);
    out.residual = drift(x, params.beta).lpNorm<Eigen::Infinity>();
    out.converged = ok && out.residual < 1e-10;
    return out;
}

FixedPointSet single_agent_fixed_points(double p_buy, double beta, const TradingProbs& t_fixed,
                                        const MarketModel& model,
                                        std::optional<std::pair<double, double>> search_interval, int n_scan) {
    if (n_scan < 2) throw std::invalid_argument("n_scan must be >= 2");
    const auto ret = type_returns(model, p_buy, t_fixed);
    double lo, hi;
    if (search_interval) {
        std::tie(lo, hi) = *search_interval;
    } else {
        const double pad = 0.01 * (ret.e1[0] + ret.e1[1]) + 1e-12;
        lo = -ret.e1[1] - pad;
        hi = ret.e1[0] + pad;
    }
    auto m1 = [&](double x) { return jump_moments(x, beta, ret).m1; };

    FixedPointSet set;
    set.kind = ModelKind::reduced;
    set.t_context = t_fixed;
    auto add = [&](double x) {
        const double slope = drift_slope(x, beta, ret);
        set.points.push_back({{x}, slope < 0.0, std::abs(m1(x)), slope});
    };
    double x0 = lo, f0 = m1(lo);
    if (f0 == 0.0) add(x0);
    for (int i = 1; i <= n_scan; ++i) {
        const double x1 = lo + (hi - lo) * i / n_scan;
        const double f1 = m1(x1);
        if (f1 == 0.0) {
            add(x1);
        } else if (f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
            double a = x0, b = x1, fa = f0;
            while (b - a > 1e-14 * std::max(1.0, std::abs(a))) {
                const double mid = 0.5 * (a + b);
                const double fm = m1(mid);
                if (fm == 0.0) {
                    a = b = mid;
                    break;
                }
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            add(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    return set;
}

bool reduced_segregation_predicate(const ReducedParams& params) {
    const auto home = homogeneous_state_r0(params);
    if (!home.converged) throw std::runtime_error("homogeneous state did not converge at beta = " + std::to_string(params.beta));
    const auto model = make_market_model(params.markets, params.bidask);
    for (std::size_t g = 0; g < params.types.size(); ++g) {
        const auto set = single_agent_fixed_points(params.types[g].p_buy, params.beta, home.t, model);
        if (set.n_stable() >= 2) return true;
    }
    return false;
}

namespace {

template <class Pred>
ThresholdResult bisect_threshold(Pred&& pred, double lo, double hi, double tol) {
    if (!(hi > lo) || lo < 0.0) throw std::invalid_argument("threshold bracket must satisfy 0 <= lo < hi");
    ThresholdResult out;
    const bool p_lo = pred(lo), p_hi = pred(hi);
    out.evaluations = 2;
    if (p_lo || !p_hi) {
        std::ostringstream msg;
        msg << "no threshold bracket: predicate(" << lo << ") = " << std::boolalpha << p_lo << ", predicate(" << hi
            << ") = " << p_hi;
        throw std::runtime_error(msg.str());
    }
    while (hi - lo > tol * 0.5 * (hi + lo)) {
        const double mid = 0.5 * (lo + hi);
        ++out.evaluations;
        (pred(mid) ? hi : lo) = mid;
    }
    out.beta_lo = lo;
    out.beta_hi = hi;
    out.beta_s = 0.5 * (lo + hi);
    return out;
}

}  // namespace

ThresholdResult beta_s_reduced(const ReducedParams& params, double beta_lo, double beta_hi, double tol) {
    return bisect_threshold(
        [&](double beta) {
            auto p = params;
            p.beta = beta;
            return reduced_segregation_predicate(p);
        },
        beta_lo, beta_hi, tol);
}

void FullParams::validate() const {
    markets.validate();
    bidask.validate();
    if (alpha != 1.0) throw std::invalid_argument("the fixed-point analysis of the full model requires alpha = 1");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
}

namespace {

PerAction<double> mean_scores(const MarketModel& model) {
    PerAction<double> e{};
    for (int k = 0; k < kActions; ++k) e[k] = model.moments[k].mean_given_trade;
    return e;
}

PerAction<double> counts_of(const PerAction<double>& q, const PerAction<double>& p) {
    PerAction<double> n{};
    for (int k = 0; k < kActions; ++k) n[k] = q[k] * p[k];
    return n;
}

FixedPoint full_point(const AttractionVector& a, const PerAction<double>& rr, double beta) {
    const auto p = choice_probs(a, beta);
    Eigen::Matrix4d j;
    for (int i = 0; i < kActions; ++i)
        for (int k = 0; k < kActions; ++k)
            j(i, k) = rr[i] * beta * ((i == k ? p[i] : 0.0) - p[i] * p[k]) - (i == k ? 1.0 : 0.0);
    const Eigen::Vector4cd ev = j.eigenvalues();
    FixedPoint fp;
    fp.location.assign(a.begin(), a.end());
    fp.max_eigen = ev.real().maxCoeff();
    fp.stable = fp.max_eigen < 0.0;
    for (int k = 0; k < kActions; ++k) fp.residual = std::max(fp.residual, std::abs(p[k] * rr[k] - a[k]));
    return fp;
}

void merge_point(FixedPointSet& set, FixedPoint fp) {
    for (const auto& q : set.points) {
        double dist = 0.0;
        for (std::size_t k = 0; k < q.location.size(); ++k) dist = std::max(dist, std::abs(q.location[k] - fp.location[k]));
        if (dist < 1e-6) return;
    }
    set.points.push_back(std::move(fp));
}

void lambert_w_points(FixedPointSet& set, const PerAction<double>& rr, double beta) {
    using boost::math::lambert_w0;
    using boost::math::lambert_wm1;
    const double r_max = *std::max_element(rr.begin(), rr.end());
    if (beta == 0.0 || r_max <= 0.0) {
        AttractionVector a{};
        for (int k = 0; k < kActions; ++k) a[k] = rr[k] / kActions;
        merge_point(set, full_point(a, rr, beta));
        return;
    }
    // With c = 1/Z each component solves A = R c exp(beta A), i.e.
    // A = -W(-beta R c) / beta on either real branch; c is fixed by
    // sum_g c exp(beta A_g) = 1.
    const double c_max = 1.0 / (std::numbers::e * beta * r_max);
    constexpr double kEdge = -1.0 / std::numbers::e;
    auto solve_a = [&](double c, int code, AttractionVector& a) {
        double total = 0.0;
        for (int k = 0; k < kActions; ++k) {
            if (rr[k] <= 0.0) {
                a[k] = 0.0;
                total += c;
                continue;
            }
            const double x = std::max(kEdge, -beta * rr[k] * c);
            const double w = ((code >> k) & 1) ? lambert_wm1(x) : lambert_w0(x);
            a[k] = -w / beta;
            total += a[k] / rr[k];
        }
        return total - 1.0;
    };
    constexpr int kScan = 4000;
    const double log_hi = std::log(c_max), log_lo = log_hi - 60.0;
    for (int code = 0; code < 16; ++code) {
        bool valid = true;
        for (int k = 0; k < kActions; ++k)
            if (((code >> k) & 1) && rr[k] <= 0.0) valid = false;
        if (!valid) continue;
        AttractionVector a{};
        double u0 = log_lo, h0 = solve_a(std::exp(u0), code, a);
        for (int i = 1; i <= kScan; ++i) {
            const double u1 = log_lo + (log_hi - log_lo) * i / kScan;
            const double h1 = solve_a(std::exp(u1), code, a);
            if ((h0 < 0.0) != (h1 < 0.0) || h1 == 0.0) {
                double lo = u0, hi = u1, hl = h0;
                for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double hm = solve_a(std::exp(mid), code, a);
                    if ((hm < 0.0) == (hl < 0.0)) {
                        lo = mid;
                        hl = hm;
                    } else {
                        hi = mid;
                    }
                }
                solve_a(std::exp(0.5 * (lo + hi)), code, a);
                auto fp = full_point(a, rr, beta);
                if (fp.residual < 1e-9) merge_point(set, std::move(fp));
            }
            u0 = u1;
            h0 = h1;
        }
    }
}

void multi_start_points(FixedPointSet& set, const PerAction<double>& rr, double beta) {
    constexpr double kEps = 0.01;
    std::vector<PerAction<double>> starts;
    starts.push_back({0.25, 0.25, 0.25, 0.25});
    for (int g = 0; g < kActions; ++g) {
        PerAction<double> p;
        p.fill(kEps);
        p[g] = 1.0 - 3.0 * kEps;
        starts.push_back(p);
    }
    for (int a = 0; a < kActions; ++a)
        for (int b = a + 1; b < kActions; ++b) {
            PerAction<double> p;
            p.fill(kEps);
            p[a] = p[b] = 0.5 - kEps;
            starts.push_back(p);
        }
    for (auto p : starts) {
        bool ok = false;
        for (int it = 0; it < 20000; ++it) {
            AttractionVector a{};
            for (int k = 0; k < kActions; ++k) a[k] = p[k] * rr[k];
            const auto next = choice_probs(a, beta);
            double diff = 0.0;
            for (int k = 0; k < kActions; ++k) {
                const double v = 0.5 * p[k] + 0.5 * next[k];
                diff = std::max(diff, std::abs(v - p[k]));
                p[k] = v;
            }
            if (diff < 1e-14) {
                ok = true;
                break;
            }
        }
        AttractionVector a{};
        for (int k = 0; k < kActions; ++k) a[k] = p[k] * rr[k];
        auto fp = full_point(a, rr, beta);
        if (ok && fp.residual < 1e-9) merge_point(set, std::move(fp));
        else ++set.dropped;
    }
}

}  // namespace

FullHomogeneousState homogeneous_state_full_r0(const FullParams& params) {
    params.validate();
    const auto model = make_market_model(params.markets, params.bidask);
    const auto q = model.validity();
    const auto e = mean_scores(model);
    auto rhs = [&](const AttractionVector& a, double beta, TradingProbs* t_out) {
        const auto p = choice_probs(a, beta);
        const auto t = trading_probs_from_counts(counts_of(q, p));
        if (t_out) *t_out = t;
        AttractionVector out{};
        for (int k = 0; k < kActions; ++k) out[k] = p[k] * q[k] * t.t[k] * e[k];
        return out;
    };
    auto residual = [&](const Eigen::VectorXd& x, double beta) {
        AttractionVector a{};
        for (int k = 0; k < kActions; ++k) a[k] = x[k];
        const auto f = rhs(a, beta, nullptr);
        Eigen::VectorXd out(kActions);
        for (int k = 0; k < kActions; ++k) out[k] = f[k] - a[k];
        return out;
    };
    Eigen::VectorXd x(kActions);
    {
        const auto a0 = rhs(AttractionVector{}, 0.0, nullptr);
        for (int k = 0; k < kActions; ++k) x[k] = a0[k];
    }
    const bool ok = continue_in_beta(params.beta, [&](double beta) {
        const auto res = detail::newton_solve([&](const Eigen::VectorXd& v) { return residual(v, beta); }, x, 1e-13, 50);
        if (!res.converged) return false;
        x = res.x;
        return true;
    });
    FullHomogeneousState out;
    for (int k = 0; k < kActions; ++k) out.a[k] = x[k];
    rhs(out.a, params.beta, &out.t);
    out.residual = residual(x, params.beta).lpNorm<Eigen::Infinity>();
    out.converged = ok && out.residual < 1e-10;
    return out;
}

FixedPointSet full_model_fixed_points_r0(const FullParams& params, const TradingProbs& t_fixed,
                                         FixedPointSearch search) {
    params.validate();
    const auto model = make_market_model(params.markets, params.bidask);
    const auto rr = model.returns(t_fixed);
    FixedPointSet set;
    set.kind = ModelKind::full;
    set.t_context = t_fixed;
    if (search == FixedPointSearch::lambert_w) lambert_w_points(set, rr, params.beta);
    else multi_start_points(set, rr, params.beta);
    std::sort(set.points.begin(), set.points.end(),
              [](const FixedPoint& a, const FixedPoint& b) { return a.location < b.location; });
    return set;
}

FixedPointSet full_model_fixed_points_r0(const FullParams& params, FixedPointSearch search) {
    const auto home = homogeneous_state_full_r0(params);
    if (!home.converged) throw std::runtime_error("full-model homogeneous state did not converge at beta = " + std::to_string(params.beta));
    return full_model_fixed_points_r0(params, home.t, search);
}

bool full_segregation_predicate(const FullParams& params) {
    const auto set = full_model_fixed_points_r0(params);
    std::set<int> preferred;
    for (const auto& p : set.points) {
        if (!p.stable) continue;
        preferred.insert(static_cast<int>(std::max_element(p.location.begin(), p.location.end()) - p.location.begin()));
    }
    return preferred.size() == kActions;
}

ThresholdResult beta_s_full(const FullParams& params, double beta_lo, double beta_hi, double tol) {
    return bisect_threshold(
        [&](double beta) {
            auto p = params;
            p.beta = beta;
            return full_segregation_predicate(p);
        },
        beta_lo, beta_hi, tol);
}

DemandRatios selfconsistency_map(DemandRatios d, const ReducedParams& params) {
    params.validate();
    const auto model = make_market_model(params.markets, params.bidask);
    return map_demand_ratios(params, d, default_grid(params), model);
}

std::string to_string(SolutionClass c) {
    switch (c) {
        case SolutionClass::U: return "U";
        case SolutionClass::S: return "S";
        case SolutionClass::W: return "W";
    }
    return "?";
}

SolutionClass classify(const std::vector<Density1D>& densities, double w_min, double min_peak_mass,
                       std::vector<std::vector<double>>* masses) {
    bool multimodal = false, weak = false;
    if (masses) masses->clear();
    for (const auto& d : densities) {
        const auto m = peak_masses(d, min_peak_mass);
        if (masses) masses->push_back(m);
        if (m.size() < 2) continue;
        multimodal = true;
        const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
        if (*lo / *hi < w_min) weak = true;
    }
    if (!multimodal) return SolutionClass::U;
    return weak ? SolutionClass::W : SolutionClass::S;
}

namespace {

struct CensusContext {
    const ReducedParams& params;
    MarketModel model;
    Grid grid;

    Eigen::VectorXd residual(const Eigen::VectorXd& u) const {
        const auto g = map_demand_ratios(params, {std::exp(u[0]), std::exp(u[1])}, grid, model);
        Eigen::VectorXd out(2);
        out << std::log(g.d1) - u[0], std::log(g.d2) - u[1];
        return out;
    }
};

}  // namespace

SteadyStateCensus steady_state_census(const ReducedParams& params, const CensusOptions& options) {
    params.validate();
    if (options.grid_points < 3) throw std::invalid_argument("census grid needs at least 3 points per axis");
    CensusContext ctx{params, make_market_model(params.markets, params.bidask),
                      options.density_grid.hi > options.density_grid.lo ? options.density_grid
                                                                         : default_grid(params, options.density_grid.n_points)};
    const int n = options.grid_points;
    const double span = options.span;
    auto node = [&](int i) { return -span + 2.0 * span * i / (n - 1); };

    SteadyStateCensus census;
    census.r = params.r;
    census.beta = params.beta;

    std::vector<Eigen::Vector2d> f(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd u(2);
            u << node(i), node(j);
            try {
                f[i * n + j] = ctx.residual(u);
            } catch (const std::exception&) {
                f[i * n + j] = Eigen::Vector2d::Constant(kNaN);
            }
        }

    std::vector<Eigen::VectorXd> roots;
    auto admissible = [&](const Eigen::VectorXd& u) { return u.cwiseAbs().maxCoeff() <= span + 0.5; };
    for (int i = 0; i + 1 < n; ++i) {
        for (int j = 0; j + 1 < n; ++j) {
            const Eigen::Vector2d c[4] = {f[i * n + j], f[(i + 1) * n + j], f[i * n + j + 1], f[(i + 1) * n + j + 1]};
            bool finite = true;
            std::array<bool, 2> neg{}, pos{};
            for (const auto& v : c) {
                if (!v.allFinite()) finite = false;
                for (int k = 0; k < 2; ++k) {
                    if (v[k] <= 0.0) neg[k] = true;
                    if (v[k] >= 0.0) pos[k] = true;
                }
            }
            if (!finite) {
                ++census.failed_cells;
                continue;
            }
            if (!(neg[0] && pos[0] && neg[1] && pos[1])) continue;
            Eigen::VectorXd u0(2);
            u0 << 0.5 * (node(i) + node(i + 1)), 0.5 * (node(j) + node(j + 1));
            detail::NewtonResult res;
            try {
                res = detail::newton_solve([&](const Eigen::VectorXd& u) { return ctx.residual(u); }, u0, 1e-11, 40,
                                           admissible);
            } catch (const std::exception&) {
                ++census.failed_cells;
                continue;
            }
            if (!res.converged || res.x.cwiseAbs().maxCoeff() > span) continue;
            const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Eigen::VectorXd& r) {
                return (r - res.x).lpNorm<Eigen::Infinity>() < 1e-6;
            });
            if (!seen) roots.push_back(res.x);
        }
    }
    std::sort(roots.begin(), roots.end(), [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    for (const auto& u : roots) {
        CensusSolution sol;
        sol.d = {std::exp(u[0]), std::exp(u[1])};
        SelfConsistentState state;
        map_demand_ratios(params, sol.d, ctx.grid, ctx.model, &state);
        sol.cls = classify(state.densities, options.w_min, options.min_peak_mass, &sol.peak_masses);
        sol.residual = ctx.residual(u).lpNorm<Eigen::Infinity>();
        census.solutions.push_back(std::move(sol));
    }
    const auto count = census.solutions.size();
    if (count != 1 && count != 3)
        census.warnings.push_back("found " + std::to_string(count) + " steady states; expected 1 or 3");
    if (census.failed_cells > 0)
        census.warnings.push_back(std::to_string(census.failed_cells) + " census cells could not be evaluated");
    return census;
}

namespace {

// Potential difference ∫_a^b m1/m2 for choosing the deepest well.
double potential(double a, double b, double beta, const TypeReturns& ret) {
    auto g = [&](double x) {
        const auto j = jump_moments(x, beta, ret);
        return j.m1 / j.m2;
    };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 10, 1e-12);
}

DemandRatios point_mass_map(const ReducedParams& params, const MarketModel& model, DemandRatios d) {
    const auto t = trading_probs_from_ratios(d, model.validity());
    std::vector<double> f;
    for (const auto& type : params.types) {
        const auto set = single_agent_fixed_points(type.p_buy, params.beta, t, model, std::nullopt, 2000);
        const auto ret = type_returns(model, type.p_buy, t);
        double best_x = kNaN, best_phi = -INFINITY, ref = kNaN;
        for (const auto& p : set.points) {
            if (!p.stable) continue;
            const double x = p.location[0];
            if (std::isnan(ref)) ref = x;
            const double phi = potential(ref, x, params.beta, ret);
            if (phi > best_phi) {
                best_phi = phi;
                best_x = x;
            }
        }
        if (std::isnan(best_x)) throw std::runtime_error("no stable drift zero");
        f.push_back(choice_prob_market1(best_x, params.beta));
    }
    return demand_ratios_from_fractions(f, params.types);
}

}  // namespace

std::vector<DemandRatios> point_mass_census(const ReducedParams& params, const CensusOptions& options) {
    params.validate();
    const auto model = make_market_model(params.markets, params.bidask);
    auto residual = [&](const Eigen::VectorXd& u) {
        const auto g = point_mass_map(params, model, {std::exp(u[0]), std::exp(u[1])});
        Eigen::VectorXd out(2);
        out << std::log(g.d1) - u[0], std::log(g.d2) - u[1];
        return out;
    };
    const int n = std::max(3, options.grid_points / 4);
    const double span = options.span;
    std::vector<Eigen::VectorXd> roots;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd u0(2);
            u0 << -span + 2.0 * span * (i + 0.5) / n, -span + 2.0 * span * (j + 0.5) / n;
            detail::NewtonResult res;
            try {
                res = detail::newton_solve(residual, u0, 1e-11, 40,
                                           [&](const Eigen::VectorXd& u) { return u.cwiseAbs().maxCoeff() <= span + 0.5; });
            } catch (const std::exception&) {
                continue;
            }
            if (!res.converged) continue;
            const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Eigen::VectorXd& r) {
                return (r - res.x).lpNorm<Eigen::Infinity>() < 1e-6;
            });
            if (!seen) roots.push_back(res.x);
        }
    std::vector<DemandRatios> out;
    for (const auto& u : roots) out.push_back({std::exp(u[0]), std::exp(u[1])});
    std::sort(out.begin(), out.end(), [](const DemandRatios& a, const DemandRatios& b) { return a.d1 < b.d1; });
    return out;
}

PhaseBoundaries phase_boundaries(const ReducedParams& params, const std::vector<double>& r_grid,
                                 const std::vector<double>& beta_grid, const CensusOptions& options, int workers) {
    PhaseBoundaries out;
    const std::size_t nr = r_grid.size(), nb = beta_grid.size();
    out.cells.resize(nr * nb);
    parallel_for(nr * nb, workers, [&](std::size_t k) {
        auto p = params;
        p.r = r_grid[k / nb];
        p.beta = beta_grid[k % nb];
        const auto census = steady_state_census(p, options);
        auto& cell = out.cells[k];
        cell.r = p.r;
        cell.beta = p.beta;
        cell.n_solutions = static_cast<int>(census.solutions.size());
        cell.segregated = std::any_of(census.solutions.begin(), census.solutions.end(),
                                      [](const CensusSolution& s) { return s.cls != SolutionClass::U; });
    });
    auto cell = [&](std::size_t i, std::size_t j) -> const PhaseCell& { return out.cells[i * nb + j]; };

    std::vector<std::size_t> by_beta(nb);
    for (std::size_t j = 0; j < nb; ++j) by_beta[j] = j;
    std::sort(by_beta.begin(), by_beta.end(), [&](auto a, auto b) { return beta_grid[a] < beta_grid[b]; });
    std::vector<std::size_t> by_r(nr);
    for (std::size_t i = 0; i < nr; ++i) by_r[i] = i;
    std::sort(by_r.begin(), by_r.end(), [&](auto a, auto b) { return r_grid[a] < r_grid[b]; });

    for (std::size_t i : by_r) {
        double beta = kNaN;
        for (std::size_t j : by_beta)
            if (cell(i, j).segregated) {
                beta = beta_grid[j];
                break;
            }
        out.blue.emplace_back(r_grid[i], beta);
    }
    for (std::size_t j : by_beta) {
        double r = kNaN;
        for (std::size_t k = 0; k < nr; ++k) {
            if (cell(by_r[k], j).n_solutions != 3) continue;
            r = k + 1 < nr ? 0.5 * (r_grid[by_r[k]] + r_grid[by_r[k + 1]]) : r_grid[by_r[k]];
        }
        out.orange.emplace_back(beta_grid[j], r);
        if (!std::isnan(r)) out.orange_max_r = std::max(out.orange_max_r, r);
    }

    out.blue_r0_beta = beta_s_reduced(params).beta_s;
    out.orange_r0_beta = kNaN;
    for (std::size_t j : by_beta) {
        auto p = params;
        p.beta = beta_grid[j];
        const auto sols = point_mass_census(p, options);
        const auto off_diagonal = std::count_if(sols.begin(), sols.end(), [](const DemandRatios& d) {
            return std::abs(std::log(d.d1 * d.d2)) > 1e-6;
        });
        if (off_diagonal >= 2) {
            out.orange_r0_beta = beta_grid[j];
            break;
        }
    }
    return out;
}

NashSolution envy_free_nash(const MarketSpec& markets, const BidAskSpec& bidask) {
    const auto model = make_market_model(markets, bidask);
    const auto q = model.validity();
    const auto e = mean_scores(model);
    NashSolution best;
    double best_gap = INFINITY;
    for (int code = 0; code < 4; ++code) {
        NashSolution cand;
        std::array<double, kMarkets> market_return{};
        bool feasible = true;
        for (int m = 0; m < kMarkets; ++m) {
            const int b = index(make_action(m, true)), s = index(make_action(m, false));
            const bool buyers_min = (code >> m) & 1;
            cand.buyers_minority[m] = buyers_min;
            const int minority = buyers_min ? b : s, majority = buyers_min ? s : b;
            const double r_min = q[minority] * e[minority];
            const double r_full = q[majority] * e[majority];
            cand.t.t[minority] = 1.0;
            cand.t.t[majority] = r_full > 0.0 ? r_min / r_full : 1.0;
            if (cand.t.t[majority] > 1.0) feasible = false;
            market_return[m] = r_min;
        }
        if (!feasible) continue;
        cand.returns = model.returns(cand.t);
        cand.common_return = 0.5 * (market_return[0] + market_return[1]);
        const double gap = std::abs(market_return[0] - market_return[1]);
        cand.consistent = gap < 1e-8;
        if (gap < best_gap) {
            best_gap = gap;
            best = cand;
        }
    }
    return best;
}

double population_return(const ReducedParams& params, const SelfConsistentState& state) {
    const auto model = make_market_model(params.markets, params.bidask);
    double total = 0.0;
    for (std::size_t g = 0; g < params.types.size(); ++g) {
        const auto ret = type_returns(model, params.types[g].p_buy, state.t);
        const auto& d = state.densities[g];
        const double v = d.expect([&](double x) {
            const double p1 = choice_prob_market1(x, params.beta);
            return p1 * ret.e1[0] + (1.0 - p1) * ret.e1[1];
        });
        total += params.types[g].weight * v / d.integral();
    }
    return total;
}

double homogeneous_return(const ReducedParams& params, const HomogeneousState& state) {
    const auto model = make_market_model(params.markets, params.bidask);
    double total = 0.0;
    for (std::size_t g = 0; g < params.types.size(); ++g) {
        const auto ret = type_returns(model, params.types[g].p_buy, state.t);
        const double p1 = choice_prob_market1(state.delta[g], params.beta);
        total += params.types[g].weight * (p1 * ret.e1[0] + (1.0 - p1) * ret.e1[1]);
    }
    return total;
}

std::vector<ReturnPoint> return_curve(const ReducedParams& params, const std::vector<double>& beta_grid,
                                      const std::vector<double>& r_list, int workers) {
    const std::size_t nb = beta_grid.size();
    std::vector<double> baseline(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        auto p = params;
        p.beta = beta_grid[j];
        baseline[j] = homogeneous_return(p, homogeneous_state_r0(p));
    }
    std::vector<ReturnPoint> out(r_list.size() * nb);
    parallel_for(out.size(), workers, [&](std::size_t k) {
        auto p = params;
        p.r = r_list[k / nb];
        p.beta = beta_grid[k % nb];
        const auto state = solve_self_consistent(p);
        auto& row = out[k];
        row.r = p.r;
        row.beta = p.beta;
        row.converged = state.converged;
        row.mean_return = population_return(p, state);
        row.baseline = baseline[k % nb];
        row.cls = classify(state.densities, CensusOptions{}.w_min, CensusOptions{}.min_peak_mass);
    });
    return out;
}

}  // namespace dam
