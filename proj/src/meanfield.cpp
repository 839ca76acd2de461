#include "dam/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dam {

namespace {
constexpr double kMinValidity = 1e-12;
constexpr double kCdfFloor = 1e-300;
}  // namespace

std::string_view action_name(Action a) {
    switch (a) {
        case Action::B1: return "B1";
        case Action::S1: return "S1";
        case Action::B2: return "B2";
        case Action::S2: return "S2";
    }
    return "?";
}

void BidAskSpec::validate() const {
    if (!(sigma_ask > 0.0) || !std::isfinite(sigma_ask))
        throw std::invalid_argument("bidask.sigma_ask must be positive");
    if (!(sigma_bid > 0.0) || !std::isfinite(sigma_bid))
        throw std::invalid_argument("bidask.sigma_bid must be positive");
    if (!std::isfinite(mu_ask)) throw std::invalid_argument("bidask.mu_ask must be finite");
    if (!std::isfinite(mu_bid)) throw std::invalid_argument("bidask.mu_bid must be finite");
}

void MarketSpec::validate() const {
    for (std::size_t m = 0; m < theta.size(); ++m) {
        if (!(std::abs(theta[m]) <= 0.5))
            throw std::invalid_argument("markets.theta[" + std::to_string(m) +
                                        "] must lie in [-0.5, 0.5]");
    }
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double clearing_price_largeN(int market_index, const MarketSpec& markets, const BidAskSpec& bidask) {
    if (market_index < 1 || market_index > kMarkets)
        throw std::out_of_range("market_index must be 1 or 2");
    const double mid = 0.5 * (bidask.mu_ask + bidask.mu_bid);
    return mid + markets.theta[market_index - 1] * (bidask.mu_bid - bidask.mu_ask);
}

namespace {
struct Margin {
    double margin;
    double sigma;
};

Margin margin_of(Action action, double price, const BidAskSpec& bidask) {
    if (is_buy(action)) return {bidask.mu_bid - price, bidask.sigma_bid};
    return {price - bidask.mu_ask, bidask.sigma_ask};
}
}  // namespace

double validity_prob(Action action, double price, const BidAskSpec& bidask) {
    const auto [m, s] = margin_of(action, price, bidask);
    return normal_cdf(m / s);
}

ScoreMoments score_moments(Action action, double price, const BidAskSpec& bidask) {
    const auto [m, s] = margin_of(action, price, bidask);
    ScoreMoments out;
    out.z = m / s;
    out.q_valid = normal_cdf(out.z);
    if (out.q_valid < kMinValidity) {
        out.q_valid = 0.0;
        return out;
    }
    // Inverse Mills ratio phi/Phi; the floor only matters for z well below -8.
    const double mills = normal_pdf(out.z) / std::max(out.q_valid, kCdfFloor);
    out.mean_given_trade = m + s * mills;
    out.second_moment_given_trade = m * m + s * s + m * s * mills;
    return out;
}

TradingProbs trading_probs_from_ratios(DemandRatios d, const PerAction<double>& q) {
    if (!(d.d1 > 0.0) || !(d.d2 > 0.0) || !std::isfinite(d.d1) || !std::isfinite(d.d2))
        throw std::invalid_argument("demand ratios must be positive and finite");
    // Valid flows per unit sell order: buy side Q_B * D, sell side Q_S.
    PerAction<double> flow{};
    for (int m = 0; m < kMarkets; ++m) {
        flow[index(make_action(m, true))] = q[index(make_action(m, true))] * d[m];
        flow[index(make_action(m, false))] = q[index(make_action(m, false))];
    }
    return trading_probs_from_counts(flow);
}

TradingProbs trading_probs_from_counts(const PerAction<double>& valid_counts) {
    TradingProbs out;
    for (int m = 0; m < kMarkets; ++m) {
        const Action buy = make_action(m, true);
        const Action sell = make_action(m, false);
        const double nb = valid_counts[index(buy)];
        const double ns = valid_counts[index(sell)];
        if (!(nb > 0.0) || !(ns > 0.0)) {
            out[buy] = 0.0;
            out[sell] = 0.0;
            continue;
        }
        const double rho = nb / ns;
        out[buy] = std::min(1.0, 1.0 / rho);
        out[sell] = std::min(1.0, rho);
    }
    return out;
}

double action_return(const ScoreMoments& moments, double trading_prob) {
    return moments.q_valid * trading_prob * moments.mean_given_trade;
}

double action_second_moment(const ScoreMoments& moments, double trading_prob) {
    return moments.q_valid * trading_prob * moments.second_moment_given_trade;
}

PerAction<double> MarketModel::validity() const {
    PerAction<double> q{};
    for (Action a : kAllActions) q[index(a)] = moments[index(a)].q_valid;
    return q;
}

PerAction<double> MarketModel::returns(const TradingProbs& t) const {
    PerAction<double> r{};
    for (Action a : kAllActions) r[index(a)] = action_return(moments[index(a)], t[a]);
    return r;
}

PerAction<double> MarketModel::second_moments(const TradingProbs& t) const {
    PerAction<double> r{};
    for (Action a : kAllActions) r[index(a)] = action_second_moment(moments[index(a)], t[a]);
    return r;
}

MarketModel make_market_model(const MarketSpec& markets, const BidAskSpec& bidask) {
    markets.validate();
    bidask.validate();
    MarketModel model;
    model.markets = markets;
    model.bidask = bidask;
    for (int m = 0; m < kMarkets; ++m) model.price[m] = clearing_price_largeN(m + 1, markets, bidask);
    for (Action a : kAllActions)
        model.moments[index(a)] = score_moments(a, model.price[market_of(a)], bidask);
    return model;
}

}  // namespace dam
