// meanfield.hpp - large-N clearing price, order validity, truncated score
// moments and trading probabilities for two Gaussian double-auction markets.
#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace dam {

inline constexpr int kMarkets = 2;
inline constexpr int kActions = 4;

// Buy/sell at market 1/2. The order is also the storage order of every
// per-action array in the library.
enum class Action : int { B1 = 0, S1 = 1, B2 = 2, S2 = 3 };

inline constexpr std::array<Action, kActions> kAllActions{Action::B1, Action::S1, Action::B2,
                                                           Action::S2};

constexpr int index(Action a) { return static_cast<int>(a); }
constexpr int market_of(Action a) { return index(a) / 2; }  // 0-based
constexpr bool is_buy(Action a) { return index(a) % 2 == 0; }
constexpr Action make_action(int market, bool buy) {
    return static_cast<Action>(2 * market + (buy ? 0 : 1));
}
std::string_view action_name(Action a);

template <class T>
using PerAction = std::array<T, kActions>;

struct BidAskSpec {
    double mu_ask = 9.5;
    double sigma_ask = 1.0;
    double mu_bid = 10.5;
    double sigma_bid = 1.0;

    // Only the positivity of the spreads is required; mu_bid < mu_ask is legal.
    void validate() const;
};

struct MarketSpec {
    std::array<double, kMarkets> theta{-0.2, 0.2};

    void validate() const;
};

struct ScoreMoments {
    double z = 0.0;
    double q_valid = 0.0;
    double mean_given_trade = 0.0;
    double second_moment_given_trade = 0.0;
};

struct TradingProbs {
    PerAction<double> t{1.0, 1.0, 1.0, 1.0};

    double operator[](Action a) const { return t[index(a)]; }
    double& operator[](Action a) { return t[index(a)]; }
};

struct DemandRatios {
    double d1 = 1.0;
    double d2 = 1.0;

    double operator[](int market) const { return market == 0 ? d1 : d2; }
};

double normal_pdf(double z);
// Standard normal CDF through erfc, accurate in both tails.
double normal_cdf(double z);

// market_index is 1 or 2.
double clearing_price_largeN(int market_index, const MarketSpec& markets, const BidAskSpec& bidask);

double validity_prob(Action action, double price, const BidAskSpec& bidask);

// Zero-truncated Gaussian moments of the score margin for one action.
// Actions whose validity falls below 1e-12 get all-zero moments.
ScoreMoments score_moments(Action action, double price, const BidAskSpec& bidask);

// T from pre-validation buy/sell ratios D_m and per-action validity Q.
// Throws std::invalid_argument unless both ratios are positive and finite.
TradingProbs trading_probs_from_ratios(DemandRatios d, const PerAction<double>& q);

// T from expected valid-order counts per action (min/majority rule). An
// empty side leaves both sides of that market at zero.
TradingProbs trading_probs_from_counts(const PerAction<double>& valid_counts);

// Unconditional per-period expected score Q*T*E[S | trade].
double action_return(const ScoreMoments& moments, double trading_prob);
double action_second_moment(const ScoreMoments& moments, double trading_prob);

// Prices and moments for all four actions, computed once per parameter set.
struct MarketModel {
    MarketSpec markets;
    BidAskSpec bidask;
    std::array<double, kMarkets> price{};
    PerAction<ScoreMoments> moments{};

    PerAction<double> validity() const;
    // R_gamma = Q T mean, for every action.
    PerAction<double> returns(const TradingProbs& t) const;
    PerAction<double> second_moments(const TradingProbs& t) const;
};

MarketModel make_market_model(const MarketSpec& markets, const BidAskSpec& bidask);

}  // namespace dam
