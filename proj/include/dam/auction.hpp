// auction.hpp - single-period uniform-price clearing of one market.
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dam/random.hpp"

namespace dam {

enum class Side { buy, sell };

struct Order {
    int agent_id = 0;
    Side side = Side::buy;
    double price = 0.0;  // bid for buyers, ask for sellers
};

struct ClearingResult {
    std::optional<double> price;
    std::vector<int> valid_buy_ids;
    std::vector<int> valid_sell_ids;
    std::vector<std::pair<int, int>> matches;  // (buyer_id, seller_id)
    // scores[i] belongs to orders[i] of the cleared batch.
    std::vector<double> scores;
    std::vector<int> agent_ids;

    // Score of an agent in this batch; 0 when the agent did not submit.
    double score_of(int agent_id) const;
    void clear();
};

// Pairs the minority side completely with a uniformly random subset of the
// majority side (partial Fisher-Yates). Pairs are (buyer, seller).
std::vector<std::pair<int, int>> match_orders(std::span<const int> valid_buyers,
                                              std::span<const int> valid_sellers, Rng& rng);

// Price from this period's sample means: (<b>+<a>)/2 + theta(<b>-<a>).
// With no bids or no asks the market does not open and every score is 0.
ClearingResult clear_market(std::span<const Order> orders, double theta, Rng& rng);

// Same as clear_market, reusing the buffers of `out`.
void clear_market_into(std::span<const Order> orders, double theta, Rng& rng, ClearingResult& out);

}  // namespace dam
