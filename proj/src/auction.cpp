#include "dam/auction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dam {

double ClearingResult::score_of(int agent_id) const {
    for (std::size_t i = 0; i < agent_ids.size(); ++i)
        if (agent_ids[i] == agent_id) return scores[i];
    return 0.0;
}

void ClearingResult::clear() {
    price.reset();
    valid_buy_ids.clear();
    valid_sell_ids.clear();
    matches.clear();
    scores.clear();
    agent_ids.clear();
}

namespace {

// Moves a uniformly random k-subset of `pool` to its front.
void partial_shuffle(std::vector<int>& pool, std::size_t k, Rng& rng) {
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
}

}  // namespace

std::vector<std::pair<int, int>> match_orders(std::span<const int> valid_buyers,
                                              std::span<const int> valid_sellers, Rng& rng) {
    std::vector<std::pair<int, int>> pairs;
    const std::size_t k = std::min(valid_buyers.size(), valid_sellers.size());
    if (k == 0) return pairs;
    pairs.reserve(k);
    if (valid_buyers.size() >= valid_sellers.size()) {
        std::vector<int> pool(valid_buyers.begin(), valid_buyers.end());
        partial_shuffle(pool, k, rng);
        for (std::size_t i = 0; i < k; ++i) pairs.emplace_back(pool[i], valid_sellers[i]);
    } else {
        std::vector<int> pool(valid_sellers.begin(), valid_sellers.end());
        partial_shuffle(pool, k, rng);
        for (std::size_t i = 0; i < k; ++i) pairs.emplace_back(valid_buyers[i], pool[i]);
    }
    return pairs;
}

void clear_market_into(std::span<const Order> orders, double theta, Rng& rng, ClearingResult& out) {
    out.clear();
    out.scores.assign(orders.size(), 0.0);
    out.agent_ids.reserve(orders.size());

    double bid_sum = 0.0, ask_sum = 0.0;
    std::size_t n_bids = 0, n_asks = 0;
    for (const Order& o : orders) {
        if (!std::isfinite(o.price)) throw std::invalid_argument("order price must be finite");
        out.agent_ids.push_back(o.agent_id);
        if (o.side == Side::buy) {
            bid_sum += o.price;
            ++n_bids;
        } else {
            ask_sum += o.price;
            ++n_asks;
        }
    }
    if (n_bids == 0 || n_asks == 0) return;

    const double mean_bid = bid_sum / static_cast<double>(n_bids);
    const double mean_ask = ask_sum / static_cast<double>(n_asks);
    const double price = 0.5 * (mean_bid + mean_ask) + theta * (mean_bid - mean_ask);
    out.price = price;

    // Indices into `orders`; mapped to agent ids only for the public lists.
    std::vector<int> buy_idx, sell_idx;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const Order& o = orders[i];
        if (o.side == Side::buy && o.price >= price) {
            buy_idx.push_back(static_cast<int>(i));
        } else if (o.side == Side::sell && o.price <= price) {
            sell_idx.push_back(static_cast<int>(i));
        }
    }
    for (int i : buy_idx) out.valid_buy_ids.push_back(orders[i].agent_id);
    for (int i : sell_idx) out.valid_sell_ids.push_back(orders[i].agent_id);

    const auto pairs = match_orders(buy_idx, sell_idx, rng);
    out.matches.reserve(pairs.size());
    for (const auto& [b, s] : pairs) {
        out.scores[b] = orders[b].price - price;
        out.scores[s] = price - orders[s].price;
        out.matches.emplace_back(orders[b].agent_id, orders[s].agent_id);
    }
}

ClearingResult clear_market(std::span<const Order> orders, double theta, Rng& rng) {
    ClearingResult out;
    clear_market_into(orders, theta, rng, out);
    return out;
}

}  // namespace dam
