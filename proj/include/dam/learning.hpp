// learning.hpp - softmax action choice and attraction reinforcement.
#pragma once

#include <array>

#include "dam/meanfield.hpp"

namespace dam {

struct LearningParams {
    double beta = 1.0;   // intensity of choice
    double r = 0.1;      // forgetting rate
    double alpha = 1.0;  // forgetting factor applied to unplayed actions

    void validate() const;
};

using AttractionVector = PerAction<double>;

// exp(beta A_g) / sum exp(beta A_d) with the maximum subtracted first.
PerAction<double> choice_probs(const AttractionVector& a, double beta);

// Played action: (1-r)A + rS. Unplayed: (1-alpha r)A.
AttractionVector update_attractions(const AttractionVector& a, Action chosen, double score,
                                    const LearningParams& p);

// Logistic probability of picking market 1 given Delta = A1 - A2.
double choice_prob_market1(double delta, double beta);

// Reduced-model state of one agent.
struct ReducedState {
    double delta = 0.0;
    int type_id = 0;  // 0-based index into the population type mix
};

// Delta update at alpha = 1: (1-r)Delta +/- rS for market 1 / market 2.
double update_delta(double delta, int market, double score, double r);

}  // namespace dam
