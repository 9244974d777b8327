#pragma once

// Published CIFAR trade-off measurements, (target accuracy %, adversary
// accuracy %) or (target accuracy %, adversary entropy nats).

#include <string>
#include <vector>

#include "arl/eval.hpp"

namespace arl::testing {

struct PublishedSet {
    std::string name;
    eval::ObjectivePair pair;
    int m;
    std::vector<std::pair<double, double>> points;
    /// input positions that a tie on one axis makes dominated
    std::vector<std::size_t> tie_dominated;
};

inline std::vector<PublishedSet> published_sets()
{
    using eval::ObjectivePair;
    return {
        {"cifar10_accuracy_none", ObjectivePair::accuracy, 10, {{97.75, 23.44}, {97.73, 23.09}, {97.68, 22.68}}, {}},
        {"cifar10_accuracy_ml", ObjectivePair::accuracy, 10,
         {{97.52, 20.83}, {97.44, 20.77}, {97.35, 20.64}, {91.52, 19.68}, {91.15, 14.27}, {60.00, 10.00}}, {}},
        {"cifar10_accuracy_maxent", ObjectivePair::accuracy, 10,
         {{97.78, 23.44}, {97.74, 22.91}, {97.53, 21.17}, {96.79, 21.14}, {95.01, 19.05}, {92.34, 12.00}, {61.17, 10.64}},
         {}},
        {"cifar10_entropy_none", ObjectivePair::entropy, 10, {{97.75, 1.65}, {97.73, 1.65}, {97.71, 1.67}}, {1}},
        {"cifar10_entropy_ml", ObjectivePair::entropy, 10,
         {{97.52, 1.65}, {97.50, 1.66}, {96.58, 1.80}, {95.97, 2.16}, {60.00, 2.30}}, {}},
        {"cifar10_entropy_maxent", ObjectivePair::entropy, 10,
         {{97.78, 1.65}, {97.74, 1.66}, {97.58, 1.78}, {97.53, 2.11}, {97.14, 2.26}, {96.79, 2.26}, {95.76, 2.27},
          {92.34, 2.27}, {61.17, 2.29}},
         {5, 7}},
        {"cifar100_accuracy_none", ObjectivePair::accuracy, 100, {{71.99, 30.69}, {71.56, 30.59}}, {}},
        {"cifar100_accuracy_ml", ObjectivePair::accuracy, 100,
         {{71.32, 15.43}, {70.52, 15.09}, {70.43, 14.84}, {69.98, 14.60}, {69.42, 14.41}, {24.66, 6.81}, {22.22, 6.72},
          {5.00, 1.00}},
         {}},
        {"cifar100_accuracy_maxent", ObjectivePair::accuracy, 100,
         {{71.17, 16.88}, {70.80, 16.60}, {70.50, 16.43}, {67.63, 13.23}, {63.81, 8.38}, {61.98, 5.02}, {60.03, 3.80},
          {59.11, 2.81}, {5.37, 1.23}, {5.00, 1.00}},
         {}},
        {"cifar100_entropy_none", ObjectivePair::entropy, 100, {{71.99, 2.09}}, {}},
        {"cifar100_entropy_ml", ObjectivePair::entropy, 100,
         {{71.32, 2.50}, {64.90, 2.51}, {56.99, 2.68}, {54.46, 2.88}, {24.66, 3.77}, {22.22, 3.88}, {5.00, 4.60}}, {}},
        {"cifar100_entropy_maxent", ObjectivePair::entropy, 100,
         {{71.17, 2.27}, {71.05, 2.28}, {70.80, 2.31}, {67.63, 2.91}, {67.38, 3.01}, {65.71, 3.24}, {63.81, 4.14},
          {61.98, 4.56}, {59.11, 4.57}, {56.32, 4.57}, {5.37, 4.59}, {5.00, 4.60}},
         {9}},
    };
}

inline std::vector<eval::TradeoffPoint> as_tradeoff(const PublishedSet& s)
{
    std::vector<eval::TradeoffPoint> out;
    for (auto [a, b] : s.points) {
        eval::TradeoffPoint p;
        p.target_acc = a;
        if (s.pair == eval::ObjectivePair::accuracy) p.adv_acc = b;
        else p.adv_entropy = b;
        out.push_back(p);
    }
    return out;
}

/// Normalized points flipped so both axes are "larger is better".
inline std::vector<std::pair<double, double>> oriented_unit(const PublishedSet& s)
{
    std::vector<std::pair<double, double>> out;
    for (const auto& q : eval::normalize(as_tradeoff(s), s.pair, s.m)) {
        out.emplace_back(q.x, s.pair == eval::ObjectivePair::accuracy ? 1.0 - q.y : q.y);
    }
    return out;
}

} // namespace arl::testing
