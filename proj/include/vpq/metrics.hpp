#pragma once

#include <map>
#include <string>
#include <vector>

#include "vpq/critic.hpp"
#include "vpq/data.hpp"

namespace vpq {

// One held-out event: the item the user actually took and how they took it.
struct GroundTruth {
    std::int32_t item = 0;
    EventType event = EventType::skip;
};

// 1-indexed rank of `item` in the list, 0 when absent from the top-k prefix.
int rank_in_topk(const RecommendationList& list, std::int32_t item, int k);

// Fraction of events of the given type whose true item appears in the top-k.
// Requires at least one event of that type.
double hr_at_k(const std::vector<RecommendationList>& lists,
               const std::vector<GroundTruth>& truths, int k, EventType type);

// Mean over events of 1/log2(1 + rank) when the true item lands at rank <= k,
// else 0. With a single relevant item the ideal DCG is 1, so this is already
// normalized.
double ndcg_at_k(const std::vector<RecommendationList>& lists,
                 const std::vector<GroundTruth>& truths, int k, EventType type);

// HR/NDCG per event type per cutoff. Event types with zero evaluated events
// carry no cells at all (absent, never reported as 0).
struct MetricsReport {
    std::vector<int> k_list;
    std::map<EventType, int> counts; // clicks/purchases evaluated
    std::map<std::pair<EventType, int>, double> hr;
    std::map<std::pair<EventType, int>, double> ndcg;

    std::string csv() const;   // metric,event_type,k,value,count
    std::string table() const; // aligned human-readable summary
};

// Ranking metrics over click and purchase events; skips never enter.
MetricsReport evaluate_ranking(const std::vector<RecommendationList>& lists,
                               const std::vector<GroundTruth>& truths,
                               const std::vector<int>& k_list);

} // namespace vpq
