#include "vpq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace vpq {

int rank_in_topk(const RecommendationList& list, std::int32_t item, int k) {
    const int limit = std::min<int>(k, static_cast<int>(list.size()));
    for (int i = 0; i < limit; ++i) {
        if (list[static_cast<std::size_t>(i)].item == item) return i + 1;
    }
    return 0;
}

namespace {

void check_metric_inputs(const std::vector<RecommendationList>& lists,
                         const std::vector<GroundTruth>& truths, int k) {
    if (k < 1) throw ConfigError("ranking metric: k must be >= 1");
    if (lists.size() != truths.size()) {
        throw ContractError("ranking metric: list/truth count mismatch");
    }
}

} // namespace

double hr_at_k(const std::vector<RecommendationList>& lists,
               const std::vector<GroundTruth>& truths, int k, EventType type) {
    check_metric_inputs(lists, truths, k);
    int events = 0, hits = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].event != type) continue;
        ++events;
        if (rank_in_topk(lists[i], truths[i].item, k) > 0) ++hits;
    }
    if (events == 0) throw ContractError("hr_at_k: no events of the requested type");
    return static_cast<double>(hits) / events;
}

double ndcg_at_k(const std::vector<RecommendationList>& lists,
                 const std::vector<GroundTruth>& truths, int k, EventType type) {
    check_metric_inputs(lists, truths, k);
    int events = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i].event != type) continue;
        ++events;
        const int rank = rank_in_topk(lists[i], truths[i].item, k);
        if (rank > 0) sum += 1.0 / std::log2(1.0 + rank);
    }
    if (events == 0) throw ContractError("ndcg_at_k: no events of the requested type");
    return sum / events;
}

MetricsReport evaluate_ranking(const std::vector<RecommendationList>& lists,
                               const std::vector<GroundTruth>& truths,
                               const std::vector<int>& k_list) {
    if (k_list.empty()) throw ConfigError("evaluate_ranking: empty k list");
    MetricsReport report;
    report.k_list = k_list;
    for (EventType type : {EventType::click, EventType::purchase}) {
        int events = 0;
        for (const GroundTruth& t : truths) {
            if (t.event == type) ++events;
        }
        if (events == 0) continue; // absent types carry no cells at all
        report.counts[type] = events;
        for (int k : k_list) {
            report.hr[{type, k}] = hr_at_k(lists, truths, k, type);
            report.ndcg[{type, k}] = ndcg_at_k(lists, truths, k, type);
        }
    }
    return report;
}

std::string MetricsReport::csv() const {
    std::ostringstream out;
    out << "metric,event_type,k,value,count\n";
    auto emit = [&](const char* name,
                    const std::map<std::pair<EventType, int>, double>& values) {
        for (const auto& [key, value] : values) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", value);
            out << name << ',' << event_name(key.first) << ',' << key.second << ','
                << buf << ',' << counts.at(key.first) << '\n';
        }
    };
    emit("hr", hr);
    emit("ndcg", ndcg);
    return out.str();
}

std::string MetricsReport::table() const {
    std::ostringstream out;
    for (EventType type : {EventType::click, EventType::purchase}) {
        const int count = counts.count(type) ? counts.at(type) : 0;
        out << event_name(type) << " events: " << count << '\n';
        if (count == 0) continue;
        for (int k : k_list) {
            char line[96];
            std::snprintf(line, sizeof(line), "  HR@%-3d %.4f   NDCG@%-3d %.4f\n", k,
                          hr.at({type, k}), k, ndcg.at({type, k}));
            out << line;
        }
    }
    return out.str();
}

} // namespace vpq
