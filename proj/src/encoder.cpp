#include "vpq/encoder.hpp"

#include <cmath>

namespace vpq {

StateWindow StateWindow::empty(int length) {
    if (length < 1) throw ContractError("StateWindow length must be >= 1");
    StateWindow w;
    w.ids_.assign(static_cast<std::size_t>(length), kPaddingId);
    return w;
}

StateWindow StateWindow::from_ids(std::vector<std::int32_t> ids) {
    if (ids.empty()) throw ContractError("StateWindow length must be >= 1");
    bool seen_item = false;
    for (std::int32_t id : ids) {
        if (id < 0) throw ContractError("StateWindow ids must be non-negative");
        if (id == kPaddingId) {
            if (seen_item) {
                throw ContractError("StateWindow padding must be a contiguous left prefix");
            }
        } else {
            seen_item = true;
        }
    }
    StateWindow w;
    w.ids_ = std::move(ids);
    return w;
}

int StateWindow::non_padding_count() const {
    int n = 0;
    for (std::int32_t id : ids_)
        if (id != kPaddingId) ++n;
    return n;
}

StateWindow push_item(const StateWindow& window, std::int32_t item) {
    if (item == kPaddingId) throw ContractError("push_item: padding id cannot be pushed");
    if (item < 0) throw ContractError("push_item: negative item id");
    std::vector<std::int32_t> ids(window.ids().begin(), window.ids().end());
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) ids[i] = ids[i + 1];
    ids.back() = item;
    StateWindow w = StateWindow::from_ids(std::move(ids));
    return w;
}

EmbeddingTable EmbeddingTable::zeros(int catalog, int dim) {
    if (catalog < 1 || dim < 1) throw ContractError("EmbeddingTable: catalog and dim must be >= 1");
    EmbeddingTable t;
    t.catalog = catalog;
    t.dim = dim;
    t.data.assign(static_cast<std::size_t>(catalog + 1) * dim, 0.0);
    return t;
}

EmbeddingTable EmbeddingTable::init(int catalog, int dim, Rng& rng) {
    EmbeddingTable t = zeros(catalog, dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::int32_t id = 1; id <= catalog; ++id) {
        for (double& x : t.row(id)) x = (2.0 * rng.uniform() - 1.0) * bound;
    }
    return t;
}

std::span<const double> EmbeddingTable::row(std::int32_t id) const {
    if (id < 0 || id > catalog) throw ContractError("EmbeddingTable: id out of range");
    return {data.data() + static_cast<std::size_t>(id) * dim, static_cast<std::size_t>(dim)};
}

std::span<double> EmbeddingTable::row(std::int32_t id) {
    if (id < 0 || id > catalog) throw ContractError("EmbeddingTable: id out of range");
    return {data.data() + static_cast<std::size_t>(id) * dim, static_cast<std::size_t>(dim)};
}

static Vec masked_mean(const StateWindow& window, const EmbeddingTable& table) {
    Vec mean(static_cast<std::size_t>(table.dim), 0.0);
    int count = 0;
    for (std::int32_t id : window.ids()) {
        if (id == kPaddingId) continue;
        auto r = table.row(id); // range-checks the id
        for (int j = 0; j < table.dim; ++j) mean[j] += r[j];
        ++count;
    }
    if (count > 0) {
        const double inv = 1.0 / count;
        for (double& x : mean) x *= inv;
    }
    return mean;
}

Vec encode(const StateWindow& window, const EmbeddingTable& table, const DenseNet& head) {
    if (head.input_dim() != table.dim) {
        throw ContractError("encode: head input dim does not match embedding dim");
    }
    return forward(head, masked_mean(window, table));
}

void encode_backward(const StateWindow& window, const EmbeddingTable& table,
                     const DenseNet& head, std::span<const double> feature_grad,
                     Vec& table_grad, GradientSet& head_grad) {
    if (table_grad.size() != table.data.size()) {
        throw ContractError("encode_backward: table_grad shape mismatch");
    }
    const Vec mean = masked_mean(window, table);
    Vec mean_grad;
    backward_accumulate(head, mean, feature_grad, head_grad, &mean_grad);
    const int count = window.non_padding_count();
    if (count == 0) return; // nothing below the head to update
    const double inv = 1.0 / count;
    for (std::int32_t id : window.ids()) {
        if (id == kPaddingId) continue;
        double* g = table_grad.data() + static_cast<std::size_t>(id) * table.dim;
        for (int j = 0; j < table.dim; ++j) g[j] += inv * mean_grad[j];
    }
}

} // namespace vpq
