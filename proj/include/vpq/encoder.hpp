#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vpq/net.hpp"

namespace vpq {

// Item ids are dense: 0 is the reserved padding id, real items are 1..catalog.
constexpr std::int32_t kPaddingId = 0;

// Fixed-length window of the user's most recent items, padding kept as a
// contiguous left prefix. The window length is a per-run constant (10 for the
// session pipeline, 2 for the micro environment).
class StateWindow {
public:
    static StateWindow empty(int length);
    // Validates length >= 1, ids >= 0, and the contiguous-left-padding rule.
    static StateWindow from_ids(std::vector<std::int32_t> ids);

    int length() const { return static_cast<int>(ids_.size()); }
    std::span<const std::int32_t> ids() const { return ids_; }
    std::int32_t at(int i) const { return ids_[static_cast<std::size_t>(i)]; }
    int non_padding_count() const;

    bool operator==(const StateWindow& other) const { return ids_ == other.ids_; }

private:
    std::vector<std::int32_t> ids_;
};

// Left-shifts the window and appends `item` on the right. Pushing the padding
// id is a contract violation.
StateWindow push_item(const StateWindow& window, std::int32_t item);

// catalog+1 rows of d_embed entries; row 0 belongs to the padding id and is
// pinned to zero (it receives no gradient either).
struct EmbeddingTable {
    int catalog = 0;
    int dim = 0;
    Vec data; // (catalog+1) x dim, row-major

    static EmbeddingTable zeros(int catalog, int dim);
    // Rows 1..catalog uniform in +-1/sqrt(dim); row 0 stays zero.
    static EmbeddingTable init(int catalog, int dim, Rng& rng);

    std::span<const double> row(std::int32_t id) const;
    std::span<double> row(std::int32_t id);
};

// Masked mean of the window's non-padding embeddings fed through the head
// net. An all-padding window contributes the zero vector.
Vec encode(const StateWindow& window, const EmbeddingTable& table, const DenseNet& head);

// Chain rule of encode: accumulates the head-net gradient into `head_grad`
// and the per-row table gradient (scaled by 1/non_padding_count) into
// `table_grad`, which must be shaped like table.data. The padding row never
// receives gradient.
void encode_backward(const StateWindow& window, const EmbeddingTable& table,
                     const DenseNet& head, std::span<const double> feature_grad,
                     Vec& table_grad, GradientSet& head_grad);

} // namespace vpq
