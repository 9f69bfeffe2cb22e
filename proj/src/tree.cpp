#include "wrfml/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wrfml {

double stable_mean(std::span<const double> values) {
    if (values.empty())
        return 0.0;
    const double first = values.front();
    if (std::all_of(values.begin(), values.end(), [first](double v) { return v == first; }))
        return first;
    double sum = 0.0;
    for (double v : values)
        sum += v;
    return sum / static_cast<double>(values.size());
}

double RegressionTree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
    if (nodes.empty())
        return 0;
    std::vector<std::size_t> level(nodes.size(), 0);
    std::size_t deepest = 0;
    // Children always follow their parent in the array.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (!nodes[i].is_leaf()) {
            level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

namespace {

/// Presorted CART builder. Each feature keeps the node's samples ordered by
/// (value, row); `natural_` keeps them in sampling order for leaf sums.
/// Splitting stable-partitions every list, so sortedness survives without
/// re-sorting.
class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const double> y, std::span<const std::size_t> samples,
                const TreeParams& params, Rng& rng, const ColumnOrder& order)
        : x_(x), columns_(order.values), y_(y), params_(params), rng_(rng), goes_left_(x.rows(), 0) {
        const std::size_t p = x.cols();
        natural_.assign(samples.begin(), samples.end());
        // Expand the global order by each row's multiplicity in the sample.
        std::vector<std::uint32_t> count(x.rows(), 0);
        for (auto r : natural_)
            ++count[r];
        sorted_.resize(p);
        for (std::size_t f = 0; f < p; ++f) {
            auto& list = sorted_[f];
            list.reserve(natural_.size());
            for (auto r : order.by_column[f])
                for (std::uint32_t c = 0; c < count[r]; ++c)
                    list.push_back(r);
        }
        features_.resize(p);
        scratch_.resize(natural_.size());
    }

    RegressionTree build() {
        grow(0, natural_.size(), 0);
        return RegressionTree{std::move(nodes_)};
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    int make_leaf(double value) {
        nodes_.push_back(TreeNode{-1, 0.0, -1, -1, value});
        return static_cast<int>(nodes_.size() - 1);
    }

    int grow(std::size_t begin, std::size_t end, int depth) {
        const std::size_t n = end - begin;
        double lo = y_[natural_[begin]];
        double hi = lo;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double v = y_[natural_[i]];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        if (lo == hi)
            return make_leaf(lo);
        const double mean = sum / static_cast<double>(n);

        const bool depth_exhausted = params_.max_depth && depth >= *params_.max_depth;
        if (depth_exhausted || n < 2 * params_.min_samples_leaf)
            return make_leaf(mean);

        const auto split = best_split(begin, end, mean);
        if (split.feature < 0)
            return make_leaf(mean);

        const auto& column = columns_[static_cast<std::size_t>(split.feature)];
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = natural_[i];
            goes_left_[row] = column[row] <= split.threshold ? 1 : 0;
        }
        const std::size_t mid = partition(natural_, begin, end);
        for (auto& order : sorted_)
            partition(order, begin, end);

        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(TreeNode{split.feature, split.threshold, -1, -1, mean});
        const int left = grow(begin, mid, depth + 1);
        const int right = grow(mid, end, depth + 1);
        nodes_[static_cast<std::size_t>(self)].left = left;
        nodes_[static_cast<std::size_t>(self)].right = right;
        return self;
    }

    /// Stable partition of list[begin, end) by goes_left_; returns the split point.
    std::size_t partition(std::vector<std::size_t>& list, std::size_t begin, std::size_t end) {
        std::size_t write = begin;
        std::size_t spill = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto row = list[i];
            if (goes_left_[row])
                list[write++] = row;
            else
                scratch_[spill++] = row;
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
                  list.begin() + static_cast<std::ptrdiff_t>(write));
        return write;
    }

    std::span<const std::size_t> candidate_features() {
        const std::size_t p = x_.cols();
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        if (params_.max_features_fraction >= 1.0)
            return features_;
        auto m = static_cast<std::size_t>(std::ceil(params_.max_features_fraction * static_cast<double>(p)));
        m = std::clamp<std::size_t>(m, 1, p);
        for (std::size_t i = 0; i < m; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.below(p - i));
            std::swap(features_[i], features_[j]);
        }
        std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(m));
        return std::span<const std::size_t>(features_).first(m);
    }

    /// Maximizes the SSE reduction sL^2/nL + sR^2/nR on targets centered at
    /// the node mean (the parent term is then ~0 and drops out).
    Split best_split(std::size_t begin, std::size_t end, double mean) {
        const std::size_t n = end - begin;
        const std::size_t min_leaf = params_.min_samples_leaf;
        double total = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            total += y_[natural_[i]] - mean;
        const double parent = total * total / static_cast<double>(n);

        Split best;
        double best_score = parent;
        for (auto f : candidate_features()) {
            const auto& order = sorted_[f];
            const auto& column = columns_[f];
            double left_sum = 0.0;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                const auto row = order[i];
                left_sum += y_[row] - mean;
                const std::size_t n_left = i - begin + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf)
                    continue;
                if (n_right < min_leaf)
                    break;
                const double here = column[row];
                const double next = column[order[i + 1]];
                if (!(here < next))
                    continue;
                const double right_sum = total - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(n_left) +
                                     right_sum * right_sum / static_cast<double>(n_right);
                if (score > best_score) {
                    best_score = score;
                    double threshold = here * 0.5 + next * 0.5;
                    if (!(threshold < next))
                        threshold = here;
                    best = Split{static_cast<int>(f), threshold, score - parent};
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    const std::vector<std::vector<double>>& columns_;
    std::span<const double> y_;
    TreeParams params_;
    Rng& rng_;
    std::vector<std::size_t> natural_;
    std::vector<std::vector<std::size_t>> sorted_;
    std::vector<char> goes_left_;
    std::vector<std::size_t> scratch_;
    std::vector<std::size_t> features_;
    std::vector<TreeNode> nodes_;
};

} // namespace

ColumnOrder ColumnOrder::of(const Matrix& x) {
    ColumnOrder out;
    out.by_column.resize(x.cols());
    out.values.assign(x.cols(), std::vector<double>(x.rows()));
    for (std::size_t f = 0; f < x.cols(); ++f) {
        for (std::size_t r = 0; r < x.rows(); ++r)
            out.values[f][r] = x(r, f);
        std::vector<std::pair<double, std::size_t>> keyed(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r)
            keyed[r] = {x(r, f), r};
        std::sort(keyed.begin(), keyed.end());
        auto& order = out.by_column[f];
        order.resize(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r)
            order[r] = keyed[r].second;
    }
    return out;
}

RegressionTree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> samples,
                        const TreeParams& params, Rng& rng, const ColumnOrder& order) {
    TreeBuilder builder(x, y, samples, params, rng, order);
    return builder.build();
}

RegressionTree fit_tree(const Matrix& x, std::span<const double> y, std::span<const std::size_t> samples,
                        const TreeParams& params, Rng& rng) {
    return fit_tree(x, y, samples, params, rng, ColumnOrder::of(x));
}

} // namespace wrfml
