#pragma once

// One-step minus/plus synthesis for m-user binary-input MACs, output-alphabet
// merging, and drivers for walking or sampling the polarization tree.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "macpolar/mac.hpp"

namespace macpolar {

enum class TransformSign : std::uint8_t { minus, plus };

/// Sequence of transform signs applied to a root channel, first entry first.
using PolarPath = std::vector<TransformSign>;

inline std::string path_to_string(const PolarPath& path) {
    std::string s;
    s.reserve(path.size());
    for (TransformSign b : path) s.push_back(b == TransformSign::minus ? '-' : '+');
    return s;
}

inline PolarPath parse_path(const std::string& s) {
    PolarPath path;
    path.reserve(s.size());
    for (char c : s) {
        if (c == '-') path.push_back(TransformSign::minus);
        else if (c == '+') path.push_back(TransformSign::plus);
        else throw std::invalid_argument("path characters must be '-' or '+'");
    }
    return path;
}

/// Synthesized output alphabets grow as |Y|^2 * 2^m per step; merging keeps
/// them bounded. Exact mode merges only outputs whose posteriors over the
/// input vector agree within 1e-12 (which preserves every I[J]); lossy mode
/// additionally merges outputs within `tolerance` in L1 posterior distance
/// and enforces `max_alphabet` by raising the tolerance until the alphabet
/// fits. Exact mode raises CapacityError instead of exceeding the cap.
struct MergePolicy {
    enum class Mode { exact, lossy };
    Mode mode = Mode::exact;
    double tolerance = 0.0;
    std::size_t max_alphabet = std::size_t{1} << 16;
};

struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline constexpr double kExactMergeTol = 1e-12;

/// Accumulates raw output columns (likelihood per input vector) and merges
/// the ones with matching posteriors. Buckets are keyed by the posterior
/// quantized at 1e-12 and verified exactly, so float noise cannot cause a
/// false merge.
class OutputMerger {
  public:
    explicit OutputMerger(int m) : dim_(std::size_t{1} << m) {}

    void add(const std::vector<double>& col) {
        double total = 0.0;
        for (double v : col) total += v;
        if (total <= 0.0) return;  // output symbol never occurs

        std::vector<double> post(dim_);
        for (std::size_t i = 0; i < dim_; ++i) post[i] = col[i] / total;

        const std::uint64_t h = hash_posterior(post);
        auto [it, inserted] = buckets_.try_emplace(h);
        for (std::size_t idx : it->second) {
            if (linf(post, posteriors_[idx]) <= kExactMergeTol) {
                for (std::size_t i = 0; i < dim_; ++i) columns_[idx][i] += col[i];
                weights_[idx] += total;
                return;
            }
        }
        it->second.push_back(columns_.size());
        columns_.push_back(col);
        posteriors_.push_back(std::move(post));
        weights_.push_back(total);
    }

    /// Applies the lossy policy if requested and assembles the merged MAC.
    /// `loss_bound` (optional) receives the exact drop in I[E_m] caused by
    /// lossy merging; exact merging contributes zero.
    Mac finish(int m, const MergePolicy& policy, double* loss_bound = nullptr) {
        double loss = 0.0;
        if (policy.mode == MergePolicy::Mode::lossy && policy.tolerance > 0.0)
            loss += lossy_pass(policy.tolerance);
        if (columns_.size() > policy.max_alphabet) {
            if (policy.mode == MergePolicy::Mode::exact)
                throw CapacityError("merged output alphabet " + std::to_string(columns_.size()) +
                                    " exceeds cap " + std::to_string(policy.max_alphabet) +
                                    " in exact mode");
            double tol = policy.tolerance > 0.0 ? policy.tolerance : 1e-12;
            while (columns_.size() > policy.max_alphabet) {
                tol *= 2.0;
                loss += lossy_pass(tol);
                if (tol > 4.0) break;  // L1 distance of posteriors is at most 2
            }
        }
        if (loss_bound) *loss_bound = loss;

        const std::size_t ny = columns_.size();
        std::vector<double> table(dim_ * ny, 0.0);
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t x = 0; x < dim_; ++x) table[x * ny + y] = columns_[y][x];
        // Rows sum to 1 exactly in exact arithmetic; strip accumulated float
        // drift so the result satisfies the Mac row-sum invariant.
        for (std::size_t x = 0; x < dim_; ++x) {
            double sum = 0.0;
            for (std::size_t y = 0; y < ny; ++y) sum += table[x * ny + y];
            if (sum > 0.0)
                for (std::size_t y = 0; y < ny; ++y) table[x * ny + y] /= sum;
        }
        return Mac(m, static_cast<int>(ny), std::move(table), m);
    }

    std::size_t size() const { return columns_.size(); }

  private:
    static double linf(const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
        return d;
    }

    static double l1(const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
        return d;
    }

    static std::uint64_t hash_posterior(const std::vector<double>& post) {
        std::uint64_t h = 1469598103934665603ull;
        for (double v : post) {
            const auto q = static_cast<std::uint64_t>(std::llround(v * 1e12));
            h = (h ^ q) * 1099511628211ull;
        }
        return h;
    }

    /// One greedy pass: sort groups by posterior and fold neighbours whose L1
    /// distance to the running group posterior is within tol. Returns the
    /// exact increase of H(X|Y) caused by the merges, i.e. the sum-rate loss.
    double lossy_pass(double tol) {
        const std::size_t ny = columns_.size();
        if (ny <= 1) return 0.0;
        std::vector<std::size_t> order(ny);
        for (std::size_t i = 0; i < ny; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return posteriors_[a] < posteriors_[b];
        });

        std::vector<std::vector<double>> new_cols, new_posts;
        std::vector<double> new_weights;
        double loss = 0.0;
        for (std::size_t k = 0; k < ny; ++k) {
            const std::size_t idx = order[k];
            if (!new_cols.empty() && l1(posteriors_[idx], new_posts.back()) <= tol) {
                auto& col = new_cols.back();
                const double w_old = new_weights.back();
                const double w_add = weights_[idx];
                const double h_old = entropy_bits(new_posts.back());
                const double h_add = entropy_bits(posteriors_[idx]);
                for (std::size_t i = 0; i < dim_; ++i) col[i] += columns_[idx][i];
                const double w = w_old + w_add;
                auto& post = new_posts.back();
                double total = 0.0;
                for (double v : col) total += v;
                for (std::size_t i = 0; i < dim_; ++i) post[i] = col[i] / total;
                new_weights.back() = w;
                loss += w / weight_norm() * entropy_bits(post) -
                        w_old / weight_norm() * h_old - w_add / weight_norm() * h_add;
            } else {
                new_cols.push_back(columns_[idx]);
                new_posts.push_back(posteriors_[idx]);
                new_weights.push_back(weights_[idx]);
            }
        }
        columns_ = std::move(new_cols);
        posteriors_ = std::move(new_posts);
        weights_ = std::move(new_weights);
        rebuild_buckets();
        return loss;
    }

    double weight_norm() const { return static_cast<double>(dim_); }

    void rebuild_buckets() {
        buckets_.clear();
        for (std::size_t i = 0; i < posteriors_.size(); ++i)
            buckets_[hash_posterior(posteriors_[i])].push_back(i);
    }

    std::size_t dim_;
    std::vector<std::vector<double>> columns_;     // raw likelihood columns
    std::vector<std::vector<double>> posteriors_;  // normalized columns
    std::vector<double> weights_;                  // column mass (2^m * P(y))
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

inline constexpr std::size_t kMaxSynthColumns = std::size_t{1} << 26;

}  // namespace detail

/// P^-(y1,y2 | u1) = sum_{u2} 2^-m P(y1 | u1+u2) P(y2 | u2), merged per policy.
inline Mac minus_transform(const Mac& mac, const MergePolicy& policy = {}) {
    const int m = mac.users();
    const std::size_t q = mac.input_count();
    const std::size_t ny = static_cast<std::size_t>(mac.output_count());
    if (ny * ny > detail::kMaxSynthColumns)
        throw CapacityError("pre-merge alphabet |Y|^2 too large for minus transform");
    const double w = 1.0 / static_cast<double>(q);
    detail::OutputMerger merger(m);
    std::vector<double> col(q);
    for (std::size_t y1 = 0; y1 < ny; ++y1) {
        for (std::size_t y2 = 0; y2 < ny; ++y2) {
            for (std::uint32_t u1 = 0; u1 < q; ++u1) {
                double acc = 0.0;
                for (std::uint32_t u2 = 0; u2 < q; ++u2)
                    acc += mac.prob(u1 ^ u2, static_cast<int>(y1)) * mac.prob(u2, static_cast<int>(y2));
                col[u1] = w * acc;
            }
            merger.add(col);
        }
    }
    return merger.finish(m, policy);
}

/// P^+(y1,y2,u1 | u2) = 2^-m P(y1 | u1+u2) P(y2 | u2), merged per policy.
inline Mac plus_transform(const Mac& mac, const MergePolicy& policy = {}) {
    const int m = mac.users();
    const std::size_t q = mac.input_count();
    const std::size_t ny = static_cast<std::size_t>(mac.output_count());
    if (ny * ny * q > detail::kMaxSynthColumns)
        throw CapacityError("pre-merge alphabet |Y|^2*2^m too large for plus transform");
    const double w = 1.0 / static_cast<double>(q);
    detail::OutputMerger merger(m);
    std::vector<double> col(q);
    for (std::size_t y1 = 0; y1 < ny; ++y1) {
        for (std::size_t y2 = 0; y2 < ny; ++y2) {
            for (std::uint32_t u1 = 0; u1 < q; ++u1) {
                for (std::uint32_t u2 = 0; u2 < q; ++u2)
                    col[u2] = w * mac.prob(u1 ^ u2, static_cast<int>(y1)) *
                              mac.prob(u2, static_cast<int>(y2));
                merger.add(col);
            }
        }
    }
    return merger.finish(m, policy);
}

inline Mac transform_step(const Mac& mac, TransformSign sign, const MergePolicy& policy = {}) {
    return sign == TransformSign::minus ? minus_transform(mac, policy)
                                        : plus_transform(mac, policy);
}

/// Re-merge the outputs of an existing MAC under the given policy.
inline Mac merge_outputs(const Mac& mac, const MergePolicy& policy = {},
                         double* loss_bound = nullptr) {
    detail::OutputMerger merger(mac.users());
    const std::size_t q = mac.input_count();
    std::vector<double> col(q);
    for (int y = 0; y < mac.output_count(); ++y) {
        for (std::size_t x = 0; x < q; ++x) col[x] = mac.prob(static_cast<std::uint32_t>(x), y);
        merger.add(col);
    }
    return merger.finish(mac.users(), policy, loss_bound);
}

/// Applies the signs in order; the empty path returns the root unchanged.
inline Mac apply_path(const Mac& root, const PolarPath& path, const MergePolicy& policy = {}) {
    Mac cur = root;
    for (TransformSign b : path) cur = transform_step(cur, b, policy);
    return cur;
}

/// Path reaching synthesized channel `index0` (0-based) at depth `depth`:
/// bit j of the index, most significant first, 0 -> minus, 1 -> plus.
inline PolarPath path_for_index(std::size_t index0, int depth) {
    PolarPath path(depth);
    for (int j = 0; j < depth; ++j)
        path[j] = ((index0 >> (depth - 1 - j)) & 1u) ? TransformSign::plus : TransformSign::minus;
    return path;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Rank profiles of `trials` independent uniformly random depth-`depth`
/// paths. Per-trial generators are seeded from the master seed, so the result
/// does not depend on evaluation order.
inline std::vector<RankProfile> sample_polarization(const Mac& root, int depth,
                                                    std::size_t trials, std::uint64_t seed,
                                                    const MergePolicy& policy = {}) {
    if (trials < 1) throw std::invalid_argument("need at least one trial");
    std::vector<RankProfile> out;
    out.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        std::mt19937_64 rng(detail::splitmix64(seed ^ (0x51ed2701ull + t)));
        PolarPath path(depth);
        for (int j = 0; j < depth; ++j)
            path[j] = (rng() & 1u) ? TransformSign::plus : TransformSign::minus;
        out.push_back(rank_profile(apply_path(root, path, policy)));
    }
    return out;
}

/// Rank profiles of all 2^depth paths, in index order (all-minus first).
/// Feeds the martingale checks; the sampler above scales instead.
inline std::vector<RankProfile> exhaustive_profiles(const Mac& root, int depth,
                                                    const MergePolicy& policy = {}) {
    const std::size_t n = std::size_t{1} << depth;
    std::vector<RankProfile> out;
    out.reserve(n);
    for (std::size_t c = 0; c < n; ++c)
        out.push_back(rank_profile(apply_path(root, path_for_index(c, depth), policy)));
    return out;
}

}  // namespace macpolar
