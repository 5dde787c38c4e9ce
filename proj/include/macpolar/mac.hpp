#pragma once

// Exact representation of discrete m-user binary-input multiple access
// channels and the information measures computed on them. All mutual
// informations are in bits and assume i.i.d. uniform binary inputs.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace macpolar {

/// Bitmask over the user set {1..m}; bit k-1 set <=> user k belongs to the subset.
using SubsetIndex = std::uint32_t;

inline constexpr int kDefaultMaxUsers = 8;

inline int subset_size(SubsetIndex mask) { return std::popcount(mask); }

inline SubsetIndex full_subset(int m) {
    return static_cast<SubsetIndex>((1u << m) - 1u);
}

inline SubsetIndex subset_complement(SubsetIndex mask, int m) {
    return full_subset(m) ^ mask;
}

/// Parity of the bits of x selected by mask.
inline int masked_parity(std::uint32_t x, SubsetIndex mask) {
    return std::popcount(x & mask) & 1;
}

/// Entropy of a (sub)distribution in bits, with 0*log(0) = 0.
/// Values below 1e-300 are treated as zero so that sparse deterministic
/// tables never produce NaNs.
inline double entropy_bits(std::span<const double> p) {
    double h = 0.0;
    for (double v : p) {
        if (v > 1e-300) h += v * std::log2(1.0 / v);
    }
    return h;
}

/// The map J -> I[J] over all 2^m subsets of the user set.
struct RankProfile {
    int users = 0;
    std::vector<double> values;  // indexed by subset mask, values[0] == 0

    double sum_rate() const { return values.empty() ? 0.0 : values.back(); }
};

/// Binary-input single-user channel as a 2 x |B| probability table.
class SingleUserChannel {
  public:
    SingleUserChannel(std::vector<double> row0, std::vector<double> row1)
        : rows_{std::move(row0), std::move(row1)} {
        if (rows_[0].size() != rows_[1].size() || rows_[0].empty())
            throw std::invalid_argument("single-user channel rows must have equal, nonzero size");
        for (const auto& r : rows_) {
            double sum = 0.0;
            for (double v : r) {
                if (v < 0.0) throw std::invalid_argument("negative channel probability");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("channel row does not sum to 1");
        }
    }

    std::size_t output_count() const { return rows_[0].size(); }
    double prob(int input, std::size_t y) const { return rows_[input][y]; }
    const std::vector<double>& row(int input) const { return rows_[input]; }

  private:
    std::array<std::vector<double>, 2> rows_;
};

/// Bhattacharyya parameter Z = sum_y sqrt(Q(y|0) Q(y|1)), in [0,1].
inline double bhattacharyya(const SingleUserChannel& q) {
    double z = 0.0;
    for (std::size_t y = 0; y < q.output_count(); ++y)
        z += std::sqrt(q.prob(0, y) * q.prob(1, y));
    return z;
}

/// Mutual information of a single-user channel under a uniform input.
inline double single_user_info(const SingleUserChannel& q) {
    const std::size_t ny = q.output_count();
    std::vector<double> out(ny);
    for (std::size_t y = 0; y < ny; ++y) out[y] = 0.5 * (q.prob(0, y) + q.prob(1, y));
    return entropy_bits(out) -
           0.5 * entropy_bits(q.row(0)) -
           0.5 * entropy_bits(q.row(1));
}

/// Exact conditional distribution table of an m-user binary-input MAC over a
/// finite output alphabet. Immutable after construction; all operations on it
/// are pure functions, so concurrent use needs no synchronization.
///
/// Row index encodes the input vector with user 1 as the least significant
/// bit. Output symbols are opaque indices; `labels` is optional metadata that
/// is never used in any computation.
class Mac {
  public:
    Mac(int m, int output_count, std::vector<double> table,
        int max_users = kDefaultMaxUsers)
        : m_(m), outputs_(output_count), table_(std::move(table)) {
        if (m < 1 || m > max_users)
            throw std::invalid_argument("user count out of range (cap " +
                                        std::to_string(max_users) + ")");
        if (outputs_ < 1) throw std::invalid_argument("output alphabet must be nonempty");
        const std::size_t rows = std::size_t{1} << m_;
        if (table_.size() != rows * static_cast<std::size_t>(outputs_))
            throw std::invalid_argument("table must have exactly 2^m rows of |Y| entries");
        for (std::size_t x = 0; x < rows; ++x) {
            double sum = 0.0;
            for (int y = 0; y < outputs_; ++y) {
                double v = table_[x * outputs_ + y];
                if (v < 0.0) throw std::invalid_argument("negative channel probability");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("channel row does not sum to 1");
        }
    }

    int users() const { return m_; }
    int output_count() const { return outputs_; }
    std::size_t input_count() const { return std::size_t{1} << m_; }

    double prob(std::uint32_t x, int y) const {
        return table_[static_cast<std::size_t>(x) * outputs_ + y];
    }

    std::span<const double> row(std::uint32_t x) const {
        return {table_.data() + static_cast<std::size_t>(x) * outputs_,
                static_cast<std::size_t>(outputs_)};
    }

    const std::vector<double>& table() const { return table_; }

    /// Optional human-readable output labels; carried along, never computed on.
    std::vector<std::string> labels;

  private:
    int m_;
    int outputs_;
    std::vector<double> table_;  // row-major, 2^m rows
};

namespace detail {

/// H(X[S], Y) under i.i.d. uniform inputs.
inline double joint_entropy_with_output(const Mac& mac, SubsetIndex s) {
    const std::size_t rows = mac.input_count();
    const int ny = mac.output_count();
    const double w = 1.0 / static_cast<double>(rows);

    // Accumulate p(x_S, y) into buckets keyed by (x & s, y). Unused buckets
    // stay zero and contribute nothing to the entropy.
    std::vector<double> joint(rows * static_cast<std::size_t>(ny), 0.0);
    for (std::size_t x = 0; x < rows; ++x) {
        const std::size_t key = (x & s) * static_cast<std::size_t>(ny);
        for (int y = 0; y < ny; ++y) joint[key + y] += w * mac.prob(static_cast<std::uint32_t>(x), y);
    }
    return entropy_bits(joint);
}

}  // namespace detail

/// I(X[J]; Y, X[J^c]) in bits; 0 for the empty subset.
inline double mutual_info_subset(const Mac& mac, SubsetIndex j) {
    if (j > full_subset(mac.users()))
        throw std::invalid_argument("subset mask exceeds user set");
    if (j == 0) return 0.0;
    const SubsetIndex jc = subset_complement(j, mac.users());
    return subset_size(j) + detail::joint_entropy_with_output(mac, jc) -
           detail::joint_entropy_with_output(mac, full_subset(mac.users()));
}

/// All 2^m values of J -> I(X[J]; Y, X[J^c]).
inline RankProfile rank_profile(const Mac& mac) {
    const int m = mac.users();
    RankProfile prof;
    prof.users = m;
    prof.values.resize(std::size_t{1} << m);
    const double h_all = detail::joint_entropy_with_output(mac, full_subset(m));
    for (SubsetIndex j = 0; j <= full_subset(m); ++j) {
        prof.values[j] =
            j == 0 ? 0.0
                   : subset_size(j) +
                         detail::joint_entropy_with_output(mac, subset_complement(j, m)) - h_all;
    }
    return prof;
}

/// I(X[S]; Y) without conditioning on the other users.
inline double mutual_info_unconditioned(const Mac& mac, SubsetIndex s) {
    if (s > full_subset(mac.users()))
        throw std::invalid_argument("subset mask exceeds user set");
    if (s == 0) return 0.0;
    return subset_size(s) + detail::joint_entropy_with_output(mac, 0) -
           detail::joint_entropy_with_output(mac, s);
}

/// Single-user channel from the mod-2 sum of the inputs in S to the output:
/// Q(y|s) = 2^-(m-1) * sum over inputs whose selected bits have parity s.
inline SingleUserChannel marginalize_linear_form(const Mac& mac, SubsetIndex s) {
    if (s == 0) throw std::invalid_argument("linear form over the empty subset");
    if (s > full_subset(mac.users()))
        throw std::invalid_argument("subset mask exceeds user set");
    const std::size_t rows = mac.input_count();
    const int ny = mac.output_count();
    const double w = 2.0 / static_cast<double>(rows);  // 1 / 2^(m-1)
    std::vector<double> q0(ny, 0.0), q1(ny, 0.0);
    for (std::size_t x = 0; x < rows; ++x) {
        auto& dst = masked_parity(static_cast<std::uint32_t>(x), s) ? q1 : q0;
        for (int y = 0; y < ny; ++y) dst[y] += w * mac.prob(static_cast<std::uint32_t>(x), y);
    }
    return SingleUserChannel(std::move(q0), std::move(q1));
}

/// View a single-user channel as a 1-user MAC.
inline Mac to_mac(const SingleUserChannel& q) {
    std::vector<double> table;
    table.reserve(2 * q.output_count());
    table.insert(table.end(), q.row(0).begin(), q.row(0).end());
    table.insert(table.end(), q.row(1).begin(), q.row(1).end());
    return Mac(1, static_cast<int>(q.output_count()), std::move(table));
}

/// View a 1-user MAC as a single-user channel.
inline SingleUserChannel to_single_user(const Mac& mac) {
    if (mac.users() != 1) throw std::invalid_argument("expected a single-user channel");
    std::vector<double> r0(mac.row(0).begin(), mac.row(0).end());
    std::vector<double> r1(mac.row(1).begin(), mac.row(1).end());
    return SingleUserChannel(std::move(r0), std::move(r1));
}

}  // namespace macpolar
