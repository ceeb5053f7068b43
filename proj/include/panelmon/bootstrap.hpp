#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "panelmon/cusum.hpp"
#include "panelmon/error.hpp"
#include "panelmon/parallel.hpp"
#include "panelmon/patterns.hpp"
#include "panelmon/rng.hpp"
#include "panelmon/shifts.hpp"

namespace panelmon {

enum class ResamplingMode { SingleObservation, MovingBlock };

/// Bootstrap source of in-control residuals. Segments are gap-free,
/// within-process runs; moving blocks never cross a segment boundary.
///
/// Replication b of a scheme always yields the same stream, so any two
/// evaluations that use the same scheme share common random numbers.
class ResamplingScheme {
public:
    ResamplingScheme(std::vector<std::vector<double>> segments, ResamplingMode mode, std::size_t block_length,
                     std::uint64_t seed)
        : mode_(mode), block_length_(block_length), seed_(seed) {
        std::size_t longest = 0;
        for (auto& seg : segments) {
            if (seg.empty()) continue;
            const std::size_t offset = data_.size();
            data_.insert(data_.end(), seg.begin(), seg.end());
            longest = std::max(longest, seg.size());
            segment_lengths_.push_back(seg.size());
            if (mode == ResamplingMode::MovingBlock && seg.size() >= block_length)
                for (std::size_t s = 0; s + block_length <= seg.size(); ++s) starts_.push_back(offset + s);
        }
        if (data_.empty()) throw DataError("resampling: residual source is empty");
        if (mode == ResamplingMode::MovingBlock) {
            if (block_length < 1) throw ConfigError("resampling: block length must be at least 1");
            if (starts_.empty())
                throw ConfigError("resampling: no gap-free segment of length >= block length " +
                                  std::to_string(block_length) + " (longest available segment: " +
                                  std::to_string(longest) + ")");
        } else {
            block_length_ = 1;
        }
    }

    /// Splits each residual series at its gaps.
    static ResamplingScheme from_residuals(std::span<const ResidualSeries> residuals, ResamplingMode mode,
                                           std::size_t block_length, std::uint64_t seed) {
        std::vector<std::vector<double>> segments;
        for (const auto& r : residuals) {
            std::vector<double> cur;
            for (std::size_t t = 0; t < r.values.size(); ++t) {
                if (r.values.is_observed(t)) {
                    cur.push_back(r.values.values[t]);
                } else if (!cur.empty()) {
                    segments.push_back(std::move(cur));
                    cur.clear();
                }
            }
            if (!cur.empty()) segments.push_back(std::move(cur));
        }
        return ResamplingScheme(std::move(segments), mode, block_length, seed);
    }

    ResamplingMode mode() const noexcept { return mode_; }
    std::size_t block_length() const noexcept { return block_length_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t num_observations() const noexcept { return data_.size(); }
    std::size_t num_block_starts() const noexcept { return mode_ == ResamplingMode::MovingBlock ? starts_.size() : data_.size(); }
    std::size_t num_segments() const noexcept { return segment_lengths_.size(); }
    std::span<const double> pooled() const noexcept { return data_; }

    ResamplingScheme with_seed(std::uint64_t seed) const {
        ResamplingScheme s = *this;
        s.seed_ = seed;
        return s;
    }

    class Stream {
    public:
        Stream(const ResamplingScheme& scheme, std::uint64_t seed)
            : scheme_(&scheme), rng_(seed),
              pick_(0, scheme.num_block_starts() - 1) {}

        double next() {
            if (remaining_ == 0) {
                const std::size_t j = pick_(rng_);
                pos_ = scheme_->mode_ == ResamplingMode::MovingBlock ? scheme_->starts_[j] : j;
                remaining_ = scheme_->block_length_;
            }
            --remaining_;
            return scheme_->data_[pos_++];
        }

    private:
        const ResamplingScheme* scheme_;
        Rng rng_;
        std::uniform_int_distribution<std::size_t> pick_;
        std::size_t pos_ = 0;
        std::size_t remaining_ = 0;
    };

    Stream stream(std::uint64_t replication) const { return Stream(*this, derive_seed(seed_, replication)); }

    std::vector<double> resample(std::size_t length, std::uint64_t replication) const {
        auto s = stream(replication);
        std::vector<double> out(length);
        for (auto& v : out) v = s.next();
        return out;
    }

    /// Concatenates blocks starting at the given start-table indices (in the
    /// order valid starts are enumerated across segments) and truncates.
    std::vector<double> assemble(std::span<const std::size_t> start_indices, std::size_t length) const {
        std::vector<double> out;
        out.reserve(length);
        for (std::size_t j : start_indices) {
            if (j >= num_block_starts()) throw ConfigError("resampling: block start index out of range");
            const std::size_t pos = mode_ == ResamplingMode::MovingBlock ? starts_[j] : j;
            for (std::size_t u = 0; u < block_length_ && out.size() < length; ++u) out.push_back(data_[pos + u]);
        }
        if (out.size() < length) throw ConfigError("resampling: not enough blocks for the requested length");
        return out;
    }

private:
    ResamplingMode mode_;
    std::size_t block_length_;
    std::uint64_t seed_;
    std::vector<double> data_;
    std::vector<std::size_t> starts_;
    std::vector<std::size_t> segment_lengths_;
};

/// Independent draws from a fixed distribution (parametric designs, tests).
template <class Dist>
class IidSource {
public:
    IidSource(Dist dist, std::uint64_t seed) : dist_(dist), seed_(seed) {}

    class Stream {
    public:
        Stream(Dist d, std::uint64_t seed) : dist_(d), rng_(seed) {}
        double next() { return dist_(rng_); }

    private:
        Dist dist_;
        Rng rng_;
    };

    Stream stream(std::uint64_t replication) const { return Stream(dist_, derive_seed(seed_, replication)); }

private:
    Dist dist_;
    std::uint64_t seed_;
};

/// Adds a deterministic shift profile on top of another source (held by value).
template <class Source>
class ShiftedSource {
public:
    ShiftedSource(Source inner, ShiftSpec shift) : inner_(std::move(inner)), shift_(shift) {}

    class Stream {
    public:
        Stream(typename Source::Stream s, const ShiftSpec* shift) : inner_(std::move(s)), shift_(shift) {}
        double next() { return inner_.next() + shift_->at(t_++); }

    private:
        typename Source::Stream inner_;
        const ShiftSpec* shift_;
        std::size_t t_ = 0;
    };

    Stream stream(std::uint64_t replication) const { return Stream(inner_.stream(replication), &shift_); }

private:
    Source inner_;
    ShiftSpec shift_;
};

struct ArlEstimate {
    double arl = 0.0;
    std::vector<std::size_t> run_lengths;
    double censored_fraction = 0.0;
    std::size_t series_length = 0;
    std::vector<std::string> warnings;
};

/// First alert of a fresh two-sided chart on one stream, or nullopt if none
/// within `length` samples. The alert time is the 0-based sample index.
template <class Stream>
std::optional<AlertEvent> first_alert(Stream& stream, const CalibratedChart& chart, std::size_t length,
                                      const ShiftSpec* shift = nullptr) {
    ChartState st;
    for (std::size_t t = 0; t < length; ++t) {
        const double x = stream.next() + (shift ? shift->at(t) : 0.0);
        st = cusum_step(st, x, chart.k);
        if (st.c_plus > chart.h_plus) return AlertEvent{t, ChartSide::Upper, st.c_plus, st.n_plus};
        if (st.c_minus < chart.h_minus) return AlertEvent{t, ChartSide::Lower, st.c_minus, st.n_minus};
    }
    return std::nullopt;
}

/// Monte-Carlo ARL: B replications of length L, each run from zero state;
/// runs without an alert are censored at L.
template <class Source>
ArlEstimate estimate_arl(const Source& source, const CalibratedChart& chart, std::size_t replications,
                         std::size_t length, const std::optional<ShiftSpec>& shift = std::nullopt) {
    if (replications < 1) throw ConfigError("estimate_arl: B must be at least 1");
    if (length < 1) throw ConfigError("estimate_arl: L must be at least 1");
    ArlEstimate est;
    est.series_length = length;
    est.run_lengths.assign(replications, length);
    std::vector<std::uint8_t> censored(replications, 0);
    const ShiftSpec* sp = shift ? &*shift : nullptr;
    parallel_for(replications, [&](std::size_t b) {
        auto stream = source.stream(b);
        if (auto a = first_alert(stream, chart, length, sp)) est.run_lengths[b] = a->time + 1;
        else censored[b] = 1;
    });
    std::uint64_t total = 0, n_cens = 0;
    for (std::size_t b = 0; b < replications; ++b) {
        total += est.run_lengths[b];
        n_cens += censored[b];
    }
    est.arl = static_cast<double>(total) / static_cast<double>(replications);
    est.censored_fraction = static_cast<double>(n_cens) / static_cast<double>(replications);
    if (est.censored_fraction > 0.05)
        est.warnings.push_back("censored fraction " + std::to_string(est.censored_fraction) +
                               " exceeds 0.05; ARL estimate is biased low");
    return est;
}

}  // namespace panelmon
