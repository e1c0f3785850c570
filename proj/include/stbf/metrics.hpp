#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stbf/signal.hpp"

namespace stbf {

constexpr double kInfiniteScore = std::numeric_limits<double>::infinity();

namespace detail {

inline Eigen::VectorXd mono(const TimeSignal& s, const char* what) {
    if (s.channels() != 1)
        throw std::invalid_argument(std::string(what) + ": expected single-channel signal");
    return s.samples[0];
}

}  // namespace detail

/// Scale-invariant SNR in dB. Both signals are zero-meaned (optional),
/// the reference is rescaled by alpha = <est, ref>/<ref, ref>, and the
/// score is the energy ratio of the scaled reference to the residual.
/// Returns the +inf sentinel when the residual vanishes.
inline double si_snr(const TimeSignal& estimate, const TimeSignal& reference,
                     bool remove_mean = true) {
    Eigen::VectorXd e = detail::mono(estimate, "si_snr");
    Eigen::VectorXd r = detail::mono(reference, "si_snr");
    if (e.size() != r.size()) throw std::invalid_argument("si_snr: length mismatch");
    if (remove_mean) {
        e.array() -= e.mean();
        r.array() -= r.mean();
    }
    const double ref_power = r.squaredNorm();
    if (ref_power <= 0.0) throw std::invalid_argument("si_snr: zero-power reference");
    const double alpha = e.dot(r) / ref_power;
    const Eigen::VectorXd target = alpha * r;
    const double target_power = target.squaredNorm();
    const double residual_power = (e - target).squaredNorm();
    if (residual_power < 1e-30 * target_power) return kInfiniteScore;
    return 10.0 * std::log10(target_power / residual_power);
}

/// Plain SNR in dB, no rescaling.
inline double snr(const TimeSignal& estimate, const TimeSignal& reference) {
    const Eigen::VectorXd e = detail::mono(estimate, "snr");
    const Eigen::VectorXd r = detail::mono(reference, "snr");
    if (e.size() != r.size()) throw std::invalid_argument("snr: length mismatch");
    const double ref_power = r.squaredNorm();
    if (ref_power <= 0.0) throw std::invalid_argument("snr: zero-power reference");
    const double residual_power = (e - r).squaredNorm();
    if (residual_power < 1e-30 * ref_power) return kInfiniteScore;
    return 10.0 * std::log10(ref_power / residual_power);
}

struct UtteranceScore {
    std::string scene_id;
    std::string system_id;
    double si_snr_db = 0.0;
    double snr_db = 0.0;
    double si_snr_improvement_db = 0.0;
    bool sentinel = false;  // true when the score hit the +inf sentinel
};

struct BucketAggregate {
    std::string bucket;
    int count = 0;
    int excluded = 0;  // sentinel rows left out of the mean
    double mean_si_snr_db = 0.0;
    double mean_improvement_db = 0.0;
};

struct ScoreReport {
    std::vector<UtteranceScore> records;
    std::vector<BucketAggregate> aggregates;
};

/// Per-utterance scoring of one system against references, with the
/// mixture's reference-channel score as the improvement baseline.
struct ScoredScene {
    std::string scene_id;
    std::string bucket;        // aggregation key (angle bucket, speaker count, ...)
    TimeSignal reference;      // reverberant clean target, reference channel
    TimeSignal mixture_ref;    // mixture on the reference channel
};

inline ScoreReport score_systems(const std::vector<ScoredScene>& scenes,
                                 const std::string& system_id,
                                 const std::vector<TimeSignal>& outputs) {
    if (scenes.size() != outputs.size())
        throw std::invalid_argument("score_systems: scene/output count mismatch");
    ScoreReport report;
    std::vector<std::string> bucket_order;
    for (size_t i = 0; i < scenes.size(); ++i) {
        const auto& sc = scenes[i];
        UtteranceScore rec;
        rec.scene_id = sc.scene_id;
        rec.system_id = system_id;
        const double base = si_snr(sc.mixture_ref, sc.reference);
        rec.si_snr_db = si_snr(outputs[i], sc.reference);
        rec.snr_db = snr(outputs[i], sc.reference);
        rec.sentinel = std::isinf(rec.si_snr_db);
        rec.si_snr_improvement_db = rec.si_snr_db - base;
        report.records.push_back(rec);
        if (std::find(bucket_order.begin(), bucket_order.end(), sc.bucket) ==
            bucket_order.end())
            bucket_order.push_back(sc.bucket);
    }
    for (const auto& bucket : bucket_order) {
        BucketAggregate agg;
        agg.bucket = bucket;
        for (size_t i = 0; i < scenes.size(); ++i) {
            if (scenes[i].bucket != bucket) continue;
            ++agg.count;
            const auto& rec = report.records[i];
            if (rec.sentinel) {
                ++agg.excluded;
                continue;
            }
            agg.mean_si_snr_db += rec.si_snr_db;
            agg.mean_improvement_db += rec.si_snr_improvement_db;
        }
        const int used = agg.count - agg.excluded;
        if (used > 0) {
            agg.mean_si_snr_db /= used;
            agg.mean_improvement_db /= used;
        }
        report.aggregates.push_back(agg);
    }
    return report;
}

/// Trims (or zero-pads) a mono signal to the reference length before
/// scoring, aligning sample 0 to sample 0.
inline TimeSignal match_length(const TimeSignal& s, Eigen::Index length) {
    TimeSignal out;
    out.sample_rate = s.sample_rate;
    for (const auto& chan : s.samples) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(length);
        const Eigen::Index n = std::min(length, chan.size());
        y.head(n) = chan.head(n);
        out.samples.push_back(std::move(y));
    }
    return out;
}

}  // namespace stbf
