#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stbf/signal.hpp"

namespace stbf {

/// Microphone positions in meters. Linear arrays live on the x axis.
struct ArrayGeometry {
    std::vector<Eigen::Vector3d> mic_positions;
    double sound_speed = 343.0;

    int mics() const { return static_cast<int>(mic_positions.size()); }

    void validate() const {
        if (mic_positions.empty())
            throw std::invalid_argument("ArrayGeometry: need at least one mic");
        for (const auto& p : mic_positions)
            if (!p.allFinite())
                throw std::invalid_argument("ArrayGeometry: non-finite mic position");
        for (size_t i = 0; i < mic_positions.size(); ++i)
            for (size_t j = i + 1; j < mic_positions.size(); ++j)
                if ((mic_positions[i] - mic_positions[j]).norm() < 1e-9)
                    throw std::invalid_argument("ArrayGeometry: coincident mics");
    }

    /// Linear array from 1-D element positions (meters along x).
    static ArrayGeometry linear(const std::vector<double>& x, double sound_speed = 343.0) {
        ArrayGeometry g;
        g.sound_speed = sound_speed;
        for (double xi : x) g.mic_positions.push_back({xi, 0.0, 0.0});
        g.validate();
        return g;
    }

    /// Default 15-element non-uniform linear array used by the tests and
    /// the scene generator. Spacings in cm, symmetric about the center.
    static ArrayGeometry default_linear_15() {
        const std::vector<double> spacings_cm = {8, 6, 6, 4, 4, 2, 2, 2, 2, 4, 4, 6, 6, 8};
        std::vector<double> x = {0.0};
        for (double s : spacings_cm) x.push_back(x.back() + s / 100.0);
        const double mid = 0.5 * x.back();
        for (double& xi : x) xi -= mid;
        return linear(x);
    }
};

/// Far-field plane-wave steering vector: F x M unit-modulus entries,
/// normalized so the reference mic entry is exactly 1.
struct SteeringVector {
    Eigen::MatrixXcd values;  // F x M
    double theta_deg = 90.0;
    int ref_channel = 0;

    int freq_bins() const { return static_cast<int>(values.rows()); }
    int mics() const { return static_cast<int>(values.cols()); }
};

/// Relative delay of mic m against the reference, seconds, for a plane
/// wave from theta (degrees off the positive x axis of a linear array).
inline double plane_wave_delay(const ArrayGeometry& geom, double theta_deg, int m,
                               int ref_channel) {
    const double ct = std::cos(theta_deg * M_PI / 180.0);
    return (geom.mic_positions[m].x() - geom.mic_positions[ref_channel].x()) * ct /
           geom.sound_speed;
}

inline SteeringVector steering_vector(const ArrayGeometry& geom, double theta_deg,
                                      const StftConfig& cfg, double sample_rate,
                                      int ref_channel = 0) {
    geom.validate();
    if (theta_deg < 0.0 || theta_deg > 180.0)
        throw std::invalid_argument("steering_vector: theta must be in [0, 180] degrees");
    if (ref_channel < 0 || ref_channel >= geom.mics())
        throw std::out_of_range("steering_vector: reference channel out of range");
    const int F = cfg.freq_bins(), M = geom.mics();
    SteeringVector v;
    v.theta_deg = theta_deg;
    v.ref_channel = ref_channel;
    v.values.resize(F, M);
    for (int m = 0; m < M; ++m) {
        const double tau = plane_wave_delay(geom, theta_deg, m, ref_channel);
        for (int k = 0; k < F; ++k) {
            const double f_hz = static_cast<double>(k) * sample_rate / cfg.fft_size;
            v.values(k, m) = std::polar(1.0, -2.0 * M_PI * f_hz * tau);
        }
    }
    return v;
}

/// Wraps to (-pi, pi].
inline double wrap_phase(double p) {
    p = std::fmod(p + M_PI, 2.0 * M_PI);
    if (p <= 0.0) p += 2.0 * M_PI;
    return p - M_PI;
}

/// Inter-microphone phase difference angle(Y_i conj(Y_j)), T x F stored F x T.
inline Eigen::MatrixXd ipd(const ComplexSpectrogram& spec, int i, int j) {
    spec.validate();
    if (i == j || i < 0 || j < 0 || i >= spec.channels() || j >= spec.channels())
        throw std::invalid_argument("ipd: bad channel pair");
    Eigen::MatrixXd out(spec.freq_bins(), spec.frames());
    for (int t = 0; t < spec.frames(); ++t)
        for (int f = 0; f < spec.freq_bins(); ++f)
            out(f, t) = std::arg(spec.ch[i](f, t) * std::conj(spec.ch[j](f, t)));
    return out;
}

/// Location-guided directional feature: mean over mic pairs of
/// cos(IPD - steering phase difference), in [-1, 1].
inline Eigen::MatrixXd directional_feature(const ComplexSpectrogram& spec,
                                           const ArrayGeometry& geom, double theta_deg,
                                           const std::vector<std::pair<int, int>>& pairs) {
    if (pairs.empty())
        throw std::invalid_argument("directional_feature: empty pair list");
    if (geom.mics() != spec.channels())
        throw std::invalid_argument("directional_feature: geometry/spectrogram channel mismatch");
    const SteeringVector v =
        steering_vector(geom, theta_deg, spec.config, spec.sample_rate, 0);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(spec.freq_bins(), spec.frames());
    for (const auto& [i, j] : pairs) {
        const Eigen::MatrixXd phase = ipd(spec, i, j);
        for (int t = 0; t < spec.frames(); ++t)
            for (int f = 0; f < spec.freq_bins(); ++f) {
                const double target = std::arg(v.values(f, i) * std::conj(v.values(f, j)));
                acc(f, t) += std::cos(phase(f, t) - target);
            }
    }
    return acc / static_cast<double>(pairs.size());
}

/// Default pair set: every mic against the reference channel.
inline std::vector<std::pair<int, int>> pairs_vs_reference(int mics, int ref_channel = 0) {
    std::vector<std::pair<int, int>> pairs;
    for (int m = 0; m < mics; ++m)
        if (m != ref_channel) pairs.emplace_back(m, ref_channel);
    return pairs;
}

}  // namespace stbf
