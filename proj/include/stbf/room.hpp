#pragma once

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "stbf/features.hpp"
#include "stbf/signal.hpp"

namespace stbf {

/// One simulated rectangular-room scene: geometry, acoustics, and mixing
/// ratios. Wall order for absorption: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
struct SceneConfig {
    Eigen::Vector3d room_dims{6.0, 5.0, 3.0};
    std::vector<Eigen::Vector3d> source_positions;  // target first
    std::vector<Eigen::Vector3d> mic_positions;
    int reflection_order = 6;
    std::array<double, 6> absorption{0.4, 0.4, 0.4, 0.4, 0.4, 0.4};
    double sample_rate = 16000.0;
    double sound_speed = 343.0;
    double sir_db = 0.0;
    double snr_db = 20.0;
    uint64_t seed = 0;
    double duration_seconds = 4.0;
    double target_theta_deg = 90.0;     // metadata for the directional feature
    double min_separation_deg = 0.0;    // angle bucket actually sampled
    double max_separation_deg = 180.0;

    int sources() const { return static_cast<int>(source_positions.size()); }
    int mics() const { return static_cast<int>(mic_positions.size()); }

    bool inside(const Eigen::Vector3d& p) const {
        return p.x() > 0 && p.x() < room_dims.x() && p.y() > 0 && p.y() < room_dims.y() &&
               p.z() > 0 && p.z() < room_dims.z();
    }

    void validate() const {
        if (source_positions.empty() || mic_positions.empty())
            throw std::invalid_argument("SceneConfig: need sources and mics");
        for (const auto& p : source_positions)
            if (!inside(p)) throw std::invalid_argument("SceneConfig: source outside room");
        for (const auto& p : mic_positions)
            if (!inside(p)) throw std::invalid_argument("SceneConfig: mic outside room");
        for (double a : absorption)
            if (a <= 0.0 || a > 1.0)
                throw std::invalid_argument("SceneConfig: absorption must be in (0, 1]");
        if (reflection_order < 0)
            throw std::invalid_argument("SceneConfig: negative reflection order");
    }
};

struct SimulatedScene {
    TimeSignal mixture;
    TimeSignal target_reverberant;
    std::vector<TimeSignal> interferences_reverberant;
    TimeSignal noise;
    SceneConfig config;
    double achieved_sir_db = 0.0;
    double achieved_snr_db = 0.0;
};

namespace detail {

constexpr int kSincHalf = 40;  // 81-tap fractional-delay kernel

/// Hann-windowed sinc kernel for a fractional delay in [0, 1), normalized
/// to unit DC gain so the sample sum carries the image amplitude.
inline std::array<double, 2 * kSincHalf + 1> frac_delay_kernel(double frac) {
    std::array<double, 2 * kSincHalf + 1> h{};
    double sum = 0.0;
    for (int n = -kSincHalf; n <= kSincHalf; ++n) {
        const double x = n - frac;
        const double s = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
        const double w = 0.5 + 0.5 * std::cos(M_PI * (n - frac) / (kSincHalf + 1));
        h[n + kSincHalf] = s * w;
        sum += h[n + kSincHalf];
    }
    for (double& v : h) v /= sum;
    return h;
}

/// FFT-based linear convolution.
inline Eigen::VectorXd fft_convolve(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index out_len = a.size() + b.size() - 1;
    Eigen::Index n = 1;
    while (n < out_len) n <<= 1;
    std::vector<cd> fa(n, cd(0, 0)), fb(n, cd(0, 0));
    for (Eigen::Index i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (Eigen::Index i = 0; i < b.size(); ++i) fb[i] = b[i];
    Eigen::FFT<double> fft;
    std::vector<cd> Fa(n), Fb(n);
    fft.fwd(Fa, fa);
    fft.fwd(Fb, fb);
    for (Eigen::Index i = 0; i < n; ++i) Fa[i] *= Fb[i];
    fft.inv(fa, Fa);
    Eigen::VectorXd out(out_len);
    for (Eigen::Index i = 0; i < out_len; ++i) out[i] = fa[i].real();
    return out;
}

struct Image {
    double distance;
    double amplitude;
};

/// All image sources of a rectangular room up to the given total
/// reflection count, with distances to `mic` and reflection attenuation.
inline std::vector<Image> image_sources(const SceneConfig& cfg, const Eigen::Vector3d& src,
                                        const Eigen::Vector3d& mic) {
    const int order = cfg.reflection_order;
    std::array<double, 6> beta;
    for (int i = 0; i < 6; ++i) beta[i] = std::sqrt(1.0 - cfg.absorption[i] + 1e-300);
    std::vector<Image> images;
    const int mmax = (order + 1) / 2 + 1;
    for (int px = 0; px <= 1; ++px)
        for (int mx = -mmax; mx <= mmax; ++mx) {
            const int rx = std::abs(mx - px) + std::abs(mx);
            if (rx > order) continue;
            for (int py = 0; py <= 1; ++py)
                for (int my = -mmax; my <= mmax; ++my) {
                    const int ry = std::abs(my - py) + std::abs(my);
                    if (rx + ry > order) continue;
                    for (int pz = 0; pz <= 1; ++pz)
                        for (int mz = -mmax; mz <= mmax; ++mz) {
                            const int rz = std::abs(mz - pz) + std::abs(mz);
                            if (rx + ry + rz > order) continue;
                            const Eigen::Vector3d img(
                                (1 - 2 * px) * src.x() + 2.0 * mx * cfg.room_dims.x(),
                                (1 - 2 * py) * src.y() + 2.0 * my * cfg.room_dims.y(),
                                (1 - 2 * pz) * src.z() + 2.0 * mz * cfg.room_dims.z());
                            const double d = (img - mic).norm();
                            const double att = std::pow(beta[0], std::abs(mx - px)) *
                                               std::pow(beta[1], std::abs(mx)) *
                                               std::pow(beta[2], std::abs(my - py)) *
                                               std::pow(beta[3], std::abs(my)) *
                                               std::pow(beta[4], std::abs(mz - pz)) *
                                               std::pow(beta[5], std::abs(mz));
                            images.push_back({d, att / (4.0 * M_PI * d)});
                        }
                }
        }
    return images;
}

inline double power(const Eigen::VectorXd& x) { return x.squaredNorm() / x.size(); }

}  // namespace detail

/// Image-source RIR from one source to one mic. Fractional delays use an
/// 81-tap Hann-windowed sinc; direct-path amplitude is 1/(4 pi d).
inline TimeSignal simulate_rir(const SceneConfig& cfg, int source_index, int mic_index) {
    cfg.validate();
    if (source_index < 0 || source_index >= cfg.sources())
        throw std::out_of_range("simulate_rir: source index out of range");
    if (mic_index < 0 || mic_index >= cfg.mics())
        throw std::out_of_range("simulate_rir: mic index out of range");

    const auto images = detail::image_sources(cfg, cfg.source_positions[source_index],
                                              cfg.mic_positions[mic_index]);
    double max_delay = 0.0;
    for (const auto& im : images)
        max_delay = std::max(max_delay, im.distance / cfg.sound_speed * cfg.sample_rate);
    const Eigen::Index len =
        static_cast<Eigen::Index>(std::ceil(max_delay)) + 2 * detail::kSincHalf + 2;

    Eigen::VectorXd h = Eigen::VectorXd::Zero(len);
    for (const auto& im : images) {
        const double delay = im.distance / cfg.sound_speed * cfg.sample_rate;
        const auto base = static_cast<Eigen::Index>(std::floor(delay));
        const auto kernel = detail::frac_delay_kernel(delay - static_cast<double>(base));
        for (int n = -detail::kSincHalf; n <= detail::kSincHalf; ++n) {
            const Eigen::Index idx = base + n;
            if (idx >= 0 && idx < len) h[idx] += im.amplitude * kernel[n + detail::kSincHalf];
        }
    }
    return TimeSignal({h}, cfg.sample_rate);
}

/// Convolves dry sources with their RIRs, scales interference and noise to
/// the requested SIR/SNR against the reverberant target on the reference
/// channel, and stores every component separately.
inline SimulatedScene render_scene(const SceneConfig& cfg,
                                   const std::vector<TimeSignal>& dry_sources,
                                   int ref_channel = 0) {
    cfg.validate();
    if (dry_sources.empty())
        throw std::invalid_argument("render_scene: need at least one dry source");
    if (static_cast<int>(dry_sources.size()) != cfg.sources())
        throw std::invalid_argument("render_scene: dry source count != configured sources");
    if (ref_channel < 0 || ref_channel >= cfg.mics())
        throw std::out_of_range("render_scene: reference channel out of range");

    const int M = cfg.mics();
    const int S = cfg.sources();

    // reverberant images of every source at every mic
    std::vector<TimeSignal> reverberant(S);
    Eigen::Index max_len = 0;
    for (int s = 0; s < S; ++s) {
        if (dry_sources[s].channels() != 1)
            throw std::invalid_argument("render_scene: dry sources must be single-channel");
        reverberant[s].sample_rate = cfg.sample_rate;
        for (int m = 0; m < M; ++m) {
            const TimeSignal rir = simulate_rir(cfg, s, m);
            reverberant[s].samples.push_back(
                detail::fft_convolve(dry_sources[s].samples[0], rir.samples[0]));
            max_len = std::max(max_len, reverberant[s].samples.back().size());
        }
    }
    for (auto& r : reverberant)
        for (auto& chan : r.samples) {
            const Eigen::Index old = chan.size();
            chan.conservativeResize(max_len);
            chan.tail(max_len - old).setZero();
        }

    const double p_target = detail::power(reverberant[0].samples[ref_channel]);
    if (p_target <= 0.0)
        throw std::invalid_argument("render_scene: silent target (zero power)");

    SimulatedScene scene;
    scene.config = cfg;
    scene.target_reverberant = reverberant[0];

    // common gain over all interferers so their sum hits the requested SIR
    if (S > 1) {
        Eigen::VectorXd interf_ref = Eigen::VectorXd::Zero(max_len);
        for (int s = 1; s < S; ++s) interf_ref += reverberant[s].samples[ref_channel];
        const double p_interf = detail::power(interf_ref);
        if (p_interf <= 0.0)
            throw std::invalid_argument("render_scene: silent interference");
        const double gain = std::sqrt(p_target / (p_interf * std::pow(10.0, cfg.sir_db / 10.0)));
        for (int s = 1; s < S; ++s) {
            for (auto& chan : reverberant[s].samples) chan *= gain;
            scene.interferences_reverberant.push_back(std::move(reverberant[s]));
        }
        scene.achieved_sir_db = cfg.sir_db;
    }

    // spatially uncorrelated white Gaussian noise, scaled on the ref channel
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    scene.noise.sample_rate = cfg.sample_rate;
    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd n(max_len);
        for (Eigen::Index i = 0; i < max_len; ++i) n[i] = gauss(rng);
        scene.noise.samples.push_back(std::move(n));
    }
    const double p_noise = detail::power(scene.noise.samples[ref_channel]);
    const double ngain = std::sqrt(p_target / (p_noise * std::pow(10.0, cfg.snr_db / 10.0)));
    for (auto& chan : scene.noise.samples) chan *= ngain;
    scene.achieved_snr_db = cfg.snr_db;

    scene.mixture.sample_rate = cfg.sample_rate;
    for (int m = 0; m < M; ++m) {
        Eigen::VectorXd mix = scene.target_reverberant.samples[m] + scene.noise.samples[m];
        for (const auto& interf : scene.interferences_reverberant) mix += interf.samples[m];
        scene.mixture.samples.push_back(std::move(mix));
    }
    return scene;
}

/// Sum of all non-target components: what the beamformer treats as noise.
inline TimeSignal scene_noise_plus_interference(const SimulatedScene& scene) {
    TimeSignal out;
    out.sample_rate = scene.noise.sample_rate;
    for (int m = 0; m < scene.noise.channels(); ++m) {
        Eigen::VectorXd n = scene.noise.samples[m];
        for (const auto& interf : scene.interferences_reverberant) n += interf.samples[m];
        out.samples.push_back(std::move(n));
    }
    return out;
}

/// Speech-shaped noise bursts: tilted Gaussian noise under a syllable-rate
/// on/off envelope. Deterministic under the seed.
inline TimeSignal make_speech_like_source(double duration_seconds, double sample_rate,
                                          uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(duration_seconds * sample_rate);
    if (n < 1) throw std::invalid_argument("make_speech_like_source: empty duration");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    // spectral tilt: two cascaded one-pole lowpasses
    Eigen::VectorXd x(n);
    double s1 = 0.0, s2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        s1 = 0.85 * s1 + 0.15 * gauss(rng);
        s2 = 0.85 * s2 + 0.15 * s1;
        x[i] = s2;
    }
    // syllable-like bursts, ~4 per second with raised-cosine edges
    const auto seg = static_cast<Eigen::Index>(sample_rate / 4.0);
    const auto ramp = seg / 4;
    Eigen::Index i = 0;
    while (i < n) {
        const bool voiced = uni(rng) < 0.7;
        const auto len = std::min<Eigen::Index>(seg, n - i);
        for (Eigen::Index k = 0; k < len; ++k) {
            double env = voiced ? 1.0 : 0.05;
            if (voiced && k < ramp) env *= 0.5 - 0.5 * std::cos(M_PI * k / ramp);
            if (voiced && k >= len - ramp)
                env *= 0.5 - 0.5 * std::cos(M_PI * (len - 1 - k) / ramp);
            x[i + k] *= env;
        }
        i += len;
    }
    const double rms = std::sqrt(x.squaredNorm() / n);
    if (rms > 0.0) x *= 0.1 / rms;
    return TimeSignal({x}, sample_rate);
}

/// Angle-separation buckets used when sampling scenes.
inline const std::vector<std::pair<double, double>>& separation_buckets() {
    static const std::vector<std::pair<double, double>> buckets = {
        {0.0, 15.0}, {15.0, 45.0}, {45.0, 90.0}, {90.0, 180.0}};
    return buckets;
}

struct TestsetPolicy {
    int count = 20;
    uint64_t seed = 0;
    int speakers = 2;          // total simultaneous speakers, 1..3; 0 = sample 1..3
    int bucket = -1;           // index into separation_buckets(); -1 = sample
    double sir_min_db = -6.0, sir_max_db = 6.0;
    double snr_min_db = 18.0, snr_max_db = 30.0;
    int reflection_order = 6;
    double duration_seconds = 4.0;
    ArrayGeometry geometry = ArrayGeometry::default_linear_15();
};

/// Deterministic scene sampler mirroring the SIR/SNR and angular-separation
/// conditions of the evaluation setup.
inline std::vector<SceneConfig> generate_testset(const TestsetPolicy& policy) {
    if (policy.count < 1) throw std::invalid_argument("generate_testset: count must be >= 1");
    if (policy.speakers < 0 || policy.speakers > 3)
        throw std::invalid_argument("generate_testset: speakers must be in 0..3");
    std::mt19937_64 rng(policy.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto in_range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    std::vector<SceneConfig> scenes;
    scenes.reserve(policy.count);
    for (int i = 0; i < policy.count; ++i) {
        SceneConfig cfg;
        cfg.room_dims = {in_range(5.0, 8.0), in_range(4.0, 7.0), in_range(2.8, 3.5)};
        cfg.reflection_order = policy.reflection_order;
        const double absorb = in_range(0.3, 0.6);
        cfg.absorption.fill(absorb);
        cfg.sir_db = in_range(policy.sir_min_db, policy.sir_max_db);
        cfg.snr_db = in_range(policy.snr_min_db, policy.snr_max_db);
        cfg.seed = policy.seed * 1000003ull + static_cast<uint64_t>(i);
        cfg.duration_seconds = policy.duration_seconds;

        // array centered in the room, elements along x at ear height
        const Eigen::Vector3d center(cfg.room_dims.x() / 2.0, cfg.room_dims.y() / 2.0, 1.5);
        for (const auto& p : policy.geometry.mic_positions)
            cfg.mic_positions.push_back(center + p);

        const int speakers =
            policy.speakers > 0 ? policy.speakers : 1 + static_cast<int>(uni(rng) * 3.0);
        const int bucket_idx = policy.bucket >= 0
                                   ? policy.bucket
                                   : static_cast<int>(uni(rng) * separation_buckets().size());
        const auto [sep_lo, sep_hi] = separation_buckets()[bucket_idx];
        cfg.min_separation_deg = sep_lo;
        cfg.max_separation_deg = sep_hi;

        auto place = [&](double theta_deg) {
            const double rad = theta_deg * M_PI / 180.0;
            for (int attempt = 0; attempt < 256; ++attempt) {
                const double r = in_range(1.0, 2.2);
                // theta is measured from the -x end of the array axis, matching
                // the steering-vector delay convention
                const Eigen::Vector3d pos =
                    center + Eigen::Vector3d(-r * std::cos(rad), r * std::sin(rad),
                                             in_range(-0.3, 0.3));
                if (cfg.inside(pos) &&
                    (pos - center).norm() > 0.5)
                    return pos;
            }
            throw std::runtime_error("generate_testset: cannot place source inside room");
        };

        // resample the target angle until the separation bucket fits inside
        // the usable [5, 175] degree span on at least one side
        const double sep_min = std::max(sep_lo, 1.0);
        double theta_t = 90.0;
        for (int attempt = 0;; ++attempt) {
            theta_t = in_range(20.0, 160.0);
            if (std::max(theta_t - 5.0, 175.0 - theta_t) >= sep_min) break;
            if (attempt > 256)
                throw std::runtime_error("generate_testset: impossible separation bucket");
        }
        cfg.target_theta_deg = theta_t;
        cfg.source_positions.push_back(place(theta_t));
        for (int s = 1; s < speakers; ++s) {
            const bool left_ok = theta_t - sep_min >= 5.0;
            const bool right_ok = theta_t + sep_min <= 175.0;
            const bool go_left = left_ok && (!right_ok || uni(rng) < 0.5);
            const double room_side = go_left ? theta_t - 5.0 : 175.0 - theta_t;
            const double sep = in_range(sep_min, std::min(sep_hi, room_side));
            cfg.source_positions.push_back(place(go_left ? theta_t - sep : theta_t + sep));
        }
        cfg.validate();
        scenes.push_back(std::move(cfg));
    }
    return scenes;
}

}  // namespace stbf
