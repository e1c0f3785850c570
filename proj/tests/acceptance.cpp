// Acceptance harness: one pass/fail line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "stbf/stbf.hpp"

using namespace stbf;

namespace {

std::mt19937_64 g_rng(20260826);

Eigen::MatrixXcd random_hermitian_pd(int D) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd a(D, D);
    for (int r = 0; r < D; ++r)
        for (int c = 0; c < D; ++c) a(r, c) = cd(gauss(g_rng), gauss(g_rng));
    Eigen::MatrixXcd phi = a * a.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(D, D);
    return 0.5 * (phi + phi.adjoint()).eval();
}

Eigen::VectorXcd random_steering(int D, int ref) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd v(D);
    for (int d = 0; d < D; ++d) v[d] = cd(gauss(g_rng), gauss(g_rng));
    v /= v[ref];
    return v;
}

CovarianceStack wrap(const Eigen::MatrixXcd& phi, int M, int L, CovarianceRole role) {
    CovarianceStack c;
    c.matrices = {phi};
    c.channels = M;
    c.taps = L;
    c.role = role;
    return c;
}

ComplexSpectrogram random_spec(int F, int T, int M, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComplexSpectrogram s;
    s.config.fft_size = 2 * (F - 1);
    s.config.window_len = s.config.fft_size;
    s.config.hop = s.config.fft_size / 2;
    s.analysis_length = T * s.config.hop;
    for (int m = 0; m < M; ++m) {
        Eigen::MatrixXcd x(F, T);
        for (int t = 0; t < T; ++t)
            for (int f = 0; f < F; ++f) x(f, t) = cd(gauss(rng), gauss(rng));
        s.ch.push_back(std::move(x));
    }
    return s;
}

TimeSignal random_signal(Eigen::Index n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.3);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = gauss(rng);
    return TimeSignal({x}, 16000.0);
}

// --- independent naive-loop covariance oracles -----------------------------

Eigen::VectorXcd stacked_frame_oracle(const ComplexSpectrogram& spec, int f, int t, int L) {
    const int M = spec.channels();
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(M * L);
    for (int l = 0; l < L; ++l)
        for (int m = 0; m < M; ++m)
            y[l * M + m] = (t - l >= 0) ? spec.ch[m](f, t - l) : cd(0.0, 0.0);
    return y;
}

Eigen::MatrixXcd cov_real_oracle(const ComplexSpectrogram& spec, const MaskTensor& mask,
                                 int f, int L) {
    const int D = spec.channels() * L;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(D, D);
    double denom = 0.0;
    for (int t = 0; t < spec.frames(); ++t) {
        const double w2 = mask.values(f, t).real() * mask.values(f, t).real();
        const auto y = stacked_frame_oracle(spec, f, t, L);
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c) acc(r, c) += w2 * y[r] * std::conj(y[c]);
        denom += w2;
    }
    acc /= denom;
    return 0.5 * (acc + acc.adjoint()).eval();
}

Eigen::MatrixXcd cov_complex_oracle(const ComplexSpectrogram& spec, const MaskTensor& mask,
                                    int f, int L) {
    const int D = spec.channels() * L;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(D, D);
    double denom = 0.0;
    for (int t = 0; t < spec.frames(); ++t) {
        const cd cm = mask.values(f, t);
        const auto y = stacked_frame_oracle(spec, f, t, L);
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c) acc(r, c) += (cm * y[r]) * std::conj(cm * y[c]);
        denom += std::norm(cm);
    }
    acc /= denom;
    return 0.5 * (acc + acc.adjoint()).eval();
}

MaskTensor random_mask(int F, int T, MaskKind kind, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    MaskTensor m;
    m.kind = kind;
    m.values.resize(F, T);
    for (int t = 0; t < T; ++t)
        for (int f = 0; f < F; ++f)
            m.values(f, t) = kind == MaskKind::complex_mask ? cd(gauss(rng), gauss(rng))
                                                            : cd(uni(rng), 0.0);
    return m;
}

// --- criterion implementations ----------------------------------------------

bool criterion_1(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int M = std::vector<int>{2, 4, 8}[trial % 3];
        const auto ss = random_hermitian_pd(M);
        const auto nn = random_hermitian_pd(M);
        const auto a = solve_mvdr(wrap(ss, M, 1, CovarianceRole::speech),
                                  wrap(nn, M, 1, CovarianceRole::noise));
        const auto b = solve_multitap_mvdr(wrap(ss, M, 1, CovarianceRole::speech),
                                           wrap(nn, M, 1, CovarianceRole::noise));
        worst = std::max(worst, (a.weights[0] - b.weights[0]).cwiseAbs().maxCoeff());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream os;
    os << "max |diff| = " << worst << ", " << secs << " s";
    detail = os.str();
    return worst < 1e-12 && secs < 10.0;
}

struct RankOneInstance {
    Eigen::MatrixXcd nn;
    Eigen::VectorXcd v;
    Eigen::VectorXcd w;
};

std::vector<RankOneInstance> rank_one_instances() {
    std::vector<RankOneInstance> out;
    for (int trial = 0; trial < 500; ++trial) {
        const int M = std::vector<int>{2, 3, 4, 6}[trial % 4];
        RankOneInstance inst;
        inst.nn = random_hermitian_pd(M);
        inst.v = random_steering(M, 0);
        const auto sol =
            solve_mvdr(wrap(inst.v * inst.v.adjoint(), M, 1, CovarianceRole::speech),
                       wrap(inst.nn, M, 1, CovarianceRole::noise));
        inst.w = sol.weights[0];
        out.push_back(std::move(inst));
    }
    return out;
}

bool criterion_2(const std::vector<RankOneInstance>& instances, std::string& detail) {
    int tight = 0, loose = 0;
    for (const auto& inst : instances) {
        const double err = std::abs(inst.w.dot(inst.v) - cd(1.0, 0.0));
        if (err < 1e-6) ++tight;
        if (err < 1e-4) ++loose;
    }
    std::ostringstream os;
    os << tight << "/500 within 1e-6, " << loose << "/500 within 1e-4";
    detail = os.str();
    return tight >= 495 && loose == 500;
}

bool criterion_3(const std::vector<RankOneInstance>& instances, std::string& detail) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_violation = 0.0;
    for (const auto& inst : instances) {
        const double w_var = (inst.w.adjoint() * inst.nn * inst.w)(0, 0).real();
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXcd r(inst.v.size());
            for (Eigen::Index d = 0; d < r.size(); ++d) r[d] = cd(gauss(g_rng), gauss(g_rng));
            const Eigen::VectorXcd g =
                inst.w + (r - inst.v * (inst.v.dot(r) / inst.v.squaredNorm()));
            const double g_var = (g.adjoint() * inst.nn * g)(0, 0).real();
            worst_violation = std::max(worst_violation, w_var - g_var);
        }
    }
    std::ostringstream os;
    os << "worst (w variance - competitor variance) = " << worst_violation;
    detail = os.str();
    return worst_violation <= 1e-9;
}

bool criterion_4(std::string& detail) {
    double worst = 0.0;
    const auto spec = random_spec(5, 8, 3, 101);
    const auto rm = random_mask(5, 8, MaskKind::relu, 102);
    const auto cm = random_mask(5, 8, MaskKind::complex_mask, 103);
    for (int L : {1, 2, 3}) {
        const auto stack = stack_taps(spec, L);
        const auto cov_r = covariance_real_mask(stack, rm);
        const auto cov_c = covariance_complex_mask(stack, cm);
        for (int f = 0; f < 5; ++f) {
            worst = std::max(
                worst, (cov_r.matrices[f] - cov_real_oracle(spec, rm, f, L)).cwiseAbs().maxCoeff());
            worst = std::max(
                worst,
                (cov_c.matrices[f] - cov_complex_oracle(spec, cm, f, L)).cwiseAbs().maxCoeff());
        }
    }
    std::ostringstream os;
    os << "max |diff| vs naive oracle = " << worst;
    detail = os.str();
    return worst < 1e-12;
}

SimulatedScene small_scene(uint64_t seed) {
    TestsetPolicy p;
    p.count = 1;
    p.seed = seed;
    p.speakers = 2;
    p.reflection_order = 2;
    p.duration_seconds = 2.0;
    auto g = ArrayGeometry::default_linear_15();
    g.mic_positions.resize(6);
    p.geometry = g;
    const auto cfg = generate_testset(p)[0];
    std::vector<TimeSignal> dry;
    for (int s = 0; s < cfg.sources(); ++s)
        dry.push_back(make_speech_like_source(cfg.duration_seconds, cfg.sample_rate,
                                              cfg.seed * 31ull + s));
    return render_scene(cfg, dry);
}

bool criterion_5(std::string& detail) {
    const auto scene = small_scene(5);
    const auto mix = stft(scene.mixture);
    const auto tgt = stft(scene.target_reverberant);
    const auto mask = complex_mask(tgt, mix, 0);
    const auto rec = apply_mask(mask, mix, 0);

    const double eps = 1e-8 * mix.ch[0].cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (int t = 0; t < mix.frames(); ++t)
        for (int f = 0; f < mix.freq_bins(); ++f)
            if (std::abs(mix.ch[0](f, t)) >= eps)
                worst = std::max(worst, std::abs(rec.ch[0](f, t) - tgt.ch[0](f, t)));

    const auto rec_time = istft(rec);
    const auto ref = scene.target_reverberant.channel(0);
    const double score = si_snr(match_length(rec_time, ref.length()), ref);
    std::ostringstream os;
    os << "max bin error = " << worst << ", time-domain Si-SNR = " << score << " dB";
    detail = os.str();
    return worst < 1e-12 && score > 60.0;
}

bool criterion_6(std::string& detail) {
    const StftConfig cfg;
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const auto x = random_signal(16000, 1000 + seed);
        const auto y = istft(stft(x, cfg));
        const auto a = x.samples[0].segment(cfg.window_len, 16000 - 2 * cfg.window_len);
        const auto b = y.samples[0].segment(cfg.window_len, 16000 - 2 * cfg.window_len);
        worst = std::max(worst, (a - b).norm() / a.norm());
    }
    std::ostringstream os;
    os << "worst interior relative error = " << worst;
    detail = os.str();
    return worst < 1e-6;
}

bool criterion_7(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    TestsetPolicy p;
    p.count = 20;
    p.seed = 7;
    p.speakers = 2;
    p.reflection_order = 6;
    p.duration_seconds = 4.0;

    const auto configs = generate_testset(p);
    std::vector<double> mix_scores, mask_scores, mvdr_scores, mt_scores;
    for (const auto& cfg : configs) {
        std::vector<TimeSignal> dry;
        for (int s = 0; s < cfg.sources(); ++s)
            dry.push_back(make_speech_like_source(cfg.duration_seconds, cfg.sample_rate,
                                                  cfg.seed * 31ull + s));
        const auto scene = render_scene(cfg, dry);
        const auto ref = scene.target_reverberant.channel(0);
        auto score = [&](const TimeSignal& est) {
            return si_snr(match_length(est, ref.length()), ref);
        };
        mix_scores.push_back(score(scene.mixture.channel(0)));

        EnhanceOptions masking;
        masking.beamform = false;
        mask_scores.push_back(score(enhance_scene(scene, masking)));

        EnhanceOptions mvdr;
        mvdr.taps = 1;
        mvdr_scores.push_back(score(enhance_scene(scene, mvdr)));

        EnhanceOptions mt;
        mt.taps = 3;
        mt_scores.push_back(score(enhance_scene(scene, mt)));
    }
    auto mean = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / v.size();
    };
    const double mix_m = mean(mix_scores), mask_m = mean(mask_scores);
    const double mvdr_m = mean(mvdr_scores), mt_m = mean(mt_scores);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const bool a = mvdr_m - mix_m > 0.0;
    const bool b = mt_m >= mvdr_m;
    const bool c = mt_m >= mask_m - 1.0;
    std::ostringstream os;
    os << "mean Si-SNR dB: mixture " << mix_m << ", CM masking " << mask_m << ", CM MVDR "
       << mvdr_m << ", multi-tap (L=3) " << mt_m << "; (a) " << (a ? "ok" : "FAIL")
       << " (b) " << (b ? "ok" : "FAIL") << " (c) " << (c ? "ok" : "FAIL") << "; " << secs
       << " s";
    detail = os.str();
    return a && b && c && secs < 300.0;
}

bool criterion_8(std::string& detail) {
    std::uniform_real_distribution<double> uni(0.5, 2.5);
    double worst_delay = 0.0, worst_amp = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        SceneConfig cfg;
        cfg.room_dims = {6.0, 5.0, 3.0};
        cfg.reflection_order = 0;
        cfg.mic_positions = {{uni(g_rng), uni(g_rng), uni(g_rng)}};
        cfg.source_positions = {{uni(g_rng) + 2.0, uni(g_rng) + 1.0, uni(g_rng)}};
        const double d = (cfg.source_positions[0] - cfg.mic_positions[0]).norm();
        const auto rir = simulate_rir(cfg, 0, 0);
        Eigen::Index peak;
        rir.samples[0].cwiseAbs().maxCoeff(&peak);
        worst_delay = std::max(
            worst_delay,
            std::abs(static_cast<double>(peak) - cfg.sample_rate * d / cfg.sound_speed));
        worst_amp = std::max(
            worst_amp,
            std::abs(rir.samples[0].sum() * 4.0 * M_PI * d - 1.0));
    }
    std::ostringstream os;
    os << "worst delay error = " << worst_delay << " samples, worst amplitude error = "
       << worst_amp * 100.0 << "%";
    detail = os.str();
    return worst_delay <= 1.0 && worst_amp <= 0.02;
}

bool criterion_9(std::string& detail) {
    const auto s = random_signal(4000, 9001);
    const auto e = random_signal(4000, 9002);
    const double base = si_snr(e, s);
    double worst = 0.0;
    for (double c : {0.5, 2.0, 100.0}) {
        TimeSignal scaled({c * e.samples[0]}, 16000.0);
        worst = std::max(worst, std::abs(si_snr(scaled, s) - base));
    }
    Eigen::VectorXd ref(4);
    ref << 1, 0, -1, 0;
    Eigen::VectorXd est(4);
    est << 1, 1, -1, -1;
    const double hand =
        si_snr(TimeSignal({est}, 16000.0), TimeSignal({ref}, 16000.0), false);
    std::ostringstream os;
    os << "scale deviation = " << worst << " dB, hand case = " << hand << " dB";
    detail = os.str();
    return worst < 1e-9 && hand == 0.0;
}

bool criterion_10(std::string& detail) {
    auto run = [] {
        TestsetPolicy p;
        p.count = 3;
        p.seed = 11;
        p.speakers = 2;
        p.reflection_order = 2;
        p.duration_seconds = 1.5;
        auto g = ArrayGeometry::default_linear_15();
        g.mic_positions.resize(4);
        p.geometry = g;
        std::ostringstream report;
        for (const auto& cfg : generate_testset(p)) {
            std::vector<TimeSignal> dry;
            for (int s = 0; s < cfg.sources(); ++s)
                dry.push_back(make_speech_like_source(cfg.duration_seconds, cfg.sample_rate,
                                                      cfg.seed * 31ull + s));
            const auto scene = render_scene(cfg, dry);
            EnhanceOptions opt;
            const auto enhanced = enhance_scene(scene, opt);
            const auto ref = scene.target_reverberant.channel(0);
            report.precision(17);
            report << si_snr(match_length(enhanced, ref.length()), ref) << "\n";
        }
        return report.str();
    };
    const std::string a = run(), b = run();
    detail = a == b ? "two seeded runs byte-identical" : "runs differ";
    return a == b;
}

}  // namespace

int main() {
    int failures = 0;
    auto check = [&](int n, const char* name, const std::function<bool(std::string&)>& fn) {
        std::string detail;
        bool ok = false;
        try {
            ok = fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << n << " (" << name
                  << "): " << detail << "\n";
        if (!ok) ++failures;
    };

    const auto instances = rank_one_instances();
    check(1, "L=1 reduction identity", criterion_1);
    check(2, "distortionless constraint",
          [&](std::string& d) { return criterion_2(instances, d); });
    check(3, "minimum-variance optimality",
          [&](std::string& d) { return criterion_3(instances, d); });
    check(4, "covariance oracle equivalence", criterion_4);
    check(5, "complex-mask exactness", criterion_5);
    check(6, "stft round-trip", criterion_6);
    check(7, "trend reproduction", criterion_7);
    check(8, "rir geometry", criterion_8);
    check(9, "si-snr properties", criterion_9);
    check(10, "determinism", criterion_10);

    std::cout << (failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(failures) + " CRITERIA FAILED")
              << "\n";
    return failures == 0 ? 0 : 1;
}
