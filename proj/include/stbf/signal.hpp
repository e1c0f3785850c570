#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

namespace stbf {

using cd = std::complex<double>;

/// Multichannel sampled waveform. Channel-major storage, all channels the
/// same length.
struct TimeSignal {
    std::vector<Eigen::VectorXd> samples;  // one vector per channel
    double sample_rate = 16000.0;

    TimeSignal() = default;
    TimeSignal(std::vector<Eigen::VectorXd> ch, double fs)
        : samples(std::move(ch)), sample_rate(fs) {
        validate();
    }

    int channels() const { return static_cast<int>(samples.size()); }
    Eigen::Index length() const { return samples.empty() ? 0 : samples[0].size(); }

    void validate() const {
        if (sample_rate <= 0.0)
            throw std::invalid_argument("TimeSignal: sample_rate must be positive");
        for (const auto& ch : samples)
            if (ch.size() != length())
                throw std::invalid_argument("TimeSignal: channels differ in length");
    }

    TimeSignal channel(int m) const {
        if (m < 0 || m >= channels())
            throw std::out_of_range("TimeSignal: channel index out of range");
        return TimeSignal({samples[m]}, sample_rate);
    }
};

struct StftConfig {
    int fft_size = 512;
    int window_len = 512;  // 32 ms at 16 kHz
    int hop = 256;         // 50% overlap

    void validate() const {
        if (fft_size < 2 || window_len < 2 || hop < 1)
            throw std::invalid_argument("StftConfig: sizes must be positive");
        if (window_len > fft_size)
            throw std::invalid_argument("StftConfig: window longer than fft_size");
        if (window_len % hop != 0)
            throw std::invalid_argument("StftConfig: hop must divide window_len");
    }

    int freq_bins() const { return fft_size / 2 + 1; }

    /// Periodic Hann analysis window.
    Eigen::VectorXd window() const {
        Eigen::VectorXd w(window_len);
        for (int n = 0; n < window_len; ++n)
            w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / window_len);
        return w;
    }
};

/// T x F x M complex STFT tensor. Stored per channel as F x T matrices
/// (rows = frequency bins, cols = frames). Only non-negative frequencies
/// are kept; synthesis restores the rest by conjugate symmetry.
struct ComplexSpectrogram {
    std::vector<Eigen::MatrixXcd> ch;  // M matrices, each F x T
    StftConfig config;
    double sample_rate = 16000.0;
    Eigen::Index analysis_length = 0;  // original signal length, for istft

    int channels() const { return static_cast<int>(ch.size()); }
    int freq_bins() const { return ch.empty() ? 0 : static_cast<int>(ch[0].rows()); }
    int frames() const { return ch.empty() ? 0 : static_cast<int>(ch[0].cols()); }

    void validate() const {
        if (ch.empty()) throw std::invalid_argument("ComplexSpectrogram: no channels");
        if (freq_bins() != config.freq_bins())
            throw std::invalid_argument("ComplexSpectrogram: freq bin count mismatch");
        for (const auto& m : ch)
            if (m.rows() != freq_bins() || m.cols() != frames())
                throw std::invalid_argument("ComplexSpectrogram: ragged channels");
    }

    ComplexSpectrogram channel(int m) const {
        if (m < 0 || m >= channels())
            throw std::out_of_range("ComplexSpectrogram: channel out of range");
        ComplexSpectrogram out;
        out.ch = {ch[m]};
        out.config = config;
        out.sample_rate = sample_rate;
        out.analysis_length = analysis_length;
        return out;
    }
};

namespace detail {

/// Reflection padding of `pad` samples at both ends.
inline Eigen::VectorXd reflect_pad(const Eigen::VectorXd& x, int pad) {
    const auto n = x.size();
    if (n < 2)
        throw std::invalid_argument("stft: signal too short for reflection padding");
    Eigen::VectorXd out(n + 2 * pad);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        Eigen::Index src = i - pad;
        // reflect off both edges until inside [0, n)
        while (src < 0 || src >= n) {
            if (src < 0) src = -src;
            if (src >= n) src = 2 * (n - 1) - src;
        }
        out[i] = x[src];
    }
    return out;
}

}  // namespace detail

/// Short-time Fourier transform. Frames are centered at t*hop via
/// reflection padding of window_len/2 on both sides.
inline ComplexSpectrogram stft(const TimeSignal& sig, const StftConfig& cfg = {}) {
    cfg.validate();
    sig.validate();
    if (sig.channels() == 0 || sig.length() == 0)
        throw std::invalid_argument("stft: empty signal");

    const int F = cfg.freq_bins();
    const int pad = cfg.window_len / 2;
    const Eigen::Index len = sig.length();
    const int T = static_cast<int>(len / cfg.hop) + 1;
    const Eigen::VectorXd win = cfg.window();

    ComplexSpectrogram out;
    out.config = cfg;
    out.sample_rate = sig.sample_rate;
    out.analysis_length = len;
    out.ch.resize(sig.channels());

    Eigen::FFT<double> fft;
    std::vector<cd> buf(cfg.fft_size), spec(cfg.fft_size);
    for (int m = 0; m < sig.channels(); ++m) {
        const Eigen::VectorXd padded = detail::reflect_pad(sig.samples[m], pad);
        Eigen::MatrixXcd S(F, T);
        for (int t = 0; t < T; ++t) {
            const Eigen::Index start = static_cast<Eigen::Index>(t) * cfg.hop;
            for (int n = 0; n < cfg.fft_size; ++n) {
                buf[n] = (n < cfg.window_len)
                             ? cd(padded[start + n] * win[n], 0.0)
                             : cd(0.0, 0.0);
            }
            fft.fwd(spec, buf);
            for (int k = 0; k < F; ++k) S(k, t) = spec[k];
        }
        out.ch[m] = std::move(S);
    }
    return out;
}

/// Inverse STFT by windowed overlap-add with squared-window normalization.
/// `length` overrides the stored analysis length when nonzero.
inline TimeSignal istft(const ComplexSpectrogram& spec, Eigen::Index length = 0) {
    spec.validate();
    const StftConfig& cfg = spec.config;
    const int T = spec.frames();
    const int pad = cfg.window_len / 2;
    const Eigen::Index out_len = length > 0 ? length : spec.analysis_length;
    if (out_len <= 0)
        throw std::invalid_argument("istft: output length unknown");

    const Eigen::VectorXd win = cfg.window();
    const Eigen::Index padded_len =
        static_cast<Eigen::Index>(T - 1) * cfg.hop + cfg.window_len;

    Eigen::FFT<double> fft;
    std::vector<cd> spec_full(cfg.fft_size), frame(cfg.fft_size);

    TimeSignal out;
    out.sample_rate = spec.sample_rate;
    out.samples.reserve(spec.channels());
    for (int m = 0; m < spec.channels(); ++m) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(padded_len);
        Eigen::VectorXd norm = Eigen::VectorXd::Zero(padded_len);
        for (int t = 0; t < T; ++t) {
            for (int k = 0; k < cfg.freq_bins(); ++k) spec_full[k] = spec.ch[m](k, t);
            for (int k = cfg.freq_bins(); k < cfg.fft_size; ++k)
                spec_full[k] = std::conj(spec_full[cfg.fft_size - k]);
            fft.inv(frame, spec_full);
            const Eigen::Index start = static_cast<Eigen::Index>(t) * cfg.hop;
            for (int n = 0; n < cfg.window_len; ++n) {
                acc[start + n] += frame[n].real() * win[n];
                norm[start + n] += win[n] * win[n];
            }
        }
        Eigen::VectorXd y(out_len);
        for (Eigen::Index i = 0; i < out_len; ++i) {
            const Eigen::Index p = i + pad;
            if (p >= padded_len || norm[p] <= 0.0)
                throw std::runtime_error(
                    "istft: zero overlap-add normalization (non-COLA config)");
            y[i] = acc[p] / norm[p];
        }
        out.samples.push_back(std::move(y));
    }
    return out;
}

}  // namespace stbf
