#pragma once

#include <stdexcept>

#include "stbf/signal.hpp"
#include "stbf/tensor_io.hpp"

namespace stbf {

enum class MaskKind { sigmoid, relu, complex_mask };

/// T x F mask shared across channels. Real kinds keep a zero imaginary
/// part; stored F x T to match ComplexSpectrogram layout.
struct MaskTensor {
    Eigen::MatrixXcd values;  // F x T
    MaskKind kind = MaskKind::sigmoid;

    int freq_bins() const { return static_cast<int>(values.rows()); }
    int frames() const { return static_cast<int>(values.cols()); }
    bool is_real() const { return kind != MaskKind::complex_mask; }
};

namespace detail {

inline void check_same_shape(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
    if (a.freq_bins() != b.freq_bins() || a.frames() != b.frames())
        throw std::invalid_argument("masks: spectrogram dimensions differ");
}

inline void check_ref(const ComplexSpectrogram& s, int ref_channel) {
    if (ref_channel < 0 || ref_channel >= s.channels())
        throw std::out_of_range("masks: reference channel out of range");
}

/// Silence guard, relative to the loudest bin of the utterance.
inline double eps_floor(const Eigen::MatrixXcd& ref) {
    return 1e-8 * ref.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Magnitude ratio |S|/|Y| on the reference channel; non-negative and
/// deliberately unclipped above 1.
inline MaskTensor relu_mask(const ComplexSpectrogram& target,
                            const ComplexSpectrogram& mixture, int ref_channel = 0) {
    detail::check_same_shape(target, mixture);
    detail::check_ref(target, ref_channel);
    detail::check_ref(mixture, ref_channel);
    const auto& S = target.ch[ref_channel];
    const auto& Y = mixture.ch[ref_channel];
    const double eps = detail::eps_floor(Y);
    MaskTensor m;
    m.kind = MaskKind::relu;
    m.values.resize(S.rows(), S.cols());
    for (Eigen::Index c = 0; c < S.cols(); ++c)
        for (Eigen::Index r = 0; r < S.rows(); ++r) {
            const double ym = std::abs(Y(r, c));
            m.values(r, c) = ym < eps ? 0.0 : std::abs(S(r, c)) / ym;
        }
    return m;
}

/// Ideal ratio mask |S|/(|S|+|N|), in [0,1].
inline MaskTensor sigmoid_mask(const ComplexSpectrogram& target,
                               const ComplexSpectrogram& noise, int ref_channel = 0) {
    detail::check_same_shape(target, noise);
    detail::check_ref(target, ref_channel);
    detail::check_ref(noise, ref_channel);
    const auto& S = target.ch[ref_channel];
    const auto& N = noise.ch[ref_channel];
    const double eps = 1e-8 * std::max(S.cwiseAbs().maxCoeff(), N.cwiseAbs().maxCoeff());
    MaskTensor m;
    m.kind = MaskKind::sigmoid;
    m.values.resize(S.rows(), S.cols());
    for (Eigen::Index c = 0; c < S.cols(); ++c)
        for (Eigen::Index r = 0; r < S.rows(); ++r) {
            const double sm = std::abs(S(r, c)), nm = std::abs(N(r, c));
            m.values(r, c) = (sm < eps && nm < eps) ? 0.0 : sm / (sm + nm);
        }
    return m;
}

/// Complex ratio S/Y on the reference channel, so mask * Y == S exactly
/// wherever |Y| clears the silence guard. Uncompressed.
inline MaskTensor complex_mask(const ComplexSpectrogram& target,
                               const ComplexSpectrogram& mixture, int ref_channel = 0) {
    detail::check_same_shape(target, mixture);
    detail::check_ref(target, ref_channel);
    detail::check_ref(mixture, ref_channel);
    const auto& S = target.ch[ref_channel];
    const auto& Y = mixture.ch[ref_channel];
    const double eps = detail::eps_floor(Y);
    MaskTensor m;
    m.kind = MaskKind::complex_mask;
    m.values.resize(S.rows(), S.cols());
    for (Eigen::Index c = 0; c < S.cols(); ++c)
        for (Eigen::Index r = 0; r < S.rows(); ++r)
            m.values(r, c) = std::abs(Y(r, c)) < eps ? cd(0.0, 0.0) : S(r, c) / Y(r, c);
    return m;
}

/// Complement mask for the noise side: real kinds are 1 - v clamped at 0,
/// the complex kind is plain 1 - v.
inline MaskTensor complement_noise_mask(const MaskTensor& speech) {
    MaskTensor m;
    m.kind = speech.kind;
    m.values.resize(speech.values.rows(), speech.values.cols());
    for (Eigen::Index c = 0; c < speech.values.cols(); ++c)
        for (Eigen::Index r = 0; r < speech.values.rows(); ++r) {
            if (speech.is_real()) {
                const double v = 1.0 - speech.values(r, c).real();
                m.values(r, c) = v < 0.0 ? 0.0 : v;
            } else {
                m.values(r, c) = cd(1.0, 0.0) - speech.values(r, c);
            }
        }
    return m;
}

/// Applies a mask to one channel of a spectrogram.
inline ComplexSpectrogram apply_mask(const MaskTensor& mask,
                                     const ComplexSpectrogram& spec, int channel = 0) {
    detail::check_ref(spec, channel);
    if (mask.freq_bins() != spec.freq_bins() || mask.frames() != spec.frames())
        throw std::invalid_argument("apply_mask: dimension mismatch");
    ComplexSpectrogram out = spec.channel(channel);
    out.ch[0] = mask.values.cwiseProduct(out.ch[0]);
    return out;
}

/// Mask <-> shared binary tensor container (T x F row-major).
inline tensor_io::Tensor mask_to_tensor(const MaskTensor& m) {
    tensor_io::Tensor t;
    t.is_complex = !m.is_real();
    t.dims = {static_cast<uint64_t>(m.frames()), static_cast<uint64_t>(m.freq_bins())};
    t.data.reserve(static_cast<size_t>(m.frames()) * m.freq_bins() * (t.is_complex ? 2 : 1));
    for (int tt = 0; tt < m.frames(); ++tt)
        for (int f = 0; f < m.freq_bins(); ++f) {
            t.data.push_back(m.values(f, tt).real());
            if (t.is_complex) t.data.push_back(m.values(f, tt).imag());
        }
    return t;
}

inline MaskTensor mask_from_tensor(const tensor_io::Tensor& t, MaskKind kind) {
    if (t.dims.size() != 2) throw std::invalid_argument("mask_from_tensor: need 2-D tensor");
    const bool want_complex = kind == MaskKind::complex_mask;
    if (t.is_complex != want_complex)
        throw std::invalid_argument("mask_from_tensor: complex flag does not match kind");
    MaskTensor m;
    m.kind = kind;
    const int T = static_cast<int>(t.dims[0]), F = static_cast<int>(t.dims[1]);
    m.values.resize(F, T);
    size_t i = 0;
    for (int tt = 0; tt < T; ++tt)
        for (int f = 0; f < F; ++f) {
            const double re = t.data[i++];
            const double im = t.is_complex ? t.data[i++] : 0.0;
            m.values(f, tt) = cd(re, im);
        }
    return m;
}

}  // namespace stbf
