#pragma once

#include <stdexcept>
#include <vector>

#include "stbf/masks.hpp"
#include "stbf/signal.hpp"
#include "stbf/tensor_io.hpp"

namespace stbf {

enum class CovarianceRole { speech, noise };

/// Per-frequency Hermitian D x D covariance matrices, D = M * L.
struct CovarianceStack {
    std::vector<Eigen::MatrixXcd> matrices;  // F matrices, D x D
    int taps = 1;
    int channels = 1;
    CovarianceRole role = CovarianceRole::speech;

    int freq_bins() const { return static_cast<int>(matrices.size()); }
    int dim() const { return channels * taps; }
};

/// L-tap stacked spectrogram: per frequency a D x T matrix whose column t
/// concatenates frames t, t-1, ..., t-L+1 (zeros before t = 0).
struct TapStack {
    std::vector<Eigen::MatrixXcd> per_freq;  // F matrices, D x T
    int taps = 1;
    int channels = 1;

    int freq_bins() const { return static_cast<int>(per_freq.size()); }
    int frames() const { return per_freq.empty() ? 0 : static_cast<int>(per_freq[0].cols()); }
    int dim() const { return channels * taps; }
};

inline TapStack stack_taps(const ComplexSpectrogram& spec, int taps) {
    if (taps < 1) throw std::invalid_argument("stack_taps: taps must be >= 1");
    spec.validate();
    const int M = spec.channels(), F = spec.freq_bins(), T = spec.frames();
    TapStack st;
    st.taps = taps;
    st.channels = M;
    st.per_freq.assign(F, Eigen::MatrixXcd::Zero(M * taps, T));
    for (int f = 0; f < F; ++f) {
        auto& X = st.per_freq[f];
        for (int t = 0; t < T; ++t)
            for (int l = 0; l < taps; ++l) {
                const int src = t - l;
                if (src < 0) continue;
                for (int m = 0; m < M; ++m) X(l * M + m, t) = spec.ch[m](f, src);
            }
    }
    return st;
}

namespace detail {

inline void check_mask_shape(const MaskTensor& mask, int F, int T) {
    if (mask.freq_bins() != F || mask.frames() != T)
        throw std::invalid_argument("covariance: mask/spectrogram dimension mismatch");
}

constexpr double kDenomEps = 1e-10;

inline void symmetrize(Eigen::MatrixXcd& phi) {
    phi = 0.5 * (phi + phi.adjoint()).eval();
}

}  // namespace detail

/// Real-mask weighted covariance: Phi(f) = sum_t RM^2 y y^H / sum_t RM^2.
inline CovarianceStack covariance_real_mask(const TapStack& stack, const MaskTensor& mask,
                                            CovarianceRole role = CovarianceRole::speech) {
    if (!mask.is_real())
        throw std::invalid_argument("covariance_real_mask: mask must be real-valued");
    const int F = stack.freq_bins(), T = stack.frames(), D = stack.dim();
    detail::check_mask_shape(mask, F, T);
    CovarianceStack cov;
    cov.taps = stack.taps;
    cov.channels = stack.channels;
    cov.role = role;
    cov.matrices.assign(F, Eigen::MatrixXcd::Zero(D, D));
    for (int f = 0; f < F; ++f) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(D, D);
        double denom = 0.0;
        for (int t = 0; t < T; ++t) {
            const double w = mask.values(f, t).real();
            const double w2 = w * w;
            if (w2 == 0.0) continue;
            const auto y = stack.per_freq[f].col(t);
            acc.noalias() += w2 * (y * y.adjoint());
            denom += w2;
        }
        if (denom >= detail::kDenomEps) {
            cov.matrices[f] = acc / denom;
            detail::symmetrize(cov.matrices[f]);
        }
    }
    return cov;
}

inline CovarianceStack covariance_real_mask(const ComplexSpectrogram& spec,
                                            const MaskTensor& mask,
                                            CovarianceRole role = CovarianceRole::speech) {
    return covariance_real_mask(stack_taps(spec, 1), mask, role);
}

/// Complex-mask weighted covariance with |CM|^2 normalization:
/// Phi(f) = sum_t (CM y)(CM y)^H / sum_t |CM|^2.
/// The frame-t mask is broadcast across tap blocks by default;
/// `shift_mask_per_tap` instead applies CM(t-l) to tap block l.
inline CovarianceStack covariance_complex_mask(const TapStack& stack, const MaskTensor& mask,
                                               CovarianceRole role = CovarianceRole::speech,
                                               bool shift_mask_per_tap = false) {
    if (mask.is_real())
        throw std::invalid_argument("covariance_complex_mask: mask must be complex");
    const int F = stack.freq_bins(), T = stack.frames(), D = stack.dim();
    const int M = stack.channels, L = stack.taps;
    detail::check_mask_shape(mask, F, T);
    CovarianceStack cov;
    cov.taps = L;
    cov.channels = M;
    cov.role = role;
    cov.matrices.assign(F, Eigen::MatrixXcd::Zero(D, D));
    Eigen::VectorXcd masked(D);
    for (int f = 0; f < F; ++f) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(D, D);
        double denom = 0.0;
        for (int t = 0; t < T; ++t) {
            const cd cm = mask.values(f, t);
            if (shift_mask_per_tap) {
                for (int l = 0; l < L; ++l) {
                    const cd cml = (t - l >= 0) ? mask.values(f, t - l) : cd(0.0, 0.0);
                    masked.segment(l * M, M) =
                        cml * stack.per_freq[f].col(t).segment(l * M, M);
                }
            } else {
                masked = cm * stack.per_freq[f].col(t);
            }
            acc.noalias() += masked * masked.adjoint();
            denom += std::norm(cm);
        }
        if (denom >= detail::kDenomEps) {
            cov.matrices[f] = acc / denom;
            detail::symmetrize(cov.matrices[f]);
        }
    }
    return cov;
}

inline CovarianceStack covariance_complex_mask(const ComplexSpectrogram& spec,
                                               const MaskTensor& mask,
                                               CovarianceRole role = CovarianceRole::speech) {
    return covariance_complex_mask(stack_taps(spec, 1), mask, role);
}

/// Covariance stack <-> shared binary tensor container (F x D x D row-major).
inline tensor_io::Tensor covariance_to_tensor(const CovarianceStack& cov) {
    tensor_io::Tensor t;
    t.is_complex = true;
    const int F = cov.freq_bins(), D = cov.dim();
    t.dims = {static_cast<uint64_t>(F), static_cast<uint64_t>(D), static_cast<uint64_t>(D)};
    t.data.reserve(static_cast<size_t>(F) * D * D * 2);
    for (int f = 0; f < F; ++f)
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c) {
                t.data.push_back(cov.matrices[f](r, c).real());
                t.data.push_back(cov.matrices[f](r, c).imag());
            }
    return t;
}

}  // namespace stbf
