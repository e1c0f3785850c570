#pragma once

#include <stdexcept>
#include <vector>

#include "stbf/covariance.hpp"
#include "stbf/signal.hpp"
#include "stbf/tensor_io.hpp"

namespace stbf {

/// Per-frequency complex weight vectors of length D = M * L, plus the
/// one-hot reference selector (zero-extended across taps for L > 1).
struct BeamformerWeights {
    std::vector<Eigen::VectorXcd> weights;  // F vectors, length D
    int ref_channel = 0;
    int taps = 1;
    int channels = 1;
    std::vector<int> fallback_bins;  // frequencies that got the pass-through selector

    int freq_bins() const { return static_cast<int>(weights.size()); }
    int dim() const { return channels * taps; }

    Eigen::VectorXcd selector() const {
        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(dim());
        u[ref_channel] = cd(1.0, 0.0);
        return u;
    }
};

struct MvdrOptions {
    double diagonal_loading = 1e-6;  // delta, scaled by trace/D
    double condition_limit = 1e12;   // eigenvalue ratio before pseudo-inverse kicks in
    double trace_eps = 1e-12;        // |trace| below this -> pass-through fallback
};

namespace detail {

/// Hermitian inverse via eigendecomposition, switching to a thresholded
/// pseudo-inverse when the matrix is numerically singular.
inline Eigen::MatrixXcd hermitian_inverse(const Eigen::MatrixXcd& phi,
                                          double condition_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(phi);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("beamformer: eigendecomposition failed");
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double lam_max = ev.cwiseAbs().maxCoeff();
    const double floor = lam_max / condition_limit;
    Eigen::VectorXd inv_ev(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        inv_ev[i] = ev[i] > floor ? 1.0 / ev[i] : 0.0;
    return es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// MVDR weights via the reference-channel solution
///   w(f) = PhiNN^-1 PhiSS / Trace(PhiNN^-1 PhiSS) * u
/// with diagonal loading on PhiNN before inversion. Works for any tap
/// count; frequencies without usable statistics fall back to the
/// pass-through selector.
inline BeamformerWeights solve_multitap_mvdr(const CovarianceStack& phi_ss,
                                             const CovarianceStack& phi_nn,
                                             int ref_channel = 0,
                                             const MvdrOptions& opt = {}) {
    if (phi_ss.freq_bins() != phi_nn.freq_bins() || phi_ss.taps != phi_nn.taps ||
        phi_ss.channels != phi_nn.channels)
        throw std::invalid_argument("solve_mvdr: covariance stacks disagree in shape");
    if (ref_channel < 0 || ref_channel >= phi_ss.channels)
        throw std::out_of_range("solve_mvdr: reference channel out of range");

    const int F = phi_ss.freq_bins(), D = phi_ss.dim();
    BeamformerWeights w;
    w.ref_channel = ref_channel;
    w.taps = phi_ss.taps;
    w.channels = phi_ss.channels;
    w.weights.resize(F);

    for (int f = 0; f < F; ++f) {
        const Eigen::MatrixXcd& ss = phi_ss.matrices[f];
        Eigen::MatrixXcd nn = phi_nn.matrices[f];
        if (!ss.allFinite() || !nn.allFinite())
            throw std::invalid_argument("solve_mvdr: non-finite covariance input");

        const double tr_nn = nn.trace().real();
        nn.diagonal().array() += opt.diagonal_loading * (tr_nn / D);

        bool fallback = tr_nn <= 0.0;
        if (!fallback) {
            const Eigen::MatrixXcd num = detail::hermitian_inverse(nn, opt.condition_limit) * ss;
            const cd tr = num.trace();
            if (std::abs(tr) < opt.trace_eps) {
                fallback = true;
            } else {
                w.weights[f] = num.col(ref_channel) / tr;
            }
        }
        if (fallback) {
            w.weights[f] = w.selector();
            w.fallback_bins.push_back(f);
        }
    }
    return w;
}

/// Single-tap MVDR (L = 1 covariances).
inline BeamformerWeights solve_mvdr(const CovarianceStack& phi_ss,
                                    const CovarianceStack& phi_nn, int ref_channel = 0,
                                    const MvdrOptions& opt = {}) {
    if (phi_ss.taps != 1 || phi_nn.taps != 1)
        throw std::invalid_argument("solve_mvdr: expects single-tap covariances");
    return solve_multitap_mvdr(phi_ss, phi_nn, ref_channel, opt);
}

/// Applies weights to the stacked mixture: S_hat(t,f) = w^H(f) ybar(t,f).
/// Returns a single-channel spectrogram.
inline ComplexSpectrogram apply(const BeamformerWeights& w, const ComplexSpectrogram& mixture) {
    mixture.validate();
    if (w.channels != mixture.channels() || w.freq_bins() != mixture.freq_bins())
        throw std::invalid_argument("apply: weights/mixture dimension mismatch");
    const TapStack stack = stack_taps(mixture, w.taps);
    const int F = mixture.freq_bins(), T = mixture.frames();
    ComplexSpectrogram out;
    out.config = mixture.config;
    out.sample_rate = mixture.sample_rate;
    out.analysis_length = mixture.analysis_length;
    out.ch.assign(1, Eigen::MatrixXcd(F, T));
    for (int f = 0; f < F; ++f)
        out.ch[0].row(f) = w.weights[f].adjoint() * stack.per_freq[f];
    return out;
}

/// Weights <-> shared binary tensor container (F x D row-major).
inline tensor_io::Tensor weights_to_tensor(const BeamformerWeights& w) {
    tensor_io::Tensor t;
    t.is_complex = true;
    const int F = w.freq_bins(), D = w.dim();
    t.dims = {static_cast<uint64_t>(F), static_cast<uint64_t>(D)};
    t.data.reserve(static_cast<size_t>(F) * D * 2);
    for (int f = 0; f < F; ++f)
        for (int d = 0; d < D; ++d) {
            t.data.push_back(w.weights[f][d].real());
            t.data.push_back(w.weights[f][d].imag());
        }
    return t;
}

}  // namespace stbf
