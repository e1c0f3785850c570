#pragma once

#include <stdexcept>
#include <string>

#include "stbf/beamformer.hpp"
#include "stbf/covariance.hpp"
#include "stbf/masks.hpp"
#include "stbf/metrics.hpp"
#include "stbf/room.hpp"
#include "stbf/signal.hpp"

namespace stbf {

enum class NoiseMaskPolicy {
    oracle,      // mask computed from the known noise component
    complement,  // 1 - speech mask
};

struct EnhanceOptions {
    MaskKind mask = MaskKind::complex_mask;
    NoiseMaskPolicy noise_mask = NoiseMaskPolicy::oracle;
    int taps = 3;
    int ref_channel = 0;
    double diagonal_loading = 1e-6;
    double chunk_seconds = 0.0;  // 0 = full-utterance statistics
    bool beamform = true;        // false = plain masking on the reference channel
    bool shift_mask_per_tap = false;
    StftConfig stft;
};

namespace detail {

inline ComplexSpectrogram slice_frames(const ComplexSpectrogram& spec, int t0, int t1) {
    ComplexSpectrogram out;
    out.config = spec.config;
    out.sample_rate = spec.sample_rate;
    out.analysis_length = spec.analysis_length;
    for (const auto& m : spec.ch) out.ch.push_back(m.middleCols(t0, t1 - t0));
    return out;
}

inline MaskTensor slice_mask(const MaskTensor& m, int t0, int t1) {
    MaskTensor out;
    out.kind = m.kind;
    out.values = m.values.middleCols(t0, t1 - t0);
    return out;
}

}  // namespace detail

/// Oracle speech/noise masks from known scene components.
struct OracleMasks {
    MaskTensor speech;
    MaskTensor noise;
};

inline OracleMasks oracle_masks(const ComplexSpectrogram& target,
                                const ComplexSpectrogram& noise,
                                const ComplexSpectrogram& mixture,
                                const EnhanceOptions& opt) {
    OracleMasks out;
    switch (opt.mask) {
        case MaskKind::relu:
            out.speech = relu_mask(target, mixture, opt.ref_channel);
            break;
        case MaskKind::sigmoid:
            out.speech = sigmoid_mask(target, noise, opt.ref_channel);
            break;
        case MaskKind::complex_mask:
            out.speech = complex_mask(target, mixture, opt.ref_channel);
            break;
    }
    if (opt.noise_mask == NoiseMaskPolicy::complement) {
        out.noise = complement_noise_mask(out.speech);
    } else {
        switch (opt.mask) {
            case MaskKind::relu:
                out.noise = relu_mask(noise, mixture, opt.ref_channel);
                break;
            case MaskKind::sigmoid:
                out.noise = sigmoid_mask(noise, target, opt.ref_channel);
                break;
            case MaskKind::complex_mask:
                out.noise = complex_mask(noise, mixture, opt.ref_channel);
                break;
        }
    }
    return out;
}

inline CovarianceStack mask_covariance(const TapStack& stack, const MaskTensor& mask,
                                       CovarianceRole role, const EnhanceOptions& opt) {
    if (mask.is_real()) return covariance_real_mask(stack, mask, role);
    return covariance_complex_mask(stack, mask, role, opt.shift_mask_per_tap);
}

/// Full mask -> covariance -> weights -> apply chain on spectrograms.
/// With chunked statistics the weights are re-estimated per chunk.
inline ComplexSpectrogram enhance_spectrogram(const ComplexSpectrogram& mixture,
                                              const MaskTensor& speech_mask,
                                              const MaskTensor& noise_mask,
                                              const EnhanceOptions& opt) {
    if (!opt.beamform) return apply_mask(speech_mask, mixture, opt.ref_channel);

    MvdrOptions mvdr;
    mvdr.diagonal_loading = opt.diagonal_loading;

    const int T = mixture.frames();
    int chunk_frames = T;
    if (opt.chunk_seconds > 0.0) {
        chunk_frames = std::max(
            1, static_cast<int>(opt.chunk_seconds * mixture.sample_rate / opt.stft.hop));
    }

    ComplexSpectrogram out;
    out.config = mixture.config;
    out.sample_rate = mixture.sample_rate;
    out.analysis_length = mixture.analysis_length;
    out.ch.assign(1, Eigen::MatrixXcd(mixture.freq_bins(), T));

    for (int t0 = 0; t0 < T; t0 += chunk_frames) {
        const int t1 = std::min(T, t0 + chunk_frames);
        const ComplexSpectrogram mix_chunk = detail::slice_frames(mixture, t0, t1);
        const TapStack stack = stack_taps(mix_chunk, opt.taps);
        const CovarianceStack phi_ss = mask_covariance(
            stack, detail::slice_mask(speech_mask, t0, t1), CovarianceRole::speech, opt);
        const CovarianceStack phi_nn = mask_covariance(
            stack, detail::slice_mask(noise_mask, t0, t1), CovarianceRole::noise, opt);
        const BeamformerWeights w =
            solve_multitap_mvdr(phi_ss, phi_nn, opt.ref_channel, mvdr);
        const ComplexSpectrogram enhanced = apply(w, mix_chunk);
        out.ch[0].middleCols(t0, t1 - t0) = enhanced.ch[0];
    }
    return out;
}

/// Oracle-mask enhancement of a simulated scene, back to the time domain.
inline TimeSignal enhance_scene(const SimulatedScene& scene, const EnhanceOptions& opt) {
    const ComplexSpectrogram mix = stft(scene.mixture, opt.stft);
    const ComplexSpectrogram tgt = stft(scene.target_reverberant, opt.stft);
    const ComplexSpectrogram noi = stft(scene_noise_plus_interference(scene), opt.stft);
    const OracleMasks masks = oracle_masks(tgt, noi, mix, opt);
    const ComplexSpectrogram enhanced =
        enhance_spectrogram(mix, masks.speech, masks.noise, opt);
    return istft(enhanced);
}

}  // namespace stbf
