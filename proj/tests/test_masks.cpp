#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "stbf/masks.hpp"

using namespace stbf;

namespace {

ComplexSpectrogram make_spec(int F, int T, int M, uint64_t seed) {
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

}  // namespace

TEST_CASE("relu mask of a signal against itself is all ones") {
    const auto y = make_spec(9, 6, 2, 1);
    const auto m = relu_mask(y, y);
    REQUIRE(m.kind == MaskKind::relu);
    REQUIRE((m.values.real().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("relu mask values above one are kept unclipped") {
    auto y = make_spec(5, 3, 1, 2);
    auto s = y;
    s.ch[0](2, 1) = cd(2.0, 0.0);
    y.ch[0](2, 1) = cd(1.0, 0.0);
    const auto m = relu_mask(s, y);
    REQUIRE(m.values(2, 1).real() == Catch::Approx(2.0));
}

TEST_CASE("relu mask is zero in silent mixture bins") {
    auto y = make_spec(5, 3, 1, 3);
    auto s = y;
    y.ch[0](1, 1) = cd(0.0, 0.0);
    s.ch[0](1, 1) = cd(0.0, 0.0);
    const auto m = relu_mask(s, y);
    REQUIRE(m.values(1, 1) == cd(0.0, 0.0));
}

TEST_CASE("sigmoid mask hand values") {
    auto s = make_spec(4, 2, 1, 4);
    auto n = s;
    s.ch[0].setConstant(cd(1.0, 0.0));
    n.ch[0].setConstant(cd(3.0, 0.0));
    const auto m = sigmoid_mask(s, n);
    REQUIRE(m.values(0, 0).real() == Catch::Approx(0.25));

    n.ch[0].setConstant(cd(0.0, 0.0));
    REQUIRE(sigmoid_mask(s, n).values(2, 1).real() == Catch::Approx(1.0));

    n.ch[0].setConstant(cd(0.0, 1.0));  // |S| == |N|
    REQUIRE(sigmoid_mask(s, n).values(2, 1).real() == Catch::Approx(0.5));
}

TEST_CASE("sigmoid masks of the two components sum to one") {
    const auto s = make_spec(9, 7, 1, 5);
    const auto n = make_spec(9, 7, 1, 6);
    const auto ms = sigmoid_mask(s, n);
    const auto mn = sigmoid_mask(n, s);
    REQUIRE(((ms.values + mn.values).real().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("complex mask identity and hand value") {
    const auto y = make_spec(6, 4, 1, 7);
    auto m = complex_mask(y, y);
    REQUIRE((m.values.array() - cd(1.0, 0.0)).abs().maxCoeff() < 1e-12);

    auto s = y;
    auto yy = y;
    s.ch[0](3, 2) = cd(1.0, 0.0);
    yy.ch[0](3, 2) = cd(1.0, 1.0);
    m = complex_mask(s, yy);
    REQUIRE(std::abs(m.values(3, 2) - cd(0.5, -0.5)) < 1e-12);
}

TEST_CASE("complex mask reconstructs the target exactly") {
    const auto y = make_spec(17, 12, 3, 8);
    const auto s = make_spec(17, 12, 3, 9);
    const auto m = complex_mask(s, y);
    const auto rec = apply_mask(m, y, 0);
    const double eps = 1e-8 * y.ch[0].cwiseAbs().maxCoeff();
    for (int t = 0; t < y.frames(); ++t)
        for (int f = 0; f < y.freq_bins(); ++f)
            if (std::abs(y.ch[0](f, t)) >= eps)
                REQUIRE(std::abs(rec.ch[0](f, t) - s.ch[0](f, t)) < 1e-12);
}

TEST_CASE("complement noise mask") {
    auto y = make_spec(4, 3, 1, 10);
    auto s = y;
    s.ch[0].setConstant(cd(1.0, 0.0));
    auto n = s;
    n.ch[0].setConstant(cd(3.0, 0.0));
    const auto sig = sigmoid_mask(s, n);  // 0.25 everywhere
    REQUIRE(complement_noise_mask(sig).values(1, 1).real() == Catch::Approx(0.75));

    MaskTensor cm;
    cm.kind = MaskKind::complex_mask;
    cm.values.resize(1, 2);
    cm.values(0, 0) = cd(1.0, 0.0);
    cm.values(0, 1) = cd(0.5, -0.5);
    const auto comp = complement_noise_mask(cm);
    REQUIRE(std::abs(comp.values(0, 0)) < 1e-15);
    REQUIRE(std::abs(comp.values(0, 1) - cd(0.5, 0.5)) < 1e-15);

    MaskTensor big;
    big.kind = MaskKind::sigmoid;
    big.values = Eigen::MatrixXcd::Constant(1, 1, cd(1.5, 0.0));
    REQUIRE(complement_noise_mask(big).values(0, 0).real() == 0.0);  // clamped at 0
}

TEST_CASE("masks reject dimension mismatch") {
    const auto a = make_spec(5, 4, 1, 11);
    const auto b = make_spec(5, 5, 1, 12);
    REQUIRE_THROWS(relu_mask(a, b));
    REQUIRE_THROWS(sigmoid_mask(a, b));
    REQUIRE_THROWS(complex_mask(a, b));
    REQUIRE_THROWS(relu_mask(a, a, 3));
}

TEST_CASE("mask tensor round-trip through the binary container") {
    const auto y = make_spec(9, 6, 1, 13);
    const auto s = make_spec(9, 6, 1, 14);
    for (const auto& m : {complex_mask(s, y), relu_mask(s, y)}) {
        const auto t = mask_to_tensor(m);
        const auto back = mask_from_tensor(t, m.kind);
        REQUIRE((back.values - m.values).cwiseAbs().maxCoeff() == 0.0);
    }
}
