#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "sdfsnn/fft.hpp"
#include "sdfsnn/kernels.hpp"
#include "sdfsnn/rng.hpp"

using namespace sdfsnn;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, RngHandle& rng) {
    return Eigen::MatrixXd::NullaryExpr(rows, cols, [&]() { return 2.0 * rng.normal(); });
}

// Naive DFT oracle for the transform contract.
Eigen::VectorXcd naive_dft(const Eigen::VectorXcd& in, bool inverse) {
    const int n = int(in.size());
    Eigen::VectorXcd out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * M_PI * k * j / n;
            acc += in[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / double(n) : acc;
    }
    return out;
}

} // namespace

TEST_CASE("parallel kernels match the serial reference bitwise") {
    RngHandle rng(51);
    const auto z = random_matrix(67, 129, rng);

    Eigen::MatrixXd a, b;
    kernels::serial::tanh_table(z, a);
    kernels::tanh_table(z, b);
    CHECK(a == b);

    Eigen::MatrixXd s1a, s1b, s2a, s2b;
    kernels::serial::sigma_prime_table(a, s1a);
    kernels::sigma_prime_table(a, s1b);
    CHECK(s1a == s1b);
    kernels::serial::sigma_second_table(a, s2a);
    kernels::sigma_second_table(a, s2b);
    CHECK(s2a == s2b);

    Eigen::VectorXd scale = Eigen::VectorXd::NullaryExpr(67, [&]() { return rng.normal(); });
    Eigen::MatrixXd ra, rb;
    kernels::serial::row_scaled_table(scale, a, ra);
    kernels::row_scaled_table(scale, a, rb);
    CHECK(ra == rb);

    Eigen::VectorXd cr = Eigen::VectorXd::NullaryExpr(67, [&]() { return rng.normal(); });
    Eigen::VectorXd ci = Eigen::VectorXd::NullaryExpr(67, [&]() { return rng.normal(); });
    Eigen::VectorXcd actx_a, actx_b;
    kernels::serial::scaled_action(cr, ci, scale, a, actx_a);
    kernels::scaled_action(cr, ci, scale, a, actx_b);
    CHECK(actx_a == actx_b);

    Eigen::VectorXcd psi(1000);
    Eigen::VectorXd pot(1000);
    for (int i = 0; i < 1000; ++i) {
        psi[i] = std::complex<double>(rng.normal(), rng.normal());
        pot[i] = rng.uniform01();
    }
    Eigen::VectorXcd pa = psi, pb = psi;
    kernels::serial::phase_multiply(pa, pot, 2.5, 0.01);
    kernels::phase_multiply(pb, pot, 2.5, 0.01);
    CHECK(pa == pb);
}

TEST_CASE("phase multiply preserves the modulus pointwise") {
    RngHandle rng(52);
    Eigen::VectorXcd psi(256);
    Eigen::VectorXd pot(256);
    for (int i = 0; i < 256; ++i) {
        psi[i] = std::complex<double>(rng.normal(), rng.normal());
        pot[i] = rng.uniform01() * 5.0;
    }
    Eigen::VectorXcd out = psi;
    kernels::phase_multiply(out, pot, 10.0, 0.37);
    for (int i = 0; i < 256; ++i)
        CHECK(std::abs(out[i]) == doctest::Approx(std::abs(psi[i])).epsilon(1e-14));
}

TEST_CASE("ordered_sum matches sequential accumulation") {
    RngHandle rng(53);
    Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(1000, [&]() { return rng.normal(); });
    double acc = 0.0;
    for (int i = 0; i < 1000; ++i) acc += v[i];
    CHECK(kernels::ordered_sum(v) == acc);
}

TEST_CASE("fft matches the naive DFT and inverts exactly") {
    RngHandle rng(54);
    for (int n : {8, 64}) {
        Eigen::VectorXcd f(n);
        for (int i = 0; i < n; ++i) f[i] = std::complex<double>(rng.normal(), rng.normal());
        Eigen::VectorXcd hat = f;
        fft_all_axes(hat, n, 1, false);
        const Eigen::VectorXcd oracle = naive_dft(f, false);
        CHECK((hat - oracle).cwiseAbs().maxCoeff() < 1e-11 * std::sqrt(double(n)));

        Eigen::VectorXcd back = hat;
        fft_all_axes(back, n, 1, true);
        CHECK((back - f).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("multi-dimensional fft equals per-axis naive DFT") {
    RngHandle rng(55);
    const int n = 8;
    Eigen::VectorXcd f(n * n);
    for (int i = 0; i < n * n; ++i) f[i] = std::complex<double>(rng.normal(), rng.normal());

    // oracle: DFT along axis 0 rows then axis 1 columns
    Eigen::VectorXcd oracle = f;
    for (int row = 0; row < n; ++row) {
        Eigen::VectorXcd line(n);
        for (int i = 0; i < n; ++i) line[i] = oracle[row * n + i];
        line = naive_dft(line, false);
        for (int i = 0; i < n; ++i) oracle[row * n + i] = line[i];
    }
    for (int col = 0; col < n; ++col) {
        Eigen::VectorXcd line(n);
        for (int i = 0; i < n; ++i) line[i] = oracle[i * n + col];
        line = naive_dft(line, false);
        for (int i = 0; i < n; ++i) oracle[i * n + col] = line[i];
    }

    Eigen::VectorXcd hat = f;
    fft_all_axes(hat, n, 2, false);
    CHECK((hat - oracle).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::VectorXcd serial = f;
    serial_fft::fft_all_axes(serial, n, 2, false);
    CHECK(serial == hat);
}

TEST_CASE("parseval identity on a 3d grid") {
    RngHandle rng(56);
    const int n = 16;
    Eigen::VectorXcd f(n * n * n);
    for (Eigen::Index i = 0; i < f.size(); ++i)
        f[i] = std::complex<double>(rng.normal(), rng.normal());
    Eigen::VectorXcd hat = f;
    fft_all_axes(hat, n, 3, false);
    const double lhs = f.squaredNorm();
    const double rhs = hat.squaredNorm() / double(n * n * n);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
