#include "sdfsnn/fft.hpp"

#include <unsupported/Eigen/FFT>
#include <vector>

#include "sdfsnn/errors.hpp"

namespace sdfsnn {

namespace {

long ipow(long base, int e) {
    long v = 1;
    while (e-- > 0) v *= base;
    return v;
}

// Transform all lines along one axis. The per-thread Eigen::FFT object caches
// its plan per length, so repeated calls reuse it.
template <bool Parallel>
void transform_axis(Eigen::VectorXcd& field, int n, int axis, bool inverse) {
    const long total = field.size();
    const long stride = ipow(n, axis);
    const long n_lines = total / n;

#pragma omp parallel if (Parallel)
    {
        static thread_local Eigen::FFT<double> fft;
        std::vector<std::complex<double>> line(n), out(n);
#pragma omp for schedule(static)
        for (long l = 0; l < n_lines; ++l) {
            // Decompose the line id into (inner offset, outer block).
            const long inner = l % stride;
            const long outer = l / stride;
            const long base = inner + outer * stride * n;
            for (int i = 0; i < n; ++i) line[i] = field[base + i * stride];
            if (inverse)
                fft.inv(out, line);
            else
                fft.fwd(out, line);
            for (int i = 0; i < n; ++i) field[base + i * stride] = out[i];
        }
    }
}

} // namespace

void fft_all_axes(Eigen::VectorXcd& field, int n_per_axis, int ndim, bool inverse) {
    if (field.size() != ipow(n_per_axis, ndim))
        throw ConfigError("fft_all_axes: field size does not match grid");
    for (int axis = 0; axis < ndim; ++axis)
        transform_axis<true>(field, n_per_axis, axis, inverse);
}

namespace serial_fft {

void fft_all_axes(Eigen::VectorXcd& field, int n_per_axis, int ndim, bool inverse) {
    if (field.size() != ipow(n_per_axis, ndim))
        throw ConfigError("fft_all_axes: field size does not match grid");
    for (int axis = 0; axis < ndim; ++axis)
        transform_axis<false>(field, n_per_axis, axis, inverse);
}

} // namespace serial_fft

} // namespace sdfsnn
