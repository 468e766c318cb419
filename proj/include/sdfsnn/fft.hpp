#ifndef SDFSNN_FFT_HPP
#define SDFSNN_FFT_HPP

#include <Eigen/Dense>
#include <complex>

namespace sdfsnn {

// In-place complex FFT along every axis of a flat d-dimensional field stored
// with axis 0 fastest (index = i0 + n*(i1 + n*i2)). All axes share the same
// length n (power of two by the grid contract). Lines are transformed
// independently, OpenMP-parallel with disjoint writes.
void fft_all_axes(Eigen::VectorXcd& field, int n_per_axis, int ndim, bool inverse);

// Serial reference for the kernel tests.
namespace serial_fft {
void fft_all_axes(Eigen::VectorXcd& field, int n_per_axis, int ndim, bool inverse);
}

} // namespace sdfsnn

#endif
