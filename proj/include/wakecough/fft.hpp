#ifndef WAKECOUGH_FFT_HPP
#define WAKECOUGH_FFT_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wakecough {

inline bool is_power_of_two(size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Real FFT: returns bins 0 .. n/2 of the DFT of x (zero-padded to n).
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x, size_t n) {
    std::vector<std::complex<double>> a(n);
    const size_t m = std::min(x.size(), n);
    for (size_t i = 0; i < m; ++i) a[i] = x[i];
    fft_inplace(a);
    a.resize(n / 2 + 1);
    return a;
}

} // namespace wakecough

#endif
