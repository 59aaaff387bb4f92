#include "iscc/dft.hpp"

#include <cmath>

namespace iscc {

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey, sign = -1 forward / +1 inverse.
void fft_pow2(std::vector<cplx>& a, int sign) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * kPi / static_cast<double>(len);
        cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<cplx> transform(std::span<const cplx> in, int sign) {
    const size_t n = in.size();
    std::vector<cplx> out(in.begin(), in.end());
    if (n <= 1) return out;
    if (is_pow2(n)) {
        fft_pow2(out, sign);
    } else {
        std::vector<cplx> acc(n, cplx{});
        for (size_t k = 0; k < n; ++k) {
            for (size_t s = 0; s < n; ++s) {
                double ang = sign * 2.0 * kPi * static_cast<double>(k) * static_cast<double>(s) /
                             static_cast<double>(n);
                acc[k] += in[s] * cplx(std::cos(ang), std::sin(ang));
            }
        }
        out = std::move(acc);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : out) v *= scale;
    return out;
}

}  // namespace

std::vector<cplx> dft(std::span<const cplx> x) { return transform(x, -1); }

std::vector<cplx> idft(std::span<const cplx> X) { return transform(X, +1); }

std::vector<cplx> circular_convolve(std::span<const cplx> a, std::span<const cplx> b) {
    const size_t n = a.size();
    if (b.size() != n) throw std::invalid_argument("circular_convolve: length mismatch");
    std::vector<cplx> out(n, cplx{});
    for (size_t s = 0; s < n; ++s) {
        cplx acc{};
        for (size_t p = 0; p < n; ++p) {
            acc += a[(s + n - p) % n] * b[p];
        }
        out[s] = acc;
    }
    return out;
}

}  // namespace iscc
