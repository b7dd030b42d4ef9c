#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>

#include "ncflab/error.hpp"

namespace ncflab::fft {

using cplx = std::complex<double>;

/// Process-wide cache of FFTW plans. Plans are created with FFTW_ESTIMATE so
/// planning never touches the data arrays and results are reproducible.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  /// howmany contiguous G1 x G2 planes, complex to complex, unnormalized.
  fftw_plan c2c(int g1, int g2, int howmany, int sign) {
    return get(Key{0, g1, g2, howmany, sign}, [&] {
      int dims[2] = {g1, g2};
      Buffer buf(sizeof(fftw_complex) * static_cast<size_t>(g1) * g2 * howmany);
      auto* d = static_cast<fftw_complex*>(buf.ptr);
      return fftw_plan_many_dft(2, dims, howmany, d, nullptr, 1, g1 * g2, d, nullptr, 1, g1 * g2, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    });
  }

  fftw_plan r2c(int g1, int g2) {
    return get(Key{1, g1, g2, 1, FFTW_FORWARD}, [&] {
      Buffer in(sizeof(double) * static_cast<size_t>(g1) * g2);
      Buffer out(sizeof(fftw_complex) * static_cast<size_t>(g1) * (g2 / 2 + 1));
      return fftw_plan_dft_r2c_2d(g1, g2, static_cast<double*>(in.ptr), static_cast<fftw_complex*>(out.ptr),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
    });
  }

  fftw_plan c2r(int g1, int g2) {
    return get(Key{2, g1, g2, 1, FFTW_BACKWARD}, [&] {
      Buffer in(sizeof(fftw_complex) * static_cast<size_t>(g1) * (g2 / 2 + 1));
      Buffer out(sizeof(double) * static_cast<size_t>(g1) * g2);
      return fftw_plan_dft_c2r_2d(g1, g2, static_cast<fftw_complex*>(in.ptr), static_cast<double*>(out.ptr),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
    });
  }

 private:
  using Key = std::tuple<int, int, int, int, int>;
  PlanCache() = default;

  // Scratch arrays for planning only.
  struct Buffer {
    explicit Buffer(size_t bytes) : ptr(fftw_malloc(bytes)) {
      if (!ptr) throw numeric_error("FFTW allocation failed");
    }
    ~Buffer() { fftw_free(ptr); }
    Buffer(const Buffer&) = delete;
    Buffer& operator=(const Buffer&) = delete;
    void* ptr;
  };

  template <class Make>
  fftw_plan get(const Key& key, Make&& make) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_plan plan = make();
    if (!plan) throw numeric_error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

/// In-place unnormalized 2D DFT of `howmany` consecutive g1 x g2 planes.
/// sign = -1 is the forward transform sum_x f(x) e^{-2 pi i m.x / G}.
inline void dft2(cplx* data, int g1, int g2, int howmany, int sign) {
  fftw_plan p = PlanCache::instance().c2c(g1, g2, howmany, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
}

/// Real-to-half-complex forward transform; out has g1 * (g2/2 + 1) entries.
inline void rdft2(const double* in, cplx* out, int g1, int g2) {
  fftw_plan p = PlanCache::instance().r2c(g1, g2);
  fftw_execute_dft_r2c(p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

/// Inverse of rdft2 (unnormalized); destroys `in`.
inline void irdft2(cplx* in, double* out, int g1, int g2) {
  fftw_plan p = PlanCache::instance().c2r(g1, g2);
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in), out);
}

/// Signed frequency of array index j on a length-G axis: {-G/2, ..., G/2-1}.
inline int signed_freq(int j, int g) { return j < g / 2 ? j : j - g; }

inline int wrap_index(long m, int g) {
  long r = m % g;
  return static_cast<int>(r < 0 ? r + g : r);
}

inline bool is_pow2(long g) { return g > 0 && (g & (g - 1)) == 0; }

}  // namespace ncflab::fft
