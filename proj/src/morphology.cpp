#include "turnkit/raster.hpp"

#include "turnkit/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

namespace turnkit {
namespace {

void check_pixel(const Raster2D& a, const Raster2D& b) {
  if (std::abs(a.pixel() - b.pixel()) > 1e-12 * a.pixel()) {
    throw FrameMismatch("dilate2d: operands have different pixel sizes");
  }
}

// FFTW's planner is not re-entrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {}
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

// Smallest 2^a 3^b 5^c 7^d >= n.
int fft_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return m;
  }
}

Raster2D empty_like(const Raster2D& a) { return Raster2D::empty(a.pixel(), a.origin()); }

}  // namespace

Raster2D dilate2d_direct(const Raster2D& a_in, const Raster2D& b_in) {
  check_pixel(a_in, b_in);
  Raster2D a = a_in.trimmed();
  Raster2D b = b_in.trimmed();
  if (a.is_empty() || b.is_empty()) return empty_like(a_in);
  // The sum is symmetric in index space: sweep the sparser operand.
  if (b.count() > a.count()) std::swap(a, b);
  const std::array<int, 2> dims{a.dims()[0] + b.dims()[0] - 1, a.dims()[1] + b.dims()[1] - 1};
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1], 0);
  const auto abits = a.bits();
  const int aw = a.dims()[0];
  for (const Pixel q : b.pixels()) {
    const int su = q.u - b.lo().u;
    const int sv = q.v - b.lo().v;
    for (int dv = 0; dv < a.dims()[1]; ++dv) {
      const std::uint8_t* src = abits.data() + static_cast<std::size_t>(dv) * aw;
      std::uint8_t* dst = bits.data() + static_cast<std::size_t>(dv + sv) * dims[0] + su;
      for (int du = 0; du < aw; ++du) dst[du] |= src[du];
    }
  }
  return Raster2D(a_in.pixel(), a_in.origin(), a.lo() + b.lo(), dims, std::move(bits));
}

Raster2D dilate2d_fft(const Raster2D& a_in, const Raster2D& b_in) {
  check_pixel(a_in, b_in);
  const Raster2D a = a_in.trimmed();
  const Raster2D b = b_in.trimmed();
  if (a.is_empty() || b.is_empty()) return empty_like(a_in);

  const std::array<int, 2> dims{a.dims()[0] + b.dims()[0] - 1, a.dims()[1] + b.dims()[1] - 1};
  // Padding to at least the linear-convolution size keeps the cyclic
  // convolution free of wrap-around.
  const int cols = fft_size(dims[0]);
  const int rows = fft_size(dims[1]);
  const int half = cols / 2 + 1;
  const std::size_t nreal = static_cast<std::size_t>(rows) * cols;
  const std::size_t ncplx = static_cast<std::size_t>(rows) * half;

  auto ra = fftw_array<double>(nreal);
  auto rb = fftw_array<double>(nreal);
  auto ca = fftw_array<fftw_complex>(ncplx);
  auto cb = fftw_array<fftw_complex>(ncplx);
  std::fill_n(ra.get(), nreal, 0.0);
  std::fill_n(rb.get(), nreal, 0.0);
  auto load = [&](const Raster2D& r, double* dst) {
    const auto bits = r.bits();
    for (int dv = 0; dv < r.dims()[1]; ++dv)
      for (int du = 0; du < r.dims()[0]; ++du)
        dst[static_cast<std::size_t>(dv) * cols + du] =
            bits[static_cast<std::size_t>(dv) * r.dims()[0] + du];
  };
  load(a, ra.get());
  load(b, rb.get());

  std::unique_ptr<Plan> fwd_a, fwd_b, inv;
  {
    std::lock_guard lock(planner_mutex());
    fwd_a = std::make_unique<Plan>(fftw_plan_dft_r2c_2d(rows, cols, ra.get(), ca.get(), FFTW_ESTIMATE));
    fwd_b = std::make_unique<Plan>(fftw_plan_dft_r2c_2d(rows, cols, rb.get(), cb.get(), FFTW_ESTIMATE));
    inv = std::make_unique<Plan>(fftw_plan_dft_c2r_2d(rows, cols, ca.get(), ra.get(), FFTW_ESTIMATE));
  }
  fwd_a->execute();
  fwd_b->execute();
  for (std::size_t i = 0; i < ncplx; ++i) {
    const double re = ca[i][0] * cb[i][0] - ca[i][1] * cb[i][1];
    const double im = ca[i][0] * cb[i][1] + ca[i][1] * cb[i][0];
    ca[i][0] = re;
    ca[i][1] = im;
  }
  inv->execute();

  const double scale = 1.0 / static_cast<double>(nreal);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(dims[0]) * dims[1], 0);
  for (int dv = 0; dv < dims[1]; ++dv)
    for (int du = 0; du < dims[0]; ++du) {
      // Overlap counts are integers: round, then threshold at one.
      const double count = std::nearbyint(ra[static_cast<std::size_t>(dv) * cols + du] * scale);
      bits[static_cast<std::size_t>(dv) * dims[0] + du] = count >= 1.0;
    }
  return Raster2D(a.pixel(), a.origin(), a.lo() + b.lo(), dims, std::move(bits));
}

Raster2D dilate2d(const Raster2D& a, const Raster2D& b, DilationMethod method) {
  switch (method) {
    case DilationMethod::Direct: return dilate2d_direct(a, b);
    case DilationMethod::Fft: return dilate2d_fft(a, b);
    case DilationMethod::Auto: break;
  }
  // Direct costs one pass over the denser window per pixel of the sparser
  // set; the FFT costs three transforms of the padded product window.
  const double direct = static_cast<double>(std::min(a.count(), b.count())) *
                        std::max(a.dims()[0] * a.dims()[1], b.dims()[0] * b.dims()[1]) * 0.1;
  const double n = static_cast<double>(a.dims()[0] + b.dims()[0]) * (a.dims()[1] + b.dims()[1]);
  const double fft = 15.0 * n * std::log2(std::max(n, 2.0));
  if (direct <= fft) return dilate2d_direct(a, b);
  return dilate2d_fft(a, b);
}

}  // namespace turnkit
