#pragma once

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace tdho::fft {

using cplx = std::complex<double>;

// 64-byte aligned storage so FFTW plans made once can run on every buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using CVec = std::vector<cplx, AlignedAllocator<cplx>>;

enum class Direction { kForward, kBackward };

// Unnormalized in-place DFT over a row-major cube with `dims` extents.
// Forward uses exp(-2 pi i jk/N).  Plans are cached per (dims, direction) and
// shared across threads; only plan creation is serialized.
void transform(std::span<cplx> data, std::span<const int> dims, Direction dir);

// Number of cached plans (for tests).
std::size_t plan_cache_size();

}  // namespace tdho::fft
