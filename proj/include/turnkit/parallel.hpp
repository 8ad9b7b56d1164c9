#pragma once

#include <tbb/blocked_range.h>
#include <tbb/global_control.h>
#include <tbb/parallel_for.h>

#include <cstddef>
#include <memory>

namespace turnkit {

/// Runs body(i) for i in [begin, end) on the TBB pool. Bodies must only
/// write to slots owned by their index.
template <class Body>
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end, const Body& body) {
  if (end <= begin) return;
  tbb::parallel_for(tbb::blocked_range<std::ptrdiff_t>(begin, end),
                    [&](const tbb::blocked_range<std::ptrdiff_t>& r) {
                      for (std::ptrdiff_t i = r.begin(); i != r.end(); ++i) body(i);
                    });
}

/// Caps the worker count for its lifetime; 0 leaves the default.
class WorkerLimit {
 public:
  explicit WorkerLimit(std::size_t workers) {
    if (workers > 0) {
      control_ = std::make_unique<tbb::global_control>(
          tbb::global_control::max_allowed_parallelism, workers);
    }
  }

 private:
  std::unique_ptr<tbb::global_control> control_;
};

}  // namespace turnkit
