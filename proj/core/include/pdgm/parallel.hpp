#pragma once

#include <cstddef>
#include <functional>

namespace pdgm {

// Runs task(i) for i in [0, n) on up to `threads` workers. Tasks write only
// to their own slots, so the outcome does not depend on the thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& task);

}  // namespace pdgm
