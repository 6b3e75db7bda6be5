#pragma once

#include <cstddef>

namespace strongsig {

// Thread count used by the OpenMP kernels. Defaults to the OpenMP runtime
// setting; STRONGSIG_THREADS overrides it. Returns 1 when built without
// OpenMP.
int max_threads();

// All parallel kernels in this library are written so that results are
// bit-identical to their serial reference implementations: per-item outputs
// go to preassigned slots and reductions are chunked with fixed boundaries
// and summed in index order.
inline constexpr std::size_t kReductionChunk = 1 << 16;

}  // namespace strongsig
