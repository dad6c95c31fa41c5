#pragma once

namespace zpt {

// Process-wide setup for entry points. Keeps freed blocks on the heap
// (training allocates and frees the same large matrices every step) and
// applies ZPT_NUM_THREADS to Eigen when set.
void configure_runtime();

}  // namespace zpt
