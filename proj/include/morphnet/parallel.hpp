#pragma once

namespace morphnet {

/// Applies MORPHNET_THREADS (a positive integer) as the OpenMP thread cap.
/// Returns the thread count in effect afterwards.
int configure_threads_from_env();

}  // namespace morphnet
