#pragma once

namespace br {

/// OpenMP thread count: BOREL_RICCATI_THREADS if set and positive, else
/// the runtime default.
int thread_cap();

} // namespace br
